"""Parallel (PR, df) grid sweeps labeled by threshold-crossing counts."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from streamwave.boundaries import BoundaryCurve
from streamwave.integrator import IntegrationError, check_periodicity, detect_crossings, integrate
from streamwave.model import ModelParams
from streamwave.stimulus import Stimulus, df_to_d

LABELS = ("INT", "BIS", "SEG", "SAT", "AP_H", "FAILED")
CSV_COLUMNS = ("pr_hz", "df", "n_a", "n_b", "n", "label", "residual")
THREADS_ENV = "STREAMWAVE_THREADS"


@dataclass(frozen=True)
class GridSpec:
    pr: tuple[float, ...]
    df: tuple[float, ...]

    @classmethod
    def uniform(cls, l: int = 98, pr_range=(1.0, 40.0), df_range=(0.0, 1.0),
                n_df: int | None = None) -> "GridSpec":
        if l < 1 or (n_df is not None and n_df < 1):
            raise ValueError("grid needs at least one point per axis")
        n_df = l if n_df is None else n_df
        pr = np.linspace(*pr_range, l) if l > 1 else np.array([pr_range[0]])
        df = np.linspace(*df_range, n_df) if n_df > 1 else np.array([df_range[0]])
        return cls(tuple(float(x) for x in pr), tuple(float(x) for x in df))

    def restrict_pr(self, lo: float, hi: float) -> "GridSpec":
        """Keep only the PR columns inside ``[lo, hi]``, leaving their values unchanged."""
        return GridSpec(tuple(x for x in self.pr if lo <= x <= hi), self.df)


@dataclass(frozen=True)
class SimOptions:
    dt: float | None = None
    transient_periods: int = 30
    inputs: str = "smooth"
    input_slope: float | None = None
    history: tuple[float, float, float, float] = (1.0, 0.0, 1.0, 0.0)
    residual_tol: float = 1e-3
    ap_h_margin: float = 0.9
    threads: int | None = None


@dataclass(frozen=True)
class CellResult:
    pr: float
    df: float
    n_a: int
    n_b: int
    label: str
    residual: float
    mean_u: float = float("nan")
    reason: str = ""

    @property
    def n(self) -> int:
        return self.n_a + self.n_b


@dataclass
class SweepGrid:
    spec: GridSpec
    cells: list[CellResult]  # row-major with PR fastest
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.spec.df), len(self.spec.pr)

    def field(self, name: str) -> np.ndarray:
        vals = [getattr(c, name) for c in self.cells]
        return np.array(vals, dtype=object if name == "label" else None).reshape(self.shape)

    def cell(self, i_df: int, i_pr: int) -> CellResult:
        return self.cells[i_df * len(self.spec.pr) + i_pr]


def percept_from_crossings(n_a: int, n_b: int, mean_u: float, theta: float,
                           min_u: Sequence[float] | None = None, margin: float = 0.9) -> str:
    """INT/BIS/SEG by total upward crossings, with SAT and AP_H from activity levels."""
    if n_a < 0 or n_b < 0:
        raise ValueError("counts must be nonnegative")
    n = n_a + n_b
    if n == 4:
        return "INT"
    if n == 3:
        return "BIS"
    if n == 2:
        if min_u is not None and min(min_u) > margin * theta:
            return "AP_H"
        return "SEG"
    if n == 0 and mean_u > theta:
        return "SAT"
    return "FAILED"


def resolve_threads(requested: int | None = None) -> int:
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "0")
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if requested < 0:
        raise ValueError("thread count must be >= 0")
    return requested or (os.cpu_count() or 1)


def simulate_cell(p: ModelParams, stim: Stimulus, opts: SimOptions) -> CellResult:
    period = stim.period
    d = df_to_d(stim.c, stim.df, stim.m)
    kw = dict(inputs=opts.inputs, input_slope=opts.input_slope)
    T = opts.transient_periods
    try:
        traj = integrate(p, stim, d, opts.history, t_end=(T + 1) * period, dt=opts.dt,
                         record_from=(T - 1) * period, **kw)
        residual = check_periodicity(traj, period)
        if residual > opts.residual_tol:
            t0 = traj.final_history.t_now
            traj = integrate(p, stim, d, traj.final_history, t_end=t0 + T * period,
                             record_from=t0 + (T - 2) * period, **kw)
            residual = check_periodicity(traj, period)
    except IntegrationError as exc:
        return CellResult(stim.pr, stim.df, 0, 0, "FAILED", float("nan"), reason=str(exc))
    t_end = traj.t[-1]
    n_a, n_b, _ = detect_crossings(traj, p.theta, (t_end - period, t_end))
    last = traj.t >= t_end - period
    u = traj.y[last, :2]
    mean_u = float(u.mean())
    label = percept_from_crossings(n_a, n_b, mean_u, p.theta, u.min(axis=0), opts.ap_h_margin)
    reason = "" if label != "FAILED" else f"n={n_a + n_b}, mean_u={mean_u:.4g}"
    return CellResult(stim.pr, stim.df, n_a, n_b, label, residual, mean_u, reason)


def run_sweep(p: ModelParams, stim_base: Stimulus, grid: GridSpec,
              opts: SimOptions = SimOptions()) -> SweepGrid:
    """Simulate every (PR, df) cell; failures are recorded per cell."""
    if not grid.pr or not grid.df:
        raise ValueError("empty grid")
    jobs = [Stimulus.from_pr(stim_base.TD, pr, c=stim_base.c, df=df, m=stim_base.m)
            for df in grid.df for pr in grid.pr]
    threads = resolve_threads(opts.threads)
    start = time.perf_counter()
    # compile once before fanning out
    simulate_cell(p, jobs[0], opts)
    if threads == 1:
        cells = [simulate_cell(p, s, opts) for s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(lambda s: simulate_cell(p, s, opts), jobs, chunksize=1))
    config = {"params": _params_dict(p), "stimulus": {"TD": stim_base.TD, "c": stim_base.c, "m": stim_base.m},
              "grid": {"pr": list(grid.pr), "df": list(grid.df)}, "sim": _opts_dict(opts)}
    return SweepGrid(grid, cells, config, time.perf_counter() - start)


def _params_dict(p: ModelParams) -> dict:
    out = {k: v for k, v in asdict(p).items() if k != "gain"}
    out["gain_slope"] = p.gain.slope
    return out


def _opts_dict(opts: SimOptions) -> dict:
    out = asdict(opts)
    out["history"] = list(opts.history)
    out.pop("threads")
    return out


def emit_csv(grid: SweepGrid, with_config: bool = True) -> str:
    buf = io.StringIO()
    if with_config:
        buf.write("# config: " + json.dumps(grid.config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in grid.cells:
        w.writerow([repr(c.pr), repr(c.df), c.n_a, c.n_b, c.n, c.label, repr(c.residual)])
    return buf.getvalue()


def parse_csv(text: str) -> list[CellResult]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return [CellResult(float(r["pr_hz"]), float(r["df"]), int(r["n_a"]), int(r["n_b"]),
                       r["label"], float(r["residual"])) for r in rows]


def manifest(grid: SweepGrid) -> dict:
    return {
        "config": grid.config,
        "cells": len(grid.cells),
        "wall_time_s": grid.wall_time,
        "labels": {lab: sum(c.label == lab for c in grid.cells) for lab in LABELS},
        "determinism": "cells are independent and seed-free; identical inputs give byte-identical CSV",
    }


_FILL = {0: "#000000", 1: "#202020", 2: "#555555", 3: "#999999", 4: "#dddddd"}
_CURVE_COLOR = {"coherence": "#1f4fd1", "fission": "#d1241f"}


def emit_heatmap(grid: SweepGrid, overlays: Sequence[BoundaryCurve] = (), cell_px: int = 6) -> str:
    """Greyscale SVG of crossing counts, darkest at n=0; failed cells are hatched."""
    if not grid.cells:
        raise ValueError("empty grid")
    n_df, n_pr = grid.shape
    pr = np.array(grid.spec.pr)
    df = np.array(grid.spec.df)
    ml, mt, mb, mr = 50, 10, 40, 10
    w, h = n_pr * cell_px, n_df * cell_px
    pr_step = (pr[-1] - pr[0]) / (n_pr - 1) if n_pr > 1 else 1.0
    df_step = (df[-1] - df[0]) / (n_df - 1) if n_df > 1 else 1.0

    def x_of(v):
        return ml + ((v - pr[0]) / pr_step + 0.5) * cell_px

    def y_of(v):
        return mt + h - ((v - df[0]) / df_step + 0.5) * cell_px

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w + ml + mr}" height="{h + mt + mb}">',
        '<defs><pattern id="hatch" width="4" height="4" patternUnits="userSpaceOnUse">'
        '<rect width="4" height="4" fill="#ffffff"/><path d="M0,4 L4,0" stroke="#c00000" stroke-width="1"/>'
        "</pattern></defs>",
    ]
    for i in range(n_df):
        for j in range(n_pr):
            c = grid.cell(i, j)
            fill = "url(#hatch)" if c.label == "FAILED" else _FILL.get(min(c.n, 4), "#ff00ff")
            x = ml + j * cell_px
            y = mt + h - (i + 1) * cell_px
            out.append(f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" fill="{fill}">'
                       f"<title>PR={c.pr:.3f} df={c.df:.3f} n={c.n} {c.label}</title></rect>")
    for curve in overlays:
        keep = ~curve.clamped
        pts = " ".join(f"{x_of(a):.2f},{y_of(b):.2f}" for a, b in zip(curve.pr[keep], curve.df[keep]))
        if pts:
            out.append(f'<polyline class="{curve.kind}" points="{pts}" fill="none" '
                       f'stroke="{_CURVE_COLOR.get(curve.kind, "#000")}" stroke-width="1.5"/>')
    out.append(f'<text x="{ml + w / 2}" y="{mt + h + 30}" text-anchor="middle" font-size="12">PR (Hz)</text>')
    out.append(f'<text x="14" y="{mt + h / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {mt + h / 2})">df</text>')
    for v in (pr[0], pr[-1]):
        out.append(f'<text x="{x_of(v):.1f}" y="{mt + h + 14}" text-anchor="middle" font-size="10">{v:g}</text>')
    for v in (df[0], df[-1]):
        out.append(f'<text x="{ml - 4}" y="{y_of(v) + 3:.1f}" text-anchor="end" font-size="10">{v:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
