"""Command-line entry point: JSON config plus flat flag overrides."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from streamwave import boundaries, classifier, fast_subsystem, sweep
from streamwave.integrator import ConfigError as SolverConfigError
from streamwave.integrator import IntegrationError, check_periodicity, detect_crossings, integrate
from streamwave.model import Gain, ModelParams, ParamError
from streamwave.stimulus import Stimulus, StimulusError, df_to_d

COMMANDS = ("simulate", "classify", "sweep", "boundaries", "basin", "enumerate")
EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


class UsageError(ValueError):
    """Bad configuration; maps to exit code 2."""


@dataclass(frozen=True)
class Key:
    default: Any
    kind: Callable | None
    help: str
    nullable: bool = False


def _list4(v):
    if not (isinstance(v, (list, tuple)) and len(v) == 4):
        raise ValueError("expected four numbers")
    return tuple(float(x) for x in v)


def _flag_bool(v):
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes"):
        return True
    if str(v).lower() in ("0", "false", "no"):
        return False
    raise ValueError("expected a boolean")


KEYS: dict[str, Key] = {
    "a": Key(2.0, float, "self-excitation strength (reference sweep value)"),
    "b": Key(2.8, float, "delayed cross-inhibition strength (reference sweep value)"),
    "theta": Key(0.5, float, "gain threshold (reference sweep value)"),
    "tau": Key(0.025, float, "activity time constant in s (reference sweep value)"),
    "tau_i": Key(0.25, float, "gating-variable decay time in s (reference sweep value)"),
    "D": Key(0.015, float, "inhibition delay in s (reference sweep value)"),
    "slope": Key(30.0, float, "sigmoid gain slope; fixed at 30 in the reference sweeps"),
    "heaviside": Key(False, _flag_bool, "use the step gain (simulated as a slope-1e3 sigmoid)"),
    "TD": Key(0.022, float, "tone duration in s (reference sweep value)"),
    "pr": Key(None, float, "presentation rate in Hz; alternative to tr", nullable=True),
    "tr": Key(None, float, "tone repetition time in s; default 0.1 when pr is unset", nullable=True),
    "c": Key(5.5, float, "input amplitude to the preferred unit (reference sweep value)"),
    "df": Key(0.0, float, "normalized frequency difference in [0, 1]"),
    "m": Key(6, int, "spread exponent of the cross input (reference sweep value)"),
    "dt": Key(None, float, "RK4 step in s; default min(tau, D, TD)/20 aligned to TR", nullable=True),
    "t_end": Key(None, float, "simulate: end time in s; default 62 TR", nullable=True),
    "record_from": Key(0.0, float, "simulate: first recorded time in s"),
    "transient_periods": Key(30, int, "sweep: transient length in 2TR periods (extended once if unconverged)"),
    "inputs": Key("smooth", str, "input waveform: smooth or square"),
    "input_slope": Key(None, float, "steepness of smooth tone edges; default tied to the gain slope", nullable=True),
    "history": Key((1.0, 0.0, 1.0, 0.0), _list4, "constant initial history [u_A, u_B, s_A, s_B]"),
    "residual_tol": Key(1e-3, float, "sweep: periodicity residual that triggers a longer transient"),
    "ap_h_margin": Key(0.9, float, "sweep: two-crossing cells with both minima above margin*theta are AP_H"),
    "threads": Key(None, int, "sweep: worker threads (0 = all cores); default from STREAMWAVE_THREADS", nullable=True),
    "l": Key(98, int, "sweep/boundaries: PR samples (and df samples unless n_df is set)"),
    "n_df": Key(None, int, "sweep: df samples; default l", nullable=True),
    "pr_min": Key(1.0, float, "sweep/boundaries: lowest PR in Hz"),
    "pr_max": Key(40.0, float, "sweep/boundaries: highest PR in Hz"),
    "df_min": Key(0.0, float, "sweep: lowest df"),
    "df_max": Key(1.0, float, "sweep: highest df"),
    "fission_variant": Key("tone", str, "fission decay lag: tone (2TR-TD) or delay (2TR-D)"),
    "regime": Key("auto", str, "classify: auto, short or long"),
    "boundary_band": Key(0.0, float, "classify: report quantities within this distance of theta"),
    "s1": Key(0.7, float, "basin: u_A threshold of the switching line"),
    "s2": Key(0.4, float, "basin: u_B threshold of the switching line"),
    "resolution": Key(101, int, "basin: raster points per axis"),
    "basin_band": Key(0.0, float, "basin: half-width of the band labeled boundary"),
    "kind": Key("all", str, "enumerate: SM, SC, LM, SD or all"),
    "out": Key(".", str, "output directory"),
}


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    stim: Stimulus
    sim: sweep.SimOptions
    grid: sweep.GridSpec
    values: dict = field(default_factory=dict)

    @property
    def d(self) -> float:
        return df_to_d(self.stim.c, self.stim.df, self.stim.m)

    def effective(self) -> dict:
        out = dict(self.values)
        out["command"] = self.command
        out["history"] = list(self.values["history"])
        out["tr"] = self.stim.TR
        out["pr"] = self.stim.pr
        return out


def _coerce(name: str, raw: Any) -> Any:
    key = KEYS[name]
    if raw is None:
        if key.nullable:
            return None
        raise UsageError(f"{name}: may not be null")
    if isinstance(raw, bool) and key.kind in (float, int):
        raise UsageError(f"{name}: expected a number")
    try:
        val = key.kind(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{name}: {exc}") from None
    if key.kind is int and isinstance(raw, float) and raw != int(raw):
        raise UsageError(f"{name}: expected an integer")
    if isinstance(val, float) and not math.isfinite(val):
        raise UsageError(f"{name}: must be finite")
    return val


def parse_config(text: str | None, overrides: dict | None = None, command: str | None = None) -> RunConfig:
    """Merge defaults, the JSON document and flag overrides (flags win), then validate."""
    doc: dict = {}
    if text:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    file_cmd = doc.pop("command", None)
    cmd = command or file_cmd
    if cmd not in COMMANDS:
        raise UsageError(f"command: expected one of {', '.join(COMMANDS)}, got {cmd!r}")
    unknown = sorted(set(doc) - set(KEYS)) + sorted(set(overrides) - set(KEYS))
    if unknown:
        raise UsageError(f"unknown key(s): {', '.join(unknown)}")
    if "pr" in doc and "tr" in doc and doc["pr"] is not None and doc["tr"] is not None:
        raise UsageError("pr/tr: give only one")
    # a rate flag replaces whichever rate the file gave
    if "pr" in overrides or "tr" in overrides:
        doc.pop("pr", None)
        doc.pop("tr", None)
    if "pr" in overrides and "tr" in overrides:
        raise UsageError("pr/tr: give only one")

    vals = {name: key.default for name, key in KEYS.items()}
    for src in (doc, overrides):
        for name, raw in src.items():
            vals[name] = _coerce(name, raw)
    _check_ranges(vals)

    try:
        gain = Gain(None) if vals["heaviside"] else Gain(vals["slope"])
        p = ModelParams(a=vals["a"], b=vals["b"], theta=vals["theta"], tau=vals["tau"],
                        tau_i=vals["tau_i"], D=vals["D"], gain=gain)
        if vals["pr"] is not None:
            stim = Stimulus.from_pr(vals["TD"], vals["pr"], c=vals["c"], df=vals["df"], m=vals["m"])
        else:
            tr = 0.1 if vals["tr"] is None else vals["tr"]
            stim = Stimulus(TD=vals["TD"], TR=tr, c=vals["c"], df=vals["df"], m=vals["m"])
        grid = sweep.GridSpec.uniform(vals["l"], (vals["pr_min"], vals["pr_max"]),
                                      (vals["df_min"], vals["df_max"]), vals["n_df"])
    except (ParamError, StimulusError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    sim = sweep.SimOptions(dt=vals["dt"], transient_periods=vals["transient_periods"], inputs=vals["inputs"],
                           input_slope=vals["input_slope"], history=vals["history"],
                           residual_tol=vals["residual_tol"], ap_h_margin=vals["ap_h_margin"],
                           threads=vals["threads"])
    return RunConfig(cmd, p, stim, sim, grid, vals)


def _check_ranges(v: dict) -> None:
    def need(ok: bool, name: str, msg: str):
        if not ok:
            raise UsageError(f"{name}: {msg}")

    need(0.0 <= v["df"] <= 1.0, "df", "must lie in [0, 1]")
    need(0.0 <= v["df_min"] <= v["df_max"] <= 1.0, "df_min/df_max", "need 0 <= df_min <= df_max <= 1")
    need(0.0 < v["pr_min"] <= v["pr_max"], "pr_min/pr_max", "need 0 < pr_min <= pr_max")
    need(v["pr"] is None or v["pr"] > 0, "pr", "must be positive")
    need(v["tr"] is None or v["tr"] > 0, "tr", "must be positive")
    need(v["dt"] is None or v["dt"] > 0, "dt", "must be positive")
    need(v["l"] >= 2, "l", "need at least 2 samples")
    need(v["n_df"] is None or v["n_df"] >= 1, "n_df", "need at least 1 sample")
    need(v["transient_periods"] >= 2, "transient_periods", "need at least 2")
    need(v["threads"] is None or v["threads"] >= 0, "threads", "must be >= 0")
    need(v["inputs"] in ("smooth", "square"), "inputs", "must be smooth or square")
    need(v["fission_variant"] in ("tone", "delay"), "fission_variant", "must be tone or delay")
    need(v["regime"] in ("auto", "short", "long"), "regime", "must be auto, short or long")
    need(v["kind"] in ("all", "SM", "SC", "LM", "SD"), "kind", "unknown matrix kind")
    need(v["resolution"] >= 2, "resolution", "need at least 2")
    need(0.0 < v["s1"] <= 1.0, "s1", "must lie in (0, 1]")
    need(0.0 < v["s2"] <= 1.0, "s2", "must lie in (0, 1]")
    need(v["basin_band"] >= 0 and v["boundary_band"] >= 0, "band", "must be >= 0")
    need(v["residual_tol"] > 0, "residual_tol", "must be positive")


# ---- output -----------------------------------------------------------------


def atomic_write(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return sorted(o) if isinstance(o, (set, frozenset)) else list(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _config_comment(cfg: RunConfig) -> str:
    return "# config: " + json.dumps(cfg.effective(), sort_keys=True) + "\n"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---- commands ---------------------------------------------------------------


def _simulate(cfg: RunConfig) -> dict[str, str]:
    o = cfg.sim
    traj = integrate(cfg.params, cfg.stim, cfg.d, o.history, t_end=cfg.values["t_end"], dt=o.dt,
                     record_from=cfg.values["record_from"], inputs=o.inputs, input_slope=o.input_slope)
    t0, t1 = traj.span
    period = cfg.stim.period
    window = (max(t0, t1 - period), t1)
    n_a, n_b, _ = detect_crossings(traj, cfg.params.theta, window)
    residual = check_periodicity(traj, period) if t1 - t0 >= 2 * period else None
    rows = ([repr(float(t))] + [repr(float(x)) for x in y] for t, y in zip(traj.t, traj.y))
    events = {
        "config": cfg.effective(),
        "dt": traj.dt,
        "events": [{"t": e.t, "unit": e.unit, "direction": e.direction, "refined": e.refined}
                   for e in traj.events],
        "last_period": {"window": list(window), "n_a": n_a, "n_b": n_b, "n": n_a + n_b},
        "periodicity_residual": residual,
    }
    return {"trajectory.csv": _config_comment(cfg) + _csv(("t", "u_A", "u_B", "s_A", "s_B"), rows),
            "events.json": _json(events)}


def _classify(cfg: RunConfig) -> dict[str, str]:
    p, stim, d = cfg.params, cfg.stim, cfg.d
    regime = cfg.values["regime"]
    if regime == "auto":
        regime = "short" if p.D <= stim.TD else "long"
    if regime == "short":
        labels = {classifier.classify_short_delay(p, stim, d)}
    else:
        labels = classifier.classify_long_delay(p, stim, d)
    report = classifier.condition_report(p, stim, d)
    states = []
    for lab in sorted(labels, key=lambda x: x.name):
        mat = classifier.matrix_form(lab, regime)
        states.append({"label": lab.name, "percept": lab.percept, "symmetric": lab.symmetric,
                       "matrix": {"kind": mat.kind, "rows": list(mat.rows)}})
    band = cfg.values["boundary_band"]
    out = {"config": cfg.effective(), "regime": regime, "d": d, "states": states,
           "labels": [s["label"] for s in states], "percepts": sorted({s["percept"] or "none" for s in states}),
           "conditions": report.to_json(),
           "near_ties": report.near_ties(band) if band > 0 else []}
    return {"classify.json": _json(out)}


def _boundary_rows(cfg: RunConfig):
    coh, fis = boundaries.sample_boundaries(cfg.params, cfg.stim, (cfg.values["pr_min"], cfg.values["pr_max"]),
                                            cfg.values["l"], cfg.values["fission_variant"])
    return coh, fis


def _polylines(curves, x_of, y_of) -> list[str]:
    out = []
    for cur in curves:
        keep = ~cur.clamped
        pts = " ".join(f"{x_of(a):.2f},{y_of(b):.2f}" for a, b in zip(cur.pr[keep], cur.df[keep]))
        color = "#1f4fd1" if cur.kind == "coherence" else "#d1241f"
        out.append(f'<polyline class="{cur.kind}" points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    return out


def _boundaries(cfg: RunConfig) -> dict[str, str]:
    coh, fis = _boundary_rows(cfg)
    rows = ([repr(float(pr)), repr(float(c)), repr(float(f)), repr(float(cr)), repr(float(fr)),
             int(cc), int(fc)]
            for pr, c, f, cr, fr, cc, fc in zip(coh.pr, coh.df, fis.df, coh.raw, fis.raw, coh.clamped, fis.clamped))
    text = _config_comment(cfg) + _csv(
        ("pr_hz", "df_coh", "df_fiss", "raw_coh", "raw_fiss", "clamped_coh", "clamped_fiss"), rows)
    # fragment in data coordinates: x = PR in Hz, y = df
    lines = [f"<!-- config: {json.dumps(cfg.effective(), sort_keys=True)} -->",
             '<g class="boundaries" transform="scale(1,-1)">']
    lines += _polylines((coh, fis), float, float)
    lines.append("</g>")
    return {"boundaries.csv": text, "boundaries.svg": "\n".join(lines) + "\n"}


def _sweep(cfg: RunConfig) -> dict[str, str]:
    g = sweep.run_sweep(cfg.params, cfg.stim, cfg.grid, cfg.sim)
    g.config = cfg.effective()
    coh, fis = boundaries.sample_boundaries(cfg.params, cfg.stim, (cfg.grid.pr[0], cfg.grid.pr[-1]),
                                            len(cfg.grid.pr), cfg.values["fission_variant"])
    svg = sweep.emit_heatmap(g, (coh, fis))
    svg = svg.replace("<defs>", f"<!-- config: {json.dumps(g.config, sort_keys=True)} --><defs>", 1)
    return {"sweep.csv": sweep.emit_csv(g), "sweep.svg": svg, "manifest.json": _json(sweep.manifest(g))}


def _basin(cfg: RunConfig) -> dict[str, str]:
    s1, s2, n, band = cfg.values["s1"], cfg.values["s2"], cfg.values["resolution"], cfg.values["basin_band"]
    axis = np.linspace(0.0, 1.0, n)
    rows, cells = [], []
    for ub in axis:
        for ua in axis:
            lab = fast_subsystem.basin_label(s1, s2, (float(ua), float(ub)), band)
            name = lab if isinstance(lab, str) else f"{lab[0]}{lab[1]}"
            rows.append((repr(float(ua)), repr(float(ub)), name))
            cells.append((ua, ub, name))
    size, px = 400, 400 / n
    fills = {"00": "#303030", "11": "#d0d0d0", "boundary": "#c00000"}
    svg = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}">',
           f"<!-- config: {json.dumps(cfg.effective(), sort_keys=True)} -->"]
    for ua, ub, name in cells:
        svg.append(f'<rect x="{ua * (size - px):.2f}" y="{(1 - ub) * (size - px):.2f}" width="{px:.2f}" '
                   f'height="{px:.2f}" fill="{fills[name]}"/>')
    curve_u = np.linspace(0.0, 1.0, 201)
    curve = fast_subsystem.separatrix(s1, s2, curve_u)
    pts = " ".join(f"{x * size:.2f},{(1 - y) * size:.2f}" for x, y in zip(curve_u, curve))
    svg.append(f'<polyline class="separatrix" points="{pts}" fill="none" stroke="#1f4fd1" stroke-width="2"/>')
    svg.append("</svg>")
    return {"basin.csv": _config_comment(cfg) + _csv(("u_A", "u_B", "label"), rows),
            "basin.svg": "\n".join(svg) + "\n"}


def _enumerate(cfg: RunConfig) -> dict[str, str]:
    kinds = ("SM", "SC", "LM", "SD") if cfg.values["kind"] == "all" else (cfg.values["kind"],)
    out = {"config": cfg.effective(), "kinds": {}}
    for kind in kinds:
        mats = classifier.enumerate_valid_matrices(kind)
        classes = classifier.conjugacy_classes(mats)
        out["kinds"][kind] = {
            "matrices": len(mats),
            "classes": len(classes),
            "members": sorted([sorted(str(m) for m in cls) for cls in classes]),
        }
    return {"enumerate.json": _json(out)}


HANDLERS = {"simulate": _simulate, "classify": _classify, "sweep": _sweep,
            "boundaries": _boundaries, "basin": _basin, "enumerate": _enumerate}


def dispatch(cfg: RunConfig) -> int:
    try:
        artifacts = HANDLERS[cfg.command](cfg)
    except classifier.RegimeError as exc:
        print(f"error: regime check failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverConfigError, ParamError, StimulusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, classifier.ClassificationError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out_dir = cfg.values["out"]
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in artifacts.items():
            atomic_write(os.path.join(out_dir, name), text)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for name in artifacts:
        print(os.path.join(out_dir, name))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="streamwave",
        description="Simulate, classify and sweep the two-unit delayed-inhibition streaming network.",
        epilog="Exit codes: 0 success, 1 numerical or output failure, 2 configuration error.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="FILE", help="JSON config file; flags override its values")
    for name, key in KEYS.items():
        meta = "[UA,UB,SA,SB]" if name == "history" else name.upper()
        default = "none" if key.default is None else key.default
        kw = dict(dest=name, default=None, metavar=meta, help=f"{key.help} (default: {default})")
        if name == "history":
            kw["nargs"] = 4
        ap.add_argument(f"--{name}", **kw)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {name: getattr(args, name) for name in KEYS}
    try:
        text = None
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text, overrides, args.command)
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
