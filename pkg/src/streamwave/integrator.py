"""Fixed-step RK4 integration of the delayed system, crossing detection and periodicity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from streamwave import _kernel
from streamwave.model import ModelParams
from streamwave.stimulus import Stimulus

HEAVISIDE_SLOPE = 1e3


class IntegrationError(RuntimeError):
    """The state became nonfinite."""

    def __init__(self, t: float):
        super().__init__(f"integration diverged at t={t:.9g}")
        self.t = t


class ConfigError(ValueError):
    """Solver settings violate the step-size bounds or span requirements."""


@dataclass(frozen=True)
class CrossingEvent:
    t: float
    unit: Literal["A", "B"]
    direction: Literal["up", "down"]
    refined: bool


@dataclass
class HistoryBuffer:
    """Gate values on the delay window ending at ``t_now``, plus the current state.

    ``s`` holds gate values at the last ``n_knots`` grid points in time order;
    ``f_left``/``f_right`` are the one-sided derivatives there (they differ only
    at the start of a run from a constant history).
    """

    t_now: float
    dt: float
    s: np.ndarray
    f_left: np.ndarray
    f_right: np.ndarray
    y_now: np.ndarray

    @classmethod
    def constant(cls, state: Sequence[float], n_knots: int, dt: float, t_now: float = 0.0) -> "HistoryBuffer":
        y = np.asarray(state, dtype=float)
        if y.shape != (4,):
            raise ConfigError("history must have four components")
        s = np.tile(y[2:], (n_knots, 1))
        zeros = np.zeros_like(s)
        return cls(t_now, dt, s, zeros, zeros.copy(), y.copy())

    @property
    def n_knots(self) -> int:
        return self.s.shape[0]

    def swapped(self) -> "HistoryBuffer":
        """A/B exchange of every stored quantity."""
        return HistoryBuffer(
            self.t_now,
            self.dt,
            self.s[:, ::-1].copy(),
            self.f_left[:, ::-1].copy(),
            self.f_right[:, ::-1].copy(),
            self.y_now[[1, 0, 3, 2]].copy(),
        )


@dataclass
class Trajectory:
    """Knots ``t``, states ``y`` (columns u_A, u_B, s_A, s_B) and derivatives ``f``."""

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    dt: float
    theta: float
    gain_slope: float
    inputs: str
    final_history: HistoryBuffer | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.y)):
            raise IntegrationError(float(self.t[np.argmax(~np.isfinite(self.y).all(axis=1))]))

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def dense(self, tq) -> np.ndarray:
        """Cubic Hermite interpolation of the state at times ``tq``."""
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        t0, t1 = self.span
        if np.any(tq < t0 - 1e-12 * max(1.0, abs(t0))) or np.any(tq > t1 + 1e-12 * max(1.0, abs(t1))):
            raise ValueError("query outside trajectory span")
        h = self.t[1] - self.t[0]
        idx = np.clip(np.floor((tq - t0) / h).astype(int), 0, len(self.t) - 2)
        return _hermite(self.t, self.y, self.f, idx, tq)

    @cached_property
    def events(self) -> list[CrossingEvent]:
        _, _, ev = detect_crossings(self, self.theta, self.span)
        return ev


def _hermite(t, y, f, idx, tq):
    h = t[idx + 1] - t[idx]
    s = ((tq - t[idx]) / h)[:, None]
    h = h[:, None]
    y0, y1, f0, f1 = y[idx], y[idx + 1], f[idx], f[idx + 1]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def default_dt(p: ModelParams, stim: Stimulus) -> float:
    scales = [p.tau, stim.TD] + ([p.D] if p.D > 0 else [])
    return align_dt(min(scales) / 20.0, stim.TR)


def align_dt(dt: float, TR: float) -> float:
    """Shrink ``dt`` so that ``TR`` is a whole number of steps.

    With a period-commensurate grid a converged orbit repeats knot for knot,
    and the A/B swap shifted by TR lands on the same grid.
    """
    return TR / math.ceil(TR / dt - 1e-9)


def ring_size(D: float, dt: float) -> int:
    return int(math.ceil(D / dt - 1e-9)) + 2 if D > 0 else 1


def check_dt(dt: float, p: ModelParams, stim: Stimulus) -> None:
    bounds = {"tau/10": p.tau / 10, "TD/4": stim.TD / 4}
    if p.D > 0:
        bounds["D/4"] = p.D / 4
    for name, bound in bounds.items():
        if dt > bound * (1 + 1e-12):
            raise ConfigError(f"dt={dt:.3g} exceeds {name}={bound:.3g}")


def pack_params(p: ModelParams, stim: Stimulus, d: float, inputs: str = "smooth",
                input_slope: float | None = None, heaviside_slope: float = HEAVISIDE_SLOPE) -> np.ndarray:
    slope = heaviside_slope if p.gain.is_heaviside else p.gain.slope
    if inputs not in ("smooth", "square"):
        raise ConfigError(f"unknown input kind {inputs!r}")
    par = np.zeros(_kernel.N_PAR)
    par[_kernel.A] = p.a
    par[_kernel.B] = p.b
    par[_kernel.THETA] = p.theta
    par[_kernel.TAU] = p.tau
    par[_kernel.TAU_I] = p.tau_i
    par[_kernel.SLOPE] = slope
    par[_kernel.C] = stim.c
    par[_kernel.D_IN] = d
    par[_kernel.TD] = stim.TD
    par[_kernel.TR] = stim.TR
    par[_kernel.SMOOTH] = 1.0 if inputs == "smooth" else 0.0
    par[_kernel.IN_SLOPE] = slope if input_slope is None else input_slope
    return par


def integrate(
    p: ModelParams,
    stim: Stimulus,
    d: float,
    history: Sequence[float] | HistoryBuffer = (1.0, 0.0, 1.0, 0.0),
    t_end: float | None = None,
    dt: float | None = None,
    *,
    record_from: float | None = None,
    inputs: str = "smooth",
    input_slope: float | None = None,
    heaviside_slope: float = HEAVISIDE_SLOPE,
) -> Trajectory:
    """Integrate from a constant history (or a stored buffer) up to ``t_end``.

    The step is shrunk so that ``TR`` is a whole number of steps. Only knots at
    or after ``record_from`` are kept; the final delay window is returned in
    ``final_history`` so a run can be continued.
    """
    if isinstance(history, HistoryBuffer):
        dt = history.dt
        t_start = history.t_now
    else:
        dt = default_dt(p, stim) if dt is None else align_dt(dt, stim.TR)
        t_start = 0.0
    check_dt(dt, p, stim)
    if t_end is None:
        t_end = t_start + 62 * stim.TR
    if t_end - t_start < 2 * stim.TR * (1 - 1e-12):
        raise ConfigError("t_end must cover at least 2TR")
    ns = ring_size(p.D, dt)
    if not isinstance(history, HistoryBuffer):
        history = HistoryBuffer.constant(history, ns, dt)
    elif history.n_knots != ns or not math.isclose(history.dt, dt, rel_tol=1e-12):
        raise ConfigError("history buffer does not match the delay grid")

    n_steps = int(math.ceil((t_end - t_start) / dt - 1e-9))
    rec_start = 0 if record_from is None else int(max(0, math.floor((record_from - t_start) / dt + 1e-9)))
    rec_start = min(rec_start, n_steps - 1)
    n_rec = n_steps + 1 - rec_start

    ring_s = np.empty((ns, 2))
    ring_fl = np.empty((ns, 2))
    ring_fr = np.empty((ns, 2))
    for k in range(ns):
        j = k - (ns - 1)  # knot index relative to the start
        ring_s[j % ns] = history.s[k]
        ring_fl[j % ns] = history.f_left[k]
        ring_fr[j % ns] = history.f_right[k]

    par = pack_params(p, stim, d, inputs, input_slope, heaviside_slope)
    out_y = np.empty((n_rec, 4))
    out_f = np.empty((n_rec, 4))
    status = _kernel.run(par, dt, t_start, n_steps, p.D / dt, ring_s, ring_fl, ring_fr,
                         np.asarray(history.y_now, dtype=float), rec_start, out_y, out_f)
    if status >= 0:
        raise IntegrationError(t_start + (status + 1) * dt)

    t = t_start + dt * np.arange(rec_start, n_steps + 1)
    if p.D > 0:
        order = [(n_steps - (ns - 1) + k) % ns for k in range(ns)]
        final = HistoryBuffer(t_start + n_steps * dt, dt, ring_s[order].copy(),
                              ring_fl[order].copy(), ring_fr[order].copy(), out_y[-1].copy())
    else:
        final = HistoryBuffer(t_start + n_steps * dt, dt, out_y[-1:, 2:].copy(),
                              out_f[-1:, 2:].copy(), out_f[-1:, 2:].copy(), out_y[-1].copy())
    return Trajectory(t, out_y, out_f, dt, p.theta, par[_kernel.SLOPE], inputs, final)


def _refine(traj: Trajectory, col: int, idx: np.ndarray, theta: float, tol: float = 1e-9):
    lo = traj.t[idx].copy()
    hi = traj.t[idx + 1].copy()
    done = np.zeros(len(idx), dtype=bool)
    mid = hi.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = _hermite(traj.t, traj.y, traj.f, idx, mid)[:, col] - theta
        done |= np.abs(val) < tol
        below = val < 0
        lo = np.where(done, lo, np.where(below, mid, lo))
        hi = np.where(done, hi, np.where(below, hi, mid))
        if done.all():
            break
    # a final bracket narrower than float spacing also counts as converged
    done |= (hi - lo) <= 4 * np.spacing(np.maximum(np.abs(hi), 1.0))
    return mid, done


def detect_crossings(traj: Trajectory, theta: float, window: tuple[float, float]):
    """Upward threshold crossings of ``u_A`` and ``u_B`` in ``[t0, t1)``."""
    t0, t1 = window
    a, b = traj.span
    slack = 1e-9 * max(1.0, abs(b))
    if t0 < a - slack or t1 > b + slack or t1 <= t0:
        raise ValueError(f"window [{t0}, {t1}] outside trajectory span [{a}, {b}]")
    events: list[CrossingEvent] = []
    counts = []
    for col, unit in ((0, "A"), (1, "B")):
        u = traj.y[:, col]
        idx = np.nonzero((u[:-1] < theta) & (u[1:] >= theta))[0]
        idx = idx[(traj.t[idx + 1] >= t0) & (traj.t[idx] < t1)]
        if len(idx):
            tc, ok = _refine(traj, col, idx, theta)
            keep = (tc >= t0) & (tc < t1)
            tc, ok = tc[keep], ok[keep]
        else:
            tc, ok = np.empty(0), np.empty(0, dtype=bool)
        counts.append(len(tc))
        events.extend(CrossingEvent(float(x), unit, "up", bool(r)) for x, r in zip(tc, ok))
    events.sort(key=lambda e: e.t)
    return counts[0], counts[1], events


def check_periodicity(traj: Trajectory, period: float, tol: float | None = None) -> float:
    """Max-norm distance between the last period and the one before it."""
    a, b = traj.span
    if b - a < 2 * period * (1 - 1e-9):
        raise ValueError("trajectory shorter than two periods")
    sel = traj.t >= b - period
    shifted = traj.dense(np.maximum(traj.t[sel] - period, a))
    return float(np.max(np.abs(traj.y[sel] - shifted)))
