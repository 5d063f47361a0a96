"""Planar fast subsystem during a tone: equilibria, basins, separatrices and onset delay."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Corner = tuple[int, int]
BasinLabel = Corner | Literal["boundary"]
CORNERS: tuple[Corner, ...] = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class FastContext:
    """Inputs and delayed gates frozen for the duration of a fast transition.

    ``input_a`` and ``input_b`` are the tone drives of A and B (``c`` and ``d``
    during an A tone, swapped during a B tone).
    """

    input_a: float
    input_b: float
    a: float
    b: float
    theta: float
    s_a: float
    s_b: float

    def __post_init__(self) -> None:
        for name in ("s_a", "s_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class SaddleGeometry:
    s1: float
    s2: float

    @classmethod
    def from_context(cls, ctx: FastContext) -> "SaddleGeometry":
        if ctx.a <= 0:
            raise ValueError("saddle coordinates need a > 0")
        return cls(
            (ctx.b * ctx.s_a - ctx.input_a + ctx.theta) / ctx.a,
            (ctx.b * ctx.s_b - ctx.input_a + ctx.theta) / ctx.a,
        )

    @property
    def bistable(self) -> bool:
        return 0.0 < self.s1 <= 1.0 and 0.0 < self.s2 <= 1.0


def fast_equilibria(ctx: FastContext) -> set[Corner]:
    """Corners whose existence inequalities hold (``>=`` inclusive)."""
    thr_a = ctx.b * ctx.s_b + ctx.theta  # A needs drive at least this
    thr_b = ctx.b * ctx.s_a + ctx.theta
    f, g, a = ctx.input_a, ctx.input_b, ctx.a
    out: set[Corner] = set()
    if f < thr_a and g < thr_b:
        out.add((0, 0))
    if f >= thr_a and a + g < thr_b:
        out.add((1, 0))
    if a + f < thr_a and g >= thr_b:
        out.add((0, 1))
    if a + f >= thr_a and a + g >= thr_b:
        out.add((1, 1))
    return out


def separatrix(s1: float, s2: float, u_a):
    """Boundary ``u_B`` between the (0,0) and (1,1) basins as a function of ``u_A``.

    Two affine branches meet at the saddle ``(s1, s2)``. The left one lies on
    the line through ``(1, 0)`` and the right one on the line through ``(0, 1)``.
    """
    if not (0.0 < s1 <= 1.0 and 0.0 < s2 <= 1.0):
        raise ValueError("need 0 < s1 <= 1 and 0 < s2 <= 1")
    u = np.asarray(u_a, dtype=float)
    left = u <= s1
    if s1 == 1.0 and np.any(left & (u < s1)):
        raise ZeroDivisionError("left branch is singular when s1 = 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = (u - 1.0) * s2 / (s1 - 1.0) if s1 != 1.0 else np.full_like(u, s2)
        hi = u * (s2 - 1.0) / s1 + 1.0
    out = np.where(left, lo, hi)
    return float(out) if out.ndim == 0 else out


def basin_label(s1: float, s2: float, point: tuple[float, float], band: float = 0.0) -> BasinLabel:
    """Attractor reached from ``point``; within ``band`` of the separatrix gives ``"boundary"``."""
    u_a, u_b = point
    curve = separatrix(s1, s2, u_a)
    gap = u_b - curve
    if abs(gap) <= band:
        return "boundary"
    return (1, 1) if gap > 0 else (0, 0)


def reduced_rhs(s1: float, s2: float, u: np.ndarray) -> np.ndarray:
    """Vector field of the two-unit system with the delayed gates folded into the thresholds.

    ``u`` may be a single point or an ``(n, 2)`` array of points.
    """
    u = np.asarray(u, dtype=float)
    gates = np.stack([(u[..., 1] >= s2), (u[..., 0] >= s1)], axis=-1).astype(float)
    return gates - u


def basins_by_integration(s1: float, s2: float, points, dt: float = 1e-4,
                          max_time: float = 100.0) -> list[BasinLabel]:
    """Forward RK4 integration of the reduced field for many starting points.

    A point is settled once both units sit on the same side of their
    thresholds: the gates are then constant and the flow heads straight for
    the matching corner.
    """
    u = np.array(points, dtype=float).reshape(-1, 2)
    out: list[BasinLabel] = ["boundary"] * len(u)
    live = np.arange(len(u))
    for _ in range(int(max_time / dt) + 1):
        cur = u[live]
        up = (cur[:, 0] >= s1) & (cur[:, 1] >= s2)
        down = (cur[:, 0] < s1) & (cur[:, 1] < s2)
        for i in live[up]:
            out[i] = (1, 1)
        for i in live[down]:
            out[i] = (0, 0)
        keep = ~(up | down)
        live, cur = live[keep], cur[keep]
        if live.size == 0:
            break
        k1 = reduced_rhs(s1, s2, cur)
        k2 = reduced_rhs(s1, s2, cur + 0.5 * dt * k1)
        k3 = reduced_rhs(s1, s2, cur + 0.5 * dt * k2)
        k4 = reduced_rhs(s1, s2, cur + dt * k3)
        u[live] = cur + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return out


def basin_by_integration(s1: float, s2: float, point, dt: float = 1e-4,
                         max_time: float = 100.0) -> BasinLabel:
    return basins_by_integration(s1, s2, [point], dt, max_time)[0]


def onset_delay(tau: float, u_star: float) -> float:
    """Lag of the follower unit when it opens only once the leader reaches ``u_star``."""
    if not 0.0 <= u_star < 1.0:
        raise ValueError("u_star must lie in [0, 1)")
    return tau * math.log(1.0 / (1.0 - u_star))


# ---- steep-sigmoid variant -------------------------------------------------


def _sig(x, lam):
    return 0.5 * (1.0 + np.tanh(0.5 * lam * x))


def sigmoid_field(s1: float, s2: float, lam: float, u: np.ndarray) -> np.ndarray:
    return np.array([-u[0] + _sig(u[1] - s2, lam), -u[1] + _sig(u[0] - s1, lam)])


def _jacobian(s1, s2, lam, u):
    da = lam * _sig(u[1] - s2, lam) * (1 - _sig(u[1] - s2, lam))
    db = lam * _sig(u[0] - s1, lam) * (1 - _sig(u[0] - s1, lam))
    return np.array([[-1.0, da], [db, -1.0]])


def sigmoid_equilibria(s1: float, s2: float, lam: float, iters: int = 200) -> list[np.ndarray]:
    """Equilibria of the smooth field via damped Newton from the four corners and the saddle guess."""
    found: list[np.ndarray] = []
    for start in [(0, 0), (1, 0), (0, 1), (1, 1), (s1, s2)]:
        u = np.array(start, dtype=float)
        for _ in range(iters):
            r = sigmoid_field(s1, s2, lam, u)
            if np.max(np.abs(r)) < 1e-13:
                break
            try:
                step = np.linalg.solve(_jacobian(s1, s2, lam, u), -r)
            except np.linalg.LinAlgError:
                break
            damp = 1.0
            while damp > 1e-6:
                trial = u + damp * step
                if np.max(np.abs(sigmoid_field(s1, s2, lam, trial))) < np.max(np.abs(r)):
                    break
                damp *= 0.5
            u = u + damp * step
        if np.max(np.abs(sigmoid_field(s1, s2, lam, u))) < 1e-10:
            if not any(np.allclose(u, v, atol=1e-8) for v in found):
                found.append(u)
    return found


def sigmoid_separatrix(s1: float, s2: float, lam: float, eps: float = 1e-4, dt: float = 1e-3,
                       max_time: float = 50.0) -> list[np.ndarray]:
    """Stable-manifold branches of the interior saddle, traced backward in time.

    Each branch starts ``eps`` from the saddle along the stable eigenvector,
    which is the curve separating the two basins.
    """
    eqs = sigmoid_equilibria(s1, s2, lam)
    saddles = [e for e in eqs if np.any(np.linalg.eigvals(_jacobian(s1, s2, lam, e)).real > 0)]
    if not saddles:
        return []
    sad = saddles[0]
    vals, vecs = np.linalg.eig(_jacobian(s1, s2, lam, sad))
    v = np.real(vecs[:, np.argmin(vals.real)])
    branches = []
    for sign in (1.0, -1.0):
        u = sad + sign * eps * v
        pts = [sad.copy(), u.copy()]
        for _ in range(int(max_time / dt)):
            f = lambda x: -sigmoid_field(s1, s2, lam, x)  # noqa: E731
            k1 = f(u)
            k2 = f(u + 0.5 * dt * k1)
            k3 = f(u + 0.5 * dt * k2)
            k4 = f(u + dt * k3)
            u = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            pts.append(u.copy())
            if np.any(u < -0.05) or np.any(u > 1.05):
                break
        branches.append(np.array(pts))
    return branches
