"""Model parameters, gain functions, the delayed right-hand side and regime flags."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from streamwave.stimulus import Stimulus


class ParamError(ValueError):
    """Raised for model parameters outside their valid domain."""


@dataclass(frozen=True)
class Gain:
    """Gain choice: ``slope=None`` is the Heaviside step, otherwise a logistic."""

    slope: float | None = None

    def __post_init__(self) -> None:
        if self.slope is not None and not self.slope > 0:
            raise ParamError("sigmoid slope must be positive")

    @property
    def is_heaviside(self) -> bool:
        return self.slope is None


@dataclass(frozen=True)
class ModelParams:
    a: float
    b: float
    theta: float
    tau: float
    tau_i: float
    D: float
    gain: Gain = Gain(30.0)

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < 1.0:
            raise ParamError(f"theta={self.theta} outside (0, 1)")
        if not (self.tau > 0 and self.tau_i > 0):
            raise ParamError("tau and tau_i must be positive")
        if self.a < 0 or self.b < 0:
            raise ParamError("a and b must be >= 0")
        if self.D < 0:
            raise ParamError("D must be >= 0")


class NetState(NamedTuple):
    u_a: float
    u_b: float
    s_a: float
    s_b: float


@dataclass(frozen=True)
class RegimeFlags:
    u1: bool
    u2: bool
    u3: bool
    short_delay: bool
    sep_ok: bool

    def failed(self, *names: str) -> list[str]:
        return [n for n in names if not getattr(self, n)]


def heaviside_gain(x, theta: float):
    """1 where ``x >= theta``, else 0."""
    out = (np.asarray(x) >= theta).astype(float)
    return int(out) if out.ndim == 0 else out


def sigmoid_gain(x, lam: float):
    """Logistic ``1 / (1 + exp(-lam * x))``, computed without overflow."""
    if not lam > 0:
        raise ParamError("slope must be positive")
    out = 0.5 * (1.0 + np.tanh(0.5 * lam * np.asarray(x, dtype=float)))
    return float(out) if out.ndim == 0 else out


def _gate(x, p: ModelParams):
    if p.gain.is_heaviside:
        return heaviside_gain(x, p.theta)
    return sigmoid_gain(np.asarray(x, dtype=float) - p.theta, p.gain.slope)


def rhs(state, delayed, inputs, p: ModelParams) -> np.ndarray:
    """Time derivative of ``(u_A, u_B, s_A, s_B)``.

    ``delayed`` holds ``(s_A(t - D), s_B(t - D))`` and ``inputs`` holds ``(i_A, i_B)``.
    """
    u_a, u_b, s_a, s_b = state
    ds_a, ds_b = delayed
    i_a, i_b = inputs
    du_a = (-u_a + _gate(p.a * u_b - p.b * ds_b + i_a, p)) / p.tau
    du_b = (-u_b + _gate(p.a * u_a - p.b * ds_a + i_b, p)) / p.tau
    dsa = _gate(u_a, p) * (1.0 - s_a) / p.tau - s_a / p.tau_i
    dsb = _gate(u_b, p) * (1.0 - s_b) / p.tau - s_b / p.tau_i
    return np.array([du_a, du_b, dsa, dsb], dtype=float)


def validate_params(p: ModelParams, stim: Stimulus) -> RegimeFlags:
    return RegimeFlags(
        u1=p.a - p.b < p.theta,
        u2=stim.c >= p.theta,
        u3=stim.c - p.b >= p.theta,
        short_delay=p.D <= stim.TD,
        sep_ok=stim.TD + p.D < stim.TR,
    )
