"""Periodic two-tone inputs and the active tone schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Tone = Literal["A", "B"]


class StimulusError(ValueError):
    """Raised for stimulus parameters outside their valid domain."""


@dataclass(frozen=True)
class Stimulus:
    """Tone timing and input strengths.

    Parameters
    ----------
    TD : float
        Tone duration in seconds.
    TR : float
        Repetition time in seconds; the presentation rate is ``1 / TR``.
    c : float
        Input strength delivered to a unit by its own tone.
    df : float
        Normalized frequency difference in ``[0, 1]``.
    m : int
        Exponent of the df to cross-input mapping.
    """

    TD: float
    TR: float
    c: float = 5.5
    df: float = 0.0
    m: int = 6

    def __post_init__(self) -> None:
        if not (self.TD > 0 and self.TR > 0):
            raise StimulusError("TD and TR must be positive")
        if self.TR < self.TD:
            raise StimulusError(f"TR={self.TR} must be >= TD={self.TD}")
        if not 0.0 <= self.df <= 1.0:
            raise StimulusError(f"df={self.df} outside [0, 1]")
        if int(self.m) != self.m or self.m < 1:
            raise StimulusError(f"m={self.m} must be a positive integer")
        if self.c < 0:
            raise StimulusError(f"c={self.c} must be >= 0")

    @classmethod
    def from_pr(cls, TD: float, pr: float, **kw) -> "Stimulus":
        if pr <= 0:
            raise StimulusError("PR must be positive")
        return cls(TD=TD, TR=1.0 / pr, **kw)

    @property
    def pr(self) -> float:
        return 1.0 / self.TR

    @property
    def period(self) -> float:
        return 2.0 * self.TR

    @property
    def d(self) -> float:
        return df_to_d(self.c, self.df, self.m)


@dataclass(frozen=True)
class ToneInterval:
    start: float
    end: float
    tone: Tone


def tone_schedule(stim: Stimulus, t_end: float) -> list[ToneInterval]:
    """All tone intervals whose start lies in ``[0, t_end]``, in time order."""
    if not t_end > 0:
        raise StimulusError("t_end must be positive")
    out = []
    k = 0
    while k * stim.TR <= t_end * (1 + 1e-12):
        start = k * stim.TR
        out.append(ToneInterval(start, start + stim.TD, "A" if k % 2 == 0 else "B"))
        k += 1
    return out


def df_to_d(c: float, df: float, m: int) -> float:
    """Cross-input strength ``c * (1 - df**(1/m))``."""
    if not 0.0 <= df <= 1.0:
        raise StimulusError(f"df={df} outside [0, 1]")
    if c < 0 or m < 1:
        raise StimulusError("need c >= 0 and m >= 1")
    return c * (1.0 - df ** (1.0 / m))


def _phase(stim: Stimulus, t):
    return np.mod(t, 2.0 * stim.TR)


def square_input(stim: Stimulus, d: float, t):
    """Square-wave inputs ``(i_A, i_B)``; tone intervals are closed."""
    ph = _phase(stim, t)
    # t mod 2TR carries round-off, so every edge gets the same small slack
    eps = 1e-9 * stim.TR
    on_a = (ph <= stim.TD + eps) | (ph >= 2.0 * stim.TR - eps)
    on_b = (ph >= stim.TR - eps) & (ph <= stim.TR + stim.TD + eps)
    i_a = np.where(on_a, stim.c, np.where(on_b, d, 0.0))
    i_b = np.where(on_a, d, np.where(on_b, stim.c, 0.0))
    if np.ndim(t) == 0:
        return float(i_a), float(i_b)
    return i_a, i_b


def _logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def smooth_input(stim: Stimulus, d: float, lam: float, t):
    """Logistic-smoothed inputs built from ``sin(pi * PR * t)``."""
    if not lam > 0:
        raise StimulusError("slope must be positive")
    ph = _phase(stim, t)
    w = math.pi / stim.TR
    s_now = np.sin(w * ph)
    s_back = np.sin(w * (stim.TD - ph))
    own = _logistic(lam * s_now) * _logistic(lam * s_back)
    other = _logistic(-lam * s_now) * _logistic(-lam * s_back)
    i_a = stim.c * own + d * other
    i_b = d * own + stim.c * other
    if np.ndim(t) == 0:
        return float(i_a), float(i_b)
    return i_a, i_b
