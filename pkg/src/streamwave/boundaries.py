"""Closed-form coherence and fission curves in the (PR, df) plane."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from streamwave.model import ModelParams
from streamwave.stimulus import Stimulus

DecayVariant = Literal["tone", "delay"]


@dataclass(frozen=True)
class BoundaryPoint:
    df: float
    raw: float
    clamped: bool


@dataclass
class BoundaryCurve:
    kind: Literal["coherence", "fission"]
    pr: np.ndarray
    df: np.ndarray
    raw: np.ndarray
    clamped: np.ndarray
    params: dict = field(default_factory=dict)


def _df_from_decay(p: ModelParams, c: float, m: int, decay: float) -> BoundaryPoint:
    """df at which ``a - b*decay + d(df) = theta``, i.e. ``d = theta - a + b*decay``."""
    if not c > 0:
        raise ValueError("c must be positive")
    base = (p.a - p.b * decay + c - p.theta) / c
    if base < 0:
        # curve lies below the df axis; keep a signed raw value for diagnostics
        return BoundaryPoint(0.0, -((-base) ** m), True)
    raw = base ** m
    return BoundaryPoint(min(raw, 1.0), raw, raw > 1.0)


def coherence_decay(p: ModelParams, TR: float) -> float:
    return math.exp(-(TR - p.D) / p.tau_i)


def fission_decay(p: ModelParams, TD: float, TR: float, variant: DecayVariant = "tone") -> float:
    """Two-tones-back decay; ``tone`` uses ``2TR - TD`` and ``delay`` uses ``2TR - D``."""
    lag = 2 * TR - (TD if variant == "tone" else p.D)
    return math.exp(-lag / p.tau_i)


def coherence_boundary(p: ModelParams, stim: Stimulus, pr: float) -> BoundaryPoint:
    if not pr > 0:
        raise ValueError("PR must be positive")
    return _df_from_decay(p, stim.c, stim.m, coherence_decay(p, 1.0 / pr))


def fission_boundary(p: ModelParams, stim: Stimulus, pr: float,
                     variant: DecayVariant = "tone") -> BoundaryPoint:
    if not pr > 0:
        raise ValueError("PR must be positive")
    return _df_from_decay(p, stim.c, stim.m, fission_decay(p, stim.TD, 1.0 / pr, variant))


def sample_boundaries(p: ModelParams, stim: Stimulus, pr_range: tuple[float, float] = (1.0, 40.0),
                      n: int = 98, fission_variant: DecayVariant = "tone") -> tuple[BoundaryCurve, BoundaryCurve]:
    if n < 2:
        raise ValueError("need at least two points")
    prs = np.linspace(pr_range[0], pr_range[1], n)
    info = {"a": p.a, "b": p.b, "c": stim.c, "theta": p.theta, "tau_i": p.tau_i, "D": p.D,
            "TD": stim.TD, "m": stim.m, "fission_variant": fission_variant}
    curves = []
    for kind, fn in (("coherence", lambda pr: coherence_boundary(p, stim, pr)),
                     ("fission", lambda pr: fission_boundary(p, stim, pr, fission_variant))):
        pts = [fn(pr) for pr in prs]
        curves.append(BoundaryCurve(
            kind, prs, np.array([q.df for q in pts]), np.array([q.raw for q in pts]),
            np.array([q.clamped for q in pts]), dict(info)))
    return curves[0], curves[1]
