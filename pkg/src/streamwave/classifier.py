"""Analytic classification of 2TR-periodic states in the Heaviside, fast-inhibition-free limit.

Every state is a binary matrix over two consecutive tone intervals. Each row is
a unit and each interval contributes a block of entries:

* ``x``: ON at the tone onset,
* ``y``: ON within a fast transient of the onset,
* ``z``: ON by the end of the interval,
* ``w``: still ON after the tone ends.

Existence conditions compare threshold-relative drives built from the
synaptic decay constants against ``theta``. All quantities are vectorized over
numpy arrays so random audits run in bulk.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Mapping

import numpy as np

from streamwave.model import ModelParams, validate_params
from streamwave.stimulus import Stimulus

Regime = Literal["short", "long"]
Kind = Literal["SM", "SC", "LM", "mixed", "SD"]
BLOCK = {"SM": 2, "SC": 3, "LM": 3, "mixed": 4, "SD": 3}


class RegimeError(ValueError):
    """Parameters lie outside the regime an operation needs."""

    def __init__(self, flags: Iterable[str]):
        self.flags = list(flags)
        super().__init__("regime requirement failed: " + ", ".join(self.flags))


class ClassificationError(RuntimeError):
    """No condition set was satisfied where the tables should cover the space."""


# ---- decay constants --------------------------------------------------------


@dataclass(frozen=True)
class SynapticConstants:
    """Delayed gate values at interval edges, each ``exp(-elapsed / tau_i)``.

    ``minus``/``plus`` suffixes refer to the start and end of an interval.
    ``n`` is one tone back, ``m`` two tones back, the ``long`` variants are for
    units that stay ON past the tone, and ``r`` is for the short-delay case.
    """

    n_minus: float
    n_plus: float
    m_minus: float
    m_plus: float
    nl_minus: float
    nl_plus: float
    ml_minus: float
    ml_plus: float
    r_minus: float
    r_plus: float

    def as_dict(self) -> dict[str, float]:
        return {
            "N-": self.n_minus, "N+": self.n_plus, "M-": self.m_minus, "M+": self.m_plus,
            "NL-": self.nl_minus, "NL+": self.nl_plus, "ML-": self.ml_minus, "ML+": self.ml_plus,
            "R-": self.r_minus, "R+": self.r_plus,
        }


def _constants(TD, TR, D, tau_i):
    e = lambda x: np.exp(-x / tau_i)  # noqa: E731
    return dict(
        n_minus=e(TR - TD - D), n_plus=e(TR - D),
        m_minus=e(2 * TR - TD - D), m_plus=e(2 * TR - D),
        nl_minus=e(TR - 2 * D), nl_plus=e(TR + TD - 2 * D),
        ml_minus=e(2 * TR - 2 * D), ml_plus=e(2 * TR + TD - 2 * D),
        r_minus=e(TR - 2 * D), r_plus=e(TR - D),
    )


def synaptic_constants(stim: Stimulus, D: float, tau_i: float) -> SynapticConstants:
    if not (stim.TR > 0 and tau_i > 0):
        raise ValueError("TR and tau_i must be positive")
    return SynapticConstants(**{k: float(v) for k, v in _constants(stim.TD, stim.TR, D, tau_i).items()})


# ---- condition quantities ---------------------------------------------------


def condition_values(a, b, c, d, theta, TD, TR, D, tau_i) -> dict[str, np.ndarray]:
    """All condition quantities; inputs may be numpy arrays of equal shape."""
    k = _constants(TD, TR, D, tau_i)
    v: dict[str, np.ndarray] = {}
    for tag, (n, m) in {"C": ("n", "m"), "D": ("nl", "ml")}.items():
        for sgn, sfx in (("-", "_minus"), ("+", "_plus")):
            N, M = k[n + sfx], k[m + sfx]
            v[f"{tag}2{sgn}"] = a - b * M + d
            v[f"{tag}3{sgn}"] = c - b * N
            v[f"{tag}4{sgn}"] = c - b * M
            v[f"{tag}5{sgn}"] = a - b * N + d
            v[f"{tag}6{sgn}"] = a - b * N + c
            v[f"{tag}7{sgn}"] = d - b * N
            v[f"{tag}8{sgn}"] = d - b * M
        v[f"{tag}9"] = a - b * k[m + "_plus"]
        v[f"{tag}10"] = a - b * k[n + "_plus"]
    v["C1"] = d + 0.0 * a
    v["R6-"] = a - b * k["r_minus"] + d
    v["R7-"] = d - b * k["r_minus"]
    v["P"] = a - b + d
    v["K"] = c - (d - theta) * np.exp(TR / tau_i)
    v["L"] = np.exp((D - 2 * TD - TR) / tau_i)
    v["onset_decay"] = np.exp((D - 2 * TD) / tau_i)
    names = {"n_minus": "N-", "n_plus": "N+", "m_minus": "M-", "m_plus": "M+", "nl_minus": "NL-",
             "nl_plus": "NL+", "ml_minus": "ML-", "ml_plus": "ML+", "r_minus": "R-", "r_plus": "R+"}
    for key, name in names.items():
        v[name] = k[key] + 0.0 * a
    return v


# quantities compared against theta; the rest are auxiliary
THRESHOLD_QUANTITIES = tuple(
    [f"{t}{i}{s}" for t in "CD" for i in range(2, 9) for s in "-+"]
    + ["C1", "C9", "C10", "D9", "D10", "R6-", "R7-", "P"]
)


@dataclass
class ConditionReport:
    values: dict[str, float]
    theta: float

    def ge(self, name: str) -> bool:
        return bool(self.values[name] >= self.theta)

    def lt(self, name: str) -> bool:
        return bool(self.values[name] < self.theta)

    @property
    def flags(self) -> dict[str, bool]:
        return {n: self.ge(n) for n in THRESHOLD_QUANTITIES}

    def near_ties(self, band: float) -> list[str]:
        return [n for n in THRESHOLD_QUANTITIES if abs(self.values[n] - self.theta) < band]

    def to_json(self) -> dict:
        return {"theta": self.theta, "values": self.values, "ge_theta": self.flags}


def _require(p: ModelParams, stim: Stimulus, names: Iterable[str]) -> None:
    failed = validate_params(p, stim).failed(*names)
    if failed:
        raise RegimeError(failed)


def condition_report(p: ModelParams, stim: Stimulus, d: float) -> ConditionReport:
    _require(p, stim, ("u1", "u2"))
    vals = condition_values(p.a, p.b, stim.c, d, p.theta, stim.TD, stim.TR, p.D, p.tau_i)
    return ConditionReport({k: float(v) for k, v in vals.items()}, p.theta)


# ---- matrix forms -----------------------------------------------------------


@dataclass(frozen=True)
class StateMatrix:
    """Two rows (units A and B) of binary entries, ``block`` entries per interval."""

    kind: str
    rows: tuple[tuple[int, ...], tuple[int, ...]]

    @classmethod
    def parse(cls, kind: str, a: str, b: str) -> "StateMatrix":
        row = lambda s: tuple(int(ch) for ch in s if ch in "01")  # noqa: E731
        m = cls(kind, (row(a), row(b)))
        if len(m.rows[0]) != 2 * BLOCK[kind] or len(m.rows[1]) != 2 * BLOCK[kind]:
            raise ValueError(f"bad {kind} matrix {a}/{b}")
        return m

    @property
    def block(self) -> int:
        return BLOCK[self.kind]

    def entry(self, unit: int, interval: int, pos: int) -> int:
        return self.rows[unit][interval * self.block + pos]

    def responds(self, unit: int, interval: int) -> bool:
        k = self.block
        return any(self.rows[unit][interval * k:(interval + 1) * k])

    def __str__(self) -> str:
        k = self.block
        fmt = lambda r: "".join(map(str, r[:k])) + " " + "".join(map(str, r[k:]))  # noqa: E731
        return f"{fmt(self.rows[0])} | {fmt(self.rows[1])}"


def conjugate(mat: StateMatrix) -> StateMatrix:
    """Swap units and intervals together (the A/B exchange shifted by one tone)."""
    k = mat.block
    ra, rb = mat.rows
    return StateMatrix(mat.kind, (rb[k:] + rb[:k], ra[k:] + ra[:k]))


def percept_of(mat: StateMatrix) -> str | None:
    """Integration, bistability or segregation from how many tones each unit answers."""
    r = sorted(sum(mat.responds(u, i) for i in (0, 1)) for u in (0, 1))
    if r[1] < 2:
        return "segregation"
    if r[0] == 1:
        return "bistability"
    return "integration"


# ---- validity filters and enumeration --------------------------------------

_MAIN = {(1, 1, 1, 1), (1, 1, 0, 1), (0, 1, 1, 1), (1, 1, 0, 0), (0, 0, 1, 1), (0, 0, 0, 0)}
# (x_A, y_A, x_B, y_B) for the six per-interval MAIN patterns


def _main_ok(xa, ya, xb, yb) -> bool:
    return (xa, ya, xb, yb) in _MAIN


def _interval_ok(block_a, block_b) -> bool:
    """A single interval in (x, y, z) form is a MAIN pattern or a CONNECT pattern."""
    (xa, ya, za), (xb, yb, zb) = block_a, block_b
    if not (xa <= ya <= za and xb <= yb <= zb):
        return False
    if xa == xb == 0 and (ya or yb):
        return False
    if za == ya and zb == yb:
        return _main_ok(xa, ya, xb, yb)
    return True


def _imp(p: bool, q: bool) -> bool:
    return (not p) or q


def _sm_ok(m: StateMatrix) -> bool:
    e = m.entry
    xa1, ya1, xb1, yb1 = e(0, 0, 0), e(0, 0, 1), e(1, 0, 0), e(1, 0, 1)
    xa2, ya2, xb2, yb2 = e(0, 1, 0), e(0, 1, 1), e(1, 1, 0), e(1, 1, 1)
    if not (_main_ok(xa1, ya1, xb1, yb1) and _main_ok(xa2, ya2, xb2, yb2)):
        return False
    low = min(m.rows[0] + m.rows[1])
    return all((
        # a silent orbit lets inhibition decay away, after which c >= theta switches A ON
        any(m.rows[0] + m.rows[1]),
        _imp(ya1 == 1 and yb2 == 1, xa1 == xb2),
        _imp(ya2 == 1 and yb1 == 1, xa2 == xb1),
        _imp(yb1 == yb2, xa1 >= xa2),
        _imp(ya1 == ya2, xb2 >= xb1),
        _imp(ya2 == 1, xb1 <= low),
        _imp(yb1 == 1, xa2 <= low),
        _imp(ya2 == yb2 and ya1 == yb1, xa1 >= xb1 and xb2 >= xa2),
    ))


def _xyz(m: StateMatrix, unit: int, interval: int):
    return tuple(m.entry(unit, interval, q) for q in range(3))


def _sc_ok(m: StateMatrix) -> bool:
    (xa1, ya1, za1), (xb1, yb1, zb1) = _xyz(m, 0, 0), _xyz(m, 1, 0)
    (xa2, ya2, za2), (xb2, yb2, zb2) = _xyz(m, 0, 1), _xyz(m, 1, 1)
    if not (_interval_ok((xa1, ya1, za1), (xb1, yb1, zb1)) and _interval_ok((xa2, ya2, za2), (xb2, yb2, zb2))):
        return False
    low = min(m.rows[0] + m.rows[1])
    return all((
        _imp(za1 == 1 and zb2 == 1, xa1 == xb2),
        _imp(za2 == 1 and zb1 == 1, xa2 == xb1),
        _imp(zb1 == zb2, xa1 >= xa2),
        _imp(za1 == za2, xb2 >= xb1),
        _imp(za2 == 1, xb1 <= low),
        _imp(zb1 == 1, xa2 <= low),
        _imp(za2 == zb2 and za1 == zb1, xa1 >= xb1 and xb2 >= xa2),
        za1 > ya1 or zb1 > yb1 or za2 > ya2 or zb2 > yb2,
        (za1 or za2) and (zb1 or zb2),
        _imp(za1 == 1 and zb1 == 1 and ya2 == yb2, zb2 >= za2),
        _imp(za2 == 1 and zb2 == 1 and ya1 == yb1, za1 >= zb1),
        _imp(za2 == 1 and zb1 == 1, zb2 == 1),
        _imp(za1 == zb2 and zb1 == za2 and xa1 == xb2, ya2 == yb1),
    ))


def _lm_normal_ok(m: StateMatrix) -> bool:
    """Constraints for a LONG MAIN matrix whose first interval carries the long tail."""
    (xa1, ya1, wa1), (xb1, yb1, wb1) = _xyz(m, 0, 0), _xyz(m, 1, 0)
    (xa2, ya2, wa2), (xb2, yb2, wb2) = _xyz(m, 0, 1), _xyz(m, 1, 1)
    if wa1 != wb1 or wa2 != wb2 or wa1 != 1:
        return False
    if not (_main_ok(xa1, ya1, xb1, yb1) and _main_ok(xa2, ya2, xb2, yb2)):
        return False
    if not (ya1 == 1 and yb1 == 1):
        return False
    if wa2 == 1 and not (ya2 == 1 and yb2 == 1):
        return False
    return all((
        xa2 <= xb2,
        _imp(wa2 == 1, xa2 == xb1 and xb2 == xa1 and ya2 == yb1 and yb2 == ya1),
        xa2 <= xb1 and xb2 <= xa1,
        _imp(wa2 == 0 and ya2 == 0 and yb2 == 0, xa1 >= xb1),
    ))


def _lm_ok(m: StateMatrix) -> bool:
    return _lm_normal_ok(m) or _lm_normal_ok(conjugate(m))


def _sd_ok(m: StateMatrix) -> bool:
    """Short-delay forms: A takes its own tone, B its own, and the cross responses agree under the swap."""
    a1, b1 = _xyz(m, 0, 0), _xyz(m, 1, 0)
    a2, b2 = _xyz(m, 0, 1), _xyz(m, 1, 1)
    if not (_interval_ok(a1, b1) and _interval_ok(a2, b2)):
        return False
    if a1 != (1, 1, 1) or b2 != (1, 1, 1):
        return False
    return _imp(a2[2] == b1[2], a2 == b1)


def _mixed_ok(m: StateMatrix) -> bool:
    """LONG first interval, SHORT second: per-interval validity plus the ordering properties."""
    e = m.entry
    blocks = [[tuple(e(u, i, q) for q in range(4)) for u in (0, 1)] for i in (0, 1)]
    for (a, b) in blocks:
        if not (_interval_ok(a[:3], b[:3]) and a[3] == b[3]):
            return False
        if a[3] and not (a[2] and b[2]):
            return False
    (xa1, ya1, za1, w1), (xb1, yb1, zb1, _) = blocks[0]
    (xa2, ya2, za2, w2), (xb2, yb2, zb2, _) = blocks[1]
    return w1 == 1 and all((
        _imp(w2 == 0, xa2 <= xb1 and xb2 <= xa1),
        _imp(w2 == 1, (xa2, ya2, za2) == (xb1, yb1, zb1) and (xb2, yb2, zb2) == (xa1, ya1, za1)),
    ))


FILTERS: dict[str, Callable[[StateMatrix], bool]] = {
    "SM": _sm_ok, "SC": _sc_ok, "LM": _lm_ok, "SD": _sd_ok, "mixed": _mixed_ok,
}


def is_valid(m: StateMatrix) -> bool:
    return FILTERS[m.kind](m)


def enumerate_valid_matrices(kind: str) -> set[StateMatrix]:
    """Brute force over every binary matrix of the kind's shape."""
    if kind not in ("SM", "SC", "LM", "SD"):
        raise ValueError(f"unknown kind {kind!r}")
    width = 2 * BLOCK[kind]
    out = set()
    for bits in itertools.product((0, 1), repeat=2 * width):
        m = StateMatrix(kind, (tuple(bits[:width]), tuple(bits[width:])))
        if FILTERS[kind](m):
            out.add(m)
    return out


def conjugacy_classes(mats: Iterable[StateMatrix]) -> set[frozenset[StateMatrix]]:
    return {frozenset({m, conjugate(m)}) for m in mats}


# ---- condition tables -------------------------------------------------------

Cond = tuple[str, str]  # (quantity, ">=" or "<")
Predicate = Callable[[Mapping[str, np.ndarray], float], np.ndarray]


def _parse(spec: str) -> tuple[Cond, ...]:
    out = []
    for tok in spec.split():
        if ">=" in tok:
            q, _ = tok.split(">=")
            out.append((q, ">="))
        else:
            q, _ = tok.split("<")
            out.append((q, "<"))
    return tuple(out)


@dataclass(frozen=True)
class StateEntry:
    name: str
    regime: str
    table: str
    matrix: StateMatrix
    conditions: tuple[Cond, ...]
    guards: tuple[Cond, ...] = ()
    extra: Predicate | None = field(default=None, compare=False)

    @property
    def percept(self) -> str | None:
        return percept_of(self.matrix)

    @property
    def symmetric(self) -> bool:
        return conjugate(self.matrix) == self.matrix

    def holds(self, v: Mapping[str, np.ndarray], theta: float) -> np.ndarray:
        ok = np.ones(np.shape(v["P"]), dtype=bool)
        for q, op in self.conditions + self.guards:
            ok &= (v[q] >= theta) if op == ">=" else (v[q] < theta)
        if self.extra is not None:
            ok &= self.extra(v, theta)
        return ok

    def quantities(self) -> list[str]:
        return [q for q, _ in self.conditions + self.guards]


@dataclass(frozen=True)
class StateLabel:
    name: str
    regime: str
    percept: str | None
    symmetric: bool

    @property
    def has_conjugate(self) -> bool:
        return not self.symmetric


def _entry(name, regime, table, kind, rows, conds, guards="", extra=None):
    a, b = rows.split("/")
    return StateEntry(name, regime, table, StateMatrix.parse(kind, a, b), _parse(conds), _parse(guards), extra)


def _zcas_extra(v, theta):
    big_k = v["K"] > theta
    first = (v["C3-"] < theta) & (v["C3+"] >= theta) & (v["C2+"] >= theta) & (v["C5+"] < theta)
    second = (v["C8-"] < theta) & (v["C8+"] >= theta) & (v["C3+"] >= theta) & (v["C5+"] < theta)
    return np.where(big_k, first, second)


def _long_connect_common(v, theta):
    return (v["C3-"] < theta) & (v["C10"] >= theta) & (v["_D_le_2TD"] > 0)


def _scasl2_extra(v, theta):
    lw, kw = v["L"], v["onset_decay"]
    a_cd = v["_a"] + v["_d"]
    return (_long_connect_common(v, theta)
            & (v["_d"] < theta - v["_b"] * v["_cross_decay"])
            & (a_cd - lw * v["_c"] >= (1 - lw) * theta)
            & (a_cd - kw * v["_c"] < (1 - kw) * theta))


def _zcil_extra(v, theta):
    kw = v["onset_decay"]
    return (_long_connect_common(v, theta)
            & (v["_a"] - kw * v["_c"] + v["_d"] >= (1 - kw) * theta)
            & (v["_a"] - kw * v["_c"] < (1 - kw) * theta))


LONG_TABLES: tuple[StateEntry, ...] = (
    # SHORT MAIN
    _entry("S", "long", "SM", "SM", "1100/0000", "C1<t C2+<t C3+<t"),
    _entry("SB", "long", "SM", "SM", "1100/1100", "C3+<t C8->=t", "C9<t"),
    _entry("SD", "long", "SM", "SM", "1100/0100", "C4->=t C2->=t C3+<t C8-<t", "C9<t"),
    _entry("AP", "long", "SM", "SM", "1100/0011", "C2+<t C3->=t"),
    _entry("AS", "long", "SM", "SM", "1111/0011", "C3->=t C5+<t C8->=t", "C10<t"),
    _entry("ASD", "long", "SM", "SM", "1101/0011", "C2->=t C3->=t C5+<t C8-<t", "C10<t"),
    _entry("I", "long", "SM", "SM", "1111/0000", "C1>=t C6+<t"),
    _entry("ID", "long", "SM", "SM", "1101/0111", "C3->=t C5->=t C7-<t", "C10<t"),
    _entry("IB", "long", "SM", "SM", "1111/1111", "C7->=t", "C10<t"),
    # SHORT CONNECT
    _entry("ZcS", "long", "SC", "SC", "001000/001000", "C4-<t C4+>=t C2+>=t", "C9<t"),
    _entry("ZcAP", "long", "SC", "SC", "001000/000001", "C2+<t C3-<t C3+>=t"),
    _entry("ZcAS", "long", "SC", "SC", "001001/000001", "", "C10<t", _zcas_extra),
    _entry("ZcI", "long", "SC", "SC", "001001/001001", "C3-<t C3+>=t C5+>=t", "C10<t"),
    _entry("ScAS", "long", "SC", "SC", "001111/000001", "C3+>=t C5+<t C8->=t C6-<t", "C10<t"),
    _entry("SDcAS", "long", "SC", "SC", "001111/000011", "C3-<t C3+>=t C5+<t C8->=t C6->=t", "C10<t"),
    _entry("ScSD", "long", "SC", "SC", "111000/001000", "C4->=t C2-<t C2+>=t C3+<t", "C9<t"),
    _entry("APcAS", "long", "SC", "SC", "111001/000111", "C3->=t C5+<t C2-<t C2+>=t", "C10<t"),
    _entry("APcI", "long", "SC", "SC", "111001/001111", "C3->=t C5-<t C5+>=t", "C10<t"),
    # LONG MAIN
    _entry("IL1", "long", "LM", "LM", "111111/111111", "D7->=t", "D10>=t"),
    _entry("IL2", "long", "LM", "LM", "111110/111110", "D7->=t", "D10<t C10>=t"),
    _entry("ASDL1", "long", "LM", "LM", "111010/111110", "D7-<t D5->=t D3->=t", "D10<t C10>=t"),
    _entry("ASL", "long", "LM", "LM", "111000/111110", "D3->=t D5+<t D8->=t", "C10>=t"),
    _entry("SL", "long", "LM", "LM", "111000/111000", "D3+<t D8->=t", "D9>=t"),
    _entry("IDL1", "long", "LM", "LM", "111011/011111", "D3->=t D7-<t D5->=t", "D10>=t"),
    _entry("IDL2", "long", "LM", "LM", "111010/011110", "D3->=t C7-<t D5->=t", "D10<t C10>=t"),
    _entry("ASDL2", "long", "LM", "LM", "111000/011110", "D3->=t D5->=t D8-<t D2->=t", "C10>=t"),
    _entry("SDL", "long", "LM", "LM", "111000/011000", "D4->=t D8-<t D2->=t D3+<t", "D9>=t"),
    # LONG MAIN then SHORT CONNECT
    _entry("AScIL", "long", "LM|SC", "mixed", "11110010/11111110", "D3->=t C7->=t D5-<t D2+>=t", "D10<t C10>=t"),
    _entry("ScASL", "long", "LM|SC", "mixed", "11110000/11110010", "C3->=t D5+<t D3-<t D3+>=t D8->=t", "C10>=t"),
    _entry("ScIL", "long", "LM|SC", "mixed", "11110010/11110010", "C3->=t D5+>=t D3-<t D3+>=t D7->=t", "D10<t C10>=t"),
    _entry("AScIDL", "long", "LM|SC", "mixed", "11110010/01111110", "D3->=t D5-<t D5+>=t C5->=t D7-<t", "D10<t C10>=t"),
    _entry("ScASDL", "long", "LM|SC", "mixed", "11110000/01110010", "C3->=t D5+<t D3-<t D3+>=t D8-<t D2->=t", "C10>=t"),
    _entry("ScIDL", "long", "LM|SC", "mixed", "11110010/01110010", "C3->=t D5+>=t D3-<t D3+>=t D7-<t C5->=t", "D10<t C10>=t"),
    _entry("ScASDL2", "long", "LM|SC", "mixed", "01110000/11110010", "C3-<t C6->=t D3+>=t D5+<t D8->=t", "C10>=t"),
    # LONG CONNECT first interval
    _entry("ScASDL3", "long", "LC", "mixed", "11110010/00110010", "C3->=t D3-<t D3+>=t D5-<t D5+>=t", "D10<t C10>=t"),
    _entry("APcIDL", "long", "LC", "mixed", "11110010/00111110", "D3->=t C5-<t D5+>=t", "D10<t C10>=t"),
    _entry("ScSDL", "long", "LC", "mixed", "11110000/00110000", "D3+<t D4->=t D2-<t D2+>=t", "D9>=t"),
    _entry("APcIL", "long", "LC", "mixed", "11110011/00111111", "D3->=t D5-<t D5+>=t", "D10>=t"),
    _entry("ScASDL4", "long", "LC", "mixed", "00110000/11110010", "C6-<t D6+>=t D5+<t D8->=t", "C10>=t"),
    _entry("ScASL2", "long", "LC", "mixed", "00110000/00110010", "", "", _scasl2_extra),
    _entry("ZcIL", "long", "LC", "mixed", "00110010/00110010", "", "", _zcil_extra),
)

# States that need an instantaneous fast transition; never returned.
DEGENERATE: dict[str, StateMatrix] = {
    "ScASL2*": StateMatrix.parse("mixed", "00110000", "00110010"),
    "ZcIL2": StateMatrix.parse("mixed", "00110011", "00110011"),
    "ZcSL": StateMatrix.parse("mixed", "00110000", "00110000"),
}


def _ascI_extra(v, theta):
    # the late B onset in the first interval must end before the next tone
    base = v["_a"] + v["_d"] - theta
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = v["_TR"] - v["_D"] + v["_tau_i"] * np.log(base / v["_b"])
    t_star = np.where(base > 0, t_star, -np.inf)
    return t_star + v["_D"] < v["_TR"]


SHORT_TABLES: tuple[StateEntry, ...] = (
    _entry("I", "short", "T6", "SD", "111111/111111", "P>=t C7->=t"),
    _entry("ID", "short", "T6", "SD", "111011/011111", "P>=t C7-<t"),
    _entry("IS", "short", "T7", "SD", "111111/111111", "P<t R7->=t"),
    _entry("IDS", "short", "T7", "SD", "111011/011111", "P<t R7-<t R6->=t"),
    _entry("AS", "short", "T7", "SD", "111000/111111", "P<t C5+<t C8->=t"),
    _entry("ASD", "short", "T7", "SD", "111000/011111", "P<t C5+<t C8-<t C2->=t"),
    _entry("AP", "short", "T7", "SD", "111000/000111", "P<t C2+<t"),
    _entry("APcAS", "short", "T7", "SD", "111000/001111", "P<t C2-<t C2+>=t"),
    _entry("AScI", "short", "T7", "SD", "111001/001111", "P<t R6-<t C5+>=t", "", _ascI_extra),
)

REGISTRY: dict[tuple[str, str], StateEntry] = {(e.regime, e.name): e for e in LONG_TABLES + SHORT_TABLES}


def _label(e: StateEntry) -> StateLabel:
    return StateLabel(e.name, e.regime, e.percept, e.symmetric)


def lookup(name: str, regime: str | None = None) -> StateEntry:
    if regime is not None:
        key = (regime, name)
        if key not in REGISTRY:
            raise KeyError(f"unknown state {name!r} in {regime}-delay tables")
        return REGISTRY[key]
    if ("long", name) in REGISTRY:
        return REGISTRY[("long", name)]
    if ("short", name) in REGISTRY:
        return REGISTRY[("short", name)]
    raise KeyError(f"unknown state {name!r}")


def matrix_form(label: StateLabel | str, regime: str | None = None) -> StateMatrix:
    """Published matrix of a state; bare names resolve to the long-delay tables first."""
    if isinstance(label, StateLabel):
        return lookup(label.name, label.regime).matrix
    if label in DEGENERATE:
        return DEGENERATE[label]
    return lookup(label, regime).matrix


# ---- evaluation -------------------------------------------------------------


def _augment(v: dict, a, b, c, d, TD, TR, D, tau_i) -> dict:
    v = dict(v)
    v.update(_a=a + 0.0 * v["P"], _b=b + 0.0 * v["P"], _c=c + 0.0 * v["P"], _d=d + 0.0 * v["P"],
             _TR=TR + 0.0 * v["P"], _D=D + 0.0 * v["P"], _tau_i=tau_i + 0.0 * v["P"])
    v["_D_le_2TD"] = (np.asarray(D) <= 2 * np.asarray(TD)) + 0.0 * v["P"]
    v["_cross_decay"] = np.exp(2 * (D - TR) / tau_i) + 0.0 * v["P"]
    return v


def short_delay_values(a, b, c, d, theta, TD, TR, D, tau_i) -> dict[str, np.ndarray]:
    """Condition values with the overlap substitutions used when ``TD + D >= TR``."""
    v = condition_values(a, b, c, d, theta, TD, TR, D, tau_i)
    overlap = (np.asarray(TD) + D >= TR) & (2 * np.asarray(D) < TR)
    v["C7-"] = np.where(overlap, d - b * 1.0, v["C7-"])
    wide = 2 * np.asarray(D) >= TR
    v["R6-"] = np.where(wide, a - b + d, v["R6-"])
    v["R7-"] = np.where(wide, d - b, v["R7-"])
    return _augment(v, a, b, c, d, TD, TR, D, tau_i)


def long_delay_values(a, b, c, d, theta, TD, TR, D, tau_i) -> dict[str, np.ndarray]:
    v = condition_values(a, b, c, d, theta, TD, TR, D, tau_i)
    return _augment(v, a, b, c, d, TD, TR, D, tau_i)


def short_delay_masks(v: Mapping[str, np.ndarray], theta: float) -> dict[str, np.ndarray]:
    return {e.name: e.holds(v, theta) for e in SHORT_TABLES}


def long_delay_masks(v: Mapping[str, np.ndarray], theta: float) -> dict[str, np.ndarray]:
    return {e.name: e.holds(v, theta) for e in LONG_TABLES}


def _args(p: ModelParams, stim: Stimulus, d: float):
    return p.a, p.b, stim.c, d, p.theta, stim.TD, stim.TR, p.D, p.tau_i


def classify_short_delay(p: ModelParams, stim: Stimulus, d: float) -> StateLabel:
    """The unique state for ``D <= TD`` (tone onsets always switch their own unit ON)."""
    flags = validate_params(p, stim)
    failed = flags.failed("u1", "u2", "u3", "short_delay")
    if failed:
        raise RegimeError(failed)
    masks = short_delay_masks(short_delay_values(*_args(p, stim, d)), p.theta)
    hits = [n for n, ok in masks.items() if bool(ok)]
    if len(hits) != 1:
        raise ClassificationError(f"short-delay tables matched {hits or 'nothing'}")
    return _label(REGISTRY[("short", hits[0])])


def classify_long_delay(p: ModelParams, stim: Stimulus, d: float) -> set[StateLabel]:
    """Every state whose existence conditions hold for ``D > TD``."""
    flags = validate_params(p, stim)
    failed = flags.failed("u1", "u2", "sep_ok")
    if flags.short_delay:
        failed.append("short_delay")
    if failed:
        raise RegimeError(failed)
    masks = long_delay_masks(long_delay_values(*_args(p, stim, d)), p.theta)
    return {_label(REGISTRY[("long", n)]) for n, ok in masks.items() if bool(ok)}


def classify(p: ModelParams, stim: Stimulus, d: float) -> set[StateLabel]:
    if p.D <= stim.TD:
        return {classify_short_delay(p, stim, d)}
    return classify_long_delay(p, stim, d)


ALLOWED_PAIRS = (frozenset({"I", "SB"}), frozenset({"I", "SD"}))


def multistability_pairs(p: ModelParams, stim: Stimulus, d: float) -> set[frozenset[str]]:
    """Pairs of coexisting SHORT MAIN states."""
    names = sorted(lab.name for lab in classify_long_delay(p, stim, d)
                   if REGISTRY[("long", lab.name)].table == "SM")
    return {frozenset(pair) for pair in itertools.combinations(names, 2)}


def degenerate_onset_drift(tau: float, gate_at_onset: float, gate_release: float) -> float:
    """Extra lag per cycle of the onset map for the instantaneous-transition states.

    The follower switches OFF only once the leader's gate climbs from
    ``gate_at_onset`` to ``gate_release``, which takes ``tau * log((1-g0)/(1-g*))``.
    A periodic orbit needs zero drift, which only ``tau = 0`` provides.
    """
    if not 0.0 <= gate_at_onset < gate_release < 1.0:
        raise ValueError("need 0 <= gate_at_onset < gate_release < 1")
    return tau * math.log((1.0 - gate_at_onset) / (1.0 - gate_release))
