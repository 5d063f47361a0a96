import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from streamwave import classifier as cl
from streamwave.model import Gain, ModelParams
from streamwave.stimulus import Stimulus, df_to_d

from conftest import short_params, short_stim


# ---- decay constants ---------------------------------------------------------

def test_constants_example():
    k = cl.synaptic_constants(Stimulus(TD=0.03, TR=0.2), 0.01, 0.2)
    assert math.isclose(k.n_plus, math.exp(-0.95), rel_tol=1e-14)
    assert math.isclose(k.m_plus, math.exp(-1.95), rel_tol=1e-14)
    assert abs(k.n_plus - 0.3867) < 1e-4 and abs(k.m_plus - 0.1423) < 1e-4


def test_constants_collapse_without_delay_or_duration():
    k = cl._constants(0.0, 0.2, 0.0, 0.2)
    assert math.isclose(k["n_minus"], k["n_plus"]) and math.isclose(k["n_plus"], math.exp(-1.0))
    assert math.isclose(k["m_minus"], k["m_plus"]) and math.isclose(k["m_plus"], math.exp(-2.0))


@given(TD=st.floats(1e-3, 0.1), gap=st.floats(1e-4, 0.5), D=st.floats(0, 0.2), tau_i=st.floats(0.01, 2))
def test_constants_ordering(TD, gap, D, tau_i):
    TR = TD + D + gap
    k = cl.synaptic_constants(Stimulus(TD=TD, TR=TR), D, tau_i)
    tol = 1 + 1e-12  # equal exponents may round one ulp apart

    def ge(x, y):
        return x * tol >= y

    assert ge(k.n_minus, k.n_plus) and ge(k.n_plus, k.m_minus) and ge(k.m_minus, k.m_plus)
    if D >= TD:
        assert ge(k.nl_plus, k.n_plus) and ge(k.nl_minus, k.n_minus)
        assert ge(k.ml_plus, k.m_plus) and ge(k.ml_minus, k.m_minus)


def test_constants_as_dict_keys():
    k = cl.synaptic_constants(Stimulus(TD=0.03, TR=0.2), 0.01, 0.2).as_dict()
    assert set(k) == {"N-", "N+", "M-", "M+", "NL-", "NL+", "ML-", "ML+", "R-", "R+"}


# ---- condition values --------------------------------------------------------

def test_anti_phase_condition_value():
    p, s = short_params(), short_stim(20.0, 0.5)
    d = df_to_d(5, 0.5, 6)
    rep = cl.condition_report(p, s, d)
    m_plus = math.exp(-(2 * 0.05 - 0.01) / 0.2)
    assert math.isclose(rep.values["C2+"], 1 - 2 * m_plus + d, rel_tol=1e-12)
    assert abs(rep.values["C2+"] - 0.2702) < 2e-4
    assert rep.lt("C2+")


def test_p_value_and_flags():
    v = cl.condition_values(1.0, 2.0, 5.0, 0.0, 0.5, 0.03, 0.2, 0.01, 0.2)
    assert float(v["P"]) == -1.0
    rep = cl.ConditionReport({k: float(x) for k, x in v.items()}, 0.5)
    assert rep.flags["P"] is False
    assert "P" not in rep.near_ties(0.1)
    assert rep.to_json()["ge_theta"]["C3+"] is True


@given(d1=st.floats(0, 5), d2=st.floats(0, 5))
def test_no_inhibition_values_monotone_in_d(d1, d2):
    lo, hi = sorted((d1, d2))
    v1 = cl.condition_values(1.0, 0.0, 5.0, lo, 0.5, 0.03, 0.2, 0.05, 0.2)
    v2 = cl.condition_values(1.0, 0.0, 5.0, hi, 0.5, 0.03, 0.2, 0.05, 0.2)
    for q in cl.THRESHOLD_QUANTITIES:
        assert v2[q] >= v1[q]
    assert float(v1["C5+"]) == 1.0 + lo and float(v1["C3-"]) == 5.0


def test_report_requires_u1_u2():
    p = ModelParams(a=2.0, b=1.0, theta=0.5, tau=0.001, tau_i=0.2, D=0.01)
    with pytest.raises(cl.RegimeError, match="u1"):
        cl.condition_report(p, short_stim(10.0), 1.0)


def test_vectorized_values_match_scalar():
    rng = np.random.default_rng(3)
    args = [rng.uniform(0.1, 1, 50) for _ in range(9)]
    vec = cl.condition_values(*args)
    for i in (0, 17, 49):
        sc = cl.condition_values(*[a[i] for a in args])
        for q in ("C2+", "D7-", "K", "R6-"):
            assert math.isclose(float(vec[q][i]), float(sc[q]), rel_tol=1e-13)


# ---- short-delay classification ---------------------------------------------

def test_short_anti_phase_example():
    lab = cl.classify_short_delay(short_params(), short_stim(20.0, 0.5), df_to_d(5, 0.5, 6))
    assert lab.name == "AP" and lab.percept == "segregation"


def test_short_integration_example():
    p, s = short_params(), short_stim(5.0, 0.0)
    rep = cl.condition_report(p, s, 5.0)
    assert rep.values["P"] == 4.0
    assert abs(rep.values["C7-"] - (5 - 2 * math.exp(-0.8))) < 1e-12
    assert abs(rep.values["C7-"] - 4.1013) < 1e-4
    lab = cl.classify_short_delay(p, s, 5.0)
    assert lab.name == "I" and lab.percept == "integration"


def test_short_late_onset_state():
    p, s = short_params(), short_stim(3.4, 1.0)
    rep = cl.condition_report(p, s, 0.0)
    v = cl.short_delay_values(1.0, 2.0, 5.0, 0.0, 0.5, s.TD, s.TR, 0.01, 0.2)
    assert float(v["R7-"]) < 0.5 and float(v["R6-"]) < 0.5 and rep.ge("C5+")
    assert cl.classify_short_delay(p, s, 0.0).name == "AScI"


def test_short_regime_error_names_flag():
    p = short_params(D=0.05)
    with pytest.raises(cl.RegimeError, match="short_delay"):
        cl.classify_short_delay(p, short_stim(5.0), 1.0)
    with pytest.raises(cl.RegimeError, match="u3"):
        cl.classify_short_delay(short_params(b=4.8), short_stim(5.0), 1.0)


def test_short_partition_on_grid():
    p = short_params()
    for pr in np.linspace(2, 30, 57):
        for df in np.linspace(0, 1, 41):
            s = short_stim(float(pr), float(df))
            v = cl.short_delay_values(p.a, p.b, s.c, s.d, p.theta, s.TD, s.TR, p.D, p.tau_i)
            hits = [n for n, ok in cl.short_delay_masks(v, p.theta).items() if ok]
            assert len(hits) == 1, (pr, df, hits)


def test_overlap_substitution_replaces_decay_by_one():
    # TD + D >= TR with 2D < TR: the one-tone-back decay becomes 1
    v = cl.short_delay_values(1.0, 2.0, 5.0, 3.0, 0.5, 0.04, 0.05, 0.02, 0.2)
    assert math.isclose(float(v["C7-"]), 3.0 - 2.0)
    # 2D >= TR: the short-delay decay becomes 1 as well
    v = cl.short_delay_values(1.0, 2.0, 5.0, 3.0, 0.5, 0.04, 0.05, 0.03, 0.2)
    assert math.isclose(float(v["R6-"]), 1.0 - 2.0 + 3.0) and math.isclose(float(v["R7-"]), 1.0)


# ---- long-delay classification ----------------------------------------------

FIG5C = dict(a=0.4, b=3.0, theta=0.5, tau=0.001, tau_i=0.4, D=0.015, gain=Gain(None))


def _long(c, df):
    s = Stimulus.from_pr(0.005, 5.0, c=c, df=df, m=6)
    return ModelParams(**FIG5C), s, df_to_d(c, df, 6)


def test_long_single_segregated_state():
    p, s, d = _long(1.0, 1.0)
    rep = cl.condition_report(p, s, d)
    assert rep.lt("C1") and rep.lt("C2+") and rep.lt("C3+")
    assert {x.name for x in cl.classify_long_delay(p, s, d)} == {"S"}


def test_long_coexistence_scan():
    p, s, d = _long(1.8, 0.0)
    assert {"I", "SB"} <= {x.name for x in cl.classify_long_delay(p, s, d)}
    assert cl.multistability_pairs(p, s, d) == {frozenset({"I", "SB"})}


def test_long_only_anti_phase_has_no_pairs():
    p, s, d = _long(4.0, 1.0)
    assert {x.name for x in cl.classify_long_delay(p, s, d)} == {"AP"}
    assert cl.multistability_pairs(p, s, d) == set()


def test_long_regime_checks():
    p, s, d = _long(1.8, 0.0)
    with pytest.raises(cl.RegimeError, match="short_delay"):
        cl.classify_long_delay(ModelParams(**{**FIG5C, "D": 0.004}), s, d)
    with pytest.raises(cl.RegimeError, match="sep_ok"):
        cl.classify_long_delay(ModelParams(**{**FIG5C, "D": 0.2}), s, d)


def test_classify_dispatches_on_delay():
    assert {x.regime for x in cl.classify(short_params(), short_stim(5.0), 5.0)} == {"short"}
    p, s, d = _long(1.0, 1.0)
    assert {x.regime for x in cl.classify(p, s, d)} == {"long"}


def test_k_switches_connect_branches():
    v = cl.condition_values(1.0, 2.0, 5.0, 0.2, 0.5, 0.02, 0.1, 0.03, 0.25)
    assert math.isclose(float(v["K"]), 5.0 - (0.2 - 0.5) * math.exp(0.1 / 0.25))


# ---- matrices ------------------------------------------------------------------

@pytest.mark.parametrize("name,a,b", [("AP", "1100", "0011"), ("IB", "1111", "1111"), ("APcAS", "111001", "000111")])
def test_matrix_form_examples(name, a, b):
    m = cl.matrix_form(name)
    assert "".join(map(str, m.rows[0])) == a and "".join(map(str, m.rows[1])) == b


def test_matrix_form_unknown():
    with pytest.raises(KeyError):
        cl.matrix_form("XYZ")
    with pytest.raises(KeyError):
        cl.lookup("IS", "long")


def test_every_table_matrix_passes_filters():
    for e in cl.LONG_TABLES + cl.SHORT_TABLES:
        assert cl.is_valid(e.matrix), e.name


def test_conjugate_examples():
    ap = cl.matrix_form("AP")
    assert cl.conjugate(ap) == ap
    s = cl.StateMatrix.parse("SM", "1100", "0000")
    assert cl.conjugate(s) == cl.StateMatrix.parse("SM", "0000", "0011")


@pytest.mark.parametrize("kind", ["SM", "SC", "LM", "SD"])
def test_conjugate_is_involution_and_preserves_validity(kind):
    for m in cl.enumerate_valid_matrices(kind):
        assert cl.conjugate(cl.conjugate(m)) == m
        assert cl.is_valid(cl.conjugate(m))


def test_short_main_symmetric_states():
    sym = {e.name for e in cl.LONG_TABLES if e.table == "SM" and e.symmetric}
    assert sym == {"AP", "ID", "IB"}


@pytest.mark.parametrize("name,percept", [("I", "integration"), ("IB", "integration"), ("AP", "segregation"),
                                          ("S", "segregation"), ("AS", "bistability"), ("APcAS", "bistability")])
def test_percepts(name, percept):
    assert cl.lookup(name).percept == percept


def test_label_conjugate_flag():
    lab = cl.classify_short_delay(short_params(), short_stim(20.0, 0.5), df_to_d(5, 0.5, 6))
    assert lab.symmetric and not lab.has_conjugate


def test_degenerate_states_are_never_registered():
    for name in cl.DEGENERATE:
        assert ("long", name) not in cl.REGISTRY and ("short", name) not in cl.REGISTRY
        assert cl.matrix_form(name) is cl.DEGENERATE[name]


@given(tau=st.floats(1e-6, 0.1), g0=st.floats(0, 0.5), g1=st.floats(0.51, 0.99))
def test_degenerate_drift_positive_for_finite_tau(tau, g0, g1):
    assert cl.degenerate_onset_drift(tau, g0, g1) > 0
    assert cl.degenerate_onset_drift(0.0, g0, g1) == 0.0


# ---- enumeration against an independent block-composition oracle ------------

_MAIN_BLOCKS = {"M1": ((1, 1), (1, 1)), "M2": ((1, 1), (0, 1)), "M3": ((0, 1), (1, 1)),
                "M4": ((1, 1), (0, 0)), "M5": ((0, 0), (1, 1)), "M6": ((0, 0), (0, 0))}
_CONNECT_BLOCKS = {"C1": ((1, 1, 1), (0, 0, 1)), "C2": ((0, 0, 1), (1, 1, 1)), "C3": ((0, 0, 0), (0, 0, 1)),
                   "C4": ((0, 0, 1), (0, 0, 0)), "C5": ((0, 0, 1), (0, 0, 1))}


def _sc_conditions(W1, W2, corrected=True):
    xA1, yA1, zA1 = W1[0]
    xB1, yB1, zB1 = W1[1]
    xA2, yA2, zA2 = W2[0]
    xB2, yB2, zB2 = W2[1]
    lo = min(W1[0] + W1[1] + W2[0] + W2[1])

    def imp(p, q):
        return (not p) or q

    return all([
        imp(zA1 and zB2, xA1 == xB2),
        imp(zA2 and (zB1 if corrected else zB2), xA2 == xB1),
        imp(zB1 == zB2, xA1 >= xA2),
        imp(zA1 == zA2, xB2 >= xB1),
        imp(zA2, xB1 <= lo),
        imp(zB1, xA2 <= lo),
        imp(zA2 == zB2 and zA1 == (zB1 if corrected else zB2), xA1 >= xB1 and xB2 >= xA2),
        any(W[r][2] > W[r][1] for W in (W1, W2) for r in (0, 1)),
        (zA1 or zA2) and (zB1 or zB2),
        imp(zA1 and zB1 and yA2 == yB2, zB2 >= zA2),
        imp(zA2 and zB2 and yA1 == yB1, zA1 >= zB1),
        imp(zA2 and zB1, zB2 == 1),
        imp(zA1 == zB2 and zB1 == zA2 and xA1 == xB2, yA2 == yB1),
    ])


def _oracle_sc(corrected=True):
    blocks = {k: (v[0] + (v[0][1],), v[1] + (v[1][1],)) for k, v in _MAIN_BLOCKS.items()}
    blocks.update(_CONNECT_BLOCKS)
    out = set()
    for W1, W2 in itertools.product(blocks.values(), repeat=2):
        if _sc_conditions(W1, W2, corrected):
            out.add(cl.StateMatrix("SC", (W1[0] + W2[0], W1[1] + W2[1])))
    return out


def test_short_connect_enumeration_matches_oracle():
    assert cl.enumerate_valid_matrices("SC") == _oracle_sc()


def test_literal_connect_conditions_give_fourteen():
    lit = _oracle_sc(corrected=False)
    assert len(lit) == 14 and len(cl.conjugacy_classes(lit)) == 10


def test_short_main_enumeration_matches_table():
    table = {e.matrix for e in cl.LONG_TABLES if e.table == "SM"}
    table |= {cl.conjugate(m) for m in table}
    assert cl.enumerate_valid_matrices("SM") == table


def test_long_main_enumeration_covers_table():
    table = {e.matrix for e in cl.LONG_TABLES if e.table == "LM"}
    found = cl.enumerate_valid_matrices("LM")
    assert table | {cl.conjugate(m) for m in table} <= found | {cl.conjugate(m) for m in found}


def test_enumerate_unknown_kind():
    with pytest.raises(ValueError):
        cl.enumerate_valid_matrices("XX")
