import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from streamwave.model import Gain, ModelParams, NetState, ParamError, heaviside_gain, rhs, sigmoid_gain, validate_params
from streamwave.stimulus import Stimulus


@pytest.mark.parametrize("x,out", [(0.5, 1), (0.4999, 0), (-1.0, 0)])
def test_heaviside_examples(x, out):
    assert heaviside_gain(x, 0.5) == out


def test_sigmoid_examples():
    assert sigmoid_gain(0.0, 30) == 0.5
    assert abs(sigmoid_gain(10.0, 30) - 1.0) < 1e-12
    assert abs(sigmoid_gain(0.1, 30) - 1 / (1 + math.exp(-3))) < 1e-12
    assert abs(sigmoid_gain(0.1, 30) - 0.9526) < 1e-4


def test_sigmoid_no_overflow():
    assert sigmoid_gain(-1e6, 1e3) == 0.0
    assert sigmoid_gain(1e6, 1e3) == 1.0


@given(x=st.floats(-5, 5), lam=st.floats(0.1, 1e4))
def test_sigmoid_symmetry(x, lam):
    assert math.isclose(sigmoid_gain(x, lam) + sigmoid_gain(-x, lam), 1.0, abs_tol=1e-12)


def _hv(**kw):
    return ModelParams(**{**dict(a=1.0, b=2.0, theta=0.5, tau=0.025, tau_i=0.2, D=0.01, gain=Gain(None)), **kw})


def test_rhs_quiescent_point():
    assert np.all(rhs((0, 0, 0, 0), (0, 0), (0, 0), _hv()) == 0)


def test_rhs_active_point_when_self_excitation_dominates():
    p = _hv(a=3.0, b=1.0)
    s_eq = p.tau_i / (p.tau + p.tau_i)
    assert np.allclose(rhs((1, 1, s_eq, s_eq), (s_eq, s_eq), (0, 0), p), 0, atol=1e-12)
    assert 1 - s_eq < 0.12  # tends to the all-ones corner as tau shrinks


@pytest.mark.xfail(strict=True, reason="gates saturate at tau_i/(tau+tau_i), not exactly 1")
def test_rhs_all_ones_corner_literal():
    p = _hv(a=3.0, b=1.0)
    assert np.all(rhs((1, 1, 1, 1), (1, 1), (0, 0), p) == 0)


@given(u=st.floats(-0.5, 0.49), s=st.floats(0, 1.1))
def test_gate_decays_while_unit_is_off(u, s):
    d = rhs((u, u, s, s), (0, 0), (0, 0), _hv())
    assert d[2] <= 0 and d[3] <= 0


def test_rhs_jump_up_drive():
    p = _hv()
    du_a = rhs((0, 0, 0, 0.2), (0, 0.2), (5.0, 0.0), p)[0]
    assert du_a == 1 / p.tau


def test_rhs_sigmoid_threshold_shift():
    p = _hv(gain=Gain(30.0))
    # input exactly at threshold gives half the gain
    du = rhs((0, 0, 0, 0), (0, 0), (0.5, 0.0), p)
    assert math.isclose(du[0], 0.5 / p.tau, rel_tol=1e-12)


def test_validate_examples():
    s = Stimulus(TD=0.03, TR=0.2, c=5.0)
    f = validate_params(_hv(), s)
    assert f.u1 and f.u2 and f.u3 and f.short_delay and f.sep_ok
    assert not validate_params(_hv(a=2.0, b=1.0), s).u1
    assert not validate_params(_hv(), Stimulus(TD=0.03, TR=0.2, c=0.4)).u2
    assert validate_params(_hv(D=0.05), s).failed("short_delay") == ["short_delay"]


@pytest.mark.parametrize("kw", [dict(theta=0.0), dict(theta=1.0), dict(tau=0.0), dict(tau_i=-1.0),
                                dict(a=-1.0), dict(D=-0.01)])
def test_param_validation(kw):
    with pytest.raises(ParamError):
        _hv(**kw)


def test_gain_slope_validation():
    with pytest.raises(ParamError):
        Gain(0.0)
    assert Gain().is_heaviside and not Gain(30).is_heaviside


def test_netstate_fields():
    s = NetState(1, 0, 1, 0)
    assert s.u_a == 1 and s.s_b == 0
