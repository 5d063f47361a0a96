"""Compiled RK4 method-of-steps kernel for the four-variable delayed system."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# layout of the packed parameter vector
A, B, THETA, TAU, TAU_I, SLOPE, C, D_IN, TD, TR, SMOOTH, IN_SLOPE = range(12)
N_PAR = 12


@njit(nogil=True, cache=True)
def _logistic(x):
    return 0.5 * (1.0 + math.tanh(0.5 * x))


@njit(nogil=True, cache=True)
def inputs(par, t):
    two_tr = 2.0 * par[TR]
    ph = t - two_tr * math.floor(t / two_tr)
    if par[SMOOTH] != 0.0:
        w = math.pi / par[TR]
        lam = par[IN_SLOPE]
        s_now = math.sin(w * ph)
        s_back = math.sin(w * (par[TD] - ph))
        own = _logistic(lam * s_now) * _logistic(lam * s_back)
        other = _logistic(-lam * s_now) * _logistic(-lam * s_back)
        return par[C] * own + par[D_IN] * other, par[D_IN] * own + par[C] * other
    eps = 1e-9 * par[TR]  # same round-off slack on every edge as square_input
    if ph <= par[TD] + eps or ph >= two_tr - eps:
        return par[C], par[D_IN]
    if ph >= par[TR] - eps and ph <= par[TR] + par[TD] + eps:
        return par[D_IN], par[C]
    return 0.0, 0.0


@njit(nogil=True, cache=True)
def deriv(par, t, y, del_a, del_b, out):
    i_a, i_b = inputs(par, t)
    lam = par[SLOPE]
    th = par[THETA]
    tau = par[TAU]
    g_a = _logistic(lam * (par[A] * y[1] - par[B] * del_b + i_a - th))
    g_b = _logistic(lam * (par[A] * y[0] - par[B] * del_a + i_b - th))
    out[0] = (-y[0] + g_a) / tau
    out[1] = (-y[1] + g_b) / tau
    out[2] = _logistic(lam * (y[0] - th)) * (1.0 - y[2]) / tau - y[2] / par[TAU_I]
    out[3] = _logistic(lam * (y[1] - th)) * (1.0 - y[3]) / tau - y[3] / par[TAU_I]


@njit(nogil=True, cache=True)
def _herm(ring_s, ring_fl, ring_fr, ns, j, frac, dt, col):
    a = j % ns
    if frac == 0.0:
        return ring_s[a, col]
    b = (j + 1) % ns
    s = frac
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return (h00 * ring_s[a, col] + h10 * dt * ring_fr[a, col]
            + h01 * ring_s[b, col] + h11 * dt * ring_fl[b, col])


@njit(nogil=True, cache=True)
def _offset(delay_steps, shift):
    """Knot index offset and fraction of ``n + shift - delay_steps`` relative to ``n``."""
    q = delay_steps - shift
    iq = math.floor(q)
    fq = q - iq
    if fq == 0.0:
        return -iq, 0.0
    return -iq - 1, 1.0 - fq


@njit(nogil=True, cache=True)
def run(par, dt, t0, n_steps, delay_steps, ring_s, ring_fl, ring_fr, y0, rec_start, out_y, out_f):
    """Advance ``n_steps`` RK4 steps from knot 0 at ``t0``.

    The delay equals ``delay_steps * dt`` (not necessarily whole). ``ring_s``
    holds the gates at knots ``-(ns-1)..0`` in slot ``j mod ns`` with left and
    right derivatives in ``ring_fl``/``ring_fr``; delayed reads are cubic Hermite
    between stored knots. Knots ``n >= rec_start`` go to ``out_y``/``out_f``.
    Returns -1 on success or the index of the first nonfinite step.
    """
    ns = ring_s.shape[0]
    lagged = delay_steps > 0.0
    y = y0.copy()
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    tmp = np.empty(4)
    o0, f0 = _offset(delay_steps, 0.0)
    oh, fh = _offset(delay_steps, 0.5)
    o1, f1 = _offset(delay_steps, 1.0)

    if lagged:
        deriv(par, t0, y, _herm(ring_s, ring_fl, ring_fr, ns, o0, f0, dt, 0),
              _herm(ring_s, ring_fl, ring_fr, ns, o0, f0, dt, 1), k1)
        ring_fr[0, 0] = k1[2]
        ring_fr[0, 1] = k1[3]
    else:
        deriv(par, t0, y, y[2], y[3], k1)
    if rec_start <= 0:
        for q in range(4):
            out_y[0, q] = y[q]
            out_f[0, q] = k1[q]

    half = 0.5 * dt
    for n in range(n_steps):
        t = t0 + n * dt
        if lagged:
            mid_a = _herm(ring_s, ring_fl, ring_fr, ns, n + oh, fh, dt, 0)
            mid_b = _herm(ring_s, ring_fl, ring_fr, ns, n + oh, fh, dt, 1)
            end_a = _herm(ring_s, ring_fl, ring_fr, ns, n + o1, f1, dt, 0)
            end_b = _herm(ring_s, ring_fl, ring_fr, ns, n + o1, f1, dt, 1)
            for q in range(4):
                tmp[q] = y[q] + half * k1[q]
            deriv(par, t + half, tmp, mid_a, mid_b, k2)
            for q in range(4):
                tmp[q] = y[q] + half * k2[q]
            deriv(par, t + half, tmp, mid_a, mid_b, k3)
            for q in range(4):
                tmp[q] = y[q] + dt * k3[q]
            deriv(par, t + dt, tmp, end_a, end_b, k4)
        else:
            for q in range(4):
                tmp[q] = y[q] + half * k1[q]
            deriv(par, t + half, tmp, tmp[2], tmp[3], k2)
            for q in range(4):
                tmp[q] = y[q] + half * k2[q]
            deriv(par, t + half, tmp, tmp[2], tmp[3], k3)
            for q in range(4):
                tmp[q] = y[q] + dt * k3[q]
            deriv(par, t + dt, tmp, tmp[2], tmp[3], k4)
        for q in range(4):
            y[q] = y[q] + dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        if not (math.isfinite(y[0]) and math.isfinite(y[1]) and math.isfinite(y[2]) and math.isfinite(y[3])):
            return n
        t1 = t0 + (n + 1) * dt
        if lagged:
            # the step-end delayed read is exactly the delayed value at knot n+1
            deriv(par, t1, y, end_a, end_b, k1)
            # knot n+1 replaces knot n+1-ns, which is no longer needed
            jw = (n + 1) % ns
            ring_s[jw, 0] = y[2]
            ring_s[jw, 1] = y[3]
            ring_fl[jw, 0] = k1[2]
            ring_fl[jw, 1] = k1[3]
            ring_fr[jw, 0] = k1[2]
            ring_fr[jw, 1] = k1[3]
        else:
            deriv(par, t1, y, y[2], y[3], k1)
        r = n + 1 - rec_start
        if r >= 0:
            for q in range(4):
                out_y[r, q] = y[q]
                out_f[r, q] = k1[q]
    return -1
