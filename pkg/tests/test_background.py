"""Background cosmology: closed forms against an adaptive ODE integration."""

import math

import numpy as np
import pytest

from torusgr.background import (
    CONSTRAINT_CONSISTENT,
    UNHALVED_KINETIC,
    FlrwParams,
    flrw_asymptotic_check,
    flrw_background,
    flrw_limits,
)

from oracles import flrw_ode

PARAMS = FlrwParams(lambda_=3.0, a0=1.0, psi0=0.0, phi0=3.0)


def test_alpha_conventions():
    # the constraint-consistent convention ties alpha to phi0^2 / (2 Lambda)
    assert PARAMS.alpha == pytest.approx(math.sqrt(9.0 / 6.0 + 1.0), rel=1e-15)
    alt = FlrwParams(3.0, 1.0, 0.0, 3.0, alpha_convention=UNHALVED_KINETIC)
    assert alt.alpha == pytest.approx(math.sqrt(9.0 / 3.0 + 1.0), rel=1e-15)
    assert PARAMS.hubble == pytest.approx(1.0, rel=1e-15)


def test_parameter_validation():
    with pytest.raises(ValueError):
        FlrwParams(lambda_=0.0, a0=1.0, psi0=0.0, phi0=3.0)
    with pytest.raises(ValueError):
        FlrwParams(lambda_=3.0, a0=-1.0, psi0=0.0, phi0=3.0)
    with pytest.raises(ValueError):
        FlrwParams(3.0, 1.0, 0.0, 3.0, alpha_convention="bogus")
    with pytest.raises(ValueError):
        flrw_background(PARAMS, -0.5)


def test_background_matches_adaptive_ode():
    """Closed-form a, phi, psi, trk vs a direct Friedmann integration."""
    times = [0.0, 0.3, 1.0, 2.5, 5.0]
    ode = flrw_ode(3.0, 1.0, 0.0, 3.0, times)
    for i, t in enumerate(times):
        bg = flrw_background(PARAMS, t)
        assert bg.a == pytest.approx(ode["a"][i], rel=1e-10)
        assert bg.phi == pytest.approx(ode["phi"][i], rel=1e-9, abs=1e-12)
        assert bg.psi == pytest.approx(ode["psi"][i], rel=1e-9, abs=1e-11)
        assert bg.trk == pytest.approx(ode["trk"][i], rel=1e-10)


def test_background_identities():
    """Derivative fields agree with finite differences of the values."""
    eps = 1e-6
    for t in (0.5, 0.7, 2.0):
        bg = flrw_background(PARAMS, t)
        bgp = flrw_background(PARAMS, t + eps)
        bgm = flrw_background(PARAMS, t - eps)
        dt = bgp.t - bgm.t
        assert (bgp.a - bgm.a) / dt == pytest.approx(bg.a_dot, rel=1e-7)
        assert (bgp.trk - bgm.trk) / dt == pytest.approx(bg.trk_dot, rel=1e-6)
        assert (bgp.phi - bgm.phi) / dt == pytest.approx(bg.phi_dot, rel=1e-6)
        assert (bgp.frame_coef - bgm.frame_coef) / dt == pytest.approx(
            bg.frame_coef_dot, rel=1e-6
        )
        # stiff-fluid Friedmann identity: (2/3) trk^2 = 2 Lambda + phi^2
        assert (2.0 / 3.0) * bg.trk**2 - bg.phi**2 == pytest.approx(
            2.0 * PARAMS.lambda_, rel=1e-14
        )
        assert bg.frame_coef == pytest.approx(1.0 / bg.a, rel=1e-14)


def test_vacuum_is_exact_exponential():
    vac = FlrwParams(lambda_=3.0, a0=2.0, psi0=0.5, phi0=0.0)
    for t in (0.0, 1.0, 4.0):
        bg = flrw_background(vac, t)
        assert bg.a == pytest.approx(2.0 * math.exp(t), rel=1e-13)
        assert bg.phi == 0.0
        assert bg.psi == 0.5


def test_limits_against_tail_integration():
    lim = flrw_limits(PARAMS)
    alpha = PARAMS.alpha
    assert lim.a_inf_coef == pytest.approx(((alpha + 1.0) / 2.0) ** (1.0 / 3.0), rel=1e-13)
    # psi_inf: integrate the scalar to a large but finite time, then bound
    # the remaining tail by the leading e^{-3Ht} term of phi
    big_t = 12.0
    ode = flrw_ode(3.0, 1.0, 0.0, 3.0, [big_t])
    bg_big = flrw_background(PARAMS, big_t)
    tail = bg_big.phi / 3.0  # |integral_T^inf phi dt| <= phi(T)/(3H) 1+o(1)
    assert abs(lim.psi_inf - ode["psi"][0]) <= 2.0 * tail + 1e-9
    # the limit is approached monotonically for positive phi0
    assert flrw_background(PARAMS, 8.0).psi < lim.psi_inf


def test_asymptotic_check_decays():
    errs = [flrw_asymptotic_check(PARAMS, t) for t in (2.0, 4.0, 6.0)]
    for (ea1, ep1), (ea2, ep2) in zip(errs, errs[1:]):
        assert ea2 < ea1
        assert ep2 < ep1
    # err_a decays at least e^{-5Ht} net: two units of time shrink it > e^10/2
    assert errs[0][0] / max(errs[1][0], 1e-300) > 0.5 * math.exp(10.0)


def test_background_cache_consistency():
    # repeated evaluation must be deterministic (cached quadrature)
    b1 = flrw_background(PARAMS, 1.2345)
    b2 = flrw_background(PARAMS, 1.2345)
    assert b1 == b2
