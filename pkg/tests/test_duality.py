import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmsdam.duality import (DualityParams, heaviside_contains, indicator_contains,
                            recover_theta, update_alpha, update_beta, yosida_heaviside,
                            yosida_indicator_nonpositive)

MAPS = [(yosida_heaviside, heaviside_contains), (yosida_indicator_nonpositive, indicator_contains)]


def resolvent_heaviside(z, omega, lam):
    """Solve (1 - omega lam) y + lam H(y) = z; H(0) = [0, 1]."""
    c = 1 - omega * lam
    if z < 0:
        return z / c
    if z > lam:
        return (z - lam) / c
    return 0.0


def resolvent_indicator(z, omega, lam):
    c = 1 - omega * lam
    return z / c if z < 0 else 0.0


def test_examples_heaviside():
    assert yosida_heaviside(0.0, 0.5, 1.0) == 0.0
    assert yosida_heaviside(0.5, 0.5, 1.0) == 0.5
    assert yosida_heaviside(2.0, 0.5, 1.0) == 0.0


def test_examples_indicator():
    assert yosida_indicator_nonpositive(0.0, 0.5, 1.0) == 0.0
    assert yosida_indicator_nonpositive(3.0, 0.5, 1.0) == 3.0
    assert yosida_indicator_nonpositive(-2.0, 0.5, 1.0) == 2.0


@pytest.mark.parametrize("G,contains", MAPS)
def test_equivalence_on_grid(G, contains):
    rng = np.random.default_rng(0)
    y = rng.uniform(-2, 2, 1000)
    y[:50] = 0.0
    # z = y + lam u with u = G(z) recovers y = z - lam u, which must satisfy the inclusion
    z = y
    u = G(z, 0.5, 1.0)
    assert np.all(contains(z - 1.0 * u, u, 0.5, atol=1e-14))


def heaviside_selection(y, t):
    """A point of H(y); ``t`` in [0, 1] picks inside the jump at 0."""
    return 0.0 if y < 0 else (1.0 if y > 0 else t)


def indicator_selection(y, t):
    """A point of d I_(-inf, 0](y), or None where the set is empty (y > 0)."""
    return 0.0 if y < 0 else (t if y == 0 else None)


params = dict(omega=st.floats(0.0, 0.9), lam=st.floats(0.05, 1.0))


@settings(max_examples=300, deadline=None)
@given(y=st.one_of(st.just(0.0), st.floats(-2, 2)), t=st.floats(0, 1), **params)
def test_membership_implies_fixed_point(y, t, omega, lam):
    if omega * lam >= 0.95:
        return
    for G, select in ((yosida_heaviside, heaviside_selection),
                      (yosida_indicator_nonpositive, indicator_selection)):
        v = select(y, t)
        if v is None:
            continue
        u = v - omega * y
        assert G(y + lam * u, omega, lam) == pytest.approx(u, rel=1e-12, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(z=st.floats(-5, 5), **params)
def test_fixed_point_implies_membership(z, omega, lam):
    if omega * lam >= 0.95:
        return
    for G, contains in MAPS:
        u = G(z, omega, lam)
        y = z - lam * u
        assert bool(contains(y, u, omega, atol=1e-12))


@pytest.mark.parametrize("G,resolvent", [(yosida_heaviside, resolvent_heaviside),
                                         (yosida_indicator_nonpositive, resolvent_indicator)])
def test_closed_form_matches_resolvent(G, resolvent):
    omega, lam = 0.5, 1.0
    for z in np.linspace(-3, 3, 601):
        expected = (z - resolvent(z, omega, lam)) / lam
        assert abs(G(z, omega, lam) - expected) <= 1e-14


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), omega=st.floats(0.0, 0.9),
       lam=st.floats(0.05, 1.0))
def test_lipschitz(a, b, omega, lam):
    if omega * lam >= 0.95:
        return
    C = max(1 / lam, omega / (1 - omega * lam))
    for G in (yosida_heaviside, yosida_indicator_nonpositive):
        assert abs(G(a, omega, lam) - G(b, omega, lam)) <= C * abs(a - b) * (1 + 1e-12) + 1e-15


def test_branch_monotonicity():
    omega, lam = 0.5, 1.0
    neg = np.linspace(-3, -1e-9, 200)
    mid = np.linspace(0, lam, 200)
    top = np.linspace(lam + 1e-9, 4, 200)
    assert np.all(np.diff(yosida_heaviside(neg, omega, lam)) <= 0)
    assert np.all(np.diff(yosida_heaviside(mid, omega, lam)) >= 0)
    assert np.all(np.diff(yosida_heaviside(top, omega, lam)) <= 0)
    assert np.all(np.diff(yosida_indicator_nonpositive(neg, omega, lam)) <= 0)
    assert np.all(np.diff(yosida_indicator_nonpositive(-neg[::-1], omega, lam)) >= 0)


@pytest.mark.parametrize("omega,lam", [(0.5, 2.0), (1.0, 1.0), (-0.1, 1.0), (0.5, 0.0)])
def test_invalid_parameters(omega, lam):
    with pytest.raises(ValueError):
        yosida_heaviside(0.0, omega, lam)
    with pytest.raises(ValueError):
        yosida_indicator_nonpositive(0.0, omega, lam)
    with pytest.raises(ValueError):
        DualityParams(omega, omega, lam, lam)


def test_update_beta_cases():
    np.testing.assert_array_equal(update_beta(np.ones(5), np.full(5, 0.5), 0.5, 1.0), 0.5)
    np.testing.assert_array_equal(update_beta(np.zeros(5), np.zeros(5), 0.5, 1.0), 0.0)
    rng = np.random.default_rng(2)
    p, b = rng.normal(size=20), rng.normal(size=20)
    perm = rng.permutation(20)
    np.testing.assert_array_equal(update_beta(p, b, 0.5, 1.0)[perm],
                                  update_beta(p[perm], b[perm], 0.5, 1.0))


def test_update_alpha_cases():
    # dry seepage node, p < 0: fixed point alpha = -omega p
    np.testing.assert_allclose(update_alpha(np.full(3, -0.2), np.full(3, 0.1), 0.5, 1.0), 0.1)
    np.testing.assert_array_equal(update_alpha(np.zeros(3), np.zeros(3), 0.5, 1.0), 0.0)
    rng = np.random.default_rng(4)
    p, a = rng.normal(size=10), rng.normal(size=10)
    np.testing.assert_array_equal(update_alpha(p, a, 0.5, 1.0),
                                  yosida_indicator_nonpositive(p + a, 0.5, 1.0))


def test_recover_theta():
    theta, over = recover_theta(np.zeros(4), np.ones(4), 0.5)
    np.testing.assert_array_equal(theta, 1.0)
    assert over == 0.0
    theta, _ = recover_theta(np.ones(4), np.full(4, 0.5), 0.5)
    np.testing.assert_array_equal(theta, 1.0)
    rng = np.random.default_rng(5)
    p, beta = rng.uniform(0, 1, 50), rng.uniform(0, 0.5, 50)
    theta, over = recover_theta(p, beta, 0.5)
    assert over == 0.0
    np.testing.assert_allclose(theta - 0.5 * p, beta, atol=1e-15)
    theta, over = recover_theta(np.array([2.0]), np.array([0.5]), 0.5)
    assert theta[0] == 1.0 and over == pytest.approx(0.5)
