import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wallforge import model
from wallforge.errors import InvalidParams, WrongRegime
from wallforge.model import Params, Regime

alphas = st.floats(0.05, 20.0)
ratios = st.floats(1e-3, 0.499)


def wall_params(alpha, ratio):
    return Params(alpha, alpha * ratio)


def test_frozen_values_alpha2_omega_half():
    p = Params(2.0, 0.5)
    eq = model.equilibria(p)
    assert eq.a == pytest.approx(0.2588190451025208, abs=1e-15)
    assert eq.b == pytest.approx(0.9659258262890683, abs=1e-15)
    assert eq.c == pytest.approx(math.sqrt(1.5 / 4.0), abs=1e-15)
    assert model.rhs(p, 1.0, 1.0) == pytest.approx((2.5, 2.5))
    assert model.hamiltonian(p, eq.c, eq.c, 0.0, 0.0) == pytest.approx(-0.03125, abs=1e-15)


def test_jacobian_at_symmetric_state_has_eigenvalue_two_one_plus_omega():
    p = Params(2.0, 0.5)
    c = model.equilibria(p).c
    ev = np.linalg.eigvalsh(model.jacobian(p, c, c))
    assert np.min(np.abs(ev - 2.0 * (1.0 + p.omega))) < 1e-12


@pytest.mark.parametrize(
    "alpha, omega",
    [(0.0, 0.1), (-1.0, 0.1), (1.0, -0.1), (math.nan, 0.1), (1.0, math.inf)],
)
def test_invalid_params(alpha, omega):
    with pytest.raises(InvalidParams):
        Params(alpha, omega)
    with pytest.raises(ValueError):
        Params(alpha, omega)


@pytest.mark.parametrize(
    "alpha, omega, regime",
    [
        (2.0, 0.5, Regime.HETEROCLINIC),
        (4.0, 0.0, Regime.OMEGA_ZERO),
        (1.0, 0.5, Regime.CONSTANT_ONLY),
        (1.0, 1.0, Regime.CONSTANT_ONLY),
        (0.5, 0.2499, Regime.HETEROCLINIC),
    ],
)
def test_regime(alpha, omega, regime):
    assert Params(alpha, omega).regime is regime


def test_no_pair_above_half():
    eq = model.equilibria(Params(1.0, 1.0))
    assert not eq.has_pair
    assert eq.c == pytest.approx(math.sqrt(2.0 / 3.0))


def test_degenerate_half_ratio():
    eq = model.equilibria(Params(1.0, 0.5))
    assert eq.a == eq.b == pytest.approx(math.sqrt(0.5))


def test_linear_data_regimes():
    with pytest.raises(WrongRegime):
        model.linear_data(Params(1.0, 1.0))
    assert model.linear_data(Params(4.0, 0.0)).mu is None


@pytest.mark.parametrize("omega", [0.05, 0.3, 0.5, 0.8, 0.95])
def test_alpha2_slow_rate_closed_form(omega):
    # at alpha = 2, u - v solves a scalar equation with slow rate sqrt(2 (1 - omega))
    lam_m, _ = model.decay_exponents(Params(2.0, omega))
    assert lam_m == pytest.approx(math.sqrt(2.0 * (1.0 - omega)), rel=1e-13)
    assert model.eigen_ratio(Params(2.0, omega)) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
def test_omega_zero_rates(alpha):
    lam_m, lam_p = model.decay_exponents(Params(alpha, 0.0))
    assert lam_m == pytest.approx(math.sqrt(min(alpha, 2.0)))
    assert lam_p == pytest.approx(math.sqrt(max(alpha, 2.0)))


@settings(max_examples=200, deadline=None)
@given(alphas, ratios)
def test_equilibria_are_zeros_of_rhs(alpha, ratio):
    p = wall_params(alpha, ratio)
    eq = model.equilibria(p)
    assert eq.a ** 2 + eq.b ** 2 == pytest.approx(1.0, abs=1e-12)
    assert eq.a * eq.b == pytest.approx(p.ratio, abs=1e-12)
    assert 0 < eq.a < eq.b
    for u, v in ((eq.a, eq.b), (eq.b, eq.a), (eq.c, eq.c)):
        assert np.allclose(model.rhs(p, u, v), 0.0, atol=1e-12)
    assert model.potential(p, eq.a, eq.b) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(alphas, ratios)
def test_linearization_matches_closed_forms(alpha, ratio):
    p = wall_params(alpha, ratio)
    ld = model.linear_data(p)
    eq = model.equilibria(p)
    # in the deviation coordinates (b - u, v - a) the Jacobian at (b, a) flips
    # the sign of its off-diagonal entry
    flip = np.diag([1.0, -1.0])
    assert np.allclose(ld.matrix, flip @ model.jacobian(p, eq.b, eq.a) @ flip, atol=1e-12)
    w, vecs = np.linalg.eigh(ld.matrix)
    assert w[0] == pytest.approx(ld.lambda_minus ** 2, abs=1e-10)
    assert w[1] == pytest.approx(ld.lambda_plus ** 2, abs=1e-10)
    slow = vecs[:, 0]
    assert slow[1] / slow[0] == pytest.approx(ld.mu, rel=1e-9, abs=1e-10)
    assert ld.mu > 0


@settings(max_examples=100, deadline=None)
@given(alphas, st.floats(0.0, 2.0), st.floats(0.0, 1.5), st.floats(0.0, 1.5))
def test_jacobian_matches_finite_differences(alpha, omega, u, v):
    p = Params(alpha, omega)
    eps = 1e-6
    fu_p, fu_m = np.array(model.rhs(p, u + eps, v)), np.array(model.rhs(p, u - eps, v))
    fv_p, fv_m = np.array(model.rhs(p, u, v + eps)), np.array(model.rhs(p, u, v - eps))
    fd = np.column_stack([(fu_p - fu_m) / (2 * eps), (fv_p - fv_m) / (2 * eps)])
    assert np.allclose(model.jacobian(p, u, v), fd, atol=1e-6 * (1 + alpha))


@settings(max_examples=100, deadline=None)
@given(alphas, st.floats(0.0, 2.0), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_rhs_is_gradient_of_potential(alpha, omega, u, v):
    # F = grad W, checked by central differences
    p = Params(alpha, omega)
    eps = 1e-6
    dWu = (model.potential(p, u + eps, v) - model.potential(p, u - eps, v)) / (2 * eps)
    dWv = (model.potential(p, u, v + eps) - model.potential(p, u, v - eps)) / (2 * eps)
    f1, f2 = model.rhs(p, u, v)
    assert f1 == pytest.approx(dWu, abs=1e-6 * (1 + alpha))
    assert f2 == pytest.approx(dWv, abs=1e-6 * (1 + alpha))


@given(alphas, st.floats(0.0, 5.0), st.floats(-2, 2), st.floats(-2, 2))
def test_rhs_swap_symmetry(alpha, omega, u, v):
    p = Params(alpha, omega)
    f1, f2 = model.rhs(p, u, v)
    g1, g2 = model.rhs(p, v, u)
    assert f1 == pytest.approx(g2, rel=1e-12, abs=1e-12)
    assert f2 == pytest.approx(g1, rel=1e-12, abs=1e-12)
