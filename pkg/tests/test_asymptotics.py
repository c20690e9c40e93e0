import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact_alpha2
from wallforge import asymptotics, model
from wallforge.errors import NonPositiveTail, TailTooShort
from wallforge.grid1d import Grid, Profile
from wallforge.model import Params


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.01, 10.0))
def test_log_linear_fit_recovers_exponential(rate, amp):
    xs = np.linspace(1.0, 5.0, 50)
    fit = asymptotics.log_linear_fit(xs, amp * np.exp(-rate * xs))
    assert fit.rate == pytest.approx(rate, rel=1e-10)
    assert math.exp(fit.log_amplitude) == pytest.approx(amp, rel=1e-9)
    assert asymptotics.frozen_amplitude(xs, amp * np.exp(-rate * xs), rate) == pytest.approx(amp)


def test_growing_tail_rejected():
    xs = np.linspace(0, 1, 30)
    with pytest.raises(NonPositiveTail):
        asymptotics.log_linear_fit(xs, np.exp(xs))


@pytest.mark.parametrize("omega", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("side", ["right", "left"])
def test_fit_on_exact_wall(omega, side):
    # b - u = D / (1 + exp(sqrt2 D x)) ~ D exp(-lambda x), lambda = sqrt2 D
    p = Params(2.0, omega)
    eq, ld = model.equilibria(p), model.linear_data(p)
    prof = exact_alpha2(Grid.from_spacing(40.0, 0.01), omega)
    fit = asymptotics.fit_decay(prof, eq, ld, side=side)
    d = math.sqrt(1.0 - omega)
    # the next tail term is relatively exp(-lambda x), a few 1e-6 at the window start
    assert fit.rate_u == pytest.approx(ld.lambda_minus, rel=1e-4)
    assert fit.rate_v == pytest.approx(ld.lambda_minus, rel=1e-4)
    assert fit.ell1 == pytest.approx(d, rel=1e-4)
    assert fit.ell2 == pytest.approx(d, rel=1e-4)
    assert fit.reliable


def test_fit_record_fields(wall_2_half):
    p, prof = wall_2_half
    eq, ld = model.equilibria(p), model.linear_data(p)
    rec = asymptotics.fit_decay(prof, eq, ld).to_record(p.alpha, p.omega, 40.0, 0.01, ld)
    assert set(rec) == {
        "alpha", "omega", "R", "h", "rate_u", "rate_v", "lambda_minus_theory",
        "ell1", "ell2", "mu_theory", "window", "residual_rms",
    }


def test_window_errors(eq_2_half):
    p = Params(2.0, 0.5)
    ld = model.linear_data(p)
    short = exact_alpha2(Grid(40.0, 30), 0.5)
    with pytest.raises(TailTooShort):
        asymptotics.fit_decay(short, eq_2_half, ld)
    g = Grid.from_spacing(10.0, 0.05)
    flat = Profile(g, np.full(g.n_nodes, eq_2_half.b), np.full(g.n_nodes, eq_2_half.a))
    with pytest.raises(NonPositiveTail):
        asymptotics.fit_decay(flat, eq_2_half, ld)
    with pytest.raises(ValueError):
        asymptotics.fit_decay(short, eq_2_half, ld, side="up")


def test_lower_bound(eq_2_half):
    prof = exact_alpha2(Grid.from_spacing(40.0, 0.01), 0.5)
    chk = asymptotics.check_lower_bound(prof, eq_2_half)
    assert chk.passed and chk.epsilon > 0
    assert chk.bound_rate == pytest.approx(eq_2_half.b * math.sqrt(2))
    # a tail decaying at rate 2 > b sqrt(2) fails
    g = prof.grid
    fast = Profile(g, eq_2_half.b - 0.5 * np.exp(-2.0 * g.x), prof.v)
    assert not asymptotics.check_lower_bound(fast, eq_2_half).passed


def _omega_zero_profile(g, rate_v, ell2, one_minus_u):
    x = g.x
    v = ell2 * np.exp(-rate_v * x)
    return Profile(g, 1.0 - one_minus_u(x), v)


@pytest.mark.parametrize("factor, ok", [(1.0, True), (1.2, False)])
def test_omega_zero_small_alpha_amplitude(factor, ok):
    alpha, ell2 = 0.25, 0.8
    amp = factor * (alpha + 1) * ell2 ** 2 / (2 * (1 - 2 * alpha))
    g = Grid.from_spacing(60.0, 0.02)
    prof = _omega_zero_profile(g, math.sqrt(alpha), ell2, lambda x: amp * np.exp(-2 * math.sqrt(alpha) * x))
    rep = asymptotics.omega_zero_asymptotics(alpha, prof)
    assert rep.branch == "alpha<1/2"
    assert rep.rate_u_ok and rep.rate_v_ok
    assert rep.amplitude_ok is ok


def test_omega_zero_half_uses_linear_correction():
    ell2, C = 0.9, 0.3
    K = 3 * ell2 ** 2 / (4 * math.sqrt(2))
    g = Grid.from_spacing(40.0, 0.02)
    prof = _omega_zero_profile(
        g, math.sqrt(0.5), ell2, lambda x: (K * x + C) * np.exp(-math.sqrt(2) * x)
    )
    rep = asymptotics.omega_zero_asymptotics(0.5, prof)
    assert rep.branch == "alpha=1/2"
    # 1 - u near 1 keeps only about 1e-4 relative digits at the floor
    assert rep.ell1 == pytest.approx(K, rel=1e-3)
    assert rep.passed
    rec = rep.to_record()
    assert rec["passed"] is True and rec["ell1_predicted"] == pytest.approx(K)


def test_omega_zero_large_alpha():
    g = Grid.from_spacing(30.0, 0.02)
    prof = _omega_zero_profile(g, 2.0, 1.2, lambda x: 0.9 * np.exp(-math.sqrt(2) * x))
    rep = asymptotics.omega_zero_asymptotics(4.0, prof)
    assert rep.branch == "alpha>1/2" and rep.amplitude_ok is None and rep.passed
    assert rep.ell1 == pytest.approx(0.9, rel=1e-4)
