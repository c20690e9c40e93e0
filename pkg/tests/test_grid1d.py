import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact_alpha2
from wallforge import grid1d
from wallforge.errors import NotACrossing
from wallforge.grid1d import Grid, Profile


@pytest.mark.parametrize("R, n", [(1.0, 3), (5.0, 99), (40.0, 7999), (3.3, 10)])
def test_grid_nodes_symmetric(R, n):
    g = Grid(R, n)
    x = g.x
    assert x.size == n + 2
    assert x[0] == -R and x[-1] == R
    assert np.array_equal(x, -x[::-1])
    assert np.allclose(np.diff(x), g.h, rtol=1e-12)


@pytest.mark.parametrize("R, n", [(0.0, 10), (-1.0, 10), (1.0, 2)])
def test_grid_rejects(R, n):
    with pytest.raises(ValueError):
        Grid(R, n)


@pytest.mark.parametrize("R, h", [(40.0, 0.01), (5.0, 0.01), (10.0, 0.3)])
def test_from_spacing(R, h):
    g = Grid.from_spacing(R, h)
    assert g.h == pytest.approx(h, rel=0.05)


def test_profile_is_read_only_and_validated():
    g = Grid(1.0, 3)
    prof = Profile(g, np.zeros(5), np.ones(5))
    with pytest.raises(ValueError):
        prof.u[0] = 1.0
    with pytest.raises(ValueError):
        Profile(g, np.zeros(4), np.zeros(5))
    with pytest.raises(ValueError):
        Profile(g, np.full(5, np.nan), np.zeros(5))


def test_differences_exact_on_quadratics():
    g = Grid(2.0, 39)
    x = g.x
    prof = Profile(g, 3 * x ** 2 - x + 1, -0.5 * x ** 2)
    d2u, d2v = grid1d.second_derivative(prof)
    assert np.allclose(d2u, 6.0) and np.allclose(d2v, -1.0)
    du, dv = grid1d.first_derivative(prof)
    assert np.allclose(du, 6 * x - 1) and np.allclose(dv, -x)


def test_trapezoid_integrates_linear_exactly():
    g = Grid(3.0, 59)
    assert grid1d.trapezoid(2 * g.x + 1, g) == pytest.approx(6.0)


@pytest.mark.parametrize("shift", [0.0, 0.123456, -1.7, 2.5e-3])
def test_crossing_of_exact_wall(shift):
    g = Grid.from_spacing(20.0, 0.05)
    prof = exact_alpha2(g, 0.5, shift)
    mid = 0.5 * (prof.u[0] + prof.u[-1])
    assert grid1d.find_crossing(prof, mid) == pytest.approx(shift, abs=1e-6)
    assert grid1d.symmetry_center(prof) == pytest.approx(shift, abs=1e-6)


def test_no_crossing():
    g = Grid(1.0, 9)
    with pytest.raises(NotACrossing):
        grid1d.find_crossing(grid1d.constant_profile(g, 0.5, 0.5), 0.5)
    with pytest.raises(NotACrossing):
        grid1d.level_crossing(g.x, g.x, 5.0)


def test_recenter_removes_shift(eq_2_half):
    g = Grid.from_spacing(20.0, 0.02)
    centered = exact_alpha2(g, 0.5)
    moved = exact_alpha2(g, 0.5, shift=0.731)
    back = grid1d.recenter(moved, eq_2_half)
    inner = np.abs(g.x) < 15
    assert np.max(np.abs(back.u - centered.u)[inner]) < 1e-7
    assert back.u[0] == eq_2_half.a and back.u[-1] == eq_2_half.b


def test_resample_identity():
    g = Grid(10.0, 199)
    prof = exact_alpha2(g, 0.3)
    same = grid1d.resample(prof, g)
    assert np.allclose(same.u, prof.u, atol=1e-14)


def test_resample_to_finer_grid():
    coarse = exact_alpha2(Grid.from_spacing(10.0, 0.05), 0.5)
    fine_grid = Grid.from_spacing(10.0, 0.01)
    fine = grid1d.resample(coarse, fine_grid)
    assert np.max(np.abs(fine.u - exact_alpha2(fine_grid, 0.5).u)) < 1e-5


def test_csv_roundtrip_is_exact(tmp_path):
    prof = exact_alpha2(Grid.from_spacing(7.0, 0.07), 0.5)
    path = tmp_path / "p.csv"
    grid1d.write_csv(prof, path)
    assert path.read_text().splitlines()[0] == "x,u,v"
    back = grid1d.read_csv(path)
    assert back.grid == prof.grid
    assert np.array_equal(back.u, prof.u) and np.array_equal(back.v, prof.v)


@pytest.mark.parametrize(
    "text",
    [
        "x,u\n-1,0,0\n",
        "x,u,v\n-1,0,0\n0,0,0\n",
        "x,u,v\n-2,0,0\n-1,0,0\n0,0,0\n1.5,0,0\n2,0,0\n",
        "x,u,v\n-2,0,0\n-1,0,0\n0,0,0\n1,0,0\n3,0,0\n",
    ],
)
def test_csv_rejects(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        grid1d.read_csv(path)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=5, max_size=40))
def test_swap_reflect_is_involution(values):
    n = len(values)
    g = Grid(1.0, n - 2)
    prof = Profile(g, values, values[::-1] if n % 2 else np.roll(values, 1))
    twice = prof.swap_reflect().swap_reflect()
    assert np.array_equal(twice.u, prof.u) and np.array_equal(twice.v, prof.v)


def test_dirichlet_data(eq_2_half):
    prof = exact_alpha2(Grid(10.0, 99), 0.5)
    assert not prof.has_dirichlet_data(eq_2_half)
    fixed = grid1d.resample(prof, prof.grid, left=(eq_2_half.a, eq_2_half.b),
                            right=(eq_2_half.b, eq_2_half.a))
    assert fixed.has_dirichlet_data(eq_2_half)
    assert math.isclose(fixed.u[50], prof.u[50])
