import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asymhier.bvp import EllipticOperator
from asymhier.errors import DataError, UnsupportedError
from asymhier.fields import IntervalGrid, PolarGrid, RectGrid
from asymhier.geometry import BoundaryProfile, Disk, Interval, Rectangle
from asymhier.hierarchy import (
    SmoothProblem,
    closed_problem,
    compute_neumann_terms,
    compute_terms,
    multinomial_rhs,
    neumann_rect_bc,
    newton_leading,
    nonlinear_hierarchy,
    smooth_dirichlet_bc,
)
from asymhier.ilw import ReducerContext
from asymhier.solvers import solve

GRID = IntervalGrid(0.0, 1.0, 41)


def example_1d(f=-2.0, profile=None):
    profile = profile or BoundaryProfile.endpoints(0.0, 1.0)
    return SmoothProblem(Interval(0.0, 1.0), EllipticOperator(), f, profile)


def point_ctx(phi=-2.0):
    return ReducerContext("point", 1, phi=phi, dn_phi=0.0)


def test_first_order_data_at_the_moved_endpoint():
    got = smooth_dirichlet_bc(1, [0.0, 0.0], 1.0, [(np.zeros(1), np.ones(1))], point_ctx())
    assert got == pytest.approx([-1.0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_unmoved_boundary_gives_zero_data(n):
    lower = [(np.array([0.3]), np.array([1.7]))] * n
    got = smooth_dirichlet_bc(n, [0.0] * (n + 1), 0.0, lower, point_ctx())
    assert np.array_equal(got, np.zeros(1))


def test_order_four_data_is_unsupported():
    with pytest.raises(UnsupportedError):
        smooth_dirichlet_bc(4, [0.0] * 5, 1.0, [(0.0, 0.0)] * 4, point_ctx())


def test_1d_terms():
    series = compute_terms(example_1d(), 3, GRID)
    x = GRID.x
    assert np.max(np.abs(series.terms[0].values - (x**2 - x))) < 1e-13
    assert np.max(np.abs(series.terms[1].values + x)) < 1e-13
    assert np.max(np.abs(series.terms[2].values)) < 1e-12
    assert np.max(np.abs(series.terms[3].values)) < 1e-12


def test_zero_data_gives_zero_terms():
    series = compute_terms(example_1d(f=0.0), 3, GRID)
    for t in series.terms:
        assert np.array_equal(t.values, np.zeros(GRID.n))


def test_partial_sum_at_zero_eps_is_leading_term():
    series = compute_terms(example_1d(), 2, GRID)
    for n in range(3):
        assert np.array_equal(series.partial_sum(n, 0.0).values, series.terms[0].values)
    with pytest.raises(DataError):
        series.partial_sum(3, 0.1)


def test_terms_are_reproducible_from_their_specs():
    prob = SmoothProblem(Disk(1.0), EllipticOperator(), 4.0,
                         BoundaryProfile("cos_k", (1.0, 0.3, 2), "strictly_positive"),
                         method="spectral")
    grid = PolarGrid(0.0, 1.0, 33, 16)
    series = compute_terms(prob, 2, grid)
    for n in range(3):
        assert np.array_equal(series.resolve(n).values, series.terms[n].values)
    again = compute_terms(prob, 2, grid)
    for a, b in zip(series.terms, again.terms):
        assert np.array_equal(a.values, b.values)


def test_disk_terms_match_radial_expansion():
    # On the disk of radius 1 + eps, -lap u = 4 with u = 0 gives
    # u = (1 + eps)^2 - r^2, so u_0 = 1 - r^2, u_1 = 2, u_2 = 1, u_3 = 0.
    prob = SmoothProblem(Disk(1.0), EllipticOperator(), 4.0, BoundaryProfile.const(1.0))
    grid = PolarGrid(0.0, 1.0, 65, 8)
    series = compute_terms(prob, 3, grid)
    r = grid.r[:, None]
    assert np.max(np.abs(series.terms[0].values - (1 - r**2))) < 1e-12
    assert np.max(np.abs(series.terms[1].values - 2.0)) < 1e-10
    assert np.max(np.abs(series.terms[2].values - 1.0)) < 1e-10
    assert np.max(np.abs(series.terms[3].values)) < 1e-10


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_closed_problem_first_order(eps):
    u = solve(closed_problem(1, example_1d(), eps, GRID), GRID).values
    x = GRID.x
    assert np.max(np.abs(u - (x**2 - (1 + 2 * eps) / (1 + eps) * x))) < 1e-12


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_closed_problem_second_order_equals_first_partial_sum(eps):
    u = solve(closed_problem(2, example_1d(), eps, GRID), GRID).values
    x = GRID.x
    assert np.max(np.abs(u - (x**2 - x - eps * x))) < 1e-12


def test_closed_problem_at_zero_eps_is_leading_problem():
    u0 = compute_terms(example_1d(), 0, GRID).terms[0].values
    for n in (1, 2):
        assert np.max(np.abs(solve(closed_problem(n, example_1d(), 0.0, GRID), GRID).values - u0)) < 1e-14


def test_closed_problem_third_order_is_unsupported():
    with pytest.raises(UnsupportedError):
        closed_problem(3, example_1d(), 0.1, GRID)


def rect_edge_ctx(y, f):
    return ReducerContext("rect_edge", len(y), sigma=2.0, c=0.0, phi=f, dn_phi=0.0, ds=y[1] - y[0])


def test_neumann_data_examples():
    y = np.linspace(0.0, 1.0, 33)
    f = np.sin(np.pi * y) + 1.0
    ctx = rect_edge_ctx(y, f)
    h = BoundaryProfile("const", (0.4,), "strictly_positive", s_range=(0.0, 1.0))
    assert np.array_equal(neumann_rect_bc(0, h, y, [], ctx), np.zeros(33))
    lower = [(np.zeros(33), np.zeros(33))]
    assert np.allclose(neumann_rect_bc(1, h, y, lower, ctx), 0.4 * f / 2.0, atol=1e-15)
    zero = BoundaryProfile("const", (0.0,), "nonnegative", s_range=(0.0, 1.0))
    lower = [(np.cos(y), np.sin(y)), (y**2, y)]
    for m in (1, 2):
        assert np.array_equal(neumann_rect_bc(m, zero, y, lower, ctx), np.zeros(33))
    with pytest.raises(UnsupportedError):
        neumann_rect_bc(3, h, y, lower * 2, ctx)


def test_neumann_terms_solve_recorded_problems():
    prob = SmoothProblem(Rectangle(1.0, 1.0), EllipticOperator(c=1.0), 1.0,
                         BoundaryProfile("cos_k", (1.0, 0.3, np.pi), "strictly_positive",
                                         s_range=(0.0, 1.0)))
    grid = RectGrid(1.0, 1.0, 17, 17)
    series = compute_neumann_terms(prob, 2, grid)
    assert series.regime == "NeumannSmooth"
    for n in range(3):
        assert np.array_equal(series.resolve(n).values, series.terms[n].values)


def test_multinomial_examples():
    u0, u1, u2 = np.array([0.5, -1.0]), np.array([2.0, 0.25]), np.array([-3.0, 1.5])
    assert np.array_equal(multinomial_rhs(1, [u0]), np.zeros(2))
    assert np.allclose(multinomial_rhs(2, [u0, u1]), 3 * u0 * u1**2, rtol=0, atol=1e-15)
    assert np.allclose(multinomial_rhs(3, [u0, u1, u2]), 6 * u0 * u1 * u2 + u1**3, rtol=0, atol=1e-14)


values = st.floats(-3.0, 3.0, allow_nan=False)


def cube_coefficient(u, n):
    """Coefficient of eps^n in (sum_k eps^k u_k)^3 by expanding the triple product."""
    return sum(u[i] * u[j] * u[n - i - j]
               for i in range(len(u)) for j in range(len(u)) if 0 <= n - i - j < len(u))


@settings(max_examples=80, deadline=None)
@given(u=st.lists(values, min_size=3, max_size=3))
def test_multinomial_matches_cubed_series(u):
    # Truncate the series before u_n: the remaining eps^n coefficient is the right-hand side.
    for n in (1, 2, 3):
        expected = cube_coefficient(u[:n], n)
        got = float(multinomial_rhs(n, [np.array(v) for v in u[:n]]))
        scale = 1.0 + max(abs(v) for v in u) ** 3
        assert abs(got - expected) <= 1e-14 * scale


def test_newton_leading_solves_the_cubic_problem():
    grid = IntervalGrid(0.0, 1.0, 129)
    u, its = newton_leading(1.0, Interval(0.0, 1.0), grid)
    assert its < 10
    assert u.values[0] == 0.0 and u.values[-1] == 0.0
    x, d = grid.x, grid.step
    v = u.values
    res = -(v[2:] - 2 * v[1:-1] + v[:-2]) / d**2 + v[1:-1] - v[1:-1] ** 3 - 1.0
    assert np.max(np.abs(res)) < 1e-9


def test_nonlinear_first_term_is_linear_response():
    grid = IntervalGrid(0.0, 1.0, 129)
    prof = BoundaryProfile.endpoints(0.5, 1.0)
    series = nonlinear_hierarchy(1.0, Interval(0.0, 1.0), prof, 3, grid)
    u0 = series.terms[0]
    # u_1 has boundary values -h d_n u_0 at both ends.
    left = -0.5 * u0.normal_derivative("left")
    right = -1.0 * u0.normal_derivative("right")
    assert series.terms[1].values[0] == pytest.approx(left[0], abs=1e-12)
    assert series.terms[1].values[-1] == pytest.approx(right[0], abs=1e-12)
    for n in range(4):
        assert np.array_equal(series.resolve(n).values, series.terms[n].values)
