import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asymhier.bvp import EllipticOperator
from asymhier.errors import DataError, UnsupportedError
from asymhier.fields import PolarGrid
from asymhier.geometry import BoundaryProfile, Disk
from asymhier.hierarchy import SmoothProblem, closed_problem, smooth_dirichlet_bc
from asymhier.ilw import ReducerContext
from asymhier.solvers import solve
from asymhier.transmission import (
    TransmissionContext,
    TransmissionProblem,
    compute_interior_terms,
    exterior_bc,
    interior_bc,
    normal_transfer,
    robin_closed,
)

M = 32
S = 2 * np.pi * np.arange(M) / M
COS2 = BoundaryProfile("cos_k", (1.0, 0.3, 2), "strictly_positive")


def circle_context(sigma_int, sigma_ext, phi=4.0, dn_phi=0.0, n=M):
    s = 2 * np.pi * np.arange(n) / n
    normal = np.stack([np.cos(s), np.sin(s)], axis=1)
    tangent = np.stack([-np.sin(s), np.cos(s)], axis=1)
    ext = ReducerContext("curve", n, sigma=sigma_ext, phi=phi, dn_phi=dn_phi, kappa=1.0,
                         ds=s[1] - s[0], periodic=True, method="spectral")
    return TransmissionContext(sigma_int, sigma_ext, normal, tangent, ext, phi, phi)


def test_transfer_scalar_contrast():
    ctx = circle_context(1.0, 0.5)
    assert np.allclose(normal_transfer(ctx, np.cos(S), 2.0), 4.0, rtol=0, atol=1e-15)


def test_transfer_equal_coefficients_is_identity():
    ctx = circle_context(1.7, 1.7)
    dnu = np.sin(3 * S)
    assert np.max(np.abs(normal_transfer(ctx, np.cos(S), dnu) - dnu)) < 1e-15


def test_transfer_anisotropic_exterior():
    n = 4
    ext = ReducerContext("curve", n, sigma=1.0, ds=np.pi / 2, periodic=True)
    a_int = np.broadcast_to(np.eye(2), (n, 2, 2))
    a_ext = np.broadcast_to(np.diag([2.0, 1.0]), (n, 2, 2))
    normal = np.tile([1.0, 0.0], (n, 1))
    tangent = np.tile([0.0, 1.0], (n, 1))
    ctx = TransmissionContext(a_int, a_ext, normal, tangent, ext)
    assert np.allclose(normal_transfer(ctx, np.full(n, 5.0), 3.0), 1.5, rtol=0, atol=1e-15)


arrays = st.lists(st.floats(-5, 5, allow_nan=False), min_size=M, max_size=M).map(np.array)


@settings(max_examples=30, deadline=None)
@given(u=arrays, dnu=arrays, v=arrays, dnv=arrays, c=st.floats(-3, 3))
def test_transfer_is_linear(u, dnu, v, dnv, c):
    ctx = circle_context(2.0, 0.7)
    a = normal_transfer(ctx, u, dnu)
    b = normal_transfer(ctx, v, dnv)
    ab = normal_transfer(ctx, u + c * v, dnu + c * dnv)
    assert np.max(np.abs(ab - a - c * b)) <= 1e-12 * (1 + np.max(np.abs(a)) + abs(c) * np.max(np.abs(b)))


def test_interior_data_low_orders():
    si, se = 2.0, 0.5
    ctx = circle_context(si, se)
    h = COS2.h(S)
    g = [np.zeros(M)] * 4
    assert np.array_equal(interior_bc(0, ctx, g, h, []), np.zeros(M))
    u0 = (np.zeros(M), np.full(M, -1.0))
    assert np.allclose(interior_bc(1, ctx, g, h, [u0]), -(h * si / se) * u0[1], atol=1e-15)
    u1 = (-(h * si / se) * u0[1], 0.4 * np.cos(2 * S))
    got = interior_bc(2, ctx, g, h, [u0, u1])
    expected = (-(h * si / se) * u1[1] + h**2 * si / (2 * se) * 1.0 * u0[1]
                + h**2 * 4.0 / (2 * se))
    assert np.allclose(got, expected, rtol=0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(sigma=st.floats(0.2, 5.0), n=st.sampled_from([1, 2, 3]),
       u=st.lists(arrays, min_size=3, max_size=3), dnu=st.lists(arrays, min_size=3, max_size=3))
def test_equal_conductivities_reduce_to_smooth_data(sigma, n, u, dnu):
    ctx = circle_context(sigma, sigma)
    h = COS2.h(S)
    g = [np.zeros(M)] * 4
    lower = list(zip(u, dnu))[:n]
    a = interior_bc(n, ctx, g, h, lower)
    b = smooth_dirichlet_bc(n, g, h, lower, ctx.ext)
    assert np.max(np.abs(a - b)) <= 1e-13 * (1 + np.max(np.abs(b)))


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_uncoated_nodes_keep_boundary_value(n):
    ctx = circle_context(2.0, 1.0)
    h = np.where(np.cos(S) > 0, 1.0, 0.0)
    g = [np.full(M, 0.25)] + [np.full(M, 0.5)] * 3
    lower = [(np.cos(S), np.sin(S))] * n
    got = interior_bc(n, ctx, g, h, lower)
    assert np.all(got[h == 0] == (0.25 if n == 0 else 0.0))


def test_exterior_data():
    ctx = circle_context(2.0, 1.0)
    h = COS2.h(S)
    g = [np.zeros(M)] * 4
    assert np.array_equal(exterior_bc(0, ctx, g, h, []), np.zeros(M))
    dn = np.cos(2 * S)
    assert np.allclose(exterior_bc(1, ctx, g, h, [(np.zeros(M), dn)]), -h * dn, atol=1e-15)
    zero = np.zeros(M)
    for n in (1, 2, 3):
        lower = [(np.sin(S), np.cos(S))] * n
        assert np.array_equal(exterior_bc(n, ctx, g, zero, lower), zero)
    with pytest.raises(UnsupportedError):
        exterior_bc(4, ctx, g * 2, h, [(zero, zero)] * 4)


def coated_disk(sigma_int=2.0, sigma_ext=1.0, profile=COS2):
    return TransmissionProblem(Disk(1.0), sigma_int, sigma_ext, 4.0, 4.0, profile, method="spectral")


def test_first_order_robin_coefficients_are_exact():
    sigma0, eps = 3.0, 0.05
    grid = PolarGrid(0.0, 1.0, 33, M)
    spec = robin_closed(1, coated_disk(sigma0, 1.0), eps, grid)
    bc = spec.bc("outer")
    assert bc.kind == "robin"
    assert np.array_equal(bc.alpha, np.ones(M))
    assert np.array_equal(bc.beta, eps * COS2.h(S) * sigma0)
    assert np.array_equal(bc.g, np.zeros(M))


def test_robin_at_zero_eps_is_dirichlet():
    grid = PolarGrid(0.0, 1.0, 33, M)
    for n in (1, 2):
        bc = robin_closed(n, coated_disk(), 0.0, grid).bc("outer")
        assert bc.kind == "dirichlet"
        assert np.all(np.asarray(bc.g) == 0.0)


@pytest.mark.parametrize("n", [1, 2])
def test_equal_conductivities_match_smooth_closed_problem(n):
    grid = PolarGrid(0.0, 1.0, 65, M)
    eps = 0.08
    spec_t = robin_closed(n, coated_disk(1.0, 1.0), eps, grid)
    spec_s = closed_problem(n, SmoothProblem(Disk(1.0), EllipticOperator(), 4.0, COS2,
                                             method="spectral"), eps, grid)
    bt, bs = spec_t.bc("outer"), spec_s.bc("outer")
    for name in ("alpha", "beta", "g"):
        assert np.max(np.abs(np.asarray(getattr(bt, name)) - np.asarray(getattr(bs, name)))) < 1e-15
    ut, us = solve(spec_t, grid), solve(spec_s, grid)
    assert np.max(np.abs(ut.values - us.values)) < 1e-13


def test_robin_needs_homogeneous_boundary_data():
    grid = PolarGrid(0.0, 1.0, 33, M)
    prob = TransmissionProblem(Disk(1.0), 2.0, 1.0, 4.0, 4.0, COS2, g=1.0)
    with pytest.raises(DataError):
        robin_closed(1, prob, 0.1, grid)
    with pytest.raises(UnsupportedError):
        robin_closed(3, coated_disk(), 0.1, grid)


def test_radial_terms_match_exact_expansion():
    # Interior of the coated disk: u = f (1 - r^2)/(4 si) + f ((1 + eps)^2 - 1)/(4 se).
    si, se = 2.0, 1.0
    grid = PolarGrid(0.0, 1.0, 65, 8)
    series = compute_interior_terms(coated_disk(si, se, BoundaryProfile.const(1.0)), 3, grid)
    r = grid.r[:, None]
    assert np.max(np.abs(series.terms[0].values - 4 * (1 - r**2) / (4 * si))) < 1e-12
    assert np.max(np.abs(series.terms[1].values - 4 * 2 / (4 * se))) < 1e-10
    assert np.max(np.abs(series.terms[2].values - 4 / (4 * se))) < 1e-10
    assert np.max(np.abs(series.terms[3].values)) < 1e-10
