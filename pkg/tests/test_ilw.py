import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asymhier.errors import DataError, GridError, UnsupportedError
from asymhier.ilw import (
    ReducerContext,
    edge_derivative,
    periodic_derivative,
    reduce,
    reduce_curv_k2,
    reduce_curv_k3,
    reduce_rect_k2,
    reduce_rect_k3,
)

L1 = 1.3


def edge_ctx(n=201, **kw):
    y = np.linspace(0.0, np.pi, n)
    return y, ReducerContext("rect_edge", n, ds=y[1] - y[0], **kw)


def circle_ctx(n=64, method="spectral", **kw):
    s = 2 * np.pi * np.arange(n) / n
    return s, ReducerContext("curve", n, ds=s[1] - s[0], periodic=True, method=method, **kw)


def test_rect_k2_zero_trace_gives_minus_f_over_sigma():
    y = np.linspace(0, 1, 33)
    f = (1 + L1) * np.sin(np.pi * y)
    ctx = ReducerContext("rect_edge", 33, sigma=2.5, c=0.7, phi=f, ds=y[1] - y[0])
    assert np.array_equal(reduce_rect_k2(ctx, 0.0, 0.0), -f / 2.5)


def test_rect_k2_all_zero():
    _, ctx = edge_ctx(17)
    assert np.array_equal(reduce_rect_k2(ctx, np.zeros(17), np.zeros(17)), np.zeros(17))


def test_rect_k2_sine_product():
    y, ctx = edge_ctx(401, phi=None)
    ctx = ctx.with_phi(2 * np.sin(L1) * np.sin(y))
    got = reduce_rect_k2(ctx, np.sin(L1) * np.sin(y), np.cos(L1) * np.sin(y))
    assert np.max(np.abs(got + np.sin(L1) * np.sin(y))) < 1e-4


def test_rect_k3_sine_product():
    y, ctx = edge_ctx(401)
    ctx = ctx.with_phi(2 * np.sin(L1) * np.sin(y), 2 * np.cos(L1) * np.sin(y))
    got = reduce_rect_k3(ctx, np.sin(L1) * np.sin(y), np.cos(L1) * np.sin(y))
    assert np.max(np.abs(got + np.cos(L1) * np.sin(y))) < 1e-4


def test_rect_k3_zero_and_quadratic():
    y, ctx = edge_ctx(21, sigma=2.0, c=0.0, dn_phi=0.0)
    assert np.array_equal(reduce_rect_k3(ctx, 0.0, np.zeros(21)), np.zeros(21))
    assert np.allclose(reduce_rect_k3(ctx, 0.0, y**2), -2.0, atol=1e-10)


def test_rect_k3_without_normal_rhs_derivative():
    _, ctx = edge_ctx(21)
    with pytest.raises(DataError):
        reduce_rect_k3(ctx, 0.0, 0.0)


def test_mismatched_trace_is_grid_error():
    _, ctx = edge_ctx(21)
    with pytest.raises(GridError):
        reduce_rect_k2(ctx, np.zeros(20), 0.0)


def test_curv_k2_disk_radial_solution():
    # u0 = 1 - r^2 with -lap u0 = 4: second radial derivative is -2.
    _, ctx = circle_ctx(phi=4.0, kappa=1.0)
    assert np.allclose(reduce_curv_k2(ctx, np.zeros(64), np.full(64, -2.0)), -2.0, atol=1e-14)


def test_curv_k2_zero_and_reduced_form():
    s, ctx = circle_ctx(kappa=1.0)
    assert np.array_equal(reduce_curv_k2(ctx, np.zeros(64), np.zeros(64)), np.zeros(64))
    phi = 1 + np.cos(s)
    dnu = np.sin(2 * s)
    ctx = ReducerContext("curve", 64, sigma=3.0, phi=phi, kappa=0.5, ds=s[1], periodic=True)
    assert np.allclose(reduce_curv_k2(ctx, 0.0, dnu), -phi / 3.0 - 0.5 * dnu, atol=1e-15)


def test_curv_k2_needs_closed_grid():
    ctx = ReducerContext("curve", 8, ds=0.1, periodic=False)
    with pytest.raises(GridError):
        reduce_curv_k2(ctx, 0.0, 0.0)


def test_curv_k3_examples():
    s, ctx = circle_ctx(phi=4.0, dn_phi=0.0, kappa=1.0)
    assert np.allclose(reduce_curv_k3(ctx, np.zeros(64), np.full(64, -2.0)), 0.0, atol=1e-14)
    _, ctx0 = circle_ctx(dn_phi=0.0, kappa=1.0)
    assert np.allclose(reduce_curv_k3(ctx0, np.cos(2 * s), 0.0), -12 * np.cos(2 * s), atol=1e-12)
    assert np.array_equal(reduce_curv_k3(ctx0, np.zeros(64), np.zeros(64)), np.zeros(64))


def test_curv_k3_rejects_variable_sigma():
    s, ctx = circle_ctx(sigma=None, dn_phi=0.0)
    ctx = ReducerContext("curve", 64, sigma=2 + np.cos(s), dn_phi=0.0, ds=s[1], periodic=True)
    with pytest.raises(UnsupportedError):
        reduce_curv_k3(ctx, 0.0, 0.0)


def test_reduce_beyond_order_three_is_unsupported():
    _, ctx = circle_ctx()
    with pytest.raises(UnsupportedError):
        reduce(ctx, 4, 0.0, 0.0)


def test_curv_reducers_match_polar_derivatives():
    # w = r^3 cos(s) + r^2 on the unit circle, sigma = 1, c = 0.
    # -lap w = -8 r cos(s) - 4, with d_r phi = -8 cos(s).
    s, ctx = circle_ctx(64, phi=None)
    ctx = ctx.with_phi(-8 * np.cos(s) - 4.0, -8 * np.cos(s))
    ctx = ReducerContext("curve", 64, phi=ctx.phi, dn_phi=ctx.dn_phi, kappa=1.0,
                         ds=s[1], periodic=True, method="spectral")
    u = np.cos(s) + 1.0
    dnu = 3 * np.cos(s) + 2.0
    assert np.allclose(reduce_curv_k2(ctx, u, dnu), 6 * np.cos(s) + 2.0, atol=1e-12)
    assert np.allclose(reduce_curv_k3(ctx, u, dnu), 6 * np.cos(s), atol=1e-12)


@pytest.mark.parametrize("method, floor", [("fd4", 3.8), ("spectral", None)])
def test_periodic_derivative_order(method, floor):
    errs = []
    for n in (32, 64, 128):
        s = 2 * np.pi * np.arange(n) / n
        errs.append(np.max(np.abs(periodic_derivative(np.sin(3 * s), s[1], 2, method)
                                  + 9 * np.sin(3 * s))))
    if floor is None:
        assert max(errs) < 1e-10
    else:
        assert np.log2(errs[1] / errs[2]) > floor


def test_edge_derivative_order():
    errs = []
    for n in (41, 81, 161):
        y = np.linspace(0, 1, n)
        errs.append(np.max(np.abs(edge_derivative(np.exp(y), y[1], 2) - np.exp(y))))
    assert np.log2(errs[1] / errs[2]) > 1.8


def rect_context(n, data):
    y = np.linspace(0, 1, n)
    return ReducerContext("rect_edge", n, sigma=1.7, c=0.4, phi=data[0], dn_phi=data[1], ds=y[1])


def curve_context(n, data):
    return ReducerContext("curve", n, sigma=1.7, c=0.4, phi=data[0], dn_phi=data[1],
                          kappa=0.8, dkappa=0.0, ds=2 * np.pi / n, periodic=True)


arrays = st.lists(st.floats(-10, 10, allow_nan=False), min_size=24, max_size=24).map(np.array)


@settings(max_examples=40, deadline=None)
@given(u=arrays, dnu=arrays, phi=arrays, dphi=arrays, v=arrays, dnv=arrays, psi=arrays,
       dpsi=arrays, k=st.sampled_from([2, 3]), geom=st.sampled_from(["rect", "curve"]))
def test_reducers_are_linear(u, dnu, phi, dphi, v, dnv, psi, dpsi, k, geom):
    make = rect_context if geom == "rect" else curve_context
    a = reduce(make(24, (phi, dphi)), k, u, dnu)
    b = reduce(make(24, (psi, dpsi)), k, v, dnv)
    ab = reduce(make(24, (phi + psi, dphi + dpsi)), k, u + v, dnu + dnv)
    scale = 1.0 + np.max(np.abs(a)) + np.max(np.abs(b))
    assert np.max(np.abs(ab - a - b)) <= 1e-12 * scale * 24**2


@settings(max_examples=40, deadline=None)
@given(u=arrays, dnu=arrays, phi=arrays, dphi=arrays, c=st.floats(-5, 5),
       k=st.sampled_from([2, 3]), geom=st.sampled_from(["rect", "curve"]))
def test_reducers_are_homogeneous(u, dnu, phi, dphi, c, k, geom):
    make = rect_context if geom == "rect" else curve_context
    a = reduce(make(24, (phi, dphi)), k, u, dnu)
    ca = reduce(make(24, (c * phi, c * dphi)), k, c * u, c * dnu)
    assert np.max(np.abs(ca - c * a)) <= 1e-12 * (1.0 + abs(c) * np.max(np.abs(a))) * 24**2


@pytest.mark.parametrize("k, geom", [(2, "rect"), (3, "rect"), (2, "curve"), (3, "curve")])
def test_reducers_vanish_on_zero_data(k, geom):
    make = rect_context if geom == "rect" else curve_context
    z = np.zeros(24)
    assert np.array_equal(reduce(make(24, (z, z)), k, z, z), z)
