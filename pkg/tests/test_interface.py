import numpy as np
import pytest

from asymhier.errors import DataError, GeometryError, GridError, UnsupportedError
from asymhier.fields import IntervalGrid, PolarGrid
from asymhier.geometry import BoundaryProfile, DiskWithInterface, Interval
from asymhier.interface import (
    InterfaceConfig,
    case_i_cascade,
    case_ii_cascade,
    direct_solve,
    eps_hierarchy,
    interface_nodes,
    jump_bc,
    layer_nodes,
    neumann_constant,
    surface_divergence,
    u_minus_direct,
)
from asymhier.references import interface_1d_exact, interface_radial_exact

H1 = BoundaryProfile.const(1.0)
DISK = DiskWithInterface(0.5, 1.0)
LINE = Interval(0.0, 1.0, 0.5)


def disk_grid(nr=129, M=16):
    return PolarGrid(0.0, 1.0, nr, M)


def g_cos2(x, y):
    return 0.5 * (x * x - y * y)


def circle_nodes():
    cfg = InterfaceConfig(DISK, 2.0, 1.0, 4.0, 0.0, H1)
    return interface_nodes(cfg, disk_grid(M=32))


# -- configuration ---------------------------------------------------------------------------


def test_config_rejects_plain_interval():
    with pytest.raises(GeometryError):
        InterfaceConfig(Interval(0.0, 1.0))


def test_config_rejects_nonpositive_sigma():
    with pytest.raises(DataError):
        InterfaceConfig(LINE, sigma_minus=0.0)


def test_cascades_need_unit_sigma_plus():
    with pytest.raises(DataError):
        InterfaceConfig(DISK, 1.0, 2.0, regime="CaseI")


def test_enclosed_flag():
    assert InterfaceConfig(DISK).enclosed
    assert not InterfaceConfig(LINE).enclosed


# -- surface divergence and jumps ------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 3])
def test_surface_divergence_of_cosine_mode(k):
    nodes = circle_nodes()
    th = nodes.param
    got = surface_divergence(np.cos(k * th), 1.0, nodes)
    # d_s = d_theta / R_gamma on the circle of radius 1/2
    np.testing.assert_allclose(got, -k * k / 0.25 * np.cos(k * th), atol=1e-11)


def test_surface_divergence_with_variable_coefficient():
    nodes = circle_nodes()
    th = nodes.param
    got = surface_divergence(np.sin(th), np.cos(th), nodes)
    # d_theta(cos * cos) / R^2 = -2 cos sin / R^2
    np.testing.assert_allclose(got, -2.0 * np.cos(th) * np.sin(th) / 0.25, atol=1e-11)


def test_surface_divergence_of_constant_is_zero():
    nodes = circle_nodes()
    assert np.max(np.abs(surface_divergence(np.full(nodes.n, 3.0), 1.0, nodes))) < 1e-12


def test_surface_divergence_needs_closed_curve():
    cfg = InterfaceConfig(LINE, 2.0, 1.0, 4.0)
    nodes = interface_nodes(cfg, IntervalGrid(0.0, 1.0, 65))
    with pytest.raises(GridError):
        surface_divergence(np.zeros(nodes.n), 1.0, nodes)


def test_jump_bc_zero_order_is_homogeneous():
    nodes = circle_nodes()
    vj, fj = jump_bc(0, 1.0, [], nodes, 2.0, 1.0)
    assert np.all(vj == 0) and np.all(fj == 0)


def test_jump_bc_limits():
    nodes = circle_nodes()
    with pytest.raises(UnsupportedError):
        jump_bc(2, 1.0, [], nodes, 2.0, 1.0)
    with pytest.raises(DataError):
        jump_bc(1, 1.0, [], nodes, 2.0, 1.0)


def test_zero_profile_gives_zero_first_order_term():
    cfg = InterfaceConfig(DISK, 2.0, 1.0, 4.0, g_cos2, BoundaryProfile.const(0.0))
    u1 = eps_hierarchy(cfg, 1, disk_grid()).terms[1]
    assert np.max(np.abs(u1.minus.values)) == 0.0
    assert np.max(np.abs(u1.plus.values)) == 0.0


def test_radial_value_jump_matches_exact_solution():
    # u- = A - r^2/2, u+ = -(r^2 - 1): [d_r u_0] at r = 1/2 is -1 + 1/2
    cfg = InterfaceConfig(DISK, 2.0, 1.0, 4.0, 0.0, H1)
    vj, fj = eps_hierarchy(cfg, 1, disk_grid()).terms[1].info["jumps"]
    np.testing.assert_allclose(vj, 0.5, atol=1e-10)
    assert np.max(np.abs(fj)) < 1e-10


def test_eps_hierarchy_limits():
    cfg = InterfaceConfig(LINE, 2.0, 1.0, 4.0, 0.0, H1)
    with pytest.raises(UnsupportedError):
        eps_hierarchy(cfg, 2, IntervalGrid(0.0, 1.0, 65))
    with pytest.raises(GridError):
        eps_hierarchy(cfg, 1, IntervalGrid(0.0, 1.0, 6))


# -- eps-hierarchy against the derivative of the exact solution -------------------------------


def _eps_derivative(exact, d=1e-4):
    return (exact(0.5 + d) - exact(0.5 - d)) / (2 * d)


def test_first_order_term_1d_is_shape_derivative():
    cfg = InterfaceConfig(LINE, 2.0, 1.0, 4.0, 0.0, H1)
    u1 = eps_hierarchy(cfg, 1, IntervalGrid(0.0, 1.0, 65)).terms[1]
    for side in (u1.minus, u1.plus):
        x = side.grid.x
        keep = np.abs(x - 0.5) > 1e-3
        ref = _eps_derivative(lambda gm: interface_1d_exact(gm, 2.0, 1.0, 4.0, x))
        assert np.max(np.abs(ref - side.values)[keep]) < 1e-8


def _radial_shape_derivative_error(g, g2, nr):
    cfg = InterfaceConfig(DISK, 2.0, 1.0, 4.0, g, H1)
    u1 = eps_hierarchy(cfg, 1, disk_grid(nr)).terms[1]
    err = 0.0
    for side in (u1.minus, u1.plus):
        r, th = side.grid.r, side.grid.theta
        keep = np.abs(r - 0.5) > 1e-3
        ref = _eps_derivative(lambda rg: interface_radial_exact(rg, 2.0, 1.0, 4.0, 0.0, r, 1.0, g2, th))
        err = max(err, float(np.max(np.abs(ref - side.values)[keep])))
    return err


def test_first_order_term_radial_is_shape_derivative():
    assert _radial_shape_derivative_error(0.0, 0.0, 129) < 1e-10


def test_first_order_term_cos2_mode_converges_with_grid():
    # the exterior cos 2 theta mode has an r^-2 part, so the scheme is second order there
    coarse = _radial_shape_derivative_error(g_cos2, 0.5, 129)
    fine = _radial_shape_derivative_error(g_cos2, 0.5, 257)
    assert fine < 1e-4
    assert coarse / fine > 3.5


def test_leading_term_equals_direct_solve():
    cfg = InterfaceConfig(DISK, 2.0, 1.0, 4.0, g_cos2, H1)
    grid = disk_grid()
    u0 = eps_hierarchy(cfg, 0, grid).terms[0]
    d = direct_solve(cfg, grid)
    assert np.max(np.abs(u0.minus.values - d.minus.values)) < 1e-13
    assert np.max(np.abs(u0.plus.values - d.plus.values)) < 1e-13


def test_layer_nodes_masks():
    cfg = InterfaceConfig(LINE, 2.0, 1.0, 4.0, 0.0, H1)
    u = eps_hierarchy(cfg, 0, IntervalGrid(0.0, 1.0, 65)).terms[0]
    mm, mp = layer_nodes(cfg, 0.1, u)
    assert not np.any(mm)  # the minus grid stops at 1/2 < 0.6
    np.testing.assert_array_equal(mp, u.plus.grid.x < 0.6)


# -- Neumann constant ------------------------------------------------------------------------


def _case_i(f=4.0, g=0.0, dom=DISK, profile=H1):
    return InterfaceConfig(dom, 1.0, 1.0, f, g, profile, regime="CaseI")


def test_neumann_constant_radial():
    nc = neumann_constant(_case_i(), disk_grid())
    assert abs(nc.C0 - 0.75) < 1e-10
    assert abs(float(nc) - nc.C0) == 0.0
    assert abs(nc.int_f - np.pi) < 1e-12


def test_neumann_constant_harmonic_cases():
    assert abs(neumann_constant(_case_i(f=0.0, g=0.3), disk_grid()).C0 - 0.3) < 1e-10
    assert abs(neumann_constant(_case_i(f=0.0, g=0.0), disk_grid()).C0) < 1e-14


def test_neumann_constant_needs_enclosed_region():
    with pytest.raises(DataError):
        neumann_constant(_case_i(dom=LINE), IntervalGrid(0.0, 1.0, 65))


# -- contrast cascades -----------------------------------------------------------------------


def test_case_i_cascade_keys_and_compatibility():
    cs = case_i_cascade(_case_i(), disk_grid())
    assert cs.keys() == [(m, n) for m in (0, 1) for n in (0, 1, 2)]
    assert abs(cs.info["C0"].C0 - 0.75) < 1e-10
    assert max(abs(v) for v in cs.info["compat_residuals"].values()) < 1e-10


def test_case_ii_cascade_keys():
    cfg = InterfaceConfig(DISK, 1.0, 1.0, 4.0, 0.0, H1, regime="CaseII")
    cs = case_ii_cascade(cfg, disk_grid())
    assert cs.keys() == [(m, n) for m in (0, 1) for n in (-1, 0, 1)]
    assert np.max(np.abs(cs[(0, -1)].plus.values)) == 0.0


def test_cascades_check_regime():
    with pytest.raises(DataError):
        case_i_cascade(InterfaceConfig(DISK, 1.0, 1.0, 4.0, regime="CaseII"), disk_grid())
    with pytest.raises(DataError):
        case_ii_cascade(_case_i(), disk_grid())


@pytest.mark.parametrize("dom,grid", [(DISK, disk_grid()), (LINE, IntervalGrid(0.0, 1.0, 65))])
def test_zero_data_gives_zero_cascade(dom, grid):
    for reg, build in (("CaseI", case_i_cascade), ("CaseII", case_ii_cascade)):
        cs = build(InterfaceConfig(dom, 1.0, 1.0, 0.0, 0.0, H1, regime=reg), grid)
        for k in cs.keys():
            assert np.max(np.abs(cs[k].minus.values)) < 1e-14
            assert np.max(np.abs(cs[k].plus.values)) < 1e-14


def _cascade_error(cfg, cs, eps, p, sigma_minus):
    u = cs.partial_sum(eps, p)
    mm, mp = layer_nodes(cfg, eps, u)
    err = 0.0
    for side, mask in ((u.minus, mm), (u.plus, mp)):
        g = side.grid
        if isinstance(g, IntervalGrid):
            ref = interface_1d_exact(0.5 + eps, sigma_minus, 1.0, 4.0, g.x, 0.0, 1.0, 0.2, 0.2)
        else:
            ref = interface_radial_exact(0.5 + eps, sigma_minus, 1.0, 4.0, 0.2, g.r, 1.0, 0.0, g.theta)
        err = max(err, float(np.max(np.abs(ref - side.values)[~mask])))
    return err


@pytest.mark.parametrize("dom,grid", [(DISK, disk_grid(257, 8)), (LINE, IntervalGrid(0.0, 1.0, 257))])
def test_case_i_partial_sum_converges(dom, grid):
    cfg = _case_i(g=0.2, dom=dom)
    cs = case_i_cascade(cfg, grid)
    errs = [_cascade_error(cfg, cs, t, t, 1.0 / t) for t in (0.04, 0.02, 0.01)]
    assert errs[-1] < 1e-4
    assert all(a / b > 3.5 for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("dom,grid", [(DISK, disk_grid(257, 8)), (LINE, IntervalGrid(0.0, 1.0, 257))])
def test_case_ii_partial_sum_converges_at_fixed_sigma(dom, grid):
    cfg = InterfaceConfig(dom, 1.0, 1.0, 4.0, 0.2, H1, regime="CaseII")
    cs = case_ii_cascade(cfg, grid)
    errs = [_cascade_error(cfg, cs, t, 1e-3, 1e-3) for t in (0.04, 0.02, 0.01)]
    rates = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(abs(r - 2.0) < 0.1 for r in rates)


# -- direct solve as sigma- grows ------------------------------------------------------------


def test_u_minus_direct_approaches_neumann_constant():
    cfg = _case_i()
    grid = disk_grid()
    sig = [1e2, 1e3, 1e4]
    dev = [u_minus_direct(cfg, s, grid) - 0.75 for s in sig]
    np.testing.assert_allclose(dev, [1.0 / (8.0 * s) for s in sig], rtol=1e-3)
    slope = np.polyfit(np.log(sig), np.log(dev), 1)[0]
    assert abs(slope + 1.0) < 1e-3
