"""Perturbed interfaces: the eps-hierarchy and the high-contrast cascades.

The interface ``Gamma`` splits ``D`` into ``D-`` (the interval part left of
the interface point, or the inner disk) and ``D+``; the unit normal ``n`` on
``Gamma`` points from ``D-`` into ``D+``.  The perturbed interface is
``Gamma_eps = {x + eps h(x) n(x)}``, with ``sigma = sigma-`` on the perturbed
``D-`` and ``sigma+`` outside it.

Jumps are ``[v] = v+ - v-`` throughout.  The eps-hierarchy solves two
transmission problems on the full grid; the cascades solve Laplace or Poisson
problems on ``D-`` and ``D+`` separately and couple them through traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bvp import (BvpSpec, Dirichlet, EllipticOperator, Neumann, NeumannWithCompatibility,
                  Piecewise, ScalarFunction, TransmissionJump, validate)
from .errors import (CompatibilityError, DataError, DegenerateError,
                     GeometryError, GridError, UnsupportedError)
from .fields import (DEFAULT_ORDER, GridField, IntervalGrid, PiecewiseField, PolarGrid,
                     aligned_index, boundary_weights)
from .geometry import Annulus, BoundaryProfile, Disk, DiskWithInterface, Interval
from .hierarchy import ExpansionSeries
from .ilw import periodic_derivative
from .solvers import COMPAT_TOL, solve, solve_pinned_neumann
from .traces import SegmentNodes, profile_values, segment_nodes
from .two_param import DoubleSeries

INTERFACE_REGIMES = ("EpsOnly", "CaseI", "CaseII")


@dataclass(frozen=True)
class InterfaceConfig:
    """Interface problem ``-div(sigma grad u) = f`` with ``u = g`` on ``partial D``.

    ``sigma_minus`` is the conductivity of ``D-`` and ``sigma_plus`` that of
    ``D+``.  In the cascades ``sigma_plus`` is 1 and ``sigma_minus`` is the
    contrast ``sigma`` that goes to infinity (CaseI, ``mu = 1/sigma``) or to
    zero (CaseII).  ``f`` and ``g`` are scalars or functions of ``(x, y)``.
    """

    domain: Any
    sigma_minus: float = 1.0
    sigma_plus: float = 1.0
    f: Any = 0.0
    g: Any = 0.0
    profile: BoundaryProfile = field(default_factory=lambda: BoundaryProfile.const(0.0))
    regime: str = "EpsOnly"
    method: str | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if isinstance(self.domain, Interval):
            if self.domain.interface is None:
                raise GeometryError("the interval needs an interior interface point")
        elif not isinstance(self.domain, DiskWithInterface):
            raise GeometryError("interface problems need an Interval with an interface "
                                "or a DiskWithInterface")
        for name in ("sigma_minus", "sigma_plus"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DataError(f"{name} must be positive, got {v!r}")
        if self.regime not in INTERFACE_REGIMES:
            raise DataError(f"unknown interface regime {self.regime!r}")
        if self.regime != "EpsOnly" and self.sigma_plus != 1.0:
            raise DataError("the contrast cascades take sigma+ = 1")

    @property
    def enclosed(self) -> bool:
        """True when ``partial D- = Gamma`` (no part of ``D-`` touches ``partial D``)."""
        return isinstance(self.domain, DiskWithInterface)

    @property
    def gamma(self) -> float:
        d = self.domain
        return d.interface if isinstance(d, Interval) else d.R_gamma

    def operator(self, sigma_minus: float | None = None) -> EllipticOperator:
        sm = self.sigma_minus if sigma_minus is None else sigma_minus
        return EllipticOperator(piecewise=Piecewise(ScalarFunction.constant(sm),
                                                    ScalarFunction.constant(self.sigma_plus)))


@dataclass(frozen=True)
class InterfaceRegime:
    """Bookkeeping for the double series of a cascade (see :class:`DoubleSeries`)."""

    tag: str
    parameter: str
    default_parameter: float | None = None

    @property
    def first_n(self) -> int:
        return -1 if self.tag == "CaseII" else 0


# ---------------------------------------------------------------------------
# Sub-domains and interface nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Split:
    """``D-`` and ``D+`` with their grids and the names of the interface segments."""

    dom_minus: Any
    dom_plus: Any
    grid_minus: Any
    grid_plus: Any
    gamma_minus: str
    gamma_plus: str
    outer_minus: tuple
    outer_plus: tuple
    nodes: SegmentNodes


def _split(config: InterfaceConfig, grid) -> _Split:
    dom = config.domain
    if isinstance(dom, Interval):
        if not isinstance(grid, IntervalGrid) or (grid.a, grid.b) != (dom.a, dom.b):
            raise GridError("the grid must be an IntervalGrid on the interval")
        k = aligned_index(grid.a, grid.step, dom.interface, grid.n, "interface point")
        if k < 3 or grid.n - k < 4:
            raise GridError("each side of the interface needs at least 4 nodes")
        xg = float(grid.x[k])
        gm, gp = IntervalGrid(grid.a, xg, k + 1), IntervalGrid(xg, grid.b, grid.n - k)
        return _Split(Interval(dom.a, xg), Interval(xg, dom.b), gm, gp, "right", "left",
                      ("left",), ("right",), segment_nodes(gm, "right"))
    if not isinstance(grid, PolarGrid) or not grid.is_disk or grid.r1 != dom.R:
        raise GridError("the grid must be a PolarGrid on the full disk")
    k = aligned_index(grid.r0, grid.step, dom.R_gamma, grid.nr, "interface radius")
    if k < 7 or grid.nr - k < 8:
        raise GridError("each side of the interface needs at least 8 radial nodes")
    gm = PolarGrid(0.0, dom.R_gamma, k + 1, grid.M)
    gp = PolarGrid(dom.R_gamma, dom.R, grid.nr - k, grid.M)
    return _Split(Disk(dom.R_gamma), Annulus(dom.R_gamma, dom.R), gm, gp, "outer", "inner",
                  (), ("outer",), segment_nodes(gm, "outer"))


def interface_nodes(config: InterfaceConfig, grid) -> SegmentNodes:
    """Nodes of ``Gamma`` with the normal pointing into ``D+``."""
    return _split(config, grid).nodes


def _outer_values(fn, nodes: SegmentNodes) -> np.ndarray:
    return ScalarFunction.coerce(fn)(nodes.x, nodes.y) * np.ones(nodes.n)


# ---------------------------------------------------------------------------
# Jump data
# ---------------------------------------------------------------------------


def surface_divergence(u: np.ndarray, coef, nodes: SegmentNodes, method: str | None = None) -> np.ndarray:
    """``d_s(coef d_s u)`` on a closed interface curve, by periodic differences."""
    if not nodes.periodic:
        raise GridError("the surface divergence needs a closed interface curve")
    m = method or "spectral"
    u = np.asarray(u, dtype=float) * np.ones(nodes.n)
    coef = np.asarray(coef, dtype=float) * np.ones(nodes.n)
    return periodic_derivative(coef * periodic_derivative(u, nodes.ds, 1, m), nodes.ds, 1, m)


def _tangential_term(u: np.ndarray, coef, nodes: SegmentNodes, method: str | None) -> np.ndarray:
    """Surface divergence on curves; an interface point has no tangential direction."""
    if nodes.kind == "point":
        return np.zeros(nodes.n)
    return surface_divergence(u, coef, nodes, method)


def jump_bc(n: int, h, lower, nodes: SegmentNodes, sigma_minus: float, sigma_plus: float,
            method: str | None = None, order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """``([u_n], [sigma d_n u_n])`` on ``Gamma`` for ``n = 0, 1``.

    ``n = 0`` gives homogeneous conditions.  ``n = 1`` gives ``[u_1] = -h
    [d_n u_0]`` and ``[sigma d_n u_1] = div_G(h [sigma] grad_G u_0)``, with
    ``u_0 = lower[0]`` a :class:`PiecewiseField`.
    """
    if n == 0:
        return np.zeros(nodes.n), np.zeros(nodes.n)
    if n != 1:
        raise UnsupportedError("interface jumps are available for n = 0 and n = 1")
    if len(lower) < 1:
        raise DataError("jump_bc(1) needs u_0")
    u0 = lower[0]
    h = np.asarray(h, dtype=float) * np.ones(nodes.n)
    dn_jump = u0.interface_normal_derivative("plus", order) - u0.interface_normal_derivative("minus", order)
    value = -h * dn_jump
    flux = _tangential_term(u0.interface_trace("plus"), h * (sigma_plus - sigma_minus), nodes, method)
    return value, flux


def _dirichlet_bcs(config: InterfaceConfig, grid, data) -> tuple:
    dom = config.domain
    if isinstance(dom, Interval):
        left, right = segment_nodes(grid, "left"), segment_nodes(grid, "right")
        return (Dirichlet("left", _outer_values(data, left)),
                Dirichlet("right", _outer_values(data, right)))
    return (Dirichlet("outer", _outer_values(data, segment_nodes(grid, "outer"))),)


def eps_hierarchy(config: InterfaceConfig, N: int, grid, order: int = DEFAULT_ORDER) -> ExpansionSeries:
    """``u_0`` and ``u_1`` of the perturbed-interface problem as piecewise fields."""
    if N not in (0, 1):
        raise UnsupportedError("the interface eps-hierarchy is available for N <= 1")
    sp = _split(config, grid)
    h = profile_values(config.profile, sp.nodes)
    op = config.operator()
    terms, specs = [], []
    for n in range(N + 1):
        vj, fj = jump_bc(n, h, terms, sp.nodes, config.sigma_minus, config.sigma_plus,
                         config.method, order)
        rhs = Piecewise(config.f, config.f) if n == 0 else Piecewise(0.0, 0.0)
        spec = validate(BvpSpec(config.domain, op, rhs,
                                _dirichlet_bcs(config, grid, config.g if n == 0 else 0.0),
                                TransmissionJump(vj, fj), label=f"u_{n}"))
        u = solve(spec, grid)
        u.label = f"u_{n}"
        u.info["jumps"] = (vj, fj)
        terms.append(u)
        specs.append(spec)
    return ExpansionSeries("InterfaceEps", terms, specs, grid, {"problem": config.label})


def layer_nodes(config: InterfaceConfig, eps: float, field: PiecewiseField) -> tuple[np.ndarray, np.ndarray]:
    """Masks of the nodes where ``field.minus`` or ``field.plus`` continues the wrong side.

    The minus expansion stands for the perturbed solution only inside the
    perturbed ``D-`` (coordinate up to ``gamma + eps h``), and the plus
    expansion only outside it.  First-order comparisons leave the masked
    nodes out.
    """
    gamma = config.gamma
    out = []
    for name, side in (("minus", field.minus), ("plus", field.plus)):
        g = side.grid
        if isinstance(g, IntervalGrid):
            c = g.x
            edge = gamma + eps * float(np.asarray(config.profile.h(gamma), dtype=float))
        else:
            c, T = np.meshgrid(g.r, g.theta, indexing="ij")
            edge = gamma + eps * np.asarray(config.profile.h(T), dtype=float)
        out.append(c > edge if name == "minus" else c < edge)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Cascade building blocks
# ---------------------------------------------------------------------------


_LAPLACE = EllipticOperator()


class _Cascade:
    """Sub-domain solves of the cascades.  Normal derivatives on ``Gamma`` use ``n`` into ``D+``."""

    def __init__(self, config: InterfaceConfig, grid, order: int):
        self.config = config
        self.sp = _split(config, grid)
        self.order = order
        self.nodes = self.sp.nodes
        self.h = profile_values(config.profile, self.nodes)
        self.w_gamma = boundary_weights(self.sp.grid_minus, self.sp.gamma_minus)
        self.specs: dict = {}
        self._phi1 = None

    # -- traces -------------------------------------------------------------
    def dn_minus(self, u: GridField) -> np.ndarray:
        return u.normal_derivative(self.sp.gamma_minus, self.order)

    def dn_plus(self, u: GridField) -> np.ndarray:
        return -u.normal_derivative(self.sp.gamma_plus, self.order)

    def tr_minus(self, u: GridField) -> np.ndarray:
        return u.trace(self.sp.gamma_minus)

    def tr_plus(self, u: GridField) -> np.ndarray:
        return u.trace(self.sp.gamma_plus)

    def flux(self, dn: np.ndarray) -> float:
        """``int_Gamma dn`` with the quadrature the solvers use."""
        return float(np.sum(self.w_gamma * dn))

    def int_minus(self, fn) -> float:
        g = self.sp.grid_minus
        if isinstance(g, IntervalGrid):
            vals = ScalarFunction.coerce(fn)(g.x, 0.0 * g.x)
        else:
            X, Y = g.mesh()
            vals = ScalarFunction.coerce(fn)(X, Y)
        return float(np.sum(g.weights() * vals))

    def div_h(self, u: np.ndarray) -> np.ndarray:
        return _tangential_term(u, self.h, self.nodes, self.config.method)

    # -- solves -------------------------------------------------------------
    def _outer(self, segs, grid, data):
        return [Dirichlet(s, _outer_values(data, segment_nodes(grid, s))) for s in segs]

    def solve_minus(self, key, rhs, kind: str, gamma_data, outer_data=0.0) -> GridField:
        """Problem on ``D-``: Dirichlet or Neumann data on ``Gamma``.

        Neumann data are ``d_n u`` with ``n`` into ``D+`` (the outward normal
        of ``D-``).  For an enclosed ``D-`` a Neumann problem is pinned by
        ``int_Gamma u = 0``; the cascade fixes the constant afterwards.
        """
        sp = self.sp
        bcs = self._outer(sp.outer_minus, sp.grid_minus, outer_data)
        if kind == "dirichlet":
            bcs.append(Dirichlet(sp.gamma_minus, gamma_data))
        elif self.config.enclosed:
            bcs.append(NeumannWithCompatibility(sp.gamma_minus, gamma_data, 0.0, 1.0))
        else:
            bcs.append(Neumann(sp.gamma_minus, gamma_data))
        spec = validate(BvpSpec(sp.dom_minus, _LAPLACE, rhs, tuple(bcs), label=f"u-{key}"))
        self.specs[("minus",) + key] = spec
        if spec.has_pin:
            return solve_pinned_neumann(spec, sp.grid_minus)
        return solve(spec, sp.grid_minus)

    def solve_plus(self, key, rhs, kind: str, gamma_data, outer_data=0.0) -> GridField:
        """Problem on ``D+``; Neumann data are ``d_n u`` with ``n`` into ``D+``."""
        sp = self.sp
        bcs = self._outer(sp.outer_plus, sp.grid_plus, outer_data)
        if kind == "dirichlet":
            bcs.append(Dirichlet(sp.gamma_plus, gamma_data))
        else:
            bcs.append(Neumann(sp.gamma_plus, -np.asarray(gamma_data, dtype=float)))
        spec = validate(BvpSpec(sp.dom_plus, _LAPLACE, rhs, tuple(bcs), label=f"u+{key}"))
        self.specs[("plus",) + key] = spec
        return solve(spec, sp.grid_plus)

    def phi1(self) -> GridField:
        """Harmonic in ``D+``, 1 on ``Gamma`` and 0 on ``partial D``."""
        if self._phi1 is None:
            self._phi1 = self.solve_plus(("phi1",), 0.0, "dirichlet", np.ones(self.nodes.n))
        return self._phi1

    def zero_minus(self) -> GridField:
        g = self.sp.grid_minus
        return GridField(g, np.zeros(g.shape))

    def zero_plus(self) -> GridField:
        g = self.sp.grid_plus
        return GridField(g, np.zeros(g.shape))


def _flux_integrals(cas: _Cascade, f, g) -> tuple[float, float, float, float]:
    """``int_{D-} f`` and ``int_Gamma d_n phi_k`` for the three auxiliary problems."""
    phi1 = cas.phi1()
    phi2 = cas.solve_plus(("phi2",), f, "dirichlet", np.zeros(cas.nodes.n))
    phi3 = cas.solve_plus(("phi3",), 0.0, "dirichlet", np.zeros(cas.nodes.n), g)
    return (cas.int_minus(f), cas.flux(cas.dn_plus(phi1)), cas.flux(cas.dn_plus(phi2)),
            cas.flux(cas.dn_plus(phi3)))


@dataclass(frozen=True)
class NeumannConstant:
    """``C0`` and the flux integrals it is built from."""

    C0: float
    int_f: float
    flux_phi1: float
    flux_phi2: float
    flux_phi3: float

    def __float__(self) -> float:
        return self.C0


def neumann_constant(config: InterfaceConfig, grid, f=None, g=None, order: int = DEFAULT_ORDER) -> NeumannConstant:
    """``C0 = -(int_{D-} f + int_Gamma (d_n phi2 + d_n phi3)) / int_Gamma d_n phi1``.

    ``phi1`` is harmonic in ``D+`` with ``phi1 = 1`` on ``Gamma`` and 0 on
    ``partial D``; ``phi2`` solves ``-Lap phi2 = f`` with zero data;
    ``phi3`` is harmonic with ``phi3 = 0`` on ``Gamma`` and ``g`` on
    ``partial D``.  ``n`` points into ``D+``.
    """
    if not config.enclosed:
        raise DataError("the Neumann constant is defined for an enclosed D- only")
    cas = _Cascade(config, grid, order)
    return _neumann_constant(cas, config.f if f is None else f, config.g if g is None else g)


def _neumann_constant(cas: _Cascade, f, g) -> NeumannConstant:
    int_f, f1, f2, f3 = _flux_integrals(cas, f, g)
    if f1 == 0.0 or not np.isfinite(f1):
        raise DegenerateError("the flux of phi1 through the interface vanishes")
    return NeumannConstant(-(int_f + f2 + f3) / f1, int_f, f1, f2, f3)


def _fix_constant(cas: _Cascade, um: GridField, up: GridField, target: float) -> tuple:
    """Shift ``um`` by ``c`` (and ``up`` by ``c phi1``) so that ``int_Gamma d_n up = target``."""
    phi1 = cas.phi1()
    f1 = cas.flux(cas.dn_plus(phi1))
    if f1 == 0.0:
        raise DegenerateError("the flux of phi1 through the interface vanishes")
    c = (target - cas.flux(cas.dn_plus(up))) / f1
    return um + c, up + c * phi1, c


def _check_compat(cas: _Cascade, data: np.ndarray, int_rhs: float, what: str) -> float:
    """Solvability of a Neumann problem on an enclosed ``D-``: ``int_Gamma data + int f = 0``."""
    res = cas.flux(data) + int_rhs
    scale = max(1.0, abs(int_rhs), float(np.sum(cas.w_gamma * np.abs(data))))
    if abs(res) > COMPAT_TOL * scale:
        raise CompatibilityError(f"{what}: interface compatibility residual {res:.3e}")
    return res


def _pair(um: GridField, up: GridField, label: str) -> PiecewiseField:
    return PiecewiseField(um, up, label)


# ---------------------------------------------------------------------------
# Case (i): sigma -> infinity, mu = 1/sigma
# ---------------------------------------------------------------------------


CASE_I_M, CASE_I_N = 1, 2
CASE_II_M, CASE_II_N = 1, 1


def case_i_cascade(config: InterfaceConfig, grid, mu: float | None = None,
                   order: int = DEFAULT_ORDER) -> DoubleSeries:
    """``u_{m,n}`` for ``m <= 1``, ``n <= 2`` as piecewise fields, keyed ``(m, n)``.

    The expansion is ``u- = sum eps^m mu^n u-_{m,n}`` on ``D-`` and the same
    for ``u+``.  For an enclosed ``D-`` every Neumann problem on ``D-`` is
    solved up to a constant, which is fixed by the solvability condition of
    the next problem in the row (``C0`` for ``u-_{0,0}``).
    """
    if config.regime != "CaseI":
        raise DataError("case_i_cascade needs an InterfaceConfig with regime 'CaseI'")
    cas = _Cascade(config, grid, order)
    f, g = config.f, config.g
    n_nodes = cas.nodes.n
    int_f = cas.int_minus(f)
    um: dict = {}
    up: dict = {}
    info: dict = {"constants": {}, "compat_residuals": {}}

    # m = 0
    if config.enclosed:
        nc = _neumann_constant(cas, f, g)
        info["C0"] = nc
        um[0, 0] = cas.zero_minus() + nc.C0
    else:
        um[0, 0] = cas.solve_minus((0, 0), 0.0, "neumann", np.zeros(n_nodes), g)
    for n in range(CASE_I_N + 1):
        up[0, n] = cas.solve_plus((0, n), f if n == 0 else 0.0, "dirichlet",
                                  cas.tr_minus(um[0, n]), g if n == 0 else 0.0)
        if n > 0 and config.enclosed:
            um[0, n], up[0, n], c = _fix_constant(cas, um[0, n], up[0, n], 0.0)
            info["constants"][0, n] = c
        if n == CASE_I_N:
            break
        data = cas.dn_plus(up[0, n])
        rhs = f if n == 0 else 0.0
        if config.enclosed:
            info["compat_residuals"][0, n + 1] = _check_compat(
                cas, data, int_f if n == 0 else 0.0, f"u-_(0,{n + 1})")
        um[0, n + 1] = cas.solve_minus((0, n + 1), rhs, "neumann", data)

    # m = 1
    um[1, 0] = cas.solve_minus((1, 0), 0.0, "neumann", cas.div_h(cas.tr_minus(um[0, 0])))
    for n in range(CASE_I_N + 1):
        jump = cas.h * (cas.dn_plus(up[0, n]) - cas.dn_minus(um[0, n]))
        up[1, n] = cas.solve_plus((1, n), 0.0, "dirichlet", cas.tr_minus(um[1, n]) - jump)
        if config.enclosed:
            um[1, n], up[1, n], c = _fix_constant(cas, um[1, n], up[1, n], 0.0)
            info["constants"][1, n] = c
        if n == CASE_I_N:
            break
        data = cas.dn_plus(up[1, n]) - cas.div_h(cas.tr_plus(up[0, n]) - cas.tr_minus(um[0, n + 1]))
        if config.enclosed:
            info["compat_residuals"][1, n + 1] = _check_compat(cas, data, 0.0, f"u-_(1,{n + 1})")
        um[1, n + 1] = cas.solve_minus((1, n + 1), 0.0, "neumann", data)

    terms = {k: _pair(um[k], up[k], f"u_{k}") for k in sorted(um, key=lambda k: (k[0], k[1]))}
    regime = InterfaceRegime("CaseI", "mu", mu if mu is not None else 1.0 / config.sigma_minus)
    return DoubleSeries(regime, terms, cas.specs, grid, info)


# ---------------------------------------------------------------------------
# Case (ii): sigma -> 0
# ---------------------------------------------------------------------------


def case_ii_cascade(config: InterfaceConfig, grid, sigma: float | None = None,
                    order: int = DEFAULT_ORDER) -> DoubleSeries:
    """``u_{m,n}`` for ``m <= 1``, ``-1 <= n <= 1``; ``u+_{m,-1} = 0``.

    The expansion is ``sum eps^m sigma^n u_{m,n}``.  Every problem has
    Dirichlet data somewhere, so no constants need fixing.
    """
    if config.regime != "CaseII":
        raise DataError("case_ii_cascade needs an InterfaceConfig with regime 'CaseII'")
    cas = _Cascade(config, grid, order)
    f, g = config.f, config.g
    zero = np.zeros(cas.nodes.n)
    um: dict = {}
    up: dict = {}

    um[0, -1] = cas.solve_minus((0, -1), f, "dirichlet", zero)
    up[0, -1] = cas.zero_plus()
    for n in range(CASE_II_N + 1):
        up[0, n] = cas.solve_plus((0, n), f if n == 0 else 0.0, "neumann",
                                  cas.dn_minus(um[0, n - 1]), g if n == 0 else 0.0)
        um[0, n] = cas.solve_minus((0, n), 0.0, "dirichlet", cas.tr_plus(up[0, n]),
                                   g if n == 0 else 0.0)

    um[1, -1] = cas.solve_minus((1, -1), 0.0, "dirichlet", -cas.h * cas.dn_minus(um[0, -1]))
    up[1, -1] = cas.zero_plus()
    for n in range(CASE_II_N + 1):
        data = cas.dn_minus(um[1, n - 1]) + cas.div_h(cas.tr_plus(up[0, n]) - cas.tr_minus(um[0, n - 1]))
        up[1, n] = cas.solve_plus((1, n), 0.0, "neumann", data)
        jump = cas.h * (cas.dn_plus(up[0, n]) - cas.dn_minus(um[0, n]))
        um[1, n] = cas.solve_minus((1, n), 0.0, "dirichlet", cas.tr_plus(up[1, n]) + jump)

    terms = {k: _pair(um[k], up[k], f"u_{k}") for k in sorted(um, key=lambda k: (k[0], k[1]))}
    regime = InterfaceRegime("CaseII", "sigma", sigma if sigma is not None else config.sigma_minus)
    return DoubleSeries(regime, terms, cas.specs, grid, {})


# ---------------------------------------------------------------------------
# Direct solves
# ---------------------------------------------------------------------------


def direct_solve(config: InterfaceConfig, grid, sigma_minus: float | None = None) -> PiecewiseField:
    """The unperturbed transmission problem (``eps = 0``) solved directly."""
    op = config.operator(sigma_minus)
    spec = validate(BvpSpec(config.domain, op, Piecewise(config.f, config.f),
                            _dirichlet_bcs(config, grid, config.g), TransmissionJump(0.0, 0.0),
                            label="direct"))
    return solve(spec, grid)


def u_minus_direct(config: InterfaceConfig, sigma: float, grid) -> float:
    """Area mean of ``u-`` over ``D-`` for the direct solve with ``sigma- = sigma``."""
    u = direct_solve(config, grid, sigma)
    w = u.minus.grid.weights()
    return float(np.sum(w * u.minus.values) / np.sum(w))
