"""Thin layers of contrasting conductivity: double expansions in two small parameters.

The interior ``-lap u_int = f_int`` on ``D`` is coated by a layer of
thickness ``eps h`` where ``-sigma lap u_ext = f_ext``; ``u = g`` on the outer
boundary.  The interior solution is expanded in ``eps`` and a second small
parameter whose choice fixes the type of boundary condition of every term:

``CaseI``    ``mu = eps/sigma``          Dirichlet data
``CaseII1``  ``lambda = sigma/eps``      Neumann data on the coated part,
                                         Dirichlet where ``h = 0``
``CaseII2``  ``lambda = sigma/eps``      Neumann data everywhere; the series
                                         starts at ``lambda^-1`` and each
                                         constant is pinned by the next order
``CaseIII``  ``theta = eps/sigma - c``   Robin data ``u + c h d_n u``

The exterior operator after rescaling is the plain Laplacian, so the
reductions ``F_k`` use ``sigma = 1``, ``c = 0`` and a multiple of ``f_ext``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Any, Callable

import numpy as np

from .bvp import (BoundaryCondition, BvpSpec, Dirichlet, EllipticOperator, Neumann,
                  NeumannWithCompatibility, Robin, ScalarFunction, validate)
from .errors import DataError, GeometryError, OracleError, UnsupportedError
from .fields import IntervalGrid, boundary_weights
from .geometry import BoundaryProfile, Interval
from .hierarchy import _check_grid
from .ilw import ReducerContext, fornberg_weights, reduce
from .solvers import solve, solve_pinned_neumann
from .traces import SegmentNodes, normal_derivatives, profile_values, reducer_context, segment_nodes

REGIMES = ("CaseI", "CaseII1", "CaseII2", "CaseIII")
MAX_TOTAL = 2


# ---------------------------------------------------------------------------
# Regimes and series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContrastRegime:
    """Scaling regime with its optional parameter values.

    ``c`` is required (and positive) for ``CaseIII``.  ``mu``, ``lam`` and
    ``theta`` are the values of the second parameter used when a partial sum
    is assembled without an explicit value.
    """

    tag: str
    c: float | None = None
    mu: float | None = None
    lam: float | None = None
    theta: float | None = None

    def __post_init__(self) -> None:
        if self.tag not in REGIMES:
            raise DataError(f"unknown regime {self.tag!r}; expected one of {REGIMES}")
        if self.tag == "CaseIII":
            if self.c is None or not (0 < self.c < np.inf):
                raise DataError("CaseIII requires c in (0, inf)")
        elif self.c is not None:
            raise DataError(f"{self.tag} takes no c")

    @property
    def parameter(self) -> str:
        return {"CaseI": "mu", "CaseII1": "lam", "CaseII2": "lam", "CaseIII": "theta"}[self.tag]

    @property
    def default_parameter(self) -> float | None:
        return getattr(self, self.parameter)

    @property
    def first_n(self) -> int:
        return -1 if self.tag == "CaseII2" else 0

    def second_parameter(self, eps: float, sigma: float) -> float:
        """Value of ``mu``, ``lambda`` or ``theta`` for a given ``(eps, sigma)``."""
        if self.tag == "CaseI":
            return eps / sigma
        if self.tag == "CaseIII":
            return eps / sigma - self.c
        return sigma / eps

    def sigma_of(self, eps: float, p: float) -> float:
        """The contrast ``sigma`` that corresponds to ``(eps, p)``."""
        if self.tag == "CaseI":
            return eps / p
        if self.tag == "CaseIII":
            return eps / (self.c + p)
        return p * eps


def index_set(regime: ContrastRegime, total: int = MAX_TOTAL) -> list[tuple[int, int]]:
    """Indices ``(m, n)`` with ``m + n <= total`` in solving order (by ``n``, then ``m``)."""
    if total > MAX_TOTAL:
        raise UnsupportedError(f"terms with m + n > {MAX_TOTAL} are not supported")
    return [(m, n) for n in range(regime.first_n, total + 1) for m in range(total - n + 1)]


@dataclass
class DoubleSeries:
    """Terms ``u_int,m,n`` keyed by ``(m, n)`` with the problems they solve."""

    regime: ContrastRegime
    terms: dict
    specs: dict
    grid: Any
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, key: tuple[int, int]):
        return self.terms[key]

    def keys(self) -> list[tuple[int, int]]:
        return list(self.terms)

    def partial_sum(self, eps: float, p: float | None = None, total: int | None = None):
        """``sum eps^m p^n u_int,m,n`` over the terms with ``m + n <= total``."""
        if p is None:
            p = self.regime.default_parameter
        if p is None:
            raise DataError(f"no value given for {self.regime.parameter}")
        if p == 0 and any(n < 0 for _, n in self.terms):
            raise DataError("the lambda^-1 terms need lambda != 0")
        out = None
        for (m, n), u in self.terms.items():
            if total is not None and m + n > total:
                continue
            w = (eps**m) * (p**n)
            out = u * w if out is None else out + w * u
        return out

    def resolve(self, key: tuple[int, int]):
        """Solve the recorded problem of term ``key`` again."""
        spec = self.specs[key]
        if spec.has_pin:
            return solve_pinned_neumann(spec, self.grid)
        return solve(spec, self.grid)


# ---------------------------------------------------------------------------
# Boundary data of u_int,m,n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeSegment:
    """Traces on one boundary segment: the profile, ``d_n^k g`` and the exterior context."""

    name: str
    nodes: SegmentNodes
    h: np.ndarray
    g: tuple
    ctx: ReducerContext
    weights: np.ndarray

    @property
    def coated(self) -> bool:
        return bool(np.any(self.h != 0))


def _lookup(lower: dict, key: tuple[int, int], what: int, regime: ContrastRegime):
    if key[1] < regime.first_n:
        return 0.0
    if key[1] == -1 and regime.tag == "CaseII1":
        return 0.0
    if key not in lower or lower[key][what] is None:
        name = ("trace", "normal derivative")[what]
        raise DataError(f"the {name} of u_int,{key[0]},{key[1]} is needed first")
    return lower[key][what]


class _Terms:
    """Accessors ``U(m, n)`` and ``D(m, n)`` for the traces of lower terms."""

    def __init__(self, regime: ContrastRegime, lower: dict):
        self.regime, self.lower = regime, lower

    def U(self, m: int, n: int):
        return _lookup(self.lower, (m, n), 0, self.regime)

    def D(self, m: int, n: int):
        return _lookup(self.lower, (m, n), 1, self.regime)


def _F(seg: RegimeSegment, k: int, u, dnu, scale: float) -> np.ndarray:
    """``F_k`` of the rescaled exterior Laplacian with right-hand side ``scale * f_ext``."""
    ctx = seg.ctx if scale == 1.0 else seg.ctx.scaled(scale)
    return reduce(ctx, k, u, dnu)


def _tf(h: np.ndarray, k: int) -> np.ndarray:
    return h**k / factorial(k)


def _check_index(regime: ContrastRegime, m: int, n: int) -> None:
    if m < 0 or n < regime.first_n:
        raise UnsupportedError(f"index ({m}, {n}) is outside the {regime.tag} index set")
    if m + n > MAX_TOTAL:
        raise UnsupportedError(f"terms with m + n > {MAX_TOTAL} are not supported")


def dirichlet_data_case_i(m: int, n: int, seg: RegimeSegment, t: _Terms) -> np.ndarray:
    """Dirichlet data of ``u_int,m,n`` for ``mu = eps/sigma``."""
    h, g = seg.h, seg.g
    if m == 0:
        return g[0] * np.ones(seg.nodes.n) if n == 0 else -h * t.D(0, n - 1)
    if n == 0:
        out = _tf(h, m) * g[m]
        for k in range(2, m + 1):
            out = out - _tf(h, k) * _F(seg, k, t.U(m - k, 0), 0.0, 0.0)
        return out
    out = -h * t.D(m, n - 1)
    for k in range(2, m + 1):
        out = out - _tf(h, k) * _F(seg, k, t.U(m - k, n), t.D(m + 1 - k, n - 1), 0.0)
    return out - _tf(h, m + 1) * _F(seg, m + 1, 0.0, t.D(0, n - 1), float(n == 1))


def neumann_data_case_ii(m: int, n: int, seg: RegimeSegment, t: _Terms) -> np.ndarray:
    """Neumann data of ``u_int,m,n`` for ``lambda = sigma/eps`` on a coated segment.

    The ``CaseII1`` data are those of ``CaseII2`` with every ``n = -1`` term
    set to zero.
    """
    h, g = seg.h, seg.g
    if np.any(h <= 0):
        raise GeometryError("Neumann data of the lambda regimes need h > 0 on the coated segment")
    if n == -1:
        return np.zeros(seg.nodes.n)
    if m == 0:
        return float(n == 1) * g[0] / h - t.U(0, n - 1) / h
    out = float(n == 1) * h ** (m - 1) / factorial(m) * g[m] - t.U(m, n - 1) / h
    out = out - h**m / factorial(m + 1) * _F(seg, m + 1, 0.0, t.D(0, n), float(n == 0))
    for k in range(2, m + 1):
        out = out - h ** (k - 1) / factorial(k) * _F(seg, k, t.U(m - k, n - 1),
                                                      t.D(m + 1 - k, n), 0.0)
    return out


def robin_data_case_iii(m: int, n: int, seg: RegimeSegment, t: _Terms, c: float) -> np.ndarray:
    """Right-hand side of ``u_int,m,n + c h d_n u_int,m,n`` for ``theta = eps/sigma - c``."""
    h, g = seg.h, seg.g
    if m == 0:
        return g[0] * np.ones(seg.nodes.n) if n == 0 else -h * t.D(0, n - 1)
    if n == 0:
        out = _tf(h, m) * g[m]
        for k in range(2, m + 1):
            out = out - _tf(h, k) * _F(seg, k, t.U(m - k, 0), c * t.D(m + 1 - k, 0), 0.0)
        return out - _tf(h, m + 1) * _F(seg, m + 1, 0.0, c * t.D(0, 0), c)
    out = -h * t.D(m, n - 1)
    out = out - _tf(h, m + 1) * _F(seg, m + 1, 0.0, t.D(0, n - 1) + c * t.D(0, n), float(n == 1))
    for k in range(2, m + 1):
        out = out - _tf(h, k) * _F(seg, k, t.U(m - k, n),
                                   t.D(m + 1 - k, n - 1) + c * t.D(m + 1 - k, n), 0.0)
    return out


def regime_bc(regime: ContrastRegime, m: int, n: int, seg: RegimeSegment,
              lower: dict) -> BoundaryCondition:
    """Boundary condition of ``u_int,m,n`` on one segment.

    ``lower`` maps ``(m', n')`` to ``(trace, normal derivative)`` of terms
    already available on this segment (a trace may be ``None`` when only the
    Neumann data of a term is known).  Segments with ``h = 0`` are uncoated:
    they carry ``u = g`` for ``(0, 0)`` and ``u = 0`` otherwise.
    """
    _check_index(regime, m, n)
    t = _Terms(regime, lower)
    name = seg.name
    if not seg.coated:
        if regime.tag == "CaseII2":
            raise GeometryError("CaseII2 needs h > 0 on the whole boundary")
        return Dirichlet(name, seg.g[0] * np.ones(seg.nodes.n) if (m, n) == (0, 0) else 0.0)
    if regime.tag == "CaseI":
        return Dirichlet(name, dirichlet_data_case_i(m, n, seg, t))
    if regime.tag in ("CaseII1", "CaseII2"):
        return Neumann(name, neumann_data_case_ii(m, n, seg, t))
    rhs = robin_data_case_iii(m, n, seg, t, regime.c)
    return Robin(name, np.ones(seg.nodes.n), regime.c * seg.h, rhs)


def solvability_pin(regime: ContrastRegime, m: int, n: int, segs: list[RegimeSegment],
                    lower_by_seg: dict, int_f_int: float) -> float:
    """Value that ``sum over segments of int u_int,m,n / h`` must take (CaseII2).

    It is the compatibility condition of the Neumann problem of
    ``u_int,m,n+1``.  ``lower_by_seg[name]`` must hold the traces of the
    solved terms and the Neumann data of ``(j, n + 1)`` for ``j < m``.
    ``int_f_int`` is the integral of ``f_int`` over ``D``.
    """
    if regime.tag != "CaseII2":
        raise DataError("solvability pins belong to CaseII2")
    if m < 0 or n < -1:
        raise UnsupportedError(f"index ({m}, {n}) is outside the CaseII2 index set")
    total = float(n == -1) * int_f_int if m == 0 else 0.0
    for seg in segs:
        h, g = seg.h, seg.g
        if np.any(h <= 0):
            raise GeometryError("CaseII2 pins need h > 0 on the whole boundary")
        t = _Terms(regime, lower_by_seg[seg.name])
        if m == 0:
            integrand = float(n == 0) * g[0] / h
        else:
            if len(g) <= m:
                raise DataError(f"the pin of order m = {m} needs d_n^{m} g")
            integrand = float(n == 0) * h ** (m - 1) / factorial(m) * g[m]
            for k in range(2, m + 1):
                integrand = integrand - h ** (k - 1) / factorial(k) * _F(
                    seg, k, t.U(m - k, n), t.D(m + 1 - k, n + 1), 0.0)
            integrand = integrand - h**m / factorial(m + 1) * _F(
                seg, m + 1, 0.0, t.D(0, n + 1), float(n == -1))
        total += float(np.sum(seg.weights * integrand * np.ones(seg.nodes.n)))
    return total


# ---------------------------------------------------------------------------
# Cascades
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoParamProblem:
    """Interior ``-lap u = f_int`` on ``D``, layer ``-sigma lap u = f_ext``, ``u = g`` outside.

    Every segment of ``D`` may be coated; ``h = 0`` on a segment leaves it
    uncoated.  ``g`` must be defined near the boundary.
    """

    domain: Any
    f_int: Any
    f_ext: Any
    profile: BoundaryProfile
    g: Any = 0.0
    method: str | None = None
    label: str = ""


def _segments(problem: TwoParamProblem, grid, order_g: int) -> list[RegimeSegment]:
    lap = EllipticOperator(a=1.0)
    out = []
    for s in problem.domain.segments:
        nodes = segment_nodes(grid, s)
        h = profile_values(problem.profile, nodes)
        if np.any(h < 0):
            raise GeometryError("coatings need h >= 0")
        if np.any(h != 0) and np.any(h == 0):
            raise GeometryError(f"segment {s!r} is partly coated; split it or make h positive")
        ctx = reducer_context(lap, problem.f_ext, nodes, problem.method)
        g = tuple(normal_derivatives(problem.g, nodes, order_g))
        out.append(RegimeSegment(s, nodes, h, g, ctx, boundary_weights(grid, s)))
    return out


def _domain_integral(fn: Any, grid) -> float:
    f = ScalarFunction.coerce(fn)
    if isinstance(grid, IntervalGrid):
        X, Y = grid.x, np.zeros(grid.n)
    else:
        X, Y = grid.mesh()
    return float(np.sum(grid.weights() * f(X, Y)))


def _check_regime_geometry(regime: ContrastRegime, segs: list[RegimeSegment]) -> None:
    coated = [s.coated for s in segs]
    if regime.tag == "CaseII1" and all(coated):
        raise GeometryError("CaseII1 needs an uncoated part of the boundary; use CaseII2")
    if regime.tag == "CaseII2":
        for s in segs:
            if np.any(s.h <= 0):
                raise GeometryError("CaseII2 requires h > 0 on all of the boundary")


def _record(lower_by_seg: dict, key, segs, u, regime, bcs, order: int) -> None:
    for seg, bc in zip(segs, bcs):
        tr = u.trace(seg.name)
        if bc.kind in ("neumann", "neumann_compat"):
            dn = np.broadcast_to(np.asarray(bc.g, dtype=float), tr.shape).copy()
        elif bc.kind == "robin" and np.all(np.asarray(bc.beta) > 0):
            # the Robin identity gives d_n u from the trace without differencing
            dn = (np.asarray(bc.g, dtype=float) - tr) / np.asarray(bc.beta, dtype=float)
        else:
            dn = u.normal_derivative(seg.name, order)
        lower_by_seg[seg.name][key] = (tr, dn)


def _ensure_next_row(regime, m, n, segs, lower_by_seg) -> None:
    """Neumann data of ``(j, n + 1)`` for ``j < m``, needed by the pin of ``(m, n)``."""
    for j in range(m):
        key = (j, n + 1)
        for seg in segs:
            low = lower_by_seg[seg.name]
            if key in low:
                continue
            t = _Terms(regime, low)
            low[key] = (None, neumann_data_case_ii(j, n + 1, seg, t))


def compute_two_param_terms(problem: TwoParamProblem, regime: ContrastRegime, grid,
                            total: int = MAX_TOTAL, order: int = 4) -> DoubleSeries:
    """Solve the cascade ``u_int,m,n`` for ``m + n <= total`` on ``grid``."""
    _check_grid(problem, grid)
    keys = index_set(regime, total)
    max_m = max(m for m, _ in keys)
    segs = _segments(problem, grid, max_m + 1)
    _check_regime_geometry(regime, segs)
    int_f = _domain_integral(problem.f_int, grid) if regime.tag == "CaseII2" else 0.0
    lap = EllipticOperator(a=1.0)
    lower_by_seg = {s.name: {} for s in segs}
    terms, specs, pins = {}, {}, {}
    for (m, n) in keys:
        bcs = [regime_bc(regime, m, n, seg, lower_by_seg[seg.name]) for seg in segs]
        rhs = problem.f_int if (m, n) == (0, 0) else 0.0
        if regime.tag == "CaseII2":
            _ensure_next_row(regime, m, n, segs, lower_by_seg)
            pin = solvability_pin(regime, m, n, segs, lower_by_seg, int_f)
            bcs = [NeumannWithCompatibility(b.segment, b.g, pin if i == 0 else 0.0,
                                            weight=1.0 / seg.h)
                   for i, (b, seg) in enumerate(zip(bcs, segs))]
            spec = validate(BvpSpec(problem.domain, lap, rhs, tuple(bcs), label=f"u_int,{m},{n}"))
            u = solve_pinned_neumann(spec, grid)
            pins[(m, n)] = u.info["pin"]
        else:
            spec = validate(BvpSpec(problem.domain, lap, rhs, tuple(bcs), label=f"u_int,{m},{n}"))
            u = solve(spec, grid)
        u.label = f"u_int,{m},{n}"
        terms[(m, n)] = u
        specs[(m, n)] = spec
        _record(lower_by_seg, (m, n), segs, u, regime, bcs, order)
    return DoubleSeries(regime, terms, specs, grid, {"problem": problem.label, "pins": pins})


def example4_problem(h0: float, h1: float) -> TwoParamProblem:
    """The interval ``(0, 1)`` with ``f_int = f_ext = -2`` and ``g = 1``."""
    return TwoParamProblem(Interval(0.0, 1.0), -2.0, -2.0, BoundaryProfile.endpoints(h0, h1), 1.0,
                           label=f"example4 h0={h0!r} h1={h1!r}")


# ---------------------------------------------------------------------------
# Exact 1D solution and its coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Example4Solution:
    """Closed-form solution on ``(-eps h0, 1 + eps h1)`` with ``f = -2`` and ``g = 1``."""

    eps: float
    sigma: float
    h0: float
    h1: float
    A: float
    B: float
    C: float

    def u_int(self, x):
        x = np.asarray(x, dtype=float)
        return x**2 - self.A * x + self.B - self.h0 * self.h1 * self.eps / self.sigma * self.C

    def u_ext(self, x):
        """Exterior solution on ``[-eps h0, 0]`` and ``[1, 1 + eps h1]``."""
        x = np.asarray(x, dtype=float)
        A, B, s = self.A, self.B, self.sigma
        shift = self.h0 * self.h1 * self.eps / s * self.C
        left = (x**2 - A * x) / s + B - shift
        right = (x**2 - A * x + A - 1) / s + (1 - A + B) - shift
        if np.any((x > 0) & (x < 1)):
            raise DataError("the exterior solution lives outside (0, 1)")
        return np.where(x <= 0, left, right)


def exact_1d(eps: float, sigma: float, h0: float, h1: float) -> Example4Solution:
    """Exact solution of the coated interval for ``f_int = f_ext = -2`` and ``g = 1``."""
    if h0 < 0 or h1 < 0:
        raise DataError("h0 and h1 must be non-negative")
    if sigma <= 0:
        raise DataError("sigma must be positive")
    if eps < 0:
        raise DataError("eps must be non-negative")
    H = h0 + h1
    den = sigma + H * eps
    A = (sigma + 2 * h1 * eps + (h1**2 - h0**2) * eps**2) / den
    B = (sigma + h1 * eps - h0**2 * eps**2) / den
    C = (2 * eps + H * eps**2) / den
    return Example4Solution(eps, sigma, h0, h1, A, B, C)


# Rational functions of (eps, p) in each regime, as numerator/denominator
# polynomials {(i, j): coefficient of eps^i p^j}.  The lambda regimes carry the
# C-term as lambda^-1 times a series, recorded by the shift ``n_shift = 1``.


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (i, j), x in a.items():
        for (k, l), y in b.items():
            out[(i + k, j + l)] = out.get((i + k, j + l), 0) + x * y
    return out


def _poly_add(*ps: dict) -> dict:
    out: dict = {}
    for p in ps:
        for k, v in p.items():
            out[k] = out.get(k, 0) + v
    return out


def _regime_rationals(tag: str, h0, h1, c) -> list[tuple[dict, dict, Any, int]]:
    """``[(num, den, weight, n_shift)]`` such that ``u_int = x^2 + sum weight * num/den * p^-n_shift``.

    ``weight`` is ``'-x'``, ``'1'`` or a number multiplying the rational.
    """
    H = h0 + h1
    d = h1 * h1 - h0 * h0
    if tag in ("CaseI", "CaseIII"):
        # mu = eps/sigma, and mu = c + theta in the Robin regime
        mu = {(0, 1): 1} if tag == "CaseI" else {(0, 0): c, (0, 1): 1}
        one = {(0, 0): 1}
        eps = {(1, 0): 1}
        den = _poly_add(one, _poly_mul({(0, 0): H}, mu))
        numA = _poly_add(one, _poly_mul({(0, 0): 2 * h1}, mu), _poly_mul(_poly_mul({(0, 0): d}, eps), mu))
        numB = _poly_add(one, _poly_mul({(0, 0): h1}, mu), _poly_mul(_poly_mul({(0, 0): -h0 * h0}, eps), mu))
        numC = _poly_mul(_poly_mul(mu, mu), {(0, 0): 2, (1, 0): H})
        return [(numA, den, "-x", 0), (numB, den, "1", 0), (numC, den, -h0 * h1, 0)]
    if H == 0:
        raise OracleError("the lambda regimes need h0 + h1 > 0")
    den = {(0, 0): H, (0, 1): 1}
    numA = {(0, 1): 1, (0, 0): 2 * h1, (1, 0): d}
    numB = {(0, 1): 1, (0, 0): h1, (1, 0): -h0 * h0}
    numC = {(0, 0): 2, (1, 0): H}
    return [(numA, den, "-x", 0), (numB, den, "1", 0), (numC, den, -h0 * h1, 1)]


def _series_div(num: dict, den: dict, K: int) -> dict:
    """Coefficients of ``num/den`` up to total degree ``K`` (needs ``den[(0, 0)] != 0``)."""
    d00 = den.get((0, 0), 0)
    if d00 == 0:
        raise OracleError("the expansion point is a pole of the closed form")
    S: dict = {}
    for tot in range(K + 1):
        for i in range(tot + 1):
            j = tot - i
            acc = num.get((i, j), 0)
            for (a, b), v in den.items():
                if (a, b) != (0, 0) and a <= i and b <= j:
                    acc -= v * S[(i - a, j - b)]
            S[(i, j)] = acc / d00
    return S


def _as_fraction(v: float) -> Fraction:
    return Fraction(v)


def _poly_in_x(coeffs: tuple[float, float, float], x) -> np.ndarray:
    a2, a1, a0 = coeffs
    x = np.asarray(x, dtype=float)
    return a2 * x**2 + a1 * x + a0


def _rational_coefficients(regime: ContrastRegime, m: int, n: int, h0: float, h1: float):
    K = m + n + 2
    hf0, hf1 = _as_fraction(h0), _as_fraction(h1)
    cf = _as_fraction(regime.c) if regime.c is not None else None
    tag = "CaseII" if regime.tag in ("CaseII1", "CaseII2") else regime.tag
    a2 = Fraction(int((m, n) == (0, 0)))
    a1 = a0 = Fraction(0)
    for num, den, weight, shift in _regime_rationals(tag, hf0, hf1, cf):
        S = _series_div(num, den, K)
        v = S.get((m, n + shift), Fraction(0)) if n + shift >= 0 else Fraction(0)
        if weight == "-x":
            a1 -= v
        elif weight == "1":
            a0 += v
        else:
            a0 += weight * v
    return a2, a1, a0


def _float_closed_form(regime: ContrastRegime, h0: float, h1: float) -> Callable:
    """``(eps, p, x) -> p^shift * u_int`` in the regime's variables, in floating point."""
    tag = "CaseII" if regime.tag in ("CaseII1", "CaseII2") else regime.tag
    parts = _regime_rationals(tag, h0, h1, regime.c)
    shift = max(s for *_, s in parts)

    def ev(poly, e, p):
        return sum(v * e**i * p**j for (i, j), v in poly.items())

    def fn(e, p, x):
        x = np.asarray(x, dtype=float)
        out = x**2 * p**shift
        for num, den, weight, s in parts:
            r = ev(num, e, p) / ev(den, e, p) * p ** (shift - s)
            if weight == "-x":
                out = out - r * x
            elif weight == "1":
                out = out + r
            else:
                out = out + weight * r
        return out
    return fn, shift


def _fd_weights(order: int, step: float) -> tuple[np.ndarray, np.ndarray]:
    half = max((order + 1) // 2, 1)
    pts = step * np.arange(-half, half + 1, dtype=float)
    return pts, fornberg_weights(0.0, pts, order)[order]


def _richardson_coefficient(fn, m: int, n: int, x, step: float) -> tuple[np.ndarray, float]:
    """Taylor coefficient of ``eps^m p^n`` of ``fn`` by central differences and Richardson."""
    levels = []
    for r in range(3):
        s = step / 2**r
        pe, we = _fd_weights(m, s)
        pp, wp = _fd_weights(n, s)
        acc = 0.0
        for e, a in zip(pe, we):
            for p, b in zip(pp, wp):
                if a * b != 0.0:
                    acc = acc + a * b * fn(e, p, x)
        levels.append(acc / (factorial(m) * factorial(n)))
    # the central stencils are even in the step, so eliminate step^2 then step^4
    r1 = [(4 * levels[i + 1] - levels[i]) / 3 for i in range(2)]
    best = (16 * r1[1] - r1[0]) / 15
    noise = float(np.max(np.abs(best - r1[1])))
    return best, noise


def coefficient_oracle(regime: ContrastRegime, m: int, n: int, x, h0: float, h1: float,
                       method: str = "rational", step: float = 0.05) -> np.ndarray:
    """Coefficient of ``eps^m p^n`` of the exact interior solution at the points ``x``.

    ``method="rational"`` expands the closed form exactly in rational
    arithmetic (``h0``, ``h1`` and ``c`` are converted to fractions);
    ``method="richardson"`` differentiates it numerically and raises
    OracleError when the coefficient is below the estimated noise.
    """
    if regime.tag == "CaseII1" and h0 * h1 != 0:
        raise OracleError("CaseII1 needs h0 = 0 or h1 = 0")
    if regime.tag == "CaseII2" and min(h0, h1) <= 0:
        raise OracleError("CaseII2 needs h0 > 0 and h1 > 0")
    if m < 0 or n < regime.first_n:
        raise OracleError(f"({m}, {n}) is outside the {regime.tag} index set")
    if method == "rational":
        coeffs = tuple(float(v) for v in _rational_coefficients(regime, m, n, h0, h1))
        return _poly_in_x(coeffs, x)
    if method != "richardson":
        raise DataError(f"unknown oracle method {method!r}")
    fn, shift = _float_closed_form(regime, h0, h1)
    val, noise = _richardson_coefficient(fn, m, n + shift, x, step)
    if np.max(np.abs(val)) <= 10 * noise:
        raise OracleError(f"coefficient ({m}, {n}) is below the differencing noise {noise:.1e}")
    return val
