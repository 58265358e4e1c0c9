"""Expansion terms for a smoothly perturbed boundary.

On ``D_eps = {x + t h(x) n(x) : 0 <= t < eps}`` grown from the reference
domain ``D`` the solution is expanded as ``u_eps = sum eps^n u_n`` with every
``u_n`` posed on ``D``.  The boundary data of ``u_n`` come from a Taylor
expansion in the normal direction; normal derivatives of order two and three
are traded for tangential ones by the reducers in :mod:`asymhier.ilw`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from typing import Any, Callable, Sequence

import numpy as np

from .bvp import BvpSpec, Dirichlet, EllipticOperator, Neumann, Robin, ScalarFunction, validate
from .errors import DataError, GridError, SolverError, UnsupportedError
from .fields import DEFAULT_ORDER, GridField, IntervalGrid, PolarGrid, RectGrid
from .geometry import Annulus, BoundaryProfile, Disk, Interval, Rectangle
from .ilw import ReducerContext, reduce, reduce_rect_k2, reduce_rect_k3
from .solvers import solve
from .traces import SegmentNodes, normal_derivatives, profile_values, reducer_context, segment_nodes

MAX_ORDER = 3


# ---------------------------------------------------------------------------
# Series container
# ---------------------------------------------------------------------------


@dataclass
class ExpansionSeries:
    """Terms ``u_0 .. u_N`` with the problems they solve.

    The terms do not depend on ``eps``; :meth:`partial_sum` combines them.
    """

    regime: str
    terms: list
    specs: list
    grid: Any
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def partial_sum(self, n: int, eps: float):
        """``sum_{k <= n} eps^k u_k`` evaluated node by node."""
        if not 0 <= n < len(self.terms):
            raise DataError(f"series has terms 0..{self.order}, asked for {n}")
        out = self.terms[0] * 1.0
        for k in range(1, n + 1):
            if eps != 0.0:
                out = out + (eps**k) * self.terms[k]
        return out

    def resolve(self, n: int):
        """Solve the recorded problem of term ``n`` again."""
        return solve(self.specs[n], self.grid)


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------


def default_perturbed(domain) -> tuple[str, ...]:
    if isinstance(domain, Interval):
        return ("left", "right")
    if isinstance(domain, Rectangle):
        return ("right",)
    if isinstance(domain, (Disk, Annulus)):
        return ("outer",)
    raise UnsupportedError(f"no smooth perturbation defined for {type(domain).__name__}")


@dataclass(frozen=True)
class SmoothProblem:
    """``-div(sigma grad u) + c u = f`` on ``D_eps`` with ``u = g`` on its boundary.

    Only the ``perturbed`` segments move; the others keep ``u = g``.  ``g``
    must be defined near the boundary; ``g_normal`` may supply its normal
    derivatives of order ``1..3`` explicitly.  ``method`` selects the
    tangential difference scheme of the reducers (``fd2``/``fd4`` on edges,
    ``fd4``/``spectral`` on circles).
    """

    domain: Any
    operator: EllipticOperator
    f: Any
    profile: BoundaryProfile
    g: Any = 0.0
    perturbed: tuple[str, ...] | None = None
    g_normal: tuple | None = None
    method: str | None = None
    label: str = ""

    @property
    def moving(self) -> tuple[str, ...]:
        return self.perturbed if self.perturbed is not None else default_perturbed(self.domain)


def _grid_nodes(grid, segment: str) -> SegmentNodes:
    return segment_nodes(grid, segment)


def _check_grid(problem: SmoothProblem, grid) -> None:
    d = problem.domain
    ok = ((isinstance(d, Interval) and isinstance(grid, IntervalGrid)
           and (grid.a, grid.b) == (d.a, d.b))
          or (isinstance(d, Rectangle) and isinstance(grid, RectGrid)
              and (grid.L1, grid.L2) == (d.L1, d.L2))
          or (isinstance(d, Disk) and isinstance(grid, PolarGrid) and grid.is_disk and grid.r1 == d.R)
          or (isinstance(d, Annulus) and isinstance(grid, PolarGrid)
              and (grid.r0, grid.r1) == (d.R_in, d.R_out)))
    if not ok:
        raise GridError(f"grid {grid!r} does not cover the domain {d!r}")


# ---------------------------------------------------------------------------
# Boundary data of u_n
# ---------------------------------------------------------------------------


def smooth_dirichlet_bc(n: int, g_traces: Sequence, h: np.ndarray, lower: Sequence,
                        ctx: ReducerContext,
                        phi_of: Callable[[int], tuple] | None = None) -> np.ndarray:
    """Dirichlet data of ``u_n`` on a perturbed segment.

    ``g_traces[k]`` is ``d_n^k g`` (``k = 0..n``), ``h`` the profile at the
    nodes and ``lower[j] = (u_j trace, d_n u_j trace)`` for ``j < n``.  The
    value is ``h^n/n! d_n^n g - h d_n u_{n-1} - sum_{k=2}^n h^k/k!
    F_k[u_{n-k}, d_n u_{n-k}]`` where ``F_k`` is the reduced ``d_n^k``.  The
    right-hand side entering ``F_k`` is ``ctx.phi`` for ``u_0`` and zero for
    later terms unless ``phi_of(j)`` returns ``(phi_j, d_n phi_j)``.
    """
    if n < 1:
        raise DataError("boundary data are generated for n >= 1")
    if n > MAX_ORDER:
        raise UnsupportedError(f"orders above {MAX_ORDER} need reductions of d_n^{n}")
    if len(g_traces) <= n or len(lower) < n:
        raise DataError(f"order {n} needs d_n^k g for k <= {n} and {n} lower terms")
    h = np.asarray(h, dtype=float) * np.ones(ctx.n)
    out = h**n / factorial(n) * np.asarray(g_traces[n], dtype=float) - h * np.asarray(lower[n - 1][1])
    for k in range(2, n + 1):
        j = n - k
        if phi_of is not None:
            phi, dn_phi = phi_of(j)
        elif j == 0:
            phi, dn_phi = ctx.phi, ctx.dn_phi
        else:
            phi, dn_phi = 0.0, 0.0
        u, dnu = lower[j]
        out = out - h**k / factorial(k) * reduce(ctx.with_phi(phi, dn_phi), k, u, dnu)
    return out


def _static_bcs(problem: SmoothProblem, n: int, grid) -> list:
    bcs = []
    for seg in problem.domain.segments:
        if seg in problem.moving:
            continue
        if n == 0:
            nodes = _grid_nodes(grid, seg)
            bcs.append(Dirichlet(seg, ScalarFunction.coerce(problem.g)(nodes.x, nodes.y)
                                 * np.ones(nodes.n)))
        else:
            bcs.append(Dirichlet(seg, 0.0))
    return bcs


def _order_bcs(problem: SmoothProblem, bcs: list) -> tuple:
    by_seg = {b.segment: b for b in bcs}
    return tuple(by_seg[s] for s in problem.domain.segments)


def compute_terms(problem: SmoothProblem, N: int, grid, order: int = DEFAULT_ORDER) -> ExpansionSeries:
    """Solve for ``u_0 .. u_N`` on ``grid``.

    ``u_0`` solves ``L u_0 = f`` with ``u_0 = g``; each later term solves
    ``L u_n = 0`` with data from :func:`smooth_dirichlet_bc`, using one-sided
    normal derivatives of the already computed terms (stencil ``order``).
    """
    if N > MAX_ORDER:
        raise UnsupportedError(f"terms beyond u_{MAX_ORDER} are not supported")
    if N < 0:
        raise DataError("N must be non-negative")
    _check_grid(problem, grid)
    nodes = {s: _grid_nodes(grid, s) for s in problem.moving}
    ctxs = {s: reducer_context(problem.operator, problem.f, nodes[s], problem.method)
            for s in problem.moving}
    hs = {s: profile_values(problem.profile, nodes[s]) for s in problem.moving}
    for s in problem.moving:
        problem.profile.check_sign(hs[s])
    gtr = {s: normal_derivatives(problem.g, nodes[s], N, problem.g_normal) for s in problem.moving}

    terms, specs = [], []
    lower: dict[str, list] = {s: [] for s in problem.moving}
    for n in range(N + 1):
        bcs = _static_bcs(problem, n, grid)
        for s in problem.moving:
            data = gtr[s][0] if n == 0 else smooth_dirichlet_bc(n, gtr[s], hs[s], lower[s], ctxs[s])
            bcs.append(Dirichlet(s, data))
        spec = validate(BvpSpec(problem.domain, problem.operator, problem.f if n == 0 else 0.0,
                                _order_bcs(problem, bcs), label=f"u_{n}"))
        u = solve(spec, grid)
        u.label = f"u_{n}"
        terms.append(u)
        specs.append(spec)
        for s in problem.moving:
            lower[s].append((u.trace(s), u.normal_derivative(s, order)))
    return ExpansionSeries("Smooth", terms, specs, grid, {"problem": problem.label})


# ---------------------------------------------------------------------------
# Closed problems u^[n]
# ---------------------------------------------------------------------------


def closed_problem(n: int, problem: SmoothProblem, eps: float, grid) -> BvpSpec:
    """The single problem whose solution ``u^[n]`` satisfies the truncated condition.

    On each perturbed segment ``sum_{k<=n} (eps h)^k/k! d_n^k u = sum_{k<=n}
    (eps h)^k/k! d_n^k g``.  For ``n = 2`` the second normal derivative is
    reduced through the equation, which leaves a Robin condition
    ``alpha u + beta d_n u = rhs`` with

    ``alpha = 1 + (eps h)^2 c / (2 sigma)``,
    ``beta = eps h - (eps h)^2/2 (d_n sigma / sigma + kappa)``,
    ``rhs = sum_k (eps h)^k/k! d_n^k g
    + (eps h)^2/2 (f/sigma + d_s^2 g + (d_s sigma / sigma) d_s g)``.
    """
    if n not in (1, 2):
        if n > 2:
            raise UnsupportedError("closed problems are available for n = 1 and n = 2 only")
        raise DataError("closed problems start at n = 1")
    if eps < 0:
        raise DataError("eps must be non-negative")
    _check_grid(problem, grid)
    bcs = _static_bcs(problem, 0, grid)
    for s in problem.moving:
        nodes = _grid_nodes(grid, s)
        eh = eps * profile_values(problem.profile, nodes)
        gt = normal_derivatives(problem.g, nodes, n, problem.g_normal)
        if n == 1:
            alpha = np.ones(nodes.n)
            beta = eh
            rhs = gt[0] + eh * gt[1]
        else:
            ctx = reducer_context(problem.operator, problem.f, nodes, problem.method)
            sig, c = ctx.arr("sigma"), ctx.arr("c")
            q = 0.5 * eh**2
            alpha = 1.0 + q * c / sig
            beta = eh - q * (ctx.arr("dn_sigma") / sig + ctx.arr("kappa"))
            g0 = gt[0]
            tang = ctx.dt(g0, 2) + ctx.arr("ds_sigma") / sig * ctx.dt(g0, 1)
            rhs = g0 + eh * gt[1] + q * gt[2] + q * (ctx.arr("phi") / sig + tang)
        if np.all(beta == 0):
            bcs.append(Dirichlet(s, rhs / alpha))
        else:
            bcs.append(Robin(s, alpha, beta, rhs))
    return validate(BvpSpec(problem.domain, problem.operator, problem.f,
                            _order_bcs(problem, bcs), label=f"closed u^[{n}] eps={eps!r}"))


# ---------------------------------------------------------------------------
# Neumann variant on the rectangle
# ---------------------------------------------------------------------------


def neumann_rect_bc(m: int, profile: BoundaryProfile, y: np.ndarray, lower: Sequence,
                    ctx: ReducerContext) -> np.ndarray:
    """Neumann data ``d_x w_m(L1, y)`` when ``d_n w = 0`` holds on the moved right edge.

    ``lower[j] = (w_j trace, d_x w_j trace)``.  With ``h = h(y)``:

    ``m = 0``: ``0``;
    ``m = 1``: ``h' d_y w_0 - h d_x^2 w_0``;
    ``m = 2``: ``h' d_y w_1 + h h' d_x d_y w_0 - h d_x^2 w_1 - h^2/2 d_x^3 w_0``.

    ``d_x^2`` and ``d_x^3`` come from the rectangle reducers, with the
    right-hand side ``ctx.phi`` used for ``w_0`` only.
    """
    if m > 2:
        raise UnsupportedError("Neumann data are available up to m = 2")
    if m < 0:
        raise DataError("m must be non-negative")
    y = np.asarray(y, dtype=float)
    if m == 0:
        return np.zeros(y.shape)
    if len(lower) < m:
        raise DataError(f"order {m} needs {m} lower terms")
    h = np.asarray(profile.h(y), dtype=float) * np.ones(y.shape)
    dh = np.asarray(profile.dh(y), dtype=float) * np.ones(y.shape)
    w0, dw0 = lower[0]
    if m == 1:
        return dh * ctx.dt(w0, 1) - h * reduce_rect_k2(ctx, w0, dw0)
    w1, dw1 = lower[1]
    zero = ctx.with_phi(0.0, 0.0)
    return (dh * ctx.dt(w1, 1) + h * dh * ctx.dt(dw0, 1)
            - h * reduce_rect_k2(zero, w1, dw1) - 0.5 * h**2 * reduce_rect_k3(ctx, w0, dw0))


def compute_neumann_terms(problem: SmoothProblem, N: int, grid) -> ExpansionSeries:
    """Terms ``w_0 .. w_N`` (``N <= 2``) for a homogeneous Neumann moved right edge.

    The other rectangle edges carry ``w = g`` (``w_0``) and ``0`` (later terms).
    The Neumann data of each term is known exactly, so it is used in place of
    a numerical normal derivative.
    """
    if not isinstance(problem.domain, Rectangle):
        raise UnsupportedError("the Neumann variant is implemented on the rectangle")
    if tuple(problem.moving) != ("right",):
        raise UnsupportedError("the Neumann variant moves the right edge only")
    if N > 2:
        raise UnsupportedError("the Neumann variant is available up to w_2")
    _check_grid(problem, grid)
    nodes = _grid_nodes(grid, "right")
    ctx = reducer_context(problem.operator, problem.f, nodes, problem.method)
    terms, specs, lower = [], [], []
    for m in range(N + 1):
        data = neumann_rect_bc(m, problem.profile, nodes.param, lower, ctx)
        bcs = _static_bcs(problem, m, grid) + [Neumann("right", data)]
        spec = validate(BvpSpec(problem.domain, problem.operator, problem.f if m == 0 else 0.0,
                                _order_bcs(problem, bcs), label=f"w_{m}"))
        w = solve(spec, grid)
        w.label = f"w_{m}"
        terms.append(w)
        specs.append(spec)
        lower.append((w.trace("right"), data))
    return ExpansionSeries("NeumannSmooth", terms, specs, grid, {"problem": problem.label})


# ---------------------------------------------------------------------------
# Nonlinear variant: -Lap u + u - u^3 = f, u = 0 on the boundary
# ---------------------------------------------------------------------------

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50


def multinomial_rhs(n: int, terms: Sequence) -> np.ndarray | float:
    """Right-hand side of the ``u_n`` equation of the cubic model.

    Sum over ``i_0 + ... + i_{n-1} = 3`` with ``sum k i_k = n`` of
    ``3!/(i_0! ... i_{n-1}!) u_0^{i_0} ... u_{n-1}^{i_{n-1}}``.
    """
    if n < 1:
        raise DataError("the multinomial right-hand side starts at n = 1")
    if len(terms) < n:
        raise DataError(f"order {n} needs terms u_0..u_{n - 1}")
    vals = [np.asarray(t, dtype=float) for t in terms[:n]]
    out = np.zeros(np.broadcast(*vals).shape)
    for idx in itertools.product(range(4), repeat=n):
        if sum(idx) != 3 or sum(k * i for k, i in enumerate(idx)) != n:
            continue
        coef = factorial(3)
        prod = np.ones_like(out)
        for k, i in enumerate(idx):
            coef //= factorial(i)
            prod = prod * vals[k] ** i
        out = out + coef * prod
    return out


def _interp_function(grid: IntervalGrid, values: np.ndarray, label: str) -> ScalarFunction:
    xs, vs = grid.x.copy(), np.asarray(values, dtype=float).copy()
    return ScalarFunction.function(lambda x, y: np.interp(x, xs, vs), label=label)


def _nonlinear_operator(grid: IntervalGrid, u0: np.ndarray) -> EllipticOperator:
    return EllipticOperator(a=1.0, c=_interp_function(grid, 1.0 - 3.0 * u0**2, "1 - 3 u0^2"))


def newton_leading(f: Any, domain: Interval, grid: IntervalGrid) -> tuple[GridField, int]:
    """Solve ``-u'' + u - u^3 = f`` with ``u = 0`` at both ends by Newton's method.

    Starts from ``u = 0``; each step solves ``-u'' + (1 - 3 u_k^2) u = f - 2
    u_k^3``.  Stops when the update is below ``1e-12`` in the max norm
    (quadratic convergence makes this a bound on the residual too) and raises
    SolverError after 50 steps.
    """
    fx = ScalarFunction.coerce(f)(grid.x) * np.ones(grid.n)
    u = np.zeros(grid.n)
    bcs = (Dirichlet("left", 0.0), Dirichlet("right", 0.0))
    for it in range(1, NEWTON_MAXIT + 1):
        spec = BvpSpec(domain, _nonlinear_operator(grid, u), fx - 2.0 * u**3, bcs)
        new = solve(spec, grid).values
        if not np.all(np.isfinite(new)):
            raise SolverError("Newton iteration produced non-finite values")
        step = float(np.max(np.abs(new - u)))
        u = new
        if step <= NEWTON_TOL * max(1.0, float(np.max(np.abs(u)))):
            return GridField(grid, u, "u_0", {"newton_iterations": it}), it
    raise SolverError(f"Newton iteration did not converge in {NEWTON_MAXIT} steps")


def nonlinear_hierarchy(f: Any, domain: Interval, profile: BoundaryProfile, N: int,
                        grid: IntervalGrid, order: int = DEFAULT_ORDER) -> ExpansionSeries:
    """Terms of ``-u'' + u - u^3 = f`` on a perturbed interval with ``u = 0``.

    ``u_0`` comes from :func:`newton_leading`; ``u_n`` solves ``-u_n'' + (1 -
    3 u_0^2) u_n = RHS_n`` (see :func:`multinomial_rhs`) with the smooth
    Dirichlet data for ``g = 0``.  Since ``u_0`` vanishes on the boundary the
    reducers see ``c = 1`` there.
    """
    if not isinstance(domain, Interval) or not isinstance(grid, IntervalGrid):
        raise UnsupportedError("the nonlinear variant is implemented on the interval")
    if N > MAX_ORDER:
        raise UnsupportedError(f"terms beyond u_{MAX_ORDER} are not supported")
    if (grid.a, grid.b) != (domain.a, domain.b):
        raise GridError("grid does not cover the domain")
    u0, its = newton_leading(f, domain, grid)
    lin = _nonlinear_operator(grid, u0.values)
    base = EllipticOperator(a=1.0, c=1.0)
    segs = ("left", "right")
    nodes = {s: segment_nodes(grid, s) for s in segs}
    ctxs = {s: reducer_context(base, f, nodes[s]) for s in segs}
    hs = {s: profile_values(profile, nodes[s]) for s in segs}
    for s in segs:
        profile.check_sign(hs[s])
    zeros = [np.zeros(1)] * (N + 1)
    terms = [u0]
    specs = [BvpSpec(domain, lin, ScalarFunction.coerce(f)(grid.x) - 2.0 * u0.values**3,
                     (Dirichlet("left", 0.0), Dirichlet("right", 0.0)), label="u_0 (Newton)")]
    rhs_fields: list[np.ndarray] = [ScalarFunction.coerce(f)(grid.x) * np.ones(grid.n)]
    lower = {s: [(u0.trace(s), u0.normal_derivative(s, order))] for s in segs}

    def phi_for(s):
        def phi_of(j):
            if j == 0:
                return ctxs[s].phi, ctxs[s].dn_phi
            r = GridField(grid, rhs_fields[j])
            return r.trace(s), r.normal_derivative(s, order)
        return phi_of

    for n in range(1, N + 1):
        rhs = multinomial_rhs(n, [t.values for t in terms])
        rhs_fields.append(rhs)
        bcs = tuple(Dirichlet(s, smooth_dirichlet_bc(n, zeros, hs[s], lower[s], ctxs[s], phi_for(s)))
                    for s in segs)
        spec = validate(BvpSpec(domain, lin, rhs, bcs, label=f"u_{n}"))
        u = solve(spec, grid)
        u.label = f"u_{n}"
        terms.append(u)
        specs.append(spec)
        for s in segs:
            lower[s].append((u.trace(s), u.normal_derivative(s, order)))
    return ExpansionSeries("NonlinearSmooth", terms, specs, grid, {"newton_iterations": its})

