"""Thin coating layers: a transmission problem expanded on the inner domain.

The reference domain ``D`` (conductivity ``a_int``) is coated by the layer
``{x + t h(x) n(x) : 0 < t < eps}`` (conductivity ``a_ext``) and ``u = g`` holds
on the outer boundary.  The interior solution is expanded as ``sum eps^n
u_int,n``; each term solves a Dirichlet problem on ``D`` whose data come from
the exterior recursion after the exterior normal derivatives are transferred
across the interface.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Any, Sequence

import numpy as np

from .bvp import BvpSpec, Dirichlet, EllipticOperator, Robin, ScalarFunction, validate
from .errors import DataError, EllipticityError, GeometryError, UnsupportedError
from .fields import DEFAULT_ORDER
from .hierarchy import (MAX_ORDER, ExpansionSeries, _check_grid, default_perturbed,
                        smooth_dirichlet_bc)
from .ilw import ReducerContext, reduce
from .solvers import solve
from .traces import SegmentNodes, normal_derivatives, profile_values, reducer_context, segment_nodes


@dataclass(frozen=True)
class TransmissionContext:
    """Interface traces needed to move normal derivatives across ``partial D``.

    ``a_int`` and ``a_ext`` are either scalars / arrays (isotropic ``sigma``)
    or arrays of shape ``(n, 2, 2)``.  ``normal`` and ``tangent`` have shape
    ``(n, 2)``.  ``ext`` is the reducer context of the exterior operator.
    """

    a_int: Any
    a_ext: Any
    normal: np.ndarray
    tangent: np.ndarray
    ext: ReducerContext
    f_int: Any = 0.0
    f_ext: Any = 0.0

    @property
    def n(self) -> int:
        return self.ext.n

    def _matrix(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == 3:
            return a
        s = np.broadcast_to(a, (self.n,))
        return s[:, None, None] * np.eye(2)[None]

    def quad(self, a) -> np.ndarray:
        """``Q(n) = sum a^{ij} n_i n_j`` at each node."""
        A = self._matrix(a)
        return np.einsum("ki,kij,kj->k", self.normal, A, self.normal)

    @property
    def Q_int(self) -> np.ndarray:
        return self.quad(self.a_int)

    @property
    def Q_ext(self) -> np.ndarray:
        return self.quad(self.a_ext)


def context_from_nodes(sigma_int: Any, sigma_ext: Any, f_int: Any, f_ext: Any,
                       nodes: SegmentNodes, method: str | None = None) -> TransmissionContext:
    """Context for scalar conductivities given as functions of ``(x, y)``."""
    si = ScalarFunction.coerce(sigma_int)(nodes.x, nodes.y) * np.ones(nodes.n)
    se = ScalarFunction.coerce(sigma_ext)(nodes.x, nodes.y) * np.ones(nodes.n)
    ext = reducer_context(EllipticOperator(a=ScalarFunction.coerce(sigma_ext)), f_ext, nodes, method)
    return TransmissionContext(si, se, np.stack([nodes.nx, nodes.ny], axis=1),
                               np.stack([nodes.tx, nodes.ty], axis=1), ext,
                               ScalarFunction.coerce(f_int)(nodes.x, nodes.y), ext.phi)


def normal_transfer(ctx: TransmissionContext, u_int_trace, dnu_int_trace) -> np.ndarray:
    """Exterior normal derivative from interior traces.

    ``[Q_int dnu_int + sum (a_int - a_ext)^{ij} n_i (grad_G u)_j] / Q_ext``
    with the surface gradient ``grad_G u = tau d_s u``.
    """
    qe = ctx.Q_ext
    if np.any(qe <= 0) or np.any(ctx.Q_int <= 0):
        raise EllipticityError("Q(n) must be positive on the interface")
    u = np.broadcast_to(np.asarray(u_int_trace, dtype=float), (ctx.n,))
    dnu = np.broadcast_to(np.asarray(dnu_int_trace, dtype=float), (ctx.n,))
    diff = ctx._matrix(ctx.a_int) - ctx._matrix(ctx.a_ext)
    cross = np.einsum("ki,kij,kj->k", ctx.normal, diff, ctx.tangent)
    if np.any(cross != 0):
        tang = cross * ctx.ext.dt(np.array(u, dtype=float), 1)
    else:
        tang = 0.0
    return (ctx.Q_int * dnu + tang) / qe


def exterior_bc(n: int, ctx: TransmissionContext, g_traces: Sequence, h: np.ndarray,
                lower_ext: Sequence) -> np.ndarray:
    """``u_ext,n`` on ``partial D``: the smooth recursion with the exterior operator."""
    if n > MAX_ORDER:
        raise UnsupportedError(f"orders above {MAX_ORDER} are not supported")
    if n == 0:
        return np.asarray(g_traces[0], dtype=float) * np.ones(ctx.n)
    return smooth_dirichlet_bc(n, g_traces, h, lower_ext, ctx.ext)


def interior_bc(n: int, ctx: TransmissionContext, g_traces: Sequence, h: np.ndarray,
                lower_int: Sequence) -> np.ndarray:
    """``u_int,n`` on ``partial D``.

    ``h^n/n! d_n^n g - h q_1 - sum_{k=2}^n h^k/k! F_k[u_int,n-k, q_k]``, with
    ``q_k`` the transferred normal derivative of term ``n - k`` and ``F_k``
    the exterior reduction (right-hand side ``f_ext`` for ``k = n`` only).
    Where ``h = 0`` the value is exactly ``g`` for ``n = 0`` and ``0`` after.
    """
    if n > MAX_ORDER:
        raise UnsupportedError(f"orders above {MAX_ORDER} are not supported")
    if n < 0:
        raise DataError("n must be non-negative")
    if n == 0:
        return np.asarray(g_traces[0], dtype=float) * np.ones(ctx.n)
    if len(lower_int) < n or len(g_traces) <= n:
        raise DataError(f"order {n} needs {n} lower interior terms and d_n^k g for k <= {n}")
    h = np.asarray(h, dtype=float) * np.ones(ctx.n)
    q = [normal_transfer(ctx, *lower_int[j]) for j in range(n)]
    out = h**n / factorial(n) * np.asarray(g_traces[n], dtype=float) - h * q[n - 1]
    for k in range(2, n + 1):
        j = n - k
        sub = ctx.ext if j == 0 else ctx.ext.with_phi(0.0, 0.0)
        out = out - h**k / factorial(k) * reduce(sub, k, lower_int[j][0], q[j])
    return out


# ---------------------------------------------------------------------------
# Problems and hierarchy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransmissionProblem:
    """Coated domain with scalar conductivities ``sigma_int`` on ``D`` and ``sigma_ext`` in the layer.

    ``-div(sigma grad u) = f`` on both parts (``f_int``, ``f_ext``), ``u = g``
    on the outer boundary, and only outward layers (``h >= 0``).
    """

    domain: Any
    sigma_int: Any
    sigma_ext: Any
    f_int: Any
    f_ext: Any
    profile: Any
    g: Any = 0.0
    method: str | None = None
    label: str = ""

    @property
    def moving(self) -> tuple[str, ...]:
        return default_perturbed(self.domain)


def _layer_setup(problem: TransmissionProblem, grid, order_g: int):
    out = {}
    for s in problem.moving:
        nodes = segment_nodes(grid, s)
        h = profile_values(problem.profile, nodes)
        if np.any(h < 0):
            raise GeometryError("thin layers need h >= 0 (outward coating)")
        ctx = context_from_nodes(problem.sigma_int, problem.sigma_ext, problem.f_int, problem.f_ext,
                                 nodes, problem.method)
        out[s] = (nodes, h, ctx, normal_derivatives(problem.g, nodes, order_g))
    return out


def compute_interior_terms(problem: TransmissionProblem, N: int, grid,
                           order: int = DEFAULT_ORDER) -> ExpansionSeries:
    """``u_int,0 .. u_int,N`` on the reference domain."""
    if N > MAX_ORDER:
        raise UnsupportedError(f"terms beyond u_int,{MAX_ORDER} are not supported")
    _check_grid(problem, grid)
    setup = _layer_setup(problem, grid, N)
    op = EllipticOperator(a=ScalarFunction.coerce(problem.sigma_int))
    terms, specs = [], []
    lower = {s: [] for s in problem.moving}
    for n in range(N + 1):
        bcs = []
        for seg in problem.domain.segments:
            if seg in setup:
                nodes, h, ctx, gt = setup[seg]
                bcs.append(Dirichlet(seg, interior_bc(n, ctx, gt, h, lower[seg])))
            else:
                nodes = segment_nodes(grid, seg)
                g0 = ScalarFunction.coerce(problem.g)(nodes.x, nodes.y) * np.ones(nodes.n)
                bcs.append(Dirichlet(seg, g0 if n == 0 else 0.0))
        spec = validate(BvpSpec(problem.domain, op, problem.f_int if n == 0 else 0.0, tuple(bcs),
                                label=f"u_int,{n}"))
        u = solve(spec, grid)
        u.label = f"u_int,{n}"
        terms.append(u)
        specs.append(spec)
        for s in problem.moving:
            lower[s].append((u.trace(s), u.normal_derivative(s, order)))
    return ExpansionSeries("Transmission", terms, specs, grid, {"problem": problem.label})


def robin_closed(n: int, problem: TransmissionProblem, eps: float, grid) -> BvpSpec:
    """Robin problem for ``u^[n]`` on the reference domain (``g = 0``).

    ``n = 1``: ``u + eps h sigma_int/sigma_ext d_n u = 0``;
    ``n = 2``: additionally ``- (eps h)^2 sigma_int/(2 sigma_ext) (d_n
    sigma_ext/sigma_ext + kappa) d_n u`` on the left and ``(eps h)^2
    f_ext/(2 sigma_ext)`` on the right.
    """
    if n not in (1, 2):
        raise UnsupportedError("closed problems are available for n = 1 and n = 2 only")
    if eps < 0:
        raise DataError("eps must be non-negative")
    g = ScalarFunction.coerce(problem.g)
    if not (g.is_constant and g.const == 0.0):
        raise DataError("the Robin closed problems are stated for g = 0")
    for name in ("sigma_int", "sigma_ext"):
        v = getattr(problem, name)
        if not isinstance(v, (int, float, ScalarFunction)):
            raise UnsupportedError("robin_closed needs scalar conductivities")
    _check_grid(problem, grid)
    setup = _layer_setup(problem, grid, 0)
    bcs = []
    for seg in problem.domain.segments:
        if seg not in setup:
            bcs.append(Dirichlet(seg, 0.0))
            continue
        nodes, h, ctx, _ = setup[seg]
        eh = eps * h
        ratio = ctx.a_int / ctx.a_ext
        beta = eh * ratio
        rhs = np.zeros(nodes.n)
        if n == 2:
            se = ctx.ext.arr("sigma")
            beta = beta - 0.5 * eh**2 * ratio * (ctx.ext.arr("dn_sigma") / se + ctx.ext.arr("kappa"))
            rhs = 0.5 * eh**2 * ctx.ext.arr("phi") / se
        if np.all(beta == 0):
            bcs.append(Dirichlet(seg, rhs))
        else:
            bcs.append(Robin(seg, np.ones(nodes.n), beta, rhs))
    op = EllipticOperator(a=ScalarFunction.coerce(problem.sigma_int))
    return validate(BvpSpec(problem.domain, op, problem.f_int, tuple(bcs),
                            label=f"robin u^[{n}] eps={eps!r}"))
