"""Finite-volume / finite-difference solvers for :class:`~asymhier.bvp.BvpSpec`.

All schemes are conservative three-point discretizations in the normal
direction, assembled cell by cell, so that

* Robin and Neumann ends use a half-cell closure that is exact for quadratics,
* an interface node carries two values ``u-`` and ``u+`` linked by the jump
  conditions, with the flux balance taken over the two half cells,
* the assembled matrices are symmetric, and for pure Neumann problems the
  discrete compatibility residual is the plain sum of the right-hand side.

Polar problems are split into Fourier modes in the angle (exact for the
trigonometric interpolant); rectangles with homogeneous Dirichlet bottom/top
edges can be split into sine modes in ``y``.  The per-mode tridiagonal systems
are solved in one batch by :func:`asymhier.kernels.thomas_batch`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bvp import BoundaryCondition, BvpSpec, Piecewise, ScalarFunction, validate
from .errors import (CompatibilityError, DataError, GridError, SolverError,
                     UnsupportedError)
from .fields import (GridField, IntervalGrid, PiecewiseField, PolarGrid, RectGrid,
                     aligned_index, boundary_weights)
from .geometry import Annulus, Disk, DiskWithInterface, Interval, Rectangle
from .kernels import thomas_batch

COMPAT_TOL = 1e-8


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _side_value(value: Any, side: str | None) -> Any:
    if isinstance(value, Piecewise):
        if side is None:
            raise DataError("piecewise data on a problem without an interface")
        return value.minus if side == "minus" else value.plus
    return value


def _eval_on(value: Any, X, Y, shape) -> np.ndarray:
    """Evaluate scalar / function / sampled-array data at nodes of ``shape``."""
    if isinstance(value, ScalarFunction):
        return np.broadcast_to(value(X, Y), shape).astype(float)
    if callable(value):
        return np.broadcast_to(np.asarray(value(X, Y), dtype=float), shape).astype(float)
    arr = np.asarray(value, dtype=float)
    try:
        return np.broadcast_to(arr, shape).astype(float)
    except ValueError as exc:
        raise GridError(f"data of shape {arr.shape} does not fit nodes of shape {shape}") from exc


def _scalar_coef(op, side: str | None) -> ScalarFunction:
    if op.piecewise is not None:
        return op.sigma_minus if side == "minus" else op.sigma_plus
    return op.sigma


def _bc_data(bc: BoundaryCondition, shape) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    def arr(v):
        a = np.asarray(v, dtype=float)
        try:
            return np.broadcast_to(a, shape).astype(float)
        except ValueError as exc:
            raise GridError(
                f"boundary data of shape {a.shape} on segment {bc.segment!r} needs shape {shape}") from exc
    if bc.kind == "dirichlet":
        return np.ones(shape), np.zeros(shape), arr(bc.g)
    if bc.kind in ("neumann", "neumann_compat"):
        return np.zeros(shape), np.ones(shape), arr(bc.g)
    if bc.kind == "robin":
        return arr(bc.alpha), arr(bc.beta), arr(bc.g)
    raise DataError(f"boundary condition kind {bc.kind!r} is not a segment condition")


def _check_common(spec: BvpSpec) -> BvpSpec:
    spec = validate(spec)
    if spec.operator.has_advection:
        raise UnsupportedError("the finite-volume solvers do not discretize advection terms")
    if not spec.operator.is_scalar:
        raise UnsupportedError("the finite-volume solvers need a scalar coefficient sigma")
    return spec


def _compat_check(total: float, scale: float) -> float:
    if abs(total) > COMPAT_TOL * max(1.0, scale):
        raise CompatibilityError(
            f"Neumann data violates the compatibility identity: residual {total:.3e}", total)
    return total


@dataclass
class _PinInfo:
    residual: float
    pin_node: Any
    shift: float
    pin_value: float
    achieved: float


def _pin_integral(spec: BvpSpec, field, grid_of) -> tuple[float, float, float]:
    """Return (int w u, int w, target) over the neumann_compat segments."""
    num = den = target = 0.0
    for bc in spec.bcs:
        if bc.kind != "neumann_compat":
            continue
        fld, grid = grid_of(bc.segment)
        tr = fld.trace(bc.segment)
        q = boundary_weights(grid, bc.segment)
        w = np.broadcast_to(np.asarray(bc.weight, dtype=float), tr.shape)
        num += float(np.sum(q * w * tr))
        den += float(np.sum(q * w))
        target += float(bc.compat_value)
    if den == 0.0:
        raise DataError("pin weight integrates to zero")
    return num, den, target


def _apply_pin_shift(spec: BvpSpec, field, residual: float, pin_node) -> Any:
    if isinstance(field, PiecewiseField):
        def grid_of(seg):
            f = field.minus if seg in ("left",) else field.plus
            return f, f.grid
    else:
        def grid_of(seg):
            return field, field.grid
    num, den, target = _pin_integral(spec, field, grid_of)
    shift = (target - num) / den
    field = field + shift
    num2, _, _ = _pin_integral(spec, field, grid_of)
    field.info["pin"] = _PinInfo(residual, pin_node, shift, target, num2)
    field.info["compat_residual"] = residual
    return field


# ---------------------------------------------------------------------------
# One dimension
# ---------------------------------------------------------------------------


def solve_interval(spec: BvpSpec, n_nodes: int, pin_node: int | None = None):
    """Solve a problem on an interval; returns GridField or PiecewiseField.

    An interior interface (``domain.interface``) must coincide with a node.
    Pure Neumann problems need a :func:`~asymhier.bvp.NeumannWithCompatibility`
    pin and are handled as in :func:`solve_pinned_neumann`.
    """
    spec = _check_common(spec)
    dom = spec.domain
    if not isinstance(dom, Interval):
        raise GridError("solve_interval needs an Interval domain")
    grid = IntervalGrid(dom.a, dom.b, n_nodes)
    x, d, n = grid.x, grid.step, grid.n
    op = spec.operator
    jumps = spec.interface_conditions
    split = jumps is not None or op.piecewise is not None
    if split:
        if dom.interface is None:
            raise DataError("interface data given but the interval has no interface point")
        k = aligned_index(dom.a, d, dom.interface, n, "interface")
        if k < 7 or n - k < 8:
            raise GridError("each side of the interface needs at least 8 nodes")
        jv = float(np.ravel(np.asarray(jumps.value_jump if jumps else 0.0, dtype=float))[0])
        jf = float(np.ravel(np.asarray(jumps.flux_jump if jumps else 0.0, dtype=float))[0])
    else:
        k = None

    xh = 0.5 * (x[:-1] + x[1:])
    c = op.c_fn(x)
    if split:
        sm, spl = _scalar_coef(op, "minus"), _scalar_coef(op, "plus")
        sh = np.where(xh < dom.interface, sm(xh), spl(xh))
        s_left, s_right = float(sm(x[0])), float(spl(x[-1]))
        fm = _side_array_1d(spec.rhs, "minus", x[: k + 1])
        fp = _side_array_1d(spec.rhs, "plus", x[k:])
        f = np.concatenate([fm[:-1], [0.5 * (fm[-1] + fp[0])], fp[1:]])
    else:
        sig = op.sigma
        sh = sig(xh)
        s_left, s_right = float(sig(x[0])), float(sig(x[-1]))
        f = _eval_on(spec.rhs, x, 0.0 * x, x.shape)

    A = np.zeros(n)
    C = np.zeros(n)
    A[1:] = -sh / d
    C[:-1] = -sh / d
    B = -(A + C) + d * c
    D = d * f
    for end, idx, s_end in (("left", 0, s_left), ("right", n - 1, s_right)):
        al, be, g = (float(v[0]) for v in _bc_data(spec.bc(end), (1,)))
        B[idx] -= 0.5 * d * c[idx]
        D[idx] *= 0.5
        if be == 0.0:
            if al == 0.0:
                raise DataError(f"degenerate condition on {end!r}")
            A[idx] = C[idx] = 0.0
            B[idx], D[idx] = al, g
        else:
            B[idx] += s_end * al / be
            D[idx] += s_end * g / be
    if split:
        # Row k carries u- ; u+ = u- + jv is substituted everywhere.
        D[k] += -jf + C[k] * jv - 0.5 * d * c[k] * jv
        D[k + 1] -= A[k + 1] * jv

    return _finish_1d(spec, grid, A, B, C, D, k, jv if split else 0.0, pin_node)


def _side_array_1d(rhs, side, xs) -> np.ndarray:
    return _eval_on(_side_value(rhs, side), xs, 0.0 * xs, xs.shape)


def _finish_1d(spec, grid, A, B, C, D, k, jv, pin_node):
    n = grid.n
    residual = None
    if spec.has_pin:
        residual = _compat_check(float(np.sum(D)), float(np.sum(np.abs(D))))
        p = 0 if pin_node is None else int(pin_node)
        if not 0 <= p < n:
            raise GridError("pin node outside the grid")
        A, B, C, D = A.copy(), B.copy(), C.copy(), D.copy()
        A[p] = C[p] = 0.0
        B[p], D[p] = 1.0, 0.0
    u = thomas_batch(A, B, C, D)
    if k is None:
        field = GridField(grid, u)
    else:
        x = grid.x
        gm = IntervalGrid(grid.a, float(x[k]), k + 1)
        gp = IntervalGrid(float(x[k]), grid.b, n - k)
        field = PiecewiseField(GridField(gm, u[: k + 1]),
                               GridField(gp, np.concatenate([[u[k] + jv], u[k + 1:]])))
    if residual is not None:
        field = _apply_pin_shift(spec, field, residual, pin_node or 0)
    return field


# ---------------------------------------------------------------------------
# Polar (disk, annulus, disk with interface)
# ---------------------------------------------------------------------------


def _polar_layout(dom):
    if isinstance(dom, Disk):
        return 0.0, dom.R, None
    if isinstance(dom, Annulus):
        return dom.R_in, dom.R_out, None
    if isinstance(dom, DiskWithInterface):
        return 0.0, dom.R, dom.R_gamma
    raise GridError(f"polar solver cannot handle {dom.kind}")


def _radial_coef(fn: ScalarFunction, r: np.ndarray, what: str) -> np.ndarray:
    if not fn.is_radial:
        raise UnsupportedError(f"polar solver needs a radial {what}")
    return fn.radial_values(r)


def _mode_values(arr: np.ndarray) -> np.ndarray:
    """Real Fourier coefficients along the last axis (rfft, unnormalized)."""
    return sfft.rfft(np.asarray(arr, dtype=float), axis=-1)


def solve_polar(spec: BvpSpec, nr: int, M: int, pin_node: int | None = None):
    """Fourier-in-angle, finite-volume-in-radius solve on a disk-like domain.

    Returns a GridField on a :class:`PolarGrid` (``values[i, j]`` at
    ``(r_i, theta_j)``), or a PiecewiseField split at ``R_gamma``.
    Robin coefficients that vary with the angle are handled through the
    discrete Dirichlet-to-Neumann map of the outer boundary.
    """
    spec = _check_common(spec)
    dom = spec.domain
    r0, r1, rg = _polar_layout(dom)
    grid = PolarGrid(r0, r1, nr, M)
    r, d = grid.r, grid.step
    X, Y = grid.mesh()
    op = spec.operator
    jumps = spec.interface_conditions
    split = rg is not None and (jumps is not None or op.piecewise is not None)
    if jumps is not None and rg is None:
        raise DataError("interface data given on a domain without an interface")
    K = M // 2 + 1
    kk = np.arange(K, dtype=float)

    rh = 0.5 * (r[:-1] + r[1:])
    area = grid.radial_weights()
    c_fn = op.c_fn
    c = _radial_coef(c_fn, r, "zeroth-order coefficient")
    if split:
        k = aligned_index(r0, d, rg, nr, "interface radius")
        if k < 7 or nr - k < 8:
            raise GridError("each side of the interface needs at least 8 radial nodes")
        sm, spl = _scalar_coef(op, "minus"), _scalar_coef(op, "plus")
        sh = np.where(rh < rg, _radial_coef(sm, rh, "sigma"), _radial_coef(spl, rh, "sigma"))
        snode = np.where(r < rg, _radial_coef(sm, r, "sigma"), _radial_coef(spl, r, "sigma"))
        s_in_k, s_out_k = float(_radial_coef(sm, r[k:k + 1], "sigma")[0]), float(snode[k])
        fm_nodes = _eval_on(_side_value(spec.rhs, "minus"), X[: k + 1], Y[: k + 1], (k + 1, M))
        fp_nodes = _eval_on(_side_value(spec.rhs, "plus"), X[k:], Y[k:], (nr - k, M))
        F = np.concatenate([fm_nodes[:-1], np.zeros((1, M)), fp_nodes[1:]])
        Fm_k, Fp_k = _mode_values(fm_nodes[-1]), _mode_values(fp_nodes[0])
        Jv = _mode_values(np.broadcast_to(np.asarray(jumps.value_jump if jumps else 0.0, float), (M,)))
        Jf = _mode_values(np.broadcast_to(np.asarray(jumps.flux_jump if jumps else 0.0, float), (M,)))
    else:
        k = None
        sig = op.sigma if op.piecewise is None else op.sigma_plus
        sh = _radial_coef(sig, rh, "sigma")
        snode = _radial_coef(sig, r, "sigma")
        F = _eval_on(spec.rhs, X, Y, (nr, M))
    Fk = _mode_values(F)                              # (nr, K)

    # Tridiagonal coefficients per mode: arrays of shape (K, nr).
    A = np.zeros((K, nr))
    C = np.zeros((K, nr))
    A[:, 1:] = -(rh * sh) / d
    C[:, :-1] = -(rh * sh) / d
    with np.errstate(divide="ignore", invalid="ignore"):
        react = np.where(r > 0, snode / np.where(r > 0, r, 1.0) ** 2, 0.0)
    B = -(A + C) + area * (kk[:, None] ** 2 * react[None, :] + c[None, :])
    Dm = (area[:, None] * Fk).T.copy()                 # (K, nr) complex

    if grid.is_disk:
        # Cell around the centre: only the axisymmetric mode is nonzero there.
        A[1:, 0] = 0.0
        C[1:, 0] = 0.0
        B[1:, 0] = 1.0
        Dm[1:, 0] = 0.0

    if split:
        am = 0.5 * (rg**2 - rh[k - 1] ** 2)
        ap = 0.5 * (rh[k] ** 2 - rg**2)
        B[:, k] = -(A[:, k] + C[:, k]) + am * (s_in_k * kk**2 / rg**2 + c[k]) \
            + ap * (s_out_k * kk**2 / rg**2 + c[k])
        Dm[:, k] = am * Fm_k + ap * Fp_k - rg * Jf + C[:, k] * Jv \
            - ap * (s_out_k * kk**2 / rg**2 + c[k]) * Jv
        Dm[:, k + 1] -= A[:, k + 1] * Jv

    ends = [("outer", nr - 1, r1, +1)]
    if not grid.is_disk:
        ends.append(("inner", 0, r0, -1))
    capacitance = None
    for seg, idx, radius, _ in ends:
        bc = spec.bc(seg)
        al, be, g = _bc_data(bc, (M,))
        gk = _mode_values(g)
        flux_area = radius * snode[idx]
        if np.all(be == 0.0):
            if np.any(al == 0.0):
                raise DataError(f"degenerate Dirichlet coefficient on {seg!r}")
            if not np.all(al == al[0]):
                gk = _mode_values(g / al)
                al = np.ones(M)
            A[:, idx] = 0.0
            C[:, idx] = 0.0
            B[:, idx] = 1.0
            Dm[:, idx] = gk / al[0]
        elif np.all(al == al[0]) and np.all(be == be[0]) and np.all(be != 0.0):
            B[:, idx] += flux_area * al[0] / be[0]
            Dm[:, idx] += flux_area * gk / be[0]
        else:
            if seg != "outer":
                raise UnsupportedError("angle-dependent Robin data is only supported on the outer circle")
            capacitance = (idx, al, be, g, flux_area)

    residual = None
    if spec.has_pin:
        total = float(np.sum(Dm[0].real)) * 2 * np.pi / M
        residual = _compat_check(total, float(np.sum(np.abs(Dm[0].real))) * 2 * np.pi / M)
        p = 0 if pin_node is None else int(pin_node)
        if not 0 <= p < nr:
            raise GridError("pin node outside the grid")
        A[0, p] = C[0, p] = 0.0
        B[0, p] = 1.0
        Dm[0, p] = 0.0

    if capacitance is None:
        U = _solve_modes(A, B, C, Dm)
    else:
        U = _solve_capacitance(A, B, C, Dm, capacitance, rh, sh, area, kk, react, c, Fk, M, d)

    values = sfft.irfft(U.T, n=M, axis=-1)            # (nr, M)
    if split:
        Jv_nodes = np.broadcast_to(np.asarray(jumps.value_jump if jumps else 0.0, float), (M,))
        gm = PolarGrid(r0, rg, k + 1, M)
        gp = PolarGrid(rg, r1, nr - k, M)
        field = PiecewiseField(GridField(gm, values[: k + 1]),
                               GridField(gp, np.vstack([values[k] + Jv_nodes, values[k + 1:]])))
    else:
        field = GridField(grid, values)
    if residual is not None:
        field = _apply_pin_shift(spec, field, residual, pin_node or 0)
    return field


def _solve_modes(A, B, C, Dm) -> np.ndarray:
    K = A.shape[0]
    AA = np.vstack([A, A])
    BB = np.vstack([B, B])
    CC = np.vstack([C, C])
    DD = np.vstack([Dm.real, Dm.imag])
    sol = thomas_batch(AA, BB, CC, DD)
    return sol[:K] + 1j * sol[K:]


def _solve_capacitance(A, B, C, Dm, cap, rh, sh, area, kk, react, c, Fk, M, d):
    """Outer Robin data varying with the angle: couple the modes on the boundary."""
    idx, al, be, g, flux_area = cap
    A, B, C = A.copy(), B.copy(), C.copy()
    A[:, idx] = 0.0
    B[:, idx] = 1.0
    DA = Dm.copy()
    DA[:, idx] = 0.0
    UA = _solve_modes(A, B, C, DA)
    DB = np.zeros_like(Dm)
    DB[:, idx] = 1.0
    UB = _solve_modes(A, B, C, DB).real

    def flux(U, Fedge):
        lam = area[idx] * (kk**2 * react[idx] + c[idx])
        return (-(rh[idx - 1] * sh[idx - 1]) * (U[:, idx - 1] - U[:, idx]) / d
                + lam * U[:, idx] - area[idx] * Fedge) / flux_area

    qA = flux(UA, Fk[idx])
    qB = flux(UB, np.zeros_like(Fk[idx]))
    qA_theta = sfft.irfft(qA, n=M)
    eye = np.eye(M)
    Q = sfft.irfft(qB[:, None] * sfft.rfft(eye, axis=0), n=M, axis=0)
    mat = np.diag(al) + be[:, None] * Q
    try:
        uN = np.linalg.solve(mat, g - be * qA_theta)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"boundary capacitance system is singular: {exc}") from exc
    return UA + sfft.rfft(uN)[:, None] * UB


def solve_radial(spec: BvpSpec, n_nodes: int, pin_node: int | None = None):
    """Axisymmetric solve: the polar scheme with data independent of the angle.

    Returns a field on a PolarGrid with 8 identical angular columns.
    """
    field = solve_polar(spec, n_nodes, 8, pin_node)
    parts = [field.minus, field.plus] if isinstance(field, PiecewiseField) else [field]
    for part in parts:
        v = part.values
        spread = np.max(np.abs(v - v[:, :1]))
        if spread > 1e-10 * max(1.0, np.max(np.abs(v))):
            raise DataError("solve_radial needs data independent of the angle")
    return field


# ---------------------------------------------------------------------------
# Rectangle
# ---------------------------------------------------------------------------


def solve_rectangle(spec: BvpSpec, nx: int, ny: int, pin_node: tuple[int, int] | None = None):
    """General five-point finite-volume solve on a rectangle (sparse direct).

    Each node owns the part of its dual cell inside the rectangle; boundary
    faces take their flux from the Robin/Neumann data.  Nodes on a Dirichlet
    edge are fixed (Dirichlet wins at corners; two Dirichlet edges meeting at
    a corner contribute the average of their data).
    """
    spec = _check_common(spec)
    dom = spec.domain
    if not isinstance(dom, Rectangle):
        raise GridError("solve_rectangle needs a Rectangle domain")
    grid = RectGrid(dom.L1, dom.L2, nx, ny)
    X, Y = grid.mesh()
    dx, dy = grid.dx, grid.dy
    sig = spec.operator.sigma
    c = spec.operator.c_fn(X, Y)
    f = _eval_on(spec.rhs, X, Y, (nx, ny))
    wx = np.full(nx, dx)
    wx[[0, -1]] *= 0.5
    wy = np.full(ny, dy)
    wy[[0, -1]] *= 0.5
    vol = np.outer(wx, wy)

    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, vals = [], [], []
    diag = vol * c
    rhs = vol * f

    # interior faces in x
    xs = 0.5 * (grid.x[:-1] + grid.x[1:])
    Sx = sig(xs[:, None], grid.y[None, :])
    tx = Sx * wy[None, :] / dx
    diag[:-1] += tx
    diag[1:] += tx
    rows += [idx[:-1].ravel(), idx[1:].ravel()]
    cols += [idx[1:].ravel(), idx[:-1].ravel()]
    vals += [-tx.ravel(), -tx.ravel()]
    ys = 0.5 * (grid.y[:-1] + grid.y[1:])
    Sy = sig(grid.x[:, None], ys[None, :])
    ty = Sy * wx[:, None] / dy
    diag[:, :-1] += ty
    diag[:, 1:] += ty
    rows += [idx[:, :-1].ravel(), idx[:, 1:].ravel()]
    cols += [idx[:, 1:].ravel(), idx[:, :-1].ravel()]
    vals += [-ty.ravel(), -ty.ravel()]

    edge_nodes = {"left": (0, slice(None)), "right": (-1, slice(None)),
                  "bottom": (slice(None), 0), "top": (slice(None), -1)}
    face_len = {"left": wy, "right": wy, "bottom": wx, "top": wx}
    dir_val = np.zeros((nx, ny))
    dir_cnt = np.zeros((nx, ny))
    for seg, sl in edge_nodes.items():
        n_edge = ny if seg in ("left", "right") else nx
        al, be, g = _bc_data(spec.bc(seg), (n_edge,))
        s_edge = sig(X[sl], Y[sl])
        dmask = be == 0.0
        if np.any(dmask & (al == 0.0)):
            raise DataError(f"degenerate condition on {seg!r}")
        safe_be = np.where(dmask, 1.0, be)
        add_d = np.where(dmask, 0.0, s_edge * face_len[seg] * al / safe_be)
        add_r = np.where(dmask, 0.0, s_edge * face_len[seg] * g / safe_be)
        diag[sl] += add_d
        rhs[sl] += add_r
        dv = dir_val[sl]
        dc = dir_cnt[sl]
        dv[dmask] += (g / np.where(dmask, al, 1.0))[dmask]
        dc[dmask] += 1.0
        dir_val[sl] = dv
        dir_cnt[sl] = dc

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    fixed = (dir_cnt > 0).ravel()
    keep = ~fixed[rows]
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    diag = diag.ravel()
    rhs = rhs.ravel()
    fixed_vals = np.where(dir_cnt > 0, dir_val / np.maximum(dir_cnt, 1.0), 0.0).ravel()
    diag[fixed] = 1.0
    rhs[fixed] = fixed_vals[fixed]

    residual = None
    if spec.has_pin:
        if np.any(fixed):
            raise DataError("pinned Neumann problem with Dirichlet nodes")
        residual = _compat_check(float(np.sum(rhs)), float(np.sum(np.abs(rhs))))
        pi, pj = (0, 0) if pin_node is None else pin_node
        p = idx[pi, pj]
        keep = rows != p
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        diag[p] = 1.0
        rhs[p] = 0.0
    mat = sp.coo_matrix((np.concatenate([vals, diag]),
                         (np.concatenate([rows, np.arange(nx * ny)]),
                          np.concatenate([cols, np.arange(nx * ny)]))),
                        shape=(nx * ny, nx * ny)).tocsc()
    try:
        u = spla.spsolve(mat, rhs)
    except Exception as exc:  # scipy raises several types on singular input
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise SolverError("sparse solve produced non-finite values (singular system?)")
    field = GridField(grid, u.reshape(nx, ny))
    if residual is not None:
        field = _apply_pin_shift(spec, field, residual, pin_node or (0, 0))
    return field


def modal_rectangle_applicable(spec: BvpSpec) -> bool:
    """True when the sine-modal rectangle solver can handle ``spec``."""
    if not isinstance(spec.domain, Rectangle) or spec.has_pin:
        return False
    op = spec.operator
    if op.piecewise is not None or op.has_advection or not op.is_scalar:
        return False
    if not (op.sigma.is_constant and op.c_fn.is_constant):
        return False
    for seg in ("bottom", "top"):
        bc = spec.bc(seg)
        if bc.kind != "dirichlet" or np.any(np.asarray(bc.g, dtype=float) != 0.0):
            return False
    if spec.bc("left").kind not in ("dirichlet", "neumann", "robin"):
        return False
    return True


def solve_rectangle_modal(spec: BvpSpec, nx: int, ny: int):
    """Sine series in ``y`` with finite volumes in ``x``.

    Needs constant ``sigma`` and ``c`` and homogeneous Dirichlet data on the
    bottom and top edges.  The ``y`` direction is then treated exactly for
    the sine interpolant of the data, which removes the tangential
    discretization error.  Robin data on the right edge may vary with ``y``.
    """
    spec = _check_common(spec)
    if not modal_rectangle_applicable(spec):
        raise UnsupportedError("spec is outside the sine-modal rectangle solver's scope")
    dom = spec.domain
    grid = RectGrid(dom.L1, dom.L2, nx, ny)
    X, Y = grid.mesh()
    dx = grid.dx
    J = ny - 2
    sig = float(spec.operator.sigma.const)
    cc = float(spec.operator.c_fn.const)
    f = _eval_on(spec.rhs, X, Y, (nx, ny))[:, 1:-1]
    lam = (np.pi * np.arange(1, J + 1) / dom.L2) ** 2
    Fk = sfft.dst(f, type=1, axis=1)                 # (nx, J)

    A = np.zeros((J, nx))
    C = np.zeros((J, nx))
    A[:, 1:] = -sig / dx
    C[:, :-1] = -sig / dx
    w = np.full(nx, dx)
    w[[0, -1]] *= 0.5
    B = -(A + C) + w[None, :] * (sig * lam[:, None] + cc)
    D = (w[:, None] * Fk).T.copy()
    cap = None
    for seg, idx in (("left", 0), ("right", nx - 1)):
        al, be, g = (v[1:-1] for v in _bc_data(spec.bc(seg), (ny,)))
        gk = sfft.dst(g, type=1)
        if np.all(be == 0.0):
            if np.any(al == 0.0):
                raise DataError(f"degenerate condition on {seg!r}")
            gk = sfft.dst(g / al, type=1)
            A[:, idx] = C[:, idx] = 0.0
            B[:, idx] = 1.0
            D[:, idx] = gk
        elif np.all(al == al[0]) and np.all(be == be[0]) and np.all(be != 0):
            B[:, idx] += sig * al[0] / be[0]
            D[:, idx] += sig * gk / be[0]
        else:
            if seg != "right":
                raise UnsupportedError("y-dependent Robin data is only supported on the right edge")
            cap = (al, be, g)
    if cap is None:
        U = thomas_batch(A, B, C, D)
    else:
        al, be, g = cap
        idx = nx - 1
        A2, B2, C2 = A.copy(), B.copy(), C.copy()
        A2[:, idx] = C2[:, idx] = 0.0
        B2[:, idx] = 1.0
        DA = D.copy()
        DA[:, idx] = 0.0
        UA = thomas_batch(A2, B2, C2, DA)
        DB = np.zeros_like(D)
        DB[:, idx] = 1.0
        UB = thomas_batch(A2, B2, C2, DB)

        def flux(U, Fedge):
            return (-sig * (U[:, idx - 1] - U[:, idx]) / dx
                    + w[idx] * (sig * lam + cc) * U[:, idx] - w[idx] * Fedge) / sig

        qA = sfft.idst(flux(UA, Fk[idx]), type=1)
        qB = flux(UB, np.zeros(J))
        Q = sfft.idst(qB[:, None] * sfft.dst(np.eye(J), type=1, axis=0), type=1, axis=0)
        mat = np.diag(al) + be[:, None] * Q
        try:
            uN = np.linalg.solve(mat, g - be * qA)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"edge capacitance system is singular: {exc}") from exc
        U = UA + sfft.dst(uN, type=1)[:, None] * UB
    values = np.zeros((nx, ny))
    values[:, 1:-1] = sfft.idst(U.T, type=1, axis=1)
    return GridField(grid, values)


# ---------------------------------------------------------------------------
# Dispatch and pinned Neumann problems
# ---------------------------------------------------------------------------


def solve(spec: BvpSpec, grid, pin_node=None, rect_method: str = "auto"):
    """Solve ``spec`` on the grid described by ``grid`` (a grid object)."""
    if isinstance(grid, IntervalGrid):
        return solve_interval(spec, grid.n, pin_node)
    if isinstance(grid, PolarGrid):
        return solve_polar(spec, grid.nr, grid.M, pin_node)
    if isinstance(grid, RectGrid):
        if rect_method not in ("auto", "modal", "fivepoint"):
            raise ValueError(f"unknown rectangle method {rect_method!r}")
        if rect_method == "modal" or (rect_method == "auto" and modal_rectangle_applicable(spec)):
            return solve_rectangle_modal(spec, grid.nx, grid.ny)
        return solve_rectangle(spec, grid.nx, grid.ny, pin_node)
    raise GridError(f"unknown grid {grid!r}")


def solve_pinned_neumann(spec: BvpSpec, grid, pin_node=None):
    """Pure Neumann solve: pin one node, then shift to meet the boundary pin.

    The discrete compatibility residual (the sum of the assembled right-hand
    side, scaled to an integral) must be below ``1e-8`` relative to the data
    size, otherwise CompatibilityError is raised.  After the shift,
    ``sum over pinned segments of int(weight * u)`` equals the sum of their
    ``compat_value``.  Diagnostics are stored in ``field.info["pin"]``.
    """
    if not spec.has_pin:
        raise DataError("solve_pinned_neumann needs a NeumannWithCompatibility condition")
    if not spec.is_pure_neumann:
        raise DataError("pinned solve requested for a problem that is not pure Neumann")
    c = spec.operator.c_fn
    if not (c.is_constant and c.const == 0.0):
        raise DataError("pinned Neumann problems need c = 0")
    return solve(spec, grid, pin_node=pin_node, rect_method="fivepoint")
