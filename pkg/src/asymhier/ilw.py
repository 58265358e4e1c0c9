"""Inverse Lax-Wendroff reductions of normal derivatives of order 2 and 3.

For ``w`` with ``-div(sigma grad w) + c w = phi`` near a boundary, the normal
derivatives ``d_n^2 w`` and ``d_n^3 w`` are rewritten in terms of the trace
``u = w|``, the first normal derivative ``dnu = d_n w|``, tangential
derivatives of those, and the equation data.  Three boundary shapes are
covered:

``rect_edge``  a straight edge of a rectangle (constant ``sigma`` and ``c``);
``curve``      a closed smooth curve with curvature ``kappa`` (periodic grid);
``point``      an endpoint of an interval (no tangential direction).

Interval endpoints also have a fourth-order reduction, which the
high-contrast cascades need for their last pinning constant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .errors import DataError, EllipticityError, GridError, UnsupportedError

KINDS = ("rect_edge", "curve", "point")


# ---------------------------------------------------------------------------
# Tangential differences
# ---------------------------------------------------------------------------


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives ``0..m`` at ``z`` on nodes ``x``.

    Returns an array of shape ``(m + 1, len(x))`` (Fornberg's recursion).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def periodic_derivative(u: np.ndarray, ds: float, order: int, method: str = "fd4") -> np.ndarray:
    """Derivative of a periodic sample sequence with spacing ``ds``."""
    u = np.asarray(u, dtype=float)
    if method == "spectral":
        n = len(u)
        k = np.fft.rfftfreq(n, d=ds) * 2 * np.pi
        uh = np.fft.rfft(u)
        mult = (1j * k) ** order
        if order % 2 == 1 and n % 2 == 0:
            mult[-1] = 0.0
        return np.fft.irfft(mult * uh, n=n)
    if method != "fd4":
        raise ValueError(f"unknown periodic difference method {method!r}")
    p1, m1 = np.roll(u, -1), np.roll(u, 1)
    p2, m2 = np.roll(u, -2), np.roll(u, 2)
    if order == 1:
        return (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * ds)
    if order == 2:
        return (-p2 + 16 * p1 - 30 * u + 16 * m1 - m2) / (12 * ds**2)
    raise ValueError("only first and second periodic derivatives are provided")


def _edge_stencil_rows(n: int, order: int, accuracy: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """(indices, weights) per node for an edge derivative on unit spacing."""
    half = accuracy // 2 + (order - 1) // 2
    width = 2 * half + 1
    one_sided = accuracy + order
    rows = []
    nodes = np.arange(n, dtype=float)
    for j in range(n):
        if j - half >= 0 and j + half <= n - 1:
            idx = np.arange(j - half, j + half + 1)
        elif j - half < 0:
            idx = np.arange(0, max(one_sided, width))
        else:
            idx = np.arange(n - max(one_sided, width), n)
        w = fornberg_weights(float(j), nodes[idx], order)[order]
        rows.append((idx, w))
    return rows


def edge_derivative(u: np.ndarray, ds: float, order: int, method: str = "fd2") -> np.ndarray:
    """Derivative along an open edge: centred inside, one-sided at the ends."""
    u = np.asarray(u, dtype=float)
    acc = {"fd2": 2, "fd4": 4}.get(method)
    if acc is None:
        raise ValueError(f"unknown edge difference method {method!r}")
    if order not in (1, 2):
        raise ValueError("only first and second edge derivatives are provided")
    n = len(u)
    if n < acc + order + 1:
        raise GridError("edge grid too short for the requested stencil")
    out = np.empty(n)
    for j, (idx, w) in enumerate(_edge_stencil_rows(n, order, acc)):
        out[j] = np.dot(w, u[idx])
    return out / ds**order


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducerContext:
    """Boundary traces of the operator and the right-hand side.

    ``n`` is the number of boundary nodes, ``ds`` their arc-length spacing.
    Scalars broadcast.  ``phi`` is the right-hand side trace and ``dn_phi``
    its outward normal derivative (required only for ``k = 3``).
    ``dn2_phi`` is the second normal derivative, used only by the endpoint
    reduction of order four.
    """

    kind: str
    n: int
    sigma: Any = 1.0
    c: Any = 0.0
    phi: Any = 0.0
    dn_phi: Any = None
    dn_sigma: Any = 0.0
    ds_sigma: Any = 0.0
    kappa: Any = 0.0
    dkappa: Any = 0.0
    ds: float = 1.0
    periodic: bool = False
    method: str | None = None
    dn2_phi: Any = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DataError(f"unknown reducer kind {self.kind!r}")
        if np.any(np.asarray(self.sigma, dtype=float) <= 0):
            raise EllipticityError("sigma must be positive on the boundary")
        if self.kind == "point" and self.n < 1:
            raise GridError("point context needs at least one node")

    # broadcast helpers -----------------------------------------------------
    def arr(self, name: str) -> np.ndarray:
        v = getattr(self, name)
        if v is None:
            raise DataError(f"reducer context has no {name!r} trace")
        a = np.asarray(v, dtype=float)
        try:
            return np.broadcast_to(a, (self.n,)).astype(float)
        except ValueError as exc:
            raise GridError(f"trace {name!r} of shape {a.shape} on a boundary of {self.n} nodes") from exc

    def with_phi(self, phi: Any = 0.0, dn_phi: Any = 0.0, dn2_phi: Any = 0.0) -> "ReducerContext":
        return replace(self, phi=phi, dn_phi=dn_phi, dn2_phi=dn2_phi)

    def scaled(self, factor: float) -> "ReducerContext":
        """The same context with the right-hand side multiplied by ``factor``."""
        def mul(v):
            return None if v is None else factor * np.asarray(v, dtype=float)
        return replace(self, phi=mul(self.phi), dn_phi=mul(self.dn_phi), dn2_phi=mul(self.dn2_phi))

    def _check(self, *traces) -> list[np.ndarray]:
        out = []
        for t in traces:
            a = np.asarray(t, dtype=float)
            if a.shape not in ((self.n,), ()):
                raise GridError(f"trace of shape {a.shape} on a boundary of {self.n} nodes")
            out.append(np.broadcast_to(a, (self.n,)).astype(float))
        return out

    def dt(self, u: np.ndarray, order: int) -> np.ndarray:
        """Tangential (arc-length) derivative of a boundary trace."""
        if self.kind == "point":
            return np.zeros_like(u)
        if self.periodic:
            return periodic_derivative(u, self.ds, order, self.method or "fd4")
        return edge_derivative(u, self.ds, order, self.method or "fd2")

    @property
    def constant_sigma(self) -> bool:
        s = self.arr("sigma")
        return bool(np.all(s == s[0]) and np.all(self.arr("dn_sigma") == 0)
                    and np.all(self.arr("ds_sigma") == 0))


# ---------------------------------------------------------------------------
# Reducers
# ---------------------------------------------------------------------------


def _require(ctx: ReducerContext, kind: str) -> None:
    if ctx.kind != kind:
        raise GridError(f"reducer for {kind!r} called with a {ctx.kind!r} context")


def reduce_rect_k2(ctx: ReducerContext, u_trace, dnu_trace) -> np.ndarray:
    """``d_x^2 w = -phi/sigma + (c/sigma) u - d_y^2 u`` on a straight edge."""
    _require(ctx, "rect_edge")
    u, _ = ctx._check(u_trace, dnu_trace)
    s, c, phi = ctx.arr("sigma"), ctx.arr("c"), ctx.arr("phi")
    return -phi / s + c * u / s - ctx.dt(u, 2)


def reduce_rect_k3(ctx: ReducerContext, u_trace, dnu_trace) -> np.ndarray:
    """``d_x^3 w = (-sigma d_y^2 dnu + c dnu - d_x phi) / sigma`` on a straight edge."""
    _require(ctx, "rect_edge")
    _, dnu = ctx._check(u_trace, dnu_trace)
    if ctx.dn_phi is None:
        raise DataError("k = 3 reduction needs the normal derivative of the right-hand side")
    s, c, dphi = ctx.arr("sigma"), ctx.arr("c"), ctx.arr("dn_phi")
    return (-s * ctx.dt(dnu, 2) + c * dnu - dphi) / s


def reduce_curv_k2(ctx: ReducerContext, u_trace, dnu_trace) -> np.ndarray:
    """Second normal derivative on a closed curve with variable ``sigma``.

    ``-phi/sigma - (d_s sigma/sigma) d_s u - (d_n sigma/sigma) dnu - d_s^2 u
    - kappa dnu + (c/sigma) u``.
    """
    _require(ctx, "curve")
    if not ctx.periodic:
        raise GridError("the curvilinear reducer needs a closed (periodic) boundary grid")
    u, dnu = ctx._check(u_trace, dnu_trace)
    s = ctx.arr("sigma")
    return (-ctx.arr("phi") / s - ctx.arr("ds_sigma") / s * ctx.dt(u, 1)
            - ctx.arr("dn_sigma") / s * dnu - ctx.dt(u, 2) - ctx.arr("kappa") * dnu
            + ctx.arr("c") * u / s)


def reduce_curv_k3(ctx: ReducerContext, u_trace, dnu_trace) -> np.ndarray:
    """Third normal derivative on a closed curve, constant ``sigma`` only.

    ``(kappa' d_s + 3 kappa d_s^2) u + (2 kappa^2 - d_s^2) dnu
    + ((kappa - d_n)/sigma) phi``, with ``phi`` replaced by ``phi - c w`` when
    ``c`` is a nonzero constant.
    """
    _require(ctx, "curve")
    if not ctx.periodic:
        raise GridError("the curvilinear reducer needs a closed (periodic) boundary grid")
    if not ctx.constant_sigma:
        raise UnsupportedError("the third-order curvilinear reduction needs constant sigma")
    if ctx.dn_phi is None:
        raise DataError("k = 3 reduction needs the normal derivative of the right-hand side")
    u, dnu = ctx._check(u_trace, dnu_trace)
    s, kap, c = ctx.arr("sigma"), ctx.arr("kappa"), ctx.arr("c")
    if not np.all(c == c[0]):
        raise UnsupportedError("the third-order curvilinear reduction needs constant c")
    out = (ctx.arr("dkappa") * ctx.dt(u, 1) + 3 * kap * ctx.dt(u, 2)
           + 2 * kap**2 * dnu - ctx.dt(dnu, 2)
           + (kap * ctx.arr("phi") - ctx.arr("dn_phi")) / s)
    return out - c / s * (kap * u - dnu)


def reduce_point_k2(ctx: ReducerContext, u_trace, dnu_trace) -> np.ndarray:
    """Interval endpoint: ``-phi/sigma - (d_n sigma/sigma) dnu + (c/sigma) u``."""
    _require(ctx, "point")
    u, dnu = ctx._check(u_trace, dnu_trace)
    s = ctx.arr("sigma")
    return -ctx.arr("phi") / s - ctx.arr("dn_sigma") / s * dnu + ctx.arr("c") * u / s


def reduce_point_k3(ctx: ReducerContext, u_trace, dnu_trace) -> np.ndarray:
    """Interval endpoint, constant ``sigma`` and ``c``: ``(c dnu - d_n phi)/sigma``."""
    _require(ctx, "point")
    if np.any(ctx.arr("dn_sigma") != 0):
        raise UnsupportedError("the third-order endpoint reduction needs constant sigma")
    if ctx.dn_phi is None:
        raise DataError("k = 3 reduction needs the normal derivative of the right-hand side")
    _, dnu = ctx._check(u_trace, dnu_trace)
    return (ctx.arr("c") * dnu - ctx.arr("dn_phi")) / ctx.arr("sigma")


def reduce_point_k4(ctx: ReducerContext, u_trace, dnu_trace) -> np.ndarray:
    """Interval endpoint, constant ``sigma`` and ``c``: ``(c F_2 - d_n^2 phi)/sigma``."""
    _require(ctx, "point")
    if np.any(ctx.arr("dn_sigma") != 0):
        raise UnsupportedError("the fourth-order endpoint reduction needs constant sigma")
    if ctx.dn2_phi is None:
        raise DataError("k = 4 reduction needs the second normal derivative of the right-hand side")
    f2 = reduce_point_k2(ctx, u_trace, dnu_trace)
    return (ctx.arr("c") * f2 - ctx.arr("dn2_phi")) / ctx.arr("sigma")


_TABLE = {
    ("rect_edge", 2): reduce_rect_k2, ("rect_edge", 3): reduce_rect_k3,
    ("curve", 2): reduce_curv_k2, ("curve", 3): reduce_curv_k3,
    ("point", 2): reduce_point_k2, ("point", 3): reduce_point_k3, ("point", 4): reduce_point_k4,
}


def reduce(ctx: ReducerContext, k: int, u_trace, dnu_trace) -> np.ndarray:
    """``F_k[u, dnu]`` for ``k`` in {2, 3} (and 4 at interval endpoints).

    Other orders raise UnsupportedError.
    """
    fn = _TABLE.get((ctx.kind, k))
    if fn is None:
        raise UnsupportedError(f"normal-derivative reduction of order {k} is not available "
                               f"on {ctx.kind!r} boundaries")
    return fn(ctx, u_trace, dnu_trace)
