"""Boundary nodes of a grid and the reducer contexts built on them."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Any

import numpy as np

from .bvp import EllipticOperator, ScalarFunction
from .errors import DataError, GridError, UnsupportedError
from .fields import IntervalGrid, PolarGrid, RectGrid
from .geometry import BoundaryProfile
from .ilw import ReducerContext, fornberg_weights


@dataclass(frozen=True)
class SegmentNodes:
    """Nodes of one boundary segment with their local frame.

    ``param`` is the profile parameter at each node: the coordinate for
    interval endpoints, ``y`` (or ``x``) along rectangle edges, and the polar
    angle on circles.  ``kappa`` is the signed curvature for the outward
    normal and ``ds`` the arc-length spacing.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    nx: np.ndarray
    ny: np.ndarray
    tx: np.ndarray
    ty: np.ndarray
    kappa: float
    ds: float
    periodic: bool
    param: np.ndarray

    @property
    def n(self) -> int:
        return self.x.size


def segment_nodes(grid, segment: str) -> SegmentNodes:
    """Boundary nodes of ``segment`` on ``grid`` with outward normals."""
    if isinstance(grid, IntervalGrid):
        if segment not in ("left", "right"):
            raise GridError(f"interval grid has no segment {segment!r}")
        xe = grid.a if segment == "left" else grid.b
        sgn = -1.0 if segment == "left" else 1.0
        one = np.ones(1)
        return SegmentNodes("point", xe * one, 0 * one, sgn * one, 0 * one, 0 * one, one,
                            0.0, 1.0, False, xe * one)
    if isinstance(grid, RectGrid):
        one_y, one_x = np.ones(grid.ny), np.ones(grid.nx)
        if segment in ("left", "right"):
            xe = 0.0 if segment == "left" else grid.L1
            sgn = -1.0 if segment == "left" else 1.0
            return SegmentNodes("rect_edge", xe * one_y, grid.y.copy(), sgn * one_y, 0 * one_y,
                                0 * one_y, one_y, 0.0, grid.dy, False, grid.y.copy())
        if segment in ("bottom", "top"):
            ye = 0.0 if segment == "bottom" else grid.L2
            sgn = -1.0 if segment == "bottom" else 1.0
            return SegmentNodes("rect_edge", grid.x.copy(), ye * one_x, 0 * one_x, sgn * one_x,
                                one_x, 0 * one_x, 0.0, grid.dx, False, grid.x.copy())
        raise GridError(f"rectangle grid has no segment {segment!r}")
    if isinstance(grid, PolarGrid):
        if segment == "outer":
            R, sgn = grid.r1, 1.0
        elif segment == "inner" and not grid.is_disk:
            R, sgn = grid.r0, -1.0
        else:
            raise GridError(f"polar grid has no segment {segment!r}")
        th = grid.theta
        c, s = np.cos(th), np.sin(th)
        return SegmentNodes("curve", R * c, R * s, sgn * c, sgn * s, -s, c,
                            sgn / R, 2 * np.pi * R / grid.M, True, th.copy())
    raise GridError(f"unknown grid {grid!r}")


def profile_values(profile: BoundaryProfile, nodes: SegmentNodes, der: int = 0) -> np.ndarray:
    """``h`` (or its derivative in arc length) at the segment nodes."""
    fn = (profile.h, profile.dh, profile.d2h)[der]
    v = np.asarray(fn(nodes.param), dtype=float) * np.ones(nodes.n)
    if der and nodes.kind == "curve":
        # the profile parameter on circles is the angle, and ds = R dtheta
        v = v * abs(nodes.kappa) ** der
    return v


def _dn(fn: ScalarFunction, nodes: SegmentNodes) -> np.ndarray:
    gx, gy = fn.grad(nodes.x, nodes.y)
    return gx * nodes.nx + gy * nodes.ny


def _ds(fn: ScalarFunction, nodes: SegmentNodes) -> np.ndarray:
    gx, gy = fn.grad(nodes.x, nodes.y)
    return gx * nodes.tx + gy * nodes.ty


def normal_derivatives(fn: Any, nodes: SegmentNodes, order: int,
                       given: tuple | None = None) -> list[np.ndarray]:
    """Traces ``d_n^k fn`` for ``k = 0..order`` at the segment nodes.

    ``given`` optionally supplies ``d_n^k fn`` for ``k >= 1`` as callables of
    ``(x, y)``.  Otherwise constants give zeros, ``k = 1`` uses the gradient
    and higher orders use a 7-point central stencil along the normal, which
    assumes ``fn`` is defined in a neighbourhood of the boundary.
    """
    f = ScalarFunction.coerce(fn)
    out = [np.asarray(f(nodes.x, nodes.y), dtype=float) * np.ones(nodes.n)]
    for k in range(1, order + 1):
        if given is not None and len(given) >= k and given[k - 1] is not None:
            out.append(np.asarray(ScalarFunction.coerce(given[k - 1])(nodes.x, nodes.y), dtype=float)
                       * np.ones(nodes.n))
        elif f.is_constant:
            out.append(np.zeros(nodes.n))
        elif k == 1:
            out.append(_dn(f, nodes))
        else:
            step = 1e-2
            t = step * np.arange(-3, 4)
            w = fornberg_weights(0.0, t, k)[k]
            vals = [f(nodes.x + tj * nodes.nx, nodes.y + tj * nodes.ny) for tj in t]
            out.append(sum(wj * v for wj, v in zip(w, vals)))
    return out


def reducer_context(operator: EllipticOperator, rhs: Any, nodes: SegmentNodes,
                    method: str | None = None, side: str | None = None) -> ReducerContext:
    """Reducer context for the operator ``-div(sigma grad u) + c u = rhs``.

    ``side`` selects ``minus``/``plus`` coefficients of a piecewise operator.
    Rectangle edges need a constant ``sigma``.
    """
    if operator.piecewise is not None:
        if side not in ("minus", "plus"):
            raise DataError("a piecewise operator needs side='minus' or 'plus'")
        sigma = operator.sigma_minus if side == "minus" else operator.sigma_plus
    else:
        sigma = operator.sigma
    c = operator.c_fn
    x, y = nodes.x, nodes.y
    sig = sigma(x, y) * np.ones(nodes.n)
    phi_fn = ScalarFunction.coerce(rhs)
    phi = phi_fn(x, y) * np.ones(nodes.n)
    dn_phi = _dn(phi_fn, nodes)
    dn2_phi = normal_derivatives(phi_fn, nodes, 2)[2] if nodes.kind == "point" else None
    if nodes.kind == "rect_edge" and not sigma.is_constant:
        raise UnsupportedError("rectangle-edge reductions need a constant sigma")
    return ReducerContext(
        kind=nodes.kind, n=nodes.n, sigma=sig, c=c(x, y) * np.ones(nodes.n),
        phi=phi, dn_phi=dn_phi,
        dn_sigma=0.0 if sigma.is_constant else _dn(sigma, nodes),
        ds_sigma=0.0 if sigma.is_constant else _ds(sigma, nodes),
        kappa=nodes.kappa, dkappa=0.0, ds=nodes.ds, periodic=nodes.periodic, method=method,
        dn2_phi=dn2_phi)


def taylor_factor(h: np.ndarray, k: int) -> np.ndarray:
    return h**k / factorial(k)
