"""Structured grids and the discrete fields that live on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError
from .geometry import simpson_weights

MIN_NODES = 8

# First-derivative weights at node 0 using nodes 0..p (unit spacing), i.e.
# one-sided stencils of order p.
ONE_SIDED = {
    1: np.array([-1.0, 1.0]),
    2: np.array([-1.5, 2.0, -0.5]),
    3: np.array([-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0]),
    4: np.array([-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25]),
}
DEFAULT_ORDER = 3


def _check_count(name: str, n: int) -> None:
    if int(n) != n or n < MIN_NODES:
        raise GridError(f"{name} must be an integer >= {MIN_NODES}, got {n}")


def aligned_index(lo: float, step: float, point: float, n: int, what: str = "point") -> int:
    """Index of the grid node at ``point``; GridError if it is not a node."""
    k = (point - lo) / step
    i = int(round(k))
    if abs(k - i) > 1e-9 or not 0 <= i < n:
        raise GridError(f"{what} {point} is not a grid node (offset {k:.6g} cells)")
    return i


@dataclass(frozen=True)
class IntervalGrid:
    a: float
    b: float
    n: int

    def __post_init__(self) -> None:
        _check_count("n_nodes", self.n)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n)

    @property
    def step(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @property
    def shape(self) -> tuple[int]:
        return (self.n,)

    def weights(self) -> np.ndarray:
        """Trapezoid (finite-volume cell) weights."""
        w = np.full(self.n, self.step)
        w[[0, -1]] *= 0.5
        return w


@dataclass(frozen=True)
class PolarGrid:
    """Nodes ``r_i`` (``nr`` of them, ``r0`` may be 0) times ``M`` angles."""

    r0: float
    r1: float
    nr: int
    M: int

    def __post_init__(self) -> None:
        _check_count("nr", self.nr)
        _check_count("M", self.M)
        if self.M % 2:
            raise GridError("the angular node count M must be even")
        if not (0 <= self.r0 < self.r1):
            raise GridError("PolarGrid needs 0 <= r0 < r1")

    @property
    def r(self) -> np.ndarray:
        return np.linspace(self.r0, self.r1, self.nr)

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M

    @property
    def step(self) -> float:
        return (self.r1 - self.r0) / (self.nr - 1)

    @property
    def is_disk(self) -> bool:
        return self.r0 == 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nr, self.M)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        R, T = np.meshgrid(self.r, self.theta, indexing="ij")
        return R * np.cos(T), R * np.sin(T)

    def radial_weights(self) -> np.ndarray:
        """Finite-volume areas ``int r dr`` of the radial cells."""
        r, d = self.r, self.step
        lo = np.maximum(r - d / 2, self.r0)
        hi = np.minimum(r + d / 2, self.r1)
        return 0.5 * (hi**2 - lo**2)

    def weights(self) -> np.ndarray:
        return np.outer(self.radial_weights(), np.full(self.M, 2 * np.pi / self.M))


@dataclass(frozen=True)
class RectGrid:
    L1: float
    L2: float
    nx: int
    ny: int

    def __post_init__(self) -> None:
        _check_count("nx", self.nx)
        _check_count("ny", self.ny)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L1, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.L2, self.ny)

    @property
    def dx(self) -> float:
        return self.L1 / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.L2 / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def weights(self) -> np.ndarray:
        wx = np.full(self.nx, self.dx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.dy)
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)


Grid = IntervalGrid | PolarGrid | RectGrid


def one_sided_derivative(values: np.ndarray, step: float, order: int = DEFAULT_ORDER,
                         axis: int = 0, at_end: bool = False) -> np.ndarray:
    """Derivative along ``axis`` at its first (or last) node, pointing inward.

    With ``at_end`` the stencil runs backwards from the last node and the
    result is the derivative in the increasing-coordinate direction.
    """
    if order not in ONE_SIDED:
        raise GridError(f"one-sided stencil order must be one of {sorted(ONE_SIDED)}")
    w = ONE_SIDED[order]
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if v.shape[0] < len(w):
        raise GridError("not enough nodes for the one-sided stencil")
    if at_end:
        pts = v[::-1][: len(w)]
        return -np.tensordot(w, pts, axes=(0, 0)) / step
    return np.tensordot(w, v[: len(w)], axes=(0, 0)) / step


@dataclass
class GridField:
    """Nodal values on a structured grid, with traces and normal derivatives.

    Segments: interval ``left``/``right``; rectangle ``left``/``right``/
    ``bottom``/``top``; polar ``inner`` (when ``r0 > 0``) and ``outer``.
    """

    grid: Grid
    values: np.ndarray
    label: str = ""
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridError(f"values of shape {self.values.shape} on grid of shape {self.grid.shape}")

    # arithmetic used by partial sums ---------------------------------------
    def _like(self, values) -> "GridField":
        return GridField(self.grid, values, self.label)

    def __add__(self, other):
        if isinstance(other, GridField):
            if other.grid != self.grid:
                raise GridError("fields live on different grids")
            return self._like(self.values + other.values)
        return self._like(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridField):
            return self + (-1.0) * other
        return self._like(self.values - other)

    def __mul__(self, scalar):
        return self._like(self.values * float(scalar))

    __rmul__ = __mul__

    # traces -------------------------------------------------------------
    def trace(self, segment: str) -> np.ndarray:
        g, v = self.grid, self.values
        if isinstance(g, IntervalGrid):
            table = {"left": v[:1], "right": v[-1:]}
        elif isinstance(g, PolarGrid):
            table = {"outer": v[-1]}
            if not g.is_disk:
                table["inner"] = v[0]
        else:
            table = {"left": v[0, :], "right": v[-1, :], "bottom": v[:, 0], "top": v[:, -1]}
        if segment not in table:
            raise GridError(f"grid has no segment {segment!r}")
        return table[segment].copy()

    def normal_derivative(self, segment: str, order: int = DEFAULT_ORDER) -> np.ndarray:
        """Outward normal derivative on ``segment`` by one-sided differences."""
        g, v = self.grid, self.values
        if isinstance(g, IntervalGrid):
            if segment == "left":
                return -one_sided_derivative(v, g.step, order)[None]
            if segment == "right":
                return one_sided_derivative(v, g.step, order, at_end=True)[None]
        elif isinstance(g, PolarGrid):
            if segment == "outer":
                return one_sided_derivative(v, g.step, order, axis=0, at_end=True)
            if segment == "inner" and not g.is_disk:
                return -one_sided_derivative(v, g.step, order, axis=0)
        else:
            if segment == "right":
                return one_sided_derivative(v, g.dx, order, axis=0, at_end=True)
            if segment == "left":
                return -one_sided_derivative(v, g.dx, order, axis=0)
            if segment == "top":
                return one_sided_derivative(v, g.dy, order, axis=1, at_end=True)
            if segment == "bottom":
                return -one_sided_derivative(v, g.dy, order, axis=1)
        raise GridError(f"grid has no segment {segment!r}")

    def integral(self) -> float:
        return float(np.sum(self.grid.weights() * self.values))


def boundary_weights(grid: Grid, segment: str) -> np.ndarray:
    """Quadrature weights for integrals over a boundary segment.

    Interval endpoints carry weight 1; circles use the periodic trapezoid rule
    (``r dtheta``); rectangle edges use composite Simpson.
    """
    if isinstance(grid, IntervalGrid):
        if segment not in ("left", "right"):
            raise GridError(f"grid has no segment {segment!r}")
        return np.ones(1)
    if isinstance(grid, PolarGrid):
        if segment == "outer":
            r = grid.r1
        elif segment == "inner" and not grid.is_disk:
            r = grid.r0
        else:
            raise GridError(f"grid has no segment {segment!r}")
        return np.full(grid.M, 2 * np.pi * r / grid.M)
    if segment in ("left", "right"):
        return simpson_weights(grid.ny, grid.dy)
    if segment in ("bottom", "top"):
        return simpson_weights(grid.nx, grid.dx)
    raise GridError(f"grid has no segment {segment!r}")


@dataclass
class PiecewiseField:
    """A field on ``D-`` and ``D+`` that may jump across the interface.

    ``minus`` covers ``[a, x_gamma]`` (interval) or ``r <= R_gamma``; ``plus``
    covers the rest.  The interface normal points from ``D-`` into ``D+``.
    """

    minus: GridField
    plus: GridField
    label: str = ""
    info: dict = field(default_factory=dict, compare=False)

    def _like(self, mv, pv) -> "PiecewiseField":
        return PiecewiseField(GridField(self.minus.grid, mv), GridField(self.plus.grid, pv), self.label)

    def __add__(self, other):
        if isinstance(other, PiecewiseField):
            return self._like(self.minus.values + other.minus.values, self.plus.values + other.plus.values)
        return self._like(self.minus.values + other, self.plus.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        s = float(scalar)
        return self._like(self.minus.values * s, self.plus.values * s)

    __rmul__ = __mul__

    def side(self, name: str) -> GridField:
        if name not in ("minus", "plus"):
            raise GridError("side must be 'minus' or 'plus'")
        return getattr(self, name)

    def interface_trace(self, side: str) -> np.ndarray:
        f = self.side(side)
        if isinstance(f.grid, IntervalGrid):
            return f.trace("right" if side == "minus" else "left")
        return f.trace("outer" if side == "minus" else "inner")

    def interface_normal_derivative(self, side: str, order: int = DEFAULT_ORDER) -> np.ndarray:
        """``d_n`` on the interface from one side, ``n`` pointing into ``D+``."""
        f = self.side(side)
        if isinstance(f.grid, IntervalGrid):
            seg = "right" if side == "minus" else "left"
        else:
            seg = "outer" if side == "minus" else "inner"
        d = f.normal_derivative(seg, order)
        return d if side == "minus" else -d

    def trace(self, segment: str) -> np.ndarray:
        if isinstance(self.plus.grid, IntervalGrid):
            return (self.minus if segment == "left" else self.plus).trace(segment)
        return self.plus.trace(segment)

    def normal_derivative(self, segment: str, order: int = DEFAULT_ORDER) -> np.ndarray:
        if isinstance(self.plus.grid, IntervalGrid):
            return (self.minus if segment == "left" else self.plus).normal_derivative(segment, order)
        return self.plus.normal_derivative(segment, order)

    def integral(self) -> float:
        return self.minus.integral() + self.plus.integral()
