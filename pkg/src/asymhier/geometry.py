"""Reference domains, perturbation profiles, boundary frames and layer geometry.

Boundary parameters
-------------------
* Interval: the endpoint coordinate itself (``a`` or ``b``).
* Rectangle: the coordinate ``y`` along the perturbed right edge ``x = L1``;
  :func:`curvature` additionally accepts the counter-clockwise perimeter
  parameter starting at the origin.
* Circles (disk, annulus, interface): the polar angle ``theta``.  Arc-length
  derivatives follow from ``ds = R dtheta``.

Curvature convention: ``tau' = -kappa n`` with ``n`` the outward normal of the
domain that owns the boundary, so a disk of radius ``R`` has ``kappa = 1/R``
and the inner circle of an annulus has ``kappa = -1/R_in``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import GeometryError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


def _positive(name: str, value: float) -> None:
    if not (np.isfinite(value) and value > 0):
        raise GeometryError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class Interval:
    """The interval ``(a, b)``, optionally split at an interior interface point."""

    a: float = 0.0
    b: float = 1.0
    interface: float | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise GeometryError(f"Interval needs a < b, got ({self.a}, {self.b})")
        if self.interface is not None and not (self.a < self.interface < self.b):
            raise GeometryError("interface point must lie strictly inside the interval")

    kind = "interval"

    @property
    def segments(self) -> tuple[str, ...]:
        return ("left", "right")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Rectangle:
    """The rectangle ``(0, L1) x (0, L2)``; only the right edge is perturbed."""

    L1: float = 1.0
    L2: float = 1.0

    def __post_init__(self) -> None:
        _positive("L1", self.L1)
        _positive("L2", self.L2)

    kind = "rectangle"

    @property
    def segments(self) -> tuple[str, ...]:
        return ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Disk:
    R: float = 1.0

    def __post_init__(self) -> None:
        _positive("R", self.R)

    kind = "disk"

    @property
    def segments(self) -> tuple[str, ...]:
        return ("outer",)


@dataclass(frozen=True)
class Annulus:
    R_in: float
    R_out: float

    def __post_init__(self) -> None:
        _positive("R_in", self.R_in)
        _positive("R_out", self.R_out)
        if not self.R_in < self.R_out:
            raise GeometryError("Annulus needs 0 < R_in < R_out")

    kind = "annulus"

    @property
    def segments(self) -> tuple[str, ...]:
        return ("inner", "outer")


@dataclass(frozen=True)
class DiskWithInterface:
    """Disk of radius ``R`` containing the concentric interface circle ``R_gamma``.

    ``D-`` is the inner disk, ``D+`` the annulus between the two circles.
    """

    R_gamma: float
    R: float = 1.0

    def __post_init__(self) -> None:
        _positive("R_gamma", self.R_gamma)
        _positive("R", self.R)
        if not self.R_gamma < self.R:
            raise GeometryError("DiskWithInterface needs 0 < R_gamma < R")

    kind = "disk_with_interface"

    @property
    def segments(self) -> tuple[str, ...]:
        return ("outer",)


ReferenceDomain = Union[Interval, Rectangle, Disk, Annulus, DiskWithInterface]


def segment_radius(domain: ReferenceDomain, segment: str) -> float:
    """Radius of a circular boundary segment (``gamma`` is the interface)."""
    if isinstance(domain, Disk) and segment == "outer":
        return domain.R
    if isinstance(domain, Annulus) and segment in ("inner", "outer"):
        return domain.R_in if segment == "inner" else domain.R_out
    if isinstance(domain, DiskWithInterface) and segment in ("outer", "gamma"):
        return domain.R if segment == "outer" else domain.R_gamma
    raise GeometryError(f"segment {segment!r} of {domain.kind} is not a circle")


# ---------------------------------------------------------------------------
# Perturbation profiles
# ---------------------------------------------------------------------------

SIGN_CLASSES = ("nonnegative", "signed", "strictly_positive")


def _poly_eval(coeffs: tuple[float, ...], s: np.ndarray, der: int) -> np.ndarray:
    p = np.polynomial.polynomial.Polynomial(coeffs)
    if der:
        p = p.deriv(der)
    return p(s)


@dataclass(frozen=True)
class BoundaryProfile:
    """Normal displacement ``h`` of a boundary, as a named built-in function.

    Built-ins (``params`` in order):

    ``const``      ``(c,)``                  h = c
    ``cos_k``      ``(a0, a1, k)``           h = a0 + a1 cos(k s)
    ``sin_k``      ``(a0, a1, k)``           h = a0 + a1 sin(k s)
    ``poly``       ``(c0, c1, ...)``         h = sum c_i s^i
    ``endpoints``  ``(h0, h1, a, b)``        linear in s with h(a)=h0, h(b)=h1

    The sign class is checked against ``n_check`` samples of ``s_range`` when
    the profile is built.
    """

    kind: str
    params: tuple[float, ...]
    sign_class: str = "nonnegative"
    s_range: tuple[float, float] = (0.0, TWO_PI)
    n_check: int = 1025
    _samples: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in ("const", "cos_k", "sin_k", "poly", "endpoints"):
            raise GeometryError(f"unknown profile kind {self.kind!r}")
        if self.sign_class not in SIGN_CLASSES:
            raise GeometryError(f"unknown sign class {self.sign_class!r}")
        need = {"const": 1, "cos_k": 3, "sin_k": 3, "endpoints": 4}
        if self.kind in need and len(self.params) != need[self.kind]:
            raise GeometryError(f"profile {self.kind!r} takes {need[self.kind]} parameters")
        if self.kind == "poly" and not self.params:
            raise GeometryError("profile 'poly' needs at least one coefficient")
        if self.kind == "endpoints" and self.params[2] >= self.params[3]:
            raise GeometryError("profile 'endpoints' needs a < b")
        s = np.linspace(self.s_range[0], self.s_range[1], self.n_check)
        vals = self.h(s)
        object.__setattr__(self, "_samples", vals)
        if not np.all(np.isfinite(vals)):
            raise GeometryError("profile is not finite on its parameter range")
        self.check_sign(vals)

    # constructors --------------------------------------------------------
    @classmethod
    def const(cls, c: float, sign_class: str | None = None, **kw) -> "BoundaryProfile":
        if sign_class is None:
            sign_class = "strictly_positive" if c > 0 else ("nonnegative" if c == 0 else "signed")
        return cls("const", (c,), sign_class, **kw)

    @classmethod
    def endpoints(cls, h0: float, h1: float, a: float = 0.0, b: float = 1.0,
                  sign_class: str | None = None) -> "BoundaryProfile":
        if sign_class is None:
            lo = min(h0, h1)
            sign_class = "strictly_positive" if lo > 0 else ("nonnegative" if lo == 0 else "signed")
        return cls("endpoints", (h0, h1, a, b), sign_class, s_range=(a, b))

    # evaluation ----------------------------------------------------------
    def _eval(self, s, der: int) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        p = self.params
        if self.kind == "const":
            return np.full_like(s, p[0] if der == 0 else 0.0)
        if self.kind in ("cos_k", "sin_k"):
            a0, a1, k = p
            phase = k * s
            if self.kind == "cos_k":
                base = (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x))[der](phase)
            else:
                base = (np.sin, np.cos, lambda x: -np.sin(x))[der](phase)
            return (a0 if der == 0 else 0.0) + a1 * k**der * base
        if self.kind == "poly":
            return _poly_eval(p, s, der)
        h0, h1, a, b = p
        slope = (h1 - h0) / (b - a)
        if der == 0:
            return h0 + slope * (s - a)
        return np.full_like(s, slope if der == 1 else 0.0)

    def h(self, s) -> np.ndarray:
        return self._eval(s, 0)

    def dh(self, s) -> np.ndarray:
        return self._eval(s, 1)

    def d2h(self, s) -> np.ndarray:
        return self._eval(s, 2)

    def __call__(self, s) -> np.ndarray:
        return self.h(s)

    def check_sign(self, values) -> None:
        """Raise GeometryError unless ``values`` respect the sign class."""
        v = np.asarray(values, dtype=float)
        if self.sign_class == "nonnegative" and np.any(v < 0):
            raise GeometryError("profile declared nonnegative takes negative values")
        if self.sign_class == "strictly_positive" and np.any(v <= 0):
            raise GeometryError("profile declared strictly positive vanishes somewhere")

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self._samples)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params), "sign_class": self.sign_class}


# ---------------------------------------------------------------------------
# Frames and curvature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvilinearFrame:
    """Parametrized boundary curve with unit tangent, outward normal, curvature.

    ``speed`` is ``|d point / ds|`` for the chosen parameter ``s`` (``R`` for a
    circle parametrized by angle, 1 for a straight edge parametrized by length).
    """

    point: Callable[[np.ndarray], np.ndarray]
    tangent: Callable[[np.ndarray], np.ndarray]
    normal: Callable[[np.ndarray], np.ndarray]
    kappa: Callable[[np.ndarray], np.ndarray]
    dkappa: Callable[[np.ndarray], np.ndarray]
    speed: float
    closed: bool
    s_range: tuple[float, float]
    n_check: int = 257

    def __post_init__(self) -> None:
        s = np.linspace(self.s_range[0], self.s_range[1], self.n_check)
        tau, nrm = self.tangent(s), self.normal(s)
        dot = np.abs(np.sum(tau * nrm, axis=0))
        if np.any(dot >= 1e-12):
            raise GeometryError("frame tangent and normal are not orthogonal")
        for name, vec in (("tangent", tau), ("normal", nrm)):
            if np.any(np.abs(np.hypot(vec[0], vec[1]) - 1.0) >= 1e-12):
                raise GeometryError(f"frame {name} is not a unit vector")

    @classmethod
    def circle(cls, R: float, outward: int = 1) -> "CurvilinearFrame":
        """Circle of radius ``R`` by angle; ``outward=-1`` when the domain lies outside."""
        _positive("R", R)
        if outward not in (1, -1):
            raise GeometryError("outward must be +1 or -1")
        sgn = float(outward)

        def point(t):
            t = np.asarray(t, dtype=float)
            return np.array([R * np.cos(t), R * np.sin(t)])

        def normal(t):
            t = np.asarray(t, dtype=float)
            return sgn * np.array([np.cos(t), np.sin(t)])

        def tangent(t):
            # Always d(point)/ds, counter-clockwise.
            t = np.asarray(t, dtype=float)
            return np.array([-np.sin(t), np.cos(t)])

        kap = sgn / R
        return cls(point, tangent, normal,
                   lambda t: np.full_like(np.asarray(t, dtype=float), kap),
                   lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                   speed=R, closed=True, s_range=(0.0, TWO_PI))

    @classmethod
    def segment(cls, origin, direction, normal, length: float) -> "CurvilinearFrame":
        """Straight edge ``origin + s*direction`` for ``s`` in ``[0, length]``."""
        o = np.asarray(origin, dtype=float).reshape(2, 1)
        d = np.asarray(direction, dtype=float).reshape(2, 1)
        nv = np.asarray(normal, dtype=float).reshape(2, 1)

        def bcast(v):
            return lambda s: np.broadcast_to(v, (2,) + np.shape(s)).copy() if np.ndim(s) else v[:, 0].copy()

        def point(s):
            s = np.asarray(s, dtype=float)
            return o.reshape((2,) + (1,) * s.ndim) + d.reshape((2,) + (1,) * s.ndim) * s

        return cls(point, bcast(d), bcast(nv),
                   lambda s: np.zeros_like(np.asarray(s, dtype=float)),
                   lambda s: np.zeros_like(np.asarray(s, dtype=float)),
                   speed=1.0, closed=False, s_range=(0.0, float(length)))


def boundary_frame(domain: ReferenceDomain, segment: str) -> CurvilinearFrame:
    """Frame of a named boundary segment (``gamma`` is the interface circle)."""
    if isinstance(domain, Rectangle):
        L1, L2 = domain.L1, domain.L2
        table = {
            "right": ((L1, 0.0), (0.0, 1.0), (1.0, 0.0), L2),
            "left": ((0.0, 0.0), (0.0, 1.0), (-1.0, 0.0), L2),
            "bottom": ((0.0, 0.0), (1.0, 0.0), (0.0, -1.0), L1),
            "top": ((0.0, L2), (1.0, 0.0), (0.0, 1.0), L1),
        }
        if segment not in table:
            raise GeometryError(f"rectangle has no segment {segment!r}")
        return CurvilinearFrame.segment(*table[segment])
    if isinstance(domain, Annulus) and segment == "inner":
        return CurvilinearFrame.circle(domain.R_in, outward=-1)
    if isinstance(domain, (Disk, Annulus, DiskWithInterface)):
        return CurvilinearFrame.circle(segment_radius(domain, segment))
    raise GeometryError(f"no curvilinear frame for {domain.kind}")


def curvature(domain: ReferenceDomain, s, segment: str | None = None):
    """Signed curvature at boundary parameter ``s`` (see module docstring)."""
    s_arr = np.asarray(s, dtype=float)
    if isinstance(domain, Interval):
        return np.zeros_like(s_arr) if s_arr.ndim else 0.0
    if isinstance(domain, Rectangle):
        L1, L2 = domain.L1, domain.L2
        if segment is None:
            corners = np.array([0.0, L1, L1 + L2, 2 * L1 + L2, 2 * (L1 + L2)])
            perim = np.mod(s_arr, 2 * (L1 + L2))
            if np.any(np.min(np.abs(perim[..., None] - corners), axis=-1) < 1e-12):
                raise GeometryError("curvature is undefined at a rectangle corner")
        else:
            length = L2 if segment in ("left", "right") else L1
            if np.any((s_arr <= 1e-12) | (s_arr >= length - 1e-12)):
                raise GeometryError("curvature is undefined at a rectangle corner")
        return np.zeros_like(s_arr) if s_arr.ndim else 0.0
    if segment is None:
        segment = "gamma" if isinstance(domain, DiskWithInterface) else "outer"
    frame = boundary_frame(domain, segment)
    out = frame.kappa(s_arr)
    return out if s_arr.ndim else float(out)


def _check_injective(domain: ReferenceDomain, profile: BoundaryProfile, eps: float,
                     segment: str) -> None:
    if eps < 0:
        raise GeometryError("eps must be nonnegative")
    if isinstance(domain, (Interval, Rectangle)):
        return
    kap = abs(1.0 / segment_radius(domain, segment))
    if eps * profile.max_abs * kap >= 1.0:
        raise GeometryError(
            f"eps={eps} folds the layer: eps*max|h*kappa| = {eps * profile.max_abs * kap:.3g} >= 1")


def perturbed_point(domain: ReferenceDomain, profile: BoundaryProfile, eps: float, s,
                    segment: str | None = None):
    """Return ``x + eps*h(x)*n(x)`` for the boundary point ``x`` with parameter ``s``."""
    if isinstance(domain, Interval):
        seg = segment or ("left" if np.isclose(s, domain.a) else "right")
        _check_injective(domain, profile, eps, seg)
        if not (np.isclose(s, domain.a) or np.isclose(s, domain.b)):
            raise GeometryError("interval boundary parameter must be an endpoint")
        sign = -1.0 if seg == "left" else 1.0
        x = domain.a if seg == "left" else domain.b
        return x + sign * eps * float(profile.h(x))
    if isinstance(domain, Rectangle):
        _check_injective(domain, profile, eps, "right")
        y = np.asarray(s, dtype=float)
        if np.any((y < 0) | (y > domain.L2)):
            raise GeometryError("edge coordinate outside [0, L2]")
        return np.array([domain.L1 + eps * profile.h(y), y + 0.0 * eps])
    if segment is None:
        segment = "gamma" if isinstance(domain, DiskWithInterface) else "outer"
    _check_injective(domain, profile, eps, segment)
    frame = boundary_frame(domain, segment)
    return frame.point(s) + eps * profile.h(s) * frame.normal(s)


def layer_jacobian(frame: CurvilinearFrame, s, t):
    """``det(I + tW) = 1 + t*kappa(s)`` in two dimensions."""
    kap = frame.kappa(np.asarray(s, dtype=float))
    tk = np.asarray(t, dtype=float) * kap
    if np.any(np.abs(tk) >= 1.0):
        raise GeometryError("|t*kappa| >= 1: the normal coordinates fold")
    out = 1.0 + tk
    return float(out) if np.ndim(out) == 0 else out


def layer_integral(frame: CurvilinearFrame, profile: BoundaryProfile, eps: float,
                   func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
                   n_s: int = 1024, n_t: int = 8) -> float:
    """Integrate ``func(s, t)`` over the layer ``{x + t n(x): 0 <= t <= eps h}``.

    The area element is ``(1 + t kappa) * speed ds dt``.  Closed frames use the
    periodic trapezoid rule in ``s``; open frames use composite Simpson.  The
    normal variable uses ``n_t``-point Gauss-Legendre on ``[0, eps h(s)]``.
    """
    lo, hi = frame.s_range
    if frame.closed:
        s = lo + (hi - lo) * np.arange(n_s) / n_s
        ws = np.full(n_s, (hi - lo) / n_s)
    else:
        if n_s % 2:
            n_s += 1
        s = np.linspace(lo, hi, n_s + 1)
        ws = simpson_weights(n_s + 1, (hi - lo) / n_s)
    xg, wg = np.polynomial.legendre.leggauss(n_t)
    top = eps * profile.h(s)
    t = 0.5 * top[:, None] * (xg[None, :] + 1.0)
    wt = 0.5 * top[:, None] * wg[None, :]
    S = np.broadcast_to(s[:, None], t.shape)
    jac = layer_jacobian(frame, S, t)
    vals = np.ones_like(t) if func is None else func(S, t)
    return float(np.sum(ws[:, None] * wt * jac * vals) * frame.speed)


def simpson_weights(n: int, step: float) -> np.ndarray:
    """Composite Simpson weights on ``n`` equispaced nodes (``n`` odd).

    For an even ``n`` the last interval is handled by a 3/8 rule on the final
    four nodes so that the rule stays fourth order.
    """
    if n < 3:
        return np.full(n, step / 2.0) if n == 2 else np.zeros(n)
    w = np.zeros(n)
    m = n if n % 2 else n - 3
    w[:m:2] += 2.0
    w[1:m:2] += 4.0
    w[0] = 1.0
    w[m - 1] = 1.0
    w[:m] *= step / 3.0
    if m != n:
        w[m - 1] += 3.0 * step / 8.0
        w[m] += 9.0 * step / 8.0
        w[m + 1] += 9.0 * step / 8.0
        w[m + 2] += 3.0 * step / 8.0
    return w
