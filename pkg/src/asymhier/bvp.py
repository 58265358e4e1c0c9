"""Problem language: operator coefficients, right-hand sides, boundary conditions.

Every solver solves ``L u = f`` with the divergence-form operator

    L u = -div(a grad u) + b . grad u + c u.

Scalar isotropic coefficients ``a = sigma I`` are the working case; a
matrix-valued ``a`` is accepted for validation and for the transmission
normal-derivative transfer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from .errors import (CompatibilityMissing, CoverageError, DataError, EllipticityError,
                     GridError)
from .geometry import (Annulus, Disk, DiskWithInterface, Interval, Rectangle,
                       ReferenceDomain)

_FD_STEP = 1e-3


def _num_grad(fn, x, y):
    """Fourth-order centred-difference gradient (fallback when none is given)."""
    h = _FD_STEP
    gx = (-fn(x + 2 * h, y) + 8 * fn(x + h, y) - 8 * fn(x - h, y) + fn(x - 2 * h, y)) / (12 * h)
    gy = (-fn(x, y + 2 * h) + 8 * fn(x, y + h) - 8 * fn(x, y - h) + fn(x, y - 2 * h)) / (12 * h)
    return gx, gy


@dataclass(frozen=True)
class ScalarFunction:
    """A scalar function of ``(x, y)`` with its gradient.

    Use the constructors: :meth:`constant`, :meth:`radial` (a function of
    ``r = |x|``, which the polar solvers can exploit) or :meth:`function`.
    One-dimensional problems evaluate with ``y = 0``.
    """

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray, np.ndarray], tuple] | None = None
    const: float | None = None
    radial_fn: Callable[[np.ndarray], np.ndarray] | None = None
    radial_dfn: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "function"

    @classmethod
    def constant(cls, value: float) -> "ScalarFunction":
        v = float(value)
        return cls(lambda x, y: np.full(np.broadcast(x, y).shape, v),
                   lambda x, y: (np.zeros(np.broadcast(x, y).shape),) * 2,
                   const=v,
                   radial_fn=lambda r: np.full(np.shape(r), v),
                   radial_dfn=lambda r: np.zeros(np.shape(r)),
                   label=f"const({v!r})")

    @classmethod
    def radial(cls, fn, dfn, label: str = "radial") -> "ScalarFunction":
        def value(x, y):
            return fn(np.hypot(x, y))

        def grad(x, y):
            r = np.hypot(x, y)
            with np.errstate(invalid="ignore", divide="ignore"):
                d = np.where(r > 0, dfn(r) / np.where(r > 0, r, 1.0), 0.0)
            return d * x, d * y

        return cls(value, grad, radial_fn=fn, radial_dfn=dfn, label=label)

    @classmethod
    def function(cls, fn, grad=None, label: str = "function") -> "ScalarFunction":
        return cls(fn, grad, label=label)

    @classmethod
    def coerce(cls, value: Any) -> "ScalarFunction":
        if isinstance(value, ScalarFunction):
            return value
        if np.isscalar(value):
            return cls.constant(float(value))
        if callable(value):
            return cls.function(value)
        raise DataError(f"cannot interpret {type(value).__name__} as a scalar function")

    def __call__(self, x, y=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.asarray(self.fn(x, y), dtype=float) * np.ones(np.broadcast(x, y).shape)

    def grad(self, x, y=0.0) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.grad_fn is not None:
            gx, gy = self.grad_fn(x, y)
        else:
            gx, gy = _num_grad(self.fn, x, y)
        shape = np.broadcast(x, y).shape
        return np.asarray(gx, dtype=float) * np.ones(shape), np.asarray(gy, dtype=float) * np.ones(shape)

    def radial_values(self, r) -> np.ndarray:
        if self.radial_fn is None:
            raise DataError(f"{self.label} is not a radial function")
        return np.asarray(self.radial_fn(np.asarray(r, dtype=float)), dtype=float)

    def radial_derivative(self, r) -> np.ndarray:
        if self.radial_dfn is None:
            raise DataError(f"{self.label} is not a radial function")
        return np.asarray(self.radial_dfn(np.asarray(r, dtype=float)), dtype=float)

    @property
    def is_constant(self) -> bool:
        return self.const is not None

    @property
    def is_radial(self) -> bool:
        return self.radial_fn is not None


Coefficient = ScalarFunction


@dataclass(frozen=True)
class Piecewise:
    """Values on the two sides of an interface.

    ``minus`` lives in the enclosed or left part ``D-``; ``plus`` in ``D+``.
    For the thin-layer problems ``minus`` is the interior and ``plus`` the
    exterior coefficient.
    """

    minus: Any
    plus: Any
    interface: str = "gamma"

    def map(self, fn) -> "Piecewise":
        return Piecewise(fn(self.minus), fn(self.plus), self.interface)


@dataclass(frozen=True)
class EllipticOperator:
    """Coefficients of ``L u = -div(a grad u) + b . grad u + c u``.

    ``a`` is a positive scalar, a :class:`ScalarFunction`, a constant 2x2
    array, or a callable returning a ``(2, 2, ...)`` array.  With
    ``piecewise`` set, ``a`` is ignored and the scalar conductivities on the
    two sides of the interface are taken from it.
    """

    a: Any = 1.0
    b: Any = None
    c: Any = 0.0
    piecewise: Piecewise | None = None

    @property
    def is_scalar(self) -> bool:
        if self.piecewise is not None:
            return all(_is_scalar_coef(v) for v in (self.piecewise.minus, self.piecewise.plus))
        return _is_scalar_coef(self.a)

    @property
    def sigma(self) -> ScalarFunction:
        if self.piecewise is not None:
            raise DataError("piecewise operator: use sigma_minus / sigma_plus")
        if not _is_scalar_coef(self.a):
            raise DataError("operator has a matrix coefficient")
        return ScalarFunction.coerce(self.a)

    @property
    def sigma_minus(self) -> ScalarFunction:
        return ScalarFunction.coerce(self.piecewise.minus if self.piecewise else self.a)

    @property
    def sigma_plus(self) -> ScalarFunction:
        return ScalarFunction.coerce(self.piecewise.plus if self.piecewise else self.a)

    @property
    def c_fn(self) -> ScalarFunction:
        return ScalarFunction.coerce(self.c)

    @property
    def has_advection(self) -> bool:
        return self.b is not None

    def matrix(self, x, y) -> np.ndarray:
        """``a(x)`` as a ``(2, 2) + shape`` array (scalar coefficients become sigma I)."""
        return _as_matrix(self.a, x, y)


def _is_scalar_coef(a) -> bool:
    return np.isscalar(a) or isinstance(a, ScalarFunction)


def _as_matrix(a, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    if _is_scalar_coef(a):
        s = ScalarFunction.coerce(a)(x, y)
        eye = np.eye(2).reshape((2, 2) + (1,) * len(shape))
        return eye * s
    if callable(a):
        m = np.asarray(a(x, y), dtype=float)
    else:
        m = np.asarray(a, dtype=float)
        if m.shape != (2, 2):
            raise DataError("constant matrix coefficient must be 2x2")
        m = m.reshape((2, 2) + (1,) * len(shape))
    return np.broadcast_to(m, (2, 2) + shape)


# ---------------------------------------------------------------------------
# Boundary conditions
# ---------------------------------------------------------------------------

BC_KINDS = ("dirichlet", "neumann", "robin", "neumann_compat", "transmission")


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition ``alpha u + beta d_n u = g`` on one segment, plus bookkeeping.

    Data are scalars or arrays sampled on the segment grid.  ``compat_value``
    and ``weight`` carry the pin ``sum over segments of int(weight * u) =
    sum of compat_value`` of a pure Neumann problem.
    """

    segment: str
    kind: str
    g: Any = 0.0
    alpha: Any = 1.0
    beta: Any = 0.0
    compat_value: float | None = None
    weight: Any = 1.0
    value_jump: Any = 0.0
    flux_jump: Any = 0.0

    def __post_init__(self) -> None:
        if self.kind not in BC_KINDS:
            raise DataError(f"unknown boundary condition kind {self.kind!r}")

    @property
    def is_neumann_like(self) -> bool:
        return self.kind in ("neumann", "neumann_compat")


def Dirichlet(segment: str, g: Any = 0.0) -> BoundaryCondition:
    return BoundaryCondition(segment, "dirichlet", g=g, alpha=1.0, beta=0.0)


def Neumann(segment: str, g: Any = 0.0) -> BoundaryCondition:
    return BoundaryCondition(segment, "neumann", g=g, alpha=0.0, beta=1.0)


def Robin(segment: str, alpha: Any, beta: Any, g: Any = 0.0) -> BoundaryCondition:
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if np.all(a == 0) and np.all(b == 0):
        raise DataError(f"Robin condition on {segment!r} has alpha = beta = 0")
    return BoundaryCondition(segment, "robin", g=g, alpha=alpha, beta=beta)


def NeumannWithCompatibility(segment: str, g: Any, compat_value: float,
                             weight: Any = 1.0) -> BoundaryCondition:
    return BoundaryCondition(segment, "neumann_compat", g=g, alpha=0.0, beta=1.0,
                             compat_value=float(compat_value), weight=weight)


def TransmissionJump(value_jump: Any = 0.0, flux_jump: Any = 0.0,
                     segment: str = "gamma") -> BoundaryCondition:
    """Jumps ``[u] = u+ - u-`` and ``[sigma d_n u]`` across the interface."""
    return BoundaryCondition(segment, "transmission", value_jump=value_jump, flux_jump=flux_jump)


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BvpSpec:
    """One boundary value problem on a reference domain.

    ``rhs`` is a scalar, a :class:`ScalarFunction`, an array sampled on the
    solver grid, or a :class:`Piecewise` of those for interface problems.
    """

    domain: ReferenceDomain
    operator: EllipticOperator
    rhs: Any
    bcs: tuple[BoundaryCondition, ...]
    interface_conditions: BoundaryCondition | None = None
    validated: bool = field(default=False, compare=False)
    label: str = ""

    def bc(self, segment: str) -> BoundaryCondition:
        for b in self.bcs:
            if b.segment == segment:
                return b
        raise CoverageError(f"no boundary condition on segment {segment!r}")

    @property
    def is_pure_neumann(self) -> bool:
        return all(b.is_neumann_like for b in self.bcs)

    @property
    def has_pin(self) -> bool:
        return any(b.kind == "neumann_compat" for b in self.bcs)


def sample_points(domain: ReferenceDomain, n: int = 17) -> tuple[np.ndarray, np.ndarray]:
    """Coarse node set covering the closed domain, used for coefficient checks."""
    if isinstance(domain, Interval):
        return np.linspace(domain.a, domain.b, 2 * n + 1), np.zeros(2 * n + 1)
    if isinstance(domain, Rectangle):
        X, Y = np.meshgrid(np.linspace(0, domain.L1, n), np.linspace(0, domain.L2, n),
                           indexing="ij")
        return X.ravel(), Y.ravel()
    if isinstance(domain, Annulus):
        r = np.linspace(domain.R_in, domain.R_out, n)
    elif isinstance(domain, (Disk, DiskWithInterface)):
        r = np.linspace(0.0, domain.R, n)
    else:
        raise GridError(f"unknown domain {domain!r}")
    t = np.linspace(0, 2 * np.pi, 2 * n, endpoint=False)
    R, T = np.meshgrid(r, t, indexing="ij")
    return (R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()


def check_ellipticity(a: Any, x: np.ndarray, y: np.ndarray) -> None:
    m = _as_matrix(a, x, y)
    if not np.allclose(m[0, 1], m[1, 0], rtol=1e-12, atol=1e-14):
        raise EllipticityError("coefficient matrix is not symmetric")
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = np.sqrt(np.maximum((m[0, 0] - m[1, 1]) ** 2 + 4 * m[0, 1] ** 2, 0.0))
    lam_min = 0.5 * (tr - disc)
    if not np.all(np.isfinite(lam_min)) or np.any(lam_min <= 0) or np.any(det <= 0):
        raise EllipticityError(
            f"coefficient is not positive definite (smallest eigenvalue {np.min(lam_min):.3g})")


def validate(spec: BvpSpec) -> BvpSpec:
    """Check the invariants of ``spec`` and return it marked as validated."""
    x, y = sample_points(spec.domain)
    op = spec.operator
    if op.piecewise is not None:
        for side in (op.piecewise.minus, op.piecewise.plus):
            check_ellipticity(side, x, y)
        if spec.interface_conditions is None:
            raise CoverageError("piecewise operator needs interface conditions")
    else:
        check_ellipticity(op.a, x, y)
    cvals = ScalarFunction.coerce(op.c)(x, y)
    if np.any(cvals < 0):
        raise EllipticityError("zeroth-order coefficient c must be nonnegative")

    names = [b.segment for b in spec.bcs]
    for seg in spec.domain.segments:
        count = names.count(seg)
        if count != 1:
            raise CoverageError(f"segment {seg!r} has {count} boundary conditions, expected 1")
    extra = set(names) - set(spec.domain.segments)
    if extra:
        raise CoverageError(f"conditions on unknown segments: {sorted(extra)}")
    for b in spec.bcs:
        if b.kind == "transmission":
            raise CoverageError("transmission conditions belong in interface_conditions")
        if b.kind == "robin":
            if np.all(np.asarray(b.alpha) == 0) and np.all(np.asarray(b.beta) == 0):
                raise DataError(f"Robin condition on {b.segment!r} has alpha = beta = 0")
    if spec.interface_conditions is not None and spec.interface_conditions.kind != "transmission":
        raise DataError("interface_conditions must be a TransmissionJump")

    c_positive = np.all(cvals > 0)
    if spec.is_pure_neumann and not spec.has_pin and not c_positive:
        raise CompatibilityMissing(
            "pure Neumann problem without compat_value: the constant is undetermined")
    return spec if spec.validated else replace(spec, validated=True)


def _jsonable(v: Any) -> Any:
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, ScalarFunction):
        return {"function": v.label}
    if isinstance(v, Piecewise):
        return {"minus": _jsonable(v.minus), "plus": _jsonable(v.plus), "interface": v.interface}
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, dict):
        return {k: _jsonable(u) for k, u in v.items()}
    if callable(v):
        return {"callable": getattr(v, "__name__", "anonymous")}
    return v


def spec_to_json(spec: BvpSpec) -> str:
    """Debug serialization of a spec (arrays row-major, functions by label)."""
    dom = {"kind": spec.domain.kind, **{k: getattr(spec.domain, k)
                                        for k in spec.domain.__dataclass_fields__}}
    op = spec.operator
    payload = {
        "domain": dom,
        "operator": {"a": _jsonable(op.a), "b": _jsonable(op.b), "c": _jsonable(op.c),
                     "piecewise": _jsonable(op.piecewise)},
        "rhs": _jsonable(spec.rhs),
        "bcs": [{k: _jsonable(getattr(b, k)) for k in b.__dataclass_fields__} for b in spec.bcs],
        "interface_conditions": None if spec.interface_conditions is None else {
            k: _jsonable(getattr(spec.interface_conditions, k))
            for k in spec.interface_conditions.__dataclass_fields__},
        "label": spec.label,
    }
    return json.dumps(payload, sort_keys=True)


def as_array(value: Any, n: int | Sequence[int]) -> np.ndarray:
    """Broadcast scalar data to an array of shape ``n``."""
    shape = (n,) if np.isscalar(n) else tuple(n)
    arr = np.asarray(value, dtype=float)
    try:
        return np.broadcast_to(arr, shape).astype(float)
    except ValueError as exc:
        raise GridError(f"data of shape {arr.shape} does not fit grid shape {shape}") from exc
