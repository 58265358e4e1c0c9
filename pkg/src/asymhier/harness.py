"""Convergence studies: references on perturbed domains, error norms and fitted rates.

A *family* fixes a problem, the expansions to test and a reference solution.
:func:`run_convergence` builds the expansion terms once (they do not depend
on ``eps``), evaluates every sweep point against its reference and fits
``log error = rate log eps + const`` by least squares.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .bvp import EllipticOperator, ScalarFunction
from .errors import ConfigError, DataError, FlooredError, GridError, UnsupportedError
from .fields import GridField, IntervalGrid, PiecewiseField, PolarGrid, RectGrid
from .geometry import BoundaryProfile, Disk, DiskWithInterface, Interval, Rectangle
from .hierarchy import SmoothProblem, closed_problem, compute_neumann_terms, compute_terms, \
    newton_leading, nonlinear_hierarchy
from .interface import (InterfaceConfig, case_i_cascade, case_ii_cascade, eps_hierarchy,
                        layer_nodes, u_minus_direct)
from .references import (coated_disk_reference, disk_reference, interface_1d_exact,
                         interface_radial_exact, radial_disk_exact, rect_reference, smooth_1d_exact)
from .solvers import solve
from .transmission import TransmissionProblem, compute_interior_terms, robin_closed
from .two_param import ContrastRegime, compute_two_param_terms, example4_problem, exact_1d

NORMS = ("Linf", "L2", "H1")
DEFAULT_EPS = (0.16, 0.08, 0.04, 0.02)
ERROR_FLOOR = 1e-13
RATE_WINDOW = 0.2
RESIDUAL_TOL = 0.1


# ---------------------------------------------------------------------------
# Norms and rates
# ---------------------------------------------------------------------------


def _pieces(field_, reference, mask):
    if isinstance(field_, PiecewiseField):
        if not isinstance(reference, PiecewiseField):
            raise GridError("a piecewise field needs a piecewise reference")
        masks = mask if mask is not None else (None, None)
        return [(field_.minus, reference.minus, masks[0]), (field_.plus, reference.plus, masks[1])]
    if isinstance(reference, PiecewiseField):
        raise GridError("a piecewise reference needs a piecewise field")
    return [(field_, reference, mask)]


def _same_grid(a, b) -> bool:
    return type(a) is type(b) and a == b


def _h1_squares(grid, e: np.ndarray, keep: np.ndarray) -> float:
    """Sum of squared difference quotients over cells whose nodes are all kept."""
    if isinstance(grid, IntervalGrid):
        d = np.diff(e) / grid.step
        ok = keep[1:] & keep[:-1]
        return float(np.sum(d[ok] ** 2) * grid.step)
    if isinstance(grid, RectGrid):
        dx = np.diff(e, axis=0) / grid.dx
        dy = np.diff(e, axis=1) / grid.dy
        okx = keep[1:, :] & keep[:-1, :]
        oky = keep[:, 1:] & keep[:, :-1]
        return float(np.sum(dx[okx] ** 2) * grid.dx * grid.dy + np.sum(dy[oky] ** 2) * grid.dx * grid.dy)
    if isinstance(grid, PolarGrid):
        r, dr, dth = grid.r, grid.step, 2 * np.pi / grid.M
        rh = 0.5 * (r[1:] + r[:-1])
        der = np.diff(e, axis=0) / dr
        okr = keep[1:, :] & keep[:-1, :]
        total = np.sum((der**2 * rh[:, None] * dr * dth)[okr])
        det = (np.roll(e, -1, axis=1) - e) / dth
        okt = keep & np.roll(keep, -1, axis=1) & (r[:, None] > 0)
        rs = np.where(r > 0, r, 1.0)[:, None]
        wt = grid.radial_weights()[:, None] * dth
        total += np.sum((det**2 / rs**2 * wt)[okt])
        return float(total)
    raise GridError(f"unknown grid {grid!r}")


def error_norm(field_, reference, norm: str = "Linf", mask=None) -> float:
    """Discrete ``Linf``, ``L2`` or ``H1`` (semi-norm) size of ``field - reference``.

    Both must live on the same grid.  ``mask`` marks nodes to leave out (for
    piecewise fields a pair of masks, one per side).  The ``L2`` norm uses the
    grid quadrature weights; ``H1`` sums squared difference quotients.
    """
    if norm not in NORMS:
        raise DataError(f"unknown norm {norm!r}; choose from {NORMS}")
    pieces = _pieces(field_, reference, mask)
    best, total = 0.0, 0.0
    for u, ref, m in pieces:
        if not _same_grid(u.grid, ref.grid):
            raise GridError("field and reference live on different grids")
        e = np.asarray(u.values, dtype=float) - np.asarray(ref.values, dtype=float)
        keep = np.ones(e.shape, bool) if m is None else ~np.asarray(m, bool)
        if norm == "Linf":
            if np.any(keep):
                best = max(best, float(np.max(np.abs(e[keep]))))
        elif norm == "L2":
            total += float(np.sum((u.grid.weights() * e**2)[keep]))
        else:
            total += _h1_squares(u.grid, e, keep)
    return best if norm == "Linf" else float(np.sqrt(total))


def estimate_rate(eps: Sequence[float], errors: Sequence[float],
                  floor: float = ERROR_FLOOR) -> tuple[float, float]:
    """Least-squares slope of ``log error`` against ``log eps`` and the fit residual.

    The residual is the root-mean-square of the log residuals.  Points at or
    below ``floor`` are dropped; if fewer than three remain and all are at
    the floor, FlooredError is raised.
    """
    e = np.asarray(eps, dtype=float)
    err = np.asarray(errors, dtype=float)
    if e.shape != err.shape or e.size < 3:
        raise DataError("estimate_rate needs at least three (eps, error) pairs")
    if np.any(e <= 0) or np.any(err < 0) or not np.all(np.isfinite(err)):
        raise DataError("eps must be positive and errors finite and non-negative")
    floor = max(ERROR_FLOOR, float(floor))
    above = err > floor
    if not np.any(above):
        raise FlooredError("all errors are at the floor (exact to resolution)")
    if above.sum() < 3:
        raise FlooredError(f"only {int(above.sum())} errors above the floor {floor:g}")
    x, y = np.log(e[above]), np.log(err[above])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass
class Comparison:
    """One expansion evaluated at one sweep point, with its reference and mask."""

    quantity: str
    approx: Any
    reference: Any
    mask: Any = None


@dataclass(frozen=True)
class Family:
    """A problem family: defaults, expected orders and the three hooks.

    ``prepare(params)`` builds the eps-independent state, ``compare(state,
    eps, p)`` returns the comparisons at a sweep point and ``reference(state,
    eps, p)`` the reference field alone.  ``expected`` maps quantities to
    their predicted order (``"exact"`` when the error must sit at the floor).
    ``scalars(state)`` adds named numbers to the report.
    """

    name: str
    requires: str
    defaults: dict
    prepare: Callable
    compare: Callable
    reference: Callable
    expected: Callable
    floor: float = ERROR_FLOOR
    uses_p: bool = False
    scalars: Callable | None = None
    default_eps: tuple = DEFAULT_EPS


def _gf(grid, values) -> GridField:
    return GridField(grid, np.asarray(values, dtype=float))


def _profile(kind: str, amplitude: float = 0.3, on_interval: bool = False) -> BoundaryProfile:
    if kind == "const":
        return BoundaryProfile.const(1.0)
    if kind == "cos2":
        return BoundaryProfile(kind="cos_k", params=(1.0, amplitude, 2.0), sign_class="strictly_positive")
    if kind == "cos_pi":
        return BoundaryProfile(kind="cos_k", params=(1.0, amplitude, np.pi),
                               sign_class="strictly_positive", s_range=(0.0, 1.0))
    raise ConfigError(f"unknown profile {kind!r}")


# -- smooth_1d ---------------------------------------------------------------


def _smooth_1d_problem() -> SmoothProblem:
    return SmoothProblem(Interval(0.0, 1.0), EllipticOperator(), -2.0,
                         BoundaryProfile.endpoints(0.0, 1.0), label="smooth_1d")


def _smooth_1d_prepare(p):
    grid = IntervalGrid(0.0, 1.0, int(p["n"]))
    prob = _smooth_1d_problem()
    return {"grid": grid, "problem": prob, "series": compute_terms(prob, int(p["order"]), grid)}


def _smooth_1d_reference(s, eps, _p=None):
    return _gf(s["grid"], smooth_1d_exact(eps, s["grid"].x))


def _smooth_1d_compare(s, eps, _p=None):
    ref = _smooth_1d_reference(s, eps)
    out = [Comparison(f"v[{n}]", s["series"].partial_sum(n, eps), ref) for n in range(len(s["series"]))]
    for n in (1, 2):
        out.append(Comparison(f"u[{n}]", solve(closed_problem(n, s["problem"], eps, s["grid"]), s["grid"]), ref))
    return out


def _smooth_1d_expected(p):
    out = {"v[0]": 1}
    out.update({f"v[{n}]": "exact" for n in range(1, int(p["order"]) + 1)})
    out.update({"u[1]": 2, "u[2]": "exact"})
    return out


# -- smooth_disk ---------------------------------------------------------------


_DISK_SIGMA = ScalarFunction.radial(lambda r: 1.0 + r * r / 4.0, lambda r: r / 2.0, "1 + r^2/4")


def _disk_grid_defaults(p):
    const = p["profile"] == "const"
    nr = int(p["nr"]) if p.get("nr") else (1025 if const else 257)
    M = int(p["M"]) if p.get("M") else (8 if const else 32)
    return nr, M


def _smooth_disk_prepare(p):
    nr, M = _disk_grid_defaults(p)
    grid = PolarGrid(0.0, 1.0, nr, M)
    prof = _profile(p["profile"], float(p["amplitude"]))
    prob = SmoothProblem(Disk(1.0), EllipticOperator(a=_DISK_SIGMA), 4.0, prof,
                         method=p["method"], label="smooth_disk")
    return {"grid": grid, "profile": prof, "params": p,
            "series": compute_terms(prob, int(p["order"]), grid)}


def _smooth_disk_reference(s, eps, _p=None):
    g = s["grid"]
    if s["params"]["profile"] == "const":
        vals = radial_disk_exact(eps, 1.0, g.r)[:, None] * np.ones(g.M)[None, :]
    else:
        ref = disk_reference(_DISK_SIGMA, 0.0, 4.0, 0.0, 1.0, s["profile"], eps,
                             int(s["params"]["ref_N"]), int(s["params"]["ref_M"]))
        vals = ref.evaluate_polar(g.r, g.theta)
    return _gf(g, vals)


def _series_compare(s, eps, ref):
    return [Comparison(f"v[{n}]", s["series"].partial_sum(n, eps), ref) for n in range(len(s["series"]))]


def _smooth_disk_compare(s, eps, _p=None):
    return _series_compare(s, eps, _smooth_disk_reference(s, eps))


def _vn_expected(p):
    return {f"v[{n}]": n + 1 for n in range(int(p["order"]) + 1)}


# -- smooth_rect / neumann_rect --------------------------------------------------


_RECT_F = ScalarFunction.function(lambda x, y: (1 + x) * np.sin(np.pi * y),
                                  lambda x, y: (np.sin(np.pi * y), np.pi * (1 + x) * np.cos(np.pi * y)),
                                  "(1 + x) sin(pi y)")


def _rect_prepare(p, neumann: bool):
    n = int(p["n"])
    grid = RectGrid(1.0, 1.0, n, n)
    prof = _profile("cos_pi", float(p["amplitude"]))
    prob = SmoothProblem(Rectangle(1.0, 1.0), EllipticOperator(c=1.0), _RECT_F, prof,
                         method=p["method"], label="neumann_rect" if neumann else "smooth_rect")
    N = int(p["order"])
    series = compute_neumann_terms(prob, N, grid) if neumann else compute_terms(prob, N, grid)
    return {"grid": grid, "profile": prof, "params": p, "series": series,
            "right": "neumann" if neumann else "dirichlet"}


def _rect_reference(s, eps, _p=None):
    g, p = s["grid"], s["params"]
    ref = rect_reference(1.0, 1.0, _RECT_F, 0.0, 1.0, 1.0, s["profile"], eps,
                         int(p["ref_N"]), int(p["ref_N"]), right=s["right"])
    return _gf(g, ref.evaluate(g.x, g.y))


def _rect_compare(s, eps, _p=None):
    return _series_compare(s, eps, _rect_reference(s, eps))


# -- nonlinear_1d --------------------------------------------------------------


def _nonlinear_prepare(p):
    grid = IntervalGrid(0.0, 1.0, int(p["n"]))
    prof = BoundaryProfile.endpoints(float(p["h0"]), float(p["h1"]))
    f = float(p["f"])
    series = nonlinear_hierarchy(f, Interval(0.0, 1.0), prof, int(p["order"]), grid)
    return {"grid": grid, "profile": prof, "params": p, "series": series}


def _nonlinear_reference(s, eps, _p=None):
    p, g = s["params"], s["grid"]
    a, b = -eps * float(p["h0"]), 1.0 + eps * float(p["h1"])
    fine = IntervalGrid(a, b, int(p["ref_n"]))
    u, _ = newton_leading(float(p["f"]), Interval(a, b), fine)
    return _gf(g, CubicSpline(fine.x, u.values)(g.x))


def _nonlinear_compare(s, eps, _p=None):
    return _series_compare(s, eps, _nonlinear_reference(s, eps))


# -- thin_layer_scalar ------------------------------------------------------------


def _thin_prepare(p):
    nr, M = int(p["nr"]), int(p["M"])
    grid = PolarGrid(0.0, 1.0, nr, M)
    prof = _profile(p["profile"], float(p["amplitude"]))
    si, se = float(p["sigma_int"]), float(p["sigma_ext"])
    f = float(p["f"])
    prob = TransmissionProblem(Disk(1.0), si, se, f, f, prof, method=p["method"], label="thin_layer")
    return {"grid": grid, "profile": prof, "params": p, "problem": prob,
            "series": compute_interior_terms(prob, int(p["order"]), grid)}


def _thin_reference(s, eps, _p=None):
    p, g = s["params"], s["grid"]
    f = float(p["f"])
    ref = coated_disk_reference(float(p["sigma_int"]), float(p["sigma_ext"]), f, f, 1.0, s["profile"],
                                eps, int(p["ref_N"]), int(p["ref_M"]), int(p["ref_Nl"]))
    return _gf(g, ref.evaluate_polar(g.r, g.theta))


def _thin_compare(s, eps, _p=None):
    ref = _thin_reference(s, eps)
    out = _series_compare(s, eps, ref)
    for n in (1, 2):
        out.append(Comparison(f"u[{n}]", solve(robin_closed(n, s["problem"], eps, s["grid"]), s["grid"]), ref))
    return out


def _thin_expected(p):
    out = _vn_expected(p)
    out.update({"u[1]": 2, "u[2]": 3})
    return out


# -- two_param_* ---------------------------------------------------------------------


def _two_param_regime(tag: str, p) -> ContrastRegime:
    if tag == "CaseIII":
        if p.get("c") in (None, ""):
            raise ConfigError("two_param_case_iii requires c > 0")
        return ContrastRegime(tag, c=float(p["c"]))
    if p.get("c") not in (None, ""):
        raise ConfigError("c is only used by two_param_case_iii")
    return ContrastRegime(tag)


def _two_param_prepare_for(tag):
    def prepare(p):
        regime = _two_param_regime(tag, p)
        h0, h1 = float(p["h0"]), float(p["h1"])
        grid = IntervalGrid(0.0, 1.0, int(p["n"]))
        series = compute_two_param_terms(example4_problem(h0, h1), regime, grid, total=int(p["order"]))
        return {"grid": grid, "regime": regime, "params": p, "series": series}
    return prepare


def _two_param_reference(s, eps, pv):
    p = s["params"]
    sigma = s["regime"].sigma_of(eps, pv)
    sol = exact_1d(eps, sigma, float(p["h0"]), float(p["h1"]))
    return _gf(s["grid"], sol.u_int(s["grid"].x))


def _two_param_compare(s, eps, pv):
    ref = _two_param_reference(s, eps, pv)
    return [Comparison(f"S[{K}]", s["series"].partial_sum(eps, pv, total=K), ref)
            for K in range(int(s["params"]["order"]) + 1)]


def _two_param_expected(p):
    return {f"S[{K}]": None for K in range(int(p["order"]) + 1)}


# -- interface_* ------------------------------------------------------------------------


def _interface_config(p, regime: str, sigma_minus: float | None = None) -> InterfaceConfig:
    f = float(p["f"])
    g0, g2 = float(p["g"]), float(p.get("g2") or 0.0)
    h = float(p["h"])
    if p["geometry"] == "1d":
        if g2:
            raise ConfigError("g2 (the angular mode) needs the radial geometry")
        dom = Interval(0.0, 1.0, float(p["gamma"]))
        g = g0
    elif p["geometry"] == "radial":
        dom = DiskWithInterface(float(p["gamma"]), 1.0)
        g = ScalarFunction.function(lambda x, y: g0 + g2 * (x * x - y * y) / np.maximum(x * x + y * y, 1e-300),
                                    label="g + g2 cos 2 theta")
    else:
        raise ConfigError(f"unknown interface geometry {p['geometry']!r}")
    sm = float(p["sigma_minus"]) if sigma_minus is None else sigma_minus
    return InterfaceConfig(dom, sm, float(p.get("sigma_plus") or 1.0), f, g,
                           BoundaryProfile.const(h) if h != 0 else BoundaryProfile.const(0.0),
                           regime, p.get("method") or None)


def _interface_grid(p):
    if p["geometry"] == "1d":
        return IntervalGrid(0.0, 1.0, int(p["n"]))
    return PolarGrid(0.0, 1.0, int(p["nr"]), int(p["M"]))


def _interface_exact(s, eps, sigma_minus, sigma_plus):
    p, cfg = s["params"], s["config"]
    gam, h = cfg.gamma, float(p["h"])
    f, g0, g2 = float(p["f"]), float(p["g"]), float(p.get("g2") or 0.0)
    sides = []
    for side in (s["template"].minus, s["template"].plus):
        gr = side.grid
        if isinstance(gr, IntervalGrid):
            v = interface_1d_exact(gam + eps * h, sigma_minus, sigma_plus, f, gr.x, 0.0, 1.0, g0, g0)
        else:
            v = interface_radial_exact(gam + eps * h, sigma_minus, sigma_plus, f, g0, gr.r, 1.0, g2, gr.theta)
        sides.append(_gf(gr, v))
    return PiecewiseField(sides[0], sides[1], "reference")


def _interface_eps_prepare(p):
    cfg = _interface_config(p, "EpsOnly")
    grid = _interface_grid(p)
    series = eps_hierarchy(cfg, 1, grid)
    return {"grid": grid, "config": cfg, "params": p, "series": series, "template": series.terms[0]}


def _interface_eps_reference(s, eps, _p=None):
    cfg = s["config"]
    return _interface_exact(s, eps, cfg.sigma_minus, cfg.sigma_plus)


def _interface_eps_compare(s, eps, _p=None):
    ref = _interface_eps_reference(s, eps)
    out = []
    for n in range(len(s["series"])):
        u = s["series"].partial_sum(n, eps)
        out.append(Comparison(f"v[{n}]", u, ref, layer_nodes(s["config"], eps, u)))
    return out


def _interface_eps_expected(_p):
    # u_0 alone is reported without a window: in 1D its O(eps) and O(eps^2)
    # errors nearly cancel over the default sweep for sigma- = 2.
    return {"v[0]": None, "v[1]": 2}


def _cascade_prepare_for(regime):
    def prepare(p):
        cfg = _interface_config(p, regime)
        grid = _interface_grid(p)
        series = case_i_cascade(cfg, grid) if regime == "CaseI" else case_ii_cascade(cfg, grid)
        state = {"grid": grid, "config": cfg, "params": p, "series": series,
                 "template": series[(0, 0)]}
        return state
    return prepare


def _cascade_sigma(s, pv):
    return 1.0 / pv if s["config"].regime == "CaseI" else pv


def _cascade_reference(s, eps, pv):
    return _interface_exact(s, eps, _cascade_sigma(s, pv), 1.0)


def _cascade_compare(s, eps, pv):
    ref = _cascade_reference(s, eps, pv)
    u = s["series"].partial_sum(eps, pv)
    return [Comparison("S", u, ref, layer_nodes(s["config"], eps, u))]


def _cascade_expected(_p):
    return {"S": 2}


def _case_i_scalars(s):
    cfg, p = s["config"], s["params"]
    out: dict = {}
    if cfg.enclosed:
        nc = s["series"].info["C0"]
        out["C0"] = nc.C0
        out["C0_fluxes"] = {"int_f": nc.int_f, "phi1": nc.flux_phi1, "phi2": nc.flux_phi2,
                            "phi3": nc.flux_phi3}
        sig = [float(v) for v in _as_list(p.get("sigma_direct"))]
        if sig:
            dev = [abs(u_minus_direct(cfg, sv, s["grid"]) - nc.C0) for sv in sig]
            out["u_minus_direct"] = {"sigma": sig, "abs_diff": dev}
            if len(sig) >= 2 and all(d > 0 for d in dev):
                slope = np.polyfit(np.log(sig), np.log(dev), 1)[0]
                out["u_minus_direct"]["slope"] = float(slope)
    return out


# -- registry --------------------------------------------------------------------------------


_SMOOTH_1D = dict(n=65, order=2)
_DISK = dict(profile="cos2", amplitude=0.3, order=2, nr=None, M=None, method="spectral", ref_N=41, ref_M=48)
_RECT = dict(n=129, order=2, amplitude=0.3, method="fd4", ref_N=32)
_NONLIN = dict(n=257, order=2, f=1.0, h0=0.5, h1=1.0, ref_n=8193)
_THIN = dict(nr=257, M=32, order=2, profile="cos2", amplitude=0.3, sigma_int=2.0, sigma_ext=1.0,
             f=4.0, method="spectral", ref_N=41, ref_M=48, ref_Nl=12)
_TWO = dict(n=2048, order=2, h0=0.5, h1=1.0, c=None, p=None, p_scale=1.0)
_IFACE = dict(geometry="radial", gamma=0.5, sigma_minus=2.0, sigma_plus=1.0, f=4.0, g=0.0, g2=0.5,
              h=1.0, n=1025, nr=513, M=16, method="spectral")
_CASCADE_I = dict(_IFACE, sigma_minus=1.0, g2=0.0, p=1e-3, p_scale=None, sigma_direct=[1e2, 1e3, 1e4])
_CASCADE_II = dict(_IFACE, sigma_minus=1.0, g2=0.0, p=1e-3, p_scale=None)

FAMILIES: dict[str, Family] = {
    "smooth_1d": Family("smooth_1d", "none (u'' = 2 on (0, 1 + eps))", _SMOOTH_1D,
                        _smooth_1d_prepare, _smooth_1d_compare, _smooth_1d_reference,
                        _smooth_1d_expected, floor=1e-11),
    "smooth_disk": Family("smooth_disk", "profile in {const, cos2}", _DISK, _smooth_disk_prepare,
                          _smooth_disk_compare, _smooth_disk_reference, _vn_expected),
    "smooth_rect": Family("smooth_rect", "none (right edge moved by 1 + 0.3 cos(pi y))", _RECT,
                          lambda p: _rect_prepare(p, False), _rect_compare, _rect_reference, _vn_expected),
    "neumann_rect": Family("neumann_rect", "none (Neumann on the moved right edge)", _RECT,
                           lambda p: _rect_prepare(p, True), _rect_compare, _rect_reference, _vn_expected),
    "nonlinear_1d": Family("nonlinear_1d", "f constant, h0 >= 0, h1 >= 0", _NONLIN, _nonlinear_prepare,
                           _nonlinear_compare, _nonlinear_reference, _vn_expected, floor=1e-9),
    "thin_layer_scalar": Family("thin_layer_scalar", "sigma_int > 0, sigma_ext > 0, h > 0", _THIN,
                                _thin_prepare, _thin_compare, _thin_reference, _thin_expected,
                                default_eps=(0.04, 0.02, 0.01, 0.005)),
    "two_param_case_i": Family("two_param_case_i", "h0 >= 0, h1 >= 0", _TWO,
                               _two_param_prepare_for("CaseI"), _two_param_compare,
                               _two_param_reference, _two_param_expected, floor=1e-10, uses_p=True),
    "two_param_case_ii1": Family("two_param_case_ii1", "h0 = 0 or h1 = 0", dict(_TWO, h0=0.0),
                                 _two_param_prepare_for("CaseII1"), _two_param_compare,
                                 _two_param_reference, _two_param_expected, floor=1e-10, uses_p=True),
    "two_param_case_ii2": Family("two_param_case_ii2", "h strictly positive (h0 > 0, h1 > 0)", _TWO,
                                 _two_param_prepare_for("CaseII2"), _two_param_compare,
                                 _two_param_reference, _two_param_expected, floor=1e-10, uses_p=True),
    "two_param_case_iii": Family("two_param_case_iii", "requires c > 0", dict(_TWO, c=1.0),
                                 _two_param_prepare_for("CaseIII"), _two_param_compare,
                                 _two_param_reference, _two_param_expected, floor=1e-10, uses_p=True),
    "interface_eps": Family("interface_eps", "geometry in {1d, radial}, sigma+- > 0, h constant",
                            _IFACE, _interface_eps_prepare, _interface_eps_compare,
                            _interface_eps_reference, _interface_eps_expected),
    "interface_case_i": Family("interface_case_i", "mu = 1/sigma- small (p), h constant",
                               _CASCADE_I, _cascade_prepare_for("CaseI"), _cascade_compare,
                               _cascade_reference, _cascade_expected, uses_p=True,
                               scalars=_case_i_scalars),
    "interface_case_ii": Family("interface_case_ii", "sigma- small (p), h constant", _CASCADE_II,
                                _cascade_prepare_for("CaseII"), _cascade_compare,
                                _cascade_reference, _cascade_expected, uses_p=True),
}


def family_names() -> list[str]:
    return sorted(FAMILIES)


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise UnsupportedError(f"unknown problem family {name!r}") from None


def _as_list(v) -> list:
    if v is None or v == "":
        return []
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


def resolve_params(family: Family, params: dict | None) -> dict:
    """Family defaults overridden by ``params``; unknown keys are rejected."""
    out = dict(family.defaults)
    for k, v in (params or {}).items():
        if k not in out:
            raise ConfigError(f"family {family.name} has no parameter {k!r}")
        out[k] = v
    return out


def reference_solution(family: str, eps: float, params: dict | None = None, p: float | None = None,
                       state: dict | None = None):
    """Reference field of ``family`` at ``eps`` on the family's comparison grid."""
    fam = get_family(family)
    if eps < 0:
        raise DataError("eps must be non-negative")
    if state is None:
        state = fam.prepare(resolve_params(fam, params))
    return fam.reference(state, eps, p)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class RateFit:
    rate: float | None
    residual: float | None
    status: str              # "ok", "unresolved" or "exact"
    expected: Any = None
    within_window: bool | None = None


@dataclass
class ConvergenceReport:
    """Errors per sweep point, quantity and norm, with fitted rates.

    ``errors[quantity][norm]`` is a list aligned with ``sweep``; ``floor``
    flags mark errors at or below the family floor.
    """

    experiment: str
    family: str
    params: dict
    sweep: list
    norms: list
    errors: dict
    floor_flags: dict
    rates: dict
    grid: dict
    timings: dict
    scalars: dict = field(default_factory=dict)
    floor: float = ERROR_FLOOR

    def rows(self) -> list[tuple]:
        out = []
        for q in self.errors:
            for norm in self.norms:
                for (eps, p), err, fl in zip(self.sweep, self.errors[q][norm], self.floor_flags[q][norm]):
                    out.append((q, eps, "" if p is None else p, norm, err, int(fl)))
        for q, block in self.scalars.items():
            if isinstance(block, dict) and "sigma" in block and "abs_diff" in block:
                for sv, d in zip(block["sigma"], block["abs_diff"]):
                    out.append((q, 0.0, sv, "abs", d, int(d <= self.floor)))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["quantity", "eps", "sigma", "norm", "error", "floor_flag"])
            for q, eps, p, norm, err, fl in self.rows():
                w.writerow([q, repr(float(eps)), "" if p == "" else repr(float(p)), norm,
                            repr(float(err)), fl])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rates"] = {q: {n: asdict(r) for n, r in v.items()} for q, v in self.rates.items()}
        return d

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=_json_default)

    def failures(self) -> list[str]:
        """Quantities whose Linf rate misses the expected order."""
        bad = []
        for q, per in self.rates.items():
            r = per.get("Linf")
            if r is not None and r.within_window is False:
                bad.append(q)
        return bad


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _fit(eps_values, errs, floor, expected) -> RateFit:
    if len(errs) < 3:
        return RateFit(None, None, "unresolved", expected, None)
    try:
        rate, res = estimate_rate(eps_values, errs, floor)
    except FlooredError:
        if all(e <= floor for e in errs):
            return RateFit(None, None, "exact", expected,
                           None if expected is None else expected == "exact")
        return RateFit(None, None, "unresolved", expected, None)
    status = "ok" if res <= RESIDUAL_TOL else "unresolved"
    within = None
    if isinstance(expected, (int, float)) and not isinstance(expected, bool):
        within = status == "ok" and abs(rate - expected) <= RATE_WINDOW
    elif expected == "exact":
        within = False
    return RateFit(rate, res, status, expected, within)


@dataclass
class ExperimentConfig:
    """What :func:`run_convergence` needs: the family, its parameters and the sweep."""

    name: str
    family: str
    params: dict = field(default_factory=dict)
    eps: tuple | None = None
    sigma: tuple | None = None
    norms: tuple = ("Linf",)
    out: str | None = None


def _sweep_points(fam: Family, cfg: ExperimentConfig, params: dict) -> list:
    eps = [float(e) for e in (cfg.eps if cfg.eps else fam.default_eps)]
    if any(e <= 0 for e in eps):
        raise ConfigError("sweep values of eps must be positive")
    if not fam.uses_p:
        if cfg.sigma:
            raise ConfigError(f"family {fam.name} takes no second parameter")
        return [(e, None) for e in eps]
    if cfg.sigma:
        ps = [float(v) for v in cfg.sigma]
        if len(ps) == 1:
            ps = ps * len(eps)
        if len(ps) != len(eps):
            raise ConfigError("the sigma sweep must have one value or one per eps")
        return list(zip(eps, ps))
    if params.get("p") not in (None, ""):
        return [(e, float(params["p"])) for e in eps]
    scale = float(params.get("p_scale") or 1.0)
    return [(e, scale * e) for e in eps]


def run_convergence(config: ExperimentConfig, workers: int = 1) -> ConvergenceReport:
    """Build the terms once, compare at every sweep point and fit rates."""
    fam = get_family(config.family)
    for n in config.norms:
        if n not in NORMS:
            raise ConfigError(f"unknown norm {n!r}; choose from {NORMS}")
    params = resolve_params(fam, config.params)
    sweep = _sweep_points(fam, config, params)
    t0 = time.perf_counter()
    state = fam.prepare(params)
    t_terms = time.perf_counter() - t0

    def point(ep):
        eps, pv = ep
        t = time.perf_counter()
        comps = fam.compare(state, eps, pv)
        vals = {c.quantity: {n: error_norm(c.approx, c.reference, n, c.mask) for n in config.norms}
                for c in comps}
        return vals, time.perf_counter() - t

    if workers > 1 and len(sweep) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(point, sweep))
    else:
        results = [point(ep) for ep in sweep]

    quantities = list(results[0][0])
    errors = {q: {n: [r[0][q][n] for r in results] for n in config.norms} for q in quantities}
    floors = {q: {n: [e <= fam.floor for e in errors[q][n]] for n in config.norms} for q in quantities}
    expected = fam.expected(params)
    eps_values = [e for e, _ in sweep]
    rates = {q: {n: _fit(eps_values, errors[q][n], fam.floor, expected.get(q)) for n in config.norms}
             for q in quantities}
    scalars = fam.scalars(state) if fam.scalars else {}
    grid = state["grid"]
    return ConvergenceReport(config.name, fam.name, _plain(params), [list(x) for x in sweep],
                             list(config.norms), errors, floors, rates, _grid_info(grid),
                             {"terms": t_terms, "points": [r[1] for r in results]}, scalars, fam.floor)


def _plain(params: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()}


def _grid_info(grid) -> dict:
    if isinstance(grid, IntervalGrid):
        return {"kind": "interval", "a": grid.a, "b": grid.b, "n": grid.n}
    if isinstance(grid, PolarGrid):
        return {"kind": "polar", "r0": grid.r0, "r1": grid.r1, "nr": grid.nr, "M": grid.M}
    if isinstance(grid, RectGrid):
        return {"kind": "rectangle", "L1": grid.L1, "L2": grid.L2, "nx": grid.nx, "ny": grid.ny}
    return {"kind": type(grid).__name__}
