"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import time

import numpy as np
import pytest

from asymhier.bvp import EllipticOperator
from asymhier.fields import IntervalGrid, PolarGrid
from asymhier.geometry import BoundaryProfile, CurvilinearFrame, Disk, DiskWithInterface, layer_integral
from asymhier.harness import ExperimentConfig, get_family, reference_solution, run_convergence
from asymhier.hierarchy import SmoothProblem, closed_problem, multinomial_rhs, smooth_dirichlet_bc
from asymhier.ilw import ReducerContext, reduce
from asymhier.interface import InterfaceConfig, neumann_constant, u_minus_direct
from asymhier.solvers import solve
from asymhier.transmission import TransmissionContext, TransmissionProblem, interior_bc, robin_closed
from asymhier.two_param import (
    ContrastRegime,
    coefficient_oracle,
    compute_two_param_terms,
    example4_problem,
    index_set,
)

DEFAULT_SWEEP = (0.16, 0.08, 0.04, 0.02)
COS2 = BoundaryProfile("cos_k", (1.0, 0.3, 2), "strictly_positive")


def verdict(number, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def linf_rates(family, params=None, eps=None, workers=4):
    rep = run_convergence(ExperimentConfig("acceptance", family, params=params or {}, eps=eps),
                          workers=workers)
    return {q: per["Linf"].rate for q, per in rep.rates.items()}


# -- 1. one-dimensional worked example -------------------------------------------------------


def test_criterion_1_one_dimensional_example():
    t0 = time.perf_counter()
    state = get_family("smooth_1d").prepare({"n": 65, "order": 2})
    grid, problem, series = state["grid"], state["problem"], state["series"]
    worst = {"v1": 0.0, "u1": 0.0, "u2": 0.0}
    for eps in (0.05, 0.1, 0.2):
        exact = reference_solution("smooth_1d", eps, state=state).values
        v1 = series.partial_sum(1, eps).values
        u1 = solve(closed_problem(1, problem, eps, grid), grid).values
        u2 = solve(closed_problem(2, problem, eps, grid), grid).values
        worst["v1"] = max(worst["v1"], np.max(np.abs(v1 - exact)))
        worst["u1"] = max(worst["u1"], np.max(np.abs((u1 - exact) - eps**2 * grid.x / (1 + eps))))
        worst["u2"] = max(worst["u2"], np.max(np.abs(u2 - v1)))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-12 and elapsed < 1.0
    verdict(1, ok, f"|v[1]-u| {worst['v1']:.1e}, |u[1]-u-eps^2x/(1+eps)| {worst['u1']:.1e}, "
                   f"|u[2]-v[1]| {worst['u2']:.1e}, {elapsed:.2f} s")


# -- 2. expansion rates on the disk and the rectangle ----------------------------------------


CRITERION_2_CASES = [
    ("smooth_disk", {"profile": "const"}, {"profile": "const", "nr": 2049}),
    ("smooth_disk", {"profile": "cos2"}, {"profile": "cos2", "nr": 513, "M": 64, "ref_N": 61, "ref_M": 64}),
    ("smooth_rect", {}, {"n": 257, "ref_N": 48}),
]


@pytest.mark.parametrize("family, base, fine", CRITERION_2_CASES,
                         ids=["disk_const", "disk_cos2", "rect"])
def test_criterion_2_expansion_rates(family, base, fine):
    t0 = time.perf_counter()
    coarse = linf_rates(family, base, DEFAULT_SWEEP)
    t_family = time.perf_counter() - t0
    refined = linf_rates(family, fine, DEFAULT_SWEEP)
    parts, ok = [], t_family < 120.0
    for n in range(3):
        q = f"v[{n}]"
        r, shift = coarse[q], abs(coarse[q] - refined[q])
        ok &= r is not None and n + 0.8 <= r <= n + 1.2 and shift < 0.05
        parts.append(f"{q} {r:.3f} (grid shift {shift:.3f})")
    label = family + ("" if not base else f" h={base['profile']}")
    verdict(2, ok, f"{label}: " + ", ".join(parts) + f", {t_family:.1f} s")


# -- 3. thin coating layer -------------------------------------------------------------------


def test_criterion_3_thin_layer():
    sigma0 = 2.0
    grid = PolarGrid(0.0, 1.0, 65, 32)
    problem = TransmissionProblem(Disk(1.0), sigma0, 1.0, 4.0, 4.0, COS2, method="spectral")
    s = 2 * np.pi * np.arange(32) / 32
    coeff_ok = True
    for eps in (0.04, 0.02, 0.01, 0.005):
        bc = robin_closed(1, problem, eps, grid).bc("outer")
        coeff_ok &= bc.kind == "robin"
        coeff_ok &= np.array_equal(bc.alpha, np.ones(32))
        coeff_ok &= np.array_equal(bc.beta, eps * COS2.h(s) * sigma0)
        coeff_ok &= np.array_equal(bc.g, np.zeros(32))
    small = linf_rates("thin_layer_scalar")
    halved = linf_rates("thin_layer_scalar", {"nr": 513, "M": 64, "ref_N": 49, "ref_M": 64})
    default = linf_rates("thin_layer_scalar", eps=DEFAULT_SWEEP)
    r1, r2 = small["u[1]"], small["u[2]"]
    ok = coeff_ok and r1 >= 1.8 and r2 >= 2.8
    ok &= abs(r1 - halved["u[1]"]) < 0.05 and abs(r2 - halved["u[2]"]) < 0.05
    verdict(3, ok, f"Robin coefficients exact: {bool(coeff_ok)}; eps 0.04..0.005: u[1] {r1:.3f}, "
                   f"u[2] {r2:.3f} (halved grid {halved['u[1]']:.3f}, {halved['u[2]']:.3f}); "
                   f"default sweep for reference: u[1] {default['u[1]']:.3f}, u[2] {default['u[2]']:.3f}")


# -- 4. coated-interval cascades against the exact closed form --------------------------------


def test_criterion_4_two_parameter_oracle():
    grid = IntervalGrid(0.0, 1.0, 2048)
    h0, h1 = 0.5, 1.0
    worst, parts = 0.0, []
    ok = True
    for regime in (ContrastRegime("CaseI"), ContrastRegime("CaseII1"), ContrastRegime("CaseII2"),
                   ContrastRegime("CaseIII", c=1.0)):
        hl = 0.0 if regime.tag == "CaseII1" else h0
        series = compute_two_param_terms(example4_problem(hl, h1), regime, grid)
        keys = index_set(regime)
        assert set(series.terms) == set(keys)
        rw = 0.0
        for key in keys:
            ref = coefficient_oracle(regime, *key, grid.x, hl, h1)
            err = np.max(np.abs(series.terms[key].values - ref))
            size = np.max(np.abs(ref))
            # coefficients that vanish identically are held to an absolute bound
            rel = err / size if size > 1e-12 else err
            rw = max(rw, rel)
        ok &= rw <= 1e-6
        worst = max(worst, rw)
        parts.append(f"{regime.tag} {rw:.1e} ({len(keys)} terms)")
    verdict(4, ok, "max relative error " + ", ".join(parts))


# -- 5. CaseII2 solvability ------------------------------------------------------------------


def test_criterion_5_case_ii2_solvability():
    grid = IntervalGrid(0.0, 1.0, 2048)
    series = compute_two_param_terms(example4_problem(0.5, 1.0), ContrastRegime("CaseII2"), grid)
    pins = series.info["pins"]
    compat = max(abs(p.residual) for p in pins.values())
    pinned = max(abs(p.achieved - p.pin_value) for p in pins.values())
    ok = len(pins) > 0 and compat < 1e-10 and pinned < 1e-8
    verdict(5, ok, f"{len(pins)} pinned solves, max compatibility residual {compat:.1e}, "
                   f"max pin defect {pinned:.1e}")


# -- 6. interface constant C0 ----------------------------------------------------------------


def test_criterion_6_interface_constant():
    cfg = InterfaceConfig(DiskWithInterface(0.5, 1.0), 1.0, 1.0, 4.0, 0.0, regime="CaseI")
    grid = PolarGrid(0.0, 1.0, 513, 16)
    c0 = neumann_constant(cfg, grid).C0
    sig = np.array([1e2, 1e3, 1e4])
    dev = np.array([abs(u_minus_direct(cfg, s, grid) - c0) for s in sig])
    slope = np.polyfit(np.log(sig), np.log(dev), 1)[0]
    ok = abs(c0 - 0.75) <= 1e-8 and abs(slope + 1.0) <= 0.1
    verdict(6, ok, f"C0 = {c0:.12f}, |u-_direct - C0| = {', '.join(f'{d:.3e}' for d in dev)}, "
                   f"slope {slope:.4f}")


# -- 7. interface eps-hierarchy --------------------------------------------------------------


def test_criterion_7_interface_hierarchy():
    r1d = linf_rates("interface_eps", {"geometry": "1d", "g": 1.0, "g2": 0.0}, DEFAULT_SWEEP)["v[1]"]
    rrad = linf_rates("interface_eps", {"geometry": "radial"}, DEFAULT_SWEEP)["v[1]"]
    ok = r1d is not None and rrad is not None and r1d >= 1.8 and rrad >= 1.8
    verdict(7, ok, f"order of u_0 + eps u_1: 1D {r1d:.3f}, radial {rrad:.3f}")


# -- 8. property suites ----------------------------------------------------------------------


def _ilw_properties(rng):
    worst_lin, zero_ok = 0.0, True
    for kind in ("rect_edge", "curve"):
        n = 24
        extra = {"kappa": 0.8, "periodic": True, "ds": 2 * np.pi / n} if kind == "curve" else {"ds": 1 / (n - 1)}

        def ctx(phi, dphi):
            return ReducerContext(kind, n, sigma=1.7, c=0.4, phi=phi, dn_phi=dphi, **extra)

        for k in (2, 3):
            for _ in range(20):
                u, dnu, phi, dphi, v, dnv, psi, dpsi = rng.uniform(-5, 5, (8, n))
                c = rng.uniform(-5, 5)
                a = reduce(ctx(phi, dphi), k, u, dnu)
                b = reduce(ctx(psi, dpsi), k, v, dnv)
                ab = reduce(ctx(phi + c * psi, dphi + c * dpsi), k, u + c * v, dnu + c * dnv)
                scale = 1.0 + np.max(np.abs(a)) + abs(c) * np.max(np.abs(b))
                worst_lin = max(worst_lin, np.max(np.abs(ab - a - c * b)) / scale)
            z = np.zeros(n)
            zero_ok &= np.array_equal(reduce(ctx(z, z), k, z, z), z)
    return worst_lin, zero_ok


def _transmission_reduction(rng):
    m = 32
    s = 2 * np.pi * np.arange(m) / m
    normal = np.stack([np.cos(s), np.sin(s)], axis=1)
    tangent = np.stack([-np.sin(s), np.cos(s)], axis=1)
    worst = 0.0
    for sigma in (0.5, 1.0, 2.5):
        ext = ReducerContext("curve", m, sigma=sigma, phi=4.0, dn_phi=0.0, kappa=1.0, ds=s[1],
                             periodic=True, method="spectral")
        tctx = TransmissionContext(sigma, sigma, normal, tangent, ext, 4.0, 4.0)
        h = COS2.h(s)
        g = [np.zeros(m)] * 4
        for n in range(1, 4):
            lower = [tuple(rng.uniform(-2, 2, (2, m))) for _ in range(n)]
            a = interior_bc(n, tctx, g, h, lower)
            b = smooth_dirichlet_bc(n, g, h, lower, ext)
            worst = max(worst, np.max(np.abs(a - b)) / (1 + np.max(np.abs(b))))
    grid = PolarGrid(0.0, 1.0, 65, m)
    for n in (1, 2):
        st = robin_closed(n, TransmissionProblem(Disk(1.0), 1.0, 1.0, 4.0, 4.0, COS2, method="spectral"),
                          0.08, grid)
        ss = closed_problem(n, SmoothProblem(Disk(1.0), EllipticOperator(), 4.0, COS2, method="spectral"),
                            0.08, grid)
        bt, bs = st.bc("outer"), ss.bc("outer")
        for name in ("alpha", "beta", "g"):
            worst = max(worst, np.max(np.abs(np.asarray(getattr(bt, name)) - np.asarray(getattr(bs, name)))))
    return worst


def _annulus_area():
    worst = 0.0
    for R in (0.5, 1.0, 2.0):
        for eps in (0.01, 0.1, 0.3):
            area = layer_integral(CurvilinearFrame.circle(R), BoundaryProfile.const(1.0), eps, n_s=1024)
            exact = np.pi * ((R + eps) ** 2 - R**2)
            worst = max(worst, abs(area - exact) / exact)
    return worst


def _multinomial(rng):
    worst = 0.0
    for _ in range(200):
        u = [np.array(v) for v in rng.uniform(-3, 3, 3)]
        for n in (1, 2, 3):
            t = u[:n]
            brute = sum(t[i] * t[j] * t[n - i - j] for i in range(n) for j in range(n) if 0 <= n - i - j < n)
            scale = 1.0 + max(abs(float(v)) for v in u) ** 3
            worst = max(worst, abs(float(multinomial_rhs(n, t)) - float(brute)) / scale)
    return worst


def _determinism(tmp_path):
    outs = []
    for workers in (1, 4, 1):
        rep = run_convergence(ExperimentConfig("det", "interface_eps", params={"geometry": "1d", "g2": 0.0}),
                              workers=workers)
        path = tmp_path / f"r{len(outs)}.csv"
        rep.to_csv(path)
        outs.append(path.read_bytes())
    same_reports = outs[0] == outs[1] == outs[2]
    series = get_family("smooth_disk").prepare({**get_family("smooth_disk").defaults, "profile": "const"})["series"]
    same_terms = all(np.array_equal(series.resolve(n).values, series.terms[n].values) for n in range(3))
    return same_reports and same_terms


def test_criterion_8_property_suites(tmp_path):
    rng = np.random.default_rng(20240611)
    lin, zero_ok = _ilw_properties(rng)
    red = _transmission_reduction(rng)
    area = _annulus_area()
    multi = _multinomial(rng)
    det = _determinism(tmp_path)
    ok = lin < 1e-13 and zero_ok and red < 1e-13 and area < 1e-10 and multi < 1e-14 and det
    verdict(8, ok, f"ILW linearity {lin:.1e}, zero identities {zero_ok}; transmission reduction {red:.1e}; "
                   f"annulus area {area:.1e}; multinomial {multi:.1e}; deterministic reports {det}")

