import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from asymhier.errors import GeometryError
from asymhier.geometry import (
    Annulus,
    BoundaryProfile,
    CurvilinearFrame,
    Disk,
    DiskWithInterface,
    Interval,
    Rectangle,
    boundary_frame,
    curvature,
    layer_integral,
    layer_jacobian,
    perturbed_point,
)


def test_domain_invariants():
    with pytest.raises(GeometryError):
        Interval(1.0, 0.0)
    with pytest.raises(GeometryError):
        Rectangle(0.0, 1.0)
    with pytest.raises(GeometryError):
        Annulus(2.0, 1.0)
    with pytest.raises(GeometryError):
        DiskWithInterface(1.0, 1.0)
    with pytest.raises(GeometryError):
        Interval(0.0, 1.0, interface=1.0)


def test_profile_sign_class_checked():
    with pytest.raises(GeometryError):
        BoundaryProfile("cos_k", (0.1, 0.3, 2), "nonnegative")
    with pytest.raises(GeometryError):
        BoundaryProfile("const", (0.0,), "strictly_positive")
    p = BoundaryProfile("cos_k", (1.0, 0.3, 2), "strictly_positive")
    assert p.max_abs == pytest.approx(1.3)


def test_profile_derivatives():
    p = BoundaryProfile("cos_k", (1.0, 0.3, 2), "strictly_positive")
    s = np.linspace(0, 2 * np.pi, 9)
    assert np.allclose(p.dh(s), -0.6 * np.sin(2 * s))
    assert np.allclose(p.d2h(s), -1.2 * np.cos(2 * s))
    e = BoundaryProfile.endpoints(0.5, 1.0)
    assert e.h(0.0) == 0.5 and e.h(1.0) == 1.0
    assert np.all(e.dh(s) == 0.5)


def test_perturbed_point_interval_right_endpoint():
    h = BoundaryProfile.endpoints(0.0, 1.0)
    assert perturbed_point(Interval(0, 1), h, 0.1, 1.0) == pytest.approx(1.1)


def test_perturbed_point_disk_radius():
    h = BoundaryProfile.const(1.0)
    s = np.linspace(0, 2 * np.pi, 13)
    p = perturbed_point(Disk(1.0), h, 0.2, s)
    assert np.allclose(np.hypot(p[0], p[1]), 1.2, atol=1e-14)


@pytest.mark.parametrize("domain, s", [
    (Disk(1.0), np.linspace(0, 2 * np.pi, 7)),
    (Annulus(0.5, 2.0), np.linspace(0, 2 * np.pi, 7)),
    (Rectangle(1.0, 2.0), np.linspace(0, 2.0, 7)),
])
def test_perturbed_point_identity_at_zero_eps(domain, s):
    h = BoundaryProfile("cos_k", (1.0, 0.3, 2), "strictly_positive")
    p0 = perturbed_point(domain, h, 0.0, s)
    if isinstance(domain, Rectangle):
        expected = np.array([np.full_like(s, domain.L1), s])
    else:
        expected = boundary_frame(domain, "outer").point(s)
    assert np.array_equal(p0, expected)


def test_perturbed_point_fold_raises():
    with pytest.raises(GeometryError):
        perturbed_point(Annulus(0.5, 1.0), BoundaryProfile.const(1.0), 0.6, 0.0, segment="inner")


def test_layer_jacobian_examples():
    frame = CurvilinearFrame.circle(0.5)
    assert layer_jacobian(frame, 0.3, 0.1) == pytest.approx(1.2)
    assert layer_jacobian(CurvilinearFrame.circle(3.0), 1.0, 0.0) == 1.0
    with pytest.raises(GeometryError):
        layer_jacobian(frame, 0.0, 0.5)


@pytest.mark.parametrize("R, eps", [(1.0, 0.1), (2.0, 0.05), (0.7, 0.3)])
def test_layer_integral_annulus_area(R, eps):
    area = layer_integral(CurvilinearFrame.circle(R), BoundaryProfile.const(1.0), eps, n_s=1024)
    exact = math.pi * (R + eps) ** 2 - math.pi * R**2
    assert abs(area - exact) / exact < 1e-10
    assert exact == pytest.approx(2 * math.pi * R * eps + math.pi * eps**2, rel=1e-14)


def test_layer_integral_strip_area():
    frame = boundary_frame(Rectangle(1.0, 2.0), "right")
    h = BoundaryProfile("poly", (1.0, 0.5), "strictly_positive", s_range=(0.0, 2.0))
    area = layer_integral(frame, h, 0.1, n_s=1000)
    assert area == pytest.approx(0.1 * (2.0 + 0.25 * 4.0), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(R=st.floats(0.2, 5.0), eps=st.floats(0.0, 0.5), a1=st.floats(0.0, 0.9), k=st.integers(0, 4))
def test_layer_integral_matches_polar_area(R, eps, a1, k):
    # Region between r = R and r = R + eps h(theta), integrated in polar form.
    assume(eps * (1.0 + a1) / R < 0.9)
    h = BoundaryProfile("cos_k", (1.0, a1, k), "nonnegative")
    area = layer_integral(CurvilinearFrame.circle(R), h, eps, n_s=1024)
    t = np.arange(4096) * 2 * np.pi / 4096
    hv = h.h(t)
    exact = np.mean(R * eps * hv + 0.5 * eps**2 * hv**2) * 2 * np.pi
    assert abs(area - exact) <= 1e-10 * max(exact, 1e-300) + 1e-15


def test_curvature_examples():
    assert curvature(Disk(1.0), 0.3) == 1.0
    assert curvature(Annulus(0.5, 4.0), 1.0, segment="outer") == pytest.approx(0.25)
    assert curvature(Annulus(0.5, 4.0), 1.0, segment="inner") == pytest.approx(-2.0)
    assert curvature(Rectangle(1.0, 1.0), 0.5) == 0.0
    with pytest.raises(GeometryError):
        curvature(Rectangle(1.0, 1.0), 1.0)


def test_circle_curvature_from_tangent_derivative():
    # tau' = -kappa n, checked by differencing the tangent in arc length.
    R = 2.0
    frame = CurvilinearFrame.circle(R)
    t, dt = 0.7, 1e-5
    dtau = (frame.tangent(t + dt) - frame.tangent(t - dt)) / (2 * dt * R)
    kappa = -float(np.dot(dtau, frame.normal(t)))
    assert kappa == pytest.approx(1.0 / R, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(R=st.floats(0.1, 10.0), s=st.floats(-10.0, 10.0))
def test_frame_is_orthonormal(R, s):
    for frame in (CurvilinearFrame.circle(R), CurvilinearFrame.circle(R, outward=-1)):
        tau, n = frame.tangent(s), frame.normal(s)
        assert abs(float(np.dot(tau, n))) < 1e-12
        assert abs(np.hypot(*n) - 1.0) < 1e-12
        assert abs(np.hypot(*tau) - 1.0) < 1e-12
