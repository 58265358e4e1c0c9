"""Reference solutions on perturbed domains.

Two spectral collocation solvers cover the two-dimensional families: a
Chebyshev-Fourier scheme on a disk whose radius varies with the angle, and a
Chebyshev-Chebyshev scheme on a rectangle whose right edge is ``x = L1 +
eps h(y)``.  Both map the perturbed domain onto a fixed one and apply the
chain rule to the differentiation matrices.  The remaining families have
closed forms, collected at the end of the module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .bvp import ScalarFunction
from .errors import DataError, GeometryError, UnsupportedError
from .geometry import BoundaryProfile


# ---------------------------------------------------------------------------
# Spectral building blocks
# ---------------------------------------------------------------------------


def cheb(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev points ``cos(j pi / N)`` and the differentiation matrix."""
    if N < 1:
        raise DataError("cheb needs N >= 1")
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[[0, -1]] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def fourier_diff(M: int) -> np.ndarray:
    """First-derivative matrix on ``M`` (even) equispaced periodic nodes."""
    if M % 2:
        raise DataError("fourier_diff needs an even number of nodes")
    h = 2 * np.pi / M
    k = np.arange(M)
    diff = (k[:, None] - k[None, :]) % M
    with np.errstate(divide="ignore"):
        col = 0.5 * (-1.0) ** diff / np.tan(diff * h / 2)
    col[diff == 0] = 0.0
    return col


def fourier_diff2(M: int) -> np.ndarray:
    """Second-derivative matrix on ``M`` (even) equispaced periodic nodes."""
    if M % 2:
        raise DataError("fourier_diff2 needs an even number of nodes")
    h = 2 * np.pi / M
    k = np.arange(M)
    diff = (k[:, None] - k[None, :]) % M
    with np.errstate(divide="ignore"):
        out = -0.5 * (-1.0) ** diff / np.sin(diff * h / 2) ** 2
    out[diff == 0] = -np.pi**2 / (3 * h**2) - 1.0 / 6.0
    return out


def fourier_interp_matrix(M: int, targets: np.ndarray) -> np.ndarray:
    """Rows evaluating the trigonometric interpolant of ``M`` nodal values."""
    theta = 2 * np.pi * np.arange(M) / M
    d = np.asarray(targets, dtype=float)[:, None] - theta[None, :]
    half = d / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.sin(M * half) / (M * np.tan(half))
    hit = np.isclose(np.mod(d + np.pi, 2 * np.pi) - np.pi, 0.0, atol=1e-14)
    rows = np.any(hit, axis=1)
    S[rows] = hit[rows].astype(float)
    return S


def cheb_interp(x_nodes: np.ndarray, values: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Barycentric interpolation on Chebyshev points of the second kind.

    ``values`` may carry trailing axes; the first axis runs over nodes.
    """
    n = x_nodes.size
    w = (-1.0) ** np.arange(n)
    w[[0, -1]] *= 0.5
    t = np.asarray(targets, dtype=float)
    d = t[:, None] - x_nodes[None, :]
    exact = np.abs(d) < 1e-15
    d[exact] = 1.0
    L = w / d
    L /= L.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    L[rows] = exact[rows].astype(float)
    return np.tensordot(L, values, axes=(1, 0))


# ---------------------------------------------------------------------------
# Disk with radius R + eps h(theta)
# ---------------------------------------------------------------------------


@dataclass
class DiskReference:
    """Collocation solution of ``-div(sigma grad u) + c u = f`` on a star-shaped disk.

    The boundary is ``r = R s(theta)``, ``s = 1 + eps h(theta) / R``, and
    ``u = g`` there.  The unknowns live at ``rho_j theta_k`` with ``rho`` the
    positive half of an odd-order Chebyshev grid on ``[-R, R]``; negative
    radii are folded onto ``theta + pi``, which requires ``h(theta + pi) =
    h(theta)``.
    """

    R: float
    eps: float
    profile: BoundaryProfile
    rho_full: np.ndarray
    theta: np.ndarray
    values: np.ndarray  # (n_pos, M)

    def _s(self, th) -> np.ndarray:
        return 1.0 + self.eps * np.asarray(self.profile.h(th), dtype=float) / self.R

    def evaluate_polar(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Values at the tensor points ``r_i theta_k``; returns shape (len(r), len(theta))."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        M = self.theta.size
        n_pos = self.values.shape[0]
        F = fourier_interp_matrix(M, theta)
        Fp = fourier_interp_matrix(M, theta + np.pi)
        pos = self.values @ F.T          # (n_pos, T)
        neg = self.values @ Fp.T         # values at (-rho_j, theta) = (rho_j, theta + pi)
        N = self.rho_full.size - 1
        line = np.empty((N + 1, theta.size))
        line[:n_pos] = pos
        line[N - np.arange(n_pos)] = neg
        out = np.empty((r.size, theta.size))
        s = self._s(theta)
        if np.any(r[:, None] > self.R * s[None, :] * (1 + 1e-12)):
            raise GeometryError("evaluation point outside the perturbed disk")
        for k in range(theta.size):
            out[:, k] = cheb_interp(self.rho_full, line[:, k], r / s[k])
        return out


def _div_sigma_grad(Dp, Dt, Dtt, a, b, c, d, sig) -> np.ndarray:
    """Matrix of ``div(sigma grad u)`` for ``u_x = a u_p + b u_t``, ``u_y = c u_p + d u_t``.

    ``t`` is the periodic angle.  The pure angular part is written with the
    second-derivative matrix ``Dtt`` (``D_t w D_t = w D_tt + (D_t w) D_t``)
    because the square of the Fourier first-derivative matrix annihilates the
    highest mode and would make the system singular.
    """
    def part(e, f):
        se, sf = sig * e, sig * f
        return (e[:, None] * (Dp @ (se[:, None] * Dp)) + e[:, None] * (Dp @ (sf[:, None] * Dt))
                + f[:, None] * (Dt @ (se[:, None] * Dp))
                + f[:, None] * (sf[:, None] * Dtt + (Dt @ sf)[:, None] * Dt))
    return part(a, b) + part(c, d)


@dataclass
class _DiskBlock:
    n_pos: int
    M: int
    rho_full: np.ndarray
    Drho: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    lap: np.ndarray      # div(sigma grad .)
    Dx: np.ndarray
    Dy: np.ndarray


def _disk_block(sigma: Any, R: float, s, ds, N: int, M: int) -> _DiskBlock:
    """Folded Chebyshev-Fourier discretization of the disk ``r < R s(theta)``."""
    x, D = cheb(N)
    rho_full = R * x
    n_pos = (N + 1) // 2
    pos = np.arange(n_pos)
    I_M = np.eye(M)
    P = np.roll(I_M, M // 2, axis=1)
    Dr = D / R
    Drho = np.kron(Dr[np.ix_(pos, pos)], I_M) + np.kron(Dr[np.ix_(pos, N - pos)], P)
    Dth = np.kron(np.eye(n_pos), fourier_diff(M))
    Dtt = np.kron(np.eye(n_pos), fourier_diff2(M))
    th = 2 * np.pi * np.arange(M) / M
    rho = np.repeat(rho_full[:n_pos], M)
    S, S1 = np.tile(s, n_pos), np.tile(ds, n_pos)
    C, Sn = np.tile(np.cos(th), n_pos), np.tile(np.sin(th), n_pos)
    X, Y = rho * S * C, rho * S * Sn
    a = C / S + S1 * Sn / S**2
    b = -Sn / (rho * S)
    c = Sn / S - S1 * C / S**2
    d = C / (rho * S)
    sig = ScalarFunction.coerce(sigma)(X, Y) * np.ones(X.size)
    lap = _div_sigma_grad(Drho, Dth, Dtt, a, b, c, d, sig)
    Dx = a[:, None] * Drho + b[:, None] * Dth
    Dy = c[:, None] * Drho + d[:, None] * Dth
    return _DiskBlock(n_pos, M, rho_full, Drho, X, Y, lap, Dx, Dy)


def _check_fold(profile: BoundaryProfile, M: int) -> np.ndarray:
    th = 2 * np.pi * np.arange(M) / M
    hp = np.asarray(profile.h(th), dtype=float) * np.ones(M)
    if not np.allclose(hp, np.asarray(profile.h(th + np.pi), dtype=float), atol=1e-13):
        raise UnsupportedError("the folded disk reference needs h(theta + pi) = h(theta)")
    return th


def disk_reference(sigma: Any, c: Any, f: Any, g: Any, R: float, profile: BoundaryProfile,
                   eps: float, N: int = 41, M: int = 48) -> DiskReference:
    """Solve on ``{r < R + eps h(theta)}`` by mapped Chebyshev-Fourier collocation.

    ``N`` must be odd (no node at the centre) and ``M`` even.
    """
    if N % 2 == 0 or M % 2:
        raise DataError("disk_reference needs odd N and even M")
    th = _check_fold(profile, M)
    s = 1.0 + eps * np.asarray(profile.h(th), dtype=float) / R
    ds = eps * np.asarray(profile.dh(th), dtype=float) / R
    if np.any(s <= 0):
        raise GeometryError("perturbed radius is not positive")
    blk = _disk_block(sigma, R, s, ds, N, M)
    cc = ScalarFunction.coerce(c)(blk.X, blk.Y) * np.ones(blk.X.size)
    A = -blk.lap + np.diag(cc)
    rhs = ScalarFunction.coerce(f)(blk.X, blk.Y) * np.ones(blk.X.size)
    bnd = np.arange(M)  # rho = R rows
    A[bnd] = 0.0
    A[bnd, bnd] = 1.0
    rhs[bnd] = ScalarFunction.coerce(g)(blk.X[bnd], blk.Y[bnd])
    u = np.linalg.solve(A, rhs)
    return DiskReference(R, eps, profile, blk.rho_full, th, u.reshape(blk.n_pos, M))


@dataclass
class CoatedDiskReference:
    """Solution on the disk ``r < R`` plus the layer ``R < r < R + eps h(theta)``."""

    inner: DiskReference
    tau: np.ndarray          # Chebyshev nodes on [0, 1], outer boundary first
    layer: np.ndarray        # (len(tau), M)
    R: float
    eps: float
    profile: BoundaryProfile

    def evaluate_polar(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Values at ``r_i theta_k`` for ``r <= R`` (the reference domain)."""
        r = np.asarray(r, dtype=float)
        if np.any(r > self.R * (1 + 1e-12)):
            raise GeometryError("coated-disk evaluation is limited to the inner disk")
        return self.inner.evaluate_polar(r, theta)


def coated_disk_reference(sigma_int: Any, sigma_ext: Any, f_int: Any, f_ext: Any, R: float,
                          profile: BoundaryProfile, eps: float, N: int = 41, M: int = 48,
                          Nl: int = 12) -> CoatedDiskReference:
    """Transmission problem on a disk coated by a layer of width ``eps h(theta)``.

    ``-div(sigma grad u) = f`` on each part, ``u = 0`` on the outer boundary,
    ``u`` and ``sigma d_r u`` continuous at ``r = R``.  The layer is mapped by
    ``r = R + tau eps h(theta)`` with ``tau`` on Chebyshev nodes; ``h`` must
    be positive.
    """
    if N % 2 == 0 or M % 2:
        raise DataError("coated_disk_reference needs odd N and even M")
    th = _check_fold(profile, M)
    w = eps * np.asarray(profile.h(th), dtype=float) * np.ones(M)
    w1 = eps * np.asarray(profile.dh(th), dtype=float) * np.ones(M)
    if np.any(w <= 0):
        raise GeometryError("the layer reference needs eps h > 0 everywhere")
    one = np.ones(M)
    inner = _disk_block(sigma_int, R, one, 0 * one, N, M)
    xl, Dl = cheb(Nl)
    tau = (xl + 1) / 2
    Dtau = np.kron(2 * Dl, np.eye(M))
    nl = Nl + 1
    Dth = np.kron(np.eye(nl), fourier_diff(M))
    Dtt = np.kron(np.eye(nl), fourier_diff2(M))
    T = np.repeat(tau, M)
    W, W1 = np.tile(w, nl), np.tile(w1, nl)
    C, Sn = np.tile(np.cos(th), nl), np.tile(np.sin(th), nl)
    r = R + T * W
    X, Y = r * C, r * Sn
    Xt_, Yt_ = W * C, W * Sn                                 # d/dtau
    Xth, Yth = T * W1 * C - r * Sn, T * W1 * Sn + r * C      # d/dtheta
    det = W * r
    a, b = Yth / det, -Yt_ / det
    c, d = -Xth / det, Xt_ / det
    sig_e = ScalarFunction.coerce(sigma_ext)(X, Y) * np.ones(X.size)
    lap_l = _div_sigma_grad(Dtau, Dth, Dtt, a, b, c, d, sig_e)

    ni = inner.X.size
    nL = X.size
    A = np.zeros((ni + nL, ni + nL))
    rhs = np.zeros(ni + nL)
    A[:ni, :ni] = -inner.lap
    rhs[:ni] = ScalarFunction.coerce(f_int)(inner.X, inner.Y) * np.ones(ni)
    A[ni:, ni:] = -lap_l
    rhs[ni:] = ScalarFunction.coerce(f_ext)(X, Y) * np.ones(nL)
    k = np.arange(M)
    outer_rows = ni + k                      # tau = 1
    iface_l = ni + (nl - 1) * M + k          # tau = 0
    iface_i = k                              # rho = R
    A[outer_rows] = 0.0
    A[outer_rows, outer_rows] = 1.0
    rhs[outer_rows] = 0.0
    # continuity in the inner boundary rows
    A[iface_i] = 0.0
    A[iface_i, iface_i] = 1.0
    A[iface_i, iface_l] = -1.0
    rhs[iface_i] = 0.0
    # flux balance in the layer interface rows: sigma_i d_r u_i = sigma_e d_tau u_l / w
    si = ScalarFunction.coerce(sigma_int)(inner.X[k], inner.Y[k]) * one
    A[iface_l] = 0.0
    A[iface_l, :ni] = si[:, None] * inner.Drho[k]
    A[iface_l, ni:] = -(sig_e[iface_l - ni] / W[iface_l - ni])[:, None] * Dtau[iface_l - ni]
    rhs[iface_l] = 0.0
    u = np.linalg.solve(A, rhs)
    ref = DiskReference(R, 0.0, profile, inner.rho_full, th, u[:ni].reshape(inner.n_pos, M))
    return CoatedDiskReference(ref, tau, u[ni:].reshape(nl, M), R, eps, profile)


# ---------------------------------------------------------------------------
# Rectangle with right edge x = L1 + eps h(y)
# ---------------------------------------------------------------------------


@dataclass
class RectReference:
    L1: float
    L2: float
    eps: float
    profile: BoundaryProfile
    xi: np.ndarray      # Chebyshev nodes on [0, L1]
    eta: np.ndarray     # Chebyshev nodes on [0, L2]
    values: np.ndarray  # (len(xi), len(eta))

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Values at the tensor points ``x_i y_j``; shape (len(x), len(y))."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        along_y = cheb_interp(self.eta, self.values.T, y)   # (len(y), len(xi))
        S = self.L1 + self.eps * np.asarray(self.profile.h(y), dtype=float) * np.ones(y.size)
        if np.any(x[:, None] > S[None, :] * (1 + 1e-12)):
            raise GeometryError("evaluation point outside the perturbed rectangle")
        out = np.empty((x.size, y.size))
        for j in range(y.size):
            out[:, j] = cheb_interp(self.xi, along_y[j], x * self.L1 / S[j])
        return out


def rect_reference(sigma: float, c: Any, f: Any, g: Any, L1: float, L2: float,
                   profile: BoundaryProfile, eps: float, Nx: int = 32, Ny: int = 32,
                   right: str = "dirichlet") -> RectReference:
    """Solve on ``{0 < x < L1 + eps h(y), 0 < y < L2}`` by mapped collocation.

    ``u = g`` on the left, bottom and top edges; on the moved right edge
    either ``u = g`` (``right="dirichlet"``) or ``d_n u = 0``
    (``right="neumann"``).  ``sigma`` must be constant.
    """
    if right not in ("dirichlet", "neumann"):
        raise DataError("right must be 'dirichlet' or 'neumann'")
    sg = ScalarFunction.coerce(sigma)
    if not sg.is_constant:
        raise UnsupportedError("the rectangle reference needs a constant sigma")
    xr, Dxi = cheb(Nx)
    yr, Deta = cheb(Ny)
    xi = L1 * (xr[::-1] + 1) / 2
    eta = L2 * (yr[::-1] + 1) / 2
    Dxi = Dxi[::-1, ::-1] * 2 / L1
    Deta = Deta[::-1, ::-1] * 2 / L2
    nx, ny = xi.size, eta.size
    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    hy = np.asarray(profile.h(ETA), dtype=float) * np.ones(ETA.shape)
    dhy = np.asarray(profile.dh(ETA), dtype=float) * np.ones(ETA.shape)
    S = L1 + eps * hy
    Sp = eps * dhy
    if np.any(S <= 0):
        raise GeometryError("perturbed rectangle has non-positive width")
    X = (XI * S / L1).ravel()
    Y = ETA.ravel()
    Dq = np.kron(Dxi, np.eye(ny))
    Dr = np.kron(np.eye(nx), Deta)
    Dx = (L1 / S.ravel())[:, None] * Dq
    Dy = -(XI * Sp / S).ravel()[:, None] * Dq + Dr
    cc = ScalarFunction.coerce(c)(X, Y) * np.ones(X.size)
    A = -sg.const * (Dx @ Dx + Dy @ Dy) + np.diag(cc)
    b = ScalarFunction.coerce(f)(X, Y) * np.ones(X.size)
    gv = ScalarFunction.coerce(g)(X, Y) * np.ones(X.size)
    idx = np.arange(nx * ny).reshape(nx, ny)
    if right == "neumann":
        rows = idx[-1, 1:-1]
        A[rows] = Dx[rows] - Sp.ravel()[rows][:, None] * Dy[rows]
        b[rows] = 0.0
        dir_rows = np.concatenate([idx[0], idx[:, 0], idx[:, -1]])
    else:
        dir_rows = np.concatenate([idx[0], idx[-1], idx[:, 0], idx[:, -1]])
    dir_rows = np.unique(dir_rows)
    A[dir_rows] = 0.0
    A[dir_rows, dir_rows] = 1.0
    b[dir_rows] = gv[dir_rows]
    u = np.linalg.solve(A, b)
    return RectReference(L1, L2, eps, profile, xi, eta, u.reshape(nx, ny))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def smooth_1d_exact(eps: float, x) -> np.ndarray:
    """``u_eps = x^2 - (1 + eps) x`` on ``(0, 1 + eps)`` for ``u'' = 2``."""
    x = np.asarray(x, dtype=float)
    return x**2 - (1.0 + eps) * x


def closed_1d_exact(eps: float, x) -> np.ndarray:
    """``u^[1] = x^2 - (1 + 2 eps)/(1 + eps) x`` for the 1D example."""
    x = np.asarray(x, dtype=float)
    return x**2 - (1.0 + 2.0 * eps) / (1.0 + eps) * x


def radial_disk_exact(eps: float, h: float, r, R: float = 1.0) -> np.ndarray:
    """Disk family with ``sigma = 1 + r^2/4``, ``f = 4``, ``g = 0`` and constant ``h``.

    ``sigma r u' = -2 r^2`` gives ``u = 4 ln((1 + Re^2/4) / (1 + r^2/4))`` with
    ``Re = R + eps h``.
    """
    r = np.asarray(r, dtype=float)
    Re = R + eps * h
    return 4.0 * np.log((1.0 + Re**2 / 4.0) / (1.0 + r**2 / 4.0))


def thin_layer_radial_exact(eps: float, h: float, sigma_int: float, sigma_ext: float,
                            f: float, r, R: float = 1.0) -> np.ndarray:
    """Disk of radius ``R`` coated by the annulus ``R < r < R + eps h``.

    ``-sigma Lap u = f`` on each part, ``u = 0`` on ``r = R + eps h``,
    continuity of ``u`` and ``sigma u_r`` at ``r = R``.  Returns ``u`` at ``r``
    (any ``r`` up to ``R + eps h``).
    """
    r = np.asarray(r, dtype=float)
    Re = R + eps * h
    # interior u = A - f r^2/(4 sigma_int); exterior u = B ln(r/Re) - f (r^2 - Re^2)/(4 sigma_ext)
    # the flux sigma u_r at R equals -f R/2 from both sides, so B = 0.
    uR = -f * (R**2 - Re**2) / (4.0 * sigma_ext)
    A = uR + f * R**2 / (4.0 * sigma_int)
    return np.where(r <= R, A - f * r**2 / (4.0 * sigma_int),
                    -f * (r**2 - Re**2) / (4.0 * sigma_ext))


def interface_radial_exact(R_gamma: float, sigma_minus: float, sigma_plus: float,
                           f: float, g: float, r, R: float = 1.0, g2: float = 0.0,
                           theta=None) -> np.ndarray:
    """Two-region disk with interface radius ``R_gamma``.

    ``-sigma Lap u = f`` on both sides, ``u = g + g2 cos(2 theta)`` on ``r =
    R`` and transmission conditions on ``r = R_gamma``.  The radial part is
    ``u- = A - f r^2/(4 sigma-)``, ``u+ = g - f (r^2 - R^2)/(4 sigma+) + B
    ln(r/R)``; flux continuity gives ``B = 0``.  The ``cos 2 theta`` part uses
    ``a r^2`` inside and ``b r^2 + d r^-2`` outside.  With ``theta`` the
    result has shape ``(len(r), len(theta))``.
    """
    r = np.asarray(r, dtype=float)
    up_G = g - f * (R_gamma**2 - R**2) / (4.0 * sigma_plus)
    A = up_G + f * R_gamma**2 / (4.0 * sigma_minus)
    rad = np.where(r <= R_gamma, A - f * r**2 / (4.0 * sigma_minus),
                   g - f * (r**2 - R**2) / (4.0 * sigma_plus))
    if theta is None:
        if g2 != 0.0:
            raise DataError("the angular mode needs theta")
        return rad
    theta = np.asarray(theta, dtype=float)
    a, b, d = _angular_mode_coefficients(R_gamma, sigma_minus, sigma_plus, g2, R)
    rs = np.where(r > 0, r, 1.0)
    ang = np.where(r <= R_gamma, a * r**2, b * r**2 + d * rs**-2.0)
    return rad[:, None] + ang[:, None] * np.cos(2 * theta)[None, :]


def _angular_mode_coefficients(R_gamma, sigma_minus, sigma_plus, g2, R):
    # a G^2 = b G^2 + d G^-2 ; sm 2 a G = sp (2 b G - 2 d G^-3) ; b R^2 + d R^-2 = g2
    G = R_gamma
    M = np.array([[G**2, -G**2, -G**-2.0],
                  [sigma_minus * 2 * G, -sigma_plus * 2 * G, sigma_plus * 2 * G**-3.0],
                  [0.0, R**2, R**-2.0]])
    return np.linalg.solve(M, np.array([0.0, 0.0, g2]))


def interface_1d_exact(gamma: float, sigma_minus: float, sigma_plus: float, f: float,
                       x, a: float = 0.0, b: float = 1.0, ga: float = 0.0,
                       gb: float = 0.0) -> np.ndarray:
    """``-(sigma u')' = f`` on ``(a, b)`` with a kink at ``gamma``.

    ``u(a) = ga``, ``u(b) = gb``, continuity of ``u`` and ``sigma u'``.
    """
    x = np.asarray(x, dtype=float)
    # u- = -f x^2/(2 sm) + p x + q ; u+ = -f x^2/(2 sp) + s x + t
    G = gamma
    Mtx = np.array([[a, 1.0, 0.0, 0.0],
                    [0.0, 0.0, b, 1.0],
                    [G, 1.0, -G, -1.0],
                    [sigma_minus, 0.0, -sigma_plus, 0.0]])
    rhs = np.array([ga + f * a**2 / (2 * sigma_minus),
                    gb + f * b**2 / (2 * sigma_plus),
                    f * G**2 / (2 * sigma_minus) - f * G**2 / (2 * sigma_plus),
                    0.0])
    # flux: sm (-f G/sm + p) = sp (-f G/sp + s)  ->  sm p - sp s = 0
    p, q, s, t = np.linalg.solve(Mtx, rhs)
    return np.where(x <= G, -f * x**2 / (2 * sigma_minus) + p * x + q,
                    -f * x**2 / (2 * sigma_plus) + s * x + t)
