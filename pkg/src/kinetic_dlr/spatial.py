"""Periodic spatial grid, quadrature, Poisson solve, and the conservative
upwind flux for the coupled (r+3)-component hyperbolic system.

The moment triple and the r spatial low-rank factors form one hyperbolic
system with a constant symmetric flux matrix; the numerical flux splits along
its eigenvectors and is reconstructed per characteristic variable, then the
needed rows are selected after differencing so that both subsystems see the
same jointly-upwinded flux.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .orthopoly import MacroCoefficients

RECONSTRUCTIONS = ("muscl_mc", "weno5", "upwind1")


@dataclass(frozen=True)
class XGrid:
    """Equispaced periodic grid on [0, length)."""

    length: float
    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("need at least 4 spatial points")
        if not self.length > 0:
            raise ValueError("domain length must be positive")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def points(self) -> np.ndarray:
        return self.dx * np.arange(self.n)


def trapezoid_x(grid: XGrid, g: np.ndarray, h: np.ndarray) -> float:
    """Periodic trapezoid rule: dx * sum(g*h)."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    if g.shape != h.shape:
        raise ValueError("field shape mismatch")
    return grid.dx * float(np.sum(g * h))


def gram_x(grid: XGrid, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Trapezoid inner products of all column pairs of (n, k) arrays."""
    return grid.dx * (A.T @ B)


def centered_dx(grid: XGrid, g: np.ndarray) -> np.ndarray:
    """Second-order centered difference along the last axis (periodic)."""
    return (np.roll(g, -1, axis=-1) - np.roll(g, 1, axis=-1)) / (2.0 * grid.dx)


def poisson_solve(grid: XGrid, rho: np.ndarray, rho0: float | None = None):
    """Solve the periodic 3-point-stencil Poisson problem
    lap(phi) = -(rho - rho0) with zero-mean phi, and return (phi, E) with
    E = -centered_dx(phi).

    The FFT solve is exact (to roundoff) for the 3-point stencil, since the
    stencil is diagonal in the discrete Fourier basis.  The source mean is
    subtracted so compatibility holds regardless of rho0.
    """
    rho = np.asarray(rho, dtype=float)
    if rho0 is None:
        rho0 = float(np.mean(rho))
    rhs = rho - rho0
    rhs = rhs - np.mean(rhs)
    n, dx = grid.n, grid.dx
    theta = 2.0 * np.pi * np.arange(n // 2 + 1) / n
    lam = (2.0 - 2.0 * np.cos(theta)) / dx**2
    rhat = np.fft.rfft(rhs)
    phihat = np.zeros_like(rhat)
    phihat[1:] = rhat[1:] / lam[1:]
    phi = np.fft.irfft(phihat, n)
    return phi, -centered_dx(grid, phi)


class HyperbolicSystem:
    """Symmetric flux matrix of the stacked (f0, f1, f2, K_1..K_r) system and
    its eigendecomposition."""

    def __init__(self, coeffs: MacroCoefficients, a_mat: np.ndarray, q: np.ndarray):
        q = np.asarray(q, dtype=float).ravel()
        r = q.size
        m = 3 + r
        a0 = np.zeros((m, m))
        a0[:3, :3] = coeffs.flux_matrix()
        a0[2, 3:] = coeffs.a[2] * q
        a0[3:, 2] = coeffs.a[2] * q
        a0[3:, 3:] = 0.5 * (a_mat + a_mat.T)
        self.a0 = a0
        self.rank = r
        eigvals, eigvecs = np.linalg.eigh(a0)
        self.eigvals = eigvals
        self.eigvecs = eigvecs
        self._lam_plus = np.maximum(eigvals, 0.0)
        self._lam_minus = np.minimum(eigvals, 0.0)

    @property
    def max_speed(self) -> float:
        return float(np.max(np.abs(self.eigvals)))


def build_hyperbolic_system(coeffs: MacroCoefficients, a_mat: np.ndarray,
                            q: np.ndarray) -> HyperbolicSystem:
    return HyperbolicSystem(coeffs, a_mat, q)


def _minmod3(a, b, c):
    pos = (a > 0) & (b > 0) & (c > 0)
    neg = (a < 0) & (b < 0) & (c < 0)
    out = np.where(pos, np.minimum(np.minimum(a, b), c), 0.0)
    return np.where(neg, np.maximum(np.maximum(a, b), c), out)


def _muscl_mc_states(y: np.ndarray):
    """Left/right states at interfaces i+1/2 from MC-limited linear
    reconstruction (periodic, last axis)."""
    d = np.roll(y, -1, axis=-1) - y          # y_{i+1} - y_i
    dm = np.roll(d, 1, axis=-1)              # y_i - y_{i-1}
    slope = _minmod3(0.5 * (d + dm), 2.0 * d, 2.0 * dm)
    left = y + 0.5 * slope
    right = np.roll(y - 0.5 * slope, -1, axis=-1)
    return left, right


def _weno5_biased(f2m, f1m, f0, f1p, f2p):
    """Classical fifth-order WENO value at the interface from a 5-cell
    stencil biased toward f0's side."""
    p0 = (2.0 * f2m - 7.0 * f1m + 11.0 * f0) / 6.0
    p1 = (-f1m + 5.0 * f0 + 2.0 * f1p) / 6.0
    p2 = (2.0 * f0 + 5.0 * f1p - f2p) / 6.0
    b0 = 13.0 / 12.0 * (f2m - 2 * f1m + f0) ** 2 + 0.25 * (f2m - 4 * f1m + 3 * f0) ** 2
    b1 = 13.0 / 12.0 * (f1m - 2 * f0 + f1p) ** 2 + 0.25 * (f1m - f1p) ** 2
    b2 = 13.0 / 12.0 * (f0 - 2 * f1p + f2p) ** 2 + 0.25 * (3 * f0 - 4 * f1p + f2p) ** 2
    eps = 1e-6
    a0 = 0.1 / (eps + b0) ** 2
    a1 = 0.6 / (eps + b1) ** 2
    a2 = 0.3 / (eps + b2) ** 2
    wsum = a0 + a1 + a2
    return (a0 * p0 + a1 * p1 + a2 * p2) / wsum


def _weno5_states(y: np.ndarray):
    s = {k: np.roll(y, k, axis=-1) for k in range(-3, 3)}
    left = _weno5_biased(s[2], s[1], y, s[-1], s[-2])
    right = _weno5_biased(s[-3], s[-2], s[-1], y, s[1])
    return left, right


def reconstruct_periodic(y: np.ndarray, method: str):
    """Interface states (left- and right-sided) at i+1/2 along the last axis."""
    if method == "upwind1":
        return y, np.roll(y, -1, axis=-1)
    if method == "muscl_mc":
        return _muscl_mc_states(y)
    if method == "weno5":
        return _weno5_states(y)
    raise ValueError(f"unknown reconstruction {method!r}")


def upwind_flux_divergence(grid: XGrid, w: np.ndarray, sys: HyperbolicSystem,
                           selector: str = "all",
                           reconstruction: str = "muscl_mc") -> np.ndarray:
    """Conservative divergence of the split upwind flux of the stacked field.

    w has shape (r+3, n_x).  The reconstruction runs on characteristic
    variables; the row selection ('p1' for the moment rows, 'p2' for the
    factor rows) happens after the flux difference.
    """
    R = sys.eigvecs
    y = R.T @ w
    left, right = reconstruct_periodic(y, reconstruction)
    fhat = R @ (sys._lam_plus[:, None] * left + sys._lam_minus[:, None] * right)
    div = (fhat - np.roll(fhat, 1, axis=-1)) / grid.dx
    if selector == "all":
        return div
    if selector == "p1":
        return div[:3]
    if selector == "p2":
        return div[3:]
    raise ValueError(f"unknown selector {selector!r}")
