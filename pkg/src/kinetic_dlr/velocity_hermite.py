"""Asymmetrically-weighted Hermite spectral velocity backend.

Functions of v are coefficient vectors against w(v)*He_n(v/v0), n = 0..M.
The weighted inner product reduces to the plain dot product of coefficient
vectors, and v-multiplication / differentiation act as banded matrices stored
here as O(M) diagonal applications:

    dv:      (D g)_m      = -sqrt(m)/v0 * g_{m-1}
    dv2:     (D^2 g)_m    =  sqrt(m(m-1))/v0^2 * g_{m-2}
    vmul:    (Xi g)_m     =  v0*(sqrt(m) g_{m-1} + sqrt(m+1) g_{m+1})
    dv_vmul: (DXi g)_m    = -sqrt(m(m-1)) g_{m-2} - m g_m

These entries follow from d/dv[w He_n] = -(sqrt(n+1)/v0) w He_{n+1} and
v w He_n = v0 (sqrt(n+1) w He_{n+1} + sqrt(n) w He_{n-1}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .orthopoly import HERMITE, BasisFamily


def hou_li_sigma(s, beta: float = 36.0):
    """Spectral filter profile: 1 for s <= 2/3, exp(-beta*s^beta) above."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.ones_like(s)
    mask = s > 2.0 / 3.0
    out[mask] = np.exp(-beta * s[mask] ** beta)
    return out if out.size > 1 else float(out[0])


@dataclass(frozen=True)
class _MacroImages:
    """Images of the three weighted macro basis functions under the velocity
    operators, one column per basis function."""

    dv: np.ndarray
    dv2: np.ndarray
    dv_vmul: np.ndarray
    vmul: np.ndarray


class HermiteBackend:
    """Velocity-space backend holding M+1 Hermite coefficients per function.

    Columns of (size, k) arrays are independent coefficient vectors; all
    operators are applied columnwise.
    """

    kind = "hermite"

    def __init__(self, n_modes: int, v0: float = 1.0, filter_beta: float = 36.0):
        if n_modes < 4:
            raise ValueError("need at least 5 Hermite modes (n_modes >= 4)")
        self.family = BasisFamily(HERMITE, v0)
        self.coeffs = self.family.macro_coefficients()
        self.n_modes = n_modes
        self.size = n_modes + 1
        self.v0 = v0
        self.weight_dot = 1.0

        m = np.arange(self.size, dtype=float)
        self._sq = np.sqrt(m)                       # sqrt(m)
        self._sq2 = np.sqrt(m * np.maximum(m - 1.0, 0.0))  # sqrt(m(m-1))
        self._filter = hou_li_sigma(m / self.size, filter_beta)

        basis = np.zeros((self.size, 3))
        basis[0, 0] = basis[1, 1] = basis[2, 2] = 1.0
        self.macro_basis = basis
        wp3 = np.zeros(self.size)
        wp3[3] = 1.0
        self.wp3 = wp3
        self.macro_images = _MacroImages(
            dv=self.dv(basis),
            dv2=self.dv2(basis),
            dv_vmul=self.dv_vmul(basis),
            vmul=self.vmul(basis),
        )
        self.boundary_values = None  # unbounded domain, no traces

    # --- inner products ---------------------------------------------------

    def inner_product_w(self, g: np.ndarray, h: np.ndarray) -> float:
        """<g, h> under the 1/w(v) weight: the coefficient dot product."""
        g = np.asarray(g, dtype=float)
        h = np.asarray(h, dtype=float)
        if g.shape != h.shape:
            raise ValueError("coefficient length mismatch")
        return float(g @ h)

    def gram(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Weighted inner products of all column pairs."""
        return A.T @ B

    # --- banded operators ---------------------------------------------------

    def dv(self, A: np.ndarray, traces=None) -> np.ndarray:
        out = np.zeros_like(A)
        out[1:] = -(self._sq[1:, None] / self.v0) * A[:-1]
        return out

    def dv2(self, A: np.ndarray, traces=None) -> np.ndarray:
        out = np.zeros_like(A)
        out[2:] = (self._sq2[2:, None] / self.v0**2) * A[:-2]
        return out

    def vmul(self, A: np.ndarray) -> np.ndarray:
        out = np.zeros_like(A)
        out[1:] = self._sq[1:, None] * A[:-1]
        out[:-1] += self._sq[1:, None] * A[1:]
        return self.v0 * out

    def dv_vmul(self, A: np.ndarray, traces=None) -> np.ndarray:
        m = np.arange(A.shape[0], dtype=float)
        out = -m[:, None] * A
        out[2:] -= self._sq2[2:, None] * A[:-2]
        return out

    # --- projections and filtering -----------------------------------------

    def project_micro(self, A: np.ndarray) -> np.ndarray:
        """Zero the three macro coefficients (orthogonal complement of Phi)."""
        out = np.array(A, dtype=float, copy=True)
        out[:3] = 0.0
        return out

    def project_phi_perp(self, g: np.ndarray) -> np.ndarray:
        return self.project_micro(g)

    def apply_mode_filter(self, A: np.ndarray) -> np.ndarray:
        """Hou-Li filter across modes; identity on the lowest two thirds."""
        return self.hou_li_filter(A)

    def hou_li_filter(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.ndim == 1:
            return g * self._filter
        return g * self._filter[:, None]

    # --- collisions ----------------------------------------------------------

    def collision_apply(self, g: np.ndarray, u: float, T: float, nu: float) -> np.ndarray:
        """Dougherty operator nu*(T dv2 + dv_vmul - u dv) in coefficient space."""
        g = np.asarray(g, dtype=float)
        col = g[:, None] if g.ndim == 1 else g
        out = nu * (T * self.dv2(col) + self.dv_vmul(col) - u * self.dv(col))
        return out[:, 0] if g.ndim == 1 else out

    # --- L-step advection bundle ---------------------------------------------

    def l_advection(self, L: np.ndarray, speeds: np.ndarray, drag: float,
                    traces=None) -> np.ndarray:
        """-sum_k d/dv(speeds[i,k] L_k) + drag * d/dv(v L_i), columnwise."""
        out = -self.dv(L) @ speeds.T
        if drag:
            out += drag * self.dv_vmul(L)
        return out

    # --- dense evaluation (diagnostics only) ----------------------------------

    def basis_on_grid(self, v: np.ndarray, n_max: int | None = None) -> np.ndarray:
        """Weighted Hermite functions w(v) He_n(v/v0) on a grid, (len(v), n_max+1).

        Recurrence on the weighted functions keeps the evaluation stable for
        large n."""
        if n_max is None:
            n_max = self.n_modes
        v = np.asarray(v, dtype=float)
        t = v / self.v0
        out = np.empty((v.size, n_max + 1))
        out[:, 0] = np.exp(-0.5 * t**2) / (self.v0 * math.sqrt(2.0 * math.pi))
        if n_max >= 1:
            out[:, 1] = t * out[:, 0]
        for n in range(1, n_max):
            out[:, n + 1] = (t * out[:, n] - math.sqrt(n) * out[:, n - 1]) / math.sqrt(n + 1.0)
        return out

    def eval_dense(self, A: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Evaluate coefficient columns on a velocity raster."""
        return self.basis_on_grid(v) @ A

    def completion_profiles(self, count: int) -> np.ndarray:
        """Deterministic micro-space candidates for rank completion: the
        lowest micro modes, so the spanned characteristic speeds stay small
        and the benchmark timesteps remain CFL-stable."""
        if count > self.size - 3:
            raise ValueError("not enough modes for the requested completion")
        out = np.zeros((self.size, count))
        for j in range(count):
            out[3 + j, j] = 1.0
        return out

    def default_raster(self, n: int = 512) -> np.ndarray:
        return np.linspace(-8.0 * self.v0, 8.0 * self.v0, n)
