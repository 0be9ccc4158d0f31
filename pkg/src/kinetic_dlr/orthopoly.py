"""Weighted orthogonal polynomial families and the scalar coefficients that
couple the macroscopic moment system to velocity space.

Two families are supported: normalized probabilists' Hermite polynomials with
a Gaussian weight of reference velocity v0 on the whole real line, and
Legendre polynomials scaled to a truncated domain [-v_max, v_max] with the
constant weight 1/v_max.  Both satisfy a symmetric three-term recurrence

    v p_n(v) = a_n p_{n+1}(v) + b_n p_n(v) + a_{n-1} p_{n-1}(v),

with b_n = 0, and the first three weighted polynomials span the collision
invariants (1, v, v^2/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITE = "hermite"
LEGENDRE = "legendre"


@dataclass(frozen=True)
class MacroCoefficients:
    """All scalar coefficients the three-moment macro system needs.

    a, b: first three recurrence coefficients (a also carries a_2, the
    closure coupling).  d10, d20, d21 expand p_1' and p_2' back into the
    basis.  c_matrix is the lower-triangular map from basis moments
    (f0, f1, f2) to (density, current, kinetic energy density).
    """

    a: np.ndarray
    b: np.ndarray
    d10: float
    d20: float
    d21: float
    c_matrix: np.ndarray

    def flux_matrix(self) -> np.ndarray:
        """Symmetric 3x3 advection matrix of the moment system."""
        a0, a1, _ = self.a
        b0, b1, b2 = self.b
        return np.array([[b0, a0, 0.0], [a0, b1, a1], [0.0, a1, b2]])

    def source_matrix(self) -> np.ndarray:
        """Matrix multiplying E*U in the moment sources (lower triangular)."""
        return np.array(
            [[0.0, 0.0, 0.0], [self.d10, 0.0, 0.0], [self.d20, self.d21, 0.0]]
        )


@dataclass(frozen=True)
class BasisFamily:
    """A weighted orthogonal polynomial family, immutable after construction.

    scale is v0 for Hermite and v_max for Legendre.
    """

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in (HERMITE, LEGENDRE):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    # --- recurrence -----------------------------------------------------

    def recurrence_coeffs(self, n: int) -> tuple[float, float]:
        """Return (a_n, b_n); b_n vanishes for both families."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if self.kind == HERMITE:
            return self.scale * math.sqrt(n + 1.0), 0.0
        return self.scale * (n + 1.0) / math.sqrt((2 * n + 1.0) * (2 * n + 3.0)), 0.0

    def weight(self, v):
        """Weight function w(v) of the family."""
        v = np.asarray(v, dtype=float)
        if self.kind == HERMITE:
            return np.exp(-0.5 * (v / self.scale) ** 2) / (
                self.scale * math.sqrt(2.0 * math.pi)
            )
        return np.full_like(v, 1.0 / self.scale)

    def eval_pn(self, n: int, v):
        """Orthonormal polynomial p_n at v; closed forms through degree 3,
        upward recurrence beyond."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        v = np.asarray(v, dtype=float)
        t = v / self.scale
        if self.kind == HERMITE:
            low = [
                np.ones_like(t),
                t,
                (t**2 - 1.0) / math.sqrt(2.0),
                (t**3 - 3.0 * t) / math.sqrt(6.0),
            ]
        else:
            low = [
                np.full_like(t, math.sqrt(0.5)),
                math.sqrt(1.5) * t,
                math.sqrt(5.0 / 8.0) * (3.0 * t**2 - 1.0),
                math.sqrt(7.0 / 8.0) * (5.0 * t**3 - 3.0 * t),
            ]
        if n <= 3:
            return low[n]
        p_prev, p_cur = low[2], low[3]
        for m in range(3, n):
            a_m, _ = self.recurrence_coeffs(m)
            a_prev, _ = self.recurrence_coeffs(m - 1)
            p_next = (v * p_cur - a_prev * p_prev) / a_m
            p_prev, p_cur = p_cur, p_next
        return p_cur

    # --- coupling coefficients ------------------------------------------

    def c_matrix(self) -> np.ndarray:
        """Lower-triangular C with (1, v, v^2/2)^T = C (p_0, p_1, p_2)^T."""
        s = self.scale
        if self.kind == HERMITE:
            return np.array(
                [
                    [1.0, 0.0, 0.0],
                    [0.0, s, 0.0],
                    [0.5 * s**2, 0.0, s**2 / math.sqrt(2.0)],
                ]
            )
        # constant part of v^2/2 is (v_max^2/6)*1 = (v_max^2/6)*sqrt(2)*p_0
        return np.array(
            [
                [math.sqrt(2.0), 0.0, 0.0],
                [0.0, math.sqrt(2.0 / 3.0) * s, 0.0],
                [math.sqrt(2.0) * s**2 / 6.0, 0.0, math.sqrt(8.0 / 5.0) * s**2 / 6.0],
            ]
        )

    def derivative_coeffs(self) -> tuple[float, float, float]:
        """(d10, d20, d21) with p_1' = d10 p_0 and p_2' = d20 p_0 + d21 p_1."""
        s = self.scale
        if self.kind == HERMITE:
            return 1.0 / s, 0.0, math.sqrt(2.0) / s
        return math.sqrt(3.0) / s, 0.0, math.sqrt(15.0) / s

    def macro_coefficients(self) -> MacroCoefficients:
        a = np.array([self.recurrence_coeffs(n)[0] for n in range(3)])
        b = np.array([self.recurrence_coeffs(n)[1] for n in range(3)])
        d10, d20, d21 = self.derivative_coeffs()
        return MacroCoefficients(a=a, b=b, d10=d10, d20=d20, d21=d21,
                                 c_matrix=self.c_matrix())


def moments_to_conserved(coeffs: MacroCoefficients, U: np.ndarray) -> np.ndarray:
    """Map basis moments U = (f0, f1, f2) to (density, current, kinetic
    energy density), pointwise over the trailing axes."""
    U = np.asarray(U, dtype=float)
    return np.tensordot(coeffs.c_matrix, U, axes=(1, 0))


def conserved_to_uT(coeffs: MacroCoefficients, U: np.ndarray):
    """Return (rho, u, T) from basis moments.

    Raises on nonpositive density.  A nonpositive temperature is possible for
    pathological inputs and is returned unclamped; the collision operator
    stays algebraically well defined.
    """
    C = coeffs.c_matrix
    U = np.asarray(U, dtype=float)
    rho = C[0, 0] * U[0]
    if np.any(rho <= 0.0):
        raise ValueError("degenerate density: rho = c00*f0 must be positive")
    u = (C[1, 0] * U[0] + C[1, 1] * U[1]) / rho
    T = 2.0 * (C[2, 0] * U[0] + C[2, 1] * U[1] + C[2, 2] * U[2]) / rho - u**2
    return rho, u, T
