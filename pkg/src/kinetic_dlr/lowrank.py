"""Low-rank factor state, weighted QR factorizations, and SVD initialization.

Both inner products in play (trapezoid in x, weighted midpoint / coefficient
dot in v) are scalar multiples of the Euclidean dot product, so a single
modified Gram-Schmidt routine with one reorthogonalization pass covers both
sides.  The augmented QR prepends the weighted macro basis so the velocity
factors stay exactly orthogonal to the conserved subspace, which is what
makes the moment bookkeeping exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class LowRankState:
    """Factors of the micro part g = X S V^T.

    X: (n_x, r) orthonormal under the trapezoid inner product;
    V: (n_v, r) orthonormal under the backend's weighted inner product and
    orthogonal to the macro basis; S: (r, r).
    """

    X: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return self.S.shape[0]


def _random_orthonormal_fill(n: int, dot_weight: float, basis_blocks, rng):
    """Draw a vector orthonormal to the columns of every block in
    basis_blocks (each (n, *) with orthonormal columns)."""
    for _ in range(20):
        v = rng.standard_normal(n)
        for _ in range(2):
            for blk in basis_blocks:
                if blk is not None and blk.shape[1]:
                    v -= blk @ (dot_weight * (blk.T @ v))
        norm = math.sqrt(dot_weight * (v @ v))
        if norm > 1e-8:
            return v / norm
    raise RuntimeError("failed to draw an independent completion vector")


def qr_weighted(A: np.ndarray, dot_weight: float, rng=None, prefix=None):
    """QR factorization under <a, b> = dot_weight * a.b.

    Returns (Q, R) with Q the orthonormalized columns of A relative to the
    optional already-orthonormal prefix block (whose content is projected out
    and not recorded) and R upper triangular with nonnegative diagonal.
    Rank-deficient columns are replaced by seeded random orthonormal fills and
    their R rows zeroed, which keeps downstream steps well posed when singular
    values vanish.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a column matrix")
    if rng is None:
        rng = np.random.default_rng(0)
    n, k = A.shape
    Q = np.zeros((n, k))
    R = np.zeros((k, k))
    col_norms = np.sqrt(dot_weight) * np.linalg.norm(A, axis=0)
    scale = float(np.max(col_norms)) if k else 0.0
    dropped = []
    for j in range(k):
        v = A[:, j].copy()
        for _ in range(2):
            if prefix is not None:
                v -= prefix @ (dot_weight * (prefix.T @ v))
            if j:
                c = dot_weight * (Q[:, :j].T @ v)
                R[:j, j] += c
                v -= Q[:, :j] @ c
        norm = math.sqrt(dot_weight * (v @ v))
        if norm <= 1e-12 * max(col_norms[j], scale):
            Q[:, j] = _random_orthonormal_fill(
                n, dot_weight, [prefix, Q[:, :j]], rng
            )
            dropped.append(j)
        else:
            Q[:, j] = v / norm
            R[j, j] = norm
    for j in dropped:
        R[j, :] = 0.0
    return Q, R


def augmented_qr(L: np.ndarray, backend, rng=None):
    """Orthonormalize L columns against [macro basis | L] and return the new
    velocity factors and core.

    The prepended macro basis is already orthonormal, so it passes through
    unchanged and the result is exactly orthogonal to the conserved subspace.
    With L holding the columns sum_j S_ij V_j, the trailing triangular factor
    transposed is the updated core: g = X S_new V_new^T.
    """
    V_new, R = qr_weighted(L, backend.weight_dot, rng=rng,
                           prefix=backend.macro_basis)
    return V_new, R.T


def _fourier_profile(xgrid, j: int) -> np.ndarray:
    """Deterministic completion sequence in x: 1, cos(k0 x), sin(k0 x), ..."""
    x = xgrid.points
    if j == 0:
        return np.ones_like(x)
    m = (j + 1) // 2
    k = 2.0 * math.pi * m / xgrid.length
    return np.cos(k * x) if j % 2 else np.sin(k * x)


def init_from_svd(g_dense: np.ndarray, r: int, xgrid, backend, rng=None) -> LowRankState:
    """Best rank-r factors of a dense (n_x, n_v) micro field under the
    weighted norms, via a plain SVD of the (uniformly weighted) samples.

    Missing directions (exactly macroscopic initial data has none at all) are
    completed deterministically with low Fourier modes in x and the lowest
    micro modes in v; low-mode completions keep the spanned characteristic
    speeds, and with them the stable timestep, at benchmark scale.
    """
    g_dense = np.asarray(g_dense, dtype=float)
    n_x, n_v = g_dense.shape
    if r > min(n_x, n_v) or r < 1:
        raise ValueError(f"rank {r} out of range for a {n_x}x{n_v} field")
    if rng is None:
        rng = np.random.default_rng(0)
    dx_w = xgrid.dx
    wv = backend.weight_dot
    uu, sv, wt = np.linalg.svd(g_dense, full_matrices=False)
    X = uu[:, :r] / math.sqrt(dx_w)
    V = wt[:r].T / math.sqrt(wv)
    sigma = sv[:r] * math.sqrt(dx_w * wv)
    cutoff = sv[0] * 1e-14 if sv.size else 0.0
    n_keep = int(np.sum(sv[:r] > cutoff))
    if n_keep < r:
        n_fill = r - n_keep
        x_cands = np.stack([_fourier_profile(xgrid, j) for j in range(r)], axis=1)
        v_cands = backend.project_micro(backend.completion_profiles(r))
        xq, _ = qr_weighted(np.hstack([X[:, :n_keep], x_cands]), dx_w, rng=rng)
        vq, _ = qr_weighted(np.hstack([V[:, :n_keep], v_cands]), wv, rng=rng,
                            prefix=backend.macro_basis)
        X[:, n_keep:] = xq[:, n_keep:n_keep + n_fill]
        V[:, n_keep:] = vq[:, n_keep:n_keep + n_fill]
        sigma[n_keep:] = 0.0
    # one cleanup pass so the orthogonality invariants hold to machine
    # precision even for sampled/projected inputs
    X, rx = qr_weighted(X, dx_w, rng=rng)
    V, rv = qr_weighted(V, wv, rng=rng, prefix=backend.macro_basis)
    S = rx @ np.diag(sigma) @ rv.T
    return LowRankState(X=X, S=S, V=V)


def reconstruct_g(state: LowRankState) -> np.ndarray:
    """Dense (n_x, n_v) evaluation of the factors; diagnostics only."""
    return state.X @ state.S @ state.V.T
