import math

import numpy as np
import pytest

from conftest import make_backend, random_micro_basis
from kinetic_dlr.lowrank import (
    LowRankState,
    augmented_qr,
    init_from_svd,
    qr_weighted,
    reconstruct_g,
)
from kinetic_dlr.spatial import XGrid


def test_qr_orthonormal_input_passthrough(rng):
    grid = XGrid(2 * math.pi, 64)
    A, _ = qr_weighted(rng.standard_normal((64, 4)), grid.dx, rng=rng)
    Q, R = qr_weighted(A, grid.dx, rng=rng)
    assert np.max(np.abs(Q - A)) < 1e-13
    assert np.max(np.abs(R - np.eye(4))) < 1e-13


def test_qr_factorization_and_gram(rng):
    grid = XGrid(2 * math.pi, 64)
    A = rng.standard_normal((64, 6))
    Q, R = qr_weighted(A, grid.dx, rng=rng)
    assert np.max(np.abs(Q @ R - A)) < 1e-12
    assert np.max(np.abs(grid.dx * (Q.T @ Q) - np.eye(6))) < 1e-12
    assert np.all(np.diag(R) >= 0)
    assert np.max(np.abs(np.tril(R, -1))) == 0.0


def test_qr_against_dense_oracle(rng):
    # reorthogonalized Gram-Schmidt on the sqrt-weight-scaled columns
    grid = XGrid(2 * math.pi, 64)
    A = rng.standard_normal((64, 6))
    Q, R = qr_weighted(A, grid.dx, rng=rng)
    qs, rs = np.linalg.qr(math.sqrt(grid.dx) * A)
    signs = np.sign(np.diag(rs))
    qs, rs = qs * signs, signs[:, None] * rs
    assert np.max(np.abs(R - rs)) < 1e-10
    assert np.max(np.abs(Q - qs / math.sqrt(grid.dx))) < 1e-10


def test_qr_rank_deficiency_fallback(rng):
    grid = XGrid(2 * math.pi, 32)
    base = rng.standard_normal(32)
    A = np.stack([base, 2.0 * base, rng.standard_normal(32)], axis=1)
    Q, R = qr_weighted(A, grid.dx, rng=rng)
    assert np.max(np.abs(grid.dx * (Q.T @ Q) - np.eye(3))) < 1e-12
    assert R[1, 1] == 0.0
    assert np.all(R[1, :] == 0.0)  # dropped rows are zeroed


@pytest.mark.parametrize("kind", ["hermite", "fd"])
def test_augmented_qr_micro_passthrough(kind, rng):
    be = make_backend(kind, 32)
    V = random_micro_basis(be, 4, rng)
    V_new, S_new = augmented_qr(V, be, rng=rng)
    assert np.max(np.abs(V_new - V)) < 1e-12
    assert np.max(np.abs(S_new - np.eye(4))) < 1e-12


@pytest.mark.parametrize("kind", ["hermite", "fd"])
def test_augmented_qr_scrubs_macro_content(kind, rng):
    be = make_backend(kind, 32)
    L = be.macro_basis[:, 1][:, None].copy()  # pure macro content, r = 1
    V_new, S_new = augmented_qr(L, be, rng=rng)
    assert np.max(np.abs(S_new)) < 1e-12
    assert np.max(np.abs(be.gram(be.macro_basis, V_new))) < 1e-12


@pytest.mark.parametrize("kind", ["hermite", "fd"])
def test_augmented_qr_projection_identity(kind, rng):
    # V_new S_new^T reconstructs exactly the micro projection of L
    be = make_backend(kind, 48)
    L = rng.standard_normal((be.size, 3))
    L += be.macro_basis @ rng.standard_normal((3, 3))  # inject macro content
    V_new, S_new = augmented_qr(L, be, rng=rng)
    assert np.max(np.abs(V_new @ S_new.T - be.project_micro(L))) < 1e-12
    assert np.max(np.abs(be.gram(be.macro_basis, V_new))) < 1e-12
    assert np.max(np.abs(be.gram(V_new, V_new) - np.eye(3))) < 1e-12


@pytest.mark.parametrize("kind", ["hermite", "fd"])
def test_init_from_svd_zero_field(kind, rng):
    grid = XGrid(2 * math.pi, 32)
    be = make_backend(kind, 32)
    state = init_from_svd(np.zeros((32, be.size)), 4, grid, be, rng=rng)
    assert np.all(state.S == 0.0)
    assert np.max(np.abs(grid.dx * (state.X.T @ state.X) - np.eye(4))) < 1e-12
    assert np.max(np.abs(be.gram(state.V, state.V) - np.eye(4))) < 1e-12
    assert np.max(np.abs(be.gram(be.macro_basis, state.V))) < 1e-12


@pytest.mark.parametrize("kind", ["hermite", "fd"])
def test_init_from_svd_exact_rank(kind, rng):
    grid = XGrid(2 * math.pi, 32)
    be = make_backend(kind, 32)
    u = random_micro_basis(be, 2, rng)
    xs = rng.standard_normal((32, 2))
    g = xs @ u.T  # exact rank 2, micro by construction
    state = init_from_svd(g, 6, grid, be, rng=rng)
    scale = np.max(np.abs(g))
    assert np.max(np.abs(reconstruct_g(state) - g)) < 1e-12 * scale
    sv = np.linalg.svd(state.S, compute_uv=False)
    assert np.max(sv[2:]) < 1e-12 * scale


@pytest.mark.parametrize("kind", ["hermite", "fd"])
def test_init_from_svd_eckart_young(kind, rng):
    grid = XGrid(2 * math.pi, 32)
    be = make_backend(kind, 32)
    g = be.project_micro(rng.standard_normal((be.size, 32))).T
    r = 8
    state = init_from_svd(g, r, grid, be, rng=rng)
    err = g - reconstruct_g(state)
    # weighted spectral norm of the residual equals the (r+1)-th weighted
    # singular value (dense SVD oracle)
    scale = math.sqrt(grid.dx * be.weight_dot)
    sv = np.linalg.svd(scale * g, compute_uv=False)
    assert np.linalg.norm(scale * err, 2) == pytest.approx(sv[r], rel=1e-10)


def test_init_from_svd_rank_errors(rng):
    grid = XGrid(2 * math.pi, 16)
    be = make_backend("hermite", 16)
    with pytest.raises(ValueError):
        init_from_svd(np.zeros((16, be.size)), 17, grid, be, rng=rng)


def test_reconstruct_roundtrip(rng):
    grid = XGrid(2 * math.pi, 24)
    be = make_backend("hermite", 24)
    state = init_from_svd(np.zeros((24, be.size)), 3, grid, be, rng=rng)
    assert np.all(reconstruct_g(state) == 0.0)
    x1 = state.X[:, :1]
    v1 = state.V[:, :1]
    rank1 = LowRankState(x1, np.array([[2.0]]), v1)
    assert np.allclose(reconstruct_g(rank1), 2.0 * np.outer(x1, v1))
