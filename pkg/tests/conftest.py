import math

import numpy as np
import pytest

from kinetic_dlr.lowrank import qr_weighted
from kinetic_dlr.spatial import XGrid
from kinetic_dlr.velocity_fd import FdBackend
from kinetic_dlr.velocity_hermite import HermiteBackend


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_backend(kind, n, **kw):
    if kind == "hermite":
        return HermiteBackend(n, **kw)
    return FdBackend(n, **kw)


def smooth_micro_basis(backend, r, rng):
    """Micro-orthonormal V columns with smooth, well-resolved profiles (no
    content near the spectral filter band or the grid scale)."""
    if backend.kind == "hermite":
        raw = rng.standard_normal((backend.size, r))
        m = np.arange(backend.size)
        raw *= np.exp(-0.5 * (m / 5.0) ** 2)[:, None]
        raw[backend.size // 2:] = 0.0
    else:
        v = backend.centers
        cols = [np.exp(-0.5 * v**2) * np.sin(0.7 * (j + 1) * v + 0.2 * j)
                for j in range(r)]
        raw = np.stack(cols, axis=1)
    V, _ = qr_weighted(backend.project_micro(raw), backend.weight_dot, rng=rng,
                       prefix=backend.macro_basis)
    return V


def random_micro_basis(backend, r, rng):
    """Random V with orthonormal columns orthogonal to the macro basis."""
    raw = rng.standard_normal((backend.size, r))
    if backend.kind == "fd":
        # taper toward the boundary so traces are naturally small
        raw *= np.exp(-0.5 * (backend.centers / (0.5 * backend.v_max)) ** 2)[:, None]
    V, _ = qr_weighted(backend.project_micro(raw), backend.weight_dot, rng=rng,
                       prefix=backend.macro_basis)
    return V


def smooth_x_basis(grid: XGrid, r, rng):
    x = grid.points
    k0 = 2.0 * math.pi / grid.length
    cols = [np.ones_like(x)]
    for m in range(1, r):
        cols.append(np.cos(((m + 1) // 2) * k0 * x + 0.3 * m) if m % 2
                    else np.sin(((m + 1) // 2) * k0 * x + 0.1 * m))
    X, _ = qr_weighted(np.stack(cols[:r], axis=1), grid.dx, rng=rng)
    return X
