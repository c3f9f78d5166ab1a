"""Seeded random fields and closed-form test flows.

Random fields are generated on a small ``(2c+1)^3`` block of modes and then
embedded, so the same seed and mode cap give the same field on every grid.
"""
from __future__ import annotations

import numpy as np

from .projections import leray2d
from .spectral_core import get_grid, hermitian_part, z_even


def _block_to_grid(block: np.ndarray, N: int, ndim: int) -> np.ndarray:
    cap = (block.shape[-1] - 1) // 2
    if 3 * cap > N:
        raise ValueError(f"mode cap {cap} does not fit the 2/3-truncated grid N={N}")
    lead = block.shape[:-ndim]
    out = np.zeros(lead + (N,) * ndim, dtype=complex)
    idx = np.arange(-cap, cap + 1) % N
    grids = np.ix_(*([idx] * ndim))
    out[(Ellipsis,) + grids] = block
    return out


def random_block(rng: np.random.Generator, cap: int, ncomp: int, ndim: int,
                 decay: float = 0.0) -> np.ndarray:
    """Unit-normal complex coefficients on |k_i| <= cap, optionally damped by exp(-decay |k|)."""
    shape = (ncomp,) + (2 * cap + 1,) * ndim
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if decay:
        k = np.arange(-cap, cap + 1)
        kk = np.meshgrid(*([k] * ndim), indexing="ij")
        c = c * np.exp(-decay * np.sqrt(sum(a**2 for a in kk)))
    return c


def random_scalar(N: int, cap: int, rng: np.random.Generator, even: bool = True,
                  decay: float = 0.0) -> np.ndarray:
    """Real, zero-mean scalar field (optionally even in z) with modes |k_i| <= cap."""
    c = _block_to_grid(random_block(rng, cap, 1, 3, decay), N, 3)[0]
    c = hermitian_part(c)
    if even:
        c = z_even(c)
    c[0, 0, 0] = 0.0
    return c


def random_velocity(N: int, cap: int, rng: np.random.Generator, even: bool = True,
                    decay: float = 0.0) -> np.ndarray:
    """Real, zero-mean horizontal velocity with modes |k_i| <= cap."""
    return np.stack([random_scalar(N, cap, rng, even, decay) for _ in range(2)])


def random_baroclinic(N: int, cap: int, rng: np.random.Generator, decay: float = 0.0) -> np.ndarray:
    v = random_velocity(N, cap, rng, True, decay)
    v[..., 0] = 0.0
    return v


def random_barotropic(N: int, cap: int, rng: np.random.Generator, decay: float = 0.0) -> np.ndarray:
    """Divergence-free, zero-mean 2D velocity with modes |k_i| <= cap."""
    c = _block_to_grid(random_block(rng, cap, 2, 2, decay), N, 2)
    c = hermitian_part(c, (-2, -1))
    c[:, 0, 0] = 0.0
    return leray2d(c)


def stream_velocity(psi: np.ndarray) -> np.ndarray:
    """2D velocity grad^perp psi = (-d2 psi, d1 psi) from stream-function coefficients."""
    g = get_grid(psi.shape[-1])
    return np.stack([-g.dh2 * psi, g.dh1 * psi])


def taylor_green(N: int, amplitude: float = 1.0) -> np.ndarray:
    """grad^perp [cos(2 pi x1) cos(2 pi x2)], a steady 2D Euler flow."""
    psi = np.zeros((N, N), dtype=complex)
    for a in (1, -1):
        for b in (1, -1):
            psi[a % N, b % N] = 0.25 * amplitude
    return stream_velocity(psi)
