"""Projection calculus for horizontal velocity fields.

Array conventions (spectral coefficients, FFT order):

* horizontal velocity ``v``: shape ``(2, N, N, N)``
* barotropic field ``vbar``: shape ``(2, N, N)``, the ``k3 = 0`` plane
* baroclinic field: shape ``(2, N, N, N)`` with a zero ``k3 = 0`` plane
* complex velocity (``u+`` and friends): like a baroclinic field, but with no
  Hermitian constraint.
"""
from __future__ import annotations

import numpy as np

from .spectral_core import get_grid, grid_of, reflect, z_odd

TOL = 1e-12


def _scale(a: np.ndarray) -> float:
    return max(float(np.max(np.abs(a), initial=0.0)), 1.0)


def barotropic(v: np.ndarray) -> np.ndarray:
    """Vertical average: the ``k3 = 0`` coefficient plane."""
    return np.array(v[..., 0])


def embed(vbar: np.ndarray) -> np.ndarray:
    """Lift a plane of ``(N, N)`` coefficients to a z-independent 3D array."""
    N = vbar.shape[-1]
    out = np.zeros(vbar.shape + (N,), dtype=complex)
    out[..., 0] = vbar
    return out


def p_zero(v: np.ndarray) -> np.ndarray:
    """Vertical average kept on the 3D grid."""
    return embed(barotropic(v))


def baroclinic(v: np.ndarray) -> np.ndarray:
    out = np.array(v, dtype=complex)
    out[..., 0] = 0.0
    return out


def perp(phi: np.ndarray) -> np.ndarray:
    """(-phi2, phi1) on the leading component axis."""
    return np.stack([-phi[1], phi[0]])


def p_plus(v: np.ndarray) -> np.ndarray:
    vt = baroclinic(v)
    return 0.5 * (vt + 1j * perp(vt))


def p_minus(v: np.ndarray) -> np.ndarray:
    vt = baroclinic(v)
    return 0.5 * (vt - 1j * perp(vt))


def _leray(phi: np.ndarray, dk1, dk2, hsq) -> np.ndarray:
    kdot = dk1 * phi[0] + dk2 * phi[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        coef = np.where(hsq > 0, kdot / hsq, 0.0)
    return np.stack([phi[0] - coef * dk1, phi[1] - coef * dk2])


def leray2d(phi: np.ndarray, check: bool = True) -> np.ndarray:
    """Project a ``(2, N, N)`` coefficient pair onto divergence-free fields.

    Per mode ``k' != 0``: ``phi - (k'.phi) k' / |k'|^2``.  The mean mode must be
    zero on input and is left untouched.
    """
    if check and np.max(np.abs(phi[:, 0, 0])) > TOL * _scale(phi):
        raise ValueError("2D Leray projection needs a zero-mean input")
    g = get_grid(phi.shape[-1])
    return _leray(phi, g.h1, g.h2, g.hsq2)


def leray_h(phi: np.ndarray) -> np.ndarray:
    """Horizontal Leray projection applied at every height (3D arrays)."""
    g = grid_of(phi)
    return _leray(phi, g.k1, g.k2, g.hsq)


def divergence2d(vbar: np.ndarray) -> np.ndarray:
    g = get_grid(vbar.shape[-1])
    return g.dh1 * vbar[0] + g.dh2 * vbar[1]


def divergence(v: np.ndarray) -> np.ndarray:
    """Horizontal divergence of a 3D (possibly complex) velocity."""
    g = grid_of(v)
    return g.d1 * v[0] + g.d2 * v[1]


def vertical_antiderivative(d: np.ndarray) -> np.ndarray:
    """Coefficients of int_0^z d(x', s) ds for a scalar with no k3 = 0 content.

    Each mode j with j3 != 0 contributes d_j / (2 pi i j3) at (j', j3) and the
    negative of that at (j', 0); the k3 = 0 plane of ``d`` is ignored.
    """
    g = grid_of(d)
    kz = g.kz_nonyq
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(kz != 0, d / (2j * np.pi * kz), 0.0)
    w[..., 0] = -w.sum(axis=-1)
    return w


def vertical_integral_div(v: np.ndarray, check: bool = True) -> np.ndarray:
    """Coefficients of W(x', z) = int_0^z div v(x', s) ds for a field with no vertical mean."""
    if check and np.max(np.abs(v[..., 0])) > TOL * _scale(v):
        raise ValueError("vertical integral of divergence needs a zero k3 = 0 plane")
    return vertical_antiderivative(divergence(v))


def recover_w(v: np.ndarray, check: bool = True) -> np.ndarray:
    """Vertical velocity from incompressibility, w(z=0) = 0."""
    return z_odd(-vertical_integral_div(v, check=check))


def inner(f: np.ndarray, g: np.ndarray, ndim: int = 3) -> complex:
    """Bilinear pairing sum_i int f_i g_i dx evaluated in coefficient space.

    For real fields this is the usual L2 inner product; it carries no
    complex conjugation so that P+ and P- are mutually adjoint.
    """
    axes = tuple(range(-ndim, 0))
    return complex(np.sum(f * reflect(g, axes)))


def norm_l2(f: np.ndarray) -> float:
    """L2 norm on the unit torus, summed over components."""
    return float(np.sqrt(np.sum(np.abs(f) ** 2)))
