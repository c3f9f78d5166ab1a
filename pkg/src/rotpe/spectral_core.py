"""Truncated Fourier representation on the unit torus.

Fields are stored as full complex coefficient arrays with the last three axes
indexed by FFT-ordered wavenumbers ``(k1, k2, k3)``.  The convention is

    f(x) = sum_k fhat_k exp(2 pi i k . x),

so the forward transform divides by ``N**3`` and ``fhat_0`` is the mean.
Leading axes (vector components) are carried along by every routine.
"""
from __future__ import annotations

import functools
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
import scipy.fft as sfft

SNAPSHOT_MAGIC = b"ROTPESPC"
_AXES3 = (-3, -2, -1)
_AXES2 = (-2, -1)


class WaveVector(NamedTuple):
    k1: int
    k2: int
    k3: int


def wavenumbers(N: int) -> np.ndarray:
    """Integer wavenumbers in FFT order: 0, 1, ..., N/2-1, -N/2, ..., -1."""
    return np.fft.fftfreq(N, d=1.0 / N).round().astype(np.int64)


def wave_vectors(N: int) -> Iterator[WaveVector]:
    """All wave vectors of an N-grid in lexicographic order (k in [-N/2, N/2))."""
    ks = range(-N // 2, N // 2)
    for a in ks:
        for b in ks:
            for c in ks:
                yield WaveVector(a, b, c)


def _check_N(N: int) -> None:
    if not isinstance(N, (int, np.integer)) or N <= 0 or N % 2:
        raise ValueError(f"grid size must be a positive even integer, got {N!r}")


class Grid:
    """Wavenumber tables, masks and transforms for one grid size.

    Instances are cached per ``N``; use :func:`get_grid`.
    """

    def __init__(self, N: int, workers: int = 1):
        _check_N(N)
        self.N = int(N)
        self.workers = workers
        k = wavenumbers(N)
        self.k1 = k[:, None, None]
        self.k2 = k[None, :, None]
        self.k3 = k[None, None, :]
        self.h1 = k[:, None]
        self.h2 = k[None, :]
        # Nyquist entries get a zero derivative multiplier so that real fields
        # stay real under differentiation.
        kd = np.where(k == -N // 2, 0, k)
        self.d1 = 2j * np.pi * kd[:, None, None]
        self.d2 = 2j * np.pi * kd[None, :, None]
        self.d3 = 2j * np.pi * kd[None, None, :]
        self.dh1 = 2j * np.pi * kd[:, None]
        self.dh2 = 2j * np.pi * kd[None, :]
        self.kz_nonyq = kd[None, None, :]
        kabs = np.abs(k)
        kinf3 = np.maximum(np.maximum(kabs[:, None, None], kabs[None, :, None]), kabs[None, None, :])
        kinf2 = np.maximum(kabs[:, None], kabs[None, :])
        self.kinf = kinf3
        self.kinf2 = kinf2
        # 2/3 rule: keep max|k_i| <= N/3
        self.mask = 3 * kinf3 <= N
        self.mask2 = 3 * kinf2 <= N
        self.K = N // 3
        self.kmag = np.sqrt(self.k1**2 + self.k2**2 + self.k3**2).astype(float)
        self.kmag2 = np.sqrt(self.h1**2 + self.h2**2).astype(float)
        self.hsq = (self.k1**2 + self.k2**2).astype(float)
        self.hsq2 = (self.h1**2 + self.h2**2).astype(float)
        self.x = np.arange(N) / N

    # transforms -------------------------------------------------------
    def fft(self, samples: np.ndarray) -> np.ndarray:
        return sfft.fftn(samples, axes=_AXES3, norm="forward", workers=self.workers)

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.ifftn(coeffs, axes=_AXES3, norm="forward", workers=self.workers)

    def ifft_real(self, coeffs: np.ndarray) -> np.ndarray:
        return self.ifft(coeffs).real

    def fft2(self, samples: np.ndarray) -> np.ndarray:
        return sfft.fftn(samples, axes=_AXES2, norm="forward", workers=self.workers)

    def ifft2(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.ifftn(coeffs, axes=_AXES2, norm="forward", workers=self.workers)

    def ifft2_real(self, coeffs: np.ndarray) -> np.ndarray:
        return self.ifft2(coeffs).real

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical grid points (x1, x2, z) as broadcastable arrays."""
        x = self.x
        return x[:, None, None], x[None, :, None], x[None, None, :]

    def dealias(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs * self.mask

    def dealias2(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs * self.mask2


@functools.lru_cache(maxsize=16)
def get_grid(N: int) -> Grid:
    return Grid(N)


def grid_of(coeffs: np.ndarray) -> Grid:
    return get_grid(coeffs.shape[-1])


# index reflections -----------------------------------------------------

def reflect(coeffs: np.ndarray, axes=_AXES3) -> np.ndarray:
    """Array whose entry at k is the input's entry at -k (modulo N)."""
    out = np.flip(coeffs, axis=axes)
    return np.roll(out, 1, axis=axes)


def reflect_z(coeffs: np.ndarray) -> np.ndarray:
    """Entry at (k', k3) taken from (k', -k3)."""
    return np.roll(np.flip(coeffs, axis=-1), 1, axis=-1)


def hermitian_part(coeffs: np.ndarray, axes=_AXES3) -> np.ndarray:
    """Closest coefficient array of a real field: (f_k + conj f_{-k}) / 2."""
    return 0.5 * (coeffs + np.conj(reflect(coeffs, axes)))


def hermitian_defect(coeffs: np.ndarray, axes=_AXES3) -> float:
    diff = coeffs - np.conj(reflect(coeffs, axes))
    scale = max(float(np.max(np.abs(coeffs), initial=0.0)), 1e-300)
    return float(np.max(np.abs(diff), initial=0.0)) / scale


def z_even(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs + reflect_z(coeffs))


def z_odd(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs - reflect_z(coeffs))


# public scalar API --------------------------------------------------------

@dataclass(frozen=True)
class SpectralScalar:
    """Real scalar field on the torus given by its Fourier coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise ValueError(f"expected an (N, N, N) coefficient array, got shape {c.shape}")
        _check_N(c.shape[0])
        object.__setattr__(self, "coeffs", c.astype(complex, copy=False))

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, k: tuple[int, int, int]) -> complex:
        N = self.N
        return complex(self.coeffs[k[0] % N, k[1] % N, k[2] % N])

    @classmethod
    def from_modes(cls, N: int, modes: dict[tuple[int, int, int], complex]) -> "SpectralScalar":
        """Build from a sparse {wave vector: amplitude} map (conjugates are not added)."""
        c = np.zeros((N, N, N), dtype=complex)
        for (a, b, d), amp in modes.items():
            c[a % N, b % N, d % N] = amp
        return cls(c)


def forward_transform(samples: np.ndarray) -> SpectralScalar:
    """Coefficients of real samples on the uniform N^3 grid."""
    s = np.asarray(samples)
    if s.ndim != 3 or len(set(s.shape)) != 1:
        raise ValueError(f"samples must be an (N, N, N) array, got shape {s.shape}")
    _check_N(s.shape[0])
    if np.iscomplexobj(s):
        raise ValueError("samples must be real")
    if not np.all(np.isfinite(s)):
        raise ValueError("samples contain non-finite values")
    g = get_grid(s.shape[0])
    return SpectralScalar(hermitian_part(g.fft(s.astype(float))))


def inverse_transform(f: SpectralScalar, tol: float = 1e-12) -> np.ndarray:
    """Real samples of ``f``; refuses coefficient arrays that are not Hermitian."""
    if hermitian_defect(f.coeffs) > tol:
        raise ValueError("coefficients violate Hermitian symmetry; field is not real")
    return get_grid(f.N).ifft_real(f.coeffs)


def derivative(f: SpectralScalar, axis: int) -> SpectralScalar:
    """Partial derivative along axis 1, 2 (horizontal) or 3 (vertical)."""
    g = get_grid(f.N)
    mult = {1: g.d1, 2: g.d2, 3: g.d3}.get(axis)
    if mult is None:
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
    return SpectralScalar(f.coeffs * mult)


def dealias(f: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(get_grid(f.N).dealias(f.coeffs))


def enforce_z_parity(f: SpectralScalar, parity: str) -> SpectralScalar:
    if parity == "even":
        return SpectralScalar(z_even(f.coeffs))
    if parity == "odd":
        return SpectralScalar(z_odd(f.coeffs))
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


def exponential_filter(N: int, alpha: float = 36.0, order: int = 36) -> np.ndarray:
    """Multiplier exp(-alpha (|k|_inf / K)^order), unity at k = 0."""
    g = get_grid(N)
    ratio = g.kinf / max(g.K, 1)
    return np.exp(-alpha * ratio**order)


# snapshots -------------------------------------------------------------

def _lexicographic(coeffs: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(coeffs, axes=_AXES3)


def write_snapshot(path: str | Path, components: np.ndarray, metadata: dict | None = None) -> None:
    """Write ``(C, N, N, N)`` coefficients plus a ``.json`` sidecar.

    Layout: 8-byte magic, int32 N, int32 component count, then little-endian
    float64 (re, im) pairs per component in lexicographic wave-vector order.
    """
    comps = np.asarray(components, dtype=complex)
    if comps.ndim == 3:
        comps = comps[None]
    C, N = comps.shape[0], comps.shape[-1]
    path = Path(path)
    body = np.empty(comps.shape + (2,), dtype="<f8")
    lex = _lexicographic(comps)
    body[..., 0] = lex.real
    body[..., 1] = lex.imag
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<ii", N, C))
        fh.write(body.tobytes(order="C"))
    meta = {"N": N, "components": C, "order": "lexicographic k1,k2,k3 in [-N/2, N/2)"}
    meta.update(metadata or {})
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def read_snapshot(path: str | Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a field snapshot")
    N, C = struct.unpack("<ii", raw[8:16])
    body = np.frombuffer(raw[16:], dtype="<f8")
    if body.size != C * N**3 * 2:
        raise ValueError(f"{path}: truncated snapshot")
    body = body.reshape(C, N, N, N, 2)
    lex = body[..., 0] + 1j * body[..., 1]
    comps = np.fft.ifftshift(lex, axes=_AXES3)
    sidecar = path.with_suffix(".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return comps, meta
