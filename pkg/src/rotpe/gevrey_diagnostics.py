"""Sobolev and analytic (Gevrey-1) norms, spectral radius fits, lifespan schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp

from .spectral_core import get_grid


@dataclass(frozen=True)
class NormSpec:
    r: float
    tau: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if self.r < 0 or self.tau < 0:
            raise ValueError(f"need r >= 0 and tau >= 0, got r={self.r}, tau={self.tau}")
        if self.s != 1.0:
            raise ValueError("only Gevrey order s = 1 is supported")


@dataclass(frozen=True)
class RadiusEstimate:
    tau_hat: float
    fit_residual: float
    shells_used: int


def _kmag(f: np.ndarray, ndim: int) -> np.ndarray:
    g = get_grid(f.shape[-1])
    return g.kmag if ndim == 3 else g.kmag2


def log_weight(kmag: np.ndarray, r: float, tau: float) -> np.ndarray:
    """log(|k|^(2r) e^(2 tau |k|)), with |k|^0 = 1 and log 0 = -inf at k = 0."""
    with np.errstate(divide="ignore"):
        logk = np.log(kmag)
    if r == 0:
        lw = 2.0 * tau * kmag
    else:
        lw = 2.0 * r * logk + 2.0 * tau * kmag
    return lw


def multiplier(N: int, r: float, tau: float, ndim: int = 3) -> np.ndarray:
    """Fourier symbol of A^r e^(tau A) with A = (-Laplacian)^(1/2)."""
    g = get_grid(N)
    kmag = g.kmag if ndim == 3 else g.kmag2
    return np.exp(0.5 * log_weight(kmag, r, tau))


def _log_sum(f: np.ndarray, logw: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        terms = 2.0 * np.log(np.abs(f)) + logw
    if not np.any(np.isfinite(terms)):
        return -math.inf
    return float(logsumexp(terms[np.isfinite(terms)]))


def log_seminorm(f: np.ndarray, r: float, tau: float = 0.0, ndim: int = 3) -> float:
    """log ||A^r e^(tau A) f||, evaluated without forming the weights."""
    return 0.5 * _log_sum(f, log_weight(_kmag(f, ndim), r, tau))


def seminorm(f: np.ndarray, r: float, tau: float = 0.0, ndim: int = 3) -> float:
    return math.exp(log_seminorm(f, r, tau, ndim))


def log_analytic_norm(f: np.ndarray, spec: NormSpec, ndim: int = 3) -> float:
    lw = log_weight(_kmag(f, ndim), spec.r, spec.tau)
    lw = np.logaddexp(0.0, lw)
    return 0.5 * _log_sum(f, lw)


def analytic_norm(f: np.ndarray, spec: NormSpec, ndim: int = 3) -> float:
    """sqrt(sum (1 + |k|^(2r) e^(2 tau |k|)) |f_k|^2) over all components."""
    return math.exp(log_analytic_norm(f, spec, ndim))


def sobolev_norm(f: np.ndarray, r: float, ndim: int = 3) -> float:
    return analytic_norm(f, NormSpec(r, 0.0), ndim)


def sup_norm(samples: np.ndarray) -> float:
    return float(np.max(np.abs(samples), initial=0.0))


# radius of analyticity ---------------------------------------------------

def default_shell_range(N: int) -> tuple[float, float]:
    return N / 8, N / 3


def estimate_radius(f: np.ndarray, shell_range: tuple[float, float] | None = None,
                    ndim: int = 3) -> RadiusEstimate:
    """Decay rate of the shell-maximum spectrum.

    Shells are Euclidean ``|k|`` rounded to the nearest integer.  In every shell
    of the window the largest ``|f_k|`` (over modes and components) is paired
    with its own ``|k|``; the slope of ``-log max`` against ``|k|`` is the
    estimate.  Empty shells are skipped and negative slopes clamp to 0.
    """
    N = f.shape[-1]
    lo, hi = shell_range or default_shell_range(N)
    kmag = _kmag(f, ndim)
    amp = np.abs(f)
    if amp.ndim > ndim:
        amp = amp.reshape((-1,) + amp.shape[-ndim:]).max(axis=0)
    shell = np.rint(kmag).astype(int)
    flat_shell = shell.ravel()
    flat_amp = amp.ravel()
    flat_k = kmag.ravel()
    xs, ys = [], []
    for s in range(math.ceil(lo), math.floor(hi) + 1):
        sel = np.nonzero(flat_shell == s)[0]
        if sel.size == 0:
            continue
        i = sel[np.argmax(flat_amp[sel])]
        if flat_amp[i] <= 0:
            continue
        xs.append(flat_k[i])
        ys.append(-math.log(flat_amp[i]))
    if len(xs) < 3:
        raise ValueError(f"radius fit needs at least 3 populated shells in [{lo}, {hi}], found {len(xs)}")
    x = np.array(xs)
    y = np.array(ys)
    design = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return RadiusEstimate(max(float(coef[0]), 0.0), float(np.sqrt(np.mean(resid**2))), len(xs))


# predicted schedules ---------------------------------------------------------

def initial_size(vbar0: np.ndarray, vtilde0: np.ndarray, r: float, tau0: float) -> float:
    """M0 = ||e^(tau0 A) vbar0||^2_{H^r} + ||e^(tau0 A) vtilde0||^2_{H^r}."""
    spec = NormSpec(r, tau0)
    return analytic_norm(vbar0, spec, ndim=2) ** 2 + analytic_norm(vtilde0, spec) ** 2


def predicted_tau_local(tau0: float, M0: float, r: float, Cr: float, t: float) -> float:
    """Linearly shrinking radius tau0 - 2 t Cr (1 + M0); may go negative."""
    if Cr <= 0:
        raise ValueError("Cr must be positive")
    return tau0 - 2.0 * t * Cr * (1.0 + M0)


def log_K(t: float, C_M: float, C_r: float) -> float:
    """log K(t) for K(t) = C_M ** exp(C_r t)."""
    e = C_r * t
    if e > 700:
        return math.copysign(math.inf, math.log(C_M)) if C_M != 1 else 0.0
    return math.exp(e) * math.log(C_M)


def K(t: float, C_M: float, C_r: float) -> float:
    lk = log_K(t, C_M, C_r)
    return math.inf if lk > 709 else math.exp(lk)


def euler_growth_bound(M: float, C_r: float, t: float) -> float:
    """(M + e) ** exp(C_r t), the double-exponential barotropic growth bound."""
    return math.exp(math.exp(C_r * t) * math.log(M + math.e))


def baroclinic_envelope(norm0: float, C_M: float, C_r: float, t: float) -> float:
    """norm0 * exp(K(t)): triple-exponential envelope for the limit baroclinic mode."""
    k = K(t, C_M, C_r)
    if k > 709:
        return math.inf
    return norm0 * math.exp(k)


def _bisect(fun: Callable[[float], float], t_max: float = 1e3) -> float:
    """Root of an increasing function on [0, inf), bracket grown by doubling."""
    lo = 0.0
    f0 = fun(lo)
    if f0 >= 0:
        raise ValueError("no root in search bracket: condition already met at t = 0")
    if not math.isfinite(f0):
        lo = 1e-12
        if fun(lo) >= 0:
            return lo
    hi = 1.0
    while fun(hi) < 0:
        hi *= 2.0
        if hi > t_max:
            raise ValueError("no root in search bracket")
    return optimize.brentq(fun, lo, hi, xtol=1e-14, rtol=1e-13)


def _log_integral_expK(T: float, C_M: float, C_r: float) -> float:
    """log of int_0^T exp(K(s)) ds, normalised by exp(K(T)) to avoid overflow."""
    if T <= 0:
        return -math.inf
    kT = K(T, C_M, C_r)
    if not math.isfinite(kT):
        return math.inf
    val, _ = integrate.quad(lambda s: math.exp(K(s, C_M, C_r) - kT), 0.0, T,
                            epsabs=0.0, epsrel=1e-12, limit=200)
    return kT + math.log(val)


def predicted_lifespans(kind: str, **p: float) -> float:
    """Lifespan predictions.

    ``local``: tau0 / (1 + 2 Cr (1 + M0)).
    ``small-baroclinic``: T with int_0^T exp(K) ds = tau0 / (2 eps).
    ``fast-rotation``: T with C_tau0 exp(exp(K(T))) = |Omega0|.
    """
    if kind == "local":
        tau0, M0, Cr = p["tau0"], p.get("M0", 0.0), p.get("Cr", 1.0)
        if Cr <= 0:
            raise ValueError("Cr must be positive")
        return tau0 / (1.0 + 2.0 * Cr * (1.0 + M0))
    C_M, C_r = p.get("C_M", 2.0), p.get("C_r", 1.0)
    if C_M <= 0 or C_r <= 0:
        raise ValueError("C_M and C_r must be positive")
    if kind == "small-baroclinic":
        target = math.log(p["tau0"] / (2.0 * p["eps"]))
        return _bisect(lambda T: _log_integral_expK(T, C_M, C_r) - target)
    if kind == "fast-rotation":
        ratio = abs(p["Omega0"]) / p.get("C_tau0", 1.0)
        if ratio <= 1.0 or math.log(ratio) <= 0:
            raise ValueError("no root in search bracket: |Omega0| too small")
        target = math.log(math.log(ratio))  # log K(T) must reach this
        return _bisect(lambda T: log_K(T, C_M, C_r) - target)
    raise ValueError(f"unknown lifespan kind {kind!r}")
