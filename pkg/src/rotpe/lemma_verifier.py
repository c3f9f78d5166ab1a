"""Ensemble checks of the projection identities and the nonlinear estimates.

Identities are checked as relative residuals.  Inequalities are checked as
bounded ratios LHS / (right-hand side without its constant); nothing here
proves anything, the reports only show that the ratio stays finite and does
not drift with the grid.

Products are formed pseudo-spectrally without truncation.  Ensemble fields
live on modes ``|k_i| <= cap`` and the grid must satisfy ``N > 4 cap``, so
every product is computed exactly and the results do not depend on ``N``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import fields
from .gevrey_diagnostics import NormSpec, analytic_norm, multiplier, seminorm
from .projections import (
    barotropic,
    inner,
    leray_h,
    norm_l2,
    p_minus,
    p_plus,
    p_zero,
    vertical_integral_div,
)
from .spectral_core import get_grid, grid_of


@dataclass(frozen=True)
class EnsembleSpec:
    N: int = 16
    mode_cap: int = 3
    samples: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.N <= 4 * self.mode_cap:
            raise ValueError(f"grid N={self.N} too small for exact products with mode cap {self.mode_cap}")

    def sample_seed(self, i: int) -> list[int]:
        return [self.seed, i]

    def rng(self, i: int) -> np.random.Generator:
        return np.random.default_rng(self.sample_seed(i))


@dataclass
class IdentityReport:
    residuals: dict[str, float]
    samples: int

    def worst(self) -> float:
        return max(self.residuals.values())

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EstimateReport:
    lemma: str
    max_ratio: float
    samples: int
    worst_sample: int
    worst_seed: list[int]
    N: int
    r: float
    tau: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# identities ------------------------------------------------------------------------

def _rel(a: np.ndarray, b: np.ndarray, scale: float) -> float:
    return norm_l2(a - b) / max(scale, 1e-300)


def identity_residuals(v: np.ndarray, w: np.ndarray, spec: NormSpec) -> dict[str, float]:
    """Residuals of the projection identities for two horizontal velocities."""
    g = grid_of(v)
    nv, nw = norm_l2(v), norm_l2(w)
    zero = np.zeros_like(v)
    P0, Pp, Pm = p_zero, p_plus, p_minus
    out = {
        "decomposition": _rel(P0(v) + Pp(v) + Pm(v), v, nv),
        "P0P0=P0": _rel(P0(P0(v)), P0(v), nv),
        "P+P+=P+": _rel(Pp(Pp(v)), Pp(v), nv),
        "P-P-=P-": _rel(Pm(Pm(v)), Pm(v), nv),
        "P+P-=0": _rel(Pp(Pm(v)), zero, nv),
        "P-P+=0": _rel(Pm(Pp(v)), zero, nv),
        "P0P+=0": _rel(P0(Pp(v)), zero, nv),
        "P0P-=0": _rel(P0(Pm(v)), zero, nv),
        "P+P0=0": _rel(Pp(P0(v)), zero, nv),
        "P-P0=0": _rel(Pm(P0(v)), zero, nv),
    }
    s = max(nv * nw, 1e-300)
    out["<P0f,g>=<f,P0g>"] = abs(inner(P0(v), w) - inner(v, P0(w))) / s
    out["<P0f,g>=<P0f,P0g>"] = abs(inner(P0(v), w) - inner(P0(v), P0(w))) / s
    out["<P+f,g>=<f,P-g>"] = abs(inner(Pp(v), w) - inner(v, Pm(w))) / s
    out["<P-f,g>=<f,P+g>"] = abs(inner(Pm(v), w) - inner(v, Pp(w))) / s
    out["PhP0=P0Ph"] = _rel(leray_h(P0(v)), P0(leray_h(v)), nv)
    M = multiplier(g.N, spec.r, spec.tau)
    worst_d = worst_m = 0.0
    for P in (P0, Pp, Pm, leray_h):
        Pv = P(v)
        for d in (g.d1, g.d2, g.d3):
            worst_d = max(worst_d, _rel(P(d * v), d * Pv, norm_l2(d * v)))
        worst_m = max(worst_m, _rel(P(M * v), M * Pv, norm_l2(M * v)))
    out["derivative commutes"] = worst_d
    out["A^r e^(tau A) commutes"] = worst_m
    vbar, vt = barotropic(v), v.copy()
    vt[..., 0] = 0
    out["|v|^2 split"] = abs(nv**2 - norm_l2(vbar) ** 2 - norm_l2(vt) ** 2) / max(nv**2, 1e-300)
    full = analytic_norm(v, spec) ** 2
    out["analytic split"] = abs(full - analytic_norm(vbar, spec, ndim=2) ** 2
                                - analytic_norm(vt, spec) ** 2) / max(full, 1e-300)
    half = 0.5 * norm_l2(vt) ** 2
    half_an = 0.5 * analytic_norm(vt, spec) ** 2
    for name, u in (("u+", Pp(v)), ("u-", Pm(v))):
        out[f"|{name}|^2=|vt|^2/2"] = abs(norm_l2(u) ** 2 - half) / max(half, 1e-300)
        out[f"analytic |{name}|^2=|vt|^2/2"] = abs(analytic_norm(u, spec) ** 2 - half_an) / max(half_an, 1e-300)
    return out


def check_identities(ensemble: EnsembleSpec, spec: NormSpec = NormSpec(2.0, 0.1)) -> IdentityReport:
    worst: dict[str, float] = {}
    for i in range(ensemble.samples):
        rng = ensemble.rng(i)
        v = fields.random_velocity(ensemble.N, ensemble.mode_cap, rng)
        w = fields.random_velocity(ensemble.N, ensemble.mode_cap, rng)
        for k, val in identity_residuals(v, w, spec).items():
            worst[k] = max(worst.get(k, 0.0), val)
    return IdentityReport(worst, ensemble.samples)


# nonlinear terms ---------------------------------------------------------------

def _phys(c: np.ndarray) -> np.ndarray:
    return grid_of(c).ifft_real(c)


def _spec(x: np.ndarray) -> np.ndarray:
    return get_grid(x.shape[-1]).fft(x)


def advect(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Coefficients of (f . grad) g."""
    G = grid_of(g)
    fp = _phys(f)
    return _spec(fp[0] * _phys(G.d1 * g) + fp[1] * _phys(G.d2 * g))


def div_times(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Coefficients of (div f) g."""
    G = grid_of(g)
    return _spec(_phys(G.d1 * f[0] + G.d2 * f[1]) * _phys(g))


def w_dz(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Coefficients of (int_0^z div f ds) d_z g."""
    G = grid_of(g)
    return _spec(_phys(vertical_integral_div(f)) * _phys(G.d3 * g))


def _times(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _spec(_phys(a) * _phys(b))


def _pair(a: np.ndarray, b: np.ndarray) -> float:
    return inner(a, b).real


def _mean_abs(f: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(f[..., 0, 0, 0]) ** 2)))


Term = Callable[[np.ndarray, np.ndarray, np.ndarray, float, float], tuple[float, float]]


def banach_algebra(f, g, r, tau):
    spec = NormSpec(r, tau)
    lhs = analytic_norm(_times(f, g), spec)
    rhs = analytic_norm(f, spec) * analytic_norm(g, spec)
    return lhs, rhs


def estimate_transport(f, g, h, r, tau):
    M = multiplier(f.shape[-1], r, tau)
    S = lambda x, s: seminorm(x, s, tau)
    lhs = abs(_pair(M * advect(f, g), M * h))
    rhs = ((S(f, r) + _mean_abs(f)) * S(g, r + .5) * S(h, r + .5)
           + S(f, r + .5) * S(g, r) * S(h, r))
    return lhs, rhs


def estimate_divergence_product(f, g, h, r, tau):
    M = multiplier(f.shape[-1], r, tau)
    S = lambda x, s: seminorm(x, s, tau)
    lhs = abs(_pair(M * div_times(f, g), M * h))
    rhs = ((S(g, r) + _mean_abs(g)) * S(f, r + .5) * S(h, r + .5)
           + S(g, r + .5) * S(f, r) * S(h, r))
    return lhs, rhs


def estimate_vertical_transport(f, g, h, r, tau):
    M = multiplier(f.shape[-1], r, tau)
    S = lambda x, s: seminorm(x, s, tau)
    lhs = abs(_pair(M * w_dz(f, g), M * h))
    rhs = (S(f, r) * S(g, r + .5) * S(h, r + .5)
           + S(g, r) * S(f, r + .5) * S(h, r + .5)
           + S(h, r) * S(f, r + .5) * S(g, r + .5))
    return lhs, rhs


def _commutator_rhs(f, g, h, r, tau, fs=0.0, gs=0.0):
    """C||A^(r+fs) f|| ||A^(r+gs) g|| ||A^r h|| + tau-part, shifts for the W-type lemmas."""
    S0 = lambda x, s: seminorm(x, s, 0.0)
    S = lambda x, s: seminorm(x, s, tau)
    return (S0(f, r + fs) * S0(g, r + gs) * S0(h, r)
            + tau * S(f, r + .5 + fs) * S(g, r + .5 + gs) * S(h, r + .5))


def estimate_transport_commutator(f, g, h, r, tau):
    M = multiplier(f.shape[-1], r, tau)
    Mh = M * h
    lhs = abs(_pair(M * advect(f, g), Mh) - _pair(advect(f, M * g), Mh))
    return lhs, _commutator_rhs(f, g, h, r, tau)


def estimate_divergence_commutator(f, g, h, r, tau):
    M = multiplier(f.shape[-1], r, tau)
    Mh = M * h
    lhs = abs(_pair(M * div_times(f, g), Mh) - _pair(div_times(M * f, g), Mh))
    return lhs, _commutator_rhs(f, g, h, r, tau)


def estimate_vertical_commutator(f, g, h, r, tau):
    M = multiplier(f.shape[-1], r, tau)
    G = grid_of(g)
    Mh = M * h
    W = _phys(vertical_integral_div(f))
    second = _spec(W * _phys(M * (G.d3 * g)))
    lhs = abs(_pair(M * w_dz(f, g), Mh) - _pair(second, Mh))
    return lhs, _commutator_rhs(f, g, h, r, tau, fs=1.0)


def estimate_vertical_weight_commutator(f, g, h, r, tau):
    M = multiplier(f.shape[-1], r, tau)
    G = grid_of(g)
    Mh = M * h
    MW = _phys(M * vertical_integral_div(f))
    second = _spec(_phys(G.d3 * g) * MW)
    lhs = abs(_pair(M * w_dz(f, g), Mh) - _pair(second, Mh))
    # roles of f and g swap in the Sobolev part: ||A^(r+1) g|| ||A^r f|| ||A^r h||
    return lhs, _commutator_rhs(g, f, h, r, tau, fs=1.0)


def estimate_self_transport(f, g, h, r, tau):
    """Self-pairing estimate; ``h`` is unused (the pairing is with g itself)."""
    M = multiplier(f.shape[-1], r, tau)
    S0 = lambda x, s: seminorm(x, s, 0.0)
    S = lambda x, s: seminorm(x, s, tau)
    G = grid_of(f)
    lhs = abs(_pair(M * advect(f, g), M * g))
    div_sup = float(np.max(np.abs(_phys(G.d1 * f[0] + G.d2 * f[1]))))
    f_shift = 0.0 if r > 3 else 0.5
    rhs = (S0(f, r) * S0(g, r) ** 2 + div_sup * S(g, r) ** 2
           + tau * S(f, r + f_shift) * S(g, r + .5) ** 2)
    return lhs, rhs


ESTIMATES: dict[str, tuple[Term, float, bool]] = {
    # name: (function, minimum r (exclusive), needs zero vertical mean of f)
    "transport": (estimate_transport, 2.0, False),
    "divergence_product": (estimate_divergence_product, 2.0, False),
    "vertical_transport": (estimate_vertical_transport, 2.0, True),
    "transport_commutator": (estimate_transport_commutator, 2.5, False),
    "divergence_commutator": (estimate_divergence_commutator, 2.5, False),
    "vertical_commutator": (estimate_vertical_commutator, 2.5, True),
    "vertical_weight_commutator": (estimate_vertical_weight_commutator, 2.5, True),
    "self_transport": (estimate_self_transport, 2.5, False),
}


def ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


def _check_vertical_mean(f: np.ndarray) -> None:
    if np.max(np.abs(barotropic(f))) > 1e-12 * max(norm_l2(f), 1.0):
        raise ValueError("this estimate requires a field with zero vertical mean")


def estimate_ratio(kind: str, f: np.ndarray, g: np.ndarray, h: np.ndarray, r: float, tau: float) -> float:
    fn, rmin, zero_mean = ESTIMATES[kind]
    if r <= rmin:
        raise ValueError(f"{kind} needs r > {rmin}, got r={r}")
    if zero_mean:
        _check_vertical_mean(f)
    return ratio(*fn(f, g, h, r, tau))


def _ensemble_triple(ensemble: EnsembleSpec, i: int, zero_mean_f: bool):
    rng = ensemble.rng(i)
    N, cap = ensemble.N, ensemble.mode_cap
    f = fields.random_velocity(N, cap, rng)
    if zero_mean_f:
        f[..., 0] = 0.0
    g = fields.random_velocity(N, cap, rng)
    h = fields.random_velocity(N, cap, rng)
    return f, g, h


def _report(name: str, ratios: list[float], ensemble: EnsembleSpec, r: float, tau: float,
            notes: list[str]) -> EstimateReport:
    arr = np.asarray(ratios)
    i = int(np.argmax(arr))
    return EstimateReport(name, float(arr[i]), len(ratios), i, ensemble.sample_seed(i),
                          ensemble.N, r, tau, notes)


def check_nonlinear_estimate(kind: str, ensemble: EnsembleSpec, r: float, tau: float) -> EstimateReport:
    fn, rmin, zero_mean = ESTIMATES[kind]
    if r <= rmin:
        raise ValueError(f"{kind} needs r > {rmin}, got r={r}")
    ratios = [ratio(*fn(*_ensemble_triple(ensemble, i, zero_mean), r, tau))
              for i in range(ensemble.samples)]
    notes = []
    if kind in ("transport", "divergence_product"):
        notes.append("mean-zero ensemble: the |f_0| (|g_0|) branch of the bound is not exercised")
    if kind == "self_transport":
        notes.append("r > 3 branch" if r > 3 else "3 >= r > 5/2 branch")
    return _report(kind, ratios, ensemble, r, tau, notes)


def check_banach_algebra(ensemble: EnsembleSpec, r: float, tau: float) -> EstimateReport:
    if r <= 1.5:
        raise ValueError(f"Banach algebra property needs r > 3/2, got r={r}")
    ratios = []
    for i in range(ensemble.samples):
        rng = ensemble.rng(i)
        f = fields.random_scalar(ensemble.N, ensemble.mode_cap, rng)
        g = fields.random_scalar(ensemble.N, ensemble.mode_cap, rng)
        ratios.append(ratio(*banach_algebra(f, g, r, tau)))
    return _report("algebra", ratios, ensemble, r, tau, [])


DEFAULT_ORDERS = {
    "algebra": 2.0,
    "transport": 2.5, "divergence_product": 2.5, "vertical_transport": 2.5,
    "transport_commutator": 3.0, "divergence_commutator": 3.0,
    "vertical_commutator": 3.0, "vertical_weight_commutator": 3.0,
    "self_transport": 3.5,
}


def run_suite(ensemble: EnsembleSpec, tau: float = 0.05,
              orders: dict[str, float] | None = None) -> dict:
    """Identities plus every inequality; returns a JSON-ready dict."""
    orders = {**DEFAULT_ORDERS, **(orders or {})}
    ident = check_identities(ensemble)
    estimates = [check_banach_algebra(ensemble, orders["algebra"], tau)]
    for kind in ESTIMATES:
        estimates.append(check_nonlinear_estimate(kind, ensemble, orders[kind], tau))
    return {
        "ensemble": asdict(ensemble),
        "identities": ident.to_dict(),
        "estimates": [e.to_dict() for e in estimates],
    }


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
