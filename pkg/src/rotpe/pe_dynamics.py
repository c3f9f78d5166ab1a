"""Rotating inviscid primitive equations: tendencies, RK4 stepping, monitors.

Two equivalent formulations are provided.  The (vbar, vtilde) form keeps the
Coriolis term explicit; the oscillatory form evolves ``u+ = e^{-i Omega t} P+ v``
so that rotation only enters through the phases of the nonlinear groups.  Time
stepping always uses the oscillatory form, which makes the step size
independent of Omega apart from resolving the oscillating products.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .gevrey_diagnostics import NormSpec, analytic_norm, estimate_radius, sobolev_norm
from .projections import (
    baroclinic,
    barotropic,
    divergence2d,
    embed,
    leray2d,
    norm_l2,
    p_plus,
    perp,
    vertical_antiderivative,
    vertical_integral_div,
)
from .spectral_core import (
    exponential_filter,
    get_grid,
    grid_of,
    hermitian_part,
    reflect,
    z_even,
)

log = logging.getLogger(__name__)

_AXES2 = (-2, -1)


class NumericalFailure(RuntimeError):
    """Non-finite values or broken invariants during a run."""


# states ----------------------------------------------------------------------

@dataclass(frozen=True)
class PEState:
    vbar: np.ndarray     # (2, N, N) barotropic coefficients
    vtilde: np.ndarray   # (2, N, N, N) baroclinic coefficients
    t: float = 0.0

    @property
    def N(self) -> int:
        return self.vtilde.shape[-1]

    def velocity(self) -> np.ndarray:
        return embed(self.vbar) + self.vtilde

    @classmethod
    def from_velocity(cls, v: np.ndarray, t: float = 0.0) -> "PEState":
        v = np.asarray(v, dtype=complex)
        vbar = barotropic(v)
        vbar[:, 0, 0] = 0.0
        return cls(vbar, baroclinic(v), t)

    @classmethod
    def zeros(cls, N: int, t: float = 0.0) -> "PEState":
        return cls(np.zeros((2, N, N), complex), np.zeros((2, N, N, N), complex), t)

    def invariant_residuals(self) -> dict[str, float]:
        scale = max(norm_l2(self.vbar) + norm_l2(self.vtilde), 1.0)
        return {
            "mean": float(np.max(np.abs(self.vbar[:, 0, 0]))) / scale,
            "divergence": float(np.max(np.abs(divergence2d(self.vbar)))) / scale,
            "vertical_mean": float(np.max(np.abs(self.vtilde[..., 0]))) / scale,
            "parity": float(np.max(np.abs(self.vtilde - z_even(self.vtilde)))) / scale,
        }


@dataclass(frozen=True)
class OscState:
    vbar: np.ndarray     # (2, N, N)
    uplus: np.ndarray    # (2, N, N, N) complex, range of P+
    t: float = 0.0
    omega: float = 0.0

    @property
    def N(self) -> int:
        return self.uplus.shape[-1]

    @classmethod
    def from_pe(cls, state: PEState, omega: float) -> "OscState":
        u = cmath.exp(-1j * omega * state.t) * p_plus(state.vtilde)
        return cls(state.vbar, u, state.t, omega)

    def rotated(self) -> np.ndarray:
        """u+ e^{i Omega t}, i.e. P+ applied to the baroclinic velocity."""
        return cmath.exp(1j * self.omega * self.t) * self.uplus

    def vtilde(self) -> np.ndarray:
        a = self.rotated()
        return a + np.conj(reflect(a))

    def to_pe(self) -> PEState:
        return PEState(self.vbar, self.vtilde(), self.t)

    def reality_residual(self) -> float:
        """Imaginary part of the reconstructed baroclinic velocity in physical space."""
        g = grid_of(self.uplus)
        a = g.ifft(self.rotated())
        vt = a + np.conj(a)
        scale = max(float(np.max(np.abs(vt))), 1e-300)
        return float(np.max(np.abs(vt.imag))) / scale


# shared kernels ---------------------------------------------------------------

def _phys2(g, vbar):
    """Barotropic velocity and its horizontal derivatives on the 2D grid."""
    vb = g.ifft2_real(vbar)
    d1 = g.ifft2_real(g.dh1 * vbar)
    d2 = g.ifft2_real(g.dh2 * vbar)
    return vb, d1, d2


def _finish_barotropic(c: np.ndarray) -> np.ndarray:
    c = np.array(c)
    c[:, 0, 0] = 0.0
    return leray2d(c, check=False)


def _finish_baroclinic(g, physical: np.ndarray) -> np.ndarray:
    c = g.dealias(g.fft(physical))
    c[..., 0] = 0.0
    return z_even(c)


def euler_tendency(vbar: np.ndarray, source: np.ndarray | None = None) -> np.ndarray:
    """-P_h(vbar . grad vbar + source) for a 2D field; source is physical and real."""
    g = get_grid(vbar.shape[-1])
    vb, d1, d2 = _phys2(g, vbar)
    adv = vb[0] * d1 + vb[1] * d2
    if source is not None:
        adv = adv + source
    return -_finish_barotropic(g.dealias2(g.fft2(adv)))


# (vbar, vtilde) formulation ----------------------------------------------------

def rhs_barotropic(vbar: np.ndarray, vtilde: np.ndarray, nonlinear: bool = True) -> np.ndarray:
    """-P_h(vbar.grad vbar) - P_h P0((div vt) vt + vt.grad vt)."""
    if not nonlinear:
        return np.zeros_like(vbar)
    g = grid_of(vtilde)
    vt = g.ifft_real(vtilde)
    d1t = g.ifft_real(g.d1 * vtilde)
    d2t = g.ifft_real(g.d2 * vtilde)
    div = d1t[0] + d2t[1]
    src = (vt[0] * d1t + vt[1] * d2t + div * vt).mean(axis=-1)
    return euler_tendency(vbar, src)


def rhs_baroclinic(vbar: np.ndarray, vtilde: np.ndarray, omega: float,
                   nonlinear: bool = True) -> np.ndarray:
    """Baroclinic tendency including the Coriolis term -Omega vt^perp."""
    lin = -omega * perp(vtilde)
    if not nonlinear:
        return lin
    g = grid_of(vtilde)
    vt = g.ifft_real(vtilde)
    d1t = g.ifft_real(g.d1 * vtilde)
    d2t = g.ifft_real(g.d2 * vtilde)
    dzt = g.ifft_real(g.d3 * vtilde)
    w_int = g.ifft_real(vertical_integral_div(vtilde, check=False))
    vb, d1b, d2b = _phys2(g, vbar)
    vb, d1b, d2b = vb[..., None], d1b[..., None], d2b[..., None]
    div = d1t[0] + d2t[1]
    adv_tt = vt[0] * d1t + vt[1] * d2t
    total = (adv_tt + vt[0] * d1b + vt[1] * d2b + vb[0] * d1t + vb[1] * d2t
             - w_int * dzt - (adv_tt + div * vt).mean(axis=-1, keepdims=True))
    return -_finish_baroclinic(g, total) + lin


# oscillatory formulation -------------------------------------------------------

def osc_groups(vbar: np.ndarray, uplus: np.ndarray) -> dict[str, np.ndarray]:
    """Physical-space nonlinear groups of the u+ equation and the barotropic source.

    Returns I1, I0, Im1, Im2 (multiplied by e^{i Omega t}, 1, e^{-i Omega t},
    e^{-2 i Omega t} in the u+ tendency) and B, the vertical average whose
    e^{2 i Omega t} multiple forces the barotropic mode.  u- is formed on the
    fly as the pointwise conjugate of u+.
    """
    g = grid_of(uplus)
    up = g.ifft(uplus)
    um = np.conj(up)
    d1u = g.ifft(g.d1 * uplus)
    d2u = g.ifft(g.d2 * uplus)
    dzu = g.ifft(g.d3 * uplus)
    divp = d1u[0] + d2u[1]
    divm = np.conj(divp)
    wp = g.ifft(vertical_integral_div(uplus, check=False))
    wm = np.conj(wp)
    vb, d1b, d2b = _phys2(g, vbar)
    # gradients of vbar + i vbar^perp
    d1c = (d1b + 1j * perp(d1b))[..., None]
    d2c = (d2b + 1j * perp(d2b))[..., None]
    vb = vb[..., None]

    adv_pp = up[0] * d1u + up[1] * d2u
    adv_mp = um[0] * d1u + um[1] * d2u
    B = (adv_pp + divp * up).mean(axis=-1)
    return {
        "I1": adv_pp - B[..., None] - wp * dzu,
        "I0": vb[0] * d1u + vb[1] * d2u + 0.5 * (up[0] * d1c + up[1] * d2c),
        "Im1": adv_mp - (adv_mp + divm * up).mean(axis=-1, keepdims=True) - wm * dzu,
        "Im2": 0.5 * (um[0] * d1c + um[1] * d2c),
        "B": B,
    }


def rhs_osc(state: OscState, nonlinear: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Tendencies (d vbar/dt, d u+/dt) of the oscillatory system at ``state.t``."""
    return _rhs_osc(state.t, state.vbar, state.uplus, state.omega, nonlinear)


def _rhs_osc(t, vbar, uplus, omega, nonlinear=True):
    # u+ lies in the range of P+, so u+ = alpha (1, i) and every group is a
    # multiple of (1, i) as well: only the first component is computed.
    # Then u+.grad = alpha (d1 + i d2), div u+ = (d1 + i d2) alpha, and
    # vbar + i vbar^perp = (vbar1 - i vbar2)(1, i).
    if not nonlinear:
        return np.zeros_like(vbar), np.zeros_like(uplus)
    g = grid_of(uplus)
    ah = uplus[0]
    dph = g.d1 * ah + 1j * (g.d2 * ah)
    a = g.ifft(ah)
    d1a = g.ifft(g.d1 * ah)
    d2a = g.ifft(g.d2 * ah)
    dza = g.ifft(g.d3 * ah)
    wp = g.ifft(vertical_antiderivative(dph))
    ac = np.conj(a)
    dp_a = d1a + 1j * d2a
    dm_a = d1a - 1j * d2a
    vb, d1b, d2b = _phys2(g, vbar)
    d1c = d1b[0] - 1j * d1b[1]
    d2c = d2b[0] - 1j * d2b[1]
    dp_c = (d1c + 1j * d2c)[..., None]
    dm_c = (d1c - 1j * d2c)[..., None]

    a_dpa = a * dp_a
    B0 = 2.0 * a_dpa.mean(axis=-1)
    am = ac * dm_a
    I1 = a_dpa - B0[..., None] - wp * dza
    I0 = vb[0][..., None] * d1a + vb[1][..., None] * d2a + 0.5 * a * dp_c
    Im1 = am - (am + np.conj(dp_a) * a).mean(axis=-1, keepdims=True) - np.conj(wp) * dza
    Im2 = 0.5 * ac * dm_c
    e1 = cmath.exp(1j * omega * t)
    em1 = e1.conjugate()
    du0 = _finish_baroclinic(g, -(e1 * I1 + I0 + em1 * Im1 + em1 * em1 * Im2))
    s0 = e1 * e1 * B0
    src = np.stack([2.0 * s0.real, -2.0 * s0.imag])
    return euler_tendency(vbar, src), np.stack([du0, 1j * du0])


def rhs_osc_reference(state: OscState) -> tuple[np.ndarray, np.ndarray]:
    """Same tendencies as :func:`rhs_osc`, assembled component-wise from :func:`osc_groups`."""
    g = grid_of(state.uplus)
    I = osc_groups(state.vbar, state.uplus)
    e1 = cmath.exp(1j * state.omega * state.t)
    em1 = e1.conjugate()
    du = -(e1 * I["I1"] + I["I0"] + em1 * I["Im1"] + em1 * em1 * I["Im2"])
    src = 2.0 * (e1 * e1 * I["B"]).real
    return euler_tendency(state.vbar, src), _finish_baroclinic(g, du)


def baroclinic_tendency_from_osc(state: OscState, duplus: np.ndarray) -> np.ndarray:
    """d vtilde/dt implied by d u+/dt: e^{i Omega t}(du+ + i Omega u+) + conjugate."""
    a = cmath.exp(1j * state.omega * state.t) * (duplus + 1j * state.omega * state.uplus)
    return a + np.conj(reflect(a))


# time stepping -------------------------------------------------------------------

def _axpy(y: Sequence[np.ndarray], a: float, k: Sequence[np.ndarray]) -> list[np.ndarray]:
    return [yi + a * ki for yi, ki in zip(y, k)]


def rk4(f: Callable, t: float, y: Sequence[np.ndarray], dt: float) -> list[np.ndarray]:
    """Classical four-stage Runge-Kutta step for a tuple of arrays."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, _axpy(y, 0.5 * dt, k1))
    k3 = f(t + 0.5 * dt, _axpy(y, 0.5 * dt, k2))
    k4 = f(t + dt, _axpy(y, dt, k3))
    return [yi + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)]


def enforce_barotropic(vbar: np.ndarray, filt: np.ndarray | None = None) -> np.ndarray:
    g = get_grid(vbar.shape[-1])
    c = g.dealias2(hermitian_part(vbar, _AXES2))
    if filt is not None:
        c = c * filt[..., 0]
    return _finish_barotropic(c)


def enforce_uplus(u: np.ndarray, filt: np.ndarray | None = None) -> np.ndarray:
    g = grid_of(u)
    c = g.dealias(u)
    if filt is not None:
        c = c * filt
    c[..., 0] = 0.0
    c = z_even(c)
    return 0.5 * (c + 1j * perp(c))


def enforce_baroclinic(vt: np.ndarray, filt: np.ndarray | None = None) -> np.ndarray:
    g = grid_of(vt)
    c = g.dealias(hermitian_part(vt))
    if filt is not None:
        c = c * filt
    c[..., 0] = 0.0
    return z_even(c)


def step_osc(state: OscState, dt: float, nonlinear: bool = True,
             filt: np.ndarray | None = None, t_new: float | None = None) -> OscState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    rhs = lambda t, y: _rhs_osc(t, y[0], y[1], state.omega, nonlinear)
    vbar, u = rk4(rhs, state.t, (state.vbar, state.uplus), dt)
    if not (np.all(np.isfinite(vbar)) and np.all(np.isfinite(u))):
        raise NumericalFailure(f"non-finite values after step from t={state.t}")
    t = state.t + dt if t_new is None else t_new
    return OscState(enforce_barotropic(vbar, filt), enforce_uplus(u, filt), t, state.omega)


def step(state: PEState, dt: float, omega: float = 0.0, nonlinear: bool = True,
         filt: np.ndarray | None = None) -> PEState:
    """One RK4 step of the PE system (through the oscillatory variables)."""
    return step_osc(OscState.from_pe(state, omega), dt, nonlinear, filt).to_pe()


def linear_rotation_solution(v0: PEState, omega: float, t: float) -> PEState:
    """Exact solution of the rotation-only system after elapsed time ``t``."""
    c, s = math.cos(omega * t), math.sin(omega * t)
    a, b = v0.vtilde
    return PEState(v0.vbar.copy(), np.stack([c * a + s * b, -s * a + c * b]), v0.t + t)


# blowup monitoring -------------------------------------------------------------------

@dataclass(frozen=True)
class BlowupThresholds:
    amplification: float = 100.0
    tail: float = 1e-3


@dataclass(frozen=True)
class MonitorStatus:
    amplification: float
    tail_fraction: float
    flagged: bool
    criterion: str | None = None


def gradient_sup(state: PEState) -> float:
    """max |d v1 / d x1| over the grid."""
    g = get_grid(state.N)
    col = g.ifft2_real(g.dh1 * state.vbar[0])[..., None]
    return float(np.max(np.abs(g.ifft_real(g.d1 * state.vtilde[0]) + col)))


def horizontal_gradient_sup(state: PEState) -> float:
    g = get_grid(state.N)
    v = state.velocity()
    return max(float(np.max(np.abs(g.ifft_real(d * v)))) for d in (g.d1, g.d2))


def tail_fraction(state: PEState) -> float:
    """Energy share of the outermost retained shell max|k_i| = floor(N/3)."""
    g = get_grid(state.N)
    e = np.abs(state.vtilde) ** 2
    e[..., 0] += np.abs(state.vbar) ** 2
    total = float(e.sum())
    if total == 0.0:
        return 0.0
    return float(e[:, g.kinf == g.K].sum()) / total


class BlowupMonitor:
    """Gradient-amplification and spectral-tail indicators relative to an initial state.

    The reference gradient is max|d1 v1| of the initial state; if that vanishes
    the full horizontal gradient is used instead so that the ratio stays finite.
    """

    def __init__(self, initial: PEState, thresholds: BlowupThresholds = BlowupThresholds()):
        self.thresholds = thresholds
        ref = gradient_sup(initial)
        if ref == 0.0:
            ref = horizontal_gradient_sup(initial)
        self.reference = ref

    def __call__(self, state: PEState) -> MonitorStatus:
        return blowup_monitor(state, self.thresholds, self.reference)


def blowup_monitor(state: PEState, thresholds: BlowupThresholds, reference: float) -> MonitorStatus:
    grad = gradient_sup(state)
    amp = grad / reference if reference > 0 else (math.inf if grad > 0 else 1.0)
    tail = tail_fraction(state)
    crit = None
    if amp >= thresholds.amplification:
        crit = "gradient"
    elif tail >= thresholds.tail:
        crit = "tail"
    return MonitorStatus(amp, tail, crit is not None, crit)


# integration driver ---------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    l2_bar: float
    l2_tilde: float
    hr_bar: float
    hr_tilde: float
    an_bar: float
    an_tilde: float
    tau_hat: float
    split_residual: float
    amplification: float = math.nan
    tail_fraction: float = math.nan
    err_bar: float = math.nan
    err_tilde: float = math.nan


RECORD_COLUMNS = tuple(DiagnosticRecord.__dataclass_fields__)


def diagnose(state: PEState, spec: NormSpec, status: MonitorStatus | None = None) -> DiagnosticRecord:
    """Norms of one state; the split residual cross-checks |v|^2 = |vbar|^2 + |vtilde|^2."""
    v = state.velocity()
    l2b, l2t = norm_l2(state.vbar), norm_l2(state.vtilde)
    total = norm_l2(v)
    split = abs(total**2 - l2b**2 - l2t**2) / max(total**2, 1e-300)
    try:
        tau_hat = estimate_radius(v).tau_hat
    except ValueError:
        tau_hat = math.nan
    return DiagnosticRecord(
        t=state.t, l2_bar=l2b, l2_tilde=l2t,
        hr_bar=sobolev_norm(state.vbar, spec.r, ndim=2), hr_tilde=sobolev_norm(state.vtilde, spec.r),
        an_bar=analytic_norm(state.vbar, spec, ndim=2), an_tilde=analytic_norm(state.vtilde, spec),
        tau_hat=tau_hat, split_residual=split,
        amplification=status.amplification if status else math.nan,
        tail_fraction=status.tail_fraction if status else math.nan,
    )


def auto_dt(state: PEState) -> float:
    """0.5 (1/N) / max(1, max |v|)."""
    g = get_grid(state.N)
    v = g.ifft_real(state.velocity())
    vmax = float(np.max(np.sqrt(v[0] ** 2 + v[1] ** 2)))
    return 0.5 / state.N / max(1.0, vmax)


@dataclass(frozen=True)
class Integration:
    """Settings for :func:`integrate`; ``dt=None`` selects :func:`auto_dt`."""

    omega: float = 0.0
    t_end: float = 1.0
    dt: float | None = None
    stride: int = 1
    nonlinear: bool = True
    filter: bool = False
    thresholds: BlowupThresholds | None = BlowupThresholds()
    norm: NormSpec = NormSpec(3.0, 0.1)
    keep_states: bool = True
    diagnostics: bool = True


@dataclass(frozen=True)
class BlowupEvent:
    t: float
    last_valid_t: float
    criterion: str
    amplification: float = math.nan
    tail_fraction: float = math.nan


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    blowup: BlowupEvent | None = None
    final: object = None
    dt: float = math.nan
    steps: int = 0

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.states]


def plan_steps(t_end: float, dt: float) -> tuple[int, float]:
    """Number of steps and the step size that lands exactly on t_end (never larger than dt)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = max(1, math.ceil(t_end / dt - 1e-9))
    return n, t_end / n


def integrate(settings: Integration, initial: PEState,
              on_output: Callable[[PEState], None] | None = None) -> Trajectory:
    """Advance ``initial`` to ``t_end`` (or until the blowup monitor fires)."""
    traj = Trajectory(final=initial)
    if settings.t_end <= 0:
        traj.states.append(initial)
        return traj
    dt0 = settings.dt if settings.dt is not None else auto_dt(initial)
    n, dt = plan_steps(settings.t_end, dt0)
    traj.dt = dt
    filt = exponential_filter(initial.N) if settings.filter else None
    monitor = BlowupMonitor(initial, settings.thresholds) if settings.thresholds else None

    def emit(state: PEState, status: MonitorStatus | None):
        if settings.keep_states:
            traj.states.append(state)
        if settings.diagnostics:
            traj.records.append(diagnose(state, settings.norm, status))
        if on_output is not None:
            on_output(state)

    emit(initial, monitor(initial) if monitor else None)
    osc = OscState.from_pe(initial, settings.omega)
    t0 = initial.t
    last_valid = initial
    for i in range(1, n + 1):
        try:
            osc = step_osc(osc, dt, settings.nonlinear, filt, t_new=t0 + i * dt)
        except NumericalFailure:
            traj.blowup = BlowupEvent(t0 + i * dt, last_valid.t, "non-finite")
            log.info("non-finite state at t=%.6g", t0 + i * dt)
            break
        state = osc.to_pe()
        status = monitor(state) if monitor else None
        traj.steps = i
        if status is not None and status.flagged:
            traj.blowup = BlowupEvent(state.t, last_valid.t, status.criterion,
                                      status.amplification, status.tail_fraction)
            log.info("blowup monitor fired at t=%.6g (%s)", state.t, status.criterion)
            emit(state, status)
            traj.final = state
            return traj
        last_valid = state
        if i % settings.stride == 0 or i == n:
            emit(state, status)
    traj.final = last_valid
    return traj
