"""Fast-rotation limit: 2D Euler for Vbar, transport with stretching for Vtilde.

    d/dt Vbar + P_h(Vbar . grad Vbar) = 0
    d/dt Vtilde + Vbar . grad Vtilde + (1/2) Vtilde^perp (curl Vbar) = 0

The barotropic tendency reuses the kernel of the full system so that runs of
the two solvers can be compared without discretization mismatch.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pe_dynamics import (
    Integration,
    NumericalFailure,
    PEState,
    Trajectory,
    _finish_baroclinic,
    _phys2,
    auto_dt,
    diagnose,
    enforce_barotropic,
    enforce_baroclinic,
    euler_tendency,
    plan_steps,
    rk4,
)
from .projections import norm_l2, p_plus, perp
from .spectral_core import exponential_filter, get_grid, grid_of


@dataclass(frozen=True)
class LimitState:
    Vbar: np.ndarray     # (2, N, N)
    Vtilde: np.ndarray   # (2, N, N, N), zero k3 = 0 plane
    t: float = 0.0

    @property
    def N(self) -> int:
        return self.Vtilde.shape[-1]

    def as_pe(self) -> PEState:
        return PEState(self.Vbar, self.Vtilde, self.t)

    @classmethod
    def from_pe(cls, state: PEState) -> "LimitState":
        return cls(state.vbar, state.vtilde, state.t)


def rhs_euler2d(Vbar: np.ndarray) -> np.ndarray:
    """-P_h(Vbar . grad Vbar)."""
    return euler_tendency(Vbar)


def vorticity(Vbar: np.ndarray) -> np.ndarray:
    """curl Vbar = d1 V2 - d2 V1 (coefficients)."""
    g = get_grid(Vbar.shape[-1])
    return g.dh1 * Vbar[1] - g.dh2 * Vbar[0]


def rhs_limit_baroclinic(Vbar: np.ndarray, Vtilde: np.ndarray) -> np.ndarray:
    """-Vbar . grad Vtilde - (1/2) Vtilde^perp curl Vbar."""
    g = grid_of(Vtilde)
    vt = g.ifft_real(Vtilde)
    d1t = g.ifft_real(g.d1 * Vtilde)
    d2t = g.ifft_real(g.d2 * Vtilde)
    vb, _, _ = _phys2(g, Vbar)
    om = g.ifft2_real(vorticity(Vbar))[..., None]
    vb = vb[..., None]
    total = vb[0] * d1t + vb[1] * d2t + 0.5 * om * perp(vt)
    return -_finish_baroclinic(g, total)


def u_views(Vtilde: np.ndarray) -> np.ndarray:
    """U+ = (Vtilde + i Vtilde^perp) / 2; U- is its conjugate field."""
    return p_plus(Vtilde)


def step_limit(state: LimitState, dt: float, evolve_tilde: bool = True,
               filt: np.ndarray | None = None, t_new: float | None = None) -> LimitState:
    if evolve_tilde:
        f = lambda t, y: [rhs_euler2d(y[0]), rhs_limit_baroclinic(y[0], y[1])]
        Vbar, Vt = rk4(f, state.t, (state.Vbar, state.Vtilde), dt)
    else:
        (Vbar,) = rk4(lambda t, y: [rhs_euler2d(y[0])], state.t, (state.Vbar,), dt)
        Vt = state.Vtilde
    if not (np.all(np.isfinite(Vbar)) and np.all(np.isfinite(Vt))):
        raise NumericalFailure(f"non-finite values after step from t={state.t}")
    t = state.t + dt if t_new is None else t_new
    return LimitState(enforce_barotropic(Vbar, filt), enforce_baroclinic(Vt, filt), t)


def integrate_limit(settings: Integration, initial: LimitState, evolve_tilde: bool = True,
                    on_output: Callable[[LimitState], None] | None = None) -> Trajectory:
    """RK4 run of the limit system with the conventions of the full solver.

    ``settings.omega`` is ignored.  With ``evolve_tilde=False`` only the 2D
    Euler part is advanced.
    """
    traj = Trajectory(final=initial)
    if settings.t_end <= 0:
        traj.states.append(initial)
        return traj
    dt0 = settings.dt if settings.dt is not None else auto_dt(initial.as_pe())
    n, dt = plan_steps(settings.t_end, dt0)
    traj.dt = dt
    filt = exponential_filter(initial.N) if settings.filter else None

    def emit(state: LimitState):
        if settings.keep_states:
            traj.states.append(state)
        if settings.diagnostics:
            traj.records.append(diagnose(state.as_pe(), settings.norm))
        if on_output is not None:
            on_output(state)

    emit(initial)
    state = initial
    for i in range(1, n + 1):
        state = step_limit(state, dt, evolve_tilde, filt, t_new=initial.t + i * dt)
        traj.steps = i
        if i % settings.stride == 0 or i == n:
            emit(state)
    traj.final = state
    return traj


def enstrophy(Vbar: np.ndarray) -> float:
    return norm_l2(vorticity(Vbar)) ** 2
