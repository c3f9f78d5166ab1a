"""Initial data and multi-run experiments."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate as quad_

from .. import fields
from ..gevrey_diagnostics import NormSpec, analytic_norm, sobolev_norm
from ..pe_dynamics import Integration, PEState, Trajectory, auto_dt, integrate, linear_rotation_solution
from ..projections import embed
from ..resonant_limit import LimitState, integrate_limit
from ..spectral_core import get_grid, hermitian_part, z_even


def max_speed(v: np.ndarray) -> float:
    """max |v| in physical space for 2D or 3D horizontal velocity coefficients."""
    g = get_grid(v.shape[-1])
    phys = g.ifft2_real(v) if v.ndim == 3 else g.ifft_real(v)
    return float(np.max(np.sqrt(phys[0] ** 2 + phys[1] ** 2)))


def _normalized(v: np.ndarray, target: float) -> np.ndarray:
    s = max_speed(v)
    return v * (target / s) if s > 0 else v


def base_flow(N: int, seed: int, amplitude: float = 1.0, cap: int = 3, decay: float = 0.5) -> np.ndarray:
    """Smooth divergence-free barotropic flow with max speed ``amplitude``."""
    rng = np.random.default_rng([seed, 1])
    return _normalized(fields.random_barotropic(N, cap, rng, decay), amplitude)


def random_state(N: int, seed: int, cap: int = 4, decay: float = 0.5, amplitude: float = 1.0,
                 tilde_fraction: float = 0.5) -> PEState:
    """Barotropic plus baroclinic random data; the whole field has max speed ``amplitude``."""
    rng = np.random.default_rng([seed, 0])
    vbar = _normalized(fields.random_barotropic(N, cap, rng, decay), 1.0)
    vt = _normalized(fields.random_baroclinic(N, cap, rng, decay), tilde_fraction)
    v = embed(vbar) + vt
    return PEState.from_velocity(_normalized(v, amplitude))


# channel profile --------------------------------------------------------------------

def channel_profile(s):
    """-s^2 + 1/3 on the channel depth s in [0, 1]; zero vertical mean."""
    return -np.asarray(s) ** 2 + 1.0 / 3.0


def profile_cosine_coefficients(kmax: int) -> np.ndarray:
    """a_k = 2 int_0^1 g(s) cos(pi k s) ds for k = 0..kmax by adaptive quadrature."""
    out = np.zeros(kmax + 1)
    for k in range(kmax + 1):
        w = 1.0 if k == 0 else 2.0
        if k == 0:
            val = quad_.quad(channel_profile, 0.0, 1.0)[0]
        else:
            val = quad_.quad(channel_profile, 0.0, 1.0, weight="cos", wvar=math.pi * k)[0]
        out[k] = w * val
    return out


def profile_truncation_error(kmax: int) -> float:
    """L2(0,1) distance between the profile and its cosine series cut at kmax."""
    a = profile_cosine_coefficients(kmax)

    def diff2(s):
        series = sum(a[k] * math.cos(math.pi * k * s) for k in range(kmax + 1))
        return (channel_profile(s) - series) ** 2

    pts = np.linspace(0, 1, 2 * kmax + 3)[1:-1]
    val = quad_.quad(diff2, 0.0, 1.0, limit=500, points=pts, epsabs=1e-16, epsrel=1e-10)[0]
    return math.sqrt(val)


def torus_profile(N: int) -> np.ndarray:
    """1D coefficients (length N) of Q(z) = g(2|z|), the even image of the channel profile.

    The channel [0, 1] is mapped to [0, 1/2] and reflected, so cos(pi k s)
    becomes cos(2 pi k z); modes |k3| <= N/3 are kept.
    """
    K = get_grid(N).K
    a = profile_cosine_coefficients(K)
    q = np.zeros(N, dtype=complex)
    for k in range(1, K + 1):
        q[k] = q[-k] = 0.5 * a[k]
    q[0] = a[0]
    return q


def scenario_blowup(lam: float, omega: float, N: int) -> PEState:
    """(lam Q(z) sin(2 pi x1), -omega sin(2 pi x1))."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    v = np.zeros((2, N, N, N), dtype=complex)
    q = torus_profile(N)
    # sin(2 pi x1) = (e^{2 pi i x1} - e^{-2 pi i x1}) / 2i
    v[0, 1, 0, :] = lam * q / 2j
    v[0, -1, 0, :] = -lam * q / 2j
    v[1, 1, 0, 0] = -omega / 2j
    v[1, -1, 0, 0] = omega / 2j
    return PEState.from_velocity(v)


# well-prepared data -----------------------------------------------------------------

def lattice_vector(n: int, N: int) -> tuple[int, int, int]:
    """A wave vector with |k| = n and k3 != 0, preferring some horizontal content.

    Among solutions of k1^2 + k2^2 + k3^2 = n^2 with k3 > 0 and k1, k2 >= 0,
    the one with smallest max |k_i| is chosen, then largest k3, then smallest k1.
    Falls back to (0, 0, n) when no other solution exists.
    """
    K = get_grid(N).K
    best = None
    for k1, k2 in itertools.product(range(n + 1), repeat=2):
        rest = n * n - k1 * k1 - k2 * k2
        if rest <= 0:
            continue
        k3 = math.isqrt(rest)
        if k3 * k3 != rest or (k1 == 0 and k2 == 0):
            continue
        key = (max(k1, k2, k3), -k3, k1)
        if best is None or key < best[0]:
            best = (key, (k1, k2, k3))
    k = best[1] if best else (0, 0, n)
    if max(k) > K:
        raise ValueError(f"well-prepared mode |k|={n} needs a grid with N/3 >= {max(k)}; N={N}")
    return k


@dataclass(frozen=True)
class WellPrepared:
    state: PEState
    wave_vector: tuple[int, int, int]
    kmag: int
    amplitude: float
    sobolev_small: float     # ||vtilde0||_{H^{3.5}}
    analytic_large: float    # ||e^{tau0 A} vtilde0||_{H^{r+2}}


def well_prepared_mode(Omega0: float, tau0: float, order: float) -> tuple[int, float]:
    """|k| = ceil(ln|Omega0| / tau0) and coefficient size (ln|Omega0|)^(-order-2) / |Omega0|."""
    L = math.log(abs(Omega0))
    if L <= 1:
        raise ValueError("well-prepared data needs |Omega0| > e")
    n = max(1, math.ceil(L / tau0 - 1e-12))
    return n, L ** (-order - 2) / abs(Omega0)


def scenario_well_prepared(Omega0: float, tau0: float, order: float, N: int,
                           vbar0: np.ndarray | None = None) -> WellPrepared:
    n, amp = well_prepared_mode(Omega0, tau0, order)
    k = lattice_vector(n, N)
    c = np.zeros((N, N, N), dtype=complex)
    c[k[0] % N, k[1] % N, k[2] % N] = amp
    c = z_even(hermitian_part(c))
    c *= amp / np.max(np.abs(c))
    vt = np.stack([c, np.zeros_like(c)])
    vbar = np.zeros((2, N, N), complex) if vbar0 is None else vbar0
    return WellPrepared(PEState(vbar, vt), k, n, amp,
                        sobolev_norm(vt, 3.5), analytic_norm(vt, NormSpec(order + 2, tau0)))


# comparison -----------------------------------------------------------------------

def derotate(state: PEState, omega: float) -> PEState:
    """Undo the inertial rotation accumulated since t = 0: R(t)^{-1} applied to vtilde."""
    out = linear_rotation_solution(state, omega, -state.t)
    return replace(out, t=state.t)


def state_error(a: PEState, b: PEState, spec: NormSpec) -> tuple[float, float]:
    return (analytic_norm(a.vbar - b.vbar, spec, ndim=2),
            analytic_norm(a.vtilde - b.vtilde, spec))


def sup_difference(a: PEState, b: PEState) -> float:
    g = get_grid(a.N)
    return float(np.max(np.abs(g.ifft_real(a.velocity() - b.velocity()))))


def compare_trajectories(run_a, run_b, r: float, tau: float, omega: float | None = None,
                         time_tol: float = 1e-9) -> list[tuple[float, float, float]]:
    """(t, barotropic error, baroclinic error) at each common output.

    Both runs must share the grid and the output times.  With ``omega`` set,
    the baroclinic part of ``run_a`` is de-rotated before comparing.
    """
    sa = run_a.states if isinstance(run_a, Trajectory) else list(run_a)
    sb = run_b.states if isinstance(run_b, Trajectory) else list(run_b)
    if len(sa) != len(sb):
        raise ValueError(f"output count mismatch: {len(sa)} vs {len(sb)}")
    spec = NormSpec(r, tau)
    out = []
    for a, b in zip(sa, sb):
        if isinstance(b, LimitState):
            b = b.as_pe()
        if isinstance(a, LimitState):
            a = a.as_pe()
        if a.N != b.N:
            raise ValueError(f"grid mismatch: N={a.N} vs N={b.N}")
        if abs(a.t - b.t) > time_tol:
            raise ValueError(f"output time mismatch: {a.t} vs {b.t}")
        if omega is not None:
            a = derotate(a, omega)
        out.append((a.t, *state_error(a, b, spec)))
    return out


# multi-run experiments --------------------------------------------------------------

def aligned_steps(output_every: float, t_end: float, dt_max: float) -> tuple[float, int]:
    """Step size <= dt_max that divides output_every, and the matching output stride."""
    n_out = t_end / output_every
    if abs(n_out - round(n_out)) > 1e-9 or n_out < 1:
        raise ValueError("t_end must be a positive multiple of output_every")
    m = max(1, math.ceil(output_every / dt_max - 1e-9))
    return output_every / m, m


def limit_reference(initial: PEState, t_end: float, output_every: float,
                    evolve_tilde: bool = True, dt_max: float | None = None) -> Trajectory:
    """Limit-system run sampled at multiples of ``output_every``.

    The analytic norms used for comparisons weight the top modes heavily, so
    the reference should use a step no coarser than the runs it is compared with.
    """
    dt_max = auto_dt(initial) if dt_max is None else min(dt_max, auto_dt(initial))
    dt, m = aligned_steps(output_every, t_end, dt_max)
    settings = Integration(t_end=t_end, dt=dt, stride=m, diagnostics=False)
    return integrate_limit(settings, LimitState.from_pe(initial), evolve_tilde)


@dataclass(frozen=True)
class FastRotationRow:
    omega: float
    E: float
    E_bar: float
    E_tilde: float
    dt: float
    steps: int


def scenario_fast_rotation(initial: PEState, omegas, t_end: float, spec: NormSpec,
                           output_every: float = 0.05, phase_resolution: float = 0.05,
                           base: Integration = Integration(), log=None) -> list[FastRotationRow]:
    """E(Omega) = sup_t of the analytic-norm distance to the limit run, de-rotated baroclinic part."""
    cfl = auto_dt(initial)
    dt_for = {om: min(cfl, phase_resolution / abs(om)) if om else cfl for om in omegas}
    ref = limit_reference(initial, t_end, output_every, dt_max=min(dt_for.values()))
    rows = []
    for om in omegas:
        dt, m = aligned_steps(output_every, t_end, dt_for[om])
        settings = replace(base, omega=float(om), t_end=t_end, dt=dt, stride=m, diagnostics=False,
                           keep_states=True)
        traj = integrate(settings, initial)
        if traj.blowup is not None:
            raise FloatingPointError(f"run at Omega={om} stopped early: {traj.blowup}")
        errs = compare_trajectories(traj, ref, spec.r, spec.tau, omega=float(om))
        tot = [eb + et for _, eb, et in errs]
        i = int(np.argmax(tot))
        rows.append(FastRotationRow(float(om), tot[i], errs[i][1], errs[i][2], traj.dt, traj.steps))
        if log:
            log(f"Omega={om:g} E={tot[i]:.6e} steps={traj.steps}")
    return rows


@dataclass(frozen=True)
class EpsilonRow:
    eps: float
    error: float             # ||e^{tau A}(v - Vbar)||_{H^r} at t_end
    error_bar: float         # barotropic part only
    sup_error: float         # sup over outputs of the first column
    doubling_time: float


def scale_baroclinic(vt: np.ndarray, eps: float, r: float, tau0: float) -> np.ndarray:
    n = analytic_norm(vt, NormSpec(r, tau0))
    return vt * (eps / n) if n > 0 else vt


def scenario_epsilon_sweep(vbar0: np.ndarray, shape: np.ndarray, epsilons, t_end: float,
                           spec: NormSpec, tau0: float, output_every: float = 0.05,
                           base: Integration = Integration(), log=None) -> list[EpsilonRow]:
    """Small baroclinic data of size eps against the 2D Euler run from the same vbar0."""
    N = shape.shape[-1]
    inits = [PEState(vbar0, scale_baroclinic(shape, float(e), spec.r, tau0)) for e in epsilons]
    # one step size for every run, so the eps -> 0 limit reproduces the reference exactly
    dt_max = min([auto_dt(i) for i in inits], default=None)
    ref = limit_reference(PEState(vbar0, np.zeros((2, N, N, N), complex)), t_end, output_every,
                          evolve_tilde=False, dt_max=dt_max)
    dt, m = ref.dt, round(output_every / ref.dt)
    rows = []
    for eps, init in zip(epsilons, inits):
        vt0 = init.vtilde
        traj = integrate(replace(base, t_end=t_end, dt=dt, stride=m, diagnostics=False), init)
        if traj.blowup is not None:
            raise FloatingPointError(f"run at eps={eps} stopped early: {traj.blowup}")
        n0 = float(np.linalg.norm(vt0))
        doubling = math.inf
        errs = []
        for s, v in zip(traj.states, ref.states):
            if doubling == math.inf and n0 > 0 and np.linalg.norm(s.vtilde) >= 2 * n0:
                doubling = s.t
            diff = PEState(s.vbar - v.Vbar, s.vtilde, s.t)
            errs.append((analytic_norm(diff.velocity(), spec), analytic_norm(diff.vbar, spec, ndim=2)))
        rows.append(EpsilonRow(float(eps), errs[-1][0], errs[-1][1], max(e for e, _ in errs), doubling))
        if log:
            log(f"eps={eps:g} error={errs[-1][0]:.6e}")
    return rows
