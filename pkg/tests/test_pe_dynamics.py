import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles as O
from rotpe import fields
from rotpe.pe_dynamics import (
    BlowupMonitor,
    BlowupThresholds,
    Integration,
    OscState,
    PEState,
    auto_dt,
    baroclinic_tendency_from_osc,
    blowup_monitor,
    euler_tendency,
    integrate,
    linear_rotation_solution,
    osc_groups,
    plan_steps,
    rhs_barotropic,
    rhs_baroclinic,
    rhs_osc,
    rhs_osc_reference,
    step,
    tail_fraction,
)
from rotpe.projections import divergence2d, norm_l2, perp
from rotpe.spectral_core import get_grid

N = 16
K = N // 3


def small_state(seed, cap=2, N=N, scale=1.0):
    rng = np.random.default_rng(seed)
    vbar = fields.random_barotropic(N, cap, rng)
    vt = fields.random_baroclinic(N, cap, rng)
    return PEState(scale * vbar, scale * vt)


def modes_of(state):
    return O.plane_modes(state.vbar), O.velocity_modes(state.vtilde)


def assert_modes_close(arr, modes, N, rel=1e-12):
    expected = np.stack([m.to_array(N) for m in modes])
    scale = max(np.max(np.abs(expected)), 1e-300)
    assert np.max(np.abs(arr - expected)) <= rel * scale


def test_taylor_green_is_steady():
    tg = fields.taylor_green(N)
    out = rhs_barotropic(tg, np.zeros((2, N, N, N), complex))
    assert np.max(np.abs(out)) < 1e-12


def test_zero_state_tendencies():
    z = PEState.zeros(N)
    assert np.all(rhs_barotropic(z.vbar, z.vtilde) == 0)
    assert np.all(rhs_baroclinic(z.vbar, z.vtilde, 10.0) == 0)


def test_barotropic_tendency_of_sheared_mode():
    # vbar = 0, vt = (sin(2 pi x1) cos(2 pi z), 0): forcing is a pure x1-gradient, killed by P_h
    m = O.Modes({(1, 0, 1): -0.25j, (1, 0, -1): -0.25j, (-1, 0, 1): 0.25j, (-1, 0, -1): 0.25j})
    vt = np.stack([m.to_array(N), np.zeros((N, N, N), complex)])
    out = rhs_barotropic(np.zeros((2, N, N), complex), vt)
    zero = O.Modes()
    oracle = O.oracle_rhs_barotropic((zero, zero), (m, O.Modes()), K)
    assert max(o.norm2() for o in oracle) < 1e-28
    assert np.max(np.abs(out)) < 1e-13


@pytest.mark.parametrize("seed", [0, 1])
def test_barotropic_tendency_against_mode_oracle(seed):
    s = small_state(seed)
    vbar_m, vt_m = modes_of(s)
    oracle = O.oracle_rhs_barotropic(vbar_m, vt_m, K)
    out = rhs_barotropic(s.vbar, s.vtilde)
    assert_modes_close(np.stack([out[i][..., None] * (np.arange(N) == 0) for i in range(2)]),
                       oracle, N)
    assert np.max(np.abs(divergence2d(out))) < 1e-12


@pytest.mark.parametrize("seed", [0, 1])
def test_baroclinic_tendency_against_mode_oracle(seed):
    s = small_state(seed)
    vbar_m, vt_m = modes_of(s)
    oracle = O.oracle_rhs_baroclinic(vbar_m, vt_m, 7.0, K)
    out = rhs_baroclinic(s.vbar, s.vtilde, 7.0)
    assert_modes_close(out, oracle, N)
    assert np.max(np.abs(out[..., 0])) == 0


def test_baroclinic_mode_stays_zero():
    s = small_state(3)
    out = rhs_baroclinic(s.vbar, np.zeros_like(s.vtilde), 5.0)
    assert np.max(np.abs(out)) < 1e-14


def test_linear_baroclinic_tendency():
    s = small_state(4)
    np.testing.assert_array_equal(rhs_baroclinic(s.vbar, s.vtilde, 3.0, nonlinear=False),
                                  -3.0 * perp(s.vtilde))


def test_osc_without_baroclinic_reduces_to_euler():
    s = small_state(5)
    osc = OscState(s.vbar, np.zeros_like(s.vtilde), 0.3, 50.0)
    dv, du = rhs_osc(osc)
    np.testing.assert_allclose(dv, euler_tendency(s.vbar), atol=1e-15)
    assert np.max(np.abs(du)) == 0


def test_self_interaction_group_against_mode_oracle():
    s = small_state(6)
    osc = OscState.from_pe(s, 0.0)
    g = get_grid(N)
    I1 = g.dealias(g.fft(osc_groups(np.zeros_like(s.vbar), osc.uplus)["I1"]))
    I1[..., 0] = 0
    u = O.velocity_modes(osc.uplus)
    adv = O.advect(u, u)
    dv = O.div(u)
    W = dv.int_z()
    expected = []
    for i in range(2):
        m = adv[i] + (adv[i] + dv * u[i]).z_mean().scale(-1) + (W * u[i].d(3)).scale(-1)
        m = O.Modes({k: v for k, v in m.truncate(K).c.items() if k[2] != 0})
        expected.append(m)
    assert_modes_close(I1, expected, N)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 10.0, 1000.0]), st.floats(0, 2))
def test_formulation_equivalence(seed, omega, t):
    s = small_state(seed, cap=4)
    s = PEState(s.vbar, s.vtilde, t)
    dvbar = rhs_barotropic(s.vbar, s.vtilde)
    dvt = rhs_baroclinic(s.vbar, s.vtilde, omega)
    osc = OscState.from_pe(s, omega)
    ob, ou = rhs_osc(osc)
    scale = max(np.max(np.abs(dvt)), np.max(np.abs(dvbar)), 1.0)
    assert np.max(np.abs(ob - dvbar)) <= 1e-12 * scale
    assert np.max(np.abs(baroclinic_tendency_from_osc(osc, ou) - dvt)) <= 1e-12 * scale


@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(-100, 100))
def test_fast_path_matches_component_form(seed, t, omega):
    s = small_state(seed, cap=4)
    osc = OscState.from_pe(PEState(s.vbar, s.vtilde, t), omega)
    a, b = rhs_osc(osc), rhs_osc_reference(osc)
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) <= 1e-13 * max(np.max(np.abs(y)), 1.0)


@given(st.integers(0, 2**32 - 1), st.floats(0, 10), st.floats(-50, 50))
def test_reconstruction_roundtrip_and_reality(seed, t, omega):
    s = small_state(seed, cap=4)
    s = PEState(s.vbar, s.vtilde, t)
    osc = OscState.from_pe(s, omega)
    np.testing.assert_allclose(osc.vtilde(), s.vtilde, atol=1e-14)
    assert osc.reality_residual() <= 1e-13


def test_step_of_zero_state():
    z = step(PEState.zeros(N), 0.01, omega=3.0)
    assert np.all(z.vbar == 0) and np.all(z.vtilde == 0)
    assert z.t == pytest.approx(0.01)


def test_linear_step_is_exact_rotation():
    s = small_state(7)
    omega, dt = 9.0, 0.037
    out = step(s, dt, omega=omega, nonlinear=False)
    c, sn = math.cos(omega * dt), math.sin(omega * dt)
    a, b = s.vtilde
    np.testing.assert_allclose(out.vtilde, np.stack([c * a + sn * b, -sn * a + c * b]), atol=1e-15)
    np.testing.assert_allclose(out.vbar, s.vbar, atol=0)


def test_linear_rotation_solution_examples():
    s = small_state(8)
    a, b = s.vtilde
    q = linear_rotation_solution(s, 2.0, math.pi / 4)
    np.testing.assert_allclose(q.vtilde, np.stack([b, -a]), atol=1e-15)
    np.testing.assert_allclose(linear_rotation_solution(s, 2.0, math.pi).vtilde, s.vtilde, atol=1e-15)
    np.testing.assert_array_equal(linear_rotation_solution(s, 0.0, 3.3).vtilde, s.vtilde)
    np.testing.assert_array_equal(q.vbar, s.vbar)


def test_plan_steps():
    assert plan_steps(1.0, 1e-3) == (1000, pytest.approx(1e-3))
    n, dt = plan_steps(0.5, 0.3)
    assert n == 2 and dt == 0.25
    with pytest.raises(ValueError):
        plan_steps(1.0, 0.0)


def test_integrate_zero_end_time_echoes_initial():
    s = small_state(9)
    traj = integrate(Integration(t_end=0.0), s)
    assert traj.states == [s] and traj.records == [] and traj.final is s


def test_integrate_preserves_invariants_and_energy():
    s = small_state(10, cap=4, scale=0.03)
    traj = integrate(Integration(omega=10.0, t_end=0.1, dt=1e-3, stride=20, thresholds=None), s)
    e0 = norm_l2(s.vbar) ** 2 + norm_l2(s.vtilde) ** 2
    for st_ in traj.states:
        assert max(st_.invariant_residuals().values()) < 1e-14
        e = norm_l2(st_.vbar) ** 2 + norm_l2(st_.vtilde) ** 2
        assert abs(e - e0) / e0 < 5e-9
    assert [r.t for r in traj.records] == pytest.approx([0, 0.02, 0.04, 0.06, 0.08, 0.1])
    assert all(r.split_residual < 1e-13 for r in traj.records)
    assert np.all(np.diff([r.t for r in traj.records]) > 0)


def test_baroclinic_invariance():
    s = small_state(11)
    s = PEState(s.vbar, np.zeros_like(s.vtilde))
    traj = integrate(Integration(omega=4.0, t_end=0.05, dt=5e-3), s)
    assert all(np.all(x.vtilde == 0) for x in traj.states)


def test_integrate_is_deterministic():
    s = small_state(12, cap=4, scale=0.03)
    a = integrate(Integration(omega=3.0, t_end=0.02, dt=5e-3, thresholds=None), s)
    b = integrate(Integration(omega=3.0, t_end=0.02, dt=5e-3, thresholds=None), s)
    assert np.array_equal(a.final.vtilde, b.final.vtilde)
    assert a.records == b.records


def test_monitor_quiet_for_steady_and_rotating_flows():
    tg = PEState(fields.taylor_green(N), np.zeros((2, N, N, N), complex))
    traj = integrate(Integration(t_end=0.2, dt=0.01), tg)
    assert traj.blowup is None
    assert all(abs(r.amplification - 1) < 1e-10 for r in traj.records)
    s = small_state(13)
    traj = integrate(Integration(omega=10, t_end=0.3, nonlinear=False, dt=0.01), s)
    assert traj.blowup is None


def test_monitor_flags_thresholds():
    s = small_state(14)
    mon = BlowupMonitor(s, BlowupThresholds(2.0, 1.0))
    assert not mon(s).flagged
    big = PEState(3 * s.vbar, 3 * s.vtilde)
    st_ = mon(big)
    assert st_.flagged and st_.criterion == "gradient" and st_.amplification == pytest.approx(3.0)
    g = get_grid(N)
    tail = np.zeros_like(s.vtilde)
    tail[0, g.K, 0, 1] = 1.0
    st_ = blowup_monitor(PEState(s.vbar, s.vtilde + tail), BlowupThresholds(1e9, 1e-3), mon.reference)
    assert st_.criterion == "tail"
    assert tail_fraction(PEState.zeros(N)) == 0.0


def test_blowup_event_reports_last_valid_time():
    s = small_state(15, cap=4)
    traj = integrate(Integration(t_end=1.0, dt=0.01, thresholds=BlowupThresholds(1.0 + 1e-9, 1.0)), s)
    assert traj.blowup is not None
    assert traj.blowup.last_valid_t == pytest.approx(traj.blowup.t - 0.01)
    assert traj.final.t == traj.blowup.t
    assert traj.records[-1].amplification >= 1.0


def test_auto_dt_rule():
    s = small_state(16)
    g = get_grid(N)
    v = g.ifft_real(s.velocity())
    vmax = np.max(np.hypot(v[0], v[1]))
    assert auto_dt(s) == pytest.approx(0.5 / N / max(1.0, vmax))
