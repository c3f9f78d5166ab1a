"""End-to-end acceptance checks; each prints one PASS/FAIL line with its measured value."""
import math
import time

import numpy as np
import pytest

from rotpe import fields
from rotpe.gevrey_diagnostics import estimate_radius
from rotpe.lemma_verifier import EnsembleSpec, check_identities, run_suite
from rotpe.pe_dynamics import (
    Integration,
    OscState,
    PEState,
    baroclinic_tendency_from_osc,
    integrate,
    rhs_barotropic,
    rhs_baroclinic,
    rhs_osc,
)
from rotpe.projections import norm_l2
from rotpe.runner import scenarios
from rotpe.runner.config import SimConfig
from rotpe.runner.run import EXIT_BLOWUP, EXIT_OK, initial_state, run
from rotpe.spectral_core import get_grid


@pytest.fixture
def verdict(capsys):
    def report(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return report


def test_identity_suite(verdict):
    start = time.perf_counter()
    rep = check_identities(EnsembleSpec(16, 3, samples=100))
    wall = time.perf_counter() - start
    worst = rep.worst()
    verdict("identity suite", worst <= 1e-12 and wall < 60,
            f"worst relative residual {worst:.2e} over {rep.samples} samples, {wall:.1f} s")


def test_formulation_equivalence(verdict):
    worst = 0.0
    for omega in (0.0, 10.0, 1000.0):
        for i in range(50):
            rng = np.random.default_rng([11, i])
            s = scenarios.random_state(16, i, cap=4)
            s = PEState(s.vbar, s.vtilde, float(rng.uniform(0, 2)))
            dvbar = rhs_barotropic(s.vbar, s.vtilde)
            dvt = rhs_baroclinic(s.vbar, s.vtilde, omega)
            osc = OscState.from_pe(s, omega)
            ob, ou = rhs_osc(osc)
            scale = max(np.max(np.abs(dvbar)), np.max(np.abs(dvt)))
            err = max(np.max(np.abs(ob - dvbar)),
                      np.max(np.abs(baroclinic_tendency_from_osc(osc, ou) - dvt))) / scale
            worst = max(worst, err)
    verdict("formulation equivalence", worst <= 1e-12,
            f"worst relative tendency mismatch {worst:.2e} (50 states x 3 rotation rates)")


def test_conservation(verdict):
    cfg = SimConfig(N=32, omega=10.0, dt=1e-3, t_end=1.0, scenario="random", monitor=False)
    init, _ = initial_state(cfg)
    e0 = norm_l2(init.vbar) ** 2 + norm_l2(init.vtilde) ** 2
    worst = {"drift": 0.0, "mean": 0.0, "divergence": 0.0}

    def check(s):
        e = norm_l2(s.vbar) ** 2 + norm_l2(s.vtilde) ** 2
        worst["drift"] = max(worst["drift"], abs(e - e0) / e0)
        res = s.invariant_residuals()
        worst["mean"] = max(worst["mean"], res["mean"])
        worst["divergence"] = max(worst["divergence"], res["divergence"])

    start = time.perf_counter()
    traj = integrate(cfg.integration(keep_states=False, diagnostics=False), init, on_output=check)
    wall = time.perf_counter() - start
    ok = (traj.steps == 1000 and worst["drift"] <= 1e-8 and worst["mean"] <= 1e-12
          and worst["divergence"] <= 1e-12 and wall < 300)
    verdict("conservation", ok,
            f"energy drift {worst['drift']:.2e}, mean {worst['mean']:.1e}, "
            f"divergence {worst['divergence']:.1e}, {traj.steps} steps in {wall:.1f} s")


def test_reduction_to_euler(verdict, tmp_path):
    cfg = SimConfig(N=32, omega=10.0, t_end=1.0, scenario="reduce-to-euler", stride=1,
                    monitor=False, out_dir=str(tmp_path))
    res = run(cfg)
    sup = res.summary["sup_error"]
    verdict("reduction to 2D Euler", res.exit_code == EXIT_OK and sup <= 1e-10,
            f"sup velocity error {sup:.2e} over {res.summary['outputs']} outputs on [0, 1]")


def test_linear_solution(verdict, tmp_path):
    omega = 10.0
    cfg = SimConfig(N=16, omega=omega, t_end=2 * math.pi / omega, scenario="linear-rotation",
                    nonlinear=False, stride=1, out_dir=str(tmp_path))
    res = run(cfg)
    sup = res.summary["sup_error"]
    verdict("linear explicit solution", res.exit_code == EXIT_OK and sup <= 1e-10,
            f"sup error {sup:.2e} over one inertial period ({res.summary['outputs']} outputs)")


def test_blowup(verdict, tmp_path):
    lam = 5.0
    cfg = SimConfig(N=64, omega=0.0, t_end=0.9, scenario="blowup", params={"lam": lam},
                    stride=5, out_dir=str(tmp_path))
    start = time.perf_counter()
    res = run(cfg)
    wall = time.perf_counter() - start
    ev = res.summary.get("blowup")
    bound = 9 / (2 * lam)
    ok = res.exit_code == EXIT_BLOWUP and ev is not None and ev.t < bound and wall < 600
    detail = (f"t* = {ev.t:.4f} < {bound} ({ev.criterion}, amplification {ev.amplification:.2f}), "
              f"{wall:.1f} s" if ev else f"no blowup detected, exit {res.exit_code}")
    verdict("blowup experiment", ok, detail)


def test_fast_rotation(verdict, tmp_path):
    cfg = SimConfig(N=32, t_end=0.5, scenario="fast-rotation", r=3.0, tau=0.25,
                    params={"omegas": [25, 50, 100, 200]}, monitor=False, out_dir=str(tmp_path))
    start = time.perf_counter()
    res = run(cfg)
    wall = time.perf_counter() - start
    E = [res.summary["E"][k] for k in ("25", "50", "100", "200")]
    rate = E[1] / E[2]
    ok = (res.exit_code == EXIT_OK and all(a > b for a, b in zip(E, E[1:]))
          and 1.6 <= rate <= 2.4 and wall < 900)
    verdict("fast-rotation convergence", ok,
            "E = " + ", ".join(f"{e:.4e}" for e in E) + f"; E(50)/E(100) = {rate:.3f}; {wall:.0f} s")


def test_epsilon_sweep(verdict, tmp_path):
    cfg = SimConfig(N=32, t_end=0.5, scenario="epsilon-sweep", r=3.0, tau=0.1,
                    params={"epsilons": [0.2, 0.1, 0.05]}, out_dir=str(tmp_path))
    res = run(cfg)
    ratios = res.summary["halving_ratios"]
    ok = res.exit_code == EXIT_OK and len(ratios) == 2 and all(1.7 <= q <= 2.3 for q in ratios)
    verdict("epsilon sweep", ok, "error ratio per halving " + ", ".join(f"{q:.4f}" for q in ratios))


def test_lemma_suite(verdict):
    reports = {N: run_suite(EnsembleSpec(N, 3, samples=200)) for N in (16, 32)}
    lines, ok = [], True
    for a, b in zip(reports[16]["estimates"], reports[32]["estimates"]):
        ra, rb = a["max_ratio"], b["max_ratio"]
        spread = abs(ra - rb) / max(ra, rb)
        good = math.isfinite(ra) and math.isfinite(rb) and spread < 0.2
        ok &= good
        lines.append(f"{a['lemma']} {ra:.3g}/{rb:.3g} ({100 * spread:.1f}%)")
    verdict("lemma inequality suite", ok, "max ratio N=16/N=32: " + "; ".join(lines))


def test_radius_estimator(verdict):
    g = get_grid(64)
    rng = np.random.default_rng(5)
    lines, ok = [], True
    for tau0 in (0.2, 0.5, 1.0):
        noise = rng.uniform(0.5, 1.0, g.kmag.shape) * np.exp(2j * np.pi * rng.random(g.kmag.shape))
        f = noise * np.exp(-tau0 * g.kmag) * g.mask
        est = estimate_radius(f).tau_hat
        rel = abs(est - tau0) / tau0
        ok &= rel <= 0.05
        lines.append(f"{tau0} -> {est:.4f} ({100 * rel:.2f}%)")
    verdict("radius estimator", ok, "; ".join(lines))
