"""Scenario dispatch: build initial data, integrate, write artifacts."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__, fields
from ..lemma_verifier import EnsembleSpec, run_suite, write_report
from ..pe_dynamics import (
    RECORD_COLUMNS,
    NumericalFailure,
    PEState,
    Trajectory,
    integrate,
    linear_rotation_solution,
)
from ..resonant_limit import LimitState, integrate_limit
from . import io, scenarios
from .config import ConfigError, SimConfig

log = logging.getLogger("rotpe.runner")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BLOWUP = 0, 2, 3, 4


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    summary: dict = field(default_factory=dict)
    trajectory: Trajectory | None = None


def initial_state(cfg: SimConfig) -> tuple[PEState, dict]:
    """Initial data for the single-trajectory scenarios, plus facts for the metadata."""
    p, N = cfg.params, cfg.N
    sc = cfg.scenario
    if sc in ("random", "linear-rotation", "limit"):
        return scenarios.random_state(N, cfg.seed, p["cap"], p["decay"], p["amplitude"],
                                      p["tilde_fraction"]), {}
    if sc == "reduce-to-euler":
        vbar = scenarios.base_flow(N, cfg.seed, p["amplitude"], min(p["cap"], N // 3), p["decay"])
        return PEState(vbar, np.zeros((2, N, N, N), complex)), {}
    if sc == "taylor-green":
        return PEState(fields.taylor_green(N, p["amplitude"]), np.zeros((2, N, N, N), complex)), {}
    if sc == "blowup":
        return scenarios.scenario_blowup(p["lam"], cfg.omega, N), {
            "profile_l2_error": scenarios.profile_truncation_error(N // 3),
            "upper_bound_time": 9.0 / (2.0 * p["lam"]) if p["lam"] > 0 else math.inf}
    if sc == "well-prepared":
        vbar = scenarios.base_flow(N, cfg.seed, p["amplitude"])
        wp = scenarios.scenario_well_prepared(p["Omega0"], p["tau0"], p["order"], N, vbar)
        return wp.state, {"wave_vector": wp.wave_vector, "kmag": wp.kmag,
                          "coefficient": wp.amplitude, "sobolev_3.5": wp.sobolev_small,
                          "analytic_r+2": wp.analytic_large}
    raise ConfigError(f"scenario {sc!r} has no single initial state")


def _reference(cfg: SimConfig, initial: PEState):
    """Function (output index, state) -> comparison state (None when unavailable), or None."""
    if cfg.scenario == "reduce-to-euler":
        ref = integrate_limit(cfg.integration(diagnostics=False), LimitState.from_pe(initial),
                              evolve_tilde=False)
        by_time = {round(st.t, 9): st for st in ref.states}
        return lambda i, s: by_time[round(s.t, 9)].as_pe() if round(s.t, 9) in by_time else None
    if cfg.scenario == "linear-rotation":
        return lambda i, s: linear_rotation_solution(initial, cfg.omega, s.t - initial.t)
    if cfg.scenario == "taylor-green":
        return lambda i, s: replace(initial, t=s.t)
    return None


def _run_single(cfg: SimConfig, out: Path) -> RunResult:
    initial, facts = initial_state(cfg)
    compare = _reference(cfg, initial)
    errors: list[tuple[float, float]] = []
    sups: list[float] = []
    snaps = out / "snapshots"
    count = [0]

    def on_output(state):
        i = count[0]
        count[0] += 1
        if compare is not None:
            ref = compare(i, state)
            if ref is None:
                errors.append((math.nan, math.nan))
            else:
                errors.append(scenarios.state_error(state, ref, cfg.norm))
                sups.append(scenarios.sup_difference(state, ref))
        if cfg.snapshot_stride and i % cfg.snapshot_stride == 0:
            io.save_state(snaps, i, state)

    settings = cfg.integration(keep_states=False)
    if cfg.scenario == "limit":
        traj = integrate_limit(settings, LimitState.from_pe(initial),
                               on_output=lambda s: on_output(s.as_pe()))
    else:
        traj = integrate(settings, initial, on_output=on_output)
    records = traj.records
    if errors:
        records = [replace(r, err_bar=eb, err_tilde=et) for r, (eb, et) in zip(records, errors)]
    io.write_records(out / "diagnostics.csv", records)
    summary = {**facts, "dt": traj.dt, "steps": traj.steps, "outputs": len(records)}
    if sups:
        summary["sup_error"] = max(sups)
        summary["max_err_bar"] = float(np.nanmax([e[0] for e in errors]))
        summary["max_err_tilde"] = float(np.nanmax([e[1] for e in errors]))
    if records:
        e0 = records[0].l2_bar ** 2 + records[0].l2_tilde ** 2
        e1 = records[-1].l2_bar ** 2 + records[-1].l2_tilde ** 2
        summary["relative_energy_drift"] = abs(e1 - e0) / e0 if e0 > 0 else 0.0
    code = EXIT_OK
    if traj.blowup is not None:
        summary["blowup"] = traj.blowup
        code = EXIT_NUMERICAL if traj.blowup.criterion == "non-finite" else EXIT_BLOWUP
    return RunResult(code, out, summary, traj)


def _run_fast_rotation(cfg: SimConfig, out: Path) -> RunResult:
    p = cfg.params
    vbar = scenarios.base_flow(cfg.N, cfg.seed, p["amplitude"])
    wp = scenarios.scenario_well_prepared(p["Omega0"], p["tau0"], p["order"], cfg.N, vbar)
    rows = scenarios.scenario_fast_rotation(
        wp.state, p["omegas"], cfg.t_end, cfg.norm, p["output_every"], p["phase_resolution"],
        cfg.integration(), log=log.info)
    io.write_table(out / "fast_rotation.csv", rows)
    E = [r.E for r in rows]
    summary = {"E": dict(zip(map(str, p["omegas"]), E)), "wave_vector": wp.wave_vector,
               "strictly_decreasing": all(a > b for a, b in zip(E, E[1:]))}
    return RunResult(EXIT_OK, out, summary)


def _run_epsilon_sweep(cfg: SimConfig, out: Path) -> RunResult:
    p = cfg.params
    vbar = scenarios.base_flow(cfg.N, cfg.seed, p["amplitude"])
    rng = np.random.default_rng([cfg.seed, 2])
    shape = fields.random_baroclinic(cfg.N, min(p["cap"], cfg.N // 3), rng, p["decay"])
    rows = scenarios.scenario_epsilon_sweep(vbar, shape, p["epsilons"], cfg.t_end, cfg.norm,
                                            p["tau0"], p["output_every"], cfg.integration(),
                                            log=log.info)
    io.write_table(out / "epsilon_sweep.csv", rows)
    errs = [r.error for r in rows]
    summary = {"halving_ratios": [a / b for a, b in zip(errs, errs[1:]) if b > 0]}
    return RunResult(EXIT_OK, out, summary)


def _run_lemmas(cfg: SimConfig, out: Path) -> RunResult:
    p = cfg.params
    reports = {}
    for N in p["N_list"]:
        ens = EnsembleSpec(int(N), int(p["mode_cap"]), int(p["samples"]), cfg.seed)
        reports[str(N)] = run_suite(ens, float(p["tau"]), p["orders"])
        write_report(reports[str(N)], out / f"lemmas_N{N}.json")
    summary = {"identity_worst": {N: max(r["identities"]["residuals"].values())
                                  for N, r in reports.items()}}
    Ns = list(reports)
    if len(Ns) >= 2:
        spread = {}
        for a, b in zip(reports[Ns[0]]["estimates"], reports[Ns[-1]]["estimates"]):
            ra, rb = a["max_ratio"], b["max_ratio"]
            spread[a["lemma"]] = abs(ra - rb) / max(ra, rb) if max(ra, rb) > 0 else 0.0
        summary["relative_spread"] = spread
    return RunResult(EXIT_OK, out, summary)


def _run_compare(cfg: SimConfig, out: Path) -> RunResult:
    p = cfg.params
    a, b = io.load_states(p["run_a"]), io.load_states(p["run_b"])
    om = float(p["omega"])
    rows = scenarios.compare_trajectories(a, b, cfg.r, cfg.tau, omega=om if om else None)
    io.write_csv(out / "comparison.csv", ("t", "err_bar", "err_tilde"), rows)
    summary = {"max_err_bar": max(r[1] for r in rows), "max_err_tilde": max(r[2] for r in rows)}
    return RunResult(EXIT_OK, out, summary)


DISPATCH = {
    "fast-rotation": _run_fast_rotation,
    "epsilon-sweep": _run_epsilon_sweep,
    "lemmas": _run_lemmas,
    "compare": _run_compare,
}


def run(cfg: SimConfig) -> RunResult:
    """Execute one configuration; artifacts go to ``cfg.out_dir``."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    fn = DISPATCH.get(cfg.scenario, _run_single)
    try:
        result = fn(cfg, out)
    except ConfigError:
        raise
    except (NumericalFailure, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        result = RunResult(EXIT_NUMERICAL, out, {"error": str(exc)})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    meta = {
        "version": __version__,
        "column_version": io.COLUMN_VERSION,
        "columns": list(RECORD_COLUMNS),
        "config": cfg.to_dict(),
        "exit_code": result.exit_code,
        "summary": result.summary,
        "wall_time_s": time.perf_counter() - start,
    }
    io.write_metadata(out / "metadata.json", meta)
    return result


__all__ = ["EXIT_BLOWUP", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_OK", "RunResult",
           "initial_state", "run"]
