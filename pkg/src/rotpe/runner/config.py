"""JSON run configuration with strict key checking."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ..gevrey_diagnostics import NormSpec
from ..pe_dynamics import BlowupThresholds, Integration


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration documents."""


_NOTHING = object()

# scenario -> {param: default}; _NOTHING marks a required parameter
SCENARIO_PARAMS: dict[str, dict[str, Any]] = {
    "random": {"cap": 4, "decay": 0.5, "amplitude": 1.0, "tilde_fraction": 0.5},
    "taylor-green": {"amplitude": 1.0},
    "reduce-to-euler": {"cap": 4, "decay": 0.5, "amplitude": 1.0},
    "linear-rotation": {"cap": 4, "decay": 0.5, "amplitude": 1.0, "tilde_fraction": 0.5},
    "limit": {"cap": 4, "decay": 0.5, "amplitude": 1.0, "tilde_fraction": 0.5},
    "blowup": {"lam": 5.0},
    "well-prepared": {"Omega0": 25.0, "tau0": 0.5, "order": 3.0, "amplitude": 1.0},
    "fast-rotation": {"omegas": [25.0, 50.0, 100.0, 200.0], "Omega0": 25.0, "tau0": 0.5,
                      "order": 3.0, "amplitude": 1.0, "output_every": 0.05, "phase_resolution": 0.05},
    "epsilon-sweep": {"epsilons": [0.2, 0.1, 0.05], "tau0": 0.5, "cap": 4, "decay": 0.5,
                      "amplitude": 1.0, "output_every": 0.05},
    "lemmas": {"N_list": [16, 32], "mode_cap": 3, "samples": 200, "tau": 0.05, "orders": {}},
    "compare": {"run_a": _NOTHING, "run_b": _NOTHING, "omega": 0.0},
}


@dataclass(frozen=True)
class SimConfig:
    N: int = 32
    omega: float = 0.0
    dt: float | str = "auto"
    t_end: float = 1.0
    scenario: str = "random"
    params: dict = field(default_factory=dict)
    stride: int = 1
    out_dir: str = "out"
    filter: bool = False
    seed: int = 0
    snapshot_stride: int = 0
    r: float = 3.0
    tau: float = 0.1
    nonlinear: bool = True
    monitor: bool = True
    blowup_amplification: float = 100.0
    blowup_tail: float = 1e-3

    def __post_init__(self):
        _validate(self)
        merged = _complete_params(self.scenario, self.params)
        object.__setattr__(self, "params", merged)

    @property
    def norm(self) -> NormSpec:
        return NormSpec(self.r, self.tau)

    @property
    def explicit_dt(self) -> float | None:
        return None if self.dt == "auto" else float(self.dt)

    def integration(self, **overrides) -> Integration:
        thresholds = (BlowupThresholds(self.blowup_amplification, self.blowup_tail)
                      if self.monitor else None)
        base = Integration(omega=self.omega, t_end=self.t_end, dt=self.explicit_dt,
                           stride=self.stride, nonlinear=self.nonlinear, filter=self.filter,
                           thresholds=thresholds, norm=self.norm)
        return replace(base, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_updates(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def _validate(c: SimConfig) -> None:
    def bad(msg):
        raise ConfigError(msg)

    if not isinstance(c.N, int) or isinstance(c.N, bool) or c.N < 8 or c.N % 2:
        bad(f"N must be an even integer >= 8, got {c.N!r}")
    if isinstance(c.dt, str):
        if c.dt != "auto":
            bad(f"dt must be a positive number or 'auto', got {c.dt!r}")
    elif not (isinstance(c.dt, (int, float)) and c.dt > 0 and math.isfinite(c.dt)):
        bad(f"dt must be a positive number or 'auto', got {c.dt!r}")
    for name in ("omega", "t_end", "r", "tau", "blowup_amplification", "blowup_tail"):
        val = getattr(c, name)
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            bad(f"{name} must be a finite number, got {val!r}")
    if c.t_end < 0:
        bad("t_end must be >= 0")
    if c.r < 0 or c.tau < 0:
        bad("r and tau must be >= 0")
    if not isinstance(c.stride, int) or c.stride < 1:
        bad("stride must be a positive integer")
    if not isinstance(c.snapshot_stride, int) or c.snapshot_stride < 0:
        bad("snapshot_stride must be a non-negative integer")
    if c.scenario not in SCENARIO_PARAMS:
        bad(f"unknown scenario {c.scenario!r}; choose from {sorted(SCENARIO_PARAMS)}")
    if not isinstance(c.params, dict):
        bad("params must be a JSON object")
    for name in ("filter", "nonlinear", "monitor"):
        if not isinstance(getattr(c, name), bool):
            bad(f"{name} must be true or false")
    if not isinstance(c.seed, int):
        bad("seed must be an integer")


def _complete_params(scenario: str, params: dict) -> dict:
    schema = SCENARIO_PARAMS[scenario]
    unknown = set(params) - set(schema)
    if unknown:
        raise ConfigError(f"unknown params for scenario {scenario!r}: {sorted(unknown)}")
    out = {}
    for key, default in schema.items():
        if key in params:
            out[key] = params[key]
        elif default is _NOTHING:
            raise ConfigError(f"scenario {scenario!r} requires param {key!r}")
        else:
            out[key] = default
    return out


CONFIG_KEYS = tuple(f.name for f in fields(SimConfig))


def config_from_dict(doc: dict) -> SimConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    return SimConfig(**doc)


def load_config(path: str | Path, out_dir: str | None = None) -> SimConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(doc, dict) and "sweep" in doc:
        raise ConfigError("'sweep' documents are only accepted by the sweep subcommand")
    cfg = config_from_dict(doc)
    return cfg.with_updates(out_dir=out_dir) if out_dir else cfg


def load_sweep(path: str | Path, out_dir: str | None = None) -> list[SimConfig]:
    """A base config plus ``"sweep": {key: [values...]}``; one run per value combination.

    Keys may name top-level fields or ``params.<name>``.  Each run writes to
    ``<out_dir>/<key>=<value>[,...]``.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read sweep config {path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("sweep"), dict) or not doc["sweep"]:
        raise ConfigError("sweep config needs a non-empty 'sweep' object")
    axes = doc.pop("sweep")
    base = config_from_dict(doc)
    root = out_dir or base.out_dir
    combos: list[dict] = [{}]
    for key, values in axes.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep values for {key!r} must be a non-empty list")
        combos = [{**c, key: v} for c in combos for v in values]
    runs = []
    for combo in combos:
        top = {k: v for k, v in combo.items() if not k.startswith("params.")}
        par = {k[len("params."):]: v for k, v in combo.items() if k.startswith("params.")}
        unknown = set(top) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        tag = ",".join(f"{k}={v}" for k, v in combo.items())
        d = {**base.to_dict(), **top, "params": {**base.params, **par},
             "out_dir": str(Path(root) / tag)}
        runs.append(config_from_dict(d))
    return runs
