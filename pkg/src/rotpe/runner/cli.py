"""Command line entry point: ``rotpe {run,sweep,compare,verify-lemmas,info} --config PATH``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

from .. import __version__
from ..pe_dynamics import auto_dt
from ..spectral_core import get_grid
from .config import SCENARIO_PARAMS, ConfigError, load_config, load_sweep
from .run import EXIT_CONFIG, EXIT_OK, initial_state, run

log = logging.getLogger("rotpe.runner")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotpe", description="Rotating primitive-equation experiments.")
    p.add_argument("--version", action="version", version=f"rotpe {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "run one configuration"),
        ("sweep", "run every combination listed under 'sweep'"),
        ("compare", "compare two runs' snapshot series (scenario 'compare')"),
        ("verify-lemmas", "identity and inequality checks (scenario 'lemmas')"),
        ("info", "describe a configuration without running it"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=None, help="output directory (overrides out_dir)")
        sp.add_argument("--threads", type=int, default=1, help="parallel runs for sweep")
        sp.add_argument("--verbose", "-v", action="store_true")
    return p


def _run_one(cfg) -> int:
    result = run(cfg)
    print(json.dumps({"out_dir": str(result.out_dir), "exit_code": result.exit_code}))
    return result.exit_code


def _sweep_worker(cfg) -> int:
    try:
        return run(cfg).exit_code
    except ConfigError as exc:
        log.error("%s: %s", cfg.out_dir, exc)
        return EXIT_CONFIG


def cmd_sweep(args) -> int:
    configs = load_sweep(args.config, args.out)
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            codes = list(pool.map(_sweep_worker, configs))
    else:
        codes = [_sweep_worker(c) for c in configs]
    for c, code in zip(configs, codes):
        print(json.dumps({"out_dir": c.out_dir, "exit_code": code}))
    return max(codes)


def cmd_info(cfg) -> int:
    g = get_grid(cfg.N)
    info = {"version": __version__, "N": cfg.N, "retained_modes_per_axis": 2 * g.K + 1,
            "scenario": cfg.scenario, "params": cfg.params,
            "scenarios": sorted(SCENARIO_PARAMS)}
    try:
        state, facts = initial_state(cfg)
        info["auto_dt"] = auto_dt(state)
        info.update({k: v for k, v in facts.items() if not isinstance(v, tuple)})
    except ConfigError:
        pass
    print(json.dumps(info, indent=2, default=str))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        cfg = load_config(args.config, args.out)
        expected = {"compare": "compare", "verify-lemmas": "lemmas"}.get(args.command)
        if expected and cfg.scenario != expected:
            raise ConfigError(f"'{args.command}' needs scenario {expected!r}, got {cfg.scenario!r}")
        if args.command == "info":
            return cmd_info(cfg)
        return _run_one(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
