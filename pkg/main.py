"""SensorGuard - intrusion-aware alert validation simulator (entry point)."""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Optional, Sequence

from analytics import (
    EnumerationBoundError,
    claim5_table,
    claims_table,
    consensus_table,
    overhead_grid_table,
    overhead_table,
)
from analyzer import SWEEP_AXES, ExperimentAnalyzer, format_summary, write_table
from config import dump_resolved, load_config
from factories import create_responder_model
from models import SecurityScenario, ThreatMix
from network_sim import Simulation
from utils import VERSION, ConfigError, parse_int_list

logger = logging.getLogger("sensorguard")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_BOUND = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario YAML file (defaults apply when omitted)")
    common.add_argument("--out", type=Path, default=Path("output"), help="output directory")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted config override, e.g. protocol.mode=defensive (repeatable)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="sensorguard", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="verb", required=True)

    sub.add_parser("run", parents=[common], help="simulate one scenario and write its logs")

    sweep = sub.add_parser("sweep", parents=[common], help="averaged overhead over a parameter axis")
    sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--values", required=True, help="comma list or inclusive range, e.g. 2,4,6 or 10-12")
    sweep.add_argument("--runs", type=int, default=1000)

    analyze = sub.add_parser("analyze", parents=[common], help="overhead and consensus probability tables")
    analyze.add_argument("--n-res-max", type=int, default=12)
    analyze.add_argument("--pmf", help="responder pmf over (1,0,-1), e.g. 1/2,1/4,1/4 (enumerated per responder)")
    analyze.add_argument("--mix", default="10,10,10", help="I_l,I_m,I_h")
    analyze.add_argument("--m-t", default="2,4,6,8", help="commonly trusted neighbours")

    claims = sub.add_parser("claims", parents=[common], help="security claim formulas against enumeration")
    claims.add_argument("--nt-max", type=int, default=8)
    claims.add_argument("--p", default="0,0.5,1", help="Pr[all responses correct] values for the combined claim")
    claims.add_argument("--scenario", default="6,2,1", help="N_t,m,m' for the combined claim")

    sub.add_parser("validate-config", parents=[common], help="load, validate and build the topology")
    return parser


def _load(args: argparse.Namespace):
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides)


def cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    print(f">>> Running scenario (seed={config.seed}, hash={config.config_hash}) ...")
    analyzer = ExperimentAnalyzer(config, args.out)
    sim = analyzer.run()
    analyzer.export_run(sim)
    print(format_summary(sim.report))
    return EXIT_OK


def _parse_values(axis: str, text: str) -> list:
    if axis in ("m_t", "I_c"):
        return parse_int_list(text)
    return [v.strip() for v in text.split(",") if v.strip()]


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args)
    values = _parse_values(args.axis, args.values)
    if not values:
        raise ConfigError("--values is empty")
    print(f">>> Sweeping {args.axis} over {values} ({args.runs} runs each) ...")
    analyzer = ExperimentAnalyzer(config, args.out, workers=args.workers)
    table = analyzer.sweep(args.axis, values, args.runs, base_seed=config.seed)
    analyzer.export_sweep(args.axis, table, runs=args.runs)
    print(table.to_string(index=False))
    return EXIT_OK


def _parse_mix(text: str) -> tuple[int, int, int]:
    try:
        parts = parse_int_list(text)
    except ValueError as exc:
        raise ConfigError(f"--mix must be I_l,I_m,I_h, got {text!r}") from exc
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3 or min(parts) < 0:
        raise ConfigError(f"--mix must be I_l,I_m,I_h, got {text!r}")
    return parts[0], parts[1], parts[2]


def cmd_analyze(args: argparse.Namespace) -> int:
    seed, h = None, None
    if args.config is not None or args.overrides:
        config = _load(args)
        seed, h = config.seed, config.config_hash
    i_l, i_m, i_h = _parse_mix(args.mix)
    m_ts = parse_int_list(args.m_t)
    print(">>> Running analytics ...")
    mixes = [ThreatMix(i_l, i_m, i_h, Fraction(m)) for m in m_ts]
    write_table(overhead_table(mixes), args.out / "overhead.csv", seed, h)
    total = i_l + i_m + i_h
    shares = tuple(x / total for x in (i_l, i_m, i_h)) if total else (1 / 3, 1 / 3, 1 / 3)
    write_table(overhead_grid_table(m_ts, list(range(10, 101, 10)), shares), args.out / "overhead_grid.csv", seed, h)

    n_values = range(1, args.n_res_max + 1)
    factory = partial(create_responder_model, args.pmf) if args.pmf else None
    table = consensus_table(n_values, factory)
    write_table(table, args.out / "consensus_probability.csv", seed, h, pmf=args.pmf or "uniform")
    print(table.to_string(index=False))
    return EXIT_OK


def cmd_claims(args: argparse.Namespace) -> int:
    print(">>> Evaluating security claims ...")
    table = claims_table(args.nt_max)
    write_table(table, args.out / "claims.csv", None, None, nt_max=args.nt_max)
    flagged = int(table["out_of_range_flag"].sum())
    print(f"{len(table)} rows, {flagged} formula values outside [0, 1]")

    parts = [int(x) for x in args.scenario.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"--scenario must be N_t,m,m' got {args.scenario!r}")
    try:
        scenario = SecurityScenario(*parts)
    except ValueError as exc:
        raise ConfigError(f"--scenario: {exc}") from exc
    p_values = [float(x) for x in args.p.split(",") if x.strip()]
    if any(not 0 <= p <= 1 for p in p_values):
        raise ConfigError(f"--p values must lie in [0, 1], got {args.p!r}")
    write_table(claim5_table(p_values, scenario), args.out / "claim5.csv", None, None, scenario=args.scenario)
    return EXIT_OK


def cmd_validate_config(args: argparse.Namespace) -> int:
    config = _load(args)
    # building the simulation runs the checks that need the topology
    topology = Simulation(config).topology
    print(dump_resolved(config), end="")
    print(f"# config_hash={config.config_hash} nodes={len(topology.nodes)} heads={topology.heads}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "claims": cmd_claims,
    "validate-config": cmd_validate_config,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.verb](args)
    except EnumerationBoundError as exc:
        logger.error("%s", exc)
        return EXIT_BOUND
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        logger.error("file not found: %s", exc.filename or exc)
        return EXIT_CONFIG
    except Exception:  # noqa: BLE001
        logger.exception("unexpected failure")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
