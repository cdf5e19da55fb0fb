"""Experiment engine: run export, parameter sweeps and table writing."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from config import ScenarioConfig, apply_overrides, summary_payload
from factories import create_scenario
from models import MetricsReport, Placement, ReliabilityTier, ThreatLevel
from network_sim import Simulation
from reliability import get_policy
from utils import ConfigError, VALID_POLICIES, table_header

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
SWEEP_AXES = ("m_t", "I_c", "policy", "tolerance")

MESSAGE_COLUMNS = ["tick", "msg_type", "src", "dst", "accused", "level_or_value"]
DECISION_COLUMNS = ["tick", "receiver", "sender", "accused", "n_req", "n_res", "sum", "outcome", "resolved"]
SNAPSHOT_COLUMNS = ["window_index", "observer", "subject", "S", "U", "trust", "state", "f", "g"]
ALERT_COLUMNS = ["tick", "sender", "accused", "level", "detail_hex"]
SWEEP_COLUMNS = ["axis_value", "policy", "mean_messages", "analytic_messages"]


def write_table(df: pd.DataFrame, path: Path, seed: Optional[int], config_hash: Optional[str], **extra) -> Path:
    """Comment header with seed and config hash, then the CSV body."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(table_header(seed, config_hash, **extra) + "\n")
        df.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Saved: %s", path)
    return path


def format_summary(report: MetricsReport) -> str:
    lines = ["=" * 70, "SensorGuard - Run Summary", "=" * 70]
    lines.append(f"seed={report.seed}  config_hash={report.config_hash}  final_tick={report.final_tick}")
    lines.append("\n--- Claims ---")
    lines.append(f"alerts sent: {report.alerts}")
    lines.append(f"consensus rounds: {report.consensus_rounds} "
                 f"(low {report.claims_low}, medium {report.claims_medium}, high {report.claims_high})")
    lines.append(f"accepted directly: {report.accepted_direct}   discarded: {report.discarded}")
    lines.append(f"duplicates: {report.duplicate_updates} updates, {report.duplicate_direct} direct validations")
    lines.append("\n--- Decisions ---")
    lines.append(f"validated: {report.validated}   invalidated: {report.invalidated}   "
                 f"resolved by mode: {report.no_consensus_resolved}")
    lines.append(f"evictions: {report.true_positive_evictions} true, {report.false_evictions} false")
    lines.append("\n--- Overhead ---")
    lines.append(f"conf_req: {report.conf_req}   conf_resp: {report.conf_resp}   "
                 f"lost: {report.messages_lost}   late: {report.late_responses}")
    lines.append(f"mean commonly trusted neighbours (m_t): {float(report.mean_common_trusted):.3f}")
    return "\n".join(lines) + "\n"


class ExperimentAnalyzer:
    """Runs scenarios and turns their logs into tables."""

    def __init__(self, config: ScenarioConfig, out_dir: Path, workers: int = 1) -> None:
        self.config = config
        self.out_dir = Path(out_dir)
        self.workers = max(int(workers), 1)

    # --------------------- Single run ---------------------

    def run(self) -> Simulation:
        sim = Simulation(self.config)
        sim.run()
        return sim

    def export_run(self, sim: Simulation) -> list[Path]:
        seed, h = self.config.seed, self.config.config_hash
        out = self.out_dir
        report = sim.report
        paths = [
            write_table(pd.DataFrame(sim.messages, columns=MESSAGE_COLUMNS), out / "messages.csv", seed, h),
            write_table(pd.DataFrame(sim.decisions, columns=DECISION_COLUMNS), out / "decisions.csv", seed, h),
            write_table(pd.DataFrame(sim.snapshots, columns=SNAPSHOT_COLUMNS), out / "trust_snapshots.csv",
                        seed, h, rounding="half_away_from_zero"),
            write_table(pd.DataFrame([report.to_dict()]), out / "metrics.csv", seed, h),
            write_table(pd.DataFrame(sim.alert_rows, columns=ALERT_COLUMNS), out / "alerts.csv", seed, h),
        ]
        summary = {"metrics": report.to_dict(), **summary_payload(self.config)}
        summary_path = out / "summary.json"
        summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2, default=str) + "\n", encoding="utf-8")
        logger.info("Saved: %s", summary_path)
        paths.append(summary_path)

        report_path = out / "summary_report.txt"
        report_path.write_text(format_summary(report), encoding="utf-8")
        paths.append(report_path)
        return paths

    # --------------------- Sweeps ---------------------

    def _medium_claims_possible(self) -> bool:
        protocol = self.config.protocol
        if protocol.reliability == "medium":
            return True
        if protocol.reliability != "intrusion_aware":
            return False
        k = protocol.threat_levels
        return any(
            w > 0 and ThreatLevel(i + 1, k).tier is ReliabilityTier.MEDIUM
            for i, w in enumerate(self.config.intrusions.level_weights)
        )

    def axis_overrides(self, axis: str, value) -> list[str]:
        cfg = self.config
        topo = cfg.topology
        if axis == "m_t":
            if topo.placement is not Placement.WITNESS:
                raise ConfigError("sweep axis m_t needs topology.placement=witness")
            if int(value) % 2 and self._medium_claims_possible():
                raise ConfigError(
                    f"m_t={value}: medium fan-out sends ceil(m_t/2) requests, so the closed form "
                    "m_t*I_c only holds for even m_t"
                )
            size = max(topo.cluster_size, 1 + int(value) + topo.claimants + cfg.intrusions.count)
            return [f"topology.witnesses={int(value)}", f"topology.cluster_size={size}"]
        if axis == "I_c":
            out = [f"intrusions.count={int(value)}"]
            if topo.placement is Placement.WITNESS:
                size = max(topo.cluster_size, 1 + topo.witnesses + topo.claimants + int(value))
                out.append(f"topology.cluster_size={size}")
            return out
        if axis == "policy":
            if value not in VALID_POLICIES:
                raise ConfigError(f"policy must be one of {sorted(VALID_POLICIES)}, got {value!r}")
            return [f"protocol.reliability={value}"]
        if axis == "tolerance":
            return [f"protocol.tolerance={value}"]
        raise ConfigError(f"sweep axis must be one of {list(SWEEP_AXES)}, got {axis!r}")

    def sweep(self, axis: str, values: Sequence, runs: int, base_seed: Optional[int] = None) -> pd.DataFrame:
        """Mean simulated overhead and closed-form overhead per axis value."""
        if runs < 1:
            raise ConfigError(f"runs must be >= 1, got {runs}")
        base_seed = self.config.seed if base_seed is None else base_seed
        jobs = []
        for value in values:
            resolved = apply_overrides(self.config.raw, self.axis_overrides(axis, value))
            create_scenario(resolved)  # fail fast on a bad axis value
            jobs.extend((value, resolved, base_seed + i) for i in range(runs))

        logger.info("Sweeping %s over %d values x %d runs (%d workers)", axis, len(values), runs, self.workers)
        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(_run_job, jobs, chunksize=max(len(jobs) // (4 * self.workers), 1)))
        else:
            results = [_run_job(job) for job in jobs]

        per_run = pd.DataFrame(results, columns=["axis_value", "policy", "messages", "analytic"])
        per_run["axis_value"] = per_run["axis_value"].astype(str)
        means = per_run.groupby(["axis_value", "policy"], sort=False)[["messages", "analytic"]].mean().reset_index()
        means = means.rename(columns={"messages": "mean_messages", "analytic": "analytic_messages"})
        return means[SWEEP_COLUMNS]

    def export_sweep(self, axis: str, table: pd.DataFrame, **extra) -> Path:
        return write_table(table, self.out_dir / f"sweep_{axis}.csv", self.config.seed, self.config.config_hash,
                           axis=axis, **extra)


def _run_job(job: tuple) -> tuple:
    value, resolved, seed = job
    config = create_scenario({**resolved, "seed": seed})
    report = Simulation(config).run()
    policy = config.protocol.reliability
    analytic = get_policy(policy).overhead(report.mix)
    return (value, policy, report.overhead_messages, float(analytic))
