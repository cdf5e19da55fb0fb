"""Factory Pattern: create domain objects from raw dictionaries."""

from __future__ import annotations

from fractions import Fraction
from typing import Any

from config import (
    IntrusionConfig,
    ProtocolConfig,
    ScenarioConfig,
    TimingConfig,
    TopologyConfig,
    TrafficConfig,
)
from models import AdversaryProfile, Behavior, Placement, ResponderModel, ValidationMode
from utils import (
    MAX_TOLERANCE,
    VALID_BEHAVIORS,
    VALID_MODES,
    VALID_PLACEMENTS,
    VALID_POLICIES,
    ConfigError,
)


def _int(section: dict, key: str, where: str, minimum: int | None = None) -> int:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}, got {value}")
    return value


def _float(section: dict, key: str, where: str, low: float | None = None, high: float | None = None) -> float:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    if low is not None and value < low:
        raise ConfigError(f"{where}.{key} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ConfigError(f"{where}.{key} must be <= {high}, got {value}")
    return float(value)


def _choice(section: dict, key: str, where: str, allowed: set) -> str:
    value = str(section[key]).lower().strip()
    if value not in allowed:
        raise ConfigError(f"{where}.{key} must be one of {sorted(allowed)}, got {section[key]!r}")
    return value


def _bool(section: dict, key: str, where: str) -> bool:
    value = section[key]
    if not isinstance(value, bool):
        raise ConfigError(f"{where}.{key} must be true or false, got {value!r}")
    return value


def create_adversary(data: dict, index: int = 0) -> AdversaryProfile:
    where = f"adversaries[{index}]"
    if "node" not in data or "behavior" not in data:
        raise ConfigError(f"{where} needs both 'node' and 'behavior'")
    behavior = _choice(data, "behavior", where, VALID_BEHAVIORS)
    node = _int(data, "node", where, minimum=0)
    params = {k: v for k, v in data.items() if k not in ("node", "behavior")}
    try:
        return AdversaryProfile(node=node, behavior=Behavior(behavior), params=params)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _check_false_claimant(adv: AdversaryProfile, index: int, node_count: int, k: int) -> None:
    where = f"adversaries[{index}]"
    params = adv.params
    accuse = params["accuse"]
    if not isinstance(accuse, list):
        raise ConfigError(f"{where}.accuse must be a list of node ids, got {accuse!r}")
    for node in accuse:
        if isinstance(node, bool) or not isinstance(node, int) or not 0 <= node < node_count:
            raise ConfigError(f"{where}.accuse entry {node!r} is not a node of the {node_count}-node network")
        if node == adv.node:
            raise ConfigError(f"{where}.accuse must not name the claimant n{adv.node} itself")
    level = params["level"]
    if level is not None:
        if isinstance(level, bool) or not isinstance(level, int) or not 1 <= level <= k:
            raise ConfigError(f"{where}.level must be an integer in 1..{k}, got {level!r}")
    _int(params, "first_tick", where, minimum=0)
    _int(params, "interval", where, minimum=1)
    _int(params, "count", where, minimum=0)


def create_topology_config(data: dict) -> TopologyConfig:
    where = "topology"
    cfg = TopologyConfig(
        placement=Placement(_choice(data, "placement", where, VALID_PLACEMENTS)),
        cluster_count=_int(data, "cluster_count", where, minimum=1),
        cluster_size=_int(data, "cluster_size", where, minimum=2),
        radio_range=_float(data, "radio_range", where, low=0.0),
        area=_float(data, "area", where, low=0.0),
        multi_hop=_bool(data, "multi_hop", where),
        monitor_ratio=_float(data, "monitor_ratio", where, low=0.0, high=1.0),
        witnesses=_int(data, "witnesses", where, minimum=1),
        claimants=_int(data, "claimants", where, minimum=1),
    )
    if cfg.placement is Placement.WITNESS:
        if cfg.cluster_size < 4:
            raise ConfigError(f"topology.cluster_size must be >= 4 for witness placement, got {cfg.cluster_size}")
        if cfg.cluster_size - 1 - cfg.witnesses - cfg.claimants < 1:
            raise ConfigError(
                "topology.cluster_size leaves no accused pool: need > 1 + witnesses + claimants "
                f"({cfg.cluster_size} <= 1 + {cfg.witnesses} + {cfg.claimants})"
            )
    return cfg


def create_protocol_config(data: dict) -> ProtocolConfig:
    where = "protocol"
    tolerance = data["tolerance"]
    if tolerance != "random":
        tolerance = _int(data, "tolerance", where, minimum=0)
        if tolerance > MAX_TOLERANCE:
            raise ConfigError(f"protocol.tolerance must be 0..{MAX_TOLERANCE} or 'random', got {tolerance}")
    window = data["window_length"]
    if window is not None:
        window = _int(data, "window_length", where, minimum=1)
    return ProtocolConfig(
        reliability=_choice(data, "reliability", where, VALID_POLICIES),
        mode=ValidationMode(_choice(data, "mode", where, VALID_MODES)),
        tolerance=tolerance,
        threat_levels=_int(data, "threat_levels", where, minimum=1),
        window_length=window,
    )


def create_timing_config(data: dict) -> TimingConfig:
    where = "timing"
    cfg = TimingConfig(
        duration=_int(data, "duration", where, minimum=0),
        traffic_interval=_int(data, "traffic_interval", where, minimum=1),
        t_prop=_int(data, "t_prop", where, minimum=0),
        t_proc=_int(data, "t_proc", where, minimum=0),
    )
    if cfg.traffic_interval <= cfg.pack_threshold + 1:
        raise ConfigError(
            f"timing.traffic_interval must exceed the PACK threshold plus one tick "
            f"({cfg.traffic_interval} <= {cfg.pack_threshold + 1})"
        )
    return cfg


def create_traffic_config(data: dict) -> TrafficConfig:
    where = "traffic"
    return TrafficConfig(
        rate=_int(data, "rate", where, minimum=0),
        warm_start=_bool(data, "warm_start", where),
        head_warm_start=_bool(data, "head_warm_start", where),
        loss_probability=_float(data, "loss_probability", where, low=0.0, high=1.0),
    )


def create_intrusion_config(data: dict, k: int) -> IntrusionConfig:
    where = "intrusions"
    weights = data["level_weights"]
    if not isinstance(weights, (list, tuple)) or len(weights) != k:
        raise ConfigError(f"intrusions.level_weights must list {k} weights, got {weights!r}")
    if any(isinstance(w, bool) or not isinstance(w, (int, float)) or w < 0 for w in weights) or sum(weights) <= 0:
        raise ConfigError(f"intrusions.level_weights must be non-negative with a positive sum, got {weights!r}")
    return IntrusionConfig(
        count=_int(data, "count", where, minimum=0),
        level_weights=tuple(float(w) for w in weights),
        false_claim_rate=_float(data, "false_claim_rate", where, low=0.0, high=1.0),
        start=_int(data, "start", where, minimum=0),
        spacing=_int(data, "spacing", where, minimum=1),
    )


def create_scenario(resolved: dict) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a fully resolved config dict."""
    seed = resolved["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    topology = create_topology_config(resolved["topology"])
    protocol = create_protocol_config(resolved["protocol"])
    intrusions = create_intrusion_config(resolved["intrusions"], protocol.threat_levels)
    adversaries = tuple(create_adversary(adv, i) for i, adv in enumerate(resolved["adversaries"] or []))

    nodes = [a.node for a in adversaries]
    if len(nodes) != len(set(nodes)):
        raise ConfigError("adversaries: a node may carry only one behavior")
    for i, adv in enumerate(adversaries):
        if adv.node >= topology.node_count:
            raise ConfigError(f"adversaries[{i}].node {adv.node} is outside the {topology.node_count}-node network")
        if adv.behavior is Behavior.FALSE_CLAIMANT:
            _check_false_claimant(adv, i, topology.node_count, protocol.threat_levels)

    if topology.placement is Placement.WITNESS:
        pool = topology.cluster_size - 1 - topology.witnesses - topology.claimants
        if intrusions.count > pool * topology.cluster_count:
            raise ConfigError(
                f"intrusions.count {intrusions.count} exceeds the accused pool of {pool} nodes per cluster"
            )

    return ScenarioConfig(
        seed=seed,
        topology=topology,
        protocol=protocol,
        timing=create_timing_config(resolved["timing"]),
        traffic=create_traffic_config(resolved["traffic"]),
        intrusions=intrusions,
        adversaries=adversaries,
        raw=resolved,
    )


def create_responder_model(pmf: Any, n_res: int) -> ResponderModel:
    """Identical responders from a pmf given as 'uniform', '1/3,1/3,1/3' or a sequence."""
    if pmf is None or (isinstance(pmf, str) and pmf.strip().lower() == "uniform"):
        return ResponderModel.uniform(n_res)
    if isinstance(pmf, str):
        parts = [p.strip() for p in pmf.split(",")]
        try:
            values = tuple(Fraction(p) for p in parts)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse pmf {pmf!r}: {exc}") from exc
    else:
        values = tuple(pmf)
    try:
        return ResponderModel.identical(n_res, values)
    except ValueError as exc:
        raise ConfigError(f"invalid pmf {pmf!r}: {exc}") from exc
