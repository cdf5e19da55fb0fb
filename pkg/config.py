"""Scenario configuration: defaults, YAML loading, overrides and hashing."""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import yaml

from models import AdversaryProfile, Placement, ValidationMode
from utils import ConfigError, stable_hash

logger = logging.getLogger(__name__)

DEFAULTS: dict[str, Any] = {
    "seed": 1,
    "topology": {
        "placement": "grid",
        "cluster_count": 1,
        "cluster_size": 9,
        "radio_range": 1.5,
        "area": 3.0,
        "multi_hop": False,
        "monitor_ratio": 1.0,
        "witnesses": 4,
        "claimants": 2,
    },
    "adversaries": [],
    "protocol": {
        "reliability": "intrusion_aware",
        "mode": "aggressive",
        "tolerance": 0,
        "threat_levels": 3,
        "window_length": None,
    },
    "timing": {
        "duration": 400,
        "traffic_interval": 10,
        "t_prop": 1,
        "t_proc": 1,
    },
    "traffic": {
        "rate": 1,
        "warm_start": False,
        "head_warm_start": False,
        "loss_probability": 0.0,
    },
    "intrusions": {
        "count": 0,
        "level_weights": [1, 1, 1],
        "false_claim_rate": 0.0,
        "start": 10,
        "spacing": 20,
    },
}

ADVERSARY_KEYS = {
    "node", "behavior", "drop_probability", "attraction", "fabricate", "self_generated",
    "period", "accuse", "level", "first_tick", "interval", "count", "response",
}


@dataclass(frozen=True)
class TopologyConfig:
    placement: Placement = Placement.GRID
    cluster_count: int = 1
    cluster_size: int = 9
    radio_range: float = 1.5
    area: float = 3.0
    multi_hop: bool = False
    monitor_ratio: float = 1.0
    witnesses: int = 4
    claimants: int = 2

    @property
    def node_count(self) -> int:
        return self.cluster_count * self.cluster_size


@dataclass(frozen=True)
class ProtocolConfig:
    reliability: str = "intrusion_aware"
    mode: ValidationMode = ValidationMode.AGGRESSIVE
    tolerance: Union[int, str] = 0
    threat_levels: int = 3
    window_length: Optional[int] = None

    @property
    def random_tolerance(self) -> bool:
        return self.tolerance == "random"


@dataclass(frozen=True)
class TimingConfig:
    duration: int = 400
    traffic_interval: int = 10
    t_prop: int = 1
    t_proc: int = 1

    @property
    def pack_threshold(self) -> int:
        return 2 * self.t_prop + self.t_proc


@dataclass(frozen=True)
class TrafficConfig:
    rate: int = 1
    warm_start: bool = False
    head_warm_start: bool = False
    loss_probability: float = 0.0


@dataclass(frozen=True)
class IntrusionConfig:
    count: int = 0
    level_weights: tuple[float, ...] = (1, 1, 1)
    false_claim_rate: float = 0.0
    start: int = 10
    spacing: int = 20


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 1
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    timing: TimingConfig = field(default_factory=TimingConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    intrusions: IntrusionConfig = field(default_factory=IntrusionConfig)
    adversaries: tuple[AdversaryProfile, ...] = ()
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def window_length(self) -> int:
        if self.protocol.window_length is not None:
            return self.protocol.window_length
        return max(self.topology.cluster_size - 1, 1)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def adversary_at(self, node: int) -> Optional[AdversaryProfile]:
        for profile in self.adversaries:
            if profile.node == node:
                return profile
        return None


def deep_merge(base: dict, update: dict, path: str = "") -> dict:
    """Merge *update* over *base*; keys absent from *base* are rejected."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in merged:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a mapping, got {value!r}")
            merged[key] = deep_merge(merged[key], value, where + ".")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text: str) -> tuple[list[str], Any]:
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override has an empty key: {text!r}")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value of {key}: {exc}") from exc
    return key.split("."), value


def apply_overrides(data: dict, overrides: Iterable[str]) -> dict:
    """Apply dotted ``key=value`` overrides; values are parsed as YAML scalars."""
    data = copy.deepcopy(data)
    for text in overrides:
        path, value = parse_override(text)
        node = data
        for i, part in enumerate(path[:-1]):
            if not isinstance(node, dict) or part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown configuration key: {'.'.join(path[: i + 1])}")
            node = node[part]
        leaf = path[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"unknown configuration key: {'.'.join(path)}")
        if isinstance(node[leaf], dict):
            raise ConfigError(f"{'.'.join(path)} is a section, not a value")
        node[leaf] = value
        logger.debug("override %s = %r", ".".join(path), value)
    return data


def resolve(data: Optional[dict] = None, overrides: Iterable[str] = ()) -> dict:
    """Defaults, then file contents, then overrides."""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    merged = deep_merge(DEFAULTS, data)
    merged = apply_overrides(merged, overrides)
    for i, adv in enumerate(merged["adversaries"] or []):
        if not isinstance(adv, dict):
            raise ConfigError(f"adversaries[{i}] must be a mapping")
        unknown = set(adv) - ADVERSARY_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration key: adversaries[{i}].{sorted(unknown)[0]}")
    return merged


def config_hash(resolved: dict) -> str:
    return stable_hash(resolved)


def read_config_file(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return data or {}


def load_config(path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = ()) -> ScenarioConfig:
    from factories import create_scenario

    data = read_config_file(path) if path is not None else {}
    resolved = resolve(data, overrides)
    config = create_scenario(resolved)
    logger.debug("config %s resolved to hash %s", path or "<defaults>", config.config_hash)
    return config


def dump_resolved(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.raw, sort_keys=True)


def summary_payload(config: ScenarioConfig) -> dict:
    return {"seed": config.seed, "config_hash": config.config_hash, "config": config.raw}
