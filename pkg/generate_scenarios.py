"""Scenario file generator for the SensorGuard project.

Run:
    python generate_scenarios.py

Writes ready-to-run scenario YAML files into scenarios/:
    - honest.yaml
    - blackhole.yaml
    - sinkhole.yaml
    - false_claimant.yaml
    - witness_sweep.yaml
"""

from __future__ import annotations

from pathlib import Path

import yaml

SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"
SCENARIO_DIR.mkdir(parents=True, exist_ok=True)

grid = {"placement": "grid", "cluster_count": 1, "cluster_size": 9, "radio_range": 1.5}

scenarios = {
    "honest": {
        "seed": 1,
        "topology": grid,
    },
    "blackhole": {
        "seed": 7,
        "topology": grid,
        "adversaries": [{"node": 1, "behavior": "black_hole"}],
    },
    "sinkhole": {
        "seed": 11,
        "topology": grid,
        "adversaries": [{"node": 5, "behavior": "sink_hole", "attraction": 2, "drop_probability": 0.75}],
    },
    "false_claimant": {
        "seed": 3,
        "topology": grid,
        "protocol": {"tolerance": 2},
        "adversaries": [{
            "node": 1, "behavior": "false_claimant", "accuse": [0, 2, 3],
            "level": 3, "first_tick": 100, "interval": 20, "count": 3,
        }],
    },
    # Fixed common-neighbour count for overhead sweeps over m_t and I_c.
    "witness_sweep": {
        "seed": 1,
        "topology": {"placement": "witness", "cluster_size": 16, "witnesses": 4, "claimants": 2},
        "traffic": {"rate": 0, "warm_start": True, "loss_probability": 0.0},
        "intrusions": {"count": 9, "level_weights": [1, 1, 1], "start": 10, "spacing": 20},
    },
}

for name, data in scenarios.items():
    with (SCENARIO_DIR / f"{name}.yaml").open("w", encoding="utf-8") as fh:
        yaml.safe_dump(data, fh, sort_keys=True, default_flow_style=False)

print("Generated: " + ", ".join(f"scenarios/{name}.yaml" for name in scenarios))
