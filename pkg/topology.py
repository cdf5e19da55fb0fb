"""Cluster topologies: grid, uniform random and witness placements."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx
import numpy as np

from config import TopologyConfig
from models import NodeId, Placement
from utils import ConfigError

logger = logging.getLogger(__name__)

EPS = 1e-9


@dataclass
class Topology:
    graph: nx.Graph
    clusters: list[list[NodeId]]
    heads: list[NodeId]
    monitors: set[NodeId]
    placement: Placement
    multi_hop: bool = False
    _cluster_of: dict[NodeId, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._cluster_of = {node: c for c, members in enumerate(self.clusters) for node in members}
        self._neighbors = {node: frozenset(self.graph.neighbors(node)) for node in self.graph.nodes}
        self._hops: dict[NodeId, dict[NodeId, int]] = {}

    @property
    def nodes(self) -> list[NodeId]:
        return sorted(self.graph.nodes)

    @property
    def neighbor_map(self) -> dict[NodeId, frozenset[NodeId]]:
        return dict(self._neighbors)

    def neighbors(self, node: NodeId) -> set[NodeId]:
        return set(self._neighbors[node])

    def cluster_of(self, node: NodeId) -> int:
        return self._cluster_of[node]

    def head_of(self, node: NodeId) -> NodeId:
        return self.heads[self._cluster_of[node]]

    def is_head(self, node: NodeId) -> bool:
        return node in self.heads

    def members(self, cluster: int) -> list[NodeId]:
        head = self.heads[cluster]
        return [n for n in self.clusters[cluster] if n != head]

    def cluster_neighbors(self, node: NodeId) -> list[NodeId]:
        c = self._cluster_of[node]
        return sorted(n for n in self._neighbors[node] if self._cluster_of[n] == c)

    def hops(self, a: NodeId, b: NodeId) -> int:
        if a == b:
            return 0
        if a not in self._hops:
            self._hops[a] = nx.single_source_shortest_path_length(self.graph, a)
        try:
            return self._hops[a][b]
        except KeyError:
            raise ValueError(f"n{b} is unreachable from n{a}") from None

    def position(self, node: NodeId) -> tuple[float, float]:
        return self.graph.nodes[node]["pos"]


def common_neighbors(topology: Topology, a: NodeId, b: NodeId) -> set[NodeId]:
    return topology.neighbors(a) & topology.neighbors(b)


def _grid_positions(n: int, offset: float) -> list[tuple[float, float]]:
    side = math.ceil(math.sqrt(n))
    return [(offset + float(i % side), float(i // side)) for i in range(n)]


def _random_positions(n: int, area: float, offset: float, rng: np.random.Generator) -> list[tuple[float, float]]:
    xy = rng.uniform(0.0, area, size=(n, 2))
    return [(offset + float(x), float(y)) for x, y in xy]


def _nearest_centroid(graph: nx.Graph, members: list[NodeId]) -> NodeId:
    pts = np.array([graph.nodes[m]["pos"] for m in members])
    centroid = pts.mean(axis=0)
    dist = np.hypot(pts[:, 0] - centroid[0], pts[:, 1] - centroid[1])
    # argmin keeps the first (lowest id) on ties
    return members[int(np.argmin(np.round(dist, 9)))]


def _link_by_range(graph: nx.Graph, members: list[NodeId], radio_range: float) -> None:
    for i, a in enumerate(members):
        ax, ay = graph.nodes[a]["pos"]
        for b in members[i + 1:]:
            bx, by = graph.nodes[b]["pos"]
            if math.hypot(ax - bx, ay - by) <= radio_range + EPS:
                graph.add_edge(a, b)


def _check_reachability(graph: nx.Graph, members: list[NodeId], head: NodeId, multi_hop: bool, cluster: int) -> None:
    if multi_hop:
        if not nx.is_connected(graph.subgraph(members)):
            raise ConfigError(
                f"topology.radio_range too small: cluster {cluster} is not connected"
            )
        return
    far = [m for m in members if m != head and not graph.has_edge(m, head)]
    if far:
        raise ConfigError(
            f"topology.radio_range too small: n{far[0]} in cluster {cluster} cannot reach head n{head} "
            "(set topology.multi_hop to allow relaying)"
        )


def _witness_cluster(graph: nx.Graph, base: int, config: TopologyConfig) -> tuple[list[NodeId], NodeId]:
    """Head, a clique of witnesses, claimants and an accused pool.

    Claimants and accused nodes see every witness and the head; no two
    claimants and no two accused nodes are neighbours, so every
    (claimant, accused) pair shares exactly the witnesses and the head.
    """
    n = config.cluster_size
    head = base
    witnesses = list(range(base + 1, base + 1 + config.witnesses))
    claimants = list(range(witnesses[-1] + 1, witnesses[-1] + 1 + config.claimants))
    accused = list(range(claimants[-1] + 1, base + n))
    members = list(range(base, base + n))

    for i, node in enumerate(members):
        angle = 2 * math.pi * i / n
        role = "head" if node == head else "witness" if node in witnesses else "claimant" if node in claimants else "accused"
        graph.add_node(node, pos=(base + math.cos(angle), math.sin(angle)), role=role)

    for w in witnesses:
        graph.add_edge(head, w)
    for i, a in enumerate(witnesses):
        for b in witnesses[i + 1:]:
            graph.add_edge(a, b)
    for node in claimants + accused:
        graph.add_edge(head, node)
        for w in witnesses:
            graph.add_edge(node, w)
    for c in claimants:
        for a in accused:
            graph.add_edge(c, a)
    return members, head


def build_topology(config: TopologyConfig, rng: Optional[np.random.Generator] = None) -> Topology:
    """Place nodes, link them by radio range and pick one head per cluster."""
    rng = rng if rng is not None else np.random.default_rng(0)
    graph = nx.Graph()
    clusters: list[list[NodeId]] = []
    heads: list[NodeId] = []
    n = config.cluster_size

    for c in range(config.cluster_count):
        base = c * n
        if config.placement is Placement.WITNESS:
            members, head = _witness_cluster(graph, base, config)
        else:
            if config.placement is Placement.GRID:
                width = math.ceil(math.sqrt(n))
                positions = _grid_positions(n, offset=c * (width + config.radio_range + 1.0))
            else:
                positions = _random_positions(n, config.area, c * (config.area + config.radio_range + 1.0), rng)
            members = list(range(base, base + n))
            for node, pos in zip(members, positions):
                graph.add_node(node, pos=pos, role="member")
            _link_by_range(graph, members, config.radio_range)
            head = _nearest_centroid(graph, members)
            graph.nodes[head]["role"] = "head"
            _check_reachability(graph, members, head, config.multi_hop, c)
        for node in members:
            graph.nodes[node]["cluster"] = c
        clusters.append(members)
        heads.append(head)

    monitors = _choose_monitors(graph, clusters, heads, config.monitor_ratio, rng)
    topo = Topology(graph=graph, clusters=clusters, heads=heads, monitors=monitors,
                    placement=config.placement, multi_hop=config.multi_hop)
    logger.info(
        "Built %s topology: %d clusters, %d nodes, %d links",
        config.placement.value, len(clusters), graph.number_of_nodes(), graph.number_of_edges(),
    )
    return topo


def _choose_monitors(
    graph: nx.Graph,
    clusters: list[list[NodeId]],
    heads: list[NodeId],
    ratio: float,
    rng: np.random.Generator,
) -> set[NodeId]:
    monitors: set[NodeId] = set()
    for members, head in zip(clusters, heads):
        candidates = [m for m in members if m != head]
        if ratio >= 1.0:
            chosen = candidates
        else:
            count = int(round(ratio * len(candidates)))
            picks = rng.choice(len(candidates), size=count, replace=False)
            chosen = [candidates[int(i)] for i in sorted(picks)]
        monitors.update(chosen)
    return monitors
