"""Deterministic discrete-event simulation of a clustered sensor network.

Members exchange data traffic, monitors score their neighbours from
passive acknowledgements, windows close into alerts, and every cluster
head validates the alerts it receives through the consensus protocol.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

import numpy as np
import simpy

from alert_pipeline import alert_log_row, build_alert, detect_and_alert
from config import ScenarioConfig
from models import (
    HIGH,
    RESPONSE_VALUES,
    AdversaryProfile,
    AlertMessage,
    Behavior,
    ConfirmationRequest,
    Decision,
    DecisionKind,
    DuplicateAction,
    ForwardOutcome,
    InteractionOutcome,
    MetricsReport,
    NodeId,
    OutcomeEffect,
    Placement,
    ReliabilityTier,
    Resolution,
    Response,
    Route,
    ThreatLevel,
    TrustState,
    ValidationMode,
    ValidationSession,
)
from topology import Topology, build_topology
from trust_engine import TrustTable, advance_window, reassess, record_interaction, snapshot_rows
from utils import ConfigError, fmt_node
from validator import ClaimValidator, SessionClose, ToleranceState, evaluate, respond_to_confirmation

logger = logging.getLogger(__name__)

STREAMS = ("topology", "traffic", "intrusions", "validator", "tolerance", "loss")


class EventKind(Enum):
    TRAFFIC = "traffic"
    FORWARD = "forward"
    PACK = "pack"
    WINDOW = "window"
    ALERT = "alert"
    CONF_REQ = "conf_req"
    CONF_RESP = "conf_resp"
    DEADLINE = "deadline"
    INTRUSION = "intrusion"
    FALSE_CLAIM = "false_claim"


@dataclass
class Event:
    tick: int
    kind: EventKind
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PacketEvent:
    tick: int
    sender: NodeId
    forwarder: NodeId
    round: int


@dataclass(frozen=True)
class IntrusionPlan:
    tick: int
    claimant: NodeId
    accused: NodeId
    level: ThreatLevel
    genuine: bool


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    """One independent generator per concern, all derived from *seed*."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def adversary_act(profile: Optional[AdversaryProfile], packet: PacketEvent, rng: np.random.Generator) -> ForwardOutcome:
    """What a forwarder does with a packet handed to it."""
    if profile is None or not profile.behavior.drops_packets:
        return ForwardOutcome.FORWARDED
    behavior = profile.behavior
    if behavior is Behavior.BLACK_HOLE:
        return ForwardOutcome.DROPPED
    draw = rng.random()
    if behavior is Behavior.GRAY_HOLE:
        period = max(int(profile.params.get("period", 1)), 1)
        active = (packet.round // period) % 2 == 0
        return ForwardOutcome.DROPPED if active and draw < profile.drop_probability else ForwardOutcome.FORWARDED
    if draw < profile.drop_probability:
        return ForwardOutcome.DROPPED
    if behavior is Behavior.SINK_HOLE and profile.params.get("fabricate"):
        return ForwardOutcome.FABRICATED
    return ForwardOutcome.FORWARDED


def plan_intrusions(config: ScenarioConfig, topology: Topology, monitors: set[NodeId],
                    rng: np.random.Generator) -> list[IntrusionPlan]:
    """Scripted intrusion events: a fresh accused and a claimant per event."""
    script = config.intrusions
    k = config.protocol.threat_levels
    weights = np.array(script.level_weights, dtype=float)
    weights = weights / weights.sum()
    adversaries = {a.node for a in config.adversaries}
    used: set[NodeId] = set()
    plans = []

    for i in range(script.count):
        cluster = i % len(topology.clusters)
        head = topology.heads[cluster]
        if topology.placement is Placement.WITNESS:
            roles = topology.graph.nodes
            pool = [n for n in topology.clusters[cluster] if roles[n]["role"] == "accused" and n not in used]
        else:
            pool = [
                n for n in topology.members(cluster)
                if n not in used and n not in adversaries
                and any(m in monitors and m != head for m in topology.neighbors(n))
            ]
        if not pool:
            raise ConfigError(f"intrusions.count {script.count} exhausts the accused pool of cluster {cluster}")
        accused = pool[int(rng.integers(len(pool)))]
        used.add(accused)
        if topology.placement is Placement.WITNESS:
            candidates = sorted(n for n in topology.clusters[cluster] if topology.graph.nodes[n]["role"] == "claimant")
        else:
            candidates = sorted(m for m in topology.neighbors(accused) if m in monitors and m != head)
        claimant = candidates[int(rng.integers(len(candidates)))]
        level = ThreatLevel(int(rng.choice(k, p=weights)) + 1, k)
        genuine = bool(rng.random() >= script.false_claim_rate)
        plans.append(IntrusionPlan(script.start + i * script.spacing, claimant, accused, level, genuine))
    return plans


class Simulation:
    """One seeded run; :meth:`run` drains the event queue."""

    def __init__(self, config: ScenarioConfig, topology: Optional[Topology] = None) -> None:
        self.config = config
        self.rngs = make_streams(config.seed)
        self.topology = topology or build_topology(config.topology, self.rngs["topology"])
        self.window_length = config.window_length
        self.k = config.protocol.threat_levels
        self.adversaries = {a.node: a for a in config.adversaries}
        self._check_adversaries()

        droppers = {n for n, a in self.adversaries.items() if a.behavior.drops_packets}
        claimers = {n for n, a in self.adversaries.items() if a.behavior is Behavior.FALSE_CLAIMANT}
        self.monitors = (set(self.topology.monitors) | claimers) - droppers

        self.tables: dict[NodeId, TrustTable] = {
            node: TrustTable(node, population=config.topology.cluster_size, window_length=self.window_length)
            for node in self.topology.nodes
        }
        self.validators: dict[NodeId, ClaimValidator] = {}
        for cluster, head in enumerate(self.topology.heads):
            self.validators[head] = ClaimValidator(
                table=self.tables[head],
                neighbors_of=self.topology.neighbors,
                rng=self.rngs["validator"],
                policy=config.protocol.reliability,
                mode=config.protocol.mode,
                tolerance=self._tolerance_for(cluster),
                t_prop=config.timing.t_prop,
                t_proc=config.timing.t_proc,
                hops_to=lambda node, h=head: self.topology.hops(h, node),
            )

        self.env = simpy.Environment()
        self._last: Optional[Event] = None
        self.report = MetricsReport(seed=config.seed, config_hash=config.config_hash)
        self.messages: list[dict] = []
        self.decisions: list[dict] = []
        self.snapshots: list[dict] = []
        self.alert_rows: list[dict] = []
        self.marked_at: dict[NodeId, int] = {}
        self.evicted_at: dict[NodeId, int] = {}
        self.plans = plan_intrusions(config, self.topology, self.monitors, self.rngs["intrusions"])
        self._handlers: dict[EventKind, Callable[[Event], None]] = {
            EventKind.FORWARD: self._on_forward,
            EventKind.PACK: self._on_pack,
            EventKind.ALERT: self._on_alert,
            EventKind.CONF_REQ: self._on_conf_req,
            EventKind.CONF_RESP: self._on_conf_resp,
            EventKind.DEADLINE: self._on_deadline,
            EventKind.INTRUSION: self._on_intrusion,
            EventKind.FALSE_CLAIM: self._on_false_claim,
        }
        self._schedule_initial()

    # ------------------------------------------------------------------ setup

    def _check_adversaries(self) -> None:
        for node in sorted(self.adversaries):
            if self.topology.is_head(node):
                raise ConfigError(f"adversaries: n{node} is a cluster head; heads are trusted validators")

    def _tolerance_for(self, cluster: int) -> ToleranceState:
        tolerance = self.config.protocol.tolerance
        if tolerance == "random":
            return ToleranceState.random(self.topology.members(cluster), self.rngs["tolerance"])
        return ToleranceState.fixed(int(tolerance))

    def _schedule_initial(self) -> None:
        cfg = self.config
        if cfg.traffic.warm_start:
            self._warm_start(sorted(self.monitors))
        if cfg.traffic.head_warm_start:
            self._warm_start(self.topology.heads)
        if cfg.traffic.rate > 0 and cfg.timing.duration > 0:
            # first timeouts are created here so same-tick ties keep this order
            self.env.process(self._traffic_rounds(self.env.timeout(0)))
            first_close = self.window_length * cfg.timing.traffic_interval - 1
            if first_close < cfg.timing.duration:
                self.env.process(self._window_closes(self.env.timeout(first_close)))
        for plan in self.plans:
            self.schedule(plan.tick, EventKind.INTRUSION, plan=plan)
        for node in sorted(self.adversaries):
            profile = self.adversaries[node]
            if profile.behavior is not Behavior.FALSE_CLAIMANT:
                continue
            first, interval = int(profile.params["first_tick"]), int(profile.params["interval"])
            for j in range(int(profile.params["count"])):
                self.schedule(first + j * interval, EventKind.FALSE_CLAIM, node=node, index=j)

    def _warm_start(self, observers: list[NodeId]) -> None:
        """One window of successful interactions with every cluster neighbour."""
        for node in observers:
            table = self.tables[node]
            for neighbor in self.topology.cluster_neighbors(node):
                for _ in range(self.window_length):
                    record_interaction(table, neighbor, InteractionOutcome.SUCCESSFUL)
            advance_window(table)
            self.snapshots.extend(snapshot_rows(table))

    # ------------------------------------------------------------------ engine

    @property
    def now(self) -> int:
        return int(self.env.now)

    @property
    def pending(self) -> bool:
        return self.env.peek() != simpy.core.Infinity

    def schedule(self, tick: int, kind: EventKind, **payload: Any) -> simpy.Timeout:
        """Dispatch *kind* at *tick*; simpy runs same-tick events in insertion order."""
        if tick < self.now:
            raise ValueError(f"cannot schedule {kind.value} in the past ({tick} < {self.now})")
        timeout = self.env.timeout(tick - self.now, value=Event(tick, kind, payload))
        timeout.callbacks.append(self._dispatch)
        return timeout

    def _dispatch(self, timeout: simpy.Timeout) -> None:
        event: Event = timeout.value
        self._last = event
        self._handlers[event.kind](event)

    def step(self) -> Optional[Event]:
        """Advance to the next protocol event and return it, or None when drained."""
        self._last = None
        while self._last is None and self.pending:
            self.env.step()
        return self._last

    def run(self) -> MetricsReport:
        logger.debug("run seed=%s hash=%s", self.config.seed, self.config.config_hash)
        self.env.run()
        self.report.final_tick = self.now
        self.report.trust_snapshot_rows = len(self.snapshots)
        return self.report

    def _log(self, msg_type: str, src: NodeId, dst: NodeId, accused: NodeId, value: int) -> None:
        self.messages.append({
            "tick": self.now, "msg_type": msg_type, "src": src, "dst": dst,
            "accused": accused, "level_or_value": value,
        })

    def _lost(self) -> bool:
        p = self.config.traffic.loss_probability
        return p > 0 and bool(self.rngs["loss"].random() < p)

    def _delay(self, a: NodeId, b: NodeId) -> int:
        return self.topology.hops(a, b) * self.config.timing.t_prop

    # ------------------------------------------------------------------ traffic

    def _traffic_rounds(self, first: simpy.Timeout):
        timing = self.config.timing
        yield first
        rnd = 0
        while True:
            self._last = Event(self.now, EventKind.TRAFFIC, {"round": rnd})
            self._send_round(rnd)
            if self.now + timing.traffic_interval >= timing.duration:
                return
            yield self.env.timeout(timing.traffic_interval)
            rnd += 1

    def _sources(self) -> list[NodeId]:
        """Monitors plus black holes that emit their own packets."""
        emitters = {
            n for n, a in self.adversaries.items()
            if a.behavior is Behavior.BLACK_HOLE and a.params.get("self_generated")
        }
        return sorted(self.monitors | emitters)

    def _send_round(self, rnd: int) -> None:
        for node in self._sources():
            for neighbor in self.topology.cluster_neighbors(node):
                profile = self.adversaries.get(neighbor)
                copies = self.config.traffic.rate
                if profile is not None and profile.behavior is Behavior.SINK_HOLE:
                    copies *= profile.attraction
                for _ in range(copies):
                    self.report.data_sent += 1
                    self.schedule(self.now + self.config.timing.t_prop, EventKind.FORWARD,
                                  sender=node, forwarder=neighbor, round=rnd, sent=self.now)

    def _on_forward(self, event: Event) -> None:
        p = event.payload
        packet = PacketEvent(p["sent"], p["sender"], p["forwarder"], p["round"])
        outcome = adversary_act(self.adversaries.get(packet.forwarder), packet, self.rngs["traffic"])
        self.schedule(packet.tick + self.config.timing.pack_threshold, EventKind.PACK,
                      sender=packet.sender, forwarder=packet.forwarder, outcome=outcome)

    def _on_pack(self, event: Event) -> None:
        p = event.payload
        ok = p["outcome"] is ForwardOutcome.FORWARDED
        if ok:
            self.report.data_forwarded += 1
        else:
            self.report.data_failed += 1
        if p["sender"] not in self.monitors:
            return
        outcome = InteractionOutcome.SUCCESSFUL if ok else InteractionOutcome.UNSUCCESSFUL
        record_interaction(self.tables[p["sender"]], p["forwarder"], outcome)

    def _window_closes(self, first: simpy.Timeout):
        span = self.window_length * self.config.timing.traffic_interval
        yield first
        index = 1
        while True:
            self._last = Event(self.now, EventKind.WINDOW, {"index": index})
            self._close_window()
            nxt = (index + 1) * span - 1
            if nxt >= self.config.timing.duration:
                return
            yield self.env.timeout(nxt - self.now)
            index += 1

    def _close_window(self) -> None:
        for node in sorted(self.monitors):
            table = self.tables[node]
            advance_window(table)
            self.snapshots.extend(snapshot_rows(table))
            for alert in detect_and_alert(table, self.k):
                self._send_alert(alert)

    # ------------------------------------------------------------------ alerts

    def _send_alert(self, alert: AlertMessage) -> None:
        head = self.topology.head_of(alert.sender)
        self.report.alerts += 1
        self.alert_rows.append(alert_log_row(self.now, alert))
        self._log("alert", alert.sender, head, alert.accused, alert.level.index)
        self.schedule(self.now + self._delay(alert.sender, head), EventKind.ALERT, alert=alert, head=head)

    def _on_alert(self, event: Event) -> None:
        alert: AlertMessage = event.payload["alert"]
        head = event.payload["head"]
        validator = self.validators[head]
        receipt = validator.receive_claim(alert, self.now)
        r = self.report

        if receipt.duplicate is not None:
            if receipt.duplicate is DuplicateAction.DIRECT_VALIDATE:
                r.duplicate_direct += 1
            else:
                r.duplicate_updates += 1
            return
        if receipt.route is Route.DISCARD:
            r.discarded += 1
            return
        if receipt.route is Route.ACCEPT_DIRECT:
            r.accepted_direct += 1
            self.marked_at.setdefault(alert.accused, self.now)
            return

        session = receipt.session
        r.consensus_rounds += 1
        r.common_trusted_total += session.common_trusted
        tier = alert.level.tier
        if tier is ReliabilityTier.LOW:
            r.claims_low += 1
        elif tier is ReliabilityTier.MEDIUM:
            r.claims_medium += 1
        else:
            r.claims_high += 1

        if receipt.decision is not None:
            self._record_decision(head, session, receipt.decision, receipt.effect)
            return
        for target in sorted(session.targets):
            r.conf_req += 1
            self._log("conf_req", head, target, alert.accused, alert.level.index)
            if self._lost():
                r.messages_lost += 1
                self._log("conf_req_lost", head, target, alert.accused, alert.level.index)
                continue
            self.schedule(self.now + self._delay(head, target), EventKind.CONF_REQ,
                          head=head, session_id=session.session_id, target=target)
        self.schedule(session.deadline, EventKind.DEADLINE, head=head, session_id=session.session_id)

    # ------------------------------------------------------------------ consensus

    def _respond(self, target: NodeId, request: ConfirmationRequest) -> Optional[Response]:
        table = self.tables[target]
        profile = self.adversaries.get(target)
        if profile is not None and profile.behavior is Behavior.FALSE_RESPONDER:
            if table.state_of(request.requester) is not TrustState.TRUSTWORTHY:
                return None
            return Response(responder=target, value=int(profile.params["response"]))
        return respond_to_confirmation(table, request)

    def _on_conf_req(self, event: Event) -> None:
        p = event.payload
        self.report.conf_delivered += 1
        head, target = p["head"], p["target"]
        validator = self.validators[head]
        session = validator.sessions[p["session_id"]]
        response = self._respond(target, validator.request_for(session))
        if response is None:
            logger.debug("%s stays silent on session %s", fmt_node(target), session.session_id)
            return
        self.report.conf_resp += 1
        self._log("conf_resp", target, head, session.claim.accused, response.value)
        if self._lost():
            self.report.messages_lost += 1
            self._log("conf_resp_lost", target, head, session.claim.accused, response.value)
            return
        arrival = self.now + self.config.timing.t_proc + self._delay(target, head)
        self.schedule(arrival, EventKind.CONF_RESP, head=head, session_id=session.session_id, response=response)

    def _on_conf_resp(self, event: Event) -> None:
        p = event.payload
        self.report.conf_delivered += 1
        validator = self.validators[p["head"]]
        if validator.is_late(p["session_id"], self.now):
            self.report.late_responses += 1
            logger.warning("late response from %s on session %s ignored",
                           fmt_node(p["response"].responder), p["session_id"])
            return
        closed = validator.receive_response(p["session_id"], p["response"], self.now)
        if closed is not None:
            self._record_close(p["head"], closed)

    def _on_deadline(self, event: Event) -> None:
        p = event.payload
        closed = self.validators[p["head"]].expire(p["session_id"])
        if closed is not None:
            self._record_close(p["head"], closed)

    def _record_close(self, head: NodeId, closed: SessionClose) -> None:
        self._record_decision(head, closed.session, closed.decision, closed.effect)

    def _record_decision(self, head: NodeId, session: ValidationSession, decision: Decision,
                         effect: OutcomeEffect) -> None:
        claim = session.claim
        r = self.report
        self.decisions.append({
            "tick": self.now, "receiver": head, "sender": claim.sender, "accused": claim.accused,
            "n_req": decision.n_req, "n_res": decision.n_res, "sum": decision.response_sum,
            "outcome": decision.kind.value, "resolved": decision.resolved.value,
        })
        if decision.kind is DecisionKind.NO_CONSENSUS:
            r.no_consensus_resolved += 1
        if decision.resolved is Resolution.VALIDATED:
            r.validated += 1
            self.marked_at.setdefault(claim.accused, self.now)
        else:
            r.invalidated += 1
        if effect is OutcomeEffect.SENDER_EVICTED:
            self.evicted_at.setdefault(claim.sender, self.now)
            if claim.sender in self.adversaries:
                r.true_positive_evictions += 1
            else:
                r.false_evictions += 1

    # ------------------------------------------------------------------ scripted

    def _on_intrusion(self, event: Event) -> None:
        plan: IntrusionPlan = event.payload["plan"]
        if plan.genuine:
            for node in sorted(self.topology.neighbors(plan.accused)):
                if node not in self.monitors or self.topology.is_head(node):
                    continue
                table = self.tables[node]
                for _ in range(self.window_length):
                    record_interaction(table, plan.accused, InteractionOutcome.UNSUCCESSFUL)
                reassess(table, plan.accused)
        kind = "intrusion" if plan.genuine else "false_alarm"
        self._send_alert(build_alert(plan.claimant, plan.accused, plan.level, kind.encode("ascii")))

    def _on_false_claim(self, event: Event) -> None:
        node, j = event.payload["node"], event.payload["index"]
        params = self.adversaries[node].params
        targets = list(params.get("accuse") or [])
        if not targets:
            head = self.topology.head_of(node)
            targets = [n for n in self.topology.cluster_neighbors(node) if n != head]
        if not targets:
            return
        accused = int(targets[j % len(targets)])
        level = ThreatLevel(int(params.get("level") or self.k), self.k)
        self._send_alert(build_alert(node, accused, level, b"false_claim"))


def run(config: ScenarioConfig) -> MetricsReport:
    return Simulation(config).run()


def consensus_trials(n_res: int, trials: int, seed: int = 0, pmf: Optional[tuple] = None) -> float:
    """Share of sessions reaching consensus with randomly answering responders."""
    if n_res < 1 or trials < 1:
        raise ValueError(f"n_res and trials must be >= 1, got {n_res}, {trials}")
    probs = np.full(3, 1.0 / 3.0) if pmf is None else np.array([float(x) for x in pmf])
    rng = np.random.default_rng(seed)
    draws = rng.choice(np.array(RESPONSE_VALUES), size=(trials, n_res), p=probs)
    claim = build_alert(0, 1, HIGH)
    targets = list(range(2, 2 + n_res))
    reached = 0
    for t, row in enumerate(draws):
        session = ValidationSession(t, claim, frozenset(targets), deadline=0, mode=ValidationMode.AGGRESSIVE)
        for node, value in zip(targets, row):
            session.add_response(Response(node, int(value)))
        if evaluate(session).kind is not DecisionKind.NO_CONSENSUS:
            reached += 1
    return reached / trials
