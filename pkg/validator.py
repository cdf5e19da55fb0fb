"""Receiver-side claim validation: routing, consensus phase and decision phase."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from models import (
    AlertMessage,
    ClaimStatus,
    ConfirmationRequest,
    Decision,
    DecisionKind,
    DuplicateAction,
    NodeId,
    OutcomeEffect,
    ReliabilityTier,
    Resolution,
    Response,
    Route,
    ThreatLevel,
    TrustState,
    ValidationMode,
    ValidationSession,
)
from reliability import ReliabilityPolicy, get_policy
from trust_engine import TrustTable, mark_malicious
from utils import MAX_TOLERANCE, fmt_node, validate_non_negative, validate_range

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------- consensus phase


def route_claim(receiver_table: TrustTable, claim: AlertMessage) -> Route:
    state = receiver_table.state_of(claim.sender)
    if state is TrustState.TRUSTWORTHY:
        return Route.ACCEPT_DIRECT
    if state is TrustState.UNTRUSTWORTHY:
        return Route.DISCARD
    return Route.RUN_CONSENSUS


def consensus_targets(
    neighbors_of_sender: Iterable[NodeId],
    neighbors_of_accused: Iterable[NodeId],
    known_malicious: Iterable[NodeId],
    level: ThreatLevel | ReliabilityTier,
    rng: np.random.Generator,
    policy: str | ReliabilityPolicy = "intrusion_aware",
    exclude: Iterable[NodeId] = (),
) -> set[NodeId]:
    """Pick the conf_req targets among the filtered common neighbours N_t."""
    common = set(neighbors_of_sender) & set(neighbors_of_accused)
    trusted = sorted(common - set(known_malicious) - set(exclude))
    if not trusted:
        return set()
    tier = level.tier if isinstance(level, ThreatLevel) else level
    count = get_policy(policy).fanout(tier, len(trusted))
    if count >= len(trusted):
        return set(trusted)
    chosen = rng.choice(len(trusted), size=count, replace=False)
    return {trusted[int(i)] for i in chosen}


def response_deadline(t_prop: int, t_proc: int, hops: int = 1) -> int:
    """Time to wait for responses after sending the requests."""
    validate_non_negative(t_prop, "t_prop")
    validate_non_negative(t_proc, "t_proc")
    return 2 * (2 * t_prop * hops + t_proc)


# ---------------------------------------------------------------- decision phase


def decide(values: Iterable[int], mode: ValidationMode, n_req: int = 0) -> Decision:
    values = list(values)
    total = sum(values)
    if total > 0:
        kind, resolved = DecisionKind.VALIDATE, Resolution.VALIDATED
    elif total < 0:
        kind, resolved = DecisionKind.INVALIDATE, Resolution.INVALIDATED
    else:
        kind = DecisionKind.NO_CONSENSUS
        resolved = Resolution.VALIDATED if mode is ValidationMode.AGGRESSIVE else Resolution.INVALIDATED
    return Decision(kind=kind, resolved=resolved, response_sum=total, n_req=n_req, n_res=len(values))


def evaluate(session: ValidationSession) -> Decision:
    values = [r.value for r in session.responses.values()]
    return decide(values, session.mode, n_req=session.requests_sent)


def respond_to_confirmation(responder_table: TrustTable, request: ConfirmationRequest) -> Optional[Response]:
    """Answer from the responder's own evidence, or stay silent.

    Requests from a requester the responder does not trust are dropped.
    """
    if responder_table.state_of(request.requester) is not TrustState.TRUSTWORTHY:
        return None
    state = responder_table.state_of(request.accused)
    if state is TrustState.UNTRUSTWORTHY:
        mark_malicious(responder_table, request.accused)
        value = 1
    elif state is TrustState.TRUSTWORTHY:
        value = -1
    else:
        value = 0
    return Response(responder=responder_table.owner, value=value)


# ---------------------------------------------------------------- bookkeeping


class ToleranceState:
    """How many more invalidated claims each sender may issue."""

    def __init__(self, levels: Optional[dict[NodeId, int]] = None, default: int = 0) -> None:
        validate_range(default, 0, MAX_TOLERANCE, "tolerance")
        self.default = default
        self.levels = dict(levels or {})
        for node, level in self.levels.items():
            validate_range(level, 0, MAX_TOLERANCE, f"tolerance of n{node}")
        self.remaining = dict(self.levels)

    @classmethod
    def fixed(cls, level: int) -> ToleranceState:
        return cls(default=level)

    @classmethod
    def random(cls, nodes: Iterable[NodeId], rng: np.random.Generator) -> ToleranceState:
        """Uniform level in 0..3 per node, drawn in sorted node order."""
        ordered = sorted(nodes)
        draws = rng.integers(0, MAX_TOLERANCE + 1, size=len(ordered))
        return cls(levels={node: int(level) for node, level in zip(ordered, draws)})

    def level_of(self, node: NodeId) -> int:
        return self.levels.get(node, self.default)

    def allowance(self, node: NodeId) -> int:
        return self.remaining.get(node, self.level_of(node))

    def consume(self, node: NodeId) -> int:
        left = self.allowance(node)
        if left <= 0:
            raise ValueError(f"n{node} has no tolerance left")
        self.remaining[node] = left - 1
        return left - 1


@dataclass
class ClaimEntry:
    status: ClaimStatus = ClaimStatus.PENDING
    claims: int = 0


class ClaimRegistry:
    """The receiver's record of accused nodes."""

    def __init__(self) -> None:
        self.entries: dict[NodeId, ClaimEntry] = {}

    def __contains__(self, accused: NodeId) -> bool:
        return accused in self.entries

    def status(self, accused: NodeId) -> Optional[ClaimStatus]:
        entry = self.entries.get(accused)
        return entry.status if entry else None

    def note_claim(self, accused: NodeId) -> ClaimEntry:
        entry = self.entries.setdefault(accused, ClaimEntry())
        entry.claims += 1
        return entry

    def resolve(self, accused: NodeId, status: ClaimStatus) -> None:
        self.entries.setdefault(accused, ClaimEntry()).status = status


def handle_duplicate_alert(
    receiver_table: TrustTable,
    claim: AlertMessage,
    registry: ClaimRegistry,
) -> Optional[DuplicateAction]:
    if claim.accused in receiver_table.malicious:
        registry.note_claim(claim.accused)
        return DuplicateAction.DIRECT_VALIDATE
    if claim.accused in registry:
        registry.note_claim(claim.accused)
        return DuplicateAction.UPDATE_RECORD
    return None


def apply_outcome(
    decision: Decision,
    claim: AlertMessage,
    tolerance: ToleranceState,
    receiver_table: TrustTable,
    registry: ClaimRegistry,
) -> OutcomeEffect:
    if decision.resolved is Resolution.VALIDATED:
        mark_malicious(receiver_table, claim.accused)
        registry.resolve(claim.accused, ClaimStatus.VALIDATED)
        return OutcomeEffect.ACCUSED_MARKED

    registry.resolve(claim.accused, ClaimStatus.INVALIDATED)
    # no request went out, so there is no evidence against the sender
    if not decision.had_requests:
        return OutcomeEffect.NO_EFFECT
    if tolerance.allowance(claim.sender) == 0:
        mark_malicious(receiver_table, claim.sender)
        logger.info("n%s evicts n%s after an invalidated claim", receiver_table.owner, claim.sender)
        return OutcomeEffect.SENDER_EVICTED
    tolerance.consume(claim.sender)
    return OutcomeEffect.SENDER_TOLERATED


# ---------------------------------------------------------------- state machine


@dataclass
class ClaimReceipt:
    """What the receiver did with one incoming claim."""

    claim: AlertMessage
    route: Optional[Route] = None
    duplicate: Optional[DuplicateAction] = None
    session: Optional[ValidationSession] = None
    decision: Optional[Decision] = None
    effect: Optional[OutcomeEffect] = None

    @property
    def awaiting_responses(self) -> bool:
        return self.session is not None and not self.session.closed


@dataclass
class SessionClose:
    session: ValidationSession
    decision: Decision
    effect: OutcomeEffect


class ClaimValidator:
    """Designated validator of one cluster.

    Ties duplicate handling, routing, target selection, response
    collection and the decision rule together. Message delivery is left to
    the caller: requests are read from the returned session's targets and
    responses are fed back through :meth:`receive_response`.
    """

    def __init__(
        self,
        table: TrustTable,
        neighbors_of: Callable[[NodeId], set[NodeId]],
        rng: np.random.Generator,
        policy: str | ReliabilityPolicy = "intrusion_aware",
        mode: ValidationMode = ValidationMode.AGGRESSIVE,
        tolerance: Optional[ToleranceState] = None,
        t_prop: int = 1,
        t_proc: int = 1,
        hops_to: Optional[Callable[[NodeId], int]] = None,
    ) -> None:
        self.table = table
        self.neighbors_of = neighbors_of
        self.rng = rng
        self.policy = get_policy(policy)
        self.mode = mode
        self.tolerance = tolerance or ToleranceState()
        self.t_prop = t_prop
        self.t_proc = t_proc
        self.hops_to = hops_to or (lambda node: 1)
        self.registry = ClaimRegistry()
        self.sessions: dict[int, ValidationSession] = {}
        self._next_id = 0

    @property
    def owner(self) -> NodeId:
        return self.table.owner

    def open_sessions(self) -> list[ValidationSession]:
        return [s for s in self.sessions.values() if not s.closed]

    def receive_claim(self, claim: AlertMessage, now: int) -> ClaimReceipt:
        receipt = ClaimReceipt(claim=claim)
        if not claim.authentic:
            receipt.route = Route.DISCARD
            return receipt

        receipt.duplicate = handle_duplicate_alert(self.table, claim, self.registry)
        if receipt.duplicate is not None:
            logger.debug("%s: %s for claim on %s", fmt_node(self.owner), receipt.duplicate.value, fmt_node(claim.accused))
            return receipt

        receipt.route = route_claim(self.table, claim)
        if receipt.route is Route.DISCARD:
            logger.warning("%s discards claim from untrusted %s", fmt_node(self.owner), fmt_node(claim.sender))
            return receipt

        self.registry.note_claim(claim.accused)
        if receipt.route is Route.ACCEPT_DIRECT:
            mark_malicious(self.table, claim.accused)
            self.registry.resolve(claim.accused, ClaimStatus.VALIDATED)
            receipt.effect = OutcomeEffect.ACCUSED_MARKED
            return receipt

        receipt.session = self._open_session(claim, now)
        if not receipt.session.targets:
            closed = self._close(receipt.session)
            receipt.decision, receipt.effect = closed.decision, closed.effect
        return receipt

    def _open_session(self, claim: AlertMessage, now: int) -> ValidationSession:
        common = self.neighbors_of(claim.sender) & self.neighbors_of(claim.accused)
        n_t = common - self.table.known_malicious() - {self.owner}
        targets = consensus_targets(
            self.neighbors_of(claim.sender),
            self.neighbors_of(claim.accused),
            self.table.known_malicious(),
            claim.level,
            self.rng,
            policy=self.policy,
            exclude=(self.owner,),
        )
        hops = max((self.hops_to(t) for t in targets), default=1)
        session = ValidationSession(
            session_id=self._next_id,
            claim=claim,
            targets=frozenset(targets),
            deadline=now + response_deadline(self.t_prop, self.t_proc, hops),
            mode=self.mode,
            opened_at=now,
            common_trusted=len(n_t),
        )
        self._next_id += 1
        self.sessions[session.session_id] = session
        logger.debug(
            "%s opens session %s on %s: |N_t|=%s, %s requests",
            fmt_node(self.owner), session.session_id, fmt_node(claim.accused), len(n_t), len(targets),
        )
        return session

    def request_for(self, session: ValidationSession) -> ConfirmationRequest:
        c = session.claim
        return ConfirmationRequest(requester=self.owner, accused=c.accused, level=c.level, detail=c.detail)

    def receive_response(self, session_id: int, response: Response, now: int) -> Optional[SessionClose]:
        """Record a response; closes the session once every target has answered.

        Returns None while responses are outstanding. Late responses raise
        nothing and are ignored; check :meth:`is_late` first to count them.
        """
        session = self.sessions[session_id]
        if self.is_late(session_id, now):
            return None
        session.add_response(response)
        if session.complete:
            return self._close(session)
        return None

    def is_late(self, session_id: int, now: int) -> bool:
        session = self.sessions[session_id]
        return session.closed or now > session.deadline

    def expire(self, session_id: int) -> Optional[SessionClose]:
        """Deadline reached: decide on whatever arrived."""
        session = self.sessions[session_id]
        if session.closed:
            return None
        return self._close(session)

    def _close(self, session: ValidationSession) -> SessionClose:
        decision = evaluate(session)
        session.outcome = decision
        effect = apply_outcome(decision, session.claim, self.tolerance, self.table, self.registry)
        logger.debug(
            "%s session %s: sum=%s -> %s (%s)",
            fmt_node(self.owner), session.session_id, decision.response_sum, decision.resolved.value, effect.value,
        )
        return SessionClose(session=session, decision=decision, effect=effect)
