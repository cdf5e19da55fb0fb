"""Domain models for the SensorGuard alert validation toolkit."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Optional

from utils import (
    VALID_BEHAVIORS,
    validate_in,
    validate_non_negative,
    validate_probability,
    validate_range,
)

NodeId = int

INITIAL_TRUST = 50
INITIAL_F = 25
INITIAL_G = 17
RESPONSE_VALUES = (1, 0, -1)


class InteractionOutcome(Enum):
    SUCCESSFUL = "successful"
    UNSUCCESSFUL = "unsuccessful"


class TrustState(Enum):
    TRUSTWORTHY = "trustworthy"
    UNCERTAIN = "uncertain"
    UNTRUSTWORTHY = "untrustworthy"


class ReliabilityTier(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class Route(Enum):
    ACCEPT_DIRECT = "accept_direct"
    DISCARD = "discard"
    RUN_CONSENSUS = "run_consensus"


class DuplicateAction(Enum):
    UPDATE_RECORD = "update_record"
    DIRECT_VALIDATE = "direct_validate"


class ValidationMode(Enum):
    AGGRESSIVE = "aggressive"
    DEFENSIVE = "defensive"


class DecisionKind(Enum):
    VALIDATE = "validate"
    INVALIDATE = "invalidate"
    NO_CONSENSUS = "no_consensus"


class Resolution(Enum):
    VALIDATED = "validated"
    INVALIDATED = "invalidated"


class ClaimStatus(Enum):
    PENDING = "pending"
    VALIDATED = "validated"
    INVALIDATED = "invalidated"


class OutcomeEffect(Enum):
    ACCUSED_MARKED = "accused_marked"
    SENDER_EVICTED = "sender_evicted"
    SENDER_TOLERATED = "sender_tolerated"
    NO_EFFECT = "no_effect"


class Behavior(Enum):
    BLACK_HOLE = "black_hole"
    SINK_HOLE = "sink_hole"
    SELECTIVE_FORWARDING = "selective_forwarding"
    GRAY_HOLE = "gray_hole"
    FALSE_CLAIMANT = "false_claimant"
    FALSE_RESPONDER = "false_responder"

    @property
    def drops_packets(self) -> bool:
        return self in DROPPING_BEHAVIORS


DROPPING_BEHAVIORS = {
    Behavior.BLACK_HOLE,
    Behavior.SINK_HOLE,
    Behavior.SELECTIVE_FORWARDING,
    Behavior.GRAY_HOLE,
}


class ForwardOutcome(Enum):
    FORWARDED = "forwarded"
    DROPPED = "dropped"
    FABRICATED = "fabricated"


class Placement(Enum):
    GRID = "grid"
    UNIFORM_RANDOM = "uniform_random"
    WITNESS = "witness"


# --------------------------------------------------------------------- trust


@dataclass
class TrustRecord:
    """What *observer* knows about *subject* in the current window."""

    observer: NodeId
    subject: NodeId
    successes: int = 0
    failures: int = 0
    trust: int = INITIAL_TRUST
    state: TrustState = TrustState.UNCERTAIN
    previous_state: TrustState = TrustState.UNCERTAIN
    window_counts: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        if self.observer == self.subject:
            raise ValueError(f"node {self.observer} cannot hold a trust record about itself")
        validate_non_negative(self.successes, "successes")
        validate_non_negative(self.failures, "failures")
        validate_range(self.trust, 0, 100, "trust")

    def __str__(self) -> str:
        return (
            f"TrustRecord(n{self.observer}->n{self.subject}, S={self.successes}, "
            f"U={self.failures}, T={self.trust}, {self.state.value})"
        )


@dataclass(frozen=True)
class BoundaryPair:
    f: int = INITIAL_F
    g: int = INITIAL_G
    window_index: int = 0

    def __post_init__(self) -> None:
        validate_non_negative(self.f, "f")
        validate_non_negative(self.g, "g")
        if self.f - self.g < 1:
            raise ValueError(f"boundaries must keep f - g >= 1, got f={self.f}, g={self.g}")

    @property
    def trustworthy_floor(self) -> int:
        return 100 - self.f

    @property
    def untrustworthy_ceiling(self) -> int:
        return 50 - self.g


# --------------------------------------------------------------------- alerts


@dataclass(frozen=True)
class ThreatLevel:
    """H_index out of k levels; index k is the most severe."""

    index: int
    k: int = 3

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        validate_range(self.index, 1, self.k, "threat level index")

    @property
    def label(self) -> str:
        if self.k == 3:
            return ("Low", "Medium", "High")[self.index - 1]
        return f"H{self.index}"

    @property
    def tier(self) -> ReliabilityTier:
        if self.index == self.k:
            return ReliabilityTier.HIGH
        if self.index == 1:
            return ReliabilityTier.LOW
        return ReliabilityTier.MEDIUM

    def __str__(self) -> str:
        return self.label


LOW = ThreatLevel(1, 3)
MEDIUM = ThreatLevel(2, 3)
HIGH = ThreatLevel(3, 3)


@dataclass(frozen=True)
class AlertMessage:
    sender: NodeId
    accused: NodeId
    level: ThreatLevel
    detail: bytes = b""
    authentic: bool = True

    def __post_init__(self) -> None:
        if self.sender == self.accused:
            raise ValueError(f"node {self.sender} cannot accuse itself")
        if not isinstance(self.detail, (bytes, bytearray)):
            raise ValueError("detail must be bytes")

    def __str__(self) -> str:
        return f"Alert(n{self.sender} accuses n{self.accused}, {self.level.label})"


# --------------------------------------------------------------------- validation


@dataclass(frozen=True)
class ConfirmationRequest:
    requester: NodeId
    accused: NodeId
    level: ThreatLevel
    detail: bytes = b""


@dataclass(frozen=True)
class Response:
    responder: NodeId
    value: int

    def __post_init__(self) -> None:
        validate_in(self.value, set(RESPONSE_VALUES), "response value")


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    resolved: Resolution
    response_sum: int
    n_req: int = 0
    n_res: int = 0

    @property
    def had_requests(self) -> bool:
        return self.n_req > 0


@dataclass
class ValidationSession:
    """Receiver-side state for one claim under consensus."""

    session_id: int
    claim: AlertMessage
    targets: frozenset[NodeId]
    deadline: int
    mode: ValidationMode
    opened_at: int = 0
    common_trusted: int = 0
    responses: dict[NodeId, Response] = field(default_factory=dict)
    outcome: Optional[Decision] = None

    @property
    def requests_sent(self) -> int:
        return len(self.targets)

    @property
    def n_res(self) -> int:
        return len(self.responses)

    @property
    def complete(self) -> bool:
        return self.n_res == self.requests_sent

    @property
    def closed(self) -> bool:
        return self.outcome is not None

    def add_response(self, response: Response) -> None:
        if self.closed:
            raise ValueError(f"session {self.session_id} is already decided")
        if response.responder not in self.targets:
            raise ValueError(f"n{response.responder} was not asked in session {self.session_id}")
        self.responses[response.responder] = response


# --------------------------------------------------------------------- adversaries


_DEFAULT_PARAMS: dict[Behavior, dict[str, Any]] = {
    Behavior.BLACK_HOLE: {"drop_probability": 1.0, "self_generated": True},
    Behavior.SINK_HOLE: {"drop_probability": 0.75, "attraction": 2, "fabricate": False},
    Behavior.SELECTIVE_FORWARDING: {"drop_probability": 0.5},
    Behavior.GRAY_HOLE: {"drop_probability": 0.5, "period": 2},
    Behavior.FALSE_CLAIMANT: {"accuse": [], "level": None, "first_tick": 100, "interval": 20, "count": 1},
    Behavior.FALSE_RESPONDER: {"response": -1},
}


@dataclass
class AdversaryProfile:
    node: NodeId
    behavior: Behavior
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        merged = dict(_DEFAULT_PARAMS[self.behavior])
        merged.update(self.params)
        self.params = merged
        p = float(self.params.get("drop_probability", 0.0))
        if self.behavior is Behavior.BLACK_HOLE and p != 1.0:
            raise ValueError("black_hole drop_probability must be 1")
        if self.behavior in (Behavior.SELECTIVE_FORWARDING, Behavior.GRAY_HOLE) and not (0.0 < p < 1.0):
            raise ValueError(f"{self.behavior.value} drop_probability must be in (0, 1), got {p}")
        validate_probability(p, "drop_probability")
        if self.behavior is Behavior.FALSE_RESPONDER:
            validate_in(self.params["response"], set(RESPONSE_VALUES), "response")

    @property
    def drop_probability(self) -> float:
        return float(self.params.get("drop_probability", 0.0))

    @property
    def attraction(self) -> int:
        return int(self.params.get("attraction", 1))

    def __str__(self) -> str:
        return f"Adversary(n{self.node}, {self.behavior.value})"


# --------------------------------------------------------------------- analytics


@dataclass(frozen=True)
class ThreatMix:
    i_l: int
    i_m: int
    i_h: int
    m_t: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("i_l", "i_m", "i_h"):
            validate_non_negative(getattr(self, name), name)
        validate_non_negative(self.m_t, "m_t")

    @property
    def i_c(self) -> int:
        return self.i_l + self.i_m + self.i_h


@dataclass(frozen=True)
class ResponderModel:
    """Per-responder probability vectors over the responses (1, 0, -1)."""

    pmfs: tuple[tuple[Any, Any, Any], ...]

    def __post_init__(self) -> None:
        for i, pmf in enumerate(self.pmfs):
            if len(pmf) != len(RESPONSE_VALUES):
                raise ValueError(f"pmf {i} must have {len(RESPONSE_VALUES)} entries")
            if any(p < 0 for p in pmf):
                raise ValueError(f"pmf {i} has a negative entry")
            if abs(float(sum(pmf)) - 1.0) > 1e-12:
                raise ValueError(f"pmf {i} must sum to 1, got {float(sum(pmf))}")

    @property
    def n_res(self) -> int:
        return len(self.pmfs)

    @property
    def alphabet_size(self) -> int:
        return len(RESPONSE_VALUES)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for pmf in self.pmfs for p in pmf)

    @classmethod
    def uniform(cls, n_res: int) -> ResponderModel:
        third = Fraction(1, 3)
        return cls(tuple((third, third, third) for _ in range(n_res)))

    @classmethod
    def identical(cls, n_res: int, pmf: tuple[Any, Any, Any]) -> ResponderModel:
        return cls(tuple(tuple(pmf) for _ in range(n_res)))


@dataclass(frozen=True)
class SecurityScenario:
    n_t: int
    m: int
    m_prime: int = 0
    p: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        validate_non_negative(self.n_t, "N_t")
        validate_non_negative(self.m, "m")
        validate_non_negative(self.m_prime, "m_prime")
        validate_probability(self.p, "p")
        if self.m + self.m_prime > self.n_t:
            raise ValueError(f"m + m' must not exceed N_t ({self.m} + {self.m_prime} > {self.n_t})")


@dataclass(frozen=True)
class ClaimValue:
    """Literal value of a security-claim expression, which may leave [0, 1]."""

    value: Fraction

    @property
    def out_of_range(self) -> bool:
        return not (0 <= self.value <= 1)


@dataclass(frozen=True)
class OracleValue:
    """Enumerated Pr[M] under both decision rules.

    ``proof_rule`` counts a zero sum as judged malicious; ``eq10_rule``
    needs a strictly positive sum.
    """

    proof_rule: Fraction
    eq10_rule: Fraction


# --------------------------------------------------------------------- reports


@dataclass
class MetricsReport:
    seed: int = 0
    config_hash: str = ""
    alerts: int = 0
    conf_req: int = 0
    conf_resp: int = 0
    messages_lost: int = 0
    conf_delivered: int = 0
    data_sent: int = 0
    data_forwarded: int = 0
    data_failed: int = 0
    late_responses: int = 0
    claims_low: int = 0
    claims_medium: int = 0
    claims_high: int = 0
    consensus_rounds: int = 0
    common_trusted_total: int = 0
    validated: int = 0
    invalidated: int = 0
    no_consensus_resolved: int = 0
    accepted_direct: int = 0
    discarded: int = 0
    duplicate_updates: int = 0
    duplicate_direct: int = 0
    true_positive_evictions: int = 0
    false_evictions: int = 0
    trust_snapshot_rows: int = 0
    final_tick: int = 0

    @property
    def claims_total(self) -> int:
        return self.claims_low + self.claims_medium + self.claims_high

    @property
    def mean_common_trusted(self) -> Fraction:
        if self.consensus_rounds == 0:
            return Fraction(0)
        return Fraction(self.common_trusted_total, self.consensus_rounds)

    @property
    def overhead_messages(self) -> int:
        return self.conf_req + self.conf_resp

    @property
    def mix(self) -> ThreatMix:
        return ThreatMix(self.claims_low, self.claims_medium, self.claims_high, self.mean_common_trusted)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["claims_total"] = self.claims_total
        out["mean_common_trusted"] = float(self.mean_common_trusted)
        out["overhead_messages"] = self.overhead_messages
        return out


def parse_behavior(value: str) -> Behavior:
    validate_in(value, VALID_BEHAVIORS, "behavior")
    return Behavior(value)
