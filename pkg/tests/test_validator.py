import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alert_pipeline import build_alert
from models import (
    HIGH,
    LOW,
    MEDIUM,
    AlertMessage,
    ConfirmationRequest,
    Decision,
    DecisionKind,
    DuplicateAction,
    OutcomeEffect,
    Resolution,
    Response,
    Route,
    TrustState,
    ValidationMode,
)
from trust_engine import TrustTable, classify, mark_malicious
from validator import (
    ClaimRegistry,
    ClaimValidator,
    ToleranceState,
    apply_outcome,
    consensus_targets,
    decide,
    handle_duplicate_alert,
    respond_to_confirmation,
    response_deadline,
    route_claim,
)

AGG, DEF = ValidationMode.AGGRESSIVE, ValidationMode.DEFENSIVE
ternary = st.lists(st.sampled_from([1, 0, -1]), max_size=20)


def _set_trust(table: TrustTable, node: int, trust: int) -> None:
    rec = table.record(node)
    rec.trust = trust
    rec.state = classify(trust, table.boundaries)


def _star(sender, accused, common, extra_sender=(), extra_accused=()):
    """neighbors_of for a claim where *common* sees both parties."""
    adj = {sender: set(common) | set(extra_sender), accused: set(common) | set(extra_accused)}

    def neighbors_of(node):
        return set(adj.get(node, set()))
    return neighbors_of


# ---------------------------------------------------------------- routing


@pytest.mark.parametrize("trust, route", [(91, Route.ACCEPT_DIRECT), (10, Route.DISCARD), (50, Route.RUN_CONSENSUS)])
def test_route_claim(table, trust, route):
    _set_trust(table, 7, trust)
    assert route_claim(table, build_alert(7, 3, HIGH)) is route


# ---------------------------------------------------------------- targets


@pytest.mark.parametrize("level, expected", [(LOW, 1), (MEDIUM, 3), (HIGH, 5)])
def test_consensus_target_counts(rng, level, expected):
    common = {10, 11, 12, 13, 14}
    targets = consensus_targets(common | {1}, common | {2}, [], level, rng)
    assert len(targets) == expected
    assert targets <= common


def test_consensus_targets_filter_known_malicious(rng):
    targets = consensus_targets({3, 4, 5}, {3, 4, 5, 6}, {4}, HIGH, rng)
    assert targets == {3, 5}
    assert consensus_targets({3}, {4}, [], HIGH, rng) == set()


def test_consensus_targets_seeded_choice_is_reproducible():
    common = set(range(20, 30))
    a = consensus_targets(common, common, [], MEDIUM, np.random.default_rng(5))
    b = consensus_targets(common, common, [], MEDIUM, np.random.default_rng(5))
    assert a == b


def test_response_deadline():
    assert response_deadline(1, 1) == 6
    assert response_deadline(2, 1, hops=2) == 18
    with pytest.raises(ValueError):
        response_deadline(-1, 0)


# ---------------------------------------------------------------- decision rule


@given(ternary)
def test_decide_sign_rule(values):
    total = sum(values)
    d = decide(values, AGG)
    if total > 0:
        assert d.kind is DecisionKind.VALIDATE
    elif total < 0:
        assert d.kind is DecisionKind.INVALIDATE
    else:
        assert d.kind is DecisionKind.NO_CONSENSUS
    assert d.response_sum == total and d.n_res == len(values)


@given(ternary, st.randoms())
def test_decide_is_permutation_invariant(values, random):
    shuffled = list(values)
    random.shuffle(shuffled)
    assert decide(values, DEF) == decide(shuffled, DEF)


@given(ternary, st.integers(0, 5))
def test_decide_opposite_pairs_are_neutral(values, pairs):
    base = decide(values, AGG)
    padded = decide(values + [1, -1] * pairs, AGG)
    assert (padded.kind, padded.resolved) == (base.kind, base.resolved)


def test_no_consensus_resolves_by_mode():
    assert decide([1, -1], AGG).resolved is Resolution.VALIDATED
    assert decide([1, -1], DEF).resolved is Resolution.INVALIDATED
    assert decide([], AGG).kind is DecisionKind.NO_CONSENSUS


# ---------------------------------------------------------------- responders


def _responder(accused_trust: int, requester_trust: int = 91) -> TrustTable:
    table = TrustTable(owner=20, population=9)
    _set_trust(table, 4, requester_trust)
    _set_trust(table, 3, accused_trust)
    return table


@pytest.mark.parametrize("trust, value", [(5, 1), (50, 0), (90, -1)])
def test_respond_to_confirmation(trust, value):
    table = _responder(trust)
    response = respond_to_confirmation(table, ConfirmationRequest(requester=4, accused=3, level=HIGH))
    assert response == Response(20, value)
    assert (3 in table.malicious) is (value == 1)


def test_responder_ignores_untrusted_requester():
    table = _responder(5, requester_trust=50)
    assert respond_to_confirmation(table, ConfirmationRequest(4, 3, HIGH)) is None


# ---------------------------------------------------------------- bookkeeping


def test_tolerance_state():
    tol = ToleranceState.fixed(2)
    assert tol.allowance(9) == 2
    assert tol.consume(9) == 1
    assert tol.level_of(9) == 2
    with pytest.raises(ValueError):
        ToleranceState.fixed(4)
    random = ToleranceState.random([3, 1, 2], np.random.default_rng(0))
    assert set(random.levels) == {1, 2, 3}
    assert all(0 <= level <= 3 for level in random.levels.values())


def test_duplicate_handling(table):
    registry = ClaimRegistry()
    claim = build_alert(5, 6, HIGH)
    assert handle_duplicate_alert(table, claim, registry) is None
    registry.note_claim(6)
    assert handle_duplicate_alert(table, claim, registry) is DuplicateAction.UPDATE_RECORD
    mark_malicious(table, 6)
    assert handle_duplicate_alert(table, claim, registry) is DuplicateAction.DIRECT_VALIDATE


def _invalidated(n_req=1):
    return Decision(DecisionKind.INVALIDATE, Resolution.INVALIDATED, -1, n_req=n_req, n_res=1)


def test_apply_outcome_eviction_after_tolerance(table):
    registry, claim = ClaimRegistry(), build_alert(5, 6, HIGH)
    tol = ToleranceState.fixed(1)
    assert apply_outcome(_invalidated(), claim, tol, table, registry) is OutcomeEffect.SENDER_TOLERATED
    assert table.state_of(5) is not TrustState.UNTRUSTWORTHY
    assert apply_outcome(_invalidated(), claim, tol, table, registry) is OutcomeEffect.SENDER_EVICTED
    assert 5 in table.malicious


def test_apply_outcome_without_requests_keeps_sender(table):
    effect = apply_outcome(_invalidated(n_req=0), build_alert(5, 6, HIGH), ToleranceState(), table, ClaimRegistry())
    assert effect is OutcomeEffect.NO_EFFECT
    assert 5 not in table.malicious


def test_apply_outcome_validated_marks_accused(table):
    d = Decision(DecisionKind.VALIDATE, Resolution.VALIDATED, 2, n_req=2, n_res=2)
    registry = ClaimRegistry()
    assert apply_outcome(d, build_alert(5, 6, HIGH), ToleranceState(), table, registry) is OutcomeEffect.ACCUSED_MARKED
    assert 6 in table.malicious and 6 in registry


# ---------------------------------------------------------------- state machine


def _validator(neighbors_of, **kwargs):
    head = TrustTable(owner=0, population=9)
    return ClaimValidator(head, neighbors_of, np.random.default_rng(1), **kwargs)


def test_validator_full_round():
    v = _validator(_star(1, 2, {3, 4, 5}), policy="high")
    receipt = v.receive_claim(build_alert(1, 2, HIGH), now=10)
    session = receipt.session
    assert receipt.route is Route.RUN_CONSENSUS and session.targets == {3, 4, 5}
    assert session.deadline == 16 and session.common_trusted == 3
    assert v.receive_response(session.session_id, Response(3, 1), 12) is None
    assert v.receive_response(session.session_id, Response(4, 1), 12) is None
    closed = v.receive_response(session.session_id, Response(5, -1), 13)
    assert closed.decision.resolved is Resolution.VALIDATED
    assert closed.effect is OutcomeEffect.ACCUSED_MARKED
    assert 2 in v.table.malicious


def test_validator_duplicate_sends_no_requests():
    v = _validator(_star(1, 2, {3, 4}))
    first = v.receive_claim(build_alert(1, 2, HIGH), now=0)
    again = v.receive_claim(build_alert(7, 2, HIGH), now=1)
    assert first.session is not None
    assert again.duplicate is DuplicateAction.UPDATE_RECORD and again.session is None
    assert len(v.sessions) == 1


def test_validator_deadline_and_late_response():
    v = _validator(_star(1, 2, {3, 4}), policy="high", mode=DEF)
    session = v.receive_claim(build_alert(1, 2, HIGH), now=0).session
    v.receive_response(session.session_id, Response(3, 1), 2)
    closed = v.expire(session.session_id)
    assert closed.decision.response_sum == 1 and closed.decision.n_res == 1
    assert v.is_late(session.session_id, 3)
    assert v.expire(session.session_id) is None


def test_validator_empty_common_set_closes_at_once():
    v = _validator(_star(1, 2, set()), mode=AGG)
    receipt = v.receive_claim(build_alert(1, 2, HIGH), now=0)
    assert receipt.session.targets == frozenset()
    assert receipt.decision.kind is DecisionKind.NO_CONSENSUS
    assert receipt.effect is OutcomeEffect.ACCUSED_MARKED


def test_validator_defensive_empty_set_does_not_evict():
    v = _validator(_star(1, 2, set()), mode=DEF)
    receipt = v.receive_claim(build_alert(1, 2, HIGH), now=0)
    assert receipt.effect is OutcomeEffect.NO_EFFECT
    assert 1 not in v.table.malicious


def test_validator_discards_inauthentic_and_untrusted():
    v = _validator(_star(1, 2, {3}))
    forged = AlertMessage(1, 2, HIGH, authentic=False)
    assert v.receive_claim(forged, 0).route is Route.DISCARD
    mark_malicious(v.table, 1)
    assert v.receive_claim(build_alert(1, 5, HIGH), 0).route is Route.DISCARD
