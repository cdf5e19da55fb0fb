"""Interaction ledgers, trust values and adaptive trust boundaries."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Iterable, Optional

from models import (
    BoundaryPair,
    InteractionOutcome,
    NodeId,
    TrustRecord,
    TrustState,
    INITIAL_TRUST,
)
from utils import nearest_int, validate_positive

logger = logging.getLogger(__name__)


def trust_value(successes: int, failures: int) -> int:
    """Trust of an observer in a subject after S successes and U failures.

    T = [100 * S/(S+U) * (1 - 1/(S+1))], evaluated exactly as
    100*S^2 / ((S+U)(S+1)). No interactions gives the initial 50.
    """
    if successes < 0 or failures < 0:
        raise ValueError(f"interaction counts must be non-negative, got S={successes}, U={failures}")
    total = successes + failures
    if total == 0:
        return INITIAL_TRUST
    return nearest_int(Fraction(100 * successes * successes, total * (successes + 1)))


def classify(trust: int, boundaries: BoundaryPair) -> TrustState:
    if trust >= boundaries.trustworthy_floor:
        return TrustState.TRUSTWORTHY
    if trust >= boundaries.untrustworthy_ceiling:
        return TrustState.UNCERTAIN
    return TrustState.UNTRUSTWORTHY


def next_boundaries(
    trusted: Iterable[int],
    untrusted: Iterable[int],
    previous: BoundaryPair,
) -> BoundaryPair:
    """f from half the mean trust of R_x, g from a third of the mean of M_x.

    An empty set keeps the previous value; g is clamped so f - g >= 1.
    """
    trusted = list(trusted)
    untrusted = list(untrusted)
    f = nearest_int(Fraction(sum(trusted), 2 * len(trusted))) if trusted else previous.f
    g = nearest_int(Fraction(sum(untrusted), 3 * len(untrusted))) if untrusted else previous.g
    if f - g < 1:
        g = f - 1
        if g < 0:
            g, f = 0, 1
    return BoundaryPair(f=f, g=g, window_index=previous.window_index)


class TrustTable:
    """One node's view of every neighbour it scores."""

    def __init__(
        self,
        owner: NodeId,
        population: int,
        window_length: Optional[int] = None,
        boundaries: Optional[BoundaryPair] = None,
    ) -> None:
        validate_positive(population, "population")
        self.owner = owner
        self.population = population
        self.window_length = window_length if window_length is not None else max(population - 1, 1)
        validate_positive(self.window_length, "window_length")
        self.boundaries = boundaries or BoundaryPair()
        self.records: dict[NodeId, TrustRecord] = {}
        self.malicious: set[NodeId] = set()

    # ------------------------------------------------------------------ views

    @property
    def window_index(self) -> int:
        return self.boundaries.window_index

    @property
    def trusted_set(self) -> set[NodeId]:
        return {y for y, r in self.records.items() if r.state is TrustState.TRUSTWORTHY}

    @property
    def untrusted_set(self) -> set[NodeId]:
        return {y for y, r in self.records.items() if r.state is TrustState.UNTRUSTWORTHY}

    def record(self, subject: NodeId) -> TrustRecord:
        if subject == self.owner:
            raise ValueError(f"self-observation: node {self.owner} cannot score itself")
        if subject not in self.records:
            self.records[subject] = TrustRecord(observer=self.owner, subject=subject)
        return self.records[subject]

    def state_of(self, node: NodeId) -> TrustState:
        if node in self.malicious:
            return TrustState.UNTRUSTWORTHY
        rec = self.records.get(node)
        if rec is None:
            return classify(INITIAL_TRUST, self.boundaries)
        return rec.state

    def trust_of(self, node: NodeId) -> int:
        rec = self.records.get(node)
        return rec.trust if rec is not None else INITIAL_TRUST

    def known_malicious(self) -> set[NodeId]:
        return self.malicious | self.untrusted_set

    def __repr__(self) -> str:
        b = self.boundaries
        return (
            f"TrustTable(owner={self.owner}, records={len(self.records)}, "
            f"f={b.f}, g={b.g}, window={b.window_index})"
        )


def record_interaction(table: TrustTable, subject: NodeId, outcome: InteractionOutcome) -> TrustTable:
    rec = table.record(subject)
    if outcome is InteractionOutcome.SUCCESSFUL:
        rec.successes += 1
    else:
        rec.failures += 1
    return table


def update_boundaries(table: TrustTable) -> BoundaryPair:
    """Recompute (f, g) from the table's current R_x and M_x trust values."""
    trusted = [table.records[y].trust for y in sorted(table.trusted_set)]
    untrusted = [table.records[y].trust for y in sorted(table.untrusted_set)]
    return next_boundaries(trusted, untrusted, table.boundaries)


def advance_window(table: TrustTable) -> TrustTable:
    """Close the current window: score, adapt boundaries, reclassify, reset."""
    old = table.boundaries
    for rec in table.records.values():
        rec.window_counts = (rec.successes, rec.failures)
        rec.previous_state = rec.state
        rec.trust = trust_value(rec.successes, rec.failures)
        rec.state = classify(rec.trust, old)

    new = update_boundaries(table)
    for rec in table.records.values():
        rec.state = classify(rec.trust, new)
        rec.successes = 0
        rec.failures = 0

    table.boundaries = BoundaryPair(f=new.f, g=new.g, window_index=old.window_index + 1)
    if (new.f, new.g) != (old.f, old.g):
        logger.debug("n%s boundaries (%s, %s) -> (%s, %s)", table.owner, old.f, old.g, new.f, new.g)
    return table


def reassess(table: TrustTable, subject: NodeId) -> TrustRecord:
    """Score one record from its open-window counters without closing the window."""
    rec = table.record(subject)
    rec.previous_state = rec.state
    rec.trust = trust_value(rec.successes, rec.failures)
    rec.state = classify(rec.trust, table.boundaries)
    return rec


def mark_malicious(table: TrustTable, node: NodeId) -> None:
    if node == table.owner:
        raise ValueError(f"node {node} cannot list itself as malicious")
    table.malicious.add(node)


def snapshot_rows(table: TrustTable) -> list[dict]:
    """Rows for the window that was closed last."""
    b = table.boundaries
    rows = []
    for subject in sorted(table.records):
        rec = table.records[subject]
        s, u = rec.window_counts
        rows.append({
            "window_index": b.window_index,
            "observer": table.owner,
            "subject": subject,
            "S": s,
            "U": u,
            "trust": rec.trust,
            "state": rec.state.value,
            "f": b.f,
            "g": b.g,
        })
    return rows
