import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from models import BoundaryPair, InteractionOutcome, TrustState
from trust_engine import (
    TrustTable,
    advance_window,
    classify,
    mark_malicious,
    next_boundaries,
    reassess,
    record_interaction,
    snapshot_rows,
    trust_value,
)

OK = InteractionOutcome.SUCCESSFUL
BAD = InteractionOutcome.UNSUCCESSFUL


def _feed(table, subject, successes=0, failures=0):
    for _ in range(successes):
        record_interaction(table, subject, OK)
    for _ in range(failures):
        record_interaction(table, subject, BAD)


@pytest.mark.parametrize("s, u, expected", [(0, 5, 0), (10, 0, 91), (0, 0, 50), (5, 5, 42)])
def test_trust_value_known(s, u, expected):
    assert trust_value(s, u) == expected


def test_trust_value_exhaustive_against_direct_formula():
    for s in range(101):
        for u in range(101):
            if s + u == 0:
                continue
            x = 100 * Fraction(s, s + u) * (1 - Fraction(1, s + 1))
            assert trust_value(s, u) == math.floor(x + Fraction(1, 2)), (s, u)


@given(st.integers(1, 1000))
def test_trust_value_zero_successes_is_zero(u):
    assert trust_value(0, u) == 0


@given(st.integers(10, 1000))
def test_trust_value_clean_history_is_trustworthy(s):
    assert 91 <= trust_value(s, 0) <= 100


def test_trust_value_rejects_negative_counts():
    with pytest.raises(ValueError):
        trust_value(-1, 0)


@pytest.mark.parametrize("t, state", [
    (75, TrustState.TRUSTWORTHY), (74, TrustState.UNCERTAIN),
    (33, TrustState.UNCERTAIN), (32, TrustState.UNTRUSTWORTHY),
])
def test_classify_initial_boundaries(t, state):
    assert classify(t, BoundaryPair()) is state


@pytest.mark.parametrize("trusted, untrusted, expected", [
    ([80, 90], [], (43, 17)),
    ([], [], (25, 17)),
    ([90], [12], (45, 4)),
])
def test_next_boundaries_examples(trusted, untrusted, expected):
    b = next_boundaries(trusted, untrusted, BoundaryPair())
    assert (b.f, b.g) == expected


def test_next_boundaries_clamp():
    # f from trust 40 is 20, g from trust 64 would be 21
    b = next_boundaries([40], [64], BoundaryPair())
    assert (b.f, b.g) == (20, 19)
    b = next_boundaries([0], [0], BoundaryPair())
    assert (b.f, b.g) == (1, 0)


def test_record_interaction_counts(table):
    _feed(table, 1, successes=5, failures=2)
    rec = table.records[1]
    assert (rec.successes, rec.failures) == (5, 2)
    with pytest.raises(ValueError, match="self-observation"):
        record_interaction(table, 0, OK)


def test_window_length_defaults_to_population_minus_one():
    assert TrustTable(owner=0, population=5).window_length == 4


def test_advance_window_untouched_records_are_a_fixed_point(table):
    table.record(1)
    table.record(2)
    advance_window(table)
    assert all(r.trust == 50 and r.state is TrustState.UNCERTAIN for r in table.records.values())
    assert (table.boundaries.f, table.boundaries.g) == (25, 17)
    assert table.window_index == 1


def test_advance_window_black_hole_record(table):
    _feed(table, 1, failures=8)
    _feed(table, 2, successes=10)
    advance_window(table)
    assert table.records[1].trust == 0
    assert table.records[1].state is TrustState.UNTRUSTWORTHY
    assert table.records[2].trust == 91
    assert table.trusted_set == {2}
    assert table.boundaries.g == 0
    assert table.records[1].window_counts == (0, 8)
    assert (table.records[2].successes, table.records[2].failures) == (0, 0)


def test_reassess_scores_open_window(table):
    _feed(table, 3, failures=8)
    rec = reassess(table, 3)
    assert rec.state is TrustState.UNTRUSTWORTHY
    assert table.window_index == 0


def test_state_of_unknown_and_marked(table):
    assert table.state_of(5) is TrustState.UNCERTAIN
    mark_malicious(table, 5)
    assert table.state_of(5) is TrustState.UNTRUSTWORTHY
    assert 5 in table.known_malicious()
    with pytest.raises(ValueError):
        mark_malicious(table, 0)


def test_boundaries_keep_gap_over_random_histories():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        table = TrustTable(owner=0, population=9)
        for _ in range(6):
            prev = table.boundaries
            touched = {}
            for subject in range(1, 9):
                s, u = (int(x) for x in rng.integers(0, 12, size=2))
                _feed(table, subject, s, u)
                touched[subject] = trust_value(s, u)
            advance_window(table)
            b = table.boundaries
            assert b.f - b.g >= 1
            if not any(classify(t, prev) is TrustState.TRUSTWORTHY for t in touched.values()):
                # an empty R_x holds f
                assert b.f == prev.f
            if not any(classify(t, prev) is TrustState.UNTRUSTWORTHY for t in touched.values()):
                assert b.g == prev.g or b.g == b.f - 1


def test_snapshot_rows_follow_last_window(table):
    _feed(table, 1, failures=8)
    advance_window(table)
    rows = snapshot_rows(table)
    assert rows == [{"window_index": 1, "observer": 0, "subject": 1, "S": 0, "U": 8,
                     "trust": 0, "state": "untrustworthy", "f": 25, "g": 0}]


def test_trust_value_is_monotone_over_the_full_sweep():
    grid = [[trust_value(s, u) for u in range(201)] for s in range(201)]
    for s in range(201):
        row = grid[s]
        assert all(0 <= t <= 100 for t in row)
        assert all(a >= b for a, b in zip(row, row[1:])), s
    for u in range(201):
        column = [grid[s][u] for s in range(201)]
        assert all(a <= b for a, b in zip(column, column[1:])), u


@pytest.mark.parametrize("f, g", [(25, 17), (1, 0), (50, 0), (50, 49), (10, 3), (40, 39)])
def test_classify_partitions_every_trust_value(f, g):
    boundaries = BoundaryPair(f, g)
    states = [classify(t, boundaries) for t in range(101)]
    low, high = 50 - g, 100 - f
    assert states == (
        [TrustState.UNTRUSTWORTHY] * low
        + [TrustState.UNCERTAIN] * (high - low)
        + [TrustState.TRUSTWORTHY] * (101 - high)
    )
