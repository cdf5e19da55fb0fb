"""NumPy-based enumeration helpers for the analytics module."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from models import RESPONSE_VALUES

# number of {-1, 0, 1} sequences of length n summing to zero
def central_trinomial(n: int) -> int:
    """Central trinomial coefficient T(n) by the three-term recurrence."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    prev, cur = 1, 1
    if n == 0:
        return prev
    for i in range(2, n + 1):
        prev, cur = cur, ((2 * i - 1) * cur + 3 * (i - 1) * prev) // i
    return cur


def response_sums(n_res: int) -> np.ndarray:
    """Response sum of every outcome vector in {1, 0, -1}^n_res (lexicographic order)."""
    sums = np.zeros(1, dtype=np.int16)
    values = np.array(RESPONSE_VALUES, dtype=np.int16)
    for _ in range(n_res):
        sums = (sums[:, np.newaxis] + values[np.newaxis, :]).ravel()
    return sums


def count_nonzero_sums(n_res: int) -> int:
    """N_c: outcome vectors whose response sum is not zero."""
    return int(np.count_nonzero(response_sums(n_res)))


def outcome_probabilities(pmfs: Sequence[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    """Probability and response sum of every joint outcome, built one responder at a time."""
    probs = np.ones(1, dtype=float)
    sums = np.zeros(1, dtype=np.int16)
    values = np.array(RESPONSE_VALUES, dtype=np.int16)
    for pmf in pmfs:
        p = np.asarray(pmf, dtype=float)
        probs = (probs[:, np.newaxis] * p[np.newaxis, :]).ravel()
        sums = (sums[:, np.newaxis] + values[np.newaxis, :]).ravel()
    return probs, sums


def nonzero_sum_probability(pmfs: Sequence[Sequence[float]]) -> float:
    probs, sums = outcome_probabilities(pmfs)
    return float(probs[sums != 0].sum())


# exact distribution of the response sum; keys are sums, values Fractions
def response_sum_distribution(pmfs: Sequence[Sequence[Fraction]]) -> dict[int, Fraction]:
    dist: dict[int, Fraction] = {0: Fraction(1)}
    for pmf in pmfs:
        nxt: dict[int, Fraction] = {}
        for total, weight in dist.items():
            for value, p in zip(RESPONSE_VALUES, pmf):
                if p == 0:
                    continue
                key = total + value
                nxt[key] = nxt.get(key, Fraction(0)) + weight * Fraction(p)
        dist = nxt
    return dist


def popcounts(n_bits: int) -> np.ndarray:
    """Number of set bits of every integer in [0, 2**n_bits)."""
    masks = np.arange(1 << n_bits, dtype=np.int64)
    counts = np.zeros(masks.shape, dtype=np.int16)
    for b in range(n_bits):
        counts += ((masks >> b) & 1).astype(np.int16)
    return counts


def two_choice_sums(fixed: int, n_free: int, active: int) -> np.ndarray:
    """Response sums when *n_free* nodes each pick *active* or 0 with probability 1/2.

    Every integer mask is one equally likely outcome; its set bits are the
    nodes that picked *active*.
    """
    return fixed + active * popcounts(n_free)


def overhead_grid(m_t: np.ndarray, i_c: np.ndarray, shares: Sequence[float], policy: str) -> np.ndarray:
    """Closed-form message counts over a (m_t, I_c) grid for a fixed level proportion."""
    mt = np.asarray(m_t, dtype=float)[:, np.newaxis]
    ic = np.asarray(i_c, dtype=float)[np.newaxis, :]
    low, med, high = (float(s) for s in shares)
    if policy == "low":
        return np.broadcast_to(2.0 * ic, (mt.shape[0], ic.shape[1])).copy()
    if policy == "medium":
        return mt * ic
    if policy == "high":
        return 2.0 * mt * ic
    if policy == "intrusion_aware":
        return 2.0 * low * ic + (med + 2.0 * high) * ic * mt
    raise ValueError(f"unknown policy {policy!r}")
