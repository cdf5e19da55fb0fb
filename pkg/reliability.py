"""Reliability policies for the consensus phase (Strategy Pattern).

A policy decides how many commonly trusted neighbours are queried for a
claim and what the closed-form message overhead of a threat mix is.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from fractions import Fraction

from models import ReliabilityTier, ThreatMix
from utils import VALID_POLICIES, validate_in


def _low_fanout(n_t: int) -> int:
    return min(1, n_t)


def _medium_fanout(n_t: int) -> int:
    return math.ceil(n_t / 2)


def _high_fanout(n_t: int) -> int:
    return n_t


class ReliabilityPolicy(ABC):
    """Abstract fan-out policy."""

    name: str = ""

    @abstractmethod
    def fanout(self, tier: ReliabilityTier, n_t: int) -> int:
        """Number of conf_req messages for a claim of *tier* with |N_t| = n_t."""

    @abstractmethod
    def overhead(self, mix: ThreatMix) -> Fraction:
        """Closed-form message count (requests plus responses)."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class LowReliability(ReliabilityPolicy):
    """One random trusted neighbour per claim."""
    name = "low"

    def fanout(self, tier: ReliabilityTier, n_t: int) -> int:
        return _low_fanout(n_t)

    def overhead(self, mix: ThreatMix) -> Fraction:
        return Fraction(2 * mix.i_c)


class MediumReliability(ReliabilityPolicy):
    """Half of the trusted neighbours per claim."""
    name = "medium"

    def fanout(self, tier: ReliabilityTier, n_t: int) -> int:
        return _medium_fanout(n_t)

    def overhead(self, mix: ThreatMix) -> Fraction:
        return Fraction(mix.m_t) * mix.i_c


class HighReliability(ReliabilityPolicy):
    """Every trusted neighbour per claim."""
    name = "high"

    def fanout(self, tier: ReliabilityTier, n_t: int) -> int:
        return _high_fanout(n_t)

    def overhead(self, mix: ThreatMix) -> Fraction:
        return 2 * Fraction(mix.m_t) * mix.i_c


class IntrusionAwareReliability(ReliabilityPolicy):
    """Fan-out follows the claim's threat tier: one, half or all."""
    name = "intrusion_aware"
    FANOUT = {
        ReliabilityTier.LOW: _low_fanout,
        ReliabilityTier.MEDIUM: _medium_fanout,
        ReliabilityTier.HIGH: _high_fanout,
    }

    def fanout(self, tier: ReliabilityTier, n_t: int) -> int:
        return self.FANOUT[tier](n_t)

    def overhead(self, mix: ThreatMix) -> Fraction:
        return 2 * mix.i_l + (mix.i_m + 2 * mix.i_h) * Fraction(mix.m_t)


_POLICIES: dict[str, type[ReliabilityPolicy]] = {
    cls.name: cls
    for cls in (LowReliability, MediumReliability, HighReliability, IntrusionAwareReliability)
}

POLICY_NAMES = ("low", "medium", "high", "intrusion_aware")


def get_policy(name: str | ReliabilityPolicy) -> ReliabilityPolicy:
    if isinstance(name, ReliabilityPolicy):
        return name
    validate_in(name, VALID_POLICIES, "reliability policy")
    return _POLICIES[name]()
