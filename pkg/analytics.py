"""Closed-form overhead, consensus and security analyses with enumeration oracles."""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from models import ClaimValue, OracleValue, ResponderModel, SecurityScenario, ThreatMix
from numerical import (
    central_trinomial,
    count_nonzero_sums,
    nonzero_sum_probability,
    overhead_grid,
    response_sum_distribution,
    two_choice_sums,
)
from reliability import POLICY_NAMES, ReliabilityPolicy, get_policy
from utils import validate_probability

logger = logging.getLogger(__name__)

UNIFORM_ENUMERATION_LIMIT = 12
PMF_ENUMERATION_LIMIT = 15
ORACLE_ENUMERATION_LIMIT = 20
CLAIM_SOURCES = ("formula", "oracle_proof", "oracle_eq10")


class EnumerationBoundError(ValueError):
    """Input too large to enumerate exhaustively."""


# ------------------------------------------------------------------ overhead


def overhead(policy: str | ReliabilityPolicy, mix: ThreatMix) -> Fraction:
    return get_policy(policy).overhead(mix)


# ------------------------------------------------------------------ consensus


def consensus_probability_uniform(n_res: int) -> Fraction:
    """P_c = N_c / 3^n_res for uniformly answering responders."""
    if n_res < 1:
        raise ValueError(f"n_res must be >= 1, got {n_res}")
    total = 3 ** n_res
    if n_res <= UNIFORM_ENUMERATION_LIMIT:
        return Fraction(count_nonzero_sums(n_res), total)
    return Fraction(total - central_trinomial(n_res), total)


def consensus_probability_pmf(model: ResponderModel) -> Fraction | float:
    """P_c for per-responder pmfs over (1, 0, -1).

    Exact when every pmf entry is a Fraction, a float otherwise. Raises
    EnumerationBoundError above 15 responders.
    """
    if model.n_res < 1:
        raise ValueError("model needs at least one responder")
    if model.n_res > PMF_ENUMERATION_LIMIT:
        raise EnumerationBoundError(
            f"n_res={model.n_res} exceeds the enumeration bound of {PMF_ENUMERATION_LIMIT} "
            f"({model.alphabet_size}^{model.n_res} outcomes); estimate it by Monte Carlo with "
            "network_sim.consensus_trials instead"
        )
    if model.exact:
        dist = response_sum_distribution(model.pmfs)
        return sum((p for s, p in dist.items() if s != 0), Fraction(0))
    return nonzero_sum_probability(model.pmfs)


# ------------------------------------------------------------------ security claims


def _claim1_expression(n_t: int, m: int) -> Fraction:
    if 2 * m >= n_t:
        return Fraction(1)
    free = n_t - m
    tail = sum(Fraction(math.comb(free, i), 2 ** free) for i in range(1, m + 1))
    return math.comb(n_t, m) * tail


def claim_formula(which: int, scenario: SecurityScenario) -> ClaimValue:
    """The literal closed form of Claims 1-4; may fall outside [0, 1]."""
    n_t, m, mp = scenario.n_t, scenario.m, scenario.m_prime
    if which == 1:
        value = _claim1_expression(n_t, m)
    elif which == 2:
        if 2 * mp > n_t or m < mp:
            value = Fraction(0)
        else:
            value = _claim1_expression(n_t, m - mp)
    elif which == 3:
        value = 1 - _claim1_expression(n_t, m)
    elif which == 4:
        value = _claim1_expression(n_t, m + mp)
    else:
        raise ValueError(f"claim must be 1..4, got {which}")
    return ClaimValue(value)


def _oracle_layout(which: int, scenario: SecurityScenario) -> tuple[int, int, int]:
    """(fixed sum, free responders, value a free responder may send besides 0)."""
    n_t, m, mp = scenario.n_t, scenario.m, scenario.m_prime
    if which == 1:
        return m, n_t - m, -1
    if which == 2:
        return m - mp, n_t - m - mp, -1
    if which == 3:
        return -m, n_t - m, 1
    if which == 4:
        return m + mp, n_t - m - mp, -1
    raise ValueError(f"claim must be 1..4, got {which}")


def claim_oracle(which: int, scenario: SecurityScenario) -> OracleValue:
    """Pr[M] by enumerating every free responder's answer."""
    if scenario.n_t > ORACLE_ENUMERATION_LIMIT:
        raise EnumerationBoundError(
            f"N_t={scenario.n_t} exceeds the oracle bound of {ORACLE_ENUMERATION_LIMIT}"
        )
    fixed, n_free, active = _oracle_layout(which, scenario)
    sums = two_choice_sums(fixed, n_free, active)
    total = len(sums)
    return OracleValue(
        proof_rule=Fraction(int(np.count_nonzero(sums >= 0)), total),
        eq10_rule=Fraction(int(np.count_nonzero(sums > 0)), total),
    )


def combine_claim5(p, a, b, c, d) -> tuple:
    """(Pr[O|S], Pr[O|not S]) from the four conditional Pr[M] values."""
    validate_probability(p, "p")
    return (p * (1 - a) + (1 - p) * (1 - b), p * (1 - c) + (1 - p) * (1 - d))


def claim5(p, scenario: SecurityScenario, source: str = "oracle_proof") -> tuple:
    if source not in CLAIM_SOURCES:
        raise ValueError(f"source must be one of {CLAIM_SOURCES}, got {source!r}")
    values = []
    for which in (1, 2, 3, 4):
        if source == "formula":
            values.append(claim_formula(which, scenario).value)
        else:
            oracle = claim_oracle(which, scenario)
            values.append(oracle.proof_rule if source == "oracle_proof" else oracle.eq10_rule)
    return combine_claim5(p, *values)


# ------------------------------------------------------------------ tables


def overhead_table(mixes: Iterable[ThreatMix], policies: Sequence[str] = POLICY_NAMES) -> pd.DataFrame:
    rows = []
    for mix in mixes:
        for name in policies:
            rows.append({
                "policy": name, "I_l": mix.i_l, "I_m": mix.i_m, "I_h": mix.i_h,
                "m_t": float(mix.m_t), "messages": float(overhead(name, mix)),
            })
    return pd.DataFrame(rows, columns=["policy", "I_l", "I_m", "I_h", "m_t", "messages"])


def overhead_grid_table(m_t_values: Sequence[float], i_c_values: Sequence[int],
                        shares: Sequence[float] = (1 / 3, 1 / 3, 1 / 3)) -> pd.DataFrame:
    """Long-form overhead curves for plotting against I_c and m_t."""
    frames = []
    for name in POLICY_NAMES:
        grid = overhead_grid(np.asarray(m_t_values), np.asarray(i_c_values), shares, name)
        mt, ic = np.meshgrid(m_t_values, i_c_values, indexing="ij")
        frames.append(pd.DataFrame({
            "policy": name, "m_t": mt.ravel(), "I_c": ic.ravel(), "messages": grid.ravel(),
        }))
    return pd.concat(frames, ignore_index=True)


def consensus_table(n_res_values: Iterable[int], model_factory=None) -> pd.DataFrame:
    rows = []
    for n in n_res_values:
        if model_factory is None:
            value = consensus_probability_uniform(n)
        else:
            value = consensus_probability_pmf(model_factory(n))
        exact = value if isinstance(value, Fraction) else None
        rows.append({
            "n_res": n,
            "P_c_exact_num": exact.numerator if exact is not None else "",
            "P_c_exact_den": exact.denominator if exact is not None else "",
            "P_c_float": float(value),
        })
    return pd.DataFrame(rows, columns=["n_res", "P_c_exact_num", "P_c_exact_den", "P_c_float"])


def claims_table(nt_max: int) -> pd.DataFrame:
    """Every claim at every (N_t, m, m') with m + m' <= N_t <= nt_max."""
    rows = []
    for n_t in range(1, nt_max + 1):
        for m in range(n_t + 1):
            for mp in range(n_t - m + 1):
                scenario = SecurityScenario(n_t, m, mp)
                for which in (1, 2, 3, 4):
                    if which in (1, 3) and mp:
                        continue
                    formula = claim_formula(which, scenario)
                    oracle = claim_oracle(which, scenario)
                    rows.append({
                        "claim": which, "N_t": n_t, "m": m, "m_prime": mp,
                        "formula_value": float(formula.value),
                        "out_of_range_flag": int(formula.out_of_range),
                        "oracle_proof_rule": float(oracle.proof_rule),
                        "oracle_eq10_rule": float(oracle.eq10_rule),
                    })
    logger.info("claims table: %d rows up to N_t=%d", len(rows), nt_max)
    return pd.DataFrame(rows)


def claim5_table(p_values: Iterable[float], scenario: SecurityScenario) -> pd.DataFrame:
    rows = []
    for p in p_values:
        for source in CLAIM_SOURCES:
            given_s, given_not_s = claim5(Fraction(p).limit_denominator(10 ** 9), scenario, source)
            rows.append({
                "p": float(p), "source": source, "N_t": scenario.n_t, "m": scenario.m,
                "m_prime": scenario.m_prime, "pr_O_given_S": float(given_s),
                "pr_O_given_not_S": float(given_not_s),
            })
    return pd.DataFrame(rows)
