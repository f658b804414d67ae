"""Exact correct-match risk for the protected category.

Given the released count ``S1 = a`` of the target category, the chance that
the intruder's uniform pick among those ``a`` records is the target unit is

    R1(a) = (1/a) * [1 + Sigma_a / (beta_1 * Sigma_{a-1})]**-1

where ``Sigma_a = [x**a] prod_i (1 + beta_i x)**t_star_i`` collects every way
the other in-block records can contribute ``a`` arrivals into the target
category. Only ratios of consecutive ``Sigma`` enter, so the coefficients are
kept in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    BlockPlan,
    FrequencyTable,
    OddsVector,
    RiskProfile,
    TransitionMatrix,
    ValidationError,
    check_plan,
)
from .planner import psi

CERTIFY_RTOL = 1e-12


class RiskDomainError(ValueError):
    """The requested released count cannot occur under the given odds."""


def odds_from_matrix(m: TransitionMatrix, freq: FrequencyTable, target: int) -> OddsVector:
    """Odds of each in-block category moving into ``target``, target first.

    Uses the column ``p[i, target]``: the probability that a record of
    category ``i`` is released as the target category.
    """
    members = m.block_members(target)
    if len(members) < 2:
        raise ValidationError("target sits in a singleton block; there are no odds to compute")
    order = (target, *(i for i in members if i != target))
    alpha = np.array([m.p[i, target] for i in order])
    if np.any(alpha >= 1):
        raise ValidationError("a block member maps into the target with probability 1")
    t_star = [freq.counts[i] for i in order]
    t_star[0] -= 1
    if t_star[0] < 0:
        raise ValidationError("target category has no records")
    return OddsVector.from_alpha(order, alpha, t_star)


@dataclass(frozen=True, eq=False)
class SigmaCoefficients:
    """``Sigma_0 .. Sigma_amax`` stored as natural logs (``-inf`` for zero).

    ``mantissa * 2**exponent`` recovers each coefficient without overflow.
    """

    log_sigma: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.log_sigma) - 1

    @property
    def exponent(self) -> np.ndarray:
        finite = np.isfinite(self.log_sigma)
        e = np.zeros(len(self.log_sigma), dtype=np.int64)
        e[finite] = np.floor(self.log_sigma[finite] / math.log(2)).astype(np.int64) + 1
        return e

    @property
    def mantissa(self) -> np.ndarray:
        return np.exp(self.log_sigma - self.exponent * math.log(2))

    def values(self) -> np.ndarray:
        """Plain floats; may overflow or underflow for large blocks."""
        return np.exp(self.log_sigma)

    def ratio(self, a: int) -> float:
        """``Sigma_a / Sigma_{a-1}``."""
        lo = self.log_sigma[a - 1]
        hi = self.log_sigma[a] if a <= self.degree else -np.inf
        if lo == -np.inf:
            raise RiskDomainError(f"Sigma_{a - 1} is zero")
        if hi == -np.inf:
            return 0.0
        return math.exp(hi - lo)


def sigma_coeffs(odds: OddsVector, a_max: int | None = None) -> SigmaCoefficients:
    """Coefficients of ``prod_i (1 + beta_i x)**t_star_i`` up to degree ``a_max``.

    Multiplies in one ``(1 + beta_i x)`` factor at a time, truncating at
    ``a_max``; cost is ``O(a_max * sum(t_star))``.
    """
    total = sum(odds.t_star)
    if a_max is None:
        a_max = total
    if a_max < 0:
        raise ValueError("a_max must be non-negative")
    log_c = np.full(a_max + 1, -np.inf)
    log_c[0] = 0.0
    top = 0
    with np.errstate(divide="ignore"):
        log_beta = np.log(odds.beta)
    for lb, t in zip(log_beta, odds.t_star):
        if t == 0 or lb == -np.inf:
            continue
        for _ in range(t):
            hi = min(top + 1, a_max)
            # new[d] = old[d] + beta * old[d-1]; the right side is evaluated before assignment
            log_c[1 : hi + 1] = np.logaddexp(log_c[1 : hi + 1], log_c[:hi] + lb)
            top = hi
    return SigmaCoefficients(log_c)


def r1_exact(a: int, odds: OddsVector, sigma: SigmaCoefficients | None = None) -> float:
    """Probability of a correct match given the target category is released ``a`` times."""
    if a < 1:
        raise ValueError("a must be >= 1")
    if a > 1 + sum(odds.t_star):
        raise RiskDomainError(f"S1={a} exceeds the {1 + sum(odds.t_star)} records in the block")
    if sigma is None or sigma.degree < a:
        sigma = sigma_coeffs(odds, a)
    ratio = sigma.ratio(a)
    return 1.0 / (a * (1.0 + ratio / odds.beta1))


def r1_profile(odds: OddsVector, a_max: int | None = None) -> np.ndarray:
    """``R1(1..a_max)`` in one pass; entry ``a-1`` holds ``R1(a)``."""
    support = 1 + sum(odds.t_star)
    a_max = support if a_max is None else min(a_max, support)
    sigma = sigma_coeffs(odds, a_max)
    ls = sigma.log_sigma
    a = np.arange(1, a_max + 1)
    ratio = np.exp(ls[1:] - ls[:-1])
    return 1.0 / (a * (1.0 + ratio / odds.beta1))


def r1_closed_form_1(freq: FrequencyTable, plan: BlockPlan) -> float:
    """``R1(1)`` for an inverse-frequency block, bounded above by ``psi(T1, theta)``."""
    check_plan(freq, plan, hypotheses=False)
    t1 = freq.counts[plan.target_index]
    theta = plan.theta
    if plan.is_noop:
        return 1.0 / t1
    k1 = plan.k1
    others = [freq.counts[i] for i in plan.target_block if i != plan.target_index]
    s = math.fsum(t / ((k1 - 1) * t - theta) for t in others)
    value = (t1 - theta) / (t1 * (t1 - theta) + theta * theta * s)
    bound = psi(t1, theta)
    assert value <= bound * (1 + 1e-12), (value, bound)
    return value


def check_appendix_criterion(odds: OddsVector, a: int, sigma: SigmaCoefficients | None = None) -> float:
    """Sign test equivalent to ``R1(a+1) <= R1(1)``.

    Returns ``(Sig~_{a+1} - Sigma_1 * Sig~_a + a * beta_1 * Sig~_a) / Sig~_a``
    with ``Sig~_a = a! * Sigma_a``; the divisor is positive so the sign is
    preserved. Zero when ``Sigma_a`` vanishes.
    """
    if a < 1:
        raise ValueError("a must be >= 1")
    if sigma is None or sigma.degree < a + 1:
        sigma = sigma_coeffs(odds, a + 1)
    if sigma.log_sigma[a] == -np.inf:
        return 0.0
    sigma1 = math.fsum(t * b for t, b in zip(odds.t_star, odds.beta))
    return (a + 1) * sigma.ratio(a + 1) - sigma1 + a * odds.beta1


def correct_match_probability(odds: OddsVector) -> float:
    """Unconditional (given the original counts) correct-match probability.

    ``sum_a R1(a) P(S1 = a)``, which simplifies to
    ``alpha_1 * prod_i (1-alpha_i)**t_star_i * sum_a Sigma_{a-1} / a``.
    """
    sigma = sigma_coeffs(odds)
    log_base = math.log(odds.alpha[0]) + sum(
        t * math.log1p(-al) for al, t in zip(odds.alpha, odds.t_star)
    )
    a = np.arange(1, sigma.degree + 2)
    terms = sigma.log_sigma + log_base - np.log(a)
    return float(np.exp(terms[np.isfinite(terms)]).sum())


def risk_profile(
    freq: FrequencyTable, plan: BlockPlan, m: TransitionMatrix, a_max: int | None = None
) -> RiskProfile:
    """Exact ``R1(a)`` over the feasible released counts plus certification.

    ``certified`` holds when the target's odds dominate its block and the
    worst ``R1`` is within ``xi_achieved``.
    """
    check_plan(freq, plan, hypotheses=False)
    t1 = freq.counts[plan.target_index]
    if plan.is_noop:
        # unperturbed: S1 == T1 surely, so a single entry regardless of a_max
        r1 = {t1: 1.0 / t1}
        worst = max(r1.values())
        return RiskProfile(
            r1_by_a=r1,
            psi_bound=psi(t1, 0.0),
            max_risk=worst,
            xi_target=plan.xi_achieved,
            argmax_a=max(r1, key=r1.get),
            target_dominates=True,
            certified=worst <= plan.xi_achieved * (1 + CERTIFY_RTOL),
        )
    odds = odds_from_matrix(m, freq, plan.target_index)
    values = r1_profile(odds, a_max)
    r1 = {a + 1: float(v) for a, v in enumerate(values)}
    worst = max(r1.values())
    dominates = odds.target_dominates()
    return RiskProfile(
        r1_by_a=r1,
        psi_bound=psi(t1, plan.theta),
        max_risk=worst,
        xi_target=plan.xi_achieved,
        argmax_a=int(np.argmax(values)) + 1,
        target_dominates=dominates,
        certified=dominates and worst <= plan.xi_achieved * (1 + CERTIFY_RTOL),
    )
