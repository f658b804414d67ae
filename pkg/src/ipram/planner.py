"""Choosing the perturbation strength and block for a protected category.

The risk bound for a category with ``t1`` records perturbed with strength
``theta`` is

    psi(t1, theta) = (t1 - theta) / (t1 * (t1 - theta) + theta**2)

which falls from ``1/t1`` at ``theta = 0`` to ``0`` at ``theta = t1``. The
planner solves ``psi = xi`` for ``theta`` and derives how many categories the
target's block needs so that the target keeps the largest odds of landing in
its own category.
"""

from __future__ import annotations

import math

import numpy as np

from .domain import BlockPlan, FrequencyTable, PlanningError, ValidationError, _ceil_guarded

TABLE1_T1 = tuple(range(1, 11))
TABLE1_XI = (0.1, 0.125, 0.15, 0.175, 0.2, 0.25, 0.3)

# xi * t1 within this of 1 is treated as xi == 1/t1
_DEGENERATE_TOL = 1e-12


def psi(t1: int, theta: float) -> float:
    if t1 <= 0:
        raise ValueError(f"t1 must be positive, got {t1}")
    if not 0 <= theta <= t1:
        raise ValueError(f"theta={theta} outside [0, {t1}]")
    return (t1 - theta) / (t1 * (t1 - theta) + theta * theta)


def _needs_obfuscation(t1: int, xi: float) -> bool:
    return xi * t1 < 1 - _DEGENERATE_TOL


def solve_theta(t1: int, xi: float) -> float:
    """Root of ``psi(t1, theta) = xi`` in ``(0, t1)``.

    Clearing the denominator gives
    ``xi*theta**2 + (1 - xi*t1)*theta + (xi*t1**2 - t1) = 0``, whose roots
    have opposite signs when ``xi < 1/t1``. The positive root is taken via the
    product of roots to avoid cancellation.
    """
    if t1 <= 0:
        raise ValueError(f"t1 must be positive, got {t1}")
    if not 0 < xi < 1:
        raise ValueError(f"xi={xi} outside (0, 1)")
    if not _needs_obfuscation(t1, xi):
        raise ValueError(f"xi={xi} >= 1/t1={1 / t1}: no perturbation needed")
    a = xi
    b = 1 - xi * t1
    c = t1 * (xi * t1 - 1)
    disc = b * b - 4 * a * c
    q = -0.5 * (b + math.sqrt(disc))
    theta = c / q
    if not 0 < theta < t1:
        raise ArithmeticError(f"no root of psi({t1}, .) = {xi} in (0, {t1}); got {theta}")
    return theta


def min_block_size(t1: int, xi: float) -> int:
    """Smallest target block size ``ceil(t1 / (t1 - theta*))``, at least 2.

    When ``xi >= 1/t1`` no perturbation is required and the smallest
    non-trivial block (2) is returned, matching the filled cells of the
    published table.
    """
    if not _needs_obfuscation(t1, xi):
        if not 0 < xi < 1:
            raise ValueError(f"xi={xi} outside (0, 1)")
        return 2
    theta = solve_theta(t1, xi)
    return max(2, _ceil_guarded(t1 / (t1 - theta)))


def reproduce_table1() -> np.ndarray:
    return np.array(
        [[min_block_size(t1, xi) for xi in TABLE1_XI] for t1 in TABLE1_T1], dtype=int
    )


def _relaxation_levels(xi: float):
    # 1/n* <= xi < 1/(n*-1), then xi_l = 1/(n*-l) for l = 1, 2, ... down to 1/2
    n_star = _ceil_guarded(1 / xi)
    for m in range(n_star - 1, 1, -1):
        yield 1 / m


def _noop_plan(k: int, target: int, xi_requested: float, xi_achieved: float) -> BlockPlan:
    return BlockPlan(
        target_index=target,
        xi_requested=xi_requested,
        xi_achieved=xi_achieved,
        theta=0.0,
        blocks=tuple((i,) for i in range(k)),
        k1=1,
    )


def _best_supported_xi(t1: int, n_qualifying: int) -> float:
    # a block of size m+1 supports theta up to t1*m/(m+1)
    if n_qualifying == 0:
        return 1 / t1
    m = n_qualifying
    return psi(t1, t1 * m / (m + 1))


def plan_blocks(freq: FrequencyTable, target: int, xi: float) -> BlockPlan:
    """Plan the block and ``theta`` protecting category ``target`` at level ``xi``.

    Candidates for the block are the other categories with at least as many
    records as the target; the smallest ones are chosen (ties to the lower
    index). If too few exist, ``xi`` is relaxed along ``1/m`` for decreasing
    integers ``m`` down to ``1/2``.

    Raises:
        PlanningError: no feasible block even at ``xi = 1/2``.
    """
    if not 0 <= target < freq.k:
        raise ValidationError(f"target index {target} out of range for k={freq.k}")
    if not 0 < xi < 1:
        raise ValidationError(f"xi={xi} outside (0, 1)")
    t1 = freq.counts[target]
    if t1 == 0:
        raise ValidationError(f"target category {freq.labels[target]!r} has no records")

    qualifying = sorted(
        (j for j in range(freq.k) if j != target and freq.counts[j] >= t1),
        key=lambda j: (freq.counts[j], j),
    )

    for level in (xi, *_relaxation_levels(xi)):
        if not _needs_obfuscation(t1, level):
            return _noop_plan(freq.k, target, xi, level)
        need = min_block_size(t1, level)
        if need - 1 <= len(qualifying):
            members = (target, *qualifying[: need - 1])
            rest = tuple((j,) for j in range(freq.k) if j not in members)
            return BlockPlan(
                target_index=target,
                xi_requested=xi,
                xi_achieved=level,
                theta=solve_theta(t1, level),
                blocks=(tuple(sorted(members)), *rest),
                k1=need,
            )

    best = _best_supported_xi(t1, len(qualifying))
    raise PlanningError(
        f"only {len(qualifying)} categories have at least T1={t1} records; "
        f"infeasible even at xi=1/2 (best supported xi ~ {best:.6g})",
        best_xi=best,
    )
