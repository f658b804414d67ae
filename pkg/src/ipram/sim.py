"""Monte Carlo checks of a perturbation plan.

Each replicate perturbs the original column with its own derived seed,
measures the squared error of the released proportions against the original
ones, and plays the intruder game: look for records released as the target
category and pick one uniformly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .domain import BlockPlan, FrequencyTable, SimulationReport, TransitionMatrix, ValidationError
from .perturb import RNG_NAME, CategoricalColumn, count_vector, make_rng, mix, perturb

# second key passed to mix() for the intruder's pick in replicate r
_PICK_STREAM = 1


def intruder_game(z: CategoricalColumn, target_record: int, target_category: int, seed: int) -> bool:
    """One round of the intruder's uniform pick among records showing ``target_category``.

    Fails outright when no released record carries the category.
    """
    candidates = np.flatnonzero(z.values == target_category)
    if len(candidates) == 0:
        return False
    pick = candidates[make_rng(seed).integers(len(candidates))]
    return bool(pick == target_record)


def default_target_record(col: CategoricalColumn, target_category: int) -> int:
    hits = np.flatnonzero(col.values == target_category)
    if len(hits) == 0:
        raise ValidationError(f"no record has category {col.labels[target_category]!r}")
    return int(hits[0])


@dataclass(frozen=True)
class ReplicateResult:
    replicate: int
    seed: int
    counts: tuple[int, ...]
    target_released: bool
    match_probability: float
    intruder_success: bool


def _replicate(col, m, master_seed, r, target_record, target_category) -> ReplicateResult:
    seed = mix(master_seed, r)
    z = perturb(col, m, seed)
    counts = count_vector(z)
    s1 = int(counts[target_category])
    released = bool(z.values[target_record] == target_category)
    return ReplicateResult(
        replicate=r,
        seed=seed,
        counts=tuple(int(c) for c in counts),
        target_released=released,
        match_probability=1.0 / s1 if released else 0.0,
        intruder_success=intruder_game(
            z, target_record, target_category, mix(master_seed, r, _PICK_STREAM)
        ),
    )


def simulate_replicates(
    col: CategoricalColumn,
    m: TransitionMatrix,
    replicates: int,
    master_seed: int,
    target_category: int,
    target_record: int | None = None,
    jobs: int = 1,
) -> list[ReplicateResult]:
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if target_record is None:
        target_record = default_target_record(col, target_category)
    if col.values[target_record] != target_category:
        raise ValidationError(
            f"record {target_record} is not in category {col.labels[target_category]!r}"
        )

    def run(r):
        return _replicate(col, m, master_seed, r, target_record, target_category)

    if jobs <= 1:
        return [run(r) for r in range(replicates)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, range(replicates)))


def run_replicates(
    col: CategoricalColumn,
    m: TransitionMatrix,
    replicates: int,
    master_seed: int,
    target_category: int,
    target_record: int | None = None,
    jobs: int = 1,
) -> SimulationReport:
    """Per-category MSE of released proportions and average correct-match probability.

    Replicate ``r`` perturbs with seed ``mix(master_seed, r)``, so the report
    does not depend on ``jobs``. ``avg_correct_match`` averages the
    per-replicate match probability (``1/S1`` when the target unit is released
    in its own category, else 0); ``intruder_success_rate`` is the fraction of
    replicates in which the simulated uniform pick actually hit the target.
    """
    results = simulate_replicates(
        col, m, replicates, master_seed, target_category, target_record, jobs
    )
    return summarize(results, col, m, master_seed)


def summarize(
    results: list[ReplicateResult], col: CategoricalColumn, m: TransitionMatrix, master_seed: int
) -> SimulationReport:
    replicates = len(results)
    n = len(col)
    orig = count_vector(col)
    counts = np.array([res.counts for res in results], dtype=np.int64)
    # integer differences keep the squared errors exact before the final division
    sq = (counts - orig) ** 2
    mse = [math.fsum(sq[:, j].tolist()) / (replicates * n * n) for j in range(col.k)]
    mean_counts = [math.fsum(counts[:, j].tolist()) / replicates for j in range(col.k)]
    sizes = np.bincount(m.block_of)
    singletons = tuple(j for j in range(col.k) if sizes[m.block_of[j]] == 1)
    return SimulationReport(
        replicates=replicates,
        master_seed=master_seed,
        mse_per_category=tuple(mse),
        avg_correct_match=math.fsum(r.match_probability for r in results) / replicates,
        rng_name=RNG_NAME,
        intruder_success_rate=sum(r.intruder_success for r in results) / replicates,
        mean_counts=tuple(mean_counts),
        singleton_categories=singletons,
    )


@dataclass(frozen=True)
class ConditionalEstimate:
    mean: float
    stderr: float
    kept: int

    def within(self, value: float, n_se: float = 3.0) -> bool:
        return self.kept > 0 and abs(self.mean - value) <= n_se * self.stderr


def _block_arrivals(freq, m, target, replicates, rng):
    """Per replicate: whether the target unit kept its category, and ``S1``.

    Only in-block records can be released as the target category, so ``S1``
    is the target unit's indicator plus one binomial draw per block member.
    """
    members = m.block_members(target)
    others = [i for i in members if i != target]
    # the target unit itself
    target_kept = rng.random(replicates) < m.p[target, target]
    s1 = target_kept.astype(np.int64)
    # remaining records of the target category, then the other members
    for i, n_i in [(target, freq.counts[target] - 1), *((i, freq.counts[i]) for i in others)]:
        if n_i > 0:
            s1 += rng.binomial(n_i, m.p[i, target], size=replicates)
    return target_kept, s1


def estimate_conditional_r1(
    freq: FrequencyTable,
    plan: BlockPlan,
    m: TransitionMatrix,
    a: int,
    replicates: int,
    seed: int,
) -> ConditionalEstimate:
    """Rejection estimate of the correct-match probability given ``S1 == a``.

    Each kept replicate contributes ``1/a`` if the target unit was released in
    its own category and 0 otherwise, the intruder's pick being averaged out.
    A value of ``a`` never reached yields ``kept == 0`` and a NaN mean.
    """
    if a < 1:
        raise ValueError("a must be >= 1")
    if plan.is_noop:
        raise ValidationError("conditional risk estimation needs a perturbing plan (theta > 0)")
    released, s1 = _block_arrivals(freq, m, plan.target_index, replicates, make_rng(seed))
    keep = s1 == a
    kept = int(keep.sum())
    if kept == 0:
        return ConditionalEstimate(float("nan"), float("nan"), 0)
    x = np.where(released[keep], 1.0 / a, 0.0)
    se = float(x.std(ddof=1) / math.sqrt(kept)) if kept > 1 else float("inf")
    return ConditionalEstimate(float(x.mean()), se, kept)
