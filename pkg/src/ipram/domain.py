"""Value types shared across the planner, matrix, risk and simulation modules.

Every type validates itself on construction and is immutable afterwards.
Category indices are 0-based; the protected category is whichever index the
caller designates as the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12


class ValidationError(ValueError):
    """An input or constructed object violates a documented invariant."""


class PlanningError(RuntimeError):
    """No block satisfying the target hypotheses exists, even after relaxation.

    ``best_xi`` is the smallest security level the available categories can
    support (the no-op level ``1/T1`` when no category qualifies at all).
    """

    def __init__(self, message: str, best_xi: float):
        super().__init__(message)
        self.best_xi = best_xi


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrequencyTable:
    labels: tuple[str, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        counts = []
        for c in self.counts:
            if isinstance(c, (bool, np.bool_)) or int(c) != c:
                raise ValidationError(f"count {c!r} is not an integer")
            counts.append(int(c))
        object.__setattr__(self, "counts", tuple(counts))
        if len(self.labels) != len(self.counts):
            raise ValidationError(
                f"{len(self.labels)} labels but {len(self.counts)} counts"
            )
        if len(self.labels) < 2:
            raise ValidationError(f"need at least 2 categories, got k={len(self.labels)}")
        if len(set(self.labels)) != len(self.labels):
            dupes = sorted({x for x in self.labels if self.labels.count(x) > 1})
            raise ValidationError(f"duplicate label(s): {dupes}")
        neg = [i for i, c in enumerate(self.counts) if c < 0]
        if neg:
            raise ValidationError(f"negative count at index {neg[0]}: {self.counts[neg[0]]}")
        if self.n <= 0:
            raise ValidationError("total count n must be positive")

    @property
    def k(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def proportions(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise ValidationError(f"unknown category label {label!r}") from None


def validate_frequency_table(labels: Sequence[str], counts: Sequence[int]) -> FrequencyTable:
    if len(labels) == 0 or len(counts) == 0:
        raise ValidationError("labels and counts must be non-empty")
    return FrequencyTable(tuple(labels), tuple(counts))


@dataclass(frozen=True)
class BlockPlan:
    """Block partition and perturbation strength chosen for one target category.

    ``theta`` is the expected number of records moved out of each category in
    the target's block; ``theta == 0`` encodes the no-op plan where every
    category is its own block.
    """

    target_index: int
    xi_requested: float
    xi_achieved: float
    theta: float
    blocks: tuple[tuple[int, ...], ...]
    k1: int

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        flat = [i for b in blocks for i in b]
        k = len(flat)
        if any(len(b) == 0 for b in blocks) or sorted(flat) != list(range(k)):
            raise ValidationError(f"blocks {blocks} do not partition 0..{k - 1}")
        if not 0 <= self.target_index < k:
            raise ValidationError(f"target index {self.target_index} out of range")
        for name in ("xi_requested", "xi_achieved"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValidationError(f"{name}={v} outside (0, 1)")
        if self.xi_achieved < self.xi_requested:
            raise ValidationError("xi_achieved is below xi_requested")
        if self.k1 != len(self.target_block):
            raise ValidationError(f"k1={self.k1} but target block has {len(self.target_block)} members")
        if self.theta < 0 or not math.isfinite(self.theta):
            raise ValidationError(f"theta={self.theta} must be finite and non-negative")
        if self.theta == 0 and self.k1 != 1:
            raise ValidationError("a no-op plan (theta=0) must leave the target in a singleton block")
        if self.theta > 0 and self.k1 < 2:
            raise ValidationError("theta > 0 requires a target block of size >= 2")

    @property
    def is_noop(self) -> bool:
        return self.theta == 0

    @property
    def relaxed(self) -> bool:
        return self.xi_achieved != self.xi_requested

    @property
    def target_block(self) -> tuple[int, ...]:
        for b in self.blocks:
            if self.target_index in b:
                return b
        raise AssertionError("unreachable: blocks partition the index set")

    def block_of(self) -> tuple[int, ...]:
        k = sum(len(b) for b in self.blocks)
        out = [0] * k
        for bid, b in enumerate(self.blocks):
            for i in b:
                out[i] = bid
        return tuple(out)


def _ceil_guarded(x: float, tol: float = 1e-9) -> int:
    m = round(x)
    if abs(x - m) <= tol:
        return int(m)
    return math.ceil(x)


def check_plan(freq: FrequencyTable, plan: BlockPlan, hypotheses: bool = True) -> None:
    """Raise ValidationError unless ``plan`` is consistent with ``freq``.

    Structural checks: matching size, and ``theta`` below every count in a
    multi-category block (so all matrix entries are probabilities). With
    ``hypotheses`` also require what the risk guarantee rests on: every block
    member has at least ``T1`` records and ``k1 >= ceil(T1 / (T1 - theta))``.
    """
    k = sum(len(b) for b in plan.blocks)
    if k != freq.k:
        raise ValidationError(f"plan covers {k} categories, table has {freq.k}")
    t1 = freq.counts[plan.target_index]
    if plan.is_noop:
        return
    if not plan.theta < t1:
        raise ValidationError(f"theta={plan.theta} must be below T1={t1}")
    for b in plan.blocks:
        if len(b) > 1 and any(plan.theta >= freq.counts[i] for i in b):
            raise ValidationError(f"theta={plan.theta} is not below every count in block {b}")
    if not hypotheses:
        return
    for j in plan.target_block:
        if freq.counts[j] < t1:
            raise ValidationError(
                f"block member {freq.labels[j]!r} has count {freq.counts[j]} < T1={t1}"
            )
    need = _ceil_guarded(t1 / (t1 - plan.theta))
    if plan.k1 < need:
        raise ValidationError(f"k1={plan.k1} is below the required block size {need}")


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic k x k matrix, ``p[i, j] = P(Z = j | X = i)``."""

    p: np.ndarray
    block_of: tuple[int, ...]

    def __post_init__(self):
        p = _frozen_array(self.p, float)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "block_of", tuple(int(b) for b in self.block_of))
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValidationError(f"transition matrix must be square, got shape {p.shape}")
        k = p.shape[0]
        if len(self.block_of) != k:
            raise ValidationError("block_of length does not match matrix size")
        if not np.all(np.isfinite(p)) or p.min() < 0 or p.max() > 1:
            raise ValidationError("matrix entries must lie in [0, 1]")
        resid = np.abs(p.sum(axis=1) - 1.0)
        if resid.max() > ROW_SUM_TOL:
            i = int(resid.argmax())
            raise ValidationError(f"row {i} sums to 1{p[i].sum() - 1:+.3e}")
        same = np.equal.outer(self.block_of, self.block_of)
        if np.any(p[~same] != 0):
            i, j = np.argwhere((p != 0) & ~same)[0]
            raise ValidationError(f"p[{i},{j}] is non-zero across blocks")
        sizes = np.bincount(self.block_of)
        for i in range(k):
            if sizes[self.block_of[i]] == 1 and p[i, i] != 1.0:
                raise ValidationError(f"singleton block row {i} is not an identity row")

    @property
    def k(self) -> int:
        return self.p.shape[0]

    def block_members(self, i: int) -> tuple[int, ...]:
        b = self.block_of[i]
        return tuple(j for j, bj in enumerate(self.block_of) if bj == b)

    @classmethod
    def identity(cls, k: int) -> "TransitionMatrix":
        return cls(np.eye(k), tuple(range(k)))


@dataclass(frozen=True, eq=False)
class OddsVector:
    """Per-category odds of landing in the target category.

    Position 0 always refers to the target itself. ``members`` are the
    original category indices in that order.
    """

    members: tuple[int, ...]
    alpha: np.ndarray
    beta: np.ndarray
    t_star: tuple[int, ...]

    def __post_init__(self):
        alpha = _frozen_array(self.alpha, float)
        beta = _frozen_array(self.beta, float)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "members", tuple(int(i) for i in self.members))
        object.__setattr__(self, "t_star", tuple(int(t) for t in self.t_star))
        m = len(self.members)
        if not (len(alpha) == len(beta) == len(self.t_star) == m) or m < 1:
            raise ValidationError("odds vector fields must have equal, non-zero length")
        if np.any(alpha < 0) or np.any(alpha >= 1):
            raise ValidationError("alpha entries must lie in [0, 1)")
        if not np.array_equal(beta, alpha / (1 - alpha)):
            raise ValidationError("beta must equal alpha / (1 - alpha)")
        if min(self.t_star) < 0:
            raise ValidationError("t_star entries must be non-negative")

    @classmethod
    def from_alpha(cls, members, alpha, t_star) -> "OddsVector":
        alpha = np.asarray(alpha, dtype=float)
        with np.errstate(divide="ignore"):
            beta = alpha / (1 - alpha)
        return cls(tuple(members), alpha, beta, tuple(t_star))

    @property
    def beta1(self) -> float:
        return float(self.beta[0])

    @property
    def t1(self) -> int:
        return self.t_star[0] + 1

    def target_dominates(self, rtol: float = 1e-12) -> bool:
        """Whether the target's own odds are the largest in its block."""
        return bool(np.all(self.beta <= self.beta[0] * (1 + rtol)))


@dataclass(frozen=True)
class RiskProfile:
    r1_by_a: Mapping[int, float]
    psi_bound: float
    max_risk: float
    xi_target: float
    argmax_a: int = 1
    target_dominates: bool = True
    certified: bool = False

    def __post_init__(self):
        r1 = {int(a): float(v) for a, v in self.r1_by_a.items()}
        object.__setattr__(self, "r1_by_a", r1)
        if not r1:
            raise ValidationError("risk profile has no entries")
        for a, v in r1.items():
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"R1({a}) = {v} outside [0, 1]")
        if not 0.0 <= self.psi_bound <= 1.0:
            raise ValidationError(f"psi bound {self.psi_bound} outside [0, 1]")
        if self.max_risk != max(r1.values()):
            raise ValidationError("max_risk does not equal the maximum stored R1")


@dataclass(frozen=True)
class SimulationReport:
    replicates: int
    master_seed: int
    mse_per_category: tuple[float, ...]
    avg_correct_match: float
    rng_name: str
    intruder_success_rate: float = float("nan")
    mean_counts: tuple[float, ...] = field(default=())
    singleton_categories: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "mse_per_category", tuple(float(x) for x in self.mse_per_category))
        object.__setattr__(self, "mean_counts", tuple(float(x) for x in self.mean_counts))
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        if any(x < 0 for x in self.mse_per_category):
            raise ValidationError("mse entries must be non-negative")
        if not 0.0 <= self.avg_correct_match <= 1.0:
            raise ValidationError("avg_correct_match outside [0, 1]")
        for i in self.singleton_categories:
            if self.mse_per_category[i] != 0.0:
                raise ValidationError(f"singleton category {i} has non-zero mse")

    @property
    def k(self) -> int:
        return len(self.mse_per_category)
