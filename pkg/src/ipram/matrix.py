"""Inverse-frequency block-diagonal transition matrices and their checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    ROW_SUM_TOL,
    BlockPlan,
    FrequencyTable,
    TransitionMatrix,
    ValidationError,
    check_plan,
)

INVARIANCE_RTOL = 1e-9


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    max_residual: float
    worst_index: int | None
    message: str = ""

    def __bool__(self) -> bool:
        return self.passed


def build_ifpr(freq: FrequencyTable, plan: BlockPlan) -> TransitionMatrix:
    """Build the inverse-frequency post-randomization matrix for ``plan``.

    Inside a block of size ``m > 1``, category ``i`` keeps its value with
    probability ``1 - theta/T_i`` and moves to each other member with
    probability ``theta / ((m - 1) * T_i)``. Singleton blocks are identity
    rows, so ``theta == 0`` yields the identity matrix.
    """
    check_plan(freq, plan, hypotheses=False)
    k = freq.k
    theta = plan.theta
    p = np.zeros((k, k))
    for block in plan.blocks:
        m = len(block)
        if m == 1 or theta == 0:
            for i in block:
                p[i, i] = 1.0
            continue
        idx = np.array(block)
        for i in block:
            t = freq.counts[i]
            if theta >= t:
                raise ValidationError(f"theta={theta} >= T={t} for category {freq.labels[i]!r}")
            p[i, idx] = theta / ((m - 1) * t)
            p[i, i] = 1.0 - theta / t
    return TransitionMatrix(p, plan.block_of())


def verify_row_stochastic(m: TransitionMatrix | np.ndarray, tol: float = ROW_SUM_TOL) -> CheckReport:
    p = np.asarray(m.p if isinstance(m, TransitionMatrix) else m, dtype=float)
    bad_entries = np.argwhere((p < 0) | (p > 1) | ~np.isfinite(p))
    if len(bad_entries):
        i, j = bad_entries[0]
        return CheckReport(False, float("inf"), int(i), f"entry p[{i},{j}]={p[i, j]} outside [0, 1]")
    resid = np.abs(p.sum(axis=1) - 1.0)
    worst = int(resid.argmax())
    ok = bool(resid[worst] <= tol)
    msg = "" if ok else f"row {worst} sums to 1{p[worst].sum() - 1:+.3e}"
    return CheckReport(ok, float(resid[worst]), None if ok else worst, msg)


def verify_invariance(
    m: TransitionMatrix | np.ndarray, freq: FrequencyTable, rtol: float = INVARIANCE_RTOL
) -> CheckReport:
    """Check that expected category counts survive perturbation.

    With ``p[i, j] = P(Z=j | X=i)`` this is ``sum_i T_i p[i, j] == T_j`` for
    every column ``j``, to within ``rtol * n``.
    """
    p = np.asarray(m.p if isinstance(m, TransitionMatrix) else m, dtype=float)
    t = np.asarray(freq.counts, dtype=float)
    resid = np.abs(t @ p - t)
    worst = int(resid.argmax())
    ok = bool(resid[worst] <= rtol * freq.n)
    msg = "" if ok else f"column {worst} expected count off by {resid[worst]:.3e}"
    return CheckReport(ok, float(resid[worst]), None if ok else worst, msg)


def format_matrix(m: TransitionMatrix) -> str:
    """Full-precision comma-separated rows, one per line."""
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in m.p)


def parse_matrix(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line.strip()]
    return np.array([[float(x) for x in row.split(",")] for row in rows])


def format_matrix_rounded(m: TransitionMatrix, decimals: int = 3) -> str:
    """Aligned display with ``decimals`` places; exact 0 and 1 print bare."""

    def cell(x: float) -> str:
        if x == 0.0:
            return "0"
        if x == 1.0:
            return "1"
        return f"{x:.{decimals}f}"

    cells = [[cell(x) for x in row] for row in m.p]
    width = max(len(c) for row in cells for c in row)
    return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells) + "\n"
