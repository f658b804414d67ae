"""Applying a transition matrix to one categorical column.

Randomness comes from numpy's PCG64 bit generator. Sub-seeds are derived with
:func:`mix`, which hashes its integer arguments through
``numpy.random.SeedSequence`` and returns the first 64-bit word of the
generated state. Both are stable across platforms for a fixed numpy major
version.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import FrequencyTable, TransitionMatrix, ValidationError

RNG_NAME = "numpy.PCG64 (SeedSequence-mixed sub-seeds)"


def mix(master_seed: int, *keys: int) -> int:
    """Derive a 64-bit sub-seed from ``master_seed`` and integer ``keys``."""
    if not 0 <= master_seed < 2**64:
        raise ValueError(f"seed {master_seed} is not a 64-bit unsigned integer")
    ss = np.random.SeedSequence([int(master_seed), *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed {seed} is not a 64-bit unsigned integer")
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class CategoricalColumn:
    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.int64).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(values) and (values.min() < 0 or values.max() >= len(self.labels)):
            raise ValidationError(f"category index outside 0..{len(self.labels) - 1}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def k(self) -> int:
        return len(self.labels)

    def decoded(self) -> list[str]:
        return [self.labels[v] for v in self.values]


def frequencies(col: CategoricalColumn) -> FrequencyTable:
    """Count records per category.

    Zero counts are kept; a column with fewer than two labels or no records
    fails FrequencyTable validation.
    """
    counts = np.bincount(col.values, minlength=col.k)
    return FrequencyTable(col.labels, tuple(int(c) for c in counts))


def count_vector(col: CategoricalColumn) -> np.ndarray:
    return np.bincount(col.values, minlength=col.k)


def _cumulative_rows(p: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p, axis=1)
    # pin each row to exactly 1 from its last non-zero column on, so rounding
    # in the cumulative sum can never push a draw into a zero-probability column
    for i, row in enumerate(p):
        last = np.flatnonzero(row)[-1]
        cum[i, last:] = 1.0
    return cum


def _sample(values: np.ndarray, cum: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # u in (0, 1] so leading zero-probability columns are never selected
    u = 1.0 - rng.random(len(values))
    # inverse CDF: index of the first cumulative entry >= u
    return (cum[values] < u[:, None]).sum(axis=1)


def perturb(
    col: CategoricalColumn, m: TransitionMatrix, seed: int, partitions: int = 1
) -> CategoricalColumn:
    """Resample every record from its row of ``m``.

    The result is a deterministic function of ``(col, m, seed, partitions)``.
    With ``partitions > 1`` the column is split into that many contiguous
    chunks, chunk ``i`` drawing from ``mix(seed, i)``; the default single
    partition draws from ``seed`` directly.
    """
    if m.k != col.k:
        raise ValidationError(f"matrix is {m.k}x{m.k} but column has {col.k} labels")
    if partitions < 1:
        raise ValueError("partitions must be >= 1")
    cum = _cumulative_rows(m.p)
    if partitions == 1:
        out = _sample(col.values, cum, make_rng(seed))
    else:
        chunks = np.array_split(col.values, partitions)
        out = np.concatenate(
            [_sample(c, cum, make_rng(mix(seed, i))) for i, c in enumerate(chunks)]
        )
    return CategoricalColumn(out, col.labels)
