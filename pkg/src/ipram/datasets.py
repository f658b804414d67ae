"""The eight-category worked example: n = 2000 records, one rare category of size 2."""

from __future__ import annotations

import numpy as np

from .domain import FrequencyTable
from .perturb import CategoricalColumn, make_rng

LABELS = tuple(str(i) for i in range(1, 9))
COUNTS = (2, 205, 431, 106, 230, 221, 611, 194)
PROPORTIONS = (0.001, 0.1, 0.2, 0.05, 0.12, 0.13, 0.301, 0.098)
TARGET = 0
XI = 0.1
# 0-based position of the protected unit (record 780 counting from 1)
TARGET_RECORD = 779
THETA = 1.656854

# released matrix rounded to 3 decimals, as printed alongside the example
PRINTED_MATRIX = (
    (0.172, 0.166, 0, 0.166, 0.166, 0.166, 0, 0.166),
    (0.002, 0.992, 0, 0.002, 0.002, 0.002, 0, 0.002),
    (0, 0, 1, 0, 0, 0, 0, 0),
    (0.003, 0.003, 0, 0.984, 0.003, 0.003, 0, 0.003),
    (0.001, 0.001, 0, 0.001, 0.993, 0.001, 0, 0.001),
    (0.001, 0.001, 0, 0.001, 0.001, 0.993, 0, 0.001),
    (0, 0, 0, 0, 0, 0, 1, 0),
    (0.002, 0.002, 0, 0.002, 0.002, 0.002, 0, 0.991),
)
PRINTED_MSE = (4.9350e-07, 7.6125e-07, 0.0, 7.4300e-07, 8.8550e-07, 7.8375e-07, 0.0, 8.5550e-07)
PRINTED_AVG_CORRECT_MATCH = 0.07639286


def frequency_table() -> FrequencyTable:
    return FrequencyTable(LABELS, COUNTS)


def column(seed: int = 2000) -> CategoricalColumn:
    """A shuffled record-level column with exactly ``COUNTS``.

    One rare-category record is placed at ``TARGET_RECORD``.
    """
    values = np.repeat(np.arange(len(COUNTS)), COUNTS)
    make_rng(seed).shuffle(values)
    if values[TARGET_RECORD] != TARGET:
        j = int(np.flatnonzero(values == TARGET)[0])
        values[j], values[TARGET_RECORD] = values[TARGET_RECORD], values[j]
    return CategoricalColumn(values, LABELS)
