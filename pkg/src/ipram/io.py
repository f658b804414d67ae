"""CSV ingestion and JSON artifacts (plan, matrix, risk, report).

CSV dialect: comma separator, double-quote escaping, UTF-8, header row, LF
line endings on output. JSON floats are written with ``repr`` precision so
they round-trip exactly.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .domain import (
    BlockPlan,
    FrequencyTable,
    RiskProfile,
    SimulationReport,
    TransitionMatrix,
    ValidationError,
)
from .perturb import CategoricalColumn

PLAN_FORMAT = "ipram.plan/1"
MATRIX_FORMAT = "ipram.matrix/1"
RISK_FORMAT = "ipram.risk/1"
REPORT_FORMAT = "ipram.report/1"


class DataIOError(OSError):
    """A file could not be read or written."""


@dataclass(frozen=True)
class RunConfig:
    input: Path
    column: str
    target: str
    xi: float
    seed: int
    replicates: int = 1000
    outputs: dict[str, Path] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "input", Path(self.input))
        object.__setattr__(self, "outputs", {k: Path(v) for k, v in self.outputs.items()})
        if not 0 < self.xi < 1:
            raise ValidationError(f"xi={self.xi} outside (0, 1)")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "RunConfig":
        raw = _load_json(path)
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ValidationError(f"{path}: {exc}") from None


# --- CSV -------------------------------------------------------------------


def _read_text(path) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc


def read_categorical_csv(path, column_name: str) -> tuple[CategoricalColumn, FrequencyTable]:
    """Load one categorical column; labels are numbered in order of first appearance."""
    rows = csv.reader(_io.StringIO(_read_text(path)))
    try:
        header = next(rows)
    except StopIteration:
        raise ValidationError(f"{path}: file is empty, expected a header row") from None
    if column_name not in header:
        raise ValidationError(f"{path}: no column named {column_name!r} (have {header})")
    col = header.index(column_name)
    index: dict[str, int] = {}
    values = []
    for rownum, row in enumerate(rows, start=2):
        cell = row[col] if col < len(row) else ""
        if cell == "":
            raise ValidationError(f"{path}: empty {column_name!r} cell at row {rownum}")
        values.append(index.setdefault(cell, len(index)))
    column = CategoricalColumn(np.array(values, dtype=np.int64), tuple(index))
    counts = np.bincount(column.values, minlength=column.k)
    return column, FrequencyTable(column.labels, tuple(int(c) for c in counts))


def align_column(col: CategoricalColumn, labels) -> CategoricalColumn:
    """Re-index ``col`` onto ``labels`` (e.g. the ordering stored in a plan)."""
    labels = tuple(labels)
    pos = {lab: i for i, lab in enumerate(labels)}
    missing = [lab for lab in col.labels if lab not in pos]
    if missing:
        raise ValidationError(f"labels {missing} are not in the plan's frequency table")
    remap = np.array([pos[lab] for lab in col.labels], dtype=np.int64)
    return CategoricalColumn(remap[col.values], labels)


def _split_raw_records(text: str) -> list[list[str]]:
    """Split CSV text into records of raw (still quoted) field strings.

    Record terminators (LF or CRLF) are dropped; everything else is kept
    verbatim so untouched fields can be written back byte for byte.
    """
    records: list[list[str]] = []
    fields: list[str] = []
    start = 0
    in_quotes = False
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    i += 1
                else:
                    in_quotes = False
        elif ch == '"':
            in_quotes = True
        elif ch == ",":
            fields.append(text[start:i])
            start = i + 1
        elif ch in "\r\n":
            fields.append(text[start:i])
            records.append(fields)
            fields = []
            if ch == "\r" and i + 1 < n and text[i + 1] == "\n":
                i += 1
            start = i + 1
        i += 1
    if start < n or fields:
        fields.append(text[start:])
        records.append(fields)
    return records


def _unquote(raw: str) -> str:
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        return raw[1:-1].replace('""', '"')
    return raw


def _quote(value: str) -> str:
    buf = _io.StringIO()
    # the writer only quotes embedded CR/LF when they occur in its terminator
    csv.writer(buf, lineterminator="\r\n").writerow([value])
    return buf.getvalue()[:-2]


def write_perturbed_csv(original_path, column_name: str, new_values, path) -> None:
    """Write ``original_path`` to ``path`` with one column's values replaced.

    Fields of other columns, and unchanged fields of the target column, are
    copied verbatim. Line endings become LF.
    """
    text = _read_text(original_path)
    records = _split_raw_records(text)
    if not records:
        raise ValidationError(f"{original_path}: file is empty")
    header = [_unquote(f) for f in records[0]]
    if column_name not in header:
        raise ValidationError(f"{original_path}: no column named {column_name!r}")
    col = header.index(column_name)
    new_values = list(new_values)
    body = records[1:]
    if len(new_values) != len(body):
        raise ValidationError(
            f"{len(new_values)} new values for {len(body)} data rows in {original_path}"
        )
    out = [",".join(records[0])]
    for fields, value in zip(body, new_values):
        value = str(value)
        if _unquote(fields[col]) != value:
            fields = fields.copy()
            fields[col] = _quote(value)
        out.append(",".join(fields))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


# --- JSON --------------------------------------------------------------------


def _load_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def dump_json(obj: Any, path, pretty: bool = False) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2 if pretty else None)
            fh.write("\n")
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


def _require(d: dict, fmt: str, keys) -> None:
    if not isinstance(d, dict) or d.get("format") != fmt:
        raise ValidationError(f"expected a {fmt!r} document")
    missing = [k for k in keys if k not in d]
    if missing:
        raise ValidationError(f"{fmt} document is missing {missing}")


def plan_to_dict(freq: FrequencyTable, plan: BlockPlan) -> dict:
    return {
        "format": PLAN_FORMAT,
        "frequency_table": {"labels": list(freq.labels), "counts": list(freq.counts), "n": freq.n},
        "target_index": plan.target_index,
        "target_label": freq.labels[plan.target_index],
        "xi_requested": plan.xi_requested,
        "xi_achieved": plan.xi_achieved,
        "relaxed": plan.relaxed,
        "noop": plan.is_noop,
        "theta": plan.theta,
        "k1": plan.k1,
        "blocks": [list(b) for b in plan.blocks],
        "block_labels": [[freq.labels[i] for i in b] for b in plan.blocks],
    }


def plan_from_dict(d: dict) -> tuple[FrequencyTable, BlockPlan]:
    keys = ("frequency_table", "target_index", "xi_requested", "xi_achieved", "theta", "k1", "blocks")
    _require(d, PLAN_FORMAT, keys)
    try:
        ft = d["frequency_table"]
        freq = FrequencyTable(tuple(ft["labels"]), tuple(ft["counts"]))
        plan = BlockPlan(
            target_index=int(d["target_index"]),
            xi_requested=float(d["xi_requested"]),
            xi_achieved=float(d["xi_achieved"]),
            theta=float(d["theta"]),
            blocks=tuple(tuple(b) for b in d["blocks"]),
            k1=int(d["k1"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed plan document: {exc}") from exc
    return freq, plan


def matrix_to_dict(m: TransitionMatrix, labels) -> dict:
    return {
        "format": MATRIX_FORMAT,
        "labels": list(labels),
        "block_of": list(m.block_of),
        "p": [[float(x) for x in row] for row in m.p],
    }


def matrix_from_dict(d: dict) -> tuple[TransitionMatrix, tuple[str, ...]]:
    _require(d, MATRIX_FORMAT, ("labels", "block_of", "p"))
    return TransitionMatrix(np.array(d["p"], dtype=float), tuple(d["block_of"])), tuple(d["labels"])


def risk_to_dict(profile: RiskProfile, freq: FrequencyTable, plan: BlockPlan) -> dict:
    return {
        "format": RISK_FORMAT,
        "target_label": freq.labels[plan.target_index],
        "theta": plan.theta,
        "xi_target": profile.xi_target,
        "psi_bound": profile.psi_bound,
        "max_risk": profile.max_risk,
        "argmax_a": profile.argmax_a,
        "target_dominates": profile.target_dominates,
        "certified": profile.certified,
        "r1_by_a": {str(a): v for a, v in profile.r1_by_a.items()},
    }


def risk_from_dict(d: dict) -> RiskProfile:
    keys = ("r1_by_a", "psi_bound", "max_risk", "xi_target")
    _require(d, RISK_FORMAT, keys)
    return RiskProfile(
        r1_by_a={int(a): v for a, v in d["r1_by_a"].items()},
        psi_bound=d["psi_bound"],
        max_risk=d["max_risk"],
        xi_target=d["xi_target"],
        argmax_a=d.get("argmax_a", 1),
        target_dominates=d.get("target_dominates", True),
        certified=d.get("certified", False),
    )


def report_to_dict(report: SimulationReport, labels) -> dict:
    d = asdict(report)
    d["mse_per_category"] = list(report.mse_per_category)
    d["mean_counts"] = list(report.mean_counts)
    d["singleton_categories"] = list(report.singleton_categories)
    return {"format": REPORT_FORMAT, "labels": list(labels), **d}


def report_from_dict(d: dict) -> SimulationReport:
    _require(d, REPORT_FORMAT, ("replicates", "master_seed", "mse_per_category", "avg_correct_match", "rng_name"))
    fields = {k: v for k, v in d.items() if k not in ("format", "labels")}
    for k in ("mse_per_category", "mean_counts", "singleton_categories"):
        if k in fields:
            fields[k] = tuple(fields[k])
    return SimulationReport(**fields)


def load_plan(path) -> tuple[FrequencyTable, BlockPlan]:
    return plan_from_dict(_load_json(path))


def load_matrix(path):
    return matrix_from_dict(_load_json(path))


def load_risk(path) -> RiskProfile:
    return risk_from_dict(_load_json(path))


def load_report(path) -> SimulationReport:
    return report_from_dict(_load_json(path))
