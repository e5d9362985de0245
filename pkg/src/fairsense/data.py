"""Prediction datasets, group bookkeeping, and the shared CSV format.

Every estimator in the package consumes the same record layout: a real-valued
target, a real-valued model prediction, and a binary group label where 1 marks
the privileged group. All containers are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ParseError, SingleClassData

PREDICTIONS_HEADER = ("y_true", "y_pred", "group")


class MetricKind(Enum):
    INDEPENDENCE = "independence"
    SEPARATION = "separation"
    SUFFICIENCY = "sufficiency"


@dataclass(frozen=True)
class PredictionRecord:
    """One evaluation point: ground truth, prediction, binary group label."""

    y_true: float
    y_pred: float
    group: int


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of prediction records."""

    records: tuple[PredictionRecord, ...]
    name: str = "dataset"

    def __len__(self) -> int:
        return len(self.records)

    def y_true(self) -> np.ndarray:
        return np.array([r.y_true for r in self.records], dtype=float)

    def y_pred(self) -> np.ndarray:
        return np.array([r.y_pred for r in self.records], dtype=float)

    def groups(self) -> np.ndarray:
        return np.array([r.group for r in self.records], dtype=int)

    @staticmethod
    def from_arrays(y_true, y_pred, group, name: str = "dataset") -> "Dataset":
        records = tuple(
            PredictionRecord(float(t), float(p), int(g))
            for t, p, g in zip(y_true, y_pred, group)
        )
        return Dataset(records=records, name=name)


@dataclass(frozen=True)
class GroupPriors:
    """Empirical group proportions P(A=1) and P(A=0) of a dataset."""

    p_a1: float
    p_a0: float

    def __post_init__(self):
        if not (0.0 < self.p_a1 < 1.0 and 0.0 < self.p_a0 < 1.0):
            raise ValueError("group priors must lie strictly in (0, 1)")
        if abs(self.p_a1 + self.p_a0 - 1.0) > 1e-12:
            raise ValueError("group priors must sum to 1")

    @property
    def ratio_a0_a1(self) -> float:
        """Prior correction factor P(A=0)/P(A=1) used by the odds rewrite."""
        return self.p_a0 / self.p_a1


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return not self.violations


def split_by_group(d: Dataset) -> tuple[list[PredictionRecord], list[PredictionRecord]]:
    """Partition records into (privileged, unprivileged), preserving order.

    Empty partitions are allowed here; downstream operations reject them.
    """
    privileged = [r for r in d.records if r.group == 1]
    unprivileged = [r for r in d.records if r.group != 1]
    return privileged, unprivileged


def estimate_priors(d: Dataset) -> GroupPriors:
    """Plug-in group priors from the evaluation dataset itself."""
    groups = d.groups()
    n = len(groups)
    n1 = int(np.sum(groups == 1))
    if n1 == 0 or n1 == n:
        raise SingleClassData(
            f"dataset {d.name!r} contains a single group; priors are undefined"
        )
    p_a1 = n1 / n
    return GroupPriors(p_a1=p_a1, p_a0=1.0 - p_a1)


def validate_dataset(d: Dataset) -> ValidationReport:
    """Report-style check for emptiness, non-finite values, and bad labels."""
    violations: list[str] = []
    if len(d.records) == 0:
        violations.append("dataset is empty")
    for i, r in enumerate(d.records):
        if not np.isfinite(r.y_true):
            violations.append(f"non-finite y_true at index {i}")
        if not np.isfinite(r.y_pred):
            violations.append(f"non-finite y_pred at index {i}")
        if r.group not in (0, 1):
            violations.append(f"group label out of {{0,1}} at index {i}")
    return ValidationReport(violations=tuple(violations))


def read_predictions_csv(path) -> Dataset:
    """Read a prediction CSV with header ``y_true,y_pred,group``.

    Rejects blank lines, malformed rows, and group labels outside {0, 1};
    errors carry the 1-based line number. Non-finite values parse but are
    caught by :func:`validate_dataset`.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].strip()
    if tuple(header.split(",")) != PREDICTIONS_HEADER:
        raise ParseError(
            f"expected header {','.join(PREDICTIONS_HEADER)!r}, got {header!r}", line=1
        )
    records = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            raise ParseError("blank line", line=lineno)
        parts = raw.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}", line=lineno)
        try:
            y_true = float(parts[0])
            y_pred = float(parts[1])
            group = float(parts[2])
        except ValueError:
            raise ParseError(f"non-numeric field in row {raw!r}", line=lineno) from None
        if group not in (0.0, 1.0):
            raise ParseError(f"group label {parts[2]!r} not in {{0,1}}", line=lineno)
        records.append(PredictionRecord(y_true, y_pred, int(group)))
    if not records:
        raise ParseError("no data rows", line=1)
    return Dataset(records=tuple(records), name=path.stem)


def write_predictions_csv(d: Dataset, path) -> None:
    path = Path(path)
    lines = [",".join(PREDICTIONS_HEADER)]
    for r in d.records:
        lines.append(f"{r.y_true!r},{r.y_pred!r},{r.group}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
