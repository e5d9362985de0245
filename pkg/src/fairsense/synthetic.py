"""Seeded synthetic benchmark with controlled overlap between the two groups.

The suite holds 40 datasets of 1000 points each, evenly split between the
groups. Feature 1 (stored as ``y_pred``) is N(0, 1) for the unprivileged
group and N(mu, 1) for the privileged group, with mu stepping by 0.1 from
0.0 to 3.9 across the suite; Feature 2 (stored as ``y_true``) is N(0, 1) for
everyone. Increasing mu shrinks the overlap between the groups.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import Dataset, PredictionRecord

SUITE_SIZE = 40
POINTS_PER_GROUP = 500


class MeanInterval(Enum):
    I0 = "0-0.9"
    I1 = "1-1.9"
    I2 = "2-2.9"
    I3 = "3-3.9"

    @property
    def dataset_indices(self) -> range:
        start = 10 * list(MeanInterval).index(self)
        return range(start, start + 10)


@dataclass(frozen=True)
class SyntheticSpec:
    dataset_index: int
    seed: int = 0
    n_per_group: int = POINTS_PER_GROUP

    def __post_init__(self):
        if not 0 <= self.dataset_index < SUITE_SIZE:
            raise ValueError(f"dataset_index must be in [0, {SUITE_SIZE}), got {self.dataset_index}")
        if self.n_per_group < 1:
            raise ValueError("n_per_group must be positive")

    @property
    def privileged_mean(self) -> float:
        # index/10 keeps the means exactly on the 0.1 grid
        return self.dataset_index / 10

    @property
    def name(self) -> str:
        return f"synth_{self.dataset_index:02d}_{self.privileged_mean:.1f}"

    @property
    def filename(self) -> str:
        return f"{self.name}.csv"


def interval_of(spec: SyntheticSpec) -> MeanInterval:
    return list(MeanInterval)[spec.dataset_index // 10]


def generate_dataset(spec: SyntheticSpec) -> Dataset:
    """Draw one suite member; deterministic for a given spec."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_per_group
    mu = spec.privileged_mean
    f1_unpriv = rng.normal(0.0, 1.0, size=n)
    f1_priv = rng.normal(mu, 1.0, size=n)
    f2_unpriv = rng.normal(0.0, 1.0, size=n)
    f2_priv = rng.normal(0.0, 1.0, size=n)
    records = []
    for pred, true in zip(f1_unpriv, f2_unpriv):
        records.append(PredictionRecord(y_true=float(true), y_pred=float(pred), group=0))
    for pred, true in zip(f1_priv, f2_priv):
        records.append(PredictionRecord(y_true=float(true), y_pred=float(pred), group=1))
    return Dataset(records=tuple(records), name=spec.name)


def generate_suite(base_seed: int) -> list[tuple[SyntheticSpec, Dataset]]:
    """All 40 members; member i uses seed ``base_seed + i``."""
    out = []
    for i in range(SUITE_SIZE):
        spec = SyntheticSpec(dataset_index=i, seed=base_seed + i)
        out.append((spec, generate_dataset(spec)))
    return out
