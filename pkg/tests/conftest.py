import numpy as np
import pytest

from fairsense.classifiers import TrainConfig
from fairsense.data import Dataset, PredictionRecord
from fairsense.synthetic import SyntheticSpec, generate_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def four_point_dataset():
    """Separable toy set: predictions -2,-1 are unprivileged, 1,2 privileged."""
    return Dataset(
        records=(
            PredictionRecord(y_true=0.1, y_pred=-2.0, group=0),
            PredictionRecord(y_true=0.2, y_pred=-1.0, group=0),
            PredictionRecord(y_true=0.3, y_pred=1.0, group=1),
            PredictionRecord(y_true=0.4, y_pred=2.0, group=1),
        ),
        name="toy4",
    )


@pytest.fixture
def balanced_random_dataset(rng):
    """Moderate-overlap two-group sample used by the metric invariants."""
    n = 150
    pred = np.concatenate([rng.normal(0, 1, n), rng.normal(0.8, 1, n)])
    true = rng.normal(0, 1, 2 * n)
    group = np.concatenate([np.zeros(n, int), np.ones(n, int)])
    return Dataset.from_arrays(true, pred, group, name="blob")


@pytest.fixture
def synth0():
    return generate_dataset(SyntheticSpec(dataset_index=0, seed=900))


@pytest.fixture
def fast_train():
    return TrainConfig(max_iterations=500, tolerance=1e-8, lam=1e-3, seed=0)
