"""A small built-in regressor zoo for producing prediction files end-to-end.

Six deliberately simple models with diverse prediction distributions: OLS,
ridge, lasso, k-nearest neighbors, a single-split decision stump, and the
train-mean baseline. The zoo exists so the measurement pipeline can be run
without external predictions; it makes no claim to predictive quality.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset, PredictionRecord
from .errors import ParseError, TooFewRows


@dataclass(frozen=True)
class OrdinaryLeastSquares:
    label: str = "ols"


@dataclass(frozen=True)
class RidgeRegression:
    lam: float = 1.0
    label: str = "ridge_reg"

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("ridge strength must be positive")


@dataclass(frozen=True)
class LassoRegression:
    lam: float = 0.1
    label: str = "lasso_reg"

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lasso strength must be positive")


@dataclass(frozen=True)
class KNearestNeighbors:
    k: int = 5
    label: str = "knn"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class DecisionStump:
    label: str = "stump"


@dataclass(frozen=True)
class MeanPredictor:
    label: str = "mean"


RegressorKind = Union[
    OrdinaryLeastSquares, RidgeRegression, LassoRegression,
    KNearestNeighbors, DecisionStump, MeanPredictor,
]

DEFAULT_ZOO: tuple[RegressorKind, ...] = (
    OrdinaryLeastSquares(),
    RidgeRegression(),
    LassoRegression(),
    KNearestNeighbors(),
    DecisionStump(),
    MeanPredictor(),
)


@dataclass(frozen=True)
class FeatureTable:
    """Numeric features with a regression target and binary group column."""

    features: np.ndarray
    target: np.ndarray
    group: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "table"

    def __post_init__(self):
        self.features.setflags(write=False)
        self.target.setflags(write=False)
        self.group.setflags(write=False)

    def __len__(self) -> int:
        return len(self.target)


def read_feature_table(path, target_col: str, group_col: str) -> FeatureTable:
    """Load a CSV feature table; every non-target, non-group column is a feature."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    header = [c.strip() for c in lines[0].split(",")]
    for col in (target_col, group_col):
        if col not in header:
            raise ParseError(f"column {col!r} not found in header {header}", line=1)
    t_idx = header.index(target_col)
    g_idx = header.index(group_col)
    f_idx = [i for i in range(len(header)) if i not in (t_idx, g_idx)]
    if not f_idx:
        raise ParseError("no feature columns besides target and group", line=1)
    rows, targets, groups = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            raise ParseError("blank line", line=lineno)
        parts = raw.split(",")
        if len(parts) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, got {len(parts)}", line=lineno
            )
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-numeric field in row {raw!r}", line=lineno) from None
        g = values[g_idx]
        if g not in (0.0, 1.0):
            raise ParseError(f"group label {parts[g_idx]!r} not in {{0,1}}", line=lineno)
        rows.append([values[i] for i in f_idx])
        targets.append(values[t_idx])
        groups.append(int(g))
    return FeatureTable(
        features=np.array(rows, dtype=float),
        target=np.array(targets, dtype=float),
        group=np.array(groups, dtype=int),
        feature_names=tuple(header[i] for i in f_idx),
        name=path.stem,
    )


def train_test_split(table: FeatureTable, fraction: float, seed: int
                     ) -> tuple[FeatureTable, FeatureTable]:
    """Seeded shuffle then split; the group column rides along untouched."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly in (0, 1)")
    n = len(table)
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = min(max(int(round(fraction * n)), 1), n - 1)
    tr, te = perm[:n_train], perm[n_train:]

    def take(idx, suffix):
        return FeatureTable(
            features=table.features[idx].copy(),
            target=table.target[idx].copy(),
            group=table.group[idx].copy(),
            feature_names=table.feature_names,
            name=f"{table.name}_{suffix}",
        )

    return take(tr, "train"), take(te, "test")


def _ols_coefficients(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    Xa = np.hstack([X, np.ones((len(X), 1))])
    gram = Xa.T @ Xa
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        warnings.warn("rank-deficient design; falling back to ridge with lam=1e-6")
        gram = gram + 1e-6 * np.eye(gram.shape[0])
        return np.linalg.solve(gram, Xa.T @ y)
    return np.linalg.solve(gram, Xa.T @ y)


def _ridge_coefficients(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    Xa = np.hstack([X, np.ones((len(X), 1))])
    penalty = lam * np.eye(Xa.shape[1])
    penalty[-1, -1] = 0.0  # intercept unpenalized
    return np.linalg.solve(Xa.T @ Xa + penalty, Xa.T @ y)


def _lasso_coordinate_descent(X: np.ndarray, y: np.ndarray, lam: float,
                              sweeps: int = 200, tol: float = 1e-10) -> np.ndarray:
    """(1/2n)||y - Xb - c||^2 + lam ||b||_1 on standardized columns."""
    n, d = X.shape
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    Xs = (X - mu) / sd
    y_mean = y.mean()
    yc = y - y_mean
    beta = np.zeros(d)
    col_sq = np.sum(Xs * Xs, axis=0) / n
    resid = yc.copy()
    for _ in range(sweeps):
        max_delta = 0.0
        for j in range(d):
            if col_sq[j] == 0:
                continue
            rho = beta[j] * col_sq[j] + Xs[:, j] @ resid / n
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            delta = new - beta[j]
            if delta != 0.0:
                resid -= delta * Xs[:, j]
                beta[j] = new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    # map back to the raw feature scale
    coef = beta / sd
    intercept = y_mean - coef @ mu
    return np.concatenate([coef, [intercept]])


def _stump_predictor(X: np.ndarray, y: np.ndarray):
    """Best single-feature threshold split by squared error."""
    n, d = X.shape
    best = (np.inf, 0, 0.0, float(y.mean()), float(y.mean()))
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total, total_sq = csum[-1], csq[-1]
        for i in range(n - 1):
            if xs[i + 1] == xs[i]:
                continue
            nl = i + 1
            nr = n - nl
            sse = (csq[i] - csum[i] ** 2 / nl) + (
                (total_sq - csq[i]) - (total - csum[i]) ** 2 / nr
            )
            if sse < best[0] - 1e-15:
                thr = 0.5 * (xs[i] + xs[i + 1])
                best = (sse, j, thr, float(csum[i] / nl), float((total - csum[i]) / nr))
    _, j, thr, left, right = best

    def predict(Z):
        return np.where(Z[:, j] <= thr, left, right)

    return predict


def fit_predict(kind: RegressorKind, train: FeatureTable, test: FeatureTable
                ) -> tuple[PredictionRecord, ...]:
    """Fit on the train table and emit one record per test row."""
    if not np.all(np.isfinite(train.features)) or not np.all(np.isfinite(train.target)):
        raise ValueError("training table contains non-finite values")
    X, y = train.features, train.target
    Z = test.features
    if isinstance(kind, MeanPredictor):
        preds = np.full(len(test), float(y.mean()))
    elif isinstance(kind, OrdinaryLeastSquares):
        coef = _ols_coefficients(X, y)
        preds = np.hstack([Z, np.ones((len(Z), 1))]) @ coef
    elif isinstance(kind, RidgeRegression):
        coef = _ridge_coefficients(X, y, kind.lam)
        preds = np.hstack([Z, np.ones((len(Z), 1))]) @ coef
    elif isinstance(kind, LassoRegression):
        coef = _lasso_coordinate_descent(X, y, kind.lam)
        preds = np.hstack([Z, np.ones((len(Z), 1))]) @ coef
    elif isinstance(kind, KNearestNeighbors):
        k = min(kind.k, len(X))
        dist = cdist(Z, X)
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
        preds = y[nearest].mean(axis=1)
    elif isinstance(kind, DecisionStump):
        preds = _stump_predictor(X, y)(Z)
    else:
        raise ValueError(f"unknown regressor kind {kind!r}")
    return tuple(
        PredictionRecord(y_true=float(t), y_pred=float(p), group=int(g))
        for t, p, g in zip(test.target, preds, test.group)
    )


def zoo_dataset(kind: RegressorKind, train: FeatureTable, test: FeatureTable) -> Dataset:
    return Dataset(records=fit_predict(kind, train, test), name=f"zoo_{kind.label}")
