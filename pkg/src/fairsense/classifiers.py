"""Probabilistic binary classifiers used as density-ratio cores.

Five interchangeable cores: plain logistic regression, its L2- (ridge) and
L1- (lasso) penalized variants, and kernel logistic regression with Gaussian
or polynomial kernels. All fits are deterministic full-batch optimizations
from a zero initialization, so identical data and config reproduce identical
models.

Loss convention: mean negative log-likelihood plus ``lam * penalty(weights)``
with the bias always unpenalized, where ``penalty`` is ``0.5 * ||w||^2`` for
L2 and ``||w||_1`` for L1. Kernel models penalize ``0.5 * lam * a' K a`` over
the dual coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import (
    DimensionMismatch,
    KernelMatrixTooLarge,
    NonFiniteInput,
    SingleClassData,
)

# Probabilities are kept strictly inside (0, 1); odds stay finite downstream.
PROB_EPS = 1e-15

# Penalized fits never run fully unregularized; separable data would
# otherwise send kernel/penalized weights to infinity.
MIN_PENALIZED_LAMBDA = 1e-6

KERNEL_MATRIX_GUARD = 20_000


class ClassifierKind(Enum):
    LOGISTIC = "logistic"
    RIDGE_LOGISTIC = "ridge"
    LASSO_LOGISTIC = "lasso"
    KLR_GAUSSIAN = "klr_gaussian"
    KLR_POLYNOMIAL = "klr_polynomial"


class Penalty(Enum):
    NONE = "none"
    L1 = "l1"
    L2 = "l2"


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 2000
    tolerance: float = 1e-8
    lam: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


@dataclass(frozen=True)
class GaussianKernel:
    """Gaussian kernel exp(-||x - z||^2 / (2 sigma^2)); sigma=None means
    "resolve via the median heuristic at fit time"."""

    sigma: float | None = None

    def __post_init__(self):
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("Gaussian bandwidth must be positive")


@dataclass(frozen=True)
class PolynomialKernel:
    """Polynomial kernel (x . z + offset) ** degree."""

    degree: int = 3
    offset: float = 1.0

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")


Kernel = Union[GaussianKernel, PolynomialKernel]


@dataclass(frozen=True)
class LinearLogisticModel:
    weights: np.ndarray
    bias: float
    penalty: Penalty
    lam: float
    converged: bool = True

    def __post_init__(self):
        self.weights.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class KernelLogisticModel:
    dual_coefficients: np.ndarray
    bias: float
    kernel: Kernel
    lam: float
    support_points: np.ndarray
    feature_means: np.ndarray
    feature_scales: np.ndarray
    converged: bool = True

    def __post_init__(self):
        for arr in (self.dual_coefficients, self.support_points,
                    self.feature_means, self.feature_scales):
            arr.setflags(write=False)
        if len(self.dual_coefficients) != len(self.support_points):
            raise ValueError("one dual coefficient per support point required")

    @property
    def dim(self) -> int:
        return self.support_points.shape[1]


def as_design(X) -> np.ndarray:
    """Coerce input to an (n, d) design matrix; 1-D input becomes a column."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a vector or matrix, got ndim={X.ndim}")
    return X


def sigmoid(scores: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    scores = np.asarray(scores, dtype=float)
    out = np.empty_like(scores)
    pos = scores >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-scores[pos]))
    ez = np.exp(scores[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _clip_probability(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def _check_training_inputs(X: np.ndarray, y: np.ndarray) -> None:
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise NonFiniteInput("training data contains non-finite values")
    if X.ndim != 2 or X.shape[1] not in (1, 2):
        raise DimensionMismatch(f"expected n x d design with d in {{1,2}}, got {X.shape}")
    if len(X) != len(y):
        raise DimensionMismatch("X and y lengths differ")
    if len(X) < 2:
        raise SingleClassData("need at least two training points")
    labels = set(np.unique(y).tolist())
    if not labels <= {0.0, 1.0}:
        raise ValueError(f"labels must be binary 0/1, got {sorted(labels)}")
    if len(labels) < 2:
        raise SingleClassData("training labels contain a single class")


def kernel_eval(kernel: Kernel, x, z) -> float:
    """Evaluate the kernel at a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if x.shape != z.shape:
        raise DimensionMismatch(f"kernel arguments differ in shape: {x.shape} vs {z.shape}")
    if isinstance(kernel, GaussianKernel):
        if kernel.sigma is None:
            raise ValueError("Gaussian kernel bandwidth is unresolved")
        d2 = float(np.sum((x - z) ** 2))
        return float(np.exp(-d2 / (2.0 * kernel.sigma**2)))
    return float((np.dot(x, z) + kernel.offset) ** kernel.degree)


def kernel_matrix(kernel: Kernel, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = as_design(A)
    B = as_design(B)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch("kernel inputs differ in feature dimension")
    if isinstance(kernel, GaussianKernel):
        if kernel.sigma is None:
            raise ValueError("Gaussian kernel bandwidth is unresolved")
        d2 = cdist(A, B, "sqeuclidean")
        return np.exp(-d2 / (2.0 * kernel.sigma**2))
    return (A @ B.T + kernel.offset) ** kernel.degree


def median_heuristic_bandwidth(X, seed: int = 0, max_points: int = 1000) -> float:
    """Median pairwise Euclidean distance over distinct pairs.

    Subsamples ``max_points`` rows (seeded) when the input is larger; falls
    back to 1.0 when all pairwise distances are zero.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) < 2:
        raise ValueError("median heuristic needs at least two points")
    if len(X) > max_points:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(X), size=max_points, replace=False))
        X = X[idx]
    med = float(np.median(pdist(X)))
    return med if med > 0 else 1.0


# ---------------------------------------------------------------------------
# linear logistic regression
# ---------------------------------------------------------------------------

def linear_loss_gradient(weights, bias, X, y, penalty: Penalty, lam: float):
    """Regularized loss with its analytic gradient, for solver and tests.

    For L1 the returned gradient uses the sign subgradient, which equals the
    true gradient away from zero coordinates.
    """
    weights = np.asarray(weights, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    s = X @ weights + bias
    loss = float(np.mean(y * np.logaddexp(0.0, -s) + (1.0 - y) * np.logaddexp(0.0, s)))
    p = sigmoid(s)
    resid = (p - y) / n
    grad_w = X.T @ resid
    grad_b = float(np.sum(resid))
    if penalty is Penalty.L2:
        loss += 0.5 * lam * float(weights @ weights)
        grad_w = grad_w + lam * weights
    elif penalty is Penalty.L1:
        loss += lam * float(np.sum(np.abs(weights)))
        grad_w = grad_w + lam * np.sign(weights)
    return loss, grad_w, grad_b


def _newton_logistic(X, y, lam: float, cfg: TrainConfig):
    """Full-batch Newton with backtracking for the smooth penalties."""
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    penalty = Penalty.NONE if lam == 0 else Penalty.L2
    loss, gw, gb = linear_loss_gradient(w, b, X, y, penalty, lam)
    converged = False
    stagnant = 0
    for _ in range(cfg.max_iterations):
        g = np.concatenate([gw, [gb]])
        if np.linalg.norm(g) <= cfg.tolerance:
            converged = True
            break
        s = X @ w + b
        p = sigmoid(s)
        r = p * (1.0 - p) / n
        H = np.empty((d + 1, d + 1))
        H[:d, :d] = X.T @ (r[:, None] * X) + lam * np.eye(d)
        H[:d, d] = X.T @ r
        H[d, :d] = H[:d, d]
        H[d, d] = float(np.sum(r))
        try:
            step = np.linalg.solve(H + 1e-12 * np.eye(d + 1), -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        if not np.all(np.isfinite(step)) or g @ step >= 0:
            step = -g  # steepest-descent fallback
        directional = float(g @ step)
        if directional >= -1e-15 * (1.0 + abs(loss)):
            break  # at the numerical optimum; nothing left to gain
        t = 1.0
        improved = False
        for _ in range(60):
            new_loss, new_gw, new_gb = linear_loss_gradient(
                w + t * step[:d], b + t * step[d], X, y, penalty, lam
            )
            if new_loss <= loss + 1e-4 * t * directional:
                improved = True
                break
            t *= 0.5
        if not improved:
            break  # line search stalled at float precision
        w = w + t * step[:d]
        b = b + t * step[d]
        stagnant = stagnant + 1 if loss - new_loss <= 1e-13 * (1.0 + abs(loss)) else 0
        loss, gw, gb = new_loss, new_gw, new_gb
        if stagnant >= 2:
            break  # objective no longer moves at working precision
    return w, b, converged


def _soft_threshold(v: np.ndarray, k: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - k, 0.0)


def _fista_l1_logistic(X, y, lam: float, cfg: TrainConfig):
    """Proximal gradient (FISTA with adaptive restart) for the L1 penalty."""
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    lipschitz = float(np.linalg.eigvalsh(Xa.T @ Xa).max()) / (4.0 * n)
    step = 1.0 / max(lipschitz, 1e-12)

    def smooth_grad(w, b):
        p = sigmoid(X @ w + b)
        r = (p - y) / n
        return X.T @ r, float(np.sum(r))

    w = np.zeros(d)
    b = 0.0
    zw, zb = w.copy(), b
    t = 1.0
    converged = False
    for _ in range(cfg.max_iterations):
        gw, gb = smooth_grad(zw, zb)
        w_new = _soft_threshold(zw - step * gw, step * lam)
        b_new = zb - step * gb
        # prox-gradient residual at the new point
        gw2, gb2 = smooth_grad(w_new, b_new)
        w_chk = _soft_threshold(w_new - step * gw2, step * lam)
        b_chk = b_new - step * gb2
        resid = np.linalg.norm(np.concatenate([w_new - w_chk, [b_new - b_chk]])) / step
        # restart the momentum when it points uphill
        if np.dot(np.concatenate([zw - w_new, [zb - b_new]]),
                  np.concatenate([w_new - w, [b_new - b]])) > 0:
            t = 1.0
            zw, zb = w_new.copy(), b_new
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_new
            zw = w_new + beta * (w_new - w)
            zb = b_new + beta * (b_new - b)
            t = t_new
        w, b = w_new, b_new
        if resid <= cfg.tolerance:
            converged = True
            break
    return w, b, converged


def fit_linear_logistic(X, y, penalty: Penalty, cfg: TrainConfig) -> LinearLogisticModel:
    """Fit (possibly penalized) logistic regression on raw inputs.

    ``penalty=NONE`` runs the true unpenalized maximum-likelihood problem;
    penalized fits floor the strength at ``MIN_PENALIZED_LAMBDA``.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    _check_training_inputs(X, y)
    if penalty is Penalty.NONE:
        lam = 0.0
        w, b, converged = _newton_logistic(X, y, lam, cfg)
    elif penalty is Penalty.L2:
        lam = max(cfg.lam, MIN_PENALIZED_LAMBDA)
        w, b, converged = _newton_logistic(X, y, lam, cfg)
    else:
        lam = max(cfg.lam, MIN_PENALIZED_LAMBDA)
        w, b, converged = _fista_l1_logistic(X, y, lam, cfg)
    return LinearLogisticModel(
        weights=w, bias=float(b), penalty=penalty, lam=lam, converged=converged
    )


# ---------------------------------------------------------------------------
# kernel logistic regression
# ---------------------------------------------------------------------------

def kernel_loss_gradient(alpha, bias, K, y, lam: float):
    """Dual-space regularized loss and gradient for kernel logistic models."""
    alpha = np.asarray(alpha, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    f = K @ alpha + bias
    loss = float(np.mean(y * np.logaddexp(0.0, -f) + (1.0 - y) * np.logaddexp(0.0, f)))
    loss += 0.5 * lam * float(alpha @ (K @ alpha))
    p = sigmoid(f)
    r = (p - y) / n
    grad_a = K @ (r + lam * alpha)
    grad_b = float(np.sum(r))
    return loss, grad_a, grad_b


def _standardize(X: np.ndarray):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mu) / sd, mu, sd


def fit_kernel_logistic(X, y, kernel: Kernel, cfg: TrainConfig) -> KernelLogisticModel:
    """Kernel logistic regression with score f(x) = sum_i a_i k(x_i, x) + b.

    Inputs are standardized per feature before the kernel is applied (the
    polynomial kernel is scale-sensitive); a Gaussian kernel with unresolved
    bandwidth gets the median heuristic on the standardized inputs. Newton
    steps solve the reduced (n+1) system obtained by factoring one kernel
    matrix out of the dual-block normal equations.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    _check_training_inputs(X, y)
    n = len(y)
    if n > KERNEL_MATRIX_GUARD:
        raise KernelMatrixTooLarge(f"n={n} exceeds the {KERNEL_MATRIX_GUARD} point guard")

    Xs, mu, sd = _standardize(X)
    if isinstance(kernel, GaussianKernel) and kernel.sigma is None:
        kernel = GaussianKernel(sigma=median_heuristic_bandwidth(Xs, seed=cfg.seed))
    lam = max(cfg.lam, MIN_PENALIZED_LAMBDA)
    K = kernel_matrix(kernel, Xs, Xs)

    alpha = np.zeros(n)
    b = 0.0
    loss, ga, gb = kernel_loss_gradient(alpha, b, K, y, lam)
    converged = False
    stagnant = 0
    for _ in range(cfg.max_iterations):
        g = np.concatenate([ga, [gb]])
        if np.linalg.norm(g) <= cfg.tolerance:
            converged = True
            break
        f = K @ alpha + b
        p = sigmoid(f)
        s = p * (1.0 - p) / n
        # Reduced Newton system: K times its first block row reproduces the
        # full dual Hessian system, so solutions here are exact Newton steps.
        A = np.empty((n + 1, n + 1))
        A[:n, :n] = s[:, None] * K
        A[:n, :n][np.diag_indices(n)] += lam
        A[:n, n] = s
        A[n, :n] = s @ K
        A[n, n] = float(np.sum(s))
        rhs = -np.concatenate([(p - y) / n + lam * alpha, [gb]])
        try:
            step = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(A, rhs, rcond=None)[0]
        if not np.all(np.isfinite(step)) or g @ step >= 0:
            step = -g
        directional = float(g @ step)
        if directional >= -1e-15 * (1.0 + abs(loss)):
            break  # at the numerical optimum; gradient noise floor reached
        t = 1.0
        improved = False
        for _ in range(60):
            cand = kernel_loss_gradient(alpha + t * step[:n], b + t * step[n], K, y, lam)
            if cand[0] <= loss + 1e-4 * t * directional:
                improved = True
                break
            t *= 0.5
        if not improved:
            break  # line search stalled at float precision
        alpha = alpha + t * step[:n]
        b = b + t * step[n]
        stagnant = stagnant + 1 if loss - cand[0] <= 1e-13 * (1.0 + abs(loss)) else 0
        loss, ga, gb = cand
        if stagnant >= 2:
            break  # objective no longer moves at working precision
    return KernelLogisticModel(
        dual_coefficients=alpha,
        bias=float(b),
        kernel=kernel,
        lam=lam,
        support_points=X.copy(),
        feature_means=mu,
        feature_scales=sd,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------

def predict_proba_batch(model, X) -> np.ndarray:
    """P(A=1 | x) for each row of X, strictly inside (0, 1)."""
    X = as_design(X)
    if isinstance(model, LinearLogisticModel):
        if X.shape[1] != model.dim:
            raise DimensionMismatch(
                f"model expects {model.dim} feature(s), got {X.shape[1]}"
            )
        scores = X @ model.weights + model.bias
    elif isinstance(model, KernelLogisticModel):
        if X.shape[1] != model.dim:
            raise DimensionMismatch(
                f"model expects {model.dim} feature(s), got {X.shape[1]}"
            )
        Xs = (X - model.feature_means) / model.feature_scales
        Ss = (model.support_points - model.feature_means) / model.feature_scales
        K = kernel_matrix(model.kernel, Xs, Ss)
        scores = K @ model.dual_coefficients + model.bias
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return _clip_probability(sigmoid(scores))


def predict_proba(model, x) -> float:
    """Single-point probability P(A=1 | x)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(predict_proba_batch(model, x[None, :])[0])
