"""Direct density-ratio estimators: LSIF and alpha-relative uLSIF.

Both fit a non-negative combination of Gaussian basis functions centered on a
seeded subsample of the numerator points:

    r(x) = sum_l theta_l * exp(-||x - c_l||^2 / (2 sigma^2))

by least-squares matching against the ratio of the two sample densities. With
mixing parameter ``alpha`` the target is the relative ratio
``p_num / (alpha p_num + (1 - alpha) p_den)``; ``alpha = 0`` is the plain
ratio. uLSIF solves the unconstrained ridge system and clips negative
coefficients afterwards; LSIF keeps the hard non-negativity constraint with an
L1 penalty and is solved by accelerated projected gradient.

Hyperparameters (sigma, lambda) are selected on a grid by the closed-form
leave-one-out criterion; lower is better, ties break toward the smallest sigma
then the smallest lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import as_design, median_heuristic_bandwidth
from .errors import (
    DimensionMismatch,
    EmptySampleSet,
    NonConvergence,
    SingularSystem,
)

# Bandwidth multipliers applied to the median pairwise distance. Scales below
# 0.25 are excluded: with dense 1-D samples the leave-one-out score can favor
# a spiky memorizing fit at ~0.1x that is far from the true ratio.
SIGMA_SCALES = (0.25, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0)
LAMBDA_GRID = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0)

# Ratio evaluations are floored at this value wherever used as a divisor.
RATIO_FLOOR = 1e-12

LSIF_MAX_ITERATIONS = 10_000
LSIF_TOLERANCE = 1e-8


@dataclass(frozen=True)
class RatioCoreConfig:
    """Grid-search configuration shared by LSIF and uLSIF.

    ``sigma_grid=None`` resolves, at fit time, to ``SIGMA_SCALES`` times the
    median pairwise distance of the pooled samples.
    """

    alpha: float = 0.0
    n_centers: int = 100
    sigma_grid: tuple[float, ...] | None = None
    lambda_grid: tuple[float, ...] = LAMBDA_GRID
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.n_centers < 1:
            raise ValueError("n_centers must be >= 1")
        if self.sigma_grid is not None and (
            len(self.sigma_grid) == 0 or any(s <= 0 for s in self.sigma_grid)
        ):
            raise ValueError("sigma_grid must be non-empty with positive entries")
        if len(self.lambda_grid) == 0 or any(l <= 0 for l in self.lambda_grid):
            raise ValueError("lambda_grid must be non-empty with positive entries")


@dataclass(frozen=True)
class RatioModel:
    theta: np.ndarray
    centers: np.ndarray
    sigma: float
    lam: float
    alpha: float
    method: str  # "lsif" or "ulsif"

    def __post_init__(self):
        self.theta.setflags(write=False)
        self.centers.setflags(write=False)
        if len(self.theta) != len(self.centers):
            raise ValueError("one coefficient per center required")

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def design_matrix(points, centers, sigma: float) -> np.ndarray:
    """Gaussian basis design: entry (i, l) = exp(-||x_i - c_l||^2 / (2 sigma^2))."""
    points = as_design(points)
    centers = as_design(centers)
    if points.shape[1] != centers.shape[1]:
        raise DimensionMismatch(
            f"points have dim {points.shape[1]}, centers dim {centers.shape[1]}"
        )
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.exp(-np.maximum(d2, 0.0) / (2.0 * sigma**2))


def _prepare_samples(numerator_samples, denominator_samples):
    num = as_design(numerator_samples)
    den = as_design(denominator_samples)
    if len(num) == 0 or len(den) == 0:
        raise EmptySampleSet("both sample sets must be non-empty")
    if num.shape[1] != den.shape[1]:
        raise DimensionMismatch("sample sets differ in dimension")
    if num.shape[1] > 2:
        raise DimensionMismatch("ratio estimation supports dimension 1 or 2 only")
    return num, den


def _pick_centers(num: np.ndarray, cfg: RatioCoreConfig) -> np.ndarray:
    if len(num) <= cfg.n_centers:
        return num.copy()
    rng = np.random.default_rng(cfg.seed)
    idx = np.sort(rng.choice(len(num), size=cfg.n_centers, replace=False))
    return num[idx]


def _resolve_sigma_grid(cfg: RatioCoreConfig, num, den) -> tuple[float, ...]:
    if cfg.sigma_grid is not None:
        return tuple(sorted(cfg.sigma_grid))
    pooled = np.vstack([num, den])
    med = median_heuristic_bandwidth(pooled, seed=cfg.seed)
    return tuple(scale * med for scale in SIGMA_SCALES)


def _mixed_gram(phi_num, phi_den, alpha: float):
    h_num = phi_num.T @ phi_num / len(phi_num)
    h_den = phi_den.T @ phi_den / len(phi_den)
    return alpha * h_num + (1.0 - alpha) * h_den


def _loocv_from_design(phi_num, phi_den, H, h, lam: float) -> float:
    """Closed-form leave-one-out squared-error criterion.

    Rank-one downdates of the ridge solution give the held-out ratio values
    for each paired (numerator, denominator) deletion without refitting.
    Returns +inf when the system is numerically unusable at this grid point.
    """
    n_num = len(phi_num)
    n_den = len(phi_den)
    n = min(n_num, n_den)
    if n < 2:
        # leave-one-out undefined; fall back to the in-sample criterion
        try:
            theta = np.linalg.solve(H + lam * np.eye(len(h)), h)
        except np.linalg.LinAlgError:
            return np.inf
        return float(0.5 * theta @ H @ theta - h @ theta)
    b = len(h)
    B = H + lam * (n_den - 1) / n_den * np.eye(b)
    try:
        Binv_den = np.linalg.solve(B, phi_den[:n].T)  # b x n
        Binv_h = np.linalg.solve(B, h)
        Binv_num = np.linalg.solve(B, phi_num[:n].T)  # b x n
    except np.linalg.LinAlgError:
        return np.inf
    denom = n_den * np.ones(n) - np.sum(phi_den[:n].T * Binv_den, axis=0)
    if np.any(denom <= 0) or not np.all(np.isfinite(denom)):
        return np.inf
    B0 = Binv_h[:, None] + Binv_den * ((h @ Binv_den) / denom)[None, :]
    diag_nd = np.sum(phi_num[:n].T * Binv_den, axis=0)
    B1 = Binv_num + Binv_den * (diag_nd / denom)[None, :]
    B2 = np.maximum(0.0, (n_den - 1) / (n_den * (n_num - 1)) * (n_num * B0 - B1))
    w_de = np.sum(phi_den[:n].T * B2, axis=0)
    w_nu = np.sum(phi_num[:n].T * B2, axis=0)
    score = float(w_de @ w_de) / (2.0 * n) - float(np.sum(w_nu)) / n
    return score if np.isfinite(score) else np.inf


def loocv_score(numerator_samples, denominator_samples, sigma: float, lam: float,
                alpha: float, n_centers: int = 100, seed: int = 0,
                centers=None) -> float:
    """Leave-one-out criterion at a single (sigma, lambda) grid point.

    Centers default to the same seeded numerator subsample the fit would use.
    """
    num, den = _prepare_samples(numerator_samples, denominator_samples)
    if centers is None:
        centers = _pick_centers(num, RatioCoreConfig(n_centers=n_centers, seed=seed))
    else:
        centers = as_design(centers)
    phi_num = design_matrix(num, centers, sigma)
    phi_den = design_matrix(den, centers, sigma)
    H = _mixed_gram(phi_num, phi_den, alpha)
    h = phi_num.mean(axis=0)
    score = _loocv_from_design(phi_num, phi_den, H, h, lam)
    if not np.isfinite(score):
        raise SingularSystem(f"leave-one-out system singular at sigma={sigma}, lam={lam}")
    return score


def _select_grid_point(num, den, centers, cfg: RatioCoreConfig, alpha: float):
    """Pick (sigma, lambda) with the lowest leave-one-out score.

    Deterministic ordered reduction: grids are scanned in ascending order and
    only strictly better scores replace the incumbent.
    """
    sigmas = _resolve_sigma_grid(cfg, num, den)
    lambdas = tuple(sorted(cfg.lambda_grid))
    best = None
    for sigma in sigmas:
        phi_num = design_matrix(num, centers, sigma)
        phi_den = design_matrix(den, centers, sigma)
        H = _mixed_gram(phi_num, phi_den, alpha)
        h = phi_num.mean(axis=0)
        for lam in lambdas:
            score = _loocv_from_design(phi_num, phi_den, H, h, lam)
            if not np.isfinite(score):
                continue
            if best is None or score < best[0]:
                best = (score, sigma, lam, H, h)
    if best is None:
        raise SingularSystem("all (sigma, lambda) grid points were singular")
    return best[1], best[2], best[3], best[4]


def fit_ulsif(numerator_samples, denominator_samples,
              cfg: RatioCoreConfig | None = None) -> RatioModel:
    """Unconstrained least-squares fit with post-hoc clipping at zero."""
    cfg = cfg or RatioCoreConfig()
    num, den = _prepare_samples(numerator_samples, denominator_samples)
    centers = _pick_centers(num, cfg)
    sigma, lam, H, h = _select_grid_point(num, den, centers, cfg, cfg.alpha)
    try:
        theta = np.linalg.solve(H + lam * np.eye(len(h)), h)
    except np.linalg.LinAlgError:
        raise SingularSystem(
            f"ridge system singular at the selected grid point sigma={sigma}"
        ) from None
    theta = np.maximum(theta, 0.0)
    return RatioModel(theta=theta, centers=centers, sigma=sigma, lam=lam,
                      alpha=cfg.alpha, method="ulsif")


def solve_theta_unclipped(numerator_samples, denominator_samples, centers,
                          sigma: float, lam: float, alpha: float) -> np.ndarray:
    """Raw ridge solution before clipping; exposed for residual checks."""
    num, den = _prepare_samples(numerator_samples, denominator_samples)
    centers = as_design(centers)
    phi_num = design_matrix(num, centers, sigma)
    phi_den = design_matrix(den, centers, sigma)
    H = _mixed_gram(phi_num, phi_den, alpha)
    h = phi_num.mean(axis=0)
    return np.linalg.solve(H + lam * np.eye(len(h)), h)


def _nnls_l1(H: np.ndarray, h: np.ndarray, lam: float,
             max_iterations: int = LSIF_MAX_ITERATIONS,
             tolerance: float = LSIF_TOLERANCE) -> np.ndarray:
    """min_theta>=0  0.5 theta'H theta - h'theta + lam * sum(theta).

    Active-set non-negative least-squares iterations on the folded gradient
    H theta - (h - lam). Free coordinates are solved exactly, so the KKT
    conditions hold to solver precision at termination: free coordinates have
    zero gradient, clamped ones have gradient >= -tolerance.
    """
    b = len(h)
    c = h - lam
    theta = np.zeros(b)
    free = np.zeros(b, dtype=bool)
    for _ in range(max_iterations):
        grad = H @ theta - c
        candidates = ~free & (grad < -tolerance)
        if not np.any(candidates):
            return theta
        j = int(np.argmin(np.where(candidates, grad, np.inf)))
        free[j] = True
        # inner loop: solve the free block, clamping variables driven negative
        while True:
            idx = np.flatnonzero(free)
            sub = H[np.ix_(idx, idx)]
            try:
                z = np.linalg.solve(sub, c[idx])
            except np.linalg.LinAlgError:
                z = np.linalg.lstsq(sub, c[idx], rcond=None)[0]
            if np.all(z > 0):
                theta = np.zeros(b)
                theta[idx] = z
                break
            current = theta[idx]
            mask = z <= 0
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = np.where(mask, current / (current - z), np.inf)
            alpha = float(np.min(steps))
            moved = current + alpha * (z - current)
            moved[mask & (steps == alpha)] = 0.0
            theta = np.zeros(b)
            theta[idx] = np.maximum(moved, 0.0)
            free = theta > 0
            if not np.any(free):
                # numerical corner: nothing stays free, re-enter outer loop
                break
    raise NonConvergence(
        f"constrained solver did not reach KKT tolerance in {max_iterations} iterations"
    )


def fit_lsif(numerator_samples, denominator_samples,
             cfg: RatioCoreConfig | None = None) -> RatioModel:
    """Constrained fit: theta >= 0 held exactly, L1 penalty lam * sum(theta).

    alpha is fixed to 0. The bandwidth comes from the same leave-one-out grid
    search as the unconstrained variant; the L1 strength is pinned to the
    smallest grid value. A closed-form leave-one-out score does not exist for
    the constrained path, and a ridge-selected strength reused as an L1
    penalty routinely zeroes every coefficient (an L1 weight shrinks much
    harder than the same ridge weight).
    """
    cfg = cfg or RatioCoreConfig()
    num, den = _prepare_samples(numerator_samples, denominator_samples)
    centers = _pick_centers(num, cfg)
    lam = min(cfg.lambda_grid)
    sigma_cfg = RatioCoreConfig(
        alpha=0.0, n_centers=cfg.n_centers, sigma_grid=cfg.sigma_grid,
        lambda_grid=(lam,), seed=cfg.seed,
    )
    sigma, _, H, h = _select_grid_point(num, den, centers, sigma_cfg, alpha=0.0)
    theta = _nnls_l1(H, h, lam)
    return RatioModel(theta=theta, centers=centers, sigma=sigma, lam=lam,
                      alpha=0.0, method="lsif")


def evaluate_ratio_batch(model: RatioModel, X) -> np.ndarray:
    """Estimated ratio at each row of X; non-negative by construction."""
    X = as_design(X)
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"model expects dim {model.dim}, got {X.shape[1]}")
    phi = design_matrix(X, model.centers, model.sigma)
    return phi @ model.theta


def evaluate_ratio(model: RatioModel, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(evaluate_ratio_batch(model, x[None, :])[0])
