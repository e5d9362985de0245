"""Independence, Separation, and Sufficiency as averaged density ratios.

Each metric is the dataset mean of a per-point ratio of conditional densities
between the privileged (group = 1) and unprivileged (group = 0) populations.
Two interchangeable estimation cores are provided:

* probabilistic classifiers: a binary classifier for P(A=1 | features) turns
  into a density ratio through the odds identity
  ``p/(1-p) * P(A=0)/P(A=1)``; conditional metrics divide the odds of a joint
  classifier by the odds of a marginal one, so the prior factors cancel;
* ratio matching: LSIF / uLSIF fitted directly on group-wise samples.

A threshold policy may clamp classifier probabilities into ``[1-tau, tau]``
before odds are formed, damping the effect of near-certain predictions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import classifiers as clf
from . import ratio_matching as rm
from .classifiers import ClassifierKind, Penalty, TrainConfig
from .data import Dataset, MetricKind, estimate_priors
from .errors import NonConvergence, SingleClassData, SingularSystem
from .ratio_matching import RATIO_FLOOR, RatioCoreConfig

# A conditional metric is reported undefined when more than this fraction of
# points needs the divisor floor.
DEGENERATE_DENOMINATOR_FRACTION = 0.20

DEFAULT_POLYNOMIAL_DEGREE = 3
DEFAULT_POLYNOMIAL_OFFSET = 1.0


@dataclass(frozen=True)
class ThresholdPolicy:
    """Optional two-sided clamp of predicted probabilities into [1-tau, tau]."""

    enabled: bool = False
    tau: float = 0.99

    def __post_init__(self):
        if self.enabled and not 0.5 < self.tau < 1.0:
            raise ValueError("tau must lie in (0.5, 1) when thresholding is enabled")

    @staticmethod
    def off() -> "ThresholdPolicy":
        return ThresholdPolicy(enabled=False)

    @staticmethod
    def at(tau: float) -> "ThresholdPolicy":
        return ThresholdPolicy(enabled=True, tau=tau)

    @property
    def label(self) -> str:
        return f"{self.tau:g}" if self.enabled else "off"


@dataclass(frozen=True)
class MetricOutcome:
    """A non-negative value, or an explicit undefined outcome with a reason."""

    value: float | None
    reason: str | None = None

    def __post_init__(self):
        if self.value is None and not self.reason:
            raise ValueError("undefined outcomes need a reason")
        if self.value is not None and (not np.isfinite(self.value) or self.value < 0):
            raise ValueError("metric values must be finite and non-negative")

    @property
    def defined(self) -> bool:
        return self.value is not None

    @staticmethod
    def of(value: float) -> "MetricOutcome":
        return MetricOutcome(value=float(value))

    @staticmethod
    def undefined(reason: str) -> "MetricOutcome":
        return MetricOutcome(value=None, reason=reason)


@dataclass(frozen=True)
class FairnessEstimate:
    metric: MetricKind
    core: str
    outcome: MetricOutcome
    config_fingerprint: str
    per_point_ratios: tuple[float, ...] | None = None
    notes: tuple[str, ...] = ()


def fingerprint(**params) -> str:
    """Stable 12-hex digest of the hyperparameters that produced a value."""
    canon = ";".join(f"{k}={params[k]!r}" for k in sorted(params))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def clamp_probability(p: float, policy: ThresholdPolicy) -> float:
    """Identity when disabled; otherwise min(max(p, 1 - tau), tau)."""
    if not policy.enabled:
        return p
    return min(max(p, 1.0 - policy.tau), policy.tau)


def _clamp_array(p: np.ndarray, policy: ThresholdPolicy) -> np.ndarray:
    if not policy.enabled:
        return p
    return np.clip(p, 1.0 - policy.tau, policy.tau)


def bayes_point_ratio(p: float, prior_ratio: float) -> float:
    """Odds of P(A=1 | .) corrected by the prior factor P(A=0)/P(A=1)."""
    return p / (1.0 - p) * prior_ratio


def _mean_estimate(metric, core, ratios, fp, notes=()) -> FairnessEstimate:
    ratios = np.asarray(ratios, dtype=float)
    return FairnessEstimate(
        metric=metric,
        core=core,
        outcome=MetricOutcome.of(float(np.mean(ratios))),
        config_fingerprint=fp,
        per_point_ratios=tuple(float(r) for r in ratios),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# classifier cores
# ---------------------------------------------------------------------------

def _fit_core_classifier(X, labels, kind: ClassifierKind, cfg: TrainConfig, kernel=None):
    if kind is ClassifierKind.LOGISTIC:
        return clf.fit_linear_logistic(X, labels, Penalty.NONE, cfg)
    if kind is ClassifierKind.RIDGE_LOGISTIC:
        return clf.fit_linear_logistic(X, labels, Penalty.L2, cfg)
    if kind is ClassifierKind.LASSO_LOGISTIC:
        return clf.fit_linear_logistic(X, labels, Penalty.L1, cfg)
    if kind is ClassifierKind.KLR_GAUSSIAN:
        kernel = kernel if kernel is not None else clf.GaussianKernel(sigma=None)
        return clf.fit_kernel_logistic(X, labels, kernel, cfg)
    if kind is ClassifierKind.KLR_POLYNOMIAL:
        kernel = kernel if kernel is not None else clf.PolynomialKernel(
            degree=DEFAULT_POLYNOMIAL_DEGREE, offset=DEFAULT_POLYNOMIAL_OFFSET
        )
        return clf.fit_kernel_logistic(X, labels, kernel, cfg)
    raise ValueError(f"unknown classifier kind {kind!r}")


def _kernel_description(model) -> tuple[str, ...]:
    if isinstance(model, clf.KernelLogisticModel):
        return (f"kernel={model.kernel!r}",)
    return ()


def classifier_independence_estimates(
    d: Dataset,
    kind: ClassifierKind,
    policies: tuple[ThresholdPolicy, ...],
    cfg: TrainConfig | None = None,
    kernel=None,
) -> list[FairnessEstimate]:
    """Independence under one classifier fit, evaluated per threshold policy.

    The classifier sees the 1-feature input (the prediction) and the group as
    the label; sharing the fit across policies keeps on/off comparisons exact.
    """
    cfg = cfg or TrainConfig()
    priors = estimate_priors(d)
    X = d.y_pred()[:, None]
    model = _fit_core_classifier(X, d.groups().astype(float), kind, cfg, kernel)
    p = clf.predict_proba_batch(model, X)
    notes = _kernel_description(model)
    out = []
    for policy in policies:
        pc = _clamp_array(p, policy)
        ratios = pc / (1.0 - pc) * priors.ratio_a0_a1
        fp = fingerprint(
            metric=MetricKind.INDEPENDENCE.value, core=kind.value, policy=policy.label,
            lam=cfg.lam, max_iterations=cfg.max_iterations, tolerance=cfg.tolerance,
            seed=cfg.seed, kernel=notes,
        )
        out.append(_mean_estimate(MetricKind.INDEPENDENCE, kind.value, ratios, fp, notes))
    return out


def independence_via_classifier(
    d: Dataset, kind: ClassifierKind, policy: ThresholdPolicy,
    cfg: TrainConfig | None = None, kernel=None,
) -> FairnessEstimate:
    return classifier_independence_estimates(d, kind, (policy,), cfg, kernel)[0]


def _conditional_features(d: Dataset, metric: MetricKind):
    y_pred = d.y_pred()
    y_true = d.y_true()
    if metric is MetricKind.SEPARATION:
        joint = np.column_stack([y_pred, y_true])
        marginal = y_true[:, None]
    elif metric is MetricKind.SUFFICIENCY:
        joint = np.column_stack([y_true, y_pred])
        marginal = y_pred[:, None]
    else:
        raise ValueError("conditional metrics are separation and sufficiency only")
    return joint, marginal


def conditional_odds_ratios(p_joint, p_marginal, policy: ThresholdPolicy) -> np.ndarray:
    """Per-point odds quotient odds(p_joint) / odds(p_marginal).

    Group priors cancel in this quotient, so no prior factor appears.
    """
    pj = _clamp_array(np.asarray(p_joint, dtype=float), policy)
    pm = _clamp_array(np.asarray(p_marginal, dtype=float), policy)
    return (pj / (1.0 - pj)) / (pm / (1.0 - pm))


def classifier_conditional_estimates(
    d: Dataset,
    metric: MetricKind,
    kind: ClassifierKind,
    policies: tuple[ThresholdPolicy, ...],
    cfg: TrainConfig | None = None,
    kernel=None,
) -> list[FairnessEstimate]:
    """Separation/Sufficiency from a joint and a marginal classifier fit."""
    cfg = cfg or TrainConfig()
    estimate_priors(d)  # raises SingleClassData on degenerate input
    joint_X, marginal_X = _conditional_features(d, metric)
    labels = d.groups().astype(float)
    joint_model = _fit_core_classifier(joint_X, labels, kind, cfg, kernel)
    marginal_model = _fit_core_classifier(marginal_X, labels, kind, cfg, kernel)
    p_joint = clf.predict_proba_batch(joint_model, joint_X)
    p_marginal = clf.predict_proba_batch(marginal_model, marginal_X)
    notes = _kernel_description(joint_model) + _kernel_description(marginal_model)
    out = []
    for policy in policies:
        ratios = conditional_odds_ratios(p_joint, p_marginal, policy)
        fp = fingerprint(
            metric=metric.value, core=kind.value, policy=policy.label,
            lam=cfg.lam, max_iterations=cfg.max_iterations, tolerance=cfg.tolerance,
            seed=cfg.seed, kernel=notes,
        )
        out.append(_mean_estimate(metric, kind.value, ratios, fp, notes))
    return out


def conditional_via_classifier(
    d: Dataset, metric: MetricKind, kind: ClassifierKind, policy: ThresholdPolicy,
    cfg: TrainConfig | None = None, kernel=None,
) -> FairnessEstimate:
    return classifier_conditional_estimates(d, metric, kind, (policy,), cfg, kernel)[0]


# ---------------------------------------------------------------------------
# ratio-matching cores
# ---------------------------------------------------------------------------

def ratio_core_label(method: str, alpha: float) -> str:
    return "lsif" if method == "lsif" else f"ulsif_a{alpha:g}"


def _group_samples(d: Dataset, columns: np.ndarray):
    groups = d.groups()
    privileged = columns[groups == 1]
    unprivileged = columns[groups == 0]
    if len(privileged) == 0 or len(unprivileged) == 0:
        raise SingleClassData(f"dataset {d.name!r} lacks one of the groups")
    return privileged, unprivileged


def _fit_ratio(method: str, num, den, cfg: RatioCoreConfig):
    if method == "lsif":
        return rm.fit_lsif(num, den, cfg)
    if method == "ulsif":
        return rm.fit_ulsif(num, den, cfg)
    raise ValueError(f"unknown ratio method {method!r}")


def independence_via_ratio_core(
    d: Dataset, method: str, cfg: RatioCoreConfig | None = None
) -> FairnessEstimate:
    """Independence with the privileged predictions as numerator samples."""
    cfg = cfg or RatioCoreConfig()
    core = ratio_core_label(method, cfg.alpha)
    X = d.y_pred()[:, None]
    num, den = _group_samples(d, X)
    fp = fingerprint(
        metric=MetricKind.INDEPENDENCE.value, core=core, alpha=cfg.alpha,
        n_centers=cfg.n_centers, sigma_grid=cfg.sigma_grid,
        lambda_grid=cfg.lambda_grid, seed=cfg.seed,
    )
    try:
        model = _fit_ratio(method, num, den, cfg)
    except (SingularSystem, NonConvergence) as exc:
        return FairnessEstimate(
            metric=MetricKind.INDEPENDENCE, core=core,
            outcome=MetricOutcome.undefined(f"fit failed: {exc}"),
            config_fingerprint=fp,
        )
    values = rm.evaluate_ratio_batch(model, X)
    notes = (f"sigma={model.sigma:.6g}", f"lam={model.lam:g}")
    if np.all(model.theta == 0):
        notes = notes + ("degenerate fit: all coefficients zero",)
    return _mean_estimate(MetricKind.INDEPENDENCE, core, values, fp, notes)


def conditional_via_ratio_core(
    d: Dataset, metric: MetricKind, method: str, cfg: RatioCoreConfig | None = None
) -> FairnessEstimate:
    """Separation/Sufficiency as a quotient of a joint and a marginal ratio fit.

    The marginal ratio is floored at ``RATIO_FLOOR`` as a divisor; when more
    than ``DEGENERATE_DENOMINATOR_FRACTION`` of points sit below the floor the
    outcome is reported undefined instead of a meaningless average.
    """
    cfg = cfg or RatioCoreConfig()
    core = ratio_core_label(method, cfg.alpha)
    joint_X, marginal_X = _conditional_features(d, metric)
    fp = fingerprint(
        metric=metric.value, core=core, alpha=cfg.alpha, n_centers=cfg.n_centers,
        sigma_grid=cfg.sigma_grid, lambda_grid=cfg.lambda_grid, seed=cfg.seed,
    )
    try:
        joint_num, joint_den = _group_samples(d, joint_X)
        marg_num, marg_den = _group_samples(d, marginal_X)
        joint_model = _fit_ratio(method, joint_num, joint_den, cfg)
        marginal_model = _fit_ratio(method, marg_num, marg_den, cfg)
    except (SingularSystem, NonConvergence) as exc:
        return FairnessEstimate(
            metric=metric, core=core,
            outcome=MetricOutcome.undefined(f"fit failed: {exc}"),
            config_fingerprint=fp,
        )
    r_joint = rm.evaluate_ratio_batch(joint_model, joint_X)
    r_marginal = rm.evaluate_ratio_batch(marginal_model, marginal_X)
    floored = r_marginal < RATIO_FLOOR
    if np.mean(floored) > DEGENERATE_DENOMINATOR_FRACTION:
        return FairnessEstimate(
            metric=metric, core=core,
            outcome=MetricOutcome.undefined("denominator degenerate"),
            config_fingerprint=fp,
            notes=(f"{int(np.sum(floored))}/{len(floored)} marginal ratios at floor",),
        )
    values = r_joint / np.maximum(r_marginal, RATIO_FLOOR)
    notes = (
        f"joint sigma={joint_model.sigma:.6g}",
        f"marginal sigma={marginal_model.sigma:.6g}",
    )
    return _mean_estimate(metric, core, values, fp, notes)


# ---------------------------------------------------------------------------
# analytic ground truth for the synthetic benchmark
# ---------------------------------------------------------------------------

def analytic_independence_gaussian(d: Dataset, mu: float) -> FairnessEstimate:
    """Exact Independence for unit-variance Gaussian groups shifted by mu.

    The true per-point ratio at prediction x is
    N(x; mu, 1) / N(x; 0, 1) = exp(mu * x - mu^2 / 2).
    """
    x = d.y_pred()
    ratios = np.exp(mu * x - 0.5 * mu * mu)
    fp = fingerprint(metric=MetricKind.INDEPENDENCE.value, core="analytic", mu=mu)
    return _mean_estimate(MetricKind.INDEPENDENCE, "analytic", ratios, fp)
