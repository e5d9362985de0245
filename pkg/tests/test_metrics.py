import numpy as np
import pytest

from fairsense.classifiers import (
    ClassifierKind,
    LinearLogisticModel,
    Penalty,
    TrainConfig,
    predict_proba_batch,
)
from fairsense.data import Dataset, MetricKind, PredictionRecord, estimate_priors
from fairsense.errors import SingleClassData
from fairsense.metrics import (
    MetricOutcome,
    ThresholdPolicy,
    analytic_independence_gaussian,
    bayes_point_ratio,
    clamp_probability,
    classifier_independence_estimates,
    conditional_odds_ratios,
    conditional_via_classifier,
    conditional_via_ratio_core,
    independence_via_classifier,
    independence_via_ratio_core,
)
from fairsense.ratio_matching import RatioCoreConfig
from fairsense.synthetic import SyntheticSpec, generate_dataset

OFF = ThresholdPolicy.off()
CLAMP = ThresholdPolicy.at(0.99)


class TestClampProbability:
    def test_upper_clamp(self):
        assert clamp_probability(0.9999, CLAMP) == 0.99

    def test_interior_untouched(self):
        assert clamp_probability(0.5, CLAMP) == 0.5

    def test_symmetric_lower_clamp(self):
        assert clamp_probability(0.002, CLAMP) == pytest.approx(0.01)

    def test_disabled_is_identity(self, rng):
        for p in rng.uniform(1e-9, 1 - 1e-9, 50):
            assert clamp_probability(p, OFF) == p

    def test_invalid_tau_rejected(self):
        with pytest.raises(ValueError):
            ThresholdPolicy.at(0.4)


class TestBayesPointRatio:
    def test_999(self):
        assert bayes_point_ratio(0.9990, 1.0) == pytest.approx(999.0, rel=1e-9)

    def test_9999(self):
        assert bayes_point_ratio(0.9999, 1.0) == pytest.approx(9999.0, rel=1e-9)

    def test_prior_factor(self):
        assert bayes_point_ratio(0.8, 2.0) == pytest.approx(8.0, rel=1e-12)


class TestMetricOutcome:
    def test_undefined_needs_reason(self):
        with pytest.raises(ValueError):
            MetricOutcome(value=None, reason=None)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            MetricOutcome.of(-0.5)


class TestIndependenceViaClassifier:
    def test_constant_predictions_give_unit_ratio(self):
        records = tuple(
            PredictionRecord(y_true=float(i), y_pred=3.3, group=i % 2) for i in range(40)
        )
        d = Dataset(records=records, name="const")
        est = independence_via_classifier(d, ClassifierKind.LOGISTIC, OFF, TrainConfig())
        assert est.outcome.value == pytest.approx(1.0, abs=1e-6)

    def test_identical_distributions_near_one(self, synth0):
        est = independence_via_classifier(
            synth0, ClassifierKind.RIDGE_LOGISTIC, OFF, TrainConfig(seed=1)
        )
        assert 0.8 <= est.outcome.value <= 1.2

    def test_four_point_hand_computation(self, four_point_dataset):
        # clamp at 0.99 pins every probability to a bound once the fit is
        # sharp enough, so the mean ratio is hand-computable
        est = independence_via_classifier(
            four_point_dataset, ClassifierKind.LOGISTIC, CLAMP, TrainConfig()
        )
        expected = (2 * (0.01 / 0.99) + 2 * (0.99 / 0.01)) / 4
        assert est.outcome.value == pytest.approx(expected, abs=1e-6)

    def test_mean_equals_stored_ratios(self, balanced_random_dataset):
        est = independence_via_classifier(
            balanced_random_dataset, ClassifierKind.LASSO_LOGISTIC, OFF, TrainConfig(seed=2)
        )
        assert est.outcome.value == pytest.approx(
            np.mean(est.per_point_ratios), abs=1e-12
        )

    def test_group_swap_inverts_ratios(self, rng):
        n = 80
        pred = np.concatenate([rng.normal(0, 1, n), rng.normal(1.0, 1, n)])
        group = np.concatenate([np.zeros(n, int), np.ones(n, int)])
        d = Dataset.from_arrays(np.zeros(2 * n), pred, group, name="swap")
        d_swapped = Dataset.from_arrays(np.zeros(2 * n), pred, 1 - group, name="swapped")
        cfg = TrainConfig(seed=3)
        a = independence_via_classifier(d, ClassifierKind.LOGISTIC, OFF, cfg)
        b = independence_via_classifier(d_swapped, ClassifierKind.LOGISTIC, OFF, cfg)
        ratios = np.asarray(a.per_point_ratios)
        inverted = np.asarray(b.per_point_ratios)
        assert np.max(np.abs(ratios * inverted - 1.0)) <= 1e-9

    def test_clamped_ratios_bounded(self, balanced_random_dataset):
        priors = estimate_priors(balanced_random_dataset)
        est = independence_via_classifier(
            balanced_random_dataset, ClassifierKind.KLR_GAUSSIAN, CLAMP, TrainConfig(seed=4)
        )
        bound = 99.0 * priors.ratio_a0_a1 + 1e-12
        assert max(est.per_point_ratios) <= bound

    def test_single_group_rejected(self):
        d = Dataset(records=tuple(
            PredictionRecord(0.0, float(i), 1) for i in range(10)
        ), name="one")
        with pytest.raises(SingleClassData):
            independence_via_classifier(d, ClassifierKind.LOGISTIC, OFF, TrainConfig())

    def test_shared_fit_matches_single_policy_path(self, balanced_random_dataset):
        cfg = TrainConfig(seed=5)
        multi = classifier_independence_estimates(
            balanced_random_dataset, ClassifierKind.LOGISTIC, (OFF, CLAMP), cfg
        )
        single_off = independence_via_classifier(
            balanced_random_dataset, ClassifierKind.LOGISTIC, OFF, cfg
        )
        single_clamp = independence_via_classifier(
            balanced_random_dataset, ClassifierKind.LOGISTIC, CLAMP, cfg
        )
        assert multi[0].outcome.value == single_off.outcome.value
        assert multi[1].outcome.value == single_clamp.outcome.value


class TestConditionalViaClassifier:
    def test_group_independent_of_features_gives_one(self, rng):
        # identical feature block for the two groups: classifiers learn the
        # base rate and the odds cancel
        n = 60
        base_true = rng.normal(size=n)
        base_pred = rng.normal(size=n)
        records = []
        for g in (0, 1):
            for t, p in zip(base_true, base_pred):
                records.append(PredictionRecord(float(t), float(p), g))
        d = Dataset(records=tuple(records), name="mirrored")
        est = conditional_via_classifier(
            d, MetricKind.SEPARATION, ClassifierKind.LOGISTIC, OFF, TrainConfig()
        )
        assert est.outcome.value == pytest.approx(1.0, abs=1e-5)

    def test_equal_odds_cancel(self):
        ratios = conditional_odds_ratios(np.array([0.9]), np.array([0.9]), OFF)
        assert ratios[0] == pytest.approx(1.0, rel=1e-12)

    def test_hand_quotient(self):
        ratios = conditional_odds_ratios(np.array([0.9]), np.array([0.5]), OFF)
        assert ratios[0] == pytest.approx(9.0, rel=1e-12)

    def test_prior_invariance_with_fixed_models(self, rng):
        # duplicating unprivileged records changes priors but per-point odds
        # quotients from frozen probability models stay identical
        n = 50
        pred = rng.normal(size=n)
        true = rng.normal(size=n)
        group = rng.integers(0, 2, n)
        joint_model = LinearLogisticModel(
            weights=np.array([0.7, -0.4]), bias=0.1, penalty=Penalty.NONE, lam=0.0
        )
        marg_model = LinearLogisticModel(
            weights=np.array([0.5]), bias=-0.2, penalty=Penalty.NONE, lam=0.0
        )
        joint_X = np.column_stack([pred, true])
        p_joint = predict_proba_batch(joint_model, joint_X)
        p_marg = predict_proba_batch(marg_model, true[:, None])
        base = conditional_odds_ratios(p_joint, p_marg, OFF)
        dup = np.concatenate([np.arange(n), np.flatnonzero(group == 0)])
        dup_ratios = conditional_odds_ratios(p_joint[dup], p_marg[dup], OFF)
        assert np.max(np.abs(dup_ratios[:n] - base)) <= 1e-9

    def test_sufficiency_runs(self, balanced_random_dataset):
        est = conditional_via_classifier(
            balanced_random_dataset, MetricKind.SUFFICIENCY,
            ClassifierKind.RIDGE_LOGISTIC, OFF, TrainConfig(seed=6),
        )
        assert est.outcome.defined
        assert est.metric is MetricKind.SUFFICIENCY

    def test_independence_not_accepted(self, balanced_random_dataset):
        with pytest.raises(ValueError):
            conditional_via_classifier(
                balanced_random_dataset, MetricKind.INDEPENDENCE,
                ClassifierKind.LOGISTIC, OFF, TrainConfig(),
            )


class TestIndependenceViaRatioCore:
    def test_identical_distributions_near_one(self, synth0):
        for method, alpha in (("ulsif", 0.0), ("ulsif", 0.5), ("lsif", 0.0)):
            est = independence_via_ratio_core(
                synth0, method, RatioCoreConfig(alpha=alpha, seed=2)
            )
            assert 0.8 <= est.outcome.value <= 1.2, (method, alpha)

    def test_tracks_analytic_value_at_unit_shift(self):
        d = generate_dataset(SyntheticSpec(dataset_index=10, seed=42))
        analytic = analytic_independence_gaussian(d, 1.0).outcome.value
        est = independence_via_ratio_core(d, "ulsif", RatioCoreConfig(alpha=0.0, seed=0))
        assert abs(est.outcome.value - analytic) <= 0.3 * analytic

    def test_mean_equals_stored_ratios(self, synth0):
        est = independence_via_ratio_core(synth0, "lsif", RatioCoreConfig(seed=1))
        assert est.outcome.value == pytest.approx(np.mean(est.per_point_ratios), abs=1e-12)


class TestConditionalViaRatioCore:
    def test_disjoint_supports_degenerate(self, rng):
        # unequal clusters keep the median-scaled bandwidths within-cluster,
        # so the marginal ratio underflows on the far group
        true = np.concatenate([rng.normal(0.0, 1, 150), rng.normal(100.0, 1, 50)])
        pred = rng.normal(size=200)
        group = np.concatenate([np.zeros(150, int), np.ones(50, int)])
        d = Dataset.from_arrays(true, pred, group, name="disjoint")
        est = conditional_via_ratio_core(
            d, MetricKind.SEPARATION, "ulsif", RatioCoreConfig(alpha=0.0, seed=3)
        )
        assert not est.outcome.defined
        assert est.outcome.reason == "denominator degenerate"

    def test_moderate_overlap_defined(self, balanced_random_dataset):
        est = conditional_via_ratio_core(
            balanced_random_dataset, MetricKind.SEPARATION, "ulsif",
            RatioCoreConfig(alpha=0.25, seed=4),
        )
        assert est.outcome.defined
        assert est.outcome.value >= 0.0


class TestAnalyticIndependence:
    def test_zero_shift_is_exactly_one(self, synth0):
        est = analytic_independence_gaussian(synth0, 0.0)
        assert est.outcome.value == 1.0

    def test_pointwise_formula(self):
        d = Dataset(records=(
            PredictionRecord(0.0, 2.0, 1), PredictionRecord(0.0, 2.0, 0),
        ), name="pt")
        est = analytic_independence_gaussian(d, 2.0)
        assert est.outcome.value == pytest.approx(np.exp(2.0), rel=1e-12)

    def test_large_sample_expectation(self):
        # E over the balanced mixture of exp(mu x - mu^2/2) is (1 + e^{mu^2})/2
        rng = np.random.default_rng(8)
        n = 100_000
        pred = np.concatenate([rng.normal(0, 1, n // 2), rng.normal(1.0, 1, n // 2)])
        group = np.concatenate([np.zeros(n // 2, int), np.ones(n // 2, int)])
        d = Dataset.from_arrays(np.zeros(n), pred, group, name="big")
        est = analytic_independence_gaussian(d, 1.0)
        expected = (1 + np.e) / 2
        assert abs(est.outcome.value - expected) <= 0.1 * expected
