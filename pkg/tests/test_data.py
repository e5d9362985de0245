import numpy as np
import pytest

from fairsense.data import (
    Dataset,
    GroupPriors,
    PredictionRecord,
    estimate_priors,
    read_predictions_csv,
    split_by_group,
    validate_dataset,
    write_predictions_csv,
)
from fairsense.errors import ParseError, SingleClassData
from fairsense.synthetic import SyntheticSpec, generate_dataset


def make(records):
    return Dataset(records=tuple(PredictionRecord(*r) for r in records), name="t")


class TestSplitByGroup:
    def test_two_point_partition(self):
        d = make([(1.0, 1.1, 1), (2.0, 1.9, 0)])
        priv, unpriv = split_by_group(d)
        assert priv == [d.records[0]]
        assert unpriv == [d.records[1]]

    def test_degenerate_partition(self):
        d = make([(0.0, 0.0, 1), (1.0, 1.0, 1)])
        priv, unpriv = split_by_group(d)
        assert len(priv) == 2 and unpriv == []

    def test_synthetic_500_500(self):
        d = generate_dataset(SyntheticSpec(dataset_index=5, seed=1))
        priv, unpriv = split_by_group(d)
        assert len(priv) == 500 and len(unpriv) == 500

    def test_partition_is_order_stable_permutation(self, rng):
        n = 200
        d = Dataset.from_arrays(
            rng.normal(size=n), rng.normal(size=n), rng.integers(0, 2, n), name="r"
        )
        priv, unpriv = split_by_group(d)
        assert sorted(map(id, priv + unpriv)) == sorted(map(id, d.records))
        assert priv == [r for r in d.records if r.group == 1]
        assert unpriv == [r for r in d.records if r.group == 0]


class TestEstimatePriors:
    def test_even_split(self):
        d = generate_dataset(SyntheticSpec(dataset_index=0, seed=2))
        priors = estimate_priors(d)
        assert priors.p_a1 == 0.5 and priors.p_a0 == 0.5

    def test_counting(self):
        d = make([(0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 0)])
        priors = estimate_priors(d)
        assert priors.p_a1 == 0.75 and priors.p_a0 == 0.25

    def test_single_class_rejected(self):
        d = make([(0, 0, 1), (0, 0, 1)])
        with pytest.raises(SingleClassData):
            estimate_priors(d)

    def test_matches_brute_force_counting(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 50))
            groups = rng.integers(0, 2, n)
            if groups.min() == groups.max():
                continue
            d = Dataset.from_arrays(np.zeros(n), np.zeros(n), groups, name="r")
            priors = estimate_priors(d)
            assert priors.p_a1 == pytest.approx(sum(groups) / n, abs=1e-15)
            assert abs(priors.p_a1 + priors.p_a0 - 1.0) <= 1e-12


class TestGroupPriors:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            GroupPriors(p_a1=1.0, p_a0=0.0)
        with pytest.raises(ValueError):
            GroupPriors(p_a1=0.6, p_a0=0.6)


class TestValidateDataset:
    def test_well_formed(self, four_point_dataset):
        assert validate_dataset(four_point_dataset).valid

    def test_nan_prediction_flagged(self):
        d = make([(0.0, float("nan"), 0), (1.0, 1.0, 1)])
        report = validate_dataset(d)
        assert not report.valid
        assert report.violations == ("non-finite y_pred at index 0",)

    def test_bad_group_flagged(self):
        d = make([(0.0, 0.0, 2), (1.0, 1.0, 1)])
        report = validate_dataset(d)
        assert "group label out of {0,1} at index 0" in report.violations

    def test_empty_flagged(self):
        assert "dataset is empty" in validate_dataset(Dataset(records=(), name="e")).violations

    def test_accepts_every_synthetic_dataset(self):
        for idx in (0, 13, 39):
            d = generate_dataset(SyntheticSpec(dataset_index=idx, seed=3 + idx))
            assert validate_dataset(d).valid


class TestPredictionsCsv:
    def test_round_trip(self, tmp_path, four_point_dataset):
        path = tmp_path / "preds.csv"
        write_predictions_csv(four_point_dataset, path)
        back = read_predictions_csv(path)
        assert back.records == four_point_dataset.records

    def test_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        rows = ["y_true,y_pred,group"] + ["0.0,1.0,0"] * 5 + ["a,b,c"]
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ParseError, match="line 7"):
            read_predictions_csv(path)

    def test_blank_line_rejected(self, tmp_path):
        path = tmp_path / "blank.csv"
        path.write_text("y_true,y_pred,group\n1.0,1.0,0\n\n2.0,2.0,1\n")
        with pytest.raises(ParseError, match="line 3"):
            read_predictions_csv(path)

    def test_bad_group_rejected(self, tmp_path):
        path = tmp_path / "grp.csv"
        path.write_text("y_true,y_pred,group\n1.0,1.0,2\n")
        with pytest.raises(ParseError, match="line 2"):
            read_predictions_csv(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("a,b,c\n1.0,1.0,0\n")
        with pytest.raises(ParseError, match="line 1"):
            read_predictions_csv(path)
