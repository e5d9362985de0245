import numpy as np
import pytest

from fairsense.cli import main
from fairsense.data import Dataset, MetricKind, read_predictions_csv
from fairsense.metrics import ThresholdPolicy
from fairsense.report import (
    CorrelationTable,
    ReportRow,
    SweepConfig,
    SweepInput,
    correlation_tables,
    dataset_group_label,
    expand_cores,
    parse_core,
    read_report_csv,
    run_cells,
    scatter_points,
    write_report_csv,
)
from fairsense.synthetic import SyntheticSpec, generate_dataset


def small_config(**kw):
    defaults = dict(
        cores=("logistic", "ridge"),
        metrics=(MetricKind.INDEPENDENCE,),
        threshold=ThresholdPolicy.at(0.99),
        correlation_methods=("spearman",),
        seed=5,
        output_dir=None,
        figures=False,
    )
    defaults.update(kw)
    return SweepConfig(**defaults)


def synth_inputs(indices, seed=50):
    out = []
    for i in indices:
        d = generate_dataset(SyntheticSpec(dataset_index=i, seed=seed + i))
        out.append(SweepInput(dataset=d, dataset_id=d.name))
    return out


class TestCoreParsing:
    def test_expand_all(self):
        cores = expand_cores(["all"])
        assert cores[:5] == ("logistic", "ridge", "lasso", "klr_gaussian", "klr_polynomial")
        assert "lsif" in cores and "ulsif_a0.25" in cores and "ulsif_a1" in cores

    def test_expand_ulsif_with_alphas(self):
        assert expand_cores(["ulsif"], alphas=(0.1, 0.9)) == ("ulsif_a0.1", "ulsif_a0.9")

    def test_explicit_alpha_token(self):
        assert expand_cores(["ulsif_a0.5"]) == ("ulsif_a0.5",)

    def test_unknown_core_rejected(self):
        with pytest.raises(ValueError):
            expand_cores(["boosting"])

    def test_parse_round_trip(self):
        assert parse_core("lsif") == ("ratio", "lsif", 0.0)
        assert parse_core("ulsif_a0.75") == ("ratio", "ulsif", 0.75)
        kind = parse_core("klr_gaussian")
        assert kind[0] == "classifier"


class TestRunCells:
    def test_row_count_formula(self):
        inputs = synth_inputs([0, 1])
        config = small_config(cores=("logistic", "lsif"),
                              metrics=(MetricKind.INDEPENDENCE, MetricKind.SEPARATION))
        rows = run_cells(inputs, config)
        # inputs x metrics x cores x threshold variants
        assert len(rows) == 2 * 2 * 2 * 2

    def test_rows_sorted_and_unique(self):
        inputs = synth_inputs([1, 0])
        rows = run_cells(inputs, small_config())
        keys = [r.sort_key() for r in rows]
        assert keys == sorted(keys)
        assert len(set(keys)) == len(keys)

    def test_ratio_core_identical_across_threshold_variants(self):
        inputs = synth_inputs([2])
        config = small_config(cores=("ulsif_a0.5",))
        rows = run_cells(inputs, config)
        by_thr = {r.threshold: r.value for r in rows}
        assert by_thr["off"] == by_thr["0.99"]

    def test_failure_becomes_undefined_row(self):
        # single-group dataset cannot be measured; the cell must not abort
        d = Dataset.from_arrays(np.zeros(8), np.arange(8.0), np.ones(8, int), name="solo")
        rows = run_cells([SweepInput(dataset=d, dataset_id="solo")], small_config())
        assert all(r.numeric_value is None for r in rows)
        assert all(r.undefined_reason for r in rows)

    def test_jobs_parallel_matches_serial(self):
        inputs = synth_inputs([0, 3])
        serial = run_cells(inputs, small_config(jobs=1))
        parallel = run_cells(inputs, small_config(jobs=4))
        assert serial == parallel


class TestReportCsv:
    def test_round_trip(self, tmp_path):
        rows = run_cells(synth_inputs([0]), small_config())
        path = write_report_csv(rows, tmp_path / "report.csv")
        assert read_report_csv(path) == rows

    def test_undefined_serialization(self, tmp_path):
        row = ReportRow("d", "-", "independence", "lsif", "off",
                        "undefined:fit failed: boom", 1, "abc")
        path = write_report_csv([row], tmp_path / "r.csv")
        back = read_report_csv(path)[0]
        assert back.numeric_value is None
        assert back.undefined_reason == "fit failed: boom"


class TestGroupLabels:
    def test_synthetic_ids_map_to_intervals(self):
        assert dataset_group_label("synth_00_0.0") == "I0"
        assert dataset_group_label("synth_19_1.9") == "I1"
        assert dataset_group_label("synth_39_3.9") == "I3"

    def test_other_ids_are_all(self):
        assert dataset_group_label("zoo_ols") == "all"


class TestCorrelationTables:
    def _rows(self, values_by_core, metric="independence", threshold="off"):
        rows = []
        for core, values in values_by_core.items():
            for i, v in enumerate(values):
                rows.append(ReportRow(
                    dataset_id=f"d{i:02d}", model_id="-", metric=metric, core=core,
                    threshold=threshold,
                    value=repr(v) if v is not None else "undefined:x",
                    seed=0, fingerprint="f",
                ))
        return rows

    def test_identical_columns_give_unit_coefficient(self):
        values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        rows = self._rows({"a": values, "b": values})
        tables = correlation_tables(rows, ("spearman",))
        cell = tables[0].cell("a", "b")
        assert cell.result.coefficient == 1.0
        assert cell.result.significant

    def test_pairwise_deletion_and_effective_n(self):
        rows = self._rows({
            "a": [1.0, 2.0, None, 4.0, 5.0],
            "b": [2.0, 1.0, 3.0, 5.0, 4.0],
            "c": [5.0, 4.0, 3.0, 2.0, 1.0],
        })
        tables = correlation_tables(rows, ("spearman",))
        table = tables[0]
        assert table.cell("a", "b").n_effective == 4
        assert table.cell("b", "c").n_effective == 5

    def test_insufficient_shared_values_render_nan(self):
        rows = self._rows({"a": [1.0, None, None, None], "b": [1.0, 2.0, 3.0, 4.0]})
        table = correlation_tables(rows, ("kendall",))[0]
        assert table.cell("a", "b").result is None

    def test_constant_vector_renders_nan(self):
        rows = self._rows({"a": [2.0, 2.0, 2.0, 2.0], "b": [1.0, 2.0, 3.0, 4.0]})
        table = correlation_tables(rows, ("spearman",))[0]
        assert table.cell("a", "b").result is None

    def test_groups_split_by_threshold_and_metric(self):
        rows = (self._rows({"a": [1, 2, 3], "b": [3, 2, 1]}, threshold="off")
                + self._rows({"a": [1, 2, 3], "b": [1, 2, 3]}, threshold="0.99"))
        tables = correlation_tables(rows, ("spearman",))
        by_thr = {t.threshold: t for t in tables}
        assert by_thr["off"].cell("a", "b").result.coefficient == -1.0
        assert by_thr["0.99"].cell("a", "b").result.coefficient == 1.0

    def test_scatter_points_one_row_per_key(self):
        rows = self._rows({"a": [1.0, None, 3.0], "b": [4.0, 5.0, 6.0]})
        pts = scatter_points(rows, "independence", "off", "all", "a", "b")
        assert len(pts) == 2
        assert pts[0][2:] == (1.0, 4.0)


class TestCliSynth(object):
    def test_synth_writes_40_files_and_manifest(self, tmp_path):
        out = tmp_path / "synth"
        assert main(["synth", "--seed", "7", "--out", str(out)]) == 0
        files = sorted(out.glob("synth_*.csv"))
        assert len(files) == 40
        manifest = (out / "manifest.csv").read_text().splitlines()
        assert manifest[0] == "index,mu,seed,interval,filename"
        assert len(manifest) == 41
        row30 = manifest[31].split(",")
        assert row30[0] == "30" and row30[3] == "I3"

    def test_synth_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["synth", "--seed", "11", "--out", str(a)])
        main(["synth", "--seed", "11", "--out", str(b)])
        for fa in sorted(a.glob("*.csv")):
            fb = b / fa.name
            assert fa.read_bytes() == fb.read_bytes()

    def test_synth_csv_loads_back(self, tmp_path):
        out = tmp_path / "synth"
        main(["synth", "--seed", "3", "--out", str(out)])
        d = read_predictions_csv(out / "synth_05_0.5.csv")
        assert len(d) == 1000


@pytest.fixture
def feature_csv(tmp_path, rng):
    path = tmp_path / "features.csv"
    n = 60
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    g = rng.integers(0, 2, n)
    y = 2 * x1 - x2 + 0.4 * g + 0.2 * rng.normal(size=n)
    lines = ["x1,x2,sex,target"]
    for i in range(n):
        lines.append(f"{float(x1[i])!r},{float(x2[i])!r},{g[i]},{float(y[i])!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


class TestCliZoo:
    def test_zoo_emits_six_prediction_files(self, tmp_path, feature_csv):
        out = tmp_path / "zoo"
        code = main([
            "zoo", str(feature_csv), "--target-col", "target", "--group-col", "sex",
            "--split", "0.8", "--seed", "2", "--out", str(out),
        ])
        assert code == 0
        files = sorted(out.glob("zoo_*.csv"))
        assert len(files) == 6
        d = read_predictions_csv(files[0])
        assert len(d) == 12  # 20% of 60

    def test_zoo_requires_columns(self, tmp_path, feature_csv):
        assert main(["zoo", str(feature_csv), "--out", str(tmp_path / "z")]) == 1


class TestCliMeasure:
    def test_measure_writes_rows(self, tmp_path):
        d = generate_dataset(SyntheticSpec(dataset_index=4, seed=99))
        pred_csv = tmp_path / "preds.csv"
        from fairsense.data import write_predictions_csv

        write_predictions_csv(d, pred_csv)
        out = tmp_path / "report.csv"
        code = main([
            "measure", str(pred_csv), "--cores", "logistic,ridge", "--metrics",
            "independence", "--threshold", "off", "--seed", "3", "--out", str(out),
        ])
        assert code == 0
        rows = read_report_csv(out)
        assert len(rows) == 2
        assert {r.core for r in rows} == {"logistic", "ridge"}
        assert all(r.numeric_value is not None for r in rows)

    def test_measure_parse_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        rows = ["y_true,y_pred,group"] + ["0.0,1.0,0"] * 5 + ["a,b,c"]
        bad.write_text("\n".join(rows) + "\n")
        assert main(["measure", str(bad)]) == 1
        assert "line 7" in capsys.readouterr().err

    def test_measure_validation_abort(self, tmp_path, capsys):
        bad = tmp_path / "nan.csv"
        bad.write_text("y_true,y_pred,group\n1.0,nan,0\n2.0,1.0,1\n")
        assert main(["measure", str(bad)]) == 1
        assert "non-finite y_pred" in capsys.readouterr().err

    def test_measure_partial_failure_exit_code(self, tmp_path, rng):
        # disjoint y_true supports force the separation denominator floor
        true = np.concatenate([rng.normal(0.0, 1, 150), rng.normal(100.0, 1, 50)])
        pred = rng.normal(size=200)
        group = np.concatenate([np.zeros(150, int), np.ones(50, int)])
        d = Dataset.from_arrays(true, pred, group, name="dj")
        pred_csv = tmp_path / "dj.csv"
        from fairsense.data import write_predictions_csv

        write_predictions_csv(d, pred_csv)
        out = tmp_path / "r.csv"
        code = main([
            "measure", str(pred_csv), "--cores", "ulsif_a0", "--metrics",
            "separation", "--seed", "1", "--out", str(out),
        ])
        assert code == 2
        row = read_report_csv(out)[0]
        assert row.value == "undefined:denominator degenerate"

    def test_measure_stdout(self, tmp_path, capsys):
        d = generate_dataset(SyntheticSpec(dataset_index=0, seed=5))
        pred_csv = tmp_path / "p.csv"
        from fairsense.data import write_predictions_csv

        write_predictions_csv(d, pred_csv)
        code = main([
            "measure", str(pred_csv), "--cores", "logistic", "--metrics",
            "independence", "--seed", "1",
        ])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("dataset_id,model_id,metric")
        assert len(lines) == 2


class TestCliSweep:
    def test_sweep_outputs_and_determinism(self, tmp_path):
        synth_dir = tmp_path / "synth"
        main(["synth", "--seed", "21", "--out", str(synth_dir)])
        inputs = [str(synth_dir / f"synth_{i:02d}_0.{i}.csv") for i in range(4)]
        outs = []
        for run in ("r1", "r2"):
            out = tmp_path / run
            code = main([
                "sweep", *inputs, "--cores", "logistic,lasso", "--metrics",
                "independence", "--threshold", "0.99", "--corr", "both",
                "--seed", "13", "--out", str(out), "--no-figures",
            ])
            assert code == 0
            outs.append(out)
        report_a = (outs[0] / "report.csv").read_bytes()
        report_b = (outs[1] / "report.csv").read_bytes()
        assert report_a == report_b
        corr_a = sorted((outs[0] / "correlations").glob("*.csv"))
        corr_b = sorted((outs[1] / "correlations").glob("*.csv"))
        assert [p.name for p in corr_a] == [p.name for p in corr_b]
        for pa, pb in zip(corr_a, corr_b):
            assert pa.read_bytes() == pb.read_bytes()
        assert (outs[0] / "resolved_config.txt").exists()

    def test_sweep_synthetic_subset_with_scatter(self, tmp_path):
        out = tmp_path / "sweep"
        code = main([
            "sweep", "--synthetic", "--datasets", "0-3", "--cores", "logistic,ridge",
            "--metrics", "independence", "--threshold", "off", "--corr", "spearman",
            "--seed", "31", "--out", str(out), "--no-figures",
        ])
        assert code == 0
        scatter = sorted((out / "scatter").glob("*.csv"))
        assert len(scatter) == 1
        lines = scatter[0].read_text().splitlines()
        assert lines[0] == "dataset_id,model_id,x,y"
        assert len(lines) == 5  # one row per dataset
        corr = sorted((out / "correlations").glob("*.csv"))
        assert [p.name for p in corr] == ["corr_independence_I0_thr-off_spearman.csv"]

    def test_sweep_renders_figures(self, tmp_path):
        out = tmp_path / "fig"
        code = main([
            "sweep", "--synthetic", "--datasets", "0-2", "--cores", "logistic,ridge",
            "--metrics", "independence", "--threshold", "off", "--corr", "spearman",
            "--seed", "41", "--out", str(out), "--figures",
        ])
        assert code == 0
        assert list((out / "correlations").glob("*.svg"))
        assert list((out / "scatter").glob("*.svg"))

    def test_sweep_requires_inputs(self, tmp_path, capsys):
        assert main(["sweep", "--out", str(tmp_path / "x")]) == 1

    def test_full_synthetic_sweep_yields_four_interval_matrices(self, tmp_path):
        out = tmp_path / "full"
        code = main([
            "sweep", "--synthetic", "--cores", "logistic,ridge,lasso",
            "--metrics", "independence", "--threshold", "off", "--corr",
            "spearman", "--seed", "19", "--out", str(out), "--no-figures",
        ])
        assert code == 0
        names = sorted(p.name for p in (out / "correlations").glob("*.csv"))
        assert names == [
            f"corr_independence_{g}_thr-off_spearman.csv"
            for g in ("I0", "I1", "I2", "I3")
        ]
        # each matrix holds the 3 unique pairs of the 3 cores
        for name in names:
            lines = (out / "correlations" / name).read_text().splitlines()
            assert len(lines) == 4


class TestCliConfigFile:
    def test_config_file_supplies_defaults_and_flags_override(self, tmp_path):
        d = generate_dataset(SyntheticSpec(dataset_index=2, seed=12))
        pred_csv = tmp_path / "p.csv"
        from fairsense.data import write_predictions_csv

        write_predictions_csv(d, pred_csv)
        config = tmp_path / "run.cfg"
        config.write_text(
            "# measurement defaults\n"
            "cores = logistic,ridge\n"
            "metrics = independence\n"
            "threshold = off\n"
            "seed = 44\n"
        )
        out = tmp_path / "from_config.csv"
        code = main(["measure", str(pred_csv), "--config", str(config),
                     "--out", str(out)])
        assert code == 0
        rows = read_report_csv(out)
        assert {r.core for r in rows} == {"logistic", "ridge"}
        assert all(r.seed == 44 for r in rows)

        out2 = tmp_path / "overridden.csv"
        code = main(["measure", str(pred_csv), "--config", str(config),
                     "--cores", "lasso", "--out", str(out2)])
        assert code == 0
        assert {r.core for r in read_report_csv(out2)} == {"lasso"}

    def test_resolved_config_written(self, tmp_path):
        out = tmp_path / "synth"
        main(["synth", "--seed", "5", "--out", str(out)])
        text = (out / "resolved_config.txt").read_text()
        assert "command = synth" in text and "seed = 5" in text


class TestCliCorrelate:
    def test_round_trip_matches_sweep_tables(self, tmp_path):
        out = tmp_path / "sweep"
        main([
            "sweep", "--synthetic", "--datasets", "0-4", "--cores",
            "logistic,ridge,lasso", "--metrics", "independence", "--threshold",
            "off", "--corr", "spearman", "--seed", "17", "--out", str(out),
            "--no-figures",
        ])
        corr_out = tmp_path / "corr"
        code = main([
            "correlate", str(out / "report.csv"), "--corr", "spearman",
            "--out", str(corr_out), "--no-figures",
        ])
        assert code == 0
        name = "corr_independence_I0_thr-off_spearman.csv"
        assert (corr_out / name).read_bytes() == (out / "correlations" / name).read_bytes()

    def test_correlate_star_annotation(self, tmp_path):
        rows = []
        for core, mult in (("a", 1.0), ("b", 2.0)):
            for i in range(6):
                rows.append(ReportRow(f"d{i}", "-", "independence", core, "off",
                                      repr(mult * (i + 1.0)), 0, "f"))
        report = tmp_path / "report.csv"
        write_report_csv(rows, report)
        out = tmp_path / "c"
        assert main(["correlate", str(report), "--corr", "kendall", "--out",
                     str(out), "--no-figures"]) == 0
        table = (out / "corr_independence_all_thr-off_kendall.csv").read_text().splitlines()
        header = table[0].split(",")
        row = dict(zip(header, table[1].split(",")))
        assert row["coefficient"] == "1.0"
        assert row["significant"] == "*"
        assert row["n_effective"] == "6"
