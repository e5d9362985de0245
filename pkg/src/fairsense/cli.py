"""Batch command-line front end.

Subcommands: ``synth`` (generate the synthetic suite), ``zoo`` (fit the
built-in regressors and emit prediction files), ``measure`` (fairness values
for one prediction file), ``sweep`` (full sensitivity run with correlation
tables, scatter data, and figures), and ``correlate`` (correlation tables
from an existing report).

Settings resolve in order: built-in defaults, then a flat ``key = value``
config file (``--config``), then command-line flags. Every directory-writing
run stores the resolved settings next to its outputs.

Exit codes: 0 success, 1 validation/parse failure, 2 partial failures present
(the report is still written).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .data import (
    Dataset,
    MetricKind,
    read_predictions_csv,
    validate_dataset,
    write_predictions_csv,
)
from .errors import FairsenseError, ParseError
from .metrics import ThresholdPolicy
from .report import (
    DEFAULT_ALPHAS,
    SweepConfig,
    SweepInput,
    correlation_tables,
    expand_cores,
    read_report_csv,
    run_cells,
    run_sweep,
    table_filename,
    write_correlation_csv,
    write_report_csv,
)
from . import plots
from .synthetic import generate_suite, interval_of
from .zoo import DEFAULT_ZOO, read_feature_table, train_test_split, zoo_dataset

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARTIAL = 2


class _Parser(argparse.ArgumentParser):
    # usage errors map to the validation exit code
    def error(self, message):
        self.exit(EXIT_FAILURE, f"{self.prog}: error: {message}\n")


def load_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` settings; '#' starts a comment."""
    settings: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", line=lineno)
        key, value = line.split("=", 1)
        settings[key.strip().replace("-", "_")] = value.strip()
    return settings


class Settings:
    """Defaults < config file < command-line flags."""

    def __init__(self, args):
        self.args = args
        self.file = load_config_file(args.config) if getattr(args, "config", None) else {}
        self.resolved: dict[str, str] = {}

    def get(self, key: str, default, cast=str):
        cli = getattr(self.args, key, None)
        if cli is not None:
            value = cli
        elif key in self.file:
            value = cast(self.file[key])
        else:
            value = default
        self.resolved[key] = str(value)
        return value

    def write_resolved(self, out_dir: Path, command: str) -> None:
        lines = [f"command = {command}"]
        lines += [f"{k} = {self.resolved[k]}" for k in sorted(self.resolved)]
        (out_dir / "resolved_config.txt").write_text("\n".join(lines) + "\n", "utf-8")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_threshold(text: str) -> ThresholdPolicy:
    if text.strip().lower() == "off":
        return ThresholdPolicy.off()
    return ThresholdPolicy.at(float(text))


def parse_metrics(text: str) -> tuple[MetricKind, ...]:
    if text.strip() == "all":
        return tuple(MetricKind)
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            out.append(MetricKind(token))
        except ValueError:
            raise ValueError(f"unknown metric {token!r}") from None
    if not out:
        raise ValueError("no metrics selected")
    return tuple(out)


def parse_alphas(text: str) -> tuple[float, ...]:
    alphas = tuple(float(t) for t in text.split(",") if t.strip())
    if not alphas:
        raise ValueError("no alpha values given")
    return alphas


def parse_corr_methods(text: str) -> tuple[str, ...]:
    token = text.strip().lower()
    if token == "both":
        return ("spearman", "kendall")
    if token in ("spearman", "kendall"):
        return (token,)
    raise ValueError(f"unknown correlation method {text!r}")


def parse_index_set(text: str, limit: int = 40) -> tuple[int, ...]:
    """'0-9,30-39' or '0,1,2' style index selections."""
    picked: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "-" in token:
            lo, hi = token.split("-", 1)
            picked.extend(range(int(lo), int(hi) + 1))
        else:
            picked.append(int(token))
    out = sorted(set(picked))
    if not out or out[0] < 0 or out[-1] >= limit:
        raise ValueError(f"dataset indices must lie in [0, {limit})")
    return tuple(out)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    settings = Settings(args)
    seed = settings.get("seed", 0, int)
    out_dir = Path(settings.get("out", "synthetic"))
    out_dir.mkdir(parents=True, exist_ok=True)
    suite = generate_suite(seed)
    manifest = ["index,mu,seed,interval,filename"]
    for spec, dataset in suite:
        write_predictions_csv(dataset, out_dir / spec.filename)
        manifest.append(
            f"{spec.dataset_index},{spec.privileged_mean:.1f},{spec.seed},"
            f"{interval_of(spec).name},{spec.filename}"
        )
    (out_dir / "manifest.csv").write_text("\n".join(manifest) + "\n", "utf-8")
    settings.write_resolved(out_dir, "synth")
    print(f"wrote {len(suite)} datasets and manifest.csv to {out_dir}")
    return EXIT_OK


def cmd_zoo(args) -> int:
    settings = Settings(args)
    seed = settings.get("seed", 0, int)
    split = settings.get("split", 0.8, float)
    target_col = settings.get("target_col", None)
    group_col = settings.get("group_col", None)
    if not target_col or not group_col:
        print("zoo requires --target-col and --group-col", file=sys.stderr)
        return EXIT_FAILURE
    out_dir = Path(settings.get("out", "zoo_predictions"))
    table = read_feature_table(args.table, target_col, group_col)
    train, test = train_test_split(table, split, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    for kind in DEFAULT_ZOO:
        dataset = zoo_dataset(kind, train, test)
        report = validate_dataset(dataset)
        if not report.valid:
            print(f"{dataset.name}: {'; '.join(report.violations)}", file=sys.stderr)
            return EXIT_FAILURE
        write_predictions_csv(dataset, out_dir / f"{dataset.name}.csv")
        print(f"wrote {dataset.name}.csv ({len(dataset)} rows)")
    settings.write_resolved(out_dir, "zoo")
    return EXIT_OK


def _measure_rows(dataset: Dataset, dataset_id: str, settings: Settings):
    alphas = parse_alphas(settings.get("alpha", ",".join(str(a) for a in DEFAULT_ALPHAS)))
    cores = expand_cores(settings.get("cores", "all").split(","), alphas)
    metrics = parse_metrics(settings.get("metrics", "all"))
    policy = parse_threshold(settings.get("threshold", "off"))
    seed = settings.get("seed", 0, int)
    config = SweepConfig(
        cores=cores, metrics=metrics, threshold=policy,
        seed=seed, output_dir=None, figures=False,
        classifier_lambda=settings.get("classifier_lambda", 1e-3, float),
        ratio_centers=settings.get("ratio_centers", 100, int),
        jobs=settings.get("jobs", 1, int),
    )
    rows = run_cells(
        [SweepInput(dataset=dataset, dataset_id=dataset_id)], config,
        policies=(policy,),
    )
    return rows


def cmd_measure(args) -> int:
    settings = Settings(args)
    dataset = read_predictions_csv(args.predictions)
    report = validate_dataset(dataset)
    if not report.valid:
        for violation in report.violations:
            print(f"validation: {violation}", file=sys.stderr)
        return EXIT_FAILURE
    rows = _measure_rows(dataset, Path(args.predictions).stem, settings)
    out = settings.get("out", "")
    if out:
        path = Path(out)
        write_report_csv(rows, path)
        config_copy = path.parent / f"{path.stem}_config.txt"
        config_copy.write_text(
            "\n".join(f"{k} = {v}" for k, v in sorted(settings.resolved.items())) + "\n",
            "utf-8",
        )
        print(f"wrote {len(rows)} rows to {path}")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(
            ("dataset_id", "model_id", "metric", "core", "threshold",
             "value", "seed", "fingerprint"))
        for row in rows:
            writer.writerow((row.dataset_id, row.model_id, row.metric, row.core,
                             row.threshold, row.value, row.seed, row.fingerprint))
    partial = any(row.numeric_value is None for row in rows)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_sweep(args) -> int:
    settings = Settings(args)
    seed = settings.get("seed", 0, int)
    alphas = parse_alphas(settings.get("alpha", ",".join(str(a) for a in DEFAULT_ALPHAS)))
    cores = expand_cores(settings.get("cores", "all").split(","), alphas)
    metrics = parse_metrics(settings.get("metrics", "all"))
    threshold = parse_threshold(settings.get("threshold", "0.99"))
    methods = parse_corr_methods(settings.get("corr", "both"))
    figures = settings.get("figures", True, _parse_bool)
    out_value = settings.get("out", "")
    if not out_value:
        print("sweep requires --out", file=sys.stderr)
        return EXIT_FAILURE
    out_dir = Path(out_value)

    synthetic = settings.get("synthetic", False, _parse_bool)
    inputs: list[SweepInput] = []
    if synthetic:
        indices = parse_index_set(settings.get("datasets", "0-39"))
        suite = generate_suite(seed)
        for spec, dataset in suite:
            if spec.dataset_index in indices:
                inputs.append(SweepInput(dataset=dataset, dataset_id=dataset.name))
    elif args.inputs:
        settings.resolved["inputs"] = ",".join(str(p) for p in args.inputs)
        for path in args.inputs:
            dataset = read_predictions_csv(path)
            report = validate_dataset(dataset)
            if not report.valid:
                for violation in report.violations:
                    print(f"{path}: validation: {violation}", file=sys.stderr)
                return EXIT_FAILURE
            inputs.append(SweepInput(dataset=dataset, dataset_id=dataset.name))
    else:
        print("sweep needs prediction files or --synthetic", file=sys.stderr)
        return EXIT_FAILURE

    config = SweepConfig(
        cores=cores, metrics=metrics, threshold=threshold,
        correlation_methods=methods, seed=seed, output_dir=out_dir, figures=figures,
        classifier_lambda=settings.get("classifier_lambda", 1e-3, float),
        ratio_centers=settings.get("ratio_centers", 100, int),
        jobs=settings.get("jobs", 1, int),
    )
    result = run_sweep(inputs, config)
    settings.write_resolved(out_dir, "sweep")
    print(f"report: {result.report_path} ({len(result.rows)} rows)")
    print(f"correlation tables: {len(result.correlation_paths)}, "
          f"scatter files: {len(result.scatter_paths)}, "
          f"figures: {len(result.figure_paths)}")
    if result.partial_failures:
        undefined = sum(1 for r in result.rows if r.numeric_value is None)
        print(f"partial failures: {undefined} undefined cells", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_correlate(args) -> int:
    settings = Settings(args)
    methods = parse_corr_methods(settings.get("corr", "spearman"))
    figures = settings.get("figures", True, _parse_bool)
    out_dir = Path(settings.get("out", "correlations"))
    rows = read_report_csv(args.report)
    tables = correlation_tables(rows, methods)
    if not tables:
        print("report has fewer than two cores to correlate", file=sys.stderr)
        return EXIT_FAILURE
    out_dir.mkdir(parents=True, exist_ok=True)
    for table in tables:
        path = write_correlation_csv(table, out_dir / table_filename(table))
        print(f"wrote {path}")
        if figures:
            fig_path = out_dir / table_filename(table).replace(".csv", f".{plots.FIGURE_FORMAT}")
            title = f"{table.metric} {table.group} thr-{table.threshold} {table.method}"
            plots.save_correlation_heatmap(table.cores, table.matrix(), title, fig_path)
    settings.write_resolved(out_dir, "correlate")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairsense",
                     description="Fairness measurement for regression with "
                                 "interchangeable density-ratio estimation cores.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="base RNG seed")
        p.add_argument("--config", default=None, help="flat key=value settings file")
        p.add_argument("--out", default=None, help="output file or directory")

    p_synth = sub.add_parser("synth", help="generate the 40-dataset synthetic suite")
    common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_zoo = sub.add_parser("zoo", help="fit the built-in regressors on a feature table")
    p_zoo.add_argument("table", help="feature CSV with target and group columns")
    p_zoo.add_argument("--target-col", dest="target_col", default=None)
    p_zoo.add_argument("--group-col", dest="group_col", default=None)
    p_zoo.add_argument("--split", type=float, default=None, help="train fraction (default 0.8)")
    common(p_zoo)
    p_zoo.set_defaults(func=cmd_zoo)

    p_measure = sub.add_parser("measure", help="fairness values for one prediction file")
    p_measure.add_argument("predictions", help="CSV with header y_true,y_pred,group")
    p_measure.add_argument("--cores", default=None, help="comma list or 'all'")
    p_measure.add_argument("--metrics", default=None, help="comma list or 'all'")
    p_measure.add_argument("--threshold", default=None, help="clamp value or 'off'")
    p_measure.add_argument("--alpha", default=None, help="comma list of ulsif alphas")
    p_measure.add_argument("--jobs", type=int, default=None)
    common(p_measure)
    p_measure.set_defaults(func=cmd_measure)

    p_sweep = sub.add_parser("sweep", help="full sensitivity sweep with reports and figures")
    p_sweep.add_argument("inputs", nargs="*", help="prediction CSV files")
    p_sweep.add_argument("--synthetic", action="store_true", default=None,
                         help="sweep the built-in synthetic suite")
    p_sweep.add_argument("--datasets", default=None,
                         help="synthetic index selection, e.g. '0-9,30-39'")
    p_sweep.add_argument("--cores", default=None, help="comma list or 'all'")
    p_sweep.add_argument("--metrics", default=None, help="comma list or 'all'")
    p_sweep.add_argument("--threshold", default=None,
                         help="clamp value (emits off and clamped variants) or 'off'")
    p_sweep.add_argument("--alpha", default=None, help="comma list of ulsif alphas")
    p_sweep.add_argument("--corr", default=None, help="spearman, kendall, or both")
    p_sweep.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    p_sweep.add_argument("--jobs", type=int, default=None)
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_corr = sub.add_parser("correlate", help="correlation tables from a report CSV")
    p_corr.add_argument("report", help="report CSV produced by measure/sweep")
    p_corr.add_argument("--corr", default=None, help="spearman, kendall, or both")
    p_corr.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    common(p_corr)
    p_corr.set_defaults(func=cmd_correlate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except FairsenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
