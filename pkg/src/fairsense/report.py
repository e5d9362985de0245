"""Batch measurement engine: report rows, sweeps, and correlation tables.

The single interchange format is a long-format CSV with header

    dataset_id,model_id,metric,core,threshold,value,seed,fingerprint

where ``value`` is either ``repr`` of a float or ``undefined:<reason>``.
Correlation tables and scatter files are derived from report rows alone, so
every downstream number can be reproduced from the report. All outputs are
written in deterministic sorted order; two runs with the same config and seed
produce byte-identical CSVs.
"""

from __future__ import annotations

import csv
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics as fm
from . import plots
from .classifiers import ClassifierKind, TrainConfig
from .correlation import CorrelationResult, correlate
from .data import Dataset, MetricKind
from .errors import DegenerateInput, FairsenseError, InsufficientData, ParseError
from .metrics import FairnessEstimate, MetricOutcome, ThresholdPolicy
from .ratio_matching import RatioCoreConfig
from .synthetic import MeanInterval

REPORT_HEADER = (
    "dataset_id", "model_id", "metric", "core", "threshold",
    "value", "seed", "fingerprint",
)

CORRELATION_HEADER = (
    "metric", "threshold", "group", "method", "core_a", "core_b",
    "n_effective", "coefficient", "p_value", "significant",
)

SCATTER_HEADER = ("dataset_id", "model_id", "x", "y")

CLASSIFIER_CORES = tuple(kind.value for kind in ClassifierKind)
DEFAULT_ALPHAS = (0.25, 0.5, 0.75, 1.0)
DEFAULT_CORES = CLASSIFIER_CORES + ("lsif",) + tuple(
    fm.ratio_core_label("ulsif", a) for a in DEFAULT_ALPHAS
)

_SYNTH_ID = re.compile(r"^synth_(\d+)_")


@dataclass(frozen=True)
class ReportRow:
    dataset_id: str
    model_id: str
    metric: str
    core: str
    threshold: str
    value: str
    seed: int
    fingerprint: str

    @property
    def numeric_value(self) -> float | None:
        if self.value.startswith("undefined:"):
            return None
        return float(self.value)

    @property
    def undefined_reason(self) -> str | None:
        if self.value.startswith("undefined:"):
            return self.value[len("undefined:"):]
        return None

    def sort_key(self):
        return (self.dataset_id, self.model_id, self.metric, self.core, self.threshold)


def format_outcome(outcome: MetricOutcome) -> str:
    if outcome.defined:
        return repr(outcome.value)
    return f"undefined:{outcome.reason}"


# ---------------------------------------------------------------------------
# core-name handling
# ---------------------------------------------------------------------------

def expand_cores(tokens, alphas=DEFAULT_ALPHAS) -> tuple[str, ...]:
    """Expand core tokens: 'all', classifier names, 'lsif', 'ulsif' (one core
    per alpha), or explicit 'ulsif_a<value>' labels."""
    out: list[str] = []
    for token in tokens:
        token = token.strip()
        if not token:
            continue
        if token == "all":
            out.extend(expand_cores(CLASSIFIER_CORES + ("lsif", "ulsif"), alphas))
        elif token in CLASSIFIER_CORES or token == "lsif":
            out.append(token)
        elif token == "ulsif":
            out.extend(fm.ratio_core_label("ulsif", a) for a in alphas)
        elif token.startswith("ulsif_a"):
            alpha = float(token[len("ulsif_a"):])
            out.append(fm.ratio_core_label("ulsif", alpha))
        else:
            raise ValueError(f"unknown core {token!r}")
    seen: list[str] = []
    for core in out:
        if core not in seen:
            seen.append(core)
    return tuple(seen)


def parse_core(core: str):
    """Split a core label into ('classifier', kind) or ('ratio', method, alpha)."""
    for kind in ClassifierKind:
        if core == kind.value:
            return ("classifier", kind)
    if core == "lsif":
        return ("ratio", "lsif", 0.0)
    if core.startswith("ulsif_a"):
        return ("ratio", "ulsif", float(core[len("ulsif_a"):]))
    raise ValueError(f"unknown core {core!r}")


# ---------------------------------------------------------------------------
# sweep configuration and execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    cores: tuple[str, ...] = DEFAULT_CORES
    metrics: tuple[MetricKind, ...] = tuple(MetricKind)
    threshold: ThresholdPolicy = ThresholdPolicy.at(0.99)
    correlation_methods: tuple[str, ...] = ("spearman", "kendall")
    seed: int = 0
    output_dir: Path | None = None
    figures: bool = True
    classifier_lambda: float = 1e-3
    ratio_centers: int = 100
    jobs: int = 1

    def __post_init__(self):
        if not self.cores or not self.metrics:
            raise ValueError("cores and metrics must be non-empty")

    @property
    def policies(self) -> tuple[ThresholdPolicy, ...]:
        """Threshold variants a sweep emits: 'off' plus the clamp when enabled."""
        if self.threshold.enabled:
            return (ThresholdPolicy.off(), self.threshold)
        return (ThresholdPolicy.off(),)

    def train_config(self) -> TrainConfig:
        return TrainConfig(lam=self.classifier_lambda, seed=self.seed)

    def ratio_config(self, alpha: float) -> RatioCoreConfig:
        return RatioCoreConfig(alpha=alpha, n_centers=self.ratio_centers, seed=self.seed)


def _failed_estimates(metric, core, policies, reason) -> list[tuple[str, FairnessEstimate]]:
    est = FairnessEstimate(
        metric=metric, core=core,
        outcome=MetricOutcome.undefined(reason),
        config_fingerprint=fm.fingerprint(metric=metric.value, core=core, failed=reason),
    )
    return [(policy.label, est) for policy in policies]


def compute_cell(dataset: Dataset, metric: MetricKind, core: str,
                 policies: tuple[ThresholdPolicy, ...], config: SweepConfig
                 ) -> list[tuple[str, FairnessEstimate]]:
    """All threshold variants of one (dataset, metric, core) cell.

    Classifier cores share a single fit across the variants; ratio cores
    ignore the policy entirely, so their estimate is reused. Failures become
    undefined estimates rather than aborting the sweep.
    """
    parsed = parse_core(core)
    try:
        if parsed[0] == "classifier":
            kind = parsed[1]
            cfg = config.train_config()
            if metric is MetricKind.INDEPENDENCE:
                ests = fm.classifier_independence_estimates(dataset, kind, policies, cfg)
            else:
                ests = fm.classifier_conditional_estimates(dataset, metric, kind, policies, cfg)
            return [(policy.label, est) for policy, est in zip(policies, ests)]
        _, method, alpha = parsed
        cfg = config.ratio_config(alpha)
        if metric is MetricKind.INDEPENDENCE:
            est = fm.independence_via_ratio_core(dataset, method, cfg)
        else:
            est = fm.conditional_via_ratio_core(dataset, metric, method, cfg)
        return [(policy.label, est) for policy in policies]
    except FairsenseError as exc:
        return _failed_estimates(metric, core, policies, str(exc))


@dataclass(frozen=True)
class SweepInput:
    dataset: Dataset
    dataset_id: str
    model_id: str = "-"


def run_cells(inputs: list[SweepInput], config: SweepConfig,
              policies: tuple[ThresholdPolicy, ...] | None = None) -> list[ReportRow]:
    """Evaluate every (input x metric x core) cell and return sorted rows."""
    policies = config.policies if policies is None else policies
    tasks = [
        (item, metric, core)
        for item in inputs
        for metric in config.metrics
        for core in config.cores
    ]

    def run(task):
        item, metric, core = task
        variants = compute_cell(item.dataset, metric, core, policies, config)
        return [
            ReportRow(
                dataset_id=item.dataset_id,
                model_id=item.model_id,
                metric=metric.value,
                core=core,
                threshold=label,
                value=format_outcome(est.outcome),
                seed=config.seed,
                fingerprint=est.config_fingerprint,
            )
            for label, est in variants
        ]

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(run, tasks))
    else:
        chunks = [run(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=ReportRow.sort_key)
    return rows


# ---------------------------------------------------------------------------
# report CSV I/O
# ---------------------------------------------------------------------------

def write_report_csv(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for row in rows:
            writer.writerow([
                row.dataset_id, row.model_id, row.metric, row.core,
                row.threshold, row.value, row.seed, row.fingerprint,
            ])
    return path


def read_report_csv(path) -> list[ReportRow]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ParseError("empty report", line=1) from None
        if header != REPORT_HEADER:
            raise ParseError(f"unexpected report header {header}", line=1)
        rows = []
        for lineno, parts in enumerate(reader, start=2):
            if len(parts) != len(REPORT_HEADER):
                raise ParseError(f"expected {len(REPORT_HEADER)} fields", line=lineno)
            try:
                seed = int(parts[6])
            except ValueError:
                raise ParseError(f"bad seed {parts[6]!r}", line=lineno) from None
            row = ReportRow(
                dataset_id=parts[0], model_id=parts[1], metric=parts[2],
                core=parts[3], threshold=parts[4], value=parts[5],
                seed=seed, fingerprint=parts[7],
            )
            if row.numeric_value is None and row.undefined_reason is None:
                raise ParseError(f"bad value {parts[5]!r}", line=lineno)
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# correlation tables derived from report rows
# ---------------------------------------------------------------------------

def dataset_group_label(dataset_id: str) -> str:
    """Synthetic suite members group by mean interval; everything else is 'all'."""
    m = _SYNTH_ID.match(dataset_id)
    if m:
        index = int(m.group(1))
        if 0 <= index < 40:
            return list(MeanInterval)[index // 10].name
    return "all"


@dataclass(frozen=True)
class CorrelationCell:
    core_a: str
    core_b: str
    n_effective: int
    result: CorrelationResult | None  # None renders as nan


@dataclass(frozen=True)
class CorrelationTable:
    metric: str
    threshold: str
    group: str
    method: str
    cores: tuple[str, ...]
    cells: tuple[CorrelationCell, ...]

    def cell(self, a: str, b: str) -> CorrelationCell | None:
        for c in self.cells:
            if {c.core_a, c.core_b} == {a, b}:
                return c
        return None

    def mean_coefficient(self) -> float:
        vals = [c.result.coefficient for c in self.cells if c.result is not None]
        return float(np.mean(vals)) if vals else float("nan")

    def matrix(self) -> np.ndarray:
        k = len(self.cores)
        out = np.full((k, k), np.nan)
        idx = {c: i for i, c in enumerate(self.cores)}
        for c in self.cells:
            if c.result is not None:
                out[idx[c.core_a], idx[c.core_b]] = c.result.coefficient
                out[idx[c.core_b], idx[c.core_a]] = c.result.coefficient
        return out


def _collect_values(rows):
    """Nested map: (metric, threshold, group) -> core -> key -> value/None."""
    grouped: dict[tuple[str, str, str], dict[str, dict[tuple[str, str], float | None]]] = {}
    for row in rows:
        bucket = grouped.setdefault(
            (row.metric, row.threshold, dataset_group_label(row.dataset_id)), {}
        )
        bucket.setdefault(row.core, {})[(row.dataset_id, row.model_id)] = row.numeric_value
    return grouped


def correlation_tables(rows, methods) -> list[CorrelationTable]:
    """Pairwise correlation of core outputs over shared defined keys.

    Undefined cells are removed pairwise: a key is dropped only for the pairs
    it is undefined for; the effective n is reported per pair. Pairs with
    fewer than 3 shared defined values, or with a constant value vector,
    render as nan.
    """
    grouped = _collect_values(rows)
    tables = []
    for (metric, threshold, group) in sorted(grouped):
        by_core = grouped[(metric, threshold, group)]
        cores = tuple(sorted(by_core))
        if len(cores) < 2:
            continue
        for method in methods:
            cells = []
            for i, a in enumerate(cores):
                for b in cores[i + 1:]:
                    shared = sorted(
                        k for k in by_core[a]
                        if by_core[a].get(k) is not None and by_core[b].get(k) is not None
                    )
                    xs = np.array([by_core[a][k] for k in shared])
                    ys = np.array([by_core[b][k] for k in shared])
                    try:
                        result = correlate(xs, ys, method)
                    except (InsufficientData, DegenerateInput):
                        result = None
                    cells.append(CorrelationCell(a, b, len(shared), result))
            tables.append(CorrelationTable(
                metric=metric, threshold=threshold, group=group, method=method,
                cores=cores, cells=tuple(cells),
            ))
    return tables


def table_filename(table: CorrelationTable) -> str:
    return f"corr_{table.metric}_{table.group}_thr-{table.threshold}_{table.method}.csv"


def write_correlation_csv(table: CorrelationTable, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CORRELATION_HEADER)
        for c in table.cells:
            if c.result is None:
                coeff, p, star = "nan", "nan", ""
            else:
                coeff = repr(c.result.coefficient)
                p = repr(c.result.p_value)
                star = "*" if c.result.significant else ""
            writer.writerow([
                table.metric, table.threshold, table.group, table.method,
                c.core_a, c.core_b, c.n_effective, coeff, p, star,
            ])
    return path


def scatter_points(rows, metric: str, threshold: str, group: str,
                   core_a: str, core_b: str):
    """Shared-key value pairs for one scatter: one row per dataset/model."""
    grouped = _collect_values(rows)
    by_core = grouped.get((metric, threshold, group), {})
    a_vals = by_core.get(core_a, {})
    b_vals = by_core.get(core_b, {})
    keys = sorted(
        k for k in a_vals if a_vals.get(k) is not None and b_vals.get(k) is not None
    )
    return [(k[0], k[1], a_vals[k], b_vals[k]) for k in keys]


def write_scatter_csv(points, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCATTER_HEADER)
        for dataset_id, model_id, x, y in points:
            writer.writerow([dataset_id, model_id, repr(x), repr(y)])
    return path


# ---------------------------------------------------------------------------
# full sweep output
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    rows: tuple[ReportRow, ...]
    report_path: Path
    correlation_paths: tuple[Path, ...]
    scatter_paths: tuple[Path, ...]
    figure_paths: tuple[Path, ...]

    @property
    def partial_failures(self) -> bool:
        return any(row.numeric_value is None for row in self.rows)


def emit_outputs(rows, config: SweepConfig) -> SweepResult:
    """Write the report, correlation tables, scatter data, and figures."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = write_report_csv(rows, out_dir / "report.csv")

    tables = correlation_tables(rows, config.correlation_methods)
    corr_dir = out_dir / "correlations"
    corr_paths = []
    figure_paths = []
    for table in tables:
        corr_paths.append(write_correlation_csv(table, corr_dir / table_filename(table)))
        if config.figures:
            fig_path = corr_dir / table_filename(table).replace(
                ".csv", f".{plots.FIGURE_FORMAT}"
            )
            title = f"{table.metric} {table.group} thr-{table.threshold} {table.method}"
            figure_paths.append(
                plots.save_correlation_heatmap(table.cores, table.matrix(), title, fig_path)
            )

    scatter_dir = out_dir / "scatter"
    scatter_paths = []
    seen: set[tuple[str, str, str, str, str]] = set()
    for table in tables:
        for cell in table.cells:
            key = (table.metric, table.threshold, table.group, cell.core_a, cell.core_b)
            if key in seen:
                continue
            seen.add(key)
            points = scatter_points(rows, *key)
            if not points:
                continue
            stem = (
                f"scatter_{table.metric}_{table.group}_thr-{table.threshold}"
                f"_{cell.core_a}__vs__{cell.core_b}"
            )
            scatter_paths.append(write_scatter_csv(points, scatter_dir / f"{stem}.csv"))
            if config.figures:
                title = f"{table.metric} {table.group} thr-{table.threshold}"
                figure_paths.append(plots.save_scatter(
                    [p[2] for p in points], [p[3] for p in points],
                    cell.core_a, cell.core_b, title,
                    scatter_dir / f"{stem}.{plots.FIGURE_FORMAT}",
                ))

    return SweepResult(
        rows=tuple(rows),
        report_path=report_path,
        correlation_paths=tuple(corr_paths),
        scatter_paths=tuple(scatter_paths),
        figure_paths=tuple(figure_paths),
    )


def run_sweep(inputs: list[SweepInput], config: SweepConfig) -> SweepResult:
    rows = run_cells(inputs, config)
    return emit_outputs(rows, config)
