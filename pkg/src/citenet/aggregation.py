"""Collapse per-author centrality scores into per-paper features.

Aggregation kinds: positional picks (first/last), statistics
(ave/sum/max/min/std), and exponentially weighted forms (w_ave/w_sum) with
weight e^{-tau*i} for author position i counted from 0, so the first author
has weight 1 and consecutive authors keep the ratio e^{-tau}.

Feature columns are named `<Metric>.<Suffix>` with an optional `.d` for
the short-window-minus-long-window temporal difference, e.g. HCTCD.W.Sum,
Closeness.1st, Degree.Sum.d, HCTCD.Max.Ind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .centrality import METRIC_NAMES, CentralityTable
from .corpus import Corpus, PaperRecord, PercentileTable

AGG_KINDS = ("first", "last", "ave", "sum", "max", "min", "std", "w_ave", "w_sum")
MISSING_POLICIES = ("zero", "skip")

KIND_SUFFIX = {
    "first": "1st",
    "last": "Last",
    "ave": "Ave",
    "sum": "Sum",
    "max": "Max",
    "min": "Min",
    "std": "Std",
    "w_ave": "W.Ave",
    "w_sum": "W.Sum",
}
SUFFIX_KIND = {v: k for k, v in KIND_SUFFIX.items()}

INDICATOR_SUFFIXES = {
    "Max.Ind": "indicator",
    "1st.Int": "ind_first",
    "Max.Int": "ind_max",
}

CONTROL_NAMES = ("Const", "YearToNow", "ICLR", "ICML", "N.Author", "Len.Abs", "Len.Title")
CONTENT_NAME = "Model"
VENUE_DUMMIES = ("ICLR", "ICML")
REFERENCE_VENUE = "NeurIPS"


class AggregationError(ValueError):
    """Invalid aggregation specs, feature names, or missing inputs."""


@dataclass(frozen=True)
class AggregationSpec:
    """One reduction over an ordered author list."""

    kind: str
    tau: float = 0.3
    missing_author_policy: str = "zero"

    def __post_init__(self):
        if self.kind not in AGG_KINDS:
            raise AggregationError(f"unknown aggregation kind {self.kind!r}")
        if not isinstance(self.tau, (int, float)) or not math.isfinite(self.tau):
            raise AggregationError(f"tau must be finite, got {self.tau!r}")
        if self.tau < 0:
            raise AggregationError(f"tau must be >= 0, got {self.tau!r}")
        if self.missing_author_policy not in MISSING_POLICIES:
            raise AggregationError(
                f"missing_author_policy must be one of {MISSING_POLICIES}, "
                f"got {self.missing_author_policy!r}"
            )


def _author_values(
    table: CentralityTable, paper: PaperRecord, policy: str
) -> tuple[list[float], list[int]]:
    """Ordered scores plus the original author positions that survived."""
    if policy == "zero":
        return [table.score(a, default=0.0) for a in paper.authors], list(
            range(len(paper.authors))
        )
    values = []
    positions = []
    for i, a in enumerate(paper.authors):
        if a in table.scores:
            values.append(table.scores[a])
            positions.append(i)
    if not values:
        raise AggregationError(
            f"paper {paper.paper_id}: no author present in the centrality table "
            "under missing_author_policy=skip"
        )
    return values, positions


def aggregate(table: CentralityTable, paper: PaperRecord, spec: AggregationSpec) -> float:
    """Reduce the paper's ordered author scores to a single feature value.

    Weighted kinds keep each author's original position index even when
    missing authors are skipped, so a surviving third author still carries
    weight e^{-2*tau}.
    """
    values, positions = _author_values(table, paper, spec.missing_author_policy)
    kind = spec.kind
    if kind == "first":
        return values[0]
    if kind == "last":
        return values[-1]
    if kind == "sum":
        return sum(values)
    if kind == "ave":
        return sum(values) / len(values)
    if kind == "max":
        return max(values)
    if kind == "min":
        return min(values)
    if kind == "std":
        mean = sum(values) / len(values)
        return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    weights = [math.exp(-spec.tau * i) for i in positions]
    weighted = sum(w * v for w, v in zip(weights, values))
    if kind == "w_sum":
        return weighted
    return weighted / sum(weights)


def temporal_difference(
    table_short: CentralityTable,
    table_long: CentralityTable,
    paper: PaperRecord,
    spec: AggregationSpec,
) -> float:
    """Aggregate on the short window minus aggregate on the long window."""
    if table_short.metric != table_long.metric:
        raise AggregationError(
            f"metric mismatch: {table_short.metric!r} vs {table_long.metric!r}"
        )
    if table_short.reference_year != table_long.reference_year:
        raise AggregationError(
            f"reference year mismatch: {table_short.reference_year} "
            f"vs {table_long.reference_year}"
        )
    return aggregate(table_short, paper, spec) - aggregate(table_long, paper, spec)


def high_centrality_indicator(
    table: CentralityTable,
    paper: PaperRecord,
    threshold: float = 0.5,
    missing_author_policy: str = "zero",
) -> tuple[int, float, float]:
    """Flag papers whose best co-author clearly outranks the first author.

    Returns (indicator, indicator*first, indicator*max) where the indicator
    is 1 iff max score > (1 + threshold) * first-author score, strictly.
    """
    if threshold < 0:
        raise AggregationError(f"threshold must be >= 0, got {threshold!r}")
    values, _ = _author_values(table, paper, missing_author_policy)
    first = values[0]
    peak = max(values)
    indicator = 1 if peak > (1.0 + threshold) * first else 0
    return indicator, indicator * first, indicator * peak


def parse_feature_name(name: str) -> tuple[str, str, bool]:
    """Split `Metric.Suffix[.d]` into (metric, kind, is_difference)."""
    parts = name.split(".")
    if len(parts) < 2:
        raise AggregationError(f"unknown feature name {name!r}")
    metric = parts[0]
    if metric not in METRIC_NAMES:
        raise AggregationError(f"unknown metric in feature name {name!r}")
    rest = parts[1:]
    difference = False
    if rest and rest[-1] == "d":
        difference = True
        rest = rest[:-1]
    suffix = ".".join(rest)
    if suffix in SUFFIX_KIND:
        return metric, SUFFIX_KIND[suffix], difference
    if suffix in INDICATOR_SUFFIXES:
        if difference:
            raise AggregationError(f"indicator feature {name!r} cannot take .d")
        return metric, INDICATOR_SUFFIXES[suffix], False
    raise AggregationError(f"unknown feature name {name!r}")


def feature_name(metric: str, kind: str, difference: bool = False) -> str:
    for suffix, k in SUFFIX_KIND.items():
        if k == kind:
            return f"{metric}.{suffix}" + (".d" if difference else "")
    for suffix, k in INDICATOR_SUFFIXES.items():
        if k == kind:
            return f"{metric}.{suffix}"
    raise AggregationError(f"unknown aggregation kind {kind!r}")


@dataclass(frozen=True)
class FeaturePlan:
    """Which columns a design matrix carries and how they are computed."""

    centrality_columns: tuple[str, ...] = ()
    include_content: bool = False
    window_len: int = 8
    short_window: int = 2
    tau: float = 0.3
    indicator_threshold: float = 0.5
    missing_author_policy: str = "zero"
    response: str = "squeezed"
    now_year: int | None = None

    def __post_init__(self):
        if self.response not in ("squeezed", "raw"):
            raise AggregationError(f"response must be squeezed or raw: {self.response!r}")
        if self.short_window >= self.window_len:
            raise AggregationError(
                f"short_window {self.short_window} must be < window_len {self.window_len}"
            )
        for name in self.centrality_columns:
            parse_feature_name(name)
        if len(set(self.centrality_columns)) != len(self.centrality_columns):
            raise AggregationError("duplicate centrality feature names in plan")

    def column_names(self) -> list[str]:
        names = list(CONTROL_NAMES)
        if self.include_content:
            names.append(CONTENT_NAME)
        names.extend(self.centrality_columns)
        return names

    def response_name(self) -> str:
        return "pcite_squeezed" if self.response == "squeezed" else "pcite"


class CentralitySet:
    """Tables keyed by (reference_year, metric, window_len)."""

    def __init__(self):
        self._tables: dict[tuple[int, str, int], CentralityTable] = {}

    def add(self, table: CentralityTable) -> None:
        key = (table.reference_year, table.metric, table.window_len)
        if key in self._tables and self._tables[key].params != table.params:
            raise AggregationError(
                f"conflicting parameter sets for table {key}: "
                f"{self._tables[key].params} vs {table.params}"
            )
        self._tables[key] = table

    def get(self, reference_year: int, metric: str, window_len: int) -> CentralityTable:
        key = (reference_year, metric, window_len)
        if key not in self._tables:
            raise AggregationError(
                f"no centrality table for metric {metric!r}, window {window_len}, "
                f"reference year {reference_year}"
            )
        return self._tables[key]

    def __len__(self) -> int:
        return len(self._tables)


@dataclass
class FeatureMatrix:
    """Design matrix with named columns; last serialized column = response."""

    paper_ids: list[str]
    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray
    response_name: str = "pcite"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n, k = self.X.shape
        if len(self.paper_ids) != n or len(self.y) != n:
            raise AggregationError("row count mismatch between ids, X, and y")
        if len(self.feature_names) != k:
            raise AggregationError("feature name count does not match X columns")
        if len(set(self.feature_names)) != k:
            raise AggregationError("duplicate feature names")
        if not np.isfinite(self.X).all() or not np.isfinite(self.y).all():
            raise AggregationError("feature matrix contains NaN or inf")

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.feature_names.index(name)
        except ValueError:
            raise AggregationError(f"no feature column {name!r}") from None
        return self.X[:, j]

    def select(self, names) -> "FeatureMatrix":
        """Sub-matrix with the given columns, preserving the given order."""
        names = list(names)
        idx = []
        for name in names:
            if name not in self.feature_names:
                raise AggregationError(f"no feature column {name!r}")
            idx.append(self.feature_names.index(name))
        return FeatureMatrix(
            paper_ids=list(self.paper_ids),
            feature_names=names,
            X=self.X[:, idx].copy(),
            y=self.y.copy(),
            response_name=self.response_name,
        )

    def subset_rows(self, row_idx) -> "FeatureMatrix":
        row_idx = list(row_idx)
        return FeatureMatrix(
            paper_ids=[self.paper_ids[i] for i in row_idx],
            feature_names=list(self.feature_names),
            X=self.X[row_idx, :].copy(),
            y=self.y[row_idx].copy(),
            response_name=self.response_name,
        )


def build_feature_matrix(
    corpus: Corpus,
    raw: PercentileTable,
    squeezed: PercentileTable,
    tables: CentralitySet,
    plan: FeaturePlan,
    paper_ids=None,
) -> FeatureMatrix:
    """Assemble controls + aggregated centralities + response per paper."""
    if paper_ids is None:
        paper_ids = sorted(corpus.records)
    else:
        paper_ids = list(paper_ids)
        for pid in paper_ids:
            if pid not in corpus.records:
                raise AggregationError(f"unknown paper id {pid!r}")
    if not paper_ids:
        raise AggregationError("no papers selected for the feature matrix")

    now_year = plan.now_year
    if now_year is None:
        now_year = max(corpus.records[pid].year for pid in corpus.records)

    parsed = [parse_feature_name(name) for name in plan.centrality_columns]
    names = plan.column_names()
    response = squeezed if plan.response == "squeezed" else raw

    rows = []
    y = []
    for pid in paper_ids:
        rec = corpus.records[pid]
        if rec.venue not in (REFERENCE_VENUE,) + VENUE_DUMMIES:
            raise AggregationError(
                f"paper {pid}: venue {rec.venue!r} has no dummy encoding "
                f"(expected one of {(REFERENCE_VENUE,) + VENUE_DUMMIES})"
            )
        row = [
            1.0,
            float(now_year - rec.year),
            1.0 if rec.venue == "ICLR" else 0.0,
            1.0 if rec.venue == "ICML" else 0.0,
            float(rec.n_authors),
            float(rec.abs_len),
            float(rec.title_len),
        ]
        if plan.include_content:
            if rec.content_score is None:
                raise AggregationError(
                    f"paper {pid}: content_score required by the plan but absent"
                )
            row.append(rec.content_score)
        for (metric, kind, difference), col_name in zip(parsed, plan.centrality_columns):
            long_table = tables.get(rec.year, metric, plan.window_len)
            if kind in ("indicator", "ind_first", "ind_max"):
                ind, ind_first, ind_max = high_centrality_indicator(
                    long_table,
                    rec,
                    threshold=plan.indicator_threshold,
                    missing_author_policy=plan.missing_author_policy,
                )
                value = {
                    "indicator": float(ind),
                    "ind_first": ind_first,
                    "ind_max": ind_max,
                }[kind]
            else:
                spec = AggregationSpec(
                    kind=kind,
                    tau=plan.tau,
                    missing_author_policy=plan.missing_author_policy,
                )
                if difference:
                    short_table = tables.get(rec.year, metric, plan.short_window)
                    value = temporal_difference(short_table, long_table, rec, spec)
                else:
                    value = aggregate(long_table, rec, spec)
            row.append(value)
        if pid not in response.pcite:
            raise AggregationError(f"paper {pid}: no percentile value")
        rows.append(row)
        y.append(response.pcite[pid])

    return FeatureMatrix(
        paper_ids=paper_ids,
        feature_names=names,
        X=np.array(rows, dtype=float),
        y=np.array(y, dtype=float),
        response_name=plan.response_name(),
    )


def write_feature_matrix(matrix: FeatureMatrix, path) -> None:
    """CSV with header; first column paper_id, last column the response."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("paper_id," + ",".join(matrix.feature_names))
        fh.write(f",{matrix.response_name}\n")
        for i, pid in enumerate(matrix.paper_ids):
            vals = ",".join(repr(float(v)) for v in matrix.X[i])
            fh.write(f"{pid},{vals},{float(matrix.y[i])!r}\n")


def read_feature_matrix(path) -> FeatureMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if len(header) < 2 or header[0] != "paper_id":
            raise AggregationError(f"bad feature matrix header: {header!r}")
        names = header[1:-1]
        response_name = header[-1]
        ids = []
        rows = []
        y = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(header):
                raise AggregationError(
                    f"row width {len(fields)} does not match header {len(header)}"
                )
            ids.append(fields[0])
            rows.append([float(v) for v in fields[1:-1]])
            y.append(float(fields[-1]))
    return FeatureMatrix(
        paper_ids=ids,
        feature_names=names,
        X=np.array(rows, dtype=float),
        y=np.array(y, dtype=float),
        response_name=response_name,
    )
