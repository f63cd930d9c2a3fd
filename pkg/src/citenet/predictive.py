"""Train/test split and the linear predictive baseline comparison.

The comparison fits ordinary least squares on the training rows twice,
once with centrality feature columns and once without, then scores both
fits on the held-out rows.  Deltas are reported as (with - without), so a
negative MSE delta and a positive correlation delta both mean the
centrality columns helped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aggregation import FeatureMatrix
from .betareg import EvalReport, evaluate, fit_ols


class SplitError(ValueError):
    """Invalid split parameters or too few records."""


@dataclass(frozen=True)
class SplitSpec:
    """Uniform random holdout; the seed makes the partition reproducible.

    k_folds is carried for reporting alongside the split but no fold loop
    runs here: model selection is out of scope for the linear baseline.
    """

    test_fraction: float = 0.1
    rng_seed: int = 0
    k_folds: int = 5

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise SplitError(
                f"test_fraction must be in (0, 1), got {self.test_fraction}"
            )
        if self.k_folds < 1:
            raise SplitError(f"k_folds must be >= 1, got {self.k_folds}")


def split(paper_ids, spec: SplitSpec) -> tuple[list[str], list[str]]:
    """Disjoint, exhaustive (train, test) partition of the given ids.

    Test size is floor(n * fraction) but at least 1.  Ids are sorted before
    permuting, so the partition depends only on the id set and the seed.
    """
    ids = sorted(paper_ids)
    if len(ids) != len(set(ids)):
        raise SplitError("duplicate paper ids")
    n = len(ids)
    if n < 10:
        raise SplitError(f"need at least 10 papers to split, got {n}")
    n_test = max(1, math.floor(n * spec.test_fraction))
    perm = np.random.default_rng(spec.rng_seed).permutation(n)
    test = sorted(ids[i] for i in perm[:n_test])
    train = sorted(ids[i] for i in perm[n_test:])
    return train, test


@dataclass
class ComparisonReport:
    """Held-out metrics for the with/without-centrality feature sets."""

    model: str
    with_eval: EvalReport
    without_eval: EvalReport
    split_spec: SplitSpec
    n_train: int
    n_test: int

    @property
    def mse_delta(self) -> float:
        return self.with_eval.mse - self.without_eval.mse

    @property
    def mae_delta(self) -> float:
        return self.with_eval.mae - self.without_eval.mae

    @property
    def corr_delta(self) -> float:
        return self.with_eval.corr - self.without_eval.corr


def _rows_for(matrix: FeatureMatrix, ids) -> FeatureMatrix:
    index = {pid: i for i, pid in enumerate(matrix.paper_ids)}
    return matrix.subset_rows([index[pid] for pid in ids])


def compare_feature_sets(
    with_matrix: FeatureMatrix,
    without_matrix: FeatureMatrix,
    spec: SplitSpec,
    model: str = "LR",
) -> ComparisonReport:
    """Fit on train, score on test, for both feature sets on one split."""
    ids_a = sorted(with_matrix.paper_ids)
    ids_b = sorted(without_matrix.paper_ids)
    if ids_a != ids_b:
        raise SplitError("feature matrices cover different papers")
    ya = {p: y for p, y in zip(with_matrix.paper_ids, with_matrix.y)}
    yb = {p: y for p, y in zip(without_matrix.paper_ids, without_matrix.y)}
    if any(ya[p] != yb[p] for p in ids_a):
        raise SplitError("feature matrices disagree on the response")

    train_ids, test_ids = split(ids_a, spec)
    report = {}
    for label, matrix in (("with", with_matrix), ("without", without_matrix)):
        fit = fit_ols(_rows_for(matrix, train_ids))
        report[label] = evaluate(fit, _rows_for(matrix, test_ids))
    return ComparisonReport(
        model=model,
        with_eval=report["with"],
        without_eval=report["without"],
        split_spec=spec,
        n_train=len(train_ids),
        n_test=len(test_ids),
    )


COMPARISON_COLUMNS = (
    "model",
    "mse_with",
    "mae_with",
    "corr_with",
    "mse_without",
    "mae_without",
    "corr_without",
    "mse_delta",
    "mae_delta",
    "corr_delta",
    "n_train",
    "n_test",
    "rng_seed",
)


def write_comparison(report: ComparisonReport, path) -> None:
    """One-row CSV with the six held-out metrics, deltas, and split info."""
    values = (
        report.model,
        repr(report.with_eval.mse),
        repr(report.with_eval.mae),
        repr(report.with_eval.corr),
        repr(report.without_eval.mse),
        repr(report.without_eval.mae),
        repr(report.without_eval.corr),
        repr(report.mse_delta),
        repr(report.mae_delta),
        repr(report.corr_delta),
        str(report.n_train),
        str(report.n_test),
        str(report.split_spec.rng_seed),
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(COMPARISON_COLUMNS) + "\n")
        fh.write(",".join(values) + "\n")


def read_comparison(path) -> dict:
    """Read a comparison CSV back as a {column: value} dict."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if len(lines) != 2 or lines[0] != ",".join(COMPARISON_COLUMNS):
        raise SplitError(f"{path}: malformed comparison file")
    parts = lines[1].split(",")
    if len(parts) != len(COMPARISON_COLUMNS):
        raise SplitError(f"{path}: expected {len(COMPARISON_COLUMNS)} fields")
    out: dict[str, object] = {"model": parts[0]}
    for name, raw in zip(COMPARISON_COLUMNS[1:10], parts[1:10]):
        out[name] = float(raw)
    for name, raw in zip(COMPARISON_COLUMNS[10:], parts[10:]):
        out[name] = int(raw)
    return out
