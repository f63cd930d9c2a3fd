"""Command-line pipeline driving the full analysis.

Stages run in order: ingest -> percentiles -> graph -> centrality ->
aggregate -> features -> fit / lrt / tune / predict -> report.  Each stage
reads the artifacts of its predecessors from the output directory, writes
its own artifact under a name carrying the config hash, and appends one
key=value line to ``manifest.txt`` recording input/output content hashes,
parameters, and a timestamp.  Artifacts are plain text (JSONL, CSV, edge
lists) and are written to a temp file first, then promoted atomically, so
a crash never leaves a half-written artifact under the final name.

Exit codes: 0 success, 1 runtime failure (a JSON error record goes to
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import copy
import hashlib
import io
import json
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .aggregation import (
    CONTENT_NAME,
    CONTROL_NAMES,
    AggregationSpec,
    CentralitySet,
    FeaturePlan,
    build_feature_matrix,
    parse_feature_name,
    read_feature_matrix,
    write_feature_matrix,
)
from .betareg import (
    fit_beta,
    fit_ols,
    fit_records,
    format_fit_report,
    likelihood_ratio_test,
)
from .centrality import METRIC_NAMES, HctcdParams, compute_metric, read_centrality, write_centrality
from .corpus import (
    compute_percentiles,
    load_corpus,
    read_percentiles,
    squeeze_to_open_interval,
    write_corpus,
    write_percentiles,
)
from .graph import WindowSpec, build_graph, read_graph, write_graph
from .predictive import SplitSpec, compare_feature_sets, write_comparison
from .tuning import GridAxis, GridSpec, best_of, read_surface, tune, write_surface

STAGES = (
    "ingest",
    "percentiles",
    "graph",
    "centrality",
    "aggregate",
    "features",
    "fit",
    "lrt",
    "tune",
    "predict",
    "report",
)

DEFAULT_WINDOWS = (1, 2, 4, 8, 16)


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class PipelineError(RuntimeError):
    """A stage cannot run, usually because a prerequisite artifact is missing."""


@dataclass(frozen=True)
class ModelSpec:
    """One regression design: centrality columns on top of the controls."""

    name: str
    columns: tuple[str, ...] = ()
    content: bool = True
    estimators: tuple[str, ...] = ("beta",)


@dataclass
class RunConfig:
    """Typed view of the sectioned key-value config file."""

    input: str = ""
    out: str = "out"
    venues: tuple[str, ...] = ("NeurIPS", "ICLR", "ICML")
    windows: tuple[int, ...] = DEFAULT_WINDOWS
    seed: int = 0
    threads: int = 1
    now_year: int | None = None
    # [features]
    feature_columns: tuple[str, ...] = ()
    feature_window: int = 8
    short_window: int = 2
    tau: float = 0.3
    content: bool = True
    response: str = "squeezed"
    missing_author_policy: str = "zero"
    indicator_threshold: float = 0.5
    # [metrics]
    metric_names: tuple[str, ...] = METRIC_NAMES
    damping: float = 0.85
    hctcd_alpha: float = -0.2
    hctcd_beta: float = 0.45
    pagerank_tol: float = 1e-10
    pagerank_max_iter: int = 10000
    # optional stages
    models: dict[str, ModelSpec] = field(default_factory=dict)
    lrt_full: str | None = None
    lrt_reduced: str | None = None
    tune_metric: str | None = None
    tune_agg_kind: str = "w_ave"
    tune_tau: float = 0.3
    tune_year_range: tuple[int, int] | None = None
    tune_venues: tuple[str, ...] | None = None
    tune_axes: tuple[tuple[str, float, float, float], ...] = ()
    predict_columns: tuple[str, ...] | None = None
    test_fraction: float = 0.1
    predict_seed: int | None = None
    k_folds: int = 5


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _parse_bool(raw: str, key: str) -> bool:
    if raw.lower() in ("true", "yes", "1"):
        return True
    if raw.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key {key!r} in [{section.name}]")
        return default
    raw = section[key].strip()
    try:
        return cast(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section.name}] {key}: {exc}") from exc


def parse_config(path) -> RunConfig:
    """Read and validate the INI-style run configuration."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "run" not in cp:
        raise ConfigError("config needs a [run] section")

    run = cp["run"]
    cfg = RunConfig(
        input=_get(run, "input", str, required=True),
        out=_get(run, "out", str, default="out"),
        venues=_get(run, "venues", _split_list, default=("NeurIPS", "ICLR", "ICML")),
        windows=_get(
            run,
            "windows",
            lambda s: tuple(int(w) for w in _split_list(s)),
            default=DEFAULT_WINDOWS,
        ),
        seed=_get(run, "seed", int, default=0),
        threads=_get(run, "threads", int, default=1),
        now_year=_get(run, "now_year", int),
    )

    if "features" in cp:
        feats = cp["features"]
        cfg.feature_columns = _get(feats, "columns", _split_list, default=())
        cfg.feature_window = _get(feats, "window", int, default=8)
        cfg.short_window = _get(feats, "short_window", int, default=2)
        cfg.tau = _get(feats, "tau", float, default=0.3)
        cfg.content = _get(
            feats, "content", lambda s: _parse_bool(s, "content"), default=True
        )
        cfg.response = _get(feats, "response", str, default="squeezed")
        cfg.missing_author_policy = _get(
            feats, "missing_author_policy", str, default="zero"
        )
        cfg.indicator_threshold = _get(feats, "indicator_threshold", float, default=0.5)

    if "metrics" in cp:
        met = cp["metrics"]
        cfg.metric_names = _get(met, "names", _split_list, default=METRIC_NAMES)
        cfg.damping = _get(met, "damping", float, default=0.85)
        cfg.hctcd_alpha = _get(met, "hctcd_alpha", float, default=-0.2)
        cfg.hctcd_beta = _get(met, "hctcd_beta", float, default=0.45)
        cfg.pagerank_tol = _get(met, "pagerank_tol", float, default=1e-10)
        cfg.pagerank_max_iter = _get(met, "pagerank_max_iter", int, default=10000)

    for name in cp.sections():
        if not name.startswith("model:"):
            continue
        section = cp[name]
        model_name = name[len("model:") :]
        if not model_name:
            raise ConfigError("model section needs a name: [model:<name>]")
        estimators = _get(section, "estimator", _split_list, default=("beta",))
        for est in estimators:
            if est not in ("beta", "ols"):
                raise ConfigError(f"[{name}] estimator must be beta or ols, got {est!r}")
        cfg.models[model_name] = ModelSpec(
            name=model_name,
            columns=_get(section, "columns", _split_list, default=()),
            content=_get(
                section, "content", lambda s: _parse_bool(s, "content"), default=True
            ),
            estimators=estimators,
        )

    if "lrt" in cp:
        cfg.lrt_full = _get(cp["lrt"], "full", str, required=True)
        cfg.lrt_reduced = _get(cp["lrt"], "reduced", str, required=True)

    if "tune" in cp:
        tu = cp["tune"]
        cfg.tune_metric = _get(tu, "metric", str, required=True)
        cfg.tune_agg_kind = _get(tu, "agg_kind", str, default="w_ave")
        cfg.tune_tau = _get(tu, "tau", float, default=0.3)
        lo = _get(tu, "year_lo", int)
        hi = _get(tu, "year_hi", int)
        if (lo is None) != (hi is None):
            raise ConfigError("[tune] year_lo and year_hi must be given together")
        cfg.tune_year_range = None if lo is None else (lo, hi)
        cfg.tune_venues = _get(tu, "venues", _split_list)
        axes = []
        for key in tu:
            if not key.startswith("axis."):
                continue
            parts = tu[key].split(":")
            if len(parts) != 3:
                raise ConfigError(f"[tune] {key}: expected lo:hi:step, got {tu[key]!r}")
            axes.append((key[len("axis.") :], *(float(p) for p in parts)))
        if not axes:
            raise ConfigError("[tune] needs at least one axis.<name> = lo:hi:step")
        cfg.tune_axes = tuple(axes)

    if "predict" in cp:
        pr = cp["predict"]
        cfg.predict_columns = _get(pr, "centrality_columns", _split_list)
        cfg.test_fraction = _get(pr, "test_fraction", float, default=0.1)
        cfg.predict_seed = _get(pr, "seed", int)
        cfg.k_folds = _get(pr, "k_folds", int, default=5)

    _validate_config(cfg)
    return cfg


def _validate_config(cfg: RunConfig) -> None:
    if not cfg.input:
        raise ConfigError("run.input must be set")
    if not cfg.windows or any(w < 1 for w in cfg.windows):
        raise ConfigError(f"windows must be positive integers, got {cfg.windows}")
    if len(set(cfg.windows)) != len(cfg.windows):
        raise ConfigError(f"duplicate windows: {cfg.windows}")
    for w in (cfg.feature_window, cfg.short_window):
        if w not in cfg.windows:
            raise ConfigError(
                f"feature windows ({cfg.short_window}, {cfg.feature_window}) "
                f"must appear in run.windows {cfg.windows}"
            )
    for metric in cfg.metric_names:
        if metric not in METRIC_NAMES:
            raise ConfigError(f"unknown metric {metric!r} in [metrics] names")
    referenced = list(cfg.feature_columns)
    for spec in cfg.models.values():
        referenced.extend(spec.columns)
    if cfg.predict_columns:
        referenced.extend(cfg.predict_columns)
    for column in referenced:
        metric, _, _ = parse_feature_name(column)
        if metric not in cfg.metric_names:
            raise ConfigError(
                f"feature column {column!r} needs metric {metric!r}, "
                f"which is not in [metrics] names"
            )
    for spec in cfg.models.values():
        for column in spec.columns:
            if column not in cfg.feature_columns:
                raise ConfigError(
                    f"model {spec.name!r} references column {column!r} "
                    f"missing from [features] columns"
                )
    if cfg.predict_columns:
        for column in cfg.predict_columns:
            if column not in cfg.feature_columns:
                raise ConfigError(
                    f"[predict] centrality_columns entry {column!r} "
                    f"missing from [features] columns"
                )
    for name in (cfg.lrt_full, cfg.lrt_reduced):
        if name is not None and name not in cfg.models:
            raise ConfigError(f"[lrt] references undefined model {name!r}")
    if cfg.tune_metric is not None and cfg.tune_metric not in cfg.metric_names:
        raise ConfigError(f"[tune] metric {cfg.tune_metric!r} not in [metrics] names")


def config_text(cfg: RunConfig) -> str:
    """Canonical serialization; parsing it back yields an equal RunConfig."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["run"] = {
        "input": cfg.input,
        "out": cfg.out,
        "venues": ",".join(cfg.venues),
        "windows": ",".join(str(w) for w in cfg.windows),
        "seed": str(cfg.seed),
        "threads": str(cfg.threads),
    }
    if cfg.now_year is not None:
        cp["run"]["now_year"] = str(cfg.now_year)
    cp["features"] = {
        "columns": ",".join(cfg.feature_columns),
        "window": str(cfg.feature_window),
        "short_window": str(cfg.short_window),
        "tau": repr(cfg.tau),
        "content": str(cfg.content).lower(),
        "response": cfg.response,
        "missing_author_policy": cfg.missing_author_policy,
        "indicator_threshold": repr(cfg.indicator_threshold),
    }
    cp["metrics"] = {
        "names": ",".join(cfg.metric_names),
        "damping": repr(cfg.damping),
        "hctcd_alpha": repr(cfg.hctcd_alpha),
        "hctcd_beta": repr(cfg.hctcd_beta),
        "pagerank_tol": repr(cfg.pagerank_tol),
        "pagerank_max_iter": str(cfg.pagerank_max_iter),
    }
    for name in sorted(cfg.models):
        spec = cfg.models[name]
        cp[f"model:{name}"] = {
            "columns": ",".join(spec.columns),
            "content": str(spec.content).lower(),
            "estimator": ",".join(spec.estimators),
        }
    if cfg.lrt_full is not None:
        cp["lrt"] = {"full": cfg.lrt_full, "reduced": cfg.lrt_reduced}
    if cfg.tune_metric is not None:
        section = {
            "metric": cfg.tune_metric,
            "agg_kind": cfg.tune_agg_kind,
            "tau": repr(cfg.tune_tau),
        }
        if cfg.tune_year_range is not None:
            section["year_lo"] = str(cfg.tune_year_range[0])
            section["year_hi"] = str(cfg.tune_year_range[1])
        if cfg.tune_venues is not None:
            section["venues"] = ",".join(cfg.tune_venues)
        for name, lo, hi, step in cfg.tune_axes:
            section[f"axis.{name}"] = f"{lo!r}:{hi!r}:{step!r}"
        cp["tune"] = section
    predict = {
        "test_fraction": repr(cfg.test_fraction),
        "k_folds": str(cfg.k_folds),
    }
    if cfg.predict_columns is not None:
        predict["centrality_columns"] = ",".join(cfg.predict_columns)
    if cfg.predict_seed is not None:
        predict["seed"] = str(cfg.predict_seed)
    cp["predict"] = predict

    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(config_text(cfg), encoding="utf-8")


def config_hash(cfg: RunConfig) -> str:
    """Hash of everything that shapes artifact content.

    The output directory is deliberately excluded so the same analysis run
    into two directories yields identically named, byte-identical artifacts.
    """
    hashed = copy.copy(cfg)
    hashed.out = ""
    return hashlib.sha256(config_text(hashed).encode("utf-8")).hexdigest()[:12]


def file_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@contextmanager
def atomic_path(final_path):
    """Yield a temp path; promote it to final_path only if the body succeeds."""
    final_path = Path(final_path)
    tmp = final_path.with_name(final_path.name + ".tmp")
    try:
        yield tmp
        os.replace(tmp, final_path)
    except BaseException:
        if tmp.exists():
            tmp.unlink()
        raise


@dataclass
class Workspace:
    """Artifact naming and manifest bookkeeping for one config."""

    cfg: RunConfig
    out_dir: Path
    hash: str

    @classmethod
    def create(cls, cfg: RunConfig) -> "Workspace":
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return cls(cfg=cfg, out_dir=out_dir, hash=config_hash(cfg))

    def path(self, stem: str, ext: str) -> Path:
        return self.out_dir / f"{stem}.{self.hash}.{ext}"

    def require(self, stem: str, ext: str, producer: str) -> Path:
        p = self.path(stem, ext)
        if not p.exists():
            raise PipelineError(
                f"missing artifact {p.name}; run the {producer!r} stage first"
            )
        return p

    def manifest_line(self, stage, params=None, inputs=None, outputs=None) -> None:
        fields = [
            f"stage={stage}",
            f"time={datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')}",
            f"config={self.hash}",
        ]
        for key in sorted(params or {}):
            fields.append(f"param.{key}={params[key]}")
        for path in inputs or []:
            fields.append(f"in.{Path(path).name}=sha256:{file_hash(path)}")
        for path in outputs or []:
            fields.append(f"out.{Path(path).name}=sha256:{file_hash(path)}")
        with open(self.out_dir / "manifest.txt", "a", encoding="utf-8") as fh:
            fh.write(" ".join(fields) + "\n")


def _load_pipeline_corpus(ws: Workspace):
    return load_corpus(
        ws.require("corpus", "jsonl", "ingest"), venues=ws.cfg.venues
    )


def stage_ingest(ws: Workspace) -> list[Path]:
    cfg = ws.cfg
    if not Path(cfg.input).exists():
        raise PipelineError(f"input file not found: {cfg.input}")
    corpus = load_corpus(cfg.input, venues=cfg.venues)
    out = ws.path("corpus", "jsonl")
    with atomic_path(out) as tmp:
        write_corpus(corpus, tmp)
    ws.manifest_line(
        "ingest",
        params={"n_papers": len(corpus), "venues": ",".join(cfg.venues)},
        inputs=[cfg.input],
        outputs=[out],
    )
    return [out]


def stage_percentiles(ws: Workspace) -> list[Path]:
    corpus_path = ws.require("corpus", "jsonl", "ingest")
    corpus = load_corpus(corpus_path, venues=ws.cfg.venues)
    raw = compute_percentiles(corpus)
    squeezed = squeeze_to_open_interval(raw)
    out = ws.path("percentiles", "csv")
    with atomic_path(out) as tmp:
        write_percentiles(raw, squeezed, tmp)
    ws.manifest_line(
        "percentiles",
        params={"n_papers": len(corpus)},
        inputs=[corpus_path],
        outputs=[out],
    )
    return [out]


def stage_graph(ws: Workspace) -> list[Path]:
    corpus_path = ws.require("corpus", "jsonl", "ingest")
    corpus = load_corpus(corpus_path, venues=ws.cfg.venues)
    outputs = []
    for window_len in ws.cfg.windows:
        for year in corpus.years():
            graph = build_graph(
                corpus, WindowSpec(reference_year=year, window_len=window_len)
            )
            out = ws.path(f"graph-w{window_len}-y{year}", "edges")
            with atomic_path(out) as tmp:
                write_graph(graph, tmp)
            outputs.append(out)
    ws.manifest_line(
        "graph",
        params={"windows": ",".join(str(w) for w in ws.cfg.windows)},
        inputs=[corpus_path],
        outputs=outputs,
    )
    return outputs


def _metric_kwargs(cfg: RunConfig) -> dict:
    return {
        "damping": cfg.damping,
        "tol": cfg.pagerank_tol,
        "max_iter": cfg.pagerank_max_iter,
        "hctcd_params": HctcdParams(alpha=cfg.hctcd_alpha, beta=cfg.hctcd_beta),
    }


def stage_centrality(ws: Workspace) -> list[Path]:
    cfg = ws.cfg
    corpus_path = ws.require("corpus", "jsonl", "ingest")
    corpus = load_corpus(corpus_path, venues=cfg.venues)
    kwargs = _metric_kwargs(cfg)
    inputs = []
    outputs = []
    for window_len in cfg.windows:
        for year in corpus.years():
            graph_path = ws.require(f"graph-w{window_len}-y{year}", "edges", "graph")
            inputs.append(graph_path)
            graph = read_graph(graph_path)
            for metric in cfg.metric_names:
                table = compute_metric(
                    graph, metric, threads=cfg.threads, **kwargs
                )
                out = ws.path(f"centrality-{metric}-w{window_len}-y{year}", "csv")
                with atomic_path(out) as tmp:
                    write_centrality(table, tmp)
                outputs.append(out)
    ws.manifest_line(
        "centrality",
        params={
            "metrics": ",".join(cfg.metric_names),
            "damping": repr(cfg.damping),
            "hctcd_alpha": repr(cfg.hctcd_alpha),
            "hctcd_beta": repr(cfg.hctcd_beta),
        },
        inputs=[corpus_path, *inputs],
        outputs=outputs,
    )
    return outputs


def _feature_plan(cfg: RunConfig) -> FeaturePlan:
    return FeaturePlan(
        centrality_columns=tuple(cfg.feature_columns),
        include_content=cfg.content,
        window_len=cfg.feature_window,
        short_window=cfg.short_window,
        tau=cfg.tau,
        indicator_threshold=cfg.indicator_threshold,
        missing_author_policy=cfg.missing_author_policy,
        response=cfg.response,
        now_year=cfg.now_year,
    )


def _load_tables(ws: Workspace, corpus) -> tuple[CentralitySet, list[Path]]:
    """Read every centrality artifact the feature plan can touch."""
    cfg = ws.cfg
    needed_metrics = sorted(
        {parse_feature_name(c)[0] for c in cfg.feature_columns}
    )
    tables = CentralitySet()
    paths = []
    for metric in needed_metrics:
        for window_len in (cfg.short_window, cfg.feature_window):
            for year in corpus.years():
                path = ws.require(
                    f"centrality-{metric}-w{window_len}-y{year}", "csv", "centrality"
                )
                tables.add(read_centrality(path))
                paths.append(path)
    return tables, paths


def _build_matrix(ws: Workspace):
    corpus_path = ws.require("corpus", "jsonl", "ingest")
    corpus = load_corpus(corpus_path, venues=ws.cfg.venues)
    pct_path = ws.require("percentiles", "csv", "percentiles")
    raw, squeezed = read_percentiles(pct_path)
    tables, table_paths = _load_tables(ws, corpus)
    plan = _feature_plan(ws.cfg)
    matrix = build_feature_matrix(corpus, raw, squeezed, tables, plan)
    return matrix, plan, [corpus_path, pct_path, *table_paths]


def stage_aggregate(ws: Workspace) -> list[Path]:
    if not ws.cfg.feature_columns:
        raise PipelineError("no [features] columns configured; nothing to aggregate")
    matrix, plan, inputs = _build_matrix(ws)
    centrality_only = matrix.select(list(plan.centrality_columns))
    out = ws.path("aggregate", "csv")
    with atomic_path(out) as tmp:
        write_feature_matrix(centrality_only, tmp)
    ws.manifest_line(
        "aggregate",
        params={"columns": ",".join(plan.centrality_columns), "tau": repr(plan.tau)},
        inputs=inputs,
        outputs=[out],
    )
    return [out]


def stage_features(ws: Workspace) -> list[Path]:
    matrix, plan, inputs = _build_matrix(ws)
    out = ws.path("features", "csv")
    with atomic_path(out) as tmp:
        write_feature_matrix(matrix, tmp)
    ws.manifest_line(
        "features",
        params={
            "columns": ",".join(matrix.feature_names),
            "response": plan.response,
        },
        inputs=inputs,
        outputs=[out],
    )
    return [out]


def _model_matrix(matrix, spec: ModelSpec):
    names = list(CONTROL_NAMES)
    if spec.content:
        names.append(CONTENT_NAME)
    names.extend(spec.columns)
    return matrix.select(names)


def _fit_model(matrix, spec: ModelSpec, estimator: str):
    design = _model_matrix(matrix, spec)
    return fit_beta(design) if estimator == "beta" else fit_ols(design)


def stage_fit(ws: Workspace, model_name: str | None = None) -> list[Path]:
    cfg = ws.cfg
    if not cfg.models:
        raise PipelineError("no [model:<name>] sections configured")
    if model_name is not None and model_name not in cfg.models:
        raise PipelineError(f"unknown model {model_name!r}; configured: "
                            f"{sorted(cfg.models)}")
    features_path = ws.require("features", "csv", "features")
    matrix = read_feature_matrix(features_path)
    names = [model_name] if model_name else sorted(cfg.models)
    outputs = []
    for name in names:
        spec = cfg.models[name]
        for estimator in spec.estimators:
            fit = _fit_model(matrix, spec, estimator)
            stem = f"fit-{name}-{estimator}"
            report_path = ws.path(stem, "txt")
            with atomic_path(report_path) as tmp:
                Path(tmp).write_text(format_fit_report(fit) + "\n", encoding="utf-8")
            records_path = ws.path(stem, "records")
            with atomic_path(records_path) as tmp:
                Path(tmp).write_text(
                    "\n".join(fit_records(fit)) + "\n", encoding="utf-8"
                )
            outputs.extend([report_path, records_path])
    ws.manifest_line(
        "fit",
        params={"models": ",".join(names)},
        inputs=[features_path],
        outputs=outputs,
    )
    return outputs


def stage_lrt(ws: Workspace) -> list[Path]:
    cfg = ws.cfg
    if cfg.lrt_full is None:
        raise PipelineError("no [lrt] section configured")
    features_path = ws.require("features", "csv", "features")
    matrix = read_feature_matrix(features_path)
    fit_full = _fit_model(matrix, cfg.models[cfg.lrt_full], "beta")
    fit_reduced = _fit_model(matrix, cfg.models[cfg.lrt_reduced], "beta")
    result = likelihood_ratio_test(fit_reduced, fit_full)
    out = ws.path("lrt", "csv")
    with atomic_path(out) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("full,reduced,ll_full,ll_reduced,statistic,df,p_value\n")
            fh.write(
                f"{cfg.lrt_full},{cfg.lrt_reduced},{result.ll_full!r},"
                f"{result.ll_reduced!r},{result.statistic!r},{result.df},"
                f"{result.p_value!r}\n"
            )
    ws.manifest_line(
        "lrt",
        params={
            "full": cfg.lrt_full,
            "reduced": cfg.lrt_reduced,
            "statistic": repr(result.statistic),
            "df": result.df,
        },
        inputs=[features_path],
        outputs=[out],
    )
    return [out]


def stage_tune(ws: Workspace) -> list[Path]:
    cfg = ws.cfg
    if cfg.tune_metric is None:
        raise PipelineError("no [tune] section configured")
    corpus_path = ws.require("corpus", "jsonl", "ingest")
    corpus = load_corpus(corpus_path, venues=cfg.venues)
    pct_path = ws.require("percentiles", "csv", "percentiles")
    raw, _ = read_percentiles(pct_path)
    grid = GridSpec(
        axes=tuple(GridAxis(*axis) for axis in cfg.tune_axes),
        year_range=cfg.tune_year_range,
        venues=cfg.tune_venues,
    )
    result = tune(
        corpus,
        raw,
        grid,
        cfg.tune_metric,
        agg=AggregationSpec(
            kind=cfg.tune_agg_kind,
            tau=cfg.tune_tau,
            missing_author_policy=cfg.missing_author_policy,
        ),
        window_len=cfg.feature_window,
        hctcd_params=HctcdParams(alpha=cfg.hctcd_alpha, beta=cfg.hctcd_beta),
        damping=cfg.damping,
        threads=cfg.threads,
    )
    out = ws.path(f"tune-{cfg.tune_metric}", "csv")
    with atomic_path(out) as tmp:
        write_surface(result, tmp)
    best = {
        f"best.{name}": repr(value)
        for name, value in zip(result.param_names, result.best_params)
    }
    ws.manifest_line(
        "tune",
        params={
            "metric": cfg.tune_metric,
            "subset_size": result.subset_size,
            "best_correlation": repr(result.best_value),
            **best,
        },
        inputs=[corpus_path, pct_path],
        outputs=[out],
    )
    return [out]


def stage_predict(ws: Workspace) -> list[Path]:
    cfg = ws.cfg
    features_path = ws.require("features", "csv", "features")
    matrix = read_feature_matrix(features_path)
    centrality_columns = (
        cfg.predict_columns if cfg.predict_columns is not None else cfg.feature_columns
    )
    if not centrality_columns:
        raise PipelineError("predict needs at least one centrality column")
    base = list(CONTROL_NAMES)
    if cfg.content:
        base.append(CONTENT_NAME)
    with_matrix = matrix.select(base + list(centrality_columns))
    without_matrix = matrix.select(base)
    spec = SplitSpec(
        test_fraction=cfg.test_fraction,
        rng_seed=cfg.predict_seed if cfg.predict_seed is not None else cfg.seed,
        k_folds=cfg.k_folds,
    )
    report = compare_feature_sets(with_matrix, without_matrix, spec)
    out = ws.path("predict", "csv")
    with atomic_path(out) as tmp:
        write_comparison(report, tmp)
    ws.manifest_line(
        "predict",
        params={
            "columns": ",".join(centrality_columns),
            "rng_seed": spec.rng_seed,
            "mse_delta": repr(report.mse_delta),
        },
        inputs=[features_path],
        outputs=[out],
    )
    return [out]


def _correlation_block(matrix) -> list[str]:
    names = [
        n for n in matrix.feature_names if n not in CONTROL_NAMES
    ]
    lines = ["== correlation with the response =="]
    width = max((len(n) for n in names), default=8) + 2
    for name in names:
        x = matrix.column(name)
        if float(np.std(x)) == 0.0 or float(np.std(matrix.y)) == 0.0:
            corr = float("nan")
        else:
            corr = float(np.corrcoef(x, matrix.y)[0, 1])
        lines.append(f"{name:<{width}}{corr: .4f}")
    lines.append("")
    lines.append("== pairwise feature correlations ==")
    header = " " * width + " ".join(f"{n:>{width}}" for n in names)
    lines.append(header)
    for a in names:
        xa = matrix.column(a)
        row = [f"{a:<{width}}"]
        for b in names:
            xb = matrix.column(b)
            if float(np.std(xa)) == 0.0 or float(np.std(xb)) == 0.0:
                c = float("nan")
            else:
                c = float(np.corrcoef(xa, xb)[0, 1])
            row.append(f"{c:>{width}.4f}")
        lines.append(" ".join(row))
    lines.append("")
    return lines


def stage_report(ws: Workspace) -> list[Path]:
    cfg = ws.cfg
    features_path = ws.require("features", "csv", "features")
    matrix = read_feature_matrix(features_path)
    inputs = [features_path]
    lines = [f"pipeline report (config {ws.hash})", ""]
    lines.extend(_correlation_block(matrix))

    lines.append("== regression models ==")
    for name in sorted(cfg.models):
        spec = cfg.models[name]
        for estimator in spec.estimators:
            path = ws.path(f"fit-{name}-{estimator}", "txt")
            if not path.exists():
                continue
            inputs.append(path)
            lines.append(f"-- {name} ({estimator}) --")
            lines.append(path.read_text(encoding="utf-8").rstrip("\n"))
            lines.append("")

    lrt_path = ws.path("lrt", "csv")
    if lrt_path.exists():
        inputs.append(lrt_path)
        lines.append("== likelihood-ratio test ==")
        lines.append(lrt_path.read_text(encoding="utf-8").rstrip("\n"))
        lines.append("")

    if cfg.tune_metric is not None:
        surface_path = ws.path(f"tune-{cfg.tune_metric}", "csv")
        if surface_path.exists():
            inputs.append(surface_path)
            names, rows = read_surface(surface_path)
            best = best_of(rows)
            pairs = ", ".join(
                f"{n}={v!r}" for n, v in zip(names, best[:-1])
            )
            lines.append("== tuned parameters ==")
            lines.append(
                f"{cfg.tune_metric}: {pairs} (correlation {best[-1]!r})"
            )
            lines.append("")

    predict_path = ws.path("predict", "csv")
    if predict_path.exists():
        inputs.append(predict_path)
        lines.append("== predictive comparison ==")
        lines.append(predict_path.read_text(encoding="utf-8").rstrip("\n"))
        lines.append("")

    out = ws.path("report", "txt")
    with atomic_path(out) as tmp:
        Path(tmp).write_text("\n".join(lines).rstrip("\n") + "\n", encoding="utf-8")
    ws.manifest_line("report", inputs=inputs, outputs=[out])
    return [out]


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.venue is not None:
        cfg.venues = _split_list(args.venue)
    if args.window is not None:
        cfg.windows = tuple(int(w) for w in _split_list(args.window))
    _validate_config(cfg)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citenet",
        description="co-authorship centrality and citation percentile pipeline",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the run config file")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--seed", type=int, help="override the pipeline seed")
    common.add_argument("--threads", type=int, help="override worker thread count")
    common.add_argument("--venue", help="override venue set (comma-separated)")
    common.add_argument("--window", help="override window lengths (comma-separated)")

    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, parents=[common], help=f"run the {stage} stage")
        if stage == "fit":
            sp.add_argument("--model", help="fit only this configured model")
    return parser


_RUNNERS = {
    "ingest": stage_ingest,
    "percentiles": stage_percentiles,
    "graph": stage_graph,
    "centrality": stage_centrality,
    "aggregate": stage_aggregate,
    "features": stage_features,
    "lrt": stage_lrt,
    "tune": stage_tune,
    "predict": stage_predict,
    "report": stage_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(parse_config(args.config), args)
        ws = Workspace.create(cfg)
        if args.stage == "fit":
            outputs = stage_fit(ws, model_name=args.model)
        else:
            outputs = _RUNNERS[args.stage](ws)
        for path in outputs:
            print(path)
        return 0
    except BrokenPipeError:
        raise
    except Exception as exc:
        record = {
            "stage": args.stage,
            "error": type(exc).__name__,
            "message": str(exc),
        }
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
