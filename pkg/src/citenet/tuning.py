"""Grid search over centrality parameters against citation percentiles.

For each grid point the chosen metric is recomputed (or re-evaluated from a
cached profile), aggregated per paper with the configured author-list
reduction, and scored by Pearson correlation with the papers' same-year
citation percentiles over a year/venue subset.  The argmax is returned with
deterministic tie-breaking: the first strictly-better point wins, so ties
resolve to the lexicographically smallest parameter tuple.

Axis names are interpreted per metric: ``alpha``/``beta`` drive the decayed
harmonic metric, ``damping`` drives PageRank, and ``tau`` drives the
position-decay weight of weighted aggregation kinds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .aggregation import AggregationSpec, aggregate
from .centrality import (
    HCTCD,
    METRIC_NAMES,
    PAGERANK,
    CentralityTable,
    HctcdParams,
    _map_ordered,
    compute_metric,
    hctcd_profile,
    pagerank,
)
from .corpus import Corpus, PercentileTable
from .graph import WindowSpec, build_graph


class TuningError(ValueError):
    """Invalid grid, empty subset, or undefined objective."""


@dataclass(frozen=True)
class GridAxis:
    """One scanned parameter: closed range [lo, hi] stepped by step."""

    name: str
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not self.name:
            raise TuningError("axis name must be non-empty")
        if not self.lo < self.hi:
            raise TuningError(f"axis {self.name}: lo must be < hi")
        if not self.step > 0:
            raise TuningError(f"axis {self.name}: step must be > 0")

    def values(self) -> list[float]:
        out = []
        i = 0
        while True:
            v = round(self.lo + i * self.step, 10)
            if v > self.hi + 1e-12:
                return out
            out.append(v)
            i += 1


@dataclass(frozen=True)
class GridSpec:
    """Full scan description: axes plus the evaluation subset filter."""

    axes: tuple[GridAxis, ...]
    year_range: tuple[int, int] | None = None
    venues: tuple[str, ...] | None = None
    max_points: int = 100_000

    def __post_init__(self):
        if not self.axes:
            raise TuningError("grid needs at least one axis")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise TuningError(f"duplicate axis names: {names}")
        if self.year_range is not None and self.year_range[0] > self.year_range[1]:
            raise TuningError(f"invalid year_range {self.year_range}")
        size = 1
        for axis in self.axes:
            size *= len(axis.values())
        if size > self.max_points:
            raise TuningError(f"grid has {size} points, cap is {self.max_points}")

    def param_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def points(self) -> list[tuple[float, ...]]:
        return list(itertools.product(*(a.values() for a in self.axes)))


@dataclass
class TuneResult:
    """Best grid point plus the full exported surface."""

    metric: str
    param_names: tuple[str, ...]
    best_params: tuple[float, ...]
    best_value: float
    surface: list[tuple]
    subset_size: int

    def best_dict(self) -> dict[str, float]:
        return dict(zip(self.param_names, self.best_params))


def default_grid(metric: str, year_range=None, venues=None) -> GridSpec:
    """Standard scan ranges per metric."""
    if metric == HCTCD:
        axes = (
            GridAxis("alpha", -1.0, 1.0, 0.05),
            GridAxis("beta", 0.0, 1.0, 0.05),
        )
    elif metric == PAGERANK:
        axes = (GridAxis("damping", 0.025, 0.975, 0.025),)
    else:
        axes = (GridAxis("tau", 0.0, 2.0, 0.05),)
    return GridSpec(axes=axes, year_range=year_range, venues=venues)


def _allowed_axes(metric: str) -> set[str]:
    if metric == HCTCD:
        return {"alpha", "beta", "tau"}
    if metric == PAGERANK:
        return {"damping", "tau"}
    return {"tau"}


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if float(x.std()) == 0.0 or float(y.std()) == 0.0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def best_of(surface) -> tuple:
    """Argmax row under the tie rule: first strictly-better point wins.

    Rows are (param..., correlation) in grid order, so ties resolve to the
    lexicographically smallest parameter tuple.  NaN rows are skipped.
    """
    best = None
    for row in surface:
        corr = row[-1]
        if np.isnan(corr):
            continue
        if best is None or corr > best[-1]:
            best = row
    if best is None:
        raise TuningError("correlation undefined at every grid point")
    return best


def _zero_table(metric: str, window: WindowSpec, nodes) -> CentralityTable:
    return CentralityTable(
        metric=metric,
        params={},
        window_len=window.window_len,
        reference_year=window.reference_year,
        scores={a: 0.0 for a in nodes},
    )


def tune(
    corpus: Corpus,
    percentiles: PercentileTable,
    grid: GridSpec,
    metric: str,
    agg: AggregationSpec | None = None,
    window_len: int = 8,
    hctcd_params: HctcdParams | None = None,
    damping: float = 0.85,
    threads: int = 1,
) -> TuneResult:
    """Scan the grid and return the correlation-maximizing parameters.

    Grid points whose feature is constant over the subset get correlation
    NaN and are skipped by the argmax; if that happens at every point the
    objective is undefined and an error is raised.
    """
    if metric not in METRIC_NAMES:
        raise TuningError(f"unknown metric {metric!r}")
    names = grid.param_names()
    unknown = sorted(set(names) - _allowed_axes(metric))
    if unknown:
        raise TuningError(f"axes {unknown} not applicable to metric {metric}")
    agg = agg if agg is not None else AggregationSpec(kind="w_sum")
    base_hctcd = hctcd_params if hctcd_params is not None else HctcdParams(-0.2, 0.45)

    subset_corpus = corpus if grid.venues is None else corpus.filter_venues(grid.venues)
    subset = [
        rec
        for rec in (subset_corpus.records[p] for p in sorted(subset_corpus.records))
        if grid.year_range is None
        or grid.year_range[0] <= rec.year <= grid.year_range[1]
    ]
    if not subset:
        raise TuningError("evaluation subset is empty")
    try:
        target = np.array([percentiles.pcite[rec.paper_id] for rec in subset])
    except KeyError as exc:
        raise TuningError(f"paper {exc.args[0]!r} has no percentile") from exc

    years = sorted({rec.year for rec in subset})
    graphs = {
        y: build_graph(corpus, WindowSpec(reference_year=y, window_len=window_len))
        for y in years
    }
    profiles = {}
    if metric == HCTCD:
        profiles = {
            y: hctcd_profile(g) if g.n_nodes >= 2 else None for y, g in graphs.items()
        }

    points = grid.points()
    damping_cache: dict[float, dict[int, CentralityTable]] = {}
    if metric == PAGERANK:
        idx = names.index("damping") if "damping" in names else None
        values = sorted({p[idx] for p in points}) if idx is not None else [damping]
        for d in values:
            damping_cache[d] = {
                y: pagerank(g, damping=d)
                if g.n_nodes >= 2
                else _zero_table(metric, g.window, g.nodes())
                for y, g in graphs.items()
            }
    static_tables: dict[int, CentralityTable] = {}
    if metric not in (HCTCD, PAGERANK):
        static_tables = {
            y: compute_metric(g, metric)
            if g.n_nodes >= 2
            else _zero_table(metric, g.window, g.nodes())
            for y, g in graphs.items()
        }

    def tables_for(params: dict[str, float]) -> dict[int, CentralityTable]:
        if metric == HCTCD:
            alpha = params.get("alpha", base_hctcd.alpha)
            beta = params.get("beta", base_hctcd.beta)
            return {
                y: profiles[y].evaluate(alpha, beta)
                if profiles[y] is not None
                else _zero_table(metric, graphs[y].window, graphs[y].nodes())
                for y in years
            }
        if metric == PAGERANK:
            return damping_cache[params.get("damping", damping)]
        return static_tables

    def one_point(point: tuple[float, ...]) -> tuple:
        params = dict(zip(names, point))
        spec_pt = replace(agg, tau=params["tau"]) if "tau" in params else agg
        tables = tables_for(params)
        feats = np.array(
            [aggregate(tables[rec.year], rec, spec_pt) for rec in subset]
        )
        return (*point, _pearson(feats, target))

    surface = _map_ordered(one_point, points, threads)
    best = best_of(surface)
    return TuneResult(
        metric=metric,
        param_names=names,
        best_params=tuple(best[:-1]),
        best_value=float(best[-1]),
        surface=surface,
        subset_size=len(subset),
    )


def write_surface(result: TuneResult, path) -> None:
    """CSV export: one row per grid point, correlation last."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join([*result.param_names, "correlation"]) + "\n")
        for row in result.surface:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_surface(path) -> tuple[tuple[str, ...], list[tuple]]:
    """Read a surface CSV back as (param_names, rows)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise TuningError(f"{path}: empty surface file")
    header = lines[0].split(",")
    if header[-1] != "correlation" or len(header) < 2:
        raise TuningError(f"{path}: malformed header {lines[0]!r}")
    names = tuple(header[:-1])
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise TuningError(f"{path}: row has {len(parts)} fields, want {len(header)}")
        rows.append(tuple(float(p) for p in parts))
    return names, rows
