"""Per-author centrality scores on a co-authorship graph.

Six metrics: degree, closeness (component-local scaling), harmonic
closeness, betweenness (unordered pairs, unnormalized), PageRank, and a
decayed harmonic closeness whose neighbor terms are weighted by
e^{-alpha*(t_p - t_c) + beta*c_ij} with t_p the graph reference year,
t_c the pair's last collaboration year, and c_ij its collaboration count.

Per-source work (BFS and accumulation) can be spread over threads; results
are merged in node order so output is identical for any thread count.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import CoauthorGraph, bfs_distances

DEGREE = "Degree"
CLOSENESS = "Closeness"
HARMONIC = "Harmonic"
BETWEENNESS = "Betweenness"
PAGERANK = "Cpagerank"
HCTCD = "HCTCD"

METRIC_NAMES = (DEGREE, CLOSENESS, HARMONIC, BETWEENNESS, PAGERANK, HCTCD)

PAIR_SCOPES = ("neighbors-only", "all-pairs")


class CentralityError(ValueError):
    """Invalid parameters or convergence failures."""


@dataclass(frozen=True)
class HctcdParams:
    """Decay parameters: alpha on collaboration age, beta on count."""

    alpha: float
    beta: float
    pair_scope: str = "neighbors-only"

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise CentralityError(f"{name} must be a finite real, got {val!r}")
        if self.pair_scope not in PAIR_SCOPES:
            raise CentralityError(
                f"pair_scope must be one of {PAIR_SCOPES}, got {self.pair_scope!r}"
            )


@dataclass
class CentralityTable:
    """Scores for one metric on one windowed graph."""

    metric: str
    params: dict[str, object]
    window_len: int
    reference_year: int
    scores: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for author, score in self.scores.items():
            if math.isnan(score) or score < 0.0:
                raise CentralityError(
                    f"score for {author!r} is invalid: {score!r}"
                )

    def score(self, author: str, default: float | None = None) -> float:
        if author in self.scores:
            return self.scores[author]
        if default is None:
            raise CentralityError(f"no score for author {author!r}")
        return default


def _empty_warned(graph: CoauthorGraph, metric: str, params: dict) -> CentralityTable:
    if graph.n_nodes:
        warnings.warn(
            f"{metric}: graph has fewer than 2 nodes; all scores set to 0",
            stacklevel=3,
        )
    return CentralityTable(
        metric=metric,
        params=params,
        window_len=graph.window.window_len,
        reference_year=graph.window.reference_year,
        scores={a: 0.0 for a in graph.nodes()},
    )


def _table(graph: CoauthorGraph, metric: str, params: dict, scores) -> CentralityTable:
    return CentralityTable(
        metric=metric,
        params=params,
        window_len=graph.window.window_len,
        reference_year=graph.window.reference_year,
        scores=scores,
    )


def _map_ordered(fn, items, threads: int = 1) -> list:
    """Apply fn over items, optionally threaded, preserving input order."""
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def degree_centrality(graph: CoauthorGraph) -> CentralityTable:
    """Distinct co-author count divided by N-1."""
    n = graph.n_nodes
    if n < 2:
        return _empty_warned(graph, DEGREE, {})
    scores = {a: graph.degree(a) / (n - 1) for a in graph.nodes()}
    return _table(graph, DEGREE, {}, scores)


def closeness_centrality(graph: CoauthorGraph, threads: int = 1) -> CentralityTable:
    """Reciprocal mean distance within the component, scaled by reach.

    For node i with r reachable nodes (self included) and distance sum s:
    score = ((r-1)/s) * ((r-1)/(N-1)); isolated nodes score 0.
    """
    n = graph.n_nodes
    if n < 2:
        return _empty_warned(graph, CLOSENESS, {})

    def one(a):
        dist = bfs_distances(graph, a)
        r = len(dist)
        total = sum(dist.values())
        if total == 0:
            return 0.0
        return ((r - 1) / total) * ((r - 1) / (n - 1))

    nodes = graph.nodes()
    values = _map_ordered(one, nodes, threads)
    return _table(graph, CLOSENESS, {}, dict(zip(nodes, values)))


def _harmonic_sum(graph: CoauthorGraph, a: str) -> float:
    total = 0.0
    for b, d in bfs_distances(graph, a).items():
        if b == a:
            continue
        total += (1.0 / d) * 1.0
    return total


def harmonic_closeness(graph: CoauthorGraph, threads: int = 1) -> CentralityTable:
    """Mean reciprocal distance; unreachable pairs contribute 0."""
    n = graph.n_nodes
    if n < 2:
        return _empty_warned(graph, HARMONIC, {})
    nodes = graph.nodes()
    values = _map_ordered(lambda a: _harmonic_sum(graph, a) / (n - 1), nodes, threads)
    return _table(graph, HARMONIC, {}, dict(zip(nodes, values)))


def betweenness_centrality(graph: CoauthorGraph, threads: int = 1) -> CentralityTable:
    """Shortest-path dependency accumulation over BFS DAGs.

    Each unordered pair {s,t} contributes sigma_st(i)/sigma_st once;
    endpoints are excluded; no normalization is applied.
    """
    n = graph.n_nodes
    if n < 2:
        return _empty_warned(graph, BETWEENNESS, {})
    nodes = graph.nodes()

    def from_source(s):
        contrib = {}
        stack = []
        pred: dict[str, list[str]] = {}
        sigma = {s: 1.0}
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in graph.neighbors(v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] = sigma.get(w, 0.0) + sigma[v]
                    pred.setdefault(w, []).append(v)
        delta = dict.fromkeys(stack, 0.0)
        while stack:
            w = stack.pop()
            for v in pred.get(w, ()):
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != s:
                contrib[w] = contrib.get(w, 0.0) + delta[w]
        return contrib

    scores = dict.fromkeys(nodes, 0.0)
    for contrib in _map_ordered(from_source, nodes, threads):
        for v, val in contrib.items():
            scores[v] += val
    # the source loop visits each unordered pair twice
    for v in scores:
        scores[v] /= 2.0
    return _table(graph, BETWEENNESS, {}, scores)


def pagerank(
    graph: CoauthorGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> CentralityTable:
    """Fixed point of the damped random walk on the undirected graph.

    Each edge acts as two directed links; isolated nodes spread their mass
    uniformly.  Iteration stops when the max absolute per-node change drops
    below tol; exceeding max_iter is an error carrying the last residual.
    """
    if not 0.0 < damping < 1.0:
        raise CentralityError(f"damping must be in (0,1), got {damping!r}")
    n = graph.n_nodes
    params = {"damping": damping, "tol": tol, "max_iter": max_iter}
    if n == 0:
        return _empty_warned(graph, PAGERANK, params)
    nodes = graph.nodes()
    index = {a: i for i, a in enumerate(nodes)}
    deg = np.array([graph.degree(a) for a in nodes], dtype=float)
    src = []
    dst = []
    for a in nodes:
        for b in graph.neighbors(a):
            src.append(index[b])
            dst.append(index[a])
    src = np.array(src, dtype=np.intp)
    dst = np.array(dst, dtype=np.intp)
    dangling = deg == 0.0
    safe_deg = np.where(dangling, 1.0, deg)

    scores = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        contrib = scores / safe_deg
        inflow = np.bincount(dst, weights=contrib[src], minlength=n).astype(
            float, copy=False
        )
        inflow += scores[dangling].sum() / n
        new = (1.0 - damping) / n + damping * inflow
        residual = np.abs(new - scores).max()
        scores = new
        if residual < tol:
            break
    else:
        raise CentralityError(
            f"pagerank did not converge in {max_iter} iterations "
            f"(last residual {residual:.3e})"
        )
    return _table(graph, PAGERANK, params, {a: float(scores[index[a]]) for a in nodes})


def hctcd(graph: CoauthorGraph, params: HctcdParams, threads: int = 1) -> CentralityTable:
    """Harmonic closeness with temporal and collaboration-count decay.

    Neighbor terms carry weight e^{-alpha*(t_p - t_c) + beta*c}; reachable
    non-neighbors carry weight 1 (under all-pairs scope they get c = 0 and
    t_c = t_p, which evaluates to the same factor).  With alpha = beta = 0
    every weight is exactly 1 and the result is bitwise equal to
    harmonic_closeness: both walk the same BFS ordering.
    """
    n = graph.n_nodes
    meta = {
        "alpha": params.alpha,
        "beta": params.beta,
        "pair_scope": params.pair_scope,
    }
    if n < 2:
        return _empty_warned(graph, HCTCD, meta)
    t_p = graph.window.reference_year
    all_pairs = params.pair_scope == "all-pairs"
    alpha, beta = params.alpha, params.beta

    def one(a):
        total = 0.0
        for b, d in bfs_distances(graph, a).items():
            if b == a:
                continue
            edge = graph.edge(a, b)
            if edge is not None:
                w = math.exp(-alpha * (t_p - edge.last_year) + beta * edge.count)
            elif all_pairs:
                w = math.exp(-alpha * 0.0 + beta * 0.0)
            else:
                w = 1.0
            total += (1.0 / d) * w
        return total / (n - 1)

    nodes = graph.nodes()
    values = _map_ordered(one, nodes, threads)
    return _table(graph, HCTCD, meta, dict(zip(nodes, values)))


@dataclass
class HctcdProfile:
    """Per-node precomputation making repeated (alpha, beta) scans cheap.

    BFS distances do not depend on the decay parameters, so each node's sum
    splits into a constant part (reachable non-neighbors, weight 1) and a
    neighbor part driven by flat arrays of collaboration ages and counts,
    tagged with the owning node's index.
    """

    window_len: int
    reference_year: int
    nodes: list[str]
    far_sum: np.ndarray
    ages: np.ndarray
    counts: np.ndarray
    owner: np.ndarray
    inv_nm1: float

    def evaluate(self, alpha: float, beta: float) -> CentralityTable:
        w = np.exp(-alpha * self.ages + beta * self.counts)
        near = np.bincount(self.owner, weights=w, minlength=len(self.nodes))
        totals = (self.far_sum + near) * self.inv_nm1
        meta = {"alpha": alpha, "beta": beta, "pair_scope": "neighbors-only"}
        return CentralityTable(
            metric=HCTCD,
            params=meta,
            window_len=self.window_len,
            reference_year=self.reference_year,
            scores={a: float(totals[i]) for i, a in enumerate(self.nodes)},
        )


def hctcd_profile(graph: CoauthorGraph, threads: int = 1) -> HctcdProfile:
    """Precompute the parameter-independent pieces of the decayed metric."""
    n = graph.n_nodes
    if n < 2:
        raise CentralityError("profile requires a graph with at least 2 nodes")
    t_p = graph.window.reference_year
    nodes = graph.nodes()

    def one(item):
        i, a = item
        far = 0.0
        rows = []
        for b, d in bfs_distances(graph, a).items():
            if b == a:
                continue
            edge = graph.edge(a, b)
            if edge is not None:
                rows.append((i, float(t_p - edge.last_year), float(edge.count)))
            else:
                far += 1.0 / d
        return far, rows

    parts = _map_ordered(one, list(enumerate(nodes)), threads)
    flat = [row for _, rows in parts for row in rows]
    return HctcdProfile(
        window_len=graph.window.window_len,
        reference_year=graph.window.reference_year,
        nodes=nodes,
        far_sum=np.array([p[0] for p in parts]),
        ages=np.array([r[1] for r in flat]),
        counts=np.array([r[2] for r in flat]),
        owner=np.array([r[0] for r in flat], dtype=np.intp),
        inv_nm1=1.0 / (n - 1),
    )


def _format_param(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_centrality(table: CentralityTable, path) -> None:
    """Serialize as `author_id,score` under a parameter-naming header."""
    if table.params:
        params = ";".join(
            f"{k}={_format_param(v)}" for k, v in sorted(table.params.items())
        )
    else:
        params = "-"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# metric={table.metric} params={params} "
            f"window_len={table.window_len} reference_year={table.reference_year}\n"
        )
        fh.write("author_id,score\n")
        for author in sorted(table.scores):
            fh.write(f"{author},{table.scores[author]!r}\n")


def _parse_param(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def read_centrality(path) -> CentralityTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        fields = {}
        if header.startswith("# "):
            for token in header[2:].split():
                if "=" in token:
                    key, _, value = token.partition("=")
                    fields[key] = value
        required = {"metric", "params", "window_len", "reference_year"}
        if not required <= set(fields):
            raise CentralityError(f"bad centrality header: {header!r}")
        params: dict[str, object] = {}
        if fields["params"] != "-":
            for pair in fields["params"].split(";"):
                key, _, value = pair.partition("=")
                params[key] = _parse_param(value)
        column_line = fh.readline().rstrip("\n")
        if column_line != "author_id,score":
            raise CentralityError(f"bad centrality column line: {column_line!r}")
        scores = {}
        for line_no, line in enumerate(fh, start=3):
            line = line.rstrip("\n")
            if not line:
                continue
            author, _, value = line.partition(",")
            if not author or not value:
                raise CentralityError(f"line {line_no}: expected author_id,score")
            scores[author] = float(value)
    return CentralityTable(
        metric=fields["metric"],
        params=params,
        window_len=int(fields["window_len"]),
        reference_year=int(fields["reference_year"]),
        scores=scores,
    )


def compute_metric(
    graph: CoauthorGraph,
    metric: str,
    *,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 10000,
    hctcd_params: HctcdParams | None = None,
    threads: int = 1,
) -> CentralityTable:
    """Dispatch a metric by name; used by the pipeline layers."""
    if metric == DEGREE:
        return degree_centrality(graph)
    if metric == CLOSENESS:
        return closeness_centrality(graph, threads=threads)
    if metric == HARMONIC:
        return harmonic_closeness(graph, threads=threads)
    if metric == BETWEENNESS:
        return betweenness_centrality(graph, threads=threads)
    if metric == PAGERANK:
        return pagerank(graph, damping=damping, tol=tol, max_iter=max_iter)
    if metric == HCTCD:
        if hctcd_params is None:
            hctcd_params = HctcdParams(alpha=-0.2, beta=0.45)
        return hctcd(graph, hctcd_params, threads=threads)
    raise CentralityError(f"unknown metric {metric!r}")
