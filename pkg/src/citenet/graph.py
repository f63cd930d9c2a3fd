"""Time-windowed co-authorship graphs.

A graph for reference year t and window length W covers papers published in
[t-W, t-1].  Every author of a covered paper becomes a node; each paper
contributes an edge between every unordered pair of its authors.  Edges
accumulate a collaboration count and remember the most recent collaboration
year.  Authors whose covered papers are all solo-authored stay as isolated
nodes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations

from .corpus import Corpus


class GraphError(ValueError):
    """Malformed snapshot files or inconsistent graph operations."""


@dataclass(frozen=True)
class WindowSpec:
    """Half-open description of the covered years: [start, end] inclusive."""

    reference_year: int
    window_len: int

    def __post_init__(self):
        if self.window_len < 1:
            raise GraphError(f"window_len must be >= 1, got {self.window_len}")

    @property
    def start(self) -> int:
        return self.reference_year - self.window_len

    @property
    def end(self) -> int:
        return self.reference_year - 1

    def contains(self, year: int) -> bool:
        return self.start <= year <= self.end


@dataclass(frozen=True)
class EdgeData:
    """Collaboration count and most recent collaboration year for one pair."""

    count: int
    last_year: int


class CoauthorGraph:
    """Undirected simple graph with per-edge collaboration annotations."""

    def __init__(self, window: WindowSpec):
        self.window = window
        self._adj: dict[str, dict[str, EdgeData]] = {}

    @property
    def n_nodes(self) -> int:
        return len(self._adj)

    def nodes(self) -> list[str]:
        return sorted(self._adj)

    def has_node(self, a: str) -> bool:
        return a in self._adj

    def add_node(self, a: str) -> None:
        self._adj.setdefault(a, {})

    def add_collaboration(self, a: str, b: str, year: int) -> None:
        """Record one co-authored paper between a and b in the given year."""
        if a == b:
            raise GraphError(f"self-loop rejected for author {a!r}")
        if not self.window.contains(year):
            raise GraphError(
                f"year {year} outside window [{self.window.start}, {self.window.end}]"
            )
        self.add_node(a)
        self.add_node(b)
        prev = self._adj[a].get(b)
        if prev is None:
            data = EdgeData(count=1, last_year=year)
        else:
            data = EdgeData(count=prev.count + 1, last_year=max(prev.last_year, year))
        self._adj[a][b] = data
        self._adj[b][a] = data

    def _set_edge(self, a: str, b: str, data: EdgeData) -> None:
        self.add_node(a)
        self.add_node(b)
        self._adj[a][b] = data
        self._adj[b][a] = data

    def degree(self, a: str) -> int:
        return len(self._adj[a])

    def neighbors(self, a: str) -> list[str]:
        return sorted(self._adj[a])

    def edge(self, a: str, b: str) -> EdgeData | None:
        return self._adj.get(a, {}).get(b)

    def edges(self):
        """Unordered edges as (a, b, EdgeData) with a < b, sorted."""
        for a in sorted(self._adj):
            for b in sorted(self._adj[a]):
                if a < b:
                    yield a, b, self._adj[a][b]

    def n_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self._adj.values()) // 2

    def isolated_nodes(self) -> list[str]:
        return sorted(a for a, nbrs in self._adj.items() if not nbrs)

    def components(self) -> list[list[str]]:
        """Connected components, each sorted, ordered by smallest member."""
        seen: set[str] = set()
        comps: list[list[str]] = []
        for a in sorted(self._adj):
            if a in seen:
                continue
            comp = sorted(bfs_distances(self, a))
            seen.update(comp)
            comps.append(comp)
        return comps


def bfs_distances(graph: CoauthorGraph, source: str) -> dict[str, int]:
    """Unweighted shortest-path lengths from source to every reachable node.

    Includes the source itself at distance 0.  Neighbors are expanded in
    sorted order so the result insertion order is deterministic.
    """
    if not graph.has_node(source):
        raise GraphError(f"unknown node {source!r}")
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def build_graph(corpus: Corpus, window: WindowSpec) -> CoauthorGraph:
    """Build the co-authorship graph over papers within the window."""
    graph = CoauthorGraph(window)
    for pid in sorted(corpus.records):
        rec = corpus.records[pid]
        if not window.contains(rec.year):
            continue
        for author in rec.authors:
            graph.add_node(author)
        for a, b in combinations(sorted(rec.authors), 2):
            graph.add_collaboration(a, b, rec.year)
    return graph


def write_graph(graph: CoauthorGraph, path) -> None:
    """Write an edge-list snapshot.

    Line 1 is `#window <start> <end> <reference>`; edges follow as
    `a,b,count,last_year` with a < b; isolated nodes appear afterwards as
    `#node,author_id`.  Output ordering is deterministic.
    """
    w = graph.window
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#window {w.start} {w.end} {w.reference_year}\n")
        for a, b, data in graph.edges():
            fh.write(f"{a},{b},{data.count},{data.last_year}\n")
        for a in graph.isolated_nodes():
            fh.write(f"#node,{a}\n")


def read_graph(path) -> CoauthorGraph:
    """Read a snapshot written by write_graph, validating every line."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split()
        if len(parts) != 4 or parts[0] != "#window":
            raise GraphError(f"bad snapshot header: {header!r}")
        try:
            start, end, reference = int(parts[1]), int(parts[2]), int(parts[3])
        except ValueError as exc:
            raise GraphError(f"bad snapshot header: {header!r}") from exc
        window = WindowSpec(reference_year=reference, window_len=reference - start)
        if window.start != start or window.end != end:
            raise GraphError(
                f"inconsistent window bounds {start}..{end} for reference {reference}"
            )
        graph = CoauthorGraph(window)
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#node,"):
                graph.add_node(line[len("#node,"):])
                continue
            fields = line.split(",")
            if len(fields) != 4:
                raise GraphError(f"line {line_no}: expected a,b,count,last_year")
            a, b, count_s, year_s = fields
            try:
                count, last_year = int(count_s), int(year_s)
            except ValueError as exc:
                raise GraphError(f"line {line_no}: non-integer edge fields") from exc
            if count < 1:
                raise GraphError(f"line {line_no}: collaboration count {count} < 1")
            if not window.contains(last_year):
                raise GraphError(
                    f"line {line_no}: last collaboration year {last_year} outside "
                    f"window [{window.start}, {window.end}]"
                )
            if a == b:
                raise GraphError(f"line {line_no}: self-loop {a!r}")
            if graph.edge(a, b) is not None:
                raise GraphError(f"line {line_no}: duplicate edge {a!r},{b!r}")
            graph._set_edge(a, b, EdgeData(count=count, last_year=last_year))
    return graph
