"""Seeded synthetic corpus generator for tests and the bundled fixture.

Teams are drawn with optional preferential attachment (``attachment`` > 0
makes prolific authors likelier picks and yields hubs; 0 keeps the degree
distribution near-symmetric, which identifies decay parameters best), and
a fraction of papers re-run an earlier team so collaboration counts vary.
Citation counts are assigned within each year as the rank of a planted
per-paper signal (a chosen centrality aggregate plus noise), so citation
percentiles are tied to the planted metric parameters and a grid search
can recover them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .aggregation import AggregationSpec, aggregate
from .centrality import HctcdParams, hctcd, pagerank
from .corpus import Corpus, PaperRecord
from .graph import WindowSpec, build_graph

VENUES = ("NeurIPS", "ICLR", "ICML")
PLANTS = ("hctcd", "pagerank", "none")


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator knobs; every field participates in determinism."""

    n_papers: int = 300
    n_authors: int = 120
    start_year: int = 2005
    end_year: int = 2018
    seed: int = 20250824
    plant: str = "hctcd"
    alpha: float = -0.2
    beta: float = 0.45
    damping: float = 0.9
    window_len: int = 8
    agg_kind: str = "w_ave"
    agg_tau: float = 0.3
    noise: float = 0.02
    team_sizes: tuple[int, ...] = (1, 2, 3, 4, 5)
    team_probs: tuple[float, ...] = (0.12, 0.28, 0.30, 0.18, 0.12)
    attachment: float = 0.0
    repeat_prob: float = 0.2
    with_content: bool = True

    def __post_init__(self):
        if self.plant not in PLANTS:
            raise ValueError(f"plant must be one of {PLANTS}, got {self.plant!r}")
        if self.end_year - self.start_year + 1 < 2:
            raise ValueError("need at least two years")


def _draw_team(rng, weights, size):
    """Sample distinct authors with probability proportional to weight."""
    p = weights / weights.sum()
    return list(rng.choice(len(weights), size=size, replace=False, p=p))


def _planted_feature(spec: SyntheticSpec, corpus: Corpus, year: int):
    """Planted per-paper signal for one publication year, or None."""
    if spec.plant == "none" or year - spec.window_len < spec.start_year:
        return None
    window = WindowSpec(reference_year=year, window_len=spec.window_len)
    graph = build_graph(corpus, window)
    if graph.n_nodes < 2:
        return None
    if spec.plant == "hctcd":
        table = hctcd(graph, HctcdParams(alpha=spec.alpha, beta=spec.beta))
    else:
        table = pagerank(graph, damping=spec.damping)
    agg = AggregationSpec(kind=spec.agg_kind, tau=spec.agg_tau)
    return {
        rec.paper_id: aggregate(table, rec, agg) for rec in corpus.papers_in_year(year)
    }


def generate_corpus(spec: SyntheticSpec = SyntheticSpec()) -> Corpus:
    """Build a complete synthetic corpus under the given spec."""
    rng = np.random.default_rng(spec.seed)
    years = list(range(spec.start_year, spec.end_year + 1))
    per_year = spec.n_papers // len(years)
    remainder = spec.n_papers - per_year * len(years)
    counts = {y: per_year for y in years}
    for y in years[-remainder:] if remainder else []:
        counts[y] += 1

    author_ids = [f"a{i:03d}" for i in range(spec.n_authors)]
    papers_written = np.zeros(spec.n_authors)
    team_probs = np.array(spec.team_probs) / sum(spec.team_probs)

    records: dict[str, PaperRecord] = {}
    past_teams: list[list[int]] = []
    serial = 0
    for year in years:
        for _ in range(counts[year]):
            serial += 1
            pid = f"p{serial:04d}"
            if past_teams and rng.uniform() < spec.repeat_prob:
                # standing collaborations: an earlier team publishes again,
                # raising pairwise counts independently of hub status
                team = past_teams[int(rng.integers(len(past_teams)))]
            else:
                size = int(rng.choice(spec.team_sizes, p=team_probs))
                size = min(size, spec.n_authors)
                weights = 1.0 + spec.attachment * papers_written
                team = _draw_team(rng, weights, size)
            past_teams.append(team)
            for a in team:
                papers_written[a] += 1.0
            records[pid] = PaperRecord(
                paper_id=pid,
                year=year,
                venue=str(rng.choice(VENUES)),
                authors=tuple(author_ids[i] for i in team),
                citations=0,
                title_len=int(rng.integers(20, 80)),
                abs_len=int(rng.integers(400, 1600)),
            )

    corpus = Corpus(records)

    # second pass: per-year citation ranks from the planted signal
    final: dict[str, PaperRecord] = {}
    for year in years:
        group = corpus.papers_in_year(year)
        if not group:
            continue
        feature = _planted_feature(spec, corpus, year)
        if feature is None:
            signal = rng.standard_normal(len(group))
        else:
            values = np.array([feature[rec.paper_id] for rec in group])
            spread = float(values.std())
            if spread == 0.0:
                spread = 1.0
            signal = values + spec.noise * spread * rng.standard_normal(len(group))
        order = np.argsort(signal, kind="stable")
        ranks = np.empty(len(group), dtype=int)
        ranks[order] = np.arange(len(group))
        n = len(group)
        for rec, rank in zip(group, ranks):
            content = None
            if spec.with_content:
                raw = 0.7 * (rank / max(n - 1, 1)) + 0.3 * rng.uniform()
                content = round(float(np.clip(raw, 0.0, 1.0)), 6)
            final[rec.paper_id] = replace(
                rec, citations=int(rank), content_score=content
            )
    return Corpus(final)


def default_fixture_spec() -> SyntheticSpec:
    """Spec of the corpus committed under fixtures/."""
    return SyntheticSpec()
