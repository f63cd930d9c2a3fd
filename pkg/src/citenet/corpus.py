"""Paper metadata ingestion and same-year citation percentiles.

Input records arrive as line-delimited JSON, one object per line, with the
fields ``paper_id, year, venue, authors, citations, title|title_len,
abstract|abs_len, content_score``.  Loading validates every record and
builds a year index; percentile computation ranks papers by citation count
within their publication year.
"""

from __future__ import annotations

import json
import os
from bisect import bisect_right
from dataclasses import dataclass, field

DEFAULT_VENUES = ("NeurIPS", "ICLR", "ICML")

# Identifiers end up in comma-separated artifacts, so keep them delimiter-free.
_RESERVED_CHARS = (",", "\n", "\r", "#")


class CorpusError(ValueError):
    """Invalid input records or corpus-level constraint violations."""


@dataclass(frozen=True)
class PaperRecord:
    """One publication: identity, authorship, citations, and text lengths."""

    paper_id: str
    year: int
    venue: str
    authors: tuple[str, ...]
    citations: int
    title_len: int
    abs_len: int
    content_score: float | None = None

    @property
    def n_authors(self) -> int:
        return len(self.authors)


@dataclass
class Corpus:
    """Validated paper records keyed by id, with a year index."""

    records: dict[str, PaperRecord]
    year_index: dict[int, set[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.year_index:
            for pid, rec in self.records.items():
                self.year_index.setdefault(rec.year, set()).add(pid)

    def __len__(self) -> int:
        return len(self.records)

    def years(self) -> list[int]:
        return sorted(self.year_index)

    def papers_in_year(self, year: int) -> list[PaperRecord]:
        return [self.records[pid] for pid in sorted(self.year_index.get(year, ()))]

    def filter_venues(self, venues) -> "Corpus":
        """New corpus containing only papers published in the given venues."""
        keep = set(venues)
        records = {pid: r for pid, r in self.records.items() if r.venue in keep}
        return Corpus(records)


@dataclass
class PercentileTable:
    """Per-paper citation percentile in (0, 1], grouped by publication year."""

    pcite: dict[str, float]
    year: dict[str, int]

    def group_size(self, year: int) -> int:
        return sum(1 for y in self.year.values() if y == year)

    def paper_ids(self) -> list[str]:
        return sorted(self.pcite)


def _check_str(value, name, line_no):
    if not isinstance(value, str) or not value:
        raise CorpusError(f"line {line_no}: field '{name}' must be a non-empty string")
    for ch in _RESERVED_CHARS:
        if ch in value:
            raise CorpusError(
                f"line {line_no}: field '{name}' contains reserved character {ch!r}"
            )
    return value


def _check_int(value, name, line_no, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise CorpusError(f"line {line_no}: field '{name}' must be an integer")
    if minimum is not None and value < minimum:
        raise CorpusError(f"line {line_no}: field '{name}' must be >= {minimum}")
    return value


def parse_record(obj: dict, line_no: int, venues=DEFAULT_VENUES) -> PaperRecord:
    """Validate one decoded record; raises CorpusError naming line and field."""
    if not isinstance(obj, dict):
        raise CorpusError(f"line {line_no}: record is not an object")
    paper_id = _check_str(obj.get("paper_id"), "paper_id", line_no)
    year = _check_int(obj.get("year"), "year", line_no)
    venue = _check_str(obj.get("venue"), "venue", line_no)
    if venues is not None and venue not in venues:
        raise CorpusError(
            f"line {line_no}: paper {paper_id}: venue {venue!r} not in configured set"
        )
    authors = obj.get("authors")
    if not isinstance(authors, list) or not authors:
        raise CorpusError(
            f"line {line_no}: paper {paper_id}: authors must be a non-empty list"
        )
    authors = tuple(_check_str(a, "authors", line_no) for a in authors)
    if len(set(authors)) != len(authors):
        raise CorpusError(
            f"line {line_no}: paper {paper_id}: duplicate author_id within author list"
        )
    citations = _check_int(obj.get("citations"), "citations", line_no, minimum=0)
    if "title_len" in obj:
        title_len = _check_int(obj["title_len"], "title_len", line_no, minimum=0)
    elif "title" in obj and isinstance(obj["title"], str):
        title_len = len(obj["title"])
    else:
        raise CorpusError(f"line {line_no}: paper {paper_id}: missing title or title_len")
    if "abs_len" in obj:
        abs_len = _check_int(obj["abs_len"], "abs_len", line_no, minimum=0)
    elif "abstract" in obj and isinstance(obj["abstract"], str):
        abs_len = len(obj["abstract"])
    else:
        raise CorpusError(f"line {line_no}: paper {paper_id}: missing abstract or abs_len")
    content_score = obj.get("content_score")
    if content_score is not None:
        if not isinstance(content_score, (int, float)) or isinstance(content_score, bool):
            raise CorpusError(f"line {line_no}: field 'content_score' must be numeric")
        content_score = float(content_score)
        if not 0.0 <= content_score <= 1.0:
            raise CorpusError(
                f"line {line_no}: paper {paper_id}: content_score outside [0,1]"
            )
    return PaperRecord(
        paper_id=paper_id,
        year=year,
        venue=venue,
        authors=authors,
        citations=citations,
        title_len=title_len,
        abs_len=abs_len,
        content_score=content_score,
    )


def load_corpus(source, venues=DEFAULT_VENUES) -> Corpus:
    """Load a corpus from a path or an iterable of JSON lines.

    All validation problems are collected and reported together; duplicate
    paper ids are reported with both offending line numbers.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return load_corpus(fh, venues=venues)

    records: dict[str, PaperRecord] = {}
    first_line: dict[str, int] = {}
    problems: list[str] = []
    n_lines = 0
    for line_no, line in enumerate(source, start=1):
        if not line.strip():
            continue
        n_lines += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append(f"line {line_no}: malformed JSON ({exc.msg})")
            continue
        try:
            rec = parse_record(obj, line_no, venues=venues)
        except CorpusError as exc:
            problems.append(str(exc))
            continue
        if rec.paper_id in records:
            problems.append(
                f"line {line_no}: duplicate paper_id {rec.paper_id!r} "
                f"(first seen at line {first_line[rec.paper_id]})"
            )
            continue
        records[rec.paper_id] = rec
        first_line[rec.paper_id] = line_no
    if problems:
        raise CorpusError("invalid corpus input:\n  " + "\n  ".join(problems))
    if n_lines == 0 or not records:
        raise CorpusError("empty corpus: no records in input")
    return Corpus(records)


def write_corpus(corpus: Corpus, path) -> None:
    """Serialize a corpus back to canonical JSON lines (sorted by paper_id)."""
    with open(path, "w", encoding="utf-8") as fh:
        for pid in sorted(corpus.records):
            rec = corpus.records[pid]
            obj = {
                "paper_id": rec.paper_id,
                "year": rec.year,
                "venue": rec.venue,
                "authors": list(rec.authors),
                "citations": rec.citations,
                "title_len": rec.title_len,
                "abs_len": rec.abs_len,
            }
            if rec.content_score is not None:
                obj["content_score"] = rec.content_score
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def compute_percentiles(corpus: Corpus) -> PercentileTable:
    """Same-year citation percentile: share of papers cited at most as much.

    For paper i in year group S, pcite_i = |{j in S : c_j <= c_i}| / |S|,
    with i counted in its own group, so the minimum is 1/|S| and papers with
    equal citation counts share the top rank of their tie group.
    """
    if not corpus.records:
        raise CorpusError("cannot compute percentiles of an empty corpus")
    pcite: dict[str, float] = {}
    year: dict[str, int] = {}
    for yr, pids in corpus.year_index.items():
        group = [corpus.records[pid] for pid in sorted(pids)]
        counts = sorted(rec.citations for rec in group)
        n = len(counts)
        for rec in group:
            pcite[rec.paper_id] = bisect_right(counts, rec.citations) / n
            year[rec.paper_id] = yr
    return PercentileTable(pcite=pcite, year=year)


def squeeze_value(y: float, n: int) -> float:
    """Compress a value in (0,1] strictly inside (0,1): (y*(n-1)+0.5)/n."""
    if n < 1:
        raise CorpusError(f"group size must be >= 1, got {n}")
    return (y * (n - 1) + 0.5) / n


def squeeze_to_open_interval(table: PercentileTable) -> PercentileTable:
    """Groupwise boundary compression so no percentile touches 0 or 1.

    Applied per year group with n = group size; the map is affine and
    increasing, so within-group ordering is preserved.
    """
    sizes = {yr: 0 for yr in set(table.year.values())}
    for yr in table.year.values():
        sizes[yr] += 1
    squeezed = {
        pid: squeeze_value(val, sizes[table.year[pid]])
        for pid, val in table.pcite.items()
    }
    return PercentileTable(pcite=squeezed, year=dict(table.year))


def write_percentiles(raw: PercentileTable, squeezed: PercentileTable, path) -> None:
    """Write `paper_id,year,pcite,pcite_squeezed` rows sorted by paper_id."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("paper_id,year,pcite,pcite_squeezed\n")
        for pid in raw.paper_ids():
            fh.write(
                f"{pid},{raw.year[pid]},{raw.pcite[pid]!r},{squeezed.pcite[pid]!r}\n"
            )


def read_percentiles(path) -> tuple[PercentileTable, PercentileTable]:
    raw_p: dict[str, float] = {}
    sq_p: dict[str, float] = {}
    years: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "paper_id,year,pcite,pcite_squeezed":
            raise CorpusError(f"unexpected percentile header: {header!r}")
        for line in fh:
            pid, yr, raw, sq = line.rstrip("\n").split(",")
            raw_p[pid] = float(raw)
            sq_p[pid] = float(sq)
            years[pid] = int(yr)
    return (
        PercentileTable(pcite=raw_p, year=years),
        PercentileTable(pcite=sq_p, year=dict(years)),
    )
