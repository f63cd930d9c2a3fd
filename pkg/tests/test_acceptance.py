"""Release acceptance suite.

Eleven independent checks covering the numerical core (centrality oracles,
decay degeneracies, regression likelihood machinery), the statistical
behavior of the estimators (parameter recovery, beta-vs-OLS direction,
planted-parameter grid recovery, predictive lift), and the CLI pipeline
(percentile law, byte-level determinism).

Each check records exactly one `[criterion NN] PASS/FAIL ...` verdict line;
conftest.py replays them in a terminal summary section after the run.
"""

import math
import random
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from citenet.aggregation import AggregationSpec, FeatureMatrix, aggregate
from citenet.betareg import (
    BetaRegression,
    LeastSquaresRegression,
    beta_log_likelihood,
    beta_score,
    lrt_from_ll,
    simulate_beta_response,
)
from citenet.centrality import (
    CentralityTable,
    HctcdParams,
    betweenness_centrality,
    closeness_centrality,
    degree_centrality,
    harmonic_closeness,
    hctcd,
    pagerank,
)
from citenet.cli import main as cli_main
from citenet.corpus import Corpus, PaperRecord, compute_percentiles
from citenet.graph import CoauthorGraph, EdgeData, WindowSpec
from citenet.predictive import SplitSpec, compare_feature_sets
from citenet.synthetic import SyntheticSpec, generate_corpus
from citenet.tuning import default_grid, tune

from _oracles import (
    graph_as_dicts,
    oracle_betweenness,
    oracle_closeness,
    oracle_degree,
    oracle_harmonic,
    oracle_hctcd,
    oracle_pagerank,
    random_graph,
)

REPO_ROOT = Path(__file__).resolve().parents[1]

VERDICTS: list[str] = []


def _report(num: int, label: str, ok: bool, detail: str = "") -> None:
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} {label}"
    if detail:
        line += f" ({detail})"
    VERDICTS.append(line)
    print(line)


def test_c01_centrality_oracle_suite():
    """All six metrics match brute-force enumeration on 200 small graphs."""
    rng = random.Random(417)
    t0 = time.perf_counter()
    max_err = 0.0
    max_err_pr = 0.0
    for _ in range(200):
        g = random_graph(rng, CoauthorGraph, WindowSpec, EdgeData, max_nodes=8)
        nodes, adj, counts, years = graph_as_dicts(g)
        t_p = g.window.reference_year
        alpha = rng.uniform(-1.0, 1.0)
        beta = rng.uniform(0.0, 1.0)
        checks = [
            (degree_centrality(g).scores, oracle_degree(nodes, adj)),
            (closeness_centrality(g).scores, oracle_closeness(nodes, adj)),
            (harmonic_closeness(g).scores, oracle_harmonic(nodes, adj)),
            (betweenness_centrality(g).scores, oracle_betweenness(nodes, adj)),
            (
                hctcd(g, HctcdParams(alpha=alpha, beta=beta)).scores,
                oracle_hctcd(nodes, adj, counts, years, alpha, beta, t_p),
            ),
        ]
        for got, want in checks:
            for a in nodes:
                max_err = max(max_err, abs(got[a] - want[a]))
        d = rng.uniform(0.05, 0.95)
        got_pr = pagerank(g, damping=d, tol=1e-12).scores
        want_pr = oracle_pagerank(nodes, adj, d)
        for a in nodes:
            max_err_pr = max(max_err_pr, abs(got_pr[a] - want_pr[a]))
    elapsed = time.perf_counter() - t0
    ok = max_err <= 1e-12 and max_err_pr <= 1e-10 and elapsed < 30.0
    detail = (
        f"200 graphs, max abs err {max_err:.2e}, "
        f"pagerank {max_err_pr:.2e}, {elapsed:.1f}s"
    )
    _report(1, "centrality oracle suite", ok, detail)
    assert ok, detail


def test_c02_decay_degeneracy_is_harmonic():
    """alpha=0, beta=0 collapses the decayed metric to harmonic closeness."""
    rng = random.Random(802)
    ok = True
    for _ in range(100):
        g = random_graph(rng, CoauthorGraph, WindowSpec, EdgeData, max_nodes=8)
        decayed = hctcd(g, HctcdParams(alpha=0.0, beta=0.0)).scores
        plain = harmonic_closeness(g).scores
        if decayed != plain:
            ok = False
            break
    _report(2, "zero-decay degeneracy equals harmonic closeness", ok, "100 graphs")
    assert ok


def test_c03_consecutive_author_weight_ratio():
    """Positional weights at tau=0.3 give consecutive ratio e^-0.3 ~ 0.74."""
    rec = PaperRecord(
        paper_id="p0",
        year=2016,
        venue="NeurIPS",
        authors=("first", "second"),
        citations=0,
        title_len=40,
        abs_len=800,
    )
    def table(scores):
        return CentralityTable(
            metric="Degree",
            params={},
            window_len=8,
            reference_year=2016,
            scores=scores,
        )
    spec = AggregationSpec(kind="w_sum", tau=0.3)
    w_first = aggregate(table({"first": 1.0, "second": 0.0}), rec, spec)
    w_second = aggregate(table({"first": 0.0, "second": 1.0}), rec, spec)
    ratio = w_second / w_first
    ok = abs(ratio - math.exp(-0.3)) <= 1e-12 and abs(ratio - 0.74) <= 5e-3
    _report(3, "consecutive author weight ratio", ok, f"ratio {ratio:.6f}")
    assert ok


def test_c04_lrt_statistic_arithmetic():
    """Known log-likelihood pairs give the expected test statistics."""
    first = lrt_from_ll(597.908, 613.436, df=1)
    second = lrt_from_ll(443.617, 613.436, df=1)
    ok = (
        abs(first.statistic - 31.056) <= 0.01
        and abs(second.statistic - 339.638) <= 0.01
    )
    detail = f"statistics {first.statistic:.3f}, {second.statistic:.3f}"
    _report(4, "likelihood-ratio arithmetic", ok, detail)
    assert ok, detail


def test_c05_beta_parameter_recovery():
    """MLE recovers (gamma, phi) within 3 SE in >= 95 of 100 replications."""
    gamma_true = np.array([-0.3, 1.2])
    phi_true = 2.0
    n = 5000
    t0 = time.perf_counter()
    hits = 0
    for rep in range(100):
        rng = np.random.default_rng(20000 + rep)
        # bounded covariate keeps both beta shapes away from zero, so the
        # simulated responses stay representable inside (0, 1)
        X = np.column_stack([np.ones(n), rng.uniform(-0.3, 0.8, n)])
        y = simulate_beta_response(X, gamma_true, phi_true, rng)
        fit = BetaRegression().fit(X, y).result_
        good = all(
            abs(fit.coefficients[j] - gamma_true[j]) < 3.0 * fit.std_errors[j]
            for j in range(2)
        )
        good = good and abs(fit.phi - phi_true) < 3.0 * fit.phi_std_error
        hits += good
    elapsed = time.perf_counter() - t0
    ok = hits >= 95 and elapsed < 120.0
    detail = f"{hits}/100 within 3 SE, {elapsed:.1f}s"
    _report(5, "beta regression parameter recovery", ok, detail)
    assert ok, detail


def test_c06_score_matches_central_differences():
    """Analytic gradient agrees with central finite differences."""
    rng = np.random.default_rng(606)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        n, k = 60, 3
        X = np.column_stack([np.ones(n), rng.standard_normal((n, k - 1))])
        y = rng.uniform(0.05, 0.95, size=n)
        gamma = rng.uniform(-1.0, 1.0, size=k)
        phi = rng.uniform(0.5, 8.0)
        analytic = beta_score(X, y, gamma, phi)
        theta = np.concatenate([gamma, [phi]])
        fd = np.empty_like(theta)
        for j in range(len(theta)):
            hi = theta.copy()
            lo = theta.copy()
            hi[j] += h
            lo[j] -= h
            fd[j] = (
                beta_log_likelihood(X, y, hi[:k], hi[k])
                - beta_log_likelihood(X, y, lo[:k], lo[k])
            ) / (2.0 * h)
        rel = float(np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12))
        worst = max(worst, rel)
    ok = worst <= 1e-5
    _report(6, "gradient vs central differences", ok, f"max rel err {worst:.2e}")
    assert ok, worst


def test_c07_beta_beats_ols_on_beta_data():
    """On curved beta-generated data the beta fit has lower in-sample MSE."""
    gamma = np.array([0.2, 2.5])
    phi = 5.0
    n = 2000
    wins = 0
    for rep in range(50):
        rng = np.random.default_rng(1000 + rep)
        X = np.column_stack([np.ones(n), rng.uniform(-1.0, 1.0, n)])
        y = simulate_beta_response(X, gamma, phi, rng)
        mse_beta = BetaRegression().fit(X, y).result_.mse
        mse_ols = LeastSquaresRegression().fit(X, y).result_.mse
        wins += mse_beta < mse_ols
    ok = wins >= 40
    _report(7, "beta lower MSE than least squares", ok, f"{wins}/50 replications")
    assert ok, wins


def test_c08_tuning_plant_and_recover():
    """Grid search lands within one step of planted decay / damping values."""
    spec_h = SyntheticSpec(
        seed=20250824,
        n_papers=600,
        n_authors=150,
        attachment=0.0,
        repeat_prob=0.2,
        agg_kind="w_ave",
        noise=0.02,
    )
    corpus_h = generate_corpus(spec_h)
    res_h = tune(
        corpus_h,
        compute_percentiles(corpus_h),
        replace(default_grid("HCTCD"), year_range=(2016, 2018)),
        "HCTCD",
        agg=AggregationSpec(kind="w_ave", tau=0.3),
    )
    best_h = res_h.best_dict()
    ok_h = (
        abs(best_h["alpha"] - spec_h.alpha) <= 0.05 + 1e-9
        and abs(best_h["beta"] - spec_h.beta) <= 0.05 + 1e-9
    )

    spec_p = SyntheticSpec(
        seed=7,
        plant="pagerank",
        n_papers=600,
        n_authors=150,
        attachment=0.5,
        repeat_prob=0.2,
        agg_kind="w_ave",
        noise=0.01,
    )
    corpus_p = generate_corpus(spec_p)
    res_p = tune(
        corpus_p,
        compute_percentiles(corpus_p),
        replace(default_grid("Cpagerank"), year_range=(2018, 2018)),
        "Cpagerank",
        agg=AggregationSpec(kind="w_ave", tau=0.3),
    )
    best_p = res_p.best_dict()
    ok_p = abs(best_p["damping"] - spec_p.damping) <= 0.025 + 1e-9

    ok = ok_h and ok_p
    detail = (
        f"planted ({spec_h.alpha}, {spec_h.beta}) -> "
        f"({best_h['alpha']}, {best_h['beta']}); "
        f"planted d={spec_p.damping} -> {best_p['damping']}"
    )
    _report(8, "plant-and-recover grid search", ok, detail)
    assert ok, detail


def test_c09_percentile_law_exact():
    """Distinct citation counts give pcite values {1/n, ..., 1} exactly."""
    hand = Corpus(
        records={
            f"p{i}": PaperRecord(
                paper_id=f"p{i}",
                year=2010 + (i % 3),
                venue="ICML",
                authors=(f"a{i}",),
                citations=107 * i + (i % 3),
                title_len=30,
                abs_len=500,
            )
            for i in range(25)
        }
    )
    generated = generate_corpus(SyntheticSpec())
    ok = True
    for corpus in (hand, generated):
        table = compute_percentiles(corpus)
        for year in corpus.years():
            ids = [r.paper_id for r in corpus.papers_in_year(year)]
            counts = [corpus.records[p].citations for p in ids]
            if len(set(counts)) != len(counts):
                ok = False  # fixture must provide distinct counts
            n = len(ids)
            got = sorted(table.pcite[p] for p in ids)
            want = [i / n for i in range(1, n + 1)]
            if got != want:
                ok = False
    _report(9, "exact percentile law", ok, "hand corpus + generated corpus")
    assert ok


def test_c10_pipeline_determinism(tmp_path, monkeypatch):
    """Two identical CLI runs produce byte-identical artifacts."""
    monkeypatch.chdir(REPO_ROOT)
    cfg = str(REPO_ROOT / "fixtures" / "pipeline.cfg")
    stages = (
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
    durations = []
    for run_dir in (tmp_path / "run1", tmp_path / "run2"):
        t0 = time.perf_counter()
        for stage in stages:
            code = cli_main([stage, "--config", cfg, "--out", str(run_dir)])
            assert code == 0, f"stage {stage} failed in {run_dir}"
        durations.append(time.perf_counter() - t0)

    names1 = sorted(p.name for p in (tmp_path / "run1").iterdir())
    names2 = sorted(p.name for p in (tmp_path / "run2").iterdir())
    identical = names1 == names2
    compared = 0
    for name in names1:
        if name == "manifest.txt":
            continue
        a = (tmp_path / "run1" / name).read_bytes()
        b = (tmp_path / "run2" / name).read_bytes()
        identical = identical and a == b
        compared += 1

    def stripped_manifest(d):
        lines = (d / "manifest.txt").read_text(encoding="utf-8").splitlines()
        return [
            " ".join(f for f in ln.split() if not f.startswith("time="))
            for ln in lines
        ]

    identical = identical and stripped_manifest(tmp_path / "run1") == stripped_manifest(
        tmp_path / "run2"
    )
    ok = identical and max(durations) < 60.0
    detail = (
        f"{compared} artifacts byte-identical, "
        f"runs {durations[0]:.1f}s / {durations[1]:.1f}s"
    )
    _report(10, "pipeline determinism", ok, detail)
    assert ok, detail


def test_c11_predictive_delta():
    """Adding a planted centrality column lowers held-out MSE."""
    n = 2000
    wins = 0
    for rep in range(50):
        rng = np.random.default_rng(3000 + rep)
        ids = [f"p{i:04d}" for i in range(n)]
        x = rng.uniform(-1.0, 1.0, n)
        z = rng.uniform(-1.0, 1.0, n)
        y = 0.5 + 0.4 * x + 0.02 * rng.standard_normal(n)
        with_m = FeatureMatrix(
            paper_ids=ids,
            feature_names=["Const", "Model", "Degree.Ave"],
            X=np.column_stack([np.ones(n), z, x]),
            y=y,
            response_name="pcite",
        )
        without_m = FeatureMatrix(
            paper_ids=ids,
            feature_names=["Const", "Model"],
            X=np.column_stack([np.ones(n), z]),
            y=y,
            response_name="pcite",
        )
        report = compare_feature_sets(
            with_m, without_m, SplitSpec(rng_seed=rep), model="LR"
        )
        wins += report.mse_delta < 0.0
    ok = wins >= 45
    _report(11, "predictive delta from centrality features", ok, f"{wins}/50")
    assert ok, wins
