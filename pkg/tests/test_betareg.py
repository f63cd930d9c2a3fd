"""Tests for the beta regression core, OLS baseline, LRT, and evaluation."""

import math

import numpy as np
import pytest
from scipy import stats

from citenet.betareg import (
    BetaRegression,
    ConvergenceError,
    LeastSquaresRegression,
    ModelError,
    beta_density,
    beta_hessian,
    beta_log_likelihood,
    beta_score,
    evaluate,
    fit_beta,
    fit_ols,
    fit_records,
    format_fit_report,
    likelihood_ratio_test,
    lrt_from_ll,
    probit,
    simulate_beta_response,
)
from citenet.aggregation import FeatureMatrix


def matrix_from(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"x{j}" for j in range(X.shape[1])]
    return FeatureMatrix(
        paper_ids=[f"p{i}" for i in range(len(y))],
        feature_names=list(names),
        X=X,
        y=np.asarray(y, dtype=float),
    )


def central_fd(f, x, h=1e-6):
    g = np.zeros_like(x, dtype=float)
    for i in range(len(x)):
        e = np.zeros_like(x, dtype=float)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def random_problem(rng, n=60, k=3):
    X = np.column_stack([np.ones(n), rng.standard_normal((n, k - 1))])
    y = rng.uniform(0.05, 0.95, size=n)
    return X, y


class TestProbit:
    def test_zero(self):
        assert probit(0.0) == 0.5

    def test_table_value(self):
        assert probit(1.959964) == pytest.approx(0.9750, abs=1e-4)

    def test_symmetry(self):
        for u in (-3.2, -0.7, 0.1, 2.5):
            assert probit(-u) == pytest.approx(1.0 - probit(u), abs=1e-14)


class TestBetaDensity:
    def test_uniform_case(self):
        for y in (0.1, 0.5, 0.93):
            assert beta_density(y, 0.5, 2.0) == pytest.approx(1.0, rel=1e-12)

    def test_symmetric_shapes(self):
        # mu=0.5, phi=4 gives shapes (2,2); at y=0.5 the density is 1.5
        assert beta_density(0.5, 0.5, 4.0) == pytest.approx(1.5, rel=1e-12)

    def test_reflection(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            y = rng.uniform(0.01, 0.99)
            mu = rng.uniform(0.05, 0.95)
            phi = rng.uniform(0.5, 10)
            assert beta_density(y, mu, phi) == pytest.approx(
                beta_density(1.0 - y, 1.0 - mu, phi), rel=1e-10
            )

    def test_integrates_to_one(self):
        from scipy.integrate import quad

        val, _ = quad(lambda y: beta_density(y, 0.3, 5.0), 0.0, 1.0)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_rejects_out_of_range(self):
        with pytest.raises(ModelError):
            beta_density(0.0, 0.5, 1.0)
        with pytest.raises(ModelError):
            beta_density(0.5, 1.0, 1.0)
        with pytest.raises(ModelError):
            beta_density(0.5, 0.5, 0.0)


class TestScoreAndHessian:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            X, y = random_problem(rng)
            gamma = rng.normal(0, 0.5, size=X.shape[1])
            phi = rng.uniform(0.8, 5.0)
            theta = np.concatenate([gamma, [phi]])

            def ll(t):
                return beta_log_likelihood(X, y, t[:-1], t[-1])

            analytic = beta_score(X, y, gamma, phi)
            fd = central_fd(ll, theta)
            rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-8)
            assert rel.max() <= 1e-5

    def test_hessian_matches_fd_of_score(self):
        rng = np.random.default_rng(7)
        X, y = random_problem(rng, n=40)
        gamma = rng.normal(0, 0.3, size=X.shape[1])
        phi = 2.3
        theta = np.concatenate([gamma, [phi]])
        H = beta_hessian(X, y, gamma, phi)
        for i in range(len(theta)):
            def score_i(t, i=i):
                return beta_score(X, y, t[:-1], t[-1])[i]

            row_fd = central_fd(score_i, theta, h=1e-6)
            rel = np.abs(H[i] - row_fd) / np.maximum(np.abs(row_fd), 1e-6)
            assert rel.max() <= 1e-4

    def test_hessian_symmetric(self):
        rng = np.random.default_rng(9)
        X, y = random_problem(rng)
        H = beta_hessian(X, y, np.zeros(X.shape[1]), 1.5)
        assert np.allclose(H, H.T, atol=1e-12)


class TestFitBeta:
    def test_parameter_recovery(self):
        # covariate kept bounded so both beta shapes stay well above 0 and
        # the simulated draws are representable away from {0,1}
        rng = np.random.default_rng(314)
        n = 4000
        X = np.column_stack([np.ones(n), rng.uniform(-0.3, 0.8, n)])
        gamma_true = np.array([-0.3, 1.2])
        phi_true = 2.0
        y = simulate_beta_response(X, gamma_true, phi_true, rng)
        fit = fit_beta(matrix_from(X, y))
        for j in range(2):
            assert abs(fit.coefficients[j] - gamma_true[j]) < 3 * fit.std_errors[j]
        assert abs(fit.phi - phi_true) < 3 * fit.phi_std_error

    def test_intercept_only_symmetric(self):
        rng = np.random.default_rng(5)
        y = np.concatenate([rng.uniform(0.2, 0.5, 300), 1 - rng.uniform(0.2, 0.5, 300)])
        X = np.ones((600, 1))
        fit = fit_beta(matrix_from(X, y))
        assert abs(fit.coefficients[0]) < 3 * fit.std_errors[0]

    def test_variance_relation(self):
        # model variance mu(1-mu)/(1+phi) at (0.5, 1.0) is 0.125
        mu, phi = 0.5, 1.0
        assert mu * (1 - mu) / (1 + phi) == 0.125

    def test_ll_path_non_decreasing(self):
        rng = np.random.default_rng(21)
        n = 500
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = simulate_beta_response(X, [0.2, -0.8], 3.0, rng)
        est = BetaRegression().fit(X, y)
        path = np.array(est.ll_path_)
        assert np.all(np.diff(path) >= -1e-9)
        assert est.result_.grad_norm <= 1e-8

    def test_fitted_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(3)
        n = 300
        X = np.column_stack([np.ones(n), rng.standard_normal(n) * 3])
        y = simulate_beta_response(X, [0.0, 2.5], 2.0, rng)
        fit = fit_beta(matrix_from(X, y))
        assert np.all(fit.fitted > 0.0) and np.all(fit.fitted < 1.0)

    def test_rejects_boundary_response(self):
        X = np.ones((20, 1))
        y = np.linspace(0.0, 0.9, 20)
        with pytest.raises(ModelError, match="squeeze"):
            fit_beta(matrix_from(X, y))

    def test_rejects_rank_deficient(self):
        rng = np.random.default_rng(1)
        col = rng.standard_normal(50)
        X = np.column_stack([np.ones(50), col, 2 * col])
        y = rng.uniform(0.1, 0.9, 50)
        with pytest.raises(ModelError, match="rank"):
            fit_beta(matrix_from(X, y))

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        n = 400
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = simulate_beta_response(X, [0.1, 0.7], 2.5, rng)
        f1 = fit_beta(matrix_from(X, y))
        f2 = fit_beta(matrix_from(X, y))
        assert np.array_equal(f1.coefficients, f2.coefficients)
        assert f1.phi == f2.phi

    def test_pseudo_r2_is_squared_corr(self):
        rng = np.random.default_rng(13)
        n = 500
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = simulate_beta_response(X, [0.0, 1.0], 4.0, rng)
        fit = fit_beta(matrix_from(X, y))
        manual = np.corrcoef(fit.fitted, y)[0, 1] ** 2
        assert fit.pseudo_r2 == pytest.approx(manual, rel=1e-12)

    def test_aic_bic(self):
        rng = np.random.default_rng(17)
        n = 200
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = simulate_beta_response(X, [0.0, 0.5], 2.0, rng)
        fit = fit_beta(matrix_from(X, y))
        k = 3  # two coefficients + precision
        assert fit.aic == pytest.approx(2 * k - 2 * fit.log_likelihood)
        assert fit.bic == pytest.approx(k * math.log(n) - 2 * fit.log_likelihood)


class TestFitOls:
    def test_exact_linear_zero_mse(self):
        rng = np.random.default_rng(2)
        X = np.column_stack([np.ones(30), rng.standard_normal(30)])
        y = X @ np.array([0.5, -1.2])
        fit = fit_ols(matrix_from(X, y))
        assert fit.mse == pytest.approx(0.0, abs=1e-20)
        assert fit.coefficients == pytest.approx([0.5, -1.2], rel=1e-10)

    def test_intercept_only_mean(self):
        y = np.array([0.2, 0.4, 0.9])
        fit = fit_ols(matrix_from(np.ones((3, 1)), y))
        assert fit.coefficients[0] == pytest.approx(y.mean(), rel=1e-12)

    def test_normal_equations_oracle(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            X = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
            y = rng.standard_normal(20)
            fit = fit_ols(matrix_from(X, y))
            want = np.linalg.solve(X.T @ X, X.T @ y)
            assert fit.coefficients == pytest.approx(want, abs=1e-8)
            # classical standard errors from the normal equations
            resid = y - X @ want
            s2 = resid @ resid / (20 - 3)
            se_want = np.sqrt(np.diag(s2 * np.linalg.inv(X.T @ X)))
            assert fit.std_errors == pytest.approx(se_want, rel=1e-8)

    def test_gaussian_ll(self):
        rng = np.random.default_rng(4)
        X = np.column_stack([np.ones(50), rng.standard_normal(50)])
        y = X @ np.array([0.1, 0.3]) + 0.2 * rng.standard_normal(50)
        fit = fit_ols(matrix_from(X, y))
        resid = y - fit.fitted
        s2 = np.mean(resid**2)
        want = np.sum(stats.norm.logpdf(resid, scale=np.sqrt(s2)))
        assert fit.log_likelihood == pytest.approx(want, rel=1e-10)


class TestEvaluate:
    def test_perfect_predictions(self):
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        y = X @ np.array([1.0, 2.0])
        fit = fit_ols(matrix_from(X, y))
        rep = evaluate(fit, X, y)
        assert rep.mse == pytest.approx(0.0, abs=1e-18)
        assert rep.mae == pytest.approx(0.0, abs=1e-9)
        assert rep.corr == pytest.approx(1.0)

    def test_constant_prediction_degenerate(self):
        X = np.ones((10, 1))
        y = np.linspace(0.1, 0.9, 10)
        fit = fit_ols(matrix_from(X, y))
        rep = evaluate(fit, X, y)
        assert rep.corr == 0.0
        assert rep.corr_degenerate

    def test_hand_rolled_sums(self):
        rng = np.random.default_rng(12)
        X = np.column_stack([np.ones(10), rng.standard_normal(10)])
        y = rng.uniform(0.1, 0.9, 10)
        fit = fit_ols(matrix_from(X, y))
        pred = fit.predict(X)
        rep = evaluate(fit, X, y)
        mse = sum((p - t) ** 2 for p, t in zip(pred, y)) / 10
        mae = sum(abs(p - t) for p, t in zip(pred, y)) / 10
        assert rep.mse == pytest.approx(mse, rel=1e-12)
        assert rep.mae == pytest.approx(mae, rel=1e-12)

    def test_feature_matrix_name_check(self):
        X = np.ones((12, 1))
        y = np.linspace(0.1, 0.9, 12)
        fit = fit_ols(matrix_from(X, y, names=["Const"]))
        other = matrix_from(X, y, names=["Different"])
        with pytest.raises(ModelError, match="mismatch"):
            evaluate(fit, other)

    def test_empty_test_set(self):
        X = np.ones((12, 1))
        y = np.linspace(0.1, 0.9, 12)
        fit = fit_ols(matrix_from(X, y))
        with pytest.raises(ModelError, match="empty"):
            evaluate(fit, np.ones((0, 1)), np.array([]))


class TestLrt:
    def test_table_values(self):
        assert lrt_from_ll(597.908, 613.436, 3).statistic == pytest.approx(
            31.056, abs=0.01
        )
        assert lrt_from_ll(443.617, 613.436, 3).statistic == pytest.approx(
            339.638, abs=0.01
        )

    def test_identical_models(self):
        res = lrt_from_ll(100.0, 100.0, 0)
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_chi2_oracle(self):
        res = lrt_from_ll(0.0, 3.841 / 2.0, 1)
        assert res.p_value == pytest.approx(0.05, abs=1e-3)

    def test_nested_fit_pair(self):
        rng = np.random.default_rng(6)
        n = 400
        X = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        y = simulate_beta_response(X, [0.1, 0.8, 0.0], 3.0, rng)
        full = fit_beta(matrix_from(X, y, names=["Const", "a", "b"]))
        reduced = fit_beta(matrix_from(X[:, :2], y, names=["Const", "a"]))
        res = likelihood_ratio_test(reduced, full)
        assert res.df == 1
        assert res.statistic >= 0.0
        assert 0.0 <= res.p_value <= 1.0

    def test_non_nested_rejected(self):
        rng = np.random.default_rng(6)
        n = 100
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = rng.uniform(0.2, 0.8, n)
        f1 = fit_ols(matrix_from(X, y, names=["Const", "a"]))
        f2 = fit_ols(matrix_from(X, y, names=["Const", "b"]))
        with pytest.raises(ModelError, match="nested"):
            likelihood_ratio_test(f1, f2)

    def test_mismatched_n_rejected(self):
        rng = np.random.default_rng(6)
        X = np.column_stack([np.ones(100), rng.standard_normal(100)])
        y = rng.uniform(0.2, 0.8, 100)
        f1 = fit_ols(matrix_from(X[:50], y[:50], names=["Const"][:1] + ["a"][:1]))
        f1 = fit_ols(matrix_from(X[:50], y[:50], names=["Const", "a"]))
        f2 = fit_ols(matrix_from(X, y, names=["Const", "a"]))
        with pytest.raises(ModelError, match="observation counts"):
            likelihood_ratio_test(f1, f2)

    def test_negative_beyond_tolerance_rejected(self):
        with pytest.raises(ModelError, match="lower log likelihood"):
            lrt_from_ll(10.0, 5.0, 1)


class TestBetaVsOls:
    def test_beta_usually_fits_better_on_beta_data(self):
        wins = 0
        reps = 12
        for seed in range(reps):
            rng = np.random.default_rng(1000 + seed)
            n = 800
            X = np.column_stack([np.ones(n), rng.standard_normal(n)])
            y = simulate_beta_response(X, [-0.4, 1.0], 2.0, rng)
            m = matrix_from(X, y)
            if fit_beta(m).mse <= fit_ols(m).mse:
                wins += 1
        assert wins >= reps * 0.8


class TestReports:
    def test_report_mentions_precision_and_stars(self):
        rng = np.random.default_rng(50)
        n = 600
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = simulate_beta_response(X, [0.0, 1.5], 2.0, rng)
        fit = fit_beta(matrix_from(X, y, names=["Const", "Closeness.1st"]))
        text = format_fit_report(fit)
        assert "Closeness.1st" in text
        assert "Precision" in text
        assert "Log-Likelihood" in text
        assert "R-squared" in text

    def test_records_round_trip_values(self):
        rng = np.random.default_rng(51)
        n = 300
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = simulate_beta_response(X, [0.2, 0.4], 3.0, rng)
        fit = fit_beta(matrix_from(X, y, names=["Const", "a"]))
        recs = dict(r.split("=", 1) for r in fit_records(fit))
        assert float(recs["coef.a"]) == fit.coefficients[1]
        assert float(recs["log_likelihood"]) == fit.log_likelihood
        assert recs["model"] == "beta"


class TestCrossImplementation:
    def test_agrees_with_statsmodels(self):
        betareg = pytest.importorskip("statsmodels.othermod.betareg")
        from statsmodels.genmod.families.links import Probit

        rng = np.random.default_rng(99)
        n = 1500
        X = np.column_stack([np.ones(n), rng.uniform(-0.5, 0.5, n)])
        y = simulate_beta_response(X, [0.1, 0.9], 3.0, rng)
        fit = fit_beta(matrix_from(X, y))
        res = betareg.BetaModel(y, X, link=Probit()).fit(disp=0)
        assert fit.coefficients == pytest.approx(res.params[:2], abs=1e-4)
        # the reference implementation carries log(phi) as its last parameter
        assert math.log(fit.phi) == pytest.approx(res.params[2], abs=1e-4)
        assert fit.log_likelihood == pytest.approx(res.llf, rel=1e-10)
        assert fit.std_errors == pytest.approx(res.bse[:2], rel=1e-4)
        assert fit.phi_std_error == pytest.approx(fit.phi * res.bse[2], rel=1e-4)


class TestEstimatorApi:
    def test_get_set_params(self):
        est = BetaRegression(tol=1e-8, max_iter=500)
        params = est.get_params()
        assert params == {"tol": 1e-8, "max_iter": 500}
        est.set_params(max_iter=100)
        assert est.max_iter == 100

    def test_predict_before_fit_errors(self):
        with pytest.raises(ModelError, match="not fitted"):
            BetaRegression().predict(np.ones((3, 1)))
        with pytest.raises(ModelError, match="not fitted"):
            LeastSquaresRegression().predict(np.ones((3, 1)))

    def test_predict_column_mismatch(self):
        rng = np.random.default_rng(60)
        X = np.column_stack([np.ones(50), rng.standard_normal(50)])
        y = rng.uniform(0.2, 0.8, 50)
        est = LeastSquaresRegression().fit(X, y)
        with pytest.raises(ModelError, match="columns"):
            est.predict(np.ones((5, 3)))
