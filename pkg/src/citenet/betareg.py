"""Beta regression with a probit mean link, fit by maximum likelihood.

The response y lies strictly in (0,1).  The mean is mu = Phi(X gamma) with
Phi the standard normal CDF; the beta shapes are a = mu*phi and
b = (1-mu)*phi, so Var(y|X) = mu(1-mu)/(1+phi).  The likelihood is
maximized over (gamma, log phi): a quasi-Newton pass with the analytic
score, then Newton polishing with the analytic Hessian until the gradient
max-norm falls below tolerance.  Standard errors come from the inverse
observed information; phi's SE uses the delta method from the log scale.

An ordinary-least-squares baseline, model evaluation metrics, and the
likelihood-ratio test for nested models live here too, since they share
the fit-report machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats
from sklearn.base import BaseEstimator

MU_EPS = 1e-12
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class ModelError(ValueError):
    """Invalid design matrix, response, or model combination."""


class ConvergenceError(RuntimeError):
    """Optimizer failed to reach the gradient tolerance."""


def probit(u):
    """Standard normal CDF, accurate to better than 1e-12."""
    return special.ndtr(u)


def _norm_pdf(u):
    return np.exp(-0.5 * u * u) / _SQRT_2PI


def beta_density(y, mu, phi):
    """Beta density in mean-precision form, evaluated through log space."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(y <= 0) or np.any(y >= 1):
        raise ModelError("y must lie strictly in (0,1)")
    if np.any(mu <= 0) or np.any(mu >= 1):
        raise ModelError("mu must lie strictly in (0,1)")
    if phi <= 0:
        raise ModelError(f"phi must be positive, got {phi!r}")
    a = mu * phi
    b = (1.0 - mu) * phi
    log_f = (a - 1.0) * np.log(y) + (b - 1.0) * np.log1p(-y) - special.betaln(a, b)
    return np.exp(log_f)


def _design(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ModelError(f"X must be 2-dimensional, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ModelError("X contains NaN or inf")
    if y is None:
        return X
    y = np.asarray(y, dtype=float).ravel()
    if len(y) != X.shape[0]:
        raise ModelError(f"X has {X.shape[0]} rows but y has {len(y)}")
    if not np.isfinite(y).all():
        raise ModelError("y contains NaN or inf")
    return X, y


def _require_full_rank(X):
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        raise ModelError(
            f"design matrix is rank deficient (rank {rank} < {X.shape[1]} columns)"
        )


def _mu_from_eta(eta):
    return np.clip(special.ndtr(eta), MU_EPS, 1.0 - MU_EPS)


def beta_log_likelihood(X, y, gamma, phi) -> float:
    """Sum of per-observation beta log densities at mu = Phi(X gamma)."""
    eta = X @ gamma
    mu = _mu_from_eta(eta)
    a = mu * phi
    b = (1.0 - mu) * phi
    ll = (
        special.gammaln(phi)
        - special.gammaln(a)
        - special.gammaln(b)
        + (a - 1.0) * np.log(y)
        + (b - 1.0) * np.log1p(-y)
    )
    return float(ll.sum())


def beta_score(X, y, gamma, phi) -> np.ndarray:
    """Analytic gradient of the log likelihood in (gamma, phi)."""
    eta = X @ gamma
    mu = _mu_from_eta(eta)
    a = mu * phi
    b = (1.0 - mu) * phi
    log_y = np.log(y)
    log_1my = np.log1p(-y)
    l1 = log_y - log_1my - special.psi(a) + special.psi(b)
    p = _norm_pdf(eta)
    g_gamma = X.T @ (phi * l1 * p)
    g_phi = (
        special.psi(phi)
        - mu * special.psi(a)
        - (1.0 - mu) * special.psi(b)
        + mu * log_y
        + (1.0 - mu) * log_1my
    ).sum()
    return np.concatenate([g_gamma, [g_phi]])


def beta_hessian(X, y, gamma, phi) -> np.ndarray:
    """Analytic Hessian of the log likelihood in (gamma, phi)."""
    eta = X @ gamma
    mu = _mu_from_eta(eta)
    a = mu * phi
    b = (1.0 - mu) * phi
    log_y = np.log(y)
    log_1my = np.log1p(-y)
    psi1_a = special.polygamma(1, a)
    psi1_b = special.polygamma(1, b)
    l1 = log_y - log_1my - special.psi(a) + special.psi(b)
    p = _norm_pdf(eta)

    d2_eta = phi * p * (-phi * p * (psi1_a + psi1_b) - eta * l1)
    k = X.shape[1]
    H = np.empty((k + 1, k + 1))
    H[:k, :k] = X.T @ (d2_eta[:, None] * X)
    d_eta_phi = p * (l1 + phi * (-mu * psi1_a + (1.0 - mu) * psi1_b))
    H[:k, k] = X.T @ d_eta_phi
    H[k, :k] = H[:k, k]
    H[k, k] = (
        special.polygamma(1, phi) - mu**2 * psi1_a - (1.0 - mu) ** 2 * psi1_b
    ).sum()
    return H


def _objective_logphi(X, y):
    """Negative LL and gradient over theta = (gamma, log phi)."""

    def negative_ll(theta):
        gamma, phi = theta[:-1], math.exp(theta[-1])
        return -beta_log_likelihood(X, y, gamma, phi)

    def negative_grad(theta):
        gamma, phi = theta[:-1], math.exp(theta[-1])
        g = beta_score(X, y, gamma, phi)
        g[-1] *= phi
        return -g

    return negative_ll, negative_grad


def _hessian_logphi(X, y, theta):
    gamma, phi = theta[:-1], math.exp(theta[-1])
    H = beta_hessian(X, y, gamma, phi)
    g_phi = beta_score(X, y, gamma, phi)[-1]
    k = len(gamma)
    out = H.copy()
    out[:k, k] *= phi
    out[k, :k] *= phi
    out[k, k] = phi * g_phi + phi * phi * H[k, k]
    return out


@dataclass
class EvalReport:
    """Prediction quality on one dataset."""

    mse: float
    mae: float
    corr: float
    corr_degenerate: bool = False


@dataclass
class RegressionFit:
    """Fitted model: coefficients, uncertainty, and diagnostics."""

    model: str
    feature_names: list[str]
    coefficients: np.ndarray
    std_errors: np.ndarray
    log_likelihood: float
    n_obs: int
    phi: float | None = None
    phi_std_error: float | None = None
    sigma2: float | None = None
    n_iter: int = 0
    grad_norm: float = 0.0
    pseudo_r2: float = 0.0
    mse: float = 0.0
    mae: float = 0.0
    corr: float = 0.0
    fitted: np.ndarray = field(default_factory=lambda: np.empty(0))
    ll_path: list[float] = field(default_factory=list)

    @property
    def n_params(self) -> int:
        # phi for beta fits, sigma^2 for OLS: one dispersion parameter each
        return len(self.coefficients) + 1

    @property
    def aic(self) -> float:
        return 2.0 * self.n_params - 2.0 * self.log_likelihood

    @property
    def bic(self) -> float:
        return self.n_params * math.log(self.n_obs) - 2.0 * self.log_likelihood

    def predict(self, X) -> np.ndarray:
        X = _design(X)
        if X.shape[1] != len(self.coefficients):
            raise ModelError(
                f"X has {X.shape[1]} columns, model expects {len(self.coefficients)}"
            )
        eta = X @ self.coefficients
        if self.model == "beta":
            return _mu_from_eta(eta)
        return eta

    def z_values(self) -> np.ndarray:
        return self.coefficients / self.std_errors

    def p_values(self) -> np.ndarray:
        return 2.0 * special.ndtr(-np.abs(self.z_values()))


@dataclass
class LrtResult:
    """Likelihood-ratio comparison of two nested fits."""

    ll_reduced: float
    ll_full: float
    statistic: float
    df: int
    p_value: float


def _moment_phi(mu, y):
    resid = y - mu
    s2 = float(np.mean(resid * resid))
    if s2 <= 0:
        return 100.0
    phi = float(np.mean(mu * (1.0 - mu)) / s2 - 1.0)
    return min(max(phi, 0.5), 1e4)


class BetaRegression(BaseEstimator):
    """Maximum-likelihood beta regression with probit mean link.

    The design matrix is used as-is: include an explicit constant column
    when an intercept is wanted.  After fit, `coef_` holds gamma, `phi_`
    the precision, and `result_` the full RegressionFit record.
    """

    def __init__(self, tol: float = 1e-8, max_iter: int = 500):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, feature_names=None):
        X, y = _design(X, y)
        n, k = X.shape
        if np.any(y <= 0.0) or np.any(y >= 1.0):
            raise ModelError(
                "beta regression needs y strictly inside (0,1); "
                "apply the percentile squeeze first"
            )
        if n <= k + 1:
            raise ModelError(f"need n_obs > n_params, got n={n} with {k} features")
        _require_full_rank(X)
        if feature_names is None:
            feature_names = [f"x{j}" for j in range(k)]
        elif len(feature_names) != k:
            raise ModelError("feature_names length does not match X columns")

        # initialize from OLS on the probit-transformed response
        z = special.ndtri(y)
        gamma0, *_ = np.linalg.lstsq(X, z, rcond=None)
        mu0 = _mu_from_eta(X @ gamma0)
        theta = np.concatenate([gamma0, [math.log(_moment_phi(mu0, y))]])

        negative_ll, negative_grad = _objective_logphi(X, y)
        ll_path = [-negative_ll(theta)]

        def track(xk):
            ll_path.append(-negative_ll(xk))

        res = optimize.minimize(
            negative_ll,
            theta,
            jac=negative_grad,
            method="BFGS",
            callback=track,
            options={"gtol": self.tol, "maxiter": self.max_iter},
        )
        theta = res.x
        n_iter = int(res.nit)

        # Newton polish: quadratic convergence where BFGS stalls.  Near the
        # optimum the LL change sinks below float rounding, so a step that
        # shrinks the gradient norm is accepted when the LL is unchanged
        # within noise.
        noise = 5e-10
        ll = -negative_ll(theta)
        for _ in range(50):
            grad = -negative_grad(theta)
            gnorm = float(np.abs(grad).max())
            if gnorm <= self.tol:
                break
            H = _hessian_logphi(X, y, theta)
            step = None
            ridge = 0.0
            for _ in range(8):
                try:
                    cand = np.linalg.solve(
                        -(H - ridge * np.eye(len(theta))), grad
                    )
                except np.linalg.LinAlgError:
                    cand = None
                if cand is not None and np.isfinite(cand).all():
                    step = cand
                    break
                ridge = 10.0 * ridge if ridge else 1e-6
            if step is None:
                break
            scale = 1.0
            moved = False
            for _ in range(40):
                trial = theta + scale * step
                trial_ll = -negative_ll(trial)
                if math.isfinite(trial_ll):
                    improved = trial_ll >= ll
                    if not improved and trial_ll >= ll - noise:
                        trial_gnorm = float(np.abs(negative_grad(trial)).max())
                        improved = trial_gnorm < gnorm
                    if improved:
                        theta = trial
                        ll = trial_ll
                        ll_path.append(ll)
                        moved = True
                        break
                scale *= 0.5
            n_iter += 1
            if not moved:
                break

        grad = -negative_grad(theta)
        grad_norm = float(np.abs(grad).max())
        if grad_norm > self.tol:
            raise ConvergenceError(
                f"beta fit did not converge: gradient max-norm {grad_norm:.3e} "
                f"> {self.tol:.1e} after {n_iter} iterations"
            )

        gamma = theta[:-1]
        phi = math.exp(theta[-1])
        info = -_hessian_logphi(X, y, theta)
        try:
            cov = np.linalg.inv(info)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                "observed information is singular at the optimum"
            ) from exc
        diag = np.diag(cov)
        if np.any(diag <= 0):
            raise ConvergenceError(
                "observed information is not positive definite at the optimum"
            )
        se = np.sqrt(diag)
        mu = _mu_from_eta(X @ gamma)
        metrics = _metrics(mu, y)

        self.coef_ = gamma
        self.phi_ = phi
        self.n_iter_ = n_iter
        self.ll_path_ = ll_path
        self.result_ = RegressionFit(
            model="beta",
            feature_names=list(feature_names),
            coefficients=gamma,
            std_errors=se[:-1],
            log_likelihood=ll,
            n_obs=n,
            phi=phi,
            phi_std_error=float(phi * se[-1]),
            n_iter=n_iter,
            grad_norm=grad_norm,
            pseudo_r2=0.0 if metrics.corr_degenerate else metrics.corr**2,
            mse=metrics.mse,
            mae=metrics.mae,
            corr=metrics.corr,
            fitted=mu,
            ll_path=ll_path,
        )
        return self

    def predict(self, X):
        if not hasattr(self, "result_"):
            raise ModelError("estimator is not fitted")
        return self.result_.predict(X)


class LeastSquaresRegression(BaseEstimator):
    """Closed-form OLS via orthogonal decomposition, with Gaussian LL."""

    def fit(self, X, y, feature_names=None):
        X, y = _design(X, y)
        n, k = X.shape
        if n <= k:
            raise ModelError(f"need n_obs > n_features, got n={n}, k={k}")
        _require_full_rank(X)
        if feature_names is None:
            feature_names = [f"x{j}" for j in range(k)]
        elif len(feature_names) != k:
            raise ModelError("feature_names length does not match X columns")

        coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
        fitted = X @ coef
        resid = y - fitted
        rss = float(resid @ resid)
        sigma2_hat = rss / (n - k)
        sigma2_mle = rss / n

        # covariance from the R factor of the thin QR decomposition
        _, R = np.linalg.qr(X)
        Rinv = np.linalg.inv(R)
        xtx_inv = Rinv @ Rinv.T
        se = np.sqrt(sigma2_hat * np.diag(xtx_inv))

        if sigma2_mle > 0:
            ll = -0.5 * n * (math.log(2.0 * math.pi * sigma2_mle) + 1.0)
        else:
            ll = math.inf
        metrics = _metrics(fitted, y)

        self.coef_ = coef
        self.result_ = RegressionFit(
            model="ols",
            feature_names=list(feature_names),
            coefficients=coef,
            std_errors=se,
            log_likelihood=ll,
            n_obs=n,
            sigma2=sigma2_hat,
            pseudo_r2=0.0 if metrics.corr_degenerate else metrics.corr**2,
            mse=metrics.mse,
            mae=metrics.mae,
            corr=metrics.corr,
            fitted=fitted,
            ll_path=[ll],
        )
        return self

    def predict(self, X):
        if not hasattr(self, "result_"):
            raise ModelError("estimator is not fitted")
        return self.result_.predict(X)


def fit_beta(matrix, tol: float = 1e-8, max_iter: int = 500) -> RegressionFit:
    """Fit the beta model on a FeatureMatrix, returning the fit record."""
    est = BetaRegression(tol=tol, max_iter=max_iter)
    est.fit(matrix.X, matrix.y, feature_names=matrix.feature_names)
    return est.result_


def fit_ols(matrix) -> RegressionFit:
    """Fit the least-squares baseline on a FeatureMatrix."""
    est = LeastSquaresRegression()
    est.fit(matrix.X, matrix.y, feature_names=matrix.feature_names)
    return est.result_


def _metrics(pred, y) -> EvalReport:
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    err = pred - y
    mse = float(np.mean(err * err))
    mae = float(np.mean(np.abs(err)))
    degenerate = bool(np.std(pred) == 0.0 or np.std(y) == 0.0)
    if degenerate:
        corr = 0.0
    else:
        corr = float(np.corrcoef(pred, y)[0, 1])
    return EvalReport(mse=mse, mae=mae, corr=corr, corr_degenerate=degenerate)


def evaluate(fit: RegressionFit, X_test, y_test=None) -> EvalReport:
    """MSE, MAE, and Pearson correlation of predictions on held-out data.

    Accepts a FeatureMatrix (whose own response is used when y_test is
    omitted) or a plain array.  Column names must match the fit when a
    FeatureMatrix is given.
    """
    if hasattr(X_test, "feature_names"):
        if list(X_test.feature_names) != list(fit.feature_names):
            raise ModelError(
                f"feature mismatch: fit has {fit.feature_names}, "
                f"matrix has {X_test.feature_names}"
            )
        if y_test is None:
            y_test = X_test.y
        X_test = X_test.X
    if y_test is None:
        raise ModelError("y_test is required when X_test is a plain array")
    y_test = np.asarray(y_test, dtype=float)
    if len(y_test) == 0:
        raise ModelError("empty test set")
    pred = fit.predict(X_test)
    if len(pred) != len(y_test):
        raise ModelError("prediction and y_test lengths differ")
    return _metrics(pred, y_test)


def likelihood_ratio_test(fit_reduced: RegressionFit, fit_full: RegressionFit) -> LrtResult:
    """Chi-square test of a nested pair: reduced features inside full's."""
    reduced_set = set(fit_reduced.feature_names)
    full_set = set(fit_full.feature_names)
    if not reduced_set <= full_set:
        raise ModelError(
            "models are not nested: reduced features "
            f"{sorted(reduced_set - full_set)} missing from the full model"
        )
    if fit_reduced.n_obs != fit_full.n_obs:
        raise ModelError(
            f"observation counts differ: {fit_reduced.n_obs} vs {fit_full.n_obs}"
        )
    df = len(full_set) - len(reduced_set)
    return lrt_from_ll(fit_reduced.log_likelihood, fit_full.log_likelihood, df)


def lrt_from_ll(ll_reduced: float, ll_full: float, df: int) -> LrtResult:
    """Likelihood-ratio statistic and p-value from raw log likelihoods."""
    if df < 0:
        raise ModelError(f"df must be >= 0, got {df}")
    statistic = 2.0 * (ll_full - ll_reduced)
    if statistic < 0:
        if statistic > -1e-6:
            statistic = 0.0
        else:
            raise ModelError(
                f"full model has lower log likelihood than reduced "
                f"({ll_full} < {ll_reduced}); refit before testing"
            )
    if df == 0:
        p_value = 1.0
    else:
        p_value = float(stats.chi2.sf(statistic, df))
    return LrtResult(
        ll_reduced=ll_reduced,
        ll_full=ll_full,
        statistic=statistic,
        df=df,
        p_value=p_value,
    )


def _stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def format_fit_report(fit: RegressionFit) -> str:
    """Human-readable coefficient table: estimate, (SE), stars, diagnostics."""
    lines = []
    label = "Beta regression" if fit.model == "beta" else "Least squares"
    lines.append(f"{label} (n = {fit.n_obs})")
    width = max(len(n) for n in fit.feature_names + ["Precision"]) + 2
    p_values = fit.p_values()
    for name, coef, se, p in zip(
        fit.feature_names, fit.coefficients, fit.std_errors, p_values
    ):
        lines.append(f"{name:<{width}}{coef: .6g}{_stars(p)}")
        lines.append(f"{'':<{width}}({se:.4g})")
    if fit.model == "beta":
        z = fit.phi / fit.phi_std_error
        p = 2.0 * float(special.ndtr(-abs(z)))
        lines.append(f"{'Precision':<{width}}{fit.phi: .6g}{_stars(p)}")
        lines.append(f"{'':<{width}}({fit.phi_std_error:.4g})")
    lines.append(f"Log-Likelihood  {fit.log_likelihood:.4f}")
    lines.append(f"AIC             {fit.aic:.4f}")
    lines.append(f"BIC             {fit.bic:.4f}")
    lines.append(f"R-squared       {fit.pseudo_r2:.4f}")
    return "\n".join(lines)


def fit_records(fit: RegressionFit) -> list[str]:
    """Machine-readable key=value lines for one fit."""
    rows = [
        f"model={fit.model}",
        f"n_obs={fit.n_obs}",
        f"log_likelihood={fit.log_likelihood!r}",
        f"aic={fit.aic!r}",
        f"bic={fit.bic!r}",
        f"pseudo_r2={fit.pseudo_r2!r}",
        f"mse={fit.mse!r}",
        f"mae={fit.mae!r}",
        f"corr={fit.corr!r}",
        f"n_iter={fit.n_iter}",
        f"grad_norm={fit.grad_norm!r}",
    ]
    for name, coef, se in zip(fit.feature_names, fit.coefficients, fit.std_errors):
        rows.append(f"coef.{name}={float(coef)!r}")
        rows.append(f"se.{name}={float(se)!r}")
    if fit.model == "beta":
        rows.append(f"coef.Precision={fit.phi!r}")
        rows.append(f"se.Precision={fit.phi_std_error!r}")
    if fit.sigma2 is not None:
        rows.append(f"sigma2={fit.sigma2!r}")
    return rows


def simulate_beta_response(X, gamma, phi, rng) -> np.ndarray:
    """Draw y ~ Beta(mu*phi, (1-mu)*phi) with mu = Phi(X gamma)."""
    X = _design(X)
    mu = _mu_from_eta(X @ np.asarray(gamma, dtype=float))
    a = mu * phi
    b = (1.0 - mu) * phi
    y = rng.beta(a, b)
    return np.clip(y, MU_EPS, 1.0 - MU_EPS)
