"""Logistic regression ranking model fitted by iteratively reweighted least squares."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaincc

RIDGE = 1e-6
MAX_ITER = 100
TOL = 1e-8


@dataclass(frozen=True)
class LogisticFit:
    intercept: float
    slopes: np.ndarray
    converged: bool
    log_likelihood: float
    null_log_likelihood: float
    iterations: int = 0
    ridge: float = RIDGE

    @property
    def coef(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.slopes])

    def linear_predictor(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.slopes.size == 1 and x.ndim <= 1:
            return self.intercept + x * self.slopes[0]
        return self.intercept + x @ self.slopes


def _loglik(eta, y):
    # sum of y*eta - log(1 + e^eta), overflow-free
    return (y * eta - np.logaddexp(0.0, eta)).sum(axis=-1)


def _null_loglik(y):
    n = y.shape[-1]
    k = y.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = k * np.log(k / n) + (n - k) * np.log((n - k) / n)
    return np.nan_to_num(ll, nan=0.0)


def penalized_score(coef, X, y, ridge=RIDGE) -> np.ndarray:
    """Gradient of the ridge-penalized log-likelihood (intercept unpenalized)."""
    coef = np.asarray(coef, dtype=float)
    Z = np.concatenate([np.ones(X.shape[:-1] + (1,)), X], axis=-1)
    mu = expit(Z @ coef)
    g = Z.T @ (y - mu)
    g[1:] -= ridge * coef[1:]
    return g


def fit_batch(X, y, ridge=RIDGE, max_iter=MAX_ITER, tol=TOL):
    """IRLS on B independent problems at once.

    X is (B, n, k), y is (B, n). Returns ``(coef, converged, iterations)``
    with coef of shape (B, k + 1), intercept first. Newton steps are solved on
    a Jacobi-rescaled system and halved until the penalized objective does
    not decrease.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    B, n, k = X.shape
    Z = np.concatenate([np.ones((B, n, 1)), X], axis=-1)
    pen = np.full(k + 1, ridge)
    pen[0] = 0.0
    ybar = np.clip(y.mean(axis=1), 1e-12, 1 - 1e-12)
    coef = np.zeros((B, k + 1))
    coef[:, 0] = np.log(ybar / (1 - ybar))
    done = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=int)

    def objective(c, idx):
        return _loglik(np.einsum("bnj,bj->bn", Z[idx], c), y[idx]) - 0.5 * (pen * c * c).sum(-1)

    for _ in range(max_iter):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        Za, ya, ca = Z[act], y[act], coef[act]
        mu = expit(np.einsum("bnj,bj->bn", Za, ca))
        g = np.einsum("bnj,bn->bj", Za, ya - mu) - pen * ca
        small = np.abs(g).max(axis=1) < tol
        done[act[small]] = True
        keep = ~small
        act, Za, ca, g, mu = act[keep], Za[keep], ca[keep], g[keep], mu[keep]
        if act.size == 0:
            break
        w = mu * (1 - mu)
        Hm = np.einsum("bnj,bn,bnl->bjl", Za, w, Za) + np.diag(pen)
        s = 1.0 / np.sqrt(np.maximum(np.einsum("bjj->bj", Hm), 1e-300))
        A = Hm * s[:, :, None] * s[:, None, :]
        try:
            step = np.linalg.solve(A, (s * g)[..., None])[..., 0] * s
        except np.linalg.LinAlgError:
            raise np.linalg.LinAlgError("singular weighted normal equations despite ridge") from None
        base = objective(ca, act)
        scale = np.ones(act.size)
        for _ in range(40):
            trial = ca + scale[:, None] * step
            bad = objective(trial, act) < base - 1e-12 * np.abs(base)
            if not bad.any():
                break
            scale[bad] *= 0.5
        coef[act] = ca + scale[:, None] * step
        iters[act] += 1
        conv = np.linalg.norm(scale[:, None] * step, axis=1) < tol
        done[act[conv]] = True
    return coef, done, iters


def fit(x, y, ridge: float = RIDGE, max_iter: int = MAX_ITER, tol: float = TOL) -> LogisticFit:
    """Fit P(Y=1 | x) = logistic(b0 + b'x) on a training sample.

    Non-convergence is not an error here: the fit comes back with
    ``converged=False`` and callers decide whether to use it.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float)
    n, k = x.shape
    if n < k + 2:
        raise ValueError(f"training sample of {n} is too small for {k + 1} parameters")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("responses must be binary")
    coef, conv, iters = fit_batch(x[None], y[None], ridge, max_iter, tol)
    c = coef[0]
    ll = float(_loglik(c[0] + x @ c[1:], y))
    return LogisticFit(float(c[0]), c[1:].copy(), bool(conv[0]), ll,
                       float(_null_loglik(y)), int(iters[0]), ridge)


def predict(fit: LogisticFit, x) -> np.ndarray | float:
    p = expit(fit.linear_predictor(x))
    return float(p) if np.ndim(p) == 0 else p


def chi2_sf(statistic: float, df: int) -> float:
    """Upper tail of the chi-square distribution via the regularized incomplete gamma."""
    if statistic <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, statistic / 2.0))


def likelihood_ratio_test(fit: LogisticFit) -> tuple[float, int, float]:
    """Whole-model test against the intercept-only null: (statistic, df, p-value)."""
    stat = 2.0 * (fit.log_likelihood - fit.null_log_likelihood)
    if stat < -1e-8:
        raise RuntimeError(f"fitted log-likelihood below the nested null (statistic {stat})")
    stat = max(stat, 0.0)
    df = int(fit.slopes.size)
    return stat, df, chi2_sf(stat, df)
