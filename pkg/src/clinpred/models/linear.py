"""Linear and logistic solvers.

* :func:`irls_logistic` - Newton/IRLS for (ridge-penalized) logistic regression.
* :func:`ols_solve` - least squares through a QR factorization.
* :func:`elastic_net_solve` - cyclic coordinate descent with soft-thresholding.
* :func:`logistic_elastic_net` - proximal Newton: IRLS outer loop with the
  coordinate descent kernel solving each weighted least-squares step.
"""
import warnings
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

from ..errors import ConvergenceWarning, NonConvergence, SingularDesignWarning, SingularSystem

JITTER = 1e-8
PROB_EPS = 1e-15


class IrlsResult(NamedTuple):
    coef: np.ndarray
    deviance: float
    n_iter: int
    converged: bool
    grad_norm: float


def _solve_psd(H, g):
    try:
        return np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        warnings.warn("singular system; retrying with ridge jitter", SingularDesignWarning, stacklevel=3)
    try:
        return np.linalg.solve(H + JITTER * np.eye(H.shape[0]), g)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("system remains singular after jitter") from exc


def _sigmoid(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def _bernoulli_deviance(y, mu, w):
    mu = np.clip(mu, PROB_EPS, 1 - PROB_EPS)
    return float(-2.0 * np.sum(w * (y * np.log(mu) + (1 - y) * np.log1p(-mu))))


def _intercept_columns(X):
    return np.all(X == 1.0, axis=0)


def irls_logistic(X, y, ridge_penalty=0.0, weights=None, offset=None, penalize=None, max_iter=100, tol=1e-8):
    """Maximize the (ridge-penalized) Bernoulli log-likelihood by Newton steps.

    The penalty is ``ridge_penalty / 2 * sum(beta[penalize] ** 2)``; by
    default every column except all-ones intercept columns is penalized.
    Stops once the penalized deviance changes by less than ``tol`` and the
    step has become negligible, or after ``max_iter`` iterations, in which
    case a :class:`ConvergenceWarning` is emitted (typically complete
    separation) and the finite current coefficients are returned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    pen = ~_intercept_columns(X) if penalize is None else np.asarray(penalize, dtype=bool)
    lam = float(ridge_penalty) * pen.astype(float)

    def objective(beta):
        mu = _sigmoid(X @ beta + off)
        return _bernoulli_deviance(y, mu, w) + float(np.sum(lam * beta * beta)), mu

    beta = np.zeros(p)
    dev, mu = objective(beta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        h = w * mu * (1 - mu)
        grad = X.T @ (w * (y - mu)) - lam * beta
        H = (X * h[:, None]).T @ X + np.diag(lam)
        step = _solve_psd(H, grad)
        t = 1.0
        while True:
            new_beta = beta + t * step
            new_dev, new_mu = objective(new_beta)
            if new_dev <= dev + 1e-12 * abs(dev) or t < 1e-10:
                break
            t *= 0.5
        small_step = np.max(np.abs(new_beta - beta), initial=0.0) < 1e-9 * (1.0 + np.max(np.abs(new_beta), initial=0.0))
        dev_change = abs(dev - new_dev)
        beta, dev, mu = new_beta, new_dev, new_mu
        if dev_change < tol and small_step:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"logistic fit did not converge in {max_iter} iterations (possible separation)",
            ConvergenceWarning,
            stacklevel=2,
        )
    grad = X.T @ (w * (y - mu)) - lam * beta
    return IrlsResult(beta, dev, it, converged, float(np.max(np.abs(grad), initial=0.0)))


def ols_solve(X, y, weights=None):
    """Weighted least squares via Householder QR; rank-deficient designs get ridge jitter."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if weights is not None:
        sw = np.sqrt(np.asarray(weights, dtype=float))
        X = X * sw[:, None]
        y = y * sw
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= 1e-10 * max(diag.max(), 1.0):
        warnings.warn("rank-deficient design; adding ridge jitter", SingularDesignWarning, stacklevel=2)
        return np.linalg.solve(X.T @ X + JITTER * np.eye(X.shape[1]), X.T @ y)
    return solve_triangular(R, Q.T @ y)


@njit(cache=True, nogil=True)
def _cd_gram(G, c, l1, l2, beta, tol, max_sweeps):
    p = beta.size
    Gb = G @ beta
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            denom = G[j, j] + l2
            if denom <= 0.0:
                continue
            rj = c[j] - Gb[j] + G[j, j] * beta[j]
            if rj > l1:
                new = (rj - l1) / denom
            elif rj < -l1:
                new = (rj + l1) / denom
            else:
                new = 0.0
            d = new - beta[j]
            if d != 0.0:
                for k in range(p):
                    Gb[k] += G[k, j] * d
                beta[j] = new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            return sweep + 1
    return -1


def elastic_net_gram(G, c, lam, alpha, beta0=None, tol=1e-7, max_sweeps=10_000):
    """Coordinate descent on the Gram form ``G = X'WX``, ``c = X'Wy``."""
    G = np.ascontiguousarray(G, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    beta = np.zeros(c.size) if beta0 is None else np.array(beta0, dtype=float)
    sweeps = _cd_gram(G, c, float(lam) * alpha, float(lam) * (1.0 - alpha), beta, tol, max_sweeps)
    if sweeps < 0:
        raise NonConvergence(f"coordinate descent did not converge in {max_sweeps} sweeps")
    return _polish(G, c, float(lam) * alpha, float(lam) * (1.0 - alpha), beta)


def _polish(G, c, l1, l2, beta):
    # solve the stationarity equations on the active set exactly; keep the
    # result only if signs and the inactive-set KKT conditions still hold
    active = beta != 0.0
    if not active.any():
        return beta
    s = np.sign(beta[active])
    A = G[np.ix_(active, active)] + l2 * np.eye(int(active.sum()))
    try:
        exact = np.linalg.solve(A, c[active] - l1 * s)
    except np.linalg.LinAlgError:
        return beta
    if not np.all(np.sign(exact) == s):
        return beta
    out = np.zeros_like(beta)
    out[active] = exact
    slack = np.abs(c[~active] - G[np.ix_(~active, active)] @ exact)
    if np.any(slack > l1 * (1 + 1e-9) + 1e-12):
        return beta

    def objective(b):
        return 0.5 * b @ G @ b - c @ b + l1 * np.abs(b).sum() + 0.5 * l2 * b @ b

    return out if objective(out) <= objective(beta) else beta


def elastic_net_solve(X, y, lam, alpha, weights=None, beta0=None, tol=1e-7, max_sweeps=10_000):
    """Minimize ``0.5 * sum(w * (y - X b)**2) + lam * (alpha * |b|_1 + (1 - alpha) / 2 * |b|_2**2)``.

    ``X`` is expected to hold standardized columns and ``y`` a centered
    target; no intercept is fitted here.  On an orthonormal design this gives
    the soft-threshold ``sign(b) * max(|b| - lam, 0)`` for ``alpha = 1`` and
    ``b / (1 + lam)`` for ``alpha = 0``, with ``b`` the least-squares fit.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xw = X if weights is None else X * np.asarray(weights, dtype=float)[:, None]
    return elastic_net_gram(Xw.T @ X, Xw.T @ y, lam, alpha, beta0, tol, max_sweeps)


def lambda_max(X, y, alpha, weights=None):
    """Smallest penalty that zeroes every coefficient (alpha floored at 1e-3)."""
    Xw = X if weights is None else X * np.asarray(weights, dtype=float)[:, None]
    return float(np.max(np.abs(Xw.T @ y))) / max(alpha, 1e-3)


def logistic_elastic_net(X, y, lam, alpha, weights=None, start=None, max_iter=100, tol=1e-8):
    """Elastic-net logistic regression with an unpenalized intercept.

    Returns ``(intercept, coef)``.  Each outer step linearizes the
    log-likelihood at the current fit and solves the penalized weighted least
    squares problem by coordinate descent; the step is halved while the
    penalized objective would increase.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if start is None:
        ybar = np.clip(np.sum(w * y) / np.sum(w), 1e-6, 1 - 1e-6)
        b0, beta = float(np.log(ybar / (1 - ybar))), np.zeros(p)
    else:
        b0, beta = float(start[0]), np.array(start[1], dtype=float)

    def objective(b0, beta):
        mu = _sigmoid(b0 + X @ beta)
        pen = lam * (alpha * np.abs(beta).sum() + 0.5 * (1 - alpha) * beta @ beta)
        return 0.5 * _bernoulli_deviance(y, mu, w) + pen, mu

    obj, mu = objective(b0, beta)
    for _ in range(max_iter):
        h = np.maximum(w * mu * (1 - mu), 1e-10)
        z = b0 + X @ beta + w * (y - mu) / h
        hs = h.sum()
        xbar = h @ X / hs
        zbar = h @ z / hs
        Xc = X - xbar
        Xh = Xc * h[:, None]
        new_beta = elastic_net_gram(Xh.T @ Xc, Xh.T @ (z - zbar), lam, alpha, beta0=beta)
        new_b0 = zbar - xbar @ new_beta
        t = 1.0
        while True:
            cb0 = b0 + t * (new_b0 - b0)
            cbeta = beta + t * (new_beta - beta)
            new_obj, new_mu = objective(cb0, cbeta)
            if new_obj <= obj + 1e-12 * abs(obj) or t < 1e-8:
                break
            t *= 0.5
        change = max(abs(cb0 - b0), np.max(np.abs(cbeta - beta), initial=0.0))
        done = abs(obj - new_obj) < tol * (abs(obj) + 0.1) and change < 1e-6
        b0, beta, obj, mu = cb0, cbeta, new_obj, new_mu
        if done:
            return b0, beta
    warnings.warn("elastic-net logistic fit hit the iteration cap", ConvergenceWarning, stacklevel=2)
    return b0, beta
