"""Naive Bayes with Gaussian or kernel-density class conditionals."""
from dataclasses import dataclass

import numpy as np

VAR_FLOOR = 1e-9
PROB_FLOOR = 1e-12
GRID = 512


def silverman_bandwidth(x):
    """0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling back to sd or 1 for degenerate samples."""
    x = np.asarray(x, dtype=float)
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd if sd > 0 else (abs(x[0]) if x.size and x[0] != 0 else 1.0)
    return 0.9 * spread * x.size ** (-0.2)


@dataclass(frozen=True, eq=False)
class KernelDensity:
    sample: np.ndarray
    weights: np.ndarray
    bandwidth: float
    grid: np.ndarray
    density: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid, self.density)
        outside = (x < self.grid[0]) | (x > self.grid[-1])
        if outside.any():
            out[outside] = self.exact(x[outside])
        return out

    def exact(self, x):
        z = (np.asarray(x, dtype=float)[:, None] - self.sample[None, :]) / self.bandwidth
        return (np.exp(-0.5 * z * z) @ self.weights) / (self.bandwidth * np.sqrt(2 * np.pi))


def fit_kde(x, weights=None, adjust=1.0):
    x = np.asarray(x, dtype=float)
    w = np.ones(x.size) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    bw = max(silverman_bandwidth(x) * adjust, np.sqrt(VAR_FLOOR))
    grid = np.linspace(x.min() - 3 * bw, x.max() + 3 * bw, GRID)
    kde = KernelDensity(x, w, bw, grid, np.zeros(GRID))
    return KernelDensity(x, w, bw, grid, kde.exact(grid))


def _gauss_logpdf(x, mean, var):
    return -0.5 * (np.log(2 * np.pi * var) + (x - mean) ** 2 / var)


@dataclass(frozen=True, eq=False)
class NaiveBayes:
    """Two-class model: ``priors[c]``; per feature either a Gaussian, a KDE or a level table."""

    priors: np.ndarray
    kinds: tuple
    gauss: dict
    kernels: dict
    tables: dict
    usekernel: bool

    def log_likelihood(self, X):
        X = np.asarray(X, dtype=float)
        out = np.tile(np.log(self.priors), (X.shape[0], 1))
        for j, kind in enumerate(self.kinds):
            x = X[:, j]
            for c in (0, 1):
                if kind == "continuous":
                    if self.usekernel:
                        ll = np.log(np.maximum(self.kernels[j, c](x), PROB_FLOOR))
                    else:
                        mean, var = self.gauss[j, c]
                        ll = _gauss_logpdf(x, mean, var)
                else:
                    levels, probs = self.tables[j, c]
                    pos = np.searchsorted(levels, x)
                    pos_c = np.minimum(pos, levels.size - 1)
                    known = levels[pos_c] == x
                    p = np.where(known, probs[pos_c], probs[-1])
                    ll = np.log(np.maximum(p, PROB_FLOOR))
                out[:, c] += ll
        return out

    def posterior(self, X):
        """Class probabilities ``(n, 2)``; rows sum to one."""
        ll = self.log_likelihood(X)
        ll -= ll.max(axis=1, keepdims=True)
        e = np.exp(ll)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.posterior(X)[:, 1]


def nb_fit(X, y, kinds, fL=0.0, usekernel=False, adjust=1.0, weights=None):
    """Fit class priors and per-class feature models.

    Discrete features use Laplace-smoothed tables ``(count + fL) / (n_c + fL * L)``
    where ``L`` counts the training levels plus one slot for unseen levels, so
    with ``fL > 0`` an unseen level keeps a positive likelihood.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    priors = np.array([w[y == 0].sum(), w[y == 1].sum()]) / w.sum()
    gauss, kernels, tables = {}, {}, {}
    for j, kind in enumerate(kinds):
        for c in (0, 1):
            rows = y == c
            x, wc = X[rows, j], w[rows]
            if kind == "continuous":
                mean = float(np.average(x, weights=wc))
                dof = wc.sum() - 1.0
                var = float(np.sum(wc * (x - mean) ** 2) / dof) if dof > 0 else 0.0
                gauss[j, c] = (mean, max(var, VAR_FLOOR))
                if usekernel:
                    kernels[j, c] = fit_kde(x, wc, adjust)
            else:
                levels = np.unique(X[:, j])
                counts = np.array([wc[x == lv].sum() for lv in levels])
                total = counts.sum() + fL * (levels.size + 1)
                probs = (counts + fL) / total if total > 0 else np.full(levels.size, 1.0 / levels.size)
                unseen = fL / total if total > 0 else 0.0
                tables[j, c] = (levels, np.append(probs, unseen))
    return NaiveBayes(priors, tuple(kinds), gauss, kernels, tables, bool(usekernel))
