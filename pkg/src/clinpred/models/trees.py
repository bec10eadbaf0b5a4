"""CART on pre-binned features, bagged forests and stochastic gradient boosting.

Features are discretized once per fit into at most ``max_bins`` ordered bins
(distinct values when there are few, quantile cut points otherwise).  A split
"bin <= b" is stored as the raw threshold ``edges[b]`` so prediction works on
unbinned data: go left iff ``x <= threshold``.

Both tasks use the weighted sum-of-squares impurity ``sum w (y - ybar)^2``.
For 0/1 labels this is exactly half the weighted Gini impurity, so the
chosen splits are the Gini-optimal ones.
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..rng import derive_seed, make_rng

LEAF = -1


def bin_edges(x, max_bins=64):
    """Cut points between bins; ``len(edges) + 1`` bins in total."""
    u = np.unique(x[np.isfinite(x)])
    if u.size <= 1:
        return np.empty(0)
    if u.size <= max_bins:
        return (u[:-1] + u[1:]) / 2.0
    q = np.quantile(x, np.linspace(0, 1, max_bins + 1)[1:-1])
    return np.unique(q)


def bin_matrix(X, edges):
    out = np.empty(X.shape, dtype=np.uint8)
    for j, e in enumerate(edges):
        out[:, j] = np.searchsorted(e, X[:, j], side="left")
    return out


def gini_decrease(parent_counts, left_counts, right_counts):
    """Weighted Gini decrease of a split, normalized by the parent size."""

    def g(c):
        c = np.asarray(c, dtype=float)
        s = c.sum()
        return 0.0 if s == 0 else s * (1.0 - np.sum((c / s) ** 2))

    return (g(parent_counts) - g(left_counts) - g(right_counts)) / float(np.sum(parent_counts))


@njit(cache=True)
def _splitmix(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _grow(Xb, nbins, y, w, max_depth, min_leaf, mtry, seed):
    n, p = Xb.shape
    idx = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        if w[i] > 0:
            idx[m] = i
            m += 1
    cap = 2 * m + 1
    feat = np.full(cap, -1, dtype=np.int64)
    tbin = np.zeros(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    weight = np.zeros(cap)
    importance = np.zeros(p)

    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = m
    st_depth[0] = 0
    top = 1
    n_nodes = 1

    maxb = 0
    for j in range(p):
        if nbins[j] > maxb:
            maxb = nbins[j]
    hw = np.zeros(maxb)
    hy = np.zeros(maxb)
    hc = np.zeros(maxb, dtype=np.int64)
    perm = np.arange(p)
    state = seed

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]
        sw = 0.0
        swy = 0.0
        swyy = 0.0
        for t in range(lo, hi):
            i = idx[t]
            sw += w[i]
            swy += w[i] * y[i]
            swyy += w[i] * y[i] * y[i]
        value[node] = swy / sw
        weight[node] = sw
        parent_imp = swyy - swy * swy / sw
        count = hi - lo
        if depth >= max_depth or count < 2 * min_leaf or parent_imp <= 1e-12 * sw:
            continue

        # partial Fisher-Yates draw of mtry candidate features
        for a in range(mtry):
            state, r = _splitmix(state)
            b = a + np.int64(r % np.uint64(p - a))
            tmp = perm[a]
            perm[a] = perm[b]
            perm[b] = tmp

        best_gain = 1e-12 * sw
        best_f = -1
        best_b = -1
        for a in range(mtry):
            f = perm[a]
            nb = nbins[f]
            if nb < 2:
                continue
            for b in range(nb):
                hw[b] = 0.0
                hy[b] = 0.0
                hc[b] = 0
            for t in range(lo, hi):
                i = idx[t]
                b = Xb[i, f]
                hw[b] += w[i]
                hy[b] += w[i] * y[i]
                hc[b] += 1
            lw = 0.0
            ly = 0.0
            lc = 0
            for b in range(nb - 1):
                lw += hw[b]
                ly += hy[b]
                lc += hc[b]
                if lc < min_leaf:
                    continue
                if count - lc < min_leaf:
                    break
                rw = sw - lw
                if lw <= 0.0 or rw <= 0.0:
                    continue
                ry = swy - ly
                # impurity decrease = parent SSE - left SSE - right SSE
                gain = ly * ly / lw + ry * ry / rw - swy * swy / sw
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_b = b
        if best_f < 0:
            continue

        # partition rows in place
        a = lo
        z = hi - 1
        while a <= z:
            if Xb[idx[a], best_f] <= best_b:
                a += 1
            else:
                tmp = idx[a]
                idx[a] = idx[z]
                idx[z] = tmp
                z -= 1
        feat[node] = best_f
        tbin[node] = best_b
        importance[best_f] += best_gain
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        st_node[top] = rnode
        st_lo[top] = a
        st_hi[top] = hi
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lnode
        st_lo[top] = lo
        st_hi[top] = a
        st_depth[top] = depth + 1
        top += 1
    return feat[:n_nodes], tbin[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes], weight[:n_nodes], importance


@njit(cache=True, nogil=True)
def _apply(feature, threshold, left, right, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    node_weight: np.ndarray
    importance: np.ndarray

    @property
    def n_leaves(self):
        return int(np.sum(self.feature == LEAF))

    def apply(self, X):
        return _apply(self.feature, self.threshold, self.left, self.right, np.asarray(X, dtype=float))

    def predict(self, X):
        return self.value[self.apply(X)]

    def with_values(self, value):
        return Tree(self.feature, self.threshold, self.left, self.right, np.asarray(value, dtype=float), self.node_weight, self.importance)


def _grow_binned(Xb, edges, y, w, max_depth, min_leaf, mtry, seed):
    nbins = np.array([e.size + 1 for e in edges], dtype=np.int64)
    p = Xb.shape[1]
    mtry = int(min(max(mtry or p, 1), p))
    feat, tb, lft, rgt, val, wt, imp = _grow(
        Xb, nbins, np.asarray(y, dtype=float), np.asarray(w, dtype=float),
        int(max_depth), int(max(min_leaf, 1)), mtry, np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF),
    )
    thr = np.array([edges[f][b] if f >= 0 else np.nan for f, b in zip(feat, tb)])
    return Tree(feat, thr, lft, rgt, val, wt, imp)


def cart_grow(X, y, weights=None, max_depth=30, min_leaf=1, mtry=None, seed=0, max_bins=64):
    """Grow one regression/classification tree greedily.

    ``y`` is 0/1 for classification (leaves hold class-1 fractions) or real
    for regression (leaves hold means).  ``mtry`` features are drawn per node
    (all when ``None``).  Nodes that are pure, shallower than ``max_depth``
    allows or too small to give two children of ``min_leaf`` rows become leaves.
    """
    X = np.asarray(X, dtype=float)
    edges = [bin_edges(X[:, j], max_bins) for j in range(X.shape[1])]
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return _grow_binned(bin_matrix(X, edges), edges, y, w, max_depth, min_leaf, mtry, seed)


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    @property
    def importance(self):
        return np.sum([t.importance for t in self.trees], axis=0) / len(self.trees)


def forest_fit(X, y, n_trees=500, mtry=None, min_leaf=1, max_depth=64, weights=None, seed=0, max_bins=64):
    """Random forest: bootstrap rows per tree, ``mtry`` features per split, averaged leaf values."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    edges = [bin_edges(X[:, j], max_bins) for j in range(p)]
    Xb = bin_matrix(X, edges)
    base_w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    trees = []
    for t in range(n_trees):
        rng = make_rng(derive_seed(seed, t))
        counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
        trees.append(_grow_binned(Xb, edges, y, counts * base_w, max_depth, min_leaf, mtry, derive_seed(seed, t, 1)))
    return Forest(tuple(trees))


def _log_loss(y, f, w):
    # mean Bernoulli negative log-likelihood for scores f on the logit scale
    return float(np.sum(w * (np.logaddexp(0.0, f) - y * f)) / np.sum(w))


@dataclass(frozen=True, eq=False)
class Boosted:
    init: float
    trees: tuple
    shrinkage: float
    steps: tuple
    train_loss: tuple

    def decision(self, X, n_trees=None):
        X = np.asarray(X, dtype=float)
        f = np.full(X.shape[0], self.init)
        for t, s in zip(self.trees[:n_trees], self.steps[:n_trees]):
            f += self.shrinkage * s * t.predict(X)
        return f

    def predict(self, X, n_trees=None):
        return 1.0 / (1.0 + np.exp(-self.decision(X, n_trees)))

    @property
    def importance(self):
        if not self.trees:
            return np.zeros(0)
        return np.sum([t.importance for t in self.trees], axis=0)


def gbm_fit(X, y, n_trees=100, depth=1, shrinkage=0.1, min_leaf=10, bag_fraction=0.5, weights=None, seed=0, max_bins=64):
    """Stochastic gradient boosting for the Bernoulli log-loss.

    Each stage fits a depth-limited regression tree to the residuals
    ``y - p`` on a random ``bag_fraction`` subsample, sets Newton leaf values
    ``sum w (y - p) / sum w p (1 - p)`` and adds ``shrinkage`` times the tree.
    A stage whose full step would raise the training loss is halved until it
    does not (at worst it contributes nothing), so the training loss never
    increases from one stage to the next.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    edges = [bin_edges(X[:, j], max_bins) for j in range(p)]
    Xb = bin_matrix(X, edges)
    ybar = float(np.clip(np.sum(w * y) / np.sum(w), 1e-6, 1 - 1e-6))
    init = float(np.log(ybar / (1 - ybar)))
    f = np.full(n, init)
    loss = _log_loss(y, f, w)
    losses, trees, steps = [loss], [], []
    n_bag = max(int(np.floor(bag_fraction * n)), 2 * min_leaf)
    for t in range(n_trees):
        rng = make_rng(derive_seed(seed, t))
        bag = np.zeros(n)
        if n_bag >= n:
            bag[:] = 1.0
        else:
            bag[rng.choice(n, n_bag, replace=False)] = 1.0
        prob = 1.0 / (1.0 + np.exp(-f))
        resid = y - prob
        tree = _grow_binned(Xb, edges, resid, w * bag, depth, min_leaf, p, derive_seed(seed, t, 1))
        leaves = tree.apply(X)
        bw = w * bag
        num = np.bincount(leaves, weights=bw * resid, minlength=tree.value.size)
        den = np.bincount(leaves, weights=bw * prob * (1 - prob), minlength=tree.value.size)
        vals = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0)
        tree = tree.with_values(vals)
        update = shrinkage * vals[leaves]
        step = 1.0
        new_loss = _log_loss(y, f + update, w)
        while new_loss > loss and step > 1e-6:
            step *= 0.5
            new_loss = _log_loss(y, f + step * update, w)
        if new_loss > loss:
            step, new_loss = 0.0, loss
        f = f + step * update
        loss = new_loss
        trees.append(tree)
        steps.append(step)
        losses.append(loss)
    return Boosted(init, tuple(trees), float(shrinkage), tuple(steps), tuple(losses))
