"""Preprocessing transforms that are fitted on training rows only.

The fixed order is impute -> one-hot encode -> scale, followed by class
rebalancing which touches training rows exclusively.  A :class:`Recipe`
bundles the fitted pieces together with the ids of the rows it was fitted on,
so resampling code can prove that no assessment row contributed to any
fitted statistic.
"""
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .data import ColumnSpec, row_fingerprint
from .errors import (
    ConstantColumnWarning,
    DataError,
    InvalidSpec,
    NonContinuousColumn,
    SchemaMismatch,
    SingleClass,
    SmoteTooFewMinority,
    TooFewDonors,
    UnknownLevel,
    UnknownLevelWarning,
)
from .rng import make_rng


# -- scaling ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Scaler:
    mode: str
    columns: tuple
    center: np.ndarray
    scale: np.ndarray
    constant: tuple


def fit_scaler(train, cols=None, mode="zscore"):
    """Fit z-score (sample sd, n-1) or min-max scaling on observed values."""
    if mode not in ("zscore", "minmax"):
        raise InvalidSpec(f"unknown scaler mode {mode!r}")
    if cols is None:
        cols = [s.name for s in train.feature_specs if s.kind == "continuous"]
    center, scale, constant = [], [], []
    for name in cols:
        if train.spec(name).kind != "continuous":
            raise NonContinuousColumn(f"cannot scale {train.spec(name).kind} column {name!r}")
        j = train.index(name)
        x = train.values[~train.missing[:, j], j]
        if mode == "zscore":
            c = x.mean()
            s = x.std(ddof=1) if x.size > 1 else 0.0
        else:
            c = x.min()
            s = x.max() - c
        flat = not s > 0
        if flat:
            warnings.warn(f"column {name!r} is constant; scaled to {0.0}", ConstantColumnWarning, stacklevel=2)
            s = 1.0
        center.append(c)
        scale.append(s)
        constant.append(flat)
    return Scaler(mode, tuple(cols), np.array(center), np.array(scale), tuple(constant))


def apply_scaler(s, ds):
    """Apply training statistics to ``ds``.  Not idempotent: applying twice rescales again."""
    values = np.array(ds.values)
    for name, c, sc in zip(s.columns, s.center, s.scale):
        j = ds.index(name)
        values[:, j] = (values[:, j] - c) / sc
    return ds.with_values(values, ds.missing)


# -- one-hot encoding --------------------------------------------------------------------
@dataclass(frozen=True)
class OneHotMap:
    source: str
    levels: tuple
    names: tuple

    @property
    def identity(self):
        return self.names == (self.source,)


def one_hot_encode(ds, col):
    """Replace categorical ``col`` by one 0/1 column per level, appended at the end.

    Binary columns are returned unchanged together with an identity map.
    """
    spec = ds.spec(col)
    if spec.kind == "binary":
        return ds, OneHotMap(col, (0, 1), (col,))
    if spec.kind != "categorical":
        raise InvalidSpec(f"column {col!r} is {spec.kind}, not categorical")
    j = ds.index(col)
    levels = spec.levels or tuple(int(v) for v in np.unique(ds.values[~ds.missing[:, j], j]))
    m = OneHotMap(col, tuple(levels), tuple(f"{col}={lv}" for lv in levels))
    return apply_one_hot(m, ds, strict=True)[0], m


def apply_one_hot(m, ds, strict=False):
    """Encode with a fitted map.  Returns ``(dataset, flagged_rows)``.

    Rows holding a level unknown to the map get all-zero indicators and are
    flagged; with ``strict`` they raise :class:`UnknownLevel` instead.
    """
    if m.identity:
        return ds, np.zeros(0, dtype=np.int64)
    j = ds.index(m.source)
    x = ds.values[:, j]
    miss = ds.missing[:, j]
    levels = np.asarray(m.levels, dtype=float)
    onehot = (x[:, None] == levels[None, :]).astype(float)
    unknown = np.flatnonzero(~miss & (onehot.sum(axis=1) == 0))
    if unknown.size:
        msg = f"column {m.source!r}: unknown level(s) {sorted(set(x[unknown].tolist()))} in rows {unknown[:10].tolist()}"
        if strict:
            raise UnknownLevel(msg)
        warnings.warn(msg, UnknownLevelWarning, stacklevel=2)
    keep = [k for k in range(len(ds.specs)) if k != j]
    role = ds.specs[j].role
    specs = [ds.specs[k] for k in keep] + [ColumnSpec(n, "binary", role=role) for n in m.names]
    values = np.column_stack([ds.values[:, keep], onehot])
    missing = np.column_stack([ds.missing[:, keep], np.repeat(miss[:, None], len(levels), axis=1)])
    return replace(ds, specs=tuple(specs), values=values, missing=missing), unknown


# -- mixed-type distances ---------------------------------------------------------------
def column_scales(values, missing, kinds):
    """Sample sd of continuous columns (1 for constant or non-continuous)."""
    sd = np.ones(values.shape[1])
    for j, kind in enumerate(kinds):
        if kind == "continuous":
            x = values[~missing[:, j], j]
            s = x.std(ddof=1) if x.size > 1 else 0.0
            sd[j] = s if s > 0 else 1.0
    return sd


def gower_distances(A, B, kinds, scale):
    """Mean per-column dissimilarity between complete rows of ``A`` and ``B``.

    Continuous columns contribute the squared difference after division by
    ``scale``; binary and categorical columns contribute a 0/1 mismatch.
    """
    kinds = np.asarray(kinds)
    cat = kinds == "categorical"
    num = ~cat
    p = A.shape[1]
    As = A[:, num] / scale[num]
    Bs = B[:, num] / scale[num]
    d = (As * As).sum(1)[:, None] + (Bs * Bs).sum(1)[None, :] - 2.0 * As @ Bs.T
    np.maximum(d, 0.0, out=d)
    for j in np.flatnonzero(cat):
        d += A[:, j][:, None] != B[:, j][None, :]
    return d / p


def _row_distances(q, q_miss, ref, ref_miss, kinds, scale):
    """Exact distances from one row to every reference row over mutually observed columns."""
    both = ~ref_miss & ~q_miss[None, :]
    diff = np.where(both, ref - q[None, :], 0.0)
    contrib = np.where(kinds[None, :] == "continuous", (diff / scale[None, :]) ** 2, (diff != 0).astype(float))
    count = both.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(count > 0, (contrib * both).sum(axis=1) / count, np.inf)
    return d


# -- kNN imputation ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class KnnImputer:
    k: int
    columns: tuple
    kinds: tuple
    reference: np.ndarray
    reference_missing: np.ndarray
    scale: np.ndarray
    missing_counts: dict
    fit_row_ids: np.ndarray


def fit_knn_imputer(train, k=5):
    """Keep a copy of the training feature rows as donors for later imputation."""
    if k < 1:
        raise InvalidSpec("k must be at least 1")
    X, M = train.feature_matrix()
    names = tuple(train.feature_names)
    kinds = tuple(s.kind for s in train.feature_specs)
    observed = (~M).sum(axis=0)
    short = [n for n, c in zip(names, observed) if c < k]
    if short:
        raise TooFewDonors(f"fewer than k={k} observed values in columns {short}")
    counts = {n: int(c) for n, c in zip(names, M.sum(axis=0))}
    return KnnImputer(int(k), names, kinds, X.copy(), M.copy(), column_scales(X, M, kinds), counts, train.row_ids.copy())


def impute(imp, ds):
    """Fill every missing feature cell from the ``k`` nearest reference rows.

    Continuous cells take the donor mean, binary and categorical cells the
    donor mode (smallest level on ties).  Distance ties go to the lowest
    reference row index.
    """
    names = ds.feature_names
    if tuple(names) != imp.columns:
        raise SchemaMismatch(f"imputer fitted on {list(imp.columns)}, got {names}")
    idx = [ds.index(n) for n in names]
    values = np.array(ds.values)
    missing = np.array(ds.missing)
    X = values[:, idx]
    M = missing[:, idx]
    rows = np.flatnonzero(M.any(axis=1))
    if rows.size == 0:
        return ds
    kinds = np.asarray(imp.kinds)
    for i in rows:
        d = _row_distances(X[i], M[i], imp.reference, imp.reference_missing, kinds, imp.scale)
        order = np.lexsort((np.arange(d.size), d))
        for j in np.flatnonzero(M[i]):
            donors = order[~imp.reference_missing[order, j]][: imp.k]
            vals = imp.reference[donors, j]
            if kinds[j] == "continuous":
                fill = vals.mean()
            else:
                lv, cnt = np.unique(vals, return_counts=True)
                fill = lv[np.argmax(cnt)]
            values[i, idx[j]] = fill
            missing[i, idx[j]] = False
    return ds.with_values(values, missing)


# -- class rebalancing -------------------------------------------------------------------
@dataclass(frozen=True)
class BalanceStrategy:
    """``kind`` is one of none, up, down, smote, weights."""

    kind: str = "none"
    k: int = 5
    weights: tuple = ()

    def __post_init__(self):
        if self.kind not in ("none", "up", "down", "smote", "weights"):
            raise InvalidSpec(f"unknown balance strategy {self.kind!r}")
        if self.kind == "smote" and self.k < 1:
            raise InvalidSpec("SMOTE k must be at least 1")
        if self.kind == "weights" and (len(self.weights) != 2 or min(self.weights) <= 0):
            raise InvalidSpec("class weights need two positive values")


def _classes(train):
    if train.endpoint_mode != "classification":
        raise InvalidSpec("rebalancing requires a classification endpoint")
    y = train.y
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("rebalancing needs both classes present")
    return (pos, neg) if pos.size <= neg.size else (neg, pos)


def rebalance(train, strategy, seed=0):
    if strategy.kind == "none":
        return train
    minority, majority = _classes(train)
    rng = make_rng(seed)
    if strategy.kind == "weights":
        w = np.where(train.y == 1, strategy.weights[1], strategy.weights[0])
        return replace(train, weights=w)
    if strategy.kind == "up":
        extra = minority[rng.integers(0, minority.size, majority.size - minority.size)]
        return train.take(np.concatenate([np.arange(train.n_rows), extra]))
    if strategy.kind == "down":
        kept = rng.choice(majority, size=minority.size, replace=False)
        return train.take(np.sort(np.concatenate([minority, kept])))
    return _smote(train, minority, majority.size - minority.size, strategy.k, rng)


def _smote(train, minority, n_new, k, rng):
    if minority.size <= k:
        raise SmoteTooFewMinority(f"SMOTE needs more than k={k} minority rows, got {minority.size}")
    X, M = train.feature_matrix()
    if M.any():
        raise DataError("SMOTE requires complete feature rows; impute first")
    kinds = [s.kind for s in train.feature_specs]
    Xm = X[minority]
    scale = column_scales(Xm, np.zeros_like(Xm, dtype=bool), kinds)
    neighbors = np.empty((minority.size, k), dtype=np.int64)
    for start in range(0, minority.size, 512):
        d = gower_distances(Xm[start:start + 512], Xm, kinds, scale)
        rows = np.arange(d.shape[0])
        d[rows, start + rows] = np.inf
        part = np.argpartition(d, k - 1, axis=1)[:, :k]
        order = np.take_along_axis(d, part, 1).argsort(axis=1, kind="stable")
        neighbors[start:start + d.shape[0]] = np.take_along_axis(part, order, 1)
    seeds = rng.integers(0, minority.size, n_new)
    partners = neighbors[seeds, rng.integers(0, k, n_new)]
    gap = rng.random(n_new)
    a, b = Xm[seeds], Xm[partners]
    synth = a + gap[:, None] * (b - a)
    discrete = np.array([kd != "continuous" for kd in kinds])
    synth[:, discrete] = np.where(gap[:, None] < 0.5, a, b)[:, discrete]

    feat_idx = [train.index(n) for n in train.feature_names]
    new = np.full((n_new, len(train.specs)), np.nan)
    new[:, feat_idx] = synth
    new[:, train.index(train.outcome)] = train.y[minority[0]]
    new_missing = np.isnan(new)
    values = np.vstack([train.values, new])
    missing = np.vstack([train.missing, new_missing])
    row_ids = np.concatenate([train.row_ids, np.full(n_new, -1, dtype=np.int64)])
    return replace(train, values=values, missing=missing, row_ids=row_ids, weights=None)


# -- recipes -----------------------------------------------------------------------------
@dataclass(frozen=True)
class RecipeConfig:
    """Preprocessing settings.  The default instance is the identity recipe."""

    impute_k: int = None
    one_hot: tuple = ()
    scaler: str = None
    balance: BalanceStrategy = field(default_factory=BalanceStrategy)

    @classmethod
    def caret_like(cls, balance=None):
        return cls(impute_k=5, one_hot="auto", scaler="zscore", balance=balance or BalanceStrategy())


@dataclass(frozen=True, eq=False)
class Recipe:
    config: RecipeConfig
    input_specs: tuple
    imputer: KnnImputer
    one_hot: tuple
    scaler: Scaler
    output_specs: tuple
    output_sources: tuple
    fit_row_ids: np.ndarray
    fingerprint: str

    @property
    def input_features(self):
        return [s.name for s in self.input_specs if s.role == "feature"]

    @property
    def output_features(self):
        return [s.name for s in self.output_specs if s.role == "feature"]


def _resolve_one_hot(train, setting):
    if setting == "auto":
        return tuple(s.name for s in train.feature_specs if s.kind == "categorical")
    return tuple(setting or ())


def fit_recipe(train, config=None):
    config = config or RecipeConfig()
    input_specs = tuple(s for s in train.specs if s.role != "ignored")
    cur = train.select([s.name for s in input_specs])
    imputer = None
    if config.impute_k:
        imputer = fit_knn_imputer(cur, config.impute_k)
        cur = impute(imputer, cur)
    maps = []
    for col in _resolve_one_hot(train, config.one_hot):
        cur, m = one_hot_encode(cur, col)
        maps.append(m)
    scaler = fit_scaler(cur, mode=config.scaler) if config.scaler else None
    sources = []
    for s in cur.specs:
        if s.role != "feature":
            continue
        src = next((m.source for m in maps if s.name in m.names), s.name)
        sources.append(src)
    ids = np.unique(train.row_ids)
    return Recipe(config, input_specs, imputer, tuple(maps), scaler, cur.specs, tuple(sources), ids, row_fingerprint(ids))


def apply_recipe(r, ds, is_training=False, seed=0):
    """Transform ``ds`` with fitted statistics; rebalance only when ``is_training``."""
    names = [s.name for s in r.input_specs if s.role == "feature" or (s.role == "outcome" and s.name in ds.names)]
    missing_cols = [n for n in names if n not in ds.names]
    if missing_cols:
        raise SchemaMismatch(f"input lacks required column(s) {missing_cols}")
    cur = ds.select(names)
    # Kinds come from the recipe; level sets are left to the one-hot maps so
    # unseen levels get flagged there instead of failing validation here.
    by_name = {s.name: s for s in r.input_specs}
    specs = [replace(by_name[s.name], levels=()) if by_name[s.name].kind == "categorical" else by_name[s.name] for s in cur.specs]
    cur = replace(cur, specs=tuple(specs))
    if r.imputer is not None:
        cur = impute(r.imputer, cur)
    for m in r.one_hot:
        cur = apply_one_hot(m, cur)[0]
    if r.scaler is not None:
        cur = apply_scaler(r.scaler, cur)
    if is_training and r.config.balance.kind != "none":
        cur = rebalance(cur, r.config.balance, seed)
    return cur
