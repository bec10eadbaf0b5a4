"""Index-level resampling plans: k-fold, bootstrap, leave-one-out and nested.

Plans only ever produce row positions; callers index their datasets with
them.  Each plan is a pure function of ``(n, parameters, seed)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, KTooLarge, TooFewRows
from .rng import derive_seed, make_rng


@dataclass(frozen=True)
class ResamplingPlan:
    """``kind`` is ``cv``, ``boot`` or ``loocv``; ``number`` is k or the bootstrap repetitions."""

    kind: str = "boot"
    number: int = 25
    seed: int = 123

    def __post_init__(self):
        if self.kind not in ("cv", "boot", "loocv"):
            raise InvalidSpec(f"unknown resampling method {self.kind!r}")
        if self.kind == "cv" and self.number < 2:
            raise InvalidSpec("k-fold needs k >= 2")
        if self.kind == "boot" and self.number < 1:
            raise InvalidSpec("bootstrap needs at least one repetition")

    def expand(self, n, seed=None):
        seed = self.seed if seed is None else seed
        if self.kind == "cv":
            return make_kfold(n, self.number, seed)
        if self.kind == "boot":
            return make_bootstrap(n, self.number, seed)
        return make_loocv(n)


@dataclass(frozen=True, eq=False)
class Resample:
    analysis: np.ndarray
    assessment: np.ndarray


def make_kfold(n, k, seed):
    """Shuffle once, then cut into k folds; the first ``n % k`` folds get one extra row."""
    if k < 2:
        raise InvalidSpec("k must be at least 2")
    if k > n:
        raise KTooLarge(f"k={k} exceeds n={n}")
    perm = make_rng(seed).permutation(n)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    out = []
    for f in range(k):
        test = perm[bounds[f]:bounds[f + 1]]
        train = np.concatenate([perm[: bounds[f]], perm[bounds[f + 1]:]])
        out.append(Resample(train, test))
    return out


def make_bootstrap(n, reps, seed):
    """Each analysis set is n draws with replacement; assessment is the out-of-bag rows."""
    if n < 2:
        raise TooFewRows("bootstrap needs at least two rows")
    out = []
    for r in range(reps):
        rng = make_rng(derive_seed(seed, r))
        draw = rng.integers(0, n, n)
        inbag = np.zeros(n, dtype=bool)
        inbag[draw] = True
        out.append(Resample(draw, np.flatnonzero(~inbag)))
    return out


def make_loocv(n):
    if n < 2:
        raise TooFewRows("leave-one-out needs at least two rows")
    everything = np.arange(n)
    return [Resample(np.delete(everything, i), np.array([i])) for i in range(n)]


@dataclass(frozen=True, eq=False)
class NestedSplit:
    outer: Resample
    inner: list


def make_nested(n, outer, inner):
    """Expand an outer plan and, inside each outer analysis set, an inner plan.

    Inner indices are mapped back to positions in ``0..n-1``.  The inner seed
    for outer pair ``i`` is derived from ``(outer.seed, i)``.  For bootstrap
    outer plans the inner universe is the distinct analysis rows.
    """
    out = []
    for i, pair in enumerate(outer.expand(n)):
        universe = np.unique(pair.analysis)
        inner_pairs = inner.expand(universe.size, seed=derive_seed(outer.seed, i))
        mapped = [Resample(universe[p.analysis], universe[p.assessment]) for p in inner_pairs]
        out.append(NestedSplit(pair, mapped))
    return out
