"""Tabular datasets, CSV ingestion, train/test partitioning and the synthetic
glioblastoma cohort.

A :class:`Dataset` is an immutable numeric matrix plus a missing-value mask and
one :class:`ColumnSpec` per column.  Every dataset also carries the source row
id of each of its rows; preprocessing steps record those ids when they are
fitted so leakage between analysis and assessment rows can be audited later.
"""
import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DuplicateColumnName,
    EmptyPartition,
    InvalidIncidence,
    InvalidSpec,
    MissingColumn,
    MissingData,
    MissingHeader,
    NonNumericCell,
    SchemaMismatch,
)
from .rng import make_rng

KINDS = ("continuous", "binary", "categorical")
ROLES = ("feature", "outcome", "ignored")
MODES = ("classification", "regression")
NA_TOKENS = ("", "NA")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str = "continuous"
    levels: tuple = ()
    role: str = "feature"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown column kind {self.kind!r} for {self.name!r}")
        if self.role not in ROLES:
            raise InvalidSpec(f"unknown column role {self.role!r} for {self.name!r}")
        if self.kind == "binary":
            object.__setattr__(self, "levels", (0, 1))
        else:
            object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))

    @property
    def is_feature(self):
        return self.role == "feature"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of typed numeric columns.

    ``values[i, j]`` is meaningless wherever ``missing[i, j]`` is true (it is
    stored as NaN).  ``weights`` is only set by class-weight rebalancing.
    """

    specs: tuple
    values: np.ndarray
    missing: np.ndarray = None
    endpoint_mode: str = "classification"
    row_ids: np.ndarray = None
    weights: np.ndarray = None

    def __post_init__(self):
        specs = tuple(self.specs)
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[1] != len(specs):
            raise SchemaMismatch(f"values shape {values.shape} does not match {len(specs)} column specs")
        if values.shape[0] < 1:
            raise MissingData("dataset has no rows")
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateColumnName(f"duplicate column names: {dup}")
        if sum(s.role == "outcome" for s in specs) > 1:
            raise InvalidSpec("more than one outcome column")
        if self.endpoint_mode not in MODES:
            raise InvalidSpec(f"unknown endpoint mode {self.endpoint_mode!r}")
        missing = np.isnan(values) if self.missing is None else np.array(self.missing, dtype=bool, copy=True)
        if missing.shape != values.shape:
            raise SchemaMismatch("missing mask shape differs from values")
        values[missing] = np.nan
        if np.isnan(values[~missing]).any():
            raise MissingData("NaN values outside the missing mask")
        row_ids = np.arange(values.shape[0]) if self.row_ids is None else np.array(self.row_ids, dtype=np.int64)
        if row_ids.shape != (values.shape[0],):
            raise SchemaMismatch("row_ids length differs from number of rows")
        _check_kinds(specs, values, missing)
        for arr in (values, missing, row_ids):
            arr.setflags(write=False)
        object.__setattr__(self, "specs", specs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)
        object.__setattr__(self, "row_ids", row_ids)
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    # -- shape and lookup ---------------------------------------------------------
    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def names(self):
        return [s.name for s in self.specs]

    def index(self, name):
        for j, s in enumerate(self.specs):
            if s.name == name:
                return j
        raise MissingColumn(f"no column named {name!r}")

    def spec(self, name):
        return self.specs[self.index(name)]

    def column(self, name):
        return self.values[:, self.index(name)]

    @property
    def feature_specs(self):
        return [s for s in self.specs if s.role == "feature"]

    @property
    def feature_names(self):
        return [s.name for s in self.specs if s.role == "feature"]

    @property
    def outcome(self):
        for s in self.specs:
            if s.role == "outcome":
                return s.name
        return None

    @property
    def y(self):
        if self.outcome is None:
            raise MissingColumn("dataset has no outcome column")
        return self.column(self.outcome)

    def feature_matrix(self):
        idx = [j for j, s in enumerate(self.specs) if s.role == "feature"]
        return self.values[:, idx], self.missing[:, idx]

    # -- derived datasets ------------------------------------------------------------
    def take(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            values=self.values[rows],
            missing=self.missing[rows],
            row_ids=self.row_ids[rows],
            weights=None if self.weights is None else self.weights[rows],
        )

    def select(self, names):
        idx = [self.index(n) for n in names]
        return replace(self, specs=tuple(self.specs[j] for j in idx), values=self.values[:, idx], missing=self.missing[:, idx])

    def drop(self, names):
        keep = [n for n in self.names if n not in set(names)]
        return self.select(keep)

    def with_outcome(self, name, mode=None):
        """Make ``name`` the outcome; any previous outcome column becomes ignored."""
        self.index(name)
        specs = []
        for s in self.specs:
            if s.name == name:
                specs.append(replace(s, role="outcome"))
            elif s.role == "outcome":
                specs.append(replace(s, role="ignored"))
            else:
                specs.append(s)
        if mode is None:
            mode = "classification" if self.spec(name).kind == "binary" else "regression"
        return replace(self, specs=tuple(specs), endpoint_mode=mode)

    def with_values(self, values, missing=None, specs=None):
        return replace(
            self,
            values=values,
            missing=np.zeros(np.shape(values), dtype=bool) if missing is None else missing,
            specs=self.specs if specs is None else tuple(specs),
        )

    def fingerprint(self):
        return row_fingerprint(self.row_ids)


def row_fingerprint(row_ids):
    import hashlib

    ids = np.unique(np.asarray(row_ids, dtype=np.int64))
    return hashlib.sha256(ids.astype("<i8").tobytes()).hexdigest()


def _check_kinds(specs, values, missing):
    for j, s in enumerate(specs):
        col = values[~missing[:, j], j]
        if s.kind == "binary":
            bad = ~np.isin(col, (0.0, 1.0))
        elif s.kind == "categorical":
            bad = ~np.isin(col, np.asarray(s.levels, dtype=float)) if s.levels else np.zeros(col.shape, bool)
        else:
            bad = ~np.isfinite(col)
        if bad.any():
            raise InvalidSpec(f"column {s.name!r} ({s.kind}) holds out-of-domain value {col[bad][0]!r}")


# -- CSV ------------------------------------------------------------------------------
def _parse_cell(cell, row, col):
    cell = cell.strip()
    if cell in NA_TOKENS:
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise NonNumericCell(row, col, cell) from None


def infer_spec(name, col, miss):
    obs = col[~miss]
    if obs.size and np.isin(obs, (0.0, 1.0)).all():
        return ColumnSpec(name, "binary")
    return ColumnSpec(name, "continuous")


def load_csv(path, schema=None, outcome=None, endpoint_mode=None):
    """Read a comma-separated file with one header row.

    Empty cells and the literal ``NA`` are missing.  Column kinds are inferred
    (0/1-only columns are binary, everything else continuous) unless ``schema``
    supplies them; categorical columns must be declared.  By default the last
    column is the outcome.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise MissingHeader(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if all(_is_number(h) for h in header):
        raise MissingHeader(f"{path}: first row is numeric, expected a header")
    if len(set(header)) != len(header):
        dup = sorted({h for h in header if header.count(h) > 1})
        raise DuplicateColumnName(f"{path}: duplicate column names {dup}")
    body = rows[1:]
    if not body:
        raise MissingData(f"{path}: header present but no data rows")
    values = np.empty((len(body), len(header)))
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise SchemaMismatch(f"{path}: row {i} has {len(r)} cells, header has {len(header)}")
        for j, cell in enumerate(r):
            values[i, j] = _parse_cell(cell, i, header[j])
    missing = np.isnan(values)

    by_name = {s.name: s for s in (schema or [])}
    unknown = set(by_name) - set(header)
    if unknown:
        raise MissingColumn(f"{path}: schema columns not in file: {sorted(unknown)}")
    specs = []
    for j, name in enumerate(header):
        s = by_name.get(name) or infer_spec(name, values[:, j], missing[:, j])
        if s.role == "outcome":
            s = replace(s, role="feature")
        specs.append(s)
    if outcome is None:
        declared = [s.name for s in (schema or []) if s.role == "outcome"]
        outcome = declared[0] if declared else header[-1]
    ds = Dataset(tuple(specs), values, missing)
    return ds.with_outcome(outcome, endpoint_mode)


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def format_number(v):
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def write_csv(ds, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ds.names)
        for i in range(ds.n_rows):
            w.writerow(["NA" if ds.missing[i, j] else format_number(ds.values[i, j]) for j in range(len(ds.specs))])


# -- partitioning ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SplitPair:
    train: Dataset
    test: Dataset
    fraction: float
    seed: int


def split_train_test(ds, fraction=0.8, seed=123):
    """Seeded unstratified shuffle-then-cut split; both partitions are reshuffled."""
    if not 0 < fraction < 1:
        raise InvalidSpec(f"split fraction must lie in (0, 1), got {fraction}")
    n = ds.n_rows
    n_train = math.floor(fraction * n)
    if n_train in (0, n):
        raise EmptyPartition(f"fraction {fraction} of {n} rows leaves an empty partition")
    rng = make_rng(seed)
    perm = rng.permutation(n)
    train_rows = rng.permutation(perm[:n_train])
    test_rows = rng.permutation(perm[n_train:])
    return SplitPair(ds.take(train_rows), ds.take(test_rows), fraction, seed)


@dataclass(frozen=True)
class BalanceCheck:
    mode: str
    train: tuple
    test: tuple
    difference: float
    warning: bool


def class_balance_check(pair, tolerance=0.05, sd_fraction=0.5):
    """Compare the outcome distribution across the two partitions.

    Classification reports the positive proportion per partition; regression
    reports (mean, sd).  ``warning`` is set when proportions differ by more
    than ``tolerance`` or means by more than ``sd_fraction`` training sds.
    """
    ytr, yte = pair.train.y, pair.test.y
    if pair.train.endpoint_mode == "classification":
        a, b = float(np.mean(ytr)), float(np.mean(yte))
        diff = abs(a - b)
        return BalanceCheck("classification", (a,), (b,), diff, diff > tolerance)
    tr = (float(np.mean(ytr)), float(np.std(ytr, ddof=1)))
    te = (float(np.mean(yte)), float(np.std(yte, ddof=1)))
    diff = abs(tr[0] - te[0])
    return BalanceCheck("regression", tr, te, diff, diff > sd_fraction * tr[1])


# -- synthetic cohort ------------------------------------------------------------------
BINARY_PREVALENCE = {
    "IDH": 0.414,
    "MGMT": 0.562,
    "TERTp": 0.511,
    "Male": 0.487,
    "Midline": 0.260,
    "Comorbidity": 0.514,
    "Epilepsy": 0.331,
    "PriorSurgery": 0.528,
    "Married": 0.548,
    "ActiveWorker": 0.546,
    "Chemotherapy": 0.408,
    "HigherEducation": 0.421,
}

CONTINUOUS_MOMENTS = {
    "Caseload": (165.0, 38.7),
    "Age": (66.0, 6.2),
    "RadiotherapyDose": (24.8, 6.7),
    "KPS": (70.5, 8.0),
    "Income": (268052.0, 62867.0),
    "Height": (174.6, 6.7),
    "BMI": (0.02, 1.0),
    "Size": (2.98, 0.55),
}

CONTINUOUS_BOUNDS = {
    "Caseload": (1.0, math.inf),
    "RadiotherapyDose": (0.0, math.inf),
    "KPS": (0.0, 100.0),
    "Size": (0.01, math.inf),
}

# Effects on the standardized scale; 13 non-zero.  The midline effect is the
# largest because its skewed indicator pulls the survival median above the
# mean, which is what puts 51.8% of patients at or above twelve months.
DEFAULT_COEFFICIENTS = {
    "IDH": 0.45,
    "MGMT": 0.40,
    "TERTp": -0.25,
    "Midline": -0.60,
    "Comorbidity": -0.20,
    "Epilepsy": 0.15,
    "PriorSurgery": -0.15,
    "Chemotherapy": 0.35,
    "Caseload": 0.15,
    "Age": -0.40,
    "RadiotherapyDose": 0.30,
    "KPS": 0.45,
    "Size": -0.30,
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Marginals and outcome model of the synthetic glioblastoma cohort.

    ``noise_sd`` is on the scale of the standardized linear predictor; 0.70
    puts the share of explained survival variance near 0.76.

    With ``exact_marginals`` every binary feature has exactly
    ``round(p * n)`` positives at random rows and every continuous feature
    is standardized to the target sample mean and sd before clipping, so each
    seed reproduces the reference table rather than a noisy draw around it.
    """

    binary: dict = field(default_factory=lambda: dict(BINARY_PREVALENCE))
    continuous: dict = field(default_factory=lambda: dict(CONTINUOUS_MOMENTS))
    bounds: dict = field(default_factory=lambda: dict(CONTINUOUS_BOUNDS))
    coefficients: dict = field(default_factory=lambda: dict(DEFAULT_COEFFICIENTS))
    noise_sd: float = 0.70
    survival_mean: float = 12.1
    survival_sd: float = 3.1
    threshold: float = 12.0
    survival_floor: float = 0.1
    exact_marginals: bool = True

    def validate(self):
        for name, p in self.binary.items():
            if not 0 < p < 1:
                raise InvalidSpec(f"prevalence of {name} must lie in (0, 1), got {p}")
        for name, (_, sd) in self.continuous.items():
            if not sd > 0:
                raise InvalidSpec(f"sd of {name} must be positive")
        if not self.noise_sd > 0:
            raise InvalidSpec(f"noise sd must be positive, got {self.noise_sd}")
        if not self.survival_sd > 0:
            raise InvalidSpec("survival sd must be positive")
        unknown = set(self.coefficients) - set(self.binary) - set(self.continuous)
        if unknown:
            raise InvalidSpec(f"coefficients for unknown variables: {sorted(unknown)}")

    @classmethod
    def from_mapping(cls, mapping):
        base = cls()
        kwargs = {}
        for key, value in (mapping or {}).items():
            if not hasattr(base, key):
                raise InvalidSpec(f"unknown generator setting {key!r}")
            current = getattr(base, key)
            if isinstance(current, bool):
                if not isinstance(value, bool):
                    raise InvalidSpec(f"generator setting {key!r} must be true or false")
                kwargs[key] = value
            elif isinstance(current, dict):
                merged = dict(current)
                merged.update({k: tuple(v) if isinstance(v, list) else v for k, v in value.items()})
                kwargs[key] = merged
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


def generate_synthetic_cohort(n=10_000, seed=123, spec=None):
    """Simulate a glioblastoma cohort with a fixed reference marginal profile.

    Features are independent.  Survival is an affine rescaling of the linear
    predictor over standardized features plus Gaussian noise, so that it has
    mean ``survival_mean`` and sd ``survival_sd``; ``TwelveMonths`` is the
    indicator ``Survival >= threshold``.  Column order puts the features
    first, then Survival, then TwelveMonths (the outcome).
    """
    spec = spec or GeneratorSpec()
    spec.validate()
    if n < 1:
        raise InvalidSpec("n must be at least 1")
    rng = make_rng(seed)
    cols, specs = [], []
    lp = np.zeros(n)
    for name, p in spec.binary.items():
        if spec.exact_marginals:
            x = np.zeros(n)
            x[rng.permutation(n)[: int(round(p * n))]] = 1.0
        else:
            x = (rng.random(n) < p).astype(float)
        cols.append(x)
        specs.append(ColumnSpec(name, "binary"))
        lp += spec.coefficients.get(name, 0.0) * (x - p) / math.sqrt(p * (1 - p))
    for name, (mean, sd) in spec.continuous.items():
        x = rng.normal(0.0, 1.0, n)
        if spec.exact_marginals and n > 1:
            x = (x - x.mean()) / x.std(ddof=1)
        x = mean + sd * x
        lo, hi = spec.bounds.get(name, (-math.inf, math.inf))
        x = np.clip(x, lo, hi)
        cols.append(x)
        specs.append(ColumnSpec(name, "continuous"))
        lp += spec.coefficients.get(name, 0.0) * (x - mean) / sd
    lp_var = sum(b * b for b in spec.coefficients.values())
    noise = rng.normal(0.0, spec.noise_sd, n)
    z = (lp + noise) / math.sqrt(lp_var + spec.noise_sd**2)
    survival = np.maximum(spec.survival_mean + spec.survival_sd * z, spec.survival_floor)
    twelve = (survival >= spec.threshold).astype(float)
    cols += [survival, twelve]
    specs += [ColumnSpec("Survival", "continuous", role="ignored"), ColumnSpec("TwelveMonths", "binary", role="outcome")]
    return Dataset(tuple(specs), np.column_stack(cols), endpoint_mode="classification")


# -- sample size ------------------------------------------------------------------------
@dataclass(frozen=True)
class SampleSizeAdvice:
    required_positives: int
    required_total: int
    verdict: str
    notes: tuple = ()


def sample_size_check(n_features, incidence, n_available, n_positive):
    """Ten-events-per-feature rule with an absolute floor of 100 positive cases."""
    if not 0 < incidence < 1:
        raise InvalidIncidence(f"incidence must lie in (0, 1), got {incidence}")
    if n_features < 1:
        raise InvalidSpec("n_features must be at least 1")
    required_pos = 10 * int(n_features)
    required_total = math.ceil(required_pos / incidence - 1e-9)
    notes = []
    if n_positive < 100:
        verdict = "not_recommended"
        notes.append("fewer than 100 positive cases")
    elif n_positive < required_pos or n_available < required_total:
        verdict = "insufficient"
        notes.append(f"need {required_pos} positives and {required_total} patients")
    else:
        verdict = "ok"
    return SampleSizeAdvice(required_pos, required_total, verdict, tuple(notes))
