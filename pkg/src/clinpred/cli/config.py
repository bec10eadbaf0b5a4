"""Pipeline configuration: a YAML document plus command-line overrides.

Key set (every key is optional unless marked)::

    seed: 123                 # default for every seed below
    threads: 1
    out: results
    data:
      input: cohort.csv       # a CSV path, or
      generate: {n: 10000, seed: 123, spec: {noise_sd: 0.7}}
      schema: [{name: Grade, kind: categorical, levels: [1, 2, 3]}]
      drop: [Survival]
    endpoint: {name: TwelveMonths, mode: classification}   # required
    split: {fraction: 0.8, seed: 123}
    recipe: {impute_k: 5, one_hot: auto, scaler: zscore}
    balance: {kind: up, k: 5}
    control: {method: boot, number: 25, seed: 123, metric: ROC}
    rfe: {enabled: false, sizes: [1, 5, 10], method: cv, number: 5, seed: 123, algorithm: glm}
    models:
      - glm
      - {algorithm: rf, grid: {mtry: [2, 4], n_trees: [100]}}
    cutoff: {policy: fixed, value: 0.5, target: 0.9}
    calibration: {groups: 10}

A grid is either a list of points or a mapping of value lists, which is
expanded to its cartesian product in key order.  Any seed left out of a
section falls back to the top-level seed.  ``--seed`` replaces the top-level
seed and every section seed.
"""
import itertools
import os
from dataclasses import dataclass, field, replace

import yaml

from ..data import ColumnSpec, GeneratorSpec
from ..errors import InvalidSpec
from ..models.estimators import EstimatorSpec
from ..models.tuning import METRICS
from ..preprocess import BalanceStrategy, RecipeConfig
from ..resample import ResamplingPlan

SECTIONS = (
    "seed", "threads", "out", "data", "endpoint", "split", "recipe", "balance", "control", "rfe", "models",
    "cutoff", "calibration",
)
GRID_KEYS = {
    "glm": (),
    "ridge": ("lambda",),
    "lasso": ("lambda",),
    "enet": ("lambda", "alpha"),
    "nb": ("fL", "usekernel", "adjust"),
    "knn": ("k",),
    "rf": ("mtry", "n_trees", "min_leaf"),
    "gbm": ("n_trees", "depth", "shrinkage", "min_obs", "bag_fraction"),
}
CUTOFF_POLICIES = ("fixed", "balanced", "rule_in", "rule_out")


@dataclass(frozen=True)
class DataSource:
    input: str = None
    generate: dict = None
    schema: tuple = ()
    drop: tuple = ()


@dataclass(frozen=True)
class RfeSettings:
    enabled: bool = False
    sizes: tuple = ()
    plan: ResamplingPlan = field(default_factory=lambda: ResamplingPlan("cv", 5, 123))
    algorithm: str = "glm"


@dataclass(frozen=True)
class CutoffPolicy:
    policy: str = "fixed"
    value: float = 0.5
    target: float = None


@dataclass(frozen=True)
class PipelineConfig:
    data: DataSource
    endpoint: str
    mode: str
    split_fraction: float = 0.8
    split_seed: int = 123
    recipe: RecipeConfig = field(default_factory=RecipeConfig.caret_like)
    plan: ResamplingPlan = field(default_factory=ResamplingPlan)
    metric: str = None
    rfe: RfeSettings = field(default_factory=RfeSettings)
    models: tuple = ()
    cutoff: CutoffPolicy = field(default_factory=CutoffPolicy)
    groups: int = 10
    seed: int = 123
    threads: int = 1
    out: str = "results"


def _section(doc, name):
    value = doc.get(name) or {}
    if not isinstance(value, dict):
        raise InvalidSpec(f"config section {name!r} must be a mapping")
    return value


def _only(section, name, allowed):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise InvalidSpec(f"unknown key(s) {unknown} in config section {name!r}")


def _int(value, what, low=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidSpec(f"{what} must be an integer, got {value!r}")
    if low is not None and value < low:
        raise InvalidSpec(f"{what} must be >= {low}, got {value}")
    return value


def expand_grid(algorithm, grid):
    if grid is None:
        return None
    if isinstance(grid, dict):
        keys = list(grid)
        lists = [v if isinstance(v, list) else [v] for v in grid.values()]
        points = [dict(zip(keys, combo)) for combo in itertools.product(*lists)]
    elif isinstance(grid, list):
        points = [dict(p) for p in grid]
    else:
        raise InvalidSpec(f"{algorithm}: grid must be a list of points or a mapping of value lists")
    for p in points:
        bad = sorted(set(p) - set(GRID_KEYS[algorithm]))
        if bad:
            raise InvalidSpec(f"{algorithm}: unknown hyperparameter(s) {bad}; allowed {list(GRID_KEYS[algorithm])}")
        for k, v in p.items():
            if k == "usekernel":
                if not isinstance(v, bool):
                    raise InvalidSpec(f"{algorithm}: usekernel must be true or false")
            elif isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidSpec(f"{algorithm}: {k} must be numeric, got {v!r}")
    return tuple(points)


def _model(entry):
    if isinstance(entry, str):
        entry = {"algorithm": entry}
    if not isinstance(entry, dict) or "algorithm" not in entry:
        raise InvalidSpec(f"model entry needs an algorithm: {entry!r}")
    _only(entry, "models", ("algorithm", "grid"))
    algorithm = entry["algorithm"]
    if algorithm not in GRID_KEYS:
        raise InvalidSpec(f"unknown algorithm {algorithm!r}; expected one of {list(GRID_KEYS)}")
    return EstimatorSpec(algorithm, expand_grid(algorithm, entry.get("grid")))


def _plan(section, name, seed, default_kind, default_number):
    kind = section.get("method", default_kind)
    number = section.get("number", default_number)
    number = _int(number, f"{name}.number", 1)
    return ResamplingPlan(kind, number, _int(section.get("seed", seed), f"{name}.seed", 0))


def parse_config(doc, seed=None, threads=None, out=None):
    """Validate a parsed YAML mapping and apply flag overrides."""
    if not isinstance(doc, dict):
        raise InvalidSpec("config must be a mapping at the top level")
    _only(doc, "config", SECTIONS)
    if seed is not None:
        doc = {k: ({kk: vv for kk, vv in v.items() if kk != "seed"} if isinstance(v, dict) else v) for k, v in doc.items()}
        if isinstance((doc.get("data") or {}).get("generate"), dict):
            doc["data"]["generate"] = {k: v for k, v in doc["data"]["generate"].items() if k != "seed"}
        doc["seed"] = seed
    base_seed = _int(doc.get("seed", 123), "seed", 0)
    n_threads = _int(threads if threads is not None else doc.get("threads", 1), "threads", 1)

    data = _section(doc, "data")
    _only(data, "data", ("input", "generate", "schema", "drop"))
    if data.get("input") is not None and data.get("generate") is not None:
        raise InvalidSpec("data: give either input or generate, not both")
    gen = data.get("generate")
    if gen is not None:
        gen = dict(gen) if isinstance(gen, dict) else {}
        _only(gen, "data.generate", ("n", "seed", "spec"))
        gen.setdefault("seed", base_seed)
        gen["n"] = _int(gen.get("n", 10_000), "data.generate.n", 1)
        GeneratorSpec.from_mapping(gen.get("spec")).validate()
    schema = []
    for item in data.get("schema") or []:
        if not isinstance(item, dict) or "name" not in item:
            raise InvalidSpec(f"schema entries need a name: {item!r}")
        _only(item, "data.schema", ("name", "kind", "levels", "role"))
        schema.append(ColumnSpec(item["name"], item.get("kind", "continuous"), tuple(item.get("levels", ())), item.get("role", "feature")))
    source = DataSource(data.get("input"), gen, tuple(schema), tuple(data.get("drop") or ()))

    endpoint = _section(doc, "endpoint")
    _only(endpoint, "endpoint", ("name", "mode"))
    if "name" not in endpoint:
        raise InvalidSpec("endpoint.name is required")
    mode = endpoint.get("mode", "classification")
    if mode not in METRICS:
        raise InvalidSpec(f"endpoint.mode must be classification or regression, got {mode!r}")

    split = _section(doc, "split")
    _only(split, "split", ("fraction", "seed"))
    fraction = float(split.get("fraction", 0.8))
    if not 0 < fraction < 1:
        raise InvalidSpec(f"split.fraction must lie in (0, 1), got {fraction}")

    rec = _section(doc, "recipe")
    _only(rec, "recipe", ("impute_k", "one_hot", "scaler"))
    one_hot = rec.get("one_hot", "auto")
    if one_hot != "auto":
        one_hot = tuple(one_hot or ())
    scaler = rec.get("scaler", "zscore")
    if scaler not in (None, "zscore", "minmax"):
        raise InvalidSpec(f"recipe.scaler must be zscore, minmax or null, got {scaler!r}")
    bal = _section(doc, "balance")
    _only(bal, "balance", ("kind", "k", "weights"))
    balance = BalanceStrategy(bal.get("kind", "none"), _int(bal.get("k", 5), "balance.k", 1), tuple(bal.get("weights", ())))
    if mode == "regression" and balance.kind != "none":
        raise InvalidSpec("class rebalancing needs a classification endpoint")
    impute_k = rec.get("impute_k", 5)
    recipe = RecipeConfig(
        impute_k=None if impute_k is None else _int(impute_k, "recipe.impute_k", 1),
        one_hot=one_hot, scaler=scaler, balance=balance,
    )

    ctrl = _section(doc, "control")
    _only(ctrl, "control", ("method", "number", "seed", "metric"))
    plan = _plan(ctrl, "control", base_seed, "boot", 25)
    metric = ctrl.get("metric", METRICS[mode])
    if metric != METRICS[mode]:
        raise InvalidSpec(f"metric {metric!r} does not fit a {mode} endpoint (use {METRICS[mode]})")

    rfe_doc = _section(doc, "rfe")
    _only(rfe_doc, "rfe", ("enabled", "sizes", "method", "number", "seed", "algorithm"))
    rfe = RfeSettings(
        bool(rfe_doc.get("enabled", False)),
        tuple(_int(s, "rfe.sizes", 1) for s in rfe_doc.get("sizes") or ()),
        _plan(rfe_doc, "rfe", base_seed, "cv", 5),
        rfe_doc.get("algorithm", "glm"),
    )
    if rfe.enabled and not rfe.sizes:
        raise InvalidSpec("rfe.sizes is required when rfe is enabled")
    if rfe.algorithm not in GRID_KEYS:
        raise InvalidSpec(f"rfe.algorithm {rfe.algorithm!r} is unknown")

    entries = doc.get("models") or ["glm"]
    if not isinstance(entries, list):
        raise InvalidSpec("models must be a list")
    models = tuple(_model(e) for e in entries)
    names = [m.algorithm for m in models]
    if len(set(names)) != len(names):
        raise InvalidSpec(f"models lists an algorithm twice: {names}")
    if mode == "regression":
        bad = [n for n in names if n in ("nb", "gbm")]
        if bad:
            raise InvalidSpec(f"{bad} support classification endpoints only")

    cut = _section(doc, "cutoff")
    _only(cut, "cutoff", ("policy", "value", "target"))
    policy = CutoffPolicy(cut.get("policy", "fixed"), float(cut.get("value", 0.5)), cut.get("target"))
    if policy.policy not in CUTOFF_POLICIES:
        raise InvalidSpec(f"cutoff.policy must be one of {CUTOFF_POLICIES}")
    if policy.policy in ("rule_in", "rule_out") and not (policy.target is not None and 0 < float(policy.target) <= 1):
        raise InvalidSpec(f"cutoff.policy {policy.policy} needs a target in (0, 1]")
    if policy.policy == "fixed" and not 0 < policy.value < 1:
        raise InvalidSpec("cutoff.value must lie in (0, 1)")

    cal = _section(doc, "calibration")
    _only(cal, "calibration", ("groups",))

    return PipelineConfig(
        data=source,
        endpoint=endpoint["name"],
        mode=mode,
        split_fraction=fraction,
        split_seed=_int(split.get("seed", base_seed), "split.seed", 0),
        recipe=recipe,
        plan=plan,
        metric=metric,
        rfe=rfe,
        models=models,
        cutoff=policy,
        groups=_int(cal.get("groups", 10), "calibration.groups", 2),
        seed=base_seed,
        threads=n_threads,
        out=out if out is not None else str(doc.get("out", "results")),
    )


def load_config(path, seed=None, threads=None, out=None):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise InvalidSpec(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InvalidSpec(f"config {path} is not valid YAML: {exc}") from exc
    cfg = parse_config(doc or {}, seed, threads, out)
    base = os.path.dirname(os.path.abspath(path))
    if cfg.data.input is not None and not os.path.isabs(cfg.data.input):
        cfg = replace(cfg, data=replace(cfg.data, input=os.path.join(base, cfg.data.input)))
    return cfg
