"""Versioned, checksummed JSON model files.

Layout: a first line ``# clinpred-model sha256=<hex>`` followed by a JSON
body.  The checksum covers the body bytes.  Dataclasses are written as
objects tagged with their type name (only registered types can be read
back).  Small finite arrays are stored as plain lists; large or non-finite
arrays as base64 of zlib-compressed little-endian bytes, which keeps
predictions bit-exact after a round trip.
"""
import base64
import dataclasses
import hashlib
import json
import zlib

import numpy as np

from ..data import ColumnSpec
from ..errors import ChecksumMismatch, IoError, VersionMismatch
from ..models.bayes import KernelDensity, NaiveBayes
from ..models.estimators import Fit, KnnView, LinearModel, Truncated
from ..models.knn import KnnModel
from ..models.trees import Boosted, Forest, Tree
from ..models.tuning import FittedModel
from ..preprocess import BalanceStrategy, KnnImputer, OneHotMap, Recipe, RecipeConfig, Scaler

MAGIC = "# clinpred-model sha256="
SUPPORTED_VERSIONS = (1,)
INLINE_LIMIT = 64

_TYPES = {
    cls.__name__: cls
    for cls in (
        BalanceStrategy, Boosted, ColumnSpec, Fit, FittedModel, Forest, KernelDensity, KnnImputer, KnnModel,
        KnnView, LinearModel, NaiveBayes, OneHotMap, Recipe, RecipeConfig, Scaler, Tree, Truncated,
    )
}


def _encode(obj):
    if isinstance(obj, np.ndarray):
        arr = np.ascontiguousarray(obj)
        if arr.size <= INLINE_LIMIT and arr.dtype.kind in "fiub" and np.all(np.isfinite(arr.astype(float))):
            return {"__array__": arr.dtype.str, "shape": list(arr.shape), "values": arr.ravel().tolist()}
        raw = arr.astype(arr.dtype.newbyteorder("<")).tobytes()
        return {"__array__": arr.dtype.str, "shape": list(arr.shape), "zlib64": base64.b64encode(zlib.compress(raw, 9)).decode("ascii")}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        name = type(obj).__name__
        if name not in _TYPES:
            raise TypeError(f"cannot serialize {name}")
        return {"__type__": name, **{f.name: _encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}}
    if isinstance(obj, dict):
        return {"__dict__": [[_encode(k), _encode(v)] for k, v in obj.items()]}
    if isinstance(obj, tuple):
        return {"__tuple__": [_encode(v) for v in obj]}
    if isinstance(obj, list):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else {"__float__": repr(v)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _decode(obj):
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if not isinstance(obj, dict):
        return obj
    if "__array__" in obj:
        dtype = np.dtype(obj["__array__"])
        shape = tuple(obj["shape"])
        if "values" in obj:
            return np.array(obj["values"], dtype=dtype).reshape(shape)
        raw = zlib.decompress(base64.b64decode(obj["zlib64"]))
        return np.frombuffer(raw, dtype=dtype.newbyteorder("<")).astype(dtype).reshape(shape)
    if "__type__" in obj:
        cls = _TYPES.get(obj["__type__"])
        if cls is None:
            raise ChecksumMismatch(f"unknown object type {obj['__type__']!r} in model file")
        kwargs = {k: _decode(v) for k, v in obj.items() if k != "__type__"}
        return cls(**kwargs)
    if "__dict__" in obj:
        return {_hashable(_decode(k)): _decode(v) for k, v in obj["__dict__"]}
    if "__tuple__" in obj:
        return tuple(_decode(v) for v in obj["__tuple__"])
    if "__float__" in obj:
        return float(obj["__float__"])
    return {k: _decode(v) for k, v in obj.items()}


def _hashable(k):
    return tuple(_hashable(v) for v in k) if isinstance(k, list) else k


def dumps(model):
    body = json.dumps(
        {"format": "clinpred-model", "format_version": model.format_version, "model": _encode(model)},
        indent=1,
        allow_nan=False,
    )
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return f"{MAGIC}{digest}\n{body}\n"


def loads(text):
    head, _, body = text.partition("\n")
    if not head.startswith(MAGIC):
        raise ChecksumMismatch("model file header is damaged")
    expected = head[len(MAGIC):].strip()
    body = body[:-1] if body.endswith("\n") else body
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if actual != expected:
        raise ChecksumMismatch(f"model file checksum {actual[:12]}... does not match recorded {expected[:12]}...")
    doc = json.loads(body)
    version = doc.get("format_version")
    if version not in SUPPORTED_VERSIONS:
        raise VersionMismatch(f"model file format version {version} is not supported (this build reads {list(SUPPORTED_VERSIONS)})")
    model = _decode(doc["model"])
    if not isinstance(model, FittedModel):
        raise ChecksumMismatch("model file does not contain a fitted model")
    return model


def model_save(model, path):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(model))
    except OSError as exc:
        raise IoError(f"cannot write model file {path}: {exc}") from exc


def model_load(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read model file {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ChecksumMismatch("model file is not valid UTF-8 (damaged)") from exc
    return loads(text)

