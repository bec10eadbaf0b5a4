"""Turn a run report into CSV tables, SVG plots and a checksummed manifest.

All files are rendered in memory first, then written into a staging
directory next to the target and moved into place, so a failure never
leaves a half-written output directory behind.
"""
import csv
import hashlib
import io
import json
import os
import shutil
import tempfile

from ..errors import IoError
from . import svg


def _cell(v):
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def train_table(report):
    rows = report["comparison"]
    extra = list(rows[0]["extra"]) if rows else []
    header = ["model", "params", "metric", "mean", "sd", *extra, "grid_size", "selected"]
    body = [
        [r["algorithm"], r["label"], r["metric"], r["mean"], r["sd"], *[r["extra"].get(k) for k in extra], r["grid_size"], r["selected"]]
        for r in rows
    ]
    return _csv(header, body)


def test_table(report):
    model = report["selected"]
    return _csv(["model", "metric", "value"], [[model, k, v] for k, v in report["test"].items()])


def dumps_json(obj):
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def render(report):
    """Map of file name to text for every report artifact."""
    files = {"report.json": dumps_json(report), "metrics_test.csv": test_table(report)}
    if report.get("kind") == "run":
        files["metrics_train.csv"] = train_table(report)
    plots = report["plots"]
    mode = report["endpoint"]["mode"]
    if "roc" in plots:
        files["roc.svg"] = svg.roc_svg(plots["roc"]["points"], plots["roc"]["auc"], f"ROC curve, {report['selected']} (test)")
    if "calibration" in plots:
        cal = plots["calibration"]
        curve = [pt for pt in cal["curve"] if pt[1] is not None]
        files["calibration.svg"] = svg.calibration_svg(
            [(b[0], b[1]) for b in cal["bins"]], curve, f"Calibration, {len(cal['bins'])} groups (test)"
        )
    if "qq" in plots:
        files["qq.svg"] = svg.qq_svg(plots["qq"], f"Q-Q plot, {report['selected']} (test)")
    if report.get("kind") == "run":
        comp = report["comparison"]
        files["comparison.svg"] = svg.bars_svg(
            [r["algorithm"] for r in comp],
            [r["mean"] for r in comp],
            [r["sd"] if r["sd"] is not None else 0.0 for r in comp],
            title=f"Model comparison (resampled {report['metric']})",
            ylabel=report["metric"],
            lower_is_better=mode == "regression",
            highlight=next(i for i, r in enumerate(comp) if r["selected"]),
        )
        imp = report["importance"]
        files["importance.svg"] = svg.importance_svg(imp["names"], imp["scores"], f"Variable importance, {report['selected']}")
        if report.get("rfe"):
            rfe = report["rfe"]
            files["rfe.svg"] = svg.profile_svg(rfe["sizes"], rfe["profile"], rfe["best_size"], rfe["metric"])
    return files


def manifest_for(files):
    entries = []
    for name in sorted(files):
        data = files[name].encode("utf-8")
        entries.append({"name": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})
    return {"files": entries}


def write_outputs(out_dir, files):
    """Write ``files`` plus manifest.json into ``out_dir`` all-or-nothing."""
    files = dict(files)
    files["manifest.json"] = dumps_json(manifest_for(files))
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    try:
        os.makedirs(parent, exist_ok=True)
        stage = tempfile.mkdtemp(prefix=".clinpred-", dir=parent)
    except OSError as exc:
        raise IoError(f"cannot prepare output directory {out_dir}: {exc}") from exc
    try:
        for name, text in files.items():
            with open(os.path.join(stage, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        os.makedirs(out_dir, exist_ok=True)
        for name in files:
            os.replace(os.path.join(stage, name), os.path.join(out_dir, name))
    except OSError as exc:
        raise IoError(f"cannot write outputs to {out_dir}: {exc}") from exc
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return files["manifest.json"]


def emit_report(report, out_dir, extra=None):
    """Render and write every artifact; ``extra`` adds more files (the model file)."""
    files = render(report)
    files.update(extra or {})
    return json.loads(write_outputs(out_dir, files))


def load_report(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"report {path} is not valid JSON: {exc}") from exc
