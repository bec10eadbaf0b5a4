"""Batch command line: ``clinpred {generate,run,predict,report}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""
import argparse
import os
import sys
import tempfile

from ..data import GeneratorSpec, generate_synthetic_cohort, write_csv
from ..errors import ClinPredError, InvalidSpec, IoError
from .config import load_config, parse_config
from .modelfile import dumps, model_load
from .pipeline import evaluate_only, read_for_model, run_pipeline
from .report import _csv, emit_report, load_report, render, write_outputs

MODEL_FILE = "model.clinpred"


def _parser():
    p = argparse.ArgumentParser(prog="clinpred", description="Clinical prediction model workflow.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic glioblastoma cohort as CSV")
    g.add_argument("--config", help="YAML config; its data.generate section is used")
    g.add_argument("--seed", type=int)
    g.add_argument("--rows", type=int, help="number of patients (default 10000)")
    g.add_argument("--out", default="cohort.csv", help="CSV path to write")

    r = sub.add_parser("run", help="train, compare, freeze and test (or evaluate a saved model)")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--out", help="output directory (overrides config 'out')")
    r.add_argument("--input", help="CSV to use instead of the config's data section")
    r.add_argument("--evaluate-only", metavar="MODEL", help="evaluate a saved model on every row of the input")

    q = sub.add_parser("predict", help="score a CSV with a saved model")
    q.add_argument("model")
    q.add_argument("csv")
    q.add_argument("--out", default="predictions.csv")

    e = sub.add_parser("report", help="re-emit CSV and SVG reports from a run's report.json")
    e.add_argument("run_dir")
    e.add_argument("--out", help="target directory (default: run_dir)")
    return p


def cmd_generate(args):
    gen = {}
    if args.config:
        cfg = load_config(args.config, seed=args.seed)
        gen = dict(cfg.data.generate or {})
        seed = gen.get("seed", cfg.seed)
    else:
        seed = 123 if args.seed is None else args.seed
    n = args.rows if args.rows is not None else gen.get("n", 10_000)
    if n < 1:
        raise InvalidSpec("--rows must be at least 1")
    ds = generate_synthetic_cohort(n, seed, GeneratorSpec.from_mapping(gen.get("spec")))
    _atomic_write(args.out, lambda path: write_csv(ds, path))
    print(f"wrote {ds.n_rows} rows to {args.out}")


def _with_input(cfg, path):
    from dataclasses import replace

    return replace(cfg, data=replace(cfg.data, input=os.path.abspath(path), generate=None))


def cmd_run(args):
    cfg = load_config(args.config, seed=args.seed, threads=args.threads, out=args.out)
    if args.input:
        cfg = _with_input(cfg, args.input)
    if args.evaluate_only:
        model = model_load(args.evaluate_only)
        if cfg.data.input is None:
            raise InvalidSpec("--evaluate-only needs a CSV (data.input or --input)")
        ds = read_for_model(cfg.data.input, model, with_outcome=True)
        report = evaluate_only(model, ds, cfg.groups)
        manifest = emit_report(report, cfg.out)
    else:
        report, model = run_pipeline(cfg)
        manifest = emit_report(report, cfg.out, {MODEL_FILE: dumps(model)})
    _summary(report, cfg.out, manifest)


def _summary(report, out, manifest):
    test = report["test"]
    if report["endpoint"]["mode"] == "classification":
        line = f"test AUC {test['auc']:.4f}, calibration slope {test['calibration_slope']:.3f}, intercept {test['calibration_intercept']:.3f}"
    else:
        r2 = "NA" if test["r2"] is None else f"{test['r2']:.4f}"
        line = f"test RMSE {test['rmse']:.4f}, MAE {test['mae']:.4f}, R2 {r2}"
    print(f"selected {report['selected']}: {line}")
    print(f"wrote {len(manifest['files']) + 1} files to {out}")


def cmd_predict(args):
    model = model_load(args.model)
    ds = read_for_model(args.csv, model)
    from ..models.tuning import predict

    pred = predict(model, ds)
    if model.mode == "classification":
        header = ["row", "probability", "label", "extrapolated", "imputed"]
        rows = [[i, float(v), int(lab), ";".join(f), ";".join(m)]
                for i, (v, lab, f, m) in enumerate(zip(pred.values, pred.labels, pred.flags, pred.imputed))]
    else:
        header = ["row", "prediction", "extrapolated", "imputed"]
        rows = [[i, float(v), ";".join(f), ";".join(m)] for i, (v, f, m) in enumerate(zip(pred.values, pred.flags, pred.imputed))]
    text = _csv(header, rows)

    def write(path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    _atomic_write(args.out, write)
    print(f"wrote {len(rows)} predictions to {args.out}")


def cmd_report(args):
    report = load_report(os.path.join(args.run_dir, "report.json"))
    out = args.out or args.run_dir
    files = render(report)
    model_path = os.path.join(args.run_dir, MODEL_FILE)
    if os.path.exists(model_path):
        with open(model_path, encoding="utf-8") as fh:
            files[MODEL_FILE] = fh.read()
    write_outputs(out, files)
    print(f"wrote {len(files) + 1} files to {out}")


def _atomic_write(path, writer):
    path = os.path.abspath(path)
    folder = os.path.dirname(path)
    try:
        os.makedirs(folder, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=".clinpred-", dir=folder)
        os.close(fd)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    try:
        writer(tmp)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "predict": cmd_predict, "report": cmd_report}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ClinPredError as exc:
        print(f"clinpred: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


__all__ = ["main", "parse_config"]
