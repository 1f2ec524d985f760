"""Command line entry point: ``elmdeeponet <command> ...``.

Commands::

    generate --config CFG [--out FILE]
    train    --config CFG --dataset FILE [--out FILE]
    evaluate --model FILE --dataset FILE [--split test|train|all] [--n-train K]
    sweep    --config CFG --p1 LIST --p2 LIST [--dataset FILE] [--out FILE]
    run      --config CFG [--dataset FILE]
    report   --in DIR [--out DIR]

Failures exit with status 2 and a ``[stage]`` tagged message on stderr.
The sweep worker count comes from ``ELMDEEPONET_THREADS``.
"""

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .harness import ExperimentConfig, StageError
from .model import ElmDeepONet
from .problems import OperatorDataset


def _int_list(text):
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _out_dir(cfg):
    out = Path(cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args):
    cfg = ExperimentConfig.from_json(args.config)
    ds = harness._stage("generate", harness.generate_dataset, cfg)
    path = args.out or cfg.dataset_path or _out_dir(cfg) / f"dataset_{cfg.problem}.elmc"
    harness._stage("write", ds.save, path)
    print(path)


def cmd_train(args):
    cfg = ExperimentConfig.from_json(args.config)
    ds = harness._stage("load", OperatorDataset.load, args.dataset)
    train, _ = harness._stage("split", ds.split, cfg.n_train)
    model = harness._stage("assemble", harness.build_model, cfg, train, 0)
    rep = harness._stage("fit", model.fit, train)
    path = args.out or _out_dir(cfg) / f"model_{cfg.problem}.elmc"
    harness._stage("write", model.save, path)
    print(json.dumps(dict(rep.as_dict(), model_path=str(path)), sort_keys=True))


def cmd_evaluate(args):
    model = harness._stage("load", ElmDeepONet.load, args.model)
    ds = harness._stage("load", OperatorDataset.load, args.dataset)
    if args.split != "all":
        train, test = harness._stage("split", ds.split, args.n_train)
        ds = test if args.split == "test" else train
    ev = harness._stage("evaluate", model.evaluate, ds)
    print(json.dumps(ev.as_dict(), sort_keys=True))


def cmd_sweep(args):
    cfg = ExperimentConfig.from_json(args.config)
    ds = harness._stage("load", OperatorDataset.load, args.dataset) if args.dataset else None
    table = harness.run_sweep(cfg, _int_list(args.p1), _int_list(args.p2), dataset=ds)
    path = args.out or _out_dir(cfg) / f"sweep_{cfg.problem}.csv"
    harness._stage("write", table.to_csv, path)
    for cell, msg in sorted(table.errors.items()):
        print(f"cell {cell} failed: {msg}", file=sys.stderr)
    print(path)


def cmd_run(args):
    cfg = ExperimentConfig.from_json(args.config)
    ds = harness._stage("load", OperatorDataset.load, args.dataset) if args.dataset else None
    if cfg.output_dir is None:
        cfg = cfg.replace(output_dir=".")
    rec = harness.run_experiment(cfg, dataset=ds)
    print(json.dumps({k: rec[k] for k in ("model", "problem", "p1", "p2", "relative_error_mean",
                                          "relative_error_std")}, sort_keys=True))


def cmd_report(args):
    records = harness._stage("load", harness.load_records, args.in_dir)
    files = harness._stage("report", harness.emit_report, records, args.out or args.in_dir)
    for f in files:
        print(f)


def build_parser():
    p = argparse.ArgumentParser(prog="elmdeeponet", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a benchmark dataset")
    g.add_argument("--config", required=True)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit one model on the training split")
    t.add_argument("--config", required=True)
    t.add_argument("--dataset", required=True)
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="relative L2 error of a saved model")
    e.add_argument("--model", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--split", choices=("test", "train", "all"), default="test")
    e.add_argument("--n-train", type=int, default=None)
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="p1 x p2 sensitivity grid")
    s.add_argument("--config", required=True)
    s.add_argument("--p1", required=True, help="comma separated p1 values")
    s.add_argument("--p2", required=True, help="comma separated p2 values")
    s.add_argument("--dataset")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("run", help="generate, fit and evaluate over all trials")
    r.add_argument("--config", required=True)
    r.add_argument("--dataset")
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="comparison table and prediction dumps")
    rep.add_argument("--in", dest="in_dir", required=True)
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"[config] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
