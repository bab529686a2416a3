"""Command line interface: ingest, train, reproduce, verify.

Exit codes:
    0  success
    2  parse / input error
    3  degenerate task (e.g. sign prediction on an all-positive graph)
    4  convergence error
    5  numeric fault
    6  sampling exhaustion
    7  verification failure
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import checkpoint, verify as verify_mod
from .errors import (
    ConvergenceError,
    DegenerateTaskError,
    EmptyGraphError,
    GraphParseError,
    NumericFault,
    SamplingExhaustedError,
)
from .graph import load_edge_list, save_edge_list
from .pipelines import TASKS, TrainConfig, train

EXIT_CODES = {
    GraphParseError: 2,
    EmptyGraphError: 2,
    FileNotFoundError: 2,
    DegenerateTaskError: 3,
    ConvergenceError: 4,
    NumericFault: 5,
    SamplingExhaustedError: 6,
}

DATASET_FORMATS = {
    "bitcoin-alpha": "csv4",
    "bitcoin-otc": "csv4",
    "advogato": "tsv3",
    "epinions": "tsv3",
}

CONFIG_KEYS = {
    "layers": int, "hidden": int, "embed": int, "heads": int,
    "attention_hidden": int, "activation": str, "projection": "bool",
    "self_loop_weight": float, "features": str, "feature_dim": int, "sse_dim": int,
    "head_hidden": int, "head_layers": int,
    "lr": float, "epochs": int, "patience": int, "lambda_weight": float,
    "train_fraction": float, "val_fraction": float,
}


def parse_config(path=None, overrides=None):
    """Flat 'key = value' text config; '#' comments; unknown keys rejected."""
    cfg = TrainConfig()
    items = {}
    if path:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise GraphParseError(path, lineno, "expected 'key = value'")
                k, v = (part.strip() for part in line.split("=", 1))
                items[k] = v
    items.update(overrides or {})
    for k, v in items.items():
        if k not in CONFIG_KEYS:
            raise ValueError(f"unknown config key {k!r} (known: {sorted(CONFIG_KEYS)})")
        caster = CONFIG_KEYS[k]
        if caster == "bool":
            v = v.strip().lower() in ("1", "true", "yes", "on") if isinstance(v, str) else bool(v)
        else:
            v = caster(v)
        setattr(cfg, k, v)
    return cfg


def cmd_ingest(args):
    fmt = args.format or DATASET_FORMATS.get(os.path.basename(args.source).split(".")[0], "tsv3")
    g = load_edge_list(args.source, fmt=fmt, symmetrize=args.symmetrize)
    os.makedirs(args.out, exist_ok=True)
    name = args.name or os.path.splitext(os.path.basename(args.source))[0]
    out_path = os.path.join(args.out, f"{name}.tsv")
    save_edge_list(g, out_path)
    pct = 100.0 * g.fraction_positive()
    print(f"{g.num_nodes} nodes, {g.num_edges} edges, {pct:.2f}% positive")
    print(f"wrote {out_path}")
    return 0


def cmd_train(args):
    g = load_edge_list(args.graph, fmt=args.format)
    cfg = parse_config(args.config)
    cfg.seed = args.seed
    dataset = os.path.splitext(os.path.basename(args.graph))[0]
    model, report = train(args.task, g, cfg, dataset=dataset)
    os.makedirs(args.out, exist_ok=True)
    ckpt = os.path.join(args.out, f"{dataset}_{args.task}_seed{args.seed}.ckpt")
    checkpoint.save_arrays(ckpt, model.parameter_arrays())
    report_path = os.path.join(args.out, "reports.jsonl")
    with open(report_path, "a", encoding="utf-8") as f:
        f.write(report.to_json_line() + "\n")
    csv_path = os.path.join(args.out, "reports.csv")
    write_header = not os.path.exists(csv_path)
    with open(csv_path, "a", encoding="utf-8") as f:
        if write_header:
            f.write("task,dataset,seed,auc,f1,mae\n")
        f.write(report.to_csv_row() + "\n")
    mae = "-" if report.mae is None else f"{report.mae:.4f}"
    print(f"{args.task} {dataset} seed={args.seed}: "
          f"auc={report.roc_auc:.4f} f1={report.f1:.4f} mae={mae} "
          f"epochs={report.epochs_run} wall={report.wall_s:.1f}s")
    print(f"checkpoint: {ckpt}")
    return 0


TABLE_TASKS = {"2": "sign", "3": "weight", "4": "signed-weight"}
TABLE_DATASETS = {
    "2": ["bitcoin-alpha", "bitcoin-otc", "epinions"],
    "3": ["advogato", "bitcoin-alpha", "bitcoin-otc"],
    "4": ["bitcoin-alpha", "bitcoin-otc"],
}


def cmd_reproduce(args):
    task = TABLE_TASKS[args.table]
    datasets = TABLE_DATASETS[args.table]
    missing = [d for d in datasets if not os.path.exists(os.path.join(args.data, f"{d}.tsv"))]
    if missing:
        expected = ", ".join(os.path.join(args.data, f"{d}.tsv") for d in missing)
        print(f"missing ingested datasets; expected files: {expected}", file=sys.stderr)
        print("run `wsgat ingest <raw file> --out <data dir>` first", file=sys.stderr)
        return 2
    cfg_base = parse_config(args.config)
    rows = ["dataset,auc_mean,auc_std,f1_mean,f1_std,mae_mean,mae_std"]
    for ds in datasets:
        g = load_edge_list(os.path.join(args.data, f"{ds}.tsv"), fmt="tsv3")
        aucs, f1s, maes = [], [], []
        for seed in range(args.seeds):
            cfg = parse_config(args.config)
            cfg.seed = seed
            _, rep = train(task, g, cfg, dataset=ds)
            aucs.append(rep.roc_auc)
            f1s.append(rep.f1)
            maes.append(rep.mae if rep.mae is not None else np.nan)
        def ms(xs):
            xs = np.asarray(xs, dtype=float)
            return f"{np.nanmean(xs):.4f},{np.nanstd(xs):.4f}"
        rows.append(f"{ds},{ms(aucs)},{ms(f1s)},{ms(maes)}")
        print(rows[-1])
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"table{args.table}.csv")
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")
    print(f"wrote {out_path}")
    return 0


def cmd_verify(args):
    failures = verify_mod.run_suite(args.suite)
    if failures:
        for module, prop, observed in failures:
            print(f"FAIL {module}: {prop} (observed {observed})")
        return 7
    print(f"verify {args.suite}: all properties pass")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="wsgat",
                                description="Signed/weighted graph attention link prediction")
    sub = p.add_subparsers(dest="command", required=True)

    pi = sub.add_parser("ingest", help="parse a raw edge list into canonical tsv3")
    pi.add_argument("source", help="raw edge list file")
    pi.add_argument("--format", choices=["tsv3", "csv4"], default=None)
    pi.add_argument("--name", default=None, help="output dataset name")
    pi.add_argument("--symmetrize", action="store_true", help="emit both arcs per input line")
    pi.add_argument("--out", default="data")
    pi.set_defaults(fn=cmd_ingest)

    pt = sub.add_parser("train", help="train one task on one graph")
    pt.add_argument("task", choices=list(TASKS))
    pt.add_argument("graph", help="canonical tsv3 graph file")
    pt.add_argument("--format", choices=["tsv3", "csv4"], default="tsv3")
    pt.add_argument("--config", default=None, help="flat key = value config file")
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--out", default="runs")
    pt.set_defaults(fn=cmd_train)

    pr = sub.add_parser("reproduce", help="mean/std over seeds per dataset, table layout")
    pr.add_argument("table", choices=["2", "3", "4"])
    pr.add_argument("--data", default="data", help="directory with ingested tsv files")
    pr.add_argument("--seeds", type=int, default=5)
    pr.add_argument("--config", default=None)
    pr.add_argument("--out", default="runs")
    pr.set_defaults(fn=cmd_reproduce)

    pv = sub.add_parser("verify", help="run built-in invariant suites")
    pv.add_argument("suite", choices=["gradcheck", "oracle", "metrics"])
    pv.set_defaults(fn=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except tuple(EXIT_CODES) as e:
        print(f"error: {e}", file=sys.stderr)
        for klass, code in EXIT_CODES.items():
            if isinstance(e, klass):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
