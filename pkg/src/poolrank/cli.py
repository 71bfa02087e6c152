"""Command line entry point for every workflow in the package.

Subcommands emit JSON reports (validating against the schemas shipped under
``poolrank/schemas``) or plot-ready CSV.  Exit codes: 0 on success, 1 on
usage errors, 2 on runtime or capacity-guard failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, blobs, circuits, geometry, training
from .networks import ModelConfig
from .reports import atomic_write_json, emit

DESK_WIDTHS = (16, 64)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_spec(args) -> circuits.NetworkSpec:
    spec = circuits.NetworkSpec.from_json(_load_json(args.spec))
    if getattr(args, "geometry", None):
        geom = geometry.geometry_from_json(_load_json(args.geometry))
        spec = circuits.NetworkSpec(
            spec.n_patches, spec.m_rep, spec.widths, spec.outputs, spec.depth_kind, geom
        )
    return spec


def _load_partition(args) -> geometry.Partition:
    return geometry.partition_from_json(_load_json(args.partition))


def cmd_bounds(args) -> list[str]:
    spec = _load_spec(args)
    p = _load_partition(args)
    if spec.geometry is not None and not spec.geometry.is_canonical():
        p = geometry.permute_partition(p, spec.geometry.canonical_order)
    if spec.depth_kind == "deep":
        doc = analysis.deep_rank_upper_bound(spec, p).to_json()
    else:
        upper = analysis.shallow_rank_upper_bound(spec, p)
        doc = {"lower": None, "upper": str(upper), "s": None, "c_table": []}
    doc["kind"] = spec.depth_kind
    return emit(doc, args.out)


def cmd_rank(args) -> list[str]:
    spec = _load_spec(args)
    stored_spec, w = circuits.load_weights(args.weights)
    w.validate_for(spec)
    p = _load_partition(args)
    if args.oracle == "grid":
        rank = analysis.grid_oracle_rank(spec, w, args.output, p)
        method = "grid_oracle"
    else:
        mat = analysis.matricized_for(spec, w, args.output, p)
        if args.exact:
            from .tensor_ops import exact_rank_integer

            rank = exact_rank_integer(mat)
            method = "exact"
        else:
            from .tensor_ops import numerical_rank

            rank = numerical_rank(mat)
            method = "numerical"
    doc = {"rank": int(rank), "method": method, "output": args.output}
    return emit(doc, args.out)


def cmd_verify_claim2(args) -> list[str]:
    spec = _load_spec(args)
    p = _load_partition(args)
    report = analysis.rank_maximality_report(spec, p, args.trials, args.seed)
    return emit(report.to_json(), args.out)


def cmd_distance(args) -> list[str]:
    spec = _load_spec(args)
    _, w = circuits.load_weights(args.weights)
    w.validate_for(spec)
    p = _load_partition(args)
    mat = analysis.matricized_for(spec, w, args.output, p)
    lb = analysis.deep_distance_lower_bound(spec, p) if spec.depth_kind == "deep" else None
    report = analysis.separability_distance(mat, lb_deep=lb)
    return emit(report.to_json(), args.out)


def cmd_gen_blobs(args) -> list[str]:
    ds = blobs.build_dataset(args.count, args.side, args.seed)
    blobs.write_dataset(ds, args.out)
    return [str(Path(args.out) / "manifest.csv")]


def _schedule(args) -> training.TrainSchedule:
    sched = training.paper_schedule() if args.paper_scale else training.desk_schedule()
    if args.iterations is not None:
        drop = int(0.8 * args.iterations)
        sched = training.TrainSchedule(
            iterations=args.iterations,
            batch_size=sched.batch_size,
            lr_drop_step=drop,
            eval_every=sched.eval_every,
            n_train=sched.n_train,
            n_test=sched.n_test,
        )
    return sched


def cmd_train(args) -> list[str]:
    ds = blobs.read_dataset(args.data)
    cfg = ModelConfig(arch=args.arch, geometry=args.pool, side=ds.side, channels=args.channels)
    sched = _schedule(args)
    result = training.train(cfg, ds, sched, args.seed, args.task)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.ckpt"
    curves_path = out / "curves.csv"
    training.save_model(model_path, cfg, result.params, sched.iterations)
    training.write_curves(curves_path, result.curves)
    atomic_write_json(
        out / "summary.json",
        {
            "task": args.task,
            "train_acc": result.train_accuracy,
            "test_acc": result.test_accuracy,
            "excluded_consumed": result.excluded_consumed,
        },
    )
    return [str(model_path), str(curves_path)]


def cmd_eval(args) -> list[str]:
    cfg, params, _ = training.load_model(args.model)
    ds = blobs.read_dataset(args.data)
    acc = training.evaluate(cfg, params, ds, args.task)
    return emit({"task": args.task, "accuracy": acc}, args.out)


def cmd_repro(args) -> list[str]:
    ds = blobs.read_dataset(args.data)
    sched = _schedule(args)
    archs = ("deep_cac",) if args.figure == "fig3" else ("deep_relu_max", "deep_relu_avg")
    widths = tuple(int(w) for w in args.widths.split(",")) if args.widths else DESK_WIDTHS
    rows = []
    for task in training.TASKS:
        for arch in archs:
            for geom in ("square", "mirror"):
                for width in widths:
                    cfg = ModelConfig(arch=arch, geometry=geom, side=ds.side, channels=width)
                    result = training.train(cfg, ds, sched, args.seed, task)
                    rows.append(
                        {
                            "task": task,
                            "arch": arch,
                            "geometry": geom,
                            "channels": width,
                            "seed": args.seed,
                            "train_acc": result.train_accuracy,
                            "test_acc": result.test_accuracy,
                        }
                    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{args.figure}_accuracies.csv"
    tmp = csv_path.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    tmp.replace(csv_path)
    return [str(csv_path)]


def build_parser() -> Parser:
    parser = Parser(prog="poolrank", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add_report_out(p):
        p.add_argument("--out", default=None, help="report path (stdout when omitted)")

    p = sub.add_parser("bounds", help="matricization rank bounds for a circuit and partition")
    p.add_argument("--spec", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--geometry", default=None)
    add_report_out(p)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("rank", help="rank of a matricized coefficient tensor")
    p.add_argument("--spec", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--exact", action="store_true", help="exact integer rank")
    p.add_argument("--oracle", choices=("grid",), default=None)
    p.add_argument("--output", type=int, default=1, help="1-based output index")
    add_report_out(p)
    p.set_defaults(fn=cmd_rank)

    p = sub.add_parser("verify", help="statistical verification runs")
    verify_sub = p.add_subparsers(dest="check")
    c2 = verify_sub.add_parser("claim2", help="rank maximality concentration over weight draws")
    c2.add_argument("--spec", required=True)
    c2.add_argument("--partition", required=True)
    c2.add_argument("--trials", type=int, required=True)
    c2.add_argument("--seed", type=int, required=True)
    add_report_out(c2)
    c2.set_defaults(fn=cmd_verify_claim2)

    p = sub.add_parser("distance", help="normalized distance from separable functions")
    p.add_argument("--spec", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--output", type=int, default=1)
    add_report_out(p)
    p.set_defaults(fn=cmd_distance)

    p = sub.add_parser("gen-blobs", help="generate a labeled blob dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--side", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_blobs)

    def add_train_flags(p):
        p.add_argument("--data", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--paper-scale", action="store_true")
        p.add_argument("--iterations", type=int, default=None)

    p = sub.add_parser("train", help="train one model on a blob task")
    p.add_argument("--task", choices=training.TASKS, required=True)
    p.add_argument(
        "--arch",
        choices=("deep_cac", "shallow_cac", "deep_relu_max", "deep_relu_avg"),
        required=True,
    )
    p.add_argument("--pool", choices=("square", "mirror"), default="square")
    p.add_argument("--channels", type=int, default=16)
    add_train_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="accuracy of a checkpoint on a task's test split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task", choices=training.TASKS, required=True)
    add_report_out(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("repro", help="run a geometry/task accuracy grid")
    p.add_argument("figure", choices=("fig3", "fig4"))
    p.add_argument("--widths", default=None, help="comma-separated channel widths")
    add_train_flags(p)
    p.set_defaults(fn=cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            if getattr(args, "command", None) == "verify":
                raise UsageError(parser.format_usage())
            raise UsageError(parser.format_usage())
        paths = args.fn(args)
        for path in paths:
            print(path, file=sys.stderr)
        return 0
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 2
    except Exception as exc:  # runtime and guard failures
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
