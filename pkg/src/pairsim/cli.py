"""Command-line front end: gen | train | eval | gradfield | sweep.

Every subcommand is deterministic given its flags and input files, and
run outputs land in a directory named by the user tag plus a hash of the
resolved configuration, so reruns overwrite their own artifacts byte for
byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import dataio, engine, evalkit, geometry

__all__ = ["main", "build_parser"]


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:8]


def _run_dir(out_dir: str, tag: str, config: dict) -> Path:
    path = Path(out_dir) / f"{tag}-{_config_hash(config)}"
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def _apply_config_file(args: argparse.Namespace) -> None:
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        for key, value in overrides.items():
            if not hasattr(args, key):
                raise ValueError(f"unknown config key {key!r}")
            setattr(args, key, value)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out-dir", default="runs")
    sub.add_argument("--tag", default=None, help="run directory name prefix")
    sub.add_argument("--config", default=None, help="JSON file overriding flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairsim")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="generate a synthetic cluster dataset")
    gen.add_argument("--classes", type=int, required=True)
    gen.add_argument("--per-class", type=int, required=True)
    gen.add_argument("--dim", type=int, required=True)
    gen.add_argument("--sigma", type=float, default=0.1)
    gen.add_argument("--center-scale", type=float, default=1.0)
    gen.add_argument("-o", "--output", required=True)
    _add_common(gen)

    train = subs.add_parser("train", help="train an embedding model")
    train.add_argument("--data", required=True)
    train.add_argument("--loss", default="circle", choices=engine.LOSS_IDS)
    train.add_argument("--paradigm", default="pair_wise", choices=["class_level", "pair_wise"])
    train.add_argument("--gamma", type=float, default=256.0)
    train.add_argument("--m", type=float, default=0.25)
    train.add_argument("--lr", type=float, default=0.05)
    train.add_argument("--iterations", type=int, default=200)
    train.add_argument("--batch-size", type=int, default=32)
    train.add_argument("--p-classes", type=int, default=8)
    train.add_argument("--k-samples", type=int, default=4)
    train.add_argument("--embed-dim", type=int, default=32)
    train.add_argument("--hidden", type=int, default=None)
    _add_common(train)

    ev = subs.add_parser("eval", help="score a checkpoint on a dataset")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--ks", default="1,2,4,8", help="comma-separated R@K values")
    ev.add_argument("--scatter", action="store_true", help="also write hardest-pair scatter CSV")
    _add_common(ev)

    gf = subs.add_parser("gradfield", help="emit a single-pair gradient-field CSV")
    gf.add_argument("--loss", default="circle", choices=["triplet", "am_softmax", "circle"])
    gf.add_argument("--gamma", type=float, default=256.0)
    gf.add_argument("--m", type=float, default=0.25)
    gf.add_argument("--resolution", type=int, default=101)
    gf.add_argument("--lo", type=float, default=0.0)
    gf.add_argument("--hi", type=float, default=1.0)
    _add_common(gf)

    sw = subs.add_parser("sweep", help="train once per hyper-parameter value")
    sw.add_argument("--data", required=True)
    sw.add_argument("--axis", required=True, choices=["gamma", "m"])
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--loss", default="circle", choices=engine.LOSS_IDS)
    sw.add_argument("--paradigm", default="pair_wise", choices=["class_level", "pair_wise"])
    sw.add_argument("--gamma", type=float, default=256.0)
    sw.add_argument("--m", type=float, default=0.25)
    sw.add_argument("--lr", type=float, default=0.05)
    sw.add_argument("--iterations", type=int, default=200)
    sw.add_argument("--batch-size", type=int, default=32)
    sw.add_argument("--p-classes", type=int, default=8)
    sw.add_argument("--k-samples", type=int, default=4)
    sw.add_argument("--embed-dim", type=int, default=32)
    sw.add_argument("--hidden", type=int, default=None)
    _add_common(sw)

    return parser


def _train_config(args) -> engine.TrainConfig:
    return engine.TrainConfig(
        paradigm=args.paradigm,
        loss=args.loss,
        gamma=args.gamma,
        m=args.m,
        lr=args.lr,
        iterations=args.iterations,
        batch_size=args.batch_size,
        p_classes=args.p_classes,
        k_samples=args.k_samples,
        embed_dim=args.embed_dim,
        hidden=args.hidden,
        seed=args.seed,
    )


def _cmd_gen(args) -> None:
    spec = dataio.ClusterSpec(
        n_classes=args.classes,
        per_class=args.per_class,
        dim=args.dim,
        center_scale=args.center_scale,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    dataio.save_dataset(args.output, dataio.gen_clusters(spec))
    print(f"wrote {args.output}: {args.classes * args.per_class} rows")


def _cmd_train(args) -> None:
    dataset = dataio.load_dataset(args.data)
    config = _train_config(args)
    echo = asdict(config)
    echo["data"] = args.data
    run_dir = _run_dir(args.out_dir, args.tag or f"train-{args.loss}", echo)
    record = engine.train(dataset, config)
    dataio.save_checkpoint(run_dir / "checkpoint.json", record.model, echo)
    dataio.save_record(run_dir / "record.csv", record)
    print(f"wrote {run_dir}/checkpoint.json and record.csv")


def _cmd_eval(args) -> None:
    dataset = dataio.load_dataset(args.data)
    model, _ = dataio.load_checkpoint(args.checkpoint, expect_din=dataset.features.shape[1])
    ks = [int(v) for v in args.ks.split(",") if v]
    echo = {"checkpoint": args.checkpoint, "data": args.data, "ks": ks, "scatter": args.scatter}
    run_dir = _run_dir(args.out_dir, args.tag or "eval", echo)
    emb = model.embed(dataset.features)
    report = evalkit.MetricsReport(recall_at_k=evalkit.recall_at_k(emb, dataset.labels, ks))
    report.rank1 = report.recall_at_k.get(1)
    if args.scatter:
        scatter = evalkit.similarity_scatter(model, dataset)
        report.pair_scatter = scatter.points
        report.concentration = (
            float(scatter.points.mean()),
            float(scatter.points.var(axis=0).sum()),
        )
        with open(run_dir / "scatter.csv", "w", encoding="utf-8") as fh:
            fh.write("sn_max,sp_min\n")
            for sn, sp in scatter.points:
                fh.write(f"{sn!r},{sp!r}\n")
    evalkit.write_report_csv(run_dir / "metrics.csv", report)
    evalkit.write_report_json(run_dir / "metrics.json", report)
    print(f"wrote {run_dir}/metrics.csv")


def _cmd_gradfield(args) -> None:
    grid = geometry.GridSpec(
        sn_range=(args.lo, args.hi), sp_range=(args.lo, args.hi), resolution=args.resolution
    )
    echo = {
        "loss": args.loss,
        "gamma": args.gamma,
        "m": args.m,
        "resolution": args.resolution,
        "lo": args.lo,
        "hi": args.hi,
    }
    run_dir = _run_dir(args.out_dir, args.tag or f"gradfield-{args.loss}", echo)
    rows = geometry.gradient_field(args.loss, args.gamma, args.m, grid)
    geometry.write_gradient_field_csv(run_dir / "gradfield.csv", rows)
    print(f"wrote {run_dir}/gradfield.csv")


def _cmd_sweep(args) -> None:
    dataset = dataio.load_dataset(args.data)
    values = [float(v) for v in args.values.split(",") if v]
    if not values:
        raise ValueError("sweep needs at least one value")
    config = _train_config(args)
    echo = asdict(config)
    echo.update({"data": args.data, "axis": args.axis, "values": values})
    run_dir = _run_dir(args.out_dir, args.tag or f"sweep-{args.axis}", echo)
    rows = evalkit.sweep(dataset, config, args.axis, values)
    evalkit.write_sweep_csv(run_dir / "sweep.csv", args.axis, rows)
    print(f"wrote {run_dir}/sweep.csv")


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "gradfield": _cmd_gradfield,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        _COMMANDS[args.command](args)
    except (ValueError, RuntimeError) as exc:
        print(f"error:invalid-input:{exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error:io:{exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
