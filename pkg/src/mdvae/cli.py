"""Command-line entry point: preprocess, train, sample, evaluate, traverse, serve.

Every run prints the resolved configuration and seed first, and identical
flags plus seed produce byte-identical primary outputs. Exit codes: 0
success, 1 usage error, 2 runtime failure. MDVAE_SEED provides a global
seed fallback.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np
import torch

from .chem import AtomRegistry
from .data import Dataset
from .nn.objectives import LossWeights
from .training import TrainConfig, load_checkpoint, save_checkpoint, train, write_log_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_seed() -> int:
    return int(os.environ.get("MDVAE_SEED", "0"))


def build_parser() -> _Parser:
    parser = _Parser(prog="mdvae", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="ingest a SMILES CSV into a dataset cache")
    p.add_argument("--input", required=True, help="CSV with a 'smiles' column")
    p.add_argument("--out", required=True, help="output cache path")
    p.add_argument("--properties", required=True,
                   help="comma-separated property names (built-ins or CSV columns)")
    p.add_argument("--registry", default="qm9", choices=["qm9", "zinc"])
    p.add_argument("--val-fraction", type=float, default=1.0 / 7.0)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("train", help="train a model on a dataset cache")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="JSON config file (TrainConfig keys)")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--log", help="optional CSV loss-log path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("sample", help="sample molecules from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--temperature", type=float, default=1.0)

    p = sub.add_parser("evaluate", help="metric report for a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--report", required=True, help="JSON report output path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--skip-disentanglement", action="store_true")

    p = sub.add_parser("traverse", help="latent traversal to CSV")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lo", type=float, default=-5.0)
    p.add_argument("--hi", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--n-atoms", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="HTTP designer endpoints")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _announce(command: str, resolved: dict):
    print(f"mdvae {command} " +
          json.dumps(resolved, sort_keys=True, default=str))


def cmd_preprocess(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    registry = AtomRegistry.qm9() if args.registry == "qm9" else AtomRegistry.zinc()
    names = [n.strip() for n in args.properties.split(",") if n.strip()]
    _announce("preprocess", {"input": args.input, "out": args.out,
                             "properties": names, "registry": args.registry,
                             "val_fraction": args.val_fraction, "seed": seed})
    ds = Dataset.from_csv(args.input, names, registry,
                          val_fraction=args.val_fraction, seed=seed)
    ds.save(args.out)
    print(f"wrote {len(ds.records)} records ({ds.skipped} skipped) "
          f"train={len(ds.train_indices)} val={len(ds.val_indices)}")
    return 0


def cmd_train(args) -> int:
    ds = Dataset.load(args.data)
    config = TrainConfig.from_json_file(args.config) if args.config else TrainConfig(
        weights=LossWeights())
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    elif "MDVAE_SEED" in os.environ:
        config = replace(config, seed=_default_seed())
    if args.epochs is not None:
        config = replace(config, epochs=args.epochs)
    _announce("train", {"data": args.data, "out": args.out,
                        "config": config.to_json_obj()})
    ck, log = train(ds, config, out_path=args.out, verbose=args.verbose)
    save_checkpoint(ck, args.out)
    if args.log:
        write_log_csv(log, args.log)
    print(f"trained {ck.step} steps; final total {log[-1]['total']:.4f}; "
          f"checkpoint at {args.out}")
    return 0


def cmd_sample(args) -> int:
    from .evaluation import sample_set

    seed = args.seed if args.seed is not None else _default_seed()
    ck = load_checkpoint(args.ckpt)
    _announce("sample", {"ckpt": args.ckpt, "n": args.n, "seed": seed,
                         "temperature": args.temperature, "out": args.out})
    gen = sample_set(ck, args.n, seed=seed, temperature=args.temperature)
    gen.write_csv(args.out, specs=ck.specs)
    print(f"wrote {len(gen)} molecules to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import evaluate

    seed = args.seed if args.seed is not None else _default_seed()
    ck = load_checkpoint(args.ckpt)
    ds = Dataset.load(args.data)
    if ds.registry != ck.registry:
        raise ValueError("dataset registry does not match checkpoint registry")
    _announce("evaluate", {"ckpt": args.ckpt, "data": args.data, "n": args.n,
                           "seed": seed, "report": args.report})
    report = evaluate(ck, ds, n=args.n, seed=seed,
                      with_disentanglement=not args.skip_disentanglement)
    with open(args.report, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    print(f"validity={report.validity:.4f} uniqueness={report.uniqueness:.4f} "
          f"novelty={report.novelty:.4f}; report at {args.report}")
    return 0


def cmd_traverse(args) -> int:
    from .evaluation import traverse

    seed = args.seed if args.seed is not None else _default_seed()
    ck = load_checkpoint(args.ckpt)
    rng = np.random.default_rng(seed)
    if args.n_atoms is not None:
        n = args.n_atoms
    else:
        sizes = sorted(ck.size_histogram)
        weights = np.array([ck.size_histogram[s] for s in sizes], dtype=float)
        n = int(rng.choice(sizes, p=weights / weights.sum()))
    _announce("traverse", {"ckpt": args.ckpt, "dim": args.dim, "lo": args.lo,
                           "hi": args.hi, "steps": args.steps, "n_atoms": n,
                           "seed": seed, "out": args.out})
    base = torch.from_numpy(rng.standard_normal((n, ck.config.latent_dim)))
    points = traverse(ck, args.dim, args.lo, args.hi, args.steps, base)
    from .chem import emit_smiles
    with open(args.out, "w") as fh:
        computed_names = sorted(points[0].computed_properties)
        fh.write("z_value,smiles,predicted," + ",".join(computed_names) + "\n")
        for p in points:
            row = [repr(p.z_value), emit_smiles(p.graph), repr(p.predicted_property)]
            row += [repr(p.computed_properties[k]) for k in computed_names]
            fh.write(",".join(row) + "\n")
    print(f"wrote {len(points)} traversal rows to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    _announce("serve", {"ckpt": args.ckpt, "host": args.host, "port": args.port})
    ck = load_checkpoint(args.ckpt)
    serve(ck, host=args.host, port=args.port)
    return 0


COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "sample": cmd_sample,
    "evaluate": cmd_evaluate,
    "traverse": cmd_traverse,
    "serve": cmd_serve,
}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return 2
    except Exception as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
