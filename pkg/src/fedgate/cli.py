"""Command-line entry point.

Subcommands: sweep, hetero, simulate-clients, xor, gradcheck, convert.
Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiment, nn
from .data import read_csv, read_emb1, write_csv, write_emb1
from .errors import FedgateError
from .simclients import export_assignment_csv, import_assignment_csv, simulate_clients


def _load_dataset(path: str):
    if path.endswith(".csv"):
        return read_csv(path)
    return read_emb1(path)


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    config = experiment.load_experiment_config(raw)
    os.makedirs(args.out, exist_ok=True)
    rows = experiment.run_sweep(config, args.out, threads=args.threads)
    print(f"wrote {len(rows)} runs to {args.out}")
    return 0


def _cmd_hetero(args) -> int:
    dataset = _load_dataset(args.data)
    if args.assignment:
        assignment = import_assignment_csv(args.assignment)
    else:
        if args.k is None:
            raise FedgateError("provide --assignment or --k")
        sim = simulate_clients(dataset, None, args.k, args.seed or 0)
        assignment = sim.train
    report = experiment.hetero_report(dataset, assignment, full_dim=args.full_dim)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "hetero.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def _cmd_simulate_clients(args) -> int:
    train = _load_dataset(args.train)
    test = _load_dataset(args.test) if args.test else None
    sim = simulate_clients(train, test, args.k, args.seed or 0)
    os.makedirs(args.out, exist_ok=True)
    export_assignment_csv(sim.train, os.path.join(args.out, "train_assignment.csv"))
    if sim.test is not None:
        export_assignment_csv(sim.test, os.path.join(args.out, "test_assignment.csv"))
    print(f"wrote assignments for {len(sim.train)} train samples to {args.out}")
    return 0


def _cmd_xor(args) -> int:
    report = experiment.run_xor(
        args.out,
        samples_per_cluster=args.samples_per_cluster,
        spread=args.spread,
        rounds=args.rounds,
        local_steps=args.local_steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed or 0,
    )
    for kind, info in sorted(report["models"].items()):
        accs = info["per_client_train_accuracy"]
        pretty = ", ".join(f"client {c}: {a:.4f}" for c, a in sorted(accs.items()))
        print(f"{kind}: {pretty}")
    return 0


def _cmd_gradcheck(args) -> int:
    reports = nn.gradient_check(
        seed=args.seed or 0, num_models=args.models, tolerance=args.tolerance
    )
    worst = max(r["max_relative_error"] for r in reports)
    failures = [r for r in reports if not r["passed"]]
    for r in failures:
        print(
            f"FAIL case {r['case']} ({r['unit']}, {r['task']}): "
            f"max relative error {r['max_relative_error']:.3e}"
        )
    print(
        f"gradcheck: {len(reports) - len(failures)}/{len(reports)} passed, "
        f"worst relative error {worst:.3e}"
    )
    return 0 if not failures else 1


def _cmd_convert(args) -> int:
    src, dst = args.input, args.output
    if src.endswith(".csv") and dst.endswith(".emb1"):
        write_emb1(read_csv(src), dst)
    elif src.endswith(".emb1") and dst.endswith(".csv"):
        write_csv(read_emb1(src), dst)
    else:
        raise FedgateError(
            "convert needs a .csv input with .emb1 output or vice versa"
        )
    print(f"wrote {dst}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedgate",
        description="Federated training simulations with client-conditioned "
        "gated units and heterogeneity metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a shuffle-proportion experiment sweep")
    p.add_argument("--config", required=True, help="experiment config JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("hetero", help="client heterogeneity report")
    p.add_argument("--data", required=True, help="dataset (.emb1 or .csv)")
    p.add_argument("--k", type=int, default=None, help="simulate this many clients")
    p.add_argument("--assignment", default=None, help="assignment CSV to reuse")
    p.add_argument("--full-dim", action="store_true",
                   help="measure in the full embedding space instead of PCA-2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional output directory")
    p.set_defaults(func=_cmd_hetero)

    p = sub.add_parser("simulate-clients", help="derive and export client assignments")
    p.add_argument("--train", required=True, help="training dataset (.emb1 or .csv)")
    p.add_argument("--test", default=None, help="optional test dataset")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate_clients)

    p = sub.add_parser("xor", help="two-client XOR demonstration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--samples-per-cluster", type=int, default=200)
    p.add_argument("--spread", type=float, default=0.25)
    p.add_argument("--rounds", type=int, default=2000)
    p.add_argument("--local-steps", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_xor)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--models", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("convert", help="convert between CSV and EMB1 datasets")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except FedgateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
