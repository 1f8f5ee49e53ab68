"""Command-line front end.

Subcommands: ``run`` (benchmark one built-in SCM), ``histogram``
(generated-vs-truth histogram data for one intervened value), ``ate``
(method ATE against the oracle), ``adjust`` (adjustment-set search on a DAG
file).  A flat ``key = value`` config file given via ``--config`` overrides
flags of the same name.  Exits 0 on success, nonzero with a diagnostic line
on stderr otherwise.
"""

from __future__ import annotations

import argparse
import sys

from .diffusion import TrainConfig
from .graph import find_adjustment_set, parse_dag_text
from .harness import (
    ExperimentConfig,
    METHODS,
    ate_report,
    histogram_report,
    run_experiment,
)
from .metrics import KernelSpec
from .scm import SCM_NAMES


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=500, help="training epochs per node model")
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--learning-rate", type=float, default=1e-4)
    parser.add_argument("--timesteps", type=int, default=100, help="diffusion steps T")
    parser.add_argument("--n-train", type=int, default=1000, help="training sample count")
    parser.add_argument("--n-generate", type=int, default=500, help="generated sample count")
    parser.add_argument("--base-seed", type=int, default=0)
    parser.add_argument("--config", help="flat key = value file overriding flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causal-diffusion",
        description="Interventional sampling on structural causal models with diffusion decoders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train both methods and tabulate MMD scores")
    run.add_argument("--scm", required=True, choices=SCM_NAMES)
    run.add_argument("--seeds", type=int, default=5, help="number of seeds")
    run.add_argument("--values", type=int, default=10, help="number of intervened values")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--cause", type=int, default=None)
    run.add_argument("--outcome", type=int, default=None)
    run.add_argument("--bandwidth", type=float, default=None, help="kernel bandwidth (default: median heuristic)")
    _add_train_flags(run)

    hist = sub.add_parser("histogram", help="emit generated-vs-truth histogram data")
    hist.add_argument("--scm", required=True, choices=SCM_NAMES)
    hist.add_argument("--method", required=True, choices=METHODS)
    hist.add_argument("--value", type=float, required=True, help="intervened value (raw cause value)")
    hist.add_argument("--out", required=True, help="output file")
    hist.add_argument("--bins", type=int, default=40)
    hist.add_argument("--cause", type=int, default=None)
    hist.add_argument("--outcome", type=int, default=None)
    _add_train_flags(hist)

    ate = sub.add_parser("ate", help="average treatment effect vs the oracle")
    ate.add_argument("--scm", required=True, choices=SCM_NAMES)
    ate.add_argument("--method", required=True, choices=METHODS)
    ate.add_argument("--value", type=float, required=True, help="treated value (raw cause value)")
    ate.add_argument("--cause", type=int, default=None)
    ate.add_argument("--outcome", type=int, default=None)
    _add_train_flags(ate)

    adj = sub.add_parser("adjust", help="adjustment-set search on a DAG file")
    adj.add_argument("--dag", required=True, help="DAG text file")
    adj.add_argument("--cause", type=int, required=True)
    adj.add_argument("--outcome", type=int, required=True)
    return parser


def apply_config_file(args: argparse.Namespace, path: str) -> None:
    """Override parsed flags with `key = value` lines; keys use underscores."""
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if not hasattr(args, key) or key in ("command", "config"):
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            setattr(args, key, _coerce(value, getattr(args, key)))


def _coerce(text: str, current):
    if isinstance(current, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if current is None:
        for cast in (int, float):
            try:
                return cast(text)
            except ValueError:
                pass
    return text


def _experiment_config(args: argparse.Namespace, n_seeds: int, n_values: int, out_dir=None) -> ExperimentConfig:
    train = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        T=args.timesteps,
    )
    kernel = KernelSpec(bandwidth=getattr(args, "bandwidth", None))
    return ExperimentConfig(
        scm_name=args.scm,
        cause=args.cause,
        outcome=args.outcome,
        n_train=args.n_train,
        n_generate=args.n_generate,
        n_values=n_values,
        n_seeds=n_seeds,
        base_seed=args.base_seed,
        train=train,
        kernel=kernel,
        out_dir=out_dir,
    )


def _cmd_run(args) -> int:
    config = _experiment_config(args, n_seeds=args.seeds, n_values=args.values, out_dir=args.out)
    rows = run_experiment(config)
    for row in rows:
        print(f"{row.example} {row.method}: mmd = {row.mmd_mean:.6g} +/- {row.mmd_std:.6g} (n={len(row.raw)})")
    print(f"wrote raw results and summary under {args.out}")
    return 0


def _cmd_histogram(args) -> int:
    config = _experiment_config(args, n_seeds=1, n_values=1)
    histogram_report(config, args.method, args.value, args.bins, args.out)
    print(f"wrote histogram data to {args.out}")
    return 0


def _cmd_ate(args) -> int:
    config = _experiment_config(args, n_seeds=1, n_values=1)
    method_ate, oracle_ate = ate_report(config, args.method, args.value)
    print(f"{args.method} ate = {method_ate:.6g}")
    print(f"oracle ate = {oracle_ate:.6g}")
    return 0


def _cmd_adjust(args) -> int:
    with open(args.dag) as fh:
        dag = parse_dag_text(fh.read())
    found = find_adjustment_set(dag, args.cause, args.outcome)
    if found is None:
        print("none")
    else:
        print("{" + ", ".join(str(i) for i in sorted(found)) + "}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "histogram": _cmd_histogram,
    "ate": _cmd_ate,
    "adjust": _cmd_adjust,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            apply_config_file(args, args.config)
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single diagnostic line, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
