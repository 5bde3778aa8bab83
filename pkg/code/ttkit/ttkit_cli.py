# pylint: disable=broad-exception-caught
"""
Command-line entry point:

    ttkit <separate|identify|solve|eig|complete|regress> --config FILE [--seed N] [--out DIR]
    ttkit tt <info|round|contract|convert> ...

Exit codes: 0 on success, 1 on a failed run, 2 on an invalid config or when a
solver stops without reaching its tolerance.
"""

import argparse
import sys
from pathlib import Path

from prefect.task_runners import ThreadPoolTaskRunner
from tensorkit.tt_core import TTOperator
from tensorkit.tt_core import TTTrain
from tensorkit.tt_core import contract_full
from tensorkit.tt_core import tt_round
from tensorkit.tt_core import tt_svd
from tensorkit.tt_io import read_dataset_csv
from tensorkit.tt_io import read_tt
from tensorkit.tt_io import write_dataset_csv
from tensorkit.tt_io import write_tt

from experiment_config import load_config
from experiment_config import worker_count
from experiment_pipeline import identification_flow
from experiment_pipeline import regression_flow
from experiment_pipeline import separation_flow
from experiment_pipeline import solver_flow

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
CONFIG_COMMANDS = ("separate", "identify", "solve", "eig", "complete", "regress")
BYTES_PER_ENTRY = 8


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttkit", description="Tensor train toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in CONFIG_COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, type=Path)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--out", type=Path, default=Path("."))

    tt = sub.add_parser("tt", help="inspect and convert TT1F files")
    tt_sub = tt.add_subparsers(dest="tt_command", required=True)
    info = tt_sub.add_parser("info")
    info.add_argument("path", type=Path)
    rnd = tt_sub.add_parser("round")
    rnd.add_argument("path", type=Path)
    rnd.add_argument("output", type=Path)
    rnd.add_argument("--tol", type=float, default=0.0)
    rnd.add_argument("--max-rank", type=int, default=None)
    contract = tt_sub.add_parser("contract", help="densify a TT1F train into a CSV")
    contract.add_argument("path", type=Path)
    contract.add_argument("output", type=Path)
    convert = tt_sub.add_parser("convert", help="dense CSV to TT1F, or TT1F to dense CSV")
    convert.add_argument("path", type=Path)
    convert.add_argument("output", type=Path)
    convert.add_argument("--tol", type=float, default=0.0)
    convert.add_argument("--max-rank", type=int, default=None)
    return parser


def _join(values) -> str:
    return ",".join(str(int(v)) for v in values)


def tt_info(path: Path) -> list:
    """Lines describing a TT1F file: kind, order, mode sizes, ranks and storage bytes."""
    obj = read_tt(path)
    if isinstance(obj, TTOperator):
        sizes = f"{_join(obj.row_sizes)} x {_join(obj.col_sizes)}"
        kind = "operator"
    else:
        sizes = _join(obj.mode_sizes)
        kind = "train" if isinstance(obj, TTTrain) else f"block (K={obj.block_size})"
    entries = sum(core.size for core in obj.cores)
    return [
        f"kind: {kind}",
        f"order: {obj.order}",
        f"mode sizes: {sizes}",
        f"ranks: {_join(obj.ranks)}",
        f"storage bytes: {entries * BYTES_PER_ENTRY}",
    ]


def _read_train(path: Path) -> TTTrain:
    obj = read_tt(path)
    if not isinstance(obj, TTTrain):
        raise ValueError(f"{path} does not hold a TT train")
    return obj


def _write_dense(path: Path, dense) -> None:
    # One sample row; the sidecar carries the mode sizes.
    write_dataset_csv(path, dense.reshape((1,) + dense.shape))


def run_tt(args) -> int:
    if args.tt_command == "info":
        for line in tt_info(args.path):
            print(line)
    elif args.tt_command == "round":
        x = tt_round(_read_train(args.path), args.tol, args.max_rank)
        write_tt(args.output, x)
        print(f"ranks: {_join(x.ranks)}")
    elif args.tt_command == "contract":
        _write_dense(args.output, contract_full(_read_train(args.path)))
    elif args.path.suffix == ".csv":
        dense, _ = read_dataset_csv(args.path)
        if dense.shape[0] != 1:
            raise ValueError(f"{args.path} holds {dense.shape[0]} rows, expected one dense tensor")
        x = tt_svd(dense[0], args.tol, args.max_rank)
        write_tt(args.output, x)
        print(f"ranks: {_join(x.ranks)}")
    else:
        _write_dense(args.output, contract_full(_read_train(args.path)))
    return EXIT_OK


def run_config_command(args) -> int:
    ok, cfg, err_msg = load_config(args.config, args.command, args.seed)
    if not ok:
        print(err_msg, file=sys.stderr)
        return EXIT_INVALID
    base_dir = args.config.resolve().parent
    runner = ThreadPoolTaskRunner(max_workers=worker_count())
    if args.command == "separate":
        rows = separation_flow.with_options(task_runner=runner)(cfg, args.out)
        for row in rows:
            if row["source"] == "mean":
                print(f"seed {row['seed']}: MSAE {row['sae_db']:.2f} dB")
        return EXIT_OK
    if args.command == "identify":
        rows = identification_flow.with_options(task_runner=runner)(cfg, args.out)
        for row in rows:
            print(f"seed {row['seed']} order {row['order']}: MSAE {row['msae_db']:.2f} dB "
                  f"(cumulant {row['msae_cumulant_db']:.2f} dB)")
        return EXIT_OK
    if args.command == "regress":
        scores = regression_flow(cfg, base_dir, args.out)
        metric = "accuracy" if "accuracy" in scores else "rmse"
        print(f"{scores['method']} {metric}: {scores[metric]:.12g}")
        return EXIT_OK
    converged = solver_flow(cfg, base_dir, args.out)
    return EXIT_OK if converged else EXIT_INVALID


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "tt":
            return run_tt(args)
        return run_config_command(args)
    except Exception as e:
        print(f"ttkit {args.command} failed: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
