"""Command line entry point: ``python -m bayesid <command> [options]``.

Flags mirror :class:`~bayesid.pipeline.RunConfig` fields in kebab-case.  On
failure the process exits with status 1 and writes ``{"error", "message"}``
as JSON to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import pipeline
from .gibbs import COLLAPSED, FIXED
from .metrics import CONVENTIONAL, PAPER


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alphas", action="append", required=True, metavar="CSV",
                        help="alpha matrix (rows = alphas, columns = dates); repeat per asset")
    common.add_argument("--prices", action="append", default=[], metavar="CSV",
                        help="date,close file matching each --alphas, in the same order")
    common.add_argument("--mode", default="gbt", choices=pipeline.SELECT_MODES)
    common.add_argument("--K", "--k", dest="K", type=int, default=10, help="basis size of the decomposition")
    common.add_argument("--iterations", type=int, default=1000)
    common.add_argument("--burn-in", type=int, default=100)
    common.add_argument("--thinning", type=int, default=5)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--M", "--m", dest="M", type=int, default=10, help="number of alphas to select")
    common.add_argument("--h", type=int, default=1, help="holding period in days")
    common.add_argument("--importance-source", default=pipeline.RANKIC,
                        help="'rankic', 'uniform', or a file with one raw score per line")
    common.add_argument("--importance-scale", type=float, default=1.0,
                        help="multiplier applied to raw scores before the sigmoid")
    common.add_argument("--return-convention", default=PAPER, choices=(PAPER, CONVENTIONAL))
    common.add_argument("--swap-move", default=FIXED, choices=(FIXED, COLLAPSED))
    common.add_argument("--swaps-per-sweep", type=int, default=1)
    common.add_argument("--lower", type=float, default=-1.0, help="lower truncation bound of Y entries")
    common.add_argument("--upper", type=float, default=1.0, help="upper truncation bound of Y entries")
    common.add_argument("--d-in", type=int, default=None, help="number of in-sample days")
    common.add_argument("--oversampling", type=int, default=10)
    common.add_argument("--power-iterations", type=int, default=1)
    common.add_argument("--output-dir", default=None,
                        help=f"defaults to ${pipeline.OUTPUT_ENV} or ./runs")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for per-asset runs")

    sub.add_parser("decompose", parents=[common], help="sample the decomposition and write traces")
    sub.add_parser("select", parents=[common], help="pick M alphas and report RankIC and correlation")
    sub.add_parser("backtest", parents=[common], help="run the long-only alpha backtest")
    sub.add_parser("tables", parents=[common], help="write the MSE summary and the selection/backtest summary")
    return parser


def config_from_args(args: argparse.Namespace) -> pipeline.RunConfig:
    fields = {f for f in pipeline.RunConfig.__dataclass_fields__}
    kwargs = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return pipeline.RunConfig(**kwargs)


def print_table2(summary: dict, mode: str):
    names = list(summary)
    print("\t".join(["", *names]))
    for label, key in (("Min", "min"), ("Mean", "mean")):
        print("\t".join([f"{mode.upper()} {label}", *(_fmt(summary[n][key]) for n in names)]))


def _print_rows(header, rows):
    print("\t".join(str(h) for h in header))
    for row in rows:
        print("\t".join([row[0], *(_fmt(v) for v in row[1:])]))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "decompose":
            print_table2(pipeline.decompose(cfg), cfg.mode)
        elif args.command == "select":
            for name, res in pipeline.select(cfg).items():
                print(f"{name}\t{cfg.mode}\t" + " ".join(str(int(i)) for i in res["selected"]))
        elif args.command == "backtest":
            rep = pipeline.backtest(cfg)
            for period in ("is", "os"):
                m = rep[period]
                print(f"{period.upper()}\tsharpe {_fmt(m['sharpe'])}\tannual {_fmt(m['annual_return'])}"
                      f"\tmax_drawdown {_fmt(m['max_drawdown'])}")
        elif args.command == "tables":
            res = pipeline.tables(cfg)
            _print_rows(["", *res["assets"]], res["table2"])
            print()
            _print_rows(["", *pipeline.TABLE3_MODES], res["table3"])
    except Exception as exc:  # reported to the caller as machine-readable JSON
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0
