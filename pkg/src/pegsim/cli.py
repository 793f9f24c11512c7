"""Command line entry points.

Exit codes: 0 success, 1 validation error, 2 verification failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from .auction import AuctionConfig, read_bids_csv, result_csv, run_auction
from .config import load_config
from .errors import BrokenChain, InvalidTransaction, LedgerFormatError, PegSimError
from .fixedpoint import parse_fiat, parse_rate, parse_tokens
from .ledger import Ledger, read_chain
from .report import read_metrics, summarize, summary_text, write_plots
from .simulator import run_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VERIFICATION = 2


def _cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
        result = run_scenario(config)
    except PegSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    os.makedirs(args.out, exist_ok=True)
    metrics_path = os.path.join(args.out, "metrics.csv")
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.metrics_csv())
    result.ledger.write_chain(os.path.join(args.out, "ledger.log"))
    with open(os.path.join(args.out, "payouts.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.payout_report_csv())
    summary = summarize(read_metrics(metrics_path))
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_text(summary))
    print(f"wrote metrics.csv, ledger.log, payouts.csv, summary.txt to {args.out}")
    return EXIT_OK


def _cmd_auction(args) -> int:
    try:
        bids = read_bids_csv(args.bids)
        config = AuctionConfig(
            lots=args.lots,
            lot_units=parse_tokens(args.lot_size),
            base_price_cents=parse_fiat(args.base_price),
            gamma_e8=parse_rate(args.gamma),
        )
        result = run_auction(bids, config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    sys.stdout.write(result_csv(result))
    return EXIT_OK


def _cmd_replay(args) -> int:
    try:
        chain = read_chain(args.ledger)
    except (LedgerFormatError, OSError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    try:
        replayed = Ledger.replay(chain)
    except BrokenChain as exc:
        print(f"verification failed: broken at height {exc.height}", file=sys.stderr)
        return EXIT_VERIFICATION
    except InvalidTransaction as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    print(f"OK {replayed.state_hash()}")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        rows = read_metrics(args.metrics)
    except (PegSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    summary = summarize(rows)
    sys.stdout.write(summary_text(summary))
    if args.plot:
        for path in write_plots(rows, args.plot):
            print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pegsim", description="CPI-pegged token economy simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write reports")
    p.add_argument("--config", required=True, help="scenario config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("auction", help="run one standalone auction from a bids CSV")
    p.add_argument("--bids", required=True, help="bids CSV (account,deposit,price_cap,timestamp)")
    p.add_argument("--lots", required=True, type=int, help="lots offered")
    p.add_argument("--lot-size", default="1", help="tokens per lot")
    p.add_argument("--base-price", required=True, help="AR$ price of a bidder's first lot")
    p.add_argument("--gamma", default="0.05", help="price ladder slope")
    p.set_defaults(func=_cmd_auction)

    p = sub.add_parser("replay", help="verify and replay an exported ledger")
    p.add_argument("--ledger", required=True, help="ledger.log file")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("report", help="summarize a metrics CSV")
    p.add_argument("--metrics", required=True, help="metrics.csv file")
    p.add_argument("--plot", help="directory for chart images")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
