"""Command line interface.

Subcommands:

* ``run``        execute a campaign config, write data + summary CSVs
* ``summarize``  aggregate an existing data CSV
* ``report``     render figures (and a summary CSV) from a data CSV
"""

from __future__ import annotations

import argparse
import sys

from .harness import load_config, run_campaign, summarize
from .report import render_report


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rotcma",
        description="Constant-modulus blind source separation simulation campaigns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a campaign from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the JSON config file")
    p_run.add_argument("--out", required=True, help="output CSV path for trial rows")
    p_run.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p_run.add_argument("--trials", type=int, default=None, help="override the trial count")
    p_run.add_argument("--seed", type=int, default=None, help="override the base seed")

    p_sum = sub.add_parser("summarize", help="aggregate a data CSV")
    p_sum.add_argument("--in", dest="in_path", required=True, help="input data CSV")
    p_sum.add_argument("--out", required=True, help="output summary CSV")

    p_rep = sub.add_parser("report", help="render figures from a data CSV")
    p_rep.add_argument("--in", dest="in_path", required=True, help="input data CSV")
    p_rep.add_argument("--out-dir", required=True, help="directory for figures + summary")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config, trials=args.trials, seed=args.seed)
            data_path, summary_path = run_campaign(config, args.out, jobs=args.jobs)
            print(f"wrote {data_path}")
            print(f"wrote {summary_path}")
        elif args.command == "summarize":
            summarize(args.in_path, args.out)
            print(f"wrote {args.out}")
        elif args.command == "report":
            for path in render_report(args.in_path, args.out_dir):
                print(f"wrote {path}")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
