"""Command line front end: ``ridnc {run,sweep,cross-point,speedup,figure}``."""

import argparse
from dataclasses import replace
import logging
import sys

from ridnc.combinatorics import ConfigurationError
from ridnc.config_io import load_config, parse_config, write_report
from ridnc.figures import run_figure, write_speedup_csv
from ridnc.harness import ENCODERS, FEEDBACK_MODES, SPEEDUP_COLUMNS, SWEEP_AXES, ScenarioConfig
from ridnc.harness import find_cross_point, measure_speedup, run_scenario, sweep

def _scenario_flags(parser):
    g = parser.add_argument_group("scenario")
    g.add_argument("--config", help="key = value config file; flags override it")
    g.add_argument("--users", type=int)
    g.add_argument("--packets", type=int)
    g.add_argument("--eps-max", type=float)
    g.add_argument("--eps-fixed", type=float, help="use this erasure rate for every user")
    g.add_argument("--coded", type=int, help="coded-packet budget r")
    g.add_argument("--feedback-mode", choices=FEEDBACK_MODES)
    g.add_argument("--feedback", help="user count (by-id, or 'all') or reply probability (by-prob)")
    g.add_argument("--encoder", choices=ENCODERS)
    g.add_argument("--oracle-mode", choices=("expected", "optimistic"))
    g.add_argument("--no-reception", dest="include_reception", action="store_const", const=False,
                   help="optimal RIDNC ignores coded-packet reception probability")
    g.add_argument("--reps", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--timing", action="store_const", const=True,
                   help="record encoder wall time (reports are then not reproducible)")


def _output_flags(parser):
    parser.add_argument("--out", default="-", help="output path ('-' for stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser():
    parser = argparse.ArgumentParser(prog="ridnc", description="RACE / RIDNC packet-recovery simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    _scenario_flags(p)
    _output_flags(p)

    p = sub.add_parser("sweep", help="one scenario per value of an axis")
    _scenario_flags(p)
    _output_flags(p)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")

    p = sub.add_parser("cross-point", help="feedback count where CrowdWiFi catches up with RACE")
    _scenario_flags(p)
    p.add_argument("--max-feedback", type=int, help="default: the user count")

    p = sub.add_parser("speedup", help="CrowdWiFi / RACE encoder runtime ratio")
    _scenario_flags(p)
    p.add_argument("--out", default="-")
    p.add_argument("--values", default="10,20,50,100", help="comma-separated feedback counts")

    p = sub.add_parser("figure", help="regenerate the data behind one figure")
    p.add_argument("number", type=int, choices=range(1, 8))
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    return parser


_FLAG_KEYS = ("users", "packets", "eps_max", "eps_fixed", "coded", "feedback_mode", "feedback",
              "encoder", "oracle_mode", "include_reception", "reps", "seed", "workers", "timing")


def config_from_args(args) -> ScenarioConfig:
    flags = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k, None) is not None}
    if args.config:
        return load_config(args.config, flags).config
    return parse_config(None, flags).config


def _values(text, kind):
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse values list {text!r}") from None


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "figure":
            template = ScenarioConfig(1, 1, 1.0, replications=args.reps, base_seed=args.seed,
                                      workers=args.workers)
            for path in run_figure(args.number, template, args.out):
                print(path)
            return 0

        cfg = config_from_args(args)
        if args.command == "run":
            write_report(run_scenario(cfg), args.format, args.out)
        elif args.command == "sweep":
            kind = int if args.axis in ("n_users", "feedback_count") else float
            values = _values(args.values, kind)
            write_report(sweep(replace(cfg, scenario="sweep"), args.axis, values), args.format, args.out)
        elif args.command == "cross-point":
            limit = args.max_feedback if args.max_feedback is not None else cfg.n_users
            print(find_cross_point(cfg, limit))
        elif args.command == "speedup":
            rows = measure_speedup(cfg, _values(args.values, int))
            table = [[cfg.m_packets] + [getattr(r, c) for c in SPEEDUP_COLUMNS] for r in rows]
            write_speedup_csv(table, sys.stdout if args.out == "-" else args.out)
    except (ConfigurationError, OSError) as exc:
        print(f"ridnc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
