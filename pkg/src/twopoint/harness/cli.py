"""``twopoint`` command line interface.

Exit status: 0 when all enabled checks pass, 1 on violations, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional, Sequence

from twopoint.errors import ConfigError, TwopointError
from twopoint.harness.config import RunConfig, load_config, parse_config, validate, with_seed
from twopoint.harness.functions import list_functions
from twopoint.harness.runner import AnalysisError, ReportWriter, run, write_example_report
from twopoint.interval_example import example_report


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="seed for random point clouds")
    common.add_argument("--dump-triple", action="store_true",
                        help="write one tab-separated line per module")
    common.add_argument("--format", choices=("csv", "tsv"), help="report file format")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration value (repeatable)")

    p = argparse.ArgumentParser(prog="twopoint",
                                description="Spectral triples from two-point modules.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="build the configured triple")
    sub.add_parser("metric", parents=[common], help="induced metric report")
    sub.add_parser("spectrum", parents=[common], help="spectrum of D")
    sw = sub.add_parser("sweep", parents=[common], help="N(L)/L sweep")
    sw.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    z = sub.add_parser("zeta", parents=[common], help="zeta traces and tail ratios")
    z.add_argument("--s", type=float, nargs="+", metavar="S")
    d = sub.add_parser("dixmier", parents=[common], help="Dixmier-trace estimates")
    d.add_argument("--functions", nargs="+", metavar="NAME")
    d.add_argument("--lambda", dest="lam", type=float)
    d.add_argument("--list", action="store_true", help="list test functions and exit")
    ie = sub.add_parser("interval-example", parents=[common],
                        help="checks (a)-(e) of the dyadic interval example")
    ie.add_argument("--n-max", type=int)
    sub.add_parser("report", parents=[common], help="run every analysis enabled in the config")
    return p


def _config(args) -> RunConfig:
    overrides = list(args.set)
    if getattr(args, "window", None):
        overrides.append(f"analyses.sweep={args.window[0]!r}, {args.window[1]!r}")
    if getattr(args, "s", None):
        overrides.append("analyses.zeta=" + ", ".join(repr(x) for x in args.s))
    if getattr(args, "functions", None):
        overrides.append("analyses.dixmier=" + ", ".join(args.functions))
    if getattr(args, "lam", None) is not None:
        overrides.append(f"analyses.dixmier_lambda={args.lam!r}")
    if getattr(args, "n_max", None) is not None:
        overrides.append(f"analyses.interval_n_max={args.n_max}")
    if args.format:
        overrides.append(f"output.format={args.format}")
    if args.out:
        overrides.append(f"output.dir={args.out}")
    cfg = load_config(args.config, overrides) if args.config else parse_config("", overrides)
    return with_seed(cfg, args.seed)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "dixmier" and args.list:
        for name, definition in list_functions():
            print(f"{name}\t{definition}")
        return 0
    try:
        cfg = _config(args)
        if args.command == "sweep" and not cfg.analyses.sweep:
            raise ConfigError("analyses.sweep", "a window is required (--window LO HI)")
        if args.command == "zeta" and not cfg.analyses.zeta:
            raise ConfigError("analyses.zeta", "at least one s value is required (--s ...)")
        if args.command == "dixmier" and not cfg.analyses.dixmier:
            cfg = validate(replace(cfg, analyses=replace(cfg.analyses, dixmier=("const1",))))
    except ConfigError as exc:
        print(f"twopoint: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "interval-example":
            rep = example_report(cfg.analyses.interval_n_max)
            files = write_example_report(rep, ReportWriter(cfg.output.dir, cfg), prefix="")
            for key, ok in rep.summary_rows():
                print(f"item {key}: {'PASS' if ok else 'FAIL'}")
            print(f"wrote {len(files)} files to {cfg.output.dir}")
            return 0 if rep.passed else 1
        if args.command == "build":
            names: list[str] = []
        elif args.command == "report":
            names = None
        else:
            names = [args.command]
        result = run(cfg, analyses=names, dump_triple=args.dump_triple)
    except AnalysisError as exc:
        print(f"twopoint: {exc}", file=sys.stderr)
        return 2 if exc.analysis == "build" else 1
    except TwopointError as exc:
        print(f"twopoint: {exc}", file=sys.stderr)
        return 2
    for name, ok in result.checks.items():
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
    print(f"wrote {len(result.files)} files to {cfg.output.dir}")
    return result.status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
