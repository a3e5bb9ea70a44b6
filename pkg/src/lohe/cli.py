"""Command-line interface: ``lohe simulate | verify | sweep | classify``.

Exit status: 0 on success, 1 when a verification check fails or a sweep run
aborts, 2 for usage and configuration errors, 3 for a numeric abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import load_config
from .errors import NumericError, UsageError
from . import runner, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _with_seed(cfg, seed):
    if seed is None:
        return cfg
    return dataclasses.replace(cfg, initial=dataclasses.replace(cfg.initial, seed=seed))


def cmd_simulate(args) -> int:
    cfg = _with_seed(load_config(args.config), args.seed)
    out = args.out or cfg.outputs.directory
    if not out:
        raise UsageError("give --out or set outputs.directory in the config")
    summary = runner.run_simulate(cfg, out)
    print(f"{summary['verdict']}: final R={summary['final_R']:.12g} "
          f"diameter={summary['final_diameter']:.3e} ({summary['wall_time_s']:.2f}s) -> {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify.run_verify(args.suite, args.tol)
    print(report.table())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = _with_seed(load_config(args.config), args.seed)
    rows = runner.run_sweep(cfg, args.param, args.start, args.stop, args.steps, args.out)
    for value, r, d, verdict in rows:
        print(f"{args.param}={value:.6g}  R={r:.12g}  diameter={d:.3e}  {verdict}")
    aborted = any(v.startswith("Aborted") for *_, v in rows)
    return EXIT_FAIL if aborted else EXIT_OK


def cmd_classify(args) -> int:
    print(json.dumps(runner.classify_directory(args.series), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lohe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", help="output directory (overrides outputs.directory)")
    p.add_argument("--seed", type=int, help="override initial.seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run built-in verification suites")
    p.add_argument("--suite", default="all", help=f"all or one of: {', '.join(verify.SUITES)}")
    p.add_argument("--tol", type=float, help="replace the tolerance of every check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="repeat a run over a grid of one numeric field")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help="dotted field path, e.g. model.kappa or model.kappa.01")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="override initial.seed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("classify", help="classify the final state of a simulate output directory")
    p.add_argument("--series", required=True, help="simulate output directory")
    p.set_defaults(func=cmd_classify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"lohe: numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except UsageError as exc:
        print(f"lohe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
