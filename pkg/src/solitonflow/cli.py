"""Command-line entry point.

Subcommands: run (scenarios to artifacts), check-identities (background
identity residuals), variation-test (first-variation against the
finite-difference oracle), version.  Exit codes: 0 pass, 1 audit
failure, 2 configuration error, 3 numeric domain error.
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .errors import (AuditFailure, ConfigurationError, DomainError,
                     SolitonFlowError)
from .scenarios import check_identities, run_scenario, variation_test

EXIT_OK = 0
EXIT_AUDIT = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3


def bundled_config_dir():
    return Path(__file__).parent / "configs"


def _resolve_config(name):
    """A config argument is a path, or the name of a bundled scenario."""
    path = Path(name)
    if path.is_file():
        return path
    bundled = bundled_config_dir() / (name if name.endswith(".cfg") else name + ".cfg")
    if bundled.is_file():
        return bundled
    raise ConfigurationError(f"config not found: {name}")


def _run_one(args):
    config_path, out_dir, strict = args
    artifacts = run_scenario(config_path, out_dir, strict=strict)
    return str(config_path), artifacts.passed, artifacts.termination


def _cmd_run(args):
    configs = [_resolve_config(c) for c in args.config]
    jobs = []
    for cfg_path in configs:
        sub = Path(args.out)
        if len(configs) > 1:
            sub = sub / cfg_path.stem
        jobs.append((cfg_path, sub, args.strict))

    results = []
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]

    all_pass = True
    for name, passed, termination in results:
        all_pass &= passed
        print(f"{name}: {'pass' if passed else 'AUDIT FAILURE'} "
              f"({termination['reason']})")
    return EXIT_OK if (all_pass or not args.strict) else EXIT_AUDIT


def _cmd_check_identities(args):
    report = check_identities(args.soliton, samples=args.samples, seed=args.seed)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["pass"] else EXIT_AUDIT


def _cmd_variation_test(args):
    report = variation_test(_resolve_config(args.config),
                            directions=args.directions)
    printable = dict(report)
    printable["directions"] = printable["directions"][:5] + (
        [{"note": f"... {len(report['directions']) - 5} more"}]
        if len(report["directions"]) > 5 else [])
    print(json.dumps(printable, indent=2, sort_keys=True))
    return EXIT_OK if report["pass"] else EXIT_AUDIT


def build_parser():
    parser = argparse.ArgumentParser(
        prog="solitonflow",
        description="Curve flows in gradient shrinking soliton backgrounds")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute scenarios and write artifacts")
    p_run.add_argument("--config", action="append", required=True,
                       help="config path or bundled scenario name (repeatable)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--strict", action="store_true",
                       help="exit nonzero on audit failure")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="worker processes for batches")
    p_run.set_defaults(func=_cmd_run)

    p_chk = sub.add_parser("check-identities",
                           help="residuals of the defining identities")
    p_chk.add_argument("--soliton", required=True,
                       choices=("gaussian", "sphere", "cylinder"))
    p_chk.add_argument("--samples", type=int, default=1000)
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.set_defaults(func=_cmd_check_identities)

    p_var = sub.add_parser("variation-test",
                           help="first variation against the FD oracle")
    p_var.add_argument("--config", required=True)
    p_var.add_argument("--directions", type=int, default=20)
    p_var.set_defaults(func=_cmd_variation_test)

    p_ver = sub.add_parser("version", help="print the package version")
    p_ver.set_defaults(func=lambda args: print(__version__) or EXIT_OK)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except AuditFailure as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"numeric domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SolitonFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return code if code is not None else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
