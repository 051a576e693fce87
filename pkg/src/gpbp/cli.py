"""Command line front-end.

Subcommands: ``synth`` (planted-instance studies), ``pd`` (population
dynamics sweeps), ``realdata`` (nested cross-validation on a ratings
file), ``verify`` (cross-implementation sanity checks).  Exit codes:
0 success, 2 configuration or usage error, 3 runtime failure.
"""

import argparse
import json
import os
import sys
from contextlib import nullcontext


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gpbp",
        description="Message-passing matrix completion experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "synth": "run a planted synthetic-instance grid",
        "pd": "run a population-dynamics parameter sweep",
        "realdata": "run nested cross-validation on a ratings file",
    }
    for name, help_text in descriptions.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="JSON config file (see README for keys)")
        p.add_argument("--out", default=None,
                       help="output directory (default $GPBP_OUT or ./gpbp_out)")
        p.add_argument("--threads", type=int, default=None,
                       help="BLAS thread cap (default $GPBP_THREADS or library default)")
        p.add_argument("--allow-failures", action="store_true",
                       help="record diverged runs instead of aborting "
                            "(also $GPBP_ALLOW_FAILURES=1)")
    v = sub.add_parser("verify", help="run the verification battery")
    v.add_argument("--threads", type=int, default=None)
    return parser


def _thread_limit(n):
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes")


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get("GPBP_THREADS"):
        threads = int(os.environ["GPBP_THREADS"])

    if args.command == "verify":
        from .experiments import verify_battery
        with _thread_limit(threads):
            results = verify_battery()
        for name, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        n_fail = sum(1 for _, ok, _ in results if not ok)
        print(f"{len(results) - n_fail}/{len(results)} checks passed")
        return 0 if n_fail == 0 else 3

    out_dir = args.out or os.environ.get("GPBP_OUT") or "gpbp_out"
    allow = args.allow_failures or _env_flag("GPBP_ALLOW_FAILURES")
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValueError("config must be a JSON object")
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if config.get("task", args.command) != args.command:
        print(f"config error: config task {config['task']!r} does not match "
              f"subcommand {args.command!r}", file=sys.stderr)
        return 2
    config["task"] = args.command

    from .errors import DivergenceError, SingularityError
    from .experiments import run_experiment
    try:
        with _thread_limit(threads):
            summary = run_experiment(config, out_dir, allow_failures=allow)
    except (ValueError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, SingularityError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    n_failed = len(summary.get("failures", []))
    if n_failed:
        print(f"completed with {n_failed} recorded failure(s)")
    print(f"wrote {os.path.join(out_dir, 'summary.json')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
