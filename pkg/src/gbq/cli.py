"""Command line entry point: ``gbq <experiment> --config <path> [--key value ...] --out <dir>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .dynamics import BlowUpError


def _parse(argv):
    ap = argparse.ArgumentParser(prog="gbq", description=__doc__)
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", default=None, help="INI config or a previous run.json")
    ap.add_argument("--out", default=None, help="output root (a versioned subdirectory is created)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args, rest = ap.parse_known_args(argv)
    overrides: dict[str, str] = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ConfigError("bad_argument", f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(rest):
                raise ConfigError("bad_argument", f"missing value for {tok}")
            val = rest[i + 1]
            i += 2
        overrides[key] = val
    if args.out is not None:
        overrides["out"] = args.out
    return args, overrides


def main(argv=None) -> int:
    try:
        args, overrides = _parse(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = load_config(args.config, overrides, experiment=args.experiment)
    except ConfigError as exc:
        print(json.dumps({"status": "invalid", "reason": exc.reason, "message": str(exc)}),
              file=sys.stderr)
        return 2
    from .experiments import run

    try:
        rec = run(cfg)
    except BlowUpError as exc:
        print(json.dumps({"status": "blowup", "reason": "non_finite_state", "message": str(exc)}),
              file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(json.dumps({"status": "error", "reason": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    for c in rec.criteria:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} {c.comparison} {c.threshold:.6g}")
    print(f"{rec.status} {cfg.experiment} -> {rec.outdir}")
    return 0 if rec.passed else 1


if __name__ == "__main__":
    sys.exit(main())
