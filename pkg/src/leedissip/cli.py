"""Command-line front-end.

    leedissip {pole,kernels,sector,master,langevin,verify} --config FILE
              [--out DIR] [--seed N] [--threads N] [--force]

Exit status: 0 success, 1 verification failure or runtime error,
2 configuration error (nothing is written in that case).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import artifacts, commands, verify
from .artifacts import write_csv, write_json
from .config import RunConfig, load_config, validate
from .errors import ConfigurationError, LeeModelError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="leedissip", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["pole", "kernels", "sector", "master", "langevin", "verify"])
    ap.add_argument("--config", required=True, help="INI-style run configuration")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--seed", type=int, help="override [langevin] seed")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")
    ap.add_argument("--force", action="store_true",
                    help="allow replacing existing outputs whose content differs")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def run_verify(cfg: RunConfig, out: Path, *, threads: int = 1, echo=print) -> bool:
    results = verify.run_all(cfg, echo=echo, threads=threads)
    rep = verify.report(results)
    write_json(out / "report.json", rep, cfg)
    write_csv(out / "criteria.csv", ["id", "passed", "skipped"],
              [[r.id, r.passed, r.skipped] for r in results], cfg)
    return rep["all_passed"]


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace("langevin", seed=args.seed)
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        validate(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out if args.out is not None else cfg.output.dir)
    echo = (lambda s: None) if args.quiet else print
    try:
        artifacts.ALLOW_REPLACE = args.force
        if args.command == "verify":
            ok = run_verify(cfg, out, threads=args.threads, echo=echo)
            echo("all criteria passed" if ok else "verification FAILED")
            return EXIT_OK if ok else EXIT_FAIL
        if args.command == "langevin":
            summary = commands.run_langevin(cfg, out, threads=args.threads)
        else:
            summary = getattr(commands, f"run_{args.command}")(cfg, out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LeeModelError as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for key in sorted(summary):
        if not isinstance(summary[key], (dict, list)):
            echo(f"{key} = {summary[key]}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
