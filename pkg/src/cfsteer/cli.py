"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, NumericalError
from .synthesis import RunConfig, SynthesisReport, run_baseline, synthesize, validate

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _parse_override(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"--set expects FIELD=JSON, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError as e:
        raise ConfigError(f"--set {key}: value is not valid JSON ({e})") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="oned", help="built-in name (oned, vehicle, pendulum) or JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--particles", type=int, default=10**6, help="Monte Carlo particle count")
    common.add_argument("--starts", type=int, default=8, help="optimizer starts per step")
    common.add_argument("--threads", type=int, default=1, help="worker cap (results do not depend on it)")
    common.add_argument("--out", default=None, help="output directory for report files")
    common.add_argument("--set", action="append", default=[], metavar="FIELD=JSON",
                        help="override a scenario field, e.g. --set 'weights={\"w1\":1,\"w2\":0}'")
    common.add_argument("--dump-particles", action="store_true", help="also write the first 10^4 particles per step")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cfsteer", description="Characteristic-function covariance steering.")
    p.add_argument("--version", action="version", version=f"cfsteer {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("synthesize", parents=[common], help="optimize per-step gains and validate by Monte Carlo")
    b = sub.add_parser("baseline", parents=[common], help="run the plain or LQR baseline")
    b.add_argument("--method", choices=("plain", "lqr"), required=True)
    sub.add_parser("validate", parents=[common], help="one-step oracle checks at the synthesized gains")
    r = sub.add_parser("report", parents=[common], help="emit a report as JSON or CSV")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--input", default=None, help="existing report JSON (otherwise synthesize first)")
    return p


def _config(args) -> RunConfig:
    overrides = dict(_parse_override(s) for s in args.set)
    return RunConfig(scenario=args.scenario, seed=args.seed, particles=args.particles, starts=args.starts,
                     overrides=overrides, threads=args.threads, out=args.out)


def _emit(report: SynthesisReport, ens, out):
    if out:
        for f in report.write(out, ens):
            print(f"wrote {f}")
    else:
        sys.stdout.write(report.to_json())


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "synthesize":
            report, ens = synthesize(cfg, keep_particles=args.dump_particles)
            _emit(report, ens, cfg.out)
            if not report.complete:
                print(f"error: incomplete report: {report.error}", file=sys.stderr)
                return EXIT_NUMERICAL
        elif args.command == "baseline":
            report, ens = run_baseline(cfg, args.method, keep_particles=args.dump_particles)
            _emit(report, ens, cfg.out)
        elif args.command == "validate":
            summary = validate(cfg)
            for w in summary.warnings:
                print(f"warning: {w}", file=sys.stderr)
            for s in summary.steps:
                print(f"step {s['step']}: {'pass' if s['passed'] else 'FAIL'} (max |z| = {s['max_abs_z']:.2f})")
            for inv in summary.invariants:
                print(f"{inv['name']}: {'pass' if inv['passed'] else 'FAIL'}")
            if cfg.out:
                Path(cfg.out).mkdir(parents=True, exist_ok=True)
                (Path(cfg.out) / "validation.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
            print("validation passed" if summary.passed else "validation FAILED")
            return EXIT_OK if summary.passed else EXIT_VALIDATION
        elif args.command == "report":
            if args.input:
                try:
                    report = SynthesisReport.from_dict(json.loads(Path(args.input).read_text()))
                except (OSError, json.JSONDecodeError, TypeError) as e:
                    raise ConfigError(f"--input {args.input}: cannot read report ({e})") from None
            else:
                report, _ = synthesize(cfg)
            text = report.to_json() if args.format == "json" else report.to_csv()
            if cfg.out:
                Path(cfg.out).mkdir(parents=True, exist_ok=True)
                path = Path(cfg.out) / f"{report.scenario}_{report.method}.{args.format}"
                path.write_text(text)
                print(f"wrote {path}")
            else:
                sys.stdout.write(text)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
