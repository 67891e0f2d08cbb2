"""Shared driver for the experiment scripts: run each method once, write the reports."""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from cfsteer.synthesis import RunConfig, run_baseline, synthesize


def parser(description: str, particles: int) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--particles", type=int, default=particles)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("results"))
    return p


def run_methods(scenario: str, methods, args) -> dict:
    reports = {}
    for m in methods:
        cfg = RunConfig(scenario=scenario, seed=args.seed, particles=args.particles, threads=args.threads)
        t0 = time.perf_counter()
        rep, ens = synthesize(cfg, keep_particles=True) if m == "synthesized" else run_baseline(cfg, m, True)
        files = rep.write(args.out, ens)
        print(f"{scenario}/{m}: {time.perf_counter() - t0:.1f}s -> {', '.join(str(f) for f in files)}")
        reports[m] = rep
    return reports
