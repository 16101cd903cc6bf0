#!/usr/bin/env python3
"""
Simulation study runner

Runs one of the preset comparison grids through the Monte-Carlo harness and
writes one per-rep CSV and one summary JSON per grid cell, plus an index.
"""

import argparse
import os
import sys
from pathlib import Path

from mirror_select.data_io import write_json, write_records_csv, write_summary_json
from mirror_select.harness import ExperimentConfig, LinearSettings, Scenario, run_experiment
from mirror_select.mds import Method
from mirror_select.mirror import Contrast
from mirror_select.settings import DEBUG_ENV
from mirror_select.synth import DesignDistribution


def contrast_grid(base: ExperimentConfig):
    """DS with each contrast across design correlations."""
    for rho in (0.0, 0.2, 0.4, 0.6, 0.8):
        for contrast in Contrast:
            linear = base.linear.model_copy(update={"rho": rho})
            yield f"ds_{contrast.value}_rho{rho}", base.model_copy(
                update={"method": Method.DS, "contrast": contrast, "linear": linear}
            )


def splits_grid(base: ExperimentConfig):
    """MDS power as the number of splits grows."""
    linear = base.linear.model_copy(update={"rho": 0.0, "delta": 3.0})
    for m in (10, 50, 100):
        yield f"mds_m{m}", base.model_copy(update={"method": Method.MDS, "m": m, "linear": linear})


def designs_grid(base: ExperimentConfig):
    """DS and MDS on non-Normal designs."""
    for design in DesignDistribution:
        linear = base.linear.model_copy(update={"design": design})
        for method in (Method.DS, Method.MDS):
            yield f"{method.value}_{design.value}", base.model_copy(
                update={"method": method, "linear": linear}
            )


STUDIES = {
    "contrasts": contrast_grid,
    "splits": splits_grid,
    "designs": designs_grid,
}


def main():
    """Main entry point for running a simulation study."""
    parser = argparse.ArgumentParser(
        description="Run a preset simulation study",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_study.py contrasts --out-dir results/      # DS contrasts over rho
  python run_study.py splits --reps 20 --workers 8      # MDS with m = 10, 50, 100
  python run_study.py designs --n 300 --p 200 --p1 20   # non-Normal designs, smaller problem
  python run_study.py contrasts --debug                 # trace internals to stderr
        """,
    )
    parser.add_argument("study", choices=sorted(STUDIES))
    parser.add_argument("--out-dir", default="results", help="Output directory (default: results)")
    parser.add_argument("--reps", type=int, default=20, help="Replications per cell (default: 20)")
    parser.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    parser.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1)")
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--p", type=int, default=500)
    parser.add_argument("--p1", type=int, default=50)
    parser.add_argument("--delta", type=float, default=5.0)
    parser.add_argument("--debug", action="store_true", help="Enable debug tracing")

    args = parser.parse_args()
    if args.debug:
        os.environ[DEBUG_ENV] = "true"

    base = ExperimentConfig(
        scenario=Scenario.LINEAR,
        n_reps=args.reps,
        master_seed=args.seed,
        workers=args.workers,
        linear=LinearSettings(n=args.n, p=args.p, p1=args.p1, delta=args.delta),
    )
    out_dir = Path(args.out_dir) / args.study
    out_dir.mkdir(parents=True, exist_ok=True)

    print(f"🚀 Study: {args.study}")
    print(f"   Output: {out_dir}")
    print(f"   Reps per cell: {args.reps}")
    print(f"   Seed: {args.seed}")
    print(f"   Workers: {args.workers}")
    print()

    index = {}
    try:
        for name, config in STUDIES[args.study](base):
            records, summary = run_experiment(config)
            write_records_csv(out_dir / f"{name}.csv", records)
            write_summary_json(out_dir / f"{name}.json", summary)
            index[name] = summary.model_dump(mode="json")
            print(f"✅ {name}: FDR {summary.fdr:.4f}, power {summary.power:.4f}", flush=True)
    except KeyboardInterrupt:
        print("\n👋 Study interrupted; completed cells are on disk")
        sys.exit(0)

    write_json(out_dir / "index.json", index)
    print(f"\n📄 Index written to {out_dir / 'index.json'}")


if __name__ == "__main__":
    main()
