#!/usr/bin/env python3
"""
mirror-select command line

Selection on user CSV data (ds, mds, ggm), synthetic data generation
(simulate), Monte-Carlo benchmarks (bench) and the ranking swap experiment
(swap). Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from mirror_select.data_io import (
    load_config,
    read_matrix_csv,
    read_vector_csv,
    write_json,
    write_matrix_csv,
    write_records_csv,
    write_summary_json,
)
from mirror_select.errors import MirrorSelectError
from mirror_select.ggm import ggm_select
from mirror_select.harness import (
    ExperimentConfig,
    Scenario,
    SwapSettings,
    run_experiment,
    swap_probability,
)
from mirror_select.linalg import Dataset, standardize
from mirror_select.mds import Method, mds_select
from mirror_select.mirror import Contrast, ds_select
from mirror_select.rng import derive_rng, make_rng
from mirror_select.settings import (
    DEBUG_ENV,
    DEFAULT_CV_FOLDS,
    DEFAULT_GGM_Q,
    DEFAULT_GRID_SIZE,
    DEFAULT_M,
    DEFAULT_Q,
    resolve_workers,
)
from mirror_select.synth import (
    sample_design,
    sample_gaussian_graph_data,
    sample_linear_truth,
    sample_normal_means,
    sample_response,
)

EXIT_CONFIG = 2
SPLIT_METHODS = [Method.DS.value, Method.MDS.value]


def _selection_payload(result, method: str, q: float) -> dict:
    payload = {
        "method": method,
        "q": q,
        "selected": [int(j) for j in result.selected],
        "n_selected": int(result.n_selected),
        "cutoff": result.tau,
        "fdp_hat": result.fdp_hat_at_tau,
    }
    rates = result.diagnostics.get("inclusion_rates")
    if rates is not None:
        payload["inclusion_rates"] = [float(r) for r in rates.rates]
        payload["failed_replications"] = rates.failures
    if result.diagnostics.get("empty_screen"):
        payload["empty_screen"] = True
    return payload


def _emit(payload: dict, out: str | None) -> None:
    text = write_json(out, payload)
    if out is None:
        print(text, flush=True)
    else:
        print(f"✅ Wrote {out}", flush=True)


def cmd_select(args) -> int:
    x = read_matrix_csv(args.x)
    y = read_vector_csv(args.y)
    data = Dataset.from_arrays(x, y)
    rng = make_rng(args.seed)
    contrast = Contrast(args.stat)
    print(
        f"🚀 {args.command.upper()} on {data.n} rows x {data.p} features, q={args.q}",
        flush=True,
    )
    if args.command == "mds":
        result = mds_select(
            data, args.q, contrast, args.m, rng,
            cv_folds=args.cv_folds, lambda_grid_size=args.grid_size,
            n_jobs=resolve_workers(args.workers),
        )
    else:
        result = ds_select(
            data, args.q, contrast, rng, args.cv_folds, lambda_grid_size=args.grid_size
        )
    _emit(_selection_payload(result, args.command, args.q), args.out)
    return 0


def cmd_ggm(args) -> int:
    x, _, _ = standardize(read_matrix_csv(args.x))
    rng = make_rng(args.seed)
    rows, nodes = x.shape
    print(f"🚀 GGM ({args.method}) on {rows} rows x {nodes} nodes, q={args.q}", flush=True)
    estimate = ggm_select(
        x, args.q, Method(args.method), args.m, rng,
        contrast=Contrast(args.stat), cv_folds=args.cv_folds,
        lambda_grid_size=args.grid_size, n_jobs=resolve_workers(args.workers),
    )
    if estimate.failures:
        print(f"⚠️  {len(estimate.failures)} nodewise regressions failed", flush=True)
    payload = {
        "method": args.method,
        "q": args.q,
        "edges": sorted([list(e) for e in estimate.edges]),
        "neighborhoods": [[int(k) for k in hood] for hood in estimate.neighborhoods],
        "failed_nodes": {str(j): error for j, error in estimate.failures.items()},
    }
    _emit(payload, args.out)
    return 0


def _config_from_args(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else ExperimentConfig()
    data = base.model_dump()
    overrides = {
        "scenario": args.scenario,
        "method": args.method,
        "q": args.q,
        "m": args.m,
        "contrast": args.stat,
        "n_reps": args.reps,
        "master_seed": args.seed,
        "workers": args.workers,
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    return ExperimentConfig.model_validate(data)


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = derive_rng(config.master_seed, "rep", 0)
    truth: dict
    if config.scenario is Scenario.LINEAR:
        settings = config.linear
        x = sample_design(settings.design_spec(), rng)
        linear = sample_linear_truth(
            settings.p, settings.p1, settings.delta, settings.n, rng,
            delta_as_variance=settings.delta_as_variance,
        )
        write_matrix_csv(out_dir / "Y.csv", sample_response(x, linear, rng), prefix="y")
        truth = {"s1": linear.s1.tolist(), "beta_star": linear.beta_star.tolist()}
    elif config.scenario is Scenario.GGM:
        x, edges = sample_gaussian_graph_data(config.ggm.graph, config.ggm.n, rng)
        truth = {"edges": sorted([list(e) for e in edges])}
    else:
        settings = config.normal_means
        x, s1, mu = sample_normal_means(settings.n, settings.p, settings.p1, settings.mu_sd, rng)
        truth = {"s1": s1.tolist(), "mu": mu.tolist()}
    write_matrix_csv(out_dir / "X.csv", x)
    write_json(out_dir / "truth.json", truth)
    print(f"✅ Simulated {config.scenario.value} data into {out_dir}", flush=True)
    return 0


def cmd_bench(args) -> int:
    config = _config_from_args(args)
    print(f"🚀 Benchmark {config.scenario.value}/{config.method.value}", flush=True)
    print(f"   Reps: {config.n_reps}", flush=True)
    print(f"   q: {config.q}", flush=True)
    print(f"   Seed: {config.master_seed}", flush=True)
    print(f"   Workers: {resolve_workers(config.workers)}", flush=True)
    records, summary = run_experiment(config)
    write_records_csv(args.out, records)
    if args.summary:
        write_summary_json(args.summary, summary)
    if summary.n_failed:
        print(f"⚠️  {summary.n_failed} replications failed and were excluded", flush=True)
    print(
        f"✅ FDR {summary.fdr:.4f} (sd {summary.fdp_sd:.4f}), power {summary.power:.4f}",
        flush=True,
    )
    return 0


def cmd_swap(args) -> int:
    settings = SwapSettings(
        n=args.n, p=args.p, n_reps=args.reps, method=Method(args.method),
        m_multiplier=args.m_multiplier, q=args.q, master_seed=args.seed, workers=args.workers,
    )
    report = swap_probability(settings)
    _emit(report.model_dump(mode="json"), args.out)
    return 0


def _add_selection_args(parser, with_m: bool) -> None:
    parser.add_argument("--x", required=True, help="CSV design matrix, one observation per row")
    parser.add_argument("--y", required=True, help="CSV response, one value per row")
    parser.add_argument(
        "--q", type=float, default=DEFAULT_Q, help=f"FDR level (default: {DEFAULT_Q})"
    )
    parser.add_argument("--stat", choices=[c.value for c in Contrast], default=Contrast.SUM.value,
                        help="contrast function of the mirror statistic (default: sum)")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    parser.add_argument("--cv-folds", type=int, default=DEFAULT_CV_FOLDS)
    parser.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    parser.add_argument("--out", help="JSON output file (default: stdout)")
    if with_m:
        parser.add_argument(
            "--m", type=int, default=DEFAULT_M, help=f"DS replications (default: {DEFAULT_M})"
        )
        parser.add_argument("--workers", type=int, default=1)


def _add_experiment_args(parser) -> None:
    parser.add_argument("--config", help="JSON experiment config (spec_version 1)")
    parser.add_argument("--scenario", choices=[s.value for s in Scenario])
    parser.add_argument("--method", choices=[m.value for m in Method])
    parser.add_argument("--q", type=float)
    parser.add_argument("--m", type=int)
    parser.add_argument("--stat", choices=[c.value for c in Contrast])
    parser.add_argument("--reps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirror-select",
        description="FDR-controlled feature selection via data splitting",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  mirror-select ds --x X.csv --y Y.csv --q 0.1               # single data split
  mirror-select mds --x X.csv --y Y.csv --m 50 --workers 4   # multiple data splits
  mirror-select ggm --x X.csv --q 0.2 --method mds           # graph edges, OR rule
  mirror-select simulate --scenario linear --out-dir data/   # synthetic data
  mirror-select bench --config cfg.json --out reps.csv --summary summary.json
  mirror-select swap --n 5000 --method mds --reps 50         # ranking swap experiment
        """,
    )
    parser.add_argument("--debug", action="store_true", help="trace internals to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("ds", "mds"):
        cmd = sub.add_parser(name, help=f"{name.upper()} selection on CSV data")
        _add_selection_args(cmd, with_m=name == "mds")
        cmd.set_defaults(handler=cmd_select)

    ggm = sub.add_parser("ggm", help="Gaussian graphical model edge selection")
    ggm.add_argument("--x", required=True)
    ggm.add_argument("--q", type=float, default=DEFAULT_GGM_Q)
    ggm.add_argument("--method", choices=SPLIT_METHODS, default=Method.DS.value)
    ggm.add_argument("--m", type=int, default=DEFAULT_M)
    ggm.add_argument("--stat", choices=[c.value for c in Contrast], default=Contrast.SUM.value)
    ggm.add_argument("--seed", type=int, default=0)
    ggm.add_argument("--cv-folds", type=int, default=DEFAULT_CV_FOLDS)
    ggm.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    ggm.add_argument("--workers", type=int, default=1)
    ggm.add_argument("--out")
    ggm.set_defaults(handler=cmd_ggm)

    simulate = sub.add_parser("simulate", help="write synthetic X.csv / Y.csv / truth.json")
    _add_experiment_args(simulate)
    simulate.add_argument("--out-dir", required=True)
    simulate.set_defaults(handler=cmd_simulate)

    bench = sub.add_parser("bench", help="run a Monte-Carlo experiment")
    _add_experiment_args(bench)
    bench.add_argument("--out", required=True, help="per-rep CSV")
    bench.add_argument("--summary", help="summary JSON")
    bench.set_defaults(handler=cmd_bench)

    swap = sub.add_parser("swap", help="estimate the ranking swap probability")
    swap.add_argument("--n", type=int, default=200)
    swap.add_argument("--p", type=int, default=800)
    swap.add_argument("--reps", type=int, default=500)
    swap.add_argument("--method", choices=SPLIT_METHODS, default=Method.DS.value)
    swap.add_argument("--m-multiplier", type=int, default=10)
    swap.add_argument("--q", type=float, default=DEFAULT_Q)
    swap.add_argument("--seed", type=int, default=0)
    swap.add_argument("--workers", type=int, default=1)
    swap.add_argument("--out")
    swap.set_defaults(handler=cmd_swap)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the mirror-select command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.debug:
        os.environ[DEBUG_ENV] = "true"
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"❌ Invalid configuration:\n{exc}", file=sys.stderr, flush=True)
        return EXIT_CONFIG
    except MirrorSelectError as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr, flush=True)
        return exc.exit_code
    except ValueError as exc:
        print(f"❌ {exc}", file=sys.stderr, flush=True)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
