"""Command-line experiment runner.

Subcommands:

* ``decadmm run``      -- execute a preset or config file, write CSVs + SVGs
* ``decadmm compare``  -- overlay the curves of several finished runs
* ``decadmm selftest`` -- quick built-in invariant battery

The default output root comes from ``DECADMM_OUT`` (falling back to
``./runs``). Every run directory receives the fully resolved config, a
``meta.json`` with the build identifier and the effective connectivity
ratio, per-seed CSVs, seed-aggregated CSVs and the figure SVGs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, PRESETS, load_config
from .experiments import build_problem, evaluate_resource_policy, run_single
from .metrics import aggregate_records, moving_average, records_from_csv, records_to_csv
from .seeding import rng_stream
from .svgplot import LinePlot

TRACE_INTERVALS = 300


def build_identifier() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).parent,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"decadmm-{__version__}"


def _out_root() -> Path:
    return Path(os.environ.get("DECADMM_OUT", "runs"))


def run_experiment(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Execute every (algorithm, seed) pair and write all artifacts."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "resolved_config.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)

    all_records: dict[str, list] = {}
    effective_omega = None
    final_states: dict[tuple[str, int], dict] = {}
    for algorithm in cfg.algorithms:
        alg_dir = out_dir / algorithm
        alg_dir.mkdir(exist_ok=True)
        per_seed = []
        for seed in cfg.seeds:
            setup = build_problem(cfg, seed)
            effective_omega = setup.network.connectivity_ratio
            records, final = run_single(cfg, algorithm, seed, setup)
            final_states[(algorithm, seed)] = {**final, "setup": setup}
            per_seed.append(records)
            records_to_csv(records, alg_dir / f"seed{seed}.csv")
        all_records[algorithm] = per_seed
        _write_aggregate(aggregate_records(per_seed), alg_dir / "aggregate.csv")

    if cfg.kind == "resource" and "asi-admm" in cfg.algorithms:
        _write_policy_traces(cfg, final_states, out_dir)

    _write_plots(cfg, all_records, out_dir)
    meta = {
        "build": build_identifier(),
        "effective_omega": effective_omega,
        "preset": cfg.preset,
        "kind": cfg.kind,
    }
    with open(out_dir / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return all_records


def _write_aggregate(rows: list[dict], path: Path) -> None:
    header: list[str] = ["k"]
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            out = []
            for h in header:
                value = row.get(h)
                if value is None:
                    out.append("")
                elif h == "k":
                    out.append(row["k"])
                else:
                    out.append(repr(value))
            writer.writerow(out)


def _write_policy_traces(cfg, final_states, out_dir: Path) -> None:
    """Post-training rollout of the consensus policy vs. a random policy."""
    rows_out = []
    for seed in cfg.seeds:
        final = final_states[("asi-admm", seed)]
        env = final["setup"].rl_eval_env
        theta = final["z"]
        learned_rng = rng_stream(seed, "eval", 0)
        random_rng = rng_stream(seed, "eval", 1)
        _, learned = evaluate_resource_policy(env, theta, TRACE_INTERVALS, learned_rng)
        _, random_rows = evaluate_resource_policy(env, None, TRACE_INTERVALS, random_rng)
        for (t, s, a, r, w), (_, _, ra, rr, _) in zip(learned, random_rows):
            rows_out.append((seed, t, s, a, r, w, ra, rr))
    with open(out_dir / "policy_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "seed",
                "step",
                "state",
                "action",
                "reward",
                "demand",
                "random_action",
                "random_reward",
            ]
        )
        writer.writerows(rows_out)


def _series(per_seed, attr: str):
    """Aligned (xs, median, lo, hi) across seeds for one record attribute."""
    rows = aggregate_records(per_seed)
    xs, med, lo, hi = [], [], [], []
    for row in rows:
        key = f"{attr}_median"
        if key not in row:
            continue
        xs.append(row["k"])
        med.append(row[key])
        lo.append(row[f"{attr}_min"])
        hi.append(row[f"{attr}_max"])
    return xs, med, lo, hi


def _comm_axis(per_seed):
    rows = aggregate_records(per_seed)
    return [row.get("comm_scalars_median", row["k"]) for row in rows]


def _write_plots(cfg, all_records, out_dir: Path) -> None:
    if cfg.kind in ("ridge", "logistic"):
        for xaxis, fname, xlabel in (
            ("comm", "accuracy_vs_comm.svg", "transmitted scalars"),
            ("iter", "accuracy_vs_iter.svg", "iteration"),
        ):
            plot = LinePlot(
                title=f"{cfg.kind} accuracy",
                xlabel=xlabel,
                ylabel="accuracy",
                logy=True,
            )
            for algorithm, per_seed in all_records.items():
                xs, med, lo, hi = _series(per_seed, "accuracy")
                if not xs:
                    continue
                if xaxis == "comm":
                    xs = _comm_axis(per_seed)[: len(med)]
                plot.add_series(algorithm, xs, med, lo, hi)
            plot.save(out_dir / fname)
        return

    for xaxis, fname, xlabel in (
        ("iter", "reward_vs_iter.svg", "iteration"),
        ("comm", "reward_vs_comm.svg", "transmitted scalars"),
    ):
        plot = LinePlot(
            title=f"{cfg.kind} globally averaged reward",
            xlabel=xlabel,
            ylabel="avg reward",
        )
        for algorithm, per_seed in all_records.items():
            xs, med, lo, hi = _series(per_seed, "avg_reward")
            if not xs:
                continue
            window = max(1, cfg.reward_window)
            med = moving_average(med, window)
            lo = moving_average(lo, window)
            hi = moving_average(hi, window)
            if xaxis == "comm":
                xs = _comm_axis(per_seed)[: len(med)]
            plot.add_series(algorithm, xs, med, lo, hi)
        plot.save(out_dir / fname)

    plot = LinePlot(
        title=f"{cfg.kind} consensus error",
        xlabel="iteration",
        ylabel="consensus error",
        logy=True,
    )
    for algorithm, per_seed in all_records.items():
        xs, med, lo, hi = _series(per_seed, "consensus_error")
        if xs:
            plot.add_series(algorithm, xs, med, lo, hi)
    plot.save(out_dir / "consensus_vs_iter.svg")


# -- compare ----------------------------------------------------------------


def compare_runs(run_dirs: list[Path], out_path: Path) -> None:
    """Overlay the median curves of several finished run directories."""
    kinds = set()
    curves = []
    for run_dir in run_dirs:
        cfg_path = run_dir / "resolved_config.json"
        if not cfg_path.exists():
            raise ConfigError(f"{run_dir} has no resolved_config.json")
        with open(cfg_path) as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh))
        kinds.add("regression" if cfg.kind in ("ridge", "logistic") else "rl")
        if len(kinds) > 1:
            raise ConfigError("cannot compare regression and RL runs together")
        for algorithm in cfg.algorithms:
            alg_dir = run_dir / algorithm
            per_seed = [
                records_from_csv(alg_dir / f"seed{seed}.csv") for seed in cfg.seeds
            ]
            curves.append((f"{run_dir.name}:{algorithm}", cfg, per_seed))

    metric = "accuracy" if kinds == {"regression"} else "avg_reward"
    plot = LinePlot(
        title="comparison",
        xlabel="transmitted scalars" if metric == "accuracy" else "iteration",
        ylabel=metric,
        logy=metric == "accuracy",
    )
    for name, cfg, per_seed in curves:
        xs, med, lo, hi = _series(per_seed, metric)
        if not xs:
            continue
        if metric == "accuracy":
            xs = _comm_axis(per_seed)[: len(med)]
        else:
            window = max(1, cfg.reward_window)
            med = moving_average(med, window)
            lo = moving_average(lo, window)
            hi = moving_average(hi, window)
        plot.add_series(name, xs, med, lo, hi)
    plot.save(out_path)


# -- selftest ----------------------------------------------------------------


def selftest() -> int:
    """Built-in invariant battery; returns a process exit code."""
    from . import selfchecks

    failures = 0
    for name, fn in selfchecks.ALL_CHECKS:
        try:
            fn()
            print(f"PASS {name}")
        except Exception as exc:  # report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
    print(f"{len(selfchecks.ALL_CHECKS) - failures}/{len(selfchecks.ALL_CHECKS)} checks passed")
    return 1 if failures else 0


# -- argument parsing --------------------------------------------------------


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decadmm",
        description="decentralized consensus optimization experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a preset or config file")
    runp.add_argument("--preset", choices=sorted(PRESETS), default=None)
    runp.add_argument("--config", default=None, help="JSON config file")
    runp.add_argument("--seed", type=int, default=None, help="single seed override")
    runp.add_argument(
        "--seeds", default=None, help="comma-separated seed list override"
    )
    runp.add_argument("--iters", type=int, default=None, help="iteration override")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument(
        "--algorithms", default=None, help="comma-separated algorithm override"
    )
    runp.add_argument("--stride", type=int, default=None, help="metric stride")
    runp.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config field (value parsed as JSON when possible)",
    )

    cmp = sub.add_parser("compare", help="overlay curves of finished runs")
    cmp.add_argument("dirs", nargs="+")
    cmp.add_argument("--out", default="compare.svg")

    sub.add_parser("selftest", help="run the built-in invariant checks")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "run":
            overrides: dict = {}
            if args.seed is not None:
                overrides["seeds"] = [args.seed]
            if args.seeds is not None:
                overrides["seeds"] = [int(s) for s in args.seeds.split(",")]
            if args.iters is not None:
                overrides["iterations"] = args.iters
            if args.algorithms is not None:
                overrides["algorithms"] = args.algorithms.split(",")
            if args.stride is not None:
                overrides["metric_stride"] = args.stride
            for item in args.set:
                key, _, raw = item.partition("=")
                if not _:
                    raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
                overrides[key] = _parse_value(raw)
            if args.out is not None:
                overrides["out_dir"] = args.out
            cfg = load_config(args.config, args.preset, overrides)
            name = cfg.preset or f"custom-{cfg.kind}"
            out_dir = (
                Path(cfg.out_dir)
                if cfg.out_dir != "runs"
                else _out_root() / name
            )
            run_experiment(cfg, out_dir)
            print(f"wrote {out_dir}")
            return 0
        if args.command == "compare":
            compare_runs([Path(d) for d in args.dirs], Path(args.out))
            print(f"wrote {args.out}")
            return 0
        if args.command == "selftest":
            return selftest()
        raise ConfigError(f"unknown command {args.command!r}")
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
