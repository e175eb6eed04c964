"""Command-line entry point: ``gtdispatch <subcommand>``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .agents import search_rules
from .config import AgentConfig, ExperimentConfig, ScenarioSource, load_config
from .costs import OmVariant
from .env import DispatchEnv
from .exceptions import GtDispatchError
from .oracle import dp_optimal
from .scenario import HOURS_PER_YEAR, generate_scenario, load_scenario_dir, write_scenario_csv


def _scenario_args(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=Path, help="directory with price.csv, weather.csv, demand.csv")
    src.add_argument("--scenario-seed", type=int, default=None, help="synthetic year seed (default 0)")
    p.add_argument("--window", type=int, nargs=2, metavar=("START", "HOURS"), help="cut an hourly window")


def _load_scenario(args):
    if args.scenario is not None:
        table = load_scenario_dir(args.scenario)
    else:
        table = generate_scenario(args.scenario_seed or 0)
    if args.window:
        table = table.window(*args.window)
    return table


def _experiment_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        if not args.algorithm:
            raise GtDispatchError("give --config or at least one --algorithm")
        cfg = ExperimentConfig(agents=tuple(AgentConfig(a) for a in args.algorithm))
    if args.config is not None and args.algorithm:
        cfg = replace(cfg, agents=tuple(AgentConfig(a) for a in args.algorithm))
    if args.scenario is not None or args.scenario_seed is not None or args.window:
        window = tuple(args.window) if args.window else None
        source = (ScenarioSource(seed=None, directory=str(args.scenario), window=window) if args.scenario
                  else ScenarioSource(seed=args.scenario_seed or 0, window=window))
        cfg = replace(cfg, scenario=source)
    if args.jobs is not None:
        cfg = replace(cfg, n_jobs=args.jobs)
    return cfg.with_overrides(seed=args.seed, episodes=args.episodes, output_dir=args.out,
                              om_variant=getattr(args, "om_variant", None))


def cmd_generate_data(args) -> int:
    table = generate_scenario(args.seed)
    if args.hours != HOURS_PER_YEAR:
        table = table.window(0, args.hours)
    for path in write_scenario_csv(table, args.out).values():
        print(path)
    return 0


def _finish(results) -> int:
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"FAILED {r.algorithm}/{r.om_variant.value}/seed {r.seed}: {r.error}", file=sys.stderr)
    print(f"{len(results) - len(failed)}/{len(results)} runs completed")
    return 0 if not failed else 1


def _print_metrics(report: harness.MetricsReport):
    for (algo, variant), c in report.cells.items():
        print(f"{algo:22s} {variant:8s} seeds {c.seeds_completed}/{c.seeds_configured}  "
              f"acc reward {c.accumulated_reward / 1e6:8.3f} M C$  sample eff {c.sample_efficiency / 1e6:8.3f} M C$  "
              f"hours {c.gt_hours_last10:7.1f}  cycles {c.gt_cycles_last10:6.1f}")


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    report, results = harness.run_experiment(cfg)
    _print_metrics(report)
    return _finish(results)


def cmd_compare_om(args) -> int:
    cfg = _experiment_config(args)
    cmp, results = harness.compare_om_variants(cfg, episodes=args.episodes or harness.COMPARE_OM_EPISODES)
    _print_metrics(cmp.report)
    for (averaging, metric, variant), v in sorted(cmp.increases.items()):
        print(f"{averaging:6s} {metric:6s} {variant:7s} vs dynamic: {v:+.1f} %")
    return _finish(results)


def cmd_report(args) -> int:
    report = harness.build_report(args.out)
    _print_metrics(report)
    if {v for _, v in report.cells} >= {v.value for v in OmVariant}:
        harness.om_comparison(report, args.out)
    return 0 if report.complete else 1


def cmd_evaluate(args) -> int:
    agent, snap = harness.load_trained_agent(args.run)
    custom = args.scenario is not None or args.scenario_seed is not None or args.window
    table = _load_scenario(args) if custom else snap.scenario.load()
    variant = OmVariant.parse(args.om_variant) if args.om_variant else snap.om_variants[0]
    env = harness.make_env(table, snap.agents[0].algorithm, variant)
    stats = agent.evaluate(env)
    out = {"reward_cad": stats.reward, "gt_hours": stats.gt_hours, "gt_cycles": stats.gt_cycles}
    print(json.dumps(out))
    return 0


def cmd_baseline(args) -> int:
    table = _load_scenario(args)
    env = DispatchEnv(table, om_variant=args.om_variant or "dynamic", horizon=None)
    rule, score = search_rules(env)
    print(json.dumps({"rule": str(rule), "reward_cad": score}))
    if args.out:
        Path(args.out).write_text(json.dumps({"rule": str(rule), "condition": rule.condition,
                                              "price_threshold": rule.price_threshold,
                                              "demand_threshold": rule.demand_threshold, "reward_cad": score}))
    return 0


def cmd_oracle(args) -> int:
    table = _load_scenario(args)
    res = dp_optimal(table, om_variant=args.om_variant or "dynamic")
    print(json.dumps({"cost_cad": res.cost, "gt_hours": res.gt_hours, "gt_cycles": res.gt_cycles}))
    if args.out:
        with Path(args.out).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("timestamp", "action_index", "load_fraction"))
            for ts, a, lvl in zip(table.timestamps, res.schedule, res.load_fractions):
                w.writerow([str(ts.astype("datetime64[s]")), int(a), repr(float(lvl))])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtdispatch", description="Gas-turbine dispatch experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write a synthetic scenario as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hours", type=int, default=HOURS_PER_YEAR)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate_data)

    for name, func, helptext in (("train", cmd_train, "multi-seed training and metrics"),
                                 ("compare-om", cmd_compare_om, "retrain under all three O&M variants")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=Path)
        p.add_argument("--algorithm", action="append", help="override the agent list (repeatable)")
        p.add_argument("--seed", type=int, help="run this single seed")
        p.add_argument("--episodes", type=int)
        p.add_argument("--out", type=Path)
        p.add_argument("--jobs", type=int, help="parallel workers")
        if name == "train":
            p.add_argument("--om-variant", choices=[v.value for v in OmVariant])
        _scenario_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="play a trained agent deterministically")
    p.add_argument("--run", type=Path, required=True, help="run directory written by train")
    p.add_argument("--om-variant", choices=[v.value for v in OmVariant])
    _scenario_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="rule-search baseline")
    p.add_argument("--om-variant", choices=[v.value for v in OmVariant])
    p.add_argument("--out", type=Path, help="write the best rule as JSON")
    _scenario_args(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("oracle", help="optimal schedule by dynamic programming")
    p.add_argument("--om-variant", choices=[v.value for v in OmVariant])
    p.add_argument("--out", type=Path, help="write the schedule CSV")
    _scenario_args(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="recompute metrics from run CSVs")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (GtDispatchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
