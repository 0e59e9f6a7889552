"""Command-line front end: certification, single runs, Monte Carlo batches.

Subcommands:
  check-robustness   exact strong-robustness / (r,s)-robustness certificate
  simulate           run a scenario's variants; write CSV + JSON + figures
  montecarlo         repeated randomized runs; write an aggregate table
  list-scenarios     show the bundled experiment scenarios

Exit codes: 0 success, 2 input error, 10 property-not-held (check only).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace

from . import __version__
from .engine import MonteCarloResult, RunMetrics, monte_carlo, run
from .graph import GraphFormatError, load_graph
from .protocol import ConfigError
from .robustness import (
    MAX_CERTIFIER_NODES,
    CertifierScaleError,
    is_rs_robust_wrt,
    is_strongly_robust,
)
from .scenario import (
    Scenario,
    ScenarioError,
    config_hash,
    list_bundled,
    parse_variant_spec,
    resolve_scenario,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_HELD = 10


def _out_dir(args) -> str:
    out = args.out or os.environ.get("MWMSR_OUT") or "out"
    os.makedirs(out, exist_ok=True)
    return out


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "-" for ch in name).strip("-")


def write_trajectory_csv(metrics: RunMetrics, path: str) -> None:
    adversaries = set(metrics.adversary_nodes)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "node", "x", "x_hat", "fired", "updated", "is_adversary"])
        for k in range(metrics.horizon + 1):
            for i in range(1, metrics.n + 1):
                w.writerow(
                    [
                        k,
                        i,
                        repr(metrics.x[k][i - 1]),
                        repr(metrics.x_hat[k][i - 1]),
                        int(metrics.fired[k][i - 1]),
                        int(metrics.updated[k][i - 1]),
                        int(i in adversaries),
                    ]
                )


def write_montecarlo_csv(result: MonteCarloResult, path: str, packages_once: bool) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "variant",
                "runs",
                "avg_events_per_normal_node",
                "avg_transmissions_per_normal_node",
                "avg_transmissions_per_neighbor_accounting",
                "avg_transmissions_packages_once_accounting",
            ]
        )
        for row in result.rows:
            w.writerow(
                [
                    row.variant,
                    row.runs,
                    repr(row.avg_events),
                    repr(row.avg_transmissions(packages_once)),
                    repr(row.avg_transmissions_per_neighbor),
                    repr(row.avg_transmissions_packages_once),
                ]
            )


def _write_manifest(out: str, name: str, scenario: Scenario, seed: int, files: list[str]) -> str:
    manifest = {
        "tool": "mwmsr",
        "version": __version__,
        "scenario": scenario.name,
        "config_sha256": config_hash(scenario),
        "seed": seed,
        "outputs": sorted(files),
    }
    path = os.path.join(out, f"{name}.manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _apply_cli_variants(scenario: Scenario, args) -> Scenario:
    if args.variant:
        variants = [parse_variant_spec(spec) for spec in args.variant]
        scenario = replace(scenario, variants=variants)
    if args.seed is not None:
        scenario = replace(scenario, sim=replace(scenario.sim, seed=args.seed))
    return scenario


# -- Subcommands ---------------------------------------------------------------


def cmd_check(args) -> int:
    g = load_graph(args.graph)
    if g.n > MAX_CERTIFIER_NODES:
        print(
            f"error: exact certification refuses graphs with more than "
            f"{MAX_CERTIFIER_NODES} nodes (got {g.n})",
            file=sys.stderr,
        )
        return EXIT_INPUT
    t0 = time.perf_counter()
    if args.fault_set is not None:
        fault_set = {int(v) for v in args.fault_set.split(",") if v.strip()}
        cert = is_rs_robust_wrt(g, args.r, args.s, args.hops, fault_set)
    else:
        if args.s != 1:
            print("error: strong robustness is defined for s = 1", file=sys.stderr)
            return EXIT_INPUT
        f = args.f_total if args.f_total is not None else args.f_local
        model = "f-total" if args.f_total is not None else "f-local"
        cert = is_strongly_robust(g, args.r, args.hops, f, model)
    elapsed_ms = int((time.perf_counter() - t0) * 1000)
    print(
        json.dumps(
            {"holds": cert.holds, "witness": cert.witness_json_obj(), "elapsed_ms": elapsed_ms}
        )
    )
    return EXIT_OK if cert.holds else EXIT_NOT_HELD


def cmd_simulate(args) -> int:
    scenario = _apply_cli_variants(resolve_scenario(args.scenario), args)
    out = _out_dir(args)
    files: list[str] = []
    metrics_by_variant: dict[str, RunMetrics] = {}
    for name, cfg in scenario.variant_configs():
        if args.count_packages_once:
            cfg = replace(cfg, count_packages_once=True)
        metrics = run(scenario.graph, scenario.fault_model, dict(scenario.x0), cfg, scenario.x_hat0)
        metrics_by_variant[name] = metrics
        stem = f"{_slug(scenario.name)}__{_slug(name)}"
        traj = os.path.join(out, f"{stem}.trajectory.csv")
        write_trajectory_csv(metrics, traj)
        mjson = os.path.join(out, f"{stem}.metrics.json")
        with open(mjson, "w", encoding="utf-8") as fh:
            json.dump(metrics.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        files += [traj, mjson]
        if not args.no_figures:
            from .plots import render_trajectory

            fig = os.path.join(out, f"{stem}.trajectory.png")
            render_trajectory(metrics, fig, title=f"{scenario.name} / {name}")
            files.append(fig)
        print(f"{name}: final spread {metrics.final_spread():.6g}, events {metrics.events_per_node}")
    if not args.no_figures and len(metrics_by_variant) > 1:
        from .plots import render_spread

        fig = os.path.join(out, f"{_slug(scenario.name)}.spread.png")
        render_spread(metrics_by_variant, fig)
        files.append(fig)
    files.append(_write_manifest(out, _slug(scenario.name), scenario, scenario.sim.seed, files))
    print(f"wrote {len(files)} files under {out}")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    scenario = _apply_cli_variants(resolve_scenario(args.scenario), args)
    if args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    variants = scenario.variant_configs()
    if not scenario.variants:
        print("error: montecarlo needs a scenario with variants (or --variant flags)", file=sys.stderr)
        return EXIT_INPUT
    seed = args.seed if args.seed is not None else scenario.sim.seed
    result = monte_carlo(
        scenario.graph, scenario.fault_model, variants, runs=args.runs, seed=seed
    )
    out = _out_dir(args)
    stem = _slug(scenario.name)
    files = []
    table = os.path.join(out, f"{stem}.montecarlo.csv")
    write_montecarlo_csv(result, table, args.count_packages_once)
    files.append(table)
    if not args.no_figures:
        from .plots import render_montecarlo

        fig = os.path.join(out, f"{stem}.montecarlo.png")
        render_montecarlo(result, fig, args.count_packages_once)
        files.append(fig)
    files.append(_write_manifest(out, stem, scenario, seed, files))
    for row in result.rows:
        print(
            f"{row.variant}: avg events {row.avg_events:.2f}, "
            f"avg transmissions {row.avg_transmissions(args.count_packages_once):.2f}"
        )
    print(f"wrote {len(files)} files under {out}")
    return EXIT_OK


def cmd_list_scenarios(_args) -> int:
    for name, description in list_bundled():
        print(f"{name}: {description}")
    return EXIT_OK


# -- Parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mwmsr",
        description="Event-triggered multi-hop MSR consensus: simulator and exact robustness certifier.",
    )
    parser.add_argument("--version", action="version", version=f"mwmsr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-robustness", help="certify graph robustness, witness on failure")
    p.add_argument("--graph", required=True, help="graph JSON or edge-list file")
    p.add_argument("--r", type=int, required=True, help="independent-path threshold r")
    p.add_argument("--s", type=int, default=1, help="node-count threshold s (default 1)")
    p.add_argument("--hops", type=int, required=True, help="relay range l")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--f-total", type=int, help="certify under the f-total model")
    group.add_argument("--f-local", type=int, help="certify under the f-local model")
    group.add_argument("--fault-set", help="explicit fault set, e.g. '1,3'")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run a scenario's variants and write artifacts")
    p.add_argument("--scenario", required=True, help="bundled scenario name or JSON path")
    p.add_argument("--variant", action="append", help="override variants, e.g. 'l=2,relay=package'")
    p.add_argument("--out", help="output directory (default $MWMSR_OUT or ./out)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--count-packages-once", action="store_true", help="count a broadcast once, not per receiving neighbor")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="randomized repeated runs with an aggregate table")
    p.add_argument("--scenario", required=True, help="bundled scenario name or JSON path")
    p.add_argument("--variant", action="append", help="override variants")
    p.add_argument("--runs", type=int, required=True, help="number of Monte Carlo runs")
    p.add_argument("--out", help="output directory (default $MWMSR_OUT or ./out)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--count-packages-once", action="store_true", help="count a broadcast once, not per receiving neighbor")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("list-scenarios", help="list bundled scenarios")
    p.set_defaults(func=cmd_list_scenarios)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 on --help; pass both through
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        ScenarioError,
        GraphFormatError,
        ConfigError,
        CertifierScaleError,
        FileNotFoundError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
