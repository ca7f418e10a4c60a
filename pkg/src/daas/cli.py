"""Command-line entry point: ``daas {solve,simulate,sweep,validate,dump-states}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from daas import ctmc
from daas.config import ExperimentPlan, SimSettings, load_plan
from daas.errors import ConsistencyError, NumericalFailure, ReducibleChainError, ScenarioError, StateSpaceTooLarge
from daas.linkstate import ClassSpec, Policy, Scenario
from daas.metrics import scenario_at_load
from daas.sweep import failed, rows_to_csv, run_points, run_sweep, write_csv

log = logging.getLogger("daas")

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


def _numbers(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _ints(text):
    return _numbers(text, int)


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("-c", "--config", help="YAML plan file (flags override its values)")
    g.add_argument("--capacity", type=int, help="frequency slots on the link")
    g.add_argument("--demands", type=_ints, help="slot demand per class, e.g. 4,6,8")
    g.add_argument("--service-rates", type=_numbers, help="service rate per class (default 1)")
    g.add_argument("--arrival-rates", type=_numbers, help="explicit arrival rate per class")
    g.add_argument("--load", type=float, help="offered load in Erlang; sets equal arrival rates")
    g.add_argument("--defrag-rate", type=float, help="DaaS rate mu_d (0 disables defragmentation)")
    g.add_argument("--policy", help="first_fit | random_fit")
    g.add_argument("--method", choices=("gth", "direct"), help="stationary solver")
    g.add_argument("--weighting", choices=("arrival", "uniform"), help="class weights of the overall row")
    g.add_argument("--max-entries", type=int, help="state-space cap in sparse entries")
    g.add_argument("--workers", type=int, help="worker threads (default: $DAAS_WORKERS or CPU count)")
    g.add_argument("-o", "--output", help="CSV output path (default: stdout)")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    g.add_argument("--arrivals", type=int, help="measured arrivals per replication")
    g.add_argument("--replications", type=int, help="independent replications")
    g.add_argument("--seed", type=int, help="base seed")
    g.add_argument("--warmup", type=int, help="warm-up arrivals per replication (default 10%%)")


def _plan(args) -> ExperimentPlan:
    plan = load_plan(args.config)
    t = plan.template
    n = len(args.demands) if args.demands else t.num_classes
    demands = args.demands or list(t.demands)
    mu = args.service_rates or ([c.service_rate for c in t.classes] if not args.demands else [1.0] * n)
    lam = args.arrival_rates or ([c.arrival_rate for c in t.classes] if not args.demands else [1.0] * n)
    if len(mu) == 1:
        mu = mu * n
    if len(lam) == 1:
        lam = lam * n
    if not len(demands) == len(mu) == len(lam):
        raise ScenarioError("demands, service rates and arrival rates need one value per class")
    template = Scenario(
        capacity=args.capacity or t.capacity,
        classes=tuple(ClassSpec(d, l, m) for d, l, m in zip(demands, lam, mu)),
        defrag_rate=t.defrag_rate if args.defrag_rate is None else args.defrag_rate,
        policy=Policy.parse(args.policy) if args.policy else t.policy,
    )
    sim = plan.sim
    if getattr(args, "arrivals", None) is not None or getattr(args, "replications", None) is not None \
            or getattr(args, "seed", None) is not None or getattr(args, "warmup", None) is not None:
        sim = SimSettings(
            measured_arrivals=args.arrivals if args.arrivals is not None else sim.measured_arrivals,
            replications=args.replications if args.replications is not None else sim.replications,
            base_seed=args.seed if args.seed is not None else sim.base_seed,
            warmup_arrivals=args.warmup if args.warmup is not None else sim.warmup_arrivals,
        )
    plan = plan.with_overrides(
        template=template, sim=sim, solver_method=args.method, weighting=args.weighting,
        max_entries=args.max_entries, load=args.load, csv=args.output,
        loads=tuple(args.loads) if getattr(args, "loads", None) else None,
        defrag_rates=tuple(args.defrag_rates) if getattr(args, "defrag_rates", None) else None,
        policies=tuple(Policy.parse(p) for p in args.policies.split(",")) if getattr(args, "policies", None) else None,
        mode=getattr(args, "mode", None),
        plot_dir=getattr(args, "plot_dir", None),
        plot_script=getattr(args, "plot_script", None),
    )
    if args.arrival_rates and args.load is not None:
        raise ScenarioError("give either --arrival-rates or --load, not both")
    if args.arrival_rates:
        plan = replace(plan, load=None)
    return plan


def _single_scenario(plan: ExperimentPlan) -> Scenario:
    if plan.load is not None:
        return scenario_at_load(plan.template, plan.load)
    return plan.template


def _emit(rows, path) -> None:
    if path:
        write_csv(rows, path)
        log.info("wrote %d rows to %s", len(rows), path)
    else:
        sys.stdout.write(rows_to_csv(rows))


def cmd_solve(args) -> int:
    plan = _plan(args)
    plan = plan.with_overrides(mode="analytic")
    rows = run_points([_single_scenario(plan)], plan, args.workers)
    _emit(rows, plan.csv)
    return EXIT_FAILED if failed(rows) else EXIT_OK


def cmd_simulate(args) -> int:
    plan = _plan(args).with_overrides(mode="sim")
    rows = run_points([_single_scenario(plan)], plan, args.workers)
    _emit(rows, plan.csv)
    return EXIT_FAILED if failed(rows) else EXIT_OK


def cmd_sweep(args) -> int:
    plan = _plan(args)
    rows = run_sweep(plan, args.workers)
    _emit(rows, plan.csv)
    if plan.plot_dir:
        from daas.plotting import render_figures

        for path in render_figures(rows, plan.plot_dir):
            log.info("wrote %s", path)
    if plan.plot_script:
        from daas.plotting import write_plot_script

        if not plan.csv:
            raise ScenarioError("--plot-script needs --output so the script has a CSV to read")
        write_plot_script(plan.plot_script, plan.csv, plan.plot_dir or "figures")
    return EXIT_FAILED if failed(rows) else EXIT_OK


def cmd_validate(args) -> int:
    from daas.validate import run_validation

    checks = run_validation(args.max_capacity, args.sim_arrivals)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def cmd_dump_states(args) -> int:
    plan = _plan(args)
    sc = _single_scenario(plan)
    space, q = ctmc.build(sc, plan.max_entries)
    text = ctmc.dump_states(sc, space, q, edges=args.edges)
    if plan.csv:
        with open(plan.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="daas", description="Blocking analysis of defragmentation on an elastic optical link.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="stationary blocking of one scenario")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Monte-Carlo estimate for one scenario")
    _add_scenario_args(p)
    _add_sim_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid over load, defrag rate and policy")
    _add_scenario_args(p)
    _add_sim_args(p)
    p.add_argument("--loads", type=_numbers, help="load grid in Erlang, e.g. 2,3,4")
    p.add_argument("--defrag-rates", type=_numbers, help="defrag-rate grid, e.g. 0,1,10")
    p.add_argument("--policies", help="comma-separated policies, e.g. random_fit,first_fit")
    p.add_argument("--mode", choices=("analytic", "sim", "both"))
    p.add_argument("--plot-dir", help="render PNG figures into this directory")
    p.add_argument("--plot-script", help="write a Python script that redraws the figures from the CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the oracle suite")
    p.add_argument("--max-capacity", type=int, default=8, help="largest capacity for exhaustive checks")
    p.add_argument("--sim-arrivals", type=int, default=200_000, help="arrivals per replication in the simulation check")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dump-states", help="print the state space (and optionally the edges)")
    _add_scenario_args(p)
    p.add_argument("--edges", action="store_true", help="also list generator entries")
    p.set_defaults(func=cmd_dump_states)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"daas: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StateSpaceTooLarge, NumericalFailure, ReducibleChainError, ConsistencyError) as exc:
        print(f"daas: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
