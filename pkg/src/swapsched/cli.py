"""Command-line interface.

Subcommands::

    swapsched validate  --instance DIR [--schedule FILE] [--mode lenient|strict] [--format text|json]
    swapsched solve     --instance DIR [--method greedy|exact|oracle] [--objective min-cost|feasibility]
                        [--budget N] [--out DIR] [--format text|json]
    swapsched generate  --spec FILE --out DIR
    swapsched render    --instance DIR [--schedule FILE] [--counts]
    swapsched demo      [--out DIR]

Exit codes: 0 success (and, for validate, a feasible schedule); 1 an
infeasible schedule or an unsatisfiable instance; 2 malformed input
(files, formats, dimensions); 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    DimensionError,
    EnumerationBudgetError,
    GridParseError,
    InfeasibleError,
    InstanceError,
    ProfileError,
    TransitionError,
)
from .model import BatteryState, ScheduleGrid, format_exact, parse_grid, render_grid
from .scenario import demo_instance, generate, load_instance, load_spec, save_instance
from .solver import (
    DEFAULT_ORACLE_BUDGET,
    SolveObjective,
    schedule_cost,
    solve_exact,
    solve_greedy,
    solve_oracle,
)
from .validation import Instance, ValidationReport, Violation, validate

__all__ = ["main"]


def _read_schedule(instance: Instance, instance_dir: str, override: str | None) -> ScheduleGrid:
    path = Path(override) if override else Path(instance_dir) / "schedule.txt"
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise InstanceError(f"missing schedule file: {path}") from None
    return parse_grid(text, instance.config)


def _print_violation(v: Violation) -> None:
    print(f"  [{v.constraint}] {v.message}")


def _print_report(report: ValidationReport, mode: str) -> None:
    if report.feasible:
        print(f"feasible ({mode} mode): all constraints hold")
    else:
        print(f"infeasible ({mode} mode): {len(report.violations)} violation(s)")
        for v in report.violations:
            _print_violation(v)


def cmd_validate(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    grid = _read_schedule(instance, args.instance, args.schedule)
    report = validate(grid, instance, args.mode)
    if args.format == "json":
        print(report.to_json(), end="")
    else:
        _print_report(report, args.mode)
    return 0 if report.feasible else 1


def cmd_solve(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    objective = SolveObjective(args.objective)
    if args.method == "greedy":
        grid = solve_greedy(instance)
        cost = schedule_cost(grid, instance.config, instance.events.price)
    elif args.method == "exact":
        grid, cost = solve_exact(instance, objective)
    else:
        grid, cost = solve_oracle(instance, objective, budget=args.budget)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "schedule.txt").write_text(render_grid(grid))
        (out / "cost.json").write_text(cost.to_json())
    if args.format == "json":
        payload = {
            "method": args.method,
            "objective": args.objective,
            "total_cost": format_exact(cost.total),
            "energy_kwh": format_exact(cost.energy_kwh),
            "schedule": render_grid(grid),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(render_grid(grid), end="")
        print(f"total cost: {format_exact(cost.total)}")
        print(f"energy charged: {format_exact(cost.energy_kwh)} kWh")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec)
    instance = generate(spec)
    save_instance(args.out, instance)
    print(f"wrote instance bundle to {args.out}")
    print(
        f"  {instance.config.n_batteries} batteries, "
        f"{instance.config.n_chargers} chargers, {instance.config.horizon} hours; "
        f"demand {sum(instance.events.demand)}, arrivals {sum(instance.events.arrivals)}"
    )
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    grid = _read_schedule(instance, args.instance, args.schedule)
    print(render_grid(grid), end="")
    if args.counts:
        print()
        for state in (BatteryState.EMPTY, BatteryState.CHARGING, BatteryState.FULL, BatteryState.OUT):
            counts = " ".join(str(grid.count(state, t)) for t in range(1, grid.horizon + 1))
            print(f"{state.letter}: {counts}")
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    instance, reference = demo_instance()
    print(render_grid(reference), end="")
    print()
    report = validate(reference, instance, "lenient")
    if report.feasible:
        print("reference schedule: feasible (lenient mode)")
    else:
        print(f"reference schedule: {len(report.violations)} lenient violation(s)")
        for v in report.violations:
            _print_violation(v)
    greedy = solve_greedy(instance)
    diff = [
        (b, t)
        for b in range(1, instance.config.n_batteries + 1)
        for t in range(1, instance.config.horizon + 1)
        if greedy.state(b, t) is not reference.state(b, t)
    ]
    cells = ", ".join(f"B{b}@{t}" for b, t in diff)
    print(f"greedy schedule differs from the reference in {len(diff)} cell(s): {cells}")
    if args.out:
        save_instance(args.out, instance, schedule=reference)
        print(f"wrote demo bundle to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapsched",
        description="Battery-swap-station schedule validation and charge planning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a schedule against an instance")
    p.add_argument("--instance", required=True, help="instance bundle directory")
    p.add_argument("--schedule", help="schedule file (default: <instance>/schedule.txt)")
    p.add_argument("--mode", choices=["lenient", "strict"], default="lenient")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="compute a charging schedule")
    p.add_argument("--instance", required=True, help="instance bundle directory")
    p.add_argument("--method", choices=["greedy", "exact", "oracle"], default="exact")
    p.add_argument("--objective", choices=["min-cost", "feasibility"], default="min-cost")
    p.add_argument(
        "--budget",
        type=int,
        default=DEFAULT_ORACLE_BUDGET,
        help="oracle enumeration limit (start vectors)",
    )
    p.add_argument("--out", help="directory for schedule.txt and cost.json")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="draw an instance from a scenario spec")
    p.add_argument("--spec", required=True, help="scenario spec JSON file")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("render", help="pretty-print a schedule")
    p.add_argument("--instance", required=True, help="instance bundle directory")
    p.add_argument("--schedule", help="schedule file (default: <instance>/schedule.txt)")
    p.add_argument("--counts", action="store_true", help="append per-state hourly counts")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("demo", help="show the bundled worked example")
    p.add_argument("--out", help="also export the demo as an instance bundle")
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EnumerationBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InfeasibleError as exc:
        if exc.hour is not None:
            print(f"infeasible at hour {exc.hour}: {exc}", file=sys.stderr)
        else:
            print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except (
        GridParseError,
        TransitionError,
        ProfileError,
        InstanceError,
        DimensionError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
