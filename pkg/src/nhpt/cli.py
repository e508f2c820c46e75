"""``nhpt`` command line: generate, validate, plan and report.

Exit codes: 0 success, 1 usage, 2 invalid input, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baseline import solve_oblivious
from .costs import ConfigurationError
from .entities import GROUPS, IncomeGroup
from .planner import BudgetSpec, benchmark_budget, solve_enhpt, solve_nhpt
from .report import (
    PlanFormatError,
    ReplayMismatch,
    comparison_csv,
    dumps_plan,
    format_table,
    loads_plan,
    metrics_csv,
    overload_csv,
    plan_constants,
    plan_to_document,
    replay,
    steps_csv,
    summarize_oblivious,
    summarize_plan,
)
from .scenario import (
    ScenarioFormatError,
    ScenarioValidationError,
    dumps_scenario,
    find_violations,
    read_scenario,
)
from .synthetic import SyntheticCityParams, generate_synthetic_city

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("nhpt")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- flag parsing

def parse_equity(text: str) -> dict:
    """``low:x,med:y,high:z`` or positional ``x,y,z`` (low, medium, high) into shares."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    shares = {}
    try:
        if all(":" in p for p in parts):
            for p in parts:
                name, value = p.split(":", 1)
                g = IncomeGroup.parse(name)
                if g in shares:
                    raise UsageError(f"--equity names {g.value} twice")
                shares[g] = float(value)
        elif len(parts) == len(GROUPS) and not any(":" in p for p in parts):
            shares = {g: float(v) for g, v in zip(GROUPS, parts)}
        else:
            raise UsageError("--equity wants low:x,med:y,high:z or three comma-separated shares")
    except ValueError as exc:
        raise UsageError(f"--equity: {exc}") from None
    if any(v < 0 for v in shares.values()):
        raise UsageError("--equity shares must be nonnegative")
    if abs(sum(shares.values()) - 1.0) > 1e-6:
        raise UsageError(f"--equity shares must sum to 1 (got {sum(shares.values())!r})")
    return shares


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--constants-override wants key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--constants-override {key}: {value!r} is not a number") from None
    return out


def _load_scenario(path):
    try:
        return read_scenario(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    params = SyntheticCityParams()
    if args.params_file:
        try:
            raw = json.loads(Path(args.params_file).read_text())
            if not isinstance(raw, dict):
                raise ValueError("parameters must be a JSON object")
            params = SyntheticCityParams.from_dict(raw)
        except OSError as exc:
            raise InputError(f"{args.params_file}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.params_file}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
        except (TypeError, ValueError) as exc:
            raise InputError(f"{args.params_file}: {exc}") from None
    scenario = generate_synthetic_city(params, seed=args.seed)
    _write(Path(args.out), dumps_scenario(scenario))
    print(f"wrote {args.out}: {len(scenario.households)} households, "
          f"{len(scenario.transformers)} transformers, {len(scenario.network.edges)} pipes")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        scenario = read_scenario(args.scenario, validate=False)
    except OSError as exc:
        raise InputError(f"{args.scenario}: {exc.strerror or exc}") from None
    problems = find_violations(scenario)
    for p in problems:
        print(p)
    if problems:
        print(f"{len(problems)} violation(s)", file=sys.stderr)
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_plan(args) -> int:
    if (args.budget_frac is None) == (args.budget is None):
        raise UsageError("give exactly one of --budget-frac and --budget")
    if args.granularity is not None and not args.granularity > 0:
        raise UsageError("--granularity must be positive")
    shares = parse_equity(args.equity) if args.equity else None
    overrides = parse_overrides(args.constants_override)
    if args.maintenance_mult is not None:
        overrides["maintenance_multiplier"] = args.maintenance_mult

    scenario = _load_scenario(args.scenario)
    digest = scenario.digest()
    if overrides:
        try:
            constants = scenario.constants.with_overrides(**overrides)
        except ConfigurationError as exc:
            raise UsageError(str(exc)) from None
        bad = constants.validate()
        if bad:
            raise UsageError("; ".join(bad))
        scenario = scenario.with_constants(constants)
        digest = scenario.digest()

    benchmark = benchmark_budget(scenario)
    if args.budget is not None:
        if not args.budget >= 0:
            raise UsageError("--budget must be nonnegative")
        total = float(args.budget)
    else:
        if not args.budget_frac >= 0:
            raise UsageError("--budget-frac must be nonnegative")
        total = args.budget_frac * benchmark
    granularity = args.granularity or 1_000.0
    if shares is None:
        plan = solve_nhpt(scenario, BudgetSpec(total, granularity))
    else:
        equity = {g: total * shares.get(g, 0.0) for g in GROUPS}
        plan = solve_enhpt(scenario, BudgetSpec(total, granularity, equity))

    out = Path(args.out)
    doc = plan_to_document(plan, digest, benchmark)
    _write(out / "plan.json", dumps_plan(doc))
    _write(out / "metrics.csv", metrics_csv(summarize_plan(plan)))
    m = summarize_plan(plan)
    print(f"{plan.strategy}: {len(plan.steps)} neighborhoods, {m.households_converted} households, "
          f"carbon reduced {m.carbon_reduction_pct:.2f}%, spent {m.budget_used:.0f} of {m.budget:.0f}")
    return EXIT_OK


REPORT_KEYS = (
    "carbon_reduction_pct", "households_converted_pct", "pipeline_shutdown_pct",
    "transformers_upgraded_pct", "budget_used_pct", "group_share_pct.low",
    "group_share_pct.medium", "group_share_pct.high",
)


def cmd_report(args) -> int:
    try:
        doc = loads_plan(Path(args.plan).read_text())
    except OSError as exc:
        raise InputError(f"{args.plan}: {exc.strerror or exc}") from None
    scenario = _load_scenario(args.scenario)
    scenario = scenario.with_constants(plan_constants(doc))
    state, outcomes, metrics = replay(scenario, doc)
    oblivious = summarize_oblivious(scenario, solve_oblivious(scenario, metrics.budget), metrics.budget)
    columns = {doc["strategy"]: metrics, "network-oblivious": oblivious}

    out = Path(args.out) if args.out else Path(args.plan).parent
    _write(out / "report_metrics.csv", metrics_csv(metrics))
    _write(out / "comparison.csv", comparison_csv(columns))
    _write(out / "steps.csv", steps_csv(outcomes))
    _write(out / "overload.csv", overload_csv(scenario, state))
    print(format_table(columns, list(REPORT_KEYS)))
    print(f"replay ok: {len(outcomes)} steps match {args.plan}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nhpt", description="Plan neighborhood-scale gas to heat-pump transitions.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic scenario")
    g.add_argument("params_file", nargs="?", help="JSON object of generator parameters")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check a scenario's structural invariants")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plan", help="run the planner on a scenario")
    pl.add_argument("scenario")
    pl.add_argument("--budget-frac", type=float, help="budget as a fraction of the benchmark budget")
    pl.add_argument("--budget", type=float, help="absolute budget")
    pl.add_argument("--equity", help="group shares, low:x,med:y,high:z or x,y,z")
    pl.add_argument("--maintenance-mult", type=float)
    pl.add_argument("--granularity", type=float)
    pl.add_argument("--constants-override", action="append", metavar="KEY=VALUE")
    pl.add_argument("--out", required=True, help="output directory")
    pl.set_defaults(func=cmd_plan)

    r = sub.add_parser("report", help="replay a plan and write comparison tables")
    r.add_argument("plan")
    r.add_argument("scenario")
    r.add_argument("--out", help="output directory (defaults to the plan's directory)")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"nhpt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nhpt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioValidationError as exc:
        print(f"nhpt: invalid scenario: {len(exc.violations)} violation(s): {exc.violations[0]}", file=sys.stderr)
        return EXIT_INVALID
    except (InputError, ScenarioFormatError, PlanFormatError, ReplayMismatch) as exc:
        print(f"nhpt: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort contract
        log.debug("internal error", exc_info=True)
        print(f"nhpt: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
