"""
Command-line front end.

    python main.py validate config/models/desk_robot.json
    python main.py simulate config/scenarios/desk_standup.json --out runs/nominal
    python main.py identify object.json catalog.json obs.csv --out runs/topology
    python main.py synthesize object.json catalog.json --assignment 0,1,0 --frame left_handle --out data
    python main.py compare config/scenarios/desk_standup.json --out runs/compare

Exit codes: 0 success, 1 invalid input, 2 runtime or solver failure. Outputs are
written only under --out, each file atomically.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.control.partner_aware import ControlMode
from app.dynamics.model_io import load_model_file, model_summary
from app.simulate.config import load_scenario
from app.simulate.recorder import records_to_frame, write_log, write_summary
from app.simulate.scenario import ScenarioRunner, compare_control_modes
from app.topology.catalog import load_catalog
from app.topology.identify import identify_topology
from app.topology.observations import read_observations, write_observations
from app.topology.synthetic import generate_object_observations
from app.utils.exceptions import ConfigurationException, HriException, ScenarioAbortedException
from app.utils.formatting import create_table, format_duration, format_json, print_table, write_atomic
from app.utils.logging import configure_logging, get_logger

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partner-aware-hri",
        description="Partner-aware humanoid assistance: models, scenarios and topology identification.",
    )
    parser.add_argument(
        "--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override the configured log level",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="Check a model file and print its summary")
    validate.add_argument("model", type=Path)
    validate.add_argument("--quiet", action="store_true")

    simulate = sub.add_parser("simulate", help="Run a stand-up scenario")
    simulate.add_argument("scenario", type=Path)
    simulate.add_argument("--out", type=Path, required=True)
    simulate.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
        help="Dotted-key scenario override, e.g. gains.kp=50 (repeatable)",
    )
    simulate.add_argument("--quiet", action="store_true")

    compare = sub.add_parser("compare", help="Run a scenario under several control modes")
    compare.add_argument("scenario", type=Path)
    compare.add_argument("--out", type=Path, required=True)
    compare.add_argument(
        "--mode", action="append", default=[], choices=[m.value for m in ControlMode],
        help="Control mode to include (repeatable; default partner_aware and partner_cancelling)",
    )
    compare.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    compare.add_argument("--quiet", action="store_true")

    identify = sub.add_parser("identify", help="Rank articulation hypotheses from observations")
    identify.add_argument("object", type=Path)
    identify.add_argument("catalog", type=Path)
    identify.add_argument("observations", type=Path)
    identify.add_argument("--out", type=Path, required=True)
    identify.add_argument("--smoothing", type=int, default=None, help="Moving-average width for the momentum rate")
    identify.add_argument("--workers", type=int, default=None)
    identify.add_argument("--quiet", action="store_true")

    synthesize = sub.add_parser("synthesize", help="Write synthetic observations of an object")
    synthesize.add_argument("object", type=Path)
    synthesize.add_argument("catalog", type=Path)
    synthesize.add_argument("--assignment", required=True, help="Candidate index per joint, e.g. 0,1,0")
    synthesize.add_argument("--frame", action="append", default=[], dest="frames", help="Grasp frame (repeatable)")
    synthesize.add_argument("--dt", type=float, default=0.002)
    synthesize.add_argument("--duration", type=float, default=1.0)
    synthesize.add_argument("--seed", type=int, default=0)
    synthesize.add_argument("--out", type=Path, required=True)
    synthesize.add_argument("--name", default="observations.csv")
    return parser


def _parse_assignment(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigurationException(
            f"Assignment must be comma-separated integers: {text!r}", details={"assignment": text}
        ) from None


def cmd_validate(args: argparse.Namespace) -> int:
    model = load_model_file(args.model)
    summary = model_summary(model)
    rows = [[key, value if not isinstance(value, list) else ", ".join(map(str, value))] for key, value in summary.items()]
    print_table(create_table(f"Model {model.name}", ["Field", "Value"], rows), quiet=args.quiet)
    return 0


def _print_run_summary(summary: dict, quiet: bool) -> None:
    keys = (
        "reached_state",
        "steps",
        "contact_switches",
        "lyapunov_violations",
        "chi_err_final",
        "chi_err_integral",
        "max_residual",
        "max_drift",
        "aborted",
    )
    rows = [["simulated_time", format_duration(summary.get("simulated_time", 0.0))]]
    rows += [[key, summary.get(key)] for key in keys]
    print_table(create_table(f"Scenario {summary.get('name')}", ["Metric", "Value"], rows), quiet=quiet)


def cmd_simulate(args: argparse.Namespace) -> int:
    config, base_dir, applied = load_scenario(args.scenario, args.override)
    runner = ScenarioRunner.from_config(config, base_dir)
    layout = runner.layout()
    try:
        result = runner.run()
    except ScenarioAbortedException as e:
        write_log(records_to_frame(e.records, layout), args.out / "log.csv")
        write_summary({**e.summary, "overrides": applied}, args.out / "summary.json")
        _print_run_summary(e.summary, args.quiet)
        raise
    write_log(records_to_frame(result.records, layout), args.out / "log.csv")
    write_summary({**result.summary, "overrides": applied}, args.out / "summary.json")
    _print_run_summary(result.summary, args.quiet)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config, base_dir, _ = load_scenario(args.scenario, args.override)
    modes = args.mode or [ControlMode.PARTNER_AWARE.value, ControlMode.PARTNER_CANCELLING.value]
    results = compare_control_modes(config, modes, base_dir)
    write_atomic(args.out / "comparison.json", format_json(results) + "\n")
    rows = [
        [mode, r["chi_err_integral"], r["chi_err_final"], r["lyapunov_violations"], r["aborted"]]
        for mode, r in results.items()
    ]
    print_table(
        create_table(
            f"Control modes on {config.name}",
            ["Mode", "chi_err_integral", "chi_err_final", "lyapunov_violations", "aborted"],
            rows,
        ),
        quiet=args.quiet,
    )
    return 0


def cmd_identify(args: argparse.Namespace) -> int:
    model = load_model_file(args.object)
    catalog = load_catalog(args.catalog)
    observations = read_observations(args.observations, catalog)
    ranking = identify_topology(model, catalog, observations, smoothing=args.smoothing, workers=args.workers)
    write_atomic(args.out / "ranking.json", format_json(ranking.to_dict()) + "\n")
    rows = [[i + 1, h.label, f"{h.residual:.6g}"] for i, h in enumerate(ranking.hypotheses)]
    title = f"Topology ranking ({'ambiguous' if ranking.ambiguous else 'unambiguous'})"
    print_table(create_table(title, ["Rank", "Hypothesis", "Residual"], rows), quiet=args.quiet)
    return 0


def cmd_synthesize(args: argparse.Namespace) -> int:
    model = load_model_file(args.object)
    catalog = load_catalog(args.catalog)
    catalog.check_against(model)
    observations = generate_object_observations(
        model,
        catalog,
        _parse_assignment(args.assignment),
        dt=args.dt,
        duration=args.duration,
        frames=args.frames,
        seed=args.seed,
    )
    write_observations(args.out / args.name, observations, catalog)
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "identify": cmd_identify,
    "synthesize": cmd_synthesize,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except HriException as e:
        logger.error("command_failed", command=args.command, error=e.message, details=e.details)
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
