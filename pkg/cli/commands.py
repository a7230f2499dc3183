"""
Command-line surface: ingest, list, compare, fit, project, emit.

Data goes to --out or standard output; reports go to standard output
unless standard output already carries data, logs go to standard error.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import logging
import sys
from pathlib import Path
from typing import Iterator, List, Optional, TextIO

from pydantic import ValidationError as SchemaValidationError

from cli import output
from config.settings import Settings
from core.ingestion import DatasetKey, DatasetRegistry, Severity, compare_sources, read_text, screen_csv
from core.models import (
    FittedBy,
    GeneralizedModel,
    LaggedLinearModel,
    Model,
    PhillipsModel,
    Target,
    evaluate,
    fit_generalized,
    fit_lagged,
    fit_phillips,
    regime_residuals,
)
from core.presets import PresetManager
from core.projection import build_scenario, forecast, parse_scenario, resolve_model
from core.series import change_rate, cumulative, window
from models.schemas import RunConfig
from utils.exceptions import ConfigurationError, ErrorContext, LfmKitError, SpecificationError
from utils.logger import setup_logger

logger = logging.getLogger("lfmkit.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

DEFAULT_INFLATION = "cpi_inflation:oecd"
DEFAULT_UNEMPLOYMENT = "unemployment:oecd"
DEFAULT_LABOR_FORCE = "labor_force:nac"

RELATIONS = ("phillips", "inflation-lf", "unemployment-lf", "generalized")


@contextlib.contextmanager
def _destination(path: Optional[Path]) -> Iterator[TextIO]:
    """Buffer output and write it in one piece, so failures leave no partial file."""
    buffer = io.StringIO()
    yield buffer
    if path is None:
        sys.stdout.write(buffer.getvalue())
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(buffer.getvalue())


def _run_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    try:
        return RunConfig(
            registry=args.registry or settings.REGISTRY_PATH,
            window=getattr(args, "window", None) or settings.FIT_WINDOW,
            max_lag=args.max_lag if getattr(args, "max_lag", None) is not None else settings.max_lag,
            estimator=getattr(args, "estimator", None),
            preset=getattr(args, "preset", None),
            output_format=args.format,
            out=getattr(args, "out", None),
            overwrite=getattr(args, "overwrite", False),
        )
    except SchemaValidationError as e:
        raise ConfigurationError(
            f"Invalid arguments: {e.errors()[0]['msg']}",
            error_code="INVALID_SETTINGS",
            details={"errors": [err["msg"] for err in e.errors()]}
        )


def _registry(config: RunConfig, settings: Settings) -> DatasetRegistry:
    return DatasetRegistry(config.registry, settings.rate_band, settings.jump_threshold)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace, settings: Settings) -> int:
    config = _run_config(args, settings)
    key = DatasetKey.parse(args.key)
    path = Path(args.file)
    if not path.exists():
        raise ConfigurationError(f"Input file not found: {path}", error_code="INVALID_SETTINGS")

    series, findings = screen_csv(io.StringIO(read_text(path)), key, args.unit, args.label,
                                 settings.rate_band, settings.jump_threshold)
    sys.stdout.write(output.findings_report(findings))

    if series is None:
        errors = sum(1 for f in findings if f.severity is Severity.ERROR)
        print(f"error: {path} has {errors} error finding(s); {key} not registered", file=sys.stderr)
        return EXIT_FAILURE

    _registry(config, settings).register(key, series, overwrite=config.overwrite)
    print(f"registered {key}: {series.start_year}-{series.end_year} ({len(series)} values)")
    return EXIT_OK


def cmd_list(args: argparse.Namespace, settings: Settings) -> int:
    config = _run_config(args, settings)
    registry = _registry(config, settings)
    for key in registry.keys():
        series = registry.get(key)
        print(f"{str(key):<24} {series.start_year}-{series.end_year}  {len(series):>4}  "
              f"{series.unit.value:<22} {series.label}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, settings: Settings) -> int:
    config = _run_config(args, settings)
    report = compare_sources(_registry(config, settings), DatasetKey.parse(args.key_a),
                             DatasetKey.parse(args.key_b), args.transform)
    sys.stdout.write(output.divergence_report(report))
    return EXIT_OK


def _fit_model(args: argparse.Namespace, config: RunConfig, registry: DatasetRegistry) -> tuple:
    """Returns (model, evaluation) for the requested relation."""
    relation = args.relation
    inflation = registry.get(DatasetKey.parse(args.inflation)) if relation != "unemployment-lf" else None
    unemployment = registry.get(DatasetKey.parse(args.unemployment)) if relation != "inflation-lf" else None
    labor_force = registry.get(DatasetKey.parse(args.labor_force)) if relation != "phillips" else None

    model: Model
    if config.preset:
        model = PresetManager().get_preset(config.preset)
        expected = {
            "phillips": PhillipsModel,
            "inflation-lf": LaggedLinearModel,
            "unemployment-lf": LaggedLinearModel,
            "generalized": GeneralizedModel,
        }[relation]
        if not isinstance(model, expected):
            raise SpecificationError(f"Preset {config.preset} is not a {relation} model",
                                     error_code="BAD_MODEL_SPEC")
    elif relation == "phillips":
        if config.estimator == "cumulative":
            raise SpecificationError("Phillips relation is fitted by OLS only", error_code="BAD_MODEL_SPEC")
        model = fit_phillips(inflation, unemployment, config.window, config.max_lag)
    elif relation == "generalized":
        if config.estimator == "ols":
            raise SpecificationError("Generalized relation is fitted by cumulative matching only",
                                     error_code="BAD_MODEL_SPEC")
        model = fit_generalized(inflation, labor_force, unemployment, config.window, args.cumulative_start)
    else:
        target = Target.INFLATION if relation == "inflation-lf" else Target.UNEMPLOYMENT
        observed = inflation if target is Target.INFLATION else unemployment
        model = fit_lagged(observed, labor_force, target, config.window, config.max_lag,
                           FittedBy(config.estimator or "ols"), cumulative_start=args.cumulative_start)

    observed = unemployment if relation in ("phillips", "unemployment-lf") else inflation
    evaluation = evaluate(model, inflation=inflation, labor_force=labor_force,
                          unemployment=unemployment, observed=observed, years=config.window)
    return model, evaluation


def cmd_fit(args: argparse.Namespace, settings: Settings) -> int:
    config = _run_config(args, settings)
    model, evaluation = _fit_model(args, config, _registry(config, settings))

    regimes = regime_residuals(evaluation, args.split_year) if args.split_year else None
    report = output.fit_report(model, evaluation, regimes, args.split_year)

    with _destination(config.out) as stream:
        output.write_model(model, stream, config.output_format)
    if args.report:
        with _destination(Path(args.report)) as stream:
            stream.write(report)
    elif config.out is not None:
        sys.stdout.write(report)
    else:
        sys.stderr.write(report)
    return EXIT_OK


def cmd_project(args: argparse.Namespace, settings: Settings) -> int:
    config = _run_config(args, settings)
    scenario_path = Path(args.scenario)
    if not scenario_path.exists():
        raise ConfigurationError(f"Scenario file not found: {scenario_path}", error_code="INVALID_SCENARIO")

    scenario_config = parse_scenario(scenario_path.read_text(encoding="utf-8"))
    overrides = {}
    # Command-line model paths are relative to the working directory
    for name in ("inflation_model", "unemployment_model"):
        reference = getattr(args, name)
        if reference:
            overrides[name] = reference if reference.startswith("preset:") else str(Path(reference).resolve())
    if args.participation_rate is not None:
        overrides.update(participation_rate=args.participation_rate, participation=None)
    if args.horizon:
        overrides["horizon"] = args.horizon
    if overrides:
        try:
            scenario_config = scenario_config.model_validate({**scenario_config.model_dump(), **overrides})
        except SchemaValidationError as e:
            raise ConfigurationError(f"Invalid scenario override: {e.errors()[0]['msg']}",
                                     error_code="INVALID_SCENARIO")

    scenario = build_scenario(
        scenario_config, _registry(config, settings), scenario_path.parent,
        default_horizon=settings.horizon, default_participation=settings.participation_rate,
    )
    bundle = forecast(scenario)

    with _destination(config.out) as stream:
        output.write_bundle(bundle, stream, config.output_format)
    report = output.projection_report(bundle)
    (sys.stdout if config.out is not None else sys.stderr).write(report)
    return EXIT_OK


def cmd_emit(args: argparse.Namespace, settings: Settings) -> int:
    config = _run_config(args, settings)

    with _destination(config.out) as stream:
        if args.dataset:
            series = _registry(config, settings).get(DatasetKey.parse(args.dataset))
            if args.window:
                series = window(series, *config.window)
            if args.transform == "change_rate":
                series = change_rate(series)
            elif args.transform == "cumulative":
                series = cumulative(series, args.from_year or series.start_year)
            output.write_series(series, stream, config.output_format)
        elif args.model or config.preset:
            if config.preset:
                model = PresetManager().get_preset(config.preset)
            else:
                model = resolve_model(args.model, Path.cwd())
            output.write_model(model, stream, config.output_format)
        else:
            columns = output.read_bundle(Path(args.bundle))
            if config.output_format == "json":
                output.write_json(columns, stream)
            else:
                output.write_table(columns, stream)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--registry", default=None,
                        help="Registry directory (default: $LFMKIT_REGISTRY or data/registry)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="Data output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfmkit",
        description="Labor force driven models of inflation and unemployment",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="Validate and register a year,value CSV file")
    _common(p)
    p.add_argument("file", help="Input CSV path")
    p.add_argument("--key", required=True, help="Dataset key variable:source")
    p.add_argument("--unit", choices=("fraction-per-year-rate", "persons", "index-level"), default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--overwrite", action="store_true", help="Replace an existing dataset")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("list", help="List registered datasets")
    _common(p)
    p.set_defaults(handler=cmd_list)

    p = sub.add_parser("compare", help="Divergence statistics of two datasets")
    _common(p)
    p.add_argument("key_a")
    p.add_argument("key_b")
    p.add_argument("--transform", choices=("levels", "change_rate"), default="levels")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("fit", help="Fit or evaluate a relation")
    _common(p)
    p.add_argument("relation", choices=RELATIONS)
    p.add_argument("--window", default=None, help="Fit window FIRST:LAST (default: $LFMKIT_FIT_WINDOW)")
    p.add_argument("--max-lag", type=int, default=None, dest="max_lag")
    p.add_argument("--estimator", choices=("ols", "cumulative"), default=None)
    p.add_argument("--preset", default=None, help="Evaluate a preset instead of fitting")
    p.add_argument("--cumulative-start", type=int, default=None, dest="cumulative_start")
    p.add_argument("--split-year", type=int, default=None, dest="split_year",
                   help="Report residual stdev before and after this year")
    p.add_argument("--inflation", default=DEFAULT_INFLATION)
    p.add_argument("--unemployment", default=DEFAULT_UNEMPLOYMENT)
    p.add_argument("--labor-force", default=DEFAULT_LABOR_FORCE, dest="labor_force")
    p.add_argument("--out", type=Path, default=None, help="Model file path")
    p.add_argument("--report", default=None, help="Fit report path")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("project", help="Forecast labor force, inflation and unemployment")
    _common(p)
    p.add_argument("scenario", help="Scenario file (key=value)")
    p.add_argument("--inflation-model", default=None, dest="inflation_model",
                   help="preset:NAME or model file")
    p.add_argument("--unemployment-model", default=None, dest="unemployment_model",
                   help="preset:NAME or model file")
    p.add_argument("--participation-rate", type=float, default=None, dest="participation_rate")
    p.add_argument("--horizon", default=None, help="FIRST:LAST")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(handler=cmd_project)

    p = sub.add_parser("emit", help="Write a dataset, model or bundle as data")
    _common(p)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--dataset", default=None, help="Dataset key variable:source")
    source.add_argument("--model", default=None, help="Model file")
    source.add_argument("--preset", default=None)
    source.add_argument("--bundle", default=None, help="Bundle file written by project")
    p.add_argument("--transform", choices=("levels", "change_rate", "cumulative"), default="levels")
    p.add_argument("--from-year", type=int, default=None, dest="from_year")
    p.add_argument("--window", default=None, help="Restrict to FIRST:LAST")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(handler=cmd_emit)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    settings = Settings()
    setup_logger("lfmkit", settings.LOG_LEVEL, settings.LOG_FORMAT)

    problems = settings.validate()
    if problems:
        for problem in problems:
            print(f"error: configuration: {problem}", file=sys.stderr)
        return EXIT_CONFIG

    args = build_parser().parse_args(argv)
    try:
        with ErrorContext(args.command, logger):
            return args.handler(args, settings)
    except ConfigurationError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except LfmKitError as e:
        logger.debug(f"{args.command} failed: {e.to_dict()}")
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_FAILURE
