"""
Command line front-end.

    conformal-flow green --config run.json      solve and store the Green's function
    conformal-flow trace --config run.json --start 0.5,0
    conformal-flow map   --config run.json      map the configured grid
    conformal-flow check --config run.json      scans, metric classes, property suites
    conformal-flow check --fixture annulus      negative control, exits 4

Exit codes: 0 ok, 1 malformed input, 2 solver failure, 3 mapping failure,
4 failed check. Summaries go to stdout, logging to stderr.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .analysis import (
    critical_point_scan,
    lemma1_equivalence_suite,
    lemma2_equivalence_suite,
    lemma3_suite,
    max_dilatation,
    metric_report,
)
from .config import RunConfig
from .constants import DEFAULT_SEED, ExitCode, MapClass
from .exceptions import (
    ConfigurationError,
    ConformalFlowError,
    ConvergenceError,
    DomainError,
    TraceError,
)
from .fixtures import AnnulusField
from .flow import trace_forward, trace_to_pole
from .geometry import DomainSpec
from .green import GreenField, solve
from .interfaces import BaseField
from .io import (
    format_float,
    load_domain,
    load_field,
    save_field,
    write_grid_csv,
    write_report_json,
    write_trace_csv,
)
from .mapping import filter_grid, grid_for, injectivity_audit, map_grid, map_point
from .models import FlowTrace

logger = logging.getLogger(__name__)

FLUX_TOLERANCE = 1e-5
MAP_FAILURE_FRACTION = 0.01


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    if args.out is not None:
        cfg.output_dir = args.out
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigurationError(f"--jobs must be at least 1, got {args.jobs}")
        cfg.jobs = args.jobs
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigurationError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        cfg.seed = args.seed
    return cfg


def _domain(cfg: RunConfig) -> DomainSpec:
    if isinstance(cfg.domain, str):
        return load_domain(cfg.resolve(cfg.domain))
    return DomainSpec.from_dict(cfg.domain)


def _validated_pole(cfg: RunConfig, spec: DomainSpec) -> np.ndarray:
    pole = np.asarray(cfg.pole, dtype=float)
    if pole.shape != (spec.dim,) or not spec.contains(pole):
        raise DomainError(f"pole {cfg.pole} is not interior to the {spec.kind.value} domain")
    return pole


def _field(cfg: RunConfig) -> GreenField:
    """Stored field when configured, otherwise a fresh solve."""
    if cfg.field_file is not None:
        field = load_field(cfg.resolve(cfg.field_file))
        logger.info("Loaded %s field from %s", field.backend.value, cfg.field_file)
        return field
    spec = _domain(cfg)
    return solve(spec, _validated_pole(cfg, spec), cfg.solver)


def _output_dir(cfg: RunConfig) -> Path:
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_green(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    spec = _domain(cfg)
    try:
        pole = _validated_pole(cfg, spec)
        field = solve(spec, pole, cfg.solver)
    except ConvergenceError as exc:
        print(f"solver failed: {exc}")
        print(f"boundary_residual={format_float(exc.residual)}")
        return ExitCode.SOLVER_FAILURE
    except DomainError as exc:
        print(f"solver failed: {exc}")
        return ExitCode.SOLVER_FAILURE

    nodes = field.collocation or cfg.solver.collocation_for(spec.dim)
    residual = field.boundary_residual_at(4 * nodes)
    flux = field.boundary_flux_total()
    path = save_field(field, _output_dir(cfg) / "field.json")
    print(f"backend={field.backend.value}")
    print(f"boundary_residual={format_float(residual)}")
    print(f"flux={format_float(flux)}")
    print(f"field={path}")
    if residual > cfg.solver.tolerance or abs(flux + 1.0) > FLUX_TOLERANCE:
        logger.error("Field rejected: residual %.3e, flux %.12f", residual, flux)
        return ExitCode.SOLVER_FAILURE
    return ExitCode.OK


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigurationError(f"--start expects comma separated coordinates, got {text!r}")


def cmd_trace(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    start = _parse_point(args.start)
    try:
        field = _field(cfg)
    except (ConvergenceError, DomainError) as exc:
        print(f"solver failed: {exc}")
        return ExitCode.SOLVER_FAILURE
    if start.shape != (field.dim,):
        raise ConfigurationError(f"--start needs {field.dim} coordinates")
    try:
        backward = trace_to_pole(field, start, cfg.flow)
        forward = trace_forward(field, start, cfg.flow)
    except (TraceError, DomainError) as exc:
        print(f"trace failed: {exc}")
        return ExitCode.MAP_FAILURE
    trace = FlowTrace(
        dim=field.dim,
        t=np.concatenate([backward.t, forward.t[1:]]),
        x=np.concatenate([backward.x, forward.x[1:]]),
        direction=backward.direction,
        steps=backward.steps + forward.steps,
    )
    path = write_trace_csv(trace, field, _output_dir(cfg) / "trace.csv")
    print(f"samples={len(trace.t)}")
    print("direction=" + ",".join(format_float(v) for v in trace.direction))
    drift = max(backward.max_level_residual, forward.max_level_residual)
    print(f"max_level_residual={format_float(drift)}")
    print(f"trace={path}")
    return ExitCode.OK


def cmd_map(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    try:
        field = _field(cfg)
    except (ConvergenceError, DomainError) as exc:
        print(f"solver failed: {exc}")
        return ExitCode.SOLVER_FAILURE
    points = filter_grid(field.spec, grid_for(field.spec, cfg.grid), field.pole)
    results = map_grid(field, points, cfg.flow, jobs=cfg.jobs)
    path = write_grid_csv(results, field.dim, _output_dir(cfg) / "grid.csv")
    failures = sum(1 for r in results if not r.ok)
    audit = injectivity_audit(results)
    print(f"points={len(results)}")
    print(f"failed={failures}")
    print(f"injectivity_min_ratio={format_float(audit.min_ratio)}")
    print(f"injectivity_flags={len(audit.flags)}")
    print(f"grid={path}")
    if results and failures > MAP_FAILURE_FRACTION * len(results):
        logger.error("%d of %d points failed to map", failures, len(results))
        return ExitCode.MAP_FAILURE
    return ExitCode.OK


def _subsample(points: np.ndarray, limit: int) -> np.ndarray:
    if len(points) <= limit:
        return points
    return points[np.linspace(0, len(points) - 1, limit).round().astype(int)]


def _metric_section(field: GreenField, cfg: RunConfig) -> Dict[str, Any]:
    points = filter_grid(
        field.spec,
        grid_for(field.spec, cfg.grid),
        field.pole,
        cfg.grid.pole_exclusion,
        cfg.grid.boundary_clearance,
    )
    points = _subsample(points, cfg.check.metric_points)
    expected = [MapClass.CONFORMAL.value]
    if field.dim == 3:
        expected.append(MapClass.WEAK_CONFORMAL.value)

    def image(p: np.ndarray) -> np.ndarray:
        return map_point(field, p, cfg.flow).image

    records: List[Dict[str, Any]] = []
    reports = []
    failed = 0
    for p in points:
        try:
            report = metric_report(image, p, tol=cfg.check.residual_tol)
        except ConformalFlowError as exc:
            failed += 1
            records.append({"point": p.tolist(), "error": f"{type(exc).__name__}: {exc}"})
            continue
        reports.append(report)
        records.append(
            {
                "point": report.point,
                "eigenvalues": report.eigenvalues,
                "conformal_residual": report.conformal_residual,
                "weak_conformal_residual": report.weak_conformal_residual,
                "class": report.map_class,
                "dilatation": report.dilatation,
            }
        )
    hits = sum(1 for r in reports if r.map_class in expected)
    fraction = hits / len(points) if len(points) else 1.0
    return {
        "expected": expected,
        "points": records,
        "failed": failed,
        "class_fraction": fraction,
        "max_dilatation": max_dilatation(reports),
        "passed": fraction >= cfg.check.class_fraction,
    }


def _suite_section(dim: int, cfg: RunConfig) -> Dict[str, Any]:
    suites = [
        lemma1_equivalence_suite(seed=cfg.seed),
        lemma2_equivalence_suite(seed=cfg.seed),
        lemma3_suite(
            trials=cfg.check.lemma3_trials,
            dim=dim,
            n_samples=cfg.check.lemma3_samples,
            seed=cfg.seed,
        ),
    ]
    return {s.name: {**s.to_dict(), "passed": s.passed} for s in suites}


def _scan_section(field: BaseField, grid: np.ndarray, cfg: RunConfig) -> Dict[str, Any]:
    scan = critical_point_scan(field, grid, cfg.grid.pole_exclusion, refine=True)
    return {
        **scan.to_dict(),
        "threshold": cfg.check.min_gradient,
        "passed": scan.min_grad >= cfg.check.min_gradient,
    }


def cmd_check(args: argparse.Namespace) -> int:
    if args.fixture is not None:
        if args.config is not None:
            cfg = _load_config(args)
        else:
            cfg = RunConfig(domain={}, pole=[1.5, 0.0], output_dir=args.out or "out")
            cfg.seed = DEFAULT_SEED if args.seed is None else args.seed
        annulus = AnnulusField(pole=cfg.pole)
        field: BaseField = annulus
        grid = annulus.grid()
        report: Dict[str, Any] = {"fixture": args.fixture, "seed": cfg.seed}
    else:
        if args.config is None:
            raise ConfigurationError("check needs --config or --fixture")
        cfg = _load_config(args)
        try:
            field = _field(cfg)
        except (ConvergenceError, DomainError) as exc:
            print(f"solver failed: {exc}")
            return ExitCode.SOLVER_FAILURE
        grid = grid_for(field.spec, cfg.grid)
        report = {"domain": field.spec.to_dict(), "seed": cfg.seed}

    report["scan"] = _scan_section(field, grid, cfg)
    if isinstance(field, GreenField):
        report["metrics"] = _metric_section(field, cfg)
    report["suites"] = _suite_section(field.dim, cfg)

    failing = [
        name for name in ("scan", "metrics") if name in report and not report[name]["passed"]
    ]
    failing += [name for name, suite in report["suites"].items() if not suite["passed"]]
    report["failing"] = failing
    report["passed"] = not failing
    path = write_report_json(report, _output_dir(cfg) / "check.json")
    print(f"min_grad={format_float(report['scan']['min_grad'])}")
    if "metrics" in report:
        print(f"class_fraction={format_float(report['metrics']['class_fraction'])}")
        print(f"max_dilatation={format_float(report['metrics']['max_dilatation'])}")
    print(f"report={path}")
    if failing:
        print("failing=" + ",".join(failing))
        return ExitCode.CHECK_FAILURE
    return ExitCode.OK


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", required=config_required, help="Path to a run config JSON.")
    parser.add_argument("--out", default=None, help="Output directory (overrides the config).")
    parser.add_argument("--jobs", type=int, default=None, help="Worker processes for grid mapping.")
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized checks.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conformal-flow",
        description="Gradient-flow conformal maps onto the unit disk and ball.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="Increase log verbosity (-v, -vv)."
    )
    subparsers = parser.add_subparsers(dest="cmd", required=True)

    sp = subparsers.add_parser("green", help="Solve the Green's function and store it.")
    _add_common(sp)
    sp.set_defaults(func=cmd_green)

    sp = subparsers.add_parser("trace", help="Dump the flow trajectory through a point.")
    _add_common(sp)
    sp.add_argument("--start", required=True, help="Start point, e.g. 0.5,0.")
    sp.set_defaults(func=cmd_trace)

    sp = subparsers.add_parser("map", help="Map the configured grid.")
    _add_common(sp)
    sp.set_defaults(func=cmd_map)

    sp = subparsers.add_parser("check", help="Run critical-point scan, metric classes and suites.")
    _add_common(sp, config_required=False)
    sp.add_argument(
        "--fixture", choices=["annulus"], default=None, help="Check a bundled fixture field."
    )
    sp.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors would otherwise exit 2, which is reserved for solver failures
        return int(ExitCode.OK) if exc.code in (0, None) else int(ExitCode.PARSE_ERROR)
    _configure_logging(args.verbose)
    try:
        return int(args.func(args))
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return int(ExitCode.PARSE_ERROR)
    except ConformalFlowError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return int(ExitCode.SOLVER_FAILURE)
