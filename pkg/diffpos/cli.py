"""Command-line entry point.

Usage::

    diffpos census --config configs/bistable_census.yaml --seed 42 --out runs/bistable
    diffpos report --out runs/bistable --plot

Every subcommand writes ``<subcommand>.json`` into the output directory;
``census`` also writes ``census.csv``. Exit codes follow :class:`ExitCode`.
"""
import argparse
import io
import logging
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd  # type: ignore

from .census import build_foliation, countability_probe, measure_estimate, run_line_census
from .config import RunConfig, load_config, parse_resolution, point_coords
from .constants import DPVerdict, ExitCode, Subcommand
from .dynamics import EquilibriumSet, SystemSpec, check_dp, find_equilibria
from .evaluation import PropertyReport, create_property_table
from .exceptions import ArgumentError, ConfigError, DomainError, NumericError
from .files import ensure_output_dir, join, list_report_files, read_text, write_text
from .geometry import Point
from .limits import dichotomy_check, intersection_check, omega_estimate, \
    omega_invariance_residual, run_property_suite
from .order import compare
from .plotting import plot_census_grid, plot_cluster_histogram
from .serialization import dump_report, load_report, write_csv
from .tracking import log_run
from .version import __version__

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
INVARIANCE_TIMES = (0.5, 1.0, 2.0)

HandlerResult = Tuple[ExitCode, Dict[str, Any]]


def _point(sys: SystemSpec, config: RunConfig, key: str, default: Optional[np.ndarray] = None
           ) -> Point:
    values = getattr(config.points, key)
    if values is None and default is not None:
        return Point(default, sys.manifold)
    return Point(point_coords(values, key), sys.manifold)


def _centre(config: RunConfig, sys: SystemSpec) -> np.ndarray:
    region = config.region_for(sys)
    return region.mean(axis=1)


def _equilibria_payload(equilibria: EquilibriumSet) -> List[Dict[str, Any]]:
    return [{"index": k, "point": e.point.coords.tolist(), "stability": e.stability.value}
            for k, e in enumerate(equilibria)]


def _failed(reports: Mapping[str, PropertyReport]) -> ExitCode:
    return ExitCode.PROPERTY_FAILURE if any(r.failed for r in reports.values()) else ExitCode.OK


def _verify_dp(config: RunConfig, sys: SystemSpec) -> HandlerResult:
    x0 = _point(sys, config, "x", _centre(config, sys))
    report = check_dp(sys, x0, config.dp.t_grid, config.dp.n_rays, config.seed,
                      config.integrator.to_options())
    if report.verdict is DPVerdict.VIOLATED:
        logger.warning("Differential positivity violated at %s: %s", report.x0, report.witness)
        return ExitCode.PROPERTY_FAILURE, {"report": report}
    return ExitCode.OK, {"report": report}


def _order(config: RunConfig, sys: SystemSpec) -> HandlerResult:
    x = _point(sys, config, "x")
    y = _point(sys, config, "y")
    verdict = compare(sys, x, y, config.order.to_budget())
    logger.info("Order of %s and %s: %s (%s oracle).", x.coords.tolist(), y.coords.tolist(),
                verdict.relation.value, verdict.oracle.value)
    return ExitCode.OK, {"x": x, "y": y, "verdict": verdict}


def _omega(config: RunConfig, sys: SystemSpec) -> HandlerResult:
    x = _point(sys, config, "x", _centre(config, sys))
    opts = config.integrator.to_options()
    equilibria = find_equilibria(sys, config.region_for(sys), seed=config.seed)
    estimate = omega_estimate(sys, x, config.omega.to_budget(), equilibria, opts)
    residuals = {}
    if estimate.decided:
        residuals = {str(s): omega_invariance_residual(sys, estimate, s, opts)
                     for s in INVARIANCE_TIMES}
    return ExitCode.OK, {"x": x, "estimate": estimate, "invariance_residuals": residuals,
                         "equilibria": _equilibria_payload(equilibria)}


def _dichotomy(config: RunConfig, sys: SystemSpec) -> HandlerResult:
    x = _point(sys, config, "x")
    y = _point(sys, config, "y")
    opts = config.integrator.to_options()
    budget = config.omega.to_budget()
    order_budget = config.order.to_budget()
    equilibria = find_equilibria(sys, config.region_for(sys), seed=config.seed)
    omega_x = omega_estimate(sys, x, budget, equilibria, opts)
    omega_y = omega_estimate(sys, y, budget, equilibria, opts)
    reports = {"dichotomy": dichotomy_check(sys, x, y, budget, opts, order_budget, omega_x,
                                            omega_y),
               "intersection": intersection_check(sys, x, y, budget, opts, order_budget,
                                                  omega_x, omega_y)}
    return _failed(reports), {"x": x, "y": y, "omega_x": omega_x, "omega_y": omega_y,
                              "properties": reports}


def _suite(config: RunConfig, sys: SystemSpec) -> HandlerResult:
    reports = run_property_suite(sys, config.region_for(sys), config.suite.properties,
                                 config.suite.n_pairs, config.suite.t_grid, config.seed,
                                 config.integrator.to_options(), config.omega.to_budget(),
                                 config.order.to_budget(), config.threads)
    logger.info("Suite summary:\n%s", create_property_table(reports).to_string())
    return _failed(reports), {"system": sys.name, "properties": reports}


def _census(config: RunConfig, sys: SystemSpec) -> Tuple[ExitCode, Dict[str, Any], pd.DataFrame]:
    opts = config.integrator.to_options()
    budget = config.omega.to_budget()
    region = config.region_for(sys)
    x = _point(sys, config, "x") if config.points.x is not None else None
    foliation = build_foliation(sys, x, region, (config.census.n_lines, config.census.n_points),
                                seed=config.seed)
    equilibria = find_equilibria(sys, foliation.region, seed=config.seed)
    censuses = run_line_census(sys, foliation, budget, config.seed, opts, config.threads,
                               equilibria)
    report = measure_estimate(censuses, foliation, sys, budget, opts, config.seed,
                              config.census.refinement_levels, config.census.refinement_stride,
                              config.census.mc_samples, config.threads, equilibria)
    countability = countability_probe(censuses, report.refined_censuses.get(2), budget.eps_conv)
    violations = sum(c.order_violations for c in censuses)
    if violations:
        logger.warning("%d consecutive line samples were not strictly ordered.", violations)
    if report.estimators_agree is False:
        logger.warning("Fubini (%.6g) and Monte-Carlo (%.6g) intervals do not overlap.",
                       report.fubini_estimate, report.mc_estimate)
    code = ExitCode.OK if violations == 0 and countability.passed else ExitCode.PROPERTY_FAILURE
    payload = {"census": report, "countability": countability, "order_violations": violations}
    return code, payload, report.to_frame()


def _summary_lines(kind: str, payload: Mapping[str, Any]) -> List[str]:
    if kind == Subcommand.VERIFY_DP.value:
        report = payload["report"]
        return [f"verdict: {report['verdict']}", f"min margin: {report['min_margin']}",
                f"witness: {report['witness']}"]
    if kind == Subcommand.ORDER.value:
        verdict = payload["verdict"]
        return [f"relation: {verdict['relation']} ({verdict['oracle']} oracle)",
                f"equality: {verdict['equality']}", f"min margin: {verdict['min_margin']}"]
    if kind == Subcommand.OMEGA.value:
        estimate = payload["estimate"]
        return [f"class: {estimate['class']}", f"equilibrium: {estimate['equilibrium']}",
                f"period: {estimate['period']}",
                f"invariance residuals: {payload['invariance_residuals']}"]
    if kind in (Subcommand.SUITE.value, Subcommand.DICHOTOMY.value):
        table = pd.DataFrame.from_dict(payload["properties"], orient="index")
        columns = [c for c in ("tested", "passed", "failed", "undecided", "decided_fraction")
                   if c in table]
        return table[columns].to_string().splitlines()
    if kind == Subcommand.CENSUS.value:
        census = payload["census"]
        lines = [f"lines x points: {census['n_lines']} x {census['foliation']['n_points']}",
                 f"non-convergent fraction: {census['non_convergent_fraction']}",
                 f"undecided fraction: {census['undecided_fraction']}",
                 f"Fubini: {census['fubini']['estimate']} +- {census['fubini']['sigma']} "
                 f"(resolution bound {census['fubini']['resolution_bound']})",
                 f"Monte-Carlo: {census['monte_carlo']['estimate']} "
                 f"{census['monte_carlo']['interval']}",
                 f"estimators agree: {census['estimators_agree']}",
                 f"refinement ratio: {census['refinement_ratio']}",
                 f"max clusters per line: {payload['countability']['max_count']}",
                 f"countability passed: {payload['countability']['passed']}"]
        return lines
    return [f"unknown report kind {kind!r}"]


def render_summary(documents: Sequence[Tuple[str, Mapping[str, Any]]]) -> str:
    """Human-readable summary of prior JSON reports."""
    out: List[str] = []
    for path, document in documents:
        out.append(f"== {document['kind']} ({path}) ==")
        out.extend(_summary_lines(document["kind"], document["payload"]))
        out.append("")
    return "\n".join(out)


def _report(output_dir: str, plot: bool) -> Tuple[ExitCode, List[str]]:
    paths = list(list_report_files(output_dir))
    documents = [(path, load_report(path)) for path in paths]
    if not documents:
        raise ConfigError(f"No JSON reports found in {output_dir!r}.")
    summary = render_summary(documents)
    print(summary)
    artifacts = [join(output_dir, "summary.txt")]
    write_text(artifacts[0], summary)
    census = [document for _, document in documents if document["kind"] == "census"]
    if plot and census:
        grid = pd.read_csv(io.StringIO(read_text(join(output_dir, "census.csv"))))
        if "x1" in grid and "x2" not in grid:
            artifacts.append(join(output_dir, "census_grid.png"))
            plot_census_grid(grid, output_path=artifacts[-1])
        artifacts.append(join(output_dir, "cluster_counts.png"))
        plot_cluster_histogram(census[0]["payload"]["census"]["cluster_counts"],
                               output_path=artifacts[-1])
    return ExitCode.OK, artifacts


_HANDLERS = {Subcommand.VERIFY_DP: _verify_dp, Subcommand.ORDER: _order,
             Subcommand.OMEGA: _omega, Subcommand.DICHOTOMY: _dichotomy,
             Subcommand.SUITE: _suite}


def run(subcommand: Subcommand, config: Optional[RunConfig] = None, plot: bool = False,
        output_dir: Optional[str] = None) -> Tuple[ExitCode, List[str]]:
    """Run one subcommand and write its artifacts.

    Args:
        subcommand (:obj:`Subcommand`): what to run.
        config (:obj:`RunConfig`, optional): validated configuration; only
          ``report`` runs without one.
        plot (bool): render plots (``report`` only).
        output_dir (str, optional): overrides ``config.output_dir``.

    Returns:
        tuple: exit code and the written artifact paths.

    Raises:
        ConfigError: for a missing configuration or unwritable output directory.
    """
    output_dir = output_dir or (config.output_dir if config is not None else None)
    if output_dir is None:
        raise ConfigError("output_dir: required (config key or --out).")
    if subcommand is Subcommand.REPORT:
        return _report(output_dir, plot)
    if config is None:
        raise ConfigError(f"{subcommand.value} needs --config.")
    ensure_output_dir(output_dir)
    sys = config.build_system()
    logger.info("Running %s on %s (seed %d).", subcommand.value, sys.name, config.seed)
    artifacts = []
    if subcommand is Subcommand.CENSUS:
        code, payload, grid = _census(config, sys)
        artifacts.append(write_csv(join(output_dir, "census.csv"), grid))
    else:
        code, payload = _HANDLERS[subcommand](config, sys)
    json_path = join(output_dir, f"{subcommand.value}.json")
    artifacts.insert(0, dump_report(json_path, subcommand.value, payload, config))
    if config.tracking.uri:
        document = load_report(json_path)
        run_id = log_run(config.tracking.uri, config.tracking.experiment,
                         f"{subcommand.value}-{sys.name}", document["payload"],
                         {"system": sys.name, "seed": config.seed, "version": __version__})
        logger.info("Logged metrics to mlflow run %s.", run_id)
    return code, artifacts


def _parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="diffpos",
        description="Verify differential positivity and run basin censuses of ODE systems.")
    parser.add_argument("subcommand", choices=[s.value for s in Subcommand])
    parser.add_argument("--config", help="YAML run configuration (local or s3).")
    parser.add_argument("--seed", type=int, help="global seed, overrides the config.")
    parser.add_argument("--out", dest="output_dir", help="output directory (local or s3).")
    parser.add_argument("--threads", type=int, help="joblib workers, -1 for all cores.")
    parser.add_argument("--resolution", help="census resolution <lines>x<points>.")
    parser.add_argument("--budget-T", dest="budget_t", type=float,
                        help="ω-estimation time budget.")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--plot", action="store_true", help="render plots (report only).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    subcommand = Subcommand(args.subcommand)
    try:
        config = None
        if args.config is not None:
            resolution = parse_resolution(args.resolution) if args.resolution else None
            config = load_config(args.config).with_overrides(
                args.seed, args.output_dir, args.threads, resolution, args.budget_t)
        code, artifacts = run(subcommand, config, args.plot, args.output_dir)
    except (ConfigError, ArgumentError) as error:
        logger.error("Configuration error: %s", error)
        return int(ExitCode.CONFIG_ERROR)
    except (DomainError, NumericError) as error:
        logger.error("Numeric error: %s", error)
        return int(ExitCode.NUMERIC_ERROR)
    for path in artifacts:
        logger.info("Artifact: %s", path)
    return int(code)
