#!/usr/bin/env python3
"""
phaseprobe CLI - Main command-line interface

Batch front end for every figure- and table-producing computation. Each
subcommand merges defaults, an optional --config file and explicit flags,
validates everything before touching the filesystem, writes CSV tables with a
provenance header and a JSON run summary, and exits with

    0  success
    1  a computation failed
    2  an invariant violation (bound or variance check) was detected
"""

import argparse
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from phaseprobe import __version__
from phaseprobe.bayes import (
    PhaseDistribution,
    QuadratureSpec,
    apv_monte_carlo,
    apv_report,
    bound_tolerance,
    gaussian_prior,
)
from phaseprobe.errors import OptimizationError, PhaseProbeError
from phaseprobe.fisher import (
    average_fisher,
    fisher_report,
    local_hus_probe,
    local_lus_probe,
    lus_asymptotic_angle,
    optimal_local_split,
    quantum_van_trees,
    van_trees_bound,
)
from phaseprobe.gaussian import VACUUM, ProbeState, squeeze_from_energy
from phaseprobe.optimizer import (
    FamilyKind,
    FamilySpec,
    find_crossover,
    hus_probe,
    lus_probe,
    optimize_best,
    optimize_family,
    optimize_full,
    sweep,
    sweep_fixed_split,
)
from phaseprobe.output import build_header, summary_path, write_summary, write_table
from phaseprobe.rng import SeededStream
from phaseprobe.services.config_service import COMMANDS, ConfigService, RunConfig
from phaseprobe.simulator import (
    ProbeSelector,
    StrategySpec,
    StrategyTier,
    build_schedule,
    run_ensemble,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
EXIT_FAILED = 1
EXIT_VIOLATION = 2

# APV may exceed the prior variance by this much before it counts as a violation
VARIANCE_SLACK = 1e-9


def print_banner() -> None:
    """Print the phaseprobe banner"""
    banner = r"""
        _                                       _
   _ __ | |__   __ _ ___  ___ _ __  _ __ ___ | |__   ___
  | '_ \| '_ \ / _` / __|/ _ \ '_ \| '__/ _ \| '_ \ / _ \
  | |_) | | | | (_| \__ \  __/ |_) | | | (_) | |_) |  __/
  | .__/|_| |_|\__,_|___/\___| .__/|_|  \___/|_.__/ \___|
  |_|                        |_|

    Version: {version}
    Optimal Gaussian probes for homodyne phase estimation
    """.format(version=__version__)
    print(banner)


@dataclass
class RunReport:
    """What a subcommand produced and what went wrong"""
    outputs: List[Path] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)


class TableWriter:
    """Writes the tables of one run under a shared header"""

    def __init__(self, config: RunConfig, report: RunReport):
        self.config = config
        self.report = report
        self.header = build_header(config.command, config.to_dict(),
                                   summary_path(config.output_dir, config.stem).name)

    def write(self, frame: pd.DataFrame, suffix: str = "") -> Path:
        path = self.config.output_dir / f"{self.config.stem}{suffix}.csv"
        write_table(path, frame, self.header)
        self.report.outputs.append(path)
        logger.info(f"Wrote {path}")
        return path


def _quadrature(config: RunConfig) -> QuadratureSpec:
    return QuadratureSpec(n_points=config['q_points'], n_sigmas=config['q_sigmas'])


def _prior(config: RunConfig, sigma2: float) -> PhaseDistribution:
    return gaussian_prior(config['prior_mean'], sigma2, config['n_grid'],
                          allow_wide=config['allow_wide_prior'])


def _families(choice: str) -> Tuple[str, ...]:
    if choice == 'best':
        return (FamilyKind.HUS.value, FamilyKind.LUS.value)
    return (choice,)


def _check_bounds(report: RunReport, label: str, apv_value: float, prior_variance: float,
                  tolerance: float, bounds: Dict[str, float]) -> bool:
    """Record violations of APV <= prior variance and APV >= every bound"""
    violated = False
    if apv_value > prior_variance + VARIANCE_SLACK:
        report.violations.append(f"{label}: APV {apv_value:.10g} exceeds prior variance "
                                 f"{prior_variance:.10g}")
        violated = True
    for name, bound in bounds.items():
        if bound is not None and not math.isnan(bound) and apv_value < bound * (1.0 - tolerance):
            report.violations.append(f"{label}: APV {apv_value:.10g} below {name} {bound:.10g}")
            violated = True
    if violated:
        logger.error(report.violations[-1])
    return violated


def cmd_fi(config: RunConfig) -> RunReport:
    """FI of the FI-optimal HUS and LUS probes against theta_hat - theta"""
    report = RunReport()
    E, theta_hat = config['E'], config['theta_hat']
    n_points = int(round((config['diff_max'] - config['diff_min']) / config['step'])) + 1
    diffs = np.linspace(config['diff_min'], config['diff_max'], n_points)
    thetas = theta_hat - diffs

    hus = local_hus_probe(E, theta_hat)
    lus = local_lus_probe(E, theta_hat, mirrored=config['mirrored_lus'])
    frame = pd.DataFrame({"theta_diff": diffs, "theta": thetas})
    for name, probe in (("hus", hus), ("lus", lus)):
        reports = [fisher_report(probe, theta) for theta in thetas]
        frame[f"fi_{name}_optimal"] = [item.fi for item in reports]
        inconsistent = sum(not item.consistent for item in reports)
        if inconsistent:
            report.violations.append(f"{name.upper()}: FI exceeds QFI at {inconsistent} points")

    report.details["fi_lus_zero"] = -0.5 * lus_asymptotic_angle(E)
    TableWriter(config, report).write(frame)
    return report


def cmd_qfi(config: RunConfig) -> RunReport:
    """QFI of one probe, with the homodyne FI at theta"""
    report = RunReport()
    alpha_mag = config['alpha_mag']
    r = squeeze_from_energy(config['E'], alpha_mag) if config['E'] is not None else config['r']
    probe = ProbeState(alpha_mag=alpha_mag, tau=config['tau'], r=r, phi=config['phi'])
    result = fisher_report(probe, config['theta'])
    if not result.consistent:
        report.violations.append(f"FI {result.fi:.12g} exceeds QFI {result.qfi:.12g}")
    frame = pd.DataFrame([{**probe.to_dict(), "energy": probe.energy, "theta": result.theta,
                           "qfi": result.qfi, "fi": result.fi, "saturation": result.saturation}])
    TableWriter(config, report).write(frame)
    return report


def _apv_probe(config: RunConfig) -> ProbeState:
    E, theta_hat = config['E'], config['prior_mean']
    if config['probe'] is not None:
        return ProbeState.from_dict(config['probe'])
    if E == 0:
        return VACUUM
    if config['family'] == FamilyKind.LUS.value:
        offset = config['offset'] if config['offset'] is not None else lus_asymptotic_angle(E)
        return lus_probe(E, offset, theta_hat)
    ratio = config['alpha2_over_E']
    alpha2 = ratio * E if ratio is not None else optimal_local_split(E)[0]
    return hus_probe(E, alpha2, theta_hat)


def cmd_apv(config: RunConfig) -> RunReport:
    """APV of one probe for each prior variance, next to its lower bounds"""
    report = RunReport()
    probe = _apv_probe(config)
    quad = _quadrature(config)
    root = SeededStream(config['seed'])
    rows = []
    for index, sigma2 in enumerate(config['sigma2']):
        prior = _prior(config, sigma2)
        result = apv_report(probe, prior, quad)
        row = {"sigma2": sigma2, "prior_variance": result.prior_variance, **probe.to_dict(),
               "E": probe.energy, "apv": result.value, "apv_over_sigma2": result.value / sigma2,
               "mean_variance": result.mean_variance,
               "total_variance_gap": result.total_variance_gap,
               "excluded_mass": result.excluded_mass, "q_min": result.q_min,
               "q_max": result.q_max, "q_points": result.n_points,
               "q_sigmas": result.n_sigmas,
               "van_trees": van_trees_bound(prior, average_fisher(probe, prior)),
               "quantum_van_trees": quantum_van_trees(sigma2, probe.energy),
               "mc_apv": math.nan, "mc_std_err": math.nan}
        if config['monte_carlo_samples']:
            estimate, std_error = apv_monte_carlo(probe, prior, config['monte_carlo_samples'],
                                                  root.child(index).generator)
            row.update({"mc_apv": estimate, "mc_std_err": std_error})
            if abs(estimate - result.value) > 4.0 * std_error:
                logger.warning(f"sigma2={sigma2:g}: Monte Carlo APV {estimate:.6g} +/- "
                               f"{std_error:.2g} disagrees with quadrature {result.value:.6g}")
        row["bound_violation"] = _check_bounds(
            report, f"sigma2={sigma2:g}", result.value, result.prior_variance,
            bound_tolerance(prior, sigma2),
            {"Van Trees bound": row["van_trees"],
             "quantum Van Trees bound": row["quantum_van_trees"]})
        rows.append(row)
    TableWriter(config, report).write(pd.DataFrame(rows))
    return report


def cmd_optimize(config: RunConfig) -> RunReport:
    """Optima of one family for each prior variance"""
    report = RunReport()
    quad = _quadrature(config)
    rows = []
    failed_starts = {}
    for sigma2 in config['sigma2']:
        prior = _prior(config, sigma2)
        family = FamilySpec(config['family'], config['E'], config['prior_mean'])
        try:
            if family.kind is FamilyKind.FULL:
                result = optimize_full(family.E, prior, theta_hat=family.theta_hat, quad=quad,
                                       seed=config['seed'])
                optima = result.minima
                failed_starts[f"{sigma2:g}"] = result.n_failed
            else:
                optima = optimize_family(family, prior, quad, seed=config['seed'])
        except PhaseProbeError as e:
            logger.error(f"Optimization at sigma2={sigma2:g} failed: {e}")
            report.failures.append(f"sigma2={sigma2:g}: {e}")
            continue
        for rank, optimum in enumerate(optima):
            rows.append({"rank": rank, **optimum.to_dict(), "sigma2": sigma2,
                         "apv_over_sigma2": optimum.apv / sigma2})
    if failed_starts:
        report.details["failed_starts"] = failed_starts
    TableWriter(config, report).write(pd.DataFrame(rows))
    return report


def _sweep_variances(config: RunConfig) -> List[float]:
    if config['sigma2'] is not None:
        return list(config['sigma2'])
    values = np.geomspace(config['sigma2_min'], config['sigma2_max'], config['n_sigma2'])
    return [float(value) for value in values]


def cmd_sweep(config: RunConfig) -> RunReport:
    """Family optima over prior variances, fixed-split curves and crossovers"""
    report = RunReport()
    writer = TableWriter(config, report)
    quad = _quadrature(config)
    variances = _sweep_variances(config)
    crossovers = []
    for E in config['energies']:
        for family in config['families']:
            frame = sweep(E, variances, family, config['prior_mean'], config['n_grid'], quad,
                          threads=config.threads)
            writer.write(frame, f"_{family}_E{E:g}")
            for row in frame.itertuples(index=False):
                if row.status != "ok":
                    report.failures.append(f"{family} E={E:g} sigma2={row.sigma2:g}: {row.reason}")
                elif not 0.0 < row.apv_over_sigma2 <= 1.0 + VARIANCE_SLACK:
                    report.violations.append(f"{family} E={E:g} sigma2={row.sigma2:g}: "
                                             f"APV/sigma2 = {row.apv_over_sigma2:.10g}")
        if config['fixed_split_ratios']:
            fixed = sweep_fixed_split(E, config['fixed_split_ratios'], variances,
                                      config['prior_mean'], config['n_grid'], quad,
                                      threads=config.threads)
            writer.write(fixed, f"_fixed_split_E{E:g}")
        if config['crossover']:
            try:
                value = find_crossover(E, min(variances), max(variances),
                                       config['crossover_tol'], config['prior_mean'],
                                       config['n_grid'], quad)
                crossovers.append({"E": E, "crossover_sigma2": value, "status": "ok"})
            except OptimizationError as e:
                logger.warning(str(e))
                crossovers.append({"E": E, "crossover_sigma2": math.nan,
                                   "status": "not_bracketed"})
    if crossovers:
        writer.write(pd.DataFrame(crossovers), "_crossover")
        report.details["crossovers"] = crossovers
    return report


def cmd_simulate(config: RunConfig) -> RunReport:
    """Ensembles of repeated-measurement trajectories, one per strategy tier"""
    report = RunReport()
    writer = TableWriter(config, report)
    quad = _quadrature(config)
    prior = _prior(config, config['sigma2'])
    families = tuple(config['families'])

    schedule = None
    if StrategyTier.PREDETERMINED.value in config['tiers'] and config['E'] > 0:
        schedule = build_schedule(config['E'], config['sigma2'], config['n_rounds'], families,
                                  config['n_grid'], quad)
        if config['write_schedule']:
            frame = schedule.to_frame()
            frame.insert(0, "E", schedule.E)
            writer.write(frame, "_schedule")

    comparison = pd.DataFrame({"round": np.arange(config['n_rounds'] + 1)})
    aborted = {}
    for tier in config['tiers']:
        strategy = StrategySpec(tier=tier, E=config['E'], schedule=schedule, families=families,
                                reoptimize=config['reoptimize'])
        try:
            selector = ProbeSelector.build(strategy, prior, config['n_rounds'], quad,
                                           config.threads)
            result = run_ensemble(strategy, prior, config['n_traj'], config['n_rounds'],
                                  config['seed'], config.threads, quad, selector)
        except PhaseProbeError as e:
            logger.error(f"{tier} ensemble failed: {e}")
            report.failures.append(f"{tier}: {e}")
            continue
        frame = result.to_frame()
        writer.write(frame, f"_{tier}")
        comparison[f"mean_apv_{tier}"] = frame["mean_apv"]
        comparison[f"std_err_{tier}"] = frame["std_err"]
        comparison[f"aborted_{tier}"] = result.aborted
        aborted[tier] = result.aborted
        if np.any(result.mean_apv[1:] > result.mean_apv[0] + VARIANCE_SLACK):
            report.violations.append(f"{tier}: mean APV exceeds the prior variance")

    writer.write(comparison, "_comparison")
    report.details["aborted"] = aborted
    return report


def cmd_bounds(config: RunConfig) -> RunReport:
    """Quantum Van Trees bounds, with the optimized APV and its Van Trees bound"""
    report = RunReport()
    quad = _quadrature(config)
    rows = []
    for E in config['energies']:
        for sigma2 in config['sigma2']:
            prior = _prior(config, sigma2)
            row = {"E": E, "sigma2": sigma2, "prior_variance": prior.variance(),
                   "quantum_van_trees": quantum_van_trees(sigma2, E), "family": "",
                   "apv": math.nan, "van_trees": math.nan, "avg_fi": math.nan}
            if config['family'] != 'none':
                try:
                    if E > 0:
                        optimum = optimize_best(E, prior, config['prior_mean'], quad,
                                                _families(config['family']))
                        probe, value = optimum.probe, optimum.apv
                        row["family"] = optimum.family.kind.value
                    else:
                        probe, value = VACUUM, prior.variance()
                except PhaseProbeError as e:
                    logger.error(f"E={E:g} sigma2={sigma2:g} failed: {e}")
                    report.failures.append(f"E={E:g} sigma2={sigma2:g}: {e}")
                    rows.append(row)
                    continue
                row["apv"] = value
                if config['van_trees']:
                    row["avg_fi"] = average_fisher(probe, prior)
                    row["van_trees"] = van_trees_bound(prior, row["avg_fi"])
                _check_bounds(report, f"E={E:g} sigma2={sigma2:g}", value, row["prior_variance"],
                              bound_tolerance(prior, sigma2),
                              {"quantum Van Trees bound": row["quantum_van_trees"],
                               "Van Trees bound": row["van_trees"]})
            rows.append(row)
    TableWriter(config, report).write(pd.DataFrame(rows))
    return report


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], RunReport]] = {
    'fi': cmd_fi,
    'qfi': cmd_qfi,
    'apv': cmd_apv,
    'optimize': cmd_optimize,
    'sweep': cmd_sweep,
    'simulate': cmd_simulate,
    'bounds': cmd_bounds,
}

# (flag, config key, type, nargs, help)
PRIOR_OPTIONS = [
    ("--prior-mean", "prior_mean", float, None, "Prior mean theta_hat0 (default: pi/2)"),
    ("--n-grid", "n_grid", int, None, "Phase grid points (default: 2001)"),
    ("--q-points", "q_points", int, None, "Outcome grid points for the APV (default: 801)"),
    ("--q-sigmas", "q_sigmas", float, None, "Outcome window in standard deviations (default: 8)"),
    ("--allow-wide-prior", "allow_wide_prior", bool, None, "Accept prior variances above 0.2"),
]

COMMAND_OPTIONS = {
    'fi': [
        ("--energy", "E", float, None, "Energy budget E (default: 2)"),
        ("--theta-hat", "theta_hat", float, None, "Estimate the probes are tilted for"),
        ("--diff-min", "diff_min", float, None, "Smallest theta_hat - theta"),
        ("--diff-max", "diff_max", float, None, "Largest theta_hat - theta"),
        ("--step", "step", float, None, "Spacing of theta_hat - theta"),
        ("--mirrored-lus", "mirrored_lus", bool, None, "Use the q-axis mirrored LUS angle"),
    ],
    'qfi': [
        ("--alpha-mag", "alpha_mag", float, None, "Displacement magnitude |alpha|"),
        ("--tau", "tau", float, None, "Displacement angle"),
        ("--r", "r", float, None, "Squeezing strength (or give --energy)"),
        ("--phi", "phi", float, None, "Squeezing angle"),
        ("--energy", "E", float, None, "Energy budget; squeezing takes the remainder"),
        ("--theta", "theta", float, None, "Rotation angle for the FI column"),
    ],
    'apv': PRIOR_OPTIONS + [
        ("--energy", "E", float, None, "Energy budget E (default: 2)"),
        ("--family", "family", str, None, "HUS or LUS (default: HUS)"),
        ("--alpha2-over-e", "alpha2_over_E", float, None, "HUS displacement fraction"),
        ("--offset", "offset", float, None, "LUS squeezing offset phi + 2 theta_hat0"),
        ("--sigma2", "sigma2", float, "+", "Prior variances"),
        ("--monte-carlo-samples", "monte_carlo_samples", int, None, "Monte Carlo cross-check"),
        ("--seed", "seed", int, None, "Seed for the Monte Carlo cross-check"),
    ],
    'optimize': PRIOR_OPTIONS + [
        ("--energy", "E", float, None, "Energy budget E (default: 2)"),
        ("--family", "family", str, None, "HUS, LUS or FULL (default: HUS)"),
        ("--sigma2", "sigma2", float, "+", "Prior variances"),
        ("--seed", "seed", int, None, "Seed for the multi-start jitter"),
    ],
    'sweep': PRIOR_OPTIONS + [
        ("--energies", "energies", float, "+", "Energy budgets"),
        ("--families", "families", str, "+", "Families to sweep"),
        ("--sigma2", "sigma2", float, "+", "Explicit prior variances"),
        ("--sigma2-min", "sigma2_min", float, None, "Smallest variance of the log ladder"),
        ("--sigma2-max", "sigma2_max", float, None, "Largest variance of the log ladder"),
        ("--n-sigma2", "n_sigma2", int, None, "Points of the log ladder"),
        ("--fixed-split-ratios", "fixed_split_ratios", float, "+", "Fixed HUS fractions"),
        ("--crossover", "crossover", bool, None, "Bisect the HUS/LUS crossover"),
        ("--crossover-tol", "crossover_tol", float, None, "Crossover resolution in sigma2"),
    ],
    'simulate': PRIOR_OPTIONS + [
        ("--energy", "E", float, None, "Energy budget per round (default: 2)"),
        ("--sigma2", "sigma2", float, None, "Initial prior variance (default: 0.2)"),
        ("--n-traj", "n_traj", int, None, "Trajectories per tier (default: 1000)"),
        ("--n-rounds", "n_rounds", int, None, "Rounds per trajectory (default: 20)"),
        ("--seed", "seed", int, None, "Ensemble seed"),
        ("--tiers", "tiers", str, "+", "Strategy tiers to run"),
        ("--families", "families", str, "+", "Families adaptive tiers may use"),
        ("--reoptimize", "reoptimize", str, None, "FullyAdaptive mode: table, exact or full"),
        ("--write-schedule", "write_schedule", bool, None, "Write the a-priori schedule"),
    ],
    'bounds': PRIOR_OPTIONS + [
        ("--energies", "energies", float, "+", "Energy budgets"),
        ("--sigma2", "sigma2", float, "+", "Prior variances"),
        ("--family", "family", str, None, "HUS, LUS, best or none (default: best)"),
        ("--van-trees", "van_trees", bool, None, "Add the Van Trees bound of the optimum"),
    ],
}

COMMAND_HELP = {
    'fi': "Fisher information of the FI-optimal HUS and LUS probes",
    'qfi': "Quantum Fisher information of a probe",
    'apv': "Average posterior variance of a probe",
    'optimize': "Optimize a probe family for a prior",
    'sweep': "Optimize probe families over prior variances",
    'simulate': "Simulate repeated measurements",
    'bounds': "Van Trees and quantum Van Trees bounds",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaseprobe",
        description="Optimal Gaussian probes for homodyne phase estimation",
    )
    parser.add_argument("--version", action="version", version=f"phaseprobe {__version__}")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: INFO)"
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads (default: $PHASEPROBE_THREADS or physical cores)"
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=COMMAND_HELP[command])
        sub.add_argument("--config", default=None, help="JSON or YAML run configuration")
        sub.add_argument("--output-dir", dest="output_dir", default=None,
                         help="Directory for result files (default: current directory)")
        sub.add_argument("--stem", default=None,
                         help=f"Result file name stem (default: {command})")
        for flag, key, kind, nargs, text in COMMAND_OPTIONS[command]:
            if kind is bool:
                sub.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction,
                                 default=None, help=text)
            else:
                sub.add_argument(flag, dest=key, type=kind, nargs=nargs, default=None, help=text)
    return parser


def _overrides(args: argparse.Namespace, command: str) -> Dict[str, Any]:
    keys = ["output_dir", "stem"] + [key for _, key, _, _, _ in COMMAND_OPTIONS[command]]
    return {key: getattr(args, key) for key in keys if getattr(args, key) is not None}


def run_command(command: str, args: argparse.Namespace) -> int:
    """Resolve the configuration, run one subcommand and write its summary"""
    try:
        config = ConfigService(args.config).get_run_config(
            command, _overrides(args, command), threads=args.threads)
    except (PhaseProbeError, FileNotFoundError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_FAILED

    started = time.perf_counter()
    try:
        report = COMMAND_HANDLERS[command](config)
    except PhaseProbeError as e:
        logger.error(f"{command} failed: {e}")
        report = RunReport(failures=[str(e)])

    status = "failed" if report.failures else "violations" if report.violations else "ok"
    write_summary(summary_path(config.output_dir, config.stem), {
        "version": __version__,
        "command": command,
        "status": status,
        "duration_seconds": round(time.perf_counter() - started, 3),
        "threads": config.threads,
        "outputs": [path.name for path in report.outputs],
        "failures": report.failures,
        "violations": report.violations,
        "details": report.details,
    })
    for path in report.outputs:
        print(f"✅ {path}")
    for message in report.failures:
        print(f"❌ {message}")
    for message in report.violations:
        print(f"⚠️  {message}")

    if report.failures:
        return EXIT_FAILED
    if report.violations:
        return EXIT_VIOLATION
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    if argv is None:
        argv = sys.argv[1:]

    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format=LOG_FORMAT,
        stream=sys.stderr,
    )

    if not args.command:
        print_banner()
        parser.print_help()
        return 0

    return run_command(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
