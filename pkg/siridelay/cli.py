"""Command-line entry point: analyze, run, sweep and verify-incidence."""
import argparse
import csv
import io
import math
import os
from dataclasses import dataclass, fields
from typing import List, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values

from . import documentation
from .analysis import EquilibriumReport, analyze
from .config import ConfigError, ScenarioConfig, list_presets, load_config, load_preset
from .diagnostics import CertificateSeries, certify_dfe, certify_endemic, monitor_invariants
from .incidence import HypothesisReport, check_hypotheses
from .integrator import HISTORY_PRESETS, Trajectory, integrate
from .logger import configure_level, logger
from .model import RATE_NAMES
from .utils import parse_grid

EXIT_OK = 0
EXIT_HYPOTHESIS = 1
EXIT_CONFIG = 2
EXIT_MONITOR = 3
EXIT_CERTIFICATE = 4

CSV_HEADER = ("t", "s", "i", "r", "N", "w", "V", "V1", "V2", "V3")
SWEEP_HEADER = ("value", "R0", "endemic", "i_star")
SWEEP_PARAMETERS = RATE_NAMES + ("h",)


def format_float(value) -> str:
    if value is None or not math.isfinite(value):
        return ""
    return "%.17g" % value


@dataclass(frozen=True)
class RunSummary:
    scenario: str
    R0: float
    stable_equilibrium: str
    E0: Tuple[float, float, float]
    endemic: Optional[Tuple[float, float, float]]
    t_end: float
    final_state: Tuple[float, float, float]
    violation_count: int
    clamp_count: int
    w_monotone: Optional[bool]
    V_monotone: Optional[bool]
    trajectory_path: str
    summary_path: str

    @property
    def exit_code(self) -> int:
        if self.violation_count:
            return EXIT_MONITOR
        if self.w_monotone is False or self.V_monotone is False:
            return EXIT_CERTIFICATE
        return EXIT_OK

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                text = "none"
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, tuple):
                text = ",".join(repr(float(v)) for v in value)
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name}={text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunSummary":
        values = dotenv_values(stream=io.StringIO(text))

        def triple(key):
            raw = values[key]
            return None if raw == "none" else tuple(float(v) for v in raw.split(","))

        def flag(key):
            return {"none": None, "true": True, "false": False}[values[key]]

        return cls(
            scenario=values["scenario"],
            R0=float(values["R0"]),
            stable_equilibrium=values["stable_equilibrium"],
            E0=triple("E0"),
            endemic=triple("endemic"),
            t_end=float(values["t_end"]),
            final_state=triple("final_state"),
            violation_count=int(values["violation_count"]),
            clamp_count=int(values["clamp_count"]),
            w_monotone=flag("w_monotone"),
            V_monotone=flag("V_monotone"),
            trajectory_path=values["trajectory_path"],
            summary_path=values["summary_path"],
        )


def read_summary(path: str) -> RunSummary:
    with open(path, "r") as stream:
        return RunSummary.from_text(stream.read())


def write_trajectory_csv(path: str, traj: Trajectory, series: Optional[CertificateSeries] = None):
    n = len(traj)
    empty = np.full(n, np.nan)

    def column(values):
        return empty if values is None else values

    certificates = [column(None if series is None else getattr(series, name))
                    for name in ("w_values", "V_values", "V1_values", "V2_values", "V3_values")]
    N = traj.states.sum(axis=1)
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(CSV_HEADER)
        for k in range(n):
            row = (traj.times[k], *traj.states[k], N[k], *(c[k] for c in certificates))
            writer.writerow([format_float(float(v)) for v in row])


def run_scenario(config: ScenarioConfig) -> RunSummary:
    params, inc, kernel, history = config.params, config.incidence(), config.kernel(), config.history()
    report = analyze(params, inc)
    logger.info(f"{config.name}: R0 = {report.R0:.6g}, {report.stable_equilibrium} is globally stable")
    traj = integrate(params, inc, kernel, history, config.t_end, config.step)

    violations = monitor_invariants(params, traj, history) if config.check_invariants else []
    series = None
    if config.check_certificates:
        if report.endemic_present:
            series = certify_endemic(params, inc, kernel, traj, history, report.endemic)
        else:
            series = certify_dfe(params, inc, kernel, traj, history)

    os.makedirs(config.output, exist_ok=True)
    trajectory_path = os.path.join(config.output, f"{config.name}_trajectory.csv")
    summary_path = os.path.join(config.output, f"{config.name}_summary.txt")
    write_trajectory_csv(trajectory_path, traj, series)
    final = traj.state(len(traj) - 1)
    endemic = report.endemic
    summary = RunSummary(
        scenario=config.name,
        R0=report.R0,
        stable_equilibrium=report.stable_equilibrium,
        E0=(report.E0.s, report.E0.i, report.E0.r),
        endemic=None if endemic is None else (endemic.s, endemic.i, endemic.r),
        t_end=final.t,
        final_state=(final.s, final.i, final.r),
        violation_count=len(violations),
        clamp_count=traj.clamp_count,
        w_monotone=None if series is None else series.w_monotone,
        V_monotone=None if series is None else series.V_monotone,
        trajectory_path=trajectory_path,
        summary_path=summary_path,
    )
    with open(summary_path, "w") as stream:
        stream.write(summary.to_text())
    logger.info(f"Wrote {trajectory_path} and {summary_path}")
    return summary


@dataclass(frozen=True)
class SweepRow:
    value: float
    R0: float
    endemic: bool
    i_star: Optional[float]


def _swept(config: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter == "h":
        return config.replace(kernel_h=value)
    return config.replace(**{parameter: value})


def sweep(config: ScenarioConfig, parameter: str, values: Sequence[float]) -> List[SweepRow]:
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"Unknown sweep parameter '{parameter}'. Known parameters: {', '.join(SWEEP_PARAMETERS)}")
    inc = config.incidence()
    rows = []
    for value in values:
        params = _swept(config, parameter, float(value)).params
        report: EquilibriumReport = analyze(params, inc)
        endemic = report.endemic
        rows.append(SweepRow(float(value), report.R0, endemic is not None,
                             None if endemic is None else endemic.i))
        logger.debug(f"sweep {parameter} = {value!r}: {rows[-1]}")
    return rows


def threshold_brackets(rows: Sequence[SweepRow]) -> List[Tuple[SweepRow, SweepRow]]:
    """Adjacent rows between which R0 crosses 1."""
    return [(a, b) for a, b in zip(rows, rows[1:]) if (a.R0 > 1) != (b.R0 > 1)]


def write_sweep_csv(path: str, rows: Sequence[SweepRow]):
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([format_float(row.value), format_float(row.R0),
                             "true" if row.endemic else "false", format_float(row.i_star)])


def verify_incidence(config: ScenarioConfig, s_grid, i_grid) -> HypothesisReport:
    try:
        return check_hypotheses(config.incidence(), s_grid, i_grid)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _load(args) -> ScenarioConfig:
    config = load_config(args.config) if args.config else load_preset(args.preset)
    changes = {}
    if getattr(args, "step", None) is not None:
        changes["step"] = args.step
    if getattr(args, "t_end", None) is not None:
        changes["t_end"] = args.t_end
    if getattr(args, "out", None) is not None:
        changes["output"] = args.out
    if getattr(args, "no_certificates", False):
        changes["check_certificates"] = False
    if getattr(args, "history", None) and args.history != config.history_tag:
        changes["history_tag"] = args.history
        changes["history_coefficients"] = None
        changes["name"] = f"{config.name}-history-{args.history}"
    if changes:
        try:
            config = config.replace(**changes)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    return config


def _format_state(values) -> str:
    return "(" + ", ".join(f"{v:.6g}" for v in values) + ")"


def cmd_analyze(args) -> int:
    config = _load(args)
    report = analyze(config.params, config.incidence())
    m = report.matrices
    print(f"scenario            {config.name}")
    print(f"R0                  {report.R0:.10g}")
    print(f"spectral radius     {m.spectral_radius:.10g}")
    print(f"F                   {m.F.tolist()}")
    print(f"V                   {m.V.tolist()}")
    print(f"V^-1                {m.V_inv.tolist()}")
    print(f"E0                  {_format_state((report.E0.s, report.E0.i, report.E0.r))}")
    if report.endemic_present:
        e = report.endemic
        print(f"E*                  {_format_state((e.s, e.i, e.r))}  residual {report.residual:.3g}")
    else:
        print("E*                  none (R0 <= 1)")
    print(f"globally stable     {report.stable_equilibrium}")
    return EXIT_OK


def cmd_run(args) -> int:
    summary = run_scenario(_load(args))
    print(summary.to_text(), end="")
    if summary.exit_code == EXIT_MONITOR:
        logger.error(f"{summary.violation_count} invariant violations")
    elif summary.exit_code == EXIT_CERTIFICATE:
        logger.error("Lyapunov functional is not nonincreasing")
    return summary.exit_code


def cmd_sweep(args) -> int:
    config = _load(args)
    try:
        values = parse_grid(args.values)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    rows = sweep(config, args.param, values)
    print(f"{'value':>14} {'R0':>14} {'endemic':>8} {'i_star':>14}")
    for row in rows:
        i_star = "-" if row.i_star is None else f"{row.i_star:14.6g}"
        print(f"{row.value:14.6g} {row.R0:14.6g} {str(row.endemic):>8} {i_star:>14}")
    for a, b in threshold_brackets(rows):
        print(f"R0 crosses 1 between {args.param} = {a.value:.6g} and {b.value:.6g}")
    os.makedirs(config.output, exist_ok=True)
    path = os.path.join(config.output, f"sweep_{args.param}.csv")
    write_sweep_csv(path, rows)
    logger.info(f"Wrote {path}")
    return EXIT_OK


def cmd_verify_incidence(args) -> int:
    config = _load(args)
    try:
        s_grid, i_grid = parse_grid(args.s_grid), parse_grid(args.i_grid)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    report = verify_incidence(config, s_grid, i_grid)
    for clause, holds in report.clauses().items():
        print(f"{clause:<40} {'ok' if holds else 'FAILS'}")
    print(f"{'sup phi on grid':<40} {report.phi_supremum:.6g}")
    if report.witness is not None:
        print(f"first failure: {report.witness}")
    return EXIT_OK if report.passed else EXIT_HYPOTHESIS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siridelay",
        description="SIRI epidemic model with distributed delay and relapse",
        epilog=documentation.describe_config_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    commands = {}

    def add(name, handler):
        sub = subparsers.add_parser(name, formatter_class=argparse.RawDescriptionHelpFormatter)
        source = sub.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", help="scenario file")
        source.add_argument("--preset", help="shipped scenario name")
        sub.add_argument("--verbose", action="store_true", help="log at DEBUG level")
        sub.set_defaults(handler=handler)
        commands[name] = sub
        return sub

    add("analyze", cmd_analyze)

    run = add("run", cmd_run)
    run.add_argument("--out", help="output directory")
    run.add_argument("--step", type=float, help="integration step")
    run.add_argument("--t-end", dest="t_end", type=float, help="integration horizon")
    run.add_argument("--no-certificates", action="store_true", help="skip Lyapunov functionals")
    run.add_argument("--history", choices=sorted(HISTORY_PRESETS), help="preset history to start from")

    sweep_parser = add("sweep", cmd_sweep)
    sweep_parser.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    sweep_parser.add_argument("--values", required=True)
    sweep_parser.add_argument("--out", help="output directory")

    verify = add("verify-incidence", cmd_verify_incidence)
    verify.add_argument("--s-grid", dest="s_grid", default="0:200:101")
    verify.add_argument("--i-grid", dest="i_grid", default="0.01:200:101")

    documentation.format_descriptions(
        commands,
        presets=", ".join(list_presets()) or "none found",
        histories=", ".join(sorted(HISTORY_PRESETS)),
        sweepable=", ".join(SWEEP_PARAMETERS),
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        configure_level("DEBUG")
    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG
