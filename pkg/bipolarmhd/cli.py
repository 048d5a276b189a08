"""
Command-line front end

    bipolarmhd [--config PATH] [--set section.key=value ...] [--log-level LEVEL] COMMAND

Commands:
    simulate   integrate to stepper.t_end, write the energy CSV, checkpoints
               and the absorbing-ball report
    bound      evaluate the dimension bound for the configured constants
    tangent    finite-difference consistency of the tangent model
    lyapunov   trace functional q_m of an orthonormal tangent frame
    kappa      the estimate chain kappa0 .. kappa3

Reports go to stdout as NDJSON (one JSON object per line).
"""

import argparse
import logging
import os
import sys
from typing import Callable, Dict, IO, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (
    analytic_trace_zero_state,
    dimension_bound,
    time_average_bounds,
    time_average_norms,
    trace_qm,
    trace_upper_bound,
)
from .app import SimulationApp
from .config import (
    RunConfig,
    apply_overrides,
    build_constants,
    build_forcing,
    build_grid,
    build_initial_state,
    build_stepper,
    check_config,
    load_config,
    load_initial_state,
)
from .dynamics import integrate
from .errors import BipolarMHDError, ConfigError, exit_code_for
from .exit_codes import ExitCode, describe
from .params import kappa_chain, validate
from .records import encode_ndjson, write_ndjson
from .spectral import SpectralGrid, random_solenoidal, shear_mode
from .tangent import TangentState, fd_consistency, lipschitz_envelope

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "BIPOLARMHD_LOG_LEVEL"


def emit(records: Iterable[dict], out: Optional[IO[str]] = None) -> None:
    out = out if out is not None else sys.stdout
    for record in records:
        out.write(encode_ndjson(record) + "\n")
    out.flush()


def _checked(config: RunConfig) -> RunConfig:
    problems = validate(config.physics, config.domain).violations + check_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    return config


def _settled_base(config: RunConfig, grid: SpectralGrid, transient: float):
    """Initial (or resumed) state, forcing and stepper, with the base run through `transient`"""
    f = build_forcing(config, grid)
    cfg = build_stepper(config, build_initial_state(config, grid))
    state, _ = load_initial_state(config, grid)
    if transient > 0:
        logger.info(f"Running transient to t={transient:g}")
        state = integrate(state, f, config.physics, cfg, state.t + transient).final
        state.history = None
    return state, f, cfg


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(config: RunConfig, out: Optional[IO[str]] = None) -> int:
    app = SimulationApp(config)
    app.simulate()
    averages = time_average_norms(app.records)
    limits = time_average_bounds(config.physics, app.constants)
    records = [
        app.absorbing.to_dict(),
        {
            "kind": "time_averages",
            "avg_h2_u": averages.avg_h2_u,
            "avg_v2_b": averages.avg_v2_b,
            "drift_h2_u": averages.drift_h2_u,
            "drift_v2_b": averages.drift_v2_b,
            "bound_h2_u": limits["h2_u"],
            "bound_v2_b": limits["v2_b"],
        },
        {"kind": "metrics", **app.get_metrics()},
    ]
    write_ndjson(app.output_dir / "simulate.ndjson", records)
    emit(records, out)
    return ExitCode.SUCCESS


def format_bound_table(report) -> str:
    data = report.to_dict()
    data.pop("kind")
    width = max(len(key) for key in data)
    lines = ["dimension bound", "-" * (width + 24)]
    for key, value in data.items():
        if isinstance(value, float):
            value = f"{value:.10g}"
        lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines)


def cmd_bound(config: RunConfig, out: Optional[IO[str]] = None, table: Optional[IO[str]] = None) -> int:
    constants = build_constants(_checked(config))
    report = dimension_bound(config.physics, constants, config.domain, config.estimates)
    emit([report.to_dict()], out)
    table = table if table is not None else sys.stderr
    table.write(format_bound_table(report) + "\n")
    return ExitCode.SUCCESS


def tangent_direction(config: RunConfig, grid: SpectralGrid, t: float) -> TangentState:
    section = config.tangent
    if section.direction == "shear":
        wavevector = config.initial.wavevector[0]
        return TangentState(shear_mode(grid, wavevector), shear_mode(grid, wavevector), t)
    rng = np.random.default_rng(section.direction_seed)
    return TangentState(random_solenoidal(grid, rng), random_solenoidal(grid, rng), t)


def cmd_tangent(config: RunConfig, out: Optional[IO[str]] = None) -> int:
    _checked(config)
    grid = build_grid(config)
    section = config.tangent
    base, f, cfg = _settled_base(config, grid, section.transient)
    direction = tangent_direction(config, grid, base.t)

    report = fd_consistency(base, direction, section.h_list, section.horizon, f, config.physics, cfg)
    records = report.to_records()
    envelope = lipschitz_envelope(
        base, direction.scaled(section.h_list[0]), section.horizon, f, config.physics, cfg,
        stride=max(1, report.steps // 50),
    )
    records.append(envelope.to_records()[-1])

    write_ndjson(os.path.join(config.output.directory, "tangent.ndjson"), records)
    emit(records, out)
    return ExitCode.SUCCESS


def cmd_lyapunov(config: RunConfig, out: Optional[IO[str]] = None) -> int:
    _checked(config)
    grid = build_grid(config)
    section = config.lyapunov
    base, f, cfg = _settled_base(config, grid, 0.0)
    transient_steps = int(round(section.transient / cfg.dt))
    estimate = trace_qm(
        base, f, config.physics, cfg, section.m, section.steps,
        reortho_stride=section.reortho_stride,
        transient_steps=transient_steps,
        frame_seed=section.frame_seed,
    )
    record = estimate.to_dict()
    constants = build_constants(config)
    record["trace_upper_bound"] = trace_upper_bound(config.physics, constants, config.domain, section.m)
    if config.initial.kind == "zero" and config.physics.f_amp == 0.0 and not config.initial.resume:
        record["zero_state_trace"] = analytic_trace_zero_state(config.physics, grid, section.m)

    write_ndjson(os.path.join(config.output.directory, "lyapunov.ndjson"), [record])
    emit([record], out)
    return ExitCode.SUCCESS


def cmd_kappa(config: RunConfig, out: Optional[IO[str]] = None) -> int:
    constants = build_constants(_checked(config))
    report = kappa_chain(config.physics, constants, estimates=config.estimates)
    emit([{"kind": "kappa", **report.to_dict()}], out)
    return ExitCode.SUCCESS


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "tangent": cmd_tangent,
    "lyapunov": cmd_lyapunov,
    "kappa": cmd_kappa,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bipolarmhd",
        description="Bipolar shear-thinning MHD simulator and attractor analysis",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", "-c", metavar="PATH", help="run configuration file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="override one config entry (repeatable)",
    )
    parser.add_argument(
        "--log-level", default=os.environ.get(LOG_LEVEL_ENV, "INFO"),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper,
        help=f"logging level (default from {LOG_LEVEL_ENV}, else INFO)",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="what to run")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ExitCode.SUCCESS if e.code == 0 else ExitCode.USAGE_ERROR

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = apply_overrides(load_config(args.config), args.overrides)
        return int(COMMANDS[args.command](config))
    except BipolarMHDError as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed ({describe(code)}): {e}")
        print(f"bipolarmhd: {e}", file=sys.stderr)
        return int(code)
    except Exception as e:
        logger.exception(f"{args.command}: unexpected error")
        print(f"bipolarmhd: internal error: {e}", file=sys.stderr)
        return int(ExitCode.INTERNAL_ERROR)


if __name__ == "__main__":
    sys.exit(main())
