"""
SimulationApp: one configured trajectory with its observers and outputs
"""

import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from .analysis import AbsorbingReport, EnergyRecord, absorbing_check, record_energy
from .checkpoint import write_checkpoint
from .config import (
    RunConfig,
    build_constants,
    build_forcing,
    build_grid,
    build_initial_state,
    build_stepper,
    check_config,
    load_initial_state,
)
from .decorators import ObserverHandler
from .dynamics import State, TrajectoryResult, integrate
from .errors import ConfigError
from .params import validate
from .records import EnergyCSVWriter
from .spectral import is_mean_zero, is_real, is_solenoidal, max_speed

logger = logging.getLogger(__name__)


class SimulationApp:
    """
    Simulation driver built from a RunConfig.

    Usage:
        app = SimulationApp(config)

        @app.observer(stride=50)
        def show(state, step):
            print(step, state.t)

        result = app.simulate()
        print(app.absorbing.status)
    """

    def __init__(self, config: RunConfig, workers: Optional[int] = None, write_files: bool = True):
        """
        Args:
            config: parsed run configuration
            workers: FFT worker threads (default from BIPOLARMHD_THREADS)
            write_files: write the energy CSV and checkpoints under output.directory

        Raises:
            ConfigError: invalid parameters, cross-field problems, or a resume
                file written with other physics
            NonpositiveConstantError: a domain constant resolves to <= 0
            CheckpointFormatError, GridMismatchError: bad resume file
        """
        problems = validate(config.physics, config.domain).violations + check_config(config)
        if problems:
            raise ConfigError("; ".join(problems))

        self.config = config
        self.params = config.physics
        self.grid = build_grid(config, workers)
        self.constants = build_constants(config)
        self.forcing = build_forcing(config, self.grid)
        self.write_files = write_files
        self.output_dir = Path(config.output.directory)

        # dt from the configured initial condition, never the resumed state
        self.stepper = build_stepper(config, build_initial_state(config, self.grid))
        self.state, self.start_step = load_initial_state(config, self.grid)

        self.records: List[EnergyRecord] = []
        self.absorbing: Optional[AbsorbingReport] = None
        self._observers: List[ObserverHandler] = []
        self._last_cfl: Optional[float] = None
        self._metrics: Dict[str, Any] = {
            "steps": 0,
            "energy_records": 0,
            "checkpoints_written": 0,
            "wall_time": 0.0,
        }

    def observer(self, stride: int = 1, final: bool = True):
        """
        Decorator registering a trajectory observer.

        Usage:
            @app.observer(stride=10)
            def track(state, step):
                ...
        """
        def decorator(func: Callable) -> Callable:
            self._observers.append(ObserverHandler(func, stride, final))
            logger.info(f"Registered observer: {getattr(func, '__name__', func)} (stride {stride})")
            return func
        return decorator

    def _energy_observer(self, writer: Optional[EnergyCSVWriter]) -> ObserverHandler:
        def record(state: State, step: int) -> None:
            entry = record_energy(state, self.forcing, self.params)
            self.records.append(entry)
            self._metrics["energy_records"] += 1
            self._last_cfl = max_speed(state.u) * self.stepper.dt / self.grid.dom.dx
            if writer is not None:
                writer.write(entry)
            logger.debug(f"step {self.start_step + step}: t={state.t:.6g} y={entry.y:.6g}")
        return ObserverHandler(record, self.config.output.energy_stride, final=True)

    def _checkpoint_observer(self) -> ObserverHandler:
        def save(state: State, step: int) -> None:
            if step == 0:
                return
            index = self.start_step + step
            write_checkpoint(self.checkpoint_path(index), state, self.params, index)
            self._metrics["checkpoints_written"] += 1
        return ObserverHandler(save, self.config.output.checkpoint_stride, final=False)

    def checkpoint_path(self, step: int) -> Path:
        return self.output_dir / f"checkpoint_{step:08d}.bmhd"

    @property
    def energy_csv_path(self) -> Path:
        return self.output_dir / self.config.output.energy_csv

    def simulate(self, t_end: Optional[float] = None) -> TrajectoryResult:
        """
        Integrate from the current state to t_end (default stepper.t_end),
        recording energies and checkpoints at their strides.
        """
        t_end = self.config.stepper.t_end if t_end is None else t_end
        writer = None
        if self.write_files:
            continuing = bool(self.config.initial.resume) or self._metrics["steps"] > 0
            writer = EnergyCSVWriter(self.energy_csv_path, resume_at=self.state.t if continuing else None).open()
        observers = [self._energy_observer(writer)]
        if self.write_files and self.config.output.checkpoint_stride > 0:
            observers.append(self._checkpoint_observer())
        observers.extend(self._observers)

        logger.info(
            f"Simulating {self.grid!r} from t={self.state.t:.6g} to t={t_end:.6g} "
            f"(dt={self.stepper.dt:.6g}, {self.stepper.scheme.value})"
        )
        started = time.perf_counter()
        try:
            result = integrate(self.state, self.forcing, self.params, self.stepper, t_end, observers)
        finally:
            if writer is not None:
                writer.close()
            self._metrics["wall_time"] += time.perf_counter() - started

        self.state = result.final
        self.start_step += result.steps
        self._metrics["steps"] += result.steps
        self.absorbing = absorbing_check(self.records, self.params, self.constants)
        logger.info(f"Finished at t={result.t_end:.6g} after {result.steps} steps: {self.absorbing.status}")
        return result

    def get_metrics(self) -> Dict[str, Any]:
        metrics = self._metrics.copy()
        metrics["t"] = self.state.t
        metrics["dt"] = self.stepper.dt
        metrics["last_cfl"] = self._last_cfl
        if self.records:
            metrics["last_energy"] = self.records[-1].y
        return metrics

    def health_check(self) -> Dict[str, Any]:
        """
        Returns:
            Dictionary with status "healthy" or "degraded" and a list of errors
        """
        health: Dict[str, Any] = {
            "status": "healthy",
            "t": self.state.t,
            "finite": self.state.is_finite(),
            "last_cfl": self._last_cfl,
            "errors": [],
        }
        if not health["finite"]:
            health["errors"].append("state has non-finite coefficients")
        else:
            for name, v in (("u", self.state.u), ("b", self.state.b)):
                if not is_solenoidal(v, rtol=1e-10):
                    health["errors"].append(f"{name} is not divergence-free")
                if not is_real(v, atol=1e-12):
                    health["errors"].append(f"{name} is not real")
                if not is_mean_zero(v):
                    health["errors"].append(f"{name} has a nonzero mean")
        if self._last_cfl is not None and self._last_cfl > self.stepper.cfl_limit:
            health["errors"].append(f"CFL ratio {self._last_cfl:.3g} above {self.stepper.cfl_limit}")
        if health["errors"]:
            health["status"] = "degraded"
        return health
