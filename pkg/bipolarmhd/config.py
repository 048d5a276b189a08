"""
Run configuration

A config file is line oriented:

    # comment
    [physics]
    alpha = 0.3
    mu1 0.05

Unknown sections or keys are errors. Command-line overrides use the dot path
``section.key=value`` and are applied after the file.
"""

import dataclasses
import logging
import math
import os
import re
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from .checkpoint import PARAM_FIELDS, read_checkpoint
from .dynamics import State
from .errors import ConfigError, ConfigNotFoundError
from .params import default_dt, resolve_constants
from .spectral import (
    SpectralGrid,
    SpectralVectorField,
    max_speed,
    mode_forcing,
    random_forcing,
    random_solenoidal,
    shear_mode,
)
from .types import (
    DomainConstants,
    DomainSpec,
    EstimateConstants,
    PhysicalParams,
    Scheme,
    StepperConfig,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]
Wavevectors = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class StepperSection:
    dt: Optional[float] = None      # None = auto
    scheme: Scheme = Scheme.IMEX_EULER
    cfl_limit: float = 0.5
    t_end: float = 1.0


@dataclass(frozen=True)
class ForcingSection:
    kind: str = "mode"              # mode | random
    wavevectors: Wavevectors = ((0, 1),)
    seed: int = 0
    band_min: float = 1.0
    band_max: float = 3.0


@dataclass(frozen=True)
class InitialSection:
    kind: str = "random"            # random | zero | shear
    seed: int = 1
    amplitude: float = 1.0
    band_min: float = 1.0
    band_max: float = 4.0
    magnetic: bool = True
    wavevector: Wavevectors = ((1, 0),)
    resume: str = ""


@dataclass(frozen=True)
class OutputSection:
    directory: str = "output"
    energy_stride: int = 10
    checkpoint_stride: int = 0      # 0 = off
    energy_csv: str = "energy.csv"


@dataclass(frozen=True)
class TangentSection:
    h_list: Tuple[float, ...] = (1e-2, 1e-3, 1e-4, 1e-5)
    horizon: float = 0.5
    transient: float = 0.0
    direction: str = "random"       # random | shear
    direction_seed: int = 7


@dataclass(frozen=True)
class LyapunovSection:
    m: int = 4
    reortho_stride: int = 1
    steps: int = 200
    transient: float = 0.0
    frame_seed: int = 11


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicalParams = field(default_factory=PhysicalParams)
    domain: DomainSpec = field(default_factory=DomainSpec)
    constants: DomainConstants = field(default_factory=DomainConstants)
    estimates: EstimateConstants = field(default_factory=EstimateConstants)
    stepper: StepperSection = field(default_factory=StepperSection)
    forcing: ForcingSection = field(default_factory=ForcingSection)
    initial: InitialSection = field(default_factory=InitialSection)
    output: OutputSection = field(default_factory=OutputSection)
    tangent: TangentSection = field(default_factory=TangentSection)
    lyapunov: LyapunovSection = field(default_factory=LyapunovSection)
    source: Optional[str] = None

    def set(self, section: str, key: str, raw: str) -> "RunConfig":
        """Copy of the config with one entry replaced from its text form"""
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        current = getattr(self, section)
        hints = _hints(type(current))
        if key not in hints:
            raise ConfigError(f"unknown key {section}.{key}")
        try:
            value = _converter(hints[key])(raw.strip())
        except (ValueError, KeyError) as e:
            raise ConfigError(f"bad value for {section}.{key}: {raw.strip()!r} ({e})")
        return dataclasses.replace(self, **{section: dataclasses.replace(current, **{key: value})})

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}


SECTIONS = (
    "physics", "domain", "constants", "estimates", "stepper",
    "forcing", "initial", "output", "tangent", "lyapunov",
)


# ---------------------------------------------------------------------------
# Value parsers
# ---------------------------------------------------------------------------

_PI_FORM = re.compile(r"^([-+]?[0-9.]*(?:[eE][-+]?\d+)?)\s*\*?\s*pi$")


def parse_float(text: str) -> float:
    """Float, also accepting multiples of pi such as ``2pi`` or ``0.5*pi``"""
    match = _PI_FORM.match(text.lower())
    if match:
        factor = match.group(1)
        return (float(factor) if factor not in ("", "+", "-") else float(factor + "1")) * math.pi
    return float(text)


def parse_optional_float(text: str) -> Optional[float]:
    return None if text.lower() == "auto" else parse_float(text)


def parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false")


def parse_float_list(text: str) -> Tuple[float, ...]:
    return tuple(parse_float(part) for part in text.replace(";", ",").split(",") if part.strip())


def parse_wavevectors(text: str) -> Wavevectors:
    """``0,1; 1,1`` -> ((0, 1), (1, 1))"""
    vectors = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            vectors.append(tuple(int(part) for part in chunk.split(",")))
    if not vectors:
        raise ValueError("no wavevectors")
    return tuple(vectors)


_CONVERTERS: Dict[Any, Callable[[str], Any]] = {
    float: parse_float,
    Optional[float]: parse_optional_float,
    int: int,
    bool: parse_bool,
    str: str,
    Scheme: Scheme,
    Tuple[float, ...]: parse_float_list,
    Wavevectors: parse_wavevectors,
}


def _hints(cls) -> Dict[str, Any]:
    return typing.get_type_hints(cls)


def _converter(hint: Any) -> Callable[[str], Any]:
    try:
        return _CONVERTERS[hint]
    except KeyError:
        raise ConfigError(f"no parser for {hint}")


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def parse_config_text(text: str, source: Optional[str] = None) -> RunConfig:
    """
    Raises:
        ConfigError: syntax errors, unknown sections or keys, bad values
    """
    config = RunConfig(source=source)
    section: Optional[str] = None
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {number}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"line {number}: unknown section [{section}]")
            continue
        if "=" in line:
            key, value = (part.strip() for part in line.split("=", 1))
        else:
            parts = line.split(None, 1)
            if len(parts) < 2:
                raise ConfigError(f"line {number}: missing value for {parts[0]!r}")
            key, value = parts
        if section is None:
            raise ConfigError(f"line {number}: {key!r} outside any section")
        config = config.set(section, key, value)
    return config


def load_config(path: Optional[PathLike] = None) -> RunConfig:
    """
    Defaults when path is None.

    Raises:
        ConfigNotFoundError: path does not exist
        ConfigError: invalid content
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(str(path))
    config = parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
    logger.info(f"Loaded configuration from {path}")
    return config


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """Apply ``section.key=value`` overrides in order"""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        path, value = item.split("=", 1)
        if "." not in path:
            raise ConfigError(f"override {item!r} needs a section, e.g. physics.alpha=0.3")
        section, key = path.strip().split(".", 1)
        config = config.set(section, key, value)
        logger.debug(f"Override {section}.{key} = {value}")
    return config


def check_config(config: RunConfig) -> List[str]:
    """Cross-field problems the per-key parsers cannot see"""
    problems = []
    if config.output.energy_stride < 1:
        problems.append("output.energy_stride must be >= 1")
    if config.output.checkpoint_stride < 0:
        problems.append("output.checkpoint_stride must be >= 0")
    if config.forcing.kind not in ("mode", "random"):
        problems.append(f"forcing.kind must be mode or random, got {config.forcing.kind!r}")
    if config.initial.kind not in ("random", "zero", "shear"):
        problems.append(f"initial.kind must be random, zero or shear, got {config.initial.kind!r}")
    if config.tangent.direction not in ("random", "shear"):
        problems.append(f"tangent.direction must be random or shear, got {config.tangent.direction!r}")
    if config.stepper.dt is not None and not config.stepper.dt > 0:
        problems.append(f"stepper.dt must be > 0 or auto, got {config.stepper.dt}")
    if not config.stepper.cfl_limit > 0:
        problems.append(f"stepper.cfl_limit must be > 0, got {config.stepper.cfl_limit}")
    if config.stepper.t_end < 0:
        problems.append("stepper.t_end must be >= 0")
    if config.lyapunov.m < 1 or config.lyapunov.reortho_stride < 1:
        problems.append("lyapunov.m and lyapunov.reortho_stride must be >= 1")
    return problems


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_grid(config: RunConfig, workers: Optional[int] = None) -> SpectralGrid:
    return SpectralGrid(config.domain, workers)


def build_constants(config: RunConfig) -> DomainConstants:
    return resolve_constants(config.constants, config.domain)


def build_forcing(config: RunConfig, grid: SpectralGrid) -> SpectralVectorField:
    """Forcing field with L2 norm physics.f_amp"""
    f_amp = config.physics.f_amp
    if f_amp == 0.0:
        return SpectralVectorField.zeros(grid)
    section = config.forcing
    if section.kind == "random":
        return random_forcing(grid, section.seed, section.band_min, section.band_max, f_amp)
    return mode_forcing(grid, section.wavevectors, f_amp)


def build_initial_state(config: RunConfig, grid: SpectralGrid) -> State:
    section = config.initial
    if section.kind == "zero":
        return State.zeros(grid)
    if section.kind == "shear":
        u = shear_mode(grid, section.wavevector[0], section.amplitude)
        b = shear_mode(grid, section.wavevector[0], section.amplitude, phase="sin") if section.magnetic \
            else SpectralVectorField.zeros(grid)
        return State(u, b)
    rng = np.random.default_rng(section.seed)
    u = random_solenoidal(grid, rng, section.amplitude, section.band_min, section.band_max)
    if section.magnetic:
        b = random_solenoidal(grid, rng, section.amplitude, section.band_min, section.band_max)
    else:
        b = SpectralVectorField.zeros(grid)
    return State(u, b)


def build_stepper(config: RunConfig, state: Optional[State] = None) -> StepperConfig:
    """StepperConfig with dt resolved; auto dt accounts for the speed of state"""
    dt = config.stepper.dt
    if dt is None:
        u_max = max_speed(state.u) if state is not None else 0.0
        dt = default_dt(config.physics, config.domain, u_max)
        logger.info(f"Using dt={dt:.6g}")
    return StepperConfig(dt=dt, scheme=config.stepper.scheme, cfl_limit=config.stepper.cfl_limit)


def load_initial_state(config: RunConfig, grid: SpectralGrid) -> Tuple[State, int]:
    """
    The configured initial state at step 0, or the checkpoint named by
    initial.resume together with its step index.

    Raises:
        CheckpointFormatError: unreadable or missing checkpoint
        GridMismatchError: checkpoint grid differs from the configured domain
        ConfigError: checkpoint physics differ from the configured physics
    """
    resume = config.initial.resume
    if not resume:
        return build_initial_state(config, grid), 0
    checkpoint = read_checkpoint(resume, grid)
    differing = [
        f"{name} {getattr(checkpoint.params, name)!r} != {getattr(config.physics, name)!r}"
        for name in PARAM_FIELDS
        if getattr(checkpoint.params, name) != getattr(config.physics, name)
    ]
    if differing:
        raise ConfigError(f"checkpoint {resume} was written with other physics: " + ", ".join(differing))
    logger.info(f"Resuming from {resume} at t={checkpoint.state.t:.6g} (step {checkpoint.step})")
    return checkpoint.state, checkpoint.step
