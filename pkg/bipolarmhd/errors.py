"""
Exception hierarchy for bipolarmhd
"""

from typing import Optional

from .exit_codes import ExitCode


class BipolarMHDError(Exception):
    """Base class; carries the process exit code and, when known, the step index"""

    exit_code: ExitCode = ExitCode.INTERNAL_ERROR

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.step = step

    def with_step(self, step: int) -> "BipolarMHDError":
        if self.step is None:
            self.step = step
        return self

    def __str__(self) -> str:
        if self.step is None:
            return self.message
        return f"{self.message} (step {self.step})"


class ConfigError(BipolarMHDError, ValueError):
    exit_code = ExitCode.CONFIG_ERROR


class ConfigNotFoundError(BipolarMHDError, FileNotFoundError):
    exit_code = ExitCode.CONFIG_NOT_FOUND

    def __init__(self, path: str):
        super().__init__(f"config not found: {path}")
        self.path = path


class NonpositiveConstantError(BipolarMHDError, ValueError):
    exit_code = ExitCode.NONPOSITIVE_CONSTANT

    def __init__(self, name: str, value: float):
        super().__init__(f"{name} must be positive, got {value!r}")
        self.name = name
        self.value = value


class CFLViolationError(BipolarMHDError):
    exit_code = ExitCode.CFL_VIOLATION

    def __init__(self, ratio: float, limit: float, step: Optional[int] = None):
        super().__init__(f"CFL ratio {ratio:.4g} exceeds limit {limit:.4g}", step)
        self.ratio = ratio
        self.limit = limit


class NonFiniteStateError(BipolarMHDError):
    exit_code = ExitCode.NON_FINITE_STATE


class GridMismatchError(BipolarMHDError, ValueError):
    exit_code = ExitCode.GRID_MISMATCH


class RankDeficiencyError(BipolarMHDError):
    exit_code = ExitCode.RANK_DEFICIENCY


class EnsembleTooLargeError(BipolarMHDError, ValueError):
    exit_code = ExitCode.ENSEMBLE_TOO_LARGE

    def __init__(self, m: int, dimension: int):
        super().__init__(f"ensemble larger than space: m={m} > {dimension}")
        self.m = m
        self.dimension = dimension


class EstimateDivergenceError(BipolarMHDError, ArithmeticError):
    exit_code = ExitCode.ESTIMATE_DIVERGENCE

    def __init__(self, detail: str = ""):
        message = "estimate chain diverges for these parameters"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class DegenerateInputError(BipolarMHDError, ValueError):
    exit_code = ExitCode.DEGENERATE_INPUT


class CheckpointFormatError(BipolarMHDError, ValueError):
    exit_code = ExitCode.CHECKPOINT_FORMAT


def exit_code_for(exc: BaseException) -> ExitCode:
    """Map any exception to the exit code the CLI returns for it"""
    if isinstance(exc, BipolarMHDError):
        return exc.exit_code
    return ExitCode.INTERNAL_ERROR
