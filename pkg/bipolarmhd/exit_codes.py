"""
Process exit codes

Every command of the bipolarmhd CLI returns one of these codes; errors raised
by the library carry the code they map to.
"""

from enum import IntEnum


class ExitCode(IntEnum):
    """bipolarmhd exit codes"""

    SUCCESS = 0
    INTERNAL_ERROR = 1
    USAGE_ERROR = 2

    # Configuration
    CONFIG_ERROR = 3
    CONFIG_NOT_FOUND = 4
    NONPOSITIVE_CONSTANT = 5

    # Integration
    CFL_VIOLATION = 10
    NON_FINITE_STATE = 11
    GRID_MISMATCH = 12

    # Analysis
    RANK_DEFICIENCY = 20
    ENSEMBLE_TOO_LARGE = 21
    ESTIMATE_DIVERGENCE = 22
    DEGENERATE_INPUT = 23

    # Files
    CHECKPOINT_FORMAT = 30


EXIT_CODE_DESCRIPTIONS = {
    ExitCode.SUCCESS: "success",
    ExitCode.INTERNAL_ERROR: "internal error",
    ExitCode.USAGE_ERROR: "bad command line",
    ExitCode.CONFIG_ERROR: "invalid configuration",
    ExitCode.CONFIG_NOT_FOUND: "config not found",
    ExitCode.NONPOSITIVE_CONSTANT: "nonpositive constant",
    ExitCode.CFL_VIOLATION: "CFL limit exceeded",
    ExitCode.NON_FINITE_STATE: "non-finite state",
    ExitCode.GRID_MISMATCH: "grid or time mismatch",
    ExitCode.RANK_DEFICIENCY: "rank deficiency in orthonormalization",
    ExitCode.ENSEMBLE_TOO_LARGE: "ensemble larger than space",
    ExitCode.ESTIMATE_DIVERGENCE: "estimate chain diverges",
    ExitCode.DEGENERATE_INPUT: "degenerate input",
    ExitCode.CHECKPOINT_FORMAT: "malformed checkpoint",
}


def describe(code: int) -> str:
    """Human-readable description of an exit code"""
    try:
        return EXIT_CODE_DESCRIPTIONS[ExitCode(code)]
    except ValueError:
        return f"unknown exit code {code}"
