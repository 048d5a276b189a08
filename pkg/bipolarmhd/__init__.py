"""
bipolarmhd - Pseudo-spectral simulator for bipolar shear-thinning MHD

Incompressible magnetohydrodynamics of a bipolar (higher-gradient) fluid with
a shear-thinning stress on the periodic box, plus the analysis toolkit around
it: energy budget and absorbing-ball checks, the tangent model and its
finite-difference consistency test, the trace functional of an orthonormal
tangent frame, and the closed-form attractor dimension bound.
"""

from .analysis import (
    EnergyRecord,
    TraceEstimate,
    DimensionBoundReport,
    record_energy,
    gronwall_envelope,
    absorbing_check,
    dimension_bound,
    trace_qm,
    time_average_norms,
)
from .app import SimulationApp
from .config import RunConfig, load_config, apply_overrides
from .decorators import observer
from .dynamics import State, step, integrate
from .errors import BipolarMHDError
from .exit_codes import ExitCode
from .spectral import SpectralGrid, SpectralVectorField
from .tangent import TangentState, tangent_rhs, fd_consistency, lipschitz_envelope
from .types import (
    PhysicalParams,
    DomainSpec,
    DomainConstants,
    EstimateConstants,
    StepperConfig,
    Scheme,
    NormOrder,
)

__version__ = "0.1.0"
__all__ = [
    "SimulationApp",
    "observer",
    "RunConfig",
    "load_config",
    "apply_overrides",
    "PhysicalParams",
    "DomainSpec",
    "DomainConstants",
    "EstimateConstants",
    "StepperConfig",
    "Scheme",
    "NormOrder",
    "SpectralGrid",
    "SpectralVectorField",
    "State",
    "step",
    "integrate",
    "TangentState",
    "tangent_rhs",
    "fd_consistency",
    "lipschitz_envelope",
    "EnergyRecord",
    "TraceEstimate",
    "DimensionBoundReport",
    "record_energy",
    "gronwall_envelope",
    "absorbing_check",
    "dimension_bound",
    "trace_qm",
    "time_average_norms",
    "BipolarMHDError",
    "ExitCode",
]
