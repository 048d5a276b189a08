"""
Type definitions for bipolarmhd
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional


class Scheme(str, Enum):
    """Time-stepping schemes"""
    IMEX_EULER = "imex_euler"
    IMEX_CNAB2 = "imex_cnab2"


class NormOrder(str, Enum):
    """Discrete norms available through spectral.sobolev_norm_sq"""
    L2 = "L2"
    H1 = "H1"
    H2 = "H2"
    V1DISS = "V1diss"
    V2CURL = "V2curl"
    W1P = "W1p"


class CoercivityForm(str, Enum):
    """Which right-hand side coercivity_gap subtracts"""
    STRESS = "stress"
    PRINTED = "printed"


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants of the bipolar MHD system"""
    eps: float = 1.0       # stress regularizer
    mu0: float = 1.0       # consistency coefficient
    mu1: float = 0.05      # bipolar viscosity
    alpha: float = 0.5     # shear-thinning exponent
    mu: float = 1.0        # Lorentz/induction coupling
    s_diff: float = 0.5    # magnetic diffusivity S
    f_amp: float = 0.0     # L2 norm of the body force

    @property
    def p(self) -> float:
        return 2.0 - self.alpha

    @property
    def gamma_at_rest(self) -> float:
        """Effective viscosity at zero strain, mu0 * eps^(-alpha/2)"""
        return self.mu0 * self.eps ** (-self.alpha / 2.0)


@dataclass(frozen=True)
class DomainSpec:
    """Periodic box [0, length)^dim resolved by resolution modes per axis"""
    dim: int = 2
    length: float = 2.0 * math.pi
    resolution: int = 32

    @property
    def k_min(self) -> float:
        return 2.0 * math.pi / self.length

    @property
    def dx(self) -> float:
        return self.length / self.resolution

    @property
    def volume(self) -> float:
        return self.length ** self.dim


@dataclass(frozen=True)
class DomainConstants:
    """
    Constants of the functional inequalities.

    korn and lambda1 may be left as None, in which case params.resolve_constants
    derives them from the grid (discrete Korn constant and (2*pi/L)^2).
    """
    korn: Optional[float] = None
    embed: float = 1.0
    d_const: float = 1.0
    stokes_c: float = 1.0
    lambda1: Optional[float] = None
    c_tilde: float = 1.0


@dataclass(frozen=True)
class EstimateConstants:
    """Proof-internal constants of the kappa chain and the window length r"""
    gronwall_rate_b: float = 1.0
    c8: float = 1.0
    c9: float = 1.0
    r: float = 1.0


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-3
    scheme: Scheme = Scheme.IMEX_EULER
    cfl_limit: float = 0.5


@dataclass
class ValidationReport:
    """Violated invariants, empty when everything holds"""
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "ValidationReport(ok)"
        return "ValidationReport(" + "; ".join(self.violations) + ")"
