"""
Physical constants, validation and the derived constants of the energy estimates.

The absorbing-ball radius and the kappa chain follow the a-priori estimates
for the bipolar MHD system: an L2 Gronwall step gives rho1, a uniform Gronwall
step on the curl norm of b gives kappa1 and kappa2, and a second one on the
H2 norm of u gives kappa3 and the attracting radius rho2 = sqrt(kappa3).
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

from .errors import EstimateDivergenceError, NonpositiveConstantError
from .types import (
    DomainConstants,
    DomainSpec,
    EstimateConstants,
    PhysicalParams,
    ValidationReport,
)

logger = logging.getLogger(__name__)

# Stiff symbols times dt may reach this value; the implicit part absorbs it
STIFF_DT_BUDGET = 10.0
ADVECTIVE_CFL_TARGET = 0.5


def validate(params: PhysicalParams, dom: DomainSpec) -> ValidationReport:
    """
    Check every invariant of the parameter and domain types.

    Returns:
        ValidationReport whose violations list is empty iff all invariants hold
    """
    report = ValidationReport()
    for name in ("eps", "mu0", "mu1", "mu", "s_diff"):
        value = getattr(params, name)
        if not (value > 0 and math.isfinite(value)):
            report.violations.append(f"{name} must be > 0")
    if not params.alpha >= 0:
        report.violations.append("alpha must be >= 0")
    if not params.alpha < 1:
        report.violations.append("alpha must be < 1")
    if not (params.f_amp >= 0 and math.isfinite(params.f_amp)):
        report.violations.append("f_amp must be >= 0")

    if dom.dim not in (2, 3):
        report.violations.append("dim must be 2 or 3")
    if not (dom.length > 0 and math.isfinite(dom.length)):
        report.violations.append("length must be > 0")
    if dom.resolution % 2 != 0:
        report.violations.append("resolution must be even")
    if dom.resolution < 8:
        report.violations.append("resolution must be >= 8")
    return report


def lambda1(dom: DomainSpec) -> float:
    """Smallest eigenvalue of -Laplacian on mean-zero periodic fields"""
    return dom.k_min ** 2


def resolve_constants(constants: DomainConstants, dom: DomainSpec) -> DomainConstants:
    """Fill the auto-derived constants and check that all are positive"""
    from .spectral import discrete_korn

    resolved = constants
    if constants.korn is None:
        resolved = replace(resolved, korn=discrete_korn(dom))
    if constants.lambda1 is None:
        resolved = replace(resolved, lambda1=lambda1(dom))
    require_positive(resolved)
    return resolved


def require_positive(constants: DomainConstants) -> None:
    for name, value in asdict(constants).items():
        if value is None:
            raise NonpositiveConstantError(name, float("nan"))
        if not value > 0:
            raise NonpositiveConstantError(name, value)


def nu0(params: PhysicalParams, constants: DomainConstants) -> float:
    """nu0 = min(mu1 * K, S)"""
    return min(params.mu1 * constants.korn, params.s_diff)


def nu1(params: PhysicalParams, constants: DomainConstants) -> float:
    """Source coefficient of the L2 Gronwall step, 4 / nu0"""
    return 4.0 / nu0(params, constants)


def absorbing_radius_sq(params: PhysicalParams, constants: DomainConstants) -> float:
    """rho1^2 = 2 nu1 |f|^2 / nu0, squared radius of the L2 absorbing ball"""
    n0 = nu0(params, constants)
    return 2.0 * (4.0 / n0) * params.f_amp ** 2 / n0


def kappa0(rho1_sq: float, f_amp: float, nu0_value: float, r: float) -> float:
    """Bound on the integral of ||u||_2^2 + ||b||_1^2 over a window of length r"""
    rho1 = math.sqrt(rho1_sq)
    return (rho1_sq + 2.0 * f_amp * rho1 * r) / (2.0 * nu0_value)


@dataclass
class KappaReport:
    """Every intermediate of the estimate chain for one window length r"""
    r: float
    nu0: float
    nu1: float
    rho1_sq: float
    kappa0: float
    kappa1: float
    kappa2: float
    kappa3: float
    rho2: float
    a1: float
    a2: float
    a3: float
    gronwall_rate_b: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def kappa_chain(
    params: PhysicalParams,
    constants: DomainConstants,
    r: Optional[float] = None,
    estimates: Optional[EstimateConstants] = None,
) -> KappaReport:
    """
    Evaluate the kappa chain.

    Args:
        params: physical parameters
        constants: resolved domain constants (korn must be set)
        r: window length, defaults to estimates.r
        estimates: gronwall_rate_b, c8, c9 (defaults all 1.0)

    Raises:
        NonpositiveConstantError: r <= 0
        EstimateDivergenceError: the exponential factors overflow
    """
    estimates = estimates or EstimateConstants()
    if r is None:
        r = estimates.r
    if not r > 0:
        raise NonpositiveConstantError("r", r)
    rate_b = estimates.gronwall_rate_b
    mu1_k = params.mu1 * constants.korn

    n0 = nu0(params, constants)
    n1 = 4.0 / n0
    rho1_sq = absorbing_radius_sq(params, constants)
    rho1 = math.sqrt(rho1_sq)
    k0 = kappa0(rho1_sq, params.f_amp, n0, r)

    try:
        k1 = (rate_b * k0 / r) * math.exp(rate_b * k0)
        k2 = k1 * (rate_b * k0 + 1.0) / params.s_diff
        a1 = 8.0 * estimates.c9 * k0 / params.mu1
        a2 = 8.0 * estimates.c8 * k1 * k2
        a3 = rho1 * (params.f_amp + rho1) + params.gamma_at_rest * constants.korn * k0 * r
        k3 = k1 + (a3 / r + a2) * math.exp(a1) / mu1_k
    except OverflowError as e:
        logger.warning(f"kappa chain overflow at r={r}: {e}")
        raise EstimateDivergenceError(str(e)) from e

    values = (k1, k2, a2, k3)
    if not all(math.isfinite(v) for v in values):
        raise EstimateDivergenceError("non-finite intermediate")

    return KappaReport(
        r=r,
        nu0=n0,
        nu1=n1,
        rho1_sq=rho1_sq,
        kappa0=k0,
        kappa1=k1,
        kappa2=k2,
        kappa3=k3,
        rho2=math.sqrt(k3),
        a1=a1,
        a2=a2,
        a3=a3,
        gronwall_rate_b=rate_b,
    )


def max_band_wavenumber(dom: DomainSpec) -> float:
    """Largest |k| kept by the 2/3 rule"""
    kc = (dom.resolution - 1) // 3
    return dom.k_min * kc * math.sqrt(dom.dim)


def default_dt(params: PhysicalParams, dom: DomainSpec, u_max: float = 0.0) -> float:
    """
    Time step that keeps the stiff symbols times dt within STIFF_DT_BUDGET,
    the explicit rest-viscosity term stable, and the advective CFL at 0.5.
    """
    k_max = max_band_wavenumber(dom)
    stiff = max(params.mu1 * k_max ** 4, params.s_diff * k_max ** 2)
    dt = STIFF_DT_BUDGET / stiff
    # explicit Gamma term: Gamma(0) |k|^2 dt / 2 <= 1
    dt = min(dt, 2.0 / (params.gamma_at_rest * k_max ** 2))
    if u_max > 0:
        dt = min(dt, ADVECTIVE_CFL_TARGET * dom.dx / u_max)
    logger.debug(f"default dt={dt:.4g} (k_max={k_max:.4g}, u_max={u_max:.4g})")
    return dt
