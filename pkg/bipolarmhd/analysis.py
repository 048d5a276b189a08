"""
Energy budget, absorbing-ball checks, dimension bound and the trace functional

record_energy splits the energy balance
    1/2 d/dt (|u|^2 + |b|^2) = (f, u) - mu1 V1diss(u) - (Gamma E, E) - S |curl b|^2
into its terms. dimension_bound evaluates the closed-form bound on the number
of Lyapunov exponents needed before their sum turns negative; trace_qm
estimates the same trace numerically from an orthonormalized tangent frame.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dynamics import State, step_count
from .errors import (
    BipolarMHDError,
    DegenerateInputError,
    EnsembleTooLargeError,
    EstimateDivergenceError,
    NonpositiveConstantError,
    RankDeficiencyError,
)
from .params import absorbing_radius_sq, kappa_chain, nu0, nu1
from .spectral import (
    SpectralGrid,
    SpectralVectorField,
    dissipation_quadrature,
    inner,
    random_solenoidal,
    sobolev_norm_sq,
)
from .tangent import Linearization, TangentState, step_ensemble
from .thread_safe import resolve_workers
from .types import (
    DomainConstants,
    DomainSpec,
    EstimateConstants,
    NormOrder,
    PhysicalParams,
    StepperConfig,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Energy budget
# ---------------------------------------------------------------------------

@dataclass
class EnergyRecord:
    t: float
    y: float
    h2_u: float
    v2_b: float
    diss_bipolar: float
    diss_gamma: float
    diss_mag: float
    work: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def dissipation(self) -> float:
        return self.diss_bipolar + self.diss_gamma + self.diss_mag


ENERGY_FIELDS = ("t", "y", "h2_u", "v2_b", "diss_bipolar", "diss_gamma", "diss_mag", "work")


def record_energy(state: State, f: Optional[SpectralVectorField], params: PhysicalParams) -> EnergyRecord:
    u, b = state.u, state.b
    v2_b = sobolev_norm_sq(b, NormOrder.V2CURL)
    return EnergyRecord(
        t=state.t,
        y=sobolev_norm_sq(u) + sobolev_norm_sq(b),
        h2_u=sobolev_norm_sq(u, NormOrder.H2),
        v2_b=v2_b,
        diss_bipolar=params.mu1 * sobolev_norm_sq(u, NormOrder.V1DISS),
        diss_gamma=dissipation_quadrature(u, params),
        diss_mag=params.s_diff * v2_b,
        work=inner(f, u) if f is not None else 0.0,
    )


def energy_rate(record: EnergyRecord) -> float:
    """Right-hand side of the balance for d/dt (1/2 y)"""
    return record.work - record.dissipation


# ---------------------------------------------------------------------------
# Absorbing ball and Gronwall envelope
# ---------------------------------------------------------------------------

def gronwall_envelope(y0: float, params: PhysicalParams, constants: DomainConstants, t: float) -> float:
    """
    y0 exp(-rate t) + (nu1 |f|^2 / rate)(1 - exp(-rate t)), rate = nu0 lambda1
    """
    rate = nu0(params, constants) * constants.lambda1
    decay = math.exp(-rate * t)
    return y0 * decay + (nu1(params, constants) * params.f_amp ** 2 / rate) * (1.0 - decay)


@dataclass
class AbsorbingReport:
    absorbed: bool
    t_absorbed: Optional[float]
    rho1_sq: float
    envelope_violations: int
    first_violation_t: Optional[float]
    samples: int

    @property
    def status(self) -> str:
        return "absorbed" if self.absorbed else "not yet absorbed"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "absorbing", "status": self.status, **asdict(self)}


def absorbing_check(
    records: Sequence[EnergyRecord],
    params: PhysicalParams,
    constants: DomainConstants,
    tol: float = 1e-12,
    envelope_rtol: float = 1e-9,
) -> AbsorbingReport:
    """
    First time after which y stays in the ball y <= rho1^2, plus a pointwise
    check of y against the Gronwall envelope started at the first record.
    """
    if not records:
        raise DegenerateInputError("energy series is empty")
    rho1_sq = absorbing_radius_sq(params, constants)
    t0, y0 = records[0].t, records[0].y

    t_absorbed: Optional[float] = None
    for record in reversed(records):
        if record.y > rho1_sq + tol:
            break
        t_absorbed = record.t

    violations = 0
    first_violation: Optional[float] = None
    for record in records:
        bound = gronwall_envelope(y0, params, constants, record.t - t0)
        if record.y > bound * (1.0 + envelope_rtol) + tol:
            violations += 1
            if first_violation is None:
                first_violation = record.t
    if violations:
        logger.warning(f"Gronwall envelope violated at {violations} records, first at t={first_violation}")

    return AbsorbingReport(
        absorbed=t_absorbed is not None,
        t_absorbed=t_absorbed,
        rho1_sq=rho1_sq,
        envelope_violations=violations,
        first_violation_t=first_violation,
        samples=len(records),
    )


# ---------------------------------------------------------------------------
# Dimension bound
# ---------------------------------------------------------------------------

def delta_prime(alpha: float) -> float:
    return 2.0 * (2.0 - alpha) / (4.0 + alpha)


def k_tilde(params: PhysicalParams, constants: DomainConstants) -> float:
    """2(1 - alpha) C~^((p-2)/p)"""
    p = params.p
    return 2.0 * (1.0 - params.alpha) * constants.c_tilde ** ((p - 2.0) / p)


def gamma_prime_branch(params: PhysicalParams) -> str:
    return "alpha-zero" if params.alpha == 0.0 else "general"


def gamma_prime(params: PhysicalParams, constants: DomainConstants) -> float:
    """
    Coercivity rate of the trace estimate.

    alpha = 0 takes K~/d directly; otherwise
    (K~/(delta' d)) (mu1 K delta' / (K~ (1 - delta')))^(1/(1 - delta')).
    """
    kt = k_tilde(params, constants)
    if params.alpha == 0.0:
        return kt / constants.d_const
    dp = delta_prime(params.alpha)
    base = params.mu1 * constants.korn * dp / (kt * (1.0 - dp))
    return (kt / (dp * constants.d_const)) * base ** (1.0 / (1.0 - dp))


def lambda_big(params: PhysicalParams, constants: DomainConstants) -> float:
    """4 lambda1 |f|^2 / (mu1 K)"""
    return 4.0 * constants.lambda1 * params.f_amp ** 2 / (params.mu1 * constants.korn)


def _trace_source(params: PhysicalParams, constants: DomainConstants, gp: float) -> float:
    mu_sq = params.mu ** 2
    S = params.s_diff
    return constants.embed ** 2 * (1.0 / S + 2.0 * mu_sq / gp) + 8.0 * mu_sq / S


def trace_upper_bound(params: PhysicalParams, constants: DomainConstants, dom: DomainSpec, m: int) -> float:
    """
    Upper bound on -q_m:
    (C^2/(mu1 K)(1/S + 2 mu^2/gamma') + 8 mu^2/(mu1 K S)) Lambda - (gamma' c~ lambda1 / 2) m^(1 + 2/n)
    """
    gp = gamma_prime(params, constants)
    mu1_k = params.mu1 * constants.korn
    source = _trace_source(params, constants, gp) / mu1_k * lambda_big(params, constants)
    sink = 0.5 * gp * constants.stokes_c * constants.lambda1 * m ** (1.0 + 2.0 / dom.dim)
    return source - sink


def time_average_bounds(params: PhysicalParams, constants: DomainConstants) -> Dict[str, float]:
    """Limits of the long-time averages of ||u||_2^2 and ||b||_1^2"""
    lam = lambda_big(params, constants)
    return {
        "h2_u": lam / (params.mu1 * constants.korn),
        "v2_b": lam / params.s_diff,
    }


@dataclass
class DimensionBoundReport:
    dim: int
    alpha: float
    delta_prime: float
    gamma_prime: float
    gamma_branch: str
    k_tilde: float
    lambda_big: float
    nu0: float
    nu1: float
    rho1_sq: float
    kappa0: Optional[float]
    kappa1: Optional[float]
    kappa2: Optional[float]
    kappa3: Optional[float]
    rho2: Optional[float]
    bracket: float
    m_bound: int
    trace_bound: float

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "dimension_bound", **asdict(self)}


def check_constants(params: PhysicalParams, constants: DomainConstants) -> None:
    for name in ("korn", "embed", "d_const", "stokes_c", "lambda1", "c_tilde"):
        value = getattr(constants, name)
        if value is None or not value > 0:
            raise NonpositiveConstantError(name, value)
    for name in ("mu1", "mu", "s_diff", "mu0", "eps"):
        value = getattr(params, name)
        if not value > 0:
            raise NonpositiveConstantError(name, value)


def dimension_bound(
    params: PhysicalParams,
    constants: DomainConstants,
    dom: DomainSpec,
    estimates: Optional[EstimateConstants] = None,
) -> DimensionBoundReport:
    """
    Bracket B = [(2 Lambda/(gamma' c~ lambda1 mu1 K)) (C^2(1/S + 2mu^2/gamma') + 8mu^2/S)]^(n/(n+2))
    and m_bound = floor(B) + 1, the smallest integer strictly above B.

    The kappa entries are None when the chain overflows.

    Raises:
        NonpositiveConstantError: any constant <= 0
    """
    check_constants(params, constants)
    n = dom.dim
    gp = gamma_prime(params, constants)
    lam = lambda_big(params, constants)
    mu1_k = params.mu1 * constants.korn
    inner_value = (2.0 * lam / (gp * constants.stokes_c * constants.lambda1 * mu1_k)) * _trace_source(params, constants, gp)
    bracket = inner_value ** (n / (n + 2.0))
    m_bound = int(math.floor(bracket)) + 1

    kappas: Dict[str, Optional[float]] = dict.fromkeys(("kappa0", "kappa1", "kappa2", "kappa3", "rho2"))
    try:
        chain = kappa_chain(params, constants, estimates=estimates)
        kappas = {key: getattr(chain, key) for key in kappas}
    except EstimateDivergenceError as e:
        logger.warning(f"dimension bound: {e}")

    return DimensionBoundReport(
        dim=n,
        alpha=params.alpha,
        delta_prime=delta_prime(params.alpha),
        gamma_prime=gp,
        gamma_branch=gamma_prime_branch(params),
        k_tilde=k_tilde(params, constants),
        lambda_big=lam,
        nu0=nu0(params, constants),
        nu1=nu1(params, constants),
        rho1_sq=absorbing_radius_sq(params, constants),
        bracket=bracket,
        m_bound=m_bound,
        trace_bound=trace_upper_bound(params, constants, dom, m_bound),
        **kappas,
    )


# ---------------------------------------------------------------------------
# Trace functional
# ---------------------------------------------------------------------------

@dataclass
class TraceEstimate:
    """
    q_m is the time average of -sum_i (L Phi_i, Phi_i) over an orthonormal
    tangent frame, sampled after each re-orthonormalization.
    lyapunov_sum is the growth rate of the frame volume over the same window.
    """
    m: int
    q_m: float
    samples: int
    t_span: float
    lyapunov_sum: float
    series: List[float] = field(default_factory=list, repr=False)
    estimator: str = "single-trajectory finite-time average"

    def to_dict(self, include_series: bool = False) -> Dict[str, Any]:
        data = asdict(self)
        if not include_series:
            data.pop("series")
        return {"kind": "trace", **data}


def tangent_space_dimension(grid: SpectralGrid) -> int:
    """Real dimension of band-limited solenoidal (u, b) pairs"""
    return 2 * (grid.n - 1) * grid.band_count()


def zero_state_symbols(params: PhysicalParams, grid: SpectralGrid) -> np.ndarray:
    """
    Dissipation rates of the linearization at the origin, one entry per real
    direction: velocity (mu1 |k|^4 + Gamma(0) |k|^2)/2 and magnetic S |k|^2,
    each n-1 times per retained k != 0.
    """
    k_sq = grid.k_sq[grid.band]
    k_sq = k_sq[k_sq > 0]
    d_u = 0.5 * params.mu1 * k_sq ** 2 + 0.5 * params.gamma_at_rest * k_sq
    d_b = params.s_diff * k_sq
    rates = np.concatenate([np.repeat(d_u, grid.n - 1), np.repeat(d_b, grid.n - 1)])
    return np.sort(rates)


def analytic_trace_zero_state(params: PhysicalParams, grid: SpectralGrid, m: int) -> float:
    """Sum of the m smallest zero-state dissipation rates"""
    rates = zero_state_symbols(params, grid)
    if m > rates.size:
        raise EnsembleTooLargeError(m, int(rates.size))
    return float(np.sum(rates[:m]))


def random_frame(grid: SpectralGrid, m: int, seed: int, t: float = 0.0) -> List[TangentState]:
    rng = np.random.default_rng(seed)
    return [
        TangentState(random_solenoidal(grid, rng), random_solenoidal(grid, rng), t)
        for _ in range(m)
    ]


def orthonormalize(frame: Sequence[TangentState], step: Optional[int] = None,
                   rtol: float = 1e-12) -> Tuple[List[TangentState], np.ndarray]:
    """
    Modified Gram-Schmidt in H. Returns the orthonormal frame and the
    diagonal of the triangular factor. CNAB2 histories are dropped.

    Raises:
        RankDeficiencyError: a member is (numerically) in the span of the previous ones
    """
    grid = frame[0].grid
    volume = grid.volume
    xi = [member.xi.coeffs.copy() for member in frame]
    eta = [member.eta.coeffs.copy() for member in frame]
    diag = np.zeros(len(frame))

    def dot(i: int, j: int) -> float:
        return float((np.vdot(xi[i], xi[j]).real + np.vdot(eta[i], eta[j]).real) * volume)

    for i in range(len(frame)):
        original = math.sqrt(dot(i, i))
        for j in range(i):
            c = dot(j, i)
            xi[i] -= c * xi[j]
            eta[i] -= c * eta[j]
        norm = math.sqrt(dot(i, i))
        if norm == 0.0 or norm <= rtol * original or not math.isfinite(norm):
            raise RankDeficiencyError(f"frame member {i} is linearly dependent", step)
        xi[i] /= norm
        eta[i] /= norm
        diag[i] = norm

    t = frame[0].t
    out = [
        TangentState(SpectralVectorField(x, grid), SpectralVectorField(e, grid), t)
        for x, e in zip(xi, eta)
    ]
    return out, diag


def frame_trace(base: State, frame: Sequence[TangentState], params: PhysicalParams) -> float:
    """-sum_i (L Phi_i, Phi_i) at the base state"""
    linearization = Linearization(base, params)
    return -sum(linearization.quadratic_form(member) for member in frame)


def trace_qm(
    base: State,
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    cfg: StepperConfig,
    m: int,
    steps: int,
    reortho_stride: int = 1,
    transient_steps: int = 0,
    frame_seed: int = 0,
    workers: Optional[int] = None,
) -> TraceEstimate:
    """
    Co-evolve base and an m-member tangent frame.

    The frame is re-orthonormalized every reortho_stride steps; after
    transient_steps each orthonormalization contributes one trace sample and
    its log norms to the Lyapunov-sum proxy.

    Raises:
        EnsembleTooLargeError: m above the tangent space dimension
        RankDeficiencyError: frame collapse, with the step index
    """
    grid = base.grid
    if m < 1:
        raise DegenerateInputError("m must be >= 1")
    dimension = tangent_space_dimension(grid)
    if m > dimension:
        raise EnsembleTooLargeError(m, dimension)
    if reortho_stride < 1 or steps < reortho_stride:
        raise DegenerateInputError("steps must cover at least one re-orthonormalization")
    workers = resolve_workers(workers)

    frame, _ = orthonormalize(random_frame(grid, m, frame_seed, base.t), step=0)
    samples: List[float] = []
    log_growth = 0.0
    windows = 0
    t0 = base.t

    total = transient_steps + steps
    for i in range(1, total + 1):
        try:
            base, frame = step_ensemble(base, frame, f, params, cfg, workers=workers)
        except BipolarMHDError as e:
            raise e.with_step(i)
        base.t = t0 + i * cfg.dt
        for member in frame:
            member.t = base.t
        if i % reortho_stride != 0:
            continue
        frame, diag = orthonormalize(frame, step=i)
        if i <= transient_steps:
            continue
        log_growth += float(np.sum(np.log(diag)))
        windows += 1
        samples.append(frame_trace(base, frame, params))

    if not samples:
        raise DegenerateInputError("no trace samples after the transient")
    t_span = windows * reortho_stride * cfg.dt
    estimate = TraceEstimate(
        m=m,
        q_m=float(np.mean(samples)),
        samples=len(samples),
        t_span=t_span,
        lyapunov_sum=log_growth / t_span,
        series=samples,
    )
    logger.info(f"trace m={m}: q_m={estimate.q_m:.6g}, lyapunov sum={estimate.lyapunov_sum:.6g}")
    return estimate


# ---------------------------------------------------------------------------
# Time averages
# ---------------------------------------------------------------------------

@dataclass
class TimeAverages:
    avg_h2_u: float
    avg_v2_b: float
    drift_h2_u: float
    drift_v2_b: float
    running_h2_u: List[float] = field(default_factory=list, repr=False)
    running_v2_b: List[float] = field(default_factory=list, repr=False)

    def as_pair(self):
        return self.avg_h2_u, self.avg_v2_b


def _running_average(t: np.ndarray, values: np.ndarray) -> np.ndarray:
    if t.size == 1:
        return values.copy()
    integral = cumulative_trapezoid(values, t, initial=0.0)
    span = t - t[0]
    out = np.empty_like(values)
    out[0] = values[0]
    out[1:] = integral[1:] / span[1:]
    return out


def _drift(running: np.ndarray) -> float:
    """Relative change of the running average over the last half of the window"""
    final = running[-1]
    mid = running[(running.size - 1) // 2]
    if final == 0.0:
        return 0.0 if mid == 0.0 else math.inf
    return abs(final - mid) / abs(final)


def time_average_norms(records: Sequence[EnergyRecord]) -> TimeAverages:
    """Running time averages of ||u||_2^2 and ||b||_1^2 by trapezoidal quadrature"""
    if not records:
        raise DegenerateInputError("energy series is empty")
    t = np.array([r.t for r in records])
    h2 = _running_average(t, np.array([r.h2_u for r in records]))
    v2 = _running_average(t, np.array([r.v2_b for r in records]))
    return TimeAverages(
        avg_h2_u=float(h2[-1]),
        avg_v2_b=float(v2[-1]),
        drift_h2_u=_drift(h2),
        drift_v2_b=_drift(v2),
        running_h2_u=h2.tolist(),
        running_v2_b=v2.tolist(),
    )
