"""
Linearized (tangent) dynamics and the differentiability experiments.

The tangent step is the exact derivative of the discrete step in dynamics:
same projection, truncation and implicit multipliers, with the explicit part
replaced by its directional derivative at the base state of the substep.
"""

import asyncio
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import (
    CollocatedFields,
    Nonlinear,
    State,
    advance,
    check_same_time,
    collocate,
    integrate,
    linear_operators,
    step,
    step_count,
    stiff_symbols,
)
from .errors import BipolarMHDError, ConfigError, DegenerateInputError
from .rheology import stress_derivative, strain_rate
from .spectral import (
    SpectralGrid,
    SpectralVectorField,
    advect_values,
    project_coeffs,
    sobolev_norm_sq,
    symmetrize_coeffs,
)
from .thread_safe import BranchResults, resolve_workers
from .types import PhysicalParams, Scheme, StepperConfig

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TangentState:
    """Perturbation pair (xi, eta) of velocity and magnetic field"""

    xi: SpectralVectorField
    eta: SpectralVectorField
    t: float = 0.0
    history: Optional[Nonlinear] = field(default=None, repr=False)

    @classmethod
    def zeros(cls, grid: SpectralGrid, t: float = 0.0) -> "TangentState":
        return cls(SpectralVectorField.zeros(grid), SpectralVectorField.zeros(grid), t)

    @property
    def grid(self) -> SpectralGrid:
        return self.xi.grid

    def scaled(self, factor: float) -> "TangentState":
        history = None
        if self.history is not None:
            history = (self.history[0] * factor, self.history[1] * factor)
        return TangentState(self.xi * factor, self.eta * factor, self.t, history)

    def norm_sq(self) -> float:
        """Squared norm in H = L2 x L2"""
        return sobolev_norm_sq(self.xi) + sobolev_norm_sq(self.eta)

    def inner(self, other: "TangentState") -> float:
        volume = self.grid.volume
        return float(
            (np.vdot(self.xi.coeffs, other.xi.coeffs).real
             + np.vdot(self.eta.coeffs, other.eta.coeffs).real) * volume
        )


def perturbed(base: State, direction: TangentState, h: float) -> State:
    """base + h * direction"""
    return State(base.u + direction.xi * h, base.b + direction.eta * h, base.t)


class Linearization:
    """Derivative of the explicit terms at a fixed base state"""

    def __init__(self, base: State, params: PhysicalParams, fields: Optional[CollocatedFields] = None):
        self.base = base
        self.params = params
        self.grid = base.grid
        self.fields = fields or collocate(base, params)

    def nonlinear(self, tan: TangentState) -> Nonlinear:
        """Projected derivative (dN_u, dN_b) along tan, as coefficient arrays"""
        grid = self.grid
        grid.check_same(tan.grid)
        params = self.params
        base = self.fields
        mu = params.mu

        xi_values = tan.xi.values()
        grad_xi = grid.gradient(tan.xi.coeffs)
        stress = stress_derivative(base.strain, strain_rate(grad_xi), params)

        d_u = grid.divergence_of_tensor(stress)
        d_u = d_u - advect_values(grid, base.u, grad_xi) - advect_values(grid, xi_values, base.grad_u)

        eta_active = bool(np.any(tan.eta.coeffs))
        if base.b_active or eta_active:
            eta_values = tan.eta.values()
            grad_eta = grid.gradient(tan.eta.coeffs)
            d_u = d_u + mu * (
                advect_values(grid, base.b, grad_eta) + advect_values(grid, eta_values, base.grad_b)
            )
            d_b = -mu * (
                advect_values(grid, base.u, grad_eta)
                + advect_values(grid, xi_values, base.grad_b)
                - advect_values(grid, eta_values, base.grad_u)
                - advect_values(grid, base.b, grad_xi)
            )
            d_b = symmetrize_coeffs(grid, project_coeffs(grid, d_b))
        else:
            d_b = np.zeros_like(tan.eta.coeffs)
        d_u = symmetrize_coeffs(grid, project_coeffs(grid, d_u))
        return d_u, d_b

    def apply(self, tan: TangentState) -> Tuple[SpectralVectorField, SpectralVectorField]:
        """Full tangent generator including the implicit symbols"""
        d_u, d_b = self.nonlinear(tan)
        l_u, l_b = stiff_symbols(self.grid, self.params)
        return (
            SpectralVectorField(d_u - l_u * tan.xi.coeffs, self.grid),
            SpectralVectorField(d_b - l_b * tan.eta.coeffs, self.grid),
        )

    def quadratic_form(self, tan: TangentState) -> float:
        """(L tan, tan) in H"""
        d_xi, d_eta = self.apply(tan)
        return TangentState(d_xi, d_eta).inner(tan)


def tangent_rhs(base: State, tan: TangentState, params: PhysicalParams) -> Tuple[SpectralVectorField, SpectralVectorField]:
    """
    Projected tangent tendencies

        xi_t  = P[-u.grad xi - xi.grad u + mu(eta.grad b + b.grad eta) + Div(Gamma E(xi) - alpha A:E(xi))] - (mu1/2) Lap^2 xi
        eta_t = P[-mu(u.grad eta + xi.grad b - eta.grad u - b.grad xi)] + S Lap eta

    Raises:
        GridMismatchError: base and tan differ in grid or time
    """
    base.grid.check_same(tan.grid)
    check_same_time(base.t, tan.t)
    return Linearization(base, params).apply(tan)


def _advance_tangent(tan: TangentState, d: Nonlinear, grid: SpectralGrid, params: PhysicalParams,
                     cfg: StepperConfig, t_next: float) -> TangentState:
    ops = linear_operators(grid, params, cfg.dt, Scheme(cfg.scheme))
    prev_u, prev_b = tan.history if tan.history is not None else (None, None)
    xi = advance(tan.xi.coeffs, d[0], prev_u, ops.explicit_u, ops.implicit_u, cfg.dt, cfg.scheme)
    eta = advance(tan.eta.coeffs, d[1], prev_b, ops.explicit_b, ops.implicit_b, cfg.dt, cfg.scheme)
    xi = symmetrize_coeffs(grid, project_coeffs(grid, xi))
    eta = symmetrize_coeffs(grid, project_coeffs(grid, eta))
    history = d if cfg.scheme == Scheme.IMEX_CNAB2 else None
    return TangentState(SpectralVectorField(xi, grid), SpectralVectorField(eta, grid), t_next, history)


def step_pair(base: State, tan: TangentState, f: Optional[SpectralVectorField], params: PhysicalParams,
              cfg: StepperConfig) -> Tuple[State, TangentState]:
    """Advance base and tangent together; the base update is the one dynamics.step performs"""
    new_base, (new_tan,) = step_ensemble(base, [tan], f, params, cfg)
    return new_base, new_tan


def step_ensemble(
    base: State,
    tangents: Sequence[TangentState],
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    cfg: StepperConfig,
    workers: int = 1,
) -> Tuple[State, List[TangentState]]:
    """Advance a base state and several tangent members over one step"""
    grid = base.grid
    for tan in tangents:
        grid.check_same(tan.grid)
        check_same_time(base.t, tan.t)
    fields = collocate(base, params)
    new_base = step(base, f, params, cfg, fields=fields)
    linearization = Linearization(base, params, fields)

    def advance_member(tan: TangentState) -> TangentState:
        return _advance_tangent(tan, linearization.nonlinear(tan), grid, params, cfg, new_base.t)

    if workers > 1 and len(tangents) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            new_tangents = list(pool.map(advance_member, tangents))
    else:
        new_tangents = [advance_member(tan) for tan in tangents]
    return new_base, new_tangents


def evolve_pair(base: State, tan: TangentState, f: Optional[SpectralVectorField], params: PhysicalParams,
                cfg: StepperConfig, t_end: float) -> Tuple[State, TangentState]:
    steps = step_count(base.t, t_end, cfg.dt)
    t0 = base.t
    for i in range(1, steps + 1):
        try:
            base, tan = step_pair(base, tan, f, params, cfg)
        except BipolarMHDError as e:
            raise e.with_step(i)
        base.t = tan.t = t0 + i * cfg.dt
    return base, tan


# ---------------------------------------------------------------------------
# Finite-difference consistency
# ---------------------------------------------------------------------------

@dataclass
class ConsistencyEntry:
    h: float
    remainder: Optional[float] = None
    remainder_sum: Optional[float] = None
    quotient: Optional[float] = None
    failed: bool = False
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "fd_entry", **asdict(self)}


@dataclass
class ConsistencyReport:
    """
    Remainders r(h) = |S(T)(x0 + h d) - S(T)x0 - h L(T)d| of the tangent prediction.

    remainder is the root-sum-square of the velocity and magnetic parts,
    remainder_sum their sum; slope is the least-squares log-log slope of
    remainder against h (None with fewer than two successful entries).
    """
    T: float
    steps: int
    entries: List[ConsistencyEntry]
    slope: Optional[float]
    quotient_decreasing: bool

    @property
    def failures(self) -> List[ConsistencyEntry]:
        return [entry for entry in self.entries if entry.failed]

    def summary(self) -> Dict[str, Any]:
        return {
            "kind": "fd_summary",
            "T": self.T,
            "steps": self.steps,
            "h_count": len(self.entries),
            "failures": len(self.failures),
            "slope": self.slope,
            "quotient_decreasing": self.quotient_decreasing,
        }

    def to_records(self) -> List[Dict[str, Any]]:
        return [entry.to_dict() for entry in self.entries] + [self.summary()]


def normalize_direction(direction: TangentState) -> TangentState:
    """Scale so that |xi| + |eta| = 1"""
    total = math.sqrt(sobolev_norm_sq(direction.xi)) + math.sqrt(sobolev_norm_sq(direction.eta))
    if total == 0.0 or not math.isfinite(total):
        raise DegenerateInputError("direction must be nonzero")
    return TangentState(direction.xi * (1.0 / total), direction.eta * (1.0 / total), direction.t)


def _check_h_list(h_list: Sequence[float]) -> List[float]:
    values = [float(h) for h in h_list]
    if not values:
        raise ConfigError("h_list must not be empty")
    if any(not h > 0 for h in values):
        raise ConfigError("h_list entries must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ConfigError("h_list must be strictly decreasing")
    return values


def fit_slope(h: Sequence[float], r: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log r against log h over positive remainders"""
    pairs = [(a, b) for a, b in zip(h, r) if b is not None and b > 0]
    if len(pairs) < 2:
        return None
    x = np.log([a for a, _ in pairs])
    y = np.log([b for _, b in pairs])
    return float(np.polyfit(x, y, 1)[0])


async def fd_consistency_async(
    base0: State,
    direction: TangentState,
    h_list: Sequence[float],
    T: float,
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    cfg: StepperConfig,
    workers: Optional[int] = None,
) -> ConsistencyReport:
    """
    Finite-difference check of the tangent model.

    The reference (base + tangent) and every h-branch run as worker threads
    joined at one barrier. A failing branch becomes an entry with failed=True.
    """
    h_values = _check_h_list(h_list)
    direction = normalize_direction(direction)
    direction.t = base0.t
    t_end = base0.t + T
    steps = step_count(base0.t, t_end, cfg.dt)
    workers = resolve_workers(workers)
    limiter = asyncio.Semaphore(workers)
    results = BranchResults()

    async def reference() -> Tuple[State, TangentState]:
        async with limiter:
            return await asyncio.to_thread(evolve_pair, base0, direction, f, params, cfg, t_end)

    async def branch(h: float) -> None:
        async with limiter:
            try:
                run = await asyncio.to_thread(
                    integrate, perturbed(base0, direction, h), f, params, cfg, t_end
                )
                results.record(h, run.final)
            except BipolarMHDError as e:
                logger.warning(f"fd branch h={h:g} failed: {e}")
                results.fail(h, str(e))

    gathered = await asyncio.gather(reference(), *(branch(h) for h in h_values))
    base_T, tan_T = gathered[0]

    entries: List[ConsistencyEntry] = []
    for h in h_values:
        reason = results.failure(h)
        if reason is not None:
            entries.append(ConsistencyEntry(h=h, failed=True, error=reason))
            continue
        final = results.get(h)
        du = final.u - base_T.u - tan_T.xi * h
        db = final.b - base_T.b - tan_T.eta * h
        ru = math.sqrt(sobolev_norm_sq(du))
        rb = math.sqrt(sobolev_norm_sq(db))
        remainder = math.hypot(ru, rb)
        entries.append(ConsistencyEntry(
            h=h, remainder=remainder, remainder_sum=ru + rb, quotient=remainder / h,
        ))
        logger.debug(f"fd h={h:g}: r={remainder:.3e}, r/h={remainder / h:.3e}")

    good = [entry for entry in entries if not entry.failed]
    if len(good) < 2:
        logger.warning("fd_consistency: fewer than two successful h entries, no slope fit")
    slope = fit_slope([e.h for e in good], [e.remainder for e in good])
    quotients = [e.quotient for e in good]
    decreasing = all(b < a for a, b in zip(quotients, quotients[1:]))
    return ConsistencyReport(T=T, steps=steps, entries=entries, slope=slope, quotient_decreasing=decreasing)


def fd_consistency(
    base0: State,
    direction: TangentState,
    h_list: Sequence[float],
    T: float,
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    cfg: StepperConfig,
    workers: Optional[int] = None,
) -> ConsistencyReport:
    """Blocking wrapper around fd_consistency_async"""
    return asyncio.run(fd_consistency_async(base0, direction, h_list, T, f, params, cfg, workers))


# ---------------------------------------------------------------------------
# Lipschitz envelope
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeReport:
    """
    Phi(t) = |w|^2 + |m|^2 of the difference of two trajectories.

    eta_hat is the smallest rate with Phi(t) <= Phi(0) exp(eta_hat t) on every
    recorded time; max_local_slope is the steepest log Phi slope between records.
    """
    times: List[float]
    phi: List[float]
    eta_hat: float
    max_local_slope: float

    @property
    def ratios(self) -> List[float]:
        return [p / self.phi[0] for p in self.phi]

    def envelope_holds(self, slack: float = 1e-9) -> bool:
        t0 = self.times[0]
        return all(
            p <= self.phi[0] * math.exp(self.eta_hat * (t - t0) + slack)
            for t, p in zip(self.times, self.phi)
        )

    def to_records(self) -> List[Dict[str, Any]]:
        rows = [
            {"kind": "envelope", "t": t, "phi": p, "ratio": p / self.phi[0]}
            for t, p in zip(self.times, self.phi)
        ]
        rows.append({"kind": "envelope_summary", "eta_hat": self.eta_hat,
                     "max_local_slope": self.max_local_slope})
        return rows


def lipschitz_envelope(
    base0: State,
    pert0: TangentState,
    T: float,
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    cfg: StepperConfig,
    stride: int = 1,
) -> EnvelopeReport:
    """
    Evolve base0 and base0 + pert0 and fit the growth of their squared distance.

    Raises:
        DegenerateInputError: pert0 is zero or T yields no step
    """
    phi0 = pert0.norm_sq()
    if phi0 == 0.0:
        raise DegenerateInputError("perturbation must be nonzero")
    steps = step_count(base0.t, base0.t + T, cfg.dt)
    if steps < 1:
        raise DegenerateInputError("T must cover at least one step")

    times: List[float] = [base0.t]
    phi: List[float] = [phi0]
    t0 = base0.t
    a = base0
    b = perturbed(base0, pert0, 1.0)
    for i in range(1, steps + 1):
        try:
            a = step(a, f, params, cfg)
            b = step(b, f, params, cfg)
        except BipolarMHDError as e:
            raise e.with_step(i)
        if i % stride == 0 or i == steps:
            t = t0 + i * cfg.dt
            times.append(t)
            phi.append(sobolev_norm_sq(b.u - a.u) + sobolev_norm_sq(b.b - a.b))

    rates = [math.log(p / phi0) / (t - t0) for t, p in zip(times[1:], phi[1:]) if p > 0]
    eta_hat = max(rates) if rates else -math.inf
    local = [
        math.log(p1 / p0) / (t1 - t0_)
        for t0_, t1, p0, p1 in zip(times, times[1:], phi, phi[1:])
        if p0 > 0 and p1 > 0
    ]
    max_local = max(local) if local else -math.inf
    logger.info(f"lipschitz envelope: eta_hat={eta_hat:.4g} over T={T}")
    return EnvelopeReport(times=times, phi=phi, eta_hat=eta_hat, max_local_slope=max_local)
