"""
Right-hand side and IMEX time stepping of the projected bipolar MHD system

    u_t = P[f - u.grad u + mu b.grad b + Div(Gamma(|E(u)|^2) E(u))] - (mu1/2) Lap^2 u
    b_t = P[-mu (u.grad b - b.grad u)] + S Lap b

The constant-coefficient symbols (mu1/2)|k|^4 and S|k|^2 are integrated
implicitly; everything else is explicit. imex_euler is the Lawson (integrating
factor) Euler step, imex_cnab2 is Crank-Nicolson / Adams-Bashforth 2.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Tuple, Union

import numpy as np

from .decorators import ObserverHandler, as_observers, stride_matches
from .errors import BipolarMHDError, CFLViolationError, GridMismatchError, NonFiniteStateError
from .rheology import gamma, strain_rate, strain_sq
from .spectral import (
    SpectralGrid,
    SpectralVectorField,
    advect_values,
    project_coeffs,
    symmetrize_coeffs,
)
from .types import PhysicalParams, Scheme, StepperConfig

logger = logging.getLogger(__name__)

Nonlinear = Tuple[np.ndarray, np.ndarray]


@dataclass(eq=False)
class State:
    """Velocity and magnetic field at time t; history holds the previous nonlinear terms for CNAB2"""

    u: SpectralVectorField
    b: SpectralVectorField
    t: float = 0.0
    history: Optional[Nonlinear] = field(default=None, repr=False)

    @classmethod
    def zeros(cls, grid: SpectralGrid, t: float = 0.0) -> "State":
        return cls(SpectralVectorField.zeros(grid), SpectralVectorField.zeros(grid), t)

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid

    def copy(self) -> "State":
        return State(self.u.copy(), self.b.copy(), self.t, self.history)

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.b.is_finite()


@dataclass
class CollocatedFields:
    """Collocation values of a state shared by the nonlinear term and its linearization"""

    u: np.ndarray
    b: np.ndarray
    grad_u: np.ndarray
    grad_b: np.ndarray
    strain: np.ndarray
    gamma: np.ndarray
    b_active: bool


def collocate(state: State, params: PhysicalParams) -> CollocatedFields:
    grid = state.grid
    grad_u = grid.gradient(state.u.coeffs)
    strain = strain_rate(grad_u)
    b_active = bool(np.any(state.b.coeffs))
    if b_active:
        b_values = state.b.values()
        grad_b = grid.gradient(state.b.coeffs)
    else:
        b_values = np.zeros((grid.n,) + grid.shape)
        grad_b = np.zeros((grid.n, grid.n) + grid.shape)
    return CollocatedFields(
        u=state.u.values(),
        b=b_values,
        grad_u=grad_u,
        grad_b=grad_b,
        strain=strain,
        gamma=gamma(strain_sq(strain), params),
        b_active=b_active,
    )


def nonlinear_terms(
    state: State,
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    fields: Optional[CollocatedFields] = None,
) -> Nonlinear:
    """
    Projected explicit tendencies (N_u, N_b) as coefficient arrays.

    N_u = P[f - u.grad u + mu b.grad b + Div(Gamma E)], N_b = P[-mu(u.grad b - b.grad u)]
    """
    grid = state.grid
    fields = fields or collocate(state, params)

    n_u = grid.divergence_of_tensor(fields.gamma * fields.strain)
    n_u = n_u - advect_values(grid, fields.u, fields.grad_u)
    if f is not None:
        grid.check_same(f.grid)
        n_u = n_u + f.coeffs
    if fields.b_active:
        n_u = n_u + params.mu * advect_values(grid, fields.b, fields.grad_b)
        n_b = -params.mu * (
            advect_values(grid, fields.u, fields.grad_b)
            - advect_values(grid, fields.b, fields.grad_u)
        )
        n_b = symmetrize_coeffs(grid, project_coeffs(grid, n_b))
    else:
        n_b = np.zeros_like(state.b.coeffs)
    n_u = symmetrize_coeffs(grid, project_coeffs(grid, n_u))
    return n_u, n_b


def stiff_symbols(grid: SpectralGrid, params: PhysicalParams) -> Tuple[np.ndarray, np.ndarray]:
    """Implicit symbols L_u = (mu1/2)|k|^4 and L_b = S|k|^2"""
    return 0.5 * params.mu1 * grid.k_sq ** 2, params.s_diff * grid.k_sq


def rhs_split(state: State, f: Optional[SpectralVectorField], params: PhysicalParams) -> Nonlinear:
    """Explicit parts of the velocity and magnetic tendencies"""
    return nonlinear_terms(state, f, params)


def rhs_velocity(state: State, f: Optional[SpectralVectorField], params: PhysicalParams,
                 include_stiff: bool = True) -> SpectralVectorField:
    """Projected velocity tendency, with the -(mu1/2)|k|^4 term unless include_stiff is False"""
    n_u, _ = nonlinear_terms(state, f, params)
    if include_stiff:
        l_u, _ = stiff_symbols(state.grid, params)
        n_u = n_u - l_u * state.u.coeffs
    return SpectralVectorField(n_u, state.grid)


def rhs_magnetic(state: State, params: PhysicalParams, include_stiff: bool = True) -> SpectralVectorField:
    """Projected magnetic tendency, with the -S|k|^2 term unless include_stiff is False"""
    _, n_b = nonlinear_terms(state, None, params)
    if include_stiff:
        _, l_b = stiff_symbols(state.grid, params)
        n_b = n_b - l_b * state.b.coeffs
    return SpectralVectorField(n_b, state.grid)


@dataclass(frozen=True)
class _Operators:
    """Per-mode multipliers of one implicit update"""
    explicit_u: np.ndarray
    explicit_b: np.ndarray
    implicit_u: np.ndarray
    implicit_b: np.ndarray


@lru_cache(maxsize=32)
def linear_operators(grid: SpectralGrid, params: PhysicalParams, dt: float, scheme: Scheme) -> _Operators:
    l_u, l_b = stiff_symbols(grid, params)
    band = grid.band.astype(float)
    if scheme == Scheme.IMEX_EULER:
        return _Operators(
            explicit_u=np.exp(-dt * l_u) * band,
            explicit_b=np.exp(-dt * l_b) * band,
            implicit_u=band,
            implicit_b=band,
        )
    return _Operators(
        explicit_u=1.0 - 0.5 * dt * l_u,
        explicit_b=1.0 - 0.5 * dt * l_b,
        implicit_u=band / (1.0 + 0.5 * dt * l_u),
        implicit_b=band / (1.0 + 0.5 * dt * l_b),
    )


def advance(
    c: np.ndarray,
    n_now: np.ndarray,
    n_prev: Optional[np.ndarray],
    explicit: np.ndarray,
    implicit: np.ndarray,
    dt: float,
    scheme: Scheme,
) -> np.ndarray:
    """One implicit-explicit update of a single field's coefficients"""
    if scheme == Scheme.IMEX_EULER:
        return explicit * (c + dt * n_now)
    if n_prev is None:
        n_prev = n_now
    return implicit * (explicit * c + dt * (1.5 * n_now - 0.5 * n_prev))


def cfl_ratio(u_values: np.ndarray, dt: float, dx: float) -> float:
    """max|u| dt / dx"""
    speed = math.sqrt(float(np.max(np.sum(u_values ** 2, axis=0))))
    return speed * dt / dx


def step(
    state: State,
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    cfg: StepperConfig,
    fields: Optional[CollocatedFields] = None,
) -> State:
    """
    Advance state by cfg.dt.

    Raises:
        CFLViolationError: max|u| dt/dx above cfg.cfl_limit
        NonFiniteStateError: NaN or Inf in the new state
    """
    grid = state.grid
    grid.check_same(state.b.grid)
    fields = fields or collocate(state, params)
    ratio = cfl_ratio(fields.u, cfg.dt, grid.dom.dx)
    if ratio > cfg.cfl_limit:
        raise CFLViolationError(ratio, cfg.cfl_limit)

    n_u, n_b = nonlinear_terms(state, f, params, fields)
    ops = linear_operators(grid, params, cfg.dt, Scheme(cfg.scheme))
    prev_u, prev_b = state.history if state.history is not None else (None, None)

    u_new = advance(state.u.coeffs, n_u, prev_u, ops.explicit_u, ops.implicit_u, cfg.dt, cfg.scheme)
    b_new = advance(state.b.coeffs, n_b, prev_b, ops.explicit_b, ops.implicit_b, cfg.dt, cfg.scheme)
    u_new = symmetrize_coeffs(grid, project_coeffs(grid, u_new))
    b_new = symmetrize_coeffs(grid, project_coeffs(grid, b_new))

    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(b_new))):
        raise NonFiniteStateError(f"non-finite state at t={state.t + cfg.dt:.6g}")

    history = (n_u, n_b) if cfg.scheme == Scheme.IMEX_CNAB2 else None
    return State(
        SpectralVectorField(u_new, grid),
        SpectralVectorField(b_new, grid),
        state.t + cfg.dt,
        history,
    )


def step_count(t0: float, t_end: float, dt: float) -> int:
    """Number of steps of size dt from t0 to t_end"""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if t_end < t0 - 1e-12 * max(1.0, abs(t0)):
        raise ValueError(f"t_end={t_end} precedes state time {t0}")
    return int(round((t_end - t0) / dt))


@dataclass
class TrajectoryResult:
    final: State
    steps: int
    dt: float

    @property
    def t_end(self) -> float:
        return self.final.t


def integrate(
    state: State,
    f: Optional[SpectralVectorField],
    params: PhysicalParams,
    cfg: StepperConfig,
    t_end: float,
    observers: Iterable[Union[Callable, ObserverHandler]] = (),
) -> TrajectoryResult:
    """
    Step from state.t to t_end, calling observers at their strides.

    Times are t0 + i*dt so repeated runs are bitwise identical. Any
    BipolarMHDError raised by a step is re-raised with its step index.
    """
    handlers = as_observers(observers)
    t0 = state.t
    steps = step_count(t0, t_end, cfg.dt)
    logger.debug(f"integrate: {steps} steps of dt={cfg.dt} from t={t0}")

    for handler in handlers:
        handler(state, 0)

    current = state
    for i in range(1, steps + 1):
        try:
            current = step(current, f, params, cfg)
        except BipolarMHDError as e:
            logger.error(f"step {i} failed: {e}")
            raise e.with_step(i)
        current.t = t0 + i * cfg.dt
        for handler in handlers:
            if stride_matches(handler, i, steps):
                handler(current, i)

    return TrajectoryResult(final=current, steps=steps, dt=cfg.dt)


def check_same_time(a: float, b: float) -> None:
    if abs(a - b) > 1e-12 * max(1.0, abs(a), abs(b)):
        raise GridMismatchError(f"time mismatch: {a} vs {b}")
