"""
Fourier representation of divergence-free fields on the periodic box.

Coefficients use the forward normalization c(k) = (1/N^n) sum_x v(x) e^{-ik.x},
so the L2 inner product is (v, w) = L^n sum_k conj(c_v(k)) c_w(k) and every
Sobolev norm is a weighted Parseval sum. Fields are kept inside the 2/3-rule
band (every index component m_i with 3|m_i| < N); quadratic products of band
fields are then free of aliasing after truncation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft

from .errors import ConfigError, GridMismatchError
from .rheology import gamma, strain_rate, strain_sq
from .thread_safe import resolve_workers
from .types import DomainSpec, NormOrder, PhysicalParams

logger = logging.getLogger(__name__)


class SpectralGrid:
    """Wavenumber tables, dealiasing mask and transforms for one DomainSpec"""

    def __init__(self, dom: DomainSpec, workers: Optional[int] = None):
        self.dom = dom
        self.n = dom.dim
        self.N = dom.resolution
        self.L = dom.length
        self.shape = (self.N,) * self.n
        self.axes = tuple(range(-self.n, 0))
        self.workers = resolve_workers(workers)

        index = scipy.fft.fftfreq(self.N, 1.0 / self.N)
        self.index = np.array(np.meshgrid(*([index] * self.n), indexing="ij"))
        self.k = dom.k_min * self.index
        self.k_sq = np.sum(self.k ** 2, axis=0)
        self.k_sq_safe = self.k_sq.copy()
        self.k_sq_safe[(0,) * self.n] = 1.0
        self.band = np.all(3 * np.abs(self.index) < self.N, axis=0)

        self.volume = dom.volume
        self.cell_volume = dom.dx ** self.n
        self.zero_mode = (0,) * self.n

    def __repr__(self) -> str:
        return f"SpectralGrid(dim={self.n}, N={self.N}, L={self.L:.6g})"

    def fft(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.fftn(values, axes=self.axes, norm="forward", workers=self.workers)

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return scipy.fft.ifftn(coeffs, axes=self.axes, norm="forward", workers=self.workers).real

    def coordinates(self) -> np.ndarray:
        x = np.arange(self.N) * self.dom.dx
        return np.array(np.meshgrid(*([x] * self.n), indexing="ij"))

    def reflect(self, coeffs: np.ndarray) -> np.ndarray:
        """coeffs evaluated at -k"""
        return np.roll(np.flip(coeffs, axis=self.axes), 1, axis=self.axes)

    def band_count(self) -> int:
        """Number of retained wavevectors k != 0"""
        return int(np.count_nonzero(self.band)) - 1

    def gradient(self, coeffs: np.ndarray) -> np.ndarray:
        """Collocation values of grad v, out[i, j] = d v_i / d x_j"""
        return self.ifft(1j * self.k[None, :] * coeffs[:, None])

    def divergence_of_tensor(self, tensor: np.ndarray) -> np.ndarray:
        """Dealiased coefficients of (Div T)_i = d T_ij / d x_j from collocation values"""
        t_hat = self.fft(tensor)
        return np.einsum("j...,ij...->i...", 1j * self.k, t_hat) * self.band

    def check_same(self, other: "SpectralGrid") -> None:
        if other is not self and other.dom != self.dom:
            raise GridMismatchError(f"grid mismatch: {self!r} vs {other!r}")


@dataclass(eq=False)
class SpectralVectorField:
    """Real vector field stored as its Fourier coefficients, shape (n, N, ..., N)"""

    coeffs: np.ndarray
    grid: SpectralGrid

    # keep numpy scalars from broadcasting into the field
    __array_ufunc__ = None

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "SpectralVectorField":
        return cls(np.zeros((grid.n,) + grid.shape, dtype=complex), grid)

    @classmethod
    def from_values(cls, values: np.ndarray, grid: SpectralGrid) -> "SpectralVectorField":
        """Transform collocation values; no projection or truncation"""
        return cls(grid.fft(np.asarray(values, dtype=float)), grid)

    @property
    def dom(self) -> DomainSpec:
        return self.grid.dom

    def values(self) -> np.ndarray:
        return self.grid.ifft(self.coeffs)

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(self.coeffs.copy(), self.grid)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def _other(self, other: "SpectralVectorField") -> np.ndarray:
        self.grid.check_same(other.grid)
        return other.coeffs

    def __add__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.coeffs + self._other(other), self.grid)

    def __sub__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.coeffs - self._other(other), self.grid)

    def __mul__(self, scalar: float) -> "SpectralVectorField":
        return SpectralVectorField(self.coeffs * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralVectorField":
        return SpectralVectorField(-self.coeffs, self.grid)


# ---------------------------------------------------------------------------
# Invariant maintenance
# ---------------------------------------------------------------------------

def symmetrize_coeffs(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    """Coefficient-array form of enforce_reality"""
    return 0.5 * (c + np.conj(grid.reflect(c)))


def enforce_reality(v: SpectralVectorField) -> SpectralVectorField:
    """Symmetrize so that c(-k) = conj(c(k))"""
    c = 0.5 * (v.coeffs + np.conj(v.grid.reflect(v.coeffs)))
    return SpectralVectorField(c, v.grid)


def enforce_mean_zero(v: SpectralVectorField) -> SpectralVectorField:
    c = v.coeffs.copy()
    c[(slice(None),) + v.grid.zero_mode] = 0.0
    return SpectralVectorField(c, v.grid)


def dealias(v: SpectralVectorField) -> SpectralVectorField:
    """Zero every mode outside the 2/3-rule band"""
    return SpectralVectorField(v.coeffs * v.grid.band, v.grid)


def project_coeffs(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    k_dot_c = np.sum(grid.k * c, axis=0)
    out = c - grid.k * (k_dot_c / grid.k_sq_safe)
    out[(slice(None),) + grid.zero_mode] = 0.0
    return out


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    """c <- c - k (k.c) / |k|^2; also removes the mean"""
    return SpectralVectorField(project_coeffs(v.grid, v.coeffs), v.grid)


def divergence(v: SpectralVectorField) -> np.ndarray:
    """Scalar coefficients of div v"""
    return np.sum(1j * v.grid.k * v.coeffs, axis=0)


# ---------------------------------------------------------------------------
# Differential operators
# ---------------------------------------------------------------------------

def curl(v: SpectralVectorField) -> Union[SpectralVectorField, np.ndarray]:
    """
    Fourier symbol i k x v.

    Returns the scalar coefficient array in 2D and a SpectralVectorField in 3D.
    """
    k = v.grid.k
    c = v.coeffs
    if v.grid.n == 2:
        return 1j * (k[0] * c[1] - k[1] * c[0])
    out = 1j * np.array([
        k[1] * c[2] - k[2] * c[1],
        k[2] * c[0] - k[0] * c[2],
        k[0] * c[1] - k[1] * c[0],
    ])
    return SpectralVectorField(out, v.grid)


def curl_scalar(psi: np.ndarray, grid: SpectralGrid) -> SpectralVectorField:
    """2D curl of a scalar: (d psi/dy, -d psi/dx)"""
    if grid.n != 2:
        raise GridMismatchError("curl_scalar is defined in 2D only")
    return SpectralVectorField(np.array([1j * grid.k[1] * psi, -1j * grid.k[0] * psi]), grid)


def curl_curl(v: SpectralVectorField) -> SpectralVectorField:
    first = curl(v)
    if v.grid.n == 2:
        return curl_scalar(first, v.grid)
    return curl(first)


def laplacian(v: SpectralVectorField) -> SpectralVectorField:
    return SpectralVectorField(-v.grid.k_sq * v.coeffs, v.grid)


def velocity_gradient(v: SpectralVectorField) -> np.ndarray:
    """Collocation values of grad v, shape (n, n, N, ..., N)"""
    return v.grid.gradient(v.coeffs)


def strain_field(v: SpectralVectorField) -> np.ndarray:
    """Collocation values of the strain rate E(v)"""
    return strain_rate(velocity_gradient(v))


def advect_values(grid: SpectralGrid, u_values: np.ndarray, grad_v: np.ndarray) -> np.ndarray:
    """Dealiased, reality-symmetric, mean-free coefficients of (u.grad) v from collocation data"""
    product = np.einsum("j...,ij...->i...", u_values, grad_v)
    c = grid.fft(product) * grid.band
    c = 0.5 * (c + np.conj(grid.reflect(c)))
    c[(slice(None),) + grid.zero_mode] = 0.0
    return c


def advect(u: SpectralVectorField, v: SpectralVectorField) -> SpectralVectorField:
    """
    Pseudo-spectral (u.grad) v with 2/3-rule truncation.

    The result is not Leray-projected.
    """
    u.grid.check_same(v.grid)
    grid = u.grid
    return SpectralVectorField(advect_values(grid, u.values(), grid.gradient(v.coeffs)), grid)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def inner(v: SpectralVectorField, w: SpectralVectorField) -> float:
    """Discrete L2 inner product"""
    v.grid.check_same(w.grid)
    return float(np.vdot(v.coeffs, w.coeffs).real * v.grid.volume)


def _mode_weight(grid: SpectralGrid, order: NormOrder) -> np.ndarray:
    k_sq = grid.k_sq
    if order == NormOrder.L2:
        return np.ones_like(k_sq)
    if order == NormOrder.H1:
        return 1.0 + k_sq
    if order == NormOrder.H2:
        return 1.0 + k_sq + k_sq ** 2
    if order == NormOrder.V1DISS:
        return 0.5 * k_sq ** 2
    if order == NormOrder.V2CURL:
        return k_sq
    raise ValueError(f"unsupported norm order: {order}")


def sobolev_norm_sq(
    v: SpectralVectorField,
    order: Union[NormOrder, str] = NormOrder.L2,
    p: Optional[float] = None,
) -> float:
    """
    Squared discrete norm of v.

    L2, H1, H2, V1diss (the bipolar dissipation (dE/dx_k, dE/dx_k)) and V2curl
    (|curl v|^2) are weighted Parseval sums. W1p is the collocation quadrature
    of (integral |v|^p + |grad v|^p)^(2/p) and needs p.

    Raises:
        ValueError: unsupported order, or W1p without p
    """
    order = NormOrder(order)
    grid = v.grid
    if order == NormOrder.W1P:
        if p is None or not p >= 1:
            raise ValueError("W1p norm needs p >= 1")
        values = v.values()
        grad = grid.gradient(v.coeffs)
        magnitude = np.sqrt(np.sum(values ** 2, axis=0))
        grad_magnitude = np.sqrt(np.sum(grad ** 2, axis=(0, 1)))
        integral = grid.cell_volume * np.sum(magnitude ** p + grad_magnitude ** p)
        return float(integral ** (2.0 / p))
    weight = _mode_weight(grid, order)
    power = np.sum(np.abs(v.coeffs) ** 2, axis=0)
    return float(np.sum(weight * power) * grid.volume)


def dissipation_quadrature(v: SpectralVectorField, params: PhysicalParams) -> float:
    """Collocation value of (Gamma(|E(v)|^2) E(v), E(v))"""
    s = strain_sq(strain_field(v))
    return float(np.sum(gamma(s, params) * s) * v.grid.cell_volume)


def max_speed(v: SpectralVectorField) -> float:
    """Largest pointwise |v| on the collocation grid"""
    values = v.values()
    return float(np.sqrt(np.max(np.sum(values ** 2, axis=0))))


def discrete_korn(dom: DomainSpec) -> float:
    """
    Largest K with V1diss(v) >= K * H2(v) for mean-free divergence-free fields:
    1/2 k^4 / (1 + k^2 + k^4) at k = k_min.
    """
    k_sq = dom.k_min ** 2
    return 0.5 * k_sq ** 2 / (1.0 + k_sq + k_sq ** 2)


# ---------------------------------------------------------------------------
# Field builders
# ---------------------------------------------------------------------------

def rescale(v: SpectralVectorField, target_norm: float) -> SpectralVectorField:
    """Scale v so that its L2 norm equals target_norm; the zero field stays zero"""
    current = math.sqrt(sobolev_norm_sq(v, NormOrder.L2))
    if target_norm == 0.0 or current == 0.0:
        return SpectralVectorField.zeros(v.grid)
    return v * (target_norm / current)


def random_solenoidal(
    grid: SpectralGrid,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    band_min: float = 1.0,
    band_max: Optional[float] = None,
) -> SpectralVectorField:
    """
    Random real, mean-free, divergence-free field in the shell
    band_min <= |m| <= band_max of integer wavenumbers, inside the dealiasing band,
    scaled to L2 norm `amplitude`.
    """
    shape = (grid.n,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    shell = np.sqrt(np.sum(grid.index ** 2, axis=0))
    mask = grid.band & (shell >= band_min)
    if band_max is not None:
        mask &= shell <= band_max
    c = c * mask
    v = SpectralVectorField(c, grid)
    v = enforce_reality(leray_project(v))
    return rescale(v, amplitude)


def shear_direction(wavevector: Sequence[int]) -> np.ndarray:
    """Unit vector orthogonal to an integer wavevector"""
    k = np.asarray(wavevector, dtype=float)
    if k.size == 2:
        e = np.array([-k[1], k[0]])
    else:
        ref = np.array([0.0, 0.0, 1.0])
        if np.allclose(np.cross(k, ref), 0.0):
            ref = np.array([1.0, 0.0, 0.0])
        e = np.cross(k, ref)
    return e / np.linalg.norm(e)


def shear_mode(grid: SpectralGrid, wavevector: Sequence[int], amplitude: float = 1.0,
               phase: str = "cos") -> SpectralVectorField:
    """
    Single shear mode e * cos(k.x) (or sin) with e orthogonal to k,
    scaled to L2 norm `amplitude`. Missing components of the wavevector are zero.

    Raises:
        ConfigError: zero wavevector or a mode outside the dealiasing band
    """
    m = list(wavevector) + [0] * (grid.n - len(wavevector))
    if len(m) != grid.n:
        raise ConfigError(f"wavevector {tuple(wavevector)} has more than {grid.n} components")
    m = np.array(m, dtype=int)
    if not np.any(m):
        raise ConfigError("wavevector must be nonzero")
    if np.any(3 * np.abs(m) >= grid.N):
        raise ConfigError(f"wavevector {tuple(m)} lies outside the dealiasing band")
    x = grid.coordinates()
    phase_arg = grid.dom.k_min * np.tensordot(m, x, axes=1)
    profile = np.cos(phase_arg) if phase == "cos" else np.sin(phase_arg)
    e = shear_direction(m)
    values = e.reshape((grid.n,) + (1,) * grid.n) * profile
    v = SpectralVectorField.from_values(values, grid)
    v = enforce_mean_zero(dealias(enforce_reality(v)))
    return rescale(v, amplitude)


def mode_forcing(grid: SpectralGrid, wavevectors: Sequence[Tuple[int, ...]], f_amp: float) -> SpectralVectorField:
    """Sum of unit shear modes rescaled so that |f| = f_amp"""
    total = SpectralVectorField.zeros(grid)
    for wavevector in wavevectors:
        total = total + shear_mode(grid, wavevector, 1.0)
    if f_amp > 0 and sobolev_norm_sq(total) == 0.0:
        raise ConfigError("forcing modes cancel to zero")
    return rescale(total, f_amp)


def random_forcing(grid: SpectralGrid, seed: int, band_min: float, band_max: float,
                   f_amp: float) -> SpectralVectorField:
    rng = np.random.default_rng(seed)
    return random_solenoidal(grid, rng, amplitude=f_amp, band_min=band_min, band_max=band_max)


def is_solenoidal(v: SpectralVectorField, rtol: float = 1e-12) -> bool:
    """|k.c(k)| <= rtol |c(k)| for every mode (with |k| scaling)"""
    grid = v.grid
    k_dot = np.abs(np.sum(grid.k * v.coeffs, axis=0))
    scale = np.sqrt(grid.k_sq) * np.sqrt(np.sum(np.abs(v.coeffs) ** 2, axis=0))
    return bool(np.all(k_dot <= rtol * scale + 1e-300))


def is_real(v: SpectralVectorField, atol: float = 1e-14) -> bool:
    c = v.coeffs
    scale = max(float(np.max(np.abs(c))), 1.0)
    return bool(np.max(np.abs(c - np.conj(v.grid.reflect(c)))) <= atol * scale)


def is_mean_zero(v: SpectralVectorField) -> bool:
    return bool(np.all(v.coeffs[(slice(None),) + v.grid.zero_mode] == 0.0))
