"""
Bipolar shear-thinning stress law.

Tensor fields are numpy arrays whose two leading axes are the tensor indices,
E[i, j, ...], so the same functions serve single matrices and grid fields.
Gamma(s) = mu0 (eps + s)^(-alpha/2) with s = |E|^2 the Frobenius square.
"""

import logging
from typing import Union

import numpy as np

from .types import CoercivityForm, PhysicalParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def strain_rate(grad_u: np.ndarray) -> np.ndarray:
    """Symmetric part of grad_u, where grad_u[i, j] = d u_i / d x_j"""
    return 0.5 * (grad_u + np.swapaxes(grad_u, 0, 1))


def strain_sq(E: np.ndarray) -> np.ndarray:
    """|E|^2 = E_ij E_ij"""
    return np.einsum("ij...,ij...->...", E, E)


def double_dot(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum("ij...,ij...->...", A, B)


def gamma(s: ArrayLike, params: PhysicalParams) -> ArrayLike:
    """Effective viscosity mu0 (eps + s)^(-alpha/2)"""
    return params.mu0 * np.power(params.eps + s, -0.5 * params.alpha)


def sigma_potential(s: ArrayLike, params: PhysicalParams) -> ArrayLike:
    """Sigma(s) = integral_0^s Gamma, in closed form"""
    q = 1.0 - 0.5 * params.alpha
    # (eps+s)^q - eps^q without cancellation near s = 0
    return (params.mu0 / q) * params.eps ** q * np.expm1(q * np.log1p(np.divide(s, params.eps)))


def newtonian_stress(E: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Algebraic part 2 Gamma(|E|^2) E of the stress"""
    return 2.0 * gamma(strain_sq(E), params) * E


def _moduli_weight(E: np.ndarray, params: PhysicalParams) -> np.ndarray:
    return params.mu0 * np.power(params.eps + strain_sq(E), -(1.0 + 0.5 * params.alpha))


def linearized_moduli(E_base: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """
    A_ijkl = mu0 (eps + |E|^2)^(-(1 + alpha/2)) E_ij E_kl.

    Returns an array with four leading tensor axes. Use contract_moduli when
    only A:D is needed.
    """
    weight = _moduli_weight(E_base, params)
    return weight * np.einsum("ij...,kl...->ijkl...", E_base, E_base)


def contract_moduli(E_base: np.ndarray, D: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """A(E_base):D without forming the rank-4 tensor"""
    return _moduli_weight(E_base, params) * double_dot(E_base, D) * E_base


def stress_derivative(E_base: np.ndarray, D: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Directional derivative of Gamma(E) E at E_base along D: Gamma D - alpha A:D"""
    out = gamma(strain_sq(E_base), params) * D
    if params.alpha != 0.0:
        out = out - params.alpha * contract_moduli(E_base, D, params)
    return out


def coercivity_gap(
    E_base: np.ndarray,
    E_dir: np.ndarray,
    params: PhysicalParams,
    cell_volume: float = 1.0,
    form: CoercivityForm = CoercivityForm.STRESS,
) -> float:
    """
    Integrated coercivity margin of the linearized stress.

    STRESS form: pairing of the stress derivative against E_dir,
        2(Gamma|D|^2 - alpha A:D(x)D) - 2 eps alpha mu0 |D|^2 G^-(1+alpha/2)
        - 2(1 - alpha) mu0 |D|^2 G^(-alpha/2),      G = eps + |E|^2,
    which is nonnegative for every alpha in [0, 1).

    PRINTED form: Gamma|D|^2 - alpha A:D(x)D minus 2 eps alpha mu0 |D|^2 G^-(1+alpha/2)
    minus 2(1 - alpha) mu0 (E:D)^2 G^(-alpha/2). It can be negative for
    large base strain and is kept for reporting only.

    Pointwise values are summed and multiplied by cell_volume.
    """
    alpha = params.alpha
    mu0 = params.mu0
    G = params.eps + strain_sq(E_base)
    d_sq = strain_sq(E_dir)
    ed = double_dot(E_base, E_dir)
    gam = gamma(G - params.eps, params)
    a_dd = mu0 * np.power(G, -(1.0 + 0.5 * alpha)) * ed ** 2
    first = 2.0 * params.eps * alpha * mu0 * d_sq * np.power(G, -(1.0 + 0.5 * alpha))

    if form == CoercivityForm.STRESS:
        lhs = 2.0 * (gam * d_sq - alpha * a_dd)
        second = 2.0 * (1.0 - alpha) * mu0 * d_sq * np.power(G, -0.5 * alpha)
    else:
        lhs = gam * d_sq - alpha * a_dd
        second = 2.0 * (1.0 - alpha) * mu0 * ed ** 2 * np.power(G, -0.5 * alpha)

    return float(np.sum(lhs - first - second) * cell_volume)
