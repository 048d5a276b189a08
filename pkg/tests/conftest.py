"""
Pytest configuration and fixtures for bipolarmhd tests
"""

import math
import os
import sys

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from bipolarmhd.dynamics import State
from bipolarmhd.spectral import SpectralGrid, random_solenoidal
from bipolarmhd.types import DomainSpec, PhysicalParams, StepperConfig


@pytest.fixture
def dom16():
    return DomainSpec(dim=2, length=2.0 * math.pi, resolution=16)


@pytest.fixture
def grid16(dom16):
    return SpectralGrid(dom16, workers=1)


@pytest.fixture
def grid32():
    return SpectralGrid(DomainSpec(dim=2, length=2.0 * math.pi, resolution=32), workers=1)


@pytest.fixture
def grid3d():
    return SpectralGrid(DomainSpec(dim=3, length=2.0 * math.pi, resolution=8), workers=1)


@pytest.fixture
def params():
    """Shear-thinning parameters with a well-resolved bipolar viscosity"""
    return PhysicalParams(eps=1.0, mu0=1.0, mu1=0.05, alpha=0.5, mu=1.0, s_diff=0.5, f_amp=0.0)


@pytest.fixture
def newtonian_params():
    return PhysicalParams(eps=1.0, mu0=1.0, mu1=1.0, alpha=0.0, mu=1.0, s_diff=0.5, f_amp=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_state(grid16, rng):
    """Small-amplitude random state on the 16^2 grid"""
    u = random_solenoidal(grid16, rng, amplitude=0.5, band_min=1, band_max=4)
    b = random_solenoidal(grid16, rng, amplitude=0.5, band_min=1, band_max=4)
    return State(u, b)


@pytest.fixture
def stepper():
    return StepperConfig(dt=2e-3)
