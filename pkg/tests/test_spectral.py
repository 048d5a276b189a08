"""
Tests for the Fourier representation, projections and norms
"""

import math
import os
import sys
import unittest

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from bipolarmhd.errors import ConfigError, GridMismatchError
from bipolarmhd.spectral import (
    SpectralGrid,
    SpectralVectorField,
    advect,
    curl,
    curl_curl,
    discrete_korn,
    dissipation_quadrature,
    divergence,
    enforce_mean_zero,
    enforce_reality,
    inner,
    is_mean_zero,
    is_real,
    is_solenoidal,
    laplacian,
    leray_project,
    mode_forcing,
    random_solenoidal,
    rescale,
    shear_mode,
    sobolev_norm_sq,
    strain_field,
)
from bipolarmhd.rheology import gamma, strain_sq
from bipolarmhd.types import DomainSpec, NormOrder, PhysicalParams


class TestGrid(unittest.TestCase):

    def setUp(self):
        self.grid = SpectralGrid(DomainSpec(dim=2, resolution=16), workers=1)

    def test_band_is_two_thirds(self):
        kept = np.unique(np.abs(self.grid.index[0][self.grid.band]))
        self.assertEqual(kept.max(), 5)

    def test_band_count(self):
        # |m_i| <= 5 on both axes, minus the zero mode
        self.assertEqual(self.grid.band_count(), 11 * 11 - 1)

    def test_roundtrip_transform(self):
        values = np.random.default_rng(0).standard_normal((2, 16, 16))
        back = self.grid.ifft(self.grid.fft(values))
        np.testing.assert_allclose(back, values, atol=1e-14)

    def test_mismatch(self):
        other = SpectralGrid(DomainSpec(dim=2, resolution=32), workers=1)
        with self.assertRaises(GridMismatchError):
            self.grid.check_same(other)
        same = SpectralGrid(DomainSpec(dim=2, resolution=16), workers=1)
        self.grid.check_same(same)


class TestProjection(unittest.TestCase):

    def setUp(self):
        self.grid = SpectralGrid(DomainSpec(dim=2, resolution=16), workers=1)
        self.rng = np.random.default_rng(3)

    def test_gradient_field_projects_to_zero(self):
        x, y = self.grid.coordinates()
        phi_grad = np.array([np.cos(x) * np.sin(2 * y), 2 * np.sin(x) * np.cos(2 * y)])
        v = SpectralVectorField.from_values(phi_grad, self.grid)
        projected = leray_project(v)
        self.assertLess(np.max(np.abs(projected.coeffs)), 1e-14)

    def test_projection_idempotent(self):
        values = self.rng.standard_normal((2, 16, 16))
        v = leray_project(SpectralVectorField.from_values(values, self.grid))
        twice = leray_project(v)
        np.testing.assert_allclose(twice.coeffs, v.coeffs, atol=1e-15)
        self.assertTrue(is_solenoidal(v))
        self.assertTrue(is_mean_zero(v))

    def test_projection_self_adjoint(self):
        u = SpectralVectorField.from_values(self.rng.standard_normal((2, 16, 16)), self.grid)
        v = SpectralVectorField.from_values(self.rng.standard_normal((2, 16, 16)), self.grid)
        self.assertFalse(is_solenoidal(u))
        self.assertAlmostEqual(inner(leray_project(u), v), inner(u, leray_project(v)), places=10)

    def test_random_field_invariants(self):
        v = random_solenoidal(self.grid, self.rng, amplitude=2.0, band_min=1, band_max=4)
        self.assertTrue(is_solenoidal(v))
        self.assertTrue(is_real(v))
        self.assertTrue(is_mean_zero(v))
        self.assertAlmostEqual(sobolev_norm_sq(v), 4.0, places=12)
        self.assertLess(np.max(np.abs(divergence(v))), 1e-12)

    def test_reality_and_mean(self):
        c = self.rng.standard_normal((2, 16, 16)) + 1j * self.rng.standard_normal((2, 16, 16))
        v = enforce_mean_zero(enforce_reality(SpectralVectorField(c, self.grid)))
        self.assertTrue(is_real(v))
        self.assertTrue(is_mean_zero(v))


class TestNorms(unittest.TestCase):

    def setUp(self):
        self.grid = SpectralGrid(DomainSpec(dim=2, resolution=16), workers=1)
        self.rng = np.random.default_rng(11)

    def test_parseval(self):
        v = random_solenoidal(self.grid, self.rng, band_max=5)
        collocation = float(np.sum(v.values() ** 2) * self.grid.cell_volume)
        self.assertAlmostEqual(sobolev_norm_sq(v) / collocation, 1.0, places=12)

    def test_single_mode_weights(self):
        v = shear_mode(self.grid, (0, 2), amplitude=1.0)
        self.assertAlmostEqual(sobolev_norm_sq(v, NormOrder.H1), 1.0 + 4.0, places=12)
        self.assertAlmostEqual(sobolev_norm_sq(v, NormOrder.H2), 1.0 + 4.0 + 16.0, places=12)
        self.assertAlmostEqual(sobolev_norm_sq(v, NormOrder.V2CURL), 4.0, places=12)
        self.assertAlmostEqual(sobolev_norm_sq(v, NormOrder.V1DISS), 8.0, places=12)

    def test_v1diss_equals_strain_gradient(self):
        v = random_solenoidal(self.grid, self.rng, band_max=4)
        E = strain_field(v)
        total = 0.0
        for axis in range(2):
            d = self.grid.ifft(1j * self.grid.k[axis] * self.grid.fft(E))
            total += float(np.sum(d ** 2))
        total *= self.grid.cell_volume
        self.assertAlmostEqual(sobolev_norm_sq(v, NormOrder.V1DISS) / total, 1.0, places=11)

    def test_w1p_needs_p(self):
        v = random_solenoidal(self.grid, self.rng)
        with self.assertRaises(ValueError):
            sobolev_norm_sq(v, NormOrder.W1P)
        self.assertGreater(sobolev_norm_sq(v, NormOrder.W1P, p=1.5), 0.0)

    def test_w1p_at_two_matches_h1(self):
        v = random_solenoidal(self.grid, self.rng, band_max=4)
        self.assertAlmostEqual(
            sobolev_norm_sq(v, NormOrder.W1P, p=2.0) / sobolev_norm_sq(v, NormOrder.H1), 1.0, places=11
        )

    def test_unknown_order(self):
        v = random_solenoidal(self.grid, self.rng)
        with self.assertRaises(ValueError):
            sobolev_norm_sq(v, "H7")

    def test_discrete_korn(self):
        dom = DomainSpec(length=2 * math.pi)
        self.assertAlmostEqual(discrete_korn(dom), 0.5 / 3.0, places=14)
        v = random_solenoidal(self.grid, self.rng, band_max=5)
        self.assertGreaterEqual(
            sobolev_norm_sq(v, NormOrder.V1DISS), discrete_korn(dom) * sobolev_norm_sq(v, NormOrder.H2) * (1 - 1e-12)
        )

    def test_dissipation_quadrature(self):
        params = PhysicalParams(alpha=0.5)
        v = random_solenoidal(self.grid, self.rng, band_max=3)
        E = strain_field(v)
        s = strain_sq(E)
        expected = float(np.sum(gamma(s, params) * s)) * self.grid.cell_volume
        self.assertAlmostEqual(dissipation_quadrature(v, params), expected, places=12)
        self.assertGreaterEqual(dissipation_quadrature(v, params), 0.0)

    def test_rescale_zero_field(self):
        zero = SpectralVectorField.zeros(self.grid)
        self.assertEqual(sobolev_norm_sq(rescale(zero, 3.0)), 0.0)


class TestOperators(unittest.TestCase):

    def setUp(self):
        self.grid = SpectralGrid(DomainSpec(dim=2, resolution=16), workers=1)
        self.rng = np.random.default_rng(21)

    def test_curl_curl_is_minus_laplacian(self):
        v = random_solenoidal(self.grid, self.rng)
        np.testing.assert_allclose(curl_curl(v).coeffs, -laplacian(v).coeffs, atol=1e-14)

    def test_curl_of_shear_mode(self):
        # u = (-1, 0) cos(y)/|.|: vorticity is -sin(y) times the scale
        v = shear_mode(self.grid, (0, 1), amplitude=1.0)
        omega = self.grid.ifft(curl(v))
        x, y = self.grid.coordinates()
        scale = v.values()[0].max()
        np.testing.assert_allclose(omega, -scale * np.sin(y), atol=1e-13)

    def test_shear_mode_out_of_band(self):
        with self.assertRaises(ConfigError):
            shear_mode(self.grid, (0, 6))
        with self.assertRaises(ConfigError):
            shear_mode(self.grid, (0, 0))

    def test_mode_forcing_norm(self):
        f = mode_forcing(self.grid, [(0, 1), (1, 1)], 2.5)
        self.assertAlmostEqual(math.sqrt(sobolev_norm_sq(f)), 2.5, places=12)
        self.assertEqual(sobolev_norm_sq(mode_forcing(self.grid, [(0, 1)], 0.0)), 0.0)


@pytest.mark.parametrize("seed", range(100))
def test_advection_conservation(seed):
    """(u.grad v, v) = 0 and (b.grad b, u) + (b.grad u, b) = 0"""
    grid = SpectralGrid(DomainSpec(dim=2, resolution=32), workers=1)
    rng = np.random.default_rng(seed)
    u = random_solenoidal(grid, rng, band_max=10)
    v = random_solenoidal(grid, rng, band_max=10)
    b = random_solenoidal(grid, rng, band_max=10)
    scale = math.sqrt(sobolev_norm_sq(u) * sobolev_norm_sq(v, NormOrder.H1) * sobolev_norm_sq(v))
    assert abs(inner(advect(u, v), v)) <= 1e-10 * scale
    cross = inner(advect(b, b), u) + inner(advect(b, u), b)
    assert abs(cross) <= 1e-10 * scale


def test_three_dimensional_fields(grid3d):
    rng = np.random.default_rng(2)
    v = random_solenoidal(grid3d, rng)
    assert is_solenoidal(v)
    assert is_real(v)
    np.testing.assert_allclose(curl_curl(v).coeffs, -laplacian(v).coeffs, atol=1e-13)


if __name__ == '__main__':
    unittest.main()
