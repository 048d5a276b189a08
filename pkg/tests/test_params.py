"""
Tests for parameter validation and the estimate constants
"""

import math
import os
import sys
import unittest

import pytest
import sympy as sp

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from bipolarmhd.errors import EstimateDivergenceError, NonpositiveConstantError
from bipolarmhd.params import (
    absorbing_radius_sq,
    default_dt,
    kappa0,
    kappa_chain,
    lambda1,
    max_band_wavenumber,
    nu0,
    nu1,
    resolve_constants,
    validate,
)
from bipolarmhd.spectral import discrete_korn
from bipolarmhd.types import DomainConstants, DomainSpec, EstimateConstants, PhysicalParams


def _constants(korn=1.0, lambda1_value=1.0):
    return DomainConstants(korn=korn, lambda1=lambda1_value)


class TestValidate(unittest.TestCase):
    """Invariants of PhysicalParams and DomainSpec"""

    def test_valid_parameters(self):
        report = validate(PhysicalParams(alpha=0.5), DomainSpec(resolution=64))
        self.assertTrue(report.ok)
        self.assertEqual(report.violations, [])

    def test_alpha_boundary(self):
        report = validate(PhysicalParams(alpha=1.0), DomainSpec())
        self.assertIn("alpha must be < 1", report.violations)

    def test_odd_resolution(self):
        report = validate(PhysicalParams(), DomainSpec(resolution=63))
        self.assertIn("resolution must be even", report.violations)

    def test_small_resolution(self):
        report = validate(PhysicalParams(), DomainSpec(resolution=6))
        self.assertIn("resolution must be >= 8", report.violations)

    def test_nonpositive_coefficients(self):
        report = validate(PhysicalParams(mu1=0.0, s_diff=-1.0), DomainSpec())
        self.assertIn("mu1 must be > 0", report.violations)
        self.assertIn("s_diff must be > 0", report.violations)
        self.assertFalse(report)

    def test_bad_dimension(self):
        report = validate(PhysicalParams(), DomainSpec(dim=4))
        self.assertIn("dim must be 2 or 3", report.violations)


class TestDomainConstants(unittest.TestCase):

    def test_lambda1(self):
        self.assertAlmostEqual(lambda1(DomainSpec(length=2 * math.pi)), 1.0, places=14)
        self.assertAlmostEqual(lambda1(DomainSpec(length=math.pi)), 4.0, places=13)
        self.assertAlmostEqual(lambda1(DomainSpec(length=1.0)), (2 * math.pi) ** 2, places=10)

    def test_auto_constants(self):
        dom = DomainSpec(length=2 * math.pi, resolution=16)
        resolved = resolve_constants(DomainConstants(), dom)
        self.assertEqual(resolved.korn, discrete_korn(dom))
        self.assertAlmostEqual(resolved.lambda1, 1.0, places=14)
        # 1/2 k^4 / (1 + k^2 + k^4) at k = 1
        self.assertAlmostEqual(resolved.korn, 1.0 / 6.0, places=14)

    def test_explicit_constants_kept(self):
        resolved = resolve_constants(DomainConstants(korn=0.3, lambda1=2.0), DomainSpec())
        self.assertEqual(resolved.korn, 0.3)
        self.assertEqual(resolved.lambda1, 2.0)

    def test_nonpositive_constant_named(self):
        with self.assertRaises(NonpositiveConstantError) as ctx:
            resolve_constants(DomainConstants(embed=0.0), DomainSpec())
        self.assertIn("embed", str(ctx.exception))


class TestAbsorbingBall(unittest.TestCase):

    def test_nu0_is_minimum(self):
        self.assertEqual(nu0(PhysicalParams(mu1=0.5, s_diff=0.3), _constants()), 0.3)
        self.assertEqual(nu0(PhysicalParams(mu1=1.0, s_diff=1.0), _constants()), 1.0)
        self.assertEqual(nu0(PhysicalParams(mu1=1.0, s_diff=5.0), _constants(korn=2.0)), 2.0)

    def test_radius_without_forcing(self):
        self.assertEqual(absorbing_radius_sq(PhysicalParams(f_amp=0.0), _constants()), 0.0)

    def test_radius_values(self):
        params = PhysicalParams(mu1=0.5, s_diff=1.0, f_amp=1.0)
        self.assertEqual(nu1(params, _constants()), 8.0)
        self.assertAlmostEqual(absorbing_radius_sq(params, _constants()), 32.0, places=12)
        params = PhysicalParams(mu1=1.0, s_diff=1.0, f_amp=2.0)
        self.assertAlmostEqual(absorbing_radius_sq(params, _constants()), 32.0, places=12)


class TestKappaChain(unittest.TestCase):

    def test_zero_forcing_collapses(self):
        report = kappa_chain(PhysicalParams(f_amp=0.0), _constants(), r=1.0)
        self.assertEqual(report.kappa0, 0.0)
        self.assertEqual(report.kappa1, 0.0)
        self.assertEqual(report.rho1_sq, 0.0)

    def test_kappa0_linear_in_radius(self):
        self.assertAlmostEqual(kappa0(2.0, 0.0, 0.7, 1.3), 2.0 * kappa0(1.0, 0.0, 0.7, 1.3), places=14)

    def test_nonpositive_window(self):
        with self.assertRaises(NonpositiveConstantError):
            kappa_chain(PhysicalParams(f_amp=1.0), _constants(), r=0.0)

    def test_divergence(self):
        params = PhysicalParams(mu1=1e-3, s_diff=1e-3, f_amp=10.0)
        with self.assertRaises(EstimateDivergenceError) as ctx:
            kappa_chain(params, _constants(), r=1.0)
        self.assertIn("estimate chain diverges", str(ctx.exception))

    def test_window_from_estimates(self):
        params = PhysicalParams(mu1=1.0, s_diff=1.0, f_amp=0.1)
        report = kappa_chain(params, _constants(), estimates=EstimateConstants(r=0.5))
        self.assertEqual(report.r, 0.5)


def test_kappa_chain_high_precision():
    """(nu0=1, |f|=1, r=1) against an arbitrary-precision re-evaluation"""
    params = PhysicalParams(eps=1.0, mu0=1.0, mu1=1.0, alpha=0.5, mu=1.0, s_diff=1.0, f_amp=0.3)
    estimates = EstimateConstants(gronwall_rate_b=0.2, c8=0.1, c9=0.05, r=1.0)
    report = kappa_chain(params, _constants(), estimates=estimates)

    one = sp.Integer(1)
    f = sp.Rational(3, 10)
    b, c8, c9, r = sp.Rational(1, 5), sp.Rational(1, 10), sp.Rational(1, 20), one
    n0 = one
    rho1_sq = 2 * (4 / n0) * f ** 2 / n0
    rho1 = sp.sqrt(rho1_sq)
    k0 = (rho1_sq + 2 * f * rho1 * r) / (2 * n0)
    k1 = (b * k0 / r) * sp.exp(b * k0)
    k2 = k1 * (b * k0 + 1) / one
    a1 = 8 * c9 * k0 / one
    a2 = 8 * c8 * k1 * k2
    a3 = rho1 * (f + rho1) + one * one * k0 * r
    k3 = k1 + (a3 / r + a2) * sp.exp(a1) / one

    for name, exact in [("kappa0", k0), ("kappa1", k1), ("kappa2", k2), ("kappa3", k3),
                        ("a1", a1), ("a2", a2), ("a3", a3)]:
        expected = float(sp.N(exact, 40))
        assert getattr(report, name) == pytest.approx(expected, rel=1e-12), name
    assert report.rho2 == pytest.approx(float(sp.N(sp.sqrt(k3), 40)), rel=1e-12)


def test_default_dt_respects_budgets():
    params = PhysicalParams(mu1=0.05, s_diff=0.5, mu0=1.0, eps=1.0, alpha=0.5)
    dom = DomainSpec(resolution=32)
    k_max = max_band_wavenumber(dom)
    dt = default_dt(params, dom)
    assert dt * max(params.mu1 * k_max ** 4, params.s_diff * k_max ** 2) <= 10.0 + 1e-12
    assert dt * params.gamma_at_rest * k_max ** 2 <= 2.0 + 1e-12
    dt_fast = default_dt(params, dom, u_max=100.0)
    assert dt_fast * 100.0 / dom.dx == pytest.approx(0.5)


if __name__ == '__main__':
    unittest.main()
