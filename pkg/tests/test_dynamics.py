"""
Tests for the right-hand side and the IMEX time steppers
"""

import math
import os
import sys
import unittest

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from bipolarmhd.analysis import absorbing_check, energy_rate, record_energy
from bipolarmhd.decorators import observer
from bipolarmhd.dynamics import (
    State,
    integrate,
    nonlinear_terms,
    rhs_magnetic,
    rhs_split,
    rhs_velocity,
    step,
    step_count,
    stiff_symbols,
)
from bipolarmhd.errors import CFLViolationError, NonFiniteStateError
from bipolarmhd.spectral import (
    SpectralGrid,
    SpectralVectorField,
    is_mean_zero,
    is_real,
    is_solenoidal,
    mode_forcing,
    random_solenoidal,
    shear_mode,
    sobolev_norm_sq,
)
from bipolarmhd.params import resolve_constants
from bipolarmhd.types import DomainConstants, DomainSpec, PhysicalParams, Scheme, StepperConfig


def _grid(N=16):
    return SpectralGrid(DomainSpec(dim=2, resolution=N), workers=1)


def _random_state(grid, seed=0, amplitude=0.5, magnetic=True):
    rng = np.random.default_rng(seed)
    u = random_solenoidal(grid, rng, amplitude, 1, 4)
    b = random_solenoidal(grid, rng, amplitude, 1, 4) if magnetic else SpectralVectorField.zeros(grid)
    return State(u, b)


class TestRightHandSide(unittest.TestCase):

    def setUp(self):
        self.grid = _grid()
        self.params = PhysicalParams(mu1=0.05, alpha=0.5, s_diff=0.5)

    def test_zero_state_is_fixed(self):
        n_u, n_b = nonlinear_terms(State.zeros(self.grid), None, self.params)
        self.assertFalse(np.any(n_u))
        self.assertFalse(np.any(n_b))

    def test_split_matches_full(self):
        state = _random_state(self.grid, 1)
        f = mode_forcing(self.grid, [(0, 1)], 0.3)
        n_u, n_b = rhs_split(state, f, self.params)
        l_u, l_b = stiff_symbols(self.grid, self.params)
        full_u = rhs_velocity(state, f, self.params)
        full_b = rhs_magnetic(state, self.params)
        np.testing.assert_allclose(full_u.coeffs, n_u - l_u * state.u.coeffs, atol=1e-14)
        np.testing.assert_allclose(full_b.coeffs, n_b - l_b * state.b.coeffs, atol=1e-14)
        np.testing.assert_array_equal(rhs_velocity(state, f, self.params, include_stiff=False).coeffs, n_u)

    def test_tendencies_keep_invariants(self):
        state = _random_state(self.grid, 2)
        for v in (rhs_velocity(state, None, self.params), rhs_magnetic(state, self.params)):
            self.assertTrue(is_solenoidal(v, rtol=1e-10))
            self.assertTrue(is_real(v))
            self.assertTrue(is_mean_zero(v))

    def test_energy_pairing(self):
        """(N_u, u) + (N_b, b) = (f, u) - (Gamma E, E) exactly"""
        state = _random_state(self.grid, 3)
        f = mode_forcing(self.grid, [(1, 1)], 0.7)
        n_u, n_b = nonlinear_terms(state, f, self.params)
        volume = self.grid.volume
        pairing = (np.vdot(state.u.coeffs, n_u).real + np.vdot(state.b.coeffs, n_b).real) * volume
        record = record_energy(state, f, self.params)
        self.assertAlmostEqual(pairing, record.work - record.diss_gamma, places=11)


class TestStep(unittest.TestCase):

    def setUp(self):
        self.grid = _grid()
        self.params = PhysicalParams(mu1=0.05, alpha=0.5, s_diff=0.5)
        self.cfg = StepperConfig(dt=2e-3)

    def test_invariants_preserved(self):
        state = _random_state(self.grid, 4)
        for _ in range(20):
            state = step(state, None, self.params, self.cfg)
        for v in (state.u, state.b):
            self.assertTrue(is_solenoidal(v, rtol=1e-10))
            self.assertTrue(is_real(v))
            self.assertTrue(is_mean_zero(v))

    def test_cfl_violation(self):
        state = _random_state(self.grid, 5, amplitude=100.0)
        cfg = StepperConfig(dt=0.1, cfl_limit=0.5)
        with self.assertRaises(CFLViolationError) as ctx:
            integrate(state, None, self.params, cfg, 1.0)
        self.assertEqual(ctx.exception.step, 1)

    def test_non_finite_state(self):
        state = _random_state(self.grid, 6)
        state.u.coeffs[0, 1, 0] = np.nan
        with np.errstate(invalid="ignore"):
            with self.assertRaises(NonFiniteStateError):
                step(state, None, self.params, self.cfg)

    def test_step_count(self):
        self.assertEqual(step_count(0.0, 1.0, 0.1), 10)
        self.assertEqual(step_count(0.5, 0.5, 0.1), 0)
        with self.assertRaises(ValueError):
            step_count(1.0, 0.5, 0.1)
        with self.assertRaises(ValueError):
            step_count(0.0, 1.0, 0.0)


class TestIntegrate(unittest.TestCase):

    def setUp(self):
        self.grid = _grid()
        self.params = PhysicalParams(mu1=0.05, alpha=0.5, s_diff=0.5)
        self.cfg = StepperConfig(dt=2e-3)

    def test_no_steps(self):
        seen = []
        state = _random_state(self.grid, 7)
        result = integrate(state, None, self.params, self.cfg, state.t, [lambda s, i: seen.append(i)])
        self.assertEqual(result.steps, 0)
        self.assertEqual(seen, [0])
        self.assertIs(result.final, state)

    def test_observer_strides(self):
        seen = []

        @observer(stride=3)
        def track(state, i):
            seen.append(i)

        integrate(_random_state(self.grid, 8), None, self.params, self.cfg, 10 * self.cfg.dt, [track])
        self.assertEqual(seen, [0, 3, 6, 9, 10])

    def test_time_is_exact_multiple(self):
        state = _random_state(self.grid, 9)
        times = []
        integrate(state, None, self.params, self.cfg, 7 * self.cfg.dt, [lambda s, i: times.append(s.t)])
        self.assertEqual(times, [i * self.cfg.dt for i in range(8)])

    def test_deterministic(self):
        a = integrate(_random_state(self.grid, 10), None, self.params, self.cfg, 0.1).final
        b = integrate(_random_state(self.grid, 10), None, self.params, self.cfg, 0.1).final
        np.testing.assert_array_equal(a.u.coeffs, b.u.coeffs)
        np.testing.assert_array_equal(a.b.coeffs, b.b.coeffs)

    def test_zero_magnetic_field_stays_zero(self):
        state = _random_state(self.grid, 11, magnetic=False)
        f = mode_forcing(self.grid, [(0, 1)], 0.5)
        final = integrate(state, f, self.params, self.cfg, 1000 * self.cfg.dt).final
        self.assertFalse(np.any(final.b.coeffs))

    def test_unforced_energy_decreases(self):
        records = []
        integrate(
            _random_state(self.grid, 12), None, self.params, self.cfg, 300 * self.cfg.dt,
            [observer(stride=10)(lambda s, i: records.append(record_energy(s, None, self.params)))],
        )
        y = [record.y for record in records]
        self.assertTrue(all(b < a for a, b in zip(y, y[1:])))
        report = absorbing_check(records, self.params, resolve_constants(DomainConstants(), self.grid.dom))
        self.assertEqual(report.envelope_violations, 0)

    def test_single_mode_decay_rate(self):
        params = PhysicalParams(mu1=0.05, alpha=0.5, s_diff=0.5, mu0=1.0, eps=1.0)
        cfg = StepperConfig(dt=1e-3)
        u = shear_mode(self.grid, (0, 1), amplitude=1e-4)
        state = State(u, SpectralVectorField.zeros(self.grid))
        T = 0.2
        final = integrate(state, None, params, cfg, T).final
        rate = -math.log(sobolev_norm_sq(final.u) / sobolev_norm_sq(u)) / (2 * T)
        expected = 0.5 * params.mu1 + 0.5 * params.gamma_at_rest
        self.assertAlmostEqual(rate / expected, 1.0, delta=1e-3)


@pytest.mark.parametrize("scheme", [Scheme.IMEX_EULER, Scheme.IMEX_CNAB2])
def test_energy_identity_residual_order(scheme):
    """One-step balance residual shrinks like dt^2"""
    grid = _grid()
    params = PhysicalParams(mu1=0.05, alpha=0.5, s_diff=0.5, f_amp=0.5)
    f = mode_forcing(grid, [(0, 1), (1, 2)], 0.5)
    state = _random_state(grid, 13)
    rate = energy_rate(record_energy(state, f, params))
    y0 = sobolev_norm_sq(state.u) + sobolev_norm_sq(state.b)
    dts = [4e-3, 2e-3, 1e-3]
    residuals = []
    for dt in dts:
        new = step(state, f, params, StepperConfig(dt=dt, scheme=scheme))
        y1 = sobolev_norm_sq(new.u) + sobolev_norm_sq(new.b)
        residuals.append(abs(0.5 * (y1 - y0) - dt * rate))
    order = np.polyfit(np.log(dts), np.log(residuals), 1)[0]
    assert order >= 1.9


def test_dissipation_terms_nonnegative():
    grid = _grid()
    params = PhysicalParams(mu1=0.05, alpha=0.7, s_diff=0.5, f_amp=0.5)
    f = mode_forcing(grid, [(0, 1)], 0.5)
    records = []
    integrate(_random_state(grid, 14), f, params, StepperConfig(dt=2e-3), 0.2,
              [observer(stride=10)(lambda s, i: records.append(record_energy(s, f, params)))])
    for record in records:
        assert record.diss_bipolar >= 0.0
        assert record.diss_gamma >= 0.0
        assert record.diss_mag >= 0.0


def test_cnab2_second_order():
    grid = _grid()
    params = PhysicalParams(mu1=0.05, alpha=0.5, s_diff=0.5)
    state = _random_state(grid, 15, amplitude=0.3)
    T = 0.1

    def run(dt):
        return integrate(state, None, params, StepperConfig(dt=dt, scheme=Scheme.IMEX_CNAB2), T).final

    reference = run(T / 320)
    errors = []
    for n in (10, 20):
        final = run(T / n)
        errors.append(math.sqrt(sobolev_norm_sq(final.u - reference.u) + sobolev_norm_sq(final.b - reference.b)))
    assert errors[0] / errors[1] > 3.0


def test_imex_euler_first_order():
    grid = _grid()
    params = PhysicalParams(mu1=0.05, alpha=0.5, s_diff=0.5)
    state = _random_state(grid, 16, amplitude=0.3)
    T = 0.1

    def run(dt):
        return integrate(state, None, params, StepperConfig(dt=dt, scheme=Scheme.IMEX_EULER), T).final

    reference = run(T / 320)
    errors = []
    for n in (10, 20):
        final = run(T / n)
        errors.append(math.sqrt(sobolev_norm_sq(final.u - reference.u) + sobolev_norm_sq(final.b - reference.b)))
    # halving dt against a T/320 reference: (32 - 1) / (16 - 1)
    assert 1.7 < errors[0] / errors[1] < 2.4


if __name__ == '__main__':
    unittest.main()
