"""Energy, envelopes, Lyapunov functional, residuals, separation margin."""

import numpy as np
import pytest

from nlch.diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    delta_for_mean,
    energy,
    energy_pairwise,
    lyapunov_J,
    mean_envelope,
    separation_delta,
    weak_residuals,
)
from nlch.grid import Grid
from nlch.kernel import KernelSpec, build_kernel
from nlch.model import ModelParams, SourceSpec
from nlch.potential import PotentialParams, eval_dF
from nlch.solver import State


@pytest.fixture
def setup():
    grid = Grid(lengths=(1.0,), cells=(48,))
    k = build_kernel(
        KernelSpec(family="gaussian", width=0.06, cutoff_radius=0.25,
                   normalize="interior-one"),
        grid,
    )
    pot = PotentialParams(phi_bar=0.6, lam=1e-3)
    return grid, k, pot


class TestEnergy:
    def test_matches_pairwise_double_sum(self, setup):
        grid, k, pot = setup
        rng = np.random.default_rng(0)
        phi = 0.4 + 0.1 * rng.standard_normal(grid.shape)
        e_fast = energy(phi, k, pot)
        e_ref = energy_pairwise(phi, k, pot)
        assert e_fast == pytest.approx(e_ref, rel=1e-10)

    def test_constant_state_is_potential_only(self, setup):
        grid, k, pot = setup
        phi = grid.new_field(0.5)
        from nlch.potential import eval_F_lambda
        expect = float(eval_F_lambda(0.5, pot)) * grid.volume
        assert energy(phi, k, pot) == pytest.approx(expect, abs=1e-12)

    def test_unregularized_sentinel(self, setup):
        grid, k, _ = setup
        pot0 = PotentialParams(phi_bar=0.6, lam=0.0)
        assert energy(grid.new_field(1.5), k, pot0) == np.inf
        assert np.isfinite(energy(grid.new_field(0.5), k, pot0))

    def test_nonlocal_part_nonnegative(self, setup):
        # J >= 0 makes the pairwise quadratic term non-negative, so the
        # energy dominates the pure potential term
        grid, k, pot = setup
        from nlch.potential import eval_F_lambda
        rng = np.random.default_rng(1)
        phi = 0.5 + 0.3 * rng.standard_normal(grid.shape)
        pot_term = float(np.sum(eval_F_lambda(phi, pot))) * grid.cell_volume
        assert energy(phi, k, pot) >= pot_term - 1e-12


class TestMeanEnvelope:
    def test_initial_time(self):
        lo, hi = mean_envelope(0.0, 0.5, 1.0, 0.4)
        assert lo == 0.5 and hi == 0.5

    def test_long_time_limits(self):
        lo, hi = mean_envelope(50.0, 0.5, 1.0, 0.4)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(0.4, abs=1e-10)

    def test_exact_solution_inside(self):
        # constant source K: y(t) = y0 e^{-mt} + (1-e^{-mt}) K/m hits the top
        y0, m, K = 0.5, 2.0, 0.6
        for t in np.linspace(0, 3, 30):
            y = y0 * np.exp(-m * t) + (1 - np.exp(-m * t)) * K / m
            lo, hi = mean_envelope(t, y0, m, K)
            assert lo - 1e-12 <= y <= hi + 1e-12

    def test_bad_args(self):
        with pytest.raises(ValueError):
            mean_envelope(1.0, 0.5, 0.0, 0.4)
        with pytest.raises(ValueError):
            mean_envelope(1.0, 1.5, 1.0, 0.4)


class TestDeltaForMean:
    def test_basic_value(self):
        # y0=0.5, m=1, K=0.5, T=2: min(1/4, 0.5 e^{-2}, 1-0.5)
        d = delta_for_mean(0.5, 1.0, 0.5, 2.0)
        assert d == pytest.approx(0.5 * np.exp(-2.0), abs=1e-14)
        assert 0 < d < 0.25

    def test_requires_subcritical_K(self):
        with pytest.raises(ValueError):
            delta_for_mean(0.5, 1.0, 1.5, 1.0)

    def test_envelope_stays_inside(self):
        y0, m, K, T = 0.3, 1.0, 0.6, 1.5
        d = delta_for_mean(y0, m, K, T)
        for t in np.linspace(0, T, 50):
            lo, hi = mean_envelope(t, y0, m, K)
            assert lo >= d - 1e-12
            assert hi <= 1.0 - d + 1e-12


class TestLyapunov:
    def test_quadratic_in_state(self, setup):
        grid, _, _ = setup
        p = ModelParams(tau=0.1, chi=0.0, B=0.0, C=0.0, m=0.0,
                        h1=SourceSpec("zero"), h2=SourceSpec("zero"),
                        sigma_S=0.0)
        rng = np.random.default_rng(2)
        phi0 = rng.standard_normal(grid.shape)
        phi1 = phi0 + 0.01 * rng.standard_normal(grid.shape)
        mu = rng.standard_normal(grid.shape)
        s0 = State(0.0, phi0, mu, np.zeros(grid.shape))
        s1 = State(0.1, phi1, mu, np.zeros(grid.shape))
        Jval, M = lyapunov_J(s0, s1, 0.1, p, grid)
        # with S = 0: J = 0.5|grad mu|^2 + (tau/2)|dphi|^2 >= 0
        assert Jval >= 0.0
        assert M >= 0.0 and np.isfinite(M)

    def test_coercivity_identity(self, setup):
        grid, _, _ = setup
        p = ModelParams(tau=0.05, chi=0.2, B=1.0, C=1.0, m=1.0,
                        h1=SourceSpec("constant", 0.5),
                        h2=SourceSpec("constant", 1.0), sigma_S=0.8)
        rng = np.random.default_rng(3)
        s0 = State(0.0, 0.5 + 0.01 * rng.standard_normal(grid.shape),
                   rng.standard_normal(grid.shape), np.full(grid.shape, 0.8))
        s1 = State(0.01, s0.phi + 1e-3 * rng.standard_normal(grid.shape),
                   s0.mu, s0.sigma)
        Jval, M = lyapunov_J(s0, s1, 0.01, p, grid)
        dphi = (s1.phi - s0.phi) / 0.01
        lhs = grid.grad_sq_integral(s1.mu) + grid.inner(dphi, dphi)
        assert lhs <= M * (Jval + 1.0) + 1e-10


class TestResiduals:
    def test_zero_for_manufactured_step(self, setup):
        # build a state pair that satisfies the discrete identities exactly
        grid, k, pot = setup
        p = ModelParams(tau=0.05, chi=0.2, B=1.0, C=1.0, m=1.0,
                        h1=SourceSpec("constant", 0.5),
                        h2=SourceSpec("constant", 1.0), sigma_S=0.8)
        from nlch.solver import SchemeConfig, State, step
        rng = np.random.default_rng(4)
        phi0 = 0.5 + 0.02 * rng.standard_normal(grid.shape)
        s0 = State(0.0, phi0, grid.new_field(0.0), grid.new_field(0.8))
        cfg = SchemeConfig(dt=1e-3)
        s1 = step(s0, p, pot, k, cfg)
        r_phi, r_sig, r_mu = weak_residuals(s0, s1, cfg.dt, p, k, pot)
        assert r_phi < 1e-7
        assert r_sig < 1e-7
        assert r_mu < 1e-12  # mu is reconstructed from the same formula

    def test_nonzero_for_random_pair(self, setup):
        grid, k, pot = setup
        p = ModelParams(tau=0.05, chi=0.2, B=1.0, C=1.0, m=1.0,
                        h1=SourceSpec("constant", 0.5),
                        h2=SourceSpec("constant", 1.0), sigma_S=0.8)
        rng = np.random.default_rng(5)
        s0 = State(0.0, grid.new_field(0.5), grid.new_field(0.0),
                   grid.new_field(0.8))
        s1 = State(0.1, 0.5 + 0.1 * rng.standard_normal(grid.shape),
                   rng.standard_normal(grid.shape), grid.new_field(0.7))
        r_phi, r_sig, r_mu = weak_residuals(s0, s1, 0.1, p, k, pot)
        assert max(r_phi, r_sig, r_mu) > 1e-3


class TestSeparation:
    def test_root_property(self):
        pot = PotentialParams(phi_bar=0.6, lam=1e-3)
        for R in (0.5, 2.0, 10.0):
            d = separation_delta(R, pot)
            assert 0 < d < 1
            # at the threshold F' equals R; beyond it F' >= R
            assert eval_dF(1.0 - d, pot) == pytest.approx(R, rel=1e-8)
            rs = np.linspace(1.0 - d, 1.0 - 1e-9, 1000)
            assert np.all(eval_dF(rs, pot) >= R - 1e-8)

    def test_monotone_in_R(self):
        pot = PotentialParams(phi_bar=0.6, lam=1e-3)
        ds = [separation_delta(R, pot) for R in (0.1, 1.0, 5.0, 50.0)]
        assert all(a > b for a, b in zip(ds, ds[1:]))

    def test_huge_R_gives_tiny_delta(self):
        pot = PotentialParams(phi_bar=0.6, lam=1e-3)
        assert separation_delta(1e14, pot) <= 1e-12


class TestRecord:
    def test_csv_row_matches_columns(self):
        rec = DiagnosticsRecord(
            t=0.1, mean_phi=0.5, mean_lo=0.4, mean_hi=0.6,
            min_phi=0.3, max_phi=0.7, min_sigma=0.0, max_sigma=1.0,
            energy=-0.01, J_functional=0.2,
            residual_phi_eq=1e-10, residual_sigma_eq=1e-11,
            residual_mu_eq=1e-16, flags=["phi-range"],
        )
        row = rec.csv_row()
        assert len(row.split(",")) == len(CSV_COLUMNS.split(","))
        assert row.endswith("phi-range")
        assert float(row.split(",")[0]) == 0.1
