"""Example spectra: closed forms vs brute-force oracles, audits, filtering."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from helpers import physical_coupled_waves_energy

from polystab import (
    DomainError,
    ExampleParams,
    ModalState,
    ModalSystem,
    SchemeConfig,
    audit_spectrum,
    build_boundary_coupled_waves,
    build_coupled_waves,
    check_gap,
    check_obs_lower_bound,
    cluster_partition,
    factorize,
    filtering_cutoff,
    sine_overlap,
)
from polystab.spectra import boundary_fixedpoint_residuals


class TestCoupledWaves:
    def test_branch_eigenvalues_match_block_diagonalization(self):
        # oracle: diagonalize the per-k 2x2 coupling block directly
        alpha, k_max = 1.0, 16
        sys_ = build_coupled_waves(ExampleParams(alpha, 1.0, k_max))
        for k in range(1, k_max + 1):
            block = np.array([[(k * np.pi) ** 2, alpha], [alpha, (k * np.pi) ** 2]])
            lam = np.linalg.eigvalsh(block)
            got = np.sort([sys_.eta[2 * k - 2], sys_.eta[2 * k - 1]])
            np.testing.assert_allclose(got, lam, rtol=1e-12)

    def test_small_alpha_limit(self):
        sys_ = build_coupled_waves(ExampleParams(1e-12, 2.0, 4))
        ks = np.arange(1, 5)
        base = np.repeat((ks * np.pi) ** 2, 2)
        np.testing.assert_allclose(sys_.eta, base, rtol=1e-10)
        # damping blocks do not depend on alpha
        assert sys_.damp_gram[0, 0] == pytest.approx(1.0)
        assert sys_.damp_gram[0, 1] == pytest.approx(-1.0)

    def test_first_plus_branch_frequency(self):
        sys_ = build_coupled_waves(ExampleParams(1.0, 1.0, 2))
        assert sys_.mu[1] == pytest.approx(math.sqrt(1.0 + math.pi**2), rel=1e-15)
        assert sys_.labels[1] == ("+", 1)

    def test_gram_block_spectrum(self):
        # per-cluster block [[g/2,-g/2],[-g/2,g/2]] has eigenvalues {0, g}
        gamma = 0.8
        sys_ = build_coupled_waves(ExampleParams(0.5, gamma, 3))
        block = sys_.damp_gram[:2, :2]
        lam = np.linalg.eigvalsh(block)
        np.testing.assert_allclose(lam, [0.0, gamma], atol=1e-15)

    def test_gram_psd(self):
        gamma = 1.3
        sys_ = build_coupled_waves(ExampleParams(0.5, gamma, 16))
        lam_min = np.linalg.eigvalsh(sys_.damp_gram)[0]
        assert lam_min >= -1e-12 * gamma

    def test_alpha_range_enforced(self):
        with pytest.raises(DomainError):
            build_coupled_waves(ExampleParams(math.pi**2, 1.0, 4))


class TestBoundaryCoupledWaves:
    def test_fixed_point_residuals(self):
        p = ExampleParams(0.5, 1.0, 16)
        sys_ = build_boundary_coupled_waves(p)
        res = boundary_fixedpoint_residuals(p, sys_)
        assert np.max(res) <= 1e-12

    def test_interlacing_and_limit(self):
        p = ExampleParams(0.9, 1.0, 24)
        sys_ = build_boundary_coupled_waves(p)
        for j, (branch, k) in enumerate(sys_.labels):
            mid = 0.5 * math.pi + k * math.pi
            if branch == "-":
                assert sys_.mu[j] < mid
            else:
                assert sys_.mu[j] > mid
        # both branches approach pi/2 + k pi from either side
        gaps = [abs(sys_.mu[j] - (0.5 * math.pi + k * math.pi))
                for j, (_, k) in enumerate(sys_.labels)]
        assert gaps[-1] < gaps[0]

    def test_normalization_against_quadrature(self):
        # oracle: numerical quadrature of the squared eigenfunction pair
        p = ExampleParams(0.5, 1.0, 3)
        sys_ = build_boundary_coupled_waves(p)
        diag = sine_overlap(sys_.mu, sys_.mu)
        b = 1.0 / np.sqrt(2.0 * diag)
        for j in range(sys_.n):
            val, _ = quad(lambda x: 2.0 * b[j] ** 2 * np.sin(sys_.mu[j] * x) ** 2, 0.0, 1.0)
            assert val == pytest.approx(1.0, abs=1e-10)

    def test_overlap_closed_form_against_quadrature(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a, c = rng.uniform(0.5, 40.0, size=2)
            val, _ = quad(lambda x: np.sin(a * x) * np.sin(c * x), 0.0, 1.0,
                          limit=200)
            assert sine_overlap(a, c) == pytest.approx(val, abs=1e-10)
        # diagonal limit
        mu = 7.3
        val, _ = quad(lambda x: np.sin(mu * x) ** 2, 0.0, 1.0)
        assert sine_overlap(mu, mu) == pytest.approx(val, abs=1e-12)
        assert sine_overlap(mu, mu) == pytest.approx(
            0.5 - math.sin(2 * mu) / (4 * mu), rel=1e-14
        )

    def test_small_alpha_normalization_limit(self):
        sys_ = build_boundary_coupled_waves(ExampleParams(1e-10, 1.0, 2))
        b = 1.0 / np.sqrt(2.0 * sine_overlap(sys_.mu, sys_.mu))
        np.testing.assert_allclose(b, 1.0, atol=1e-9)

    def test_eigenfunction_orthonormality(self):
        # pairs (-+ sin, sin) b: Gram should be the identity
        sys_ = build_boundary_coupled_waves(ExampleParams(0.7, 1.0, 8))
        signs = np.array([1.0 if br == "-" else -1.0 for br, _ in sys_.labels])
        diag = sine_overlap(sys_.mu, sys_.mu)
        b = 1.0 / np.sqrt(2.0 * diag)
        S = sine_overlap(sys_.mu[:, None], sys_.mu[None, :])
        gram = (signs[:, None] * signs[None, :] + 1.0) * S * (b[:, None] * b[None, :])
        assert np.max(np.abs(gram - np.eye(sys_.n))) <= 1e-10

    def test_gram_psd_and_observation_norms(self):
        gamma = 2.0
        sys_ = build_boundary_coupled_waves(ExampleParams(0.5, gamma, 12))
        assert np.linalg.eigvalsh(sys_.damp_gram)[0] >= -1e-12 * gamma
        np.testing.assert_allclose(sys_.bstar_norms, math.sqrt(gamma / 2), rtol=1e-12)

    def test_alpha_range_enforced(self):
        with pytest.raises(DomainError):
            build_boundary_coupled_waves(ExampleParams(1.0, 1.0, 4))


class TestGapAudit:
    def test_coupled_waves_pairwise_gap_shrinks(self):
        alpha = 1.0
        sys_ = build_coupled_waves(ExampleParams(alpha, 1.0, 32))
        audit = check_gap(sys_)
        k = 32
        expect = math.sqrt(k**2 * math.pi**2 + alpha) - math.sqrt(k**2 * math.pi**2 - alpha)
        assert audit.min_pairwise_gap == pytest.approx(expect, rel=1e-12)
        assert audit.min_pairwise_gap == pytest.approx(alpha / (k * math.pi), rel=1e-3)
        # growing the truncation shrinks the pairwise gap further
        audit64 = check_gap(build_coupled_waves(ExampleParams(alpha, 1.0, 64)))
        assert audit64.min_pairwise_gap < 0.51 * audit.min_pairwise_gap

    def test_weak_gap_2_stays_of_order_pi(self):
        sys_ = build_coupled_waves(ExampleParams(1.0, 1.0, 64))
        audit = check_gap(sys_)
        assert audit.weak_gap_2 >= 3.0
        assert audit.gamma1 == pytest.approx(audit.weak_gap_2 / 2, rel=1e-15)

    def test_single_frequency_convention(self):
        audit = check_gap(ModalSystem.from_eta([4.0]))
        assert math.isinf(audit.min_pairwise_gap)
        assert math.isinf(audit.weak_gap_2)

    def test_cluster_partition_rule(self):
        part = cluster_partition(np.array([1.0, 1.01, 4.0, 7.0, 7.02]), gamma1=1.0)
        assert part == ((0, 1), (2,), (3, 4))
        with pytest.raises(DomainError):
            cluster_partition(np.array([2.0, 1.0]), 1.0)


class TestObsLowerBound:
    def test_single_mode_value(self):
        gamma = 1.0
        sys_ = ModalSystem.from_eta([math.pi**2], damp_gram=[[gamma / 2]])
        obs = check_obs_lower_bound(sys_, beta=0.0)
        assert obs.theta_hat == pytest.approx(math.sqrt(gamma / 2) * math.pi, rel=1e-14)
        assert obs.cluster_theta_hat == pytest.approx(obs.theta_hat, rel=1e-14)

    def test_no_damping_gives_zero(self):
        sys_ = ModalSystem.from_eta([1.0, 9.0])
        obs = check_obs_lower_bound(sys_, beta=0.0)
        assert obs.theta_hat == 0.0

    def test_cluster_bound_stable_under_truncation_growth(self):
        # the per-mode bound cannot distinguish the nearly-cancelling
        # cluster directions, but the clustered bound stays put
        vals = []
        for k_max in (8, 32, 64):
            sys_ = build_coupled_waves(ExampleParams(1.0, 1.0, k_max))
            vals.append(check_obs_lower_bound(sys_, beta=0.0).cluster_theta_hat)
        assert vals[0] == pytest.approx(vals[-1], rel=1e-9)
        assert vals[-1] > 0.4

    def test_degenerate_cluster_reported(self):
        eta = np.array([1.0, 1.0, 16.0])
        sys_ = ModalSystem.from_eta(eta, damp_gram=0.5 * np.eye(3))
        obs = check_obs_lower_bound(sys_, beta=0.0)
        assert obs.degenerate == ((0, 1),)


class TestFilteringCutoff:
    def test_cutoff_definition(self):
        sys_ = build_coupled_waves(ExampleParams(0.5, 1.0, 8))
        fc = filtering_cutoff(sys_, dt=0.1, delta=1.0)
        assert fc.cutoff == pytest.approx(10.0, rel=1e-15)
        assert np.all(sys_.mu[fc.retained] <= 10.0)
        assert np.all(np.delete(sys_.mu, fc.retained) > 10.0)

    def test_delta_out_of_range(self):
        sys_ = build_coupled_waves(ExampleParams(0.5, 1.0, 8))
        fc = filtering_cutoff(sys_, dt=0.1, delta=1.0)
        with pytest.raises(DomainError):
            filtering_cutoff(sys_, dt=0.1, delta=fc.delta0)

    def test_small_dt_retains_everything(self):
        sys_ = build_coupled_waves(ExampleParams(0.5, 1.0, 8))
        fc = filtering_cutoff(sys_, dt=1e-4, delta=1.0)
        assert fc.retained.size == sys_.n

    def test_audit_report_fields(self):
        sys_ = build_coupled_waves(ExampleParams(0.5, 1.0, 8))
        rep = audit_spectrum(sys_, beta=0.0, dt=0.01, delta=1.0)
        assert rep.cutoff == pytest.approx(100.0)
        assert rep.gamma1 > 1.0
        assert rep.retained_count == sys_.n
        assert math.isfinite(rep.theta_hat) and math.isfinite(rep.cluster_theta_hat)


class TestPhysicalSpaceOracle:
    def test_energy_traces_agree(self):
        # simulate the damped pair directly in the sine basis of each field
        # (no branch diagonalization) and compare energy traces
        alpha, gamma, k_max = 0.5, 1.0, 16
        dt, T = 0.01, 5.0
        sys_ = build_coupled_waves(ExampleParams(alpha, gamma, k_max))
        rng = np.random.default_rng(17)
        z0 = ModalState(rng.standard_normal(sys_.n), rng.standard_normal(sys_.n))
        trace = factorize(sys_, SchemeConfig(dt=dt, t_final=T)).run(z0)
        phys = physical_coupled_waves_energy(alpha, gamma, k_max, z0.a, z0.b, dt, T)
        assert phys.shape == trace.energy.shape
        assert np.max(np.abs(phys - trace.energy)) <= 1e-10 * trace.e0
