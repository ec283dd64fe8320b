import math

import numpy as np
import pytest

from manifold_extremes.pickands import (
    ChiAlphaLattice,
    PickandsEstimate,
    chi_alpha_covariance,
    chi_alpha_factor,
    chi_alpha_moments,
    estimate_H,
    extrapolate_H,
)
from manifold_extremes.sampler import map_replicates
from oracles import FROZEN

INV_SQRT_PI = 1 / math.sqrt(math.pi)


class TestMoments:
    def test_origin(self):
        assert chi_alpha_moments(1.3, [0.0], [0.0]) == (0.0, 0.0)

    def test_alpha1_variance(self):
        mean, cov = chi_alpha_moments(1.0, [0.7, 0.0], [0.7, 0.0])
        assert mean == pytest.approx(-0.7)
        assert cov == pytest.approx(1.4)

    def test_antipodal(self):
        assert chi_alpha_moments(1.0, [1.0], [-1.0])[1] == pytest.approx(0.0)

    def test_alpha2_factor_is_exact(self):
        pts = ChiAlphaLattice(2.0, 2, 3, 0.4).points
        fc = chi_alpha_factor(2.0, pts)
        assert np.allclose(fc.factor @ fc.factor.T, chi_alpha_covariance(2.0, pts), atol=1e-12)

    def test_cholesky_factor_reproduces_covariance(self):
        pts = ChiAlphaLattice(1.0, 2, 4, 0.3).points
        fc = chi_alpha_factor(1.0, pts)
        assert np.allclose(fc.factor @ fc.factor.T, chi_alpha_covariance(1.0, pts), atol=1e-9)

    def test_origin_pinned(self):
        pts = ChiAlphaLattice(0.8, 1, 20, 0.1).symmetric_points
        fc = chi_alpha_factor(0.8, pts)
        origin = int(np.flatnonzero(np.all(pts == 0, axis=1))[0])
        vals = np.concatenate(map_replicates(fc, 300, 1, lambda x: x[:, origin].copy()))
        assert np.all(vals == 0.0)


class TestEstimate:
    def test_origin_only_lattice(self):
        est = estimate_H(1.0, 1, 0, 0.1, 100, seed=1, method="ratio")
        assert est.h_l_gamma == 1.0

    def test_alpha2_direct_mean_matches_lattice_oracle(self):
        # T = l gamma = 1 keeps exp(max) light enough for the stderr to be trustworthy
        est = estimate_H(2.0, 1, 20, 0.05, 100_000, seed=3, method="ratio")
        assert abs(est.h_l_gamma - FROZEN["alpha2_lattice_direct(20, 0.05)"]) < 3 * est.h_l_gamma_stderr
        # and with the continuous-time closed form, up to the lattice gap
        assert abs(est.h_l_gamma - (INV_SQRT_PI + 1)) < 3 * est.h_l_gamma_stderr + 1e-3

    def test_alpha1_direct_mean_matches_walk_oracle(self):
        est = estimate_H(1.0, 1, 20, 0.1, 100_000, seed=4, method="ratio")
        assert abs(est.h_l_gamma - FROZEN["alpha1_lattice_direct(20, 0.1)"]) < 3 * est.h_l_gamma_stderr

    def test_alpha2_dieker_yakir_rate(self):
        est = estimate_H(2.0, 1, 200, 0.05, 200_000, seed=5)
        assert abs(est.h_rate - INV_SQRT_PI) < 3 * est.stderr + 0.01
        assert abs(est.h_rate - FROZEN["alpha2_lattice_dy(200, 0.05)"]) < 4 * est.stderr

    def test_alpha1_dieker_yakir_matches_exact_lattice_constant(self):
        est = estimate_H(1.0, 1, 300, 0.05, 20_000, seed=6)
        assert abs(est.h_rate - FROZEN["alpha1_lattice_constant(0.05)"]) < 4 * est.stderr

    @pytest.mark.xfail(strict=True, reason="the gamma = 0.05 lattice constant is 0.8318, below the band")
    def test_alpha1_coarse_lattice_band(self):
        est = estimate_H(1.0, 1, 400, 0.05, 100_000, seed=7)
        assert 0.85 <= est.h_rate <= 1.15

    def test_alpha1_fine_lattice_in_band(self):
        est = estimate_H(1.0, 1, 1200, 0.01, 5_000, seed=8)
        assert 0.85 <= est.h_rate <= 1.15
        assert abs(est.h_rate - FROZEN["alpha1_lattice_constant(0.01)"]) < 4 * est.stderr

    def test_h_l_gamma_nondecreasing_in_l(self):
        a = estimate_H(1.5, 1, 10, 0.1, 20_000, seed=9, method="ratio")
        b = estimate_H(1.5, 1, 30, 0.1, 20_000, seed=9, method="ratio")
        assert b.h_l_gamma >= a.h_l_gamma - 2 * math.hypot(a.h_l_gamma_stderr, b.h_l_gamma_stderr)
        assert a.h_l_gamma >= 1.0

    def test_two_dimensional_alpha2(self):
        est = estimate_H(2.0, 2, 20, 0.25, 20_000, seed=10)
        assert abs(est.h_rate - 1 / math.pi) < 4 * est.stderr + 0.01

    def test_threads_bit_identical(self):
        a = estimate_H(1.0, 1, 50, 0.1, 2_000, seed=11, threads=1)
        b = estimate_H(1.0, 1, 50, 0.1, 2_000, seed=11, threads=3)
        assert a.to_dict() == b.to_dict()

    def test_lattice_cap(self):
        with pytest.raises(ValueError):
            estimate_H(1.0, 2, 100, 0.1, 100, seed=1)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            estimate_H(1.0, 1, 5, 0.1, 100, seed=1, method="bootstrap")


def synthetic(values, stderr=0.001):
    ladder = [(50, 0.2), (100, 0.1), (200, 0.05), (400, 0.025)]
    return [
        PickandsEstimate(1.0, 0.0, v, stderr, 100, ChiAlphaLattice(1.0, 1, l, g)) for v, (l, g) in zip(values, ladder)
    ]


class TestExtrapolate:
    def test_constant_ladder(self):
        res = extrapolate_H(synthetic([0.7, 0.7, 0.7]))
        assert (res.h_hat, res.uncertainty, res.converged) == (0.7, 0.001, True)

    def test_blow_up_flagged(self):
        assert not extrapolate_H(synthetic([0.70, 0.71, 0.90])).converged

    def test_noise_not_flagged(self):
        assert extrapolate_H(synthetic([0.7, 0.7, 0.7004], stderr=0.002)).converged

    def test_needs_three_rungs(self):
        with pytest.raises(ValueError):
            extrapolate_H(synthetic([0.7, 0.7]))

    def test_needs_decreasing_gamma(self):
        with pytest.raises(ValueError):
            extrapolate_H(synthetic([0.7, 0.7, 0.7])[::-1])

    def test_alpha2_ladder(self):
        ests = [estimate_H(2.0, 1, l, g, 100_000, seed=12, stream=k) for k, (l, g) in enumerate([(50, 0.2), (100, 0.1), (200, 0.05)])]
        res = extrapolate_H(ests)
        assert res.converged
        assert abs(res.h_hat - INV_SQRT_PI) <= 0.02


def test_shipped_alpha1_ladder():
    from pathlib import Path

    from manifold_extremes.harness.config import load_config
    from manifold_extremes.harness.experiments import run

    cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "pickands_alpha1.toml")
    rep = run(cfg)
    assert rep.summary["converged"]
    assert 0.85 <= rep.summary["h_hat"] <= 1.15
