import numpy as np
import pytest
from conftest import grid_argmax

from distmech import InvalidRange, InvalidUtility, NoConvergence
from distmech.model import (
    LogCoshUtility,
    QuadraticUtility,
    UtilityProfile,
    kkt_residual_private,
    kkt_residual_public,
    load_profile,
    sample_quadratic_profile,
    save_profile,
    solve_decreasing,
    solve_private,
    solve_public,
)


def logcosh_profile(n, seed=0):
    rng = np.random.default_rng(seed)
    return UtilityProfile(
        [LogCoshUtility(float(a), float(b), float(c)) for a, b, c in rng.uniform([0.5, 1, 0.1], [2, 5, 1], (n, 3))],
        eta=25.0,
    )


class TestUtilities:
    def test_quadratic_closed_forms(self):
        u = QuadraticUtility(-2.0, 3.0)
        assert u.value(1.0) == 1.0
        assert u.marginal(1.0) == -1.0
        assert u.curvature(5.0) == -4.0
        assert u.marginal_inv(-1.0) == 1.0

    def test_quadratic_needs_negative_theta(self):
        with pytest.raises(InvalidUtility):
            QuadraticUtility(0.0, 1.0)

    def test_band_enforced(self):
        with pytest.raises(InvalidUtility):
            UtilityProfile([QuadraticUtility(-20.0, 1.0)], eta=25.0)
        with pytest.raises(InvalidUtility):
            UtilityProfile([QuadraticUtility(-0.01, 1.0)], eta=25.0)

    def test_eta_must_exceed_one(self):
        with pytest.raises(InvalidUtility):
            UtilityProfile([QuadraticUtility(-0.5, 1.0)], eta=1.0)

    @pytest.mark.parametrize("make", [lambda: sample_quadratic_profile(6, 25.0, seed=2), lambda: logcosh_profile(6)])
    def test_inverse_consistency(self, make):
        prof = make()
        for x in np.linspace(-20, 20, 41):
            back = prof.marginal_inv(prof.marginal(np.full(prof.n_agents, x)))
            assert np.max(np.abs(back - x)) < 1e-10

    def test_logcosh_derivatives_match_fd(self):
        u = LogCoshUtility(1.0, 2.0, 0.7)
        h = 1e-6
        for x in (-3.0, -0.2, 0.0, 1.5):
            assert abs((u.value(x + h) - u.value(x - h)) / (2 * h) - u.marginal(x)) < 1e-7
            assert abs((u.marginal(x + h) - u.marginal(x - h)) / (2 * h) - u.curvature(x)) < 1e-7


class TestSampling:
    def test_band_and_sigma(self):
        prof = sample_quadratic_profile(500, 25.0, seed=0)
        assert np.all((prof.theta > -12.5) & (prof.theta < -0.02))
        assert np.all((prof.sigma >= 10) & (prof.sigma <= 20))

    def test_deterministic(self):
        a = sample_quadratic_profile(10, 25.0, seed=5)
        b = sample_quadratic_profile(10, 25.0, seed=5)
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.sigma, b.sigma)

    def test_invalid_range(self):
        with pytest.raises(InvalidRange):
            sample_quadratic_profile(3, 25.0, theta_range=(-13.0, -1.0))

    def test_round_trip(self, tmp_path):
        prof = sample_quadratic_profile(7, 25.0, seed=1)
        save_profile(prof, tmp_path / "p.json")
        back = load_profile(tmp_path / "p.json")
        np.testing.assert_array_equal(back.theta, prof.theta)
        assert back.eta == prof.eta


class TestSolvePrivate:
    def test_hand_example(self, two_agent_profile):
        sol = solve_private(two_agent_profile, 1.0)
        assert sol.duals == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(sol.allocation, [1.0, 0.0], atol=1e-12)

    def test_identical_agents(self):
        prof = UtilityProfile([QuadraticUtility(-1.5, 3.0)] * 5, eta=25.0)
        np.testing.assert_allclose(solve_private(prof, 7.0).allocation, 1.4, atol=1e-12)

    @pytest.mark.parametrize("n", [2, 7, 31, 64])
    def test_kkt(self, n):
        prof = sample_quadratic_profile(n, 25.0, seed=n)
        assert kkt_residual_private(prof, float(n), solve_private(prof, float(n))) < 1e-10

    def test_generic_path(self):
        prof = logcosh_profile(5)
        assert kkt_residual_private(prof, 2.0, solve_private(prof, 2.0)) < 1e-10

    @pytest.mark.parametrize("prof", [sample_quadratic_profile(2, 25.0, seed=3), logcosh_profile(2, 1)])
    def test_grid_oracle_two_agents(self, prof):
        c = 2.0
        sol = solve_private(prof, c)

        def welfare(z):
            return float(np.sum(prof.value(np.array([z[0], c - z[0]]))))

        best = grid_argmax(welfare, [-50.0], [50.0], points=2001, levels=8)
        assert welfare(sol.allocation[:1]) >= welfare(best) - 1e-6
        assert abs(sol.allocation[0] - best[0]) < 1e-6


class TestSolvePublic:
    def test_hand_example(self, two_agent_profile):
        sol = solve_public(two_agent_profile)
        assert sol.allocation == pytest.approx(1.5)
        np.testing.assert_allclose(sol.duals, [1.0, -1.0], atol=1e-12)

    def test_identical_agents(self):
        prof = UtilityProfile([QuadraticUtility(-1.0, 2.0)] * 4, eta=25.0)
        np.testing.assert_allclose(solve_public(prof).duals, 0.0, atol=1e-12)

    @pytest.mark.parametrize("prof", [sample_quadratic_profile(31, 25.0, seed=0), logcosh_profile(9)])
    def test_kkt(self, prof):
        sol = solve_public(prof)
        assert abs(np.sum(sol.duals)) < 1e-10
        assert kkt_residual_public(prof, sol) < 1e-10

    def test_grid_oracle(self):
        prof = sample_quadratic_profile(3, 25.0, seed=8)
        sol = solve_public(prof)

        def welfare(z):
            return float(np.sum(prof.value(np.full(3, z[0]))))

        best = grid_argmax(welfare, [-100.0], [100.0], points=2001, levels=8)
        assert abs(sol.allocation - best[0]) < 1e-6


class TestRootFinder:
    def test_bracket_expansion(self):
        assert solve_decreasing(lambda x: 1e3 - x) == pytest.approx(1e3, abs=1e-9)

    def test_newton_assisted(self):
        root = solve_decreasing(lambda x: -(x**3) - x + 2, dg=lambda x: -3 * x**2 - 1)
        assert root == pytest.approx(1.0, abs=1e-12)

    def test_no_root(self):
        with pytest.raises(NoConvergence):
            solve_decreasing(lambda x: 1.0)
