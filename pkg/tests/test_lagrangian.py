import numpy as np
import pytest

from pdbandits.env import NoiseSpec, stationary_instance
from pdbandits.lagrangian import (
    LagrangeParams,
    choose_eta,
    counterfactual_payoffs,
    expected_lagrangian,
    lagrange_payoff,
    payoff_bounds_for_models,
    per_resource_payoffs,
)


def params_for(eta, ratio):
    return LagrangeParams.make(eta, T=ratio, B=1.0)


class TestPayoff:
    def test_consumption_at_rate_zeroes_penalty(self):
        p = params_for(1.0, 2.0)
        assert lagrange_payoff([0.5, 0.5], [1.0], p, [1]) == pytest.approx(0.5)

    def test_covering_at_rate(self):
        p = params_for(2.0, 4.0)
        assert lagrange_payoff([0.0, 0.25], [1.0], p, [-1]) == pytest.approx(0.0)

    def test_two_resource_hand_value(self):
        p = params_for(2.0, 2.0)
        val = lagrange_payoff([0.3, 0.1, 0.4], [0.5, 0.5], p, [1, 1])
        assert val == pytest.approx(1.3)

    def test_rejects_non_simplex_dual(self):
        p = params_for(1.0, 2.0)
        with pytest.raises(ValueError, match="simplex"):
            lagrange_payoff([0.5, 0.5], [0.7], p, [1])
        with pytest.raises(ValueError, match="simplex"):
            lagrange_payoff([0.5, 0.1, 0.2], [1.2, -0.2], p, [1, 1])

    def test_affine_in_dual(self):
        rng = np.random.default_rng(0)
        p = params_for(3.0, 2.5)
        signs = np.array([1, -1, 1])
        for _ in range(50):
            o = np.concatenate([[rng.random()], rng.uniform(-1, 1, 3)])
            a = rng.dirichlet(np.ones(3))
            b = rng.dirichlet(np.ones(3))
            w = rng.random()
            mix = lagrange_payoff(o, w * a + (1 - w) * b, p, signs)
            split = w * lagrange_payoff(o, a, p, signs) + (1 - w) * lagrange_payoff(o, b, p, signs)
            assert mix == pytest.approx(split, abs=1e-12)

    def test_within_declared_bounds(self):
        rng = np.random.default_rng(1)
        p = LagrangeParams.make(2.5, T=100, B=40)
        signs = np.array([1, -1])
        for _ in range(200):
            o = np.concatenate([[rng.random()], rng.uniform(-1, 1, 2)])
            lam = rng.dirichlet(np.ones(2))
            v = lagrange_payoff(o, lam, p, signs)
            assert p.payoff_lo - 1e-12 <= v <= p.payoff_hi + 1e-12


class TestPerResource:
    def test_single_resource_collapse(self):
        p = params_for(1.5, 3.0)
        o = [0.4, 0.2]
        assert per_resource_payoffs(o, p, [1])[0] == pytest.approx(
            lagrange_payoff(o, [1.0], p, [1])
        )

    def test_all_at_rate_gives_reward(self):
        p = params_for(2.0, 2.0)
        o = [0.7, 0.5, 0.5]
        assert np.allclose(per_resource_payoffs(o, p, [1, 1]), 0.7)

    def test_sign_pair_hand_value(self):
        p = params_for(1.0, 2.0)
        vals = per_resource_payoffs([0.0, 0.0, 0.0], p, [1, -1])
        assert np.allclose(vals, [1.0, -1.0])

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(2)
        p = params_for(2.7, 1.8)
        signs = np.array([1, 1, -1])
        for _ in range(50):
            o = np.concatenate([[rng.random()], rng.uniform(-1, 1, 3)])
            lam = rng.dirichlet(np.ones(3))
            dot = float(lam @ per_resource_payoffs(o, p, signs))
            assert dot == pytest.approx(lagrange_payoff(o, lam, p, signs), abs=1e-12)


class TestChooseEta:
    def test_slater(self):
        assert choose_eta("slater", 100, 50.0, zeta=0.5).eta == pytest.approx(4.0)

    def test_hard_stop(self):
        assert choose_eta("hard_stop", 100, 50.0).eta == pytest.approx(1.0)

    def test_general(self):
        T = 400
        p = choose_eta("general", T, float(T), combined_regret_estimate=T / 4)
        assert p.eta == pytest.approx(2.0)

    def test_general_floors_at_one(self):
        p = choose_eta("general", 100, 10.0, combined_regret_estimate=1e6)
        assert p.eta == 1.0

    def test_zero_violation(self):
        assert choose_eta("zero_violation", 100, 50.0, zeta=0.5).eta == pytest.approx(8.0)

    def test_rejects_zero_margin(self):
        for mode in ("slater", "zero_violation"):
            with pytest.raises(ValueError, match="margin"):
                choose_eta(mode, 100, 50.0, zeta=0.0)

    def test_eta_prime_identity(self):
        p = choose_eta("slater", 300, 60.0, zeta=0.4)
        assert p.eta_prime == p.eta * p.ratio


class TestExpectedLagrangian:
    def spec(self):
        return stationary_instance(
            100, [[0.0, 0.8]], np.array([[[0.0, 0.0], [0.4, 0.3]]]), [1, 1], 50.0
        )

    def test_zero_dual_gives_reward(self):
        spec = self.spec()
        model = spec.segments[0][1]
        p = params_for(2.0, 2.0)
        D = np.array([[0.25, 0.75]])
        val = expected_lagrangian(D, np.zeros(3), model, spec.context_probs, p,
                                  spec.constraints.signs)
        assert val == pytest.approx(0.75 * 0.8)

    def test_null_arm_unit_dual(self):
        # all-packing, zero-consumption arm: value eta * sum(lam) = 1
        from pdbandits.env import OutcomeModel

        model = OutcomeModel(
            np.array([[[0.0, 0.0, 0.0], [0.9, 0.5, 0.5]]]),
            tuple(NoiseSpec() for _ in range(3)),
        )
        p = params_for(1.0, 2.0)
        D = np.array([[1.0, 0.0]])
        for lam in ([0.2, 0.8], [1.0, 0.0], [0.5, 0.5]):
            val = expected_lagrangian(D, lam, model, [1.0], p, [1, 1])
            assert val == pytest.approx(1.0)

    def test_time_term_vanishes_at_rate(self):
        spec = self.spec()
        model = spec.segments[0][1]
        p = params_for(1.0, 2.0)
        D = np.array([[1.0, 0.0]])
        lam = np.array([0.2, 0.3, 0.5])
        # null arm: r=0, c=0 except the time coordinate at rate B/T
        val = expected_lagrangian(D, lam, model, spec.context_probs, p,
                                  spec.constraints.signs)
        assert val == pytest.approx(0.2 + 0.3)

    def test_matches_monte_carlo(self):
        # sampling oracle for the payoff-expectation identity
        noise = (NoiseSpec("bernoulli"), NoiseSpec("gaussian", std=0.05),
                 NoiseSpec("bernoulli"))
        spec = stationary_instance(
            1_000_000, [[0.3, 0.8], [0.6, 0.2]],
            np.array([[[0.2, -0.3], [0.5, 0.6]], [[0.1, 0.4], [0.7, -0.2]]]),
            [1, -1], 500_000.0, noise=noise,
        )
        from pdbandits.env import sample_horizon

        model = spec.segments[0][1]
        signs = spec.constraints.signs
        p = params_for(2.0, 2.0)
        D = np.array([[0.3, 0.7], [0.8, 0.2]])
        lam = np.array([0.5, 0.3, 0.2])
        exact = expected_lagrangian(D, lam, model, spec.context_probs, p, signs)

        rng = np.random.default_rng(9)
        xs, mats = sample_horizon(spec, rng)
        # draw arms from D at the sampled contexts, evaluate payoffs
        us = rng.random(len(xs))
        cdf = np.cumsum(D, axis=1)
        arms = (us[:, None] > cdf[xs]).sum(axis=1)
        outcomes = mats[np.arange(len(xs)), arms]
        slack = 1.0 - p.ratio * outcomes[:, 1:]
        payoffs = outcomes[:, 0] + p.eta * (slack @ (signs * lam))
        se = payoffs.std() / np.sqrt(len(payoffs))
        assert abs(payoffs.mean() - exact) <= 4 * se + 1e-9


class TestCounterfactual:
    def test_matches_rowwise_payoff(self):
        rng = np.random.default_rng(5)
        p = params_for(2.0, 2.5)
        signs = np.array([1, -1])
        mats = np.concatenate(
            [rng.random((20, 3, 1)), rng.uniform(-1, 1, (20, 3, 2))], axis=2
        )
        lams = rng.dirichlet(np.ones(2), size=20)
        cf = counterfactual_payoffs(mats, lams, p, signs)
        for t in (0, 7, 19):
            for a in range(3):
                assert cf[t, a] == pytest.approx(
                    lagrange_payoff(mats[t, a], lams[t], p, signs), abs=1e-12
                )


class TestBounds:
    def test_default_bounds_formula(self):
        p = LagrangeParams.make(3.0, T=90, B=30)
        assert p.payoff_lo == pytest.approx(-3.0 * (1 + 3.0))
        assert p.payoff_hi == pytest.approx(1 + 3.0 * (1 + 3.0))

    def test_instance_bounds_contain_samples(self):
        noise = (NoiseSpec("bernoulli"), NoiseSpec("deterministic"),
                 NoiseSpec("bernoulli"))
        spec = stationary_instance(
            5000, [[0.3, 0.8]], np.array([[[0.2, -0.3], [0.5, 0.6]]]), [1, -1],
            2500.0, noise=noise,
        )
        from pdbandits.env import sample_horizon

        p = LagrangeParams.make(2.0, 5000, 2500.0)
        signs = spec.constraints.signs
        lo, hi = payoff_bounds_for_models([spec.segments[0][1]], p, signs)
        assert lo >= p.payoff_lo and hi <= p.payoff_hi
        rng = np.random.default_rng(3)
        _, mats = sample_horizon(spec, rng)
        lams = rng.dirichlet(np.ones(3), size=len(mats))
        cf = counterfactual_payoffs(mats, lams, p, signs)
        assert cf.min() >= lo - 1e-9 and cf.max() <= hi + 1e-9
