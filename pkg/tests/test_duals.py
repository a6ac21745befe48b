import numpy as np
import pytest

from pdbandits.duals import DualState, dual_init, dual_step, realized_dual_regret


class TestInit:
    def test_uniform_start(self):
        state = dual_init(3, 100, 0.0, 1.0)
        assert np.allclose(state.distribution(), 1 / 3)

    def test_zero_switch_hint_is_hedge(self):
        state = dual_init(2, 100, 0.0, 1.0, num_switches_hint=0)
        assert state.share_alpha == 0.0

    def test_learning_rate_formula(self):
        state = dual_init(2, 10_000, -1.0, 3.0, num_switches_hint=None)
        assert state.learning_rate == pytest.approx(np.sqrt(8 * np.log(2) / 10_000) / 4)

    def test_share_alpha_from_hint(self):
        state = dual_init(2, 101, 0.0, 1.0, num_switches_hint=5)
        assert state.share_alpha == pytest.approx(5 / 100)


class TestStep:
    def test_equal_costs_keep_distribution(self):
        state = dual_init(4, 100, 0.0, 1.0)
        before = state.distribution()
        dual_step(state, np.full(4, 0.7))
        assert np.allclose(state.distribution(), before)

    def test_exponential_update_hand_value(self):
        eps = 0.1
        state = DualState(
            log_weights=np.zeros(2), learning_rate=eps, share_alpha=0.0,
            payoff_lo=0.0, payoff_hi=1.0, cumulative_cost=np.zeros(2),
        )
        dual_step(state, np.array([1.0, 0.0]))
        expect = np.array([np.exp(-eps), 1.0])
        assert np.allclose(state.distribution(), expect / expect.sum())

    def test_full_sharing_resets_uniform(self):
        state = dual_init(3, 100, 0.0, 1.0)
        state.share_alpha = 1.0
        dual_step(state, np.array([1.0, 0.0, 0.5]))
        assert np.allclose(state.distribution(), 1 / 3)

    def test_rejects_out_of_range_cost(self):
        state = dual_init(2, 100, 0.0, 1.0)
        with pytest.raises(ValueError, match="range"):
            dual_step(state, np.array([1.5, 0.0]))

    def test_distribution_sums_to_one(self):
        rng = np.random.default_rng(0)
        state = dual_init(5, 1000, -2.0, 2.0)
        for _ in range(200):
            dual_step(state, rng.uniform(-2, 2, 5))
            lam = state.distribution()
            assert abs(lam.sum() - 1.0) < 1e-12 and lam.min() > 0


class TestRealizedRegret:
    def test_singleton_on_best_resource(self):
        payoffs = np.array([[3.0, 1.0], [2.0, 0.5], [4.0, 1.5]])
        lambdas = np.tile([0.0, 1.0], (3, 1))  # always the ex-post best
        assert realized_dual_regret(lambdas, payoffs) == pytest.approx(0.0)

    def test_single_round_hand_value(self):
        assert realized_dual_regret(
            np.array([[0.5, 0.5]]), np.array([[3.0, 1.0]])
        ) == pytest.approx(1.0)

    def test_matches_bruteforce_with_intervals(self):
        rng = np.random.default_rng(4)
        T, d = 200, 3
        lambdas = rng.dirichlet(np.ones(d), size=T)
        payoffs = rng.normal(size=(T, d))
        switches = [51, 120]
        got = realized_dual_regret(lambdas, payoffs, switches)
        want = 0.0
        for a, b in zip([1, 51, 120], [51, 120, T + 1]):
            seg = slice(a - 1, b - 1)
            want += (lambdas[seg] * payoffs[seg]).sum() - payoffs[seg].sum(0).min()
        assert got == pytest.approx(want, abs=1e-9)


class TestGuarantees:
    @pytest.mark.parametrize("d", [2, 5])
    def test_hedge_bound_on_adversarial_costs(self, d):
        # worst-case alternating unit-range costs
        T = 10_000
        state = dual_init(d, T, 0.0, 1.0)
        lr = state.learning_rate
        rng = np.random.default_rng(d)
        lambdas = np.empty((T, d))
        costs = np.empty((T, d))
        for t in range(T):
            lambdas[t] = state.distribution()
            c = np.zeros(d)
            c[np.argmax(lambdas[t])] = 1.0  # punish the heaviest weight
            if t % 7 == 0:
                c = rng.random(d).round()
            costs[t] = c
            dual_step(state, c)
        regret = realized_dual_regret(lambdas, costs)
        assert regret <= np.sqrt(T * np.log(d) / 2) + np.log(d) / lr

    def test_no_weight_collapse_long_horizon(self):
        T = 100_000
        state = dual_init(3, T, -1.0, 1.0)
        half = np.array([1.0, -1.0, 1.0])
        for t in range(T):
            dual_step(state, half if (t // 500) % 2 == 0 else -half)
        assert state.distribution().min() > 0.0

    def test_fixed_share_beats_hedge_on_reversals(self):
        # 2 resources, 3 cost reversals; same deterministic sequence
        T = 8_000
        seg = T // 4
        costs = np.zeros((T, 2))
        for j in range(4):
            good = j % 2
            costs[j * seg : (j + 1) * seg, 1 - good] = 1.0
        switches = [seg + 1, 2 * seg + 1, 3 * seg + 1]

        def run(hint):
            state = dual_init(2, T, 0.0, 1.0, num_switches_hint=hint)
            lambdas = np.empty((T, 2))
            for t in range(T):
                lambdas[t] = state.distribution()
                dual_step(state, costs[t])
            return realized_dual_regret(lambdas, costs, switches)

        assert run(3) < run(None)
