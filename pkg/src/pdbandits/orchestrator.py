"""The round-by-round primal-dual game loop.

Each round: the resource player emits a distribution lambda over resources,
the arm player sees (context, lambda) and picks an arm, the outcome is
realized, and the Lagrange payoff is fed back (reward to the arm player,
per-resource costs to the resource player).  The loop always runs the full
horizon; the hard-stopping knapsack mode switches permanently to the null
arm once a budget is about to run out, and the zero-violation mode plays
the game against a slightly tightened instance while logging true outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .duals import DualState, dual_step
from .env import InstanceSpec, sample_horizon
from .lagrangian import (
    LagrangeParams,
    choose_eta,
    lagrange_payoff,
    payoff_bounds_for_models,
    per_resource_payoffs,
)

MODES = ("standard", "hard_stop", "zero_violation")


@dataclass
class RunConfig:
    """Mode, eta selection inputs, failure probability and seed for one run."""

    mode: str = "standard"
    eta_mode: str = "slater"
    zeta: float | None = None
    regret_estimate: float | None = None
    epsilon: float = 0.0
    delta: float = 0.05
    seed: int = 0
    tight_payoff_bounds: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown run mode {self.mode!r}")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.mode == "hard_stop":
            self.eta_mode = "hard_stop"
        if self.mode == "zero_violation":
            self.eta_mode = "zero_violation"
            if not 0.0 <= self.epsilon <= 0.5:
                raise ValueError("epsilon must lie in [0, 1/2]")
            if self.zeta is None or self.zeta <= 0:
                raise ValueError("zero_violation mode requires a positive margin")
            if self.epsilon > self.zeta / 2 + 1e-12:
                raise ValueError("epsilon must not exceed zeta / 2")


@dataclass
class GameSetup:
    """Derived quantities the loop and the learners share."""

    params: LagrangeParams
    signs: np.ndarray
    consumption_shift: np.ndarray  # subtracted from reported consumptions
    game_budget: float             # budget the algorithm plays against
    true_budget: float
    stop_margins: np.ndarray | None = None  # per-resource worst-case per-round use


@dataclass
class RunLog:
    """Per-round trace of one game.

    outcomes and matrices hold true realized values; payoffs,
    resource_payoffs and predictions are the game's view (they reflect the
    reported consumptions and game budget in zero-violation mode).
    """

    contexts: np.ndarray            # (T,)
    lambdas: np.ndarray             # (T, d)
    probs: np.ndarray | None        # (T, K)
    arms: np.ndarray                # (T,)
    outcomes: np.ndarray            # (T, d+1)
    matrices: np.ndarray            # (T, K, d+1)
    payoffs: np.ndarray             # (T,)
    resource_payoffs: np.ndarray    # (T, d)
    predictions: np.ndarray | None  # (T, d+1)
    params: LagrangeParams
    consumption_shift: np.ndarray
    stop_round: int | None = None

    @property
    def num_rounds(self) -> int:
        return len(self.arms)

    def game_matrices(self) -> np.ndarray:
        """Counterfactual matrices as the algorithm would have seen them."""
        if not self.consumption_shift.any():
            return self.matrices
        out = self.matrices.copy()
        out[:, :, 1:] -= self.consumption_shift
        return out

    def game_outcomes(self) -> np.ndarray:
        if not self.consumption_shift.any():
            return self.outcomes
        out = self.outcomes.copy()
        out[:, 1:] -= self.consumption_shift
        return out


def epsilon_for_zero_violation(T: int, B: float, zeta: float, regret_estimate: float) -> float:
    """Prescribed rescaling amount 16 T R / (zeta B^2) for estimate R."""
    if zeta <= 0 or regret_estimate <= 0:
        raise ValueError("need positive margin and regret estimate")
    return 16.0 * T * regret_estimate / (zeta * B * B)


def game_setup(instance: InstanceSpec, config: RunConfig) -> GameSetup:
    """Resolve eta, payoff bounds, reported-consumption shift and budget."""
    if not instance.normalized:
        raise ValueError("instance must be normalized first")
    signs = instance.constraints.signs.astype(float)
    d = instance.num_resources
    T = instance.horizon
    B = instance.budget

    if config.mode == "hard_stop":
        if instance.null_arm is None:
            raise ValueError("hard_stop mode requires a declared null arm")
        if np.any(instance.constraints.signs != 1):
            raise ValueError("hard_stop mode requires packing constraints only")

    shift = np.zeros(d)
    game_budget = B
    if config.mode == "zero_violation":
        game_budget = B * (1.0 - config.epsilon)
        shift = np.where(signs < 0, 2.0 * config.epsilon * B / T, 0.0)

    cmax = 1.0 + float(shift.max())
    params = choose_eta(
        config.eta_mode,
        T,
        game_budget,
        zeta=config.zeta,
        combined_regret_estimate=config.regret_estimate,
        cmax=cmax,
    )
    if config.tight_payoff_bounds:
        models = [m for _, m in instance.segments]
        lo, hi = payoff_bounds_for_models(models, params, signs, consumption_shift=shift)
        params = params.with_bounds(lo, hi)

    # worst case one unit per round for stochastic consumptions; deterministic
    # coordinates (notably the time resource) stop at their known rate
    margins = np.full(d, -np.inf)
    for _, model in instance.segments:
        for i in range(d):
            margins[i] = max(margins[i], model.coordinate_support(1 + i)[1])
    return GameSetup(
        params=params,
        signs=signs,
        consumption_shift=shift,
        game_budget=game_budget,
        true_budget=B,
        stop_margins=margins,
    )


def play(
    contexts: np.ndarray,
    matrices: np.ndarray,
    primal,
    dual: DualState,
    setup: GameSetup,
    rng: np.random.Generator,
    null_arm: int | None = None,
    stop_on_budget: bool = False,
    collect_probs: bool = True,
) -> RunLog:
    """Run the game on a pre-sampled outcome stream.

    The loop holds no horizon state of its own beyond the learners (and the
    running budget counters in hard-stopping mode), so splitting a stream
    and continuing with the same learners and rng reproduces the unsplit
    trace exactly.
    """
    T, K, dp1 = matrices.shape
    d = dp1 - 1
    params, signs, shift = setup.params, setup.signs, setup.consumption_shift
    shifted = bool(shift.any())

    lambdas = np.empty((T, d))
    arms = np.empty(T, dtype=np.int64)
    outcomes = np.empty((T, dp1))
    payoffs = np.empty(T)
    resource_payoffs = np.empty((T, d))
    probs = np.empty((T, K)) if collect_probs else None
    logs_predictions = hasattr(primal, "predictions_at")
    predictions = np.full((T, dp1), np.nan) if logs_predictions else None

    uniforms = rng.random(T)
    running = np.zeros(d)
    stopped = False
    stop_round = None

    for t in range(T):
        lam = dual.distribution()
        lambdas[t] = lam
        x = int(contexts[t])

        if stop_on_budget and not stopped and np.any(
            running + setup.stop_margins > setup.game_budget
        ):
            stopped = True
            stop_round = t + 1

        if stopped:
            arm = null_arm
            if collect_probs:
                probs[t] = 0.0
                probs[t, arm] = 1.0
        else:
            p = primal.distribution(x, lam)
            arm = int(np.searchsorted(np.cumsum(p), uniforms[t], side="right"))
            arm = min(arm, K - 1)
            if collect_probs:
                probs[t] = p

        o_true = matrices[t, arm]
        o_game = o_true.copy()
        if shifted:
            o_game[1:] -= shift

        pay = lagrange_payoff(o_game, lam, params, signs)
        costs = per_resource_payoffs(o_game, params, signs)
        arms[t] = arm
        outcomes[t] = o_true
        payoffs[t] = pay
        resource_payoffs[t] = costs

        if not stopped:
            if logs_predictions:
                predictions[t] = primal.predictions_at(arm)
            primal.update(x, arm, pay, o_game)
            dual_step(dual, costs)
        running += o_true[1:]

    return RunLog(
        contexts=np.asarray(contexts, dtype=np.int64).copy(),
        lambdas=lambdas,
        probs=probs,
        arms=arms,
        outcomes=outcomes,
        matrices=np.asarray(matrices, dtype=float),
        payoffs=payoffs,
        resource_payoffs=resource_payoffs,
        predictions=predictions,
        params=params,
        consumption_shift=shift.copy(),
        stop_round=stop_round,
    )


def run(instance: InstanceSpec, primal, dual: DualState, config: RunConfig) -> RunLog:
    """Sample a horizon and play it under the configured mode."""
    setup = game_setup(instance, config)
    rng = np.random.default_rng(config.seed)
    contexts, matrices = sample_horizon(instance, rng)
    return play(
        contexts,
        matrices,
        primal,
        dual,
        setup,
        rng,
        null_arm=instance.null_arm,
        stop_on_budget=(config.mode == "hard_stop"),
    )


def run_hard_stop(instance, primal, dual, config: RunConfig) -> RunLog:
    if config.mode != "hard_stop":
        raise ValueError("config.mode must be 'hard_stop'")
    return run(instance, primal, dual, config)


def run_zero_violation(instance, primal, dual, config: RunConfig) -> RunLog:
    if config.mode != "zero_violation":
        raise ValueError("config.mode must be 'zero_violation'")
    return run(instance, primal, dual, config)
