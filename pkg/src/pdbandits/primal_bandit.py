"""Adversarial bandit learners over arms: EXP3.P and EXP3.S.

These serve as the arm player in the non-contextual game.  EXP3.P adds a
per-arm confidence bonus to the importance-weighted gain estimates, which
upgrades the expected-regret guarantee to a high-probability one.  EXP3.S
additionally shares weight mass back to uniform each round and tracks the
best arm across a bounded number of environment switches.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log, sqrt

import numpy as np

RANGE_TOL = 1e-9


@dataclass
class AdvBanditState:
    log_weights: np.ndarray
    exploration_mix: float
    learning_rate: float
    bonus_rate: float
    share_alpha: float
    payoff_lo: float
    payoff_hi: float
    last_distribution: np.ndarray

    @property
    def num_arms(self) -> int:
        return len(self.log_weights)

    def distribution(self) -> np.ndarray:
        """(1 - mix) * softmax(weights) + mix * uniform; refreshes the cache."""
        w = np.exp(self.log_weights - self.log_weights.max())
        K = len(w)
        p = (1.0 - self.exploration_mix) * (w / w.sum()) + self.exploration_mix / K
        self.last_distribution = p
        return p


def adv_bandit_init(
    K: int,
    T: int,
    delta: float,
    payoff_lo: float,
    payoff_hi: float,
    num_switches_hint: int | None = None,
) -> AdvBanditState:
    """EXP3.P parameterization on payoffs normalized to [0, 1].

    exploration mix min(1, sqrt(K ln K / T)), learning rate mix / (2K),
    bonus rate sqrt(ln(K / delta) / (K T)).  A switches hint S turns on
    EXP3.S sharing with alpha = S / (T - 1).
    """
    if K < 2:
        raise ValueError("need at least two arms")
    if payoff_hi <= payoff_lo:
        raise ValueError("empty payoff range")
    gamma_mix = min(1.0, sqrt(K * log(K) / T))
    alpha = 0.0
    if num_switches_hint is not None and num_switches_hint > 0:
        alpha = num_switches_hint / (T - 1)
    return AdvBanditState(
        log_weights=np.zeros(K),
        exploration_mix=gamma_mix,
        learning_rate=gamma_mix / (2.0 * K),
        bonus_rate=sqrt(log(K / delta) / (K * T)),
        share_alpha=alpha,
        payoff_lo=payoff_lo,
        payoff_hi=payoff_hi,
        last_distribution=np.full(K, 1.0 / K),
    )


def adv_bandit_sample(state: AdvBanditState, rng: np.random.Generator) -> int:
    """Draw an arm from the current distribution (cached for the update)."""
    p = state.distribution()
    u = rng.random()
    return int(np.searchsorted(np.cumsum(p), u, side="right").clip(0, len(p) - 1))


def adv_bandit_update(state: AdvBanditState, arm: int, payoff: float) -> AdvBanditState:
    """Importance-weighted gain update with confidence bonus, in place.

    The normalized payoff of the chosen arm is importance-weighted by its
    sampling probability; every arm receives the optimistic bonus
    bonus_rate / p(a).  Sharing (share_alpha > 0) then mixes the weights
    back toward uniform.
    """
    if payoff < state.payoff_lo - RANGE_TOL or payoff > state.payoff_hi + RANGE_TOL:
        raise ValueError(
            f"payoff outside declared range [{state.payoff_lo}, {state.payoff_hi}]"
        )
    p = state.last_distribution
    width = state.payoff_hi - state.payoff_lo
    gain = np.zeros(state.num_arms)
    gain[arm] = (payoff - state.payoff_lo) / (width * p[arm])
    if state.bonus_rate > 0.0:
        gain += state.bonus_rate / p
    lw = state.log_weights
    lw += state.learning_rate * gain
    if state.share_alpha > 0.0:
        m = lw.max()
        w = np.exp(lw - m)
        lw = np.log((1.0 - state.share_alpha) * w + state.share_alpha * w.mean()) + m
    lw -= lw.max()
    state.log_weights = lw
    return state


def realized_primal_regret(
    counterfactual, realized, switch_rounds=(), contexts=None, num_contexts: int = 1
) -> float:
    """Realized regret of the arm play against per-interval comparators.

    counterfactual is (T, K): payoff each arm would have earned per round;
    realized is (T,): the played arm's payoff.  The comparator on each
    interval is the best policy, i.e. the best arm separately for each
    context (the best single arm when contexts is None).  Intervals come
    from splitting at the given 1-based switch rounds.
    """
    cf = np.asarray(counterfactual, dtype=float)
    got = np.asarray(realized, dtype=float)
    T = cf.shape[0]
    bounds = [1, *sorted(switch_rounds), T + 1]
    total = 0.0
    for a, b in zip(bounds, bounds[1:]):
        seg = slice(a - 1, b - 1)
        if contexts is None:
            best = float(cf[seg].sum(axis=0).max())
        else:
            xs = np.asarray(contexts)[seg]
            best = 0.0
            for x in range(num_contexts):
                rows = cf[seg][xs == x]
                if len(rows):
                    best += float(rows.sum(axis=0).max())
        total += best - float(got[seg].sum())
    return total


def realized_primal_regret_noncontextual(counterfactual, realized, switch_rounds=()) -> float:
    """Single-context specialization: best fixed arm per interval."""
    return realized_primal_regret(counterfactual, realized, switch_rounds)


class NoncontextualPrimal:
    """Adapter exposing the game-loop player interface over AdvBanditState."""

    def __init__(self, state: AdvBanditState):
        self.state = state

    def distribution(self, x: int, lam) -> np.ndarray:
        return self.state.distribution()

    def update(self, x: int, arm: int, payoff: float, outcome) -> None:
        adv_bandit_update(self.state, arm, payoff)
