"""Full-feedback learners over resources: Hedge and Fixed-Share.

The resource player sees, each round, the payoff it would have incurred
under every unit dual vector (a length-d cost vector) and produces the
next distribution lambda over resources.  Fixed-Share mixes a fraction
alpha of the weight mass back to uniform each step, which tracks the best
resource under a bounded number of environment switches; alpha = 0 is
plain Hedge.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log, sqrt

import numpy as np

RANGE_TOL = 1e-9


@dataclass
class DualState:
    log_weights: np.ndarray
    learning_rate: float
    share_alpha: float
    payoff_lo: float
    payoff_hi: float
    cumulative_cost: np.ndarray

    def distribution(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()


def dual_init(
    d: int,
    T: int,
    payoff_lo: float,
    payoff_hi: float,
    num_switches_hint: int | None = None,
) -> DualState:
    """Uniform start; rate sqrt(8 ln d / T) / range_width on raw costs.

    With a switches hint S, share_alpha = S / (T - 1); otherwise plain
    Hedge (share_alpha = 0).
    """
    if d < 1 or T < 2:
        raise ValueError("need d >= 1 and T >= 2")
    width = payoff_hi - payoff_lo
    if width <= 0:
        raise ValueError("empty payoff range")
    lr = sqrt(8.0 * log(max(d, 2)) / T) / width
    alpha = 0.0
    if num_switches_hint is not None and num_switches_hint > 0:
        alpha = num_switches_hint / (T - 1)
    return DualState(
        log_weights=np.zeros(d),
        learning_rate=lr,
        share_alpha=alpha,
        payoff_lo=payoff_lo,
        payoff_hi=payoff_hi,
        cumulative_cost=np.zeros(d),
    )


def _mix_to_uniform(log_w: np.ndarray, alpha: float) -> np.ndarray:
    """w <- (1 - alpha) w + alpha * mean(w), in weight space, shift-guarded."""
    m = log_w.max()
    w = np.exp(log_w - m)
    w = (1.0 - alpha) * w + alpha * w.mean()
    return np.log(w) + m


def dual_step(state: DualState, costs) -> DualState:
    """Multiplicative-weights update on the observed cost vector, in place.

    Costs are shifted by payoff_lo so the update equals rate
    sqrt(8 ln d / T) on costs normalized to [0, 1].  Costs outside the
    declared range (beyond tolerance) signal a range-bookkeeping bug and
    are rejected.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.min() < state.payoff_lo - RANGE_TOL or costs.max() > state.payoff_hi + RANGE_TOL:
        raise ValueError(
            f"cost outside declared payoff range [{state.payoff_lo}, {state.payoff_hi}]"
        )
    state.cumulative_cost += costs
    lw = state.log_weights
    lw -= state.learning_rate * (costs - state.payoff_lo)
    if state.share_alpha > 0.0:
        lw = _mix_to_uniform(lw, state.share_alpha)
    lw -= lw.max()  # keep bounded over long horizons
    state.log_weights = lw
    return state


def realized_dual_regret(lambdas, resource_payoffs, switch_rounds=()) -> float:
    """Realized regret of the dual play against per-interval best resources.

    lambdas is (T, d) and resource_payoffs (T, d) with rows equal to the
    played arm's payoff under each unit dual vector.  With an empty switch
    sequence this is the full-horizon dual regret; otherwise the horizon is
    split at the given (1-based) rounds and per-interval regrets are summed.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    payoffs = np.asarray(resource_payoffs, dtype=float)
    T = payoffs.shape[0]
    bounds = [1, *sorted(switch_rounds), T + 1]
    total = 0.0
    for a, b in zip(bounds, bounds[1:]):
        seg = slice(a - 1, b - 1)
        incurred = float(np.sum(lambdas[seg] * payoffs[seg]))
        best = float(payoffs[seg].sum(axis=0).min())
        total += incurred - best
    return total
