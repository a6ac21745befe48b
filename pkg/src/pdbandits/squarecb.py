"""Regression-based contextual arm player: plug-in payoff estimates
converted to an action distribution by inverse gap weighting.

Each round, d+1 per-coordinate oracles supply estimates of the mean reward
and consumptions at the current context; these are assembled into estimated
Lagrange payoffs, and arms are sampled with probability inversely
proportional to the estimated gap to the best arm, at exploration scale
gamma.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .lagrangian import LagrangeParams

NORMALIZATION_MODES = ("binary_search", "closed_form")


@dataclass(frozen=True)
class IgwConfig:
    """Inverse-gap-weighting knobs: scale gamma and the normalization mode."""

    gamma: float
    normalization_mode: str = "binary_search"
    bisection_tolerance: float = 1e-10

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.normalization_mode not in NORMALIZATION_MODES:
            raise ValueError(f"unknown normalization mode {self.normalization_mode!r}")


def squarecb_gamma(B: float, T: int, K: int, d: int, U: float) -> float:
    """Exploration scale (B/T) * sqrt((K T / (d+1)) / U) for error budget U."""
    if U <= 0:
        raise ValueError("regression error bound U must be positive")
    return (B / T) * sqrt(K * T / (d + 1) / U)


def estimate_lagrange(oracles, x: int, lam, params: LagrangeParams, signs) -> np.ndarray:
    """Plug-in payoff estimates for every arm at context x.

    oracles[0] predicts rewards, oracles[1 + i] the consumption of
    resource i; the estimates enter the payoff formula in place of the
    realized outcome coordinates.
    """
    lam = np.asarray(lam, dtype=float)
    signs = np.asarray(signs, dtype=float)
    est = np.asarray(oracles[0].predict_all(x), dtype=float).copy()
    coeff = params.eta * signs * lam
    est += coeff.sum()
    for i in range(len(lam)):
        est -= coeff[i] * params.ratio * np.asarray(oracles[1 + i].predict_all(x))
    return est


def igw_distribution(estimates, config: IgwConfig) -> np.ndarray:
    """Arm distribution p(a) = 1 / (c + gamma * gap(a)) on the simplex.

    binary_search solves for the normalizer c in [1, K] by bisection (the
    total mass is strictly decreasing in c, at least 1 at c = 1 and at
    most 1 at c = K) and renormalizes exactly.  closed_form uses c = K for
    the non-best arms and puts the remainder, at least 1/K, on the best
    arm.  Ties break toward the lowest arm index.
    """
    est = np.asarray(estimates, dtype=float)
    if not np.all(np.isfinite(est)):
        raise ValueError("estimates must be finite")
    K = len(est)
    best = int(np.argmax(est))
    gamma_gaps = config.gamma * (est[best] - est)
    if config.normalization_mode == "closed_form":
        p = 1.0 / (K + gamma_gaps)
        p[best] = 0.0
        p[best] = 1.0 - p.sum()
        return p
    lo, hi = 1.0, float(K)
    while hi - lo > config.bisection_tolerance:
        mid = 0.5 * (lo + hi)
        if np.sum(1.0 / (mid + gamma_gaps)) > 1.0:
            lo = mid
        else:
            hi = mid
    p = 1.0 / (0.5 * (lo + hi) + gamma_gaps)
    return p / p.sum()


class RegressionPrimal:
    """The contextual arm player used inside the game loop.

    distribution() runs the oracle predictions and inverse gap weighting;
    update() feeds the realized outcome coordinates back to the oracles.
    The per-coordinate predictions at the played pair and the payoff
    estimates are cached for logging.
    """

    def __init__(self, oracles, config: IgwConfig, params: LagrangeParams, signs):
        if len(oracles) != len(signs) + 1:
            raise ValueError("need one oracle per outcome coordinate")
        self.oracles = list(oracles)
        self.config = config
        self.params = params
        self.signs = np.asarray(signs, dtype=float)
        self.last_estimates: np.ndarray | None = None
        self._coordinate_preds: np.ndarray | None = None  # (d+1, K)

    def distribution(self, x: int, lam) -> np.ndarray:
        preds = np.stack([np.asarray(o.predict_all(x), dtype=float) for o in self.oracles])
        lam = np.asarray(lam, dtype=float)
        coeff = self.params.eta * self.signs * lam
        est = preds[0] + coeff.sum() - self.params.ratio * (coeff @ preds[1:])
        self._coordinate_preds = preds
        self.last_estimates = est
        return igw_distribution(est, self.config)

    def update(self, x: int, arm: int, payoff: float, outcome) -> None:
        outcome = np.asarray(outcome, dtype=float)
        for i, oracle in enumerate(self.oracles):
            oracle.observe(x, arm, float(outcome[i]))

    def predictions_at(self, arm: int) -> np.ndarray:
        """Cached per-coordinate predictions at the played arm, (d+1,)."""
        return self._coordinate_preds[:, arm].copy()


class DirectLagrangePrimal:
    """Opt-in variant aggregating whole-payoff candidates (one oracle).

    Uses the same inverse gap weighting but a single regression oracle over
    the joint context (x, lambda); per-coordinate predictions are not
    available, so logs carry no prediction columns for this player.
    """

    def __init__(self, oracle, config: IgwConfig):
        self.oracle = oracle
        self.config = config
        self.last_estimates: np.ndarray | None = None
        self._last_lam: np.ndarray | None = None

    def distribution(self, x: int, lam) -> np.ndarray:
        est = np.asarray(self.oracle.predict_all(x, lam), dtype=float)
        self.last_estimates = est
        self._last_lam = np.asarray(lam, dtype=float).copy()
        return igw_distribution(est, self.config)

    def update(self, x: int, arm: int, payoff: float, outcome) -> None:
        self.oracle.observe(x, arm, self._last_lam, payoff)


def lagrange_estimate_error(
    predictions, lambdas, contexts, arms, spec, params: LagrangeParams, signs
) -> float:
    """Cumulative squared error of the plug-in payoff estimate.

    Compares the payoff estimate assembled from the logged per-coordinate
    predictions at the played pair against the same formula evaluated at
    the segment-correct means; this is the composed-oracle error that the
    aggregation bound controls via the per-coordinate errors.
    """
    predictions = np.asarray(predictions, dtype=float)  # (T, d+1)
    lambdas = np.asarray(lambdas, dtype=float)
    contexts = np.asarray(contexts)
    arms = np.asarray(arms)
    signs = np.asarray(signs, dtype=float)
    T = len(contexts)
    truth = np.empty_like(predictions)
    starts = [s for s, _ in spec.segments] + [T + 1]
    for (start, model), end in zip(spec.segments, starts[1:]):
        seg = slice(start - 1, min(end, T + 1) - 1)
        truth[seg] = model.means[contexts[seg], arms[seg], :]
    coeff = params.eta * (signs * lambdas)  # (T, d)
    gap = (predictions[:, 0] - truth[:, 0]) - params.ratio * np.sum(
        coeff * (predictions[:, 1:] - truth[:, 1:]), axis=1
    )
    return float(np.sum(gap**2))
