"""Per-round Lagrange payoffs and the expected (rescaled) Lagrangian.

The primal-dual game that drives the whole library pays, for arm a and
dual distribution lam over resources,

    payoff = r(a) + eta * sum_i sign_i * lam_i * (1 - (T/B) * c_i(a)),

with a scale parameter eta >= 1.  The payoff is a reward to the arm player
and a cost to the resource player.  Keeping lam on the simplex and folding
eta into the payoff (rather than rescaling rewards) keeps the test oracles
literal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import sqrt

import numpy as np

SIMPLEX_TOL = 1e-12

ETA_MODES = ("slater", "general", "hard_stop", "zero_violation")


@dataclass(frozen=True)
class LagrangeParams:
    """Scale eta, the ratio T/B, and the payoff range handed to learners.

    eta_prime = eta * T / B is the shorthand that regret bookkeeping uses.
    The default bounds are the worst-case ones for |consumption| <= cmax:
    payoff_lo = -eta * (1 + (T/B) * cmax), payoff_hi = 1 + eta * (1 + (T/B) * cmax);
    every realized payoff lies in [payoff_lo, payoff_hi].
    """

    eta: float
    ratio: float
    payoff_lo: float
    payoff_hi: float

    def __post_init__(self):
        if self.eta < 1:
            raise ValueError("eta must be at least 1")
        if self.ratio <= 0:
            raise ValueError("ratio T/B must be positive")
        if self.payoff_hi <= self.payoff_lo:
            raise ValueError("empty payoff range")

    @property
    def eta_prime(self) -> float:
        return self.eta * self.ratio

    @property
    def range_width(self) -> float:
        return self.payoff_hi - self.payoff_lo

    @classmethod
    def make(cls, eta: float, T: float, B: float, cmax: float = 1.0) -> "LagrangeParams":
        ratio = T / B
        spread = eta * (1.0 + ratio * cmax)
        return cls(eta=eta, ratio=ratio, payoff_lo=-spread, payoff_hi=1.0 + spread)

    def with_bounds(self, lo: float, hi: float) -> "LagrangeParams":
        """Replace the payoff range, e.g. with instance-exact bounds."""
        return replace(self, payoff_lo=lo, payoff_hi=hi)


def _check_simplex(lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < -SIMPLEX_TOL) or abs(lam.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError("dual vector must lie on the probability simplex")
    return lam


def lagrange_payoff(outcome, lam, params: LagrangeParams, signs) -> float:
    """Payoff of one realized outcome row against dual distribution lam."""
    outcome = np.asarray(outcome, dtype=float)
    lam = _check_simplex(lam)
    signs = np.asarray(signs, dtype=float)
    slack = 1.0 - params.ratio * outcome[1:]
    return float(outcome[0] + params.eta * np.dot(signs * lam, slack))


def per_resource_payoffs(outcome, params: LagrangeParams, signs) -> np.ndarray:
    """Payoffs against each unit dual vector; the resource player's costs.

    Entry i equals lagrange_payoff with lam = e_i, so for any simplex lam
    the lam-weighted average of the entries reconstructs the payoff exactly.
    """
    outcome = np.asarray(outcome, dtype=float)
    signs = np.asarray(signs, dtype=float)
    return outcome[0] + params.eta * signs * (1.0 - params.ratio * outcome[1:])


def counterfactual_payoffs(matrices, lambdas, params: LagrangeParams, signs) -> np.ndarray:
    """Payoff of every arm in every round: (T, K) from (T, K, d+1) matrices."""
    matrices = np.asarray(matrices, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    signs = np.asarray(signs, dtype=float)
    slack = 1.0 - params.ratio * matrices[:, :, 1:]          # (T, K, d)
    weighted = np.einsum("tkd,td->tk", slack, signs * lambdas)
    return matrices[:, :, 0] + params.eta * weighted


def choose_eta(
    mode: str,
    T: int,
    B: float,
    zeta: float | None = None,
    combined_regret_estimate: float | None = None,
    cmax: float = 1.0,
) -> LagrangeParams:
    """Pick eta for the requested guarantee regime.

    slater: eta = 2 / zeta (requires a known positive feasibility margin).
    general: eta = max(1, (B/T) * sqrt(T / R)) for a combined-regret
        estimate R; no margin needed.
    hard_stop: eta = 1.
    zero_violation: eta = 4 / zeta.
    """
    if mode not in ETA_MODES:
        raise ValueError(f"unknown eta mode {mode!r}")
    if mode == "slater" or mode == "zero_violation":
        if zeta is None or zeta <= 0:
            raise ValueError(f"{mode} mode requires a positive feasibility margin")
        eta = (2.0 if mode == "slater" else 4.0) / zeta
    elif mode == "general":
        if combined_regret_estimate is None or combined_regret_estimate <= 0:
            raise ValueError("general mode requires a positive combined-regret estimate")
        eta = max(1.0, (B / T) * sqrt(T / combined_regret_estimate))
    else:  # hard_stop
        eta = 1.0
    return LagrangeParams.make(max(eta, 1.0), T, B, cmax=cmax)


def expected_lagrangian(
    action_dist, lam, model, arrivals, params: LagrangeParams, signs
) -> float:
    """Expected rescaled Lagrangian L(D, eta * lam) under exact model means.

    action_dist is a per-context arm distribution (X, K); lam is any
    nonnegative vector over resources (not necessarily a simplex point).
    Equals the expectation of lagrange_payoff over contexts, outcomes and
    the arm draw when lam is a distribution.
    """
    D = np.atleast_2d(np.asarray(action_dist, dtype=float))
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("dual vector must be nonnegative")
    arrivals = np.asarray(arrivals, dtype=float)
    signs = np.asarray(signs, dtype=float)
    means = model.means  # (X, K, d+1)
    occupancy = arrivals[:, None] * D  # (X, K)
    r = float(np.sum(occupancy * means[:, :, 0]))
    c = np.einsum("xk,xkd->d", occupancy, means[:, :, 1:])
    return r + params.eta * float(np.dot(signs * lam, 1.0 - params.ratio * c))


def payoff_bounds_for_models(
    models, params: LagrangeParams, signs, consumption_shift=None
) -> tuple[float, float]:
    """Exact payoff range for the given outcome models, noise-aware.

    Tighter than the worst-case LagrangeParams bounds whenever consumption
    supports are one-sided (e.g. deterministic nonnegative consumption);
    handing the tight range to Hedge/EXP3 speeds their tuned rates up
    without weakening the range guarantee.
    """
    signs = np.asarray(signs, dtype=float)
    d = len(signs)
    shift = np.zeros(d) if consumption_shift is None else np.asarray(consumption_shift)
    r_lo, r_hi = np.inf, -np.inf
    term_lo = np.full(d, np.inf)
    term_hi = np.full(d, -np.inf)
    for model in models:
        lo0, hi0 = model.coordinate_support(0)
        r_lo, r_hi = min(r_lo, lo0), max(r_hi, hi0)
        for i in range(d):
            c_lo, c_hi = model.coordinate_support(1 + i)
            c_lo, c_hi = c_lo - shift[i], c_hi - shift[i]
            ends = signs[i] * (1.0 - params.ratio * np.array([c_lo, c_hi]))
            term_lo[i] = min(term_lo[i], ends.min())
            term_hi[i] = max(term_hi[i], ends.max())
    return (
        float(r_lo + params.eta * term_lo.min()),
        float(r_hi + params.eta * term_hi.max()),
    )
