"""Online regression oracles for per-coordinate outcome prediction.

An oracle predicts the mean of one outcome coordinate at a (context, arm)
pair, then consumes the realized value; the prediction for a round is
fixed before that round's observation arrives.  Quality is tracked by the
harness as cumulative squared error against the true mean tables, not by
the oracle itself.

Three families are provided: exponential-weights aggregation over a finite
candidate class (optionally with Fixed-Share over candidates, which tracks
segment-wise truths under environment switches), online ridge regression
over a bounded feature map, and projected online gradient descent for
large feature dimensions.
"""

from __future__ import annotations

import numpy as np


class FiniteClassOracle:
    """Aggregates a finite set of candidate mean tables under square loss.

    Prediction is the weight-averaged candidate prediction, clamped to the
    declared range; weights decay as exp(-rate * squared error) with the
    mixable rate 2 / (hi - lo)^2.  share_alpha > 0 mixes weights back to
    uniform each observation, the efficient stand-in for aggregating all
    bounded-switch candidate sequences.
    """

    def __init__(self, tables, lo: float, hi: float, share_alpha: float = 0.0):
        self.tables = np.asarray(tables, dtype=float)  # (F, X, K)
        if self.tables.ndim != 3:
            raise ValueError("candidate tables must have shape (F, contexts, arms)")
        if hi <= lo:
            raise ValueError("empty prediction range")
        self.lo = float(lo)
        self.hi = float(hi)
        self.rate = 2.0 / (hi - lo) ** 2
        self.share_alpha = float(share_alpha)
        self.log_weights = np.zeros(len(self.tables))

    @property
    def num_candidates(self) -> int:
        return len(self.tables)

    def weights(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def predict_all(self, x: int) -> np.ndarray:
        """Predictions for every arm at context x."""
        preds = self.weights() @ self.tables[:, x, :]
        return np.clip(preds, self.lo, self.hi)

    def predict(self, x: int, a: int) -> float:
        self._check(x, a)
        pred = float(self.weights() @ self.tables[:, x, a])
        return min(max(pred, self.lo), self.hi)

    def observe(self, x: int, a: int, score: float) -> None:
        self._check(x, a)
        if not self.lo <= score <= self.hi:
            raise ValueError(f"score {score} outside range [{self.lo}, {self.hi}]")
        losses = (self.tables[:, x, a] - score) ** 2
        lw = self.log_weights - self.rate * losses
        if self.share_alpha > 0.0:
            m = lw.max()
            w = np.exp(lw - m)
            lw = np.log((1.0 - self.share_alpha) * w + self.share_alpha * w.mean()) + m
        self.log_weights = lw - lw.max()

    def _check(self, x: int, a: int) -> None:
        F, X, K = self.tables.shape
        if not (0 <= x < X and 0 <= a < K):
            raise KeyError(f"unknown context/arm pair ({x}, {a})")


class LinearOracle:
    """Online ridge regression over a known feature map phi(x, a).

    Maintains A = ridge * I + sum phi phi^T and b = sum y * phi over the
    observed datapoints; the prediction at a new pair solves A theta = b
    on the data seen so far.  With fold_current=True the current round's
    features are folded into A before predicting (the forward variant,
    which is slightly more conservative on adversarial feature sequences).
    """

    def __init__(self, features, lo: float, hi: float, ridge: float = 1.0,
                 fold_current: bool = False):
        self.features = np.asarray(features, dtype=float)  # (X, K, b)
        if self.features.ndim != 3:
            raise ValueError("features must have shape (contexts, arms, dim)")
        norms = np.linalg.norm(self.features, axis=2)
        if norms.max() > 1.0 + 1e-9:
            raise ValueError("feature vectors must have 2-norm at most 1")
        if ridge <= 0:
            raise ValueError("ridge must be positive")
        self.lo = float(lo)
        self.hi = float(hi)
        self.fold_current = fold_current
        b = self.features.shape[2]
        self.moment = ridge * np.eye(b)
        self.moment_vec = np.zeros(b)

    def predict(self, x: int, a: int) -> float:
        phi = self._phi(x, a)
        A = self.moment
        if self.fold_current:
            A = A + np.outer(phi, phi)
        theta = np.linalg.solve(A, self.moment_vec)
        return float(np.clip(theta @ phi, self.lo, self.hi))

    def predict_all(self, x: int) -> np.ndarray:
        K = self.features.shape[1]
        return np.array([self.predict(x, a) for a in range(K)])

    def observe(self, x: int, a: int, score: float) -> None:
        if not self.lo <= score <= self.hi:
            raise ValueError(f"score {score} outside range [{self.lo}, {self.hi}]")
        phi = self._phi(x, a)
        self.moment += np.outer(phi, phi)
        self.moment_vec += score * phi

    def _phi(self, x: int, a: int) -> np.ndarray:
        X, K, _ = self.features.shape
        if not (0 <= x < X and 0 <= a < K):
            raise KeyError(f"unknown context/arm pair ({x}, {a})")
        return self.features[x, a]


class OgdOracle:
    """Projected online gradient descent on square loss, for large dims."""

    def __init__(self, features, lo: float, hi: float, lr_scale: float = 0.5):
        self.features = np.asarray(features, dtype=float)
        self.lo = float(lo)
        self.hi = float(hi)
        self.lr_scale = float(lr_scale)
        self.theta = np.zeros(self.features.shape[2])
        self.t = 0

    def predict(self, x: int, a: int) -> float:
        return float(np.clip(self.theta @ self.features[x, a], self.lo, self.hi))

    def predict_all(self, x: int) -> np.ndarray:
        return np.clip(self.features[x] @ self.theta, self.lo, self.hi)

    def observe(self, x: int, a: int, score: float) -> None:
        if not self.lo <= score <= self.hi:
            raise ValueError(f"score {score} outside range [{self.lo}, {self.hi}]")
        self.t += 1
        phi = self.features[x, a]
        grad = 2.0 * (self.theta @ phi - score) * phi
        self.theta -= self.lr_scale / np.sqrt(self.t) * grad
        norm = np.linalg.norm(self.theta)
        if norm > 1.0:
            self.theta /= norm


class DirectLagrangeOracle:
    """Opt-in alternative: aggregate whole-payoff candidates directly.

    Candidates are all tuples of per-coordinate tables (one per outcome
    coordinate); each tuple induces a payoff predictor through the plug-in
    formula, and the tuples are aggregated under square loss on realized
    payoffs with context (x, lambda).  The product class is materialized,
    so it is only suitable for small per-coordinate classes.
    """

    MAX_PRODUCT = 1_000_000

    def __init__(self, coordinate_tables, params, signs):
        sizes = [len(np.asarray(t)) for t in coordinate_tables]
        total = int(np.prod(sizes))
        if total > self.MAX_PRODUCT:
            raise ValueError(f"product class of size {total} is too large")
        self.tables = [np.asarray(t, dtype=float) for t in coordinate_tables]
        self.params = params
        self.signs = np.asarray(signs, dtype=float)
        self.index = np.stack(
            [g.ravel() for g in np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")],
            axis=1,
        )  # (total, d+1) candidate tuple indices
        self.rate = 2.0 / params.range_width**2
        self.log_weights = np.zeros(total)

    def _candidate_payoffs(self, x: int, lam, arms=None) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        coeff = self.params.eta * self.signs * lam
        reward = self.tables[0][self.index[:, 0], x, :]  # (total, K)
        total = reward + coeff.sum()
        for i in range(len(lam)):
            cons = self.tables[1 + i][self.index[:, 1 + i], x, :]
            total -= coeff[i] * self.params.ratio * cons
        return total if arms is None else total[:, arms]

    def predict_all(self, x: int, lam) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        w /= w.sum()
        return w @ self._candidate_payoffs(x, lam)

    def observe(self, x: int, a: int, lam, payoff: float) -> None:
        preds = self._candidate_payoffs(x, lam)[:, a]
        lw = self.log_weights - self.rate * (preds - payoff) ** 2
        self.log_weights = lw - lw.max()


def singleton_class(table) -> np.ndarray:
    """A one-candidate class, e.g. for deterministic coordinates."""
    return np.asarray(table, dtype=float)[None, :, :]


def squared_error_trace(contexts, arms, predictions, spec) -> np.ndarray:
    """Cumulative squared prediction error per oracle, (T, d+1).

    Row t holds, for each outcome coordinate, the running sum of squared
    gaps between the logged prediction at the played (context, arm) and
    the segment-correct mean at that pair.  The final row is the total.
    """
    contexts = np.asarray(contexts)
    arms = np.asarray(arms)
    predictions = np.asarray(predictions, dtype=float)
    T = len(contexts)
    truth = np.empty_like(predictions)
    starts = [s for s, _ in spec.segments] + [T + 1]
    for (start, model), end in zip(spec.segments, starts[1:]):
        seg = slice(start - 1, min(end, T + 1) - 1)
        truth[seg] = model.means[contexts[seg], arms[seg], :]
    return np.cumsum((predictions - truth) ** 2, axis=0)
