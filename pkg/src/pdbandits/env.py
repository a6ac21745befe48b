"""Problem instances and environment sampling.

An instance describes a horizon of T rounds in which a learner picks one of
K arms after seeing a context, receives a reward in [0, 1], and consumes
d resources, each consumption in [-1, 1].  Resource i carries a sign
(+1 packing: total consumption must stay below the budget; -1 covering:
total consumption must reach the budget) and a budget B_i.

Instances are normalized before use: budgets are rescaled to the common
value B = min_i B_i (per-round consumptions divided by B_i / B) and a
synthetic "time" resource is appended that every arm consumes at the
deterministic rate B / T under a packing constraint.

The environment is a sequence of stationary segments.  A single segment is
the stochastic (stationary) environment; each additional segment boundary
is one environment switch.
"""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

NOISE_KINDS = ("deterministic", "bernoulli", "gaussian")

# legal sample ranges per outcome coordinate: reward, then consumptions
REWARD_RANGE = (0.0, 1.0)
CONSUMPTION_RANGE = (-1.0, 1.0)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family for one outcome coordinate.

    deterministic: the sample equals the mean.
    bernoulli: two-point sample on the legal interval endpoints with the
        given mean ("shifted" Bernoulli for consumption coordinates).
    gaussian: mean + std * N(0,1), clamped to the legal interval.
    """

    kind: str = "deterministic"
    std: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and self.std <= 0:
            raise ValueError("gaussian noise requires std > 0")


@dataclass
class OutcomeModel:
    """Mean outcome tables for one stationary segment.

    means[x, a, 0] is the mean reward of arm a under context x, and
    means[x, a, 1 + i] the mean consumption of resource i.  One NoiseSpec
    per outcome coordinate (shared across contexts and arms).
    """

    means: np.ndarray
    noise: tuple[NoiseSpec, ...]

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        if self.means.ndim != 3:
            raise ValueError("means must have shape (contexts, arms, 1 + resources)")
        self.noise = tuple(self.noise)
        if len(self.noise) != self.means.shape[2]:
            raise ValueError("need one NoiseSpec per outcome coordinate")
        r = self.means[:, :, 0]
        if np.any(r < 0) or np.any(r > 1):
            raise ValueError("mean rewards must lie in [0, 1]")
        c = self.means[:, :, 1:]
        if np.any(np.abs(c) > 1):
            raise ValueError("mean consumptions must lie in [-1, 1]")

    @property
    def num_contexts(self) -> int:
        return self.means.shape[0]

    @property
    def num_arms(self) -> int:
        return self.means.shape[1]

    @property
    def num_resources(self) -> int:
        return self.means.shape[2] - 1

    def coordinate_support(self, coord: int) -> tuple[float, float]:
        """Bounds on realized samples of one coordinate, noise-aware."""
        lo, hi = REWARD_RANGE if coord == 0 else CONSUMPTION_RANGE
        spec = self.noise[coord]
        if spec.kind == "deterministic":
            vals = self.means[:, :, coord]
            return float(vals.min()), float(vals.max())
        # bernoulli samples sit on the interval endpoints; clamped gaussians
        # can in principle reach them as well
        return lo, hi


@dataclass
class ConstraintSpec:
    """Signs, budgets and the time-resource flag, one entry per resource."""

    signs: np.ndarray
    budgets: np.ndarray
    is_time: np.ndarray

    def __post_init__(self):
        self.signs = np.asarray(self.signs, dtype=int)
        self.budgets = np.asarray(self.budgets, dtype=float)
        self.is_time = np.asarray(self.is_time, dtype=bool)
        if not (self.signs.shape == self.budgets.shape == self.is_time.shape):
            raise ValueError("constraint arrays must have equal length")
        if not np.all(np.isin(self.signs, (-1, 1))):
            raise ValueError("constraint signs must be +1 or -1")

    @property
    def num_resources(self) -> int:
        return len(self.signs)

    def time_index(self) -> int:
        (idx,) = np.flatnonzero(self.is_time)
        return int(idx)


@dataclass
class InstanceSpec:
    """A full problem definition.

    segments is a list of (start_round, OutcomeModel) pairs with strictly
    increasing start rounds, the first equal to 1.  Rounds are 1-based.
    """

    horizon: int
    num_arms: int
    constraints: ConstraintSpec
    context_probs: np.ndarray
    segments: tuple[tuple[int, OutcomeModel], ...]
    context_ids: tuple[str, ...] = ()
    null_arm: int | None = None
    normalized: bool = False
    _segment_starts: list[int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.num_arms < 2:
            raise ValueError("need at least two arms")
        self.context_probs = np.asarray(self.context_probs, dtype=float)
        if abs(self.context_probs.sum() - 1.0) > 1e-12:
            raise ValueError("context arrival probabilities must sum to 1")
        if np.any(self.context_probs < 0):
            raise ValueError("context arrival probabilities must be nonnegative")
        if not self.context_ids:
            self.context_ids = tuple(f"x{j}" for j in range(len(self.context_probs)))
        if len(self.context_ids) != len(self.context_probs):
            raise ValueError("one context id per arrival probability")
        self.segments = tuple((int(s), m) for s, m in self.segments)
        starts = [s for s, _ in self.segments]
        if not starts or starts[0] != 1:
            raise ValueError("first segment must start at round 1")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start rounds must be strictly increasing")
        if starts[-1] > self.horizon:
            raise ValueError("segment starts beyond the horizon")
        for _, model in self.segments:
            if model.num_contexts != len(self.context_probs):
                raise ValueError("segment model context count mismatch")
            if model.num_arms != self.num_arms:
                raise ValueError("segment model arm count mismatch")
            if model.num_resources != self.constraints.num_resources:
                raise ValueError("segment model resource count mismatch")
        if self.null_arm is not None and not 0 <= self.null_arm < self.num_arms:
            raise ValueError("null arm index out of range")
        self._segment_starts = starts

    @property
    def num_contexts(self) -> int:
        return len(self.context_probs)

    @property
    def num_resources(self) -> int:
        return self.constraints.num_resources

    @property
    def num_switches(self) -> int:
        return len(self.segments) - 1

    @property
    def switch_rounds(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.segments[1:])

    @property
    def budget(self) -> float:
        """Common budget B = min_i B_i."""
        return float(self.constraints.budgets.min())

    def segment_index(self, round_: int) -> int:
        if not 1 <= round_ <= self.horizon:
            raise ValueError(f"round {round_} outside [1, {self.horizon}]")
        return bisect.bisect_right(self._segment_starts, round_) - 1

    def model_at(self, round_: int) -> OutcomeModel:
        return self.segments[self.segment_index(round_)][1]

    def segment_lengths(self) -> list[int]:
        starts = self._segment_starts + [self.horizon + 1]
        return [b - a for a, b in zip(starts, starts[1:])]


def normalize_instance(raw: InstanceSpec) -> InstanceSpec:
    """Rescale budgets to the common B and append the time resource.

    Per-round consumption of resource i is divided by B_i / B, after which
    every budget equals B = min_i B_i.  A time resource (deterministic
    consumption B / T, packing sign, budget B) is appended unless one is
    already flagged.  Gaussian noise stds on rescaled coordinates shrink by
    the same factor; two-point noise keeps the endpoint support.

    Raises ValueError on nonpositive budgets or if rescaling pushes a mean
    consumption outside [-1, 1].
    """
    cons = raw.constraints
    if np.any(cons.budgets <= 0):
        raise ValueError("budgets must be positive")
    if np.any(cons.budgets > raw.horizon):
        raise ValueError("budgets cannot exceed the horizon")
    if cons.is_time.sum() > 1:
        raise ValueError("at most one time resource may be flagged")

    T = raw.horizon
    B = float(cons.budgets.min())
    scale = B / cons.budgets  # per-resource consumption multiplier

    has_time = bool(cons.is_time.any())
    if has_time:
        t_idx = cons.time_index()
        if cons.signs[t_idx] != 1:
            raise ValueError("time resource must carry a packing constraint")

    new_segments = []
    for start, model in raw.segments:
        means = model.means.copy()
        means[:, :, 1:] *= scale
        bad = np.flatnonzero(np.abs(means[:, :, 1:]).max(axis=(0, 1)) > 1 + 1e-12)
        if bad.size:
            raise ValueError(
                f"rescaled consumption of resource {bad[0]} leaves [-1, 1]"
            )
        noise = list(model.noise)
        for i in range(cons.num_resources):
            spec = noise[1 + i]
            if spec.kind == "gaussian" and scale[i] != 1.0:
                noise[1 + i] = replace(spec, std=spec.std * scale[i])
        if not has_time:
            time_col = np.full(means.shape[:2] + (1,), B / T)
            means = np.concatenate([means, time_col], axis=2)
            noise.append(NoiseSpec("deterministic"))
        new_segments.append((start, OutcomeModel(means, tuple(noise))))

    if has_time:
        new_cons = ConstraintSpec(cons.signs, np.full(cons.num_resources, B), cons.is_time)
    else:
        new_cons = ConstraintSpec(
            np.append(cons.signs, 1),
            np.full(cons.num_resources + 1, B),
            np.append(cons.is_time, True),
        )

    # the time column must be the deterministic rate B / T everywhere
    t_idx = new_cons.time_index()
    for _, model in new_segments:
        col = model.means[:, :, 1 + t_idx]
        if model.noise[1 + t_idx].kind != "deterministic" or np.any(
            np.abs(col - B / T) > 1e-12
        ):
            raise ValueError("time resource must consume B / T deterministically")

    return InstanceSpec(
        horizon=raw.horizon,
        num_arms=raw.num_arms,
        constraints=new_cons,
        context_probs=raw.context_probs,
        segments=tuple(new_segments),
        context_ids=raw.context_ids,
        null_arm=raw.null_arm,
        normalized=True,
    )


def _sample_coordinate(
    means: np.ndarray, spec: NoiseSpec, lo: float, hi: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw one outcome coordinate for an array of means."""
    if spec.kind == "deterministic":
        return means.copy()
    if spec.kind == "bernoulli":
        # two-point distribution on {lo, hi} matching the mean
        p_hi = (means - lo) / (hi - lo)
        return np.where(rng.random(means.shape) < p_hi, hi, lo)
    draws = means + spec.std * rng.standard_normal(means.shape)
    return np.clip(draws, lo, hi)


def _sample_matrices(
    model: OutcomeModel, contexts: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Sample (n, K, d+1) outcome matrices for the given context draws."""
    means = model.means[contexts]  # (n, K, d+1)
    out = np.empty_like(means)
    for coord, spec in enumerate(model.noise):
        lo, hi = REWARD_RANGE if coord == 0 else CONSUMPTION_RANGE
        out[:, :, coord] = _sample_coordinate(means[:, :, coord], spec, lo, hi, rng)
    return out


def sample_round(
    spec: InstanceSpec, round_: int, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """Draw (context index, K x (d+1) outcome matrix) for one round.

    The segment containing the round supplies the model; the draw is pure
    given (spec, round, rng state).
    """
    model = spec.model_at(round_)
    x = int(rng.choice(spec.num_contexts, p=spec.context_probs))
    matrix = _sample_matrices(model, np.array([x]), rng)[0]
    return x, matrix


def sample_horizon(
    spec: InstanceSpec, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Pre-draw the full horizon: contexts (T,) and matrices (T, K, d+1).

    Segments are sampled in order, each as one batch, so the stream is
    reproducible given the seed.  Warns if gaussian clamping is frequent
    enough (> 1%) to bias the mean tables noticeably.
    """
    T = spec.horizon
    contexts = np.empty(T, dtype=np.int64)
    matrices = np.empty((T, spec.num_arms, spec.num_resources + 1))
    starts = [s for s, _ in spec.segments] + [T + 1]
    clip_count = 0
    clip_total = 0
    for (start, model), end in zip(spec.segments, starts[1:]):
        n = end - start
        sl = slice(start - 1, end - 1)
        if spec.num_contexts == 1:
            contexts[sl] = 0
        else:
            cdf = np.cumsum(spec.context_probs)
            contexts[sl] = np.searchsorted(cdf, rng.random(n), side="right")
        batch = _sample_matrices(model, contexts[sl], rng)
        for coord, ns in enumerate(model.noise):
            if ns.kind != "gaussian":
                continue
            lo, hi = REWARD_RANGE if coord == 0 else CONSUMPTION_RANGE
            col = batch[:, :, coord]
            clip_count += int(np.count_nonzero((col <= lo) | (col >= hi)))
            clip_total += col.size
        matrices[sl] = batch
    if clip_total and clip_count / clip_total > 0.01:
        warnings.warn(
            f"gaussian clamping rate {clip_count / clip_total:.1%} exceeds 1%; "
            "mean tables are biased, consider smaller stds",
            stacklevel=2,
        )
    return contexts, matrices


def stationary_instance(
    horizon: int,
    rewards: np.ndarray,
    consumptions: np.ndarray,
    signs,
    budgets,
    noise: tuple[NoiseSpec, ...] | None = None,
    context_probs=None,
    null_arm: int | None = None,
) -> InstanceSpec:
    """Convenience builder: one stationary segment, then normalization.

    rewards has shape (X, K) and consumptions (X, K, d); scalars budgets
    and signs broadcast over resources.
    """
    rewards = np.atleast_2d(np.asarray(rewards, dtype=float))
    consumptions = np.asarray(consumptions, dtype=float)
    if consumptions.ndim == 2:
        consumptions = consumptions[None, :, :]
    X, K = rewards.shape
    d = consumptions.shape[2]
    if noise is None:
        noise = tuple(NoiseSpec("deterministic") for _ in range(d + 1))
    if context_probs is None:
        context_probs = np.full(X, 1.0 / X)
    means = np.concatenate([rewards[:, :, None], consumptions], axis=2)
    raw = InstanceSpec(
        horizon=horizon,
        num_arms=K,
        constraints=ConstraintSpec(
            np.broadcast_to(np.asarray(signs, dtype=int), (d,)).copy(),
            np.broadcast_to(np.asarray(budgets, dtype=float), (d,)).copy(),
            np.zeros(d, dtype=bool),
        ),
        context_probs=context_probs,
        segments=((1, OutcomeModel(means, noise)),),
        null_arm=null_arm,
    )
    return normalize_instance(raw)
