"""Exact LP benchmarks, run metrics and saddle-point diagnostics.

The benchmark linear program optimizes per-context arm distributions
(an exactly equivalent, polynomially sized reformulation of optimizing
over distributions over deterministic policies, since objective and
constraints depend only on per-context marginals):

    maximize   sum_x p(x) sum_a D(a|x) r(x, a)
    subject to D(.|x) in the arm simplex for each context x
               sign_i * ((T/B) c_i(D) - 1) <= 0 for each resource i.

Its per-round value times T is the benchmark OPT; the per-segment sum of
per-round values is the pacing benchmark for switching environments.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log, sqrt

import numpy as np

from .duals import realized_dual_regret
from .env import InstanceSpec, OutcomeModel
from .lagrangian import LagrangeParams, counterfactual_payoffs
from .orchestrator import RunLog
from .primal_bandit import realized_primal_regret
from .simplex import solve_lp

ACTIVE_TOL = 1e-7


@dataclass
class LpSolution:
    """Optimal per-context arm distribution and per-round value."""

    status: str
    distribution: np.ndarray | None   # (X, K)
    value: float | None               # per-round optimum (OPT = T * value)
    duals: np.ndarray | None          # (d,) multipliers of the resource rows
    active: np.ndarray | None         # (d,) binding resource constraints

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class MetricsReport:
    """Headline quantities of one logged run."""

    total_reward: float
    opt: float
    opt_pac: float
    violations: np.ndarray            # (d,)
    reg_out: float
    reg_pace: float
    primal_regret: float
    dual_regret: float
    nu_measured: float
    stop_round: int | None

    @property
    def regret(self) -> float:
        return self.opt - self.total_reward


@dataclass
class SaddleReport:
    """Measured saddle residuals of the average play and the induced bounds."""

    primal_residual: float            # sup_D L(D, lam_bar) - L(p_bar, lam_bar)
    dual_residual: float              # L(p_bar, lam_bar) - inf_lam L(p_bar, lam)
    nu: float                         # max of the residuals, per-round units
    is_saddle: bool
    opt_value: float                  # per-round LP optimum r(D*)
    avg_reward: float                 # r(p_bar)
    regret_bound_ok: bool             # r(p_bar) >= r(D*) - 2 nu
    vmax: float                       # max_i [sign_i ((T/B) c_i(p_bar) - 1)]_+
    vmax_bound: float                 # 4 nu / eta, or (2 nu + 1) / eta without margin
    vmax_ok: bool


def _lp_arrays(model: OutcomeModel, arrivals, signs, T: int, B: float):
    """Objective and resource rows of the per-context-distribution LP."""
    arrivals = np.asarray(arrivals, dtype=float)
    signs = np.asarray(signs, dtype=float)
    X, K, _ = model.means.shape
    c_obj = (arrivals[:, None] * model.means[:, :, 0]).ravel()
    ratio = T / B
    # row i: sign_i * (T/B) * sum_{x,a} p(x) D(a|x) c_i(x,a) <= sign_i
    rows = (
        signs[:, None, None]
        * ratio
        * (arrivals[None, :, None] * model.means[:, :, 1:].transpose(2, 0, 1))
    ).reshape(len(signs), X * K)
    rhs = signs.copy()
    eq = np.zeros((X, X * K))
    for x in range(X):
        eq[x, x * K : (x + 1) * K] = 1.0
    return c_obj, rows, rhs, eq, np.ones(X)


def solve_opt_lp(model: OutcomeModel, arrivals, signs, T: int, B: float) -> LpSolution:
    """Per-round LP optimum over per-context arm distributions."""
    c_obj, rows, rhs, eq, eq_rhs = _lp_arrays(model, arrivals, signs, T, B)
    res = solve_lp(c_obj, A_ub=rows, b_ub=rhs, A_eq=eq, b_eq=eq_rhs, maximize=True)
    if not res.ok:
        return LpSolution(res.status, None, None, None, None)
    X, K = model.means.shape[:2]
    D = res.x.reshape(X, K)
    slack = rhs - rows @ res.x
    return LpSolution(
        status="optimal",
        distribution=D,
        value=res.value,
        duals=np.maximum(res.duals_ub, 0.0),
        active=slack <= ACTIVE_TOL,
    )


def slater_margin(model: OutcomeModel, arrivals, signs, T: int, B: float,
                  time_index: int | None = None) -> float:
    """Largest margin zeta by which some distribution satisfies every
    non-time resource constraint, capped at 1; negative means infeasible
    even with slack.

    Solves max zeta subject to sign_i ((T/B) c_i(D) - 1) <= -zeta over
    per-context distributions, excluding the time resource.
    """
    signs = np.asarray(signs, dtype=float)
    keep = np.arange(len(signs)) if time_index is None else np.flatnonzero(
        np.arange(len(signs)) != time_index
    )
    if keep.size == 0:
        return 1.0
    c_obj, rows, rhs, eq, eq_rhs = _lp_arrays(model, arrivals, signs, T, B)
    rows, rhs = rows[keep], rhs[keep]
    n = rows.shape[1]
    # variables: [D..., zeta_plus, zeta_minus]; zeta = zeta_plus - zeta_minus
    A_ub = np.hstack([rows, np.ones((len(keep), 1)), -np.ones((len(keep), 1))])
    cap = np.zeros((1, n + 2))
    cap[0, n], cap[0, n + 1] = 1.0, -1.0
    A_ub = np.vstack([A_ub, cap])
    b_ub = np.concatenate([rhs, [1.0]])
    A_eq = np.hstack([eq, np.zeros((eq.shape[0], 2))])
    obj = np.zeros(n + 2)
    obj[n], obj[n + 1] = 1.0, -1.0
    res = solve_lp(obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=eq_rhs, maximize=True)
    if not res.ok:
        raise RuntimeError(f"margin LP failed with status {res.status}")
    return float(res.value)


def instance_lps(spec: InstanceSpec) -> list[LpSolution]:
    """One LP solution per environment segment."""
    B = spec.budget
    return [
        solve_opt_lp(model, spec.context_probs, spec.constraints.signs, spec.horizon, B)
        for _, model in spec.segments
    ]


def instance_slater_margin(spec: InstanceSpec) -> float:
    """Smallest per-segment margin (each segment must admit the margin)."""
    idx = spec.constraints.time_index()
    return min(
        slater_margin(
            model, spec.context_probs, spec.constraints.signs, spec.horizon,
            spec.budget, time_index=idx,
        )
        for _, model in spec.segments
    )


def pacing_benchmark(spec: InstanceSpec, lps: list[LpSolution] | None = None) -> float:
    """Sum over rounds of the round's per-round LP optimum.

    Stationary instances reduce to T times the single LP value.  Raises if
    any segment is infeasible.
    """
    lps = instance_lps(spec) if lps is None else lps
    total = 0.0
    for length, lp in zip(spec.segment_lengths(), lps):
        if not lp.ok:
            raise ValueError(f"segment LP is {lp.status}; pacing benchmark undefined")
        total += length * lp.value
    return total


def conc_reg(T: int, B: float, eta: float, d: int, delta: float, c0: float = 2.0) -> float:
    """Concentration allowance c0 * (T/B) * eta * sqrt(T ln(d T / delta))."""
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    return c0 * (T / B) * eta * sqrt(T * log(d * T / delta))


def matrix_game_residuals(M, p, q) -> tuple[float, float]:
    """Best-response residuals of (p, q) in the zero-sum game p^T M q.

    Returns (row player's improvement, column player's improvement); both
    are zero exactly at a Nash equilibrium.
    """
    M = np.asarray(M, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    value = float(p @ M @ q)
    return float((M @ q).max() - value), float(value - (p @ M).min())


def average_play(log: RunLog, num_contexts: int, lo: int = 0, hi: int | None = None):
    """Average action distribution per context and average dual vector.

    p_bar(.|x) averages the played distributions over the rounds where x
    arrived (uniform over arms for contexts that never arrived); lam_bar is
    the plain round average.  Computed over rounds [lo, hi).
    """
    hi = log.num_rounds if hi is None else hi
    lam_bar = log.lambdas[lo:hi].mean(axis=0)
    K = log.matrices.shape[1]
    p_bar = np.full((num_contexts, K), 1.0 / K)
    if log.probs is None:
        arms = log.arms[lo:hi]
        xs = log.contexts[lo:hi]
        for x in range(num_contexts):
            sel = xs == x
            if sel.any():
                p_bar[x] = np.bincount(arms[sel], minlength=K) / sel.sum()
    else:
        xs = log.contexts[lo:hi]
        probs = log.probs[lo:hi]
        for x in range(num_contexts):
            sel = xs == x
            if sel.any():
                p_bar[x] = probs[sel].mean(axis=0)
    return p_bar, lam_bar


def _payoff_tables(model: OutcomeModel, params: LagrangeParams, signs, shift):
    """Per-(context, arm) reward and per-resource slack terms."""
    r = model.means[:, :, 0]
    c = model.means[:, :, 1:] - shift
    terms = np.asarray(signs, dtype=float) * (1.0 - params.ratio * c)  # (X, K, d)
    return r, terms


def saddle_residuals(
    model: OutcomeModel,
    arrivals,
    signs,
    params: LagrangeParams,
    p_bar,
    lam_bar,
    consumption_shift=None,
) -> tuple[float, float, float, np.ndarray]:
    """Residuals of (p_bar, lam_bar) for the expected rescaled Lagrangian.

    Returns (primal residual, dual residual, r(p_bar), c(p_bar)).  The
    best-response computations use linearity: the payoff-maximizing
    distribution concentrates per context on the argmax arm, and the
    minimizing dual vector sits on a simplex vertex.
    """
    arrivals = np.asarray(arrivals, dtype=float)
    d = len(np.asarray(signs))
    shift = np.zeros(d) if consumption_shift is None else np.asarray(consumption_shift)
    r, terms = _payoff_tables(model, params, signs, shift)
    # payoff of (x, a) against lam_bar
    payoff_xa = r + params.eta * (terms @ np.asarray(lam_bar))
    sup_value = float(arrivals @ payoff_xa.max(axis=1))
    occupancy = arrivals[:, None] * np.asarray(p_bar)
    avg_reward = float((occupancy * r).sum())
    avg_terms = np.einsum("xk,xkd->d", occupancy, terms)
    pair_value = avg_reward + params.eta * float(avg_terms @ np.asarray(lam_bar))
    inf_value = avg_reward + params.eta * float(avg_terms.min())
    avg_consumption = np.einsum("xk,xkd->d", occupancy, model.means[:, :, 1:] - shift)
    return sup_value - pair_value, pair_value - inf_value, avg_reward, avg_consumption


def check_saddle_point(
    log: RunLog,
    spec: InstanceSpec,
    params: LagrangeParams | None = None,
    nu_budget: float = np.inf,
    zeta: float | None = None,
    segment: int = 0,
    interval: tuple[int, int] | None = None,
) -> SaddleReport:
    """Measure how close the average play is to a saddle point and verify
    the relations that an approximate saddle point must satisfy.

    The average play over the interval (default: the segment's rounds) is
    scored against the segment's exact model: its two best-response
    residuals, the regret relation r(p_bar) >= r(D*) - 2 nu, and the
    violation relation eta * vmax <= 4 nu (when eta >= 2 / zeta for a
    known positive margin zeta) or eta * vmax <= 2 nu + 1 otherwise.
    """
    params = log.params if params is None else params
    model = spec.segments[segment][1]
    signs = spec.constraints.signs
    if interval is None:
        starts = [s for s, _ in spec.segments] + [spec.horizon + 1]
        interval = (starts[segment] - 1, starts[segment + 1] - 1)
    p_bar, lam_bar = average_play(log, spec.num_contexts, *interval)
    primal_res, dual_res, avg_reward, avg_cons = saddle_residuals(
        model, spec.context_probs, signs, params, p_bar, lam_bar,
        consumption_shift=log.consumption_shift,
    )
    nu = max(primal_res, dual_res, 0.0)
    lp = solve_opt_lp(model, spec.context_probs, signs, spec.horizon, spec.budget)
    opt_value = lp.value if lp.ok else np.nan
    vmax = float(
        np.maximum(signs * (params.ratio * avg_cons - 1.0), 0.0).max()
    )
    sharper = zeta is not None and zeta > 0 and params.eta >= 2.0 / zeta - 1e-9
    vmax_bound = (4.0 * nu if sharper else 2.0 * nu + 1.0) / params.eta
    tol = 1e-9
    return SaddleReport(
        primal_residual=primal_res,
        dual_residual=dual_res,
        nu=nu,
        is_saddle=nu <= nu_budget,
        opt_value=opt_value,
        avg_reward=avg_reward,
        regret_bound_ok=bool(avg_reward >= opt_value - 2.0 * nu - tol),
        vmax=vmax,
        vmax_bound=vmax_bound,
        vmax_ok=bool(vmax <= vmax_bound + tol),
    )


def measured_nu(log: RunLog, spec: InstanceSpec) -> float:
    """Length-weighted saddle residual across segments, per-round units."""
    lengths = spec.segment_lengths()
    total = 0.0
    for j, length in enumerate(lengths):
        report = check_saddle_point(log, spec, segment=j)
        total += length * report.nu
    return total / spec.horizon


def metrics(
    log: RunLog,
    spec: InstanceSpec,
    lps: list[LpSolution] | None = None,
    compute_nu: bool = True,
) -> MetricsReport:
    """Violations, regrets and realized game regrets of one logged run.

    Violations use true consumptions against the true budget regardless of
    mode.  The benchmark is T times the (first-segment) LP value for
    stationary runs and the pacing benchmark for switching runs; reg_out
    and reg_pace take the max of the reward shortfall and the worst
    violation.
    """
    lps = instance_lps(spec) if lps is None else lps
    T = spec.horizon
    B = spec.budget
    signs = spec.constraints.signs
    total_reward = float(log.outcomes[:, 0].sum())
    consumption = log.outcomes[:, 1:].sum(axis=0)
    violations = signs * (consumption - B)
    opt_pac = pacing_benchmark(spec, lps)
    opt = T * lps[0].value if spec.num_switches == 0 else opt_pac
    vmax = float(violations.max())
    reg_out = max(opt - total_reward, vmax)
    reg_pace = max(opt_pac - total_reward, vmax)
    switch_rounds = spec.switch_rounds
    cf = counterfactual_payoffs(log.game_matrices(), log.lambdas, log.params, signs)
    primal_reg = realized_primal_regret(
        cf, log.payoffs, switch_rounds,
        contexts=log.contexts if spec.num_contexts > 1 else None,
        num_contexts=spec.num_contexts,
    )
    dual_reg = realized_dual_regret(log.lambdas, log.resource_payoffs, switch_rounds)
    nu = measured_nu(log, spec) if compute_nu else float("nan")
    return MetricsReport(
        total_reward=total_reward,
        opt=opt,
        opt_pac=opt_pac,
        violations=violations,
        reg_out=reg_out,
        reg_pace=reg_pace,
        primal_regret=primal_reg,
        dual_regret=dual_reg,
        nu_measured=nu,
        stop_round=log.stop_round,
    )
