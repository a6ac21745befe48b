"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves  min/max c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
Artificial variables are kept (at zero) through phase two so that dual
multipliers can be read off their reduced costs.  Sized for desk-scale
problems: dense arrays, pivot tolerance 1e-9, explicit failure status when
the pivot cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
MAX_PIVOTS = 10_000


@dataclass
class LpResult:
    status: str                      # optimal | infeasible | unbounded | pivot_limit
    x: np.ndarray | None
    value: float | None
    duals_ub: np.ndarray | None      # multipliers of the <= rows
    duals_eq: np.ndarray | None      # multipliers of the == rows

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _bland_pivot(tab, obj, basis, allowed):
    """One simplex step; returns 'optimal', 'unbounded' or 'pivoted'."""
    enter = -1
    for j in allowed:
        if obj[j] < -PIVOT_TOL:
            enter = j
            break
    if enter < 0:
        return "optimal"
    col = tab[:, enter]
    rhs = tab[:, -1]
    best_ratio = np.inf
    leave = -1
    for r in range(tab.shape[0]):
        if col[r] > PIVOT_TOL:
            ratio = rhs[r] / col[r]
            if leave < 0 or ratio < best_ratio - PIVOT_TOL:
                best_ratio = ratio
                leave = r
            elif ratio <= best_ratio + PIVOT_TOL and basis[r] < basis[leave]:
                best_ratio = min(best_ratio, ratio)
                leave = r
    if leave < 0:
        return "unbounded"
    piv = tab[leave, enter]
    tab[leave] /= piv
    for r in range(tab.shape[0]):
        if r != leave and tab[r, enter] != 0.0:
            tab[r] -= tab[r, enter] * tab[leave]
    obj -= obj[enter] * tab[leave]
    basis[leave] = enter
    return "pivoted"


def _reduced_costs(tab, basis, costs):
    obj = np.append(costs, 0.0)
    for r, b in enumerate(basis):
        if costs[b] != 0.0:
            obj -= costs[b] * tab[r]
    return obj


def _iterate(tab, obj, basis, allowed):
    for _ in range(MAX_PIVOTS):
        state = _bland_pivot(tab, obj, basis, allowed)
        if state != "pivoted":
            return state
    return "pivot_limit"


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, maximize=False) -> LpResult:
    """Two-phase simplex over nonnegative variables."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, dtype=float))
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, dtype=float))
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    # equality system with slacks: [A_eq 0; A_ub I] [x; s] = [b_eq; b_ub]
    n_slack = m_ub
    A = np.zeros((m, n + n_slack))
    A[:m_eq, :n] = A_eq
    A[m_eq:, :n] = A_ub
    A[m_eq:, n : n + n_slack] = np.eye(m_ub)
    b = np.concatenate([b_eq, b_ub])

    # orient rows so b >= 0, then append one artificial per row
    neg = np.where(b < 0, -1.0, 1.0)
    A *= neg[:, None]
    b = b * neg
    n_art = m
    tab = np.zeros((m, n + n_slack + n_art + 1))
    tab[:, : n + n_slack] = A
    tab[:, n + n_slack : -1] = np.eye(m)
    tab[:, -1] = b
    basis = list(range(n + n_slack, n + n_slack + n_art))

    # phase one: minimize the sum of artificials
    art_costs = np.zeros(n + n_slack + n_art)
    art_costs[n + n_slack :] = 1.0
    obj = _reduced_costs(tab, basis, art_costs)
    status = _iterate(tab, obj, basis, range(n + n_slack))
    if status == "pivot_limit":
        return LpResult("pivot_limit", None, None, None, None)
    if obj[-1] < -1e-7:  # residual infeasibility (obj[-1] = -phase1 value)
        return LpResult("infeasible", None, None, None, None)

    # drive any artificial still in the basis out (or leave it at zero on a
    # redundant row); keep artificial columns for dual extraction
    for r in range(m):
        if basis[r] >= n + n_slack:
            for j in range(n + n_slack):
                if abs(tab[r, j]) > PIVOT_TOL:
                    piv = tab[r, j]
                    tab[r] /= piv
                    for rr in range(m):
                        if rr != r and tab[rr, j] != 0.0:
                            tab[rr] -= tab[rr, j] * tab[r]
                    basis[r] = j
                    break

    # phase two on the real objective
    sign = -1.0 if maximize else 1.0
    costs = np.zeros(n + n_slack + n_art)
    costs[:n] = sign * c
    obj = _reduced_costs(tab, basis, costs)
    status = _iterate(tab, obj, basis, range(n + n_slack))
    if status != "optimal":
        return LpResult(status, None, None, None, None)

    x_full = np.zeros(n + n_slack + n_art)
    for r, bv in enumerate(basis):
        x_full[bv] = tab[r, -1]
    x = x_full[:n]
    value = float(c @ x)

    # shadow prices dvalue/db: oriented-system duals come from the reduced
    # costs of the artificial columns, the row orientation is undone, and a
    # maximization flips the sign once more; value == duals . b either way
    y = -obj[n + n_slack : n + n_slack + n_art] * neg
    if maximize:
        y = -y
    return LpResult("optimal", x, value, duals_ub=y[m_eq:], duals_eq=y[:m_eq])
