"""Test-side oracles: brute-force vertex enumeration for small LPs and
random benchmark-instance generators.  Kept independent of the simplex
implementation on purpose."""

from itertools import combinations

import numpy as np

from pdbandits.env import ConstraintSpec, InstanceSpec, NoiseSpec, OutcomeModel, normalize_instance


def enumerate_lp_max(c, A_ub, b_ub, A_eq, b_eq, tol=1e-9):
    """Maximize c.x over {A_ub x <= b_ub, A_eq x = b_eq, x >= 0} by checking
    every basic solution of the slack-extended equality system.

    Returns (status, value, x) with status in {"optimal", "infeasible"}.
    Assumes the feasible region is bounded (true for distribution LPs).
    """
    c = np.asarray(c, dtype=float)
    A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
    A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b = np.concatenate([np.atleast_1d(b_eq), np.atleast_1d(b_ub)])
    m_ub = A_ub.shape[0] if A_ub.size else 0
    m_eq = A_eq.shape[0] if A_eq.size else 0
    n = len(c)
    A = np.zeros((m_eq + m_ub, n + m_ub))
    if m_eq:
        A[:m_eq, :n] = A_eq
    if m_ub:
        A[m_eq:, :n] = A_ub
        A[m_eq:, n:] = np.eye(m_ub)
    m, n_tot = A.shape
    cols = list(combinations(range(n_tot), m))
    bases = np.array(cols)
    mats = A.T[bases].transpose(0, 2, 1)  # (N, m, m)
    dets = np.abs(np.linalg.det(mats))
    keep = dets > tol
    if not keep.any():
        return "infeasible", None, None
    rhs = np.broadcast_to(b, (int(keep.sum()), m)).copy()[:, :, None]
    sols = np.linalg.solve(mats[keep], rhs)[:, :, 0]
    feas = np.all(sols >= -1e-8, axis=1)
    if not feas.any():
        return "infeasible", None, None
    full_c = np.concatenate([c, np.zeros(m_ub)])
    vals = np.einsum("ij,ij->i", sols, full_c[bases[keep]])
    vals = np.where(feas, vals, -np.inf)
    best = int(np.argmax(vals))
    x = np.zeros(n_tot)
    x[bases[keep][best]] = sols[best]
    return "optimal", float(vals[best]), x[:n]


def lp_arrays_for_instance(model, arrivals, signs, T, B):
    """Mirror of the benchmark LP construction, built independently."""
    arrivals = np.asarray(arrivals, dtype=float)
    signs = np.asarray(signs, dtype=float)
    X, K, _ = model.means.shape
    c = (arrivals[:, None] * model.means[:, :, 0]).ravel()
    rows = []
    for i in range(len(signs)):
        coef = signs[i] * (T / B) * (arrivals[:, None] * model.means[:, :, 1 + i])
        rows.append(coef.ravel())
    A_ub = np.array(rows)
    b_ub = signs.copy()
    A_eq = np.zeros((X, X * K))
    for x in range(X):
        A_eq[x, x * K : (x + 1) * K] = 1.0
    return c, A_ub, b_ub, A_eq, np.ones(X)


def random_model(rng, X, K, d, nonneg=False):
    rewards = rng.random((X, K))
    lo = 0.0 if nonneg else -1.0
    cons = rng.uniform(lo, 1.0, (X, K, d))
    means = np.concatenate([rewards[:, :, None], cons], axis=2)
    noise = tuple(NoiseSpec("deterministic") for _ in range(d + 1))
    return OutcomeModel(means, noise)


def random_generic_instance(rng, max_contexts=4, max_arms=4, max_resources=3):
    """Random raw LP data (not necessarily feasible); no time structure."""
    X = int(rng.integers(1, max_contexts + 1))
    K = int(rng.integers(2, max_arms + 1))
    d = int(rng.integers(1, max_resources + 1))
    T = int(rng.integers(20, 200))
    model = random_model(rng, X, K, d)
    signs = rng.choice([-1, 1], size=d)
    B = float(rng.uniform(0.1, 0.9) * T)
    arrivals = rng.dirichlet(np.ones(X))
    return model, arrivals, signs, T, B


def random_margin_instance(rng, min_zeta=0.2):
    """Normalized instance with a time resource and a comfortably feasible
    low-consumption arm, so the feasibility margin usually exceeds min_zeta."""
    X = int(rng.integers(1, 4))
    K = int(rng.integers(2, 5))
    d = int(rng.integers(1, 3))
    T = int(rng.integers(40, 160))
    rewards = rng.random((X, K))
    cons = rng.uniform(0.0, 0.9, (X, K, d))
    cons[:, 0, :] = rng.uniform(0.0, 0.15, (X, d))  # slack arm
    means = np.concatenate([rewards[:, :, None], cons], axis=2)
    noise = tuple(NoiseSpec("deterministic") for _ in range(d + 1))
    raw = InstanceSpec(
        horizon=T,
        num_arms=K,
        constraints=ConstraintSpec(
            np.ones(d, dtype=int), np.full(d, T / 2), np.zeros(d, bool)
        ),
        context_probs=rng.dirichlet(np.ones(X)),
        segments=((1, OutcomeModel(means, noise)),),
    )
    return normalize_instance(raw)
