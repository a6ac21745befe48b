"""Primal-dual simulation library for contextual bandits with packing and
covering constraints: environments, Lagrange-game learners, exact LP
benchmarks and an experiment runner."""

from .benchmark import (
    LpSolution,
    MetricsReport,
    SaddleReport,
    check_saddle_point,
    conc_reg,
    instance_lps,
    instance_slater_margin,
    metrics,
    pacing_benchmark,
    slater_margin,
    solve_opt_lp,
)
from .duals import DualState, dual_init, dual_step, realized_dual_regret
from .env import (
    ConstraintSpec,
    InstanceSpec,
    NoiseSpec,
    OutcomeModel,
    normalize_instance,
    sample_horizon,
    sample_round,
    stationary_instance,
)
from .lagrangian import (
    LagrangeParams,
    choose_eta,
    counterfactual_payoffs,
    expected_lagrangian,
    lagrange_payoff,
    payoff_bounds_for_models,
    per_resource_payoffs,
)
from .orchestrator import (
    GameSetup,
    RunConfig,
    RunLog,
    epsilon_for_zero_violation,
    game_setup,
    play,
    run,
    run_hard_stop,
    run_zero_violation,
)
from .primal_bandit import (
    AdvBanditState,
    NoncontextualPrimal,
    adv_bandit_init,
    adv_bandit_sample,
    adv_bandit_update,
    realized_primal_regret,
    realized_primal_regret_noncontextual,
)
from .regression import (
    FiniteClassOracle,
    LinearOracle,
    OgdOracle,
    singleton_class,
    squared_error_trace,
)
from .squarecb import (
    IgwConfig,
    RegressionPrimal,
    estimate_lagrange,
    igw_distribution,
    lagrange_estimate_error,
    squarecb_gamma,
)

__all__ = [name for name in dir() if not name.startswith("_")]
