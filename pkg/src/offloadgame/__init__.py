"""Equilibrium solvers for a Stackelberg market where traffic flows pay access points to offload data."""
from .bounded import (
    BoundedFlowSpec,
    DynamicsTrace,
    SymmetricEquilibrium,
    best_response_price,
    bounded_flows,
    contractor_interior_rho,
    kkt_residuals,
    lambda_map,
    marginal_g,
    price_update,
    psi_map,
    run_dynamics,
    solve_bounded_sne,
    solve_symmetric_followers,
)
from .model import (
    DomainError,
    FlowSpec,
    Linear,
    Logarithmic,
    PowerLaw,
    ScenarioSpec,
    ap_payoff,
    flow_payoff,
    utility_deriv,
    utility_value,
)
from .oracle import certify_follower_ne, certify_leader_ne
from .unbounded import (
    UnboundedEquilibrium,
    follower_best_response,
    follower_equilibrium,
    leader_optimal_price,
    select_ap_sets,
    solve_unbounded_sne,
)
from .welfare import (
    DegenerateEquilibrium,
    WelfareReport,
    poa,
    social_optimum_bounded,
    social_optimum_unbounded,
    system_utility_at_sne_bounded,
    system_utility_at_sne_unbounded,
)

__all__ = [
    "BoundedFlowSpec",
    "DynamicsTrace",
    "SymmetricEquilibrium",
    "best_response_price",
    "bounded_flows",
    "contractor_interior_rho",
    "kkt_residuals",
    "lambda_map",
    "marginal_g",
    "price_update",
    "psi_map",
    "run_dynamics",
    "solve_bounded_sne",
    "solve_symmetric_followers",
    "DomainError",
    "FlowSpec",
    "Linear",
    "Logarithmic",
    "PowerLaw",
    "ScenarioSpec",
    "ap_payoff",
    "flow_payoff",
    "utility_deriv",
    "utility_value",
    "UnboundedEquilibrium",
    "follower_best_response",
    "follower_equilibrium",
    "leader_optimal_price",
    "select_ap_sets",
    "solve_unbounded_sne",
    "DegenerateEquilibrium",
    "WelfareReport",
    "poa",
    "social_optimum_bounded",
    "social_optimum_unbounded",
    "system_utility_at_sne_bounded",
    "system_utility_at_sne_unbounded",
    "certify_follower_ne",
    "certify_leader_ne",
]

__version__ = "0.1.0"
