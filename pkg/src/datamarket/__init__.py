"""Equilibrium and welfare analysis for data markets with quadratic contracts.

Buyers post per-source contracts (a flat payment minus a slope times the
squared prediction error against the other sources' fit), sources respond
with effort, and the induced game between buyers has a Leontief-type linear
structure.  This package reduces a market to its separable weights, decides
whether an equilibrium exists, solves it, compares it to the social optimum
and certifies the result with independent oracles.
"""

from .market import (
    DataSource,
    ValueDistribution,
    EstimatorSpec,
    DataBuyer,
    MarketInstance,
    Violation,
    validate_market,
    effort_from_d_total,
    variance_from_d_total,
)
from .estimators import (
    SingularDesignError,
    GammaNegativeError,
    SeparableWeights,
    h_weight,
    compute_weights,
    loo_weight_tensor,
    loss_weight_matrix,
)
from .equilibrium import (
    RHO_EXISTENCE_THRESHOLD,
    NoEquilibriumError,
    NumericFailure,
    InfeasibleCError,
    CouplingSystem,
    CPolytope,
    EquilibriumSolution,
    spectral_radius,
    coupling_matrix,
    build_coupling_system,
    solve_equilibrium_d,
    c_polytope,
    canonical_c,
    complete_solution,
    solution_from_d,
)
from .welfare import (
    EtaNotOneError,
    DegenerateSourceError,
    UndefinedPoaError,
    WelfareReport,
    social_loss,
    social_optimum_efforts,
    price_of_anarchy,
)
from .oracle import (
    TrueFunction,
    BestResponseReport,
    NeumannResult,
    PaymentCheck,
    eval_buyer_cost,
    best_response_check,
    neumann_dynamics,
    monte_carlo_payments,
)

__version__ = "0.1.0"

__all__ = [
    "DataSource", "ValueDistribution", "EstimatorSpec", "DataBuyer",
    "MarketInstance", "Violation", "validate_market",
    "effort_from_d_total", "variance_from_d_total",
    "SingularDesignError", "GammaNegativeError", "SeparableWeights",
    "h_weight", "compute_weights", "loo_weight_tensor", "loss_weight_matrix",
    "RHO_EXISTENCE_THRESHOLD", "NoEquilibriumError", "NumericFailure",
    "InfeasibleCError", "CouplingSystem", "CPolytope", "EquilibriumSolution",
    "spectral_radius", "coupling_matrix", "build_coupling_system",
    "solve_equilibrium_d", "c_polytope", "canonical_c", "complete_solution",
    "solution_from_d",
    "EtaNotOneError", "DegenerateSourceError", "UndefinedPoaError",
    "WelfareReport", "social_loss", "social_optimum_efforts", "price_of_anarchy",
    "TrueFunction", "BestResponseReport", "NeumannResult", "PaymentCheck",
    "eval_buyer_cost", "best_response_check", "neumann_dynamics",
    "monte_carlo_payments",
]
