from .imbalance import (
    FIGURE1_COLUMNS,
    DiagnosticReport,
    GaussianIllustration,
    IndexModel,
    MixtureIndex,
    check_imbalance_condition,
    class_prob,
    figure1_curve,
    p_fun,
    pi_v,
    q_fun,
    restricted_population_minimizer,
    sigma_fun,
    tau_fun,
    threshold_mu,
    v_bar,
)

__all__ = [
    "FIGURE1_COLUMNS",
    "DiagnosticReport",
    "GaussianIllustration",
    "IndexModel",
    "MixtureIndex",
    "check_imbalance_condition",
    "class_prob",
    "figure1_curve",
    "p_fun",
    "pi_v",
    "q_fun",
    "restricted_population_minimizer",
    "sigma_fun",
    "tau_fun",
    "threshold_mu",
    "v_bar",
]
