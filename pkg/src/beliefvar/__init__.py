"""Posterior variance of Bayesian-network query answers.

Given a discrete network with Dirichlet parameter posteriors, estimate the
mean and variance of a query P(h | e, Theta) over parameter uncertainty:
the delta method, the doubled-network moment identity, two bias-adjusted
refinements of each, and a Monte Carlo reference.
"""

from .adjustments import EstimateBundle, full_bundle
from .continuous import (
    RegressionFamily,
    StParams,
    predictive_st1,
    predictive_st2_doubled,
    regression_posterior_update,
    st_density,
)
from .delta import query_gradient, variance_v1
from .doubling import double_network, doubled_moments, estimate_q2_v2, evidence_moments
from .errors import (
    BeliefVarError,
    CycleDetected,
    DegenerateDenominator,
    DegenerateQuery,
    IndexMismatch,
    InsufficientData,
    MissingRow,
    NetworkError,
    NonConvergence,
    NonPositiveAlpha,
    NonPositiveM,
    NotNormalized,
    NumericalInstability,
    ScopeMismatch,
    SingularPsi,
    UnknownBenchmark,
    ZeroEvidenceProbability,
    ZeroProbabilityConfig,
)
from .factors import Factor, eliminate
from .inference import Query, evaluate_query
from .io import load_network, network_from_dict, network_to_dict, read_data_csv, save_network
from .network import (
    CompleteData,
    Network,
    Structure,
    Variable,
    bde_prior,
    posterior_update,
    validate_network,
)
from .oracle import OracleConfig, OracleResult, mc_estimates

__version__ = "0.1.0"
