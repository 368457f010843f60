"""Learn causal Bayesian network structure from interventional path queries.

The first phase recovers the transitive reduction of the graph from one
path query per ordered pair; the optional second phase restores the
transitive edges with multi-node transitive queries.
"""
__version__ = "0.1.0"

from .asgn import AsgnNetwork, analytic_moments, compute_wmin_wmax, random_asgn
from .discrete_cbn import DiscreteCbn, compute_gamma, random_discrete_cbn
from .errors import (
    CapacityError,
    CycleError,
    CyclicAnswerError,
    FaithfulnessError,
    PathLearnError,
    ValidationError,
)
from .graph import Dag, random_tr_dag, transitive_closure, transitive_reduction
from .interventions import InterventionSpec
from .learner import evaluate, learn_structure, learn_tr, learn_transitive_edges, plan_samples
from .model_io import load_network, parse_bif
from .queries import (
    AsgnSampler,
    CbnSampler,
    ContinuousPathQuery,
    ContinuousTransitiveQuery,
    DiscretePathQuery,
    DiscreteTransitiveQuery,
    PathOracle,
    TransitiveOracle,
)

__all__ = [
    "AsgnNetwork", "AsgnSampler", "CapacityError", "CbnSampler", "ContinuousPathQuery",
    "ContinuousTransitiveQuery", "CycleError", "CyclicAnswerError", "Dag", "DiscreteCbn",
    "DiscretePathQuery", "DiscreteTransitiveQuery", "FaithfulnessError", "InterventionSpec",
    "PathLearnError", "PathOracle", "TransitiveOracle", "ValidationError", "__version__",
    "analytic_moments", "compute_gamma", "compute_wmin_wmax", "evaluate", "learn_structure",
    "learn_tr", "learn_transitive_edges", "load_network", "parse_bif", "plan_samples",
    "random_asgn", "random_discrete_cbn", "random_tr_dag", "transitive_closure",
    "transitive_reduction",
]
