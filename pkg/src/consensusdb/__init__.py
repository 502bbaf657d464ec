"""Consensus answers for queries over probabilistic databases.

Probabilistic relations are modelled as and/xor trees; the package finds the
deterministic answer closest in expectation to the answer of a random
possible world, for set, Top-k, group-by count and clustering queries.
"""
from .aggregate import CountVector, GroupMatrix, expected_sq_distance, mean_counts, median_counts
from .cluster import Clustering, consensus_cluster, pairwise_weights
from .genfunc import (
    Polynomial,
    RankProfile,
    cocluster_prob,
    evaluate,
    precedes_prob,
    rank_profile,
    rank_profiles,
)
from .model import (
    AndNode,
    AndXorTree,
    Leaf,
    OrNode,
    PossibleWorld,
    TupleAlternative,
    and_,
    enumerate_worlds,
    from_bid,
    leaf,
    marginal,
    or_,
    sample_world,
    validate,
)
from .setcons import (
    expected_jaccard,
    mean_world_jaccard_independent,
    mean_world_symdiff,
    median_world_jaccard_bid,
    median_world_symdiff,
)
from .solvers import FlowNetwork, solve_assignment, solve_min_cost_flow
from .topk import (
    approx_topk_intersection_upsilonH,
    approx_topk_kendall,
    dist_topk,
    mean_topk_footrule,
    mean_topk_intersection,
    mean_topk_symdiff,
    median_topk_symdiff,
)

__version__ = "0.1.0"
