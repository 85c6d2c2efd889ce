"""freep: exact Lipschitz-free p-norms on finite p-metric spaces.

The norm of a finitely supported molecule is computed exactly as a minimum
of tree values over all rooted labelled trees on the point set, which in
turn drives certified lower bounds on subspace embedding constants, the
known closed-form caps and constructions, and randomised searches for
instances beating the conjectured 2^(1/q) ceiling.
"""

__version__ = "0.1.0"

from ._kernel import available_backends, backend_name
from .amenability import (
    AmenEstimate,
    OneExtraPointBound,
    RetractBound,
    TwoPointBound,
    amen_estimate,
    bound_one_extra_point,
    bound_two_points,
    embedding_ratio,
    isometric_3pt_test,
    metric_amen_bound,
    optimal_extension_3pt,
    rebase_molecule,
    retract_upper_bound,
)
from .exceptions import (
    CapacityError,
    ExponentError,
    FreepError,
    InputError,
    MetricValidationError,
    PersistenceError,
)
from .norm import (
    NormResult,
    PositiveNormResult,
    free_norm,
    free_norm_pruned,
    positive_condition_and_norm,
    star_upper_bound,
    three_point_norm,
)
from .search import (
    CampaignSummary,
    SearchConfig,
    SearchRecord,
    campaign_instance,
    random_p_metric,
    random_weighted_tree,
    search_campaign,
)
from .space import (
    Molecule,
    PMetricSpace,
    ValidationReport,
    WeightedRootedTree,
    load_space,
    load_tree,
    p_metric_closure,
    path_p_metric,
    restrict_subspace,
    save_space,
    save_tree,
    validate_p_metric,
)
from .trees import (
    RootedTreeTopology,
    enumerate_rooted_trees,
    pruefer_decode,
    pruefer_encode,
    rooted_tree_count,
    split_at_vertex,
    subtree_sums,
    tree_value,
)

__all__ = [name for name in dir() if not name.startswith("_")]
