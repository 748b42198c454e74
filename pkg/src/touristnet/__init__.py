"""Hybrid classification on class networks scored by deterministic tourist walks.

The package splits a classifier into two exchangeable halves: any
feature-space model producing per-class memberships (lowlevel), and a
pattern-compliance term measuring how little a candidate instance disturbs
deterministic walk statistics on each class's network component (walker +
highlevel).  A convex blend of the two (hybrid) makes the decision.
"""

__version__ = "0.1.0"

from .dataset import (
    CATEGORICAL,
    NUMERIC,
    DatasetError,
    LabeledDataset,
    Standardizer,
    distance,
    load_csv,
    load_idx,
    standardize,
)
from .graph import ClassNetwork, GraphError
from .netbuild import (
    NetConfig,
    absorb_classified_instance,
    build_training_network,
    insert_test_instance,
)
from .walker import (
    ComponentWalker,
    WalkOutcome,
    WalkProfile,
    component_stats,
    saturation_point,
    set_thread_count,
    tourist_walk,
    walk_profile,
)
from .highlevel import (
    ClassDeltas,
    HighLevelClassifier,
    HighLevelConfig,
    class_proportions,
    generic_framework_membership,
    high_level_membership,
    membership_direct,
    membership_generic,
)
from .lowlevel import GaussianNB, LinearLeastSquares, WeightedKNN, fit_model, parse_model
from .hybrid import BatchResult, HybridClassifier, HybridConfig
from .experiments import (
    ExperimentReport,
    ExperimentSpec,
    NetworklessScorer,
    gen_gaussian_pair,
    gen_line_rect_scene,
    gen_lozenge_scene,
    networkless_high_level,
    run_experiment,
    saturation_scan,
    stratified_kfold,
)

__all__ = [name for name in dir() if not name.startswith("_")]
