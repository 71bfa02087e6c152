"""Separation-rank analysis and pooling-geometry experiments for
convolutional arithmetic circuits."""

from .analysis import (
    BoundReport,
    DistanceReport,
    RankMaximalityReport,
    deep_distance_lower_bound,
    deep_rank_lower_bound,
    deep_rank_upper_bound,
    grid_oracle_rank,
    rank_maximality_report,
    separability_distance,
    shallow_rank_upper_bound,
)
from .circuits import (
    NetworkSpec,
    WeightSetting,
    canonical_weights,
    matricized_deep,
    matricized_shallow,
    random_weights,
    realize_deep_tensor,
    realize_shallow_tensor,
)
from .estimator import CircuitClassifier
from .geometry import (
    NamedPartition,
    PatchOrdering,
    PoolingGeometry,
    build_geometry,
    custom_geometry,
    induced_partition,
    low_high_partition,
    odd_even_partition,
    spatial_pattern_to_partition,
    split_count,
    square_ordering,
)
from .networks import ModelConfig
from .tensor_ops import (
    CapacityError,
    Partition,
    exact_rank_integer,
    kronecker,
    matricize,
    numerical_rank,
    singular_values,
    tensor_product,
)
from .training import TrainSchedule, adam_step, desk_schedule, evaluate, paper_schedule, train

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CapacityError",
    "CircuitClassifier",
    "DistanceReport",
    "ModelConfig",
    "NamedPartition",
    "NetworkSpec",
    "Partition",
    "PatchOrdering",
    "PoolingGeometry",
    "RankMaximalityReport",
    "TrainSchedule",
    "WeightSetting",
    "adam_step",
    "build_geometry",
    "canonical_weights",
    "custom_geometry",
    "deep_distance_lower_bound",
    "deep_rank_lower_bound",
    "deep_rank_upper_bound",
    "desk_schedule",
    "evaluate",
    "exact_rank_integer",
    "grid_oracle_rank",
    "induced_partition",
    "kronecker",
    "low_high_partition",
    "matricize",
    "matricized_deep",
    "matricized_shallow",
    "numerical_rank",
    "odd_even_partition",
    "paper_schedule",
    "rank_maximality_report",
    "random_weights",
    "realize_deep_tensor",
    "realize_shallow_tensor",
    "separability_distance",
    "shallow_rank_upper_bound",
    "singular_values",
    "spatial_pattern_to_partition",
    "split_count",
    "square_ordering",
    "tensor_product",
    "train",
]
