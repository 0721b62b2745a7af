from .counting import all_subsets, binom, log_binom, rank_array, subset_rank, subset_unrank
from .hypotheses import (
    DEFAULT_CLASS_CAP,
    DisagreementStats,
    HypothesisSpace,
    MisclassificationStats,
    class_at,
    class_disagreements,
    class_index,
    count_D_t,
    disagreement,
    enumerate_classes,
    log_space_size,
    misclassification_stats,
    space_size,
    stirling_leading_term,
    stirling_log_lower_bound,
    within_rank_table,
)

__all__ = [
    "DEFAULT_CLASS_CAP",
    "DisagreementStats",
    "HypothesisSpace",
    "MisclassificationStats",
    "all_subsets",
    "binom",
    "class_at",
    "class_disagreements",
    "class_index",
    "count_D_t",
    "disagreement",
    "enumerate_classes",
    "log_binom",
    "log_space_size",
    "misclassification_stats",
    "rank_array",
    "space_size",
    "stirling_leading_term",
    "stirling_log_lower_bound",
    "subset_rank",
    "subset_unrank",
    "within_rank_table",
]
