"""Two-stage legal document-to-document retrieval."""

from ._core import (
    Collection,
    PostingsIndex,
    __version__,
    apply_date_filter,
    centroid,
    evaluate_run,
    fuse,
    hinge_loss,
    knn_search,
    make_toy_dataset,
    ndcg_at_k,
    normalize_scores,
    r_precision,
    recall_at_k,
    rel_score,
    run_experiment,
    similarity_histogram,
    tokenize,
)

__all__ = [
    "Collection",
    "PostingsIndex",
    "__version__",
    "apply_date_filter",
    "centroid",
    "evaluate_run",
    "fuse",
    "hinge_loss",
    "knn_search",
    "make_toy_dataset",
    "ndcg_at_k",
    "normalize_scores",
    "r_precision",
    "recall_at_k",
    "rel_score",
    "run_experiment",
    "similarity_histogram",
    "tokenize",
]
