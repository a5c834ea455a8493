"""Context bipartite graph matching for person search."""

from ._ctxmatch import (
    BBox,
    Dataset,
    EvalReport,
    Matching,
    SearchResult,
    brute_force_matching,
    cosine_sim,
    evaluate,
    lookalike_fixture,
    generate,
    iou,
    km_max_weight,
    load_dataset,
    nms,
    save_dataset,
    search,
)

__all__ = [
    "BBox",
    "Dataset",
    "EvalReport",
    "Matching",
    "SearchResult",
    "brute_force_matching",
    "cosine_sim",
    "evaluate",
    "lookalike_fixture",
    "generate",
    "iou",
    "km_max_weight",
    "load_dataset",
    "nms",
    "save_dataset",
    "search",
]
