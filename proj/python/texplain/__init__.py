"""Explainable GLCM texture classification of ultrasound ROIs.

Thin re-export of the compiled core: feature extraction, a histogram-binned
leaf-wise boosted-tree classifier, Shapley attributions, and the Welch
t-test / AUC utilities used by the pipeline.
"""

from ._texplain import (
    Model,
    TexplainError,
    auc,
    evaluate,
    extract_features,
    first_order,
    glcm,
    load_image,
    load_mask,
    load_model,
    t_test,
    train,
)

__all__ = [
    "Model",
    "TexplainError",
    "auc",
    "evaluate",
    "extract_features",
    "first_order",
    "glcm",
    "load_image",
    "load_mask",
    "load_model",
    "t_test",
    "train",
]
