"""Bias-aware generalized zero-shot learning: Python bindings to the C++ core."""

from ._gzsl import (
    IoError,
    NumericalError,
    ValidationError,
    average_linkage,
    calibrated_predict,
    class_probabilities,
    directional_entropy,
    gradcheck,
    harmonic_mean,
    margin_regularizers,
    per_class_accuracy,
    ridge_solve,
    swap_unseen,
    synth_generate,
    train_and_evaluate,
)

__all__ = [
    "IoError",
    "NumericalError",
    "ValidationError",
    "average_linkage",
    "calibrated_predict",
    "class_probabilities",
    "directional_entropy",
    "gradcheck",
    "harmonic_mean",
    "margin_regularizers",
    "per_class_accuracy",
    "ridge_solve",
    "swap_unseen",
    "synth_generate",
    "train_and_evaluate",
]
