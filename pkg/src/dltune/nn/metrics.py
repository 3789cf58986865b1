import numpy as np


def accuracy(predicted, actual) -> float:
    """Fraction of positions where ``predicted`` equals ``actual``."""
    predicted, actual = np.asarray(predicted), np.asarray(actual)
    if predicted.shape != actual.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {actual.shape}")
    if predicted.size == 0:
        raise ValueError("accuracy of an empty prediction set")
    return float(np.mean(predicted == actual))
