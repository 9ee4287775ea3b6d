"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def check_feature_matrix(x, width: int) -> np.ndarray:
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ShapeError(f"expected a (T, {width}) matrix, got shape {m.shape}")
    if m.shape[1] != width:
        raise ShapeError(f"feature width {m.shape[1]} != expected {width}")
    if not np.isfinite(m).all():
        raise ShapeError("feature matrix contains non-finite values")
    return m


def check_sequence_list(X, width: int) -> list[np.ndarray]:
    if len(X) == 0:
        raise ShapeError("empty input")
    return [check_feature_matrix(x, width) for x in X]


def check_mel_samples(X, mel_bins: int) -> list[list[np.ndarray]]:
    """Audio samples: each a non-empty list of (T_i, mel_bins) matrices."""
    if len(X) == 0:
        raise ShapeError("empty input")
    out = []
    for i, sample in enumerate(X):
        if len(sample) == 0:
            raise ShapeError(f"sample {i} has no responses")
        out.append([check_feature_matrix(m, mel_bins) for m in sample])
    return out


def check_binary_labels(y, n: int) -> np.ndarray:
    labels = np.asarray(y)
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} != ({n},)")
    if not np.isin(labels, (0, 1)).all():
        raise ShapeError("labels must be binary 0/1")
    return labels.astype(np.float64)


def check_fused_matrix(X, text_dim: int, audio_dim: int) -> np.ndarray:
    m = np.asarray(X, dtype=np.float64)
    want = text_dim + audio_dim
    if m.ndim != 2 or m.shape[1] != want:
        raise ShapeError(f"fused representations must be (n, {want}), got {m.shape}")
    if not np.isfinite(m).all():
        raise ShapeError("fused representations contain non-finite values")
    return m
