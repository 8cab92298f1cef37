"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

ROW_SUM_TOL = 1e-9


def check_embeddings(X, name: str = "X") -> np.ndarray:
    """Validate and return an N x D float64 embedding matrix.

    1-D input of length N is promoted to N x 1. Entries must be finite.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got {X.ndim}-D")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        bad = int(np.flatnonzero(~np.isfinite(X).all(axis=1))[0])
        raise ValueError(f"{name} contains non-finite values (first bad row: {bad})")
    return X


def check_hard_labels(y, num_classes: int, name: str = "labels") -> np.ndarray:
    """Validate an integer label vector with values in [0, num_classes)."""
    y = np.asarray(y)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y.ravel()
    if y.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        yf = np.asarray(y, dtype=np.float64)
        if not np.all(yf == np.floor(yf)):
            raise ValueError(f"{name} must hold integers")
        y = yf.astype(np.int64)
    y = y.astype(np.int64, copy=False)
    bad = np.flatnonzero((y < 0) | (y >= num_classes))
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"{name}[{i}] = {int(y[i])} outside [0, {num_classes})"
        )
    return y


def check_label_matrix(Y, num_classes: int | None = None, name: str = "Y") -> np.ndarray:
    """Validate an N x C label-signal matrix: entries in [0,1], rows sum to 1."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {Y.ndim}-D")
    if num_classes is not None and Y.shape[1] != num_classes:
        raise ValueError(
            f"{name} has {Y.shape[1]} columns, expected {num_classes} classes"
        )
    if np.any(Y < -ROW_SUM_TOL) or np.any(Y > 1 + ROW_SUM_TOL):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    row_sums = Y.sum(axis=1)
    off = np.abs(row_sums - 1.0)
    if np.any(off > ROW_SUM_TOL):
        i = int(np.argmax(off))
        raise ValueError(
            f"{name} row {i} sums to {row_sums[i]!r}, expected 1 within {ROW_SUM_TOL}"
        )
    return Y


def check_same_rows(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"{what}: row counts differ ({a.shape[0]} vs {b.shape[0]})"
        )
