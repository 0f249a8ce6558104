"""Input validation helpers shared by the estimator API and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import DataValidationError
from .model import Dataset


def check_vector(name: str, values, min_len: int = 1) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise DataValidationError(f"{name} must be one-dimensional")
    if len(arr) < min_len:
        raise DataValidationError(f"{name} needs at least {min_len} entries")
    if not np.isfinite(arr).all():
        raise DataValidationError(f"{name} contains non-finite entries")
    return arr


def dataset_from_xy(x, y=None) -> Dataset:
    """Build a Dataset from a predictor series and a response series.

    ``x`` holds the predictor levels including the initial one (length T + 1)
    and ``y`` the responses to be regressed on the lagged predictor (length
    T).  A Dataset passed as ``x`` is returned unchanged.
    """
    if isinstance(x, Dataset):
        if y is not None:
            raise DataValidationError("y must be omitted when x is a Dataset")
        return x
    xv = check_vector("x", x, min_len=3)
    if y is None:
        raise DataValidationError("y is required when x is a plain series")
    yv = check_vector("y", y, min_len=2)
    if len(xv) != len(yv) + 1:
        raise DataValidationError(
            f"x must have one more entry than y (the initial level); "
            f"got len(x)={len(xv)}, len(y)={len(yv)}")
    return Dataset(x0=float(xv[0]), x=xv[1:], y=yv)
