"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigError, DataError


def check_quantitative(X, name="X"):
    """Return ``X`` as a finite 2-D float64 array."""
    try:
        return check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True,
                           input_name=name)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def check_labels(y, n_rows):
    """Return ``y`` as a 1-D array of ``str`` with length ``n_rows``."""
    y = np.asarray(y, dtype=object)
    if y.ndim != 1:
        raise DataError(f"labels must be 1-D, got shape {y.shape}")
    if y.shape[0] != n_rows:
        raise DataError(f"labels have length {y.shape[0]} but X has {n_rows} rows")
    if any(v is None for v in y):
        raise DataError("labels contain missing values")
    return np.array([str(v) for v in y], dtype=object)


def check_sample_rows(x, min_rows, name="sample"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {x.shape}")
    if x.shape[0] < min_rows:
        raise DataError(f"{name} has {x.shape[0]} rows; at least {min_rows} required")
    return x


def check_1d(x, name="sample"):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise DataError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")
    return x


def check_int(value, name, minimum=None, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_nonneg_float(value, name, allow_none=False):
    if value is None and allow_none:
        return None
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a real number, got {value!r}") from None
    if np.isnan(value) or value < 0:
        raise ConfigError(f"{name} must be non-negative, got {value}")
    return value
