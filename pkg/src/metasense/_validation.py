"""Small input-validation helpers shared by the modules."""

import numpy as np

from .exceptions import DomainError

# relative slack for bound checks, so mm -> m conversions land on the boundary
_BOUND_RTOL = 1e-9


def check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be strictly positive, got {value!r}")
    return float(value)


def check_nonnegative(name, value):
    if not np.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be non-negative, got {value!r}")
    return float(value)


def check_range(name, value, lo, hi, unit=""):
    """Closed-interval check with a tiny relative tolerance at the ends."""
    slack_lo = abs(lo) * _BOUND_RTOL
    slack_hi = abs(hi) * _BOUND_RTOL
    if not (lo - slack_lo <= value <= hi + slack_hi):
        raise DomainError(
            f"{name}={value:g}{unit} violates bound [{lo:g}, {hi:g}]{unit}"
        )
    return float(value)


def check_finite_array(name, arr, ndim=1, min_len=1):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.shape[0] < min_len:
        raise DomainError(f"{name} needs at least {min_len} entries")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr
