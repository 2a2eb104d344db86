"""Input validation helpers shared across the package.

These normalize user-provided values into float arrays and enforce the
geometric preconditions the numeric code relies on (finiteness, unit axes,
proper rotations, ordered bounds). They raise ``ValueError`` for plain shape
or finiteness problems so the functions compose naturally with the estimator
API; domain-specific failures use the exception types in ``errors``.
"""

from __future__ import annotations

import numpy as np


def as_float_array(value, shape=None, name: str = "value") -> np.ndarray:
    """Convert to a float64 array, optionally enforcing an exact shape."""
    arr = np.asarray(value, dtype=float)
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name}: expected shape {tuple(shape)}, got {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, name: str = "value") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite entries")
    return arr


def as_vector3(value, name: str = "vector") -> np.ndarray:
    return check_finite(as_float_array(value, (3,), name), name)


def check_unit(vec: np.ndarray, name: str = "axis", tol: float = 1e-9) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name}: expected unit norm, got {norm!r}")
    return vec


def check_rotation(matrix: np.ndarray, name: str = "rotation", tol: float = 1e-8) -> np.ndarray:
    """Require a proper rotation: orthonormal within ``tol`` and det +1."""
    r = as_float_array(matrix, (3, 3), name)
    check_finite(r, name)
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err > tol:
        raise ValueError(f"{name}: not orthonormal (max |R^T R - I| = {err:.3e})")
    if np.linalg.det(r) < 0.0:
        raise ValueError(f"{name}: determinant is negative (reflection)")
    return r


def check_bounds_pair(lower, upper, name: str = "bounds"):
    lo = check_finite(np.asarray(lower, dtype=float), f"{name}.lower")
    hi = check_finite(np.asarray(upper, dtype=float), f"{name}.upper")
    if lo.shape != hi.shape:
        raise ValueError(f"{name}: lower {lo.shape} and upper {hi.shape} differ in shape")
    if np.any(lo > hi):
        k = int(np.argmax(lo > hi))
        raise ValueError(f"{name}: lower[{k}]={lo[k]!r} exceeds upper[{k}]={hi[k]!r}")
    return lo, hi


def check_positive(value: float, name: str = "value") -> float:
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"{name}: must be positive, got {value!r}")
    return value
