"""Input checks for the estimator layer."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d

from .hamiltonians import LatticeSpec, PauliSum, Schedule, build_heisenberg_xz


def check_hamiltonian(X) -> PauliSum:
    """Accept a ``PauliSum``, a ``LatticeSpec`` or Pauli text."""
    if isinstance(X, PauliSum):
        return X
    if isinstance(X, LatticeSpec):
        return build_heisenberg_xz(X)
    if isinstance(X, str):
        return PauliSum.loads(X)
    raise TypeError(f"expected PauliSum, LatticeSpec or Pauli text, got {type(X).__name__}")


def check_taus(X, name="tau") -> np.ndarray:
    """1-D array of finite, non-negative times; a single column is flattened."""
    arr = check_array(X, ensure_2d=False, dtype=np.float64, input_name=name)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{name} must be 1-D or a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    arr = column_or_1d(arr)
    if np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative")
    return arr


def check_schedule(schedule) -> Schedule:
    if schedule is None or schedule == "linear":
        return Schedule()
    if isinstance(schedule, Schedule):
        return schedule
    return Schedule.polynomial(tuple(schedule))
