"""Qubit-count guard for dense desk-scale operations."""
from __future__ import annotations

import os

DEFAULT_SIZE_CAP = 10


def size_cap() -> int:
    """Current qubit cap; overridable through the RLCU_SIZE_CAP env variable."""
    raw = os.environ.get("RLCU_SIZE_CAP")
    if raw is None:
        return DEFAULT_SIZE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"RLCU_SIZE_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"RLCU_SIZE_CAP must be positive, got {cap}")
    return cap


def check_qubit_count(n: int, what: str = "operation") -> None:
    cap = size_cap()
    if n > cap:
        raise ValueError(f"{what} needs {n} qubits, above the dense size cap {cap}")
