"""Max-norm residual reports shared by the algebra and submanifold checks."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np


@dataclass(frozen=True)
class ResidualReport:
    name: str
    value: object  # Fraction in exact mode, float otherwise
    worst_point: tuple = ()
    worst_indices: tuple = ()

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("residual must be nonnegative")

    def __float__(self):
        return float(self.value)


def max_abs(tensor: np.ndarray) -> tuple[object, tuple]:
    """Largest absolute entry and the index tuple where it sits.

    Works on object arrays of ``Fraction``. Ties resolve to the first index in
    C order so reports are deterministic. An empty tensor gives ``(0, ())``.
    """
    tensor = np.asarray(tensor)
    if tensor.size == 0:
        return (Fraction(0) if tensor.dtype == object else 0.0), ()
    flat = np.abs(tensor).ravel()
    if tensor.dtype == object:
        best = max(range(flat.size), key=lambda m: (flat[m], -m))
    else:
        best = int(np.argmax(flat))
    value = flat[best]
    idx = tuple(int(i) for i in np.unravel_index(best, tensor.shape))
    return value, idx


def report(name: str, tensor: np.ndarray, point=()) -> ResidualReport:
    value, idx = max_abs(tensor)
    return ResidualReport(name, value, tuple(point), idx)


def sweep(name: str, fn: Callable[[tuple], np.ndarray], points: Iterable[tuple]) -> ResidualReport:
    """Worst residual of ``fn`` (a residual-tensor function) over ``points``."""
    worst = None
    for p in points:
        r = report(name, fn(p), p)
        if worst is None or r.value > worst.value:
            worst = r
    if worst is None:
        return ResidualReport(name, 0.0)
    return worst
