"""Grid functions carried through Lax-Oleinik evolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Values on the circle grid at a rational time modulo 1."""

    values: np.ndarray
    time_tag: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("value functions are 1-d arrays over grid nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("value functions must be finite everywhere")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time_tag", Fraction(self.time_tag) % 1)

    def __len__(self):
        return self.values.shape[0]

    def sup_distance(self, other) -> float:
        other = other.values if isinstance(other, ValueFunction) else np.asarray(other, dtype=float)
        return float(np.max(np.abs(self.values - other)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lipschitz_seminorm(self, spacing: float) -> float:
        """Largest adjacent difference quotient around the circle."""
        return float(np.max(np.abs(np.roll(self.values, -1) - self.values))) / spacing

    def shifted(self, c: float) -> "ValueFunction":
        return ValueFunction(self.values + c, self.time_tag)
