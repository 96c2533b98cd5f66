"""Grids and time-periodic Tonelli Lagrangians on the unit circle.

Two kinds of Lagrangian are supported:

* ``mechanical``: ``L(t, x, v) = v**2 / 2 - V(t, x)`` with ``V`` a finite
  Fourier series in ``x``, optionally modulated in time;
* ``tabulated``: samples of ``L`` on a ``(t, x, v)`` grid, interpolated
  bilinearly in ``(x, v)`` and by nearest sample in ``t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import BoundaryMaximizerWarning, VelocityOutOfBounds

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CircleGrid:
    """Uniform grid ``x_i = i / n_x`` on the unit circle."""

    n_x: int
    diameter: float = field(default=0.5, init=False)

    def __post_init__(self):
        if int(self.n_x) != self.n_x or self.n_x < 2:
            raise ValueError(f"n_x must be an integer >= 2, got {self.n_x!r}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_x

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_x) / self.n_x

    def distance(self, i, j):
        """Circle distance between nodes ``i`` and ``j`` (arrays allowed)."""
        k = np.abs(np.asarray(i) - np.asarray(j)) % self.n_x
        return np.minimum(k, self.n_x - k) / self.n_x

    def distance_matrix(self) -> np.ndarray:
        idx = np.arange(self.n_x)
        return self.distance(idx[:, None], idx[None, :])

    def nearest(self, x: float) -> int:
        return int(round((x % 1.0) * self.n_x)) % self.n_x


@dataclass(frozen=True)
class TimeGrid:
    """``n_sub`` substeps of length ``1 / n_sub`` tiling one period."""

    n_sub: int

    def __post_init__(self):
        if int(self.n_sub) != self.n_sub or self.n_sub < 1:
            raise ValueError(f"n_sub must be an integer >= 1, got {self.n_sub!r}")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_sub

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_sub) / self.n_sub

    def midpoint(self, k: int) -> float:
        return (k + 0.5) / self.n_sub


@dataclass(frozen=True)
class PotentialSpec:
    """``V(t, x) = m(t) * sum_k (c_k cos 2 pi k x + s_k sin 2 pi k x)``.

    ``m(t) = 1 + amplitude * cos(2 pi harmonic t)`` when ``time_modulation``
    is given, else ``m = 1``.  Index ``k`` of each coefficient list is the
    spatial harmonic, so ``fourier_cos=(0, 1)`` is ``cos 2 pi x``.
    """

    fourier_cos: Tuple[float, ...] = ()
    fourier_sin: Tuple[float, ...] = ()
    time_modulation: Optional[Tuple[float, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "fourier_cos", tuple(float(c) for c in self.fourier_cos))
        object.__setattr__(self, "fourier_sin", tuple(float(s) for s in self.fourier_sin))
        if self.time_modulation is not None:
            amp, harmonic = self.time_modulation
            if int(harmonic) != harmonic or harmonic < 1:
                raise ValueError("time modulation harmonic must be a positive integer")
            object.__setattr__(self, "time_modulation", (float(amp), int(harmonic)))

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(np.asarray(t), x).shape)
        for k, c in enumerate(self.fourier_cos):
            if c:
                out = out + c * np.cos(TWO_PI * k * x)
        for k, s in enumerate(self.fourier_sin):
            if s:
                out = out + s * np.sin(TWO_PI * k * x)
        if self.time_modulation is not None:
            amp, harmonic = self.time_modulation
            out = out * (1.0 + amp * np.cos(TWO_PI * harmonic * np.asarray(t, dtype=float)))
        return out

    def sup_norm(self, n_t: int = 64, n_x: int = 1024) -> float:
        """``max |V|`` sampled on a dense grid (exact for the builtin scenarios)."""
        t = np.arange(n_t)[:, None] / n_t
        x = np.arange(n_x)[None, :] / n_x
        return float(np.max(np.abs(self(t, x))))


@dataclass(frozen=True, eq=False)
class LagrangianTable:
    """Samples ``values[k, i, l] = L(k / n_t, i / n_xs, v_l)``.

    ``v_l`` runs uniformly over ``[-v_max, v_max]`` with ``values.shape[2]``
    points, so a table needs at least two velocity samples.
    """

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3 or vals.shape[2] < 2 or vals.shape[1] < 1 or vals.shape[0] < 1:
            raise ValueError("table values must have shape (n_t, n_x, n_v) with n_v >= 2")
        if not np.all(np.isfinite(vals)):
            raise ValueError("table values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class LagrangianSpec:
    kind: str
    v_max: float
    potential: Optional[PotentialSpec] = None
    table: Optional[LagrangianTable] = None

    def __post_init__(self):
        if self.kind not in ("mechanical", "tabulated"):
            raise ValueError(f"unknown Lagrangian kind {self.kind!r}")
        if not (self.v_max > 0 and math.isfinite(self.v_max)):
            raise ValueError("v_max must be a positive finite real")
        if self.kind == "mechanical" and self.potential is None:
            object.__setattr__(self, "potential", PotentialSpec())
        if self.kind == "tabulated" and self.table is None:
            raise ValueError("tabulated Lagrangian needs a table")
        object.__setattr__(self, "v_max", float(self.v_max))

    @property
    def is_autonomous(self) -> bool:
        if self.kind == "mechanical":
            return self.potential.time_modulation is None
        return self.table.values.shape[0] == 1


def default_v_max(potential: PotentialSpec) -> float:
    return 4.0 * math.sqrt(1.0 + potential.sup_norm())


def mechanical(fourier_cos=(), fourier_sin=(), time_modulation=None, v_max=None) -> LagrangianSpec:
    pot = PotentialSpec(tuple(fourier_cos), tuple(fourier_sin), time_modulation)
    if v_max is None:
        v_max = default_v_max(pot)
    return LagrangianSpec("mechanical", v_max, potential=pot)


def _table_values(table: LagrangianTable, v_max: float, t, x, v):
    vals = table.values
    n_t, n_xs, n_v = vals.shape
    t, x, v = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float), np.asarray(v, float))
    k = np.rint(np.mod(t, 1.0) * n_t).astype(int) % n_t
    xs = np.mod(x, 1.0) * n_xs
    i0 = np.floor(xs).astype(int) % n_xs
    fx = xs - np.floor(xs)
    i1 = (i0 + 1) % n_xs
    vs = (v + v_max) / (2.0 * v_max) * (n_v - 1)
    l0 = np.clip(np.floor(vs).astype(int), 0, n_v - 2)
    fv = vs - l0
    return ((1 - fx) * (1 - fv) * vals[k, i0, l0] + fx * (1 - fv) * vals[k, i1, l0]
            + (1 - fx) * fv * vals[k, i0, l0 + 1] + fx * fv * vals[k, i1, l0 + 1])


def lagrangian_values(spec: LagrangianSpec, t, x, v):
    """Vectorised ``L(t, x, v)`` without the velocity bound check."""
    if spec.kind == "mechanical":
        v = np.asarray(v, dtype=float)
        return 0.5 * v * v - spec.potential(np.mod(t, 1.0), np.mod(x, 1.0))
    return _table_values(spec.table, spec.v_max, t, x, v)


def eval_lagrangian(spec: LagrangianSpec, t, x, v):
    """Evaluate ``L(t, x, v)``; ``t`` and ``x`` are read modulo 1.

    Raises
    ------
    VelocityOutOfBounds
        If ``|v| > spec.v_max``.
    """
    va = np.asarray(v, dtype=float)
    if np.any(np.abs(va) > spec.v_max):
        raise VelocityOutOfBounds(f"|v| exceeds v_max={spec.v_max}")
    out = lagrangian_values(spec, t, x, va)
    if np.ndim(out) == 0:
        return float(out)
    return out


def legendre_transform(p_grid, h_values, v: float) -> float:
    """``max_p (p v - H(p))`` over a sampled momentum grid.

    Warns with :class:`BoundaryMaximizerWarning` when the maximiser is a grid
    endpoint, which means the grid is too narrow for this ``v``.
    """
    p = np.asarray(p_grid, dtype=float)
    h = np.asarray(h_values, dtype=float)
    if p.shape != h.shape or p.ndim != 1 or p.size < 3:
        raise ValueError("p_grid and h_values must be 1-d arrays of equal length >= 3")
    objective = p * v - h
    k = int(np.argmax(objective))
    if k == 0 or k == p.size - 1:
        warnings.warn(f"Legendre maximiser at grid endpoint p={p[k]}", BoundaryMaximizerWarning,
                      stacklevel=2)
    return float(objective[k])


def mechanical_hamiltonian(spec: LagrangianSpec, t: float, x: float, p_grid) -> np.ndarray:
    """``H(t, x, p) = p**2 / 2 + V(t, x)`` sampled on ``p_grid``."""
    p = np.asarray(p_grid, dtype=float)
    return 0.5 * p * p + float(spec.potential(t % 1.0, x % 1.0))


SCENARIO_NAMES = ("free", "pendulum", "double-well", "pendulum-tmod")


def builtin_scenarios() -> dict:
    """Registry of named scenarios with their default velocity bounds."""
    return {
        "free": mechanical(),
        "pendulum": mechanical(fourier_cos=(0.0, 1.0)),
        "double-well": mechanical(fourier_cos=(0.0, 0.0, 1.0)),
        "pendulum-tmod": mechanical(fourier_cos=(0.0, 1.0), time_modulation=(0.5, 1)),
    }


def scenario(name: str, v_max: Optional[float] = None) -> LagrangianSpec:
    registry = builtin_scenarios()
    if name not in registry:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(registry)}")
    spec = registry[name]
    if v_max is not None:
        spec = LagrangianSpec(spec.kind, v_max, potential=spec.potential, table=spec.table)
    return spec
