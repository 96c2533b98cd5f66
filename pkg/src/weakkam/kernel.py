"""Discrete action kernels on the circle grid.

A substep kernel holds the midpoint-rule action ``dt * L(t_mid, x_mid, v)`` of
the straight hop from node ``i`` to node ``j`` over one substep, minimised over
all admissible windings.  The one-period kernel is the time-ordered min-plus
product of the substep kernels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import io
from .errors import DimensionMismatch, DisconnectedKernelError, NoAdmissibleMoveWarning, UnreachableError
from .model import CircleGrid, LagrangianSpec, TimeGrid, lagrangian_values
from .tropical import INF

_VELOCITY_SLACK = 1e-12


@dataclass(eq=False)
class SubstepKernel:
    """Action of single-substep hops; ``matrix[i, j]`` starts at node ``i``.

    ``boundary`` marks entries whose optimal hop sits on the velocity bound,
    meaning a one-cell faster hop would already be inadmissible.
    """

    matrix: np.ndarray
    substep_index: int
    boundary: Optional[np.ndarray] = None
    n_sub: Optional[int] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(eq=False)
class PeriodKernel:
    """One-period kernel together with the substeps it was composed from."""

    matrix: np.ndarray
    substeps: List[SubstepKernel]
    boundary: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def boundary_hits(self) -> int:
        """Number of finite entries whose optimal path touches the velocity bound."""
        if self.boundary is None:
            return 0
        return int(np.count_nonzero(self.boundary & np.isfinite(self.matrix)))


@dataclass
class MinimizingPath:
    nodes: List[int]
    total_action: float

    def displacements(self, n_x: int) -> List[int]:
        """Signed shortest-image cell displacement of each hop."""
        out = []
        for a, b in zip(self.nodes[:-1], self.nodes[1:]):
            m = (b - a) % n_x
            out.append(m - n_x if m > n_x // 2 else m)
        return out


def max_cell_displacement(model: LagrangianSpec, grid: CircleGrid, tgrid: TimeGrid) -> int:
    """Largest ``|m|`` with ``|m| * n_sub / n_x <= v_max``."""
    return int(math.floor(model.v_max * grid.n_x / tgrid.n_sub * (1.0 + _VELOCITY_SLACK)))


def build_substep_kernel(model: LagrangianSpec, grid: CircleGrid, tgrid: TimeGrid,
                         k: int) -> SubstepKernel:
    """Single-substep action kernel for ``[t_k, t_{k+1}]``.

    The hop covering ``m`` cells (``m`` an integer, any sign, any number of
    windings) has velocity ``m * n_sub / n_x`` and is admissible when that does
    not exceed ``v_max``.  Its action is ``dt * L`` at the time and space
    midpoints.  Rest (``m = 0``) is always admissible, so rows are never empty;
    when no other move is admissible a :class:`NoAdmissibleMoveWarning` is
    issued and downstream connectivity checks fail.
    """
    if not (0 <= k < tgrid.n_sub):
        raise ValueError(f"substep index {k} outside [0, {tgrid.n_sub})")
    n_x = grid.n_x
    dt = tgrid.dt
    t_mid = tgrid.midpoint(k)
    m_max = max_cell_displacement(model, grid, tgrid)
    if m_max < 1:
        warnings.warn(f"v_max * dt = {model.v_max * dt:.3g} is below the grid spacing "
                      f"{grid.spacing:.3g}: only rest moves are admissible",
                      NoAdmissibleMoveWarning, stacklevel=2)
    matrix = np.full((n_x, n_x), INF)
    extreme = np.zeros((n_x, n_x), dtype=bool)
    rows = np.arange(n_x)
    for m in range(-m_max, m_max + 1):
        v = m * tgrid.n_sub / n_x
        cols = (rows + m) % n_x
        x_mid = (2 * rows + m) / (2.0 * n_x)
        cost = dt * lagrangian_values(model, t_mid, x_mid, v)
        current = matrix[rows, cols]
        better = cost < current
        matrix[rows[better], cols[better]] = cost[better]
        extreme[rows[better], cols[better]] = abs(m) == m_max and m_max > 0
    return SubstepKernel(matrix, k, extreme, tgrid.n_sub)


def _check_reachable(M: np.ndarray, what: str) -> None:
    finite = np.isfinite(M)
    bad_rows = np.flatnonzero(~finite.any(axis=1))
    bad_cols = np.flatnonzero(~finite.any(axis=0))
    if bad_rows.size or bad_cols.size:
        raise DisconnectedKernelError(
            f"{what}: unreachable rows {bad_rows.tolist()[:5]} / columns {bad_cols.tolist()[:5]}")


def _product_with_flags(A, fa, B, fb):
    """Min-plus product; flag of ``(i, j)`` is OR-ed along the chosen argmin."""
    n = A.shape[0]
    out = np.full((n, B.shape[1]), INF)
    flags = np.zeros(out.shape, dtype=bool)
    for k in range(A.shape[1]):
        cand = A[:, k:k + 1] + B[k:k + 1, :]
        better = cand < out
        out[better] = cand[better]
        flags[better] = (fa[:, k:k + 1] | fb[k:k + 1, :])[better]
    return out, flags


def compose_period_kernel(substeps: Sequence[SubstepKernel]) -> PeriodKernel:
    """Time-ordered min-plus product ``S_0 S_1 ... S_{n_sub-1}``.

    Identical substeps (autonomous Lagrangians) are composed by repeated
    squaring.

    Raises
    ------
    DimensionMismatch
        If the substeps do not share one square shape.
    DisconnectedKernelError
        If a substep or the product has an all-``inf`` row or column.
    """
    substeps = list(substeps)
    if not substeps:
        raise ValueError("need at least one substep")
    shape = substeps[0].matrix.shape
    for s in substeps:
        if s.matrix.ndim != 2 or s.matrix.shape != shape or shape[0] != shape[1]:
            raise DimensionMismatch(f"substep {s.substep_index} has shape {s.matrix.shape}, expected {shape}")
        _check_reachable(s.matrix, f"substep {s.substep_index}")

    def flags(s):
        return s.boundary if s.boundary is not None else np.zeros(shape, dtype=bool)

    first = substeps[0].matrix
    identical = all(np.array_equal(s.matrix, first) and np.array_equal(flags(s), flags(substeps[0]))
                    for s in substeps[1:])
    if identical and len(substeps) > 2:
        M, F = _power_with_flags(first, flags(substeps[0]), len(substeps))
    else:
        M, F = first.copy(), flags(substeps[0]).copy()
        for s in substeps[1:]:
            M, F = _product_with_flags(M, F, s.matrix, flags(s))
    _check_reachable(M, "period kernel")
    return PeriodKernel(M, substeps, F)


def _power_with_flags(A, fa, n):
    result = None
    base, fbase = A, fa
    while True:
        if n & 1:
            result = (base, fbase) if result is None else _product_with_flags(*result, base, fbase)
        n >>= 1
        if not n:
            return result
        base, fbase = _product_with_flags(base, fbase, base, fbase)


def build_period_kernel(model: LagrangianSpec, grid: CircleGrid, tgrid: TimeGrid) -> PeriodKernel:
    """Build every substep kernel and compose them over one period."""
    if model.is_autonomous:
        s0 = build_substep_kernel(model, grid, tgrid, 0)
        substeps = [SubstepKernel(s0.matrix, k, s0.boundary, tgrid.n_sub) for k in range(tgrid.n_sub)]
    else:
        substeps = [build_substep_kernel(model, grid, tgrid, k) for k in range(tgrid.n_sub)]
    return compose_period_kernel(substeps)


def extract_minimizing_path(substeps: Sequence[SubstepKernel], i: int, j: int) -> MinimizingPath:
    """Optimal node sequence from ``i`` to ``j`` across the given substeps.

    Forward dynamic programming from ``i`` then backtracking from ``j``; among
    equal-cost predecessors the smallest node index is taken.

    Raises
    ------
    UnreachableError
        If no finite-action path exists.
    """
    n = substeps[0].matrix.shape[0]
    dist = np.full(n, INF)
    dist[i] = 0.0
    preds = []
    for s in substeps:
        cand = dist[:, None] + s.matrix
        arg = np.argmin(cand, axis=0)
        preds.append(arg)
        dist = cand[arg, np.arange(n)]
    if not np.isfinite(dist[j]):
        raise UnreachableError(f"node {j} is unreachable from node {i}")
    nodes = [int(j)]
    for arg in reversed(preds):
        nodes.append(int(arg[nodes[-1]]))
    nodes.reverse()
    total = 0.0
    for s, a, b in zip(substeps, nodes[:-1], nodes[1:]):
        total += s.matrix[a, b]
    return MinimizingPath(nodes, float(total))


def kernel_lipschitz_estimate(A, grid: CircleGrid) -> float:
    """Largest adjacent-node difference quotient over rows and columns.

    Pairs involving an ``inf`` entry are skipped.
    """
    A = np.asarray(A, dtype=float)
    best = 0.0
    for axis in (0, 1):
        nxt = np.roll(A, -1, axis=axis)
        ok = np.isfinite(A) & np.isfinite(nxt)
        if ok.any():
            best = max(best, float(np.max(np.abs(A - nxt)[ok])) / grid.spacing)
    return best


def kernel_to_json(kernel, **metadata) -> dict:
    M = kernel.matrix if hasattr(kernel, "matrix") else np.asarray(kernel)
    return io.matrix_to_json(M, **metadata)


def write_kernel_csv(path, kernel) -> None:
    io.write_matrix_csv(path, kernel.matrix if hasattr(kernel, "matrix") else kernel)
