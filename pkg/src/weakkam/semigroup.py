"""Lax-Oleinik evolution of grid functions and the representation maps.

``T u (x) = min_y u(y) + B(y, x)`` with ``B`` the normalised one-period kernel.
On substeps the raw substep kernel is used and ``alpha0 * dt`` is added each
time, so a full period of substeps accumulates exactly ``alpha0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .barriers import DominatedMap, check_domination
from .errors import DominationViolation, NotInCycleError
from .kernel import PeriodKernel, SubstepKernel
from .tropical import DEFAULT_TOL, mp_vecmat
from .values import ValueFunction

__all__ = [
    "ValueFunction", "OrbitRecord", "Recurrence", "apply_T", "evolve", "detect_recurrence",
    "isometry_check", "inverse_on_omega", "represent", "represent_n", "roundtrip_check",
    "uniqueness_check", "recurrence_speed_check", "random_dominated", "certify",
    "certification_horizon", "restrict",
]


def _as_value(u) -> ValueFunction:
    return u if isinstance(u, ValueFunction) else ValueFunction(np.asarray(u, dtype=float))


def apply_T(kernel, u, alpha0: float = 0.0) -> ValueFunction:
    """One application of the Lax-Oleinik operator.

    ``kernel`` may be a normalised matrix (``alpha0`` left at 0), a
    :class:`PeriodKernel` (raw matrix; pass ``alpha0``), a single
    :class:`SubstepKernel` (advances ``time_tag`` by ``dt`` and adds
    ``alpha0 * dt``) or a list of substeps applied in order.
    """
    u = _as_value(u)
    if isinstance(kernel, SubstepKernel):
        if kernel.n_sub is None:
            raise ValueError("substep kernel does not record its substep count")
        dt = Fraction(1, kernel.n_sub)
        vals = mp_vecmat(u.values, kernel.matrix) + alpha0 * float(dt)
        return ValueFunction(vals, u.time_tag + dt)
    if isinstance(kernel, (list, tuple)):
        for s in kernel:
            u = apply_T(s, u, alpha0)
        return u
    M = kernel.matrix if isinstance(kernel, PeriodKernel) else np.asarray(kernel, dtype=float)
    vals = mp_vecmat(u.values, M)
    if alpha0:
        vals = vals + alpha0
    return ValueFunction(vals, u.time_tag)


@dataclass
class Recurrence:
    found: bool
    transient: Optional[int]
    period: Optional[int]
    min_return_distance: float
    members: List[ValueFunction] = field(default_factory=list)


@dataclass
class OrbitRecord:
    """Snapshots ``u_0, ..., u_N`` at integer times plus sup-norm increments."""

    initial: ValueFunction
    snapshots: List[ValueFunction]
    sup_increments: List[float]
    transient: Optional[int] = None
    period: Optional[int] = None
    substep_snapshots: List[ValueFunction] = field(default_factory=list)

    @property
    def n_periods(self) -> int:
        return len(self.snapshots) - 1

    def as_array(self) -> np.ndarray:
        return np.vstack([s.values for s in self.snapshots])


def evolve(kernel, u0, n_periods: int, record_substeps: bool = False,
           alpha0: float = 0.0) -> OrbitRecord:
    """Iterate one-period steps ``n_periods`` times.

    With ``record_substeps`` the kernel must be a :class:`PeriodKernel`; the
    orbit then advances substep by substep and every intermediate function
    is kept in ``substep_snapshots``.
    """
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    u = _as_value(u0)
    snaps = [u]
    incs = []
    sub = []
    if record_substeps:
        if not isinstance(kernel, PeriodKernel):
            raise ValueError("substep recording needs a PeriodKernel")
        for _ in range(n_periods):
            for s in kernel.substeps:
                u = apply_T(s, u, alpha0)
                sub.append(u)
            incs.append(u.sup_distance(snaps[-1]))
            snaps.append(u)
    else:
        M = kernel.matrix if isinstance(kernel, PeriodKernel) else np.asarray(kernel, dtype=float)
        vals = u.values
        for _ in range(n_periods):
            nxt = mp_vecmat(vals, M) + alpha0 if alpha0 else mp_vecmat(vals, M)
            incs.append(float(np.max(np.abs(nxt - vals))))
            vals = nxt
            snaps.append(ValueFunction(vals, u.time_tag))
    return OrbitRecord(snaps[0], snaps, incs, substep_snapshots=sub)


def detect_recurrence(orbit: OrbitRecord, tol: float = DEFAULT_TOL, window: int = 256) -> Recurrence:
    """First return ``||u_{m+p} - u_m|| <= tol`` along the recorded orbit.

    Each snapshot is compared with the previous ``window`` ones, so periods
    up to ``window`` are detected.  The first index that returns fixes
    ``m + p``; ``m`` is the earliest matching snapshot.  The cycle
    ``u_m, ..., u_{m+p-1}`` is stored on the orbit and returned as members.
    """
    n = len(orbit.snapshots)
    if n < 3:
        return Recurrence(False, None, None, float("inf"))
    S = orbit.as_array()
    best = float("inf")
    for j in range(1, n):
        lo = max(0, j - window)
        d = np.max(np.abs(S[lo:j] - S[j]), axis=1)
        best = min(best, float(d.min()))
        hits = np.flatnonzero(d <= tol)
        if hits.size:
            m = lo + int(hits[0])
            p = j - m
            orbit.transient, orbit.period = m, p
            return Recurrence(True, m, p, float(d[hits[0]]), orbit.snapshots[m:m + p])
    return Recurrence(False, None, None, best)


def certification_horizon(lcm_cycle_lengths: int, power_transient: Optional[int] = None,
                          cap: int = 4096) -> int:
    """Periods to evolve before declaring an orbit not recurrent."""
    return min(16 * max(1, lcm_cycle_lengths) + (power_transient or 0), cap)


def certify(kernel, u0, horizon: int, tol: float = DEFAULT_TOL, alpha0: float = 0.0):
    """Evolve ``u0`` for ``horizon`` periods and detect its limit cycle."""
    orbit = evolve(kernel, u0, max(horizon, 2), alpha0=alpha0)
    return orbit, detect_recurrence(orbit, tol)


def isometry_check(v, w, kernel, j_max: int, alpha0: float = 0.0) -> float:
    """``max_j | ||T^j v - T^j w|| - ||v - w|| |`` for ``j <= j_max``."""
    v, w = _as_value(v), _as_value(w)
    base = v.sup_distance(w)
    worst = 0.0
    for _ in range(j_max):
        v, w = apply_T(kernel, v, alpha0), apply_T(kernel, w, alpha0)
        worst = max(worst, abs(v.sup_distance(w) - base))
    return worst


def inverse_on_omega(v, cycle: Sequence[ValueFunction], tol: float = DEFAULT_TOL) -> ValueFunction:
    """Predecessor of ``v`` inside its detected cycle (``T w = v``).

    Raises
    ------
    NotInCycleError
        If ``v`` matches no member of ``cycle`` within ``tol``.
    """
    v = _as_value(v)
    for r, member in enumerate(cycle):
        if member.sup_distance(v) <= tol:
            return cycle[(r - 1) % len(cycle)]
    raise NotInCycleError("value function is not a member of the given cycle")


def _represent(psi: DominatedMap, barrier: np.ndarray, check: bool, tol: float) -> ValueFunction:
    barrier = np.asarray(barrier, dtype=float)
    if check:
        res = check_domination(psi, barrier, tol=tol)
        if not res.ok:
            raise DominationViolation(
                f"psi is not dominated: violation {res.max_violation:.3g} at {res.witness}",
                witness=res.witness, violation=res.max_violation)
    rows = barrier[list(psi.domain_nodes)]
    vals = np.min(psi.values[:, None] + rows, axis=0)
    return ValueFunction(vals)


def represent(psi: DominatedMap, k_full, check: bool = True, tol: float = DEFAULT_TOL) -> ValueFunction:
    """``v(x) = min_y psi(y) + k(y, x)`` over the domain of ``psi``.

    ``k_full`` is the chain barrier embedded as a square matrix indexed by
    grid node.

    Raises
    ------
    DominationViolation
        When ``check`` is on and ``psi`` is not dominated by ``k``.
    """
    return _represent(psi, k_full, check, tol)


def represent_n(psi: DominatedMap, h_n_inf, check: bool = True, tol: float = DEFAULT_TOL) -> ValueFunction:
    """Same formula with the barrier taken along multiples of ``n``."""
    return _represent(psi, h_n_inf, check, tol)


def restrict(v, nodes: Sequence[int], barrier_name: str = "k") -> DominatedMap:
    v = _as_value(v)
    return DominatedMap(tuple(nodes), v.values[list(nodes)], barrier_name)


def roundtrip_check(v, k_full, nodes: Sequence[int]) -> float:
    """``||represent(v restricted to nodes) - v||``."""
    v = _as_value(v)
    return v.sup_distance(represent(restrict(v, nodes), k_full, check=False))


@dataclass
class UniquenessResult:
    premise_met: bool
    mather_difference: float
    global_difference: float
    ok: bool


def uniqueness_check(u, v, mather_nodes: Sequence[int], premise_tol: float = DEFAULT_TOL,
                     tol: float = 1e-6) -> UniquenessResult:
    """Agreement on the Mather nodes must force global agreement.

    ``ok`` is vacuously true when the premise fails.
    """
    u, v = _as_value(u), _as_value(v)
    idx = list(mather_nodes)
    on_mather = float(np.max(np.abs(u.values[idx] - v.values[idx])))
    overall = u.sup_distance(v)
    premise = on_mather <= premise_tol
    return UniquenessResult(premise, on_mather, overall, (not premise) or overall <= tol)


@dataclass
class RecurrenceSpeedReport:
    uniform_length: Optional[int]
    lcm: int
    max_return_distance: float
    periods: List[int]
    periods_divide_lcm: bool
    notice: str = ""

    @property
    def ok(self) -> bool:
        return self.periods_divide_lcm and self.max_return_distance <= DEFAULT_TOL


def recurrence_speed_check(members: Sequence[ValueFunction], periods: Sequence[int], kernel,
                           cycle_lengths: dict, lcm: int, n_checks: int = 4,
                           alpha0: float = 0.0) -> RecurrenceSpeedReport:
    """Returns along multiples of the common critical cycle length.

    For uniform cycle length ``L`` every certified member must come back after
    ``L, 2L, ..., n_checks L`` periods.  Without a uniform length only the
    divisibility of orbit periods by ``lcm`` is checked.
    """
    lengths = set(cycle_lengths.values())
    uniform = lengths.pop() if len(lengths) == 1 else None
    worst = 0.0
    notice = ""
    if uniform is None:
        notice = "critical cycle lengths are not uniform: only period divisibility is checked"
    else:
        for v in members:
            w = _as_value(v)
            for _ in range(n_checks):
                for _ in range(uniform):
                    w = apply_T(kernel, w, alpha0)
                worst = max(worst, w.sup_distance(v))
    divides = all(lcm % p == 0 for p in periods)
    return RecurrenceSpeedReport(uniform, lcm, worst, list(periods), divides, notice)


def random_dominated(k_full, nodes: Sequence[int], rng: np.random.Generator,
                     scale: float = 1.0) -> DominatedMap:
    """A dominated map on ``nodes``: the restriction of a represented function.

    ``psi(y) = min_z c_z + k(z, y)`` with random ``c`` is dominated by the
    triangle inequality of ``k``.
    """
    k_full = np.asarray(k_full, dtype=float)
    nodes = list(nodes)
    c = rng.uniform(-scale, scale, size=len(nodes))
    block = k_full[np.ix_(nodes, nodes)]
    vals = np.min(c[:, None] + block, axis=0)
    return DominatedMap(tuple(nodes), vals)
