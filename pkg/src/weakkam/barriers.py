"""Critical value, Peierls-type barriers, Aubry/Mather structure, static classes.

All barrier matrices live on the normalised one-period kernel
``B = A + alpha0``, whose minimum cycle mean is zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ApproximateBarrierWarning, DisconnectedKernelError, ToleranceSensitivityWarning
from .kernel import kernel_lipschitz_estimate
from .model import CircleGrid
from .tropical import (
    DEFAULT_TOL,
    INF,
    CriticalGraph,
    PowerPeriodReport,
    critical_graph,
    detect_power_period,
    identity,
    has_uniform_cycle_mean,
    min_mean_cycle,
    mp_closure,
    mp_power,
    mp_product,
)
from .values import ValueFunction

DIAMETER = 0.5


def _matrix(A) -> np.ndarray:
    return np.asarray(A.matrix if hasattr(A, "matrix") else A, dtype=float)


def _finite_extremes(M: np.ndarray) -> Tuple[float, float]:
    f = M[np.isfinite(M)]
    return float(f.min()), float(f.max())


@dataclass
class CriticalValueReport:
    """Three estimates of ``alpha0`` plus the subadditive diagnostics.

    ``m_seq[n-1]`` and ``M_seq[n-1]`` are the smallest and largest finite
    entries of ``A^n``; ``-M_n / n <= alpha0 <= -m_n / n`` for every ``n``.
    """

    alpha0_karp: float
    alpha0_subadditive: float
    alpha0_bisection: float
    m_seq: np.ndarray
    M_seq: np.ndarray
    kappa1: float
    witness: List[int] = field(default_factory=list)
    subadditive_bracket: Tuple[float, float] = (-INF, INF)
    bisection_bracket: Tuple[float, float] = (-INF, INF)
    bisection_horizon: int = 0
    bisection_tol: float = 0.0

    @property
    def n_terms(self) -> int:
        return len(self.m_seq)

    def to_dict(self) -> dict:
        return {
            "alpha0_karp": self.alpha0_karp,
            "alpha0_subadditive": self.alpha0_subadditive,
            "alpha0_bisection": self.alpha0_bisection,
            "kappa1": self.kappa1,
            "witness_cycle": list(self.witness),
            "subadditive_bracket": list(self.subadditive_bracket),
            "bisection_bracket": list(self.bisection_bracket),
            "bisection_horizon": self.bisection_horizon,
            "bisection_tol": self.bisection_tol,
            "n_terms": self.n_terms,
            "m_seq": self.m_seq,
            "M_seq": self.M_seq,
        }


def _bisection(dyadic: List[Tuple[int, float, float]], lo: float, hi: float, tol: float):
    """Bisect on ``c`` using exact drift certificates from probed powers.

    ``m_n + c n > 0`` proves ``c > alpha0`` and ``M_n + c n < 0`` proves
    ``c < alpha0``.  When neither fires, ``c`` already lies inside every
    probed bracket and the sign of the mid-spread at the longest horizon
    decides.
    """
    n_last, m_last, M_last = dyadic[-1]
    while hi - lo > tol:
        c = 0.5 * (lo + hi)
        if any(m + c * n > 0 for n, m, _ in dyadic):
            hi = c
        elif any(M + c * n < 0 for n, _, M in dyadic):
            lo = c
        elif 0.5 * (m_last + M_last) + c * n_last > 0:
            hi = c
        else:
            lo = c
    return 0.5 * (lo + hi), (lo, hi)


def critical_value(A, n_terms: int = 400, bisection_tol: float = 1e-6,
                   grid: Optional[CircleGrid] = None) -> CriticalValueReport:
    """Critical value ``alpha0`` of a one-period kernel.

    Karp's exact minimum cycle mean is authoritative (``alpha0 = -lambda``).
    The subadditive estimate is the midpoint of ``[-M_n/n, -m_n/n]`` at
    ``n = n_terms``.  The bisection estimate probes dyadic horizons
    ``n = 2^k`` up to the first one whose bracket width bound
    ``2 kappa1 diam / n`` is below ``bisection_tol / 16``.

    Raises
    ------
    DisconnectedKernelError
        If the finite support of ``A`` is not strongly connected and its
        components do not share one minimum cycle mean.
    """
    M = _matrix(A)
    n = M.shape[0]
    if not has_uniform_cycle_mean(M):
        raise DisconnectedKernelError("kernel support is not strongly connected and its components "
                                      "have different cycle means")
    if grid is None:
        grid = CircleGrid(max(n, 2))
    kappa1 = kernel_lipschitz_estimate(M, grid) if n > 1 else 0.0
    lam, witness = min_mean_cycle(M)
    alpha0 = -lam

    m_seq = np.empty(n_terms)
    M_seq = np.empty(n_terms)
    P = M
    for k in range(1, n_terms + 1):
        if k > 1:
            P = mp_product(P, M)
        m_seq[k - 1], M_seq[k - 1] = _finite_extremes(P)
    sub_lo, sub_hi = -M_seq[-1] / n_terms, -m_seq[-1] / n_terms
    alpha0_sub = 0.5 * (sub_lo + sub_hi)

    spread = max(2.0 * kappa1 * DIAMETER, 1e-300)
    k_max = min(max(4, math.ceil(math.log2(16.0 * spread / bisection_tol))), 60)
    dyadic = []
    P = M
    for k in range(k_max + 1):
        if k:
            P = mp_product(P, P)
        lo_k, hi_k = _finite_extremes(P)
        dyadic.append((2 ** k, lo_k, hi_k))
    a_min, a_max = _finite_extremes(M)
    alpha0_bis, bracket = _bisection(dyadic, -a_max, -a_min, bisection_tol)

    return CriticalValueReport(
        alpha0_karp=alpha0,
        alpha0_subadditive=float(alpha0_sub),
        alpha0_bisection=float(alpha0_bis),
        m_seq=m_seq,
        M_seq=M_seq,
        kappa1=kappa1,
        witness=witness,
        subadditive_bracket=(float(sub_lo), float(sub_hi)),
        bisection_bracket=(float(bracket[0]), float(bracket[1])),
        bisection_horizon=2 ** k_max,
        bisection_tol=bisection_tol,
    )


def normalize(A, alpha0: float) -> np.ndarray:
    """Add ``alpha0`` to every finite entry of the one-period kernel."""
    M = _matrix(A)
    return np.where(np.isfinite(M), M + alpha0, INF)


def _eventual_min(B: np.ndarray, n_max: int, tol: float) -> Tuple[np.ndarray, PowerPeriodReport]:
    report = detect_power_period(B, n_max=n_max, tol=tol)
    if not report.found:
        warnings.warn(f"no power period within {n_max} steps: barrier is the running min of the "
                      f"last {n_max // 2} powers", ApproximateBarrierWarning, stacklevel=3)
    return report.eventual_min, report


def peierls_barrier(B, n_max: int = 1024, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``h_inf``: entrywise min of ``B^n`` over one eventual period."""
    return _eventual_min(_matrix(B), n_max, tol)[0]


def n_peierls_barrier(B, n: int, n_max: int = 1024, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Same construction along multiples of ``n``, i.e. on powers of ``B^n``."""
    return _eventual_min(mp_power(_matrix(B), n), n_max, tol)[0]


def aubry_set(h_inf, tol: float = DEFAULT_TOL) -> Tuple[int, ...]:
    """Nodes with vanishing self-barrier."""
    d = np.diag(np.asarray(h_inf, dtype=float))
    return tuple(int(i) for i in np.flatnonzero(np.abs(d) <= tol))


@dataclass
class MatherProxy:
    """Critical-graph nodes of the kernel, with their shortest critical cycle length."""

    nodes: Tuple[int, ...]
    cycle_lengths: Dict[int, int]
    graph: CriticalGraph
    aubry_violations: Tuple[int, ...] = ()

    @property
    def lcm(self) -> int:
        return self.graph.lcm_cycle_lengths


def mather_proxy(A, tol: float = DEFAULT_TOL, h_inf=None) -> MatherProxy:
    """Critical nodes of ``A``; with ``h_inf`` given, also list nodes outside the Aubry set.

    A nonempty ``aubry_violations`` is a discretisation diagnostic, not an error.
    """
    M = _matrix(A)
    lam, _ = min_mean_cycle(M)
    graph = critical_graph(M, lam, tol)
    violations = ()
    if h_inf is not None:
        aubry = set(aubry_set(h_inf, tol))
        violations = tuple(x for x in graph.nodes if x not in aubry)
    return MatherProxy(graph.nodes, dict(graph.cycle_lengths), graph, violations)


def _cycle_lengths(mather) -> Dict[int, int]:
    if isinstance(mather, MatherProxy):
        return dict(mather.cycle_lengths)
    return {int(k): int(v) for k, v in dict(mather).items()}


def generalized_barrier(B, mather, n_max: int = 1024, tol: float = DEFAULT_TOL,
                        recurrence_multiplier: int = 1):
    """Per-node barrier rows ``h_under`` and the chain barrier ``k``.

    ``h_under[x]`` is row ``x`` of the barrier taken along multiples of
    ``recurrence_multiplier * cycle_length(x)``.  ``k`` (rows ordered like
    ``sorted(mather)``) is the infimum over chains through Mather nodes: the
    closure of the Mather-by-Mather block of ``h_under`` (admitting the empty
    chain) followed by one last ``h_under`` hop.

    Returns
    -------
    h_under : dict node -> row vector
    k : ndarray of shape ``(len(mather), dim)``

    Raises
    ------
    NegativeCycleError
        If the Mather block has a negative chain, which signals a wrong ``alpha0``.
    """
    Bm = _matrix(B)
    lengths = _cycle_lengths(mather)
    if not lengths:
        raise ValueError("Mather node set is empty")
    nodes = sorted(lengths)
    cache: Dict[int, np.ndarray] = {}
    h_under = {}
    for x in nodes:
        ell = lengths[x] * recurrence_multiplier
        if ell not in cache:
            cache[ell] = n_peierls_barrier(Bm, ell, n_max=n_max, tol=tol)
        h_under[x] = cache[ell][x].copy()
    H = np.vstack([h_under[x] for x in nodes])
    block = H[:, nodes]
    chains = np.minimum(mp_closure(block, tol), identity(len(nodes)))
    k = mp_product(chains, H)
    return h_under, k


def pseudometric(k, nodes: Sequence[int]) -> np.ndarray:
    """``d(x, y) = k(x, y) + k(y, x)`` on the Mather nodes.

    ``k`` has one row per node of ``nodes`` (in that order) and one column per
    grid node.
    """
    k = np.asarray(k, dtype=float)
    block = k[:, list(nodes)]
    return block + block.T


def n_pseudometric(h_n_inf, nodes: Sequence[int]) -> np.ndarray:
    """Symmetrised ``h^{n inf}`` restricted to ``nodes``."""
    h = np.asarray(h_n_inf, dtype=float)
    idx = list(nodes)
    block = h[np.ix_(idx, idx)]
    return block + block.T


@dataclass
class StaticClasses:
    classes: List[Tuple[int, ...]]
    class_tol: float

    @property
    def representatives(self) -> Tuple[int, ...]:
        return tuple(c[0] for c in self.classes)

    @property
    def labels(self) -> Dict[int, int]:
        return {x: c for c, members in enumerate(self.classes) for x in members}

    def __len__(self):
        return len(self.classes)

    def to_dict(self) -> dict:
        return {"class_tol": self.class_tol, "classes": [list(c) for c in self.classes],
                "representatives": list(self.representatives)}


def static_classes(d, nodes: Sequence[int], class_tol: float) -> StaticClasses:
    """Connected components of ``{d <= class_tol}``; smallest index represents.

    Warns with :class:`ToleranceSensitivityWarning` when some off-diagonal
    value lies in ``(class_tol, 10 class_tol)``.
    """
    d = np.asarray(d, dtype=float)
    nodes = list(nodes)
    if d.shape != (len(nodes), len(nodes)):
        raise ValueError("pseudometric shape does not match node list")
    off = ~np.eye(len(nodes), dtype=bool)
    borderline = off & (d > class_tol) & (d < 10 * class_tol)
    if borderline.any():
        warnings.warn(f"{int(borderline.sum()) // 2} pseudometric values within a factor 10 above "
                      f"class_tol={class_tol:.3g}", ToleranceSensitivityWarning, stacklevel=2)
    _, labels = connected_components(csr_matrix((d <= class_tol).astype(float)), directed=False)
    groups: Dict[int, List[int]] = {}
    for pos, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(nodes[pos])
    classes = sorted((tuple(sorted(g)) for g in groups.values()), key=lambda c: c[0])
    return StaticClasses(classes, class_tol)


@dataclass
class DominatedMap:
    """Values of ``psi`` on ``domain_nodes`` (aligned arrays)."""

    domain_nodes: Tuple[int, ...]
    values: np.ndarray
    barrier_name: str = "k"

    def __post_init__(self):
        self.domain_nodes = tuple(int(x) for x in self.domain_nodes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.domain_nodes),):
            raise ValueError("one value per domain node is required")

    def as_dict(self) -> Dict[int, float]:
        return dict(zip(self.domain_nodes, self.values.tolist()))


@dataclass
class DominationResult:
    ok: bool
    max_violation: float
    witness: Optional[Tuple[int, int]]


def check_domination(psi: DominatedMap, f, X: Optional[Iterable[int]] = None,
                     tol: float = DEFAULT_TOL) -> DominationResult:
    """Largest ``psi(y) - psi(x) - f(x, y)`` over ``x, y`` in ``X``.

    ``f`` is indexed by grid node on both axes.
    """
    f = np.asarray(f, dtype=float)
    lookup = psi.as_dict()
    X = list(psi.domain_nodes if X is None else X)
    vals = np.array([lookup[x] for x in X])
    block = f[np.ix_(X, X)]
    gap = vals[None, :] - vals[:, None] - block
    a, b = np.unravel_index(int(np.argmax(gap)), gap.shape)
    worst = float(gap[a, b])
    return DominationResult(worst <= tol, worst, (X[a], X[b]))


def square_barrier(k, nodes: Sequence[int], dim: int) -> np.ndarray:
    """Embed a Mather-rows barrier into a ``dim x dim`` matrix (``inf`` elsewhere)."""
    out = np.full((dim, dim), INF)
    out[list(nodes)] = np.asarray(k, dtype=float)
    return out


def extremal_solutions(k, nodes: Sequence[int], x0: int,
                       representatives: Optional[Sequence[int]] = None):
    """Largest and smallest represented solutions normalised by ``v(x0) = 0``.

    ``v_plus = k(x0, .)`` and ``v_minus = min_y (k(y, .) - k(y, x0))`` over the
    class representatives ``y``.  The term of the class of ``x0`` equals
    ``v_plus`` and dominates every other term, so including it changes
    nothing except on single-class systems, where it makes ``v_minus = v_plus``.
    """
    k = np.asarray(k, dtype=float)
    nodes = list(nodes)
    if x0 not in nodes:
        raise ValueError(f"x0={x0} is not a Mather node")
    reps = list(nodes if representatives is None else representatives)
    row = {x: k[pos] for pos, x in enumerate(nodes)}
    v_plus = row[x0].copy()
    v_minus = np.min(np.vstack([row[y] - row[y][x0] for y in reps]), axis=0)
    return ValueFunction(v_plus), ValueFunction(v_minus)


@dataclass
class BarrierSet:
    h_inf: np.ndarray
    h_n_inf: Dict[int, np.ndarray]
    h_under: Dict[int, np.ndarray]
    k: np.ndarray
    mather_nodes: Tuple[int, ...]
    alpha0: float
    approximate: bool = False
    tol: float = DEFAULT_TOL
    transient: Optional[int] = None
    period: Optional[int] = None

    @property
    def k_full(self) -> np.ndarray:
        return square_barrier(self.k, self.mather_nodes, self.h_inf.shape[0])

    def to_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "approximate": self.approximate,
            "tol": self.tol,
            "power_transient": self.transient,
            "power_period": self.period,
            "mather_nodes": list(self.mather_nodes),
            "h_inf": {"shape": list(self.h_inf.shape), "entries": self.h_inf.ravel()},
            "k_bar": {"shape": list(self.k.shape), "entries": self.k.ravel()},
            "h_n_inf": {str(n): {"shape": list(h.shape), "entries": h.ravel()}
                        for n, h in sorted(self.h_n_inf.items())},
        }


@dataclass
class AubryDecomposition:
    aubry_nodes: Tuple[int, ...]
    mather_nodes: Tuple[int, ...]
    cycle_lengths: Dict[int, int]
    static_classes: StaticClasses
    n_static_classes: Dict[int, StaticClasses] = field(default_factory=dict)
    aubry_violations: Tuple[int, ...] = ()
    cyclicity: int = 1

    def to_dict(self) -> dict:
        return {
            "aubry_nodes": list(self.aubry_nodes),
            "mather_nodes": list(self.mather_nodes),
            "cycle_lengths": {str(x): l for x, l in sorted(self.cycle_lengths.items())},
            "cyclicity": self.cyclicity,
            "aubry_violations": list(self.aubry_violations),
            "static_classes": self.static_classes.to_dict(),
            "n_static_classes": {str(n): c.to_dict() for n, c in sorted(self.n_static_classes.items())},
        }


def default_class_tol(matrix_tol: float, dim: int) -> float:
    return 10.0 * matrix_tol * dim


def compute_barriers(A, alpha0: Optional[float] = None, n_values: Sequence[int] = (),
                     n_max: int = 1024, tol: float = DEFAULT_TOL) -> Tuple[BarrierSet, MatherProxy]:
    """Every barrier of a one-period kernel in one pass."""
    M = _matrix(A)
    if alpha0 is None:
        alpha0 = -min_mean_cycle(M)[0]
    B = normalize(M, alpha0)
    h_inf, report = _eventual_min(B, n_max, tol)
    proxy = mather_proxy(M, tol, h_inf=h_inf)
    h_under, k = generalized_barrier(B, proxy, n_max=n_max, tol=tol)
    h_n = {int(n): (h_inf if n == 1 else n_peierls_barrier(B, n, n_max=n_max, tol=tol))
           for n in n_values}
    bs = BarrierSet(h_inf, h_n, h_under, k, proxy.nodes, float(alpha0), not report.found, tol,
                    report.transient, report.period)
    return bs, proxy


def decompose(barriers: BarrierSet, proxy: MatherProxy, class_tol: float) -> AubryDecomposition:
    nodes = barriers.mather_nodes
    classes = static_classes(pseudometric(barriers.k, nodes), nodes, class_tol)
    n_classes = {n: static_classes(n_pseudometric(h, nodes), nodes, class_tol)
                 for n, h in barriers.h_n_inf.items()}
    return AubryDecomposition(aubry_set(barriers.h_inf, barriers.tol), nodes, dict(proxy.cycle_lengths),
                              classes, n_classes, proxy.aubry_violations, proxy.graph.cyclicity)
