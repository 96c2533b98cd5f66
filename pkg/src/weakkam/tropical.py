"""Min-plus matrix algebra over ``R u {+inf}``.

Matrices are plain float ``ndarray`` objects; ``np.inf`` is the unreachable
sentinel.  It is absorbing under ``+`` and neutral under ``min``.  ``-inf`` and
NaN never appear: every public entry point validates its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import AcyclicError, DimensionMismatch, DivergenceError, NegativeCycleError

INF = np.inf
DEFAULT_TOL = 1e-9


def as_tropical(a, square: bool = True) -> np.ndarray:
    """Validate and return ``a`` as a float array over ``R u {+inf}``."""
    arr = np.array(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    if np.isnan(arr).any():
        raise ValueError("tropical matrices may not contain NaN")
    if np.isneginf(arr).any():
        raise ValueError("tropical matrices may not contain -inf")
    return arr


def identity(n: int) -> np.ndarray:
    """Tropical identity: 0 on the diagonal, +inf elsewhere."""
    out = np.full((n, n), INF)
    np.fill_diagonal(out, 0.0)
    return out


def mp_product(A, B) -> np.ndarray:
    """``C[i, j] = min_k A[i, k] + B[k, j]``; rectangular shapes allowed."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
    out = np.full((A.shape[0], B.shape[1]), INF)
    tmp = np.empty_like(out)
    for k in range(A.shape[1]):
        np.add(A[:, k:k + 1], B[k:k + 1, :], out=tmp)
        np.minimum(out, tmp, out=out)
    return out


def mp_vecmat(u, B) -> np.ndarray:
    """Row vector times matrix: ``(u B)[x] = min_y u[y] + B[y, x]``."""
    u = np.asarray(u, dtype=float)
    B = np.asarray(B, dtype=float)
    if u.ndim != 1 or u.shape[0] != B.shape[0]:
        raise DimensionMismatch(f"cannot apply {B.shape} kernel to vector of length {u.shape}")
    return np.min(u[:, None] + B, axis=0)


def mp_power(A, n: int, method: str = "squaring") -> np.ndarray:
    """``n``-fold min-plus product of ``A`` with itself (``n >= 1``)."""
    A = as_tropical(A)
    if int(n) != n or n < 1:
        raise ValueError("power must be a positive integer")
    if method == "iterate":
        out = A.copy()
        for _ in range(n - 1):
            out = mp_product(out, A)
        return out
    if method != "squaring":
        raise ValueError(f"unknown method {method!r}")
    result = None
    base = A
    while True:
        if n & 1:
            result = base if result is None else mp_product(result, base)
        n >>= 1
        if not n:
            return result
        base = mp_product(base, base)


def tropical_close(X, Y, tol: float = DEFAULT_TOL) -> bool:
    """Same ``+inf`` pattern and finite entries within ``tol``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        return False
    fx = np.isfinite(X)
    if not np.array_equal(fx, np.isfinite(Y)):
        return False
    return bool(np.all(np.abs(X[fx] - Y[fx]) <= tol))


def max_abs_diff(X, Y) -> float:
    """Largest finite-entry difference; ``inf`` if the patterns differ."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    fx = np.isfinite(X)
    if not np.array_equal(fx, np.isfinite(Y)):
        return INF
    if not fx.any():
        return 0.0
    return float(np.max(np.abs(X[fx] - Y[fx])))


def _floyd_warshall(C: np.ndarray) -> np.ndarray:
    C = C.copy()
    for k in range(C.shape[0]):
        np.minimum(C, C[:, k:k + 1] + C[k:k + 1, :], out=C)
    return C


def mp_closure(A, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Min over chains of every length ``N >= 1``: ``min_N A^N``.

    Raises
    ------
    NegativeCycleError
        If some cycle has mean below ``-tol`` (the chain infimum is ``-inf``).
    """
    A = as_tropical(A)
    try:
        lam, witness = min_mean_cycle(A)
    except AcyclicError:
        lam = 0.0
    if lam < -tol:
        raise NegativeCycleError(f"cycle {witness} has mean {lam:.3g} < 0")
    return _floyd_warshall(A)


def _karp_tables(A: np.ndarray):
    n = A.shape[0]
    D = np.full((n + 1, n), INF)
    D[0] = 0.0
    pred = np.zeros((n + 1, n), dtype=int)
    for k in range(1, n + 1):
        M = D[k - 1][:, None] + A
        pred[k] = np.argmin(M, axis=0)
        D[k] = M[pred[k], np.arange(n)]
    return D, pred


def _cycle_mean(A: np.ndarray, cycle: List[int]) -> float:
    total = sum(A[cycle[r], cycle[(r + 1) % len(cycle)]] for r in range(len(cycle)))
    return float(total) / len(cycle)


def _cycles_in_walk(walk: List[int]) -> List[List[int]]:
    """Peel simple cycles off a walk (list of nodes in forward order)."""
    cycles = []
    stack: List[int] = []
    where: Dict[int, int] = {}
    for node in walk:
        if node in where:
            j = where[node]
            cyc = stack[j:]
            cycles.append(cyc)
            for c in cyc[1:]:
                del where[c]
            del stack[j + 1:]
        else:
            where[node] = len(stack)
            stack.append(node)
    return cycles


def min_mean_cycle(A) -> Tuple[float, List[int]]:
    """Minimum cycle mean by Karp's recurrence, with a witness cycle.

    The returned mean is the exact mean of the witness cycle; it agrees with
    Karp's value to within ``1e-9``.  The witness lists nodes in traversal
    order (the closing arc runs from the last node back to the first).

    Raises
    ------
    AcyclicError
        If the finite support of ``A`` contains no cycle.
    """
    A = as_tropical(A)
    n = A.shape[0]
    D, pred = _karp_tables(A)
    finite_n = np.isfinite(D[n])
    if not finite_n.any():
        raise AcyclicError("no finite cycle exists")
    best = INF
    best_v = -1
    for v in np.flatnonzero(finite_n):
        ks = np.flatnonzero(np.isfinite(D[:n, v]))
        val = np.max((D[n, v] - D[ks, v]) / (n - ks))
        if val < best:
            best, best_v = float(val), int(v)
    walk = [best_v]
    for k in range(n, 0, -1):
        walk.append(int(pred[k][walk[-1]]))
    walk.reverse()
    candidates = _cycles_in_walk(walk)
    witness = None
    if candidates:
        means = [_cycle_mean(A, c) for c in candidates]
        r = int(np.argmin(means))
        if abs(means[r] - best) <= 1e-9:
            witness = candidates[r]
    if witness is None:
        witness = _critical_witness(A, best)
    return _cycle_mean(A, witness), witness


def _critical_witness(A: np.ndarray, lam: float) -> List[int]:
    B = normalized_difference(A, lam)
    crit = _critical_arcs(B, 1e-9)
    i, j = map(int, np.argwhere(crit)[0])
    if i == j:
        return [i]
    dist, preds = shortest_path(csr_matrix(crit.astype(float)), directed=True, unweighted=True,
                                return_predecessors=True, indices=[j])
    path = [i]
    while path[-1] != j:
        path.append(int(preds[0, path[-1]]))
    path.reverse()
    return path


def normalized_difference(A, lam: float) -> np.ndarray:
    """``A - lam`` on finite entries."""
    A = np.asarray(A, dtype=float)
    return np.where(np.isfinite(A), A - lam, INF)


def _critical_arcs(B: np.ndarray, tol: float) -> np.ndarray:
    C0 = np.minimum(_floyd_warshall(B), identity(B.shape[0]))
    return np.isfinite(B) & (B + C0.T <= tol)


@dataclass
class CriticalGraph:
    lam: float
    nodes: Tuple[int, ...]
    arcs: frozenset
    cycle_lengths: Dict[int, int]
    cyclicity: int
    components: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def lcm_cycle_lengths(self) -> int:
        return reduce(math.lcm, self.cycle_lengths.values(), 1)

    @property
    def uniform_cycle_length(self) -> Optional[int]:
        lengths = set(self.cycle_lengths.values())
        return lengths.pop() if len(lengths) == 1 else None


def critical_graph(A, lam: float, tol: float = DEFAULT_TOL) -> CriticalGraph:
    """Arcs lying on cycles whose mean is within ``tol`` of ``lam``.

    Arc ``(i, j)`` is critical when ``B[i, j] + C0[j, i] <= tol`` with
    ``B = A - lam`` and ``C0`` the closure of ``B`` that also admits the empty
    chain.  ``cyclicity`` is the lcm over strongly connected critical
    components of the gcd of their cycle lengths.
    """
    A = as_tropical(A)
    B = normalized_difference(A, lam)
    crit = _critical_arcs(B, tol)
    nodes = tuple(int(i) for i in np.flatnonzero(crit.any(axis=0) | crit.any(axis=1)))
    arcs = frozenset((int(i), int(j)) for i, j in np.argwhere(crit))
    hops = shortest_path(csr_matrix(crit.astype(float)), directed=True, unweighted=True)

    cycle_lengths = {}
    for i in nodes:
        into = np.flatnonzero(crit[:, i])
        cycle_lengths[i] = int(np.min(hops[i, into]) + 1)

    n_comp, labels = connected_components(csr_matrix(crit.astype(float)), directed=True,
                                          connection="strong")
    components = []
    cyclicity = 1
    node_set = set(nodes)
    for c in range(n_comp):
        members = tuple(int(v) for v in np.flatnonzero(labels == c) if int(v) in node_set)
        if not members:
            continue
        inside = [(u, v) for (u, v) in arcs if labels[u] == c and labels[v] == c]
        if not inside:
            continue
        root = members[0]
        g = 0
        for u, v in inside:
            g = math.gcd(g, int(hops[root, u] + 1 - hops[root, v]))
        components.append(members)
        cyclicity = math.lcm(cyclicity, abs(g))
    return CriticalGraph(float(lam), nodes, arcs, cycle_lengths, cyclicity, components)


@dataclass
class PowerPeriodReport:
    found: bool
    transient: Optional[int]
    period: Optional[int]
    cycle_matrices: List[np.ndarray]
    running_min: Optional[np.ndarray] = None
    n_computed: int = 0

    @property
    def eventual_min(self) -> np.ndarray:
        """Entrywise min over the eventual period (or the fallback running min)."""
        if self.found:
            return np.minimum.reduce(self.cycle_matrices)
        return self.running_min


def detect_power_period(B, n_max: int = 1024, tol: float = DEFAULT_TOL,
                        window: Optional[int] = None) -> PowerPeriodReport:
    """Smallest ``(transient, period)`` with ``B^(t+p) == B^t`` within ``tol``.

    Powers are compared against the last ``window`` stored powers (default
    ``max(64, 2 * dim)``).  When no repetition shows up by ``n_max`` the report
    has ``found=False`` and carries the entrywise min of the last
    ``n_max // 2`` powers.

    Raises
    ------
    DivergenceError
        If the minimum cycle mean of ``B`` is not zero within ``tol``.
    """
    B = as_tropical(B)
    dim = B.shape[0]
    try:
        lam, _ = min_mean_cycle(B)
    except AcyclicError:
        lam = 0.0
    if abs(lam) > tol:
        raise DivergenceError(f"minimum cycle mean {lam:.6g} is not 0: powers drift linearly")
    if window is None:
        window = max(64, 2 * dim)
    history: List[np.ndarray] = [B]
    running = None
    current = B
    for n in range(2, n_max + 1):
        current = mp_product(current, B)
        for p in range(1, min(window, n - 1) + 1):
            if tropical_close(current, history[-p], tol):
                t = n - p
                cycle = history[len(history) - p:]
                return PowerPeriodReport(True, t, p, [c.copy() for c in cycle], n_computed=n)
        if n > n_max - n_max // 2:
            running = current.copy() if running is None else np.minimum(running, current)
        history.append(current)
        if len(history) > window:
            history.pop(0)
    return PowerPeriodReport(False, None, None, [], running_min=running, n_computed=n_max)


def is_strongly_connected(A) -> bool:
    A = np.asarray(A, dtype=float)
    n, _ = connected_components(csr_matrix(np.isfinite(A).astype(float)), directed=True,
                                connection="strong")
    return n == 1


def has_uniform_cycle_mean(A, tol: float = DEFAULT_TOL) -> bool:
    """True when every strongly connected component carrying a cycle has the same minimum cycle mean.

    Strongly connected matrices qualify trivially.  Under this condition the
    normalised powers of ``A`` stay bounded on their finite support, so the
    critical value is well defined.
    """
    A = as_tropical(A)
    n_comp, labels = connected_components(csr_matrix(np.isfinite(A).astype(float)), directed=True,
                                          connection="strong")
    if n_comp == 1:
        return True
    means = []
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        block = A[np.ix_(idx, idx)]
        if np.isfinite(block).any():
            try:
                means.append(min_mean_cycle(block)[0])
            except AcyclicError:
                continue
    return bool(means) and max(means) - min(means) <= tol
