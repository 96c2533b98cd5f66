"""One-shot verification of every structural invariant on a pipeline run."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .barriers import (
    DIAMETER,
    compute_barriers,
    critical_value,
    decompose,
    extremal_solutions,
    generalized_barrier,
    n_pseudometric,
    pseudometric,
)
from .kernel import PeriodKernel, extract_minimizing_path
from .pipeline import PipelineResult, RunConfig, run_stages
from .semigroup import (
    apply_T,
    certify,
    evolve,
    inverse_on_omega,
    isometry_check,
    random_dominated,
    represent,
    represent_n,
    uniqueness_check,
)
from .tropical import detect_power_period, mp_product, mp_vecmat

GOLDEN_KERNEL = np.array([[4.0, 1.0], [2.0, 3.0]])

# Anchor name -> the property it certifies.  Every report entry must use one.
ANCHORS = {
    "golden-2x2": "hand-derived barrier values of the 2x2 reference kernel",
    "kernel-triangle": "two-period potential below every one-period concatenation",
    "path-consistency": "backtracked minimizing path action equals the kernel entry",
    "product-associativity": "min-plus product is associative",
    "estimator-agreement": "Karp, bisection and subadditive estimates of alpha0 agree",
    "potential-oscillation": "spread of finite entries of A^n bounded by 2 kappa1 diam",
    "boundary-velocity": "no optimal hop uses the velocity bound",
    "weak-kam-fixed-point": "rows of h_inf are fixed by one normalized period",
    "barrier-triangle": "h_inf satisfies the triangle inequality",
    "barrier-diagonal": "h_inf diagonal nonnegative and zero on Mather nodes",
    "barrier-sandwich": "h_inf <= k <= h_under on Mather rows",
    "chain-barrier": "k vanishes on the Mather diagonal and obeys the triangle inequality",
    "pseudometric": "symmetrized barriers are pseudometrics",
    "aubry-contains-mather": "critical nodes have zero self-barrier",
    "choice-independence": "k unchanged when recurrence lengths are doubled",
    "non-expansive": "T is 1-Lipschitz in the sup norm",
    "min-stability": "T commutes with pointwise minima",
    "order-preservation": "T is monotone",
    "constant-commutation": "T commutes with adding constants",
    "orbit-boundedness": "orbits stay within the a priori sup-norm bound",
    "equi-lipschitz": "one period makes any function kappa1-Lipschitz",
    "isometry-on-omega": "T is an isometry between certified recurrent functions",
    "backward-extension": "every certified member has a predecessor in its cycle",
    "representation-roundtrip": "recurrent functions are recovered from their values on representatives",
    "representation-inverse": "restriction after representation is the identity on dominated maps",
    "periodic-representation": "represented maps over the n-barrier are n-periodic",
    "extremal-envelope": "certified solutions lie between the extremal ones",
    "uniqueness": "agreement on Mather nodes forces global agreement",
    "period-divides-lcm": "certified orbit periods divide the lcm of critical cycle lengths",
    "recurrence-speed": "certified functions return after multiples of the common cycle length",
}

FIXED_TOL = 1e-9
SEMIGROUP_TOL = 1e-12


@dataclass
class VerificationEntry:
    name: str
    anchor: str
    status: str
    measured: Optional[float]
    tolerance: Optional[float]
    reason: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "status": self.status,
                "measured": self.measured, "tolerance": self.tolerance, "reason": self.reason}


@dataclass
class VerificationReport:
    entries: List[VerificationEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def by_name(self, name: str) -> VerificationEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def failures(self) -> List[VerificationEntry]:
        return [e for e in self.entries if e.status == "fail"]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "entries": [e.to_dict() for e in self.entries]}


class _Collector:
    def __init__(self):
        self.report = VerificationReport()

    def bound(self, name, anchor, measured, tol, reason=""):
        measured = float(measured)
        status = "pass" if measured <= tol else "fail"
        self.report.entries.append(VerificationEntry(name, anchor, status, measured, float(tol), reason))

    def skip(self, name, anchor, reason):
        self.report.entries.append(VerificationEntry(name, anchor, "skipped", None, None, reason))

    def guarded(self, name, anchor, fn: Callable[[], tuple]):
        """Run ``fn`` returning ``(measured, tol)`` or ``(None, reason)``."""
        try:
            measured, tol = fn()
        except Exception as exc:  # a crash is a failure entry, never a silent skip
            self.report.entries.append(VerificationEntry(name, anchor, "fail", None, None,
                                                         f"{type(exc).__name__}: {exc}"))
            return
        if measured is None:
            self.skip(name, anchor, tol)
        else:
            self.bound(name, anchor, measured, tol)


def _worst_above(lhs, rhs):
    """``max(lhs - rhs)``; ``inf`` where ``lhs`` is infinite but ``rhs`` is not."""
    lhs, rhs = np.broadcast_arrays(np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float))
    if np.any(~np.isfinite(lhs) & np.isfinite(rhs)):
        return float("inf")
    ok = np.isfinite(lhs) & np.isfinite(rhs)
    return float(np.max((lhs - rhs)[ok])) if ok.any() else 0.0


def triangle_violation(H) -> float:
    """``max_{i,k,j} H[i,j] - H[i,k] - H[k,j]`` over finite entries."""
    H = np.asarray(H, dtype=float)
    worst = -np.inf
    for k in range(H.shape[0]):
        via = H[:, k:k + 1] + H[k:k + 1, :]
        ok = np.isfinite(via)
        if ok.any():
            worst = max(worst, float(np.max((H - via)[ok])))
    return max(worst, 0.0)


def golden_suite() -> dict:
    """Measured deviations of the 2x2 reference system from its hand-derived values."""
    A = GOLDEN_KERNEL
    cv = critical_value(A)
    B = A + cv.alpha0_karp
    rep = detect_power_period(B)
    bs, proxy = compute_barriers(A, cv.alpha0_karp, n_values=(2,))
    dec = decompose(bs, proxy, 1e-6)
    d = pseudometric(bs.k, bs.mather_nodes)
    periods = []
    for u0 in ([0.0, 0.0], [0.3, -1.2], [5.0, 1.0]):
        _, rec = certify(B, u0, 16)
        periods.append(rec.period)
    return {
        "alpha0": abs(cv.alpha0_karp - (-1.5)),
        "transient": rep.transient,
        "period": rep.period,
        "h_inf": float(np.max(np.abs(bs.h_inf - np.array([[0.0, -0.5], [0.5, 0.0]])))),
        "h_2inf": float(np.max(np.abs(bs.h_n_inf[2] - np.array([[0.0, 1.0], [2.0, 0.0]])))),
        "k_bar": float(np.max(np.abs(bs.k - np.array([[0.0, 1.0], [2.0, 0.0]])))),
        "d_bar": abs(d[0, 1] - 3.0),
        "n_classes": len(dec.static_classes),
        "orbit_periods": periods,
    }


def golden_deviation(g: dict) -> float:
    """Single number: 0 when every golden value matches, large otherwise."""
    dev = max(g["alpha0"], g["h_inf"], g["h_2inf"], g["k_bar"], g["d_bar"])
    if g["transient"] != 2 or g["period"] != 2 or g["n_classes"] != 2:
        dev = max(dev, 1.0)
    if any(p is None or 2 % p for p in g["orbit_periods"]):
        dev = max(dev, 1.0)
    return dev


def _random_pairs(rng, dim, count, scale=1.0):
    return [(rng.uniform(-scale, scale, dim), rng.uniform(-scale, scale, dim)) for _ in range(count)]


def verify_result(res: PipelineResult, seed: int = 0) -> VerificationReport:
    """Run the invariant suite on a completed in-memory pipeline run."""
    col = _Collector()
    cfg = res.config
    rng = np.random.default_rng(seed)
    A = res.matrix
    B = res.normalized
    dim = A.shape[0]
    tol = cfg.tolerances.matrix_tol
    cv = res.critical
    bs = res.barriers
    dec = res.decomposition
    mather = list(bs.mather_nodes)
    kf = bs.k_full
    reps = list(dec.static_classes.representatives)
    members = res.certified_members
    spread_bound = 2.0 * cv.kappa1 * DIAMETER

    col.guarded("golden 2x2 suite", "golden-2x2", lambda: (golden_deviation(golden_suite()), 1e-12))

    def kernel_triangle():
        AA = mp_product(A, A)
        return _worst_above(AA[:, None, :], A[:, :, None] + A[None, :, :]), SEMIGROUP_TOL
    col.guarded("kernel triangle inequality", "kernel-triangle", kernel_triangle)

    def path_consistency():
        if not isinstance(res.kernel, PeriodKernel):
            return None, "raw matrix scenario has no substeps to backtrack"
        reach = np.argwhere(np.isfinite(A))
        picks = reach[rng.choice(len(reach), size=min(100, len(reach)), replace=False)]
        worst = 0.0
        for i, j in picks:
            path = extract_minimizing_path(res.kernel.substeps, int(i), int(j))
            worst = max(worst, abs(path.total_action - A[i, j]))
        return worst, 1e-12
    col.guarded("path consistency", "path-consistency", path_consistency)

    def associativity():
        X, Y, Z = (rng.uniform(-5, 5, (8, 8)) for _ in range(3))
        return float(np.max(np.abs(mp_product(mp_product(X, Y), Z) - mp_product(X, mp_product(Y, Z))))), 1e-12
    col.guarded("product associativity", "product-associativity", associativity)

    col.bound("estimator agreement (bisection)", "estimator-agreement",
              abs(cv.alpha0_karp - cv.alpha0_bisection), 1e-4)
    col.bound("estimator agreement (subadditive)", "estimator-agreement",
              abs(cv.alpha0_karp - cv.alpha0_subadditive),
              max(2.0 * spread_bound / cv.n_terms, 1e-12))
    col.bound("potential oscillation", "potential-oscillation",
              float(np.max(cv.M_seq - cv.m_seq)) - spread_bound, FIXED_TOL)
    col.bound("boundary-velocity hits", "boundary-velocity", getattr(res.kernel, "boundary_hits", 0), 0)

    col.guarded("weak-KAM fixed point of h_inf rows", "weak-kam-fixed-point",
                lambda: (max(_worst_abs(mp_vecmat(row, B), row) for row in bs.h_inf), FIXED_TOL))
    col.guarded("h_inf triangle inequality", "barrier-triangle", lambda: (triangle_violation(bs.h_inf), FIXED_TOL))

    def diag():
        dg = np.diag(bs.h_inf)
        low = float(max(0.0, -np.min(dg)))
        on_mather = float(np.max(np.abs(dg[mather])))
        return max(low, on_mather), FIXED_TOL
    col.guarded("h_inf diagonal", "barrier-diagonal", diag)

    def sandwich():
        H = np.vstack([bs.h_under[x] for x in mather])
        return max(_worst_above(bs.h_inf[mather], bs.k), _worst_above(bs.k, H)), FIXED_TOL
    col.guarded("barrier sandwich", "barrier-sandwich", sandwich)

    def chain():
        k = bs.k
        diag_k = float(np.max(np.diag(k[:, mather])))
        block = k[:, mather]
        tri = max(_worst_above(k[a], block[a][:, None] + k) for a in range(len(mather)))
        return max(diag_k, tri), FIXED_TOL
    col.guarded("chain barrier diagonal and triangle", "chain-barrier", chain)

    def pseudo():
        worst = 0.0
        mats = [pseudometric(bs.k, mather)] + [n_pseudometric(h, mather) for h in bs.h_n_inf.values()]
        for d in mats:
            worst = max(worst, float(np.max(np.abs(d - d.T))), float(max(0.0, -np.min(d))),
                        float(np.max(np.abs(np.diag(d)))), triangle_violation(d))
        return worst, FIXED_TOL
    col.guarded("pseudometric axioms", "pseudometric", pseudo)

    col.bound("Mather proxy inside Aubry set", "aubry-contains-mather", len(dec.aubry_violations), 0)

    def choice():
        _, k2 = generalized_barrier(B, res.proxy, n_max=cfg.horizons.n_max_powers, tol=tol,
                                    recurrence_multiplier=2)
        return _worst_abs(k2, bs.k), FIXED_TOL
    col.guarded("choice independence of k", "choice-independence", choice)

    pairs = _random_pairs(rng, dim, 100)

    def nonexp():
        return max(_worst_abs(mp_vecmat(u, B), mp_vecmat(v, B)) - _worst_abs(u, v) for u, v in pairs), SEMIGROUP_TOL
    col.guarded("non-expansiveness", "non-expansive", nonexp)

    def minstab():
        return max(_worst_abs(mp_vecmat(np.minimum(u, v), B), np.minimum(mp_vecmat(u, B), mp_vecmat(v, B)))
                   for u, v in pairs), SEMIGROUP_TOL
    col.guarded("min-stability", "min-stability", minstab)

    def order():
        worst = 0.0
        for u, v in pairs:
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            worst = max(worst, float(np.max(mp_vecmat(lo, B) - mp_vecmat(hi, B))))
        return max(worst, 0.0), 0.0
    col.guarded("order preservation", "order-preservation", order)

    def constants():
        return max(_worst_abs(mp_vecmat(u + c, B), mp_vecmat(u, B) + c)
                   for (u, _), c in zip(pairs, rng.uniform(-10, 10, len(pairs)))), SEMIGROUP_TOL
    col.guarded("commutation with constants", "constant-commutation", constants)

    def bounded():
        worst = -np.inf
        for orbit in res.orbits:
            base = orbit.initial.sup_norm() + spread_bound
            worst = max(worst, max(s.sup_norm() for s in orbit.snapshots) - base)
        return max(worst, 0.0), FIXED_TOL
    col.guarded("orbit boundedness", "orbit-boundedness",
                bounded if res.orbits else (lambda: (None, "no orbits were evolved")))

    def lipschitz():
        if not isinstance(res.kernel, PeriodKernel):
            return None, "raw matrix scenario has no spatial grid"
        worst = 0.0
        for _ in range(10):
            u = np.cumsum(rng.choice([-1.0, 1.0], dim)) * 10 * cv.kappa1 * res.grid.spacing
            u -= np.linspace(0, 1, dim, endpoint=False) * (u[-1] - u[0])
            orbit = evolve(B, u, 3)
            for s in orbit.snapshots[1:]:
                worst = max(worst, s.lipschitz_seminorm(res.grid.spacing) - cv.kappa1)
        return max(worst, 0.0), FIXED_TOL
    col.guarded("equi-Lipschitz after one period", "equi-lipschitz", lipschitz)

    def isometry():
        if len(members) < 2:
            return None, "fewer than two certified members"
        worst = 0.0
        idx = rng.choice(len(members), size=(min(20, len(members) ** 2), 2))
        for a, b in idx:
            worst = max(worst, isometry_check(members[a], members[b], B, 4))
        return worst, FIXED_TOL
    col.guarded("isometry on certified members", "isometry-on-omega", isometry)

    def backward():
        if not members:
            return None, "no certified members"
        worst = 0.0
        for r in res.recurrences:
            if not r.found:
                continue
            for v in r.members:
                w = inverse_on_omega(v, r.members, tol)
                worst = max(worst, apply_T(B, w).sup_distance(v))
        return worst, 10 * tol
    col.guarded("backward extension inside cycles", "backward-extension", backward)

    def roundtrip():
        flat = [x for row in res.roundtrips for x in row]
        if not flat:
            return None, "no certified members"
        return max(flat), 1e-6
    col.guarded("representation round trip", "representation-roundtrip", roundtrip)

    def inverse():
        worst = 0.0
        for _ in range(50):
            psi = random_dominated(kf, reps, rng)
            v = represent(psi, kf, tol=tol)
            worst = max(worst, float(np.max(np.abs(v.values[reps] - psi.values))))
        return worst, FIXED_TOL
    col.guarded("restriction inverts representation", "representation-inverse", inverse)

    def periodic():
        n = max(bs.h_n_inf)
        h = bs.h_n_inf[n]
        worst = 0.0
        for _ in range(10):
            psi = random_dominated(h, mather, rng)
            v = represent_n(psi, h, tol=tol)
            w = v
            for _ in range(n):
                w = apply_T(B, w)
            worst = max(worst, w.sup_distance(v), float(np.max(np.abs(v.values[mather] - psi.values))))
        return worst, FIXED_TOL
    col.guarded("n-periodic representation", "periodic-representation", periodic)

    def envelope():
        if not members:
            return None, "no certified members"
        x0 = reps[0]
        vp, vm = extremal_solutions(bs.k, mather, x0, reps)
        worst = 0.0
        for v in members:
            vals = v.values - v.values[x0]
            worst = max(worst, float(np.max(vm.values - vals)), float(np.max(vals - vp.values)))
        return max(worst, 0.0), FIXED_TOL
    col.guarded("extremal envelope", "extremal-envelope", envelope)

    def unique():
        if not members:
            return None, "no certified members"
        worst = 0.0
        candidates = list(members)
        for v in members[:5]:
            noise = rng.uniform(0, 1, dim)
            noise[mather] = 0.0
            period = next(r.period for r in res.recurrences if r.found and any(m is v for m in r.members))
            w = v.values + noise
            steps = period * max(1, math.ceil((res.horizon or 16) / period))
            w = evolve(B, w, steps).snapshots[-1]
            candidates.append(w)
        premise_hits = 0
        for a in range(len(candidates)):
            for b in range(a + 1, len(candidates)):
                r = uniqueness_check(candidates[a], candidates[b], mather)
                if r.premise_met:
                    premise_hits += 1
                    worst = max(worst, r.global_difference)
        return worst, 1e-6
    col.guarded("uniqueness from Mather values", "uniqueness", unique)

    def divides():
        lcm = res.proxy.lcm
        periods = [r.period for r in res.recurrences if r.found]
        if not periods:
            return None, "no certified orbit"
        return float(sum(lcm % p != 0 for p in periods)), 0
    col.guarded("orbit period divides lcm", "period-divides-lcm", divides)

    def speed():
        lengths = set(res.proxy.cycle_lengths.values())
        if len(lengths) != 1:
            return None, "critical cycle lengths are not uniform"
        L = lengths.pop()
        if not members:
            return None, "no certified members"
        worst = 0.0
        for v in members:
            w = v
            for _ in range(4 * L):
                w = apply_T(B, w)
            worst = max(worst, w.sup_distance(v))
        return worst, FIXED_TOL
    col.guarded("recurrence along cycle multiples", "recurrence-speed", speed)

    return col.report


def _worst_abs(a, b) -> float:
    a = np.asarray(a.values if hasattr(a, "values") else a, dtype=float)
    b = np.asarray(b.values if hasattr(b, "values") else b, dtype=float)
    fa, fb = np.isfinite(a), np.isfinite(b)
    if not np.array_equal(fa, fb):
        return float("inf")
    return float(np.max(np.abs(a[fa] - b[fb]))) if fa.any() else 0.0


def verify(config: RunConfig) -> VerificationReport:
    """Full pipeline in memory followed by the invariant suite."""
    return verify_result(run_stages(config), seed=config.seeds)


def anchor_integrity(report: VerificationReport) -> List[str]:
    """Anchors used in ``report`` that are missing from the registry."""
    return sorted({e.anchor for e in report.entries} - set(ANCHORS))
