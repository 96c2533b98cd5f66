"""Run configuration, end-to-end pipeline and on-disk artifact bundle."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from . import io
from .barriers import (
    AubryDecomposition,
    BarrierSet,
    CriticalValueReport,
    MatherProxy,
    compute_barriers,
    critical_value,
    decompose,
    default_class_tol,
    mather_proxy,
    normalize,
)
from .errors import ConfigError, WeakKAMError
from .kernel import PeriodKernel, build_period_kernel, kernel_to_json
from .model import (
    SCENARIO_NAMES,
    CircleGrid,
    LagrangianSpec,
    LagrangianTable,
    PotentialSpec,
    TimeGrid,
    default_v_max,
    scenario,
)
from .semigroup import (
    OrbitRecord,
    certification_horizon,
    certify,
    roundtrip_check,
)

STAGES = ("kernel", "critical-value", "barriers", "classes", "evolve", "represent")


@dataclass
class GridConfig:
    n_x: int = 128
    n_sub: int = 16
    v_max: Optional[float] = None


@dataclass
class Tolerances:
    matrix_tol: float = 1e-9
    class_tol: Optional[float] = None
    bisection_tol: float = 1e-6


@dataclass
class Horizons:
    n_max_powers: int = 1024
    omega_horizon: Optional[int] = None
    n_terms: int = 400


@dataclass
class RunConfig:
    """Everything a pipeline run depends on.

    ``scenario`` is a registry name or an inline dict: ``{"kind":
    "mechanical", "fourier_cos": [...], ...}``, ``{"kind": "tabulated",
    "values": [[[...]]], "v_max": ...}`` or ``{"kind": "matrix", "entries":
    [[...]]}`` for a raw one-period kernel.
    """

    scenario: Union[str, Dict[str, Any]] = "pendulum"
    grid: GridConfig = field(default_factory=GridConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    horizons: Horizons = field(default_factory=Horizons)
    outputs: str = "out"
    seeds: int = 0
    n_initial: int = 20

    def class_tol(self, dim: int) -> float:
        t = self.tolerances.class_tol
        return default_class_tol(self.tolerances.matrix_tol, dim) if t is None else t


_SECTIONS = {"grid": GridConfig, "tolerances": Tolerances, "horizons": Horizons}
_SCENARIO_KEYS = {
    "mechanical": {"kind", "fourier_cos", "fourier_sin", "time_modulation", "v_max"},
    "tabulated": {"kind", "values", "v_max"},
    "matrix": {"kind", "entries"},
}


def _fail(msg):
    raise ConfigError(msg)


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        _fail(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        _fail(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _int_field(v, name, lo):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        _fail(f"{name} must be an integer >= {lo}, got {v!r}")
    return v


def _pos_field(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not (v > 0 and math.isfinite(v)):
        _fail(f"{name} must be a positive finite number, got {v!r}")
    return float(v)


def _validate_scenario(sc):
    if isinstance(sc, str):
        if sc not in SCENARIO_NAMES:
            _fail(f"scenario must be one of {list(SCENARIO_NAMES)} or an inline object, got {sc!r}")
        return sc
    if not isinstance(sc, dict) or sc.get("kind") not in _SCENARIO_KEYS:
        _fail(f"inline scenario needs kind in {sorted(_SCENARIO_KEYS)}")
    _check_keys(sc, _SCENARIO_KEYS[sc["kind"]], "scenario")
    if "v_max" in sc and sc["v_max"] is not None:
        _pos_field(sc["v_max"], "scenario.v_max")
    if sc["kind"] == "mechanical":
        for key in ("fourier_cos", "fourier_sin"):
            vals = sc.get(key, [])
            if not isinstance(vals, list) or not all(isinstance(c, (int, float)) for c in vals):
                _fail(f"scenario.{key} must be a list of numbers")
        tm = sc.get("time_modulation")
        if tm is not None and (not isinstance(tm, list) or len(tm) != 2):
            _fail("scenario.time_modulation must be [amplitude, harmonic] or null")
    elif sc["kind"] == "tabulated":
        if "v_max" not in sc:
            _fail("scenario.v_max is required for tabulated Lagrangians")
        arr = np.asarray(sc.get("values"), dtype=float)
        if arr.ndim != 3:
            _fail("scenario.values must be a (n_t, n_x, n_v) nested list")
    else:
        arr = np.asarray(sc.get("entries"), dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            _fail("scenario.entries must be a square nested list")
    return sc


def config_from_dict(doc: dict) -> RunConfig:
    """Validate a parsed config document and fill defaults."""
    top = {f.name for f in dataclasses.fields(RunConfig)}
    _check_keys(doc, top, "config")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        sub = doc.get(name, {})
        _check_keys(sub, {f.name for f in dataclasses.fields(cls)}, name)
        kwargs[name] = cls(**sub)
    g, t, h = kwargs["grid"], kwargs["tolerances"], kwargs["horizons"]
    _int_field(g.n_x, "grid.n_x", 2)
    _int_field(g.n_sub, "grid.n_sub", 1)
    if g.v_max is not None:
        g.v_max = _pos_field(g.v_max, "grid.v_max")
    t.matrix_tol = _pos_field(t.matrix_tol, "tolerances.matrix_tol")
    t.bisection_tol = _pos_field(t.bisection_tol, "tolerances.bisection_tol")
    if t.class_tol is not None:
        t.class_tol = _pos_field(t.class_tol, "tolerances.class_tol")
    _int_field(h.n_max_powers, "horizons.n_max_powers", 2)
    _int_field(h.n_terms, "horizons.n_terms", 1)
    if h.omega_horizon is not None:
        _int_field(h.omega_horizon, "horizons.omega_horizon", 2)
    sc = _validate_scenario(doc.get("scenario", "pendulum"))
    outputs = doc.get("outputs", "out")
    if not isinstance(outputs, str):
        _fail("outputs must be a directory path string")
    seeds = _int_field(doc.get("seeds", 0), "seeds", 0)
    n_initial = _int_field(doc.get("n_initial", 20), "n_initial", 1)
    return RunConfig(sc, g, t, h, outputs, seeds, n_initial)


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file.

    Raises
    ------
    ConfigError
        On unreadable files, malformed JSON (with line context) or invalid fields.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from exc
    return config_from_dict(doc)


def config_to_dict(config: RunConfig) -> dict:
    return dataclasses.asdict(config)


def build_lagrangian(config: RunConfig) -> Optional[LagrangianSpec]:
    """Lagrangian for the configured scenario; ``None`` for raw matrices."""
    sc = config.scenario
    v_max = config.grid.v_max
    if isinstance(sc, str):
        return scenario(sc, v_max=v_max)
    if sc["kind"] == "matrix":
        return None
    v_max = sc.get("v_max") or v_max
    if sc["kind"] == "mechanical":
        tm = sc.get("time_modulation")
        pot = PotentialSpec(tuple(sc.get("fourier_cos", ())), tuple(sc.get("fourier_sin", ())),
                            tuple(tm) if tm is not None else None)
        return LagrangianSpec("mechanical", v_max or default_v_max(pot), potential=pot)
    return LagrangianSpec("tabulated", v_max, table=LagrangianTable(np.asarray(sc["values"], dtype=float)))


@dataclass
class PipelineResult:
    """In-memory outputs of a pipeline run (also written to disk)."""

    config: RunConfig
    kernel: Union[PeriodKernel, np.ndarray]
    grid: CircleGrid
    critical: Optional[CriticalValueReport] = None
    barriers: Optional[BarrierSet] = None
    proxy: Optional[MatherProxy] = None
    decomposition: Optional[AubryDecomposition] = None
    orbits: list = field(default_factory=list)
    recurrences: list = field(default_factory=list)
    roundtrips: list = field(default_factory=list)
    horizon: Optional[int] = None

    @property
    def matrix(self) -> np.ndarray:
        return self.kernel.matrix if isinstance(self.kernel, PeriodKernel) else self.kernel

    @property
    def normalized(self) -> np.ndarray:
        return normalize(self.matrix, self.critical.alpha0_karp)

    @property
    def certified_members(self):
        return [v for r in self.recurrences if r.found for v in r.members]


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except WeakKAMError as exc:
                exc.args = (f"[{name}] {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
                raise
        return inner
    return wrap


@_stage("kernel")
def _kernel_stage(config):
    sc = config.scenario
    if isinstance(sc, dict) and sc["kind"] == "matrix":
        A = np.asarray(sc["entries"], dtype=float)
        return A, CircleGrid(max(A.shape[0], 2))
    grid = CircleGrid(config.grid.n_x)
    return build_period_kernel(build_lagrangian(config), grid, TimeGrid(config.grid.n_sub)), grid


@_stage("critical-value")
def _critical_stage(res: PipelineResult):
    cfg = res.config
    res.critical = critical_value(res.matrix, n_terms=cfg.horizons.n_terms,
                                  bisection_tol=cfg.tolerances.bisection_tol, grid=res.grid)


@_stage("barriers")
def _barrier_stage(res: PipelineResult):
    cfg = res.config
    lcm = mather_proxy(res.matrix, cfg.tolerances.matrix_tol).lcm
    n_values = sorted({1, lcm})
    res.barriers, res.proxy = compute_barriers(res.matrix, res.critical.alpha0_karp, n_values=n_values,
                                               n_max=cfg.horizons.n_max_powers, tol=cfg.tolerances.matrix_tol)


@_stage("classes")
def _class_stage(res: PipelineResult):
    res.decomposition = decompose(res.barriers, res.proxy, res.config.class_tol(res.matrix.shape[0]))


def initial_data(config: RunConfig, dim: int, count: Optional[int] = None):
    """Deterministic random initial functions, uniform in ``[-1, 1]``."""
    rng = np.random.default_rng(config.seeds)
    return [rng.uniform(-1.0, 1.0, size=dim) for _ in range(config.n_initial if count is None else count)]


@_stage("evolve")
def _evolve_stage(res: PipelineResult):
    cfg = res.config
    B = res.normalized
    horizon = cfg.horizons.omega_horizon or certification_horizon(res.proxy.lcm, res.barriers.transient)
    res.horizon = horizon
    for u0 in initial_data(cfg, B.shape[0]):
        orbit, rec = certify(B, u0, horizon, tol=cfg.tolerances.matrix_tol)
        res.orbits.append(orbit)
        res.recurrences.append(rec)


@_stage("represent")
def _represent_stage(res: PipelineResult):
    kf = res.barriers.k_full
    reps = res.decomposition.static_classes.representatives
    res.roundtrips = [[roundtrip_check(v, kf, reps) for v in r.members] for r in res.recurrences]


def run_stages(config: RunConfig, upto: str = "represent") -> PipelineResult:
    """Run the pipeline in memory up to and including ``upto``."""
    if upto not in STAGES:
        raise ValueError(f"unknown stage {upto!r}")
    last = STAGES.index(upto)
    kernel, grid = _kernel_stage(config)
    res = PipelineResult(config, kernel, grid)
    steps = [_critical_stage, _barrier_stage, _class_stage, _evolve_stage, _represent_stage]
    for step in steps[:last]:
        step(res)
    return res


def write_bundle(res: PipelineResult, out_dir) -> Dict[str, str]:
    """Persist every computed artifact; returns name -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}

    def put(name, path):
        written[name] = str(path)

    io.write_matrix_csv(out / "kernel.csv", res.matrix)
    io.write_json(out / "kernel.json", kernel_to_json(
        res.matrix, n_x=res.grid.n_x, boundary_hits=getattr(res.kernel, "boundary_hits", 0)))
    put("kernel", out / "kernel.csv")
    if res.critical is not None:
        io.write_json(out / "critical_value.json", res.critical.to_dict())
        put("critical_value", out / "critical_value.json")
    if res.barriers is not None:
        io.write_matrix_csv(out / "h_inf.csv", res.barriers.h_inf)
        io.write_matrix_csv(out / "k_bar.csv", res.barriers.k)
        io.write_json(out / "barriers.json", res.barriers.to_dict())
        put("h_inf", out / "h_inf.csv")
        put("k_bar", out / "k_bar.csv")
    if res.decomposition is not None:
        io.write_json(out / "classes.json", res.decomposition.to_dict())
        put("classes", out / "classes.json")
    if res.orbits:
        odir = out / "orbits"
        odir.mkdir(exist_ok=True)
        for n, orbit in enumerate(res.orbits):
            write_orbit_csv(odir / f"orbit_{n:03d}.csv", orbit)
        put("orbits", odir)
    io.write_json(out / "report.json", summary(res))
    put("report", out / "report.json")
    return written


def write_orbit_csv(path, orbit: OrbitRecord) -> None:
    n = len(orbit.initial)
    header = ["period", "time_tag", "sup_increment"] + [f"u{i}" for i in range(n)]
    rows = []
    for k, snap in enumerate(orbit.snapshots):
        inc = orbit.sup_increments[k - 1] if k else 0.0
        rows.append([k, str(snap.time_tag), float(inc)] + [float(x) for x in snap.values])
    io.write_table_csv(path, header, rows)


def summary(res: PipelineResult) -> dict:
    cfg = res.config
    doc: Dict[str, Any] = {
        "config": config_to_dict(cfg),
        "dim": int(res.matrix.shape[0]),
        "boundary_hits": getattr(res.kernel, "boundary_hits", 0),
    }
    if res.critical is not None:
        c = res.critical
        doc["critical_value"] = {"alpha0_karp": c.alpha0_karp, "alpha0_subadditive": c.alpha0_subadditive,
                                 "alpha0_bisection": c.alpha0_bisection, "kappa1": c.kappa1}
    if res.barriers is not None:
        doc["barriers"] = {"approximate": res.barriers.approximate, "power_transient": res.barriers.transient,
                           "power_period": res.barriers.period, "mather_nodes": list(res.barriers.mather_nodes)}
    if res.decomposition is not None:
        d = res.decomposition
        doc["classes"] = {"n_static_classes": len(d.static_classes),
                          "representatives": list(d.static_classes.representatives),
                          "class_tol": d.static_classes.class_tol, "cyclicity": d.cyclicity,
                          "n_aubry": len(d.aubry_nodes), "n_mather": len(d.mather_nodes)}
    if res.recurrences:
        doc["orbits"] = {
            "horizon": res.horizon,
            "certified": sum(r.found for r in res.recurrences),
            "total": len(res.recurrences),
            "periods": [r.period for r in res.recurrences],
            "transients": [r.transient for r in res.recurrences],
            "min_return_distance": [r.min_return_distance for r in res.recurrences],
        }
    if res.roundtrips:
        flat = [x for row in res.roundtrips for x in row]
        doc["representation"] = {"max_roundtrip": max(flat) if flat else 0.0, "n_members": len(flat)}
    return doc


def run_pipeline(config: RunConfig, out_dir=None, upto: str = "represent") -> PipelineResult:
    """Run the configured stages and write the bundle to ``out_dir`` (default ``config.outputs``)."""
    res = run_stages(config, upto)
    write_bundle(res, out_dir if out_dir is not None else config.outputs)
    return res
