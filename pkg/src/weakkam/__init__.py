"""Discrete weak-KAM toolkit on the circle.

Min-plus action kernels of time-periodic Tonelli Lagrangians, their critical
value, Peierls-type barriers, Aubry/Mather structure, static classes and the
Lax-Oleinik semigroup acting on grid functions.
"""

from .barriers import (
    AubryDecomposition,
    BarrierSet,
    CriticalValueReport,
    DominatedMap,
    aubry_set,
    check_domination,
    compute_barriers,
    critical_value,
    decompose,
    extremal_solutions,
    generalized_barrier,
    mather_proxy,
    n_peierls_barrier,
    n_pseudometric,
    normalize,
    peierls_barrier,
    pseudometric,
    static_classes,
)
from .kernel import (
    MinimizingPath,
    PeriodKernel,
    SubstepKernel,
    build_period_kernel,
    build_substep_kernel,
    compose_period_kernel,
    extract_minimizing_path,
    kernel_lipschitz_estimate,
)
from .model import (
    CircleGrid,
    LagrangianSpec,
    PotentialSpec,
    TimeGrid,
    builtin_scenarios,
    eval_lagrangian,
    legendre_transform,
    scenario,
)
from .semigroup import (
    OrbitRecord,
    apply_T,
    detect_recurrence,
    evolve,
    inverse_on_omega,
    isometry_check,
    recurrence_speed_check,
    represent,
    represent_n,
    roundtrip_check,
    uniqueness_check,
)
from .tropical import (
    CriticalGraph,
    PowerPeriodReport,
    critical_graph,
    detect_power_period,
    identity,
    min_mean_cycle,
    mp_closure,
    mp_power,
    mp_product,
)
from .values import ValueFunction

__version__ = "0.1.0"
