import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import connected_matrices, decode, strongly_connected, tropical_matrices
from weakkam.errors import AcyclicError, DimensionMismatch, DivergenceError, NegativeCycleError
from weakkam.tropical import (
    INF, critical_graph, detect_power_period, identity, is_strongly_connected, max_abs_diff,
    mp_closure, mp_power, mp_product, mp_vecmat, min_mean_cycle, tropical_close,
)

GOLDEN = np.array([[4.0, 1.0], [2.0, 3.0]])
GOLDEN_B = np.array([[2.5, -0.5], [0.5, 1.5]])


def as_lists(M):
    return [[float(x) for x in row] for row in np.asarray(M)]


# products and powers

def test_identity_is_neutral():
    B = np.array([[1.0, INF], [-2.0, 3.0]])
    assert np.array_equal(mp_product(identity(2), B), B)
    assert np.array_equal(mp_product(B, identity(2)), B)


def test_small_product():
    A = np.array([[0.0, 3.0], [1.0, 0.0]])
    assert np.array_equal(mp_product(A, A), A)


def test_unreachable_row_is_absorbing():
    A = np.array([[INF, INF], [1.0, 0.0]])
    assert np.all(np.isinf(mp_product(A, GOLDEN)[0]))


def test_product_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mp_product(np.zeros((2, 3)), np.zeros((2, 3)))


def test_golden_square():
    assert np.array_equal(mp_power(GOLDEN, 1), GOLDEN)
    assert np.array_equal(mp_power(GOLDEN, 2), [[3.0, 4.0], [5.0, 3.0]])
    for n in (1, 5, 13):
        assert np.array_equal(mp_power(identity(3), n), identity(3))


def test_vecmat_matches_row_product():
    u = np.array([0.5, -1.0])
    assert np.array_equal(mp_vecmat(u, GOLDEN), mp_product(u[None, :], GOLDEN)[0])


@given(tropical_matrices(n_min=2, n_max=8), st.data())
def test_associativity(A, data):
    n = A.shape[0]
    B = data.draw(arrays(np.float64, (n, n), elements=st.integers(-10, 10).map(float)))
    C = data.draw(arrays(np.float64, (n, n), elements=st.integers(-10, 10).map(float)))
    left = mp_product(mp_product(A, B), C)
    right = mp_product(A, mp_product(B, C))
    assert tropical_close(left, right, 1e-12)


def test_associativity_random_8x8():
    rng = np.random.default_rng(5)
    for _ in range(20):
        A, B, C = (rng.normal(size=(8, 8)) for _ in range(3))
        assert max_abs_diff(mp_product(mp_product(A, B), C), mp_product(A, mp_product(B, C))) <= 1e-12


@given(tropical_matrices(n_max=6), st.integers(1, 40))
def test_squaring_agrees_with_iteration(A, n):
    assert tropical_close(mp_power(A, n, "squaring"), mp_power(A, n, "iterate"), 1e-12)


@given(tropical_matrices(n_max=4), st.integers(1, 6))
def test_power_against_brute_force(A, n):
    assert tropical_close(mp_power(A, n), np.array(oracles.power(as_lists(A), n)), 1e-12)


def test_power_growth_rate():
    rng = np.random.default_rng(11)
    for _ in range(10):
        A = rng.uniform(0.0, 1.0, size=(8, 8))
        A[rng.random((8, 8)) < 0.4] = INF
        A[np.arange(8), (np.arange(8) + 1) % 8] = rng.uniform(0.0, 1.0, 8)
        lam, _ = min_mean_cycle(A)
        P = mp_power(A, 200)
        fin = P[np.isfinite(P)]
        assert abs(fin.max() / 200 - lam) <= 0.05
        assert abs(fin.min() / 200 - lam) <= 0.05


# closure

def test_closure_without_improvement():
    A = np.array([[0.0, 1.0], [2.0, 0.0]])
    assert np.array_equal(mp_closure(A), A)
    A = np.array([[0.0, 5.0], [1.0, 0.0]])
    assert np.array_equal(mp_closure(A), A)


def test_closure_negative_cycle():
    A = np.array([[0.0, 1.0], [1.0, -1.0]])
    with pytest.raises(NegativeCycleError):
        mp_closure(A)


def _nonnegative_cycles(A):
    try:
        lam, _ = min_mean_cycle(A)
    except AcyclicError:
        return A
    return np.where(np.isfinite(A), A - min(lam, 0.0), INF)


@given(tropical_matrices(n_max=5))
def test_closure_properties(A):
    A = _nonnegative_cycles(A)
    C = mp_closure(A)
    assert np.all(C <= A + 1e-12)
    assert tropical_close(mp_closure(C), C, 1e-9)
    assert tropical_close(C, np.array(oracles.closure(as_lists(A))), 1e-9)


# minimum mean cycle and critical graph

def test_golden_min_mean_cycle():
    lam, witness = min_mean_cycle(GOLDEN)
    assert lam == 1.5
    assert sorted(witness) == [0, 1]
    assert min_mean_cycle(identity(3))[0] == 0.0


def test_self_loop_only():
    A = np.full((5, 5), INF)
    A[3, 3] = -2.0
    assert min_mean_cycle(A) == (-2.0, [3])
    g = critical_graph(A, -2.0)
    assert g.nodes == (3,) and g.cyclicity == 1


def test_acyclic_matrix():
    A = np.array([[INF, 1.0], [INF, INF]])
    with pytest.raises(AcyclicError):
        min_mean_cycle(A)


def test_golden_critical_graph():
    g = critical_graph(GOLDEN, 1.5)
    assert g.nodes == (0, 1)
    assert g.arcs == frozenset({(0, 1), (1, 0)})
    assert g.cycle_lengths == {0: 2, 1: 2}
    assert g.cyclicity == 2 and g.uniform_cycle_length == 2


def test_identity_critical_graph():
    g = critical_graph(identity(4), 0.0)
    assert g.nodes == (0, 1, 2, 3)
    assert g.cycle_lengths == {i: 1 for i in range(4)} and g.cyclicity == 1


def test_frozen_random_kernels(frozen):
    for case in frozen["random_kernels"]:
        A = decode(case["A"])
        lam, witness = min_mean_cycle(A)
        assert lam == pytest.approx(case["min_cycle_mean"], abs=1e-9)
        assert oracles.cycle_mean(as_lists(A), tuple(witness)) == pytest.approx(lam, abs=1e-9)
        assert list(critical_graph(A, lam).nodes) == case["critical_nodes"]
        B = A - lam
        assert tropical_close(mp_closure(B), decode(case["closure_normalized"]), 1e-9)
        assert tropical_close(mp_power(A, 3), decode(case["A_cubed"]), 1e-12)
        rep = detect_power_period(B)
        assert [rep.transient, rep.period] == case["power_period"]


@given(connected_matrices(n_max=6))
def test_critical_graph_against_enumeration(A):
    lam, witness = min_mean_cycle(A)
    assert lam == pytest.approx(oracles.min_cycle_mean(as_lists(A)), abs=1e-9)
    g = critical_graph(A, lam)
    assert list(g.nodes) == oracles.critical_nodes(as_lists(A))
    for i in g.nodes:
        assert any(a == i for a, _ in g.arcs) and any(b == i for _, b in g.arcs)


# eventual periodicity

def test_golden_power_period():
    rep = detect_power_period(GOLDEN_B)
    assert rep.found and (rep.transient, rep.period) == (2, 2)
    assert np.array_equal(rep.cycle_matrices[0], [[0.0, 1.0], [2.0, 0.0]])
    assert np.array_equal(rep.cycle_matrices[1], [[1.5, -0.5], [0.5, 1.5]])
    assert np.array_equal(rep.eventual_min, [[0.0, -0.5], [0.5, 0.0]])


def test_identity_power_period():
    rep = detect_power_period(identity(3))
    assert (rep.transient, rep.period) == (1, 1)


def test_unnormalized_powers_diverge():
    with pytest.raises(DivergenceError):
        detect_power_period(np.array([[0.1, 1.0], [1.0, 0.1]]))


def test_not_found_falls_back_to_running_min():
    rep = detect_power_period(GOLDEN_B, n_max=2)
    assert not rep.found and rep.running_min is not None


def test_power_periods_against_brute_force():
    rng = np.random.default_rng(20240602)
    for _ in range(50):
        A = strongly_connected(rng, 6)
        assert is_strongly_connected(A)
        lam, _ = min_mean_cycle(A)
        B = A - lam
        rep = detect_power_period(B)
        assert rep.found
        assert (rep.transient, rep.period) == oracles.power_period(as_lists(B))
        assert critical_graph(A, lam).cyclicity % rep.period == 0


@given(connected_matrices(n_max=7))
def test_period_divides_cyclicity(A):
    lam, _ = min_mean_cycle(A)
    rep = detect_power_period(A - lam)
    assert rep.found
    assert critical_graph(A, lam).cyclicity % rep.period == 0
    # the cycle repeats exactly
    nxt = mp_product(rep.cycle_matrices[-1], A - lam)
    assert tropical_close(nxt, rep.cycle_matrices[0], 1e-9)


def test_strong_connectivity():
    assert is_strongly_connected(GOLDEN)
    assert not is_strongly_connected(np.array([[0.0, 1.0], [INF, 0.0]]))
    assert math.isinf(INF)
