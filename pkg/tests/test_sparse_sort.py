import math

import pytest

from gsortlab.errors import InternalInvariantError, InvalidArgument
from gsortlab.fixtures import cycle_with_chords, path, planted_random, two_cliques_joined
from gsortlab.instance import CountingOracle, generate_instance, instance_from_order
from gsortlab.poset import DirectedKnowledge, McmcParams
from gsortlab.sparse_sort import (SparseParams, fallback_prediction_sorter, get_backend, order_from_orientation,
                                  predict_orientation, round_bound, run_sparse_sort, sparse_generalized_sort)


def quick_params(**kw):
    # Cadenas cortas: suficientes para n <= 64 en tests
    mcmc = McmcParams(burn_in=400, thin=16, chains=16)
    return SparseParams(mcmc=mcmc, rank_samples=64, **kw)


def true_orientation(inst):
    hr = inst.hidden_rank
    return {(u, v) if hr[u] < hr[v] else (v, u) for u, v in inst.edges}


# ==================== PREDICCIÓN ====================

def test_predict_orientation_follows_ranks():
    s = {0: 4 / 3, 1: 8 / 3, 2: 2.0}
    assert predict_orientation(s, [(0, 2), (1, 2)]) == {(0, 2), (2, 1)}


def test_predict_orientation_ties_by_id():
    s = {v: 2.5 for v in range(4)}
    assert predict_orientation(s, [(3, 1), (0, 2)]) == {(1, 3), (0, 2)}


def test_predict_orientation_on_chain_is_exact():
    inst = generate_instance(6, 0.5, seed=1)
    ranks = {v: float(r) for v, r in enumerate(inst.hidden_rank)}
    assert predict_orientation(ranks, inst.edges) == true_orientation(inst)


# ==================== BACKEND ====================

def test_fallback_uses_known_edges_for_free():
    inst = generate_instance(6, 1.0, seed=2)
    kn = DirectedKnowledge(6)
    order = inst.order
    for a, b in zip(order, order[1:]):
        kn.add(a, b)
    oracle = CountingOracle(inst)
    out = fallback_prediction_sorter(inst, set(), 1, oracle, kn)
    assert oracle.query_count == 0
    assert out == true_orientation(inst)


def test_fallback_on_path_queries_each_edge_once():
    inst = path(9, seed=3)
    oracle = CountingOracle(inst)
    out = fallback_prediction_sorter(inst, set(), 1, oracle, DirectedKnowledge(9))
    assert oracle.query_count <= inst.n - 1
    assert order_from_orientation(inst.n, out) == inst.order


def test_order_from_orientation_rejects_bad_orientations():
    with pytest.raises(InternalInvariantError):
        order_from_orientation(3, {(0, 1), (1, 2), (2, 0)})
    with pytest.raises(InternalInvariantError):
        order_from_orientation(3, {(0, 1), (0, 2)})
    with pytest.raises(InternalInvariantError):
        order_from_orientation(3, {(0, 1), (1, 2)}, DirectedKnowledge(3, [(1, 0)]))


def test_backend_registry():
    assert get_backend("fallback") is fallback_prediction_sorter
    assert get_backend("none") is None
    with pytest.raises(InvalidArgument):
        get_backend("oracle")
    with pytest.raises(InvalidArgument):
        SparseParams(backend="oracle")
    with pytest.raises(InvalidArgument):
        SparseParams(rank_mode="median")


def test_sample_sizes():
    params = SparseParams()
    assert params.a(16, 64) == 4
    assert params.w(16, 64) == 8
    assert params.a(10, 9) == 2
    assert params.mode_for(10) == "exact"
    assert params.mode_for(11) == "sampled"


# ==================== ORDENACIÓN DISPERSA ====================

def test_sorts_path_fixture():
    inst = path(6, seed=0)
    assert sparse_generalized_sort(inst, params=quick_params()) == inst.order


@pytest.mark.parametrize("seed", range(10))
def test_sorts_complete_graph(seed):
    inst = generate_instance(6, 1.0, seed=seed)
    res = run_sparse_sort(inst, params=quick_params())
    assert res.order == inst.order
    assert res.queries <= inst.m


@pytest.mark.parametrize("seed", range(6))
def test_rounds_shrink_compatible_set(seed):
    inst = generate_instance(8, 0.4, seed=seed)
    res = run_sparse_sort(inst, params=quick_params(backend="none"))
    assert res.order == inst.order
    assert res.finished_by == "unique"
    prev_ext, prev_known = math.factorial(inst.n), 0
    for rec in res.rounds:
        if rec.contradictions:
            assert rec.extensions <= (1 - 1 / math.e) * prev_ext + 1e-9
            assert rec.known > prev_known
        prev_ext, prev_known = rec.extensions, rec.known
    with_contradictions = sum(1 for r in res.rounds if r.contradictions)
    assert with_contradictions <= round_bound(inst.n)


def test_sample_phase_accounting():
    inst = planted_random(10, 0.5, seed=4)
    oracle = CountingOracle(inst)
    res = run_sparse_sort(inst, oracle=oracle, params=quick_params())
    assert res.order == inst.order
    assert res.sample_queries <= len(res.rounds) * res.a
    assert res.sample_queries + res.backend_queries == res.queries == oracle.query_count


def test_backend_none_finishes_by_uniqueness():
    inst = cycle_with_chords(7, chords=2, seed=1)
    res = run_sparse_sort(inst, params=quick_params(), backend="none")
    assert res.order == inst.order
    assert res.backend_queries == 0


def test_inconsistent_backend_is_detected():
    # Orden real 0 < 1 < 2 y rangos empatados: la predicción inicial acierta
    inst = instance_from_order([0, 1, 2], [(0, 2)])

    def cyclic(instance, predicted, w, oracle, knowledge=None):
        return {(0, 1), (1, 2), (2, 0)}

    with pytest.raises(InternalInvariantError):
        run_sparse_sort(inst, params=quick_params(), backend=cyclic)


def test_max_rounds_overflow():
    inst = path(10, seed=2)
    with pytest.raises(InternalInvariantError):
        run_sparse_sort(inst, params=quick_params(backend="none", max_rounds=1))


def test_sampled_rank_mode():
    inst = two_cliques_joined(3, bridge=1, seed=5)
    res = run_sparse_sort(inst, params=quick_params(rank_mode="sampled"))
    assert res.order == inst.order


def test_same_seed_same_run():
    inst = planted_random(9, 0.3, seed=8)
    a = run_sparse_sort(inst, params=quick_params())
    b = run_sparse_sort(inst, params=quick_params())
    assert a.queries == b.queries
    assert [r.contradictions for r in a.rounds] == [r.contradictions for r in b.rounds]


def test_round_bound():
    assert round_bound(1) == 0
    assert round_bound(3) == math.ceil(math.log(6) / math.log(math.e / (math.e - 1)))


@pytest.mark.slow
def test_sparse_exact_on_fixture_mix():
    cases = []
    for s in range(25):
        cases.append(planted_random([8, 12, 16, 32][s % 4], 0.2, seed=s))
        cases.append(path([8, 16, 32, 64][s % 4], seed=s))
        cases.append(cycle_with_chords([8, 16, 24, 48][s % 4], chords=3, seed=s))
        cases.append(two_cliques_joined([3, 4, 6, 8][s % 4], bridge=s % 3, seed=s))
    for inst in cases:
        res = run_sparse_sort(inst, params=quick_params())
        assert res.order == inst.order
