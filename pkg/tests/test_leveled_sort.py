import itertools
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from gsortlab.edge_partition import EdgePartition, build_partition, default_q, membership
from gsortlab.errors import InternalInvariantError, InvalidArgument
from gsortlab.harness import evaluate_p
from gsortlab.instance import CountingOracle, generate_instance, instance_from_order
from gsortlab.leveled_sort import (PHASES, LevelState, SortParams, anchor_fraction, create_level, find_first,
                                   find_next, increment, is_nested, level_size_constant, rebuild_base,
                                   rebuild_level_for, run_stochastic_sort, stochastic_sort)


def reference_levels(inst, part, c, start_low, i):
    """Reconstrucción directa L_i..L_1 con los rangos ocultos en lugar del oráculo."""
    hr = inst.hidden_rank
    low = dict(start_low)
    for j in range(i, 0, -1):
        for v in sorted(u for u in low if low[u] <= j + 1):
            blocked = any(u in low and low[u] <= j + c and hr[u] < hr[v]
                          for u in part.level_neighbors(j, v))
            low[v] = j + 1 if blocked else j
    return low


def unblocked_are_low(state, inst, part):
    # Sin bloqueador en ∪_{j>=i} E_j entre los no descubiertos -> v ∈ L_i
    hr = inst.hidden_rank
    for v in state.low:
        for i in range(1, part.q + 1):
            blocked = any(u in state.low and hr[u] < hr[v]
                          and any(membership(part, j, u, v) for j in range(i, part.q + 1))
                          for u in inst.neighbors(v))
            if not blocked:
                assert state.in_level(v, i), (v, i)


def walk_head(inst, c=8, seed=None, on_state=None):
    """Primera mitad paso a paso; comprueba que cada x_ell es el esperado."""
    part = build_partition(inst, seed=seed)
    oracle = CountingOracle(inst)
    state = LevelState.initial(inst.n, part.q, c)
    create_level(state, part, oracle, part.q)
    if on_state:
        on_state("build", state, part, None)
    base = rebuild_base(inst.p)
    order = inst.order
    count = inst.n // 2
    for ell in range(1, count + 1):
        x = find_first(oracle) if ell == 1 else find_next(state, part, oracle, ell)
        assert x == order[ell - 1]
        state.discovered.append(x)
        if ell == count:
            break
        before = (dict(state.low), dict(state.elim))
        increment(state, part, oracle, ell)
        if on_state:
            on_state("increment", state, part, before)
        lvl = rebuild_level_for(ell, base, part.q)
        if lvl is not None:
            start = dict(state.low)
            create_level(state, part, oracle, lvl)
            if on_state:
                on_state(("rebuild", lvl), state, part, start)
    return state, oracle


# ==================== FIND FIRST ====================

def test_find_first_two_vertices():
    inst = instance_from_order([1, 0])
    oracle = CountingOracle(inst)
    assert find_first(oracle) == 1
    assert oracle.query_count == 1


def test_find_first_three_path():
    # a=1, b=2, c=0: el primer par (por id) es la arista (b, c)
    inst = instance_from_order([1, 2, 0])
    oracle = CountingOracle(inst)
    assert find_first(oracle) == 1
    assert oracle.query_count == 2


def test_find_first_at_most_n_queries():
    for s in range(1000):
        n = 2 + s % 39
        p = [0.0, 0.1, 0.5, 1.0][s % 4]
        inst = generate_instance(n, p, seed=s)
        oracle = CountingOracle(inst)
        assert find_first(oracle) == inst.order[0]
        assert oracle.query_count <= n


# ==================== NIVELES ====================

def test_rebuild_schedule():
    assert [rebuild_level_for(ell, 1.0, 3) for ell in (1, 2, 3, 4, 6, 8)] == [1, 2, 1, 3, 2, 3]
    assert rebuild_level_for(2, 2.5, 4) == 1
    assert rebuild_level_for(3, 2.5, 4) is None
    assert rebuild_level_for(5, 2.5, 4) == 2
    assert rebuild_level_for(10, 2.5, 4) == 3
    assert rebuild_level_for(1, 0.25, 5) == 3
    assert rebuild_level_for(1, 0.25, 2) == 2
    assert rebuild_level_for(4, None, 3) is None
    assert rebuild_base(0.0) is None
    assert rebuild_base(1 / 16) == pytest.approx(1.0)


def test_initial_state_is_nested():
    state = LevelState.initial(10, 3, 2)
    assert is_nested(state)
    assert state.level(4) == set(range(10))
    assert state.level(9) == set(range(10))
    assert state.size(3) == 0


@pytest.mark.parametrize("seed", range(5))
def test_create_level_matches_reference(seed):
    inst = generate_instance(8, 0.5, seed=seed)
    part = build_partition(inst, seed=seed)
    state = LevelState.initial(inst.n, part.q, 2)
    start = dict(state.low)
    create_level(state, part, CountingOracle(inst), part.q)
    assert state.low == reference_levels(inst, part, 2, start, part.q)
    assert is_nested(state)


def test_create_level_rejects_out_of_range():
    inst = generate_instance(8, 0.5, seed=0)
    part = build_partition(inst, seed=0)
    state = LevelState.initial(inst.n, part.q, 2)
    with pytest.raises(InvalidArgument):
        create_level(state, part, CountingOracle(inst), part.q + 1)


@pytest.mark.parametrize("n,p,seed", [(12, 0.3, 0), (12, 0.6, 1), (20, 0.25, 2), (24, 0.5, 3),
                                      (32, 0.2, 4), (40, 0.1, 5)])
def test_head_pass_invariants(n, p, seed):
    inst = generate_instance(n, p, seed=seed)
    c = 3

    def check(kind, state, part, before):
        assert is_nested(state)
        unblocked_are_low(state, inst, part)
        if isinstance(kind, tuple):
            assert state.low == reference_levels(inst, part, c, before, kind[1])
        elif kind == "increment":
            low0, elim0 = before
            x = state.discovered[-1]
            assert x not in state.low
            hr = inst.hidden_rank
            for v, lv in state.low.items():
                if elim0.get(v) != x:
                    assert lv == low0[v]
                    continue
                assert lv <= low0[v]
                if lv > 1:
                    assert any(state.in_level(u, lv - 1 + c) and hr[u] < hr[v]
                               for u in part.level_neighbors(lv - 1, v))

    walk_head(inst, c=c, seed=seed, on_state=check)


def test_increment_releases_to_level_one():
    # v bloqueado solo por x a nivel 2 y E_1 vacío: pasa a L_1 sin consultas
    inst = instance_from_order([0, 1])
    part = EdgePartition(q=2, alpha=2.0, p=0.5, membership={(0, 1): (0, 1)},
                         level_adj=({}, {0: (1,), 1: (0,)}))
    state = LevelState.initial(2, 2, 1)
    state.set_low(0, 1)
    state.set_low(1, 2)
    state.set_elim(1, 0)
    state.discovered.append(0)
    oracle = CountingOracle(inst)
    increment(state, part, oracle, 1)
    assert state.low == {1: 1}
    assert oracle.query_count == 0
    assert is_nested(state)


def test_increment_without_dependents_only_removes():
    inst = generate_instance(10, 0.4, seed=2)
    part = build_partition(inst, seed=2)
    state = LevelState.initial(inst.n, part.q, 2)
    x = inst.order[0]
    state.discovered.append(x)
    oracle = CountingOracle(inst)
    increment(state, part, oracle, 1)
    assert x not in state.low
    assert oracle.query_count == 0
    assert len(state.low) == inst.n - 1


def test_find_next_empty_candidates():
    inst = instance_from_order([0, 1, 2])
    part = build_partition(inst, seed=0)
    state = LevelState.initial(3, part.q, 2)
    state.discovered.append(0)
    state.remove(0)
    with pytest.raises(InternalInvariantError):
        find_next(state, part, CountingOracle(inst), 2)


# ==================== ORDENACIÓN COMPLETA ====================

def test_sort_two_vertices():
    for s in range(10):
        inst = generate_instance(2, 0.5, seed=s)
        res = run_stochastic_sort(inst)
        assert res.order == inst.order
        assert res.queries == 1


def test_sort_path_all_orders():
    for perm in itertools.permutations(range(4)):
        inst = instance_from_order(perm)
        for s in range(5):
            assert stochastic_sort(inst, seed=s) == list(perm)


@pytest.mark.parametrize("n", [8, 16, 64])
@pytest.mark.parametrize("p", ["2ln n/n", 0.05, 0.25, 0.75, 1.0])
def test_sort_recovers_hidden_order(n, p):
    pv = evaluate_p(p, n)
    for s in range(4):
        inst = generate_instance(n, pv, seed=s)
        res = run_stochastic_sort(inst)
        assert res.order == inst.order
        assert res.queries <= inst.m


def test_query_ledger_adds_up():
    inst = generate_instance(128, 0.1, seed=3)
    res = run_stochastic_sort(inst)
    assert set(res.by_phase) == set(PHASES)
    assert sum(res.by_phase.values()) == res.queries
    assert res.by_phase["find_first"] <= 2 * inst.n


def test_sort_accepts_external_oracle_and_partition():
    inst = generate_instance(48, 0.2, seed=6)
    oracle = CountingOracle(inst)
    part = build_partition(inst, q=3, seed=1)
    res = run_stochastic_sort(inst, SortParams(c=2), oracle=oracle, partition=part)
    assert res.order == inst.order
    assert res.q == 3 and res.c == 2
    assert oracle.query_count == res.queries == len(oracle.events)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.floats(0.0, 1.0), st.integers(0, 2**32), st.integers(1, 10))
def test_sort_is_correct_for_any_parameters(n, p, seed, c):
    inst = generate_instance(n, p, seed)
    assert stochastic_sort(inst, SortParams(c=c)) == inst.order


def test_params_validation_and_config():
    with pytest.raises(InvalidArgument):
        SortParams(c=0)
    with pytest.raises(InvalidArgument):
        SortParams(q=0)
    params = SortParams.from_cfg(c=3)
    assert params.c == 3 and params.q is None
    assert params.resolve_q(64, 0.25) == 4


def test_q_comes_from_leveled_sort_section():
    cfg = {"leveled_sort": {"c": 4, "q": 3}, "logging": {}}
    params = SortParams.from_cfg(cfg)
    assert params.resolve_q(64, 0.25) == 3
    inst = generate_instance(32, 0.4, seed=2)
    res = run_stochastic_sort(inst, params)
    assert res.q == 3 and res.order == inst.order
    assert build_partition(inst).q == default_q(32, 0.4)


def test_trace_file(tmp_path):
    path = tmp_path / "trace.jsonl"
    inst = generate_instance(40, 0.3, seed=1)
    run_stochastic_sort(inst, SortParams(trace_path=str(path)))
    events = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    finds = [e for e in events if e["event"] == "find"]
    assert len(finds) == inst.n
    assert {e["pass"] for e in finds} == {"head", "tail"}
    incs = [e for e in events if e["event"] == "increment"]
    assert len(incs) == inst.n - 2
    assert all(e["event"] in ("find", "increment", "rebuild") for e in events)
    assert [e["queries"] for e in events] == sorted(e["queries"] for e in events)


def test_diagnostics_checkpoints():
    n = 256
    inst = generate_instance(n, evaluate_p("8*ln(n)/n", n), seed=2)
    res = run_stochastic_sort(inst, SortParams(diagnostics=True))
    assert res.checkpoints
    for cp in res.checkpoints:
        assert 0 <= cp.anchors <= cp.size
        assert cp.target == pytest.approx(2 ** cp.level / inst.p)
        assert 0 <= cp.ell < n // 2
        assert 1 <= cp.level <= res.q
    frac = anchor_fraction(res.checkpoints, min_target=0.0, min_level=1)
    assert 0.0 <= frac <= 1.0
    assert level_size_constant(res.checkpoints, min_target=0.0) > 0
    assert math.isnan(anchor_fraction([], 64.0))


# ==================== BARRIDOS LARGOS ====================

@pytest.mark.slow
@pytest.mark.parametrize("n", [256, 512])
@pytest.mark.parametrize("p", ["2ln n/n", 0.05, 0.25, 0.75, 1.0])
def test_sort_recovers_hidden_order_large(n, p):
    pv = evaluate_p(p, n)
    for s in range(5):
        inst = generate_instance(n, pv, seed=100 + s)
        assert stochastic_sort(inst) == inst.order


@pytest.mark.slow
def test_anchor_fraction_large_levels():
    n = 4096
    inst = generate_instance(n, evaluate_p("8*ln(n)/n", n), seed=0)
    res = run_stochastic_sort(inst, SortParams(diagnostics=True))
    assert res.order == inst.order
    assert anchor_fraction(res.checkpoints, min_target=64.0, min_level=4) >= 0.99


@pytest.mark.slow
def test_level_size_constant_is_stable():
    ks = []
    for n in (512, 1024, 2048, 4096):
        inst = generate_instance(n, evaluate_p("8*ln(n)/n", n), seed=1)
        res = run_stochastic_sort(inst, SortParams(diagnostics=True))
        ks.append(level_size_constant(res.checkpoints, min_target=128.0))
    assert max(ks) / min(ks) <= 2.0
