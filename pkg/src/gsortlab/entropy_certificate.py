from __future__ import annotations

# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

import math
from typing import Iterable, Optional, Union

import networkx as nx
from pydantic import BaseModel
from scipy.special import entr

from gsortlab.config import get_cfg
from gsortlab.errors import AuditFailure, CapacityError, InvalidArgument
from gsortlab.instance import CountingOracle, Direction, MirroredOracle, SortingInstance
from gsortlab.logging_utils import get_logger

log = get_logger("gsortlab.entropy_certificate")

GraphLike = Union[SortingInstance, nx.Graph]


# ==================== MODELOS ====================

class TraceEvent(BaseModel):
    u: int
    v: int
    answer: Direction
    k_after: Optional[int] = None


class QueryTrace(BaseModel):
    events: list[TraceEvent]
    claimed: list[int] = []


class AuditStep(BaseModel):
    pair: tuple[int, int]
    a: int
    b: int
    K_after: int
    bits: float


class AuditReport(BaseModel):
    K0: int
    steps: list[AuditStep]
    total_queries: int
    log2_K0: float
    verdict: str
    claimed_matches: Optional[bool] = None


# ==================== CONTEO ====================

def _graph(graph: GraphLike) -> nx.Graph:
    return graph.graph if isinstance(graph, SortingInstance) else graph


def _prepare(graph: GraphLike, known: Iterable[tuple[int, int]], cap: Optional[int]):
    g = _graph(graph)
    n = g.number_of_nodes()
    cap = int(cap if cap is not None else get_cfg()["entropy"].get("cap", 10))
    if n > cap:
        raise CapacityError(f"n={n} supera el tope de conteo {cap}")
    if sorted(g.nodes) != list(range(n)):
        raise InvalidArgument("Los vértices deben ser 0..n-1")
    adj = [0] * n
    for u, v in g.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    pred = [0] * n
    for u, v in known:
        pred[v] |= 1 << u
    return n, adj, pred


def count_consistent(graph: GraphLike, known: Iterable[tuple[int, int]] = (),
                     cap: Optional[int] = None) -> int:
    """
    Permutaciones que recorren un camino hamiltoniano de G y respetan E'.

    DP sobre (conjunto colocado, último vértice).
    """
    n, adj, pred = _prepare(graph, list(known), cap)
    full = (1 << n) - 1
    dp = [[0] * n for _ in range(full + 1)]
    for v in range(n):
        if pred[v] == 0:
            dp[1 << v][v] = 1
    for s in range(1, full + 1):
        row = dp[s]
        for last in range(n):
            ways = row[last]
            if not ways:
                continue
            cand = adj[last] & ~s
            while cand:
                bit = cand & -cand
                cand ^= bit
                v = bit.bit_length() - 1
                if pred[v] & s == pred[v]:
                    dp[s | bit][v] += ways
    return sum(dp[full])


def hamiltonian_path_count(graph: GraphLike, cap: Optional[int] = None) -> int:
    """Caminos hamiltonianos no dirigidos (cada uno se cuenta en dos sentidos arriba)."""
    return count_consistent(graph, (), cap) // 2


def consistent_permutations(graph: GraphLike, known: Iterable[tuple[int, int]] = (),
                            cap: Optional[int] = None) -> list[list[int]]:
    n, adj, pred = _prepare(graph, list(known), cap)
    out: list[list[int]] = []

    def extend(seq: list[int], placed: int) -> None:
        if len(seq) == n:
            out.append(list(seq))
            return
        cand = adj[seq[-1]] & ~placed if seq else ((1 << n) - 1)
        for v in range(n):
            bit = 1 << v
            if cand & bit and pred[v] & placed == pred[v]:
                seq.append(v)
                extend(seq, placed | bit)
                seq.pop()

    extend([], 0)
    return out


def binary_entropy(x: float) -> float:
    """H2(x) en bits, con 0·lg 0 = 0."""
    if not (0.0 <= x <= 1.0):
        raise InvalidArgument(f"x fuera de [0, 1] (x={x})")
    return float((entr(x) + entr(1.0 - x)) / math.log(2.0))


def path_count_estimate(n: int, p: float) -> float:
    """log2(n! · p^n): orden de magnitud de los caminos hamiltonianos de G(n, p)."""
    if n < 1 or not (0.0 < p <= 1.0):
        raise InvalidArgument(f"Parámetros inválidos (n={n}, p={p})")
    return (math.lgamma(n + 1) + n * math.log(p)) / math.log(2.0)


# ==================== AUDITORÍA ====================

def trace_from_oracle(oracle: Union[CountingOracle, MirroredOracle],
                      claimed: Iterable[int] = ()) -> QueryTrace:
    base = oracle.base if isinstance(oracle, MirroredOracle) else oracle
    events = [TraceEvent(u=u, v=v, answer=d) for u, v, d in base.events]
    return QueryTrace(events=events, claimed=list(claimed))


def audit_trace(graph: GraphLike, trace: QueryTrace, cap: Optional[int] = None) -> AuditReport:
    """
    Reproduce la traza contando K_t tras cada respuesta.

    Cada paso parte K_t en a_t (u antes que v) y b_t (v antes que u); K_{t+1}
    debe ser uno de los dos. Al final K_T = 1 sii la permutación declarada queda
    determinada.
    """
    g = _graph(graph)
    known: list[tuple[int, int]] = []
    dg = nx.DiGraph()
    dg.add_nodes_from(g.nodes)
    k_t = count_consistent(g, known, cap)
    k0 = k_t
    if k0 == 0:
        raise AuditFailure("el grafo no tiene caminos hamiltonianos", step=0)
    steps: list[AuditStep] = []
    for t, ev in enumerate(trace.events):
        u, v = ev.u, ev.v
        if u == v or not g.has_edge(u, v):
            raise AuditFailure(f"({u}, {v}) no es una arista", step=t)
        first, second = (u, v) if ev.answer is Direction.BEFORE else (v, u)
        if dg.has_node(second) and nx.has_path(dg, second, first):
            raise AuditFailure(f"la respuesta ({first} antes que {second}) cierra un ciclo", step=t)
        a = count_consistent(g, known + [(u, v)], cap)
        b = count_consistent(g, known + [(v, u)], cap)
        if a + b != k_t:
            raise AuditFailure(f"a + b = {a + b} != K_t = {k_t}", step=t)
        k_next = a if ev.answer is Direction.BEFORE else b
        if ev.k_after is not None and ev.k_after not in (a, b):
            raise AuditFailure(f"K declarado {ev.k_after} fuera de {{{a}, {b}}}", step=t)
        if ev.k_after is not None and ev.k_after != k_next:
            raise AuditFailure(f"K declarado {ev.k_after} != {k_next}", step=t)
        if k_next == 0:
            raise AuditFailure("ninguna permutación consistente con las respuestas", step=t)
        known.append((first, second))
        dg.add_edge(first, second)
        bits = math.log2(k_t) - math.log2(k_next)
        steps.append(AuditStep(pair=(u, v), a=a, b=b, K_after=k_next, bits=bits))
        k_t = k_next

    verdict = "determined" if k_t == 1 else "undetermined"
    matches: Optional[bool] = None
    if trace.claimed:
        if k_t == 1:
            (only,) = consistent_permutations(g, known, cap)
            matches = only == list(trace.claimed)
            if not matches:
                raise AuditFailure("la permutación declarada no es la única consistente",
                                   step=len(trace.events))
        else:
            matches = False
    report = AuditReport(K0=k0, steps=steps, total_queries=len(trace.events),
                         log2_K0=math.log2(k0), verdict=verdict, claimed_matches=matches)
    log.debug("Audit", extra={"K0": k0, "queries": report.total_queries, "verdict": verdict})
    return report


if __name__ == "__main__":
    import argparse
    from gsortlab.instance import generate_instance
    from gsortlab.leveled_sort import run_stochastic_sort
    ap = argparse.ArgumentParser(description="Audita una ejecución de StochasticSort")
    ap.add_argument("--n", type=int, default=7)
    ap.add_argument("--p", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    inst = generate_instance(args.n, args.p, args.seed)
    oracle = CountingOracle(inst)
    res = run_stochastic_sort(inst, oracle=oracle)
    print(audit_trace(inst, trace_from_oracle(oracle, res.order)).model_dump_json(indent=2))
