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
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Protocol

import networkx as nx

from gsortlab.config import get_cfg
from gsortlab.errors import InternalInvariantError, InvalidArgument
from gsortlab.instance import CountingOracle, Direction, Pair, SortingInstance
from gsortlab.logging_utils import close_trace_logger, get_logger, get_trace_logger
from gsortlab.poset import (DirectedKnowledge, McmcParams, average_ranks,
                            count_extensions, unique_extension)
from gsortlab.seeding import derive_seed, stream

log = get_logger("gsortlab.sparse_sort")


class PredictionSorter(Protocol):
    def __call__(self, instance: SortingInstance, predicted: set[Pair], w: int,
                 oracle: CountingOracle, knowledge: Optional[DirectedKnowledge] = None) -> set[Pair]: ...


@dataclass
class SparseParams:
    a_multiplier: float = 2.0
    backend: str = "fallback"
    rank_mode: str = "auto"
    exact_cap: int = 10
    rank_samples: int = 2000
    max_rounds: Optional[int] = None
    mcmc: McmcParams = field(default_factory=McmcParams)
    trace_path: Optional[str] = None

    def __post_init__(self):
        if self.a_multiplier <= 0:
            raise InvalidArgument("a_multiplier debe ser > 0")
        if self.rank_mode not in ("auto", "exact", "sampled"):
            raise InvalidArgument(f"rank_mode desconocido: {self.rank_mode}")
        if self.backend not in BACKENDS:
            raise InvalidArgument(f"Backend desconocido: {self.backend} (opciones: {sorted(BACKENDS)})")

    @classmethod
    def from_cfg(cls, cfg: dict | None = None, mcmc: Optional[McmcParams] = None,
                 **overrides) -> "SparseParams":
        cfg = cfg or get_cfg()
        s = cfg["sparse_sort"]
        vals = {
            "a_multiplier": float(s.get("a_multiplier", 2.0)),
            "backend": s.get("backend", "fallback"),
            "rank_mode": s.get("rank_mode", "auto"),
            "exact_cap": int(s.get("exact_cap", 10)),
            "rank_samples": int(s.get("rank_samples", 2000)),
            "max_rounds": s.get("max_rounds"),
            "mcmc": mcmc or McmcParams.from_cfg(cfg),
        }
        trace_dir = cfg["logging"].get("trace_dir")
        if s.get("trace") and trace_dir:
            vals["trace_path"] = os.path.join(trace_dir, "sparse_sort.jsonl")
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**vals)

    def a(self, n: int, m: int) -> int:
        return max(1, math.ceil(self.a_multiplier * math.ceil(math.sqrt(m / n))))

    def w(self, n: int, m: int) -> int:
        return max(1, math.ceil(math.sqrt(m / n) * math.log2(n)))

    def mode_for(self, n: int) -> str:
        if self.rank_mode == "auto":
            return "exact" if n <= self.exact_cap else "sampled"
        return self.rank_mode


def predict_orientation(avg_ranks: Mapping[int, float], edges: Iterable[Pair]) -> set[Pair]:
    """Orienta cada arista del menor al mayor S(v); empates por id de vértice."""
    out: set[Pair] = set()
    for u, v in edges:
        if (avg_ranks[u], u) <= (avg_ranks[v], v):
            out.add((u, v))
        else:
            out.add((v, u))
    return out


def fallback_prediction_sorter(instance: SortingInstance, predicted: set[Pair], w: int,
                               oracle: CountingOracle,
                               knowledge: Optional[DirectedKnowledge] = None) -> set[Pair]:
    """
    Sustituto correcto del ordenador con predicciones: consulta toda arista cuya
    dirección no se deduce ya de E'. Coste <= m consultas; ignora `predicted` y `w`.
    """
    out: set[Pair] = set()
    for u, v in sorted(instance.edges):
        det = knowledge.determined(u, v) if knowledge is not None else None
        if det is None:
            det = oracle.query(u, v) is Direction.BEFORE
        out.add((u, v) if det else (v, u))
    return out


BACKENDS: dict[str, Optional[PredictionSorter]] = {
    "fallback": fallback_prediction_sorter,
    "none": None,
}


def get_backend(name: str) -> Optional[PredictionSorter]:
    if name not in BACKENDS:
        raise InvalidArgument(f"Backend desconocido: {name} (opciones: {sorted(BACKENDS)})")
    return BACKENDS[name]


def order_from_orientation(n: int, orientation: set[Pair],
                           knowledge: Optional[DirectedKnowledge] = None) -> list[int]:
    """Orden total inducido por una orientación completa; exige camino hamiltoniano dirigido."""
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(orientation)
    if knowledge is not None:
        for u, v in knowledge.known:
            if not g.has_edge(u, v):
                raise InternalInvariantError(f"La orientación contradice E' en ({u}, {v})")
    if not nx.is_directed_acyclic_graph(g):
        raise InternalInvariantError("La orientación devuelta tiene ciclos")
    order = list(nx.lexicographical_topological_sort(g))
    for a, b in zip(order, order[1:]):
        if not g.has_edge(a, b):
            raise InternalInvariantError(f"La orientación no determina un orden total ({a}, {b})")
    return order


# ==================== ORDENACIÓN DISPERSA ====================

@dataclass
class RoundRecord:
    round: int
    sampled: int
    contradictions: int
    queries: int
    known: int
    extensions: Optional[int] = None


@dataclass
class SparseResult:
    order: list[int]
    queries: int
    sample_queries: int
    backend_queries: int
    a: int
    w: int
    rounds: list[RoundRecord] = field(default_factory=list)
    finished_by: str = "unique"
    wall_ms: float = 0.0


def run_sparse_sort(instance: SortingInstance, oracle: Optional[CountingOracle] = None,
                    params: Optional[SparseParams] = None,
                    backend: Optional[PredictionSorter | str] = None,
                    seed: Optional[int] = None) -> SparseResult:
    """
    Bucle de predicción por rangos medios.

    En cada ronda: si E' admite una sola extensión se devuelve; si no, se
    predicen las direcciones con S(v), se consultan `a` aristas al azar (con
    reemplazo) y cada contradicción entra en E'. Si todas coinciden se delega en
    el backend con presupuesto w.
    """
    params = params or SparseParams.from_cfg()
    oracle = oracle or CountingOracle(instance)
    seed = instance.seed if seed is None else seed
    if backend is None or isinstance(backend, str):
        backend_name = backend or params.backend
        backend = get_backend(backend_name)
    t0 = time.perf_counter()

    n, m = instance.n, instance.m
    a, w = params.a(n, m), params.w(n, m)
    mode = params.mode_for(n)
    edges = sorted(instance.edges)
    knowledge = DirectedKnowledge(n)
    rng = stream(seed, "sparse")
    rounds: list[RoundRecord] = []
    trace = get_trace_logger(params.trace_path) if params.trace_path else None
    finished_by = "unique"
    try:
        while not unique_extension(knowledge):
            r = len(rounds) + 1
            if params.max_rounds is not None and r > params.max_rounds:
                raise InternalInvariantError(f"Superado max_rounds={params.max_rounds}")
            ranks = average_ranks(knowledge, mode, samples=params.rank_samples,
                                  seed=derive_seed(seed, "ranks", r), params=params.mcmc,
                                  cap=params.exact_cap)
            predicted = predict_orientation(ranks, edges)
            pred_dir = {(min(e), max(e)): e for e in predicted}
            contradictions, agreeing = 0, []
            with oracle.charging("sample"):
                for idx in rng.integers(0, m, size=a):
                    u, v = pred_dir[edges[int(idx)]]
                    # Pares ya deducidos de E' no aportan nada
                    if knowledge.determined(u, v) is not None:
                        continue
                    if oracle.query(u, v) is Direction.BEFORE:
                        agreeing.append((u, v))
                    else:
                        knowledge.add(v, u)
                        contradictions += 1
            ext = count_extensions(knowledge) if n <= params.exact_cap else None
            rec = RoundRecord(r, a, contradictions, oracle.query_count, len(knowledge), ext)
            rounds.append(rec)
            log.debug("SparseRound", extra=rec.__dict__)
            if trace is not None:
                trace.info("round", extra={"event": "round", **rec.__dict__})
            if contradictions:
                continue
            if backend is None:
                for u, v in agreeing:
                    knowledge.add(u, v)
                continue
            with oracle.charging("backend"):
                orientation = backend(instance, predicted, w, oracle, knowledge)
            order = order_from_orientation(n, orientation, knowledge)
            finished_by = "backend"
            break
        else:
            order = knowledge.linear_extension()
    finally:
        if trace is not None:
            close_trace_logger(trace)

    res = SparseResult(
        order=order, queries=oracle.query_count,
        sample_queries=int(oracle.by_phase.get("sample", 0)),
        backend_queries=int(oracle.by_phase.get("backend", 0)),
        a=a, w=w, rounds=rounds, finished_by=finished_by,
        wall_ms=(time.perf_counter() - t0) * 1000.0,
    )
    log.info("SparseGeneralizedSort", extra={"n": n, "m": m, "a": a, "w": w, "rounds": len(rounds),
                                             "queries": res.queries, "finished_by": finished_by,
                                             "correct": order == instance.order})
    return res


def sparse_generalized_sort(instance: SortingInstance, oracle: Optional[CountingOracle] = None,
                            params: Optional[SparseParams] = None,
                            backend: Optional[PredictionSorter | str] = None,
                            seed: Optional[int] = None) -> list[int]:
    return run_sparse_sort(instance, oracle, params, backend, seed).order


def round_bound(n: int) -> int:
    """ceil(log_{e/(e-1)} n!): rondas máximas si cada una reduce |Σ| en (1 - 1/e)."""
    return math.ceil(math.lgamma(n + 1) / math.log(math.e / (math.e - 1)))


if __name__ == "__main__":
    import argparse
    from gsortlab.fixtures import FIXTURES
    ap = argparse.ArgumentParser(description="SparseGeneralizedSort sobre un fixture")
    ap.add_argument("--kind", choices=sorted(FIXTURES), default="planted_random")
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--backend", choices=sorted(BACKENDS), default=None)
    args = ap.parse_args()
    if args.kind == "planted_random":
        inst = FIXTURES[args.kind](args.n, 0.3, args.seed)
    elif args.kind == "two_cliques_joined":
        inst = FIXTURES[args.kind](max(2, args.n // 2 - 1), 2, args.seed)
    else:
        inst = FIXTURES[args.kind](args.n, seed=args.seed)
    res = run_sparse_sort(inst, backend=args.backend)
    print(f"correct={res.order == inst.order} queries={res.queries} rounds={len(res.rounds)} "
          f"finished_by={res.finished_by}")
