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
from typing import Callable, Optional

from gsortlab.config import get_cfg
from gsortlab.edge_partition import EdgePartition, build_partition, default_q
from gsortlab.errors import InternalInvariantError, InvalidArgument
from gsortlab.instance import CountingOracle, Direction, SortingInstance
from gsortlab.logging_utils import close_trace_logger, get_logger, get_trace_logger

log = get_logger("gsortlab.leveled_sort")

PHASES = ("find_first", "rebuild", "increment", "find")


# ==================== PARÁMETROS ====================

@dataclass
class SortParams:
    c: int = 8
    q: Optional[int] = None
    diagnostics: bool = False
    trace_path: Optional[str] = None

    def __post_init__(self):
        if self.c < 1:
            raise InvalidArgument(f"c debe ser >= 1 (c={self.c})")
        if self.q is not None and self.q < 1:
            raise InvalidArgument(f"q debe ser >= 1 (q={self.q})")

    @classmethod
    def from_cfg(cls, cfg: dict | None = None, **overrides) -> "SortParams":
        cfg = cfg or get_cfg()
        s = cfg["leveled_sort"]
        vals = {"c": int(s.get("c", 8)), "q": s.get("q"), "diagnostics": bool(s.get("diagnostics", False))}
        trace_dir = cfg["logging"].get("trace_dir")
        if s.get("trace") and trace_dir:
            vals["trace_path"] = os.path.join(trace_dir, "leveled_sort.jsonl")
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**vals)

    def resolve_q(self, n: int, p: float) -> int:
        return self.q if self.q is not None else default_q(n, p)


def rebuild_base(p: float) -> Optional[float]:
    """p^{-1}/16; None si p = 0 (sin reconstrucciones periódicas)."""
    if p <= 0:
        return None
    base = 1.0 / (16.0 * p)
    return base if math.isfinite(base) else None


def rebuild_level_for(ell: int, base: Optional[float], q: int) -> Optional[int]:
    """
    Nivel a reconstruir tras descubrir x_ell, o None.

    Se dispara cuando ell = floor(ell' · base) para algún entero ell' >= 1; el
    nivel es 1 + ν2(ell'), acotado por q. Si varios ell' caen en el mismo ell
    (base < 1) se toma el de mayor ν2.
    """
    if base is None or ell < 1:
        return None
    lo = max(1, math.ceil(ell / base) - 1)
    hi = math.ceil((ell + 1) / base) + 1
    cands = [k for k in range(lo, hi + 1) if math.floor(k * base) == ell]
    if not cands:
        return None
    lo, hi = min(cands), max(cands)
    for k in range(hi.bit_length(), -1, -1):
        m = (hi >> k) << k
        if m >= lo and m > 0:
            return min(1 + k, q)
    return min(1, q)


# ==================== ESTADO ====================

@dataclass
class Checkpoint:
    ell: int
    level: int
    target: float
    size: int
    anchors: int


@dataclass
class LevelState:
    """
    Niveles anidados L_1 ⊆ ... ⊆ L_{q+c}.

    low[v] es el nivel más bajo que contiene a v (1..q+1); por encima de q+1 los
    niveles contienen a todos los no descubiertos. Los descubiertos salen de
    `low`, así que no aparecen en ningún nivel.
    """
    q: int
    c: int
    low: dict[int, int]
    elim: dict[int, Optional[int]]
    discovered: list[int] = field(default_factory=list)
    buckets: list[set] = field(default_factory=list)
    blocked_by: dict[int, set] = field(default_factory=dict)
    rank_of: Optional[Callable[[int, int], int]] = None
    p: float = 0.0
    checkpoints: Optional[list[Checkpoint]] = None

    @classmethod
    def initial(cls, n: int, q: int, c: int) -> "LevelState":
        top = q + 1
        low = {v: top for v in range(n)}
        buckets = [set() for _ in range(top + 1)]
        buckets[top] = set(range(n))
        return cls(q=q, c=c, low=low, elim={v: None for v in range(n)}, buckets=buckets)

    @property
    def top(self) -> int:
        return self.q + 1

    def in_level(self, v: int, i: int) -> bool:
        lv = self.low.get(v)
        return lv is not None and lv <= i

    def level(self, i: int) -> set[int]:
        out: set[int] = set()
        for j in range(1, min(i, self.top) + 1):
            out |= self.buckets[j]
        return out

    def size(self, i: int) -> int:
        return sum(len(self.buckets[j]) for j in range(1, min(i, self.top) + 1))

    def set_low(self, v: int, j: int) -> None:
        old = self.low[v]
        if old != j:
            self.buckets[old].discard(v)
            self.buckets[j].add(v)
            self.low[v] = j

    def set_elim(self, v: int, u: Optional[int]) -> None:
        old = self.elim.get(v)
        if old is not None:
            self.blocked_by.get(old, set()).discard(v)
        self.elim[v] = u
        if u is not None:
            self.blocked_by.setdefault(u, set()).add(v)

    def remove(self, v: int) -> None:
        lv = self.low.pop(v, None)
        if lv is not None:
            self.buckets[lv].discard(v)
        self.set_elim(v, None)
        self.elim.pop(v, None)


def is_nested(state: LevelState) -> bool:
    """Buckets coherentes con low, descubiertos fuera de todo nivel, tamaños monótonos."""
    seen = set()
    for j, b in enumerate(state.buckets):
        for v in b:
            if state.low.get(v) != j or v in seen:
                return False
            seen.add(v)
    if seen != set(state.low):
        return False
    if any(v in state.low for v in state.discovered):
        return False
    sizes = [state.size(i) for i in range(1, state.q + state.c + 1)]
    return all(a <= b for a, b in zip(sizes, sizes[1:]))


# ==================== OPERACIONES ====================

def find_first(oracle: CountingOracle) -> int:
    """Mínimo real x_1 con a lo sumo n consultas (sin niveles ni E_i)."""
    inst = oracle.instance
    u, v = min(inst.edges)
    if oracle.query(u, v) is Direction.BEFORE:
        v0, later = u, {v}
    else:
        v0, later = v, {u}
    while True:
        nxt = next((w for w in inst.neighbors(v0) if w not in later), None)
        if nxt is None:
            return v0
        if oracle.query(v0, nxt) is Direction.BEFORE:
            later.add(nxt)
        else:
            later.add(v0)
            v0 = nxt


def _first_blocker(state: LevelState, partition: EdgePartition, oracle: CountingOracle,
                   v: int, i: int) -> Optional[int]:
    # Primer u (por id) con E_i(u, v) = 1, u en L_{i+c} y u ≺ v
    reach = i + state.c
    for u in partition.level_neighbors(i, v):
        if state.in_level(u, reach) and oracle.query(u, v) is Direction.BEFORE:
            return u
    return None


def _record_checkpoint(state: LevelState, i: int) -> None:
    if state.checkpoints is None or state.rank_of is None or state.p <= 0:
        return
    target = 2.0 ** i / state.p
    lo, hi = target / 16.0, 3.0 * target / 32.0
    members = state.level(i)
    ell = len(state.discovered)
    anchors = sum(1 for v in members if lo <= state.rank_of(v, ell) < hi)
    state.checkpoints.append(Checkpoint(ell, i, target, len(members), anchors))


def create_level(state: LevelState, partition: EdgePartition, oracle: CountingOracle,
                 i: int) -> LevelState:
    """Reconstruye L_i, L_{i-1}, ..., L_1 desde el nivel inmediatamente superior."""
    if not (1 <= i <= state.q):
        raise InvalidArgument(f"Nivel fuera de rango: {i} (q={state.q})")
    for j in range(i, 0, -1):
        for v in sorted(state.level(j + 1)):
            blocker = _first_blocker(state, partition, oracle, v, j)
            state.set_elim(v, blocker)
            state.set_low(v, j if blocker is None else j + 1)
        _record_checkpoint(state, j)
    return state


def increment(state: LevelState, partition: EdgePartition, oracle: CountingOracle,
              ell: int) -> LevelState:
    """Saca x_ell de los niveles y deja avanzar a los vértices que bloqueaba."""
    x = state.discovered[ell - 1]
    released = sorted(state.blocked_by.pop(x, set()))
    state.remove(x)
    for v in released:
        if v not in state.low:
            continue
        state.set_elim(v, None)
        i = state.low[v]
        while i > 1:
            blocker = _first_blocker(state, partition, oracle, v, i - 1)
            if blocker is not None:
                state.set_elim(v, blocker)
                break
            i -= 1
            state.set_low(v, i)
    return state


def find_next(state: LevelState, partition: EdgePartition, oracle: CountingOracle,
              ell: int) -> int:
    """
    Devuelve x_ell a partir de los candidatos en L_1 vecinos de x_{ell-1}.

    Recorre los niveles 1..q+c consultando todas las aristas entre L_i y los
    candidatos supervivientes; basta mirar los vértices que entran en cada
    nivel, los de niveles inferiores ya se consultaron.
    """
    inst = oracle.instance
    prev = state.discovered[ell - 2]
    cand = {v for v in inst.neighbors(prev) if state.low.get(v) == 1}
    if not cand:
        raise InternalInvariantError(f"Conjunto candidato vacío en ell={ell}")
    if len(cand) == 1:
        return next(iter(cand))
    for i in range(1, state.q + state.c + 1):
        if i > state.top:
            break
        for v in sorted(cand):
            for u in inst.neighbors(v):
                if state.low.get(u) == i and oracle.query(u, v) is Direction.BEFORE:
                    cand.discard(v)
                    break
            if len(cand) == 1:
                return next(iter(cand))
    raise InternalInvariantError(f"Quedan {len(cand)} candidatos tras barrer todos los niveles (ell={ell})")


def _eligible(checkpoints: list[Checkpoint], min_target: float, min_level: int) -> list[Checkpoint]:
    return [c for c in checkpoints if c.target >= min_target and c.level >= min_level]


def anchor_fraction(checkpoints: list[Checkpoint], min_target: float = 64.0,
                    min_level: int = 4) -> float:
    """Fracción de checkpoints con al menos s_i/128 anclas en L_i (nan si no hay)."""
    cps = _eligible(checkpoints, min_target, min_level)
    if not cps:
        return float("nan")
    return sum(1 for c in cps if c.anchors >= c.target / 128.0) / len(cps)


def level_size_constant(checkpoints: list[Checkpoint], min_target: float = 64.0,
                        min_level: int = 1) -> float:
    """K ajustado: max |L_i| / s_i sobre los checkpoints elegibles."""
    cps = _eligible(checkpoints, min_target, min_level)
    if not cps:
        return float("nan")
    return max(c.size / c.target for c in cps)


# ==================== ORDENACIÓN ====================

@dataclass
class SortResult:
    order: list[int]
    queries: int
    by_phase: dict[str, int]
    q: int
    c: int
    checkpoints: list[Checkpoint] = field(default_factory=list)
    wall_ms: float = 0.0


def _rank_fn(hidden_rank, n: int, mirrored: bool) -> Callable[[int, int], int]:
    # r(v): posición entre los no descubiertos de la pasada
    if mirrored:
        return lambda v, ell: n + 1 - hidden_rank[v] - ell
    return lambda v, ell: hidden_rank[v] - ell


def _recover(oracle, partition: EdgePartition, params: SortParams, count: int,
             rank_of: Callable[[int, int], int], checkpoints: Optional[list], trace,
             pass_name: str = "head") -> list[int]:
    inst = oracle.instance
    state = LevelState.initial(inst.n, partition.q, params.c)
    state.p, state.rank_of, state.checkpoints = inst.p, rank_of, checkpoints
    base = rebuild_base(inst.p)

    with oracle.charging("rebuild"):
        create_level(state, partition, oracle, partition.q)
    found: list[int] = []
    for ell in range(1, count + 1):
        if ell == 1:
            with oracle.charging("find_first"):
                x = find_first(oracle)
        else:
            with oracle.charging("find"):
                x = find_next(state, partition, oracle, ell)
        found.append(x)
        state.discovered.append(x)
        if trace is not None:
            trace.info("find", extra={"event": "find", "pass": pass_name, "ell": ell, "level": None,
                                      "queries": oracle.query_count})
        if ell == count:
            # Último de la pasada: no queda nada que avanzar
            state.remove(x)
            break
        with oracle.charging("increment"):
            increment(state, partition, oracle, ell)
        if trace is not None:
            trace.info("increment", extra={"event": "increment", "pass": pass_name, "ell": ell, "level": None,
                                           "queries": oracle.query_count})
        lvl = rebuild_level_for(ell, base, partition.q)
        if lvl is not None:
            with oracle.charging("rebuild"):
                create_level(state, partition, oracle, lvl)
            log.debug("Rebuild", extra={"ell": ell, "level": lvl, "queries": oracle.query_count})
            if trace is not None:
                trace.info("rebuild", extra={"event": "rebuild", "pass": pass_name, "ell": ell, "level": lvl,
                                             "queries": oracle.query_count})
    return found


def run_stochastic_sort(instance: SortingInstance, params: Optional[SortParams] = None,
                        seed: Optional[int] = None, oracle: Optional[CountingOracle] = None,
                        partition: Optional[EdgePartition] = None) -> SortResult:
    """
    Ordenación estocástica completa: primera mitad con los niveles, segunda mitad
    con la misma maquinaria sobre el oráculo invertido, y concatenación.
    """
    params = params or SortParams.from_cfg()
    oracle = oracle or CountingOracle(instance)
    seed = instance.seed if seed is None else seed
    t0 = time.perf_counter()
    if partition is None:
        partition = build_partition(instance, params.resolve_q(instance.n, instance.p), seed)

    n = instance.n
    hr = instance.hidden_rank
    checkpoints: Optional[list] = [] if params.diagnostics else None
    trace = get_trace_logger(params.trace_path) if params.trace_path else None
    try:
        head = _recover(oracle, partition, params, n // 2,
                        _rank_fn(hr, n, mirrored=False), checkpoints, trace)
        tail = _recover(oracle.reversed(), partition, params, n - n // 2,
                        _rank_fn(hr, n, mirrored=True), None, trace, "tail")
    finally:
        if trace is not None:
            close_trace_logger(trace)
    order = head + tail[::-1]
    wall_ms = (time.perf_counter() - t0) * 1000.0
    by_phase = {ph: int(oracle.by_phase.get(ph, 0)) for ph in PHASES}
    log.info("StochasticSort", extra={"n": n, "p": instance.p, "q": partition.q, "c": params.c,
                                      "queries": oracle.query_count, "by_phase": by_phase,
                                      "correct": order == instance.order})
    return SortResult(order=order, queries=oracle.query_count, by_phase=by_phase,
                      q=partition.q, c=params.c, checkpoints=checkpoints or [], wall_ms=wall_ms)


def stochastic_sort(instance: SortingInstance, params: Optional[SortParams] = None,
                    seed: Optional[int] = None) -> list[int]:
    return run_stochastic_sort(instance, params, seed).order


if __name__ == "__main__":
    import argparse
    from gsortlab.instance import generate_instance
    d = get_cfg()["instance"]
    ap = argparse.ArgumentParser(description="StochasticSort sobre una instancia aleatoria")
    ap.add_argument("--n", type=int, default=d["n"])
    ap.add_argument("--p", type=float, default=d["p"])
    ap.add_argument("--seed", type=int, default=d["seed"])
    ap.add_argument("--c", type=int, default=None)
    args = ap.parse_args()
    inst = generate_instance(args.n, args.p, args.seed)
    res = run_stochastic_sort(inst, SortParams.from_cfg(c=args.c))
    print(f"correct={res.order == inst.order} queries={res.queries} by_phase={res.by_phase}")
