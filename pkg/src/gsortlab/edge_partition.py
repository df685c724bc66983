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
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from pydantic import BaseModel
from scipy import optimize

from gsortlab.config import get_cfg
from gsortlab.errors import DegenerateParameter, InvalidArgument
from gsortlab.instance import Pair, SortingInstance, pair_key
from gsortlab.logging_utils import get_logger
from gsortlab.seeding import stream

log = get_logger("gsortlab.edge_partition")


def _residual(alpha: float, p: float, q: int) -> float:
    prod = 1.0
    for i in range(1, q + 1):
        prod *= 1.0 - alpha * p / 2.0 ** i
    return prod - (1.0 - p)


def solve_alpha(p: float, q: int, tol: float = 1e-12) -> float:
    """
    α en [1, 2] tal que prod_{i=1..q} (1 - α·p/2^i) = 1 - p.

    El residuo es estrictamente decreciente en α; se resuelve por bisección.
    """
    if q < 1:
        raise InvalidArgument(f"q debe ser >= 1 (q={q})")
    if tol <= 0:
        raise InvalidArgument(f"tol debe ser > 0 (tol={tol})")
    if not (0.0 < p < 1.0):
        raise DegenerateParameter(f"solve_alpha requiere 0 < p < 1 (p={p})")
    hi = _residual(2.0, p, q)
    if abs(hi) < tol:
        return 2.0
    lo = _residual(1.0, p, q)
    if abs(lo) < tol:
        return 1.0
    alpha = optimize.bisect(_residual, 1.0, 2.0, args=(p, q), xtol=tol / 2.0)
    return float(min(2.0, max(1.0, alpha)))


def default_q(n: int, p: float) -> int:
    """ceil(log2(max(2, n·p))), con q >= 1: s_q = 2^q/p queda en torno a n."""
    return max(1, math.ceil(math.log2(max(2.0, n * p))))


def effective_p(n: int, p: float) -> float:
    # p = 0: suelo 1/n^2 para que la ley condicionada siga definida
    return p if p > 0.0 else 1.0 / (n * n)


def _alpha_for(p_eff: float, q: int, tol: float) -> float:
    if p_eff >= 1.0:
        return 2.0
    return solve_alpha(p_eff, q, tol)


def first_index_law(alpha: float, p: float, q: int) -> np.ndarray:
    """Pr[primer bit activo = i] = prod_{j<i}(1 - r_j) · r_i / p, con r_i = α·p/2^i."""
    r = alpha * p / 2.0 ** np.arange(1, q + 1)
    r = np.minimum(r, 1.0)
    survive = np.concatenate(([1.0], np.cumprod(1.0 - r)[:-1]))
    law = survive * r
    return law / law.sum()


def sample_conditional_tuples(alpha: float, p: float, q: int, size: int,
                              rng: np.random.Generator) -> np.ndarray:
    """
    `size` tuplas de q bits de D condicionada a al menos un bit activo.

    Se muestrea el primer índice activo con su ley cerrada y el resto de bits
    posteriores de forma independiente. Devuelve un array bool (size, q).
    """
    r = np.minimum(alpha * p / 2.0 ** np.arange(1, q + 1), 1.0)
    first = rng.choice(q, size=size, p=first_index_law(alpha, p, q))
    bits = rng.random((size, q)) < r
    cols = np.arange(q)
    bits &= cols[None, :] > first[:, None]
    bits[np.arange(size), first] = True
    return bits


@dataclass(frozen=True)
class EdgePartition:
    """
    Reparto de E en E_1..E_q solapados.

    membership[(u, v)] es la tupla de bits (índice 0 -> E_1); los no-aristas no
    aparecen. level_adj[i-1][v] da los vecinos de v en E_i, ordenados por id.
    """
    q: int
    alpha: float
    p: float
    membership: Mapping[Pair, tuple[int, ...]] = field(repr=False)
    level_adj: tuple = field(repr=False, compare=False)

    def bits(self, u: int, v: int) -> tuple[int, ...]:
        return self.membership.get(pair_key(u, v), (0,) * self.q)

    def level_neighbors(self, i: int, v: int) -> tuple[int, ...]:
        if not (1 <= i <= self.q):
            raise InvalidArgument(f"Nivel fuera de rango: {i} (q={self.q})")
        return self.level_adj[i - 1].get(v, ())

    def level_edges(self, i: int) -> set[Pair]:
        if not (1 <= i <= self.q):
            raise InvalidArgument(f"Nivel fuera de rango: {i} (q={self.q})")
        return {e for e, b in self.membership.items() if b[i - 1]}


def membership(partition: EdgePartition, i: int, u: int, v: int) -> int:
    """Indicador E_i(u, v); simétrico, sin consultas."""
    if not (1 <= i <= partition.q):
        raise InvalidArgument(f"Nivel fuera de rango: {i} (q={partition.q})")
    return partition.bits(u, v)[i - 1]


def build_partition(instance: SortingInstance, q: Optional[int] = None,
                    seed: Optional[int] = None, tol: Optional[float] = None) -> EdgePartition:
    cfg = get_cfg()["partition"]
    if q is None:
        q = default_q(instance.n, instance.p)
    if q < 1:
        raise InvalidArgument(f"q debe ser >= 1 (q={q})")
    tol = tol if tol is not None else float(cfg.get("tol", 1e-12))
    seed = instance.seed if seed is None else seed

    p_eff = effective_p(instance.n, instance.p)
    alpha = _alpha_for(p_eff, q, tol)
    edges = sorted(instance.edges)
    rng = stream(seed, "partition")
    bits = sample_conditional_tuples(alpha, p_eff, q, len(edges), rng)

    table: dict[Pair, tuple[int, ...]] = {}
    adj: list[dict[int, list[int]]] = [dict() for _ in range(q)]
    for (u, v), row in zip(edges, bits):
        table[(u, v)] = tuple(int(b) for b in row)
        for i in np.flatnonzero(row):
            adj[i].setdefault(u, []).append(v)
            adj[i].setdefault(v, []).append(u)
    level_adj = tuple({v: tuple(sorted(ns)) for v, ns in lvl.items()} for lvl in adj)
    log.debug("Partition", extra={"n": instance.n, "q": q, "alpha": alpha,
                                  "sizes": [len(lvl) for lvl in level_adj]})
    return EdgePartition(q=q, alpha=alpha, p=p_eff, membership=table, level_adj=level_adj)


# ==================== JSON ====================

class PartitionDocument(BaseModel):
    q: int
    alpha: float
    p: float
    edges: list[tuple[int, int]]
    bits: list[str]


def to_json(partition: EdgePartition) -> str:
    edges = sorted(partition.membership)
    doc = PartitionDocument(
        q=partition.q, alpha=partition.alpha, p=partition.p, edges=edges,
        bits=["".join(str(b) for b in partition.membership[e]) for e in edges],
    )
    return doc.model_dump_json()


if __name__ == "__main__":
    import argparse
    from gsortlab.instance import generate_instance
    d = get_cfg()["instance"]
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=d["n"])
    ap.add_argument("--p", type=float, default=d["p"])
    ap.add_argument("--seed", type=int, default=d["seed"])
    ap.add_argument("--q", type=int, default=None)
    args = ap.parse_args()
    inst = generate_instance(args.n, args.p, args.seed)
    part = build_partition(inst, args.q, args.seed)
    print(f"q={part.q} alpha={part.alpha:.6f} |E_i|={[len(part.level_edges(i)) for i in range(1, part.q + 1)]}")
