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
from dataclasses import dataclass
from typing import Iterable, Optional

import networkx as nx
import numpy as np

from gsortlab.config import get_cfg
from gsortlab.errors import CapacityError, InconsistencyError, InvalidArgument
from gsortlab.seeding import stream

# Tope del DP por subconjuntos (2^n estados)
COUNT_CAP = 20


@dataclass
class McmcParams:
    """Presupuesto de la cadena de transposiciones adyacentes."""
    burn_in: Optional[int] = None
    thin: Optional[int] = None
    chains: int = 32
    samples: int = 20000

    def __post_init__(self):
        if self.chains < 1 or self.samples < 1:
            raise InvalidArgument("chains y samples deben ser >= 1")

    @classmethod
    def from_cfg(cls, cfg: dict | None = None, **overrides) -> "McmcParams":
        cfg = cfg or get_cfg()
        m = dict(cfg["poset"]["mcmc"])
        m.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**m)

    def resolve(self, n: int) -> tuple[int, int]:
        # Por defecto: burn-in n^3 log n, thinning n^2
        burn = self.burn_in if self.burn_in is not None else int(math.ceil(n ** 3 * math.log(max(n, 2))))
        thin = self.thin if self.thin is not None else n * n
        return max(0, burn), max(1, thin)


class DirectedKnowledge:
    """
    Aristas dirigidas conocidas E' (u antes que v) sobre n vértices.

    La clausura transitiva se calcula bajo demanda y se cachea hasta la
    siguiente inserción.
    """

    def __init__(self, n: int, known: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise InvalidArgument(f"n debe ser >= 1 (n={n})")
        self.n = n
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(range(n))
        self._closure: Optional[nx.DiGraph] = None
        self._reach: Optional[np.ndarray] = None
        for u, v in known:
            self.add(u, v)

    @property
    def known(self) -> set[tuple[int, int]]:
        return set(self.graph.edges)

    def __len__(self) -> int:
        return self.graph.number_of_edges()

    def add(self, u: int, v: int) -> "DirectedKnowledge":
        if u == v or not (0 <= u < self.n and 0 <= v < self.n):
            raise InvalidArgument(f"Par inválido {(u, v)}")
        if self.graph.has_edge(u, v):
            return self
        if self.precedes(v, u):
            raise InconsistencyError(f"({u}, {v}) cierra un ciclo en E'")
        self.graph.add_edge(u, v)
        self._closure, self._reach = None, None
        return self

    def closure(self) -> nx.DiGraph:
        if self._closure is None:
            self._closure = nx.transitive_closure_dag(self.graph)
        return self._closure

    def reach(self) -> np.ndarray:
        """Matriz booleana n x n de la clausura: reach[u, v] sii u ≺ v está implicado."""
        if self._reach is None:
            r = np.zeros((self.n, self.n), dtype=bool)
            for u, v in self.closure().edges:
                r[u, v] = True
            self._reach = r
        return self._reach

    def precedes(self, u: int, v: int) -> bool:
        if self._closure is not None:
            return self._closure.has_edge(u, v)
        return nx.has_path(self.graph, u, v)

    def determined(self, u: int, v: int) -> Optional[bool]:
        """True si u ≺ v se deduce, False si v ≺ u, None si no se sabe."""
        c = self.closure()
        if c.has_edge(u, v):
            return True
        if c.has_edge(v, u):
            return False
        return None

    def pred_masks(self) -> list[int]:
        c = self.closure()
        masks = [0] * self.n
        for u, v in c.edges:
            masks[v] |= 1 << u
        return masks

    def linear_extension(self) -> list[int]:
        return list(nx.lexicographical_topological_sort(self.graph))

    def copy(self) -> "DirectedKnowledge":
        return DirectedKnowledge(self.n, self.graph.edges)


def add_directed(knowledge: DirectedKnowledge, u: int, v: int) -> DirectedKnowledge:
    return knowledge.add(u, v)


def _cap(cap: Optional[int]) -> int:
    return int(cap if cap is not None else get_cfg()["poset"].get("enumeration_cap", 10))


def enumerate_compatible(knowledge: DirectedKnowledge, cap: Optional[int] = None) -> list[list[int]]:
    """Todas las extensiones lineales de E' (n <= cap)."""
    cap = _cap(cap)
    if knowledge.n > cap:
        raise CapacityError(f"n={knowledge.n} supera el tope de enumeración {cap}")
    return [list(t) for t in nx.all_topological_sorts(knowledge.graph)]


# ==================== CONTEO EXACTO ====================

def _prefix_suffix_counts(n: int, pred: list[int]) -> tuple[list[int], list[int]]:
    full = (1 << n) - 1
    f = [0] * (full + 1)
    f[0] = 1
    for s in range(full + 1):
        if not f[s]:
            continue
        for v in range(n):
            bit = 1 << v
            if not s & bit and pred[v] & s == pred[v]:
                f[s | bit] += f[s]
    g = [0] * (full + 1)
    g[full] = 1
    for s in range(full - 1, -1, -1):
        tot = 0
        for v in range(n):
            bit = 1 << v
            if not s & bit and pred[v] & s == pred[v]:
                tot += g[s | bit]
        g[s] = tot
    return f, g


def count_extensions(knowledge: DirectedKnowledge) -> int:
    """|Σ(G, E')| exacto por programación dinámica sobre conjuntos descendentes."""
    if knowledge.n > COUNT_CAP:
        raise CapacityError(f"n={knowledge.n} supera el tope de conteo {COUNT_CAP}")
    n = knowledge.n
    f, _ = _prefix_suffix_counts(n, knowledge.pred_masks())
    return f[(1 << n) - 1]


def exact_average_ranks(knowledge: DirectedKnowledge) -> dict[int, float]:
    if knowledge.n > COUNT_CAP:
        raise CapacityError(f"n={knowledge.n} supera el tope de conteo {COUNT_CAP}")
    n = knowledge.n
    pred = knowledge.pred_masks()
    f, g = _prefix_suffix_counts(n, pred)
    total = f[(1 << n) - 1]
    weighted = [0] * n
    for s in range(1 << n):
        if not f[s]:
            continue
        k = bin(s).count("1") + 1
        for v in range(n):
            bit = 1 << v
            if not s & bit and pred[v] & s == pred[v]:
                weighted[v] += k * f[s] * g[s | bit]
    return {v: weighted[v] / total for v in range(n)}


# ==================== MCMC ====================

def _run_chains(knowledge: DirectedKnowledge, n_samples: int, seed: int,
                params: McmcParams) -> np.ndarray:
    """
    Cadenas perezosas de transposiciones adyacentes, vectorizadas.

    Cada paso elige una posición j y, con probabilidad 1/2, intercambia los
    elementos en j y j+1 si la clausura no los ordena. Devuelve (n_samples, n).
    """
    n = knowledge.n
    start = np.asarray(knowledge.linear_extension(), dtype=np.int64)
    if n < 2 or unique_extension(knowledge):
        return np.tile(start, (n_samples, 1))
    burn, thin = params.resolve(n)
    chains = min(params.chains, n_samples)
    reach = knowledge.reach()
    rng = stream(seed, "mcmc")
    perms = np.tile(start, (chains, 1))
    rows = np.arange(chains)

    def step():
        j = rng.integers(0, n - 1, size=chains)
        coin = rng.random(chains) < 0.5
        a, b = perms[rows, j], perms[rows, j + 1]
        ok = coin & ~reach[a, b]
        perms[rows[ok], j[ok]] = b[ok]
        perms[rows[ok], j[ok] + 1] = a[ok]

    for _ in range(burn):
        step()
    out = np.empty((n_samples, n), dtype=np.int64)
    filled = 0
    while filled < n_samples:
        for _ in range(thin):
            step()
        take = min(chains, n_samples - filled)
        out[filled:filled + take] = perms[:take]
        filled += take
    return out


def sample_extensions(knowledge: DirectedKnowledge, k: int, seed: int,
                      params: Optional[McmcParams] = None) -> np.ndarray:
    params = params or McmcParams.from_cfg()
    return _run_chains(knowledge, k, seed, params)


def sample_extension(knowledge: DirectedKnowledge, seed: int,
                     params: Optional[McmcParams] = None) -> list[int]:
    """Una extensión lineal aproximadamente uniforme."""
    params = params or McmcParams.from_cfg()
    one = McmcParams(burn_in=params.burn_in, thin=params.thin, chains=1, samples=1)
    return [int(v) for v in _run_chains(knowledge, 1, seed, one)[0]]


def average_ranks(knowledge: DirectedKnowledge, mode: str = "exact", samples: Optional[int] = None,
                  seed: int = 0, params: Optional[McmcParams] = None,
                  cap: Optional[int] = None) -> dict[int, float]:
    """
    S(v): rango medio de v sobre las permutaciones compatibles.

    mode="exact" exige n <= cap; mode="sampled" promedia `samples` extensiones de la
    cadena MCMC.
    """
    if mode == "exact":
        cap = _cap(cap)
        if knowledge.n > cap:
            raise CapacityError(f"n={knowledge.n} supera el tope exacto {cap}; usar mode='sampled'")
        return exact_average_ranks(knowledge)
    if mode != "sampled":
        raise InvalidArgument(f"Modo de rangos desconocido: {mode}")
    params = params or McmcParams.from_cfg()
    k = samples or params.samples
    perms = _run_chains(knowledge, k, seed, params)
    n = knowledge.n
    pos = np.empty_like(perms)
    np.put_along_axis(pos, perms, np.broadcast_to(np.arange(1, n + 1), perms.shape), axis=1)
    mean = pos.mean(axis=0)
    return {v: float(mean[v]) for v in range(n)}


def unique_extension(knowledge: DirectedKnowledge) -> bool:
    """Una sola extensión lineal sii la clausura compara todos los pares."""
    n = knowledge.n
    return knowledge.closure().number_of_edges() == n * (n - 1) // 2


if __name__ == "__main__":
    import argparse
    ap = argparse.ArgumentParser(description="Rangos medios exactos vs MCMC en un poset aleatorio")
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--edges", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = stream(args.seed, "demo")
    order = rng.permutation(args.n)
    kn = DirectedKnowledge(args.n)
    for _ in range(args.edges):
        a, b = sorted(rng.choice(args.n, 2, replace=False))
        kn.add(int(order[a]), int(order[b]))
    print("exact  ", average_ranks(kn, "exact"))
    print("sampled", average_ranks(kn, "sampled", samples=4000, seed=args.seed))
