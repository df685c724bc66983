from __future__ import annotations

# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional

import networkx as nx
import numpy as np
from pydantic import BaseModel

from gsortlab.errors import ForbiddenComparison, InvalidArgument
from gsortlab.seeding import stream

Pair = tuple[int, int]


class EdgeKind(str, Enum):
    """Tipo de par: consecutivo en el orden real o incluido al azar."""
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


class Direction(Enum):
    """BEFORE: el primer argumento precede al segundo en el orden real."""
    BEFORE = "before"
    AFTER = "after"

    @property
    def flipped(self) -> "Direction":
        return Direction.AFTER if self is Direction.BEFORE else Direction.BEFORE


def pair_key(u: int, v: int) -> Pair:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SortingInstance:
    """
    Instancia de ordenación generalizada.

    hidden_rank[v] es el rango real (1..n) del vértice v; `edges` son pares no
    ordenados (u < v). La estructura del grafo es pública, solo las direcciones
    quedan detrás del oráculo.
    """
    n: int
    p: float
    seed: int
    hidden_rank: tuple[int, ...]
    edges: frozenset
    edge_kind: Mapping[Pair, EdgeKind] = field(repr=False)
    graph: nx.Graph = field(init=False, repr=False, compare=False)
    _adj: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        object.__setattr__(self, "graph", nx.freeze(g))
        # Orden fijo por id de vértice: desempates reproducibles
        adj = {v: tuple(sorted(g.adj[v])) for v in range(self.n)}
        object.__setattr__(self, "_adj", adj)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def order(self) -> list[int]:
        """Vértices en el orden real x_1, ..., x_n."""
        out = [0] * self.n
        for v, r in enumerate(self.hidden_rank):
            out[r - 1] = v
        return out

    def has_edge(self, u: int, v: int) -> bool:
        return pair_key(u, v) in self.edges

    def neighbors(self, v: int) -> tuple[int, ...]:
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.n):
            raise InvalidArgument(f"Vértice desconocido: {v}")
        return self._adj[int(v)]

    def stochastic_count(self) -> int:
        return sum(1 for k in self.edge_kind.values() if k is EdgeKind.STOCHASTIC)

    def validate(self) -> None:
        """Comprueba los invariantes de la instancia; lanza InvalidArgument."""
        if sorted(self.hidden_rank) != list(range(1, self.n + 1)):
            raise InvalidArgument("hidden_rank no es una biyección sobre 1..n")
        order = self.order
        for a, b in zip(order, order[1:]):
            if self.edge_kind.get(pair_key(a, b)) is not EdgeKind.DETERMINISTIC:
                raise InvalidArgument(f"Falta la arista determinista {pair_key(a, b)}")
        for (u, v), kind in self.edge_kind.items():
            if (u, v) not in self.edges:
                raise InvalidArgument(f"Tipo asignado a un no-arista {(u, v)}")
            consecutive = abs(self.hidden_rank[u] - self.hidden_rank[v]) == 1
            if consecutive != (kind is EdgeKind.DETERMINISTIC):
                raise InvalidArgument(f"Tipo incorrecto para {(u, v)}")
        if set(self.edge_kind) != set(self.edges):
            raise InvalidArgument("edge_kind no cubre todas las aristas")


def neighbors(instance: SortingInstance, v: int) -> set[int]:
    """Vecinos de v; no consulta el oráculo."""
    return set(instance.neighbors(v))


def _check_np(n: int, p: float) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidArgument(f"n debe ser un entero >= 2 (n={n})")
    if not (0.0 <= p <= 1.0):
        raise InvalidArgument(f"p fuera de [0, 1] (p={p})")


def generate_instance(n: int, p: float, seed: int) -> SortingInstance:
    """
    Genera G(n, p) con el camino hamiltoniano del orden real plantado.

    El orden real es una permutación uniforme; cada par no consecutivo entra
    independientemente con probabilidad p. Misma (n, p, seed) -> misma instancia.
    """
    _check_np(n, p)
    n = int(n)
    rng = stream(seed, "instance")
    order = rng.permutation(n)  # order[k] = vértice de rango k+1
    hidden_rank = [0] * n
    for k, v in enumerate(order):
        hidden_rank[int(v)] = k + 1

    kinds: dict[Pair, EdgeKind] = {}
    for k in range(n - 1):
        kinds[pair_key(int(order[k]), int(order[k + 1]))] = EdgeKind.DETERMINISTIC
    if p > 0.0:
        # Fila a (por rango): pares (a, b) con b >= a + 2
        for a in range(n - 2):
            hits = np.flatnonzero(rng.random(n - a - 2) < p)
            u = int(order[a])
            for off in hits:
                kinds[pair_key(u, int(order[a + 2 + off]))] = EdgeKind.STOCHASTIC
    return SortingInstance(
        n=n, p=float(p), seed=int(seed), hidden_rank=tuple(hidden_rank),
        edges=frozenset(kinds), edge_kind=kinds,
    )


def instance_from_order(order: Iterable[int], extra_edges: Iterable[Pair] = (),
                        p: Optional[float] = None, seed: int = 0) -> SortingInstance:
    """
    Construye una instancia con orden real y aristas explícitas (grafos adversarios).

    Si p es None se usa la densidad observada de pares estocásticos.
    """
    order = [int(v) for v in order]
    n = len(order)
    if n < 2 or sorted(order) != list(range(n)):
        raise InvalidArgument("order debe ser una permutación de 0..n-1 con n >= 2")
    hidden_rank = [0] * n
    for k, v in enumerate(order):
        hidden_rank[v] = k + 1
    kinds: dict[Pair, EdgeKind] = {}
    for a, b in zip(order, order[1:]):
        kinds[pair_key(a, b)] = EdgeKind.DETERMINISTIC
    for u, v in extra_edges:
        u, v = int(u), int(v)
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise InvalidArgument(f"Arista inválida {(u, v)}")
        key = pair_key(u, v)
        if key not in kinds:
            kinds[key] = EdgeKind.STOCHASTIC
    if p is None:
        slots = n * (n - 1) // 2 - (n - 1)
        p = (len(kinds) - (n - 1)) / slots if slots else 0.0
    inst = SortingInstance(
        n=n, p=float(p), seed=int(seed), hidden_rank=tuple(hidden_rank),
        edges=frozenset(kinds), edge_kind=kinds,
    )
    return inst


# ==================== ORÁCULO ====================

class CountingOracle:
    """
    Única vía de acceso a las direcciones de las aristas.

    Memoriza las respuestas y cuenta pares distintos consultados; cada primera
    consulta se añade a `events` como (u, v, Direction) y se imputa a la fase
    activa (ver `charging`).
    """

    def __init__(self, instance: SortingInstance):
        self.instance = instance
        self.answered: dict[Pair, Direction] = {}
        self.events: list[tuple[int, int, Direction]] = []
        self.by_phase: Counter = Counter()
        self.phase: str = "unattributed"

    @property
    def query_count(self) -> int:
        return len(self.answered)

    def query(self, u: int, v: int) -> Direction:
        if u == v:
            raise InvalidArgument(f"Consulta de un vértice consigo mismo ({u})")
        key = pair_key(u, v)
        ans = self.answered.get(key)
        if ans is None:
            if key not in self.instance.edges:
                raise ForbiddenComparison(f"El par {key} no es una arista")
            hr = self.instance.hidden_rank
            ans = Direction.BEFORE if hr[key[0]] < hr[key[1]] else Direction.AFTER
            self.answered[key] = ans
            self.by_phase[self.phase] += 1
            self.events.append((u, v, ans if key == (u, v) else ans.flipped))
        return ans if key == (u, v) else ans.flipped

    @contextmanager
    def charging(self, phase: str) -> Iterator["CountingOracle"]:
        prev, self.phase = self.phase, phase
        try:
            yield self
        finally:
            self.phase = prev

    def reversed(self) -> "MirroredOracle":
        return MirroredOracle(self)


class MirroredOracle:
    """Vista con la polaridad invertida; comparte memoria y contador con la base."""

    def __init__(self, base: CountingOracle):
        self.base = base
        self.instance = base.instance

    @property
    def query_count(self) -> int:
        return self.base.query_count

    @property
    def by_phase(self) -> Counter:
        return self.base.by_phase

    def query(self, u: int, v: int) -> Direction:
        return self.base.query(v, u)

    def charging(self, phase: str):
        return self.base.charging(phase)

    def reversed(self) -> CountingOracle:
        return self.base


def query(oracle: CountingOracle, u: int, v: int) -> Direction:
    return oracle.query(u, v)


# ==================== JSON ====================

class InstanceDocument(BaseModel):
    n: int
    p: float
    seed: int
    hidden_rank: list[int]
    edges: list[tuple[int, int]]
    kinds: list[EdgeKind]


def to_document(instance: SortingInstance) -> InstanceDocument:
    edges = sorted(instance.edges)
    return InstanceDocument(
        n=instance.n, p=instance.p, seed=instance.seed,
        hidden_rank=list(instance.hidden_rank), edges=edges,
        kinds=[instance.edge_kind[e] for e in edges],
    )


def to_json(instance: SortingInstance) -> str:
    return to_document(instance).model_dump_json()


def from_document(doc: InstanceDocument) -> SortingInstance:
    if len(doc.edges) != len(doc.kinds):
        raise InvalidArgument("edges y kinds tienen longitudes distintas")
    if len(doc.hidden_rank) != doc.n:
        raise InvalidArgument("hidden_rank no tiene longitud n")
    kinds = {pair_key(u, v): k for (u, v), k in zip(doc.edges, doc.kinds)}
    inst = SortingInstance(
        n=doc.n, p=doc.p, seed=doc.seed, hidden_rank=tuple(doc.hidden_rank),
        edges=frozenset(kinds), edge_kind=kinds,
    )
    inst.validate()
    return inst


def from_json(text: str) -> SortingInstance:
    return from_document(InstanceDocument.model_validate_json(text))


if __name__ == "__main__":
    import argparse
    from gsortlab.config import get_cfg
    d = get_cfg()["instance"]
    ap = argparse.ArgumentParser(description="Genera una instancia y la imprime en JSON")
    ap.add_argument("--n", type=int, default=d["n"])
    ap.add_argument("--p", type=float, default=d["p"])
    ap.add_argument("--seed", type=int, default=d["seed"])
    args = ap.parse_args()
    print(to_json(generate_instance(args.n, args.p, args.seed)))
