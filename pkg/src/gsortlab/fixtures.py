from __future__ import annotations

# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

# Grafos adversarios con camino hamiltoniano plantado (ordenación dispersa).
# El orden real de cada fixture es una permutación derivada de `seed`.

from itertools import combinations

from gsortlab.errors import InvalidArgument
from gsortlab.instance import SortingInstance, generate_instance, instance_from_order
from gsortlab.seeding import stream


def _order(n: int, seed: int, tag: str) -> list[int]:
    return [int(v) for v in stream(seed, "fixture", tag).permutation(n)]


def path(n: int, seed: int = 0) -> SortingInstance:
    """Solo el camino hamiltoniano (m = n - 1)."""
    if n < 2:
        raise InvalidArgument("path requiere n >= 2")
    return instance_from_order(_order(n, seed, "path"), seed=seed)


def cycle_with_chords(n: int, chords: int = 2, seed: int = 0) -> SortingInstance:
    """Ciclo x_1 .. x_n x_1 más `chords` cuerdas aleatorias."""
    if n < 3:
        raise InvalidArgument("cycle_with_chords requiere n >= 3")
    order = _order(n, seed, "cycle")
    extra = [(order[0], order[-1])]
    rng = stream(seed, "fixture", "chords")
    candidates = [(order[a], order[b]) for a, b in combinations(range(n), 2)
                  if b - a >= 2 and not (a == 0 and b == n - 1)]
    if candidates:
        take = min(chords, len(candidates))
        for idx in rng.choice(len(candidates), size=take, replace=False):
            extra.append(candidates[int(idx)])
    return instance_from_order(order, extra, seed=seed)


def two_cliques_joined(k: int, bridge: int = 1, seed: int = 0) -> SortingInstance:
    """
    Dos cliques de tamaño k (los k primeros y los k últimos del orden real)
    unidas por un camino de `bridge` vértices intermedios.
    """
    if k < 2 or bridge < 0:
        raise InvalidArgument("two_cliques_joined requiere k >= 2 y bridge >= 0")
    n = 2 * k + bridge
    order = _order(n, seed, "cliques")
    left, right = order[:k], order[n - k:]
    extra = list(combinations(left, 2)) + list(combinations(right, 2))
    return instance_from_order(order, extra, seed=seed)


def planted_random(n: int, p: float, seed: int = 0) -> SortingInstance:
    return generate_instance(n, p, seed)


FIXTURES = {
    "path": path,
    "cycle_with_chords": cycle_with_chords,
    "two_cliques_joined": two_cliques_joined,
    "planted_random": planted_random,
}


if __name__ == "__main__":
    import argparse
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", choices=sorted(FIXTURES), default="cycle_with_chords")
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if args.kind == "two_cliques_joined":
        inst = two_cliques_joined(max(2, args.n // 2 - 1), 2, args.seed)
    elif args.kind == "planted_random":
        inst = planted_random(args.n, 0.3, args.seed)
    else:
        inst = FIXTURES[args.kind](args.n, seed=args.seed)
    print(f"n={inst.n} m={inst.m} order={inst.order}")
