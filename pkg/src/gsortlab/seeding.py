from __future__ import annotations

# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

import hashlib
import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *tags) -> int:
    """
    Deriva una semilla de 64 bits a partir de (seed, tags).

    blake2b sobre la representación textual "seed|tag1|tag2|..."; los primeros
    8 bytes (little-endian) son la semilla derivada. Estable entre plataformas
    y versiones de Python (no usa hash()).
    """
    key = "|".join([str(int(seed) & MASK64)] + [repr(t) for t in tags])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *tags) -> np.random.Generator:
    """Generador PCG64 independiente por (seed, propósito)."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *tags)))


if __name__ == "__main__":
    import argparse
    p = argparse.ArgumentParser(description="Semillas derivadas")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("tags", nargs="*")
    args = p.parse_args()
    print(derive_seed(args.seed, *args.tags))
