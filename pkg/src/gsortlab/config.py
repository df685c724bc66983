from __future__ import annotations

# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

import copy
import os
import yaml
from typing import Any
from dotenv import load_dotenv

_CFG: dict[str, Any] | None = None

# Defaults mínimos si falta config.yml (o si le faltan secciones)
DEFAULTS: dict[str, Any] = {
    "instance": {"n": 64, "p": 0.25, "seed": 7},
    "partition": {"tol": 1e-12},
    "leveled_sort": {"c": 8, "q": None, "diagnostics": False, "trace": False},
    "poset": {
        "enumeration_cap": 10,
        "mcmc": {"burn_in": None, "thin": None, "chains": 32, "samples": 20000},
    },
    "sparse_sort": {
        "a_multiplier": 2.0,
        "backend": "fallback",
        "rank_mode": "auto",
        "exact_cap": 10,
        "rank_samples": 2000,
        "max_rounds": None,
        "trace": False,
    },
    "entropy": {"cap": 10},
    "experiment": {"workers": 1, "format": "csv", "record_timing": True},
    "logging": {"level": "INFO", "trace_dir": None},
}


def _project_root() -> str:
    # .../gsortlab/src/gsortlab -> root = ../..
    return os.path.normpath(os.path.join(os.path.dirname(__file__), "..", ".."))


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def get_cfg() -> dict:
    global _CFG
    if _CFG is not None:
        return _CFG
    root = _project_root()
    load_dotenv(os.path.join(root, ".env"))
    cfg_path = os.path.join(root, "config.yml")
    if os.path.exists(cfg_path):
        with open(cfg_path, "r", encoding="utf-8") as f:
            cfg = _merge(DEFAULTS, yaml.safe_load(f) or {})
    else:
        cfg = copy.deepcopy(DEFAULTS)

    # Overrides por ENV
    workers = os.getenv("GSORTLAB_WORKERS")
    if workers:
        cfg["experiment"]["workers"] = max(1, int(workers))
    cfg["logging"]["level"] = os.getenv("GSORTLAB_LOG_LEVEL", cfg["logging"].get("level", "INFO"))
    cfg["logging"]["trace_dir"] = os.getenv("GSORTLAB_TRACE_DIR", cfg["logging"].get("trace_dir"))
    _CFG = cfg
    return _CFG


def reset_cfg() -> None:
    """Olvida la configuración cacheada (tests y cambios de entorno)."""
    global _CFG
    _CFG = None


if __name__ == "__main__":
    import json
    cfg = get_cfg()
    print(json.dumps(cfg, indent=2))
