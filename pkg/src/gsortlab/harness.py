from __future__ import annotations

# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

import ast
import math
import operator
import re
import time
from dataclasses import asdict, dataclass
from multiprocessing import Pool
from typing import Any, Literal, Optional, Sequence, Union

import pandas as pd
from pydantic import AliasChoices, BaseModel, Field, field_validator

from gsortlab.config import get_cfg
from gsortlab.entropy_certificate import path_count_estimate
from gsortlab.errors import InternalInvariantError, InvalidArgument
from gsortlab.instance import CountingOracle, Direction, SortingInstance, generate_instance
from gsortlab.leveled_sort import SortParams, run_stochastic_sort
from gsortlab.logging_utils import get_logger
from gsortlab.poset import McmcParams
from gsortlab.seeding import derive_seed
from gsortlab.sparse_sort import SparseParams, order_from_orientation, run_sparse_sort

log = get_logger("gsortlab.harness")

COLUMNS = ["n", "p", "seed", "algorithm", "queries", "correct", "wall_ms", "normalized"]
LOWER_BOUND_P = "(ln n + ln ln n + 4)/n"


# ==================== CONFIG ====================

class ExperimentConfig(BaseModel):
    algorithm: Literal["stochastic", "sparse", "naive"] = "stochastic"
    n_values: list[int]
    p_values: list[Union[float, str]]
    trials: int = 1
    seed: int = Field(0, validation_alias=AliasChoices("seed", "seeds"))
    params: dict[str, Any] = Field(default_factory=dict)
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    record_timing: bool = True
    workers: Optional[int] = None

    @field_validator("trials")
    @classmethod
    def _trials(cls, v: int) -> int:
        if v < 1:
            raise ValueError("trials debe ser >= 1")
        return v

    @field_validator("n_values")
    @classmethod
    def _ns(cls, v: list[int]) -> list[int]:
        if not v or any(n < 2 for n in v):
            raise ValueError("n_values no vacío y con n >= 2")
        return v


@dataclass
class TrialRecord:
    n: int
    p: float
    seed: int
    algorithm: str
    queries: int
    correct: bool
    wall_ms: float
    normalized: float


def normalization(n: int, p: float) -> float:
    """n · log2(max(2, n·p)), la escala O(n log(np))."""
    return n * math.log2(max(2.0, n * p))


# ==================== p SIMBÓLICO ====================

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"ln": math.log, "log": math.log, "log2": math.log2, "sqrt": math.sqrt}


def _normalize_expr(expr: str) -> str:
    s = expr.replace("·", "*").replace("⋅", "*")
    s = re.sub(r"(?<![A-Za-z_])ln\s+ln\s+n\b", "ln(ln(n))", s)
    s = re.sub(r"(?<![A-Za-z_])ln\s+n\b", "ln(n)", s)
    s = re.sub(r"(?<![A-Za-z_\d.])(\d+(?:\.\d+)?)\s*(ln|log2|log|sqrt|n\b|\()", r"\1*\2", s)
    s = re.sub(r"\)\s*(ln|log2|log|sqrt|n\b|\()", r")*\1", s)
    return s


def _eval_node(node: ast.AST, n: int) -> float:
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, n)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "n":
        return float(n)
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.left, n), _eval_node(node.right, n))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_eval_node(node.operand, n)
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1):
        return _FUNCS[node.func.id](_eval_node(node.args[0], n))
    raise InvalidArgument(f"Expresión de p no soportada: {ast.dump(node)}")


def evaluate_p(value: Union[float, str], n: int) -> float:
    """
    p numérico o simbólico en n ("8*ln(n)/n", "2ln n/n", "(ln n + ln ln n + 4)/n").
    El resultado se acota a [0, 1].
    """
    if isinstance(value, (int, float)):
        p = float(value)
    else:
        try:
            tree = ast.parse(_normalize_expr(value.strip()), mode="eval")
        except SyntaxError as e:
            raise InvalidArgument(f"Expresión de p inválida: {value!r}") from e
        p = _eval_node(tree, n)
    if math.isnan(p):
        raise InvalidArgument(f"p no es un número para n={n}: {value!r}")
    return min(1.0, max(0.0, p))


# ==================== BASELINE ====================

@dataclass
class NaiveResult:
    order: list[int]
    queries: int
    wall_ms: float = 0.0


def naive_sort(instance: SortingInstance, oracle: Optional[CountingOracle] = None) -> NaiveResult:
    """Consulta todas las aristas y ordena topológicamente (referencia O(m))."""
    oracle = oracle or CountingOracle(instance)
    t0 = time.perf_counter()
    orientation = set()
    for u, v in sorted(instance.edges):
        orientation.add((u, v) if oracle.query(u, v) is Direction.BEFORE else (v, u))
    order = order_from_orientation(instance.n, orientation)
    return NaiveResult(order, oracle.query_count, (time.perf_counter() - t0) * 1000.0)


# ==================== EJECUCIÓN ====================

def _sort_params(params: dict) -> SortParams:
    keys = {"c", "q", "diagnostics"}
    return SortParams.from_cfg(**{k: v for k, v in params.items() if k in keys})


def _sparse_params(params: dict) -> SparseParams:
    keys = {"a_multiplier", "backend", "rank_mode", "exact_cap", "rank_samples", "max_rounds"}
    mcmc = McmcParams.from_cfg(**params["mcmc"]) if params.get("mcmc") else None
    return SparseParams.from_cfg(mcmc=mcmc, **{k: v for k, v in params.items() if k in keys})


def run_trial(task: tuple) -> dict:
    """Una celda (n, p, trial). Función de módulo para poder usarla desde Pool."""
    algorithm, n, p, seed, params, record_timing = task
    inst = generate_instance(n, p, seed)
    if algorithm == "stochastic":
        res = run_stochastic_sort(inst, _sort_params(params))
    elif algorithm == "sparse":
        res = run_sparse_sort(inst, params=_sparse_params(params))
    elif algorithm == "naive":
        res = naive_sort(inst)
    else:
        raise InvalidArgument(f"Algoritmo desconocido: {algorithm}")
    rec = TrialRecord(
        n=n, p=p, seed=seed, algorithm=algorithm, queries=res.queries,
        correct=res.order == inst.order,
        wall_ms=round(res.wall_ms, 3) if record_timing else 0.0,
        normalized=res.queries / normalization(n, p),
    )
    return asdict(rec)


def build_tasks(config: ExperimentConfig) -> list[tuple]:
    """
    Tareas en orden (n, p, trial). Semilla por ensayo:
    derive_seed(seed_base, "trial", n, índice_p, índice_ensayo).
    """
    tasks = []
    for n in config.n_values:
        for pi, pv in enumerate(config.p_values):
            p = evaluate_p(pv, n)
            for t in range(config.trials):
                seed = derive_seed(config.seed, "trial", n, pi, t)
                tasks.append((config.algorithm, n, p, seed, config.params, config.record_timing))
    return tasks


def check_output(path: str) -> None:
    """Falla con OSError antes de ejecutar nada si no se podrá escribir `path`."""
    target = os.path.abspath(path)
    folder = os.path.dirname(target)
    if os.path.isdir(target):
        raise IsADirectoryError(f"La salida es un directorio: {path}")
    os.makedirs(folder, exist_ok=True)
    if not os.access(folder, os.W_OK):
        raise PermissionError(f"Sin permiso de escritura en {folder}")


def records_frame(records: Sequence[Union[TrialRecord, dict]]) -> pd.DataFrame:
    rows = [asdict(r) if isinstance(r, TrialRecord) else r for r in records]
    return pd.DataFrame(rows, columns=COLUMNS)


def write_records(records: Sequence[Union[TrialRecord, dict]], path: str, fmt: str = "csv") -> None:
    df = records_frame(records)
    if fmt == "csv":
        df.to_csv(path, index=False)
    elif fmt == "json":
        df.to_json(path, orient="records", indent=2)
    else:
        raise InvalidArgument(f"Formato desconocido: {fmt}")


def resolve_workers(config: ExperimentConfig, workers: Optional[int] = None) -> int:
    """Prioridad: argumento (--workers) > GSORTLAB_WORKERS > config.workers > config.yml."""
    if workers:
        return workers
    exp = get_cfg()["experiment"]
    if os.getenv("GSORTLAB_WORKERS"):
        return int(exp["workers"])
    return config.workers or int(exp.get("workers", 1))


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> list[TrialRecord]:
    """
    Ejecuta la rejilla completa. Resultados en orden (n, p, trial) sea cual sea
    el número de workers. Todo registro debe ser correcto.
    """
    if config.output:
        check_output(config.output)
    workers = resolve_workers(config, workers)
    tasks = build_tasks(config)
    log.info("Experiment", extra={"algorithm": config.algorithm, "cells": len(tasks), "workers": workers})
    if workers > 1 and len(tasks) > 1:
        with Pool(processes=workers) as pool:
            rows = pool.map(run_trial, tasks)
    else:
        rows = [run_trial(t) for t in tasks]
    records = [TrialRecord(**r) for r in rows]
    bad = [r for r in records if not r.correct]
    if bad:
        raise InternalInvariantError(f"{len(bad)} ensayos devolvieron un orden incorrecto (p.ej. seed={bad[0].seed})")
    if config.output:
        write_records(records, config.output, config.format)
    return records


# ==================== RESÚMENES ====================

def summarize(records: Union[pd.DataFrame, Sequence[Union[TrialRecord, dict]]]) -> pd.DataFrame:
    df = records if isinstance(records, pd.DataFrame) else records_frame(records)
    return (
        df.groupby(["algorithm", "n", "p"], sort=True)
        .agg(trials=("queries", "size"), mean_queries=("queries", "mean"),
             std_queries=("queries", "std"), mean_normalized=("normalized", "mean"),
             std_normalized=("normalized", "std"), all_correct=("correct", "all"))
        .reset_index()
    )


def normalized_ratio(records: Union[pd.DataFrame, Sequence[Union[TrialRecord, dict]]],
                     algorithm: Optional[str] = None) -> float:
    """max/min de la media de `normalized` entre los distintos n."""
    df = records if isinstance(records, pd.DataFrame) else records_frame(records)
    if algorithm is not None:
        df = df[df["algorithm"] == algorithm]
    means = df.groupby("n")["normalized"].mean()
    return float(means.max() / means.min())


def lower_bound_report(n_values: Sequence[int] = (512, 1024), trials: int = 5, seed: int = 0,
                       workers: Optional[int] = None, output: Optional[str] = None) -> pd.DataFrame:
    """
    Régimen p = (ln n + ln ln n + 4)/n: consultas medias frente a n·log2(np) y
    frente a log2 del número estimado de caminos hamiltonianos (`log2_paths`).
    """
    cfg = ExperimentConfig(algorithm="stochastic", n_values=list(n_values), p_values=[LOWER_BOUND_P],
                           trials=trials, seed=seed, output=output, record_timing=False)
    summary = summarize(run_experiment(cfg, workers))
    summary["n_log2_np"] = [normalization(int(n), float(p)) for n, p in zip(summary["n"], summary["p"])]
    summary["ratio"] = summary["mean_queries"] / summary["n_log2_np"]
    summary["log2_paths"] = [path_count_estimate(int(n), float(p)) for n, p in zip(summary["n"], summary["p"])]
    return summary


if __name__ == "__main__":
    import argparse
    ap = argparse.ArgumentParser(description="Barrido pequeño de StochasticSort")
    ap.add_argument("--n", type=int, nargs="+", default=[64, 128])
    ap.add_argument("--p", default="8*ln(n)/n")
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = ExperimentConfig(n_values=args.n, p_values=[args.p], trials=args.trials, seed=args.seed)
    print(summarize(run_experiment(cfg)).to_string(index=False))
