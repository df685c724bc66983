from __future__ import annotations

# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

import argparse
import json
from typing import Optional, Sequence

from pydantic import ValidationError

from gsortlab.config import get_cfg
from gsortlab.entropy_certificate import QueryTrace, audit_trace, trace_from_oracle
from gsortlab.errors import LabError
from gsortlab.harness import ExperimentConfig, records_frame, run_experiment
from gsortlab.instance import CountingOracle, from_json, generate_instance, to_json
from gsortlab.leveled_sort import SortParams, run_stochastic_sort
from gsortlab.logging_utils import get_logger
from gsortlab.poset import McmcParams
from gsortlab.sparse_sort import BACKENDS, SparseParams, run_sparse_sort

log = get_logger("gsortlab.cli")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def build_parser() -> argparse.ArgumentParser:
    d = get_cfg()["instance"]
    ap = argparse.ArgumentParser(prog="gsortlab", description="Laboratorio de ordenación generalizada")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="Genera una instancia (JSON)")
    g.add_argument("--n", type=int, default=d["n"])
    g.add_argument("--p", type=float, default=d["p"])
    g.add_argument("--seed", type=int, default=d["seed"])
    g.add_argument("--out", default=None)

    s = sub.add_parser("sort-stochastic", help="StochasticSort sobre una instancia")
    s.add_argument("--instance", required=True)
    s.add_argument("--c", type=int, default=None)
    s.add_argument("--q", type=int, default=None)
    s.add_argument("--seed", type=int, default=None, help="Semilla de la partición (por defecto la de la instancia)")
    s.add_argument("--trace", default=None, help="Fichero JSON-lines de eventos")
    s.add_argument("--query-trace", default=None, help="Guarda la traza de consultas para `audit`")

    sp = sub.add_parser("sort-sparse", help="SparseGeneralizedSort sobre una instancia")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--backend", choices=sorted(BACKENDS), default=None)
    sp.add_argument("--rank-mode", choices=["auto", "exact", "sampled"], default=None)
    sp.add_argument("--rank-samples", type=int, default=None)
    sp.add_argument("--burn-in", type=int, default=None)
    sp.add_argument("--thin", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--trace", default=None)

    e = sub.add_parser("experiment", help="Rejilla de experimentos desde un JSON")
    e.add_argument("--config", required=True)
    e.add_argument("--out", default=None)
    e.add_argument("--format", choices=["csv", "json"], default=None)
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--no-timing", action="store_true", help="wall_ms = 0 (salida reproducible byte a byte)")

    a = sub.add_parser("audit", help="Audita una traza de consultas (n <= tope)")
    a.add_argument("--instance", required=True)
    a.add_argument("--trace", default=None, help="Traza JSON; si falta se ejecuta StochasticSort")
    a.add_argument("--cap", type=int, default=None)
    return ap


def _cmd_gen(args) -> int:
    _emit(to_json(generate_instance(args.n, args.p, args.seed)), args.out)
    return EXIT_OK


def _cmd_sort_stochastic(args) -> int:
    inst = from_json(_read(args.instance))
    params = SortParams.from_cfg(c=args.c, q=args.q, trace_path=args.trace)
    oracle = CountingOracle(inst)
    res = run_stochastic_sort(inst, params, args.seed, oracle=oracle)
    if args.query_trace:
        _emit(trace_from_oracle(oracle, res.order).model_dump_json(), args.query_trace)
    _emit(json.dumps({"order": res.order, "queries": res.queries, "by_phase": res.by_phase,
                      "correct": res.order == inst.order}), None)
    return EXIT_OK


def _cmd_sort_sparse(args) -> int:
    inst = from_json(_read(args.instance))
    mcmc = McmcParams.from_cfg(burn_in=args.burn_in, thin=args.thin)
    params = SparseParams.from_cfg(mcmc=mcmc, backend=args.backend, rank_mode=args.rank_mode,
                                   rank_samples=args.rank_samples, trace_path=args.trace)
    res = run_sparse_sort(inst, params=params, seed=args.seed)
    _emit(json.dumps({"order": res.order, "queries": res.queries, "rounds": len(res.rounds),
                      "sample_queries": res.sample_queries, "backend_queries": res.backend_queries,
                      "finished_by": res.finished_by, "correct": res.order == inst.order}), None)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.model_validate_json(_read(args.config))
    updates = {}
    if args.out:
        updates["output"] = args.out
    if args.format:
        updates["format"] = args.format
    if args.no_timing:
        updates["record_timing"] = False
    cfg = cfg.model_copy(update=updates)
    records = run_experiment(cfg, args.workers)
    if not cfg.output:
        _emit(records_frame(records).to_csv(index=False).rstrip("\n"), None)
    return EXIT_OK


def _cmd_audit(args) -> int:
    inst = from_json(_read(args.instance))
    if args.trace:
        trace = QueryTrace.model_validate_json(_read(args.trace))
    else:
        oracle = CountingOracle(inst)
        res = run_stochastic_sort(inst, oracle=oracle)
        trace = trace_from_oracle(oracle, res.order)
    _emit(audit_trace(inst, trace, args.cap).model_dump_json(indent=2), None)
    return EXIT_OK


COMMANDS = {
    "gen": _cmd_gen,
    "sort-stochastic": _cmd_sort_stochastic,
    "sort-sparse": _cmd_sort_sparse,
    "experiment": _cmd_experiment,
    "audit": _cmd_audit,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """0 éxito, 1 error de algoritmo/E-S, 2 error de uso."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (LabError, OSError, ValidationError) as e:
        log.error("CommandFailed", extra={"command": args.command, "error": str(e),
                                          "kind": type(e).__name__})
        return EXIT_ERROR


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
