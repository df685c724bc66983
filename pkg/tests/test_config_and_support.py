import json
import logging

import pytest

from gsortlab.config import get_cfg, reset_cfg
from gsortlab.errors import AuditFailure, InvalidArgument, LabError
from gsortlab.fixtures import FIXTURES, cycle_with_chords, path, two_cliques_joined
from gsortlab.logging_utils import close_trace_logger, get_logger, get_trace_logger
from gsortlab.seeding import derive_seed, stream


def test_defaults_are_loaded():
    cfg = get_cfg()
    assert cfg["leveled_sort"]["c"] == 8
    assert cfg["poset"]["mcmc"]["chains"] == 32
    assert cfg["sparse_sort"]["backend"] == "fallback"
    assert get_cfg() is cfg


def test_env_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("GSORTLAB_WORKERS", "3")
    monkeypatch.setenv("GSORTLAB_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("GSORTLAB_TRACE_DIR", str(tmp_path))
    reset_cfg()
    cfg = get_cfg()
    assert cfg["experiment"]["workers"] == 3
    assert cfg["logging"]["level"] == "DEBUG"
    assert cfg["logging"]["trace_dir"] == str(tmp_path)


def test_derived_seeds():
    assert derive_seed(7, "instance") == derive_seed(7, "instance")
    assert derive_seed(7, "instance") != derive_seed(7, "partition")
    assert derive_seed(7, "trial", 16, 0, 1) != derive_seed(7, "trial", 16, 1, 0)
    assert 0 <= derive_seed(-1, "x") < 2 ** 64
    a, b = stream(3, "mcmc"), stream(3, "mcmc")
    assert (a.random(5) == b.random(5)).all()


def test_trace_logger_writes_json_lines(tmp_path):
    path = tmp_path / "sub" / "events.jsonl"
    log = get_trace_logger(str(path))
    log.info("find", extra={"event": "find", "ell": 3})
    log.info("rebuild", extra={"event": "rebuild", "level": 2})
    close_trace_logger(log)
    rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    assert [r["event"] for r in rows] == ["find", "rebuild"]
    assert rows[0]["ell"] == 3 and rows[1]["level"] == 2
    assert not log.handlers


def test_get_logger_is_idempotent():
    a = get_logger("gsortlab.test")
    b = get_logger("gsortlab.test")
    assert a is b and len(a.handlers) == 1
    assert isinstance(a, logging.Logger)


def test_error_hierarchy():
    assert issubclass(InvalidArgument, ValueError) and issubclass(InvalidArgument, LabError)
    err = AuditFailure("fallo", step=4)
    assert err.step == 4 and "paso 4" in str(err)
    assert AuditFailure("x").step is None


# ==================== FIXTURES ====================

def test_fixture_shapes():
    p = path(7, seed=1)
    assert p.m == 6
    cyc = cycle_with_chords(8, chords=2, seed=2)
    assert cyc.m == 8 + 2
    order = cyc.order
    assert cyc.has_edge(order[0], order[-1])
    cl = two_cliques_joined(4, bridge=2, seed=3)
    assert cl.n == 10
    # dos K4 (6 + 6) más el camino; 3 aristas del camino caen dentro de las cliques
    assert cl.m == 6 + 6 + 9 - 6
    for inst in (p, cyc, cl):
        inst.validate()


def test_fixture_registry():
    assert set(FIXTURES) == {"path", "cycle_with_chords", "two_cliques_joined", "planted_random"}
    with pytest.raises(InvalidArgument):
        cycle_with_chords(2)
    with pytest.raises(InvalidArgument):
        two_cliques_joined(1)
