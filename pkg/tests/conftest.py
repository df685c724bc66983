import os, sys

_SRC = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")
if _SRC not in sys.path:
    sys.path.insert(0, _SRC)

import pytest

from gsortlab.config import reset_cfg


@pytest.fixture(autouse=True)
def fresh_cfg(monkeypatch):
    # Cada test parte de config.yml + DEFAULTS, sin overrides de entorno
    for var in ("GSORTLAB_WORKERS", "GSORTLAB_LOG_LEVEL", "GSORTLAB_TRACE_DIR"):
        monkeypatch.delenv(var, raising=False)
    reset_cfg()
    yield
    reset_cfg()
