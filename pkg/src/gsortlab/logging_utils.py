# --- Bootstrap ---
import os, sys
if __package__ is None or __package__ == "":
    _CUR = os.path.dirname(os.path.abspath(__file__))
    _SRC = os.path.dirname(_CUR)
    if _SRC not in sys.path:
        sys.path.insert(0, _SRC)
# ---------------

import logging, sys as _sys
from pythonjsonlogger import jsonlogger
from gsortlab.config import get_cfg

_FMT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def get_logger(name: str = "gsortlab"):
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    logger.setLevel(get_cfg()["logging"].get("level", "INFO"))
    # stderr: stdout queda libre para el JSON/CSV de la CLI
    handler = logging.StreamHandler(_sys.stderr)
    handler.setFormatter(jsonlogger.JsonFormatter(_FMT))
    logger.addHandler(handler)
    return logger


def get_trace_logger(path: str, name: str | None = None):
    """Logger JSON-lines a fichero, un evento por línea, sin propagar al raíz."""
    name = name or f"gsortlab.trace.{os.path.abspath(path)}"
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    logger.setLevel(logging.DEBUG)
    logger.propagate = False
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(jsonlogger.JsonFormatter("%(message)s"))
    logger.addHandler(handler)
    return logger


def close_trace_logger(logger) -> None:
    for h in list(logger.handlers):
        h.close()
        logger.removeHandler(h)


if __name__ == "__main__":
    import argparse, time
    p = argparse.ArgumentParser()
    p.add_argument("--msg", default="Hello logs")
    args = p.parse_args()
    log = get_logger()
    log.info("TestLog", extra={"detail": args.msg, "ts": time.time()})
