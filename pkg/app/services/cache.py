"""
Content-addressed JSON cache for solved control schedules. A key is the
SHA-256 of everything the solver sees, so any change in parameters, grid or
solver settings misses.
"""
import json
import time
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from app.core.config import CACHE_DIR
from app.models.control import FbsmReport

logger = logging.getLogger(__name__)

SOLUTION_PREFIX = "fbsm"


def _stable_json(obj: Any) -> str:
    """
    Stable serialization so hashing is consistent. Floats go through repr,
    so schedules come back bit-identical.
    """
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def make_cache_key(prefix: str, payload: Any) -> str:
    raw = (prefix + "|" + _stable_json(payload)).encode("utf-8")
    digest = hashlib.sha256(raw).hexdigest()
    return f"{prefix}_{digest}"


def cache_get(key: str, cache_dir: Optional[Path] = None) -> Optional[Dict[str, Any]]:
    path = Path(cache_dir or CACHE_DIR) / f"{key}.json"
    if not path.exists():
        return None

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        logger.warning("Cache Error: unreadable entry %s (%s)", path.name, e)
        return None
    if not isinstance(data, dict):
        logger.warning("Cache Error: entry %s is not a JSON object", path.name)
        return None

    data.pop("_saved_at", None)
    return data


def cache_set(key: str, value: Dict[str, Any], cache_dir: Optional[Path] = None) -> Path:
    cache_dir = Path(cache_dir or CACHE_DIR)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"{key}.json"
    payload = dict(value)
    payload["_saved_at"] = time.time()
    path.write_text(_stable_json(payload), encoding="utf-8")
    return path


# ---- solved schedules ----

def solution_key(solver_inputs: Dict[str, Any]) -> str:
    return make_cache_key(SOLUTION_PREFIX, solver_inputs)


def load_solution(key: str, cache_dir: Optional[Path] = None) -> Optional[Dict[str, Any]]:
    """Cached schedule and sweep diagnostics, or None when missing or malformed."""
    data = cache_get(key, cache_dir=cache_dir)
    if data is None:
        return None
    required = {"u", "converged", "iterations", "last_update", "update_history"}
    if not required <= data.keys():
        logger.warning("Cache Error: entry %s lacks %s", key[:16], sorted(required - data.keys()))
        return None
    return data


def store_solution(key: str, report: FbsmReport, cache_dir: Optional[Path] = None) -> Path:
    return cache_set(key, {
        "u": report.schedule.u.tolist(),
        "converged": report.converged,
        "iterations": report.iterations,
        "last_update": report.last_update,
        "update_history": list(report.update_history),
    }, cache_dir=cache_dir)
