# trace.py
from __future__ import annotations

import json
import time
import uuid
from datetime import datetime, timezone
from pathlib import Path
from threading import Lock
from typing import Any, Callable, Dict, List, Optional, TypeVar

T = TypeVar("T")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _safe_json(x: Any) -> Any:
    try:
        json.dumps(x, ensure_ascii=False)
        return x
    except (TypeError, ValueError):
        return {"_repr": repr(x)}


class JsonlLog:
    """
    Append-only JSON Lines sink. One record per line; writes are serialized
    through a lock so several threads may share one log.
    """

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._lock = Lock()

    def append(self, record: Dict[str, Any]) -> None:
        line = json.dumps(record, ensure_ascii=False, default=str)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")

    def read(self) -> List[Dict[str, Any]]:
        if not self.path.exists():
            return []
        records: List[Dict[str, Any]] = []
        with open(self.path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records


def trace_call(
    log: JsonlLog,
    *,
    op: str,
    inputs: Dict[str, Any],
    call_fn: Callable[[], T],
    summarize: Optional[Callable[[T], Any]] = None,
) -> T:
    """Run call_fn, append one timing/outcome record, re-raise on failure."""
    call_id = uuid.uuid4().hex
    t0 = time.time()

    record: Dict[str, Any] = {
        "call_id": call_id,
        "ts_utc": _utc_now(),
        "op": op,
        "start_ts": t0,
        "input": _safe_json(inputs),
    }

    try:
        result = call_fn()
    except BaseException as e:
        t1 = time.time()
        record.update({
            "end_ts": t1,
            "duration_s": round(t1 - t0, 4),
            "ok": False,
            "error": repr(e),
            "output": None,
        })
        log.append(record)
        raise

    t1 = time.time()
    record.update({
        "end_ts": t1,
        "duration_s": round(t1 - t0, 4),
        "ok": True,
        "error": None,
        "output": _safe_json(summarize(result)) if summarize else None,
    })
    log.append(record)
    return result
