"""Small shared helpers: thread caps and atomic text output."""

from __future__ import annotations

import os
import tempfile

THREADS_ENV = "PRIOR_FORGE_THREADS"


def thread_cap() -> int:
    """Worker count for parallel sweeps, capped by PRIOR_FORGE_THREADS."""
    raw = os.environ.get(THREADS_ENV, "")
    try:
        requested = int(raw)
    except ValueError:
        requested = 0
    if requested > 0:
        return requested
    return min(os.cpu_count() or 1, 8)


def write_text_atomic(path: str, payload: str) -> None:
    """Write a text file via a temp file and rename, so readers never see
    a partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
