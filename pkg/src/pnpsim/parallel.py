"""Order-preserving fan-out of independent work units."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigurationError

THREADS_ENV = "PNP_SIM_THREADS"


def resolve_threads(threads=None) -> int:
    """Explicit value, else ``$PNP_SIM_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {threads}")
    return threads


def ordered_map(fn, items, threads=None) -> list:
    """``[fn(x) for x in items]``, possibly on a thread pool.

    The integration kernel releases the GIL, so threads give real
    parallelism. Results are always returned in input order.
    """
    items = list(items)
    n = min(resolve_threads(threads), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def annotate(exc: Exception, context: str) -> Exception:
    """Copy of ``exc`` with ``context`` prefixed to its message."""
    try:
        return type(exc)(f"{context}: {exc}")
    except TypeError:
        return exc
