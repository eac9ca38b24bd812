"""Shared plumbing: compensated sums, deterministic parallel maps, writers."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def neumaier_sum(values) -> float:
    """Compensated (Neumaier) sum of a 1-D array, in index order."""
    s = 0.0
    c = 0.0
    for v in np.asarray(values, dtype=float).ravel():
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def thread_count(requested=None) -> int:
    """Resolve a thread budget: explicit arg > GRUSHIN_THREADS > cpu count."""
    if requested is not None and requested != "auto":
        n = int(requested)
        if n < 1:
            raise ValueError("thread count must be >= 1")
        return n
    env = os.environ.get("GRUSHIN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def ordered_parallel_map(fn, items, threads=None):
    """Map fn over items on a thread pool, returning results in input order.

    Workers are expected to release the GIL (numba nogil kernels / numpy).
    The reduction done by the caller is over this index-ordered list, so
    results do not depend on the thread count or scheduling.
    """
    n = thread_count(threads)
    items = list(items)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def fmt17(x) -> str:
    """Format a float with 17 significant digits ('.' decimal separator)."""
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    """Write rows of mixed int/float cells; floats at 17 digits, LF endings."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for c in row:
                if isinstance(c, (float, np.floating)):
                    cells.append(fmt17(c))
                else:
                    cells.append(str(c))
            fh.write(",".join(cells) + "\n")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
