import os
from concurrent.futures import ThreadPoolExecutor


def n_workers():
    """Worker cap from ``CWL_THREADS`` (default 1, i.e. serial)."""
    try:
        return max(1, int(os.environ.get("CWL_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """Ordered map; results come back in input order regardless of workers."""
    items = list(items)
    workers = min(n_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
