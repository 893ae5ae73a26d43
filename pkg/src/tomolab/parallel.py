"""Worker-count control shared by the column/angle loops.

Results are always gathered in input order, so output never depends on
the schedule.
"""
import os
from concurrent.futures import ThreadPoolExecutor

_workers = None


def set_workers(n):
    global _workers
    _workers = None if n is None else max(1, int(n))


def get_workers():
    if _workers is not None:
        return _workers
    env = os.environ.get("TOMOLAB_THREADS")
    if env:
        return max(1, int(env))
    return 1


def pmap(fn, items):
    items = list(items)
    n = get_workers()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
