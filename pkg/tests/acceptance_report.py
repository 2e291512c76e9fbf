"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
import time
from contextlib import contextmanager

LINES: dict[str, str] = {}


@contextmanager
def criterion(key: str, title: str, time_limit: float | None = None):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        LINES[key] = f"FAIL  {key}  {title}  ({elapsed:.2f}s): {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        print(LINES[key])
        raise
    elapsed = time.perf_counter() - start
    if time_limit is not None and elapsed >= time_limit:
        LINES[key] = f"FAIL  {key}  {title}  ({elapsed:.2f}s >= {time_limit}s limit)"
        print(LINES[key])
        raise AssertionError(LINES[key])
    LINES[key] = f"PASS  {key}  {title}  ({elapsed:.2f}s)"
    print(LINES[key])
