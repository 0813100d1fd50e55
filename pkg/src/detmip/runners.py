"""Task runners for the fork-join phases.

A runner maps an ordered task list to an ordered result list; results are
addressed by task index, never by completion time, so every runner yields the
same output.  Process execution requires module-level task functions with
picklable arguments.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor


class SerialRunner:
    def map(self, tasks):
        return [fn(*args) for fn, args in tasks]

    def close(self):
        pass


class ThreadRunner:
    def __init__(self, max_workers: int):
        self._pool = ThreadPoolExecutor(max_workers=max(1, max_workers))

    def map(self, tasks):
        futures = [self._pool.submit(fn, *args) for fn, args in tasks]
        return [f.result() for f in futures]

    def close(self):
        self._pool.shutdown(wait=True)


class ProcessRunner:
    def __init__(self, max_workers: int):
        try:
            ctx = multiprocessing.get_context("fork")
        except ValueError:  # platforms without fork
            ctx = multiprocessing.get_context("spawn")
        self._pool = ProcessPoolExecutor(max_workers=max(1, max_workers),
                                         mp_context=ctx)

    def map(self, tasks):
        futures = [self._pool.submit(fn, *args) for fn, args in tasks]
        return [f.result() for f in futures]

    def close(self):
        self._pool.shutdown(wait=True)


def make_runner(kind: str, max_workers: int):
    if kind == "serial":
        return SerialRunner()
    if kind == "thread":
        return ThreadRunner(max_workers)
    if kind == "process":
        return ProcessRunner(max_workers)
    raise ValueError(f"unknown executor {kind!r}")
