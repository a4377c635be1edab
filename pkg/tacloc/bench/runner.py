"""Parallel trial runner keyed by seed."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")


class TrialRunner:
    """Runs independent trials over a process pool.

    Trial callables must be picklable (module-level functions or ``functools.partial``
    of one). Results come back in input order whatever order the workers finish in.
    """

    def __init__(self, *, n_workers: int = 1):
        if n_workers < 1:
            raise ValueError(f"n_workers must be >= 1, got {n_workers}")
        self.n_workers = n_workers

    def map(self, fn: Callable[[U], T], items: Sequence[U]) -> list[T]:
        if self.n_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        workers = min(self.n_workers, len(items))
        logger.debug("running %d trials on %d workers", len(items), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, item) for item in items]
            return [future.result() for future in futures]

    def run(self, trial: Callable[[int], T], seeds: Iterable[int]) -> list[T]:
        """One trial per distinct seed, ordered by seed."""
        return self.map(trial, sorted(set(seeds)))
