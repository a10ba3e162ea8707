# tools/trials.py
"""Deterministic per-shot random streams and indexed fan-out of Monte Carlo trials."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class ShotStreams:
    """Independent generators owned by one shot."""

    lo: np.random.Generator
    ensemble_a: np.random.Generator
    ensemble_b: np.random.Generator
    pulses: np.random.Generator
    technical: np.random.Generator

    @classmethod
    def for_shot(cls, master_seed: int, shot_index: int) -> "ShotStreams":
        # counter-based split: shot i is reproducible without generating shots 0..i-1
        root = np.random.SeedSequence(master_seed, spawn_key=(shot_index,))
        lo, a, b, pulses, technical = (np.random.default_rng(s) for s in root.spawn(5))
        return cls(lo=lo, ensemble_a=a, ensemble_b=b, pulses=pulses, technical=technical)

    def ensemble(self, label: str) -> np.random.Generator:
        return self.ensemble_a if label == "A" else self.ensemble_b


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit seed for an independent sub-run (a scan point, a mode) of `master_seed`."""
    words = np.random.SeedSequence(master_seed, spawn_key=key).generate_state(2)
    return int(words[0]) << 32 | int(words[1])


def run_trials(fn: Callable[[int], T], n: int, workers: int = 1) -> List[T]:
    """
    Evaluate fn(0) .. fn(n-1), optionally on a thread pool.

    Results come back in index order, so serial and parallel runs agree.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    logger.debug("running %d trials on %d threads", n, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))
