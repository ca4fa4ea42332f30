"""Trial batches, optionally fanned out over worker processes.

A trial is a pure function of ``(seed, trial index)``, so results are merged
by trial index and do not depend on scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable

from .dynamics import StopRule, TrialOutcome, run_trial
from .graphs import GraphSpec
from .randomness import OffspringSpec


def _chunk(args):
    graph, offspring, p, seed, trials, stop, engine, kwargs = args
    return [run_trial(graph, offspring, p, seed, t, stop, engine, **kwargs) for t in trials]


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return workers


def run_batch(graph: GraphSpec, offspring: OffspringSpec, p: float, seed: int, trials: Iterable[int],
              stop: StopRule = StopRule(), engine: str = "vertex", *, workers: int = 1,
              **kwargs) -> list[TrialOutcome]:
    """Run the given trial indices and return outcomes sorted by index."""
    trials = list(trials)
    workers = resolve_workers(workers)
    if workers == 1 or len(trials) < 2 * workers:
        out = _chunk((graph, offspring, p, seed, trials, stop, engine, kwargs))
    else:
        size = max(1, len(trials) // (workers * 4))
        chunks = [trials[i : i + size] for i in range(0, len(trials), size)]
        with ProcessPoolExecutor(workers) as pool:
            parts = pool.map(_chunk, [(graph, offspring, p, seed, c, stop, engine, kwargs) for c in chunks])
            out = [o for part in parts for o in part]
    return sorted(out, key=lambda o: o.trial)
