"""Independent reference computations used by the tests.

Nothing here imports the closed forms under test; each oracle recomputes the
quantity from first principles (explicit linear algebra, brute-force search
or direct simulation with numpy's generator).
"""

from __future__ import annotations

from collections import deque

import numpy as np


def clique_escape_chain(n: int, l: int) -> tuple[float, float]:
    """Escape probabilities from the clique ``K_{n+1}`` hanging off a tree vertex.

    States: 0 is the attachment vertex (degree ``n + 3``: ``n`` clique edges
    plus 3 tree edges leading out), 1..n are clique vertices of degree ``n``.
    The first ``l`` clique vertices carry immune hosts and kill on arrival.
    Solves ``(I - Q) h = b`` for the probability of leaving through a tree
    edge and returns ``(mean over a uniform clique start, start at 0)``.
    """
    size = n + 1
    immune = np.zeros(size, dtype=bool)
    immune[1 : l + 1] = True
    Q = np.zeros((size, size))
    b = np.zeros(size)
    Q[0, 1:] = 1.0 / (n + 3)
    b[0] = 3.0 / (n + 3)
    for k in range(1, size):
        if immune[k]:
            continue  # absorbing: h = 0
        others = [j for j in range(size) if j != k]
        Q[k, others] = 1.0 / n
    # absorbing immune states contribute nothing
    Q[:, immune] = 0.0
    h = np.linalg.solve(np.eye(size) - Q, b)
    h[immune] = 0.0
    return float(h[1:].mean()), float(h[0])


def clique_generation_mc(n: int, p: float, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Direct simulation of one clique generation with 3 offspring per infection.

    Per trial: each of the ``n`` clique hosts is susceptible with probability
    ``p``; 3 walkers start at the attachment vertex and 2 at each susceptible
    clique vertex.  A walker dies on an immune host and escapes through one of
    the 3 outward tree edges.  Returns the number escaping per trial.
    """
    susceptible = rng.random((trials, n)) < p
    starts_t, starts_v = [], []
    for t in range(trials):
        starts_t.extend([t] * 3)
        starts_v.extend([0] * 3)
        idx = np.flatnonzero(susceptible[t]) + 1
        starts_t.extend(np.repeat(t, 2 * len(idx)))
        starts_v.extend(np.repeat(idx, 2))
    tr = np.asarray(starts_t)
    pos = np.asarray(starts_v)
    escaped = np.zeros(trials, dtype=np.int64)
    while tr.size:
        at0 = pos == 0
        u = rng.random(tr.size)
        new = np.empty_like(pos)
        # from 0: n+3 equally likely moves, the last 3 leave the clique
        k0 = np.floor(u[at0] * (n + 3)).astype(np.int64)
        out = k0 >= n
        np.add.at(escaped, tr[at0][out], 1)
        new[at0] = np.where(out, -1, k0 + 1)
        # from clique vertex k: n moves to the other n vertices of K_{n+1}
        kk = pos[~at0]
        j = np.floor(u[~at0] * n).astype(np.int64)
        new[~at0] = np.where(j >= kk, j + 1, j)
        alive = new >= 0
        tr, pos = tr[alive], new[alive]
        on_clique = pos > 0
        dead = np.zeros(tr.size, dtype=bool)
        dead[on_clique] = ~susceptible[tr[on_clique], pos[on_clique] - 1]
        tr, pos = tr[~dead], pos[~dead]
    return escaped


def bfs_distance(graph, u, v, limit: int = 64) -> int:
    """Graph distance by breadth-first search over ``graph.neighbors``."""
    if u == v:
        return 0
    seen = {u}
    frontier = deque([(u, 0)])
    while frontier:
        x, d = frontier.popleft()
        if d >= limit:
            break
        for y in graph.neighbors(x):
            if y == v:
                return d + 1
            if y not in seen:
                seen.add(y)
                frontier.append((y, d + 1))
    raise AssertionError(f"no path of length <= {limit}")


def geometric_cdf(k: np.ndarray, success: float) -> np.ndarray:
    """CDF of the number of failures before the first success."""
    return 1.0 - (1.0 - success) ** (np.asarray(k) + 1)
