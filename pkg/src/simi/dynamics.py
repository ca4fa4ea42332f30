"""The two SIMI engines.

``run_vertex_wise`` consumes per-vertex jump directions ``D^x_k``;
``run_parasite_wise`` moves labelled parasites along pre-assigned walks
``Y^{x,i}``.  Both read immunity and offspring from the same
:class:`~simi.randomness.HostField`, so runs at different ``p`` (or with the
other engine) are coupled on a shared realisation.

Within a step, only arrivals at uninfected vertices interact.  Those are
resolved per target vertex in canonical order: vertex-wise by (source key
bytes, jump counter), parasite-wise by (birth key bytes, label index).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graphs import GraphSpec
from .keyed import vertex_jumps_nb, walk_steps_nb
from .randomness import HostField

UNSEEN, INFECTED, IMMUNE = 0, 1, 2

EXTINCT = "extinct"
SEALED = "sealed"
CENSORED_TIME = "censored_time"
CENSORED_POPULATION = "censored_population"
CENSORED_RADIUS = "censored_radius"
CENSORED = (CENSORED_TIME, CENSORED_POPULATION, CENSORED_RADIUS)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class StopRule:
    """Budget after which a trial is declared censored.

    ``detect_sealed`` ends a trial as soon as every boundary host of the
    infected set has been revealed immune: no further infection is possible,
    so extinction is certain even though walkers may still be alive.
    """

    max_steps: int | None = 2000
    max_total_parasites: int | None = 100_000
    max_radius: int | None = None
    detect_sealed: bool = True

    def __post_init__(self):
        if self.max_steps is None and self.max_total_parasites is None and self.max_radius is None:
            raise ConfigurationError("stop rule needs at least one finite bound")
        for name in ("max_steps", "max_total_parasites", "max_radius"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigurationError(f"{name} must be >= 0")


@dataclass
class Configuration:
    """State ``(I, eta)``: infected set, parasite counts on it, and revealed
    boundary immunities (only immune hosts stay on the boundary once seen)."""

    infected: set
    counts: dict
    revealed_boundary: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.infected:
            raise ConfigurationError("initial infected set must be non-empty")
        if not set(self.counts) <= self.infected:
            raise ConfigurationError("parasite counts must be supported on the infected set")
        if any(c < 0 for c in self.counts.values()):
            raise ConfigurationError("parasite counts must be non-negative")
        if set(self.revealed_boundary) & self.infected:
            raise ConfigurationError("revealed boundary vertices cannot be infected")

    @property
    def alive(self) -> int:
        return sum(self.counts.values())


@dataclass
class TrialOutcome:
    status: str
    steps: int
    extinction_time: int | None
    total_infected: int
    total_parasites: int
    peak_alive: int
    alive: int
    origin_visits: int
    max_radius: int
    seed: int
    trial: int
    p: float
    engine: str
    wallclock: float = 0.0
    infected_at: dict | None = None
    origin_visit_steps: list | None = None
    trace: list | None = None

    @property
    def survived(self) -> bool:
        """Survival under the stop rule: the trial was censored, not extinct."""
        return self.status in CENSORED

    def record(self) -> dict:
        """JSON-ready record (no wallclock: records must be reproducible)."""
        return {
            "trial": self.trial,
            "seed": self.seed,
            "engine": self.engine,
            "p": self.p,
            "status": self.status,
            "steps": self.steps,
            "extinction_time": self.extinction_time,
            "total_infected": self.total_infected,
            "total_parasites": self.total_parasites,
            "peak_alive": self.peak_alive,
            "alive": self.alive,
            "origin_visits": self.origin_visits,
            "max_radius": self.max_radius,
        }


def init_regular(graph: GraphSpec, field: HostField, p: float, initial_infected: Iterable) -> Configuration:
    """Regular initial configuration: ``A_x`` parasites on each initial vertex."""
    initial = set(initial_infected)
    if not initial:
        raise ConfigurationError("initial infected set must be non-empty")
    for v in initial:
        graph.validate(v)
    return Configuration(set(initial), {v: field.offspring_count(v) for v in initial})


class _Arena:
    """Vertices touched by one trial, indexed by local id, with lazily filled
    adjacency rows.  Randomness stays keyed on vertex fingerprints, so local
    ids never influence what a vertex draws."""

    def __init__(self, graph: GraphSpec, field: HostField, cap: int = 256):
        self.graph = graph
        self.field = field
        self.width = graph.max_degree
        self.keys: list = []
        self.ids: dict = {}
        self._sortkeys: list = []
        self._fpcache: dict = {}
        self.n = 0
        self.cap = cap
        self.fp = np.zeros(cap, dtype=np.uint64)
        self.vkey = np.zeros(cap, dtype=np.uint64)
        self.deg = np.zeros(cap, dtype=np.int64)
        self.nbr = np.full((cap, self.width), -1, dtype=np.int64)
        self.state = np.zeros(cap, dtype=np.int8)
        self.counts = np.zeros(cap, dtype=np.int64)
        self.jumps = np.zeros(cap, dtype=np.int64)

    def _grow(self):
        new = self.cap * 2
        for name in ("fp", "vkey", "deg", "state", "counts", "jumps"):
            arr = getattr(self, name)
            out = np.zeros(new, dtype=arr.dtype)
            out[: self.cap] = arr
            setattr(self, name, out)
        nbr = np.full((new, self.width), -1, dtype=np.int64)
        nbr[: self.cap] = self.nbr
        self.nbr = nbr
        self.cap = new

    def add(self, v) -> int:
        i = self.ids.get(v)
        if i is not None:
            return i
        if self.n == self.cap:
            self._grow()
        i = self.n
        self.n += 1
        self.ids[v] = i
        self.keys.append(v)
        self._sortkeys.append(None)
        h = self.graph.fingerprint_cached(v, self._fpcache)
        self.fp[i] = h
        self.vkey[i] = self.field.direction_key_fp(h)
        self.deg[i] = self.graph.degree(v)
        return i

    def target(self, x: int, j: int) -> int:
        y = self.nbr[x, j]
        if y < 0:
            y = self.add(self.graph.neighbor(self.keys[x], int(j)))
            self.nbr[x, j] = y
        return int(y)

    def sortkey(self, i: int) -> bytes:
        k = self._sortkeys[i]
        if k is None:
            k = self.graph.encode(self.keys[i])
            self._sortkeys[i] = k
        return k

    def uniform(self, i: int) -> float:
        return self.field.uniform_fp(int(self.fp[i]))

    def offspring(self, i: int) -> int:
        return self.field.offspring_fp(int(self.fp[i]))


class _Run:
    """Bookkeeping shared by both engines: infection, boundary, stop rule."""

    def __init__(self, engine, graph, field, p, config, stop, *, single_parasite, record_infections,
                 track_origin, trace, thinned=False):
        if not 0 <= p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        self.engine = engine
        self.graph = graph
        self.field = field
        self.p = p
        self.stop = stop
        self.single = single_parasite
        self.thinned = thinned
        self.t0 = time.perf_counter()
        self.arena = _Arena(graph, field)
        self.origin = self.arena.add(graph.origin())
        self.infected_at = {} if record_infections else None
        self.origin_steps = [] if track_origin else None
        self.trace = [] if trace else None
        self.frontier = np.zeros(0, dtype=np.int64)
        self._fresh: list = []
        self.total_infected = 0
        self.total_parasites = 0
        self.max_radius = 0
        self.origin_visits = 0
        self.step = 0
        a = self.arena
        for v in sorted(config.infected, key=graph.encode):
            self.infect(a.add(v), 0)
        for v, st in config.revealed_boundary.items():
            if st in ("immune", IMMUNE):
                i = a.add(v)
                a.state[i] = IMMUNE

    def infect(self, y: int, step: int):
        a = self.arena
        a.state[y] = INFECTED
        self.total_infected += 1
        r = self.graph.radius(a.keys[y])
        if r > self.max_radius:
            self.max_radius = r
        if self.infected_at is not None:
            self.infected_at[a.keys[y]] = step
        self._fresh.append(y)

    def reveal_immune(self, y: int):
        self.arena.state[y] = IMMUNE

    def sealed(self) -> bool:
        """True once no infected vertex has an unresolved neighbour.

        Unmaterialised neighbours count as unresolved.  Resolved infected
        vertices leave the frontier for good, since revealed states never
        revert to unseen.
        """
        a = self.arena
        if self._fresh:
            self.frontier = np.concatenate([self.frontier, np.array(self._fresh, dtype=np.int64)])
            self._fresh = []
        f = self.frontier
        if f.size == 0:
            return True
        rows = a.nbr[f]
        used = np.arange(a.width) < a.deg[f][:, None]
        st = np.where(rows >= 0, a.state[np.maximum(rows, 0)], UNSEEN)
        self.frontier = f[(used & (st == UNSEEN)).any(axis=1)]
        return self.frontier.size == 0

    def susceptible(self, y: int) -> bool:
        a = self.arena
        if a.uniform(y) > self.p:
            return False
        return not self.thinned or a.offspring(y) >= 1

    def offspring(self, y: int) -> int:
        return 1 if self.single else self.arena.offspring(y)

    def check(self, alive: int) -> str | None:
        s = self.stop
        if alive == 0:
            return EXTINCT
        if s.detect_sealed and self.sealed():
            return SEALED
        if s.max_total_parasites is not None and self.total_parasites >= s.max_total_parasites:
            return CENSORED_POPULATION
        if s.max_radius is not None and self.max_radius >= s.max_radius:
            return CENSORED_RADIUS
        if s.max_steps is not None and self.step >= s.max_steps:
            return CENSORED_TIME
        return None

    def emit(self, **rec):
        if self.trace is not None:
            self.trace.append({"step": self.step, **rec})

    def outcome(self, status, alive, peak) -> TrialOutcome:
        return TrialOutcome(
            status=status,
            steps=self.step,
            extinction_time=self.step if status == EXTINCT else None,
            total_infected=self.total_infected,
            total_parasites=self.total_parasites,
            peak_alive=peak,
            alive=alive,
            origin_visits=self.origin_visits,
            max_radius=self.max_radius,
            seed=self.field.seed,
            trial=self.field.trial,
            p=self.p,
            engine=self.engine,
            wallclock=time.perf_counter() - self.t0,
            infected_at=self.infected_at,
            origin_visit_steps=self.origin_steps,
            trace=self.trace,
        )


def _fix_missing(arena: _Arena, tgt: np.ndarray, src: np.ndarray, dirs: np.ndarray):
    miss = np.flatnonzero(tgt < 0)
    for m in miss:
        tgt[m] = arena.target(int(src[m]), int(dirs[m]))


def _group_attacks(idx: np.ndarray, tgt: np.ndarray) -> dict:
    groups: dict = {}
    for m in idx.tolist():
        groups.setdefault(int(tgt[m]), []).append(m)
    return groups


def run_vertex_wise(graph: GraphSpec, field: HostField, p: float, config: Configuration,
                    stop: StopRule = StopRule(), *, single_parasite: bool = False,
                    record_infections: bool = False, track_origin: bool = False,
                    trace: bool = False, thinned: bool = False) -> TrialOutcome:
    """Vertex-wise construction with per-vertex jump counters.

    At each step every parasite on ``x`` takes the next unused direction of
    ``x``.  The first arrival at an uninfected host reveals it: an immune host
    kills it and every later arrival of the step; a susceptible host is
    infected, the attacker dies and ``A_y`` parasites appear at ``y``, while
    later arrivals of the same step survive on ``y``.
    """
    run = _Run("vertex", graph, field, p, config, stop, single_parasite=single_parasite,
               record_infections=record_infections, track_origin=track_origin, trace=trace,
               thinned=thinned)
    a = run.arena
    for v, c in config.counts.items():
        c = 1 if single_parasite and c > 0 else c
        a.counts[a.ids[v]] = c
        run.total_parasites += c
    alive = int(a.counts[: a.n].sum())
    peak = alive
    while True:
        status = run.check(alive)
        if status:
            return run.outcome(status, alive, peak)
        run.step += 1
        occ = np.flatnonzero(a.counts[: a.n])
        src, slot, dirs, tgt = vertex_jumps_nb(occ, a.counts, a.jumps, a.vkey, a.deg, a.nbr)
        _fix_missing(a, tgt, src, dirs)
        a.counts[occ] = 0
        hit = a.state[tgt] == INFECTED
        moved = tgt[hit]
        if moved.size:
            a.counts[: a.n] += np.bincount(moved, minlength=a.n)
        visits = int(np.count_nonzero(tgt == run.origin))
        if visits:
            run.origin_visits += visits
            if run.origin_steps is not None:
                run.origin_steps.append((run.step, visits))
        immune_deaths = attacker_deaths = offspring = 0
        groups = _group_attacks(np.flatnonzero(~hit), tgt)
        for y in sorted(groups, key=a.sortkey):
            ms = groups[y]
            if len(ms) > 1:
                ms.sort(key=lambda m: (a.sortkey(int(src[m])), int(slot[m])))
            if a.state[y] == UNSEEN:
                if run.susceptible(y):
                    run.infect(y, run.step)
                    born = run.offspring(y)
                    run.total_parasites += born
                    a.counts[y] += born + len(ms) - 1
                    attacker_deaths += 1
                    offspring += born
                    run.emit(event="infect", vertex=a.keys[y], source=a.keys[int(src[ms[0]])],
                             slot=int(slot[ms[0]]), offspring=born)
                    continue
                run.reveal_immune(y)
            immune_deaths += len(ms)
            run.emit(event="immune", vertex=a.keys[y], deaths=len(ms))
        new_alive = alive - immune_deaths - attacker_deaths + offspring
        run.emit(event="tally", alive_before=alive, immune_deaths=immune_deaths,
                 attacker_deaths=attacker_deaths, offspring=offspring, alive_after=new_alive)
        alive = new_alive
        if alive > peak:
            peak = alive


def run_parasite_wise(graph: GraphSpec, field: HostField, p: float, config: Configuration,
                      stop: StopRule = StopRule(), *, single_parasite: bool = False,
                      record_infections: bool = False, track_origin: bool = False,
                      trace: bool = False, thinned: bool = False) -> TrialOutcome:
    """Parasite-wise construction: label ``(x, i)`` follows ``Y^{x,i}``.

    On reaching an uninfected vertex ``y``: immune host -> the parasite dies;
    susceptible with ``A_y = 0`` -> it dies but ``y`` is infected; susceptible
    with ``A_y >= 1`` -> ``y`` is infected, the attacker lives on and labels
    ``(y, 1) .. (y, A_y - 1)`` start at ``y``.  With ``single_parasite`` every
    infection behaves as ``A_y = 1``.
    """
    run = _Run("parasite", graph, field, p, config, stop, single_parasite=single_parasite,
               record_infections=record_infections, track_origin=track_origin, trace=trace,
               thinned=thinned)
    a = run.arena
    lkey, birth, index = [], [], []
    for v in sorted(config.counts, key=graph.encode):
        c = config.counts[v]
        c = 1 if single_parasite and c > 0 else c
        x = a.ids[v]
        for i in range(1, c + 1):
            lkey.append(field.label_key_fp(int(a.fp[x]), i))
            birth.append(x)
            index.append(i)
    run.total_parasites = len(lkey)
    lkey = np.array(lkey, dtype=np.uint64)
    birth = np.array(birth, dtype=np.int64)
    index = np.array(index, dtype=np.int64)
    steps = np.zeros(len(lkey), dtype=np.int64)
    pos = birth.copy()
    alive = len(lkey)
    peak = alive
    while True:
        status = run.check(alive)
        if status:
            return run.outcome(status, alive, peak)
        run.step += 1
        dirs, new = walk_steps_nb(lkey, steps, pos, a.deg, a.nbr)
        _fix_missing(a, new, pos, dirs)
        pos = new
        hit = a.state[pos] == INFECTED
        visits = int(np.count_nonzero(pos == run.origin))
        if visits:
            run.origin_visits += visits
            if run.origin_steps is not None:
                run.origin_steps.append((run.step, visits))
        keep = np.ones(alive, dtype=np.bool_)
        nk, nb, ni = [], [], []
        immune_deaths = attacker_deaths = offspring = 0
        groups = _group_attacks(np.flatnonzero(~hit), pos)
        for y in sorted(groups, key=a.sortkey):
            ms = groups[y]
            if len(ms) > 1:
                ms.sort(key=lambda m: (a.sortkey(int(birth[m])), int(index[m])))
            if a.state[y] == UNSEEN:
                if run.susceptible(y):
                    run.infect(y, run.step)
                    born = run.offspring(y)
                    m0 = ms[0]
                    if born == 0:
                        keep[m0] = False
                        attacker_deaths += 1
                    else:
                        fp = int(a.fp[y])
                        for i in range(1, born):
                            nk.append(field.label_key_fp(fp, i))
                            nb.append(y)
                            ni.append(i)
                        offspring += born - 1
                    run.total_parasites += born
                    run.emit(event="infect", vertex=a.keys[y], label=[a.keys[int(birth[m0])], int(index[m0])],
                             offspring=born)
                    continue
                run.reveal_immune(y)
            keep[ms] = False
            immune_deaths += len(ms)
            run.emit(event="immune", vertex=a.keys[y], deaths=len(ms))
        if not keep.all() or nk:
            lkey, birth, index, steps, pos = (arr[keep] for arr in (lkey, birth, index, steps, pos))
            if nk:
                lkey = np.concatenate([lkey, np.array(nk, dtype=np.uint64)])
                nb_arr = np.array(nb, dtype=np.int64)
                birth = np.concatenate([birth, nb_arr])
                index = np.concatenate([index, np.array(ni, dtype=np.int64)])
                steps = np.concatenate([steps, np.zeros(len(nk), dtype=np.int64)])
                pos = np.concatenate([pos, nb_arr])
        new_alive = alive - immune_deaths - attacker_deaths + offspring
        run.emit(event="tally", alive_before=alive, immune_deaths=immune_deaths,
                 attacker_deaths=attacker_deaths, offspring=offspring, alive_after=new_alive)
        alive = new_alive
        if alive > peak:
            peak = alive


ENGINES = {"vertex": run_vertex_wise, "parasite": run_parasite_wise}


def run_trial(graph: GraphSpec, offspring, p: float, seed: int, trial: int, stop: StopRule = StopRule(),
              engine: str = "vertex", initial=None, **kwargs) -> TrialOutcome:
    """One trial from the regular configuration on ``initial`` (default: origin)."""
    field = HostField(graph, offspring, seed, trial)
    config = init_regular(graph, field, p, initial or [graph.origin()])
    return ENGINES[engine](graph, field, p, config, stop, **kwargs)


def lifetime_and_visited(graph: GraphSpec, field: HostField, p: float, x, i: int, ignore=(),
                         cap: int = 100_000):
    """Lifetime and visited set of the walk ``Y^{x,i}``.

    The lifetime is the first time the walk stands outside ``ignore`` on an
    immune host; the visited set holds the positions strictly before it.
    Returns ``(None, partial set)`` if the walk survives ``cap`` steps.
    """
    ignore = set(ignore)
    visited = set()
    v = x
    for n in range(cap + 1):
        if v not in ignore and not field.susceptible(v, p):
            return n, visited
        visited.add(v)
        v = field.walk_step((x, i), n + 1, v)
    return None, visited


def eventually_infected(graph: GraphSpec, field: HostField, p: float, initial, radius_cap: int,
                        explore_radius: int | None = None, cap: int = 100_000) -> frozenset:
    """Vertices within ``radius_cap`` of the origin that are ever infected,
    by closure over infection paths (requires ``A >= 1`` almost surely).

    Labels born beyond ``explore_radius`` (default ``2 * radius_cap``) are not
    followed, so the result is exact whenever the whole infection stays inside
    that radius.
    """
    if field.offspring.p_zero() > 0:
        raise ConfigurationError("infection-path closure requires A >= 1 almost surely")
    if explore_radius is None:
        explore_radius = 2 * radius_cap
    initial = set(initial)
    infected = set(initial)
    queue = [(x, i) for x in sorted(initial, key=graph.encode) for i in range(1, field.offspring_count(x) + 1)]
    while queue:
        x, i = queue.pop()
        _, visited = lifetime_and_visited(graph, field, p, x, i, initial, cap)
        for y in visited:
            if y in infected:
                continue
            infected.add(y)
            if graph.radius(y) <= explore_radius:
                queue.extend((y, j) for j in range(1, field.offspring_count(y)))
    return frozenset(y for y in infected if graph.radius(y) <= radius_cap)
