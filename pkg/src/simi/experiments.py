"""Experiment campaigns built on the engines and the analytics.

Each campaign returns an :class:`ExperimentResult` holding per-trial records
(written as JSONL), summary rows (written as CSV) and a summary dict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import ndimage, stats

from . import analytics
from .analytics import EstimatorResult, survival_estimate, theorem1_bound, degree_bound
from .dynamics import (EXTINCT, SEALED, Configuration, StopRule, init_regular, run_parasite_wise,
                       run_vertex_wise)
from .graphs import DecoratedTree, GraphSpec, Lattice, RegularTree
from .keyed import derive
from .parallel import run_batch
from .randomness import HostField, OffspringSpec


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentResult:
    experiment: str
    summary: dict
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)


@dataclass
class SweepRow:
    p: float
    trials: int
    survivors: int
    censored: dict
    frequency: float
    ci_lo: float
    ci_hi: float

    @classmethod
    def from_estimate(cls, est: EstimatorResult) -> "SweepRow":
        return cls(est.p, est.trials, est.survivors, dict(est.censored), est.estimate, est.ci[0], est.ci[1])

    def to_dict(self) -> dict:
        out = {"p": self.p, "trials": self.trials, "survivors": self.survivors, "frequency": self.frequency,
               "ci_lo": self.ci_lo, "ci_hi": self.ci_hi}
        out.update({f"n_{k}": v for k, v in self.censored.items()})
        return out


def _finished(status: str) -> bool:
    return status in (EXTINCT, SEALED)


def _check_p(*ps):
    for p in ps:
        if not 0 <= p <= 1:
            raise ExperimentError(f"p must lie in [0, 1], got {p}")


# -- survival sweep ---------------------------------------------------------------

def survival_sweep(graph: GraphSpec, offspring: OffspringSpec, p_grid: Sequence[float], trials: int,
                   stop: StopRule = StopRule(), *, seed: int = 0, seed_matched: bool = True,
                   engine: str = "vertex", level: float = 0.95, workers: int = 1) -> ExperimentResult:
    """Censored survival frequency per p.

    With ``seed_matched`` every p reuses the same trial realisations, so the
    per-trial survival indicator is monotone in p; violations are reported.
    """
    if not p_grid:
        raise ExperimentError("p grid must be non-empty")
    _check_p(*p_grid)
    grid = sorted(p_grid)
    rows, records, indicators = [], [], []
    for k, p in enumerate(grid):
        s = seed if seed_matched else derive(seed, k)
        outs = run_batch(graph, offspring, p, s, range(trials), stop, engine, workers=workers)
        rows.append(SweepRow.from_estimate(survival_estimate(outs, p, s, level)))
        records.extend(o.record() for o in outs)
        indicators.append([o.survived for o in outs])
    violations = []
    if seed_matched:
        ind = np.array(indicators, dtype=bool)
        for t in np.flatnonzero((ind[:-1] & ~ind[1:]).any(axis=0)):
            violations.append(int(t))
    summary = {"graph": str(graph), "offspring": str(offspring), "seed": seed, "seed_matched": seed_matched,
               "monotone_violations": violations, "rows": [r.to_dict() for r in rows]}
    return ExperimentResult("sweep", summary, [r.to_dict() for r in rows], records)


# -- coupling audit ----------------------------------------------------------------

def inclusion_violations(small, big) -> list:
    """Vertices infected in the ``small`` run at a step where the ``big`` run
    had not (yet) infected them, restricted to steps observed by both runs."""
    limit = math.inf if _finished(big.status) else big.steps
    bad = []
    for v, t in small.infected_at.items():
        if t > limit:
            continue
        tb = big.infected_at.get(v)
        if tb is None or tb > t:
            bad.append((v, t))
    return bad


def coupling_audit(graph: GraphSpec, offspring: OffspringSpec, p_pairs: Iterable[tuple[float, float]],
                   trials: int, horizon: int, *, seed: int = 0, max_total_parasites: int | None = 20_000,
                   initial=None, initial_big=None) -> ExperimentResult:
    """Vertex-wise runs at ``p <= p'`` on one shared realisation per trial;
    any vertex infected at ``p`` by step n but not at ``p'`` is a violation."""
    stop = StopRule(max_steps=horizon, max_total_parasites=max_total_parasites, detect_sealed=False)
    initial = list(initial or [graph.origin()])
    initial_big = list(initial_big or initial)
    if not set(initial) <= set(initial_big):
        raise ExperimentError("initial set of the p run must be contained in that of the p' run")
    rows, records = [], []
    for p, q in p_pairs:
        _check_p(p, q)
        if p > q:
            raise ExperimentError(f"pair ({p}, {q}) must satisfy p <= p'")
        count, identical = 0, 0
        for t in range(trials):
            hf = HostField(graph, offspring, seed, t)
            a = run_vertex_wise(graph, hf, p, init_regular(graph, hf, p, initial), stop, record_infections=True)
            b = run_vertex_wise(graph, hf, q, init_regular(graph, hf, q, initial_big), stop, record_infections=True)
            bad = inclusion_violations(a, b)
            identical += a.infected_at == b.infected_at and a.total_parasites == b.total_parasites
            count += bool(bad)
            records.append({"p": p, "p_prime": q, "trial": t, "seed": seed, "violations": len(bad),
                            "infected_p": a.total_infected, "infected_p_prime": b.total_infected,
                            "status_p": a.status, "status_p_prime": b.status})
        rows.append({"p": p, "p_prime": q, "trials": trials, "violating_trials": count,
                     "identical_trials": identical})
    summary = {"graph": str(graph), "offspring": str(offspring), "horizon": horizon, "seed": seed,
               "violations": sum(r["violating_trials"] for r in rows), "pairs": rows}
    return ExperimentResult("couple-audit", summary, rows, records)


# -- parasite-wise non-monotonicity ------------------------------------------------

def parasitewise_witness(graph: GraphSpec, offspring: OffspringSpec, p: float, q: float, seed: int, trial: int,
                         horizon: int, ball_radius: int, max_total_parasites: int = 5000,
                         initial=None, prefilter: bool = True) -> dict | None:
    """Compare parasite-wise runs at ``p <= q`` on one realisation.

    Returns ``{"infection": [...], "outlives": bool}`` where ``infection``
    lists vertices within ``ball_radius`` infected at ``p`` by ``horizon``
    but not at ``q``, and ``outlives`` says the ``q`` run died out while the
    ``p`` run was still alive.  Returns ``None`` if either run was censored
    by population before the horizon.

    If the ``p`` run never infects a host with ``A = 0``, every label of the
    ``p`` run is born no later and dies no earlier in the ``q`` run, so no
    witness can exist and the ``q`` run is skipped.
    """
    stop = StopRule(max_steps=horizon, max_total_parasites=max_total_parasites, detect_sealed=False)
    hf = HostField(graph, offspring, seed, trial)
    initial = list(initial or [graph.origin()])
    a = run_parasite_wise(graph, hf, p, init_regular(graph, hf, p, initial), stop, record_infections=True)
    if a.status != EXTINCT and a.steps < horizon:
        return None
    if prefilter and not any(t > 0 and hf.offspring_count(v) == 0 for v, t in a.infected_at.items()):
        return {"infection": [], "outlives": False}
    b = run_parasite_wise(graph, hf, q, init_regular(graph, hf, q, initial), stop, record_infections=True)
    if b.status != EXTINCT and b.steps < horizon:
        return None
    lost = sorted((v for v in a.infected_at if v not in b.infected_at and graph.radius(v) <= ball_radius),
                  key=graph.encode)
    outlives = b.status == EXTINCT and (a.status != EXTINCT or a.steps > b.steps)
    return {"infection": lost, "outlives": outlives}


def parasitewise_nonmonotone_search(graph: GraphSpec, offspring: OffspringSpec, p_pair: tuple[float, float],
                                    trials: Iterable[int], horizon: int, ball_radius: int, *, seed: int = 0,
                                    max_total_parasites: int = 5000, stop_after: int | None = None,
                                    prefilter: bool = True) -> ExperimentResult:
    """Search trial indices for realisations where raising p loses an infection."""
    p, q = p_pair
    _check_p(p, q)
    if p > q:
        raise ExperimentError("need p <= p'")
    witnesses, records, searched, skipped = [], [], 0, 0
    for t in trials:
        searched += 1
        w = parasitewise_witness(graph, offspring, p, q, seed, t, horizon, ball_radius, max_total_parasites,
                                 prefilter=prefilter)
        if w is None:
            skipped += 1
            continue
        if w["infection"] or w["outlives"]:
            witnesses.append(t)
            records.append({"trial": t, "seed": seed, "p": p, "p_prime": q, "outlives": w["outlives"],
                            "vertices": [_plain(v) for v in w["infection"]]})
            if stop_after is not None and len(witnesses) >= stop_after:
                break
    summary = {"graph": str(graph), "offspring": str(offspring), "p": p, "p_prime": q, "seed": seed,
               "searched": searched, "skipped_censored": skipped, "witnesses": witnesses}
    return ExperimentResult("nonmono-search", summary, [{"p": p, "p_prime": q, "searched": searched,
                                                          "witnesses": len(witnesses)}], records)


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


# -- construction equivalence -------------------------------------------------------

def _buckets(values: np.ndarray, k: int) -> np.ndarray:
    edges = np.unique(np.quantile(values, np.linspace(0, 1, k + 1)[1:-1]))
    return np.searchsorted(edges, values, side="right")


def _merge_sparse(table: np.ndarray) -> np.ndarray:
    """Merge adjacent columns until every expected count is at least 5."""
    cols = [table[:, j].astype(float) for j in range(table.shape[1]) if table[:, j].sum() > 0]
    total = sum(c.sum() for c in cols)
    rows = sum(cols)

    def ok(c):
        return (rows * c.sum() / total >= 5).all()

    out = []
    for c in cols:
        if out and not ok(out[-1]):
            out[-1] = out[-1] + c
        else:
            out.append(c)
    while len(out) > 1 and not ok(out[-1]):
        last = out.pop()
        out[-1] = out[-1] + last
    return np.column_stack(out)


def construction_equivalence(graph: GraphSpec, offspring: OffspringSpec, p: float, horizon: int, trials: int,
                             *, seed: int = 0, buckets: int = 8, max_total_parasites: int | None = 100_000,
                             workers: int = 1) -> ExperimentResult:
    """Chi-square comparison of (extinct by horizon, bucketed total infected)
    between the two constructions on independent seeds."""
    _check_p(p)
    stop = StopRule(max_steps=horizon, max_total_parasites=max_total_parasites, detect_sealed=False)
    sv, sp = derive(seed, 1), derive(seed, 2)
    vo = run_batch(graph, offspring, p, sv, range(trials), stop, "vertex", workers=workers)
    po = run_batch(graph, offspring, p, sp, range(trials), stop, "parasite", workers=workers)
    ext = np.array([o.status == EXTINCT for o in vo + po])
    inf = np.array([o.total_infected for o in vo + po], dtype=float)
    b = _buckets(inf, buckets)
    cells = ext.astype(int) * (b.max() + 1) + b
    ncell = 2 * (b.max() + 1)
    table = np.vstack([np.bincount(cells[:trials], minlength=ncell), np.bincount(cells[trials:], minlength=ncell)])
    merged = _merge_sparse(table)
    if merged.shape[1] < 2:
        statistic, pvalue, dof = 0.0, 1.0, 0
    else:
        res = stats.chi2_contingency(merged, correction=False)
        statistic, pvalue, dof = float(res[0]), float(res[1]), int(res[2])
    summary = {"graph": str(graph), "offspring": str(offspring), "p": p, "horizon": horizon, "trials": trials,
               "seed": seed, "statistic": statistic, "pvalue": pvalue, "dof": dof,
               "columns": int(merged.shape[1]), "table": merged.astype(int).tolist()}
    records = [o.record() for o in vo + po]
    return ExperimentResult("equiv-test", summary, [{k: summary[k] for k in ("p", "horizon", "trials", "statistic",
                                                                             "pvalue", "dof")}], records)


# -- geometric lifetime -------------------------------------------------------------

def geometric_ks(samples: np.ndarray, success: float) -> float:
    """Kolmogorov distance between the empirical law of ``samples`` (values in
    1, 2, ...) and Geometric(``success``) on the same support."""
    samples = np.asarray(samples)
    if samples.size == 0:
        return float("nan")
    ks = np.arange(1, samples.max() + 1)
    emp = np.searchsorted(np.sort(samples), ks, side="right") / samples.size
    cdf = 1 - (1 - success) ** ks
    return float(np.max(np.abs(emp - cdf)))


def geometric_lifetime_census(graph: GraphSpec, p: float, trials: int, cap: int = 100_000, *,
                              seed: int = 0) -> ExperimentResult:
    """Single walker from the origin that survives every infection; counts
    the distinct vertices it occupies before dying (origin included)."""
    if not 0 < p < 1:
        raise ExperimentError("p must lie in (0, 1)")
    stop = StopRule(max_steps=cap, max_total_parasites=None, detect_sealed=True)
    one = OffspringSpec.deterministic(1)
    sizes, records, capped = [], [], 0
    for t in range(trials):
        hf = HostField(graph, one, seed, t)
        cfg = Configuration({graph.origin()}, {graph.origin(): 1})
        o = run_parasite_wise(graph, hf, p, cfg, stop, single_parasite=True)
        rec = o.record() | {"visited": o.total_infected}
        records.append(rec)
        if _finished(o.status):
            sizes.append(o.total_infected)
        else:
            capped += 1
    arr = np.array(sizes)
    mean_exact = 1 / (1 - p)
    sd_exact = math.sqrt(p) / (1 - p)
    summary = {"graph": str(graph), "p": p, "trials": trials, "seed": seed, "capped": capped,
               "mean": float(arr.mean()) if arr.size else float("nan"), "mean_exact": mean_exact,
               "stderr": sd_exact / math.sqrt(max(arr.size, 1)), "ks": geometric_ks(arr, 1 - p),
               "first_fresh_death": float(np.mean(arr == 1)) if arr.size else float("nan")}
    hist = np.bincount(arr) if arr.size else np.zeros(1, int)
    rows = [{"visited": k, "count": int(c), "expected": trials * (1 - p) * p ** (k - 1)}
            for k, c in enumerate(hist) if k >= 1]
    return ExperimentResult("lifetime-census", summary, rows, records)


# -- recurrence ---------------------------------------------------------------------

def recurrence_census(graph: GraphSpec, offspring: OffspringSpec, p: float, trials: int,
                      horizons: Sequence[int], *, seed: int = 0, max_total_parasites: int | None = 20_000,
                      engine: str = "vertex", tail_thresholds: Sequence[int] = (1, 5, 10, 20, 50, 100)
                      ) -> ExperimentResult:
    """Parasite arrivals at the origin after time 0, cumulated per horizon.

    Trials stop at the largest horizon or at the population cap, whichever
    comes first; visits are counted over the observed part of each trial."""
    if not 0 <= p < 1:
        raise ExperimentError("p must lie in [0, 1)")
    horizons = sorted(horizons)
    stop = StopRule(max_steps=horizons[-1], max_total_parasites=max_total_parasites, detect_sealed=False)
    outs = run_batch(graph, offspring, p, seed, range(trials), stop, engine, track_origin=True)
    visits = np.zeros((trials, len(horizons)), dtype=np.int64)
    records = []
    for i, o in enumerate(outs):
        steps = np.array([s for s, _ in o.origin_visit_steps], dtype=np.int64)
        counts = np.array([c for _, c in o.origin_visit_steps], dtype=np.int64)
        for j, h in enumerate(horizons):
            visits[i, j] = counts[steps <= h].sum()
        rec = o.record()
        rec["visits_by_horizon"] = dict(zip(map(str, horizons), visits[i].tolist()))
        rec["last_visit"] = int(steps[-1]) if steps.size else None
        records.append(rec)
    rows = []
    for j, h in enumerate(horizons):
        col = visits[:, j]
        observed = sum(o.steps >= h or o.status == EXTINCT for o in outs)
        row = {"horizon": h, "mean_visits": float(col.mean()), "observed_through": int(observed)}
        row.update({f"frac_gt_{k}": float(np.mean(col > k)) for k in tail_thresholds})
        rows.append(row)
    statuses = {}
    for o in outs:
        statuses[o.status] = statuses.get(o.status, 0) + 1
    summary = {"graph": str(graph), "offspring": str(offspring), "p": p, "trials": trials, "seed": seed,
               "statuses": statuses, "rows": rows}
    return ExperimentResult("recurrence", summary, rows, records)


# -- tree asymptotics --------------------------------------------------------------

def tree_asymptotics(offspring: OffspringSpec, degrees: Sequence[int], trials: int,
                     stop: StopRule = StopRule(detect_sealed=False), *, bracket=None, resolution: float = 0.01,
                     seed: int = 0, workers: int = 1, early_stop: bool = True) -> ExperimentResult:
    """p_c bands on regular trees of growing degree, next to ``1/E[A]``."""
    if list(degrees) != sorted(degrees) or min(degrees) < 3:
        raise ExperimentError("degrees must be ascending and >= 3")
    rows, records = [], []
    for d in degrees:
        band = analytics.estimate_pc(RegularTree(d), offspring, trials, stop, bracket, resolution, seed=seed,
                                     workers=workers, early_stop=early_stop)
        rows.append({"d": d, "p_minus": band.p_minus, "p_plus": band.p_plus, "midpoint": band.midpoint,
                     "width": band.width, "theorem1_bound": theorem1_bound(offspring),
                     "degree_bound": degree_bound(d), "top_hit": band.top_hit, "bottom_hit": band.bottom_hit,
                     "nonmonotone": band.nonmonotone})
        records.extend({"d": d, **e.to_dict()} for e in band.estimates)
    summary = {"offspring": str(offspring), "seed": seed, "trials": trials, "rows": rows}
    return ExperimentResult("tree-asymptotics", summary, rows, records)


# -- decorated trees ------------------------------------------------------------------

def nonmonotonicity_campaign(ns: Sequence[int], p: float, trials: int, *, d0: int = 16, seed: int = 0,
                             stop: StopRule = StopRule(max_total_parasites=20_000),
                             workers: int = 1, early_stop: bool = False) -> ExperimentResult:
    """Offspring fixed at 3.  Exact clique offspring means, survival on the
    decorated trees, and survival on the 3-regular tree and on the tree of
    degree ``d0`` at the same p.  With ``early_stop`` each graph stops at its
    first survivor (see ``analytics.survival_at``)."""
    _check_p(p)
    a3 = OffspringSpec.deterministic(3)
    rows, records = [], []
    for n in ns:
        mean = analytics.decorated_offspring_mean(n, p)
        est = analytics.survival_at(DecoratedTree(n), a3, p, trials, stop, seed, workers=workers,
                                    early_stop=early_stop)
        rows.append({"graph": str(DecoratedTree(n)), "n": n, "p": p, "clique_mean": mean,
                     "certificate": mean < 1, "survivors": est.survivors, "trials": est.trials,
                     "ci_lo": est.ci[0], "ci_hi": est.ci[1]})
        records.append(rows[-1])
    for g in (RegularTree(3), RegularTree(d0)):
        est = analytics.survival_at(g, a3, p, trials, stop, seed, workers=workers, early_stop=early_stop)
        rows.append({"graph": str(g), "n": None, "p": p, "clique_mean": None, "certificate": None,
                     "survivors": est.survivors, "trials": est.trials, "ci_lo": est.ci[0], "ci_hi": est.ci[1]})
        records.append(rows[-1])
    summary = {"p": p, "seed": seed, "d0": d0, "early_stop": early_stop, "rows": rows}
    return ExperimentResult("decorated", summary, rows, records)


# -- frog-model regime: theta(N) ------------------------------------------------------

def theta_probe(offspring: OffspringSpec, N: int, r_guess: float, eps: float, trials: int, *, d: int = 2,
                seed: int = 0, max_total_parasites: int | None = 1_000_000) -> ExperimentResult:
    """Fraction of trials (given ``A_0 >= 2``) whose infected set contains the
    cube ``B_inf(0, N)`` by step ``R(N) = ceil(N / (r (1 - eps)))``, started
    from ``A_0 - 1`` parasites at the origin with every host susceptible."""
    if offspring.p_zero() > 0:
        raise ExperimentError("theta probe needs A >= 1 almost surely")
    if not (0 < eps < 1 and r_guess > 0):
        raise ExperimentError("need 0 < eps < 1 and r_guess > 0")
    if r_guess * (1 - eps) >= 1:
        raise ExperimentError("r_guess (1 - eps) >= 1: R(N) < N and the cube cannot be reached in time")
    R = math.ceil(N / (r_guess * (1 - eps)))
    g = Lattice(d)
    stop = StopRule(max_steps=R, max_total_parasites=max_total_parasites, detect_sealed=False)
    rng = range(-N, N + 1)
    cube = [tuple(c) for c in np.array(np.meshgrid(*[rng] * d, indexing="ij")).reshape(d, -1).T.tolist()]
    hits, used, rejected, records, radii = 0, 0, 0, [], []
    for t in range(trials):
        hf = HostField(g, offspring, seed, t)
        a0 = hf.offspring_count(g.origin())
        if a0 < 2:
            rejected += 1
            continue
        used += 1
        cfg = Configuration({g.origin()}, {g.origin(): a0 - 1})
        o = run_parasite_wise(g, hf, 1.0, cfg, stop, record_infections=True)
        inf = o.infected_at
        covered = all(v in inf for v in cube)
        k = 0
        while all(v in inf for v in _linf_shell(d, k + 1)):
            k += 1
        radii.append(k / max(o.steps, 1))
        faces_ok = _faces_hit(inf, d, N)
        hits += covered
        records.append(o.record() | {"covered": covered, "inscribed_radius": k, "faces_hit": faces_ok})
    theta = hits / used if used else float("nan")
    summary = {"offspring": str(offspring), "N": N, "R": R, "r_guess": r_guess, "eps": eps, "trials": trials,
               "used": used, "rejected": rejected, "theta": theta,
               "r_hat": float(np.mean(radii)) if radii else float("nan"), "seed": seed}
    return ExperimentResult("theta-probe", summary, [summary], records)


def _linf_shell(d: int, k: int):
    rng = range(-k, k + 1)
    for c in np.array(np.meshgrid(*[rng] * d, indexing="ij")).reshape(d, -1).T.tolist():
        if max(map(abs, c)) == k:
            yield tuple(c)


def _faces_hit(infected, d: int, N: int) -> bool:
    for axis in range(d):
        for sign in (N, -N):
            if not any(v[axis] == sign and max(map(abs, v)) <= N for v in infected):
                return False
    return True


# -- site percolation -------------------------------------------------------------------

def crossing_probability_table(p_grid: Sequence[float], sizes: Sequence[int], trials: int, *,
                               seed: int = 0) -> dict:
    """Left-right crossing frequency of susceptible sites in ``L x L`` boxes,
    with sites open iff ``U_x <= p`` on the shared host field."""
    g = Lattice(2)
    one = OffspringSpec.deterministic(1)
    out = {}
    for L in sizes:
        xs, ys = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
        fps = g.fingerprints(np.column_stack([xs.ravel(), ys.ravel()]))
        hits = np.zeros(len(p_grid), dtype=np.int64)
        for t in range(trials):
            u = HostField(g, one, derive(seed, L), t).uniform_fps(fps).reshape(L, L)
            for j, p in enumerate(p_grid):
                lab, _ = ndimage.label(u <= p)
                hits[j] += bool(np.intersect1d(lab[0][lab[0] > 0], lab[-1][lab[-1] > 0]).size)
        out[L] = hits / trials
    return out


def _crossing_point(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float | None:
    diff = b - a
    for j in range(len(p) - 1):
        if diff[j] <= 0 <= diff[j + 1] and diff[j + 1] != diff[j]:
            return float(p[j] + (p[j + 1] - p[j]) * (-diff[j]) / (diff[j + 1] - diff[j]))
    return None


def site_percolation_baseline(p_grid: Sequence[float], sizes: Sequence[int], trials: int, *,
                              seed: int = 0) -> ExperimentResult:
    """Crossing curves per box size; the estimate is the mean intersection
    point of consecutive curves."""
    _check_p(*p_grid)
    grid = np.array(sorted(p_grid))
    sizes = sorted(sizes)
    table = crossing_probability_table(grid, sizes, trials, seed=seed)
    points = []
    for s, l in zip(sizes, sizes[1:]):
        c = _crossing_point(grid, table[s], table[l])
        if c is not None:
            points.append(c)
    rows = [{"L": L, "p": float(p), "crossing": float(v)} for L in sizes for p, v in zip(grid, table[L])]
    summary = {"sizes": sizes, "trials": trials, "seed": seed, "crossings": points,
               "pc_estimate": float(np.mean(points)) if points else None}
    return ExperimentResult("percolation", summary, rows, rows)


# -- p_c estimation wrapper -----------------------------------------------------------

def estimate_pc_experiment(graph: GraphSpec, offspring: OffspringSpec, trials: int, stop: StopRule = StopRule(),
                           *, bracket=None, resolution: float = 0.01, seed: int = 0, workers: int = 1,
                           early_stop: bool = False) -> ExperimentResult:
    band = analytics.estimate_pc(graph, offspring, trials, stop, bracket, resolution, seed=seed, workers=workers,
                                 early_stop=early_stop)
    summary = {"graph": str(graph), "offspring": str(offspring), "seed": seed,
               "theorem1_bound": theorem1_bound(offspring), "degree_bound": degree_bound(graph.max_degree),
               **{k: v for k, v in band.to_dict().items() if k != "estimates"}}
    rows = [SweepRow.from_estimate(e).to_dict() for e in band.estimates]
    return ExperimentResult("estimate-pc", summary, rows, [e.to_dict() for e in band.estimates])


def simulate(graph: GraphSpec, offspring: OffspringSpec, p: float, trials: int, stop: StopRule = StopRule(), *,
             seed: int = 0, engine: str = "vertex", workers: int = 1) -> ExperimentResult:
    _check_p(p)
    outs = run_batch(graph, offspring, p, seed, range(trials), stop, engine, workers=workers)
    est = survival_estimate(outs, p, seed)
    ext = [o.extinction_time for o in outs if o.extinction_time is not None]
    summary = {"graph": str(graph), "offspring": str(offspring), "p": p, "engine": engine, "trials": trials,
               "seed": seed, "survivors": est.survivors, "extinct": len(ext),
               "max_extinction_time": max(ext) if ext else None,
               "mean_total_infected": float(np.mean([o.total_infected for o in outs]))}
    return ExperimentResult("simulate", summary, [SweepRow.from_estimate(est).to_dict()], [o.record() for o in outs])


EXPERIMENTS: dict[str, Callable[..., ExperimentResult]] = {
    "simulate": simulate,
    "sweep": survival_sweep,
    "estimate-pc": estimate_pc_experiment,
    "couple-audit": coupling_audit,
    "nonmono-search": parasitewise_nonmonotone_search,
    "equiv-test": construction_equivalence,
    "lifetime-census": geometric_lifetime_census,
    "recurrence": recurrence_census,
    "tree-asymptotics": tree_asymptotics,
    "decorated": nonmonotonicity_campaign,
    "theta-probe": theta_probe,
    "percolation": site_percolation_baseline,
}
