"""Closed-form quantities, bounds and estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

from .dynamics import CENSORED, StopRule
from .graphs import GraphSpec
from .randomness import OffspringSpec


class AnalyticsError(ValueError):
    pass


# -- branching process ----------------------------------------------------------

@dataclass(frozen=True)
class BGWResult:
    extinction_prob: float
    mean_offspring: float
    iterations: int

    @property
    def survival_prob(self) -> float:
        return 1.0 - self.extinction_prob


def bgw_extinction(offspring: OffspringSpec, p: float = 1.0, tol: float = 1e-12,
                   max_iter: int = 1_000_000) -> BGWResult:
    """Extinction probability of the BGW process whose offspring is ``A`` with
    probability ``p`` and 0 otherwise.

    Iterates ``s <- (1-p) + p G_A(s)`` from ``s = 0``; the iterates increase
    to the smallest fixed point.  A Newton step (which also increases
    monotonically to the smallest root of the convex map) is interleaved so
    that near-critical laws converge in a handful of iterations.
    """
    if not 0 <= p <= 1:
        raise AnalyticsError(f"p must lie in [0, 1], got {p}")
    m = p * offspring.mean()
    if not math.isfinite(m):
        raise AnalyticsError("offspring mean must be finite")
    if p * offspring.pmf(1) == 1.0:
        return BGWResult(0.0, m, 0)
    if m <= 1:
        return BGWResult(1.0, m, 0)

    def f(s):
        return (1 - p) + p * offspring.pgf(s)

    s = 0.0
    for it in range(1, max_iter + 1):
        fs = f(s)
        slope = p * offspring.pgf_derivative(s) - 1.0
        nxt = fs
        if slope < 0:
            newton = s - (fs - s) / slope
            if fs <= newton < 1:
                nxt = newton
        if abs(nxt - s) < tol:
            return BGWResult(min(nxt, 1.0), m, it)
        s = nxt
    raise AnalyticsError("fixed-point iteration did not converge")


def theorem1_bound(offspring: OffspringSpec) -> float:
    """Lower bound ``min(1, 1/E[A])`` on p_c, with ``1/inf = 0``."""
    m = offspring.mean()
    if math.isinf(m):
        return 0.0
    return 1.0 if m <= 1 else 1.0 / m


def degree_bound(max_degree: int) -> float:
    """Lower bound ``1/(Delta - 1)`` on p_c for degree bounded by Delta."""
    if max_degree < 2:
        raise AnalyticsError(f"maximum degree must be >= 2, got {max_degree}")
    return 1.0 / (max_degree - 1)


# -- decorated tree -----------------------------------------------------------

def _check_clique(n: int, l: int):
    if n < 1:
        raise AnalyticsError(f"n must be >= 1, got {n}")
    if not 0 <= l <= n:
        raise AnalyticsError(f"number of immune hosts must lie in 0..{n}, got {l}")


def escape_prob_interior(n: int, l: int) -> float:
    """Probability that a parasite started at a uniform non-exit clique vertex
    leaves the clique before death, given ``l`` immune hosts among ``n``."""
    _check_clique(n, l)
    return 3 * (n - l) / (n * ((n + 4) * l + 3))


def escape_prob_exit(n: int, l: int) -> float:
    """Same, for a parasite started at the exit (tree) vertex of the clique."""
    _check_clique(n, l)
    return 3 * (l + 1) / ((n + 4) * l + 3)


def _log_binom_pmf(n: int, k: int, q: float) -> float:
    if q == 0:
        return 0.0 if k == 0 else -math.inf
    if q == 1:
        return 0.0 if k == n else -math.inf
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            + k * math.log(q) + (n - k) * math.log1p(-q))


def decorated_offspring_mean(n: int, p: float) -> float:
    """Exact mean number of parasites leaving one clique of G^(n) alive
    (3 offspring per infection), summing over the immune count L ~ Bin(n, 1-p)."""
    if n < 1:
        raise AnalyticsError("n must be >= 1")
    if not 0 <= p <= 1:
        raise AnalyticsError("p must lie in [0, 1]")
    terms = []
    for l in range(n + 1):
        lw = _log_binom_pmf(n, l, 1 - p)
        if lw == -math.inf:
            continue
        terms.append(math.exp(lw) * (3 * escape_prob_exit(n, l) + 2 * n * escape_prob_interior(n, l)))
    return math.fsum(terms)


def decorated_mean_bound(n: int, p: float) -> float:
    """Upper bound on :func:`decorated_offspring_mean` from the inverse
    binomial moment estimate (valid for large ``n``)."""
    return 3 * (p ** n + 6 / (n + 4)) + 2 * n * (p ** n + 6 / ((n + 4) * n * (1 - p)))


# -- thinning -------------------------------------------------------------------

@dataclass(frozen=True)
class ThinnedParameters:
    """Immunity rule ``U_x <= p and A_x >= 1`` with offspring ``A | A >= 1``."""

    p: float
    offspring: OffspringSpec
    conditioned: OffspringSpec
    effective_p: float

    def susceptible(self, u: float, a: int) -> bool:
        return u <= self.p and a >= 1


def thinned_parameters(offspring: OffspringSpec, p: float) -> ThinnedParameters:
    p0 = offspring.p_zero()
    if p0 >= 1:
        raise AnalyticsError("P(A = 0) = 1: nothing to condition on")
    return ThinnedParameters(p, offspring, offspring.conditioned_positive(), p * (1 - p0))


# -- estimation -------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise AnalyticsError("need 0 <= successes <= trials and trials >= 1")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass
class EstimatorResult:
    p: float
    estimate: float
    ci: tuple[float, float]
    trials: int
    survivors: int
    censored: dict
    seed: int
    level: float = 0.95

    @property
    def excludes_zero(self) -> bool:
        return self.ci[0] > 0

    def to_dict(self) -> dict:
        return {"p": self.p, "estimate": self.estimate, "ci_lo": self.ci[0], "ci_hi": self.ci[1],
                "trials": self.trials, "survivors": self.survivors, "censored": dict(self.censored),
                "seed": self.seed, "level": self.level}


def survival_estimate(outcomes, p: float, seed: int, level: float = 0.95) -> EstimatorResult:
    outcomes = list(outcomes)
    survivors = sum(o.survived for o in outcomes)
    censored = {c: sum(o.status == c for o in outcomes) for c in CENSORED}
    n = len(outcomes)
    return EstimatorResult(p, survivors / n, wilson_interval(survivors, n, level), n, survivors, censored,
                           seed, level)


@dataclass
class PcBand:
    """``p_minus``: largest probed p whose survival CI contains 0;
    ``p_plus``: smallest probed p whose CI excludes 0."""

    p_minus: float
    p_plus: float
    estimates: list = field(default_factory=list)
    top_hit: bool = False
    bottom_hit: bool = False
    nonmonotone: bool = False

    @property
    def midpoint(self) -> float:
        return (self.p_minus + self.p_plus) / 2

    @property
    def width(self) -> float:
        return self.p_plus - self.p_minus

    def to_dict(self) -> dict:
        return {"p_minus": self.p_minus, "p_plus": self.p_plus, "top_hit": self.top_hit,
                "bottom_hit": self.bottom_hit, "nonmonotone": self.nonmonotone,
                "estimates": [e.to_dict() for e in self.estimates]}


def survival_at(graph: GraphSpec, offspring: OffspringSpec, p: float, trials: int, stop: StopRule,
                seed: int, engine: str = "vertex", level: float = 0.95, workers: int = 1,
                early_stop: bool = False, chunk: int = 20) -> EstimatorResult:
    """Survival frequency over trial indices ``0..trials-1``.

    With ``early_stop`` trials run in index order and stop at the first
    survivor.  Whether the Wilson interval excludes 0 (at least one survivor)
    is then the same as for the full budget; the estimate covers only the
    trials actually run.
    """
    from .parallel import run_batch

    if not early_stop:
        outcomes = run_batch(graph, offspring, p, seed, range(trials), stop, engine, workers=workers)
        return survival_estimate(outcomes, p, seed, level)
    outcomes = []
    for lo in range(0, trials, chunk):
        part = run_batch(graph, offspring, p, seed, range(lo, min(lo + chunk, trials)), stop, engine,
                         workers=workers)
        for o in part:
            outcomes.append(o)
            if o.survived:
                return survival_estimate(outcomes, p, seed, level)
    return survival_estimate(outcomes, p, seed, level)


def default_bracket(graph: GraphSpec, offspring: OffspringSpec) -> tuple[float, float]:
    """From the proven lower bound ``max(1/E[A], 1/(Delta-1))`` up to 1."""
    lo = max(theorem1_bound(offspring), degree_bound(graph.max_degree))
    return (lo, 1.0) if lo < 1 else (0.5, 1.0)


def estimate_pc(graph: GraphSpec, offspring: OffspringSpec, trials: int, stop: StopRule = StopRule(),
                bracket: tuple[float, float] | None = None, resolution: float = 0.01, *, seed: int = 0,
                level: float = 0.95, engine: str = "vertex", workers: int = 1,
                early_stop: bool = False) -> PcBand:
    """Bisection on p of the censored survival frequency.

    Every probe reuses trial indices ``0..trials-1`` of ``seed``, so probes
    share their host fields and the coupling in p keeps the search stable.
    """
    lo, hi = default_bracket(graph, offspring) if bracket is None else bracket
    if not 0 <= lo < hi <= 1:
        raise AnalyticsError(f"bad bracket {(lo, hi)}")
    if hi - lo < resolution:
        raise AnalyticsError("bracket narrower than the requested resolution")
    seen: dict = {}

    def probe(p):
        if p not in seen:
            seen[p] = survival_at(graph, offspring, p, trials, stop, seed, engine, level, workers, early_stop)
        return seen[p]

    if not probe(hi).excludes_zero:
        band = PcBand(hi, hi, top_hit=True)
    elif probe(lo).excludes_zero:
        band = PcBand(lo, lo, bottom_hit=True)
    else:
        while hi - lo > resolution:
            mid = round((lo + hi) / 2, 12)
            if probe(mid).excludes_zero:
                hi = mid
            else:
                lo = mid
        band = PcBand(lo, hi)
    band.estimates = [seen[p] for p in sorted(seen)]
    pos = [e.p for e in band.estimates if e.excludes_zero]
    zero = [e.p for e in band.estimates if not e.excludes_zero]
    band.nonmonotone = bool(pos and zero and min(pos) < max(zero))
    return band
