import math

import numpy as np
import pytest
from scipy.optimize import brentq

from simi.analytics import (AnalyticsError, bgw_extinction, decorated_mean_bound, decorated_offspring_mean,
                            degree_bound, escape_prob_exit, escape_prob_interior, estimate_pc, survival_at,
                            theorem1_bound, thinned_parameters, wilson_interval)
from simi.dynamics import StopRule
from simi.graphs import Lattice, Line, RegularTree
from simi.randomness import OffspringSpec

from oracles import clique_escape_chain, clique_generation_mc

DET = OffspringSpec.deterministic


class TestBGW:
    def test_deterministic_two(self):
        r = bgw_extinction(DET(2), 0.75)
        assert r.survival_prob == pytest.approx(2 / 3, abs=1e-10)
        assert r.extinction_prob == pytest.approx(1 / 3, abs=1e-10)

    @pytest.mark.parametrize("p", np.linspace(0, 0.5, 11))
    def test_subcritical(self, p):
        assert bgw_extinction(DET(2), p).survival_prob == pytest.approx(0, abs=1e-9)

    def test_poisson_against_root_finder(self):
        q = brentq(lambda s: math.exp(2 * (s - 1)) - s, 0, 0.9)
        assert bgw_extinction(OffspringSpec.poisson(2)).extinction_prob == pytest.approx(q, abs=1e-10)

    @pytest.mark.parametrize("spec", [DET(3), OffspringSpec.poisson(1.7), OffspringSpec.geometric(0.3),
                                      OffspringSpec.finite({0: 0.3, 3: 0.7})], ids=str)
    def test_threshold_is_mean_one(self, spec):
        for p in np.linspace(0.05, 1, 20):
            q = bgw_extinction(spec, p).extinction_prob
            if p * spec.mean() <= 1:
                assert q == pytest.approx(1, abs=1e-9)
            else:
                assert q < 1 - 1e-6
                # q is a fixed point of the pgf map
                assert (1 - p) + p * spec.pgf(q) == pytest.approx(q, abs=1e-9)

    def test_degenerate_single_child(self):
        assert bgw_extinction(DET(1), 1.0).extinction_prob == 0

    def test_bad_p(self):
        with pytest.raises(AnalyticsError):
            bgw_extinction(DET(2), 1.5)


class TestBounds:
    def test_mean_bound(self):
        assert theorem1_bound(DET(3)) == pytest.approx(1 / 3)
        assert theorem1_bound(DET(1)) == 1
        assert theorem1_bound(OffspringSpec.poisson(0.5)) == 1

    def test_degree(self):
        assert degree_bound(4) == pytest.approx(1 / 3)
        assert degree_bound(2) == 1
        with pytest.raises(AnalyticsError):
            degree_bound(1)


class TestEscape:
    def test_examples(self):
        assert escape_prob_interior(10, 5) == pytest.approx(15 / 730, abs=1e-15)
        assert escape_prob_exit(10, 5) == pytest.approx(18 / 73, abs=1e-15)
        for n in (1, 7, 30):
            assert escape_prob_interior(n, 0) == pytest.approx(1)
            assert escape_prob_exit(n, 0) == pytest.approx(1)
            assert escape_prob_interior(n, n) == 0
            assert escape_prob_exit(n, n) == pytest.approx(3 / (n + 3))

    def test_against_absorbing_chain(self):
        worst = 0.0
        for n in range(1, 31):
            for l in range(n + 1):
                interior, exit_ = clique_escape_chain(n, l)
                worst = max(worst, abs(interior - escape_prob_interior(n, l)), abs(exit_ - escape_prob_exit(n, l)))
        assert worst < 1e-10

    def test_range_errors(self):
        with pytest.raises(AnalyticsError):
            escape_prob_interior(5, 6)
        with pytest.raises(AnalyticsError):
            escape_prob_exit(0, 0)


class TestDecoratedMean:
    def test_below_closed_form_bound(self):
        for n in (10, 50, 200, 400):
            for p in (0.3, 0.5, 0.9):
                assert decorated_offspring_mean(n, p) <= decorated_mean_bound(n, p)

    def test_certificate(self):
        assert decorated_offspring_mean(200, 0.9) < 1

    @pytest.mark.parametrize("p", [0.5, 0.9])
    def test_decreasing_in_n(self, p):
        vals = [decorated_offspring_mean(n, p) for n in range(50, 401, 25)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_matches_direct_simulation(self):
        x = clique_generation_mc(20, 0.8, 20_000, np.random.default_rng(3))
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - decorated_offspring_mean(20, 0.8)) < 3 * se

    def test_limits(self):
        # p = 1: nothing immune, every walker escapes
        assert decorated_offspring_mean(5, 1.0) == pytest.approx(3 + 2 * 5)
        assert decorated_offspring_mean(5, 0.0) == pytest.approx(3 * 3 / 8)


class TestThinning:
    def test_no_zero_mass(self):
        tp = thinned_parameters(DET(2), 0.6)
        assert tp.conditioned == DET(2) and tp.effective_p == pytest.approx(0.6)

    def test_finite(self):
        tp = thinned_parameters(OffspringSpec.finite({0: 0.3, 2: 0.7}), 0.5)
        assert tp.effective_p == pytest.approx(0.35)
        assert tp.conditioned.pmf(2) == pytest.approx(1)
        assert tp.susceptible(0.4, 2) and not tp.susceptible(0.4, 0) and not tp.susceptible(0.6, 2)

    def test_all_zero(self):
        with pytest.raises(AnalyticsError):
            thinned_parameters(DET(0), 0.5)


class TestWilson:
    def test_edges(self):
        assert wilson_interval(0, 100)[0] == 0
        assert wilson_interval(100, 100)[1] == 1

    def test_symmetric_half(self):
        lo, hi = wilson_interval(50, 100)
        assert (lo + hi) / 2 == pytest.approx(0.5)
        assert hi - lo == pytest.approx(0.19, abs=0.005)

    def test_against_closed_form(self):
        z = 1.959963984540054
        k, n = 7, 40
        ph = k / n
        c = (ph + z * z / (2 * n)) / (1 + z * z / n)
        h = z / (1 + z * z / n) * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n))
        assert wilson_interval(k, n) == pytest.approx((c - h, c + h), abs=1e-12)

    def test_errors(self):
        with pytest.raises(AnalyticsError):
            wilson_interval(3, 2)


class TestEstimatePc:
    def test_line_hits_top(self):
        band = estimate_pc(Line(), DET(5), 100, StopRule(), (0.5, 0.99), 0.05)
        assert band.top_hit and band.p_plus == 0.99
        assert all(e.survivors == 0 for e in band.estimates)

    def test_line_near_one_is_only_censored(self):
        # at p = 0.999 the infected interval spans ~2000 sites and walkers need
        # far more than the default 2000 steps to seal it: survivors there are
        # time-censored, and every probe below stays at zero
        band = estimate_pc(Line(), DET(5), 50, StopRule(), (0.5, 0.999), 0.05)
        top = band.estimates[-1]
        assert top.p == 0.999 and top.survivors == top.censored["censored_time"]
        assert all(e.survivors == 0 for e in band.estimates[:-1])
        assert band.p_minus > 0.95

    def test_tree_band_above_bound(self):
        band = estimate_pc(RegularTree(16), DET(2), 150, StopRule(max_total_parasites=20_000, detect_sealed=False),
                           resolution=0.02, early_stop=True)
        assert not band.top_hit and not band.bottom_hit
        assert band.p_plus > theorem1_bound(DET(2))
        assert band.width <= 0.02

    def test_lattice_band_between_bounds(self):
        band = estimate_pc(Lattice(2), DET(3), 60, StopRule(max_total_parasites=5000), (0.2, 1.0), 0.05,
                           early_stop=True)
        assert degree_bound(4) <= band.p_plus < 1

    def test_bracket_errors(self):
        with pytest.raises(AnalyticsError):
            estimate_pc(Line(), DET(2), 10, bracket=(0.5, 0.505), resolution=0.01)
        with pytest.raises(AnalyticsError):
            estimate_pc(Line(), DET(2), 10, bracket=(0.7, 0.5))

    def test_early_stop_decision_matches_full(self):
        stop = StopRule(max_total_parasites=5000)
        for p in (0.5, 0.8, 0.95):
            full = survival_at(Lattice(2), DET(3), p, 40, stop, 0)
            quick = survival_at(Lattice(2), DET(3), p, 40, stop, 0, early_stop=True)
            assert full.excludes_zero == quick.excludes_zero
