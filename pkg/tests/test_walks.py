"""Walk-law oracles: brute-force path enumeration pinned against the exact
count formulas, plus uniformity checks for the conditioned samplers."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare

from bmaps import walks


# ---------------------------------------------------------------------------
# brute-force oracles


def brute_first_passage(depth, steps):
    if depth == 0:
        return 1 if steps == 0 else 0  # level 0 is visited at time 0 already
    n = 0
    for path in itertools.product((1, -1), repeat=steps):
        s = 0
        ok = True
        for i, x in enumerate(path):
            s += x
            if s == -depth and i < steps - 1:
                ok = False
                break
            if s < -depth:
                ok = False
                break
        if ok and s == -depth:
            n += 1
    return n


def brute_floor_jumps(segments, total, cap=12):
    n = 0
    for v in itertools.product(range(-1, cap), repeat=segments):
        if sum(v) == total:
            n += 1
    return n


def brute_ternary(steps, total):
    n = 0
    for v in itertools.product((-1, 0, 1), repeat=steps):
        if sum(v) == total:
            n += 1
    return n


# ---------------------------------------------------------------------------
# pinned values and identities


def test_pinned_values():
    assert walks.walk_dist("Q", 1, 1) == Fraction(1, 2)
    assert walks.walk_dist("P", 1, -1) == Fraction(1, 2)
    assert walks.walk_dist("M", 2, 2) == Fraction(1, 9)


def test_degenerate_conventions():
    # zero-length P and M walks are deliberately weighted 0, not 1
    assert walks.walk_dist("P", 0, 0) == 0
    assert walks.walk_dist("M", 0, 0) == 0
    assert walks.walk_dist("Q", 0, 0) == 1


def test_first_passage_counts_vs_bruteforce():
    for depth in range(0, 5):
        for steps in range(0, 13):
            assert walks.first_passage_count(depth, steps) == brute_first_passage(depth, steps), (depth, steps)


def test_floor_jump_counts_vs_bruteforce():
    for segments in range(1, 4):
        for total in range(-segments, 6):
            assert walks.floor_jump_count(segments, total) == brute_floor_jumps(segments, total), (segments, total)


def test_ternary_counts_vs_bruteforce():
    for steps in range(1, 9):
        for total in range(-steps, steps + 1):
            assert walks.ternary_count(steps, total) == brute_ternary(steps, total), (steps, total)


def test_ballot_identities():
    # (l/(2a+l)) C(2a+l, a) equals 2^(2a+l) Q_l(2a+l)
    for a in range(0, 7):
        for l in range(1, 7):
            lhs = Fraction(l, 2 * a + l) * math.comb(2 * a + l, a)
            assert lhs == walks.first_passage_prob(l, 2 * a + l) * 2 ** (2 * a + l)
    # C(2l+d-1, l-1) equals 2^(2l+d) P_l(d)
    for l in range(1, 7):
        for d in range(-l, 8):
            lhs = math.comb(2 * l + d - 1, l - 1)
            assert lhs == walks.floor_jump_prob(l, d) * 2 ** (2 * l + d)


def test_log_versions_match_exact():
    cases = [("Q", 3, 9), ("Q", 1, 7), ("P", 4, 2), ("P", 2, -2), ("M", 6, 1), ("M", 5, -5)]
    for kind, size, arg in cases:
        exact = walks.walk_dist(kind, size, arg)
        assert math.isclose(walks.log_walk_dist(kind, size, arg), math.log(exact), rel_tol=1e-12)
    assert walks.log_walk_dist("Q", 2, 7) == -np.inf  # parity mismatch


def test_gauss_density_pinned():
    assert math.isclose(walks.gauss_density(1.0, 0.0), 1.0 / math.sqrt(2 * math.pi))
    assert math.isclose(walks.hit_density(2.0, 1.0), 2.0 * walks.gauss_density(1.0, 2.0))
    assert walks.hit_density(2.0, 0.0) == 0.0


# ---------------------------------------------------------------------------
# sampler structure and exact uniformity


def test_first_passage_sampler_structure():
    rng = np.random.default_rng(7)
    for depth, steps in [(1, 1), (2, 10), (3, 9), (5, 5), (4, 20)]:
        s = walks.sample_first_passage(depth, steps, rng)
        assert s[0] == 0 and s[-1] == -depth
        assert (np.abs(np.diff(s)) == 1).all()
        assert (s[:-1] > -depth).all()


def _chisq_uniform(counts):
    return chisquare(counts).pvalue


def test_first_passage_sampler_uniform():
    depth, steps = 2, 8
    support = walks.first_passage_count(depth, steps)
    rng = np.random.default_rng(11)
    seen = {}
    n = 3 * 10**4
    for _ in range(n):
        s = walks.sample_first_passage(depth, steps, rng)
        seen.setdefault(tuple(s), 0)
        seen[tuple(s)] += 1
    assert len(seen) == support
    assert _chisq_uniform(np.array(list(seen.values()))) > 1e-4


def test_floor_jump_sampler_uniform():
    segments, total = 3, 1
    rng = np.random.default_rng(13)
    seen = {}
    n = 3 * 10**4
    for _ in range(n):
        v = walks.sample_floor_jumps(segments, total, rng)
        assert v.sum() == total and (v >= -1).all()
        seen.setdefault(tuple(v), 0)
        seen[tuple(v)] += 1
    assert len(seen) == walks.floor_jump_count(segments, total)
    assert _chisq_uniform(np.array(list(seen.values()))) > 1e-4


def test_ternary_bridge_sampler_uniform():
    steps, total = 5, 1
    rng = np.random.default_rng(17)
    seen = {}
    n = 3 * 10**4
    for _ in range(n):
        v = walks.sample_ternary_bridge(steps, total, rng)
        assert v.sum() == total and np.isin(v, (-1, 0, 1)).all()
        seen.setdefault(tuple(v), 0)
        seen[tuple(v)] += 1
    assert len(seen) == walks.ternary_count(steps, total)
    assert _chisq_uniform(np.array(list(seen.values()))) > 1e-4


def test_geometric_floor_step_distribution():
    rng = np.random.default_rng(19)
    draws = np.array([walks.sample_geometric_floor_step(rng) for _ in range(3 * 10**4)])
    assert draws.min() >= -1
    for r in range(-1, 3):
        p = 2.0 ** (-r - 2)
        got = (draws == r).mean()
        assert abs(got - p) < 4 * math.sqrt(p * (1 - p) / len(draws))


def test_sampler_rejects_bad_parameters():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        walks.sample_first_passage(2, 7, rng)  # parity
    with pytest.raises(ValueError):
        walks.sample_floor_jumps(2, -3, rng)
    with pytest.raises(ValueError):
        walks.sample_ternary_bridge(2, 5, rng)
