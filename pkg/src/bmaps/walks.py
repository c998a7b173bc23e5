"""Exact lattice-walk arithmetic and conditioned-path samplers.

Three step laws recur throughout the package and are referred to by the
single-letter kinds used on the command line:

  Q : simple +-1 walk, first passage to a negative level,
  P : nonnegative-shifted geometric jumps (values >= -1, P(r) = 2**(-r-2)),
  M : uniform steps in {-1, 0, +1}.

Counts are exact integers, probabilities exact Fractions.  Samplers return
exactly uniform draws from the conditioned path families (cycle lemma for
first-passage paths, stars and bars for the geometric jumps, a
zero-count mixture for ternary bridges).  Large-parameter weights are
served in log space for the samplers that need ratios only.
"""

import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp


# ---------------------------------------------------------------------------
# exact counts


def first_passage_count(depth, steps):
    """Number of +-1 paths of length `steps` from 0 whose first visit to
    -depth happens at the final step.  Cycle lemma: (depth/steps) * C(steps, ups)."""
    if depth == 0 and steps == 0:
        return 1
    if depth <= 0 or steps < depth or (steps - depth) % 2:
        return 0
    ups = (steps - depth) // 2
    return depth * math.comb(steps, ups) // steps


def floor_jump_count(segments, total):
    """Number of integer vectors (r_1..r_segments), r_i >= -1, summing to
    `total`.  Stars and bars on s_i = r_i + 1."""
    if segments == 0:
        return 0  # degenerate by convention, documented
    if total < -segments:
        return 0
    return math.comb(2 * segments + total - 1, segments - 1)


def ternary_count(steps, total):
    """Number of paths with `steps` increments in {-1,0,+1} ending at `total`."""
    if steps == 0:
        return 0  # degenerate by convention, matches floor_jump_count(0, .)
    if abs(total) > steps:
        return 0
    out = 0
    # z = number of zero steps; remaining are a +-1 bridge to `total`
    for z in range(steps - abs(total), -1, -2):
        nz = steps - z
        out += math.comb(steps, z) * math.comb(nz, (nz + total) // 2)
    return out


def first_passage_prob(depth, steps):
    """Q: probability that the +-1 walk first hits -depth at time `steps`."""
    return Fraction(first_passage_count(depth, steps), 2**steps)


def floor_jump_prob(segments, total):
    """P: probability that `segments` iid geometric jumps (>= -1) sum to `total`."""
    if segments == 0:
        return Fraction(0)
    c = floor_jump_count(segments, total)
    return Fraction(c, 2 ** (2 * segments + total)) if c else Fraction(0)


def ternary_prob(steps, total):
    """M: probability that `steps` iid uniform {-1,0,1} increments sum to `total`."""
    if steps == 0:
        return Fraction(0)
    return Fraction(ternary_count(steps, total), 3**steps)


def walk_dist(kind, size, arg):
    """Exact walk distribution value by kind 'Q' | 'P' | 'M'.

    Q: size = target depth, arg = number of steps.
    P: size = number of jumps, arg = final sum.
    M: size = number of steps, arg = final sum.
    """
    if kind == "Q":
        return first_passage_prob(size, arg)
    if kind == "P":
        return floor_jump_prob(size, arg)
    if kind == "M":
        return ternary_prob(size, arg)
    raise ValueError("kind must be one of 'Q', 'P', 'M'")


# ---------------------------------------------------------------------------
# log-space versions (float) for large-parameter weight ratios


def _log_comb(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def log_first_passage_prob(depth, steps):
    if depth == 0 and steps == 0:
        return 0.0
    if depth <= 0 or steps < depth or (steps - depth) % 2:
        return -np.inf
    ups = (steps - depth) // 2
    return math.log(depth) - math.log(steps) + _log_comb(steps, ups) - steps * math.log(2.0)


def log_floor_jump_prob(segments, total):
    if segments == 0 or total < -segments:
        return -np.inf
    return _log_comb(2 * segments + total - 1, segments - 1) - (2 * segments + total) * math.log(2.0)


def log_ternary_prob(steps, total):
    if steps == 0 or abs(total) > steps:
        return -np.inf
    z = np.arange(steps - abs(total), -1, -2)
    nz = steps - z
    terms = _log_comb(steps, z) + _log_comb(nz, (nz + total) // 2)
    return float(logsumexp(terms)) - steps * math.log(3.0)


def log_walk_dist(kind, size, arg):
    if kind == "Q":
        return log_first_passage_prob(size, arg)
    if kind == "P":
        return log_floor_jump_prob(size, arg)
    if kind == "M":
        return log_ternary_prob(size, arg)
    raise ValueError("kind must be one of 'Q', 'P', 'M'")


# ---------------------------------------------------------------------------
# continuum density analogues (diagnostics and parameter-space weights)


def gauss_density(t, x):
    """Centered Gaussian density of variance t at x."""
    return math.exp(-x * x / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)

def hit_density(x, t):
    """First passage time density at t for Brownian motion started at x > 0
    hitting 0 (equivalently level -x from 0)."""
    if t <= 0:
        return 0.0
    return x / t * gauss_density(t, x)


# ---------------------------------------------------------------------------
# samplers (exactly uniform on the stated families)


def sample_first_passage(depth, steps, rng):
    """Uniform +-1 path S_0..S_steps with first visit to -depth at the end.

    Shuffles the step multiset, then rotates to start right after the first
    attainment of one of the `depth` lowest levels; the cycle lemma makes the
    result exactly uniform among first-passage paths.
    """
    if depth == 0 and steps == 0:
        return np.zeros(1, dtype=np.int64)
    if not (1 <= depth <= steps) or (steps - depth) % 2:
        raise ValueError("no first-passage path with these parameters")
    ups = (steps - depth) // 2
    x = np.full(steps, -1, dtype=np.int64)
    x[: ups] = 1
    rng.shuffle(x)
    s = np.concatenate([[0], np.cumsum(x)])
    run_min = np.minimum.accumulate(s)
    # first attainment of each new minimum level, deepest `depth` of them
    new_min = np.flatnonzero(np.diff(run_min) < 0) + 1
    starts = new_min[-depth:]
    r = int(starts[rng.integers(len(starts))])
    x = np.roll(x, -r)
    s = np.concatenate([[0], np.cumsum(x)])
    if s[-1] != -depth or (s[:-1] <= -depth).any():
        raise AssertionError("cycle lemma rotation failed")
    return s


def sample_floor_jumps(segments, total, rng):
    """Uniform integer vector (r_1..r_segments), r_i >= -1, sum = total."""
    if segments == 0:
        if total != 0:
            raise ValueError("empty jump vector cannot have nonzero sum")
        return np.zeros(0, dtype=np.int64)
    stars = total + segments
    if stars < 0:
        raise ValueError("sum below the -1 floor")
    if segments == 1:
        return np.array([total], dtype=np.int64)
    bars = np.sort(rng.choice(stars + segments - 1, size=segments - 1, replace=False))
    cuts = np.concatenate([[-1], bars, [stars + segments - 1]])
    return np.diff(cuts) - 2  # gap size (minus bar slot) is s_i >= 0, then shift to r_i = s_i - 1


def sample_ternary_bridge(steps, total, rng):
    """Uniform {-1,0,+1} increment vector of length `steps` summing to `total`.

    Conditions first on the number of zero steps (exact log weights), then
    shuffles a +-1 bridge into the remaining slots.
    """
    if steps == 0:
        if total != 0:
            raise ValueError("empty bridge cannot have nonzero sum")
        return np.zeros(0, dtype=np.int64)
    if abs(total) > steps:
        raise ValueError("endpoint out of reach")
    z = np.arange(steps - abs(total), -1, -2)
    nz = steps - z
    logw = _log_comb(steps, z) + _log_comb(nz, (nz + total) // 2)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    zc = int(z[rng.choice(len(z), p=w)])
    nzc = steps - zc
    vals = np.full(nzc, -1, dtype=np.int64)
    vals[: (nzc + total) // 2] = 1
    out = np.zeros(steps, dtype=np.int64)
    pos = rng.choice(steps, size=nzc, replace=False)
    out[np.sort(pos)] = rng.permutation(vals)
    return out


def sample_geometric_floor_step(rng):
    """One jump of the P step law: value r >= -1 with probability 2**(-r-2)."""
    return int(rng.geometric(0.5)) - 2
