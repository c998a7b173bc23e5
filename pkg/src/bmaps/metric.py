"""Finite marked measured metric spaces.

A space is a dense distance matrix (32-bit integers for graph metrics,
64-bit floats once rescaled), an ordered list of marks (point subsets,
optionally geodesic: an origin plus an ordered segment), and a list of
nonnegative measure vectors.

Gluing two spaces along geodesic marks admits a closed-form distance,
so no shortest-path closure is run there.  Gluing a space to itself can
create chains of identifications, so it is followed by the quotient
closure.  Gromov-Hausdorff distances are computed exactly by
branch-and-bound on tiny spaces and certified as upper bounds
otherwise.
"""

import json

import numpy as np

_EXACT_DTYPES = (np.int32, np.int64)


def _is_exact(D):
    return D.dtype.type in _EXACT_DTYPES


class Mark:
    """A distinguished subset of points.  Geodesic marks carry an origin
    and keep their points ordered by distance from it."""

    __slots__ = ("points", "geodesic", "origin")

    def __init__(self, points, geodesic=False, origin=None):
        self.points = [int(p) for p in points]
        self.geodesic = bool(geodesic)
        if self.geodesic:
            if origin is None:
                origin = self.points[0]
            self.origin = int(origin)
        else:
            self.origin = None

    @property
    def length(self):
        if not self.geodesic:
            raise ValueError("length of a non-geodesic mark")
        return len(self.points) - 1

    def remap(self, proj):
        pts = [int(proj[p]) for p in self.points]
        if self.geodesic:
            return Mark(pts, geodesic=True, origin=int(proj[self.origin]))
        # collapse duplicates created by the projection
        seen, out = set(), []
        for p in pts:
            if p not in seen:
                seen.add(p)
                out.append(p)
        return Mark(out)

    def __eq__(self, other):
        return (self.points == other.points and self.geodesic == other.geodesic
                and self.origin == other.origin)

    def __repr__(self):
        tag = "geodesic " if self.geodesic else ""
        return "Mark(%s%r)" % (tag, self.points)


class FiniteMetricSpace:
    """Points 0..m-1 with a symmetric distance matrix, marks and
    measures."""

    def __init__(self, dist, marks=None, measures=None):
        D = np.asarray(dist)
        if D.dtype.kind in "iu":
            D = D.astype(np.int32) if D.dtype.itemsize <= 4 else D.astype(np.int64)
        else:
            D = D.astype(np.float64)
        self.dist = D
        self.marks = list(marks) if marks else []
        self.measures = [np.asarray(v, dtype=np.float64) for v in (measures or [])]

    @property
    def m(self):
        return self.dist.shape[0]

    @property
    def exact(self):
        return _is_exact(self.dist)

    def d(self, i, j):
        return self.dist[i, j]

    def with_marks(self, marks):
        return FiniteMetricSpace(self.dist, marks, self.measures)

    def with_measures(self, measures):
        return FiniteMetricSpace(self.dist, self.marks, measures)


def validate_space(X, tol=1e-9):
    """Check the space invariants.  Returns a list of failure strings,
    empty when everything holds."""
    D = X.dist
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        return ["distance matrix is not square"]
    fails = []
    m = X.m
    eps = 0 if X.exact else tol
    if np.any(np.abs(D - D.T) > eps):
        fails.append("distance matrix is not symmetric")
    if np.any(np.abs(np.diag(D)) > eps):
        fails.append("nonzero diagonal")
    if np.any(D < -eps):
        fails.append("negative distance")
    for k in range(m):
        if np.any(D > D[:, [k]] + D[[k], :] + eps):
            fails.append("triangle inequality fails through point %d" % k)
            break
    for idx, mk in enumerate(X.marks):
        if any(p < 0 or p >= m for p in mk.points):
            fails.append("mark %d has out-of-range points" % idx)
            continue
        if mk.geodesic:
            fails.extend(_geodesic_failures(X, mk, idx, eps))
    for idx, v in enumerate(X.measures):
        if v.shape != (m,):
            fails.append("measure %d has wrong length" % idx)
        elif np.any(v < -eps):
            fails.append("measure %d has negative mass" % idx)
    return fails


def _geodesic_failures(X, mk, idx, eps):
    """A geodesic mark of length L must hit each distance 0..L from its
    origin exactly once (unit steps on integer metrics, a constant step
    after rescaling), and distances inside it must be the differences of
    the distances to the origin."""
    D, pts, x = X.dist, mk.points, mk.origin
    if pts[0] != x:
        return ["geodesic mark %d does not start at its origin" % idx]
    L = len(pts) - 1
    if L == 0:
        return []
    if len(set(pts)) != L + 1:
        return ["geodesic mark %d repeats points" % idx]
    step = D[x, pts[1]]
    if X.exact and step != 1:
        return ["geodesic mark %d has non-unit step" % idx]
    if step <= eps:
        return ["geodesic mark %d has degenerate step" % idx]
    for a in range(L + 1):
        for b in range(a, L + 1):
            if abs(D[pts[a], pts[b]] - (b - a) * step) > eps:
                return ["geodesic mark %d is not isometric" % idx]
    return []


def _step_of(X, mk):
    if mk.length == 0:
        return None
    return X.dist[mk.points[0], mk.points[1]]


# ---------------------------------------------------------------------------
# construction


def graph_metric(m):
    """BFS distances between the vertices of a combinatorial map.
    Disconnected maps are refused."""
    nv = m.n_vertices
    adj = [[] for _ in range(nv)]
    for e in range(m.n_edges):
        u, v = m.vertex_of(2 * e), m.vertex_of(2 * e + 1)
        adj[u].append(v)
        adj[v].append(u)
    D = np.full((nv, nv), -1, dtype=np.int32)
    for s in range(nv):
        D[s, s] = 0
        queue = [s]
        while queue:
            nxt = []
            for u in queue:
                du = D[s, u]
                for v in adj[u]:
                    if D[s, v] < 0:
                        D[s, v] = du + 1
                        nxt.append(v)
            queue = nxt
    if np.any(D < 0):
        raise ValueError("graph metric of a disconnected map")
    return FiniteMetricSpace(D)


def rescale(X, n):
    """Scale to the invariance-principle normalization: distances by
    (9/(8n))^(1/4), the first measure (area) by 1/n, the remaining
    (boundary) measures by 1/sqrt(8n)."""
    if n <= 0:
        raise ValueError("scale parameter must be positive")
    D = X.dist.astype(np.float64) * (9.0 / (8.0 * n)) ** 0.25
    meas = []
    for i, v in enumerate(X.measures):
        meas.append(v / n if i == 0 else v / np.sqrt(8.0 * n))
    return FiniteMetricSpace(D, X.marks, meas)


# ---------------------------------------------------------------------------
# quotients and gluings


def _fw_closure(D):
    """All-pairs shortest path on the complete graph weighted by D.
    Zero-weight edges are honest edges here, which is why this is not
    delegated to a sparse-graph routine."""
    D = D.copy()
    for k in range(D.shape[0]):
        np.minimum(D, D[:, [k]] + D[[k], :], out=D)
    return D


def _collapse(D, marks, measures, eps):
    """Identify points at pseudodistance zero.  Classes are numbered by
    their smallest member; marks are pushed forward (geodesic flags are
    rechecked, not trusted) and measures are summed over classes."""
    m = D.shape[0]
    proj = np.full(m, -1, dtype=np.int64)
    reps = []
    for i in range(m):
        if proj[i] >= 0:
            continue
        members = np.nonzero(D[i] <= eps)[0]
        proj[members] = len(reps)
        reps.append(i)
    reps = np.array(reps)
    D2 = D[np.ix_(reps, reps)].copy()
    np.fill_diagonal(D2, 0)
    new_marks = [mk.remap(proj) for mk in marks]
    new_meas = []
    for v in measures:
        w = np.zeros(len(reps))
        np.add.at(w, proj, v)
        new_meas.append(w)
    out = FiniteMetricSpace(D2, new_marks, new_meas)
    _recheck_geodesics(out)
    return out, proj


def _recheck_geodesics(X):
    eps = 0 if X.exact else 1e-9
    for mk in X.marks:
        if mk.geodesic and _geodesic_failures(X, mk, 0, eps):
            mk.geodesic = False
            mk.origin = None
            seen, out = set(), []
            for p in mk.points:
                if p not in seen:
                    seen.add(p)
                    out.append(p)
            mk.points = out


def quotient_metric(X, relation):
    """Quotient by a relation given as point pairs.  The pseudodistance is
    the infimum over chains alternating base-metric moves and
    identifications, computed as a shortest path; zero classes are then
    collapsed.  Returns the quotient and the point projection."""
    W = X.dist.astype(np.float64, copy=True)
    for i, j in relation:
        W[i, j] = W[j, i] = 0.0
    D = _fw_closure(W) if len(relation) else W
    if X.exact:
        D = np.rint(D).astype(X.dist.dtype)
    return _collapse(D, X.marks, X.measures, 0 if X.exact else 1e-9)


def _checked_geodesic(X, i, opname):
    if i < 0 or i >= len(X.marks):
        raise ValueError("%s: no mark %d" % (opname, i))
    mk = X.marks[i]
    if not mk.geodesic:
        raise ValueError("%s along a non-geodesic mark" % opname)
    return mk


def glue_pair(X, Y, gi, xj):
    """Glue Y onto X, identifying gamma(t) with xi(t) for t up to the
    shorter of the two geodesic marks.  Distances inside each part are
    unchanged; cross distances are the infimum over passage points, which
    is already a metric because the glued sets are geodesics.  Marks are
    X's followed by Y's, measures likewise.

    X keeps its point numbering; the second return value maps Y's points
    into the glued space."""
    gam = _checked_geodesic(X, gi, "glue_pair")
    xi = _checked_geodesic(Y, xj, "glue_pair")
    ell = min(gam.length, xi.length)
    gpts = gam.points[: ell + 1]
    xpts = xi.points[: ell + 1]
    exact = X.exact and Y.exact
    DX = X.dist if exact else X.dist.astype(np.float64)
    DY = Y.dist if exact else Y.dist.astype(np.float64)
    if ell > 0 and not exact:
        if abs(_step_of(X, gam) - _step_of(Y, xi)) > 1e-9:
            raise ValueError("glue_pair: step mismatch between the marks")

    mX, mY = X.m, Y.m
    merged = {p: gpts[t] for t, p in enumerate(xpts)}
    projY = np.full(mY, -1, dtype=np.int64)
    keep = []
    for p in range(mY):
        if p in merged:
            projY[p] = merged[p]
        else:
            projY[p] = mX + len(keep)
            keep.append(p)
    keep = np.array(keep, dtype=np.int64)
    total = mX + len(keep)
    D = np.zeros((total, total), dtype=DX.dtype)
    D[:mX, :mX] = DX
    if len(keep):
        D[mX:, mX:] = DY[np.ix_(keep, keep)]
        # inf over t of d_X(x, gamma(t)) + d_Y(xi(t), y)
        A = DX[:, gpts]
        B = DY[np.ix_(xpts, keep)]
        cross = (A[:, :, None] + B[None, :, :]).min(axis=1)
        D[:mX, mX:] = cross
        D[mX:, :mX] = cross.T

    ident = np.arange(mX, dtype=np.int64)
    marks = [mk.remap(ident) for mk in X.marks]
    marks += [mk.remap(projY) for mk in Y.marks]
    meas = []
    for v in X.measures:
        w = np.zeros(total)
        w[:mX] = v
        meas.append(w)
    for v in Y.measures:
        w = np.zeros(total)
        np.add.at(w, projY, v)
        meas.append(w)
    return FiniteMetricSpace(D, marks, meas), projY


def glue_self(X, gi, xj):
    """Glue two geodesic marks of the same space to each other.  The
    three-way infimum below can miss chains that use both identification
    directions, so the quotient closure is applied afterwards.  Returns
    the glued space and the point projection."""
    gam = _checked_geodesic(X, gi, "glue_self")
    xi = _checked_geodesic(X, xj, "glue_self")
    ell = min(gam.length, xi.length)
    gpts = gam.points[: ell + 1]
    xpts = xi.points[: ell + 1]
    D = X.dist.astype(np.float64)
    A = D[:, gpts]
    B = D[xpts, :]
    cross = (A[:, :, None] + B[None, :, :]).min(axis=1)
    D3 = np.minimum(D, np.minimum(cross, cross.T))
    Dq = _fw_closure(D3)
    if X.exact:
        Dq = np.rint(Dq).astype(X.dist.dtype)
    return _collapse(Dq, X.marks, X.measures, 0 if X.exact else 1e-9)


def glue_defect(X, gi, xj):
    """Upper bound on how much glue_self can shrink distances: the
    largest distance, in the unglued space, between points of the two
    initial segments that get identified with each other.  (The pointwise
    supremum, not the Hausdorff distance between the segments: the latter
    can undershoot, since it may pair a point with the wrong level.)"""
    gam = _checked_geodesic(X, gi, "glue_defect")
    xi = _checked_geodesic(X, xj, "glue_defect")
    ell = min(gam.length, xi.length)
    gp = gam.points[: ell + 1]
    xp = xi.points[: ell + 1]
    return X.dist[gp, xp].max()


def split_geodesic_mark(X, i, r):
    """Replace geodesic mark i by its two halves: the sub-geodesic from the
    origin to level r, and the one from level r to the far end."""
    mk = _checked_geodesic(X, i, "split_geodesic_mark")
    if r < 0 or r > mk.length:
        raise ValueError("split level outside the mark")
    lo = Mark(mk.points[: r + 1], geodesic=True, origin=mk.points[0])
    hi = Mark(mk.points[r:], geodesic=True, origin=mk.points[r])
    marks = X.marks[:i] + [lo, hi] + X.marks[i + 1:]
    return X.with_marks(marks)


# ---------------------------------------------------------------------------
# mark and measure surgery (each is 1- or 2-Lipschitz for the GHP metric)


def merge_marks(X, i, j):
    if i == j:
        raise ValueError("merging a mark with itself")
    a, b = min(i, j), max(i, j)
    union = list(dict.fromkeys(X.marks[a].points + X.marks[b].points))
    marks = list(X.marks)
    marks[a] = Mark(union)
    del marks[b]
    return X.with_marks(marks)


def drop_mark(X, i):
    marks = list(X.marks)
    del marks[i]
    return X.with_marks(marks)


def permute_marks(X, perm):
    if sorted(perm) != list(range(len(X.marks))):
        raise ValueError("not a permutation of the marks")
    return X.with_marks([X.marks[p] for p in perm])


def add_measures(X, i, j):
    if i == j:
        raise ValueError("adding a measure to itself")
    a, b = min(i, j), max(i, j)
    meas = list(X.measures)
    meas[a] = meas[a] + meas[b]
    del meas[b]
    return X.with_measures(meas)


def drop_measure(X, i):
    meas = list(X.measures)
    del meas[i]
    return X.with_measures(meas)


def permute_measures(X, perm):
    if sorted(perm) != list(range(len(X.measures))):
        raise ValueError("not a permutation of the measures")
    return X.with_measures([X.measures[p] for p in perm])


# ---------------------------------------------------------------------------
# correspondences and distances between spaces


class Correspondence:
    """A relation between two spaces whose projections cover both."""

    def __init__(self, pairs, mx, my):
        self.pairs = [(int(a), int(b)) for a, b in pairs]
        self.mx = mx
        self.my = my
        if {a for a, _ in self.pairs} != set(range(mx)):
            raise ValueError("correspondence does not cover the left space")
        if {b for _, b in self.pairs} != set(range(my)):
            raise ValueError("correspondence does not cover the right space")

    def distortion(self, DX, DY):
        ax = np.array([a for a, _ in self.pairs])
        by = np.array([b for _, b in self.pairs])
        return float(np.max(np.abs(DX[np.ix_(ax, ax)] - DY[np.ix_(by, by)])))

    def compatible(self, X, Y):
        """The restriction to each pair of marks must itself be a
        correspondence between them."""
        if len(X.marks) != len(Y.marks):
            return False
        for mkx, mky in zip(X.marks, Y.marks):
            sa, sb = set(mkx.points), set(mky.points)
            hit_a = {a for a, b in self.pairs if a in sa and b in sb}
            hit_b = {b for a, b in self.pairs if a in sa and b in sb}
            if hit_a != sa or hit_b != sb:
                return False
        return True


def _mark_slots(space, other):
    """Assignment slots for the branch-and-bound: every point needs a
    partner for each mark containing it (restricted to the matching mark
    on the other side), or one unrestricted partner if it is unmarked.
    Minimal compatible correspondences are exactly unions of such
    assignments, and the distortion is monotone in the relation, so
    searching these suffices for the infimum."""
    slots = []
    for p in range(space.m):
        owned = [k for k, mk in enumerate(space.marks) if p in set(mk.points)]
        if owned:
            for k in owned:
                slots.append((p, sorted(set(other.marks[k].points))))
        else:
            slots.append((p, list(range(other.m))))
    return slots


def gh_exact(X, Y, cap=8):
    """Exact Gromov-Hausdorff distance between marked spaces: half the
    smallest distortion of a compatible correspondence.  Refuses when the
    product of the sizes exceeds cap*cap."""
    if X.m * Y.m > cap * cap:
        raise ValueError(
            "gh exact search refused: %d*%d points exceeds the cap %d^2"
            % (X.m, Y.m, cap))
    if len(X.marks) != len(Y.marks):
        raise ValueError("gh distance between different mark signatures")
    for mkx, mky in zip(X.marks, Y.marks):
        if mkx.geodesic != mky.geodesic:
            raise ValueError("gh distance between different mark signatures")
    DX = X.dist.astype(np.float64)
    DY = Y.dist.astype(np.float64)
    slots_x = _mark_slots(X, Y)
    slots = slots_x + _mark_slots(Y, X)
    nleft = len(slots_x)

    best = [np.inf]
    chosen = []

    def rec(i, cur):
        if cur >= best[0]:
            return
        if i == len(slots):
            best[0] = cur
            return
        p, cands = slots[i]
        for q in cands:
            a, b = (p, q) if i < nleft else (q, p)
            w = cur
            for (x, y) in chosen:
                w = max(w, abs(DX[a, x] - DY[b, y]))
                if w >= best[0]:
                    break
            if w < best[0]:
                chosen.append((a, b))
                rec(i + 1, w)
                chosen.pop()

    rec(0, 0.0)
    return 0.5 * best[0]


def _maxflow(cap_s, cap_t, edges):
    """Max flow in the bipartite network source -> i (capacity cap_s[i]),
    j -> sink (capacity cap_t[j]), i -> j unbounded for (i, j) in edges.
    Plain augmenting-path search on an explicit residual graph; the
    instances here are tiny."""
    nl, nr = len(cap_s), len(cap_t)
    src, snk = nl + nr, nl + nr + 1
    n = nl + nr + 2
    big = float(sum(cap_s) + sum(cap_t) + 1.0)
    res = {}

    def add(u, v, c):
        res.setdefault(u, {})[v] = res.get(u, {}).get(v, 0.0) + c
        res.setdefault(v, {}).setdefault(u, 0.0)

    for i in range(nl):
        add(src, i, float(cap_s[i]))
    for j in range(nr):
        add(nl + j, snk, float(cap_t[j]))
    for i, j in edges:
        add(i, nl + j, big)

    total = 0.0
    while True:
        parent = {src: None}
        queue = [src]
        while queue and snk not in parent:
            u = queue.pop(0)
            for v, c in res.get(u, {}).items():
                if c > 1e-12 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if snk not in parent:
            return total
        aug = np.inf
        v = snk
        while parent[v] is not None:
            u = parent[v]
            aug = min(aug, res[u][v])
            v = u
        v = snk
        while parent[v] is not None:
            u = parent[v]
            res[u][v] -= aug
            res[v][u] += aug
            v = u
        total += aug


def prokhorov_distance(D, mu, nu, tol=1e-12):
    """Exact Prokhorov distance between two finitely supported measures on
    the same space.  The enlargement is open, so on each interval between
    consecutive distance values the admissible mass defect is a fixed
    max-flow; the infimum is scanned over the intervals."""
    D = np.asarray(D, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    si = np.nonzero(mu > tol)[0]
    sj = np.nonzero(nu > tol)[0]
    M = max(mu.sum(), nu.sum())
    if len(si) == 0 or len(sj) == 0:
        return float(M)
    sub = D[np.ix_(si, sj)]
    levels = sorted(set([0.0] + [float(x) for x in sub.ravel()]))
    best = np.inf
    for k, lev in enumerate(levels):
        edges = [(i, j) for i in range(len(si)) for j in range(len(sj))
                 if sub[i, j] <= lev + tol]
        F = _maxflow(mu[si], nu[sj], edges)
        c = max(M - F, lev)
        hi = levels[k + 1] if k + 1 < len(levels) else np.inf
        if c <= hi + tol:
            best = min(best, c)
    return float(best)


def ghp_upper_bound(X, Y, correspondence, couplings):
    """Certified upper bound on the marked measured GHP distance: three
    times the largest of the correspondence distortion, the coupling mass
    escaping it, and the Prokhorov gaps between the measures and the
    coupling marginals."""
    R = Correspondence(correspondence, X.m, Y.m)
    if not R.compatible(X, Y):
        raise ValueError("correspondence incompatible with the markings")
    if len(X.measures) != len(Y.measures) or len(couplings) != len(X.measures):
        raise ValueError("need one coupling per measure pair")
    DX = X.dist.astype(np.float64)
    DY = Y.dist.astype(np.float64)
    eps = R.distortion(DX, DY)
    inR = np.zeros((X.m, Y.m), dtype=bool)
    for a, b in R.pairs:
        inR[a, b] = True
    for k, nu in enumerate(couplings):
        nu = np.asarray(nu, dtype=np.float64)
        if nu.shape != (X.m, Y.m) or np.any(nu < -1e-12):
            raise ValueError("coupling %d is not a measure on the product" % k)
        eps = max(eps, float(nu[~inR].sum()))
        eps = max(eps, prokhorov_distance(DX, X.measures[k], nu.sum(axis=1)))
        eps = max(eps, prokhorov_distance(DY, Y.measures[k], nu.sum(axis=0)))
    return 3.0 * eps


def gh_ghp_distance(X, Y, mode="gh", cap=8, correspondence=None, couplings=None):
    """Dispatch: mode "gh" is the exact branch-and-bound (small spaces
    only), mode "ghp" certifies an upper bound from a supplied
    correspondence and couplings."""
    if mode == "gh":
        return gh_exact(X, Y, cap=cap)
    if mode == "ghp":
        if correspondence is None or couplings is None:
            raise ValueError("ghp mode needs a correspondence and couplings")
        return ghp_upper_bound(X, Y, correspondence, couplings)
    raise ValueError("unknown mode %r" % (mode,))


# ---------------------------------------------------------------------------
# serialization


def space_to_json(X):
    tri = []
    for i in range(X.m):
        for j in range(i):
            d = X.dist[i, j]
            tri.append(int(d) if X.exact else float(d))
    doc = {
        "points": X.m,
        "exact": bool(X.exact),
        "distances": tri,
        "marks": [
            {"points": mk.points, "geodesic": mk.geodesic, "origin": mk.origin}
            for mk in X.marks
        ],
        "measures": [[float(x) for x in v] for v in X.measures],
    }
    return json.dumps(doc)


def space_from_json(text):
    doc = json.loads(text)
    m = doc["points"]
    dtype = np.int32 if doc.get("exact", False) else np.float64
    D = np.zeros((m, m), dtype=dtype)
    it = iter(doc["distances"])
    for i in range(m):
        for j in range(i):
            D[i, j] = D[j, i] = next(it)
    marks = [Mark(e["points"], geodesic=e["geodesic"], origin=e.get("origin"))
             for e in doc["marks"]]
    measures = [np.array(v, dtype=np.float64) for v in doc["measures"]]
    return FiniteMetricSpace(D, marks, measures)
