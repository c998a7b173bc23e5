"""Schemes: the pruned cores of labeled maps with holes.

A labeled map with holes shrinks to its scheme in two moves: repeatedly
delete degree-1 vertices that are not hole marks, then swallow the
surviving degree-2 vertices into chains.  What remains is a small rooted
map whose size is bounded by the topology alone, and whose half-edges
organize the original map completely: every corner of the internal face
lands in exactly one per-half-edge interval, and the interval contents
are elementary pieces.

The module covers the full round trip plus the enumerative side:

  * extract_scheme / decompose: map -> scheme + chains + intervals ->
    slices and quadrilaterals with recorded size data,
  * reconstruct: glue the pieces back along the contour order and
    recover the metric of the associated quadrangulation exactly,
  * enumerate_schemes, shrink_tadpoles, is_dominant,
  * scheme_weighted_count: exact integer map counts via walk weights
    summed over schemes,
  * enumerate_labeled_maps: independent direct enumeration (rotation
    systems around the internal face), used to cross-check the counts,
  * sample_labeled_map: enumeration, exact-DP and MCMC backends.

Conventions fixed here and relied on elsewhere.  Chains carry at least
one edge, so walk weights at width <= 0 are zero; the width-0 values of
the bare walk counters are never consulted.  Vertex holes may sit on any
vertex, including hole boundaries, but distinct holes occupy distinct
vertices.  For an internal scheme edge the discrete area of the
first-traversed side also carries the h^e floor faces of its
quadrilateral, so the per-half-edge areas add up to n exactly.
"""

import itertools
import json
import math
import os

import numpy as np

from .maps import (
    CombinatorialMap,
    LabeledMap,
    ValidationReport,
    canonical_rooted_form,
    parse_map,
    serialize_map,
    validate_map,
)
from .metric import FiniteMetricSpace, Mark, glue_pair, glue_self, graph_metric
from .pieces import (
    DoubleForest,
    WellLabeledForest,
    build_quadrilateral,
    build_slice,
    forest_from_text,
    tree_edge_count,
    tree_from_parens,
    tree_to_parens,
    _random_tree_labels,
    _split_forest_path,
)
from .walks import (
    first_passage_count,
    floor_jump_count,
    log_floor_jump_prob,
    log_first_passage_prob,
    log_ternary_prob,
    sample_first_passage,
    sample_floor_jumps,
    sample_ternary_bridge,
    ternary_count,
)

LOG2 = math.log(2.0)
LOG3 = math.log(3.0)


class BackendCapacityError(ValueError):
    """Raised when a counting or sampling backend refuses the problem size.

    The `suggested` attribute names the smallest backend expected to cope.
    """

    def __init__(self, msg, suggested=None):
        super().__init__(msg + (f"; try backend={suggested!r}" if suggested else ""))
        self.suggested = suggested


def scheme_edge_bound(g, k):
    """Largest possible number of scheme edges for genus g with k holes."""
    return 3 * (2 * g + k - 1)


def scheme_vertex_bound(g, k):
    return 2 * (2 * g + k - 1)


# ---------------------------------------------------------------------------
# the scheme type


class Scheme:
    """A rooted map with one internal face, every non-marked vertex of
    degree >= 3, and simple pairwise edge-disjoint hole boundaries.

    Classifies its half-edges on construction: `ext` are those bordering
    the internal face, `internal` the subset whose reversal also does,
    and `boundary[r]` the ext half-edges whose reversal borders hole r
    (empty for vertex holes).
    """

    def __init__(self, map):
        self.map = map
        face_hole_ids = {i for kind, i in map.holes if kind == "face"}
        inner = [f for f in range(map.n_faces) if f not in face_hole_ids]
        if len(inner) != 1:
            raise ValueError("scheme must have exactly one internal face")
        self.internal_face = inner[0]
        ext = map.faces[self.internal_face]
        self.ext = frozenset(int(h) for h in ext)
        self.internal = frozenset(h for h in self.ext if (h ^ 1) in self.ext)
        bnd = []
        for kind, ident in map.holes:
            if kind == "vertex":
                bnd.append(())
            else:
                bnd.append(tuple(int(x) ^ 1 for x in map.faces[ident]))
        self.boundary = tuple(bnd)
        self.hole_vertex = {
            r: ident for r, (kind, ident) in enumerate(map.holes) if kind == "vertex"
        }

    @property
    def n_edges(self):
        return self.map.n_edges

    @property
    def n_holes(self):
        return len(self.map.holes)

    @property
    def root(self):
        return self.map.root

    def kinds(self):
        return tuple(kind for kind, _ in self.map.holes)

    def __repr__(self):
        return f"Scheme(edges={self.n_edges}, holes={self.kinds()}, genus={self.map.genus()})"


def validate_scheme(s):
    """Structural checks for a Scheme; returns a ValidationReport."""
    rep = validate_map(s.map)
    m = s.map
    g, k = m.genus(), len(m.holes)
    if (g, k) in ((0, 0), (0, 1)):
        rep.fail(f"(genus, holes) = {(g, k)} admits no scheme")
    if m.root is None:
        rep.fail("scheme must be rooted")
    if m.n_edges > scheme_edge_bound(g, k):
        rep.fail(f"{m.n_edges} edges exceed the bound {scheme_edge_bound(g, k)}")
    if m.n_vertices > scheme_vertex_bound(g, k):
        rep.fail(f"{m.n_vertices} vertices exceed the bound {scheme_vertex_bound(g, k)}")
    marked = set(s.hole_vertex.values())
    for v in range(m.n_vertices):
        d = m.vertex_degree(v)
        if v not in marked and d < 3:
            rep.fail(f"internal vertex {v} has degree {d} < 3")
    for kind, ident in m.holes:
        if kind != "face":
            continue
        cyc = m.faces[ident]
        vs = [m.vertex_of(h) for h in cyc]
        if len(set(vs)) != len(vs):
            rep.fail(f"hole face {ident} boundary is not simple")
    sides = {}
    for kind, ident in m.holes:
        if kind != "face":
            continue
        for h in m.faces[ident]:
            e = min(h, h ^ 1)
            if e in sides and sides[e] != ident:
                rep.fail(f"edge {e} borders two hole faces")
            if m.face_of(h ^ 1) not in (s.internal_face,):
                if m.face_of(h ^ 1) == ident:
                    rep.fail(f"hole face {ident} meets itself across edge {e}")
                else:
                    rep.fail(f"edge {e} borders two hole faces")
            sides[e] = ident
    return rep


def _canon_key(m):
    sig, alp, holes, labs = canonical_rooted_form(m)
    return (tuple(map(int, sig)), tuple(map(int, alp)), tuple(holes))


def scheme_key(s):
    """Hashable identity of a rooted scheme (rooted isomorphism class)."""
    return _canon_key(s.map)


def unrooted_scheme_key(s):
    """Identity of the underlying unrooted scheme: minimum of the rooted
    canonical forms over all rootings."""
    m = s.map
    return min(
        _canon_key(CombinatorialMap(m.sigma, root=h, holes=m.holes))
        for h in range(m.n_half)
    )


# ---------------------------------------------------------------------------
# extraction


def _prune(m, protected):
    """Iteratively delete degree-1 vertices outside `protected`.

    Returns (alive flags over half-edges, remaining degree per vertex).
    """
    alive = np.ones(m.n_half, dtype=bool)
    deg = np.array([len(orb) for orb in m.vertices], dtype=np.int64)
    stack = [v for v in range(m.n_vertices) if deg[v] == 1 and v not in protected]
    while stack:
        v = stack.pop()
        if deg[v] != 1 or v in protected:
            continue
        h = next(x for x in m.vertices[v] if alive[x])
        w = m.vertex_of(h ^ 1)
        alive[h] = alive[h ^ 1] = False
        deg[v] -= 1
        deg[w] -= 1
        if deg[w] == 1 and w not in protected:
            stack.append(w)
    return alive, deg


class _Extraction:
    """Everything extract_scheme computes: the scheme plus the chain and
    interval dictionaries, the contour order of scheme half-edges, and
    the node correspondence."""

    def __init__(self, scheme, chains, intervals, contour, node_vertex, alive, source):
        self.scheme = scheme
        self.chains = chains
        self.intervals = intervals
        self.contour = contour
        self.node_vertex = node_vertex
        self.alive = alive
        self.source = source


def _extract(lm):
    m = lm.map
    g, k = m.genus(), len(m.holes)
    if (g, k) in ((0, 0), (0, 1)):
        raise ValueError(f"extraction requires 2g + k >= 2, got (g, k) = {(g, k)}")
    if m.root is None:
        raise ValueError("extraction requires a rooted map")

    protected = {ident for kind, ident in m.holes if kind == "vertex"}
    alive, adeg = _prune(m, protected)
    is_node = np.zeros(m.n_vertices, dtype=bool)
    for v in range(m.n_vertices):
        if adeg[v] >= 3:
            is_node[v] = True
        elif v in protected:
            assert adeg[v] >= 1, "hole vertex lost all edges"
            is_node[v] = True
    if not is_node.any():
        raise RuntimeError("pruning left no scheme nodes; invalid input map")

    # walk chains between nodes
    she_of = {}
    chains = {}
    chain_index = {}
    next_e = 0
    for v in range(m.n_vertices):
        if not is_node[v]:
            continue
        for h0 in m.vertices[v]:
            if not alive[h0] or h0 in she_of:
                continue
            ch = [int(h0)]
            guard = 0
            while True:
                w = m.vertex_of(ch[-1] ^ 1)
                if is_node[w]:
                    break
                nxt = next(
                    x for x in m.vertices[w] if alive[x] and x != (ch[-1] ^ 1)
                )
                ch.append(int(nxt))
                guard += 1
                assert guard <= m.n_edges, "chain walk failed to terminate"
            e = next_e
            next_e += 2
            she_of[ch[0]] = e
            she_of[ch[-1] ^ 1] = e ^ 1
            chains[e] = list(ch)
            chains[e ^ 1] = [x ^ 1 for x in reversed(ch)]
            for i, x in enumerate(chains[e]):
                chain_index[x] = (e, i)
            for i, x in enumerate(chains[e ^ 1]):
                chain_index[x] = (e ^ 1, i)

    # scheme rotation system from the surviving rotations at nodes
    sigma_s = np.zeros(next_e, dtype=np.int64)
    node_vertex = {}
    for v in range(m.n_vertices):
        if not is_node[v]:
            continue
        cyc = [h for h in m.vertices[v] if alive[h]]
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            sigma_s[she_of[a]] = she_of[b]
    s_map0 = CombinatorialMap(sigma_s)
    holes_s = []
    for kind, ident in m.holes:
        if kind == "vertex":
            any_he = next(h for h in m.vertices[ident] if alive[h])
            holes_s.append(("vertex", s_map0.vertex_of(she_of[any_he])))
        else:
            h = m.faces[ident][0]
            e, i = chain_index[h]
            holes_s.append(("face", s_map0.face_of(e)))

    # intervals: split the internal-face contour at the chain runs
    f_star = lm.face
    H = [int(c) for c in m.face_corners(f_star, start_corner=m.root)]
    N = len(H)
    out = [int(m.sigma[c]) for c in H]
    aps = [p for p in range(N) if alive[out[p]]]
    assert aps, "internal face must meet the pruned core"
    she_at = [chain_index[out[p]][0] for p in aps]
    L = len(aps)
    breaks = [i for i in range(L) if she_at[i] != she_at[i - 1]]
    if not breaks:
        runs = [(0, L - 1)]
    else:
        runs = []
        for j, st in enumerate(breaks):
            en = (breaks[(j + 1) % len(breaks)] - 1) % L
            runs.append((st, en))
    # rotate so that the run covering the root corner comes first
    first = next(j for j, (st, en) in enumerate(runs) if _run_covers(st, en, 0, L))
    runs = runs[first:] + runs[:first]

    intervals = {}
    contour = []
    for st, en in runs:
        e = she_at[st]
        assert e not in intervals, "scheme half-edge seen in two runs"
        prev = aps[(st - 1) % L]
        if len(runs) == 1:
            count = N + 1
            start = (prev + 1) % N
        else:
            start = (prev + 1) % N
            stop = (aps[en] + 1) % N
            count = (stop - start) % N + 1
        intervals[e] = [H[(start + i) % N] for i in range(count)]
        contour.append(e)
    assert sorted(intervals) == sorted(
        {chain_index[x][0] for p in aps for x in (out[p],)}
    )
    assert sum(len(iv) - 1 for iv in intervals.values()) == N

    s_map = CombinatorialMap(sigma_s, root=int(contour[0]), holes=holes_s)
    scheme = Scheme(s_map)
    node_vertex = {}
    for v in range(m.n_vertices):
        if is_node[v]:
            h = next(x for x in m.vertices[v] if alive[x])
            node_vertex[s_map.vertex_of(she_of[h])] = v
    return _Extraction(scheme, chains, intervals, contour, node_vertex, alive, lm)


def _run_covers(st, en, i, L):
    if st <= en:
        return st <= i <= en
    return i >= st or i <= en


def extract_scheme(lm):
    """Prune and contract a labeled map with holes down to its scheme.

    Returns (scheme, chains, intervals): `chains` maps each scheme
    half-edge to the list of original half-edges it contracts, and
    `intervals` maps each scheme half-edge bordering the internal face
    to its stretch of internal-face corners (consecutive intervals share
    exactly their extremities).
    """
    x = _extract(lm)
    return x.scheme, x.chains, x.intervals


# ---------------------------------------------------------------------------
# reading forests out of intervals, and the decomposition


def _freeze(node):
    return tuple(_freeze(c) for c in node)


def _interval_read(lm, corners, alive):
    """Walk one interval and collect, per floor, the plane tree hanging in
    its sector along with raw vertex labels.

    Returns (floor vertices, trees, tree label tuples, floor labels).
    The trailing floor vertex carries no tree inside this interval.
    """
    m = lm.map
    lab = lm.labels
    v0 = m.vertex_of(corners[0])
    floor_vs = [v0]
    floor_labels = [int(lab[v0])]
    trees, tree_labels = [], []
    cur, labs = [], [int(lab[v0])]
    stack, entry = [], []
    for i in range(len(corners) - 1):
        outh = int(m.sigma[corners[i]])
        v_next = m.vertex_of(corners[i + 1])
        if alive[outh]:
            assert not stack and not entry, "tree excursion crosses a chain edge"
            trees.append(_freeze(cur))
            tree_labels.append(tuple(labs))
            cur, labs = [], [int(lab[v_next])]
            floor_vs.append(v_next)
            floor_labels.append(int(lab[v_next]))
        elif entry and outh == (entry[-1] ^ 1):
            entry.pop()
            cur = stack.pop()
        else:
            entry.append(outh)
            child = []
            stack.append(cur)
            cur.append(child)
            cur = child
            labs.append(int(lab[v_next]))
    assert not stack and not entry and cur == []
    return floor_vs, trees, tree_labels, floor_labels


class SizeParameters:
    """Per-half-edge sizes of a decomposition: `area` and `width` keyed by
    scheme half-edge, `lam` by scheme vertex (root vertex pinned to 0).
    Widths agree across the two orientations of an internal edge; the
    areas of the two orientations need not."""

    def __init__(self, area, width, lam, discrete=True):
        self.area = dict(area)
        self.width = dict(width)
        self.lam = dict(lam)
        self.discrete = discrete

    def total_area(self):
        return sum(self.area.values())

    def validate(self, scheme, n=None, perimeters=None):
        rep = ValidationReport()
        v0 = scheme.map.vertex_of(scheme.root)
        if self.lam.get(v0, 0) != 0:
            rep.fail("root vertex label is not 0")
        for h in scheme.internal:
            if self.width[h] != self.width[h ^ 1]:
                rep.fail(f"internal widths disagree across edge {min(h, h ^ 1)}")
        if n is not None and self.total_area() != n:
            rep.fail(f"areas sum to {self.total_area()}, expected {n}")
        if perimeters is not None:
            for r, per in enumerate(perimeters):
                got = sum(self.width[h] for h in scheme.boundary[r])
                if got != per:
                    rep.fail(f"hole {r} widths sum to {got}, expected {per}")
        return rep


class Decomposition:
    """The output of decompose: scheme, contour order of visits, one
    elementary piece per internal-face half-edge (shared object across the
    two orientations of an internal edge), and the recorded sizes."""

    def __init__(self, scheme, contour, pieces, sizes, chains=None, intervals=None, source=None):
        self.scheme = scheme
        self.contour = list(contour)
        self.pieces = pieces
        self.sizes = sizes
        self.chains = chains
        self.intervals = intervals
        self.source = source

    @property
    def n(self):
        return self.sizes.total_area()

    def perimeters(self):
        out = []
        for r, (kind, ident) in enumerate(self.scheme.map.holes):
            if kind == "vertex":
                out.append(0)
            else:
                out.append(sum(self.sizes.width[h] for h in self.scheme.boundary[r]))
        return tuple(out)

    def counts(self):
        """(number of slices, number of quadrilaterals)."""
        ns = sum(1 for h in self.contour if self.pieces[h]["kind"] == "slice")
        return ns, (len(self.contour) - ns) // 2


def decompose(lm):
    """Cut a labeled map with holes into elementary pieces along its scheme.

    Every boundary half-edge yields a slice, every internal edge one
    quadrilateral shared by its two orientations.  Size parameters and a
    source-vertex correspondence for each piece are recorded.
    """
    x = _extract(lm)
    s = x.scheme
    m = lm.map
    hole_of = {}
    for r in range(s.n_holes):
        for h in s.boundary[r]:
            hole_of[h] = r

    pieces = {}
    width = {h: len(x.chains[h]) for h in x.chains}
    area = {}
    for e in x.contour:
        if e in pieces:
            continue
        if e in hole_of:
            fv, trees, tls, fls = _interval_read(lm, x.intervals[e], x.alive)
            base = fls[0]
            f = WellLabeledForest(
                trees,
                [tuple(v - base for v in tl) for tl in tls],
                fls[-1] - base,
            )
            piece = build_slice(f)
            src = _piece_src(piece, lm, x.intervals[e], 0)
            pieces[e] = {
                "kind": "slice",
                "store": e,
                "primary": True,
                "hole": hole_of[e],
                "piece": piece,
                "src": src,
            }
            area[e] = f.a
        else:
            fv_u, tr_u, tl_u, fl_u = _interval_read(lm, x.intervals[e], x.alive)
            fv_l, tr_l, tl_l, fl_l = _interval_read(lm, x.intervals[e ^ 1], x.alive)
            assert fl_l[::-1] == fl_u, "chain labels disagree across orientations"
            base = fl_u[0]
            df = DoubleForest(
                tr_u,
                tr_l,
                [tuple(v - base for v in tl) for tl in tl_u],
                [tuple(v - base for v in tl) for tl in tl_l],
                [v - base for v in fl_u],
            )
            piece = build_quadrilateral(df)
            src = _piece_src(piece, lm, x.intervals[e], 0)
            off = piece.cvs.slots.chains[0][1]
            src = _piece_src(piece, lm, x.intervals[e ^ 1], off, src)
            pieces[e] = {
                "kind": "quad",
                "store": e,
                "primary": True,
                "hole": None,
                "piece": piece,
                "src": src,
            }
            pieces[e ^ 1] = {
                "kind": "quad",
                "store": e,
                "primary": False,
                "hole": None,
                "piece": piece,
                "src": src,
            }
            area[e] = df.a + df.h
            area[e ^ 1] = df.abar

    v0 = s.map.vertex_of(s.root)
    base_label = int(lm.labels[x.node_vertex[v0]])
    lam = {
        sv: int(lm.labels[mv]) - base_label for sv, mv in x.node_vertex.items()
    }
    sizes = SizeParameters(area, width, lam)
    n = m.n_edges - sum(
        m.face_degree(ident) for kind, ident in m.holes if kind == "face"
    )
    assert sizes.total_area() == n, "piece areas must partition the map size"
    rep = sizes.validate(s, n=n)
    assert rep.ok, rep
    return Decomposition(
        s, x.contour, pieces, sizes, chains=x.chains, intervals=x.intervals, source=lm
    )


def _piece_src(piece, lm, corners, offset, src=None):
    """Fill the piece-vertex -> source-vertex array from one interval."""
    m = lm.map
    if src is None:
        src = np.full(piece.map.n_vertices, -1, dtype=np.int64)
    sv = piece.cvs.slot_vertex_out
    for p, c in enumerate(corners):
        pv = int(sv[offset + p])
        mv = int(m.vertex_of(c))
        assert src[pv] in (-1, mv), "interval corners map one piece vertex to two sources"
        src[pv] = mv
    return src


# ---------------------------------------------------------------------------
# reconstruction by iterated gluing


def reconstruct(decomp, trace=False):
    """Glue the pieces of a decomposition along the contour order and
    return the resulting finite metric space.

    The result carries one boundary mark per hole and k+1 measures: index
    0 is the area measure (counting measure away from scheme nodes), then
    one boundary measure per hole.  With trace=True also returns the
    source-vertex array (requires a decomposition produced by decompose).
    """
    s = decomp.scheme
    k = s.n_holes
    contour = decomp.contour
    assert contour, "empty contour"

    piece_spaces = {}
    for e in contour:
        rec = decomp.pieces[e]
        if rec["store"] not in piece_spaces:
            piece_spaces[rec["store"]] = FiniteMetricSpace(
                graph_metric(rec["piece"].map)
            )

    want_src = trace
    if want_src and decomp.pieces[contour[0]].get("src") is None:
        raise ValueError("trace requires a decomposition with source arrays")

    # vertex-hole tracking: (scheme half-edge whose interval starts at the
    # hole vertex) -> hole index
    vh_watch = {}
    for r, sv in s.hole_vertex.items():
        e = next(h for h in s.ext if s.map.vertex_of(h) == sv)
        vh_watch.setdefault(e, []).append(r)

    cur = None
    meas = None
    srcv = None
    gamma0, xi0 = [], []
    pend = {}
    vh_points = {}

    def piece_meas(rec):
        piece = rec["piece"]
        out = [np.zeros(piece.map.n_vertices)] * 0
        arrs = [np.asarray(piece.area, dtype=np.float64)]
        for r in range(k):
            if rec["kind"] == "slice" and rec["hole"] == r:
                arrs.append(np.asarray(piece.base, dtype=np.float64))
            else:
                arrs.append(np.zeros(piece.map.n_vertices))
        return arrs

    def local_marks(rec):
        mk = rec["piece"].marks
        if rec["kind"] == "slice" or rec["primary"]:
            return mk["gamma"], mk["xi"], mk.get("gammabar"), mk.get("xibar")
        return mk["gammabar"], mk["xibar"], None, None

    def local_top(rec, e):
        mk = rec["piece"].marks
        if rec["kind"] == "slice" or e == rec["store"]:
            return mk["rho"][0]
        return mk["rhobar"][0]

    for t, e in enumerate(contour):
        rec = decomp.pieces[e]
        second = rec["kind"] == "quad" and not rec["primary"] and rec["store"] in pend
        if second:
            gam, xin = pend.pop(rec["store"])
            lx, ly = len(xi0) - 1, len(gam) - 1
            ell = min(lx, ly)
            marked = cur.with_marks(
                [
                    Mark(xi0[: ell + 1], geodesic=True),
                    Mark(gam[: ell + 1], geodesic=True),
                ]
            )
            glued, proj = glue_self(marked, 0, 1)
            cur = FiniteMetricSpace(glued.dist)
            remap = lambda pts: [int(proj[p]) for p in pts]
            gamma0 = remap(gamma0)
            new_xi0 = remap(xin)
            old_xi0 = remap(xi0)
            gam_m = remap(gam)
            if ly > lx:
                gamma0 = gamma0 + gam_m[lx + 1 :]
            if lx > ly:
                new_xi0 = new_xi0 + old_xi0[ly + 1 :]
            xi0 = new_xi0
            pend = {key: (remap(a), remap(b)) for key, (a, b) in pend.items()}
            vh_points = {r: int(proj[p]) for r, p in vh_points.items()}
            mm = cur.m
            new_meas = []
            for arr in meas:
                w = np.zeros(mm)
                np.add.at(w, proj, arr)
                new_meas.append(w)
            meas = new_meas
            if srcv is not None:
                new_src = np.full(mm, -1, dtype=np.int64)
                for p_old, p_new in enumerate(proj):
                    _merge_src(new_src, int(p_new), int(srcv[p_old]))
                srcv = new_src
            continue

        pspace = piece_spaces[rec["store"]]
        gam, xin, gbar, xbar = local_marks(rec)
        parrs = piece_meas(rec)
        psrc = rec.get("src")
        if cur is None:
            cur = pspace
            meas = [a.copy() for a in parrs]
            srcv = psrc.copy() if (want_src and psrc is not None) else None
            gamma0 = list(gam)
            xi0 = list(xin)
            projY = np.arange(cur.m)
        else:
            lx, ly = len(xi0) - 1, len(gam) - 1
            ell = min(lx, ly)
            left = cur.with_marks([Mark(xi0[: ell + 1], geodesic=True)])
            right = pspace.with_marks([Mark(list(gam[: ell + 1]), geodesic=True)])
            glued, projY = glue_pair(left, right, 0, 0)
            cur = FiniteMetricSpace(glued.dist)
            mm = cur.m
            new_meas = []
            for arr, parr in zip(meas, parrs):
                w = np.zeros(mm)
                w[: len(arr)] = arr
                np.add.at(w, projY, parr)
                new_meas.append(w)
            meas = new_meas
            if srcv is not None:
                new_src = np.full(mm, -1, dtype=np.int64)
                new_src[: len(srcv)] = srcv
                for p_old, p_new in enumerate(projY):
                    _merge_src(new_src, int(p_new), int(psrc[p_old]))
                srcv = new_src
            gam_m = [int(projY[p]) for p in gam]
            new_xi0 = [int(projY[p]) for p in xin]
            if ly > lx:
                gamma0 = gamma0 + gam_m[lx + 1 :]
            if lx > ly:
                new_xi0 = new_xi0 + xi0[ly + 1 :]
            xi0 = new_xi0
        if rec["kind"] == "quad":
            pend[rec["store"]] = (
                [int(projY[p]) for p in gbar],
                [int(projY[p]) for p in xbar],
            )
        for r in vh_watch.get(e, ()):
            if r not in vh_points:
                vh_points[r] = int(projY[local_top(rec, e)])

    assert not pend, "unclosed quadrilateral sides at the end of the contour"
    assert len(gamma0) == len(xi0), "outer boundaries of unequal depth"
    marked = cur.with_marks(
        [Mark(gamma0, geodesic=True), Mark(xi0, geodesic=True)]
    )
    glued, proj = glue_self(marked, 0, 1)
    cur = FiniteMetricSpace(glued.dist)
    mm = cur.m
    new_meas = []
    for arr in meas:
        w = np.zeros(mm)
        np.add.at(w, proj, arr)
        new_meas.append(w)
    meas = new_meas
    if srcv is not None:
        new_src = np.full(mm, -1, dtype=np.int64)
        for p_old, p_new in enumerate(proj):
            _merge_src(new_src, int(p_new), int(srcv[p_old]))
        srcv = new_src
    vh_points = {r: int(proj[p]) for r, p in vh_points.items()}

    marks = []
    for r in range(k):
        if r in vh_points:
            meas[1 + r][vh_points[r]] = 1.0
            marks.append(Mark([vh_points[r]]))
        else:
            marks.append(Mark([int(p) for p in np.flatnonzero(meas[1 + r] > 0)]))
    space = cur.with_marks(marks).with_measures(meas)
    if trace:
        return space, srcv
    return space


def _merge_src(arr, pos, val):
    if val < 0:
        return
    assert arr[pos] in (-1, val), "glued points trace to two different source vertices"
    arr[pos] = val


# ---------------------------------------------------------------------------
# file round trip for decompositions


def _double_forest_to_text(df):
    return df.to_text()


def _double_forest_from_text(s):
    up_s, low_s, ulab_s, llab_s, flab_s = [part.strip() for part in s.split("|")]
    upper = [tree_from_parens(tok) for tok in up_s.split()]
    lower = [tree_from_parens(tok) for tok in low_s.split()]

    def cut(flat, trees):
        out, pos = [], 0
        for t in trees:
            sz = tree_edge_count(t) + 1
            out.append(tuple(flat[pos : pos + sz]))
            pos += sz
        assert pos == len(flat)
        return out

    ulabs = cut([int(x) for x in ulab_s.split()], upper)
    llabs = cut([int(x) for x in llab_s.split()], lower)
    flabs = [int(x) for x in flab_s.split()]
    return DoubleForest(upper, lower, ulabs, llabs, flabs)


def decomposition_to_dir(decomp, directory):
    """Write a decomposition as a scheme file, one piece file per stored
    piece, and a JSON manifest holding the contour order and sizes."""
    os.makedirs(directory, exist_ok=True)
    s = decomp.scheme
    with open(os.path.join(directory, "scheme.map"), "w") as fh:
        fh.write(serialize_map(s.map))
    entries = {}
    for e in decomp.contour:
        rec = decomp.pieces[e]
        entry = {
            "kind": rec["kind"],
            "store": rec["store"],
            "primary": rec["primary"],
        }
        if rec["hole"] is not None:
            entry["hole"] = rec["hole"]
        if rec["primary"]:
            fname = f"piece_{rec['store']:03d}.txt"
            entry["file"] = fname
            piece = rec["piece"]
            if rec["kind"] == "slice":
                text = piece.source.to_text()
            else:
                text = _double_forest_to_text(piece.source)
            with open(os.path.join(directory, fname), "w") as fh:
                fh.write(text + "\n")
        entries[str(e)] = entry
    manifest = {
        "contour": [int(e) for e in decomp.contour],
        "pieces": entries,
        "sizes": {
            "area": {str(h): int(v) for h, v in decomp.sizes.area.items()},
            "width": {str(h): int(v) for h, v in decomp.sizes.width.items()},
            "lambda": {str(v): int(x) for v, x in decomp.sizes.lam.items()},
        },
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def decomposition_from_dir(directory):
    """Rebuild a decomposition written by decomposition_to_dir.  The pieces
    are reconstructed from their forest files; source arrays are absent."""
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    with open(os.path.join(directory, "scheme.map")) as fh:
        m, _, _ = parse_map(fh.read())
    s = Scheme(m)
    pieces = {}
    built = {}
    for key, entry in manifest["pieces"].items():
        e = int(key)
        store = entry["store"]
        if entry["primary"]:
            with open(os.path.join(directory, entry["file"])) as fh:
                text = fh.read().strip()
            if entry["kind"] == "slice":
                built[store] = build_slice(forest_from_text(text))
            else:
                built[store] = build_quadrilateral(_double_forest_from_text(text))
    for key, entry in manifest["pieces"].items():
        e = int(key)
        pieces[e] = {
            "kind": entry["kind"],
            "store": entry["store"],
            "primary": entry["primary"],
            "hole": entry.get("hole"),
            "piece": built[entry["store"]],
            "src": None,
        }
    sizes = SizeParameters(
        {int(h): v for h, v in manifest["sizes"]["area"].items()},
        {int(h): v for h, v in manifest["sizes"]["width"].items()},
        {int(v): x for v, x in manifest["sizes"]["lambda"].items()},
    )
    return Decomposition(s, manifest["contour"], pieces, sizes)


# ---------------------------------------------------------------------------
# scheme enumeration


def _matchings(items):
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        b = items[i]
        rest = items[1:i] + items[i + 1 :]
        for sub in _matchings(rest):
            yield [(a, b)] + sub


def _polygon_structures(n_edges, hole_degrees):
    """Rotation systems with one distinguished face of the full remaining
    degree: yields (sigma array, hole side cycles) with the polygon rule
    phi(position p) = position p+1 and free cyclic orders on each hole."""
    E = n_edges
    D = 2 * E - sum(hole_degrees)
    if D < 1 or E - sum(hole_degrees) < 0:
        return
    positions = list(range(D))

    def hole_slot_choices(idx, free):
        if idx == len(hole_degrees):
            yield []
            return
        d = hole_degrees[idx]
        for sub in itertools.combinations(free, d):
            rest = [p for p in free if p not in sub]
            for tail in hole_slot_choices(idx + 1, rest):
                yield [list(sub)] + tail

    for slot_sets in hole_slot_choices(0, positions):
        used = [p for sub in slot_sets for p in sub]
        free = [p for p in positions if p not in used]
        order_pools = []
        for sub in slot_sets:
            if len(sub) <= 1:
                order_pools.append([tuple(sub)])
            else:
                order_pools.append(
                    [tuple([sub[0]] + list(pm)) for pm in itertools.permutations(sub[1:])]
                )
        for orders in itertools.product(*order_pools):
            for matching in _matchings(free):
                pos_he = {}
                side_he = {}
                t = 0
                for cyc in orders:
                    for p in cyc:
                        pos_he[p] = 2 * t
                        side_he[p] = 2 * t + 1
                        t += 1
                for p, q in matching:
                    pos_he[p] = 2 * t
                    pos_he[q] = 2 * t + 1
                    t += 1
                assert t == E
                phi = np.zeros(2 * E, dtype=np.int64)
                for p in range(D):
                    phi[pos_he[p]] = pos_he[(p + 1) % D]
                for cyc in orders:
                    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                        phi[side_he[a]] = side_he[b]
                sigma = np.zeros(2 * E, dtype=np.int64)
                for h in range(2 * E):
                    sigma[h ^ 1] = phi[h]
                yield sigma, [tuple(side_he[p] for p in cyc) for cyc in orders], pos_he


def enumerate_schemes(g, kinds, max_edges=None):
    """All rooted schemes of genus g with the given hole-kind pattern,
    up to rooted isomorphism (holes stay ordered)."""
    k = len(kinds)
    if (g, k) in ((0, 0), (0, 1)):
        raise ValueError(f"(genus, holes) = {(g, k)} admits no scheme")
    bound = max_edges if max_edges is not None else scheme_edge_bound(g, k)
    face_idx = [i for i, kd in enumerate(kinds) if kd == "face"]
    vert_idx = [i for i, kd in enumerate(kinds) if kd == "vertex"]
    out = []
    seen = set()
    for E in range(1, bound + 1):
        deg_ranges = [range(1, 2 * E) for _ in face_idx]
        for degs in itertools.product(*deg_ranges):
            if sum(degs) > 2 * E - 1 or E - sum(degs) < 0:
                continue
            for sigma, hole_cycles, _ in _polygon_structures(E, list(degs)):
                m0 = CombinatorialMap(sigma)
                if not m0.is_connected() or m0.genus() != g:
                    continue
                ok = True
                face_ids = []
                for cyc in hole_cycles:
                    vs = [m0.vertex_of(x) for x in cyc]
                    if len(set(vs)) != len(vs):
                        ok = False
                        break
                    face_ids.append(m0.face_of(cyc[0]))
                if not ok or len(set(face_ids)) != len(face_ids):
                    continue
                V = m0.n_vertices
                degv = [m0.vertex_degree(v) for v in range(V)]
                for vh in itertools.permutations(range(V), len(vert_idx)):
                    marked = set(vh)
                    if any(degv[v] < 3 for v in range(V) if v not in marked):
                        continue
                    holes = [None] * k
                    for j, i in enumerate(face_idx):
                        holes[i] = ("face", int(face_ids[j]))
                    for j, i in enumerate(vert_idx):
                        holes[i] = ("vertex", int(vh[j]))
                    for root in range(2 * E):
                        m = CombinatorialMap(sigma, root=root, holes=holes)
                        key = _canon_key(m)
                        if key in seen:
                            continue
                        seen.add(key)
                        s = Scheme(m)
                        if not validate_scheme(s).ok:
                            continue
                        out.append(s)
    return out


_REP_CACHE = {}


def scheme_representatives(g, kinds):
    """Unrooted scheme representatives with their rooted-class counts:
    list of (Scheme, number of rooted isomorphism classes)."""
    key = (g, tuple(kinds))
    if key in _REP_CACHE:
        return _REP_CACHE[key]
    groups = {}
    for s in enumerate_schemes(g, kinds):
        groups.setdefault(unrooted_scheme_key(s), []).append(s)
    reps = [(grp[0], len(grp)) for grp in groups.values()]
    _REP_CACHE[key] = reps
    return reps


def shrink_tadpoles(s, vanishing=None):
    """Contract every tadpole hole (single-loop boundary at a trivalent
    vertex) to a vertex hole; identity when there is nothing to shrink.

    `vanishing` restricts contraction to the given hole indices.
    """
    m = s.map
    doomed = []
    for r, (kind, ident) in enumerate(m.holes):
        if kind != "face":
            continue
        if vanishing is not None and r not in vanishing:
            continue
        if m.face_degree(ident) != 1:
            continue
        x = int(m.faces[ident][0])
        v = m.vertex_of(x)
        if m.vertex_degree(v) != 3:
            continue
        if m.root in (x, x ^ 1):
            raise ValueError("root half-edge sits on a tadpole loop")
        doomed.append((r, x))
    if not doomed:
        return s
    drop = {x for _, x in doomed} | {x ^ 1 for _, x in doomed}
    kept = sorted(h for h in range(m.n_half) if h not in drop)
    new_id = {h: i for i, h in enumerate(kept)}
    sigma = np.zeros(len(kept), dtype=np.int64)
    for h in kept:
        nxt = int(m.sigma[h])
        while nxt in drop:
            nxt = int(m.sigma[nxt])
        sigma[new_id[h]] = new_id[nxt]
    probe = {}
    for r, x in doomed:
        v = m.vertex_of(x)
        rep_he = next(h for h in m.vertices[v] if h not in drop)
        probe[r] = new_id[rep_he]
    m1 = CombinatorialMap(sigma)
    holes = []
    for r, (kind, ident) in enumerate(m.holes):
        if r in probe:
            holes.append(("vertex", m1.vertex_of(probe[r])))
        elif kind == "vertex":
            old_he = next(h for h in m.vertices[ident] if h not in drop)
            holes.append(("vertex", m1.vertex_of(new_id[old_he])))
        else:
            old_he = next(h for h in m.faces[ident] if h not in drop)
            holes.append(("face", m1.face_of(new_id[old_he])))
    return Scheme(CombinatorialMap(sigma, root=new_id[m.root], holes=holes))


def is_dominant(s):
    """Trivalent internal vertices and degree-1 vertex holes."""
    marked = set(s.hole_vertex.values())
    for v in range(s.map.n_vertices):
        d = s.map.vertex_degree(v)
        if v in marked:
            if d != 1:
                return False
        elif d != 3:
            return False
    return True


# ---------------------------------------------------------------------------
# direct enumeration of labeled maps (the brute-force side of the counts)


def _contour_labelings(m, face):
    """All label vectors well labeled along the contour of `face`, rooted
    at m.root with label 0 there."""
    H = m.face_corners(face, start_corner=m.root)
    verts = [m.vertex_of(c) for c in H]
    D = len(H)
    lab = {verts[0]: 0}
    out = []

    def rec(p):
        if p == D:
            if lab[verts[D - 1]] <= 1:
                arr = np.zeros(m.n_vertices, dtype=np.int64)
                for v, x in lab.items():
                    arr[v] = x
                out.append(arr)
            return
        v = verts[p]
        lo = lab[verts[p - 1]] - 1
        hi = D - p
        if v in lab:
            if lo <= lab[v] <= hi:
                rec(p + 1)
            return
        for x in range(lo, hi + 1):
            lab[v] = x
            rec(p + 1)
        del lab[v]

    rec(1)
    return out


def enumerate_labeled_maps(n, g, l=(), cap=None, count_only=False):
    """Exhaustively generate the rooted labeled maps with holes: n counts
    the internal edges beyond the hole boundaries, l the hole perimeters
    (0 entries are vertex holes).  Returns a list of LabeledMap, or just
    the count with count_only=True."""
    l = tuple(int(x) for x in l)
    k = len(l)
    if n < 0 or any(x < 0 for x in l):
        raise ValueError("sizes must be nonnegative")
    E = n + sum(l)
    if E == 0:
        raise ValueError("need at least one edge")
    face_degs = [x for x in l if x > 0]
    face_idx = [i for i, x in enumerate(l) if x > 0]
    vert_idx = [i for i, x in enumerate(l) if x == 0]
    total = 0
    out = []
    for sigma, hole_cycles, pos_he in _polygon_structures(E, face_degs):
        D = 2 * E - sum(face_degs)
        root = pos_he[D - 1] ^ 1
        m0 = CombinatorialMap(sigma, root=root)
        if not m0.is_connected() or m0.genus() != g:
            continue
        ok = True
        face_ids = []
        for cyc in hole_cycles:
            vs = [m0.vertex_of(x) for x in cyc]
            if len(set(vs)) != len(vs):
                ok = False
                break
            face_ids.append(m0.face_of(cyc[0]))
        if not ok:
            continue
        f_star = m0.face_of(pos_he[0] ^ 1)
        labelings = _contour_labelings(m0, f_star)
        if not labelings:
            continue
        V = m0.n_vertices
        assignments = list(itertools.permutations(range(V), len(vert_idx)))
        if count_only:
            total += len(labelings) * len(assignments)
            continue
        for labels in labelings:
            for vh in assignments:
                holes = [None] * k
                for j, i in enumerate(face_idx):
                    holes[i] = ("face", int(face_ids[j]))
                for j, i in enumerate(vert_idx):
                    holes[i] = ("vertex", int(vh[j]))
                m = CombinatorialMap(sigma, root=root, holes=holes)
                out.append(LabeledMap(m, labels.copy(), f_star))
                if cap is not None and len(out) > cap:
                    raise BackendCapacityError(
                        f"more than {cap} labeled maps", suggested="dp"
                    )
    if count_only:
        return total
    return out


# ---------------------------------------------------------------------------
# exact counting through the schemes


def _tern(width, tilt):
    return ternary_count(width, tilt) if width >= 1 else 0


def _fjump(width, tilt):
    return floor_jump_count(width, tilt) if width >= 1 else 0


def _structure(s):
    """Edge endpoint lists for the weight tables: internal edges once per
    edge, boundary chains once per hole half-edge (in internal-face
    direction).  Vertices are scheme vertex ids."""
    m = s.map
    internal = []
    seen = set()
    for h in sorted(s.internal):
        e0 = min(h, h ^ 1)
        if e0 in seen:
            continue
        seen.add(e0)
        internal.append((e0, m.vertex_of(e0), m.vertex_of(e0 ^ 1)))
    bchains = []
    for r in range(s.n_holes):
        bchains.append(
            [(h, m.vertex_of(h), m.vertex_of(h ^ 1)) for h in s.boundary[r]]
        )
    return internal, bchains


def _fast_eligible(s, perims):
    """The collapsed weight table applies when every hole boundary is a
    single chain (then a loop, tilt pinned to 0) and the non-loop internal
    edges form a spanning tree of the scheme vertices."""
    internal, bchains = _structure(s)
    for r, chains in enumerate(bchains):
        if len(chains) > 1:
            return None
        if (perims[r] == 0) != (len(chains) == 0):
            return None
        if chains and chains[0][1] != chains[0][2]:
            return None
    loops = [e for e in internal if e[1] == e[2]]
    tree = [e for e in internal if e[1] != e[2]]
    parent = list(range(s.map.n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = s.map.n_vertices
    for _, u, v in tree:
        ru, rv = find(u), find(v)
        if ru == rv:
            return None
        parent[ru] = rv
        comps -= 1
    if comps != 1:
        return None
    return loops, tree, bchains


class _Tables:
    """Per-scheme exact weight tables at fixed (n, perimeters).

    h_weights[h] is an exact integer proportional to the number of
    (rooted map, scheme rooting) pairs whose scheme is this one and whose
    chains carry h internal edges in total; the proportionality constant
    (a power of 3 recorded in log3_shift) is shared across all schemes of
    the same problem when every table is loop-free."""

    def __init__(self, scheme, kind, h_weights, data, log3_shift):
        self.scheme = scheme
        self.kind = kind
        self.h_weights = h_weights
        self.data = data
        self.log3_shift = log3_shift

    def total(self):
        return sum(w for _, w in self.h_weights)


def _tables_fast(s, n, perims):
    fast = _fast_eligible(s, perims)
    if fast is None:
        return None
    loops, tree, bchains = fast
    P = sum(perims)
    cb = 1
    for r, chains in enumerate(bchains):
        if chains:
            cb *= _fjump(perims[r], 0)
    if cb == 0:
        return _Tables(s, "fast", [], (loops, tree, bchains, None), 0)
    f = len(tree)
    R = 2 * n + P
    h_weights = []
    suffix = None
    if not loops:
        # T(h) = cb * C(h-1, f-1) * 3^h; drop the common 3^n
        for h in range(0 if f == 0 else f, n + 1):
            comp = 1 if f == 0 and h == 0 else (math.comb(h - 1, f - 1) if h >= f >= 1 else 0)
            if comp == 0:
                continue
            fp = first_passage_count(2 * h + P, R)
            if fp == 0:
                continue
            h_weights.append((h, (R) * cb * comp * fp))
        shift = n
    else:
        # suffix convolutions over the loop widths, forest part last
        fpoly = [0] * (n + 1)
        if f == 0:
            fpoly[0] = 1
        else:
            for mres in range(f, n + 1):
                fpoly[mres] = math.comb(mres - 1, f - 1) * 3 ** mres
        suffix = [fpoly]
        for _ in loops:
            prev = suffix[0]
            new = [0] * (n + 1)
            for t in range(1, n + 1):
                c = _tern(t, 0)
                for rrest in range(0, n + 1 - t):
                    if prev[rrest]:
                        new[t + rrest] += c * prev[rrest]
            suffix.insert(0, new)
        T = suffix[0]
        for h in range(n + 1):
            if T[h] == 0:
                continue
            fp = first_passage_count(2 * h + P, R)
            if fp == 0:
                continue
            h_weights.append((h, R * cb * T[h] * 3 ** (n - h) * fp))
        shift = 0
    return _Tables(s, "fast", h_weights, (loops, tree, bchains, suffix), shift)


def _tables_generic(s, n, perims, cap=2_000_000):
    """Brute-force table: every split of the chain widths, hole widths and
    node labels, with exact integer weights.  Meant for small n."""
    internal, bchains = _structure(s)
    for r, chains in enumerate(bchains):
        if (perims[r] == 0) != (len(chains) == 0):
            return _Tables(s, "rows", [], [], n)
    V = s.map.n_vertices
    v0 = s.map.vertex_of(s.root)
    free_vs = [v for v in range(V) if v != v0]
    P = sum(perims)
    R = 2 * n + P
    S = n + P
    ops = (2 * S + 1) ** len(free_vs)
    ops *= max(1, math.comb(max(n - 1, 0), max(len(internal) - 1, 0)))
    if ops > cap:
        raise BackendCapacityError(
            f"generic scheme table needs ~{ops} label assignments", suggested="mcmc"
        )
    rows = []
    by_h = {}

    def width_splits(total, parts):
        if parts == 0:
            if total == 0:
                yield ()
            return
        for first in range(1, total - parts + 2):
            for rest in width_splits(total - first, parts - 1):
                yield (first,) + rest

    bound_splits = []
    for r, chains in enumerate(bchains):
        bound_splits.append(list(width_splits(perims[r], len(chains))))
    for h in range(0, n + 1):
        if len(internal) > 0 and h < len(internal):
            continue
        if len(internal) == 0 and h > 0:
            break
        fp = first_passage_count(2 * h + P, R)
        if fp == 0:
            continue
        for hsplit in width_splits(h, len(internal)):
            for bsplit in itertools.product(*bound_splits):
                for lams in itertools.product(
                    *(range(-S, S + 1) for _ in free_vs)
                ):
                    lam = {v0: 0}
                    lam.update(dict(zip(free_vs, lams)))
                    w = 1
                    for (e0, u, v), he in zip(internal, hsplit):
                        w *= _tern(he, lam[v] - lam[u])
                        if w == 0:
                            break
                    if w == 0:
                        continue
                    for chains, widths in zip(bchains, bsplit):
                        for (e, u, v), le in zip(chains, widths):
                            w *= _fjump(le, lam[v] - lam[u])
                            if w == 0:
                                break
                        if w == 0:
                            break
                    if w == 0:
                        continue
                    weight = R * (3 ** (n - h)) * fp * w
                    rows.append((weight, h, hsplit, bsplit, dict(lam)))
                    by_h[h] = by_h.get(h, 0) + weight
    h_weights = sorted(by_h.items())
    return _Tables(s, "rows", h_weights, rows, 0)


def _scheme_tables(s, n, perims):
    t = _tables_fast(s, n, perims)
    if t is not None:
        return t
    return _tables_generic(s, n, perims)


class CountResult:
    """Exact count plus the per-scheme breakdown."""

    def __init__(self, total, rows):
        self.total = total
        self.rows = rows

    def __int__(self):
        return self.total

    def __repr__(self):
        return f"CountResult(total={self.total}, schemes={len(self.rows)})"


def scheme_weighted_count(n, g, l=()):
    """Exact number of rooted labeled maps with holes, summed over schemes
    with walk weights.  Returns a CountResult whose rows list, per
    unrooted scheme, the sub-count and per-h table."""
    l = tuple(int(x) for x in l)
    k = len(l)
    if n < 0 or g < 0 or any(x < 0 for x in l):
        raise ValueError("sizes must be nonnegative")
    if (g, k) == (0, 0):
        total = 3 ** n * math.comb(2 * n, n) // (n + 1)
        return CountResult(total, [])
    if (g, k) == (0, 1):
        sub = scheme_weighted_count(n, 0, (l[0], 0))
        nv = n + l[0]  # vertex count of the one-hole maps
        if sub.total % nv:
            raise AssertionError("pointed count not divisible by the vertex count")
        return CountResult(sub.total // nv, sub.rows)
    kinds = tuple("face" if x > 0 else "vertex" for x in l)
    total = 0
    rows = []
    for s, n_rooted in scheme_representatives(g, kinds):
        tabs = _scheme_tables(s, n, l)
        W = tabs.total() * 3 ** tabs.log3_shift
        twoe = 2 * s.n_edges
        assert (n_rooted * W) % twoe == 0, "per-scheme weight is not integral"
        cnt = n_rooted * W // twoe
        if cnt:
            rows.append(
                {
                    "scheme": s,
                    "count": cnt,
                    "rooted_classes": n_rooted,
                    "by_h": {h: w * 3 ** tabs.log3_shift for h, w in tabs.h_weights},
                }
            )
        total += cnt
    return CountResult(total, rows)


def scheme_distribution(n, g, l=()):
    """Exact law of the (unrooted) scheme of a uniform labeled map:
    dict unrooted_scheme_key -> probability (float)."""
    res = scheme_weighted_count(n, g, l)
    if not res.rows:
        raise ValueError("no scheme carries weight at this size")
    tot = res.total
    out = {}
    for row in res.rows:
        out[unrooted_scheme_key(row["scheme"])] = row["count"] / tot
    return out


# ---------------------------------------------------------------------------
# samplers


def _rng_of(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _randrange_big(rng, total):
    """Uniform integer in [0, total) for arbitrary-size totals."""
    if total <= 0:
        raise ValueError("empty range")
    bits = total.bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    while True:
        r = int.from_bytes(rng.bytes(nbytes), "big") & mask
        if r < total:
            return r


def _pick_weighted(rng, weights):
    total = sum(weights)
    r = _randrange_big(rng, total)
    acc = 0
    for i, w in enumerate(weights):
        acc += w
        if r < acc:
            return i
    raise AssertionError("weighted pick fell through")


def _tree_sphere_map(tree):
    """Plane map of a single rooted plane tree; vertex 0 is the root."""
    rot = {0: []}
    nxt = [1]
    ids = [0]

    def build(node, vid):
        for child in node:
            d = 2 * ids[0]
            ids[0] += 1
            cv = nxt[0]
            nxt[0] += 1
            rot[vid].append(d)
            rot[cv] = [d ^ 1]
            build(child, cv)

    build(tree, 0)
    n_half = 2 * ids[0]
    sigma = np.zeros(n_half, dtype=np.int64)
    for lst in rot.values():
        for a, b in zip(lst, lst[1:] + lst[:1]):
            sigma[a] = b
    return CombinatorialMap(sigma), rot


def _sample_sphere(n, rng):
    if n < 1:
        raise ValueError("need n >= 1")
    path = sample_first_passage(1, 2 * n + 1, rng)
    tree = _split_forest_path(path, 1)[0]
    labels_t = _random_tree_labels(tree, 0, rng)
    m0, rot = _tree_sphere_map(tree)
    labels = np.zeros(m0.n_vertices, dtype=np.int64)
    order = [0]

    def walk(node, vid, it):
        for child in node:
            cv = next(it)
            walk(child, cv, it)

    # vertex ids were allocated in preorder, so labels align directly
    labels[: len(labels_t)] = labels_t
    H = m0.face_corners(0)
    root = int(H[rng.integers(len(H))])
    m = CombinatorialMap(m0.sigma, root=root)
    labels = labels - labels[m.vertex_of(root)]
    return LabeledMap(m, labels, 0)


def _assemble_map(s, width, chain_labels, forest, root_offset):
    """Inverse of decompose at fixed sizes: expand scheme chains, graft the
    per-floor trees, and root at the given internal-face corner offset.

    chain_labels[e][j] is the label of the j-th chain vertex from the
    source of e (both endpoints included); forest[e] = (trees, labels)
    lists one tree per floor of e's interval.
    """
    m_s = s.map
    rot = {}
    vid = {}
    labels = []

    def vertex(symbol, lab=None):
        if symbol not in vid:
            vid[symbol] = len(vid)
            rot[symbol] = []
            labels.append(lab if lab is not None else 0)
        return vid[symbol]

    chain_m = {}
    counter = [0]

    def alloc_pair():
        a = 2 * counter[0]
        counter[0] += 1
        return a

    for h in sorted(s.ext | {x ^ 1 for x in s.ext}):
        e0 = min(h, h ^ 1)
        if e0 in chain_m:
            continue
        w = width[e0]
        fwd = [alloc_pair() for _ in range(w)]
        chain_m[e0] = fwd
        chain_m[e0 ^ 1] = [x ^ 1 for x in reversed(fwd)]

    def floor_symbol(e, j):
        # the j-th floor vertex along e (0 = source node)
        w = width[e]
        if j == 0:
            return ("n", m_s.vertex_of(e))
        if j == w:
            return ("n", m_s.vertex_of(e ^ 1))
        e0 = min(e, e ^ 1)
        return ("c", e0, j if e == e0 else w - j)

    tree_parts = {}

    def graft(sym, tree, labs):
        """Allocate the tree hanging at `sym`; returns its root child
        half-edges in order.  labs is the preorder label tuple."""
        it = iter(labs)
        base = next(it)

        def rec(parent_sym, node):
            downs = []
            for child in node:
                d = alloc_pair()
                csym = ("t", d)
                vertex(csym, next(it))
                rot[csym] = [d ^ 1]
                downs.append(d)
                for cd in rec(csym, child):
                    rot[csym].append(cd)
            return downs

        return rec(sym, tree)

    # node labels come from the chain label paths
    for v in range(m_s.n_vertices):
        some = m_s.vertices[v][0]
        vertex(("n", v), chain_labels[some][0])
    for e0 in {min(h, h ^ 1) for h in s.ext | {x ^ 1 for x in s.ext}}:
        w = width[e0]
        for j in range(1, w):
            vertex(("c", e0, j), chain_labels[e0][j])

    # rotations at nodes: chain heads interleaved with the sector trees
    for v in range(m_s.n_vertices):
        sym = ("n", v)
        for z in m_s.vertices[v]:
            z = int(z)
            rot[sym].append(chain_m[z][0])
            y = int(m_s.sigma[z])
            if y in forest:
                trees, labs = forest[y]
                rot[sym].extend(graft(sym, trees[0], labs[0]))
    # rotations at chain interiors
    for e0 in {min(h, h ^ 1) for h in s.ext | {x ^ 1 for x in s.ext}}:
        w = width[e0]
        for j in range(1, w):
            sym = ("c", e0, j)
            rot[sym].append(chain_m[e0][j - 1] ^ 1)
            if e0 in forest:
                trees, labs = forest[e0]
                rot[sym].extend(graft(sym, trees[j], labs[j]))
            rot[sym].append(chain_m[e0][j])
            if (e0 ^ 1) in forest:
                trees, labs = forest[e0 ^ 1]
                rot[sym].extend(graft(sym, trees[w - j], labs[w - j]))

    n_half = 2 * counter[0]
    sigma = np.zeros(n_half, dtype=np.int64)
    fill = np.zeros(n_half, dtype=bool)
    for symbol, lst in rot.items():
        for a, b in zip(lst, lst[1:] + lst[:1]):
            sigma[a] = b
            fill[a] = True
    assert fill.all(), "rotation assembly missed half-edges"

    # vertex numbering: map symbols through a first build
    m0 = CombinatorialMap(sigma)
    lab_arr = np.zeros(m0.n_vertices, dtype=np.int64)
    for symbol, lst in rot.items():
        lab_arr[m0.vertex_of(lst[0])] = labels[vid[symbol]]

    holes = []
    for r, (kind, ident) in enumerate(m_s.holes):
        if kind == "vertex":
            some = m_s.vertices[ident][0]
            holes.append(("vertex", int(m0.vertex_of(chain_m[int(some)][0]))))
        else:
            z = s.boundary[r][0]
            holes.append(("face", int(m0.face_of(chain_m[z ^ 1][0]))))
    anchor = s.root if s.root in s.ext else (s.root ^ 1)
    f_star = int(m0.face_of(chain_m[anchor][0] ^ 1))
    H = m0.face_corners(f_star)
    out_index = {int(m0.sigma[c]): i for i, c in enumerate(H)}
    p0 = out_index[chain_m[anchor][0]]
    root = int(H[(p0 + root_offset) % len(H)])
    m = CombinatorialMap(sigma, root=root, holes=holes)
    lab_arr = lab_arr - lab_arr[m.vertex_of(root)]
    return LabeledMap(m, lab_arr, f_star)


def _sample_sizes_fast(s, tabs, h, rng):
    """Chain widths, boundary widths, label paths and floor labels for a
    fast-table scheme at total internal width h."""
    loops, tree, bchains, suffix = tabs.data
    width = {}
    chain_labels = {}
    m_s = s.map
    v0 = m_s.vertex_of(s.root)

    # split h over loops then the spanning tree
    rem = h
    loop_w = []
    for j in range(len(loops)):
        nxt = suffix[j + 1]
        ws = []
        wts = []
        for t in range(1, rem + 1):
            c = _tern(t, 0)
            if c and nxt[rem - t]:
                ws.append(t)
                wts.append(c * nxt[rem - t])
        t = ws[_pick_weighted(rng, wts)]
        loop_w.append(t)
        rem -= t
    f = len(tree)
    if f:
        cuts = np.sort(rng.choice(rem - 1, size=f - 1, replace=False)) if f > 1 else np.array([], dtype=int)
        bounds = np.concatenate([[-1], cuts, [rem - 1]])
        tree_w = list(np.diff(bounds).astype(int))
    else:
        assert rem == 0
        tree_w = []

    lam = {v0: 0}
    for (e0, u, v), w in zip(loops, loop_w):
        width[e0] = width[e0 ^ 1] = w
        steps = sample_ternary_bridge(w, 0, rng)
        path = [0]
        for st in steps:
            path.append(path[-1] + int(st))
        chain_labels[e0] = path  # anchored after lam known (loop: u == v)
    # spanning tree: orient from v0 outward
    adj = {}
    for (e0, u, v), w in zip(tree, tree_w):
        width[e0] = width[e0 ^ 1] = w
        adj.setdefault(u, []).append((e0, v))
        adj.setdefault(v, []).append((e0 ^ 1, u))
    seen = {v0}
    stack = [v0]
    tree_paths = {}
    while stack:
        u = stack.pop()
        for e, v in adj.get(u, ()):
            if v in seen:
                continue
            seen.add(v)
            w = width[e]
            steps = rng.integers(-1, 2, size=w)
            path = [lam[u]]
            for st in steps:
                path.append(path[-1] + int(st))
            lam[v] = path[-1]
            tree_paths[e] = path
            stack.append(v)
    assert len(seen) == m_s.n_vertices
    for e, path in tree_paths.items():
        e0 = min(e, e ^ 1)
        chain_labels[e0] = path if e == e0 else path[::-1]
    for (e0, u, v), w in zip(loops, loop_w):
        chain_labels[e0] = [x + lam[u] for x in chain_labels[e0]]
    for r, chains in enumerate(bchains):
        if not chains:
            continue
        (e, u, v) = chains[0]
        per = sum(1 for _ in ())  # placeholder, width set below
        le = tabs_perim(tabs, r)
        width[e] = width[e ^ 1] = le
        jumps = sample_floor_jumps(le, 0, rng)
        path = [lam[u]]
        for jp in jumps:
            path.append(path[-1] + int(jp))
        e0 = min(e, e ^ 1)
        chain_labels[e0] = path if e == e0 else path[::-1]
    return width, chain_labels, lam


def tabs_perim(tabs, r):
    loops, tree, bchains, suffix = tabs.data
    return tabs.perims[r]


def _sample_sizes_rows(s, tabs, row, rng):
    """Sizes from one explicit generic-table row."""
    internal, bchains = _structure(s)
    weight, h, hsplit, bsplit, lam = row
    width = {}
    chain_labels = {}
    for (e0, u, v), w in zip(internal, hsplit):
        width[e0] = width[e0 ^ 1] = w
        steps = sample_ternary_bridge(w, lam[v] - lam[u], rng)
        path = [lam[u]]
        for st in steps:
            path.append(path[-1] + int(st))
        chain_labels[e0] = path
    for chains, widths in zip(bchains, bsplit):
        for (e, u, v), le in zip(chains, widths):
            width[e] = width[e ^ 1] = le
            jumps = sample_floor_jumps(le, lam[v] - lam[u], rng)
            path = [lam[u]]
            for jp in jumps:
                path.append(path[-1] + int(jp))
            e0 = min(e, e ^ 1)
            chain_labels[e0] = path if e == e0 else path[::-1]
    return width, chain_labels, dict(lam)


def _finish_sample(s, n, P, width, chain_labels, rng):
    """Common tail of the exact samplers: big forest, trees, assembly."""
    exts = sorted(s.ext)
    floors_per = [width[min(e, e ^ 1)] for e in exts]
    F = sum(floors_per)
    path = sample_first_passage(F, 2 * n + P, rng)
    trees_all = _split_forest_path(path, F)
    forest = {}
    pos = 0
    for e, w in zip(exts, floors_per):
        trees = trees_all[pos : pos + w]
        pos += w
        e0 = min(e, e ^ 1)
        labs_path = chain_labels[e0] if e == e0 else chain_labels[e0][::-1]
        labs = [
            _random_tree_labels(t, labs_path[j], rng) for j, t in enumerate(trees)
        ]
        forest[e] = (trees, labs)
    full = {}
    for e0 in {min(x, x ^ 1) for x in s.ext | {y ^ 1 for y in s.ext}}:
        full[e0] = chain_labels[e0]
        full[e0 ^ 1] = chain_labels[e0][::-1]
    offset = int(rng.integers(2 * n + P))
    return _assemble_map(s, width, full, forest, offset)


_DP_CACHE = {}


def _dp_spec(n, g, l):
    key = (n, g, tuple(l))
    if key in _DP_CACHE:
        return _DP_CACHE[key]
    kinds = tuple("face" if x > 0 else "vertex" for x in l)
    reps = scheme_representatives(g, kinds)
    entries = []
    all_fast = all(_fast_eligible(s, l) is not None for s, _ in reps)
    for s, n_rooted in reps:
        tabs = _tables_fast(s, n, l)
        if tabs is None:
            if all_fast:
                raise AssertionError
            tabs = _tables_generic(s, n, l)
        tabs.perims = tuple(l)
        entries.append((s, n_rooted, tabs))
    if not all_fast:
        # mixed shifts: renormalize everything to shift 0 exactly
        for _, _, tabs in entries:
            if tabs.log3_shift:
                tabs.h_weights = [
                    (h, w * 3 ** tabs.log3_shift) for h, w in tabs.h_weights
                ]
                tabs.log3_shift = 0
    # per-rep total pair weights (shared shift cancels in the ratios)
    weights = [n_rooted * tabs.total() for _, n_rooted, tabs in entries]
    if sum(weights) == 0:
        raise ValueError("no labeled maps at this size")
    rooted_groups = []
    by_key = {}
    for s in enumerate_schemes(g, kinds):
        by_key.setdefault(unrooted_scheme_key(s), []).append(s)
    for s, n_rooted, tabs in entries:
        rooted_groups.append(by_key[unrooted_scheme_key(s)])
    spec = {"entries": entries, "weights": weights, "groups": rooted_groups}
    _DP_CACHE[key] = spec
    return spec


def _sample_dp(n, g, l, rng):
    spec = _dp_spec(n, g, l)
    i = _pick_weighted(rng, spec["weights"])
    s_rep, n_rooted, tabs = spec["entries"][i]
    group = spec["groups"][i]
    s = group[int(rng.integers(len(group)))]
    tabs_s = _tables_fast(s, n, l)
    if tabs_s is None:
        tabs_s = _tables_generic(s, n, l)
    tabs_s.perims = tuple(l)
    if not tabs_s.h_weights:
        raise ValueError("scheme carries no weight")
    if tabs_s.kind == "fast":
        hs = [h for h, _ in tabs_s.h_weights]
        h = hs[_pick_weighted(rng, [w for _, w in tabs_s.h_weights])]
        width, chain_labels, lam = _sample_sizes_fast(s, tabs_s, h, rng)
    else:
        rows = tabs_s.data
        j = _pick_weighted(rng, [row[0] for row in rows])
        width, chain_labels, lam = _sample_sizes_rows(s, tabs_s, rows[j], rng)
    return _finish_sample(s, n, sum(l), width, chain_labels, rng)


# --- MCMC over (scheme, sizes) ---------------------------------------------


def _log_tern(wd, tilt):
    if wd < 1 or abs(tilt) > wd:
        return -math.inf
    return log_ternary_prob(wd, tilt) + wd * LOG3


def _log_fjump(wd, tilt):
    if wd < 1 or tilt < -wd:
        return -math.inf
    return log_floor_jump_prob(wd, tilt) + (2 * wd + tilt) * LOG2


def _log_fp(depth, steps):
    if depth == 0 and steps == 0:
        return 0.0
    if depth <= 0 or steps < depth or (steps - depth) % 2:
        return -math.inf
    return log_first_passage_prob(depth, steps) + steps * LOG2


class _McmcProblem:
    def __init__(self, n, g, l):
        self.n = n
        self.l = tuple(l)
        kinds = tuple("face" if x > 0 else "vertex" for x in l)
        self.reps = scheme_representatives(g, kinds)
        self.structs = [_structure(s) for s, _ in self.reps]
        self.P = sum(l)
        self.mean_h = max(2.0, math.sqrt(max(n, 2)))
        self.lam_r = 1.0 - 1.0 / max(2.0, n ** 0.25)

    def logw(self, i, state):
        s, n_rooted = self.reps[i]
        internal, bchains = self.structs[i]
        hsum = sum(state["h"])
        if self.n - hsum < 0:
            return -math.inf
        lam = state["lam"]
        out = math.log(n_rooted) + (self.n - hsum) * LOG3
        out += _log_fp(2 * hsum + self.P, 2 * self.n + self.P)
        if out == -math.inf:
            return out
        for (e0, u, v), w in zip(internal, state["h"]):
            out += _log_tern(w, lam[v] - lam[u])
        for chains, widths in zip(bchains, state["lsplit"]):
            for (e, u, v), w in zip(chains, widths):
                out += _log_fjump(w, lam[v] - lam[u])
        return out

    def init_state(self, i):
        s, _ = self.reps[i]
        internal, bchains = self.structs[i]
        lsplit = []
        for r, chains in enumerate(bchains):
            b = len(chains)
            if b == 0:
                lsplit.append([])
                continue
            base = self.l[r] // b
            widths = [base] * b
            for j in range(self.l[r] - base * b):
                widths[j] += 1
            lsplit.append(widths)
        return {
            "h": [1] * len(internal),
            "lsplit": lsplit,
            "lam": [0] * s.map.n_vertices,
        }

    def prior_logpdf(self, i, state):
        s, _ = self.reps[i]
        internal, bchains = self.structs[i]
        q = 1.0 / self.mean_h
        out = 0.0
        for w in state["h"]:
            out += math.log(q) + (w - 1) * math.log1p(-q)
        r = self.lam_r
        v0 = s.map.vertex_of(s.root)
        for v, x in enumerate(state["lam"]):
            if v == v0:
                continue
            out += abs(x) * math.log(r) + math.log((1 - r) / (1 + r))
        for rr, chains in enumerate(bchains):
            b = len(chains)
            if b >= 2:
                out -= math.log(math.comb(self.l[rr] - 1, b - 1))
        return out

    def prior_draw(self, i, rng):
        s, _ = self.reps[i]
        internal, bchains = self.structs[i]
        q = 1.0 / self.mean_h
        h = [int(rng.geometric(q)) for _ in internal]
        r = self.lam_r
        v0 = s.map.vertex_of(s.root)
        lam = []
        for v in range(s.map.n_vertices):
            if v == v0:
                lam.append(0)
                continue
            mag = int(rng.geometric(1 - r)) - 1
            lam.append(mag if rng.integers(2) else -mag)
        lsplit = []
        for rr, chains in enumerate(bchains):
            b = len(chains)
            if b == 0:
                lsplit.append([])
            elif b == 1:
                lsplit.append([self.l[rr]])
            else:
                cuts = np.sort(
                    rng.choice(self.l[rr] - 1, size=b - 1, replace=False)
                )
                bounds = np.concatenate([[-1], cuts, [self.l[rr] - 1]])
                lsplit.append(list(np.diff(bounds).astype(int)))
        return {"h": h, "lsplit": lsplit, "lam": lam}


def _integrated_autocorr(x):
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 8:
        return 1.0
    x = x - x.mean()
    var = x.var()
    if var == 0:
        return 1.0
    tau = 1.0
    for t in range(1, n // 3):
        c = np.dot(x[:-t], x[t:]) / ((n - t) * var)
        if c <= 0:
            break
        tau += 2.0 * c
    return tau


def _sample_mcmc(n, g, l, rng, size=1, burn_in=10_000, thin=10, jump_every=5):
    prob = _McmcProblem(n, g, l)
    nrep = len(prob.reps)
    i = int(rng.integers(nrep))
    state = prob.init_state(i)
    cur = prob.logw(i, state)
    guard = 0
    while cur == -math.inf:
        i = int(rng.integers(nrep))
        state = prob.init_state(i)
        cur = prob.logw(i, state)
        guard += 1
        if guard > 10 * nrep:
            raise ValueError("no scheme admits these sizes")
    accepted = 0
    proposed = 0
    h_trace = []
    s_trace = []
    out = []
    step = 0
    target = burn_in + size * thin
    while len(out) < size:
        step += 1
        internal, bchains = prob.structs[i]
        if jump_every and step % jump_every == 0 and nrep > 1:
            j = int(rng.integers(nrep))
            cand = prob.prior_draw(j, rng)
            lw = prob.logw(j, cand)
            proposed += 1
            if lw > -math.inf:
                la = (
                    lw
                    + prob.prior_logpdf(i, state)
                    - cur
                    - prob.prior_logpdf(j, cand)
                )
                if la >= 0 or rng.random() < math.exp(la):
                    i, state, cur = j, cand, lw
                    accepted += 1
        else:
            cand = {
                "h": list(state["h"]),
                "lsplit": [list(w) for w in state["lsplit"]],
                "lam": list(state["lam"]),
            }
            kinds = []
            if cand["h"]:
                kinds.append("h")
            if any(len(w) >= 2 for w in cand["lsplit"]):
                kinds.append("b")
            if len(cand["lam"]) > 1:
                kinds.append("lam")
            kind = kinds[int(rng.integers(len(kinds)))]
            if kind == "h":
                e = int(rng.integers(len(cand["h"])))
                cand["h"][e] += 1 if rng.integers(2) else -1
            elif kind == "b":
                holes = [r for r, w in enumerate(cand["lsplit"]) if len(w) >= 2]
                r = holes[int(rng.integers(len(holes)))]
                b = len(cand["lsplit"][r])
                a_, b_ = rng.integers(b), rng.integers(b)
                cand["lsplit"][r][int(a_)] += 1
                cand["lsplit"][r][int(b_)] -= 1
            else:
                v = int(rng.integers(len(cand["lam"])))
                cand["lam"][v] += 1 if rng.integers(2) else -1
            lw = prob.logw(i, cand)
            proposed += 1
            if lw > -math.inf and (
                lw - cur >= 0 or rng.random() < math.exp(lw - cur)
            ):
                state, cur = cand, lw
                accepted += 1
        if step > burn_in and (step - burn_in) % thin == 0:
            h_trace.append(sum(state["h"]))
            s_trace.append(i)
            out.append((i, {
                "h": list(state["h"]),
                "lsplit": [list(w) for w in state["lsplit"]],
                "lam": list(state["lam"]),
            }))
    info = {
        "iact_h": _integrated_autocorr(h_trace),
        "iact_scheme": _integrated_autocorr(s_trace),
        "acceptance": accepted / max(proposed, 1),
        "burn_in": burn_in,
        "thin": thin,
    }
    return out, info, prob


def _mcmc_state_to_map(prob, i, state, rng, g, kinds):
    s, _ = prob.reps[i]
    internal, bchains = prob.structs[i]
    lam = state["lam"]
    width = {}
    chain_labels = {}
    for (e0, u, v), w in zip(internal, state["h"]):
        width[e0] = width[e0 ^ 1] = w
        steps = sample_ternary_bridge(w, lam[v] - lam[u], rng)
        path = [lam[u]]
        for st in steps:
            path.append(path[-1] + int(st))
        chain_labels[e0] = path
    for chains, widths in zip(bchains, state["lsplit"]):
        for (e, u, v), w in zip(chains, widths):
            width[e] = width[e ^ 1] = w
            jumps = sample_floor_jumps(w, lam[v] - lam[u], rng)
            path = [lam[u]]
            for jp in jumps:
                path.append(path[-1] + int(jp))
            e0 = min(e, e ^ 1)
            chain_labels[e0] = path if e == e0 else path[::-1]
    return _finish_sample(s, prob.n, prob.P, width, chain_labels, rng)


def sample_labeled_map(
    n,
    g,
    l=(),
    backend="dp",
    rng=None,
    *,
    size=None,
    cap=200_000,
    burn_in=10_000,
    thin=10,
):
    """Uniform labeled map with holes.

    Backends: "enumeration" builds the full list (tiny sizes only), "dp"
    samples exactly from the per-scheme weight tables, "mcmc" runs a
    reversible-jump chain over (scheme, sizes) and is approximate; the
    returned maps then carry an `mcmc_info` attribute with the integrated
    autocorrelation of the chain.  With size=k a list of k maps is
    returned (the MCMC backend then shares one chain).
    """
    rng = _rng_of(rng)
    l = tuple(int(x) for x in l)
    k = len(l)
    many = size is not None
    count = size if many else 1

    if (g, k) == (0, 0):
        outs = [_sample_sphere(n, rng) for _ in range(count)]
        return outs if many else outs[0]
    if (g, k) == (0, 1):
        base = sample_labeled_map(
            n, 0, (l[0], 0), backend, rng, size=count, cap=cap,
            burn_in=burn_in, thin=thin,
        )
        outs = []
        for lm in base:
            m = CombinatorialMap(
                lm.map.sigma, root=lm.map.root, holes=lm.map.holes[:-1]
            )
            out = LabeledMap(m, lm.labels, lm.face)
            if hasattr(lm, "mcmc_info"):
                out.mcmc_info = lm.mcmc_info
            outs.append(out)
        return outs if many else outs[0]

    if backend == "enumeration":
        total = scheme_weighted_count(n, g, l).total
        if total == 0:
            raise ValueError("no labeled maps at this size")
        if total > cap:
            raise BackendCapacityError(
                f"{total} maps exceed the enumeration cap {cap}", suggested="dp"
            )
        maps = enumerate_labeled_maps(n, g, l)
        assert len(maps) == total
        outs = [maps[int(rng.integers(len(maps)))] for _ in range(count)]
        return outs if many else outs[0]
    if backend == "dp":
        outs = [_sample_dp(n, g, l, rng) for _ in range(count)]
        return outs if many else outs[0]
    if backend == "mcmc":
        kinds = tuple("face" if x > 0 else "vertex" for x in l)
        states, info, prob = _sample_mcmc(
            n, g, l, rng, size=count, burn_in=burn_in, thin=thin
        )
        outs = []
        for i, st in states:
            lm = _mcmc_state_to_map(prob, i, st, rng, g, kinds)
            lm.mcmc_info = info
            outs.append(lm)
        return outs if many else outs[0]
    raise ValueError(f"unknown backend {backend!r}")
