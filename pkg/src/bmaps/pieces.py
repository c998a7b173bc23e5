"""Composite slices and quadrilaterals: forest encodings, exact counting,
brute-force enumeration, exact uniform sampling, contour/label processes,
and construction of the marked measured pieces via the interval arc
construction.

Plane trees are nested tuples of children, () being a single vertex.  A
well-labeled forest is l trees rooted on a floor path r^0..r^l with a total
tree edges; floor label steps are >= -1 and tree edge label steps are in
{-1,0,1}.  A double forest carries h upper and h lower trees on a shared
floor of h edges whose label steps are in {-1,0,1} as well.

The sphere-map layout is fixed once and for all: at a floor vertex the
rotation is (left floor edge, upper tree children, right floor edge, lower
tree children), at a tree vertex (parent edge, children in order).  The
contour started at the first floor vertex's right edge then visits the
upper side first, which makes the construction intervals contiguous.
"""

import itertools
from fractions import Fraction

import numpy as np

from .cvs import interval_cvs
from .maps import CombinatorialMap, LabeledMap
from .walks import (
    first_passage_count,
    floor_jump_count,
    sample_first_passage,
    sample_floor_jumps,
    sample_ternary_bridge,
    ternary_count,
    walk_dist,
)


# ---------------------------------------------------------------------------
# plane trees


def tree_edge_count(t):
    return sum(1 + tree_edge_count(c) for c in t)


def _plane_trees_memo(n, memo={0: [()]}):
    if n in memo:
        return memo[n]
    out = []
    # first subtree takes k edges below the root edge, rest is a forest
    for k in range(n):
        for first in _plane_trees_memo(k):
            for rest in _plane_trees_memo(n - 1 - k):
                out.append((first,) + rest)
    memo[n] = out
    return out


def all_plane_trees(n):
    """All plane trees with n edges, Catalan(n) of them."""
    return list(_plane_trees_memo(n))


def tree_to_parens(t):
    return "(" + "".join(tree_to_parens(c) for c in t) + ")"


def tree_from_parens(s):
    pos = 0

    def rec():
        nonlocal pos
        assert s[pos] == "("
        pos += 1
        children = []
        while s[pos] == "(":
            children.append(rec())
        assert s[pos] == ")"
        pos += 1
        return tuple(children)

    t = rec()
    if pos != len(s):
        raise ValueError("trailing characters in tree string")
    return t


def tree_from_dyck(steps):
    root = []
    stack = [root]
    for st in steps:
        if st == 1:
            node = []
            stack[-1].append(node)
            stack.append(node)
        else:
            stack.pop()
    if len(stack) != 1:
        raise ValueError("steps are not a Dyck path")

    def freeze(node):
        return tuple(freeze(c) for c in node)

    return freeze(root)


def _preorder_parents(t):
    """Parent preorder index per preorder vertex; root gets -1."""
    par = [-1]

    def rec(node, idx):
        for child in node:
            j = len(par)
            par.append(idx)
            rec(child, j)

    rec(t, 0)
    return par


# ---------------------------------------------------------------------------
# encodings


class WellLabeledForest:
    """trees: l plane trees whose roots are the floor vertices r^0..r^{l-1};
    tree_labels: per tree, preorder label tuple (first entry = floor label);
    terminal: label of the terminal floor vertex r^l."""

    def __init__(self, trees, tree_labels, terminal):
        self.trees = tuple(tuple(t) if not isinstance(t, tuple) else t for t in trees)
        self.tree_labels = tuple(tuple(lab) for lab in tree_labels)
        self.terminal = int(terminal)
        if len(self.trees) < 1:
            raise ValueError("a forest needs at least one tree (width l >= 1)")
        if len(self.tree_labels) != len(self.trees):
            raise ValueError("one label tuple per tree required")
        for t, lab in zip(self.trees, self.tree_labels):
            par = _preorder_parents(t)
            if len(lab) != len(par):
                raise ValueError("label tuple length does not match tree size")
            for i in range(1, len(par)):
                if abs(lab[i] - lab[par[i]]) > 1:
                    raise ValueError("tree edge label step exceeds 1")
        fl = self.floor_labels
        if fl[0] != 0:
            raise ValueError("canonical forests have label 0 at r^0")
        for i in range(len(fl) - 1):
            if fl[i + 1] < fl[i] - 1:
                raise ValueError("floor label step below -1")

    @property
    def l(self):
        return len(self.trees)

    @property
    def a(self):
        return sum(tree_edge_count(t) for t in self.trees)

    @property
    def delta(self):
        return self.terminal - self.tree_labels[0][0]

    @property
    def floor_labels(self):
        return tuple(lab[0] for lab in self.tree_labels) + (self.terminal,)

    def to_text(self):
        parens = " ".join(tree_to_parens(t) for t in self.trees)
        labels = " ".join(str(x) for lab in self.tree_labels for x in lab)
        return f"{parens} | {labels} {self.terminal}"

    def __eq__(self, other):
        return (
            isinstance(other, WellLabeledForest)
            and self.trees == other.trees
            and self.tree_labels == other.tree_labels
            and self.terminal == other.terminal
        )

    def __hash__(self):
        return hash((self.trees, self.tree_labels, self.terminal))


def forest_from_text(s):
    parens, _, labels = s.partition("|")
    trees = [tree_from_parens(tok) for tok in parens.split()]
    flat = [int(x) for x in labels.split()]
    tree_labels = []
    pos = 0
    for t in trees:
        k = tree_edge_count(t) + 1
        tree_labels.append(tuple(flat[pos : pos + k]))
        pos += k
    if pos + 1 != len(flat):
        raise ValueError("label count does not match forest size")
    return WellLabeledForest(trees, tree_labels, flat[pos])


class DoubleForest:
    """upper[i] roots at floor position i (0..h-1); lower[j] roots at floor
    position h-j (h..1); floor_labels has h+1 entries with steps in
    {-1,0,1}; tree label tuples are preorder with the floor label first."""

    def __init__(self, upper, lower, upper_labels, lower_labels, floor_labels):
        self.upper = tuple(upper)
        self.lower = tuple(lower)
        self.upper_labels = tuple(tuple(x) for x in upper_labels)
        self.lower_labels = tuple(tuple(x) for x in lower_labels)
        self.floor_labels = tuple(int(x) for x in floor_labels)
        h = len(self.upper)
        if h < 1 or len(self.lower) != h or len(self.floor_labels) != h + 1:
            raise ValueError("inconsistent double forest widths")
        if self.floor_labels[0] != 0:
            raise ValueError("canonical double forests have label 0 at the first floor vertex")
        for i in range(h):
            if abs(self.floor_labels[i + 1] - self.floor_labels[i]) > 1:
                raise ValueError("floor label step exceeds 1")
        for fam, labs, pos_of in (
            (self.upper, self.upper_labels, lambda i: i),
            (self.lower, self.lower_labels, lambda j: h - j),
        ):
            if len(labs) != h:
                raise ValueError("one label tuple per tree required")
            for i, (t, lab) in enumerate(zip(fam, labs)):
                par = _preorder_parents(t)
                if len(lab) != len(par):
                    raise ValueError("label tuple length does not match tree size")
                if lab[0] != self.floor_labels[pos_of(i)]:
                    raise ValueError("tree root label does not match its floor vertex")
                for k in range(1, len(par)):
                    if abs(lab[k] - lab[par[k]]) > 1:
                        raise ValueError("tree edge label step exceeds 1")

    @property
    def h(self):
        return len(self.upper)

    @property
    def a(self):
        return sum(tree_edge_count(t) for t in self.upper)

    @property
    def abar(self):
        return sum(tree_edge_count(t) for t in self.lower)

    @property
    def delta(self):
        return self.floor_labels[-1] - self.floor_labels[0]

    def swapped(self):
        """Exchange the roles of the two forests; the floor reverses and all
        labels shift so the new first floor vertex reads 0."""
        d = self.delta
        h = self.h
        return DoubleForest(
            upper=self.lower,
            lower=self.upper,
            upper_labels=tuple(tuple(x - d for x in lab) for lab in self.lower_labels),
            lower_labels=tuple(tuple(x - d for x in lab) for lab in self.upper_labels),
            floor_labels=tuple(self.floor_labels[h - j] - d for j in range(h + 1)),
        )

    def to_text(self):
        up = " ".join(tree_to_parens(t) for t in self.upper)
        low = " ".join(tree_to_parens(t) for t in self.lower)
        ulab = " ".join(str(x) for lab in self.upper_labels for x in lab)
        llab = " ".join(str(x) for lab in self.lower_labels for x in lab)
        flab = " ".join(str(x) for x in self.floor_labels)
        return f"{up} | {low} | {ulab} | {llab} | {flab}"

    def __eq__(self, other):
        return isinstance(other, DoubleForest) and self.to_text() == other.to_text()

    def __hash__(self):
        return hash(self.to_text())


# ---------------------------------------------------------------------------
# counting


def count_slices(a, l, delta):
    """Number of well-labeled forests with a tree edges, width l, tilt delta.
    Computed combinatorially and cross-checked against the walk form
    12^a 8^l 2^delta Q_l(2a+l) P_l(delta)."""
    if a < 0 or l < 1:
        raise ValueError("need a >= 0 and l >= 1")
    total = 3**a * first_passage_count(l, 2 * a + l) * floor_jump_count(l, delta)
    prob = (
        Fraction(12) ** a
        * Fraction(8) ** l
        * Fraction(2) ** delta
        * walk_dist("Q", l, 2 * a + l)
        * walk_dist("P", l, delta)
    )
    assert prob == total, (a, l, delta)
    return total


def count_quads(a, abar, h, delta):
    """Number of labeled double forests with half-areas a, abar, width h and
    tilt delta; equals 12^{a+abar+h} Q_h(2a+h) Q_h(2abar+h) M_h(delta)."""
    if a < 0 or abar < 0 or h < 1:
        raise ValueError("need a, abar >= 0 and h >= 1")
    total = (
        3 ** (a + abar)
        * first_passage_count(h, 2 * a + h)
        * first_passage_count(h, 2 * abar + h)
        * ternary_count(h, delta)
    )
    prob = (
        Fraction(12) ** (a + abar + h)
        * walk_dist("Q", h, 2 * a + h)
        * walk_dist("Q", h, 2 * abar + h)
        * walk_dist("M", h, delta)
    )
    assert prob == total, (a, abar, h, delta)
    return total


# ---------------------------------------------------------------------------
# brute-force enumeration


def _tree_labelings(t, root_label):
    if not t:
        yield (root_label,)
        return
    child_opts = []
    for child in t:
        opts = []
        for inc in (-1, 0, 1):
            opts.extend(list(_tree_labelings(child, root_label + inc)))
        child_opts.append(opts)
    for combo in itertools.product(*child_opts):
        out = (root_label,)
        for part in combo:
            out = out + part
        yield out


def _forest_shapes(a, l):
    """All tuples of l plane trees with a edges in total."""
    if l == 0:
        if a == 0:
            yield ()
        return
    for k in range(a + 1):
        for t in _plane_trees_memo(k):
            for rest in _forest_shapes(a - k, l - 1):
                yield (t,) + rest


def _floor_steps(l, delta, step_min, step_max=None):
    if l == 0:
        if delta == 0:
            yield ()
        return
    hi = delta + (l - 1) if step_max is None else min(step_max, delta - step_min * (l - 1))
    for g in range(step_min, hi + 1):
        for rest in _floor_steps(l - 1, delta - g, step_min, step_max):
            yield (g,) + rest


def enumerate_pieces(kind, params, cap=8):
    """Exhaustive duplicate-free enumeration; kind is 'slice' (a, l, delta)
    or 'quad' (a, abar, h, delta).  Sizes above the cap are refused."""
    kind = kind.lower()
    if kind.startswith("slice"):
        a, l, delta = params
        if a + l > cap:
            raise ValueError(f"enumeration needs cap >= {a + l}, configured {cap}")
        out = []
        for steps in _floor_steps(l, delta, -1):
            floor = [0]
            for g in steps:
                floor.append(floor[-1] + g)
            for shape in _forest_shapes(a, l):
                for labs in itertools.product(
                    *[list(_tree_labelings(t, floor[i])) for i, t in enumerate(shape)]
                ):
                    out.append(WellLabeledForest(shape, labs, floor[-1]))
        return out
    if kind.startswith("quad"):
        a, abar, h, delta = params
        if a + abar + h > cap:
            raise ValueError(f"enumeration needs cap >= {a + abar + h}, configured {cap}")
        out = []
        for steps in _floor_steps(h, delta, -1, 1):
            floor = [0]
            for g in steps:
                floor.append(floor[-1] + g)
            for up_shape in _forest_shapes(a, h):
                for low_shape in _forest_shapes(abar, h):
                    up_opts = [list(_tree_labelings(t, floor[i])) for i, t in enumerate(up_shape)]
                    low_opts = [
                        list(_tree_labelings(t, floor[h - j])) for j, t in enumerate(low_shape)
                    ]
                    for ulabs in itertools.product(*up_opts):
                        for llabs in itertools.product(*low_opts):
                            out.append(DoubleForest(up_shape, low_shape, ulabs, llabs, floor))
        return out
    raise ValueError(f"unknown piece kind {kind!r}")


# ---------------------------------------------------------------------------
# exact uniform sampling


def _split_forest_path(s, l):
    """Split a first-passage path S_0..S_m (to -l) into l plane trees, one
    per excursion above each new minimum level."""
    x = np.diff(s)
    trees = []
    prev = 0
    for depth in range(1, l + 1):
        tau = prev + int(np.flatnonzero(s[prev:] == -depth)[0])
        trees.append(tree_from_dyck(x[prev : tau - 1]))
        prev = tau
    return trees


def _random_tree_labels(t, root_label, rng):
    out = [root_label]

    def rec(node, lab):
        for child in node:
            cl = lab + int(rng.integers(-1, 2))
            out.append(cl)
            rec(child, cl)

    rec(t, root_label)
    return tuple(out)


def sample_forest(a, l, delta, rng):
    """Exactly uniform well-labeled forest with the given parameters."""
    if count_slices(a, l, delta) == 0:
        raise ValueError(f"no forests with (a, l, delta) = {(a, l, delta)}")
    s = sample_first_passage(l, 2 * a + l, rng)
    trees = _split_forest_path(s, l)
    steps = sample_floor_jumps(l, delta, rng)
    floor = [0]
    for g in steps:
        floor.append(floor[-1] + int(g))
    labs = [_random_tree_labels(t, floor[i], rng) for i, t in enumerate(trees)]
    return WellLabeledForest(trees, labs, floor[-1])


def sample_double_forest(a, abar, h, delta, rng):
    """Exactly uniform labeled double forest with the given parameters."""
    if count_quads(a, abar, h, delta) == 0:
        raise ValueError(f"no double forests with {(a, abar, h, delta)}")
    upper = _split_forest_path(sample_first_passage(h, 2 * a + h, rng), h)
    lower = _split_forest_path(sample_first_passage(h, 2 * abar + h, rng), h)
    steps = sample_ternary_bridge(h, delta, rng)
    floor = [0]
    for g in steps:
        floor.append(floor[-1] + int(g))
    ulabs = [_random_tree_labels(t, floor[i], rng) for i, t in enumerate(upper)]
    llabs = [_random_tree_labels(t, floor[h - j], rng) for j, t in enumerate(lower)]
    return DoubleForest(upper, lower, ulabs, llabs, floor)


# ---------------------------------------------------------------------------
# contour and label processes


def _tree_contour(t, labels):
    """(step, label) pairs along the tree contour, preorder labels given."""
    pairs = []
    idx = [0]

    def rec(node, lab):
        for child in node:
            idx[0] += 1
            clab = labels[idx[0]]
            pairs.append((1, clab))
            rec(child, clab)
            pairs.append((-1, lab))

    rec(t, labels[0])
    return pairs


def contour_label(f):
    """Contour process C (steps +-1, first hits -i at tau_i) and label
    process Lambda along the forest, both of length 2a + l + 1."""
    C = [0]
    L = [f.tree_labels[0][0]]
    for i, t in enumerate(f.trees):
        for st, lab in _tree_contour(t, f.tree_labels[i]):
            C.append(C[-1] + st)
            L.append(lab)
        C.append(C[-1] - 1)
        L.append(f.floor_labels[i + 1])
    return np.array(C, dtype=np.int64), np.array(L, dtype=np.int64)


def forest_from_contour(C, L):
    """Inverse of contour_label."""
    C = np.asarray(C)
    L = np.asarray(L)
    l = -int(C[-1])
    x = np.diff(C)
    trees = []
    tree_labels = []
    prev = 0
    for depth in range(1, l + 1):
        tau = prev + int(np.flatnonzero(C[prev:] == -depth)[0])
        steps = x[prev : tau - 1]
        trees.append(tree_from_dyck(steps))
        labs = [int(L[prev])]
        for j, st in enumerate(steps):
            if st == 1:
                labs.append(int(L[prev + j + 1]))
        tree_labels.append(tuple(labs))
        prev = tau
    return WellLabeledForest(trees, tree_labels, int(L[-1]))


# ---------------------------------------------------------------------------
# sphere maps and piece construction


class ElementaryPiece:
    """kind: 'slice' or 'quad'; map: arc map with the external face as a
    hole; labels: per map vertex; marks: named vertices and vertex paths;
    area: counting measure on vertices excluding the shuttle(s); base:
    multiplicity measure on the base path without its endpoint (slices)."""

    def __init__(self, kind, map, labels, marks, area, base=None, source=None, cvs=None):
        self.kind = kind
        self.map = map
        self.labels = labels
        self.marks = marks
        self.area = area
        self.base = base
        self.source = source
        self.cvs = cvs

    @property
    def internal_faces(self):
        return self.map.n_faces - 1


def _forest_sphere_map(f):
    """Plane map of the forest: floor path plus trees, rotations as fixed in
    the module docstring.  Returns (LabeledMap, interval corners, taus,
    floor vertex images)."""
    l = f.l
    rot = {i: [] for i in range(l + 1)}
    for i in range(1, l + 1):
        rot[i].append(2 * i - 1)  # left floor half-edge
    next_v = l + 1
    next_e = l
    rep = {i: None for i in range(l + 1)}
    labels_mine = {}
    for i in range(l + 1):
        labels_mine[i] = f.floor_labels[i]

    def build_tree(node, vid, labs, idx):
        nonlocal next_v, next_e
        for child in node:
            cvid = next_v
            next_v += 1
            idx[0] += 1
            labels_mine[cvid] = labs[idx[0]]
            e = next_e
            next_e += 1
            d, u = 2 * e, 2 * e + 1
            rot[vid].append(d)
            rot[cvid] = [u]
            build_tree(child, cvid, labs, idx)

    for i, t in enumerate(f.trees):
        build_tree(t, i, f.tree_labels[i], [0])
    for i in range(l):
        rot[i].append(2 * i)  # right floor half-edge

    sigma = np.empty(2 * (l + f.a), dtype=np.int64)
    for v, cyc in rot.items():
        for j, h in enumerate(cyc):
            sigma[h] = cyc[(j + 1) % len(cyc)]
        rep[v] = cyc[0]
    m = CombinatorialMap(sigma)
    assert m.n_faces == 1
    labels = [0] * m.n_vertices
    vmap = {}
    for v, h in rep.items():
        vmap[v] = m.vertex_of(h)
        labels[vmap[v]] = labels_mine[v]

    contour = m.face_corners(0, start_corner=0)
    interval = contour[: 2 * f.a + l + 1]
    sizes = [tree_edge_count(t) for t in f.trees]
    taus = [i + 2 * sum(sizes[:i]) for i in range(l + 1)]
    for i in range(l + 1):
        assert m.vertex_of(interval[taus[i]]) == vmap[i]
    return LabeledMap(m, labels, 0), interval, taus, vmap


def _external_face(out):
    """External face of a piece: the face in the wedge at interval 0's apex
    between its farthest-reaching incoming arc and its closest one."""
    cs, ce = out.slots.chains[0]
    apex = int(out.slot_vertex_out[ce - 1])
    e_close = int(out.out_end[ce - 2]) + 1
    cyc = out.map.vertices[apex]
    e_far = cyc[(cyc.index(e_close) - 1) % len(cyc)]
    return out.map.face_of_corner(int(e_far))


def build_slice(f):
    """Marked measured slice of a well-labeled forest."""
    lm, interval, taus, vmap = _forest_sphere_map(f)
    out = interval_cvs(lm, [interval])
    succ = out.slots.successor
    sv = out.slot_vertex_out
    l = f.l
    b = f.floor_labels

    beta = [int(sv[0])]
    for i in range(l):
        g = b[i + 1] - b[i]
        cp = taus[i + 1] - 1
        arr = taus[i + 1]
        if g < 0:
            assert int(succ[cp]) == arr
            beta.append(int(sv[arr]))
            continue
        chain = [arr]
        p = arr
        for _ in range(g + 1):
            p = int(succ[p])
            chain.append(p)
        assert int(succ[cp]) == chain[g + 1]
        for q in chain[::-1]:
            beta.append(int(sv[q]))
    assert len(beta) - 1 == 2 * l + f.delta

    mk = out.marks[0]
    rho = int(sv[0])
    rhobar = int(sv[taus[l]])
    gamma, xi, apex = mk["geodesic"], mk["shuttle"], mk["apex"]
    assert beta[0] == rho and beta[-1] == rhobar
    assert gamma[0] == rho and xi[0] == rhobar and gamma[-1] == xi[-1] == apex

    ext = _external_face(out)
    lam_star = int(out.labels[apex])
    assert out.map.face_degree(ext) == 2 * (f.delta - lam_star + l)
    degs = [out.map.face_degree(fi) for fi in range(out.map.n_faces) if fi != ext]
    assert len(degs) == f.a and all(d == 4 for d in degs)

    piece_map = CombinatorialMap(out.map.sigma, holes=[("face", ext)])
    nv = piece_map.n_vertices
    area = np.ones(nv, dtype=np.int64)
    area[sorted(set(xi))] = 0
    base = np.zeros(nv, dtype=np.int64)
    for v in beta[:-1]:
        base[v] += 1
    marks = {"beta": beta, "rho": rho, "gamma": gamma, "rhobar": rhobar, "xi": xi}
    return ElementaryPiece("slice", piece_map, out.labels, marks, area, base, source=f, cvs=out)


def _double_forest_sphere_map(df):
    h = df.h
    rot = {i: [] for i in range(h + 1)}
    labels_mine = {i: df.floor_labels[i] for i in range(h + 1)}
    next_v = h + 1
    next_e = h
    sigma_len = 2 * (h + df.a + df.abar)

    def build_tree(node, vid, labs, idx):
        nonlocal next_v, next_e
        for child in node:
            cvid = next_v
            next_v += 1
            idx[0] += 1
            labels_mine[cvid] = labs[idx[0]]
            e = next_e
            next_e += 1
            rot[vid].append(2 * e)
            rot[cvid] = [2 * e + 1]
            build_tree(child, cvid, labs, idx)

    for i in range(1, h + 1):
        rot[i].append(2 * i - 1)  # left
    for i in range(h):
        build_tree(df.upper[i], i, df.upper_labels[i], [0])  # upper children
    for i in range(h):
        rot[i].append(2 * i)  # right
    for j in range(h):
        build_tree(df.lower[j], h - j, df.lower_labels[j], [0])  # lower children

    sigma = np.empty(sigma_len, dtype=np.int64)
    rep = {}
    for v, cyc in rot.items():
        for j, hh in enumerate(cyc):
            sigma[hh] = cyc[(j + 1) % len(cyc)]
        rep[v] = cyc[0]
    m = CombinatorialMap(sigma)
    assert m.n_faces == 1
    labels = [0] * m.n_vertices
    vmap = {v: m.vertex_of(hh) for v, hh in rep.items()}
    for v in rep:
        labels[vmap[v]] = labels_mine[v]
    contour = m.face_corners(0, start_corner=0)
    cut = h + 2 * df.a
    assert m.vertex_of(contour[cut]) == vmap[h]
    upper_iv = contour[: cut + 1]
    lower_iv = contour[cut:] + [contour[0]]
    return LabeledMap(m, labels, 0), upper_iv, lower_iv, vmap


def build_quadrilateral(df):
    """Marked measured quadrilateral of a labeled double forest."""
    lm, upper_iv, lower_iv, vmap = _double_forest_sphere_map(df)
    out = interval_cvs(lm, [upper_iv, lower_iv])
    rho = out.vertex_map[vmap[0]]
    rhobar = out.vertex_map[vmap[df.h]]
    up, low = out.marks
    gamma, xi = up["geodesic"], up["shuttle"]
    gammabar, xibar = low["geodesic"], low["shuttle"]
    assert gamma[0] == rho and xibar[0] == rho
    assert xi[0] == rhobar and gammabar[0] == rhobar

    ext = _external_face(out)
    vstar, vbarstar = up["apex"], low["apex"]
    expected = 2 * (df.delta - int(out.labels[vstar]) - int(out.labels[vbarstar]))
    assert out.map.face_degree(ext) == expected
    degs = [out.map.face_degree(fi) for fi in range(out.map.n_faces) if fi != ext]
    assert len(degs) == df.a + df.abar + df.h and all(d == 4 for d in degs)

    piece_map = CombinatorialMap(out.map.sigma, holes=[("face", ext)])
    nv = piece_map.n_vertices
    area = np.ones(nv, dtype=np.int64)
    area[sorted(set(xi) | set(xibar))] = 0
    marks = {
        "rho": rho,
        "gamma": gamma,
        "xi": xi,
        "rhobar": rhobar,
        "gammabar": gammabar,
        "xibar": xibar,
    }
    return ElementaryPiece("quad", piece_map, out.labels, marks, area, source=df, cvs=out)
