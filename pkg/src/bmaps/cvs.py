"""Arc constructions driven by vertex labels: a corner-successor engine,
the full pointed construction on a designated face, and the per-interval
variant with appended apex chains.

A slot is one visit of the designated face's contour to a corner; a corner
shared by two intervals as their common extremity yields two slots.  Each
interval is extended by a chain of new corners descending from its last
corner's label down to one below the interval minimum; the full
construction instead uses a single new apex vertex.  Every slot except a
chain terminal sends an arc to its successor: the next slot, within the
same extended interval (cyclically for the full construction), whose label
is one less.  The output map consists of the arcs alone; all original
edges are dropped.

Arc ends are ordered around each vertex so that the arcs embed in the face
without crossings: within one corner's sector, the counterclockwise order
is incoming ends by increasing contour span, then the outgoing end;
sectors follow the vertex's original rotation; the apex of the full
construction takes its incoming ends by decreasing source slot.
"""

import numpy as np

from .maps import CombinatorialMap

APEX = -1  # successor sentinel for the full construction
NONE_ = -2


class WellLabelingError(ValueError):
    """Raised when consecutive corner labels drop by more than 1.  Carries
    the contour position of the offending corner."""

    def __init__(self, corner_index, msg):
        super().__init__(msg)
        self.corner_index = corner_index


class SlotSystem:
    """Successor table over the extended slot list.

    slot_vertex[p]   original vertex id, or -1 for a new chain/apex corner
    slot_label[p]    label of the slot
    slot_interval[p] interval id (0 for the full construction)
    slot_corner[p]   corner half-edge in the source map, or -1 for new slots
    successor[p]     slot id, or APEX (full construction), or NONE_ (chain end)
    chains[i]        slot id range (start, stop) of interval i's appended chain
    """

    def __init__(self, slot_vertex, slot_label, slot_interval, slot_corner, successor, chains, cyclic):
        self.slot_vertex = np.asarray(slot_vertex, dtype=np.int64)
        self.slot_label = np.asarray(slot_label, dtype=np.int64)
        self.slot_interval = np.asarray(slot_interval, dtype=np.int64)
        self.slot_corner = np.asarray(slot_corner, dtype=np.int64)
        self.successor = np.asarray(successor, dtype=np.int64)
        self.chains = chains
        self.cyclic = cyclic

    @property
    def n_slots(self):
        return len(self.slot_vertex)


def _forward_successors(labels, offset):
    """Successors within one linear slot run: s(p) = first later p' with
    label(p') = label(p) - 1.  Returns local successor ids shifted by offset;
    the final slot gets NONE_."""
    n = len(labels)
    succ = np.full(n, NONE_, dtype=np.int64)
    waiting = {}
    for p in range(n):
        lab = labels[p]
        for q in waiting.pop(lab, ()):
            succ[q] = p + offset
        if p < n - 1:
            waiting.setdefault(lab - 1, []).append(p)
    unresolved = [q for qs in waiting.values() for q in qs]
    if unresolved:
        raise AssertionError("interval chain failed to resolve every successor")
    return succ


def successor_assignment(lm, intervals=None):
    """Build the slot system for a labeled map.

    With intervals = None the whole contour of the designated face forms one
    cyclic run and minimum-label corners point to the apex sentinel.  With a
    list of corner-half-edge lists (each consecutive along the contour,
    adjacent lists may share an extremity corner), every interval is extended
    by its own descending chain of new corners.

    A label drop exceeding 1 along a run raises WellLabelingError with the
    contour position of the offending corner.
    """
    m = lm.map
    contour = m.face_corners(lm.face)
    n_contour = len(contour)
    pos = {h: i for i, h in enumerate(contour)}
    lab_of = lambda h: int(lm.labels[m.vertex_of(h)])

    if intervals is None:
        if m.root is not None and m.face_of_corner(m.root) == lm.face:
            contour = m.face_corners(lm.face, start_corner=m.root)
        labels = [lab_of(h) for h in contour]
        for i in range(n_contour):
            j = (i + 1) % n_contour
            if labels[j] < labels[i] - 1:
                raise WellLabelingError(j, f"label drops by more than 1 at contour position {j}")
        mn = min(labels)
        succ = np.full(n_contour, APEX, dtype=np.int64)
        waiting = {}
        for lap in range(2):
            for p in range(n_contour):
                lab = labels[p]
                for q in waiting.pop(lab, ()):
                    if succ[q] == APEX:
                        succ[q] = p
                if lap == 0 and lab > mn:
                    waiting.setdefault(lab - 1, []).append(p)
        vertices = [m.vertex_of(h) for h in contour]
        return SlotSystem(vertices, labels, [0] * n_contour, contour, succ, {}, cyclic=True)

    slot_vertex, slot_label, slot_interval, slot_corner = [], [], [], []
    successor = []
    chains = {}
    for iid, corners in enumerate(intervals):
        if len(corners) == 0:
            raise ValueError(f"interval {iid} is empty")
        for j, h in enumerate(corners):
            if h not in pos:
                raise ValueError(f"half-edge {h} is not a corner of the designated face")
            if j and pos[h] != (pos[corners[j - 1]] + 1) % n_contour:
                raise ValueError(f"interval {iid} corners are not consecutive on the contour")
        labels = [lab_of(h) for h in corners]
        for j in range(len(labels) - 1):
            if labels[j + 1] < labels[j] - 1:
                raise WellLabelingError(
                    pos[corners[j + 1]],
                    f"label drops by more than 1 at contour position {pos[corners[j + 1]]}",
                )
        lam_star = min(labels) - 1
        ell = labels[-1] - lam_star
        offset = len(slot_vertex)
        run_labels = labels + [labels[-1] - j for j in range(1, ell + 1)]
        succ = _forward_successors(run_labels, offset)
        chains[iid] = (offset + len(corners), offset + len(run_labels))
        slot_vertex.extend([m.vertex_of(h) for h in corners] + [-1] * ell)
        slot_label.extend(run_labels)
        slot_interval.extend([iid] * len(run_labels))
        slot_corner.extend(list(corners) + [-1] * ell)
        successor.extend(succ.tolist())
    return SlotSystem(slot_vertex, slot_label, slot_interval, slot_corner, successor, chains, cyclic=False)


class CvsOutput:
    """Result of an arc construction.

    map          the arc map (original edges dropped)
    labels       vertex labels of the arc map, by its own vertex ids
    orig_vertex  arc-map vertex id -> source-map vertex id, -1 for new corners
    vertex_map   source-map vertex id -> arc-map vertex id (used vertices only)
    apex         arc-map vertex id of the apex (full construction only)
    marks        per interval: {"apex": v, "geodesic": [v...], "shuttle": [v...]}
    slots        the SlotSystem used
    slot_vertex_out[p]    arc-map vertex id of slot p
    out_end[p]   half-edge id of slot p's outgoing arc end, -1 at chain tips
    """

    def __init__(self, map, labels, orig_vertex, vertex_map, apex, marks, slots, slot_vertex_out, out_end):
        self.map = map
        self.labels = labels
        self.orig_vertex = orig_vertex
        self.vertex_map = vertex_map
        self.apex = apex
        self.marks = marks
        self.slots = slots
        self.slot_vertex_out = slot_vertex_out
        self.out_end = out_end


def _assemble(lm, sys, orient=1):
    """Shared arc/rotation assembly for both constructions."""
    m = lm.map
    ns = sys.n_slots
    # arcs: one per slot with a successor (APEX counts as a successor)
    arc_of_slot = np.full(ns, -1, dtype=np.int64)
    n_arcs = 0
    for p in range(ns):
        if sys.successor[p] != NONE_:
            arc_of_slot[p] = n_arcs
            n_arcs += 1
    out_end = np.where(arc_of_slot >= 0, 2 * arc_of_slot, -1)

    # incoming ends per slot, already in increasing source order
    in_sources = [[] for _ in range(ns)]
    apex_sources = []
    for p in range(ns):
        t = sys.successor[p]
        if t == NONE_:
            continue
        if t == APEX:
            apex_sources.append(p)
        else:
            in_sources[t].append(p)

    def slot_end_list(p):
        srcs = sorted(in_sources[p], key=lambda q: (p - q) % ns)
        ends = [2 * arc_of_slot[q] + 1 for q in srcs]
        if out_end[p] >= 0:
            ends.append(int(out_end[p]))
        return ends

    # per-vertex rotations
    corner_slots = {}
    for p in range(ns):
        h = sys.slot_corner[p]
        if h >= 0:
            corner_slots.setdefault(int(h), []).append(p)
    if not sys.cyclic and sys.chains:
        # a corner shared by two intervals holds the end of one and the
        # start of the next; the arriving interval's arcs come first in
        # the rotation, ahead of the departing interval's
        starts = set()
        prev = 0
        for iid in range(len(sys.chains)):
            starts.add(prev)
            prev = sys.chains[iid][1]
        for ps in corner_slots.values():
            if len(ps) > 1:
                ps.sort(key=lambda p: ((p in starts), p))

    rotations = []  # list of (my_vertex_key, [end ids CCW])
    vertex_slots = {}  # my vertex key -> slots (for labels/marks bookkeeping)
    used_orig = []
    for v in range(m.n_vertices):
        ends = []
        slots_here = []
        for h in m.vertices[v]:
            for p in corner_slots.get(h, ()):
                ends.extend(slot_end_list(p))
                slots_here.append(p)
        if ends:
            rotations.append((("orig", v), ends))
            vertex_slots[("orig", v)] = slots_here
            used_orig.append(v)
    for p in range(ns):
        if sys.slot_vertex[p] == -1:
            rotations.append((("chain", p), slot_end_list(p)))
            vertex_slots[("chain", p)] = [p]
    if sys.cyclic:
        srcs = sorted(apex_sources, reverse=True)
        rotations.append((("apex", 0), [2 * arc_of_slot[q] + 1 for q in srcs]))
        vertex_slots[("apex", 0)] = []

    sigma = np.empty(2 * n_arcs, dtype=np.int64)
    for _, ends in rotations:
        k = len(ends)
        for i, e in enumerate(ends):
            sigma[e] = ends[(i + 1) % k]

    root = None
    if sys.cyclic and m.root is not None:
        # contour was started at the root corner, so slot 0 carries the root arc
        root = int(out_end[0]) if orient >= 0 else int(out_end[0]) ^ 1

    q = CombinatorialMap(sigma, root=root)

    # vertex id translation through one representative end per vertex
    key_to_qid = {}
    for key, ends in rotations:
        key_to_qid[key] = q.vertex_of(ends[0])
    labels_q = np.zeros(q.n_vertices, dtype=np.int64)
    orig_vertex = np.full(q.n_vertices, -1, dtype=np.int64)
    vertex_map = {}
    for v in used_orig:
        qid = key_to_qid[("orig", v)]
        labels_q[qid] = lm.labels[v]
        orig_vertex[qid] = v
        vertex_map[v] = qid
    for p in range(ns):
        if sys.slot_vertex[p] == -1:
            qid = key_to_qid[("chain", p)]
            labels_q[qid] = sys.slot_label[p]
    apex = None
    if sys.cyclic:
        apex = key_to_qid[("apex", 0)]
        labels_q[apex] = sys.slot_label.min() - 1

    slot_vertex_out = np.empty(ns, dtype=np.int64)
    for p in range(ns):
        v = sys.slot_vertex[p]
        slot_vertex_out[p] = key_to_qid[("orig", int(v))] if v >= 0 else key_to_qid[("chain", p)]

    # holes carried through the construction (full mode)
    holes_q = []
    if sys.cyclic and m.holes:
        ends_at = {}  # source-map corner half-edge -> its wedge end list
        for p in range(ns):
            h = sys.slot_corner[p]
            if h >= 0:
                ends_at.setdefault(int(h), []).extend(slot_end_list(p))
        has_slot = set(ends_at)
        for kind, i in m.holes:
            if kind == "vertex":
                holes_q.append(("vertex", int(vertex_map[i])))
                continue
            # walk backward in the rotation from a hole corner to the nearest
            # sector that received ends; the arc-map face after its last end
            # occupies the hole's angular position
            x = m.faces[i][0]
            h = x ^ 1  # a corner of the hole face
            v = m.vertex_of(h)
            cyc = m.vertices[v]
            j = cyc.index(h)
            for back in range(1, len(cyc) + 1):
                h2 = cyc[(j - back) % len(cyc)]
                if h2 in has_slot:
                    e_prev = ends_at[h2][-1]
                    holes_q.append(("face", q.face_of_corner(e_prev)))
                    break
            else:
                raise ValueError("hole face vertex is not incident to the designated face")
        # same sigma, so all derived ids are unchanged
        q = CombinatorialMap(sigma, root=root, holes=holes_q)

    marks = None
    if not sys.cyclic:
        marks = []
        for iid in range(len(sys.chains)):
            first = int(np.flatnonzero(sys.slot_interval == iid)[0])
            cs, ce = sys.chains[iid]
            geo = [int(slot_vertex_out[first])]
            p = first
            while sys.successor[p] != NONE_:
                p = int(sys.successor[p])
                geo.append(int(slot_vertex_out[p]))
            shuttle = [int(slot_vertex_out[cs - 1])] + [int(slot_vertex_out[p]) for p in range(cs, ce)]
            marks.append({"apex": int(slot_vertex_out[ce - 1]), "geodesic": geo, "shuttle": shuttle})

    return CvsOutput(q, labels_q, orig_vertex, vertex_map, apex, marks, sys, slot_vertex_out, out_end)


def cvs_construct(lm, face=None, orient=1):
    """Full pointed construction on the designated face.  The output is a
    quadrangulation-like arc map pointed at a new apex vertex whose label is
    one below the contour minimum; holes and the root are carried over.
    orient = +1 roots at the root corner's outgoing arc end, -1 at its
    reversal, covering both root transfers."""
    if face is not None and face != lm.face:
        from .maps import LabeledMap

        lm = LabeledMap(lm.map, lm.labels, face)
    m = lm.map
    if m.root is not None and m.face_of_corner(m.root) != lm.face:
        raise ValueError("root corner does not lie on the designated face")
    sys = successor_assignment(lm, None)
    return _assemble(lm, sys, orient)


def interval_cvs(lm, intervals):
    """Per-interval construction.  intervals is a list of corner half-edge
    lists, each consecutive along the designated face's contour; adjacent
    intervals may share an extremity corner, which is then duplicated.  Each
    interval receives its own apex chain, maximal geodesic (successor chain
    from its first corner) and shuttle (its last corner plus the chain)."""
    sys = successor_assignment(lm, intervals)
    return _assemble(lm, sys)


# ---------------------------------------------------------------------------
# verification


def _bfs_distances(m, source_vertex):
    adj = [[] for _ in range(m.n_vertices)]
    for a, b in m.edges_as_pairs():
        adj[a].append(b)
        adj[b].append(a)
    d = np.full(m.n_vertices, -1, dtype=np.int64)
    d[source_vertex] = 0
    frontier = [source_vertex]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if d[w] < 0:
                    d[w] = d[v] + 1
                    nxt.append(w)
        frontier = nxt
    return d


def verify_label_distance(out):
    """Largest deviation |d(v, apex) - (label(v) - apex label)|; the
    constructions promise 0.  Full outputs are checked at the global apex
    over every vertex, interval outputs side by side at their own apexes
    over their own slot vertices."""
    worst = 0
    if out.apex is not None:
        d = _bfs_distances(out.map, out.apex)
        lam = out.labels - out.labels[out.apex]
        worst = int(np.abs(d - lam).max())
        return worst
    for iid, rec in enumerate(out.marks):
        d = _bfs_distances(out.map, rec["apex"])
        lam_star = out.labels[rec["apex"]]
        for p in np.flatnonzero(out.slots.slot_interval == iid):
            v = int(out.slot_vertex_out[p])
            worst = max(worst, abs(int(d[v]) - (int(out.labels[v]) - int(lam_star))))
    return worst


def label_distance_bound_check(out, interval=0):
    """Check d(c_i, c_j) <= l(c_i) + l(c_j) - 2 min_{i<=r<=j} l(c_r) + 2 over
    the original corners of one interval (all contour corners for a full
    output).  Returns the largest slack d - bound, which must be <= 0."""
    if out.apex is not None:
        slots = list(range(out.slots.n_slots))
    else:
        slots = np.flatnonzero(out.slots.slot_interval == interval)
        cs, _ = out.slots.chains[interval]
        slots = [p for p in slots if p < cs]
    verts = [int(out.slot_vertex_out[p]) for p in slots]
    labs = [int(out.slots.slot_label[p]) for p in slots]
    dist_rows = {}
    for v in set(verts):
        dist_rows[v] = _bfs_distances(out.map, v)
    worst = -(10**9)
    n = len(slots)
    for i in range(n):
        run_min = labs[i]
        for j in range(i, n):
            run_min = min(run_min, labs[j])
            bound = labs[i] + labs[j] - 2 * run_min + 2
            d = int(dist_rows[verts[i]][verts[j]])
            worst = max(worst, d - bound)
    return worst
