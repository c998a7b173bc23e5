"""Arc construction tests.

The small count oracles are exhaustive: the label-driven construction sends
rooted labeled trees with n edges, together with an orientation sign, onto
rooted pointed quadrangulations with n faces, one-to-two and injectively.
With n = 1 there are 3 labeled trees and 6 rooted pointed quadrangulations;
with n = 2, 18 trees and 36 quadrangulations.
"""

import itertools

import numpy as np
import pytest

from bmaps.cvs import (
    APEX,
    WellLabelingError,
    cvs_construct,
    interval_cvs,
    label_distance_bound_check,
    successor_assignment,
    verify_label_distance,
)
from bmaps.maps import (
    CombinatorialMap,
    LabeledMap,
    canonical_rooted_form,
    is_bipartite,
    validate_map,
)


def one_edge_tree(x, root=0):
    m = CombinatorialMap([0, 1], root=root)
    labels = [0, x] if root == 0 else [x, 0]
    return LabeledMap(m, labels, 0)


def two_edge_trees():
    """All 18 rooted labeled trees with two edges: the path map rooted at a
    leaf corner or a center corner, independent increments on both edges."""
    out = []
    for root in (0, 1):
        for x, y in itertools.product((-1, 0, 1), repeat=2):
            m = CombinatorialMap([0, 2, 1, 3], root=root)
            labels = [0, x, x + y] if root == 0 else [x, 0, y]
            out.append(LabeledMap(m, labels, 0))
    return out


def canon(out):
    return canonical_rooted_form(out.map, labels=out.labels)


def test_equal_labels_send_both_corners_to_apex():
    sys = successor_assignment(one_edge_tree(0), None)
    assert list(sys.successor) == [APEX, APEX]


def test_one_edge_trees_give_all_six_rooted_pointed_quadrangulations():
    seen = set()
    for x in (-1, 0, 1):
        for orient in (1, -1):
            out = cvs_construct(one_edge_tree(x), orient=orient)
            q = out.map
            assert validate_map(q).ok
            assert is_bipartite(q)
            assert q.n_edges == 2 and q.n_vertices == 3
            assert q.n_faces == 1 and q.face_degree(0) == 4
            assert out.labels[out.apex] == min(0, x) - 1
            assert verify_label_distance(out) == 0
            seen.add(canon(out))
    assert len(seen) == 6


def test_two_edge_trees_give_all_36_rooted_pointed_quadrangulations():
    seen = set()
    for lm in two_edge_trees():
        for orient in (1, -1):
            out = cvs_construct(lm, orient=orient)
            q = out.map
            assert validate_map(q).ok
            assert is_bipartite(q)
            assert q.n_edges == 4 and q.n_vertices == 4 and q.n_faces == 2
            assert all(q.face_degree(f) == 4 for f in range(q.n_faces))
            assert verify_label_distance(out) == 0
            assert label_distance_bound_check(out) <= 0
            seen.add(canon(out))
    assert len(seen) == 36


def random_labeled_tree(rng, n_edges):
    """Random plane tree as a map: random parent structure with random
    rotations, uniform label increments, rooted at a random half-edge."""
    parent = [None] * (n_edges + 1)
    incident = [[] for _ in range(n_edges + 1)]
    for v in range(1, n_edges + 1):
        p = int(rng.integers(0, v))
        parent[v] = p
        e = v - 1  # edge ids follow child ids
        incident[p].append(2 * e)
        incident[v].append(2 * e + 1)
    sigma = np.empty(2 * n_edges, dtype=np.int64)
    for v in range(n_edges + 1):
        cyc = list(incident[v])
        rng.shuffle(cyc)
        for i, h in enumerate(cyc):
            sigma[h] = cyc[(i + 1) % len(cyc)]
    labels = [0] * (n_edges + 1)
    order = list(range(1, n_edges + 1))
    for v in order:
        labels[v] = labels[parent[v]] + int(rng.integers(-1, 2))
    m = CombinatorialMap(sigma, root=int(rng.integers(0, 2 * n_edges)))
    # vertex ids in the map are orbit ranks; translate
    lab = [0] * m.n_vertices
    for v in range(n_edges + 1):
        lab[m.vertex_of(incident[v][0])] = labels[v]
    shift = lab[m.vertex_of(m.root)]
    lab = [x - shift for x in lab]
    return LabeledMap(m, lab, 0)


def test_random_trees_map_to_quadrangulations():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(1, 9))
        lm = random_labeled_tree(rng, n)
        out = cvs_construct(lm)
        q = out.map
        rep = validate_map(q)
        assert rep.ok, rep.failures
        assert rep.genus == 0
        assert is_bipartite(q)
        assert q.n_edges == 2 * n and q.n_vertices == n + 2
        assert all(q.face_degree(f) == 4 for f in range(q.n_faces))
        assert verify_label_distance(out) == 0
        assert label_distance_bound_check(out) <= 0


def one_tree_forest():
    """Floor edge (r0, r1) plus one tree edge (r0, u), contour starting in
    the sector between them at r0.  Labels r0 = 0, u = -1, r1 = 0."""
    sigma = [2, 1, 0, 3]
    m = CombinatorialMap(sigma)
    return LabeledMap(m, [0, 0, -1], 0)  # vertex ids: {0,2}=r0, {1}=r1, {3}=u


def test_single_interval_slice_structure():
    lm = one_tree_forest()
    contour = lm.map.face_corners(0, start_corner=0)
    assert [lm.map.vertex_of(h) for h in contour] == [0, 2, 0, 1]
    sys = successor_assignment(lm, [contour])
    assert list(sys.successor) == [1, 5, 4, 4, 5, -2]
    out = interval_cvs(lm, [contour])
    q = out.map
    rep = validate_map(q)
    assert rep.ok and rep.genus == 0
    assert q.n_edges == 5 and q.n_vertices == 5 and q.n_faces == 2
    assert sorted(q.face_degree(f) for f in range(2)) == [4, 6]
    assert is_bipartite(q)
    mk = out.marks[0]
    r0, r1, u = out.vertex_map[0], out.vertex_map[1], out.vertex_map[2]
    assert mk["geodesic"] == [r0, u, mk["apex"]]
    assert mk["shuttle"][0] == r1 and mk["shuttle"][-1] == mk["apex"]
    assert len(mk["shuttle"]) == 3
    assert out.labels[mk["apex"]] == -2
    assert verify_label_distance(out) == 0
    assert label_distance_bound_check(out, 0) <= 0


def test_two_intervals_share_extremity():
    m = CombinatorialMap([0, 2, 1, 3], root=0)
    lm = LabeledMap(m, [0, -1, 0], 0)
    contour = m.face_corners(0, start_corner=0)
    out = interval_cvs(lm, [contour[:2], contour[1:]])
    rep = validate_map(out.map)
    assert rep.ok and rep.genus == 0
    assert len(out.marks) == 2
    assert verify_label_distance(out) == 0
    # the shared corner contributes one slot to each side
    assert out.slots.n_slots >= len(contour) + 1 + 2


def test_well_labeling_violation_reports_corner():
    m = CombinatorialMap([0, 2, 1, 3], root=0)
    lm = LabeledMap(m, [0, -2, 0], 0)  # drop of 2 along the first edge
    with pytest.raises(WellLabelingError) as ei:
        cvs_construct(lm)
    assert isinstance(ei.value.corner_index, int)
    contour = m.face_corners(0, start_corner=0)
    with pytest.raises(WellLabelingError):
        interval_cvs(lm, [contour])


TRIANGLE_SIGMA = [5, 2, 1, 4, 3, 0]  # a: (0,5), b: (1,2), c: (3,4); two faces


def test_holes_carried_through_full_construction():
    m0 = CombinatorialMap(TRIANGLE_SIGMA)
    assert m0.n_faces == 2
    root = m0.faces[0][0] ^ 1
    contour = m0.face_corners(0)
    vs = [m0.vertex_of(h) for h in contour]
    labels = [0, 0, 0]
    labels[vs[1]] = -1  # strict contour minimum away from the root vertex
    assert labels[m0.vertex_of(root)] == 0

    m = CombinatorialMap(TRIANGLE_SIGMA, root=root, holes=[("face", 1)])
    out = cvs_construct(LabeledMap(m, labels, 0))
    assert len(out.map.holes) == 1
    kind, fid = out.map.holes[0]
    assert kind == "face" and 0 <= fid < out.map.n_faces
    assert validate_map(out.map).ok

    m2 = CombinatorialMap(TRIANGLE_SIGMA, root=root, holes=[("vertex", vs[2])])
    out2 = cvs_construct(LabeledMap(m2, labels, 0))
    kind2, vid2 = out2.map.holes[0]
    assert kind2 == "vertex" and vid2 == out2.vertex_map[vs[2]]


def test_root_corner_must_lie_on_designated_face():
    m0 = CombinatorialMap(TRIANGLE_SIGMA)
    h_other = m0.faces[1][0] ^ 1
    m = CombinatorialMap(TRIANGLE_SIGMA, root=h_other)
    lm = LabeledMap(m, [0, 0, 0], 0)
    with pytest.raises(ValueError):
        cvs_construct(lm)
