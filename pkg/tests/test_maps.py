"""Map-core checks: hand-built genus examples, validation failure modes,
serialization round trips, and the internal vertex count identity."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmaps import maps


def two_loops_one_vertex():
    # one vertex, two loops interleaved so the map has a single face
    return maps.CombinatorialMap([2, 3, 1, 0])


def two_edge_path():
    # A - B - C; half-edges 0:A>B 1:B>A 2:B>C 3:C>B
    return maps.CombinatorialMap([0, 2, 1, 3])


def test_two_loops_is_torus():
    m = two_loops_one_vertex()
    rep = maps.validate_map(m)
    assert rep.ok, rep.failures
    assert m.n_vertices == 1 and m.n_edges == 2 and m.n_faces == 1
    assert rep.genus == 1


def test_two_edge_path_is_planar():
    m = two_edge_path()
    rep = maps.validate_map(m)
    assert rep.ok
    assert rep.genus == 0
    assert m.n_vertices == 3 and m.n_faces == 1
    assert m.face_degree(0) == 4


def test_validate_reports_instead_of_throwing():
    rep = maps.validate_map(maps.CombinatorialMap([0, 1, 2]))  # odd count
    assert not rep.ok and "fixed point" in rep.failures[0]
    rep = maps.validate_map(maps.CombinatorialMap([0, 0, 2, 2]))  # not a permutation
    assert not rep.ok
    rep = maps.validate_map(maps.CombinatorialMap([1, 0, 3, 2]))  # two disjoint loops
    assert any("connected" in f for f in rep.failures)
    m = maps.CombinatorialMap([0, 2, 1, 3], root=9)
    assert any("root" in f for f in maps.validate_map(m).failures)
    m = maps.CombinatorialMap([0, 2, 1, 3], holes=[("face", 5)])
    assert any("hole face" in f for f in maps.validate_map(m).failures)
    m = maps.CombinatorialMap([0, 2, 1, 3], holes=[("vertex", 1), ("vertex", 1)])
    assert any("repeated" in f for f in maps.validate_map(m).failures)


def test_face_corner_walk_visits_each_corner_once():
    m = two_edge_path()
    corners = m.face_corners(0)
    assert sorted(corners) == [0, 1, 2, 3]
    # each corner's vertex is the source of its half-edge
    assert [m.vertex_of(h) for h in corners] == [m.vertex_of(h) for h in corners]


def test_corner_face_membership():
    m = two_loops_one_vertex()
    for h in range(4):
        assert m.face_of_corner(h) == 0


def test_well_labeling_check():
    m = two_edge_path()
    lm = maps.LabeledMap(m, [0, -1, -2], face=0)
    assert maps.validate_labeled(lm).ok
    bad = maps.LabeledMap(m, [0, -2, -1], face=0)
    rep = maps.validate_labeled(bad)
    assert any("drop" in f for f in rep.failures)


def test_root_label_pinned_to_zero():
    m = maps.CombinatorialMap([0, 2, 1, 3], root=2)
    lm = maps.LabeledMap(m, [1, 0, 1], face=0)
    assert maps.validate_labeled(lm).ok  # root half-edge 2 sits at vertex B
    lm2 = maps.LabeledMap(m, [0, 1, 1], face=0)
    assert not maps.validate_labeled(lm2).ok


def test_bipartite():
    assert maps.is_bipartite(two_edge_path())
    # triangle is not bipartite: vertices A,B,C; 0:A>B 1:B>A 2:B>C 3:C>B 4:C>A 5:A>C
    tri = maps.CombinatorialMap([5, 2, 1, 4, 3, 0])
    assert maps.validate_map(tri).ok
    assert not maps.is_bipartite(tri)


def test_internal_vertex_formula_pinned():
    assert maps.internal_vertex_formula(19, (4, 1, 2, 0, 0), 1, 5) == 21
    assert maps.internal_vertex_formula(1, (), 0, 0) == 3


def test_internal_vertex_count_on_path_quadrangulation():
    # the 2-edge path is the unique 1-quad quadrangulation of the sphere
    m = two_edge_path()
    assert maps.internal_vertex_count(m, 1, ()) == 3


def test_internal_vertex_count_mismatch_raises():
    # the torus map with two loops is itself a valid one-quad quadrangulation
    assert maps.internal_vertex_count(two_loops_one_vertex(), 1, ()) == 1
    with pytest.raises(AssertionError):
        maps.internal_vertex_count(two_edge_path(), 2, ())  # wrong quad count


def test_rooted_equality_distinguishes_rootings():
    m1 = maps.CombinatorialMap([0, 2, 1, 3], root=0)  # rooted at outer half-edge
    m2 = maps.CombinatorialMap([0, 2, 1, 3], root=1)  # rooted at inner half-edge
    m3 = maps.CombinatorialMap([0, 2, 1, 3], root=3)  # other outer half-edge
    assert not maps.rooted_equal(m1, m2)
    assert maps.rooted_equal(m1, m3)  # path flip is a map automorphism
    assert maps.rooted_equal(m2, maps.CombinatorialMap([0, 2, 1, 3], root=2))


def test_serialization_roundtrip_text_and_json():
    m = maps.CombinatorialMap([2, 3, 1, 0], root=1, holes=[("face", 0), ("vertex", 0)])
    labels = np.array([-3])
    marks = [(0, {"apex": [0], "geodesic": [0, 0], "shuttle": [0]})]
    text = maps.serialize_map(m, labels, marks)
    m2, lab2, marks2 = maps.parse_map(text)
    assert m2 == m and (lab2 == labels).all()
    assert marks2 == [(0, {"apex": [0], "geodesic": [0, 0], "shuttle": [0]})]
    m3, lab3, marks3 = maps.map_from_json(maps.map_to_json(m, labels, marks))
    assert m3 == m and (lab3 == labels).all() and marks3 == [list(x) for x in marks2] or marks3 == marks2


@st.composite
def random_map(draw):
    e = draw(st.integers(1, 6))
    n = 2 * e
    perm = draw(st.permutations(range(n)))
    m = maps.CombinatorialMap(perm)
    rep = maps.validate_map(m)
    if not rep.ok:
        # permutations always give orbit structure; failures here can only be
        # disconnection and the Euler slack that comes with it
        assert all("connected" in f or "Euler" in f for f in rep.failures)
    return m, rep.ok


@given(random_map())
@settings(max_examples=200, deadline=None)
def test_serialize_roundtrip_random(mr):
    m, _ = mr
    m2, _, _ = maps.parse_map(maps.serialize_map(m))
    assert m2 == m
    m3, _, _ = maps.map_from_json(maps.map_to_json(m))
    assert m3 == m


@given(random_map())
@settings(max_examples=200, deadline=None)
def test_face_degrees_sum_to_double_edges(mr):
    m, ok = mr
    assert sum(m.face_degree(i) for i in range(m.n_faces)) == 2 * m.n_edges
    assert sum(m.vertex_degree(i) for i in range(m.n_vertices)) == 2 * m.n_edges
    if ok:
        assert m.genus() >= 0
