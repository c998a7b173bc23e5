"""Marked measured metric spaces: validation, gluing, quotients, GH/GHP."""

import json

import numpy as np
import pytest

from bmaps import maps, metric
from bmaps.metric import FiniteMetricSpace, Mark
from bmaps.pieces import build_slice, sample_forest


def two_edge_path():
    return maps.CombinatorialMap([0, 2, 1, 3])


def path_space(k):
    """k+1 points on a line at unit spacing."""
    idx = np.arange(k + 1)
    return FiniteMetricSpace(np.abs(idx[:, None] - idx[None, :]).astype(np.int32))


def segment_space():
    """Two points at distance 1 with a geodesic mark spanning them."""
    X = path_space(1)
    return X.with_marks([Mark([0, 1], geodesic=True)])


def slice_space(a, l, delta, rng):
    """Graph metric of a random slice, marked with its two boundary
    geodesics (left one first) and its area measure."""
    p = build_slice(sample_forest(a, l, delta, rng))
    sp = metric.graph_metric(p.map)
    marks = [Mark(p.marks["gamma"], geodesic=True),
             Mark(p.marks["xi"], geodesic=True)]
    return FiniteMetricSpace(sp.dist, marks, [p.area.astype(float)]), p


def test_graph_metric_two_edge_path():
    X = metric.graph_metric(two_edge_path())
    assert X.m == 3
    assert sorted(X.dist.ravel().tolist()) == [0, 0, 0, 1, 1, 1, 1, 2, 2]
    assert X.exact
    assert metric.validate_space(X) == []


def test_graph_metric_refuses_disconnected():
    m = maps.CombinatorialMap([1, 0, 3, 2])  # two loop vertices, no bridge
    with pytest.raises(ValueError):
        metric.graph_metric(m)


def test_validate_catches_broken_invariants():
    bad = FiniteMetricSpace(np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]]))
    assert any("triangle" in f for f in metric.validate_space(bad))
    neg = FiniteMetricSpace(np.array([[0, -1], [-1, 0]]))
    assert any("negative" in f for f in metric.validate_space(neg))
    asym = FiniteMetricSpace(np.array([[0.0, 1.0], [2.0, 0.0]]))
    assert any("symmetric" in f for f in metric.validate_space(asym))


def test_geodesic_mark_invariant():
    X = path_space(2)
    good = X.with_marks([Mark([0, 1, 2], geodesic=True)])
    assert metric.validate_space(good) == []
    skipping = X.with_marks([Mark([0, 2], geodesic=True)])
    assert metric.validate_space(skipping) != []
    wrong_origin = X.with_marks([Mark([0, 1, 2], geodesic=True, origin=2)])
    assert metric.validate_space(wrong_origin) != []


def test_rescale_unit_and_composition():
    X = path_space(3).with_measures([np.ones(4), np.arange(4.0)])
    Y = metric.rescale(X, 1)
    assert np.allclose(Y.dist, X.dist.astype(float) * (9.0 / 8.0) ** 0.25)
    assert np.allclose(Y.measures[0], np.ones(4))
    assert np.allclose(Y.measures[1], np.arange(4.0) / np.sqrt(8.0))
    Z = metric.rescale(X, 16)
    assert np.allclose(Z.dist, X.dist.astype(float) * (9.0 / 128.0) ** 0.25)
    assert np.allclose(Z.measures[0], np.ones(4) / 16.0)
    # scaling twice composes multiplicatively on the distances
    W = metric.rescale(metric.rescale(X, 4), 4)
    assert np.allclose(W.dist, X.dist.astype(float) * (9.0 / 32.0) ** 0.25 * (9.0 / 32.0) ** 0.25)


def test_glue_pair_full_identification():
    # two segments glued along their whole length collapse to one segment
    G, proj = metric.glue_pair(segment_space(), segment_space(), 0, 0)
    assert G.m == 2
    assert G.dist[0, 1] == 1
    assert proj.tolist() == [0, 1]
    assert len(G.marks) == 2 and all(mk.geodesic for mk in G.marks)
    assert metric.validate_space(G) == []


def test_glue_pair_wedge_at_a_point():
    # length-0 geodesics: wedge of two segments at their left ends
    X = path_space(1).with_marks([Mark([0], geodesic=True)])
    Y = path_space(1).with_marks([Mark([0], geodesic=True)])
    G, proj = metric.glue_pair(X, Y, 0, 0)
    assert G.m == 3
    assert G.dist[1, proj[1]] == 2
    assert G.dist[0, proj[1]] == 1


def test_glue_pair_point_space_prepends_marks():
    pt = FiniteMetricSpace(
        np.zeros((1, 1), dtype=np.int32),
        [Mark([0], geodesic=True), Mark([0], geodesic=True)],
        [np.zeros(1)],
    )
    Y = path_space(2).with_marks([Mark([0, 1, 2], geodesic=True)])
    Y = Y.with_measures([np.array([1.0, 2.0, 3.0])])
    G, proj = metric.glue_pair(pt, Y, 1, 0)
    assert G.m == Y.m
    assert np.array_equal(G.dist[np.ix_(proj, proj)], Y.dist)
    assert len(G.marks) == 3
    assert G.marks[0].points == [int(proj[0])] and G.marks[1].points == [int(proj[0])]
    assert np.allclose(G.measures[0], 0.0)
    assert np.allclose(sorted(G.measures[1]), [1.0, 2.0, 3.0])


def test_glue_pair_stops_at_shorter_mark():
    X = path_space(2).with_marks([Mark([0, 1, 2], geodesic=True)])
    Y = path_space(1).with_marks([Mark([0, 1], geodesic=True)])
    G, proj = metric.glue_pair(X, Y, 0, 0)
    assert G.m == 3
    assert np.array_equal(G.dist, X.dist)
    assert G.marks[1].points == [0, 1] and G.marks[1].geodesic


def test_glue_pair_refuses_non_geodesic():
    X = path_space(1).with_marks([Mark([0, 1])])
    with pytest.raises(ValueError):
        metric.glue_pair(X, segment_space(), 0, 0)


def test_glue_pair_embeds_both_slices():
    rng = np.random.default_rng(7)
    for _ in range(5):
        X, _ = slice_space(5, 2, 1, rng)
        Y, _ = slice_space(4, 2, -1, rng)
        G, proj = metric.glue_pair(X, Y, 0, 1)
        # X keeps its numbering, Y embeds isometrically through proj
        assert np.array_equal(G.dist[: X.m, : X.m], X.dist)
        assert np.array_equal(G.dist[np.ix_(proj, proj)], Y.dist)
        # geodesic marks stay geodesic after gluing a pair
        assert all(mk.geodesic for mk in G.marks)
        assert metric.validate_space(G) == []
        # total measure is conserved
        assert G.measures[0].sum() == X.measures[0].sum()
        assert G.measures[1].sum() == Y.measures[0].sum()


def test_glue_self_of_mark_with_itself_is_identity():
    X = path_space(3)
    X = X.with_marks([Mark([0, 1, 2, 3], geodesic=True),
                      Mark([0, 1, 2, 3], geodesic=True)])
    G, proj = metric.glue_self(X, 0, 1)
    assert G.m == X.m
    assert np.array_equal(G.dist, X.dist)
    assert proj.tolist() == [0, 1, 2, 3]


def test_glue_self_identifies_path_endpoints():
    X = path_space(2).with_marks([Mark([0], geodesic=True),
                                  Mark([2], geodesic=True)])
    G, proj = metric.glue_self(X, 0, 1)
    assert proj[0] == proj[2]
    assert G.m == 2
    assert G.dist[proj[0], proj[1]] == 1


def test_glue_self_bounds_and_locality():
    rng = np.random.default_rng(19)
    tested_local = 0
    for _ in range(8):
        X, _ = slice_space(14, 2, 0, rng)
        G, proj = metric.glue_self(X, 0, 1)
        defect = metric.glue_defect(X, 0, 1)
        pulled = G.dist[np.ix_(proj, proj)]
        assert np.all(pulled <= X.dist)
        assert np.all(X.dist <= pulled + defect)
        # points far from the glued part of the left geodesic keep
        # their distances exactly
        ell = min(X.marks[0].length, X.marks[1].length)
        gpts = X.marks[0].points[: ell + 1]
        to_gam = X.dist[:, gpts].min(axis=1)
        for eps in (2, 3):
            far = np.nonzero(to_gam > eps)[0]
            for i in far:
                for j in far:
                    if X.dist[i, j] < eps:
                        assert pulled[i, j] == X.dist[i, j]
                        tested_local += 1
    assert tested_local > 0


def test_quotient_matches_glue_self():
    rng = np.random.default_rng(23)
    for _ in range(6):
        X, _ = slice_space(6, 3, -2, rng)
        ell = min(X.marks[0].length, X.marks[1].length)
        rel = list(zip(X.marks[0].points[: ell + 1], X.marks[1].points[: ell + 1]))
        Gq, pq = metric.quotient_metric(X, rel)
        Gs, ps = metric.glue_self(X, 0, 1)
        assert np.array_equal(pq, ps)
        assert np.array_equal(Gq.dist, Gs.dist)
        for v in range(len(Gq.measures)):
            assert np.allclose(Gq.measures[v], Gs.measures[v])


def test_quotient_empty_and_diagonal_are_identity():
    X, _ = slice_space(4, 1, 0, np.random.default_rng(3))
    G0, p0 = metric.quotient_metric(X, [])
    assert np.array_equal(G0.dist, X.dist) and p0.tolist() == list(range(X.m))
    G1, p1 = metric.quotient_metric(X, [(2, 2), (0, 0)])
    assert np.array_equal(G1.dist, X.dist)


def test_quotient_idempotent_and_monotone():
    X, _ = slice_space(5, 2, 1, np.random.default_rng(11))
    rng = np.random.default_rng(4)
    pairs = [(int(rng.integers(X.m)), int(rng.integers(X.m))) for _ in range(4)]
    G1, p1 = metric.quotient_metric(X, pairs[:2])
    G2, p2 = metric.quotient_metric(X, pairs)
    # more identifications never increase distances
    assert np.all(G2.dist[np.ix_(p2, p2)] <= G1.dist[np.ix_(p1, p1)])
    # re-applying the image relation changes nothing
    G3, p3 = metric.quotient_metric(G1, [(int(p1[a]), int(p1[b])) for a, b in pairs[:2]])
    assert np.array_equal(G3.dist, G1.dist)


def test_quotient_collapses_marks_and_sums_measures():
    X = path_space(2).with_marks([Mark([0, 2])])
    X = X.with_measures([np.array([1.0, 1.0, 1.0])])
    G, proj = metric.quotient_metric(X, [(0, 2)])
    assert G.m == 2
    assert G.marks[0].points == [int(proj[0])]
    assert G.measures[0][proj[0]] == 2.0


def test_split_geodesic_mark():
    X = path_space(4).with_marks([Mark([0, 1, 2, 3, 4], geodesic=True)])
    Y = metric.split_geodesic_mark(X, 0, 2)
    assert len(Y.marks) == 2
    assert Y.marks[0].points == [0, 1, 2] and Y.marks[0].origin == 0
    assert Y.marks[1].points == [2, 3, 4] and Y.marks[1].origin == 2
    assert metric.validate_space(Y) == []
    with pytest.raises(ValueError):
        metric.split_geodesic_mark(X, 0, 5)


def test_mark_and_measure_surgery():
    X = path_space(2).with_marks([Mark([0]), Mark([1]), Mark([2])])
    X = X.with_measures([np.ones(3), np.arange(3.0)])
    M = metric.merge_marks(X, 0, 2)
    assert len(M.marks) == 2 and M.marks[0].points == [0, 2]
    assert metric.drop_mark(X, 1).marks[1].points == [2]
    P = metric.permute_marks(X, [2, 0, 1])
    assert P.marks[0].points == [2]
    A = metric.add_measures(X, 0, 1)
    assert np.allclose(A.measures[0], [1.0, 2.0, 3.0])
    assert len(metric.drop_measure(X, 0).measures) == 1
    Q = metric.permute_measures(X, [1, 0])
    assert np.allclose(Q.measures[0], np.arange(3.0))
    with pytest.raises(ValueError):
        metric.permute_marks(X, [0, 0, 1])


def test_gh_identical_spaces_is_zero():
    X, _ = slice_space(1, 1, 0, np.random.default_rng(0))
    small = FiniteMetricSpace(X.dist[:4, :4])
    assert metric.gh_exact(small, small) == 0.0


def test_gh_point_against_two_points():
    pt = FiniteMetricSpace(np.zeros((1, 1), dtype=np.int32))
    pair = FiniteMetricSpace(np.array([[0, 2], [2, 0]], dtype=np.int32))
    assert metric.gh_exact(pt, pair) == 1.0


def test_gh_mark_compatibility_forces_distortion():
    D = np.array([[0, 2], [2, 0]], dtype=np.int32)
    X = FiniteMetricSpace(D, [Mark([0])])
    Y = FiniteMetricSpace(D, [Mark([0, 1])])
    # the mark of X must cover both marked points of Y, at distortion 2
    assert metric.gh_exact(X, Y) == 1.0
    unmarked = FiniteMetricSpace(D)
    assert metric.gh_exact(unmarked, FiniteMetricSpace(D)) == 0.0


def test_gh_cap_refusal():
    big = FiniteMetricSpace(np.zeros((9, 9), dtype=np.int32)
                            + 1 - np.eye(9, dtype=np.int32))
    with pytest.raises(ValueError, match="cap"):
        metric.gh_exact(big, big, cap=8)
    assert metric.gh_exact(big, big, cap=9) == 0.0


def test_prokhorov_pinned_values():
    one = np.zeros((1, 1))
    assert metric.prokhorov_distance(one, [1.0], [2.0]) == 1.0
    assert metric.prokhorov_distance(one, [1.0], [1.0]) == 0.0
    two = np.array([[0.0, 3.0], [3.0, 0.0]])
    assert metric.prokhorov_distance(two, [1, 0], [0, 1]) == 1.0
    near = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert metric.prokhorov_distance(near, [1, 0], [0, 1]) == 0.5


def test_prokhorov_symmetric_on_random_measures():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 3, size=5)
    D = np.abs(pts[:, None] - pts[None, :])
    for _ in range(10):
        mu = rng.uniform(0, 1, size=5)
        nu = rng.uniform(0, 1, size=5)
        a = metric.prokhorov_distance(D, mu, nu)
        b = metric.prokhorov_distance(D, nu, mu)
        assert abs(a - b) < 1e-9
        assert metric.prokhorov_distance(D, mu, mu) < 1e-12


def test_ghp_upper_bound_identity_and_lipschitz_ops():
    X, _ = slice_space(3, 1, 0, np.random.default_rng(9))
    X = X.with_marks([X.marks[0], X.marks[1], Mark([0])])
    ident = [(i, i) for i in range(X.m)]
    coup = [np.diag(X.measures[0])]
    assert metric.ghp_upper_bound(X, X, ident, coup) == 0.0
    # merging the same pair of marks on both sides keeps the bound
    XM = metric.merge_marks(X, 0, 2)
    assert metric.ghp_upper_bound(XM, XM, ident, coup) == 0.0
    # jittered copy: bound scales by at most 1 under mark surgery and
    # at most 2 under measure addition
    Y = FiniteMetricSpace(X.dist.astype(float) * 1.03, X.marks, X.measures)
    before = metric.ghp_upper_bound(X, Y, ident, coup)
    after = metric.ghp_upper_bound(
        metric.drop_mark(X, 2), metric.drop_mark(Y, 2), ident, coup)
    assert after <= before + 1e-12
    X2 = X.with_measures([X.measures[0], X.measures[0]])
    Y2 = Y.with_measures([Y.measures[0], Y.measures[0]])
    two = metric.ghp_upper_bound(X2, Y2, ident, [np.diag(X.measures[0])] * 2)
    added = metric.ghp_upper_bound(
        metric.add_measures(X2, 0, 1), metric.add_measures(Y2, 0, 1),
        ident, [2.0 * np.diag(X.measures[0])])
    assert added <= 2.0 * two + 1e-12


def test_ghp_upper_bound_rejects_incompatible_correspondence():
    X = path_space(1).with_marks([Mark([0])])
    Y = path_space(1).with_marks([Mark([1])])
    with pytest.raises(ValueError, match="incompatible"):
        metric.ghp_upper_bound(X, Y, [(0, 0), (1, 1)], [])


def test_gh_ghp_dispatch():
    pt = FiniteMetricSpace(np.zeros((1, 1), dtype=np.int32))
    assert metric.gh_ghp_distance(pt, pt, mode="gh") == 0.0
    with pytest.raises(ValueError):
        metric.gh_ghp_distance(pt, pt, mode="ghp")
    with pytest.raises(ValueError):
        metric.gh_ghp_distance(pt, pt, mode="nope")


def test_json_round_trip():
    X, _ = slice_space(3, 2, -1, np.random.default_rng(2))
    for space in (X, metric.rescale(X, 7)):
        back = metric.space_from_json(metric.space_to_json(space))
        assert back.exact == space.exact
        assert np.allclose(back.dist, space.dist)
        assert back.marks == space.marks
        assert all(np.allclose(a, b) for a, b in zip(back.measures, space.measures))
        json.loads(metric.space_to_json(space))
