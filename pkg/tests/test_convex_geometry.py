import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncflow import (
    Box,
    FlatBottom1D,
    Hull,
    InputError,
    Interval1D,
    Point,
    Quadratic,
    QuarticWell,
    check_drift_alignment,
    check_distance_comparison,
    distance,
    intersect,
    project,
    zero_set_hull,
)


def random_bodies(rng, kind, m):
    if kind == "point":
        return Point(rng.uniform(-10, 10, m))
    if kind == "interval":
        a, b = sorted(rng.uniform(-10, 10, 2))
        return Interval1D(a, b)
    if kind == "box":
        lo = rng.uniform(-10, 0, m)
        return Box(lo, lo + rng.uniform(0, 10, m))
    k = int(rng.integers(1, 7))
    return Hull(rng.uniform(-10, 10, (k, m)))


def random_member(rng, body):
    verts = body.extreme_points()
    w = rng.uniform(0, 1, verts.shape[0])
    w /= w.sum()
    return w @ verts


def test_interval_clamp():
    assert project(Interval1D(0, 1), [2.0])[0] == 1.0
    assert distance(Interval1D(0, 1), [3.0]) == 2.0


def test_point_inside_body_is_fixed():
    body = Box([0.0, 0.0], [2.0, 2.0])
    x = np.array([1.0, 0.5])
    np.testing.assert_array_equal(project(body, x), x)
    assert distance(body, x) == 0.0


def test_hull_triangle_projection():
    tri = Hull([[0, 0], [1, 0], [0, 1]])
    np.testing.assert_allclose(tri.project([1.0, 1.0]), [0.5, 0.5], atol=1e-12)
    assert tri.distance([1.0, 1.0]) == pytest.approx(np.sqrt(2) / 2, abs=1e-12)


def test_hull_single_vertex():
    h = Hull([[1.0, 2.0]])
    np.testing.assert_allclose(h.project([5.0, 5.0]), [1.0, 2.0])


def test_projection_dimension_mismatch():
    with pytest.raises(InputError):
        project(Box([0.0, 0.0], [1.0, 1.0]), [1.0])


@pytest.mark.parametrize("kind", ["point", "interval", "box", "hull"])
def test_projection_suite_randomized(kind):
    # nonexpansiveness, variational inequality, idempotence per body kind
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(200):
        m = 1 if kind == "interval" else int(rng.integers(1, 4))
        body = random_bodies(rng, kind, m)
        x = rng.uniform(-15, 15, m)
        y = rng.uniform(-15, 15, m)
        px, py = body.project(x), body.project(y)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-10
        member = random_member(rng, body)
        assert float((px - x) @ (px - member)) <= 1e-10
        np.testing.assert_array_equal(body.project(px), px)


def test_distance_squared_gradient_matches_projection_residual():
    # grad |x|_K^2 = 2 (x - P(x)) via central differences
    rng = np.random.default_rng(5)
    bodies = [
        Interval1D(-1.0, 2.0),
        Box([-1.0, 0.0], [1.0, 1.0]),
        Hull(rng.uniform(-2, 2, (5, 2))),
    ]
    h = 1e-6
    for body in bodies:
        m = body.dimension
        for _ in range(20):
            x = rng.uniform(-4, 4, m)
            expected = 2.0 * (x - body.project(x))
            fd = np.empty(m)
            for k in range(m):
                e = np.zeros(m)
                e[k] = h
                fd[k] = (body.distance(x + e) ** 2 - body.distance(x - e) ** 2) / (2 * h)
            np.testing.assert_allclose(fd, expected, atol=1e-5)


def test_zero_set_hull_1d():
    body = zero_set_hull([Quadratic(center=[1.0]), Quadratic(center=[3.0])])
    assert isinstance(body, Interval1D)
    assert (body.lo, body.hi) == (1.0, 3.0)

    body = zero_set_hull([FlatBottom1D(0.0, 1.0), FlatBottom1D(2.0, 5.0)])
    assert (body.lo, body.hi) == (0.0, 5.0)

    body = zero_set_hull([Quadratic(center=[2.0]), QuarticWell(center=[2.0])])
    assert isinstance(body, Point)
    np.testing.assert_array_equal(body.p, [2.0])


def test_zero_set_hull_multidim_hull_of_corners():
    body = zero_set_hull([Quadratic(center=[0.0, 0.0]), Quadratic(center=[1.0, 2.0])])
    assert isinstance(body, Hull)
    assert body.vertices.shape == (2, 2)


def test_check_drift_alignment_1d_catalog_passes():
    pots = [
        Quadratic(center=[-1.0], weight=2.0),
        QuarticWell(center=[1.5]),
        FlatBottom1D(0.0, 1.0),
    ]
    grid = [[x] for x in np.linspace(-10, 10, 101)]
    assert check_drift_alignment(pots, grid).passed


def test_check_drift_alignment_shared_center_any_dimension():
    pots = [Quadratic(center=[0.5, -0.5], weight=w) for w in (1.0, 3.0)]
    rng = np.random.default_rng(2)
    assert check_drift_alignment(pots, rng.uniform(-5, 5, (64, 2))).passed


def test_check_drift_alignment_sample_inside_hull_contributes_zero():
    pots = [Quadratic(center=[0.0]), Quadratic(center=[2.0])]
    rep = check_drift_alignment(pots, [[1.0]])
    assert rep.passed and rep.worst_value == 0.0


def test_check_distance_comparison_hand_case():
    # interval [0,1], x_a=2, x_b=0.5: lhs=-1.5, (i) bound 1, (ii) bound -1
    body = Interval1D(0.0, 1.0)
    pa = body.project([2.0])
    lhs = float((np.array([2.0]) - pa) @ (np.array([0.5]) - np.array([2.0])))
    assert lhs == pytest.approx(-1.5)
    assert check_distance_comparison(body, [([2.0], [0.5])]).passed


def test_check_distance_comparison_member_pair_trivial():
    body = Interval1D(0.0, 1.0)
    assert check_distance_comparison(body, [([0.5], [0.9])]).passed


def test_check_distance_comparison_randomized_hull():
    rng = np.random.default_rng(7)
    tri = Hull([[0, 0], [1, 0], [0, 1]])
    pairs = [(rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)) for _ in range(1000)]
    rep = check_distance_comparison(tri, pairs)
    assert rep.passed
    assert rep.params["pairs"] == 1000


def test_intersect():
    assert intersect([Interval1D(0, 1), Interval1D(2, 5)]) is None
    got = intersect([Interval1D(0, 2), Interval1D(1, 5)])
    assert isinstance(got, Interval1D) and (got.lo, got.hi) == (1.0, 2.0)
    pt = intersect([Point([1.0]), Interval1D(0, 2)])
    assert isinstance(pt, Point)
    box = intersect([Box([0, 0], [2, 2]), Box([1, -1], [3, 1])])
    np.testing.assert_array_equal(box.lo, [1, 0])
    np.testing.assert_array_equal(box.hi, [2, 1])


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
)
def test_hull_projection_beats_all_vertices(x, y):
    # the projection is at least as close as every vertex and every midpoint
    verts = np.array([x, y, [0.0, 0.0]])
    h = Hull(verts)
    q = np.array([7.0, -3.0])
    d = h.distance(q)
    for v in verts:
        assert d <= np.linalg.norm(q - v) + 1e-9
    for a in (0.25, 0.5, 0.75):
        assert d <= np.linalg.norm(q - (a * verts[0] + (1 - a) * verts[1])) + 1e-9


def test_invalid_bodies():
    with pytest.raises(InputError):
        Interval1D(2.0, 1.0)
    with pytest.raises(InputError):
        Box([0.0, 2.0], [1.0, 1.0])
    with pytest.raises(InputError):
        Hull(np.zeros((0, 2)))


def test_intersect_rejects_hull_representation():
    from syncflow import RepresentationError

    with pytest.raises(RepresentationError):
        intersect([Hull([[0.0, 0.0], [1.0, 0.0]]), Box([0.0, 0.0], [1.0, 1.0])])


def test_report_json_schema():
    rep = check_distance_comparison(Interval1D(0.0, 1.0), [([2.0], [0.5])])
    d = rep.as_dict()
    assert set(d) == {"check", "pass", "worst_value", "location", "params"}
    assert '"check"' in rep.to_json()
