import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from backscatter_rti.errors import GeometryError
from backscatter_rti.geometry import (Link, Point3, Scene, build_grid, cell_center,
                                      make_links)


def test_2x2_centers(grid2x2):
    expected = [(0.25, 0, 0.25), (0.75, 0, 0.25), (0.25, 0, 0.75), (0.75, 0, 0.75)]
    assert grid2x2.n_cells == 4
    for j, e in enumerate(expected):
        assert tuple(cell_center(grid2x2, j)) == pytest.approx(e, abs=1e-15)
    np.testing.assert_allclose(grid2x2.centers, expected, atol=1e-15)


def test_single_cell():
    g = build_grid(Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 0, 1), 1, 1, 1.0)
    assert tuple(cell_center(g, 0)) == (0.5, 0.0, 0.5)


def test_wall_grid_counts_and_indexing(lab_cfg):
    g = lab_cfg.grid
    # 3.2 m / 0.1 m by 1.6 m / 0.1 m
    assert (g.n_u, g.n_v, g.n_cells) == (32, 16, 512)
    c = cell_center(g, 33)  # second row, second column
    assert tuple(c) == pytest.approx((-1.6 + 0.15, 2.0, 0.15), abs=1e-12)


def test_axes_normalized_and_orthogonalized():
    g = build_grid(Point3(0, 0, 0), Point3(2, 0, 0), Point3(1e-8, 0, 3), 3, 2, 0.1)
    u, v = g.axis_u.as_array(), g.axis_v.as_array()
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert abs(u @ v) < 1e-9


@pytest.mark.parametrize("u,v,n_u,n_v,size,exc", [
    ((1, 0, 0), (1, 1, 0), 2, 2, 0.1, GeometryError),
    ((0, 0, 0), (0, 1, 0), 2, 2, 0.1, GeometryError),
    ((1, 0, 0), (0, 1, 0), 0, 2, 0.1, ValueError),
    ((1, 0, 0), (0, 1, 0), 2, 2, 0.0, ValueError),
])
def test_build_grid_errors(u, v, n_u, n_v, size, exc):
    with pytest.raises(exc):
        build_grid(Point3(0, 0, 0), Point3(*u), Point3(*v), n_u, n_v, size)


def test_cell_center_out_of_range(grid2x2):
    with pytest.raises(IndexError):
        cell_center(grid2x2, 4)
    with pytest.raises(IndexError):
        cell_center(grid2x2, -1)


def test_non_finite_point():
    with pytest.raises(GeometryError):
        Point3(0, math.nan, 0)


def test_lab_links(lab_cfg):
    links = make_links(lab_cfg.scene)
    assert len(links) == 8
    assert [l.link_id for l in links] == list(range(8))
    # tag 1: 2.0 m deep, 0.18 m below the antenna, 0.6 m to the side
    assert links[0].length_m == pytest.approx(math.sqrt(2.0 ** 2 + 0.18 ** 2 + 0.6 ** 2), abs=1e-12)


def test_single_tag_link(grid2x2):
    scene = Scene(Point3(0, 0, 0), (("a", Point3(0, 2, 0)),), grid2x2)
    (link,) = make_links(scene)
    assert link.length_m == 2.0


def test_coincident_tag_rejected(grid2x2):
    scene = Scene(Point3(1, 1, 1), (("a", Point3(1, 1, 1)),), grid2x2)
    with pytest.raises(GeometryError):
        make_links(scene)


def test_scene_validation(grid2x2):
    with pytest.raises(GeometryError):
        Scene(Point3(0, 0, 0), (), grid2x2)
    with pytest.raises(GeometryError):
        Scene(Point3(0, 0, 0), (("a", Point3(1, 0, 0)), ("a", Point3(2, 0, 0))), grid2x2)


def test_link_length_must_match():
    with pytest.raises(GeometryError):
        Link(0, Point3(0, 0, 0), Point3(1, 0, 0), 2.0)


coords = st.floats(-5, 5, allow_nan=False)
unit = st.tuples(coords, coords, coords).filter(lambda a: np.linalg.norm(a) > 0.1)


@settings(max_examples=50, deadline=None)
@given(origin=st.tuples(coords, coords, coords), u=unit, n_u=st.integers(1, 7),
       n_v=st.integers(1, 7), size=st.floats(0.01, 1.0))
def test_grid_properties(origin, u, n_u, n_v, size):
    u = np.array(u)
    # any vector orthogonal to u
    helper = np.array([0.0, 0.0, 1.0]) if abs(u[2]) < 0.9 * np.linalg.norm(u) else np.array([1.0, 0, 0])
    v = np.cross(u, helper)
    g = build_grid(Point3(*origin), Point3(*u), Point3(*v), n_u, n_v, size)
    centers = np.array([tuple(cell_center(g, j)) for j in range(g.n_cells)])
    # bijection onto the center set, consistent with the vectorized path
    np.testing.assert_array_equal(centers, g.centers)
    assert len({tuple(np.round(c, 9)) for c in centers}) == g.n_cells
    # all centers in the grid plane
    normal = np.cross(g.axis_u.as_array(), g.axis_v.as_array())
    assert np.max(np.abs((centers - g.origin.as_array()) @ normal)) < 1e-9
    # projection recovers the cell
    for j in range(g.n_cells):
        assert g.cell_rc(centers[j]) == g.rc(j)


@settings(max_examples=50, deadline=None)
@given(a=st.tuples(coords, coords, coords), b=st.tuples(coords, coords, coords))
def test_link_length_property(a, b):
    pa, pb = Point3(*a), Point3(*b)
    if math.dist(a, b) == 0:
        return
    link = Link(0, pa, pb)
    assert abs(link.length_m - math.dist(a, b)) < 1e-9
