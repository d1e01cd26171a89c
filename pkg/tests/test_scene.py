import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from radiostripe.channel import aperture_diameter
from radiostripe.scene import (Deployment, Hotspot, InvalidShapeError, Scenario, ScenarioError,
                               elements_from_length, line_offsets, nearest_square,
                               place_center_fd_array, place_center_square_stripe, place_line,
                               place_polygon, polygon_radius, validate_deployment,
                               warn_if_outside)

from conftest import small_room


@pytest.mark.parametrize("n, kappa, expected", [(4, math.sqrt(2), 1.0), (6, 1.0, 1.0)])
def test_polygon_radius_hand_values(n, kappa, expected):
    assert_allclose(polygon_radius(n, kappa), expected, rtol=1e-12)


def test_polygon_radius_large_n_approaches_circle():
    r = polygon_radius(1000, 0.015)
    assert_allclose(r, 0.015 * 1000 / (2 * math.pi), rtol=1e-4)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_polygon_radius_rejects_small_n(n):
    with pytest.raises(InvalidShapeError):
        polygon_radius(n, 0.1)


def test_place_polygon_square():
    dep = place_polygon((0, 0), 4, math.sqrt(2), 4.0)
    expected = [(1, 0, 4), (0, 1, 4), (-1, 0, 4), (0, -1, 4)]
    assert_allclose(dep.elements, expected, atol=1e-12)
    gaps = np.linalg.norm(np.diff(np.vstack([dep.elements, dep.elements[:1]]), axis=0), axis=1)
    assert_allclose(gaps, math.sqrt(2), rtol=1e-12)


@given(cx=st.floats(-10, 10), cy=st.floats(-10, 10), n=st.integers(3, 300),
       kappa=st.floats(1e-3, 1.0))
@settings(max_examples=60, deadline=None)
def test_polygon_centroid_and_chords(cx, cy, n, kappa):
    dep = place_polygon((cx, cy), n, kappa, 3.0)
    assert_allclose(dep.elements.mean(axis=0), (cx, cy, 3.0), atol=1e-9 * (1 + kappa * n))
    nxt = np.roll(dep.elements, -1, axis=0)
    assert_allclose(np.linalg.norm(nxt - dep.elements, axis=1), kappa, rtol=1e-9)
    assert validate_deployment(dep, kappa).ok


def test_place_line_hand_example():
    dep = place_line((2, 2), 0.0, 3, 0.5, 4.0)
    assert_allclose(dep.elements, [(2.0, 2, 4), (2.5, 2, 4), (3.0, 2, 4)])


def test_place_line_two_elements_vertical():
    # Offsets (j - floor(N/2)) * kappa for j = 1, 2 are 0 and 1.
    dep = place_line((0, 0), math.pi / 2, 2, 1.0, 4.0)
    assert_allclose(dep.elements, [(0, 0, 4), (0, 1, 4)], atol=1e-12)


@given(n=st.integers(2, 200), kappa=st.floats(1e-3, 1.0), angle=st.floats(0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_line_aperture_and_path(n, kappa, angle):
    dep = place_line((1.0, 2.0), angle, n, kappa, 3.0)
    assert_allclose(aperture_diameter(dep), (n - 1) * kappa, rtol=1e-9)
    report = validate_deployment(dep, kappa)
    assert report.ok
    assert_allclose(report.path_length, report.path_limit, rtol=1e-9)


def test_line_center_is_middle_element():
    off = line_offsets(5, 0.1, 0.3)
    assert_allclose(off[1], 0.0, atol=1e-15)  # j = floor(5/2) = 2 in 1-based indexing


def test_center_square_four_corners():
    sc = small_room([(1, 1)])
    dep = place_center_square_stripe(sc, 4, 1.0)
    expected = {(2.5, 2.5), (3.5, 2.5), (3.5, 3.5), (2.5, 3.5)}
    assert {tuple(np.round(p[:2], 12)) for p in dep.elements} == expected
    assert validate_deployment(dep, 1.0).ok


@pytest.mark.parametrize("n", [4, 5, 7, 40, 101])
def test_center_square_counts_and_spacing(n):
    sc = small_room([(1, 1)])
    kappa = 0.05
    dep = place_center_square_stripe(sc, n, kappa)
    assert dep.n_elements == n
    assert validate_deployment(dep, kappa).ok
    if n % 4 == 0:
        assert_allclose(dep.elements[:, :2].mean(axis=0), sc.center, atol=1e-12)


def test_center_square_too_big():
    sc = small_room([(1, 1)])
    with pytest.raises(InvalidShapeError):
        place_center_square_stripe(sc, 400, 0.1)


@pytest.mark.parametrize("target, side", [(200, 14), (4, 2), (90, 9), (1, 1), (2, 1), (3, 2)])
def test_nearest_square(target, side):
    assert nearest_square(target) == side


def test_center_fd_array_grid():
    sc = small_room([(1, 1)])
    dep = place_center_fd_array(sc, 200)
    assert dep.n_elements == 196
    assert_allclose(dep.elements[:, :2].mean(axis=0), sc.center, atol=1e-12)
    assert_allclose(aperture_diameter(dep), 13 * sc.wavelength / 2 * math.sqrt(2), rtol=1e-12)


def test_validate_flags_close_pair():
    dep = Deployment(np.array([[0, 0, 3], [0.05, 0, 3]]), "line")
    report = validate_deployment(dep, 0.1)
    assert not report.spacing_ok
    assert report.violating_pairs == [(0, 1)]


def test_validate_flags_long_path():
    dep = Deployment(np.array([[0, 0, 3], [1.0, 0, 3], [2.0, 0, 3]]), "line")
    assert not validate_deployment(dep, 0.5).path_ok


@pytest.mark.parametrize("length, kappa, n", [(3, 0.015, 201), (0, 0.015, 1), (1.5, 0.015, 101),
                                              (0.01, 0.015, 1)])
def test_elements_from_length(length, kappa, n):
    assert elements_from_length(length, kappa) == n


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        small_room([(7, 1)])
    with pytest.raises(ScenarioError):
        small_room([Hotspot((1, 1, 3.0))])
    with pytest.raises(ScenarioError):
        small_room([(1, 1)], power_budget=-1.0)
    with pytest.raises(ScenarioError):
        Hotspot((1, 1, 1), density=0)


def test_scenario_kappa_defaults_to_half_wavelength():
    sc = small_room([(1, 1)], frequency=10e9)
    assert_allclose(sc.kappa, 299792458.0 / 10e9 / 2)
    assert small_room([(1, 1)], inter_element_spacing=0.02).kappa == 0.02


def test_deployment_is_read_only_and_tagged():
    dep = place_line((1, 1), 0, 3, 0.1, 3)
    with pytest.raises(ValueError):
        dep.elements[0, 0] = 5
    with pytest.raises(InvalidShapeError):
        Deployment(np.zeros((1, 3)), "triangle")
    assert dep == place_line((1, 1), 0, 3, 0.1, 3)
    assert_array_equal(dep.elements[:, 2], 3)


def test_warn_if_outside():
    sc = small_room([(1, 1)])
    with pytest.warns(UserWarning):
        assert not warn_if_outside(sc, place_line((5.95, 1), 0, 3, 0.1, 3))
