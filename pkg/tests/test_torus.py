import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conformal_tiling import torus as tr
from conformal_tiling.errors import DomainError

SQUARE = tr.TorusSpec(np.sqrt(2.0), 1.0)


def test_square_modulus():
    assert tr.conformal_modulus(SQUARE) == pytest.approx(1.0, abs=1e-12)


def test_thin_torus_modulus_vanishes():
    mus = [tr.conformal_modulus(tr.TorusSpec(1.0, r)) for r in (0.1, 0.01, 0.001)]
    assert mus[0] > mus[1] > mus[2] and mus[2] < 1.1e-3


def test_quadrature_matches_closed_form_on_random_specs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        r = rng.uniform(0.05, 2.0)
        R = r * rng.uniform(1.02, 20.0)
        assert abs(tr._modulus_quad(R, r) - tr._modulus_closed(R, r)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(1.05, 10.0), st.floats(0.1, 10.0))
def test_scale_invariance(r, ratio, k):
    a = tr._modulus_closed(ratio * r, r)
    b = tr._modulus_closed(k * ratio * r, k * r)
    assert b == pytest.approx(a, rel=1e-14)


@pytest.mark.parametrize("r", [1.0, 2.0, 0.3])
def test_solve_square_torus(r):
    spec = tr.solve_square_torus(r)
    assert spec.R == pytest.approx(r * np.sqrt(2.0), abs=1e-10 * max(1, r))
    assert tr.villarceau_angle(spec).degrees == pytest.approx(90.0, abs=0.01)


def test_invalid_spec():
    with pytest.raises(DomainError):
        tr.TorusSpec(1.0, 1.0)
    with pytest.raises(DomainError):
        tr.solve_square_torus(0.0)


def test_conformal_coordinate_round_trip():
    spec = tr.TorusSpec(2.0, 1.0)
    for th in (-3.0, -0.4, 0.0, 1.2, 3.1, 7.0):
        assert tr.theta_of_u(spec, tr.u_of_theta(spec, th)) == pytest.approx(th, abs=1e-12)
    period = 2 * np.pi * tr.conformal_modulus(spec)
    assert tr.u_of_theta(spec, 2 * np.pi) == pytest.approx(period, abs=1e-12)


@pytest.mark.parametrize("spec", [SQUARE, tr.TorusSpec(3.0, 1.0), tr.TorusSpec(1.2, 1.0)])
def test_villarceau_circles_lie_on_torus(spec):
    for sign in (1, -1):
        for circ in tr.villarceau_circles(spec, rotation=0.7, tilt_sign=sign):
            pts = circ.points(200)
            assert np.max(np.abs(spec.implicit(pts))) < 1e-10
            center, radius, _, residual = tr.fit_circle(pts)
            assert radius == pytest.approx(spec.R, abs=1e-10)
            assert residual < 1e-10
            assert np.hypot(*center[:2]) == pytest.approx(spec.r, abs=1e-10)
            assert abs(center[2]) < 1e-12


def test_angle_limits():
    assert tr.villarceau_angle(SQUARE).degrees == pytest.approx(90.0, abs=0.01)
    thin = tr.villarceau_angle(tr.TorusSpec(10.0, 1.0)).degrees
    fat = tr.villarceau_angle(tr.TorusSpec(1.01, 1.0)).degrees
    assert thin < 15.0 < 160.0 < fat


def test_angle_increases_with_aspect():
    ratios = np.arange(0.1, 0.951, 0.05)
    angles = [tr.villarceau_angle(tr.TorusSpec(1.0, k), configurations=4).degrees for k in ratios]
    assert np.all(np.diff(angles) > 0)


def test_angle_constant_across_configurations():
    rng = np.random.default_rng(1)
    for _ in range(5):
        spec = tr.TorusSpec(1.0, rng.uniform(0.15, 0.9))
        assert tr.villarceau_angle(spec).spread < 1e-6


def test_meridian_meets_villarceau_at_45_on_square_torus():
    assert tr.villarceau_angle(SQUARE).meridian_degrees == pytest.approx(45.0, abs=0.05)
    assert tr.meridian_diagonal_angle(SQUARE) == pytest.approx(45.0, abs=1e-9)


@pytest.mark.parametrize("anti", [False, True])
def test_diagonal_is_villarceau_circle(anti):
    out = tr.diagonal_is_villarceau_check(SQUARE, 256, anti=anti, offset=0.4)
    assert out["residual"] < 1e-6 * SQUARE.R
    assert out["radius"] == pytest.approx(SQUARE.R, abs=1e-6)


def test_non_square_diagonal_is_not_a_circle():
    spec = tr.TorusSpec(2.0, 1.0)
    assert tr.diagonal_is_villarceau_check(spec)["residual"] > 1e-3 * spec.R


def test_tile_square_torus():
    tiled = tr.tile_torus(SQUARE, n=8)
    m = tiled.mesh
    assert len(np.unique(tiled.tile)) == 256
    assert m.n_faces == 256 * 16
    assert m.is_closed() and m.euler_characteristic() == 0
    assert m.is_consistently_oriented()
    assert np.max(np.abs(SQUARE.implicit(m.vertices))) < 1e-12
    assert np.sum(tiled.color == 0) == np.sum(tiled.color == 1)
    # faces of different tiles sharing an edge differ in colour
    ef = {}
    for f, row in enumerate(m.face_edges):
        for e in row:
            ef.setdefault(int(e), []).append(f)
    for a, b in ef.values():
        if tiled.tile[a] != tiled.tile[b]:
            assert tiled.color[a] != tiled.color[b]


def test_tiling_vertex_angles_sum_to_full_turn():
    sums = tr.tiling_vertex_angle_sums(tr.tile_torus(SQUARE, n=8))
    vals = np.array(list(sums.values()))
    # square corners plus square centres
    assert len(vals) == 8 * 8 * 2
    np.testing.assert_allclose(vals, 360.0, atol=0.1)


def test_coordinate_net_is_orthogonal():
    np.testing.assert_allclose(tr.coordinate_net_angles(SQUARE, samples=100), 90.0, atol=0.01)


def test_incommensurate_modulus_rejected():
    with pytest.raises(DomainError, match="commensurate"):
        tr.tile_torus(tr.TorusSpec(2.0, 1.0), n=8)


def test_report_keys():
    rep = tr.torus_report(SQUARE)
    assert rep["modulus"] == pytest.approx(1.0)
    assert rep["villarceau_angle"] == pytest.approx(90.0, abs=0.01)
    assert rep["meridian_angle"] == pytest.approx(45.0, abs=0.05)
