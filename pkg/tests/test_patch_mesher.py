import numpy as np
import pytest

from conformal_tiling.errors import DomainError, MeshTopologyError
from conformal_tiling.implicit_surfaces import eval_field
from conformal_tiling.mesh import TriangleMesh
from conformal_tiling.patch_mesher import (
    CORNER_ANGLES,
    PatchMesh,
    RadialChart,
    chain_length,
    mesh_patch,
    mesh_quality,
    side_chains,
    wall_distances,
)


def test_chart_points_lie_on_contour_and_walls():
    chart = RadialChart(-0.3)
    s, v = np.meshgrid(np.linspace(0, 1, 9), np.linspace(-1, 1, 11), indexing="ij")
    p = chart.points(s, v)
    assert np.max(np.abs(eval_field(p) - (-0.3))) < 1e-12
    dxy, dyz, dz = wall_distances(p)
    assert np.max(dz[0]) < 1e-15
    assert np.max(dyz[-1]) < 1e-12
    assert np.max(dxy[:, [0, -1]]) < 1e-12
    # the wedge x >= y >= z >= 0
    assert np.all(p[..., 0] >= p[..., 1] - 1e-12)
    assert np.all(p[..., 1] >= p[..., 2] - 1e-12)
    assert np.all(p[..., 2] >= -1e-15)


@pytest.mark.parametrize("c", [-1.0, 1.0, 1.5])
def test_chart_rejects_singular_levels(c):
    with pytest.raises(DomainError):
        RadialChart(c)


def test_mesh_patch_rejects_bad_input():
    with pytest.raises(DomainError):
        mesh_patch(-1.2)
    with pytest.raises(DomainError):
        mesh_patch(0.0, target_edge_length=0.0)


def test_corners_at_zero():
    p = mesh_patch(0.0, 0.05)
    v = p.mesh.vertices
    tv = [np.sqrt((2 - np.sqrt(2)) / 4), np.sqrt((2 + np.sqrt(2)) / 4)]
    np.testing.assert_allclose(v[p.corners["V1"]], [tv[0]] * 3, atol=1e-12)
    np.testing.assert_allclose(v[p.corners["V2"]], [tv[1]] * 3, atol=1e-12)
    np.testing.assert_allclose(v[p.corners["E1"]], [0.5, 0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(v[p.corners["E2"]], [np.sqrt(3) / 2, np.sqrt(3) / 2, 0.0], atol=1e-12)
    chains = side_chains(p)
    assert chains["TOP"][0] == p.corners["V1"] and chains["TOP"][-1] == p.corners["V2"]


@pytest.mark.parametrize("c", [-0.4, -0.2411, -0.1, 0.0])
def test_default_patch_invariants(c):
    p = mesh_patch(c)
    m = p.mesh
    assert m.euler_characteristic() == 1
    assert len(m.boundary_loops()) == 1
    q = mesh_quality(p)
    assert q.max_residual < 1e-9
    assert q.min_angle >= 15.0
    assert 0.5 * 0.02 <= q.median_edge <= 2.0 * 0.02
    assert q.degenerate_faces == ()
    v = m.vertices
    for label in ("V1", "V2"):
        dxy, dyz, _ = wall_distances(v[p.corners[label]])
        assert dxy < 1e-9 and dyz < 1e-9
    for label in ("E1", "E2"):
        dxy, _, dz = wall_distances(v[p.corners[label]])
        assert dxy < 1e-9 and dz < 1e-9
    # no corner on the face axis
    assert all(np.linalg.norm(v[i][1:]) > 1e-3 for i in p.corners.values())


def test_side_chains_partition_boundary(ref_patch):
    chains = side_chains(ref_patch)
    (loop,) = ref_patch.mesh.boundary_loops()
    interior = sum(len(ch) - 2 for ch in chains.values())
    assert interior + 4 == len(loop)
    for label, plane in (("TOP", 1), ("BOTTOM", 2), ("LEFT", 0), ("RIGHT", 0)):
        d = np.array(wall_distances(ref_patch.mesh.vertices[chains[label]]))[plane]
        assert d.max() < 1e-9


def test_left_is_inner_side(ref_patch):
    chains = side_chains(ref_patch)
    v = ref_patch.mesh.vertices
    assert np.linalg.norm(v[chains["LEFT"]], axis=1).mean() < np.linalg.norm(v[chains["RIGHT"]], axis=1).mean()


def test_faces_oriented_along_gradient(ref_patch):
    from conformal_tiling.implicit_surfaces import eval_gradient

    m = ref_patch.mesh
    tri = m.vertices[m.faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    assert np.all(np.einsum("ij,ij->i", n, eval_gradient(tri.mean(axis=1))) > 0)


def test_refinement_consistency():
    a, b = mesh_patch(-0.2411, 0.02), mesh_patch(-0.2411, 0.01)
    ca, cb = side_chains(a), side_chains(b)
    for k in ca:
        la = chain_length(a.mesh.vertices, ca[k])
        lb = chain_length(b.mesh.vertices, cb[k])
        assert abs(la / lb - 1.0) < 0.005, k


def test_near_pinch_level_meshes_at_fine_resolution():
    p = mesh_patch(-0.9, 0.02)
    assert p.mesh.euler_characteristic() == 1


def test_tampered_patch_with_three_corners():
    p = mesh_patch(0.0, 0.1)
    corners = dict(p.corners)
    del corners["E2"]
    bad = PatchMesh(p.mesh, corners, p.c)
    with pytest.raises(MeshTopologyError):
        side_chains(bad)


def test_ambiguous_plane_membership_names_vertex():
    p = mesh_patch(0.0, 0.1)
    chains = side_chains(p)
    v = np.array(p.mesh.vertices)
    victim = int(chains["TOP"][len(chains["TOP"]) // 2])
    v[victim] = [0.6, 0.6, 0.6]  # on x=y as well as y=z
    bad = PatchMesh(TriangleMesh(v, p.mesh.faces), p.corners, p.c)
    with pytest.raises(MeshTopologyError, match=str(victim)):
        side_chains(bad)


def test_quality_of_single_triangles():
    eq = TriangleMesh([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]], [[0, 1, 2]])
    assert mesh_quality(eq).min_angle == pytest.approx(60.0)
    flat = TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], [[0, 1, 2], [0, 1, 3]])
    assert mesh_quality(flat).degenerate_faces == (0,)


def test_corner_angle_targets():
    assert CORNER_ANGLES["V1"] == pytest.approx(np.pi / 3)
    assert CORNER_ANGLES["E2"] == pytest.approx(np.pi / 2)
