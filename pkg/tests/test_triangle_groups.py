import numpy as np
import pytest
import sympy as sp

from conformal_tiling import hyperbolic as hyp
from conformal_tiling import triangle_groups as tg
from conformal_tiling.errors import DomainError


def coxeter_growth(p, q, r, n):
    """Word-length counts of an infinite (p, q, r) reflection group.

    1/W(1/t) is the alternating sum of 1/W_T(t) over the finite special
    subgroups: the trivial one, three of order 2, three dihedral ones.
    """
    t = sp.symbols("t")
    alt = 1 - 3 / (1 + t) + sum(1 / ((1 + t) * _qint(m, t)) for m in (p, q, r))
    ser = sp.series(sp.cancel(1 / alt.subs(t, 1 / t)), t, 0, n).removeO()
    return [int(ser.coeff(t, k)) for k in range(n)]


def _qint(m, t):
    return sum(t**k for k in range(m))


def octahedral_growth():
    # Poincare polynomial of the group with degrees 2, 4, 6
    t = sp.symbols("t")
    poly = sp.Poly(sp.expand(_qint(2, t) * _qint(4, t) * _qint(6, t)), t)
    return [int(c) for c in reversed(poly.all_coeffs())]


@pytest.mark.parametrize(
    "sig, geometry",
    [((2, 3, 4), tg.SPHERE), ((2, 3, 5), tg.SPHERE), ((2, 4, 4), tg.EUCLIDEAN), ((3, 3, 3), tg.EUCLIDEAN),
     ((2, 3, 6), tg.EUCLIDEAN), ((2, 4, 6), tg.HYPERBOLIC), ((2, 3, 7), tg.HYPERBOLIC)],
)
def test_classify(sig, geometry):
    assert tg.classify(sig) == geometry


def test_signature_validation():
    with pytest.raises(DomainError):
        tg.Signature(1, 4, 6)
    with pytest.raises(DomainError):
        tg.generate_tiling((2, 4, 6), -1)


def test_base_triangle_sides_hyperbolic():
    seed = tg.base_triangle((2, 4, 6))
    np.testing.assert_allclose(
        tg.side_lengths(seed.vertices, tg.HYPERBOLIC), np.arccosh(np.sqrt([3.0, 2.0, 1.5])), atol=1e-12
    )


def test_base_triangle_euclidean_right_isoceles():
    V = tg.base_triangle((2, 4, 4)).vertices
    np.testing.assert_allclose(np.degrees(tg.tile_angles(V, tg.EUCLIDEAN)), [90, 45, 45], atol=1e-12)
    assert tg.side_lengths(V, tg.EUCLIDEAN).min() == pytest.approx(1.0)


def test_base_triangle_spherical_area():
    V = tg.base_triangle((2, 3, 4)).vertices
    assert tg.tile_area(V, tg.SPHERE) == pytest.approx(np.pi / 12, abs=1e-12)
    np.testing.assert_allclose(np.linalg.norm(V, axis=1), 1.0)


def test_depth_zero():
    t = tg.generate_tiling((2, 4, 4), 0)
    assert len(t) == 1
    assert tg.ring_counts(t) == [1]


def test_octahedral_closure():
    t = tg.generate_tiling((2, 3, 4), 30)
    assert len(t) == 48
    area = sum(tg.tile_area(x.vertices, tg.SPHERE) for x in t)
    assert area == pytest.approx(4 * np.pi, abs=1e-8)
    colors = [x.color for x in t]
    assert colors.count(0) == 24 and colors.count(1) == 24


@pytest.mark.parametrize("sig, depth", [((2, 3, 4), 9), ((2, 4, 4), 10), ((2, 4, 6), 9), ((2, 3, 7), 8)])
def test_angles_and_color_alternation(sig, depth):
    t = tg.generate_tiling(sig, depth)
    want = np.array(t.signature.angles)
    for x in t:
        np.testing.assert_allclose(tg.tile_angles(x.vertices, t.geometry), want, atol=1e-9)
    nbrs = tg.adjacency(t)
    for i, row in enumerate(nbrs):
        for j in row[row >= 0]:
            assert t[i].color != t[j].color


def test_hyperbolic_vertices_stay_on_hyperboloid():
    t = tg.generate_tiling((2, 4, 6), 10)
    P = np.concatenate([x.vertices for x in t])
    assert np.max(np.abs(hyp.mdot(P, P) + 1.0)) < 1e-8


def test_prefix_idempotence():
    a = tg.generate_tiling((2, 4, 6), 6)
    b = tg.generate_tiling((2, 4, 6), 9)
    assert len(b) > len(a)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.vertices, y.vertices)
        assert x.color == y.color and x.word_length == y.word_length


@pytest.mark.parametrize("sig, n", [((2, 4, 6), 13), ((2, 3, 7), 12)])
def test_ring_counts_match_growth_series(sig, n):
    counts = tg.ring_counts(tg.generate_tiling(sig, n - 1))
    assert counts == coxeter_growth(*sig, n)


def test_octahedral_ring_counts():
    want = octahedral_growth()
    assert sum(want) == 48
    assert tg.ring_counts(tg.generate_tiling((2, 3, 4), 20)) == want


def test_euclidean_rings_grow_linearly():
    counts = tg.ring_counts(tg.generate_tiling((2, 4, 4), 21))
    ratios = tg.growth_ratios(counts)[10:20]
    assert np.all((0.8 <= ratios) & (ratios <= 1.3))


def test_hyperbolic_rings_grow_exponentially():
    counts = tg.ring_counts(tg.generate_tiling((2, 4, 6), 14))
    ratios = tg.growth_ratios(counts)
    # the exponential rate of the growth series exceeds 1.3 and the ratios climb toward it
    assert np.all(ratios[5:13] > 1.3)
    assert counts[-1] > 30 * counts[3]


def test_tile_cap():
    with pytest.raises(DomainError, match="cap"):
        tg.generate_tiling((2, 4, 6), 20, max_tiles=100)


def test_svg_output(tmp_path):
    t = tg.generate_tiling((2, 4, 6), 8)
    path = tmp_path / "disk.svg"
    tg.export_tiling_svg(t, path)
    text = path.read_text()
    assert text.count("<polygon") == len(t)
    assert "<circle" in text and "#1e1e1e" in text
    again = tmp_path / "again.svg"
    tg.export_tiling_svg(t, again)
    assert again.read_bytes() == path.read_bytes()
    grid = tmp_path / "grid.svg"
    tg.export_tiling_svg(tg.generate_tiling((2, 4, 4), 6), grid)
    assert "<circle" not in grid.read_text()


def test_empty_tiling_svg(tmp_path):
    path = tmp_path / "empty.svg"
    tg.export_tiling_svg(None, path)
    text = path.read_text()
    assert text.startswith("<?xml") and text.rstrip().endswith("</svg>")
    assert "<polygon" not in text


def test_tiling_to_dict():
    d = tg.tiling_to_dict(tg.generate_tiling((2, 3, 4), 2))
    assert d["geometry"] == "sphere" and d["signature"] == [2, 3, 4]
    assert len(d["tiles"]) == 1 + 3 + 5
