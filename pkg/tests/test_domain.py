import math

import mpmath
import numpy as np
import pytest

from conftest import built, original_generators
from hypdomain import cubature
from hypdomain.domain import (
    HalfSpace,
    WordEnumerator,
    bisector_halfspace,
    build_domain,
    initial_polyhedron,
    injectivity_radius,
    intersect_halfspace,
    max_vertex_distance,
    replace_generator,
    spine_radius,
    volume,
)
from hypdomain.errors import FixesBasepoint, GeneratorNotFace, NoEdges, NotVerified, UnboundedDomain
from hypdomain.hypcore import (
    ORIGIN,
    apply,
    dist,
    element,
    from_klein,
    identity,
    inverse,
    loxodromic,
    same_matrix,
    to_klein,
)
from hypdomain.io import load_fixture


def plane(normal, offset, element=None):
    n = np.asarray(normal, dtype=float)
    return HalfSpace(np.concatenate([[offset], -n]), element, n, float(offset))


# ------------------------------------------------------------ half-spaces

def test_bisector_of_unit_translation():
    hs = bisector_halfspace(ORIGIN, loxodromic(1.0))
    assert np.allclose(hs.klein_normal, [0, 0, 1])
    assert abs(hs.klein_offset - math.tanh(0.5)) < 1e-12
    mirror = bisector_halfspace(ORIGIN, inverse(loxodromic(1.0)))
    assert np.allclose(mirror.klein_normal, [0, 0, -1])
    assert abs(mirror.klein_offset - hs.klein_offset) < 1e-12


def test_bisector_membership():
    g = element([[1.2 + 0.3j, 0.5], [0.1j, 0.9]])
    x = from_klein([0.1, 0.2, -0.1])
    hs = bisector_halfspace(x, g)
    assert hs.contains_klein(to_klein(x)).all()
    assert not hs.contains_klein(to_klein(apply(g, x))).any()
    # points of the plane are equidistant from x and g(x)
    u = to_klein(x) + 0.0
    t = (hs.klein_offset - hs.klein_normal @ u) / (hs.klein_normal @ hs.klein_normal)
    y = from_klein(u + t * hs.klein_normal)
    assert abs(dist(x, y) - dist(apply(g, x), y)) < 1e-9


def test_bisector_rejects_fixed_basepoint():
    with pytest.raises(FixesBasepoint):
        bisector_halfspace(ORIGIN, loxodromic(0.0, 0.7))


# ------------------------------------------------------------ clipping

def test_cut_outside_is_noop():
    cube = initial_polyhedron()
    poly, new = intersect_halfspace(cube, plane([0, 0, 1], 2.0))
    assert poly is cube and not new


def test_cut_cube_in_half():
    cube = initial_polyhedron()
    poly, new = intersect_halfspace(cube, plane([0, 0, 1], 0.0))
    assert new
    assert len(poly.vertices) == 8 and len(poly.faces) == 6
    on_plane = np.abs(poly.vertices[:, 2]) < 1e-15
    assert on_plane.sum() == 4
    assert poly.euler_characteristic() == 2
    assert np.all(poly.vertices[:, 2] <= 1e-15)


def test_corner_cut_below_threshold_is_near_miss():
    cube = initial_polyhedron()
    h = 1 - 1e-6
    n = np.ones(3) / math.sqrt(3)
    poly, new = intersect_halfspace(cube, plane(n, 3 * h / math.sqrt(3) - 1e-9))
    assert not new
    assert len(poly.near_misses) == 1
    assert len(poly.vertices) == 8


def test_clipping_against_euclidean_oracle(rng):
    """Random cuts through a cube: vertex set equals brute-force triple-plane intersections."""
    for _ in range(5):
        poly = initial_polyhedron()
        planes = [(np.array(v, dtype=float), 1 - 1e-6) for v in np.vstack([np.eye(3), -np.eye(3)])]
        for _ in range(6):
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            c = rng.uniform(0.1, 0.6)
            poly, _ = intersect_halfspace(poly, plane(n, c))
            planes.append((n, c))
        ns = np.array([p[0] for p in planes])
        cs = np.array([p[1] for p in planes])
        oracle = []
        k = len(planes)
        for i in range(k):
            for j in range(i + 1, k):
                for m in range(j + 1, k):
                    A = ns[[i, j, m]]
                    if abs(np.linalg.det(A)) < 1e-9:
                        continue
                    v = np.linalg.solve(A, cs[[i, j, m]])
                    if np.all(ns @ v <= cs + 1e-9):
                        oracle.append(v)
        oracle = np.unique(np.round(np.array(oracle), 9), axis=0)
        got = np.unique(np.round(poly.vertices, 9), axis=0)
        assert got.shape == oracle.shape and np.allclose(got, oracle, atol=1e-8)
        assert poly.euler_characteristic() == 2


# ------------------------------------------------------------ cyclic group

def test_single_generator_slab():
    poly, stats = build_domain([loxodromic(1.0)], max_word_length=4)
    real = [f for f in poly.faces if not f.synthetic]
    assert len(real) == 2
    offsets = sorted(f.halfspace.klein_offset for f in real)
    assert np.allclose(offsets, [math.tanh(0.5)] * 2)
    assert not stats.converged
    assert stats.infinite_volume
    assert abs(stats.injectivity_radius - 0.5) < 1e-12
    with pytest.raises(UnboundedDomain):
        volume(poly)


def test_empty_generator_list():
    with pytest.raises(ValueError):
        build_domain([])


def test_no_edges():
    cube = initial_polyhedron()
    empty = type(cube)(cube.basepoint, np.zeros((0, 3)), ())
    with pytest.raises(NoEdges):
        spine_radius(empty)


# ------------------------------------------------------------ fixtures

def test_fixture_domain_combinatorics(fixture_name):
    gf, poly, stats = built(fixture_name)
    ref = gf.extra["reference_dirichlet"]
    assert poly.converged
    assert stats.euler_characteristic == 2
    assert (stats.n_vertices, stats.n_edges, stats.n_faces) == (ref["vertices"], ref["edges"], ref["faces"])
    assert stats.n_ideal_vertices == ref["ideal_vertices"]
    assert all(poly.generators_present)


def test_pairings_involutive(fixture_name):
    _, poly, _ = built(fixture_name)
    for k, f in enumerate(poly.faces):
        assert poly.faces[f.paired_face].paired_face == k
        prod = f.element.matrix @ poly.faces[f.paired_face].element.matrix
        assert same_matrix(prod, np.eye(2), 1e-9)


def test_pairing_geometry(fixture_name):
    _, poly, _ = built(fixture_name)
    x = poly.basepoint
    for f in poly.faces:
        # origin basepoint: distance to the Klein plane n.u = c is atanh(c)
        d_plane = math.atanh(f.halfspace.klein_offset)
        assert abs(dist(x, apply(f.element, x)) - 2 * d_plane) < 1e-9


def test_radius_ordering(fixture_name):
    _, poly, stats = built(fixture_name)
    assert 0 < stats.injectivity_radius <= stats.spine_radius <= stats.max_vertex_distance


def test_injectivity_radius_matches_reference(fixture_name):
    gf, _, stats = built(fixture_name)
    assert abs(stats.injectivity_radius - gf.extra["reference_dirichlet"]["in_radius"]) < 1e-9


def test_spine_radius_matches_reference_where_definitions_agree():
    # the reference tool uses a different edge-distance convention on the Weeks domain
    for name in ("m003_m2_3", "figure8"):
        gf, _, stats = built(name)
        assert abs(stats.spine_radius - gf.extra["reference_dirichlet"]["spine_radius"]) < 1e-6


def _sampled_spine_radius(poly, n=400):
    x = poly.basepoint
    best = 0.0
    verts = poly.vertices.copy()
    norms = np.linalg.norm(verts, axis=1)
    verts[norms >= cubature.IDEAL_NORM] *= (cubature.IDEAL_NORM / norms[norms >= cubature.IDEAL_NORM])[:, None]
    for i, j, _, _ in poly.edges:
        p, q = verts[i], verts[j]

        def d(t):
            return float(dist(x, from_klein(p + t * (q - p))))

        ts = np.linspace(0, 1, n)
        vals = [d(t) for t in ts]
        k = int(np.argmin(vals))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, n - 1)]
        for _ in range(80):
            a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
            if d(a) < d(b):
                hi = b
            else:
                lo = a
        best = max(best, min(vals[k], d(0.5 * (lo + hi))))
    return best


def test_spine_radius_sampling_oracle(fixture_name):
    _, poly, stats = built(fixture_name)
    assert abs(_sampled_spine_radius(poly) - stats.spine_radius) < 1e-6


def test_max_vertex_distance_bruteforce(fixture_name):
    _, poly, stats = built(fixture_name)
    finite = [v for v in poly.vertices if np.linalg.norm(v) < cubature.IDEAL_NORM]
    brute = max(math.acosh(1 / math.sqrt(1 - v @ v)) for v in finite)
    assert abs(brute - stats.max_vertex_distance) < 1e-9
    assert abs(stats.max_vertex_distance - max_vertex_distance(poly)) == 0


def test_injectivity_radius_monotone_during_build(fixture_name):
    gf, poly, stats = built(fixture_name)
    history = []
    build_domain(gf.generators, compute_volume=False, on_cut=lambda g, p: history.append(injectivity_radius(p)))
    assert len(history) >= len(poly.faces)
    assert all(b <= a + 1e-15 for a, b in zip(history, history[1:]))
    assert history[-1] == stats.injectivity_radius


def test_convergence_certificate(fixture_name):
    """Two more word lengths of cuts add no face to the converged domain."""
    gf, poly, stats = built(fixture_name)
    enum = WordEnumerator(gf.generators)
    limit = 2 * stats.max_vertex_distance + 1e-9
    n = stats.word_length_reached + 2
    current = poly
    for _ in range(n):
        for g in enum.next_level():
            if dist(ORIGIN, apply(g, ORIGIN)) > limit:
                continue
            current, new = intersect_halfspace(current, bisector_halfspace(ORIGIN, g))
            assert not new
    assert len(current.faces) == len(poly.faces)


def test_dirichlet_membership(fixture_name, rng):
    _, poly, _ = built(fixture_name)
    x = poly.basepoint
    lo, hi = poly.vertices.min(axis=0), poly.vertices.max(axis=0)
    pts = []
    while len(pts) < 1000:
        u = rng.uniform(lo, hi, size=(4000, 3))
        u = u[(np.linalg.norm(u, axis=1) < 0.999) & poly.contains(u)]
        pts.extend(u)
    ys = from_klein(np.array(pts[:1000]))
    dx = dist(x, ys)
    for g in poly.face_elements():
        assert np.all(dx <= dist(apply(g, x), ys) + 1e-9)


# ------------------------------------------------------------ volume

def test_volume_matches_reference(fixture_name):
    gf, poly, stats = built(fixture_name)
    assert abs(stats.volume - gf.reference_volume) / gf.reference_volume < 1e-9
    assert stats.volume_error < 1e-6


def test_small_tetrahedron_is_nearly_euclidean():
    tet = 1e-3 * np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    val, _ = cubature.integrate_tetrahedra(tet[None])
    assert abs(val / (1e-9 / 6) - 1) < 0.01


def test_regular_ideal_tetrahedron():
    verts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3)
    tets = [np.vstack([np.zeros(3), verts[[a, b, c]]]) for a, b, c in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]]
    val, err = cubature.integrate_tetrahedra(np.array(tets))
    mpmath.mp.dps = 30
    exact = float(3 * mpmath.clsin(2, 2 * mpmath.pi / 3) / 2)
    assert abs(val - exact) < 1e-8
    assert err < 1e-8


def _polyhedral_ball(radius, n):
    k = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * k / n)
    th = math.pi * (1 + 5 ** 0.5) * k
    normals = np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])
    poly = initial_polyhedron()
    for nrm in normals:
        # any non-synthetic tag will do; volume() only looks at the geometry
        poly, _ = intersect_halfspace(poly, plane(nrm, radius, identity()))
    return poly


def test_volume_of_refined_ball_approaches_closed_form():
    exact = math.pi * (math.sinh(2.0) - 2.0)
    errs = []
    for n in (40, 120, 300):
        poly = _polyhedral_ball(math.tanh(1.0), n)
        assert poly.n_synthetic == 0
        errs.append(volume(poly, rel_tol=1e-7)[0] / exact - 1)
    assert all(e > 0 for e in errs)  # circumscribed polyhedra
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.03


# ------------------------------------------------------------ generators

def test_generator_not_face_reports_eliminating_word():
    with pytest.raises(GeneratorNotFace) as info:
        build_domain(original_generators("weeks"))
    assert abs(info.value.index) == 2
    assert info.value.eliminated_by == "cB"


def test_replace_generator_restores_group():
    gens = original_generators("weeks")
    rep = replace_generator(gens, 2, "cB")
    assert rep.old_generator_word == (-2, 3)
    poly, stats = build_domain(rep.generators)
    assert abs(stats.volume - load_fixture("weeks").reference_volume) < 1e-9


def test_replace_generator_edge_cases():
    gens = original_generators("weeks")
    rep = replace_generator(gens, None, "a")
    assert rep.generators == gens
    with pytest.raises(IndexError):
        replace_generator(gens, 4, "a")
    # a and c already generate the group, so dropping b is harmless
    assert replace_generator(gens, 2, "aA").old_generator_word
    with pytest.raises(NotVerified):
        replace_generator([loxodromic(1.0), loxodromic(2.0, 0.1)], 2, "a", max_search_length=4)


def test_replacement_word_found_by_search():
    rep = replace_generator([loxodromic(1.0), element([[1, 1], [0, 1]])], 2, "ab")
    assert rep.old_generator_word == (-1, 2)
