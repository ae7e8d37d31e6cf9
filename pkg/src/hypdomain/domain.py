"""Approximate Dirichlet domains as intersections of bisector half-spaces.

Combinatorics are handled in the Klein model, where hyperbolic planes are
Euclidean planes and the polyhedron is an ordinary convex polytope; metric
quantities are computed on the hyperboloid.

The construction starts from the Klein cube ``[-1 + delta, 1 - delta]^3``
(whose faces are marked synthetic) and cuts it by the bisector of ``x`` and
``g(x)`` for group elements ``g`` enumerated breadth first by word length.
It stops at the first word length that adds no face once every synthetic
face is gone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import cubature
from .errors import (
    DegenerateCut,
    FixesBasepoint,
    GeneratorNotFace,
    NoEdges,
    NotVerified,
    UnboundedDomain,
)
from .hypcore import (
    DEFAULT_TOL,
    ORIGIN,
    MoebiusElement,
    Tolerance,
    apply,
    apply_many,
    dist,
    evaluate_word,
    from_klein,
    identity,
    inverse,
    minkowski_dot,
    parse_word,
    to_klein,
    word_to_string,
)
from .wordprob import ElementIndex, matrix_verifier

log = logging.getLogger(__name__)

CUBE_DELTA = 1e-6
IDEAL_NORM = cubature.IDEAL_NORM
MIN_FACE_DIAMETER = 1e-7


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """``{y : <y, normal> >= 0}``, equivalently ``{u : klein_normal . u <= klein_offset}``.

    ``element`` is ``None`` for the synthetic faces of the starting cube.
    """

    normal: np.ndarray
    element: Optional[MoebiusElement]
    klein_normal: np.ndarray
    klein_offset: float

    @property
    def synthetic(self) -> bool:
        return self.element is None

    def contains_klein(self, u, slack: float = 0.0):
        return np.asarray(u) @ self.klein_normal <= self.klein_offset + slack


def _klein_plane(v: np.ndarray):
    vs = v[1:]
    norm = float(np.linalg.norm(vs))
    return -vs / norm, -float(v[0]) / norm


def bisector_halfspace(x, g: MoebiusElement, tol: Tolerance = DEFAULT_TOL) -> HalfSpace:
    """Points at least as close to ``x`` as to ``g(x)``."""
    x = np.asarray(x, dtype=float)
    gx = apply(g, x)
    if float(dist(x, gx)) <= tol.eps_geom:
        raise FixesBasepoint(f"element {word_to_string(g.word)!r} (almost) fixes the basepoint")
    return _bisector_from_image(x, g, gx)


def _bisector_from_image(x, g, gx) -> HalfSpace:
    v = x - gx
    n, c = _klein_plane(v)
    return HalfSpace(v, g, n, c)


def _synthetic_halfspace(axis: int, sign: float) -> HalfSpace:
    n = np.zeros(3)
    n[axis] = sign
    c = 1.0 - CUBE_DELTA
    # Minkowski normal of the plane n.u = c (any positive multiple works)
    v = np.concatenate([[c], -n])
    return HalfSpace(v, None, n, c)


@dataclass(frozen=True, eq=False)
class Face:
    halfspace: HalfSpace
    vertices: tuple  # cycle, counter-clockwise seen from outside
    paired_face: Optional[int] = None

    @property
    def element(self):
        return self.halfspace.element

    @property
    def synthetic(self) -> bool:
        return self.halfspace.element is None


@dataclass(frozen=True, eq=False)
class DirichletPolyhedron:
    """Convex polyhedron in the Klein ball with its basepoint and face pairings."""

    basepoint: np.ndarray
    vertices: np.ndarray  # (V, 3) Klein coordinates
    faces: tuple
    near_misses: tuple = ()
    generators_present: tuple = ()
    word_length_reached: int = 0
    converged: bool = False

    @property
    def ideal(self) -> np.ndarray:
        """Vertices on (or, numerically, beyond) the sphere at infinity."""
        return np.linalg.norm(self.vertices, axis=1) >= IDEAL_NORM

    @property
    def n_synthetic(self) -> int:
        return sum(f.synthetic for f in self.faces)

    @property
    def edges(self) -> list:
        """``(i, j, face_a, face_b)`` with ``i < j``; every edge lies on exactly two faces."""
        return _edges(self.faces)

    def euler_characteristic(self) -> int:
        used = {v for f in self.faces for v in f.vertices}
        return len(used) - len(self.edges) + len(self.faces)

    def face_elements(self) -> list:
        return [f.element for f in self.faces if not f.synthetic]

    def contains(self, u, slack: float = 0.0) -> np.ndarray:
        """Klein points (n, 3) lying in the polyhedron."""
        u = np.atleast_2d(u)
        ns = np.array([f.halfspace.klein_normal for f in self.faces])
        cs = np.array([f.halfspace.klein_offset for f in self.faces])
        return np.all(u @ ns.T <= cs + slack, axis=1)


@dataclass(frozen=True)
class DomainStats:
    injectivity_radius: float
    spine_radius: float
    volume: Optional[float]
    volume_error: Optional[float]
    max_vertex_distance: float
    word_length_reached: int
    converged: bool
    n_vertices: int
    n_edges: int
    n_faces: int
    n_ideal_vertices: int

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def infinite_volume(self) -> bool:
        """The domain reaches the sphere at infinity in more than isolated points."""
        return self.volume is not None and math.isinf(self.volume)


def _edges(faces) -> list:
    seen = {}
    for fi, f in enumerate(faces):
        cyc = f.vertices
        for k in range(len(cyc)):
            a, b = cyc[k], cyc[(k + 1) % len(cyc)]
            seen.setdefault((min(a, b), max(a, b)), []).append(fi)
    return [(i, j, fs[0], fs[1] if len(fs) > 1 else -1) for (i, j), fs in sorted(seen.items())]


def initial_polyhedron(x=ORIGIN) -> DirichletPolyhedron:
    """The synthetic Klein cube ``[-1 + delta, 1 - delta]^3``."""
    h = 1.0 - CUBE_DELTA
    verts = np.array([[sx, sy, sz] for sx in (-h, h) for sy in (-h, h) for sz in (-h, h)])

    def vid(sx, sy, sz):
        return (sx > 0) * 4 + (sy > 0) * 2 + (sz > 0)

    faces = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            hs = _synthetic_halfspace(axis, sign)
            ids = [k for k in range(8) if verts[k, axis] * sign > 0]
            faces.append(Face(hs, tuple(_order_cycle(verts[ids], ids, hs.klein_normal))))
    return DirichletPolyhedron(np.asarray(x, dtype=float), verts, tuple(faces))


def _order_cycle(points: np.ndarray, ids: list, normal: np.ndarray) -> list:
    centre = points.mean(axis=0)
    e1 = points[0] - centre
    if np.linalg.norm(e1) < 1e-300:
        return ids
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    ang = np.arctan2((points - centre) @ e2, (points - centre) @ e1)
    return [ids[k] for k in np.argsort(ang)]


def _chain_cycle(directed: dict):
    """Follow ``next`` pointers; ``None`` if they do not form one cycle."""
    if not directed:
        return None
    start = min(directed)
    cyc = [start]
    cur = directed[start]
    while cur != start:
        if cur not in directed or len(cyc) > len(directed):
            return None
        cyc.append(cur)
        cur = directed[cur]
    return cyc if len(cyc) == len(directed) else None


def _clip(poly: DirichletPolyhedron, hs: HalfSpace, tol: Tolerance):
    """Core of :func:`intersect_halfspace`; returns (poly, new_face, eliminated face indices)."""
    verts = poly.vertices
    s = verts @ hs.klein_normal - hs.klein_offset
    eps = tol.eps_equal
    out = s > eps
    if not out.any():
        return poly, False, []
    on = np.abs(s) <= eps
    new_pts: list = []
    edge_cache: dict = {}
    n_old = len(verts)

    def cut_point(i, j):
        key = (min(i, j), max(i, j))
        if key not in edge_cache:
            t = s[i] / (s[i] - s[j])
            new_pts.append(verts[i] + t * (verts[j] - verts[i]))
            edge_cache[key] = n_old + len(new_pts) - 1
        return edge_cache[key]

    def on_plane(k):
        return k >= n_old or on[k]

    new_faces = []
    eliminated = []
    directed = {}
    for fi, f in enumerate(poly.faces):
        cyc = f.vertices
        if not any(out[k] for k in cyc):
            clipped = list(cyc)
        else:
            clipped = []
            for k in range(len(cyc)):
                i, j = cyc[k], cyc[(k + 1) % len(cyc)]
                if not out[i]:
                    clipped.append(i)
                if (out[i] and s[j] < -eps) or (s[i] < -eps and out[j]):
                    clipped.append(cut_point(i, j))
        if len(clipped) < 3 or all(on_plane(k) for k in clipped):
            eliminated.append(fi)
            continue
        for k in range(len(clipped)):
            a, b = clipped[k], clipped[(k + 1) % len(clipped)]
            if on_plane(a) and on_plane(b):
                # the new face runs along this edge in the opposite direction
                directed[b] = a
        new_faces.append((fi, f, tuple(clipped)))

    all_pts = np.vstack([verts, np.array(new_pts).reshape(-1, 3)])
    cycle = _chain_cycle(directed)
    if cycle is None:
        ids = sorted({k for _, _, c in new_faces for k in c if on_plane(k)})
        if len(ids) >= 3:
            cycle = _order_cycle(all_pts[ids], ids, hs.klein_normal)
    if cycle is None or len(cycle) < 3:
        raise DegenerateCut("cut leaves no 2-dimensional face")
    pts = all_pts[cycle]
    diam = float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)))
    if diam <= MIN_FACE_DIAMETER:
        raise DegenerateCut(f"new face diameter {diam:.3g} below threshold")

    faces = [replace(f, vertices=c, paired_face=None) for _, f, c in new_faces]
    faces.append(Face(hs, tuple(cycle)))
    # drop unused vertices and renumber
    used = sorted({k for f in faces for k in f.vertices})
    remap = {old: new for new, old in enumerate(used)}
    faces = tuple(replace(f, vertices=tuple(remap[k] for k in f.vertices)) for f in faces)
    result = replace(poly, vertices=all_pts[used], faces=faces)
    return result, True, eliminated


def intersect_halfspace(poly: DirichletPolyhedron, hs: HalfSpace,
                        tol: Tolerance = DEFAULT_TOL):
    """Clip ``poly`` by ``hs``; returns ``(poly, new_face)``.

    A cut whose face would be degenerate (diameter below ``1e-7`` in Klein
    coordinates) is not applied and is recorded in ``near_misses``.
    """
    try:
        result, new_face, _ = _clip(poly, hs, tol)
    except DegenerateCut as exc:
        word = None if hs.element is None else word_to_string(hs.element.word)
        log.info("near miss for %s: %s", word, exc)
        return replace(poly, near_misses=poly.near_misses + ((word, str(exc)),)), False
    return result, new_face


# ---------------------------------------------------------------- metrics

def _lift(u: np.ndarray) -> np.ndarray:
    """Hyperboloid lift of Klein points, pulling ideal ones just inside the ball."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    n = np.linalg.norm(u, axis=1, keepdims=True)
    u = np.where(n >= IDEAL_NORM, u * (IDEAL_NORM / np.maximum(n, 1e-300)), u)
    return from_klein(u)


def injectivity_radius(poly: DirichletPolyhedron) -> float:
    """Half the smallest basepoint displacement over face-pairing elements."""
    els = poly.face_elements()
    if not els:
        return math.inf
    imgs = apply_many(np.stack([g.matrix for g in els]), poly.basepoint)
    return float(np.min(dist(poly.basepoint, imgs))) / 2


def distance_to_segments(x, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Distance from hyperboloid point ``x`` to geodesic segments ``[p_k, q_k]``."""
    pp = minkowski_dot(p, p)
    qq = minkowski_dot(q, q)
    pq = minkowski_dot(p, q)
    bx = minkowski_dot(p, x)
    by = minkowski_dot(q, x)
    det = pp * qq - pq * pq
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = (qq * bx - pq * by) / det
        beta = (pp * by - pq * bx) / det
        # degenerate segments (det = 0) give NaN here and fall back to the endpoints
        proj = -(alpha * bx + beta * by)  # -<x_L, x_L>
        inside = (alpha >= 0) & (beta >= 0) & (det < 0)
        d_foot = np.arccosh(np.sqrt(np.maximum(proj, 1.0)))
    d_end = np.minimum(dist(x, p), dist(x, q))
    return np.where(inside, np.minimum(d_foot, d_end), d_end)


def spine_radius(poly: DirichletPolyhedron) -> float:
    """Largest over edges of the distance from the basepoint to the edge."""
    edges = poly.edges
    if not edges:
        raise NoEdges("polyhedron has no edges")
    idx = np.array([(i, j) for i, j, _, _ in edges])
    lifted = _lift(poly.vertices)
    d = distance_to_segments(poly.basepoint, lifted[idx[:, 0]], lifted[idx[:, 1]])
    return float(np.max(d))


def max_vertex_distance(poly: DirichletPolyhedron) -> float:
    """Largest distance from the basepoint to a finite vertex."""
    finite = ~poly.ideal
    if not finite.any():
        return 0.0
    return float(np.max(dist(poly.basepoint, from_klein(poly.vertices[finite]))))


def _current_extent(poly: DirichletPolyhedron) -> float:
    """Max vertex distance, infinite while any vertex is ideal or outside the ball."""
    if np.any(np.linalg.norm(poly.vertices, axis=1) >= IDEAL_NORM):
        return math.inf
    return max_vertex_distance(poly)


def tetrahedra(poly: DirichletPolyhedron) -> np.ndarray:
    """Cone from the basepoint over a fan triangulation of each face, shape ``(T, 4, 3)``."""
    apex = to_klein(poly.basepoint)
    ideal = poly.ideal
    tets = []
    for f in poly.faces:
        cyc = list(f.vertices)
        # start the fan at an ideal vertex so fewer tetrahedra touch two of them
        starts = [k for k, v in enumerate(cyc) if ideal[v]]
        if starts:
            cyc = cyc[starts[0]:] + cyc[:starts[0]]
        for k in range(1, len(cyc) - 1):
            tets.append([apex, poly.vertices[cyc[0]], poly.vertices[cyc[k]], poly.vertices[cyc[k + 1]]])
    return np.array(tets)


def volume(poly: DirichletPolyhedron, quadrature_order: int = 6, rel_tol: float = 1e-10):
    """Hyperbolic volume and quadrature error estimate, ``(volume, error)``."""
    norms = np.linalg.norm(poly.vertices, axis=1)
    if np.any(norms > 1.0 + 1e-9) or poly.n_synthetic:
        raise UnboundedDomain("polyhedron is not contained in the closed Klein ball")
    verts = np.where(norms[:, None] >= IDEAL_NORM, poly.vertices / norms[:, None], poly.vertices)
    return cubature.integrate_tetrahedra(tetrahedra(replace(poly, vertices=verts)), rel_tol, quadrature_order)


def domain_stats(poly: DirichletPolyhedron, compute_volume: bool = True) -> DomainStats:
    vol = err = None
    if compute_volume:
        try:
            vol, err = volume(poly)
        except UnboundedDomain:
            vol, err = math.inf, math.nan
    edges = poly.edges
    return DomainStats(
        injectivity_radius=injectivity_radius(poly),
        spine_radius=spine_radius(poly) if edges else math.nan,
        volume=vol,
        volume_error=err,
        max_vertex_distance=max_vertex_distance(poly),
        word_length_reached=poly.word_length_reached,
        converged=poly.converged,
        n_vertices=len({v for f in poly.faces for v in f.vertices}),
        n_edges=len(edges),
        n_faces=len(poly.faces),
        n_ideal_vertices=int(np.sum(poly.ideal)),
    )


# ---------------------------------------------------------------- construction

def _pair_faces(poly: DirichletPolyhedron, tol: Tolerance) -> DirichletPolyhedron:
    same = matrix_verifier(tol)
    faces = list(poly.faces)
    inverses = [None if f.synthetic else inverse(f.element) for f in faces]
    paired = []
    for i, f in enumerate(faces):
        match = None
        if not f.synthetic:
            for j, other in enumerate(faces):
                if not other.synthetic and same(other.element, inverses[i]):
                    match = j
                    break
        paired.append(replace(f, paired_face=match))
    return replace(poly, faces=tuple(paired))


def generator_letters(generators: Sequence[MoebiusElement]) -> list:
    """Generators and inverses, tagged with signed 1-based indices."""
    letters = []
    for i, g in enumerate(generators, start=1):
        g = MoebiusElement(g.matrix, (i,), g.det_residual)
        letters.append(g)
        letters.append(inverse(g))
    return letters


class WordEnumerator:
    """Breadth-first enumeration of distinct group elements by word length.

    ``keep`` decides which newly found elements are extended at the next
    level (all of them by default).
    """

    def __init__(self, generators, x=ORIGIN, tol: Tolerance = DEFAULT_TOL):
        self.letters = generator_letters(generators)
        self._letter_mats = np.stack([g.matrix for g in self.letters])
        self.index = ElementIndex(x, matrix_verifier(tol), tol)
        self.index.add(identity())
        self.frontier = [identity()]
        self.length = 0

    def next_level(self, keep=None) -> list:
        if keep is not None:
            self.frontier = [g for g in self.frontier if keep(g)]
        cands = []
        if self.frontier:
            mats = np.stack([g.matrix for g in self.frontier])
            prods = mats[:, None] @ self._letter_mats[None]
            for a, g in enumerate(self.frontier):
                last = g.word[-1] if g.word else 0
                for b, s in enumerate(self.letters):
                    if s.word[0] == -last:
                        continue
                    cands.append(MoebiusElement(prods[a, b], g.word + s.word))
        new = [g for g, (_, ins) in zip(cands, self.index.add_many(cands)) if ins]
        self.length += 1
        self.frontier = new
        return new


def _is_closed(poly: DirichletPolyhedron) -> bool:
    """No synthetic faces left and every vertex in the closed Klein ball."""
    return poly.n_synthetic == 0 and not np.any(np.linalg.norm(poly.vertices, axis=1) > 1.0 + 1e-9)


def _generators_present(poly: DirichletPolyhedron, letters, tol: Tolerance) -> list:
    same = matrix_verifier(tol)
    els = poly.face_elements()
    return [any(same(e, g) for e in els) for g in letters]


def build_domain(generators: Sequence[MoebiusElement], x=ORIGIN, max_word_length: int = 16,
                 tol: Tolerance = DEFAULT_TOL, compute_volume: bool = True,
                 require_generators: bool = True, on_cut=None):
    """Approximate Dirichlet domain of the group generated by ``generators`` at ``x``.

    Returns ``(poly, stats)``.  ``poly.converged`` is False when
    ``max_word_length`` was reached before the stopping rule fired.
    ``on_cut(g, poly)`` is called after every cut that added a face.
    """
    if not generators:
        raise ValueError("at least one generator is required")
    if max_word_length < 1:
        raise ValueError("max_word_length must be positive")
    x = np.asarray(x, dtype=float)
    enum = WordEnumerator(generators, x, tol)
    gen_disp = max(float(dist(x, apply(g, x))) for g in enum.letters)
    poly = initial_polyhedron(x)
    eliminated_by = {}
    converged = False
    extent = math.inf

    disp = np.zeros(1)
    for n in range(1, max_word_length + 1):
        if n > 1:
            # elements far beyond the domain are not extended further
            bound = 2 * extent + 2 * gen_disp + tol.eps_geom
            enum.frontier = [g for g, d in zip(enum.frontier, disp) if d <= bound]
        level = enum.next_level()
        if level:
            images = apply_many(np.stack([g.matrix for g in level]), x)
            disp = dist(x, images)
            order = np.argsort(disp, kind="stable")
        else:
            disp, order = np.zeros(0), []
        new_face = False
        for k in order:
            g = level[k]
            if disp[k] > 2 * extent + tol.eps_geom:
                continue
            if disp[k] <= tol.eps_geom:
                raise FixesBasepoint(f"element {word_to_string(g.word)!r} fixes the basepoint")
            hs = _bisector_from_image(x, g, images[k])
            before = poly
            try:
                poly, created, gone = _clip(poly, hs, tol)
            except DegenerateCut as exc:
                poly = replace(poly, near_misses=poly.near_misses + ((word_to_string(g.word), str(exc)),))
                continue
            for fi in gone:
                el = before.faces[fi].element
                if el is not None and len(el.word) == 1:
                    eliminated_by[el.word[0]] = word_to_string(g.word)
            if created:
                new_face = True
                extent = _current_extent(poly)
                if on_cut is not None:
                    on_cut(g, poly)
        if n >= 2 and not new_face and _is_closed(poly):
            converged = True
            break
    poly = replace(poly, word_length_reached=n, converged=converged)
    poly = _pair_faces(poly, tol)
    present = _generators_present(poly, enum.letters, tol)
    poly = replace(poly, generators_present=tuple(present))
    if require_generators:
        for letter, ok in zip(enum.letters, present):
            if not ok:
                raise GeneratorNotFace(letter.word[0], eliminated_by.get(letter.word[0]))
    return poly, domain_stats(poly, compute_volume)


class Replacement(NamedTuple):
    generators: list
    old_generator_word: tuple  # the removed generator as a word in the new generators


def express(target: MoebiusElement, generators: Sequence[MoebiusElement], max_length: int,
            x=ORIGIN, tol: Tolerance = DEFAULT_TOL):
    """Shortest word in ``generators`` equal to ``target`` (up to sign), or ``None``."""
    same = matrix_verifier(tol)
    if same(target, identity()):
        return ()
    enum = WordEnumerator(generators, x, tol)
    for _ in range(max_length):
        for g in enum.next_level():
            if same(g, target):
                return g.word
        if not enum.frontier:
            break
    return None


def replace_generator(generators: Sequence[MoebiusElement], removed_index: Optional[int],
                      by_word, max_search_length: int = 8,
                      tol: Tolerance = DEFAULT_TOL) -> Replacement:
    """Swap generator ``removed_index`` (1-based) for the element of ``by_word``.

    ``by_word`` is a word in the current generators (string such as ``"aBB"``
    or a tuple of signed 1-based indices).  The new set generates the same
    group only if the old generator can be written in it; that is checked by
    breadth-first search up to ``max_search_length`` letters, and
    :class:`NotVerified` is raised when the search fails.
    """
    generators = list(generators)
    if removed_index is None:
        return Replacement(generators, ())
    if not 1 <= removed_index <= len(generators):
        raise IndexError(f"generator index {removed_index} out of range 1..{len(generators)}")
    if isinstance(by_word, str):
        by_word = parse_word(by_word, len(generators))
    new_el = evaluate_word(by_word, generators)
    new = [MoebiusElement(g.matrix, (k,), g.det_residual) for k, g in enumerate(generators, start=1)]
    new[removed_index - 1] = MoebiusElement(new_el.matrix, (removed_index,), new_el.det_residual)
    old = generators[removed_index - 1]
    word = express(old, new, max_search_length, tol=tol)
    if word is None:
        raise NotVerified(
            f"generator {removed_index} is not a word of length <= {max_search_length} in the new generators"
        )
    log.info("generator %d replaced by %s; old generator = %s", removed_index,
             word_to_string(by_word), word_to_string(word))
    return Replacement(new, word)
