"""Covering a ball B(x, R) by translates of the domain.

:func:`tile_ball` walks the Cayley graph whose edges are the face pairings
of the (approximate) domain, breadth first from the identity, never leaving
the ball enlarged by twice the domain's vertex radius.  :func:`enumerate_words`
finds the same group elements by brute force over words in the generators,
without looking at the domain's faces; the two must agree.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import (
    DirichletPolyhedron,
    WordEnumerator,
    injectivity_radius,
    max_vertex_distance,
    spine_radius,
    volume,
)
from .errors import ExplosionGuard
from .hypcore import (
    DEFAULT_TOL,
    MoebiusElement,
    Tolerance,
    apply,
    apply_many,
    boost,
    dist,
    identity,
    inverse,
    lorentz_matrix,
    to_klein,
)
from .wordprob import ElementIndex, cascade_verifier

log = logging.getLogger(__name__)

DEFAULT_TILE_CAP = 10**6


class FrontierNotClosed(UserWarning):
    """Word enumeration still found in-ball elements at its last length."""


def tiling_radius(r: float, lambda_cutoff: float) -> float:
    """``2 arccosh(cosh(r) cosh(lambda/2))``: radius of the ball whose tiles
    contain every element of translation length at most ``lambda_cutoff``."""
    if r < 0 or lambda_cutoff < 0:
        raise ValueError("radius and cutoff must be non-negative")
    # same quantity via acosh(1 + 2 s^2) = 2 asinh(s), accurate for small arguments
    s2 = math.sinh(r / 2) ** 2 * math.cosh(lambda_cutoff / 2) + math.sinh(lambda_cutoff / 4) ** 2
    return 4.0 * math.asinh(math.sqrt(s2))


def ball_volume(t: float) -> float:
    """Volume of a hyperbolic ball of radius ``t``."""
    return math.pi * (math.sinh(2 * t) - 2 * t)


def disk_area(t: float) -> float:
    """Area of a hyperbolic disk of radius ``t``."""
    return 4 * math.pi * math.sinh(t / 2) ** 2


@dataclass(frozen=True)
class Tile:
    element: MoebiusElement
    image: np.ndarray
    parent: Optional[tuple]  # (tile id, face index), None for the identity
    depth: int
    distance: float


@dataclass
class TileSet:
    """The big list: translates found inside the enlarged ball, sorted by distance."""

    tiles: list
    radius: float
    margin: float
    basepoint: np.ndarray
    rho: float
    spine_radius: float
    index: ElementIndex = field(repr=False, default=None)

    def __len__(self):
        return len(self.tiles)

    @property
    def elements(self) -> list:
        return [t.element for t in self.tiles]

    @property
    def matrices(self) -> np.ndarray:
        return np.stack([t.element.matrix for t in self.tiles])

    def bfs_tree_ok(self) -> bool:
        """Every tile's parent chain ends at the identity tile."""
        for k, t in enumerate(self.tiles):
            seen = set()
            while t.parent is not None:
                if k in seen:
                    return False
                seen.add(k)
                k = t.parent[0]
                t = self.tiles[k]
            if t.depth != 0:
                return False
        return True


def _sort_tiles(tiles: list) -> list:
    order = sorted(range(len(tiles)), key=lambda k: (round(tiles[k].distance, 12), len(tiles[k].element.word), tiles[k].element.word))
    pos = {old: new for new, old in enumerate(order)}
    out = []
    for old in order:
        t = tiles[old]
        parent = None if t.parent is None else (pos[t.parent[0]], t.parent[1])
        out.append(Tile(t.element, t.image, parent, t.depth, t.distance))
    return out


def tile_ball(poly: DirichletPolyhedron, R: float, tol: Tolerance = DEFAULT_TOL,
              cap: int = DEFAULT_TILE_CAP, face_order: Optional[Sequence[int]] = None) -> TileSet:
    """Breadth-first covering of ``B(x, R)`` by face-neighbour translates of ``poly``.

    A neighbour ``g h`` is admitted when ``d(x, g h x) <= R + 2 * max_vertex_distance``.
    """
    x = poly.basepoint
    rho = injectivity_radius(poly)
    margin = 2 * max_vertex_distance(poly)
    bound = R + margin + tol.eps_geom
    faces = [k for k, f in enumerate(poly.faces) if not f.synthetic]
    if face_order is not None:
        faces = [k for k in face_order if not poly.faces[k].synthetic]
    pair_mats = np.stack([poly.faces[k].element.matrix for k in faces]) if faces else np.zeros((0, 2, 2))

    index = ElementIndex(x, cascade_verifier(x, rho, tol), tol)
    ident = identity()
    index.add(ident)
    tiles = [Tile(ident, x.copy(), None, 0, 0.0)]
    layer = [0]
    depth = 0
    if R <= 0:
        log.info("R = %g: only the identity tile is retained", R)
        layer = []
    while layer:
        depth += 1
        cand, parents = [], []
        mats = np.stack([tiles[t].element.matrix for t in layer])
        prods = mats[:, None] @ pair_mats[None]
        imgs = apply_many(prods.reshape(-1, 2, 2), x).reshape(len(layer), len(faces), 4)
        ds = dist(x, imgs)
        for a, t in enumerate(layer):
            g = tiles[t].element
            for b, fk in enumerate(faces):
                if ds[a, b] > bound:
                    continue
                h = poly.faces[fk].element
                cand.append(MoebiusElement(prods[a, b], g.word + h.word))
                parents.append((t, fk, imgs[a, b], float(ds[a, b])))
        next_layer = []
        for g, (t, fk, img, d), (_, inserted) in zip(cand, parents, index.add_many(cand)):
            if not inserted:
                continue
            tiles.append(Tile(g, img, (t, fk), depth, d))
            next_layer.append(len(tiles) - 1)
            if len(tiles) > cap:
                raise ExplosionGuard(cap)
        layer = next_layer
    tiles = _sort_tiles(tiles)
    index = ElementIndex(x, cascade_verifier(x, rho, tol), tol)
    index.add_many([t.element for t in tiles])
    try:
        r = spine_radius(poly)
    except Exception:
        r = math.nan
    return TileSet(tiles, R, margin, x, rho, r, index)


@dataclass
class Enumeration:
    """Distinct group elements inside the enlarged ball found by word enumeration."""

    elements: list
    distances: np.ndarray
    bound: float
    length_reached: int
    frontier_closed: bool
    visited: int  # distinct elements seen, inside the search radius or not

    def keys(self, quantum: float, x) -> set:
        from .wordprob import canonical_key

        return {canonical_key(g, x, quantum) for g in self.elements}


def enumerate_words(generators: Sequence[MoebiusElement], max_length: int, R: float, x,
                    margin: float = 0.0, search_radius: Optional[float] = None,
                    tol: Tolerance = DEFAULT_TOL) -> Enumeration:
    """Every distinct element ``g`` with ``d(x, g x) <= R + margin`` reachable by words
    of length ``<= max_length``.

    Words are extended only through elements within ``search_radius``
    (default: the bound plus twice the largest generator displacement).
    Duplicates are detected by direct matrix comparison, so the result
    depends on the group alone.
    """
    x = np.asarray(x, dtype=float)
    bound = R + margin + tol.eps_geom
    enum = WordEnumerator(generators, x, tol)
    gen_disp = max(float(dist(x, apply(g, x))) for g in enum.letters)
    if search_radius is None:
        search_radius = bound + 2 * gen_disp
    found = [identity()]
    dists = [0.0]
    closed = True
    n = 0
    if max_length > 0:
        for n in range(1, max_length + 1):
            level = enum.next_level()
            if not level:
                closed = True
                break
            d = dist(x, apply_many(np.stack([g.matrix for g in level]), x))
            inside = d <= bound
            found.extend(g for g, ok in zip(level, inside) if ok)
            dists.extend(d[inside].tolist())
            closed = not inside.any()
            enum.frontier = [g for g, dd in zip(level, d) if dd <= search_radius]
            if not enum.frontier:
                closed = True
                break
        if not closed:
            warnings.warn(f"in-ball elements still appear at word length {n}", FrontierNotClosed)
    return Enumeration(found, np.array(dists), bound, n, closed, len(enum.index))


def compare_sets(a: Sequence[MoebiusElement], b: Sequence[MoebiusElement], x, rho: float,
                 tol: Tolerance = DEFAULT_TOL, boundary: Optional[float] = None):
    """Elements of ``a`` missing from ``b`` and of ``b`` missing from ``a``.

    Elements whose displacement lies within ``eps_geom`` of ``boundary`` are
    ignored (rounding decides their membership).
    """
    def near_boundary(g):
        if boundary is None:
            return False
        return abs(float(dist(x, apply(g, x))) - boundary) <= 10 * tol.eps_geom

    ia = ElementIndex(x, cascade_verifier(x, rho, tol), tol)
    ia.add_many(list(a))
    ib = ElementIndex(x, cascade_verifier(x, rho, tol), tol)
    ib.add_many(list(b))
    missing = [g for g in a if ib.find(g) is None and not near_boundary(g)]
    extra = [g for g in b if ia.find(g) is None and not near_boundary(g)]
    return missing, extra


@dataclass(frozen=True)
class Coverage:
    fraction: float
    mean_multiplicity: float
    n_samples: int


def sample_ball(x, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points uniform for hyperbolic volume in ``B(x, radius)``."""
    out = np.empty((0,), dtype=float)
    peak = math.sinh(radius) ** 2
    while len(out) < n:
        t = rng.uniform(0.0, radius, size=max(4 * (n - len(out)), 64))
        keep = rng.uniform(0.0, peak, size=len(t)) < np.sinh(t) ** 2
        out = np.concatenate([out, t[keep]])
    t = out[:n]
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    local = np.column_stack([np.cosh(t), np.sinh(t)[:, None] * d])
    return local @ boost(x).T


def verify_covering(tileset: TileSet, poly: DirichletPolyhedron, n_samples: int,
                    seed: int = 0, slack: float = 1e-9) -> Coverage:
    """Fraction of random points of ``B(x, R - eps)`` lying in some tile ``g D'``."""
    if n_samples <= 0:
        log.info("no samples requested; coverage is vacuous")
        return Coverage(1.0, math.nan, 0)
    rng = np.random.default_rng(seed)
    pts = sample_ball(tileset.basepoint, max(tileset.radius - DEFAULT_TOL.eps_geom, 0.0), n_samples, rng)
    inv = lorentz_matrix(np.stack([inverse(t.element).matrix for t in tileset.tiles]))
    mult = np.zeros(n_samples, dtype=int)
    for L in inv:
        mult += poly.contains(to_klein(pts @ L.T), slack)
    return Coverage(float(np.mean(mult >= 1)), float(np.mean(mult)), n_samples)


@dataclass
class VerificationReport:
    delta_v: Optional[float]
    reference_volume: Optional[float]
    domain_volume: Optional[float]
    extra_area_lower: float
    hidden_wall_area_lower: float
    ndd_upper: int
    injectivity_radius: float
    spine_radius_upper: float
    tiling_radius: float
    oracle_missing: list = field(default_factory=list)
    oracle_extra: list = field(default_factory=list)
    oracle_run: bool = False
    oracle_frontier_closed: Optional[bool] = None
    coverage_fraction: Optional[float] = None
    mean_multiplicity: Optional[float] = None

    @property
    def tiling_complete(self) -> Optional[bool]:
        """Oracle verdict: every word-enumeration element was reached by the tiling."""
        if not self.oracle_run:
            return None
        return not self.oracle_missing


def ndd_upper_bound(R: float, r_ub: float, rho: float) -> int:
    """Number of radius-``rho`` balls fitting (by volume) in a ball of radius ``R + r_ub + rho``."""
    return int(math.floor(ball_volume(R + r_ub + rho) / ball_volume(rho)))


def theorem1_diagnostics(poly: DirichletPolyhedron, tileset: TileSet,
                         reference_volume: Optional[float],
                         oracle: Optional[Enumeration] = None,
                         coverage: Optional[Coverage] = None,
                         domain_volume: Optional[float] = None,
                         tol: Tolerance = DEFAULT_TOL) -> VerificationReport:
    """Measured volume gap, the Extra Area bound and the oracle comparison."""
    rho = injectivity_radius(poly)
    r_ub = max_vertex_distance(poly)
    if domain_volume is None:
        domain_volume = volume(poly)[0]
    delta_v = None if reference_volume is None else domain_volume - reference_volume
    ndd = ndd_upper_bound(tileset.radius, r_ub, rho)
    ahw = disk_area(rho)
    report = VerificationReport(
        delta_v=delta_v,
        reference_volume=reference_volume,
        domain_volume=domain_volume,
        extra_area_lower=ahw / ndd,
        hidden_wall_area_lower=ahw,
        ndd_upper=ndd,
        injectivity_radius=rho,
        spine_radius_upper=r_ub,
        tiling_radius=tileset.radius,
    )
    if oracle is not None:
        missing, extra = compare_sets(oracle.elements, tileset.elements, poly.basepoint, rho, tol,
                                      boundary=oracle.bound)
        report.oracle_missing = missing
        report.oracle_extra = extra
        report.oracle_run = True
        report.oracle_frontier_closed = oracle.frontier_closed
    if coverage is not None:
        report.coverage_fraction = coverage.fraction
        report.mean_multiplicity = coverage.mean_multiplicity
    return report
