"""From the big list of tiles to the length spectrum below a cutoff.

Elements are grouped by complex length, split into conjugacy classes using
the tiles themselves as conjugators, and proper powers are set aside.  What
remains is one class per closed geodesic; the number of classes sharing a
complex length is its multiplicity.

By default a geodesic is unoriented: ``g`` and ``g^-1`` (which have the same
complex length, since ``tr g^-1 = tr g``) describe the same geodesic and are
merged.  With ``oriented=True`` they are counted separately unless they are
conjugate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InsufficientRadius
from .hypcore import DEFAULT_TOL, ComplexLength, Tolerance, word_to_string
from .tiling import TileSet, tiling_radius
from .wordprob import same_element_pairs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectrumEntry:
    length: ComplexLength
    multiplicity: int
    representatives: tuple  # one word per counted geodesic
    is_power_of: Optional[tuple] = None  # (root length, exponent) for power classes


@dataclass(frozen=True)
class Exclusion:
    word: str
    reason: str  # 'zero-length' | 'over-cutoff' | 'conjugate-of' | 'power-of'
    reference: Optional[str] = None  # representative word it was merged into / is a power of


@dataclass
class Spectrum:
    """The small list plus the record of everything that was left out."""

    entries: list
    excluded: list
    powers: list  # SpectrumEntry objects of proper-power classes (not counted)
    cutoff: float
    oriented: bool

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    @property
    def n_classes(self) -> int:
        return sum(e.multiplicity for e in self.entries)


def _complex_lengths(mats: np.ndarray) -> tuple:
    tr = mats[:, 0, 0] + mats[:, 1, 1]
    flip = (tr.real < 0) | ((tr.real == 0) & (tr.imag < 0))
    tr = np.where(flip, -tr, tr)
    ell = 2 * np.arccosh(tr / 2)
    ell = np.where(ell.real < 0, -ell, ell)
    lam = np.maximum(ell.real, 0.0)
    theta = np.angle(np.exp(1j * ell.imag))  # wrapped to (-pi, pi]
    theta = np.where(theta <= -math.pi, theta + 2 * math.pi, theta)
    return lam, theta


def _zero_length(mats: np.ndarray, tol: Tolerance) -> np.ndarray:
    """Parabolic (or elliptic) elements: ``tr^2`` within rounding of ``[0, 4]``.

    Testing lambda directly is ill-conditioned: a trace off from 2 by
    ``delta`` gives ``lambda ~ 2 sqrt(delta)``, so rounding alone produces
    lengths near 1e-8.
    """
    tr = mats[:, 0, 0] + mats[:, 1, 1]
    t2 = tr * tr
    scale = np.maximum(1.0, np.max(np.abs(mats), axis=(1, 2)) ** 2)
    near_real = np.abs(t2.imag) <= tol.eps_equal * scale
    in_range = (t2.real >= -tol.eps_equal * scale) & (t2.real <= 4 + tol.eps_equal * scale)
    return near_real & in_range


def _angle_gap(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % (2 * math.pi)
    return np.minimum(d, 2 * math.pi - d)


def _cluster(lam: np.ndarray, theta: np.ndarray, lam_tol: float, theta_tol: float) -> list:
    """Groups of indices with matching complex length (single linkage along lambda)."""
    order = np.lexsort((theta, lam))
    groups = []
    for k in order:
        for g in groups:
            j = g[-1]
            if lam[k] - lam[j] <= lam_tol and _angle_gap(theta[k], theta[j]) <= theta_tol:
                g.append(k)
                break
        else:
            groups.append([k])
        # only groups whose last lambda is still in reach can take more members
    return groups


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller index as root so results do not depend on merge order
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _inv(mats: np.ndarray) -> np.ndarray:
    out = np.empty_like(mats)
    out[:, 0, 0] = mats[:, 1, 1]
    out[:, 1, 1] = mats[:, 0, 0]
    out[:, 0, 1] = -mats[:, 0, 1]
    out[:, 1, 0] = -mats[:, 1, 0]
    return out


def _conjugate_hits(targets: np.ndarray, members: np.ndarray, conj: np.ndarray, conj_inv: np.ndarray,
                    x, rho: float, tol: Tolerance) -> np.ndarray:
    """Boolean ``[i, j]``: some ``q`` in ``conj`` has ``q t_i q^-1 = m_j``."""
    hits = np.zeros((len(targets), len(members)), dtype=bool)
    for i, t in enumerate(targets):
        c = conj @ t @ conj_inv
        hits[i] = same_element_pairs(c, members, x, rho, tol).any(axis=0)
    return hits


def big_to_small(tileset: TileSet, cutoff: float, x=None, rho: Optional[float] = None,
                 tol: Tolerance = DEFAULT_TOL, oriented: bool = False,
                 spine_radius: Optional[float] = None) -> Spectrum:
    """Complex lengths of closed geodesics with ``lambda <= cutoff`` and their multiplicities."""
    x = tileset.basepoint if x is None else np.asarray(x, dtype=float)
    rho = tileset.rho if rho is None else rho
    r = tileset.spine_radius if spine_radius is None else spine_radius
    if math.isfinite(r):
        need = tiling_radius(r, max(cutoff, 0.0))
        if tileset.radius < need - tol.eps_geom:
            raise InsufficientRadius(f"tiles cover radius {tileset.radius:.6g} but cutoff {cutoff} needs {need:.6g}")
    lam_tol = tol.eps_equal * 10
    theta_tol = tol.eps_equal * 100

    tiles = [t.element for t in tileset.tiles]
    mats = np.stack([g.matrix for g in tiles])
    excluded = []
    nontrivial = [k for k, t in enumerate(tileset.tiles) if t.depth > 0]
    if not nontrivial:
        return Spectrum([], [], [], cutoff, oriented)
    lam, theta = _complex_lengths(mats[nontrivial])
    zero = _zero_length(mats[nontrivial], tol)
    keep = []
    for k, l_, th, z in zip(nontrivial, lam, theta, zero):
        word = word_to_string(tiles[k].word)
        if z or l_ <= tol.eps_equal:
            excluded.append(Exclusion(word, "zero-length"))
        elif l_ > cutoff + tol.eps_equal:
            excluded.append(Exclusion(word, "over-cutoff"))
        else:
            keep.append((k, l_, th))
    if not keep:
        return Spectrum([], excluded, [], cutoff, oriented)
    idx = np.array([k for k, _, _ in keep])
    lam = np.array([l_ for _, l_, _ in keep])
    theta = np.array([t for _, _, t in keep])
    conj_inv = _inv(mats)

    classes = []  # (length, member tile ids sorted, representative tile id)
    for group in _cluster(lam, theta, lam_tol, theta_tol):
        members = idx[group]
        mm = mats[members]
        uf = _UnionFind(len(members))
        hits = _conjugate_hits(mm, mm, mats, conj_inv, x, rho, tol)
        if not oriented:
            hits |= _conjugate_hits(_inv(mm), mm, mats, conj_inv, x, rho, tol)
        for i, j in zip(*np.nonzero(hits)):
            uf.union(int(i), int(j))
        by_root = {}
        for i in range(len(members)):
            by_root.setdefault(uf.find(i), []).append(int(members[i]))
        # tiles are sorted by translation distance, so the first member is the shortest
        where = {int(m): p for p, m in zip(group, members)}
        for ms in by_root.values():
            ms.sort()
            rep = ms[0]
            length = ComplexLength(float(lam[where[rep]]), float(theta[where[rep]]))
            classes.append((length, ms, rep))

    classes.sort(key=lambda c: (c[0].lam, abs(c[0].theta), c[0].theta, c[2]))
    power_of = {}
    for ci, (length, ms, rep) in enumerate(classes):
        for cj in range(ci):
            root_len, root_ms, root_rep = classes[cj]
            if cj in power_of:
                continue
            k = round(length.lam / root_len.lam)
            if k < 2 or abs(k * root_len.lam - length.lam) > lam_tol * k:
                continue
            if _angle_gap(k * root_len.theta, length.theta) > theta_tol * k:
                continue
            powered = np.stack([np.linalg.matrix_power(mats[m], k) for m in root_ms])
            targets = mats[ms]
            hits = _conjugate_hits(powered, targets, mats, conj_inv, x, rho, tol).any()
            if not hits and not oriented:
                hits = _conjugate_hits(_inv(powered), targets, mats, conj_inv, x, rho, tol).any()
            if hits:
                power_of[ci] = (cj, k)
                break

    entries, powers = [], []
    for ci, (length, ms, rep) in enumerate(classes):
        rep_word = word_to_string(tiles[rep].word)
        for m in ms[1:]:
            excluded.append(Exclusion(word_to_string(tiles[m].word), "conjugate-of", rep_word))
        if ci in power_of:
            cj, k = power_of[ci]
            root_word = word_to_string(tiles[classes[cj][2]].word)
            excluded.append(Exclusion(rep_word, "power-of", root_word))
            powers.append(SpectrumEntry(length, 1, (rep_word,), (classes[cj][0], k)))
            continue
        entries.append((length, rep_word))

    merged = []
    for length, word in entries:
        if merged:
            last = merged[-1]
            if (abs(length.lam - last[0].lam) <= lam_tol
                    and _angle_gap(length.theta, last[0].theta) <= theta_tol):
                last[1].append(word)
                continue
        merged.append((length, [word]))
    out = [SpectrumEntry(length, len(words), tuple(words)) for length, words in merged]
    out.sort(key=_entry_order)
    return Spectrum(out, excluded, powers, cutoff, oriented)


def _entry_order(e: SpectrumEntry):
    # rounding keeps numerically tied lengths in a stable order
    return (round(e.length.lam, 8), round(abs(e.length.theta), 7), round(e.length.theta, 7))


def spectrum_compare(s1, s2, tol: float = 1e-6):
    """Pairwise comparison of two small lists; returns ``(match, report lines)``."""
    a = list(s1.entries if isinstance(s1, Spectrum) else s1)
    b = list(s2.entries if isinstance(s2, Spectrum) else s2)
    report = []
    ok = True
    if len(a) != len(b):
        ok = False
        report.append(f"entry counts differ: {len(a)} vs {len(b)}")
    for k, (e, f) in enumerate(zip(a, b)):
        problems = []
        if abs(e.length.lam - f.length.lam) > tol:
            problems.append(f"lambda {e.length.lam:.12g} vs {f.length.lam:.12g}")
        if _angle_gap(e.length.theta, f.length.theta) > tol:
            problems.append(f"theta {e.length.theta:.12g} vs {f.length.theta:.12g}")
        if e.multiplicity != f.multiplicity:
            problems.append(f"multiplicity {e.multiplicity} vs {f.multiplicity}")
        if problems:
            ok = False
            report.append(f"entry {k}: " + "; ".join(problems))
    if ok:
        report.append(f"{len(a)} entries match within {tol:g}")
    return ok, report
