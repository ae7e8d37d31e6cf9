"""Deciding equality of group elements from approximate geometric data.

Two elements ``g, g'`` of a torsion-free discrete group are compared by a
three stage cascade:

1. traces with different absolute real parts mean different elements;
2. basepoint displacements differing by ``2 rho`` or more mean the
   elements are treated as different;
3. otherwise ``g = g'`` exactly when ``d(g x, g' x) < 2 rho``.

``rho`` is the injectivity radius of the Dirichlet domain at ``x``.  The
cascade is exact for the group: distinct elements move ``x`` to orbit points
at least ``2 rho`` apart.

:class:`ElementIndex` puts a hashing front end on top of this so that large
word lists can be deduplicated in (amortized) constant time per element.
Hash collisions only ever produce candidates; verdicts come from a verifier
callback (the cascade above or a direct matrix comparison).
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidRho
from .hypcore import (
    DEFAULT_TOL,
    MoebiusElement,
    Tolerance,
    apply,
    apply_many,
    dist,
)

__all__ = [
    "CanonicalKey",
    "CascadeReport",
    "canonical_key",
    "neighbor_keys",
    "same_element",
    "same_element_report",
    "same_element_pairs",
    "matrix_verifier",
    "cascade_verifier",
    "ElementIndex",
    "dedup",
]


class CanonicalKey(NamedTuple):
    """Quantized (trace^2, image of the basepoint in Klein coordinates)."""

    trace_re_q: int
    trace_im_q: int
    image_q: tuple


def _raw_key(mats: np.ndarray, x) -> np.ndarray:
    """Unquantized key coordinates for a stack of matrices, shape ``(n, 5)``.

    The trace enters squared, which is exactly invariant under ``g -> -g``.
    """
    tr = mats[:, 0, 0] + mats[:, 1, 1]
    t2 = tr * tr
    img = apply_many(mats, x)
    klein = img[:, 1:] / img[:, :1]
    return np.column_stack([t2.real, t2.imag, klein])


# Cells are shifted by an irrational fraction so that exact values such as
# integer traces or zero coordinates never sit on a cell boundary.
GRID_OFFSET = (3 - 5 ** 0.5) / 2


def _quantize(raw: np.ndarray, quantum: float) -> np.ndarray:
    return np.floor(raw / quantum + GRID_OFFSET).astype(np.int64)


def canonical_key(g: MoebiusElement, x, quantum: float) -> CanonicalKey:
    q = _quantize(_raw_key(g.matrix[None], x), quantum)[0]
    return CanonicalKey(int(q[0]), int(q[1]), (int(q[2]), int(q[3]), int(q[4])))


def neighbor_keys(key: CanonicalKey) -> list:
    """The key and its 3^5 - 1 adjacent cells."""
    flat = (key.trace_re_q, key.trace_im_q) + tuple(key.image_q)
    out = []
    for off in itertools.product((-1, 0, 1), repeat=5):
        c = [a + b for a, b in zip(flat, off)]
        out.append(CanonicalKey(c[0], c[1], (c[2], c[3], c[4])))
    return out


class CascadeReport(NamedTuple):
    verdict: bool
    stage: int  # stage at which the verdict was reached
    trace_gap: float  # | |Re tr g| - |Re tr g'| |
    displacement_gap: float  # | d(x, gx) - d(x, g'x) |
    image_distance: float  # d(gx, g'x), nan if not reached


def same_element_report(g: MoebiusElement, h: MoebiusElement, x, rho: float,
                        tol: Tolerance = DEFAULT_TOL) -> CascadeReport:
    if not rho > tol.eps_geom:
        raise InvalidRho(f"rho={rho} must exceed eps_geom={tol.eps_geom}")
    tg, th = g.trace, h.trace
    trace_gap = abs(abs(tg.real) - abs(th.real))
    gx, hx = apply(g, x), apply(h, x)
    disp_gap = abs(float(dist(x, gx)) - float(dist(x, hx)))
    if trace_gap > tol.eps_equal * max(1.0, abs(tg), abs(th)):
        return CascadeReport(False, 1, trace_gap, disp_gap, math.nan)
    if disp_gap >= 2 * rho:
        return CascadeReport(False, 2, trace_gap, disp_gap, math.nan)
    d = float(dist(gx, hx))
    # equal elements sit ~0 apart, distinct ones >= 2 rho; keep clear of the boundary
    return CascadeReport(d < 2 * rho - tol.eps_geom, 3, trace_gap, disp_gap, d)


def same_element(g: MoebiusElement, h: MoebiusElement, x, rho: float,
                 tol: Tolerance = DEFAULT_TOL) -> bool:
    """Equality in the group of ``g`` and ``h`` by the trace/displacement cascade."""
    return same_element_report(g, h, x, rho, tol).verdict


def same_element_pairs(mats_a: np.ndarray, mats_b: np.ndarray, x, rho: float,
                       tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Vectorized cascade: boolean matrix ``[i, j]`` = same_element(a_i, b_j)."""
    if not rho > tol.eps_geom:
        raise InvalidRho(f"rho={rho} must exceed eps_geom={tol.eps_geom}")
    ta = mats_a[:, 0, 0] + mats_a[:, 1, 1]
    tb = mats_b[:, 0, 0] + mats_b[:, 1, 1]
    scale = np.maximum(1.0, np.maximum(np.abs(ta)[:, None], np.abs(tb)[None, :]))
    stage1 = np.abs(np.abs(ta.real)[:, None] - np.abs(tb.real)[None, :]) <= tol.eps_equal * scale
    ia, ib = apply_many(mats_a, x), apply_many(mats_b, x)
    da, db = dist(x, ia), dist(x, ib)
    stage2 = np.abs(da[:, None] - db[None, :]) < 2 * rho
    # -<a, b> for all pairs as one matrix product
    cosh_d = ia[:, :1] @ ib[:, :1].T - ia[:, 1:] @ ib[:, 1:].T
    stage3 = np.arccosh(np.maximum(cosh_d, 1.0)) < 2 * rho - tol.eps_geom
    return stage1 & stage2 & stage3


def matrix_verifier(tol: Tolerance = DEFAULT_TOL) -> Callable:
    """Verifier comparing matrices entrywise up to sign, scaled by entry size."""

    def verify(g: MoebiusElement, h: MoebiusElement) -> bool:
        a, b = g.matrix, h.matrix
        scale = max(1.0, float(np.max(np.abs(a))))
        t = tol.eps_equal * scale
        return bool(np.max(np.abs(a - b)) <= t or np.max(np.abs(a + b)) <= t)

    return verify


def cascade_verifier(x, rho: float, tol: Tolerance = DEFAULT_TOL) -> Callable:
    def verify(g, h):
        return same_element(g, h, x, rho, tol)

    return verify


class ElementIndex:
    """Deduplicating store of group elements keyed by :func:`canonical_key`.

    A lookup probes the element's own cell and every adjacent cell that lies
    within ``quantum / 4`` of the element's raw key, which covers every cell
    an equal element (numerical discrepancy well below ``quantum / 4``) can
    fall into.  Candidates found there are confirmed by ``verifier``.
    """

    def __init__(self, x, verifier: Callable, tol: Tolerance = DEFAULT_TOL):
        self.x = np.asarray(x, dtype=float)
        self.verifier = verifier
        self.quantum = tol.quantum
        self.elements: list = []
        self._cells: dict = {}

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def _probe_cells(self, raw_row: np.ndarray):
        scaled = raw_row / self.quantum + GRID_OFFSET
        base = np.floor(scaled)
        frac = scaled - base
        options = []
        for b, f in zip(base.astype(np.int64), frac):
            opts = [int(b)]
            if f < 0.25:
                opts.append(int(b) - 1)
            elif f > 0.75:
                opts.append(int(b) + 1)
            options.append(opts)
        return itertools.product(*options)

    def _find_raw(self, g: MoebiusElement, raw_row: np.ndarray):
        for cell in self._probe_cells(raw_row):
            for idx in self._cells.get(cell, ()):
                if self.verifier(self.elements[idx], g):
                    return idx
        return None

    def find(self, g: MoebiusElement):
        """Index of a stored element equal to ``g``, or ``None``."""
        return self._find_raw(g, _raw_key(g.matrix[None], self.x)[0])

    def add(self, g: MoebiusElement):
        """Insert ``g`` unless already present; returns ``(index, inserted)``."""
        return self.add_many([g])[0]

    def add_many(self, elements: Sequence[MoebiusElement]):
        """Insert elements in order; returns a list of ``(index, inserted)``."""
        if not elements:
            return []
        mats = np.stack([g.matrix for g in elements])
        raw = _raw_key(mats, self.x)
        cells = [tuple(c) for c in _quantize(raw, self.quantum).tolist()]
        out = []
        for g, row, cell in zip(elements, raw, cells):
            idx = self._find_raw(g, row)
            if idx is not None:
                out.append((idx, False))
                continue
            idx = len(self.elements)
            self.elements.append(g)
            self._cells.setdefault(cell, []).append(idx)
            out.append((idx, True))
        return out


def dedup(biglist: Iterable[MoebiusElement], x, rho: float,
          tol: Tolerance = DEFAULT_TOL) -> list:
    """Drop repeated group elements, keeping first occurrences in order."""
    biglist = list(biglist)
    index = ElementIndex(x, cascade_verifier(x, rho, tol), tol)
    return [g for g, (_, inserted) in zip(biglist, index.add_many(biglist)) if inserted]
