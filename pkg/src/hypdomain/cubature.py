"""Adaptive cubature of the Klein-model volume density over tetrahedra.

The hyperbolic volume element in the Klein ball is ``du / (1 - |u|^2)^2``.
Each tetrahedron is mapped from the unit cube by the collapsed (Duffy)
coordinates

    u = v0 + s (v1 - v0) + s t (v2 - v1) + s t w (v3 - v2),
    |J| = 6 |vol| s^2 t,

so the ``s^2`` factor cancels the ``1/s^2`` blow-up of the density when
``v0`` is an ideal vertex on the unit sphere.  Tetrahedra with several
ideal vertices are bisected until each has at most one, which is then put
in the ``v0`` slot.

Error estimates compare tensor Gauss-Legendre rules of two orders;
tetrahedra whose estimate is too large are bisected on their longest edge.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureNotConverged

IDEAL_NORM = 1.0 - 1e-7


@lru_cache(maxsize=None)
def _cube_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    s, t, r = np.meshgrid(x, x, x, indexing="ij")
    ws, wt, wr = np.meshgrid(w, w, w, indexing="ij")
    pts = np.column_stack([s.ravel(), t.ravel(), r.ravel()])
    wts = (ws * wt * wr).ravel()
    return pts, wts


def klein_density(u: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 - np.sum(u * u, axis=-1)) ** 2


def _integrate(tets: np.ndarray, order: int) -> np.ndarray:
    """Rule of the given order applied to tetrahedra ``(T, 4, 3)`` (v0 = collapse vertex)."""
    pts, wts = _cube_rule(order)
    s, t, r = pts[:, 0], pts[:, 1], pts[:, 2]
    v0, v1, v2, v3 = (tets[:, i, None, :] for i in range(4))
    u = v0 + s[None, :, None] * ((v1 - v0) + t[None, :, None] * ((v2 - v1) + r[None, :, None] * (v3 - v2)))
    vol6 = np.abs(np.linalg.det(np.stack([tets[:, 1] - tets[:, 0], tets[:, 2] - tets[:, 0], tets[:, 3] - tets[:, 0]], axis=1)))
    jac = (s * s * t)[None, :] * vol6[:, None]
    return np.sum(klein_density(u) * jac * wts[None, :], axis=1)


def _orient_ideal(tet: np.ndarray) -> list:
    """Split so each piece has at most one ideal vertex, placed first."""
    norms = np.linalg.norm(tet, axis=1)
    ideal = np.flatnonzero(norms >= IDEAL_NORM)
    if len(ideal) == 0:
        return [tet]
    if len(ideal) == 1:
        i = ideal[0]
        order = [i] + [k for k in range(4) if k != i]
        return [tet[order]]
    i, j = ideal[0], ideal[1]
    mid = 0.5 * (tet[i] + tet[j])
    a = tet.copy()
    a[j] = mid
    b = tet.copy()
    b[i] = mid
    return _orient_ideal(a) + _orient_ideal(b)


def _bisect(tet: np.ndarray):
    """Split on the longest edge, keeping v0 (a possible ideal vertex) in slot 0 of both halves."""
    best, pair = -1.0, (0, 1)
    for i in range(4):
        for j in range(i + 1, 4):
            d = np.sum((tet[i] - tet[j]) ** 2)
            if d > best:
                best, pair = d, (i, j)
    i, j = pair
    mid = 0.5 * (tet[i] + tet[j])
    a = tet.copy()
    b = tet.copy()
    a[j] = mid
    b[i] = mid
    return a, b


def integrate_tetrahedra(tets, tol: float = 1e-10, order: int = 6,
                         max_pieces: int = 200000) -> tuple:
    """Hyperbolic volume of a union of Klein tetrahedra ``(T, 4, 3)``.

    Returns ``(volume, error_estimate)``; raises
    :class:`QuadratureNotConverged` if the estimate cannot be brought under
    ``tol`` within ``max_pieces`` tetrahedra.
    """
    work = []
    for tet in np.asarray(tets, dtype=float):
        work.extend(_orient_ideal(tet))
    if not work:
        return 0.0, 0.0
    done_val = 0.0
    done_err = 0.0
    pending = np.array(work)
    while len(pending):
        lo = _integrate(pending, order)
        hi = _integrate(pending, order + 4)
        err = np.abs(hi - lo)
        # per-piece share of the budget, relative to the running total
        total = done_val + float(np.sum(hi))
        budget = tol * max(total, 1e-300) / max(len(pending), 1)
        ok = err <= budget
        done_val += float(np.sum(hi[ok]))
        done_err += float(np.sum(err[ok]))
        rest = pending[~ok]
        if not len(rest):
            break
        if len(rest) * 2 + len(work) > max_pieces:
            raise QuadratureNotConverged(
                f"error {done_err + float(np.sum(err[~ok])):.3g} above tolerance after subdivision cap"
            )
        halves = [h for tet in rest for h in _bisect(tet)]
        work.extend(halves)
        pending = np.array(halves)
    return done_val, done_err
