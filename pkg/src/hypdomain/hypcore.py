"""Hyperbolic 3-space kernel.

Points of H^3 live on the upper sheet of the hyperboloid
``<x, x> = -1`` in Minkowski space with signature (-, +, +, +).  Isometries
are elements of PSL(2, C) acting on 2x2 Hermitian matrices by
``H -> g H g^*``; the correspondence is::

    (x0, x1, x2, x3)  <->  [[x0 + x3, x1 + i x2],
                            [x1 - i x2, x0 - x3]]

so that ``det H = -<x, x>``.  The Klein (projective) ball model is the
radial projection ``u = (x1, x2, x3) / x0``.

Points are plain ``numpy`` arrays of shape ``(..., 4)``; Klein points have
shape ``(..., 3)``.  Group elements are :class:`MoebiusElement` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import IdentityElement, SingularMatrix

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "MoebiusElement",
    "ComplexLength",
    "ORIGIN",
    "minkowski_dot",
    "normalize",
    "compose",
    "inverse",
    "identity",
    "element",
    "loxodromic",
    "apply",
    "apply_many",
    "lorentz_matrix",
    "dist",
    "complex_length",
    "to_klein",
    "from_klein",
    "boost",
    "exp_map",
    "canonical_sign",
    "same_matrix",
    "word_to_string",
    "parse_word",
    "evaluate_word",
]


@dataclass(frozen=True)
class Tolerance:
    """Comparison slack used everywhere downstream.

    ``eps_equal`` is dimensionless (matrix entries, traces, Klein
    coordinates), ``eps_geom`` is measured in hyperbolic length and
    ``quantum`` is the cell size used to hash group elements.
    """

    eps_equal: float = 1e-9
    eps_geom: float = 1e-9
    quantum: float = 1e-6

    def __post_init__(self):
        if not 0 < self.eps_equal < 1e-3:
            raise ValueError("eps_equal must lie in (0, 1e-3)")
        if not 0 < self.eps_geom < 1e-3:
            raise ValueError("eps_geom must lie in (0, 1e-3)")
        if self.quantum < 4 * self.eps_geom:
            raise ValueError("quantum must be at least 4 * eps_geom")


DEFAULT_TOL = Tolerance()

ORIGIN = np.array([1.0, 0.0, 0.0, 0.0])

_SIGNATURE = np.array([-1.0, 1.0, 1.0, 1.0])


class ComplexLength(NamedTuple):
    """Translation length ``lam`` >= 0 and rotation angle ``theta`` in (-pi, pi]."""

    lam: float
    theta: float

    def __complex__(self):
        return complex(self.lam, self.theta)


@dataclass(frozen=True, eq=False)
class MoebiusElement:
    """A projective class +-M in PSL(2, C) together with a word that produced it.

    ``word`` is a tuple of signed 1-based generator indices read left to
    right (``(1, -2)`` is ``a B``).  ``det_residual`` records ``|det - 1|``
    after normalization.
    """

    matrix: np.ndarray
    word: tuple = ()
    det_residual: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex).reshape(2, 2)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "word", tuple(int(w) for w in self.word))

    @property
    def trace(self) -> complex:
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def entries(self):
        a, b, c, d = self.matrix.ravel()
        return complex(a), complex(b), complex(c), complex(d)

    def __matmul__(self, other: "MoebiusElement") -> "MoebiusElement":
        return compose(self, other)

    def __repr__(self):
        return f"MoebiusElement(word={word_to_string(self.word)!r}, matrix={self.matrix.tolist()!r})"


def minkowski_dot(p, q):
    """Bilinear form -p0 q0 + p1 q1 + p2 q2 + p3 q3 (broadcasts over leading axes)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.sum(p * q * _SIGNATURE, axis=-1)


def normalize(m, word=(), tol: Tolerance = DEFAULT_TOL) -> MoebiusElement:
    """Scale a nonsingular 2x2 complex matrix (or element) to determinant 1."""
    if isinstance(m, MoebiusElement):
        word = m.word
        m = m.matrix
    m = np.asarray(m, dtype=complex).reshape(2, 2)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) <= tol.eps_equal:
        raise SingularMatrix(f"determinant {det} is too small to normalize")
    out = m / np.sqrt(det)
    residual = abs(out[0, 0] * out[1, 1] - out[0, 1] * out[1, 0] - 1.0)
    return MoebiusElement(out, word, float(residual))


def element(entries, word=(), tol: Tolerance = DEFAULT_TOL) -> MoebiusElement:
    """Build a normalized element from nested entries ``[[a, b], [c, d]]``."""
    return normalize(np.asarray(entries, dtype=complex), word, tol)


def identity() -> MoebiusElement:
    return MoebiusElement(np.eye(2, dtype=complex), ())


def loxodromic(lam: float, theta: float = 0.0, word=()) -> MoebiusElement:
    """``diag(e^{l/2}, e^{-l/2})`` with ``l = lam + i theta``; its axis passes through ORIGIN."""
    half = complex(lam, theta) / 2
    return MoebiusElement(np.diag([np.exp(half), np.exp(-half)]), word)


def compose(g: MoebiusElement, h: MoebiusElement) -> MoebiusElement:
    """Matrix product ``g h`` (apply ``h`` first), words concatenated."""
    m = g.matrix @ h.matrix
    residual = abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] - 1.0)
    return MoebiusElement(m, g.word + h.word, float(residual))


def inverse(g: MoebiusElement) -> MoebiusElement:
    a, b, c, d = g.matrix.ravel()
    m = np.array([[d, -b], [-c, a]])
    return MoebiusElement(m, tuple(-w for w in reversed(g.word)), g.det_residual)


# Hermitian basis images: column k of the Lorentz matrix is the image of e_k.
_HERM_BASIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _herm_to_coords(h):
    x0 = 0.5 * (h[..., 0, 0] + h[..., 1, 1]).real
    x3 = 0.5 * (h[..., 0, 0] - h[..., 1, 1]).real
    x1 = h[..., 0, 1].real
    x2 = h[..., 0, 1].imag
    return np.stack([x0, x1, x2, x3], axis=-1)


def _coords_to_herm(p):
    p = np.asarray(p, dtype=float)
    h = np.empty(p.shape[:-1] + (2, 2), dtype=complex)
    h[..., 0, 0] = p[..., 0] + p[..., 3]
    h[..., 1, 1] = p[..., 0] - p[..., 3]
    h[..., 0, 1] = p[..., 1] + 1j * p[..., 2]
    h[..., 1, 0] = p[..., 1] - 1j * p[..., 2]
    return h


def lorentz_matrix(mats) -> np.ndarray:
    """SO+(3,1) matrices for a stack of SL(2,C) matrices (shape ``(..., 2, 2)``)."""
    if isinstance(mats, MoebiusElement):
        mats = mats.matrix
    mats = np.asarray(mats, dtype=complex)
    imgs = mats[..., None, :, :] @ _HERM_BASIS @ np.conj(np.swapaxes(mats, -1, -2))[..., None, :, :]
    cols = _herm_to_coords(imgs)  # (..., 4 basis, 4 coords)
    return np.swapaxes(cols, -1, -2)


def apply(g: MoebiusElement, p) -> np.ndarray:
    """Image of hyperboloid point(s) ``p`` under ``g``."""
    m = g.matrix
    h = _coords_to_herm(p)
    return _herm_to_coords(m @ h @ np.conj(m.T))


def apply_many(mats, p) -> np.ndarray:
    """Images ``g_i(p)`` of one point under a stack of matrices ``(n, 2, 2)``."""
    mats = np.asarray(mats, dtype=complex)
    h = _coords_to_herm(p)
    return _herm_to_coords(mats @ h @ np.conj(np.swapaxes(mats, -1, -2)))


def dist(p, q):
    """Hyperbolic distance ``arccosh(-<p, q>)`` (broadcasts).

    Evaluated as ``2 asinh(|p - q| / 2)`` with the Minkowski norm of the
    difference, which equals the arccosh form on the hyperboloid but keeps
    full relative accuracy for nearby points (arccosh near 1 loses half the
    digits).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    s = minkowski_dot(p - q, p - q)
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(s, 0.0)) / 2.0)


def _wrap_angle(theta):
    """Map to (-pi, pi]."""
    t = math.fmod(theta, 2 * math.pi)
    if t <= -math.pi:
        t += 2 * math.pi
    elif t > math.pi:
        t -= 2 * math.pi
    return t


def complex_length(g: MoebiusElement, tol: Tolerance = DEFAULT_TOL) -> ComplexLength:
    """Complex translation length ``2 arccosh(tr/2)`` with ``lam >= 0``."""
    m = g.matrix
    if np.max(np.abs(m - np.eye(2))) <= tol.eps_equal or np.max(np.abs(m + np.eye(2))) <= tol.eps_equal:
        raise IdentityElement("complex length of the identity is undefined")
    tr = complex(g.trace)
    if tr.real < 0 or (tr.real == 0 and tr.imag < 0):
        tr = -tr  # +-g have the same length; fix the sign so both give identical output
    ell = 2 * np.arccosh(tr / 2)
    if ell.real < 0:
        ell = -ell
    return ComplexLength(max(float(ell.real), 0.0), _wrap_angle(float(ell.imag)))


def to_klein(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p[..., 1:] / p[..., :1]


def from_klein(u) -> np.ndarray:
    """Lift Klein-ball point(s) (norm < 1) to the hyperboloid."""
    u = np.asarray(u, dtype=float)
    s = 1.0 - np.sum(u * u, axis=-1, keepdims=True)
    if np.any(s <= 0):
        raise ValueError("Klein point outside the open unit ball")
    x0 = 1.0 / np.sqrt(s)
    return np.concatenate([x0, u * x0], axis=-1)


def boost(p) -> np.ndarray:
    """Lorentz matrix of the pure boost taking ORIGIN to ``p``."""
    p = np.asarray(p, dtype=float)
    p0, ps = p[0], p[1:]
    b = np.empty((4, 4))
    b[0, 0] = p0
    b[0, 1:] = ps
    b[1:, 0] = ps
    b[1:, 1:] = np.eye(3) + np.outer(ps, ps) / (1.0 + p0)
    return b


def exp_map(p, direction, t: float) -> np.ndarray:
    """Move from ``p`` a hyperbolic distance ``t`` along unit tangent ``direction``.

    ``direction`` is a Euclidean 3-vector expressed in the orthonormal tangent
    frame obtained by boosting the standard frame at ORIGIN to ``p``.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    local = np.concatenate([[math.cosh(t)], math.sinh(t) * d])
    q = boost(p) @ local
    # re-project onto the hyperboloid to stop drift over many moves
    return q / math.sqrt(-minkowski_dot(q, q))


def canonical_sign(m) -> np.ndarray:
    """Representative of +-m whose first nonzero entry has argument in (-pi/2, pi/2]."""
    m = np.asarray(m, dtype=complex)
    for z in m.ravel():
        if abs(z) > 1e-12:
            ang = math.atan2(z.imag, z.real)
            if ang > math.pi / 2 or ang <= -math.pi / 2:
                return -m
            return m
    return m


def same_matrix(g, h, tol: float) -> bool:
    """Entrywise comparison of two PSL(2,C) elements up to overall sign."""
    a = g.matrix if isinstance(g, MoebiusElement) else np.asarray(g)
    b = h.matrix if isinstance(h, MoebiusElement) else np.asarray(h)
    return bool(np.max(np.abs(a - b)) <= tol or np.max(np.abs(a + b)) <= tol)


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def word_to_string(word: Sequence[int]) -> str:
    """SnapPy-style word: generator k is the k-th lowercase letter, inverses uppercase."""
    out = []
    for w in word:
        ch = _LETTERS[abs(w) - 1]
        out.append(ch if w > 0 else ch.upper())
    return "".join(out)


def parse_word(text: str, n_generators: int | None = None) -> tuple:
    """Inverse of :func:`word_to_string`; also accepts ``1`` as the empty word."""
    text = text.strip()
    if text in ("", "1"):
        return ()
    word = []
    for ch in text:
        k = _LETTERS.find(ch.lower())
        if k < 0:
            raise ValueError(f"invalid letter {ch!r} in word {text!r}")
        if n_generators is not None and k >= n_generators:
            raise ValueError(f"letter {ch!r} refers to a missing generator")
        word.append(k + 1 if ch.islower() else -(k + 1))
    return tuple(word)


def evaluate_word(word: Sequence[int], generators: Sequence[MoebiusElement]) -> MoebiusElement:
    """Matrix of a word in the given generators (left-to-right product)."""
    m = np.eye(2, dtype=complex)
    for w in word:
        g = generators[abs(w) - 1].matrix
        if w < 0:
            a, b, c, d = g.ravel()
            g = np.array([[d, -b], [-c, a]])
        m = m @ g
    return MoebiusElement(m, tuple(word))
