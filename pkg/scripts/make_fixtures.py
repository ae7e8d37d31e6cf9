"""Regenerate the generator-file fixtures shipped in src/hypdomain/fixtures/.

Requires SnapPy (``pip install snappy``).  SnapPy is the independent
reference and is used only here; nothing in the package imports it.

For each manifold the script records:

* a presentation whose generators are face pairings of SnapPy's own
  Dirichlet domain, conjugated so that SnapPy's (injectivity-radius
  maximizing) basepoint sits at the origin of the hyperboloid;
* the same conjugate of SnapPy's unsimplified presentation
  (``original_generators``), with the words expressing each chosen
  generator in it;
* relators (SnapPy's relators rewritten in the chosen generators);
* SnapPy's volume, length spectrum up to a cutoff and Dirichlet domain
  statistics.

The hyperboloid convention is the one used by hypdomain: a point
(x0, x1, x2, x3) corresponds to the Hermitian matrix
[[x0 + x3, x1 + i x2], [x1 - i x2, x0 - x3]] and g acts by H -> g H g^*.

    python scripts/make_fixtures.py
"""

import itertools
import json
import sys
from pathlib import Path

import numpy as np
import scipy.linalg
import snappy

OUT = Path(__file__).resolve().parents[1] / "src" / "hypdomain" / "fixtures"

MANIFOLDS = {
    "weeks": ("m003(-3,1)", "closed"),
    "m003_m2_3": ("m003(-2,3)", "closed"),
    "figure8": ("m004", "cusped"),
}

SPECTRUM_CUTOFF = 1.5

HERM = np.array(
    [[[1, 0], [0, 1]], [[0, 1], [1, 0]], [[0, 1j], [-1j, 0]], [[1, 0], [0, -1]]],
    dtype=complex,
)


def real4(m):
    return np.array([[float(m[i, j]) for j in range(4)] for i in range(4)])


def complex2(m):
    return np.array([[complex(m[i, j]) for j in range(2)] for i in range(2)])


def herm_coords(h):
    return np.array([0.5 * (h[0, 0] + h[1, 1]).real, h[0, 1].real, h[0, 1].imag, 0.5 * (h[0, 0] - h[1, 1]).real])


def lorentz(m):
    return np.column_stack([herm_coords(m @ e @ m.conj().T) for e in HERM])


def herm(p):
    return np.array([[p[0] + p[3], p[1] + 1j * p[2]], [p[1] - 1j * p[2], p[0] - p[3]]])


def conjugator(targets, sources):
    """Solve T S_i = T_i T (least squares null vector) for a 4x4 T."""
    rows = [np.kron(np.eye(4), t) - np.kron(s.T, np.eye(4)) for t, s in zip(targets, sources)]
    _, sv, vt = np.linalg.svd(np.vstack(rows))
    assert sv[-1] < 1e-10 * sv[0], sv
    return vt[-1].reshape(4, 4, order="F")


def invert_letter(ch):
    return ch.lower() if ch.isupper() else ch.upper()


def invert_word(w):
    return "".join(invert_letter(c) for c in reversed(w))


def reduce_word(w):
    out = []
    for ch in w:
        if out and out[-1] == invert_letter(ch):
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def word_matrix(word, mats):
    m = np.eye(2, dtype=complex)
    for ch in word:
        g = mats[ch.lower()]
        if ch.isupper():
            g = np.linalg.inv(g)
        m = m @ g
    return m


def same(m1, m2, tol=1e-8):
    return min(np.abs(m1 - m2).max(), np.abs(m1 + m2).max()) < tol


def express(target, gens, max_len=5):
    """Shortest word in ``gens`` (dict letter -> matrix) equal to ``target`` up to sign."""
    letters = list(gens) + [c.upper() for c in gens]
    frontier = [("", np.eye(2, dtype=complex))]
    for _ in range(max_len):
        nxt = []
        for w, m in frontier:
            for ch in letters:
                if w and ch == invert_letter(w[-1]):
                    continue
                mm = m @ (gens[ch] if ch.islower() else np.linalg.inv(gens[ch.lower()]))
                if same(mm, target):
                    return w + ch
                nxt.append((w + ch, mm))
        frontier = nxt
    return None


def fixture(name, kind):
    M = snappy.ManifoldHP(name)
    D = M.dirichlet_domain(include_words=True)
    G0 = M.fundamental_group(False)
    orig_names = list(G0.generators())
    orig = {g: complex2(G0.SL2C(g)) for g in orig_names}

    # SnapPy's O(3,1) frame -> our Lorentz frame, then SnapPy's basepoint in our frame.
    probe = orig_names + [a + b for a, b in itertools.combinations(orig_names, 2)]
    to_ours = conjugator([real4(G0.O31(w)) for w in probe], [lorentz(word_matrix(w, orig)) for w in probe])
    words = D.pairing_words()
    to_domain = conjugator([real4(m) for m in D.pairing_matrices()], [real4(G0.O31(w)) for w in words])
    x = np.linalg.solve(to_ours, np.linalg.solve(to_domain, [1.0, 0.0, 0.0, 0.0]))
    x = x / np.sqrt(x[0] ** 2 - x[1:] @ x[1:])
    x = x * np.sign(x[0])

    # B is the positive square root of herm(x): B(origin) = x.
    B = scipy.linalg.sqrtm(herm(x))
    B = B / np.sqrt(np.linalg.det(B))
    Binv = np.linalg.inv(B)
    conj = {g: Binv @ m @ B for g, m in orig.items()}

    # one pairing word per inverse pair, shortest first
    pairs = []
    for w in sorted(words, key=lambda w: (len(w), w.swapcase())):
        if invert_word(w) not in pairs and w not in pairs:
            pairs.append(w)
    chosen = expressions = None
    for combo in itertools.chain.from_iterable(
        itertools.combinations(pairs, n) for n in range(1, len(orig_names) + 1)
    ):
        cand = {chr(ord("a") + i): word_matrix(w, conj) for i, w in enumerate(combo)}
        exprs = [express(conj[g], cand) for g in orig_names]
        if all(e is not None for e in exprs):
            chosen, expressions = combo, exprs
            break
    assert chosen is not None
    gens = [word_matrix(w, conj) for w in chosen]
    sub = dict(zip(orig_names, expressions))
    relators = []
    for r in G0.relators():
        rw = reduce_word("".join(sub[c] if c.islower() else invert_word(sub[c.lower()]) for c in r))
        assert same(word_matrix(rw, {chr(ord("a") + i): g for i, g in enumerate(gens)}), np.eye(2))
        if rw:
            relators.append(rw)

    spectrum = [
        {"lambda": float(s["length"].real()), "theta": float(s["length"].imag()), "multiplicity": int(s["multiplicity"])}
        for s in M.length_spectrum(SPECTRUM_CUTOFF)
    ]

    def enc(m):
        return [[[float(z.real), float(z.imag)] for z in row] for row in m]

    return {
        "name": name,
        "kind": kind,
        "generators": [enc(g) for g in gens],
        "generator_words": list(chosen),
        "relators": relators,
        "original_generators": [enc(conj[g]) for g in orig_names],
        "original_relators": [str(r) for r in G0.relators()],
        "original_in_chosen": expressions,
        "reference_volume": float(M.volume()),
        "reference_spectrum_cutoff": SPECTRUM_CUTOFF,
        "reference_spectrum": spectrum,
        "reference_dirichlet": {
            "vertices": int(D.num_vertices()),
            "finite_vertices": int(D.num_finite_vertices()),
            "ideal_vertices": int(D.num_ideal_vertices()),
            "edges": int(D.num_edges()),
            "faces": int(D.num_faces()),
            "spine_radius": float(D.spine_radius()),
            "in_radius": float(D.in_radius()),
            "volume": float(D.volume()),
            "pairing_words": list(words),
        },
        "provenance": (
            f"SnapPy {snappy.__version__}: ManifoldHP('{name}').fundamental_group(False).SL2C "
            "conjugated so dirichlet_domain()'s basepoint is the origin; generators are "
            "dirichlet_domain(include_words=True).pairing_words()"
        ),
    }


def dump(data):
    return json.dumps(data, indent=1) + "\n"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for key, (name, kind) in MANIFOLDS.items():
        data = fixture(name, kind)
        path = OUT / f"{key}.json"
        path.write_text(dump(data))
        print(f"wrote {path}: generators {data['generator_words']}", file=sys.stderr)


if __name__ == "__main__":
    main()
