"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line through :func:`criterion`; the lines are
printed as they happen and again in the terminal summary (see conftest.py).
"""

import contextlib
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from conftest import built, tiles_for
from hypdomain.cli import RunConfig, cmd_spectrum
from hypdomain.domain import build_domain, injectivity_radius
from hypdomain.hypcore import (
    ORIGIN,
    apply,
    complex_length,
    compose,
    dist,
    exp_map,
    from_klein,
    inverse,
    loxodromic,
    normalize,
    same_matrix,
)
from hypdomain.io import FIXTURES, fixture_path, load_fixture
from hypdomain.optimizer import minimize_spine_radius
from hypdomain.spectrum import big_to_small, spectrum_compare
from hypdomain.tiling import compare_sets, enumerate_words, theorem1_diagnostics, tile_ball, tiling_radius, verify_covering
from hypdomain.wordprob import canonical_key, same_element_pairs

RESULTS = []


@contextlib.contextmanager
def criterion(number, title):
    """Record PASS/FAIL for one criterion; ``notes`` collects the measured values."""
    notes = []
    try:
        yield notes
    except BaseException:
        line = f"criterion {number:2d} FAIL  {title}  {'; '.join(notes)}"
        RESULTS.append(line)
        print(line)
        raise
    line = f"criterion {number:2d} PASS  {title}  {'; '.join(notes)}"
    RESULTS.append(line)
    print(line)


def random_element(rng, scale=1.0):
    m = rng.normal(scale=scale, size=(2, 2)) + 1j * rng.normal(scale=scale, size=(2, 2))
    return normalize(m + np.eye(2) * 1.5)


def random_point(rng):
    u = rng.uniform(-1, 1, size=3)
    return from_klein(0.7 * u / max(1.0, np.linalg.norm(u)))


def test_criterion_01_kernel(rng):
    with criterion(1, "kernel identities, 10^3 checks each within 1e-9, < 5 s") as notes:
        t0 = time.perf_counter()
        worst = [0.0, 0.0, 0.0]
        for _ in range(1000):
            g, h = random_element(rng), random_element(rng)
            p, q = random_point(rng), random_point(rng)
            worst[0] = max(worst[0], abs(dist(apply(g, p), apply(g, q)) - dist(p, q)))
            worst[1] = max(worst[1], float(dist(apply(compose(g, h), p), apply(g, apply(h, p)))))
            lox = compose(h, compose(loxodromic(rng.uniform(0.1, 3), rng.uniform(-3, 3)), inverse(h)))
            a, b = complex_length(lox), complex_length(compose(g, compose(lox, inverse(g))))
            gap = max(abs(a.lam - b.lam), abs(math.remainder(a.theta - b.theta, 2 * math.pi)))
            worst[2] = max(worst[2], gap)
        elapsed = time.perf_counter() - t0
        notes.append(f"max errors isometry={worst[0]:.2e} composition={worst[1]:.2e} "
                     f"conjugation={worst[2]:.2e}; {elapsed:.2f} s")
        assert max(worst) < 1e-9
        assert elapsed < 5


def test_criterion_02_cyclic_closed_forms():
    with criterion(2, "loxodromic closed forms on a 5x5 grid, k <= 4, within 1e-9") as notes:
        worst = 0.0
        axis_points = [ORIGIN, exp_map(ORIGIN, [0, 0, 1], 0.7)]
        for lam in (0.1, 0.5, 1.0, 2.0, 3.0):
            for theta in (-3.0, -1.5, 0.0, 1.5, 3.0):
                g = loxodromic(lam, theta)
                cl = complex_length(g)
                worst = max(worst, abs(cl.lam - lam), abs(cl.theta - theta))
                for x in axis_points:
                    y = x
                    for k in range(1, 5):
                        y = apply(g, y)
                        worst = max(worst, abs(float(dist(x, y)) - k * lam))
        notes.append(f"max error {worst:.2e}")
        assert worst < 1e-9


def _membership_violations(poly, rng, others, n=1000):
    lo, hi = poly.vertices.min(axis=0), poly.vertices.max(axis=0)
    pts = []
    while len(pts) < n:
        u = rng.uniform(lo, hi, size=(4000, 3))
        u = u[(np.linalg.norm(u, axis=1) < 0.999) & poly.contains(u)]
        pts.extend(u)
    ys = from_klein(np.array(pts[:n]))
    dx = dist(poly.basepoint, ys)
    bad = 0
    for g in others:
        bad += int(np.sum(dx > dist(apply(g, poly.basepoint), ys) + 1e-9))
    return bad


@pytest.mark.parametrize("name", FIXTURES)
def test_criterion_03_domain_validity(name, rng):
    with criterion(3, f"domain validity [{name}], < 60 s") as notes:
        t0 = time.perf_counter()
        gf = load_fixture(name)
        poly, stats = build_domain(gf.generators)
        others = poly.face_elements() + tiles_for(name).elements[1:]
        bad_pairs = 0
        for k, f in enumerate(poly.faces):
            partner = poly.faces[f.paired_face]
            bad_pairs += partner.paired_face != k
            bad_pairs += not same_matrix(f.element.matrix @ partner.element.matrix, np.eye(2), 1e-9)
        violations = _membership_violations(poly, rng, others)
        elapsed = time.perf_counter() - t0
        chi = stats.n_vertices - stats.n_edges + stats.n_faces
        notes.append(f"converged={poly.converged} at length {poly.word_length_reached}; "
                     f"V-E+F={stats.n_vertices}-{stats.n_edges}+{stats.n_faces}={chi}; "
                     f"bad pairings={bad_pairs}; membership violations={violations}/1000; {elapsed:.1f} s")
        assert poly.converged
        assert chi == 2
        assert bad_pairs == 0
        assert violations == 0
        assert elapsed < 60


@pytest.mark.parametrize("name", FIXTURES)
def test_criterion_04_injectivity_radius(name):
    with criterion(4, f"injectivity radius monotone and equal to half the shortest face translation [{name}]") as notes:
        gf, poly, stats = built(name)
        history = []
        build_domain(gf.generators, compute_volume=False,
                     on_cut=lambda g, p: history.append(injectivity_radius(p)))
        increases = sum(b > a for a, b in zip(history, history[1:]))
        x = poly.basepoint
        half_min = min(float(dist(x, apply(g, x))) for g in poly.face_elements()) / 2
        notes.append(f"{len(history)} cuts, increases={increases}; "
                     f"rho'={stats.injectivity_radius:.12f} vs {half_min:.12f}")
        assert increases == 0
        assert abs(history[-1] - stats.injectivity_radius) < 1e-12
        assert abs(stats.injectivity_radius - half_min) < 1e-9


@pytest.mark.parametrize("name", FIXTURES)
def test_criterion_05_volume(name):
    with criterion(5, f"volume within 1e-3 relative, delta V >= -1e-9 [{name}]") as notes:
        gf, poly, stats = built(name)
        rel = abs(stats.volume - gf.reference_volume) / gf.reference_volume
        report = theorem1_diagnostics(poly, tiles_for(name), gf.reference_volume, domain_volume=stats.volume)
        notes.append(f"V={stats.volume:.12f} reference={gf.reference_volume:.12f} rel={rel:.1e} "
                     f"quadrature error={stats.volume_error:.1e} delta V={report.delta_v:.1e}")
        assert rel < 1e-3
        assert stats.volume_error < 1e-3 * gf.reference_volume
        assert report.delta_v >= -1e-9


@pytest.mark.parametrize("name", FIXTURES)
def test_criterion_06_oracle(name):
    with criterion(6, f"tiling equals word enumeration at cutoff 1.0 [{name}], < 120 s") as notes:
        gf, poly, stats = built(name)
        t0 = time.perf_counter()
        ts = tile_ball(poly, tiling_radius(stats.spine_radius, 1.0))
        oracle = enumerate_words(gf.generators, 64, ts.radius, poly.basepoint, margin=ts.margin)
        missing, extra = compare_sets(oracle.elements, ts.elements, poly.basepoint, stats.injectivity_radius,
                                      boundary=oracle.bound)
        q = 1e-6
        tile_keys = {canonical_key(g, poly.basepoint, q) for g in ts.elements}
        oracle_keys = oracle.keys(q, poly.basepoint)
        elapsed = time.perf_counter() - t0
        notes.append(f"{len(ts)} tiles, {len(oracle.elements)} enumerated (length {oracle.length_reached}, "
                     f"frontier closed={oracle.frontier_closed}); missing={len(missing)} extra={len(extra)}; "
                     f"key sets equal={tile_keys == oracle_keys}; {elapsed:.1f} s")
        assert oracle.frontier_closed
        assert not missing and not extra
        assert tile_keys == oracle_keys
        assert elapsed < 120


@pytest.mark.parametrize("name", FIXTURES)
def test_criterion_07_covering(name):
    with criterion(7, f"covering with 10^4 samples [{name}]") as notes:
        _, poly, _ = built(name)
        cov = verify_covering(tiles_for(name), poly, 10_000, seed=1)
        notes.append(f"fraction={cov.fraction} mean multiplicity={cov.mean_multiplicity:.4f}")
        assert cov.fraction == 1.0


def _matrix_equal(a, b):
    minus = np.abs(a[:, None] - b[None]).max(axis=(2, 3))
    plus = np.abs(a[:, None] + b[None]).max(axis=(2, 3))
    return (minus <= 1e-9) | (plus <= 1e-9)


@pytest.mark.parametrize("name", FIXTURES)
def test_criterion_08_same_element_vs_matrices(name):
    with criterion(8, f"same_element agrees with +-matrix comparison on all pairs [{name}], < 60 s") as notes:
        _, poly, stats = built(name)
        cutoff = next(c for c in (1.0, 1.5, 2.0) if len(tiles_for(name, c)) >= 1000)
        mats = tiles_for(name, cutoff).matrices
        n = len(mats)
        t0 = time.perf_counter()
        disagree = equal_pairs = 0
        for i in range(0, n, 128):
            block = mats[i:i + 128]
            ours = same_element_pairs(block, mats, poly.basepoint, stats.injectivity_radius)
            ref = _matrix_equal(block, mats)
            disagree += int(np.sum(ours != ref))
            equal_pairs += int(np.sum(ref))
        elapsed = time.perf_counter() - t0
        notes.append(f"cutoff {cutoff}: {n} elements, {n * n} pairs, disagreements={disagree}, "
                     f"equal pairs={equal_pairs}; {elapsed:.1f} s")
        assert n >= 1000
        assert disagree == 0
        assert equal_pairs == n
        assert elapsed < 60


OFFSET = exp_map(ORIGIN, [1.0, 1.0, 1.0], 0.05)


@lru_cache(maxsize=None)
def reoptimized(name):
    gf = load_fixture(name)
    return minimize_spine_radius(gf.generators, OFFSET)


@pytest.mark.parametrize("name", ["weeks", "m003_m2_3"])
def test_criterion_09_spectrum_invariance(name):
    with criterion(9, f"spectrum from origin vs re-optimized displaced basepoint [{name}]") as notes:
        res = reoptimized(name)
        poly = res.poly
        ts = tile_ball(poly, tiling_radius(res.spine_radius, 1.0))
        moved = big_to_small(ts, 1.0)
        here = big_to_small(tiles_for(name, 1.0), 1.0)
        ok, report = spectrum_compare(here, moved, 1e-6)
        notes.append(f"basepoint moved {float(dist(ORIGIN, res.basepoint)):.4f}, spine radius "
                     f"{res.spine_radius:.6f}; {report[-1]}")
        assert ok, report


def test_criterion_10_optimizer():
    with criterion(10, "optimizer from an off-center start") as notes:
        res = reoptimized("weeks")
        radii = [r for _, r in res.trace]
        strict = all(b < a for a, b in zip(radii, radii[1:]))
        notes.append(f"{len(radii)} accepted steps, {radii[0]:.6f} -> {radii[-1]:.6f}, strictly decreasing={strict}")
        assert radii[-1] <= radii[0]
        assert len(radii) > 1 and strict


@pytest.mark.parametrize("name", FIXTURES)
def test_criterion_11_determinism(name, tmp_path, capsys):
    with criterion(11, f"two cmd_spectrum runs byte-identical [{name}]") as notes:
        cfg = RunConfig(cutoff=1.0, samples=2000)
        path = fixture_path(name)
        codes = [cmd_spectrum(cfg, path, str(tmp_path / tag)) for tag in ("first", "second")]
        capsys.readouterr()
        suffixes = ("biglist.csv", "smalllist.csv", "excluded.csv", "report.json")
        same = [(tmp_path / f"first.{s}").read_bytes() == (tmp_path / f"second.{s}").read_bytes() for s in suffixes]
        notes.append(f"exit codes {codes}; identical files {sum(same)}/{len(same)}")
        assert codes == [0, 0]
        assert all(same)
