"""Command-line front end: ``hypdomain build | spectrum | check-words | roundtrip``.

Exit codes (also listed in the README):

====  ===========================================================
0     success (``check-words``: the two words are equal)
1     ``check-words``: the two words are distinct
2     command-line usage error
3     input file could not be parsed
4     domain construction did not converge (see ``--allow-approximate``)
5     a generator does not support a face of the domain
6     tiling verification failed (oracle mismatch or incomplete covering)
7     tile count exceeded ``--tile-cap``
8     tiling radius too small for the cutoff
9     a re-parsed export differs from the original
10    any other computation error
====  ===========================================================
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .domain import build_domain, domain_stats, volume
from .errors import (
    ExplosionGuard,
    GeneratorNotFace,
    HypDomainError,
    InsufficientRadius,
    ParseError,
)
from .hypcore import DEFAULT_TOL, Tolerance, evaluate_word, from_klein, parse_word
from .optimizer import OptimizerParams, minimize_spine_radius
from .spectrum import big_to_small
from .tiling import (
    DEFAULT_TILE_CAP,
    FrontierNotClosed,
    enumerate_words,
    theorem1_diagnostics,
    tile_ball,
    tiling_radius,
    verify_covering,
)
from .wordprob import same_element_report

EXIT_OK = 0
EXIT_DISTINCT = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NOT_CONVERGED = 4
EXIT_GENERATOR_NOT_FACE = 5
EXIT_VERIFICATION = 6
EXIT_EXPLOSION = 7
EXIT_RADIUS = 8
EXIT_ROUNDTRIP = 9
EXIT_ERROR = 10

log = logging.getLogger("hypdomain")


@dataclass(frozen=True)
class RunConfig:
    basepoint: tuple = (0.0, 0.0, 0.0)  # Klein coordinates
    cutoff: float = 1.0
    max_word_length: int = 16
    tolerances: Tolerance = DEFAULT_TOL
    optimize_basepoint: bool = False
    tile_cap: int = DEFAULT_TILE_CAP
    oracle_max_length: int = 64
    samples: int = 10000
    seed: int = 0
    oriented: bool = False
    allow_approximate: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.cutoff < 0 or not math.isfinite(self.cutoff):
            raise ValueError("cutoff must be a finite non-negative number")
        if self.max_word_length < 1:
            raise ValueError("max word length must be positive")
        if self.tile_cap < 1:
            raise ValueError("tile cap must be positive")
        if len(self.basepoint) != 3 or float(np.dot(self.basepoint, self.basepoint)) >= 1:
            raise ValueError("basepoint must be 3 Klein coordinates inside the unit ball")


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _domain(cfg: RunConfig, gf: io.GeneratorFile, compute_volume: bool = True):
    x = from_klein(np.array(cfg.basepoint, dtype=float))
    trace = None
    if cfg.optimize_basepoint:
        res = minimize_spine_radius(gf.generators, x, OptimizerParams(), cfg.tolerances,
                                    cfg.max_word_length, cfg.threads)
        x = res.basepoint
        trace = [{"klein": [float(a) for a in p[1:] / p[0]], "spine_radius": r} for p, r in res.trace]
        for row in trace:
            log.info("optimizer step: spine radius %.12g at %s", row["spine_radius"], row["klein"])
    try:
        poly, stats = build_domain(gf.generators, x, cfg.max_word_length, cfg.tolerances,
                                   compute_volume=False)
    except GeneratorNotFace as exc:
        raise _Failure(EXIT_GENERATOR_NOT_FACE, str(exc)) from None
    if not poly.converged and not cfg.allow_approximate:
        raise _Failure(EXIT_NOT_CONVERGED,
                       f"domain not converged after word length {poly.word_length_reached}")
    if compute_volume:
        stats = domain_stats(poly, compute_volume=True)
    return poly, stats, trace


def cmd_build(cfg: RunConfig, path, out: str) -> int:
    gf = io.load_generator_file(path, cfg.tolerances)
    poly, stats, trace = _domain(cfg, gf)
    doc = io.polyhedron_dict(poly, stats)
    doc["name"] = gf.name
    if trace is not None:
        doc["optimizer_trace"] = trace
    _write(Path(out + ".polyhedron.json"), io.dumps(doc))
    print(f"{gf.name}: V={stats.n_vertices} E={stats.n_edges} F={stats.n_faces} "
          f"chi={stats.euler_characteristic} volume={stats.volume} "
          f"injectivity_radius={stats.injectivity_radius:.12g} spine_radius={stats.spine_radius:.12g}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, path, out: str) -> int:
    gf = io.load_generator_file(path, cfg.tolerances)
    poly, stats, trace = _domain(cfg, gf, compute_volume=False)
    vol = volume(poly)[0] if poly.converged else math.nan
    R = tiling_radius(stats.spine_radius, cfg.cutoff)
    try:
        tiles = tile_ball(poly, R, cfg.tolerances, cap=cfg.tile_cap)
    except ExplosionGuard as exc:
        raise _Failure(EXIT_EXPLOSION, str(exc)) from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FrontierNotClosed)
        oracle = enumerate_words(gf.generators, cfg.oracle_max_length, R, poly.basepoint,
                                 margin=tiles.margin, tol=cfg.tolerances)
    coverage = verify_covering(tiles, poly, cfg.samples, seed=cfg.seed)
    report = theorem1_diagnostics(poly, tiles, gf.reference_volume, oracle, coverage,
                                  domain_volume=vol, tol=cfg.tolerances)
    try:
        spec = big_to_small(tiles, cfg.cutoff, tol=cfg.tolerances, oriented=cfg.oriented)
    except InsufficientRadius as exc:
        raise _Failure(EXIT_RADIUS, str(exc)) from None

    _write(Path(out + ".biglist.csv"), io.biglist_text(tiles))
    _write(Path(out + ".smalllist.csv"), io.smalllist_text(spec))
    _write(Path(out + ".excluded.csv"), io.excluded_text(spec))
    doc = {
        "name": gf.name,
        "cutoff": cfg.cutoff,
        "oriented": cfg.oriented,
        "basepoint": [float(a) for a in poly.basepoint],
        "n_tiles": len(tiles),
        "report": io.report_dict(report),
        "spectrum": io.spectrum_dict(spec),
    }
    if trace is not None:
        doc["optimizer_trace"] = trace
    _write(Path(out + ".report.json"), io.dumps(doc))

    print(f"{gf.name}: R={R:.12g} tiles={len(tiles)} injectivity_radius={report.injectivity_radius:.12g} "
          f"delta_v={report.delta_v} coverage={report.coverage_fraction}")
    for e in spec.entries:
        print(f"  {e.length.lam:.12g} {e.length.theta:+.12g}  x{e.multiplicity}  {' '.join(e.representatives)}")
    ok = report.tiling_complete and oracle.frontier_closed and report.coverage_fraction == 1.0
    if not ok:
        print(f"verification failed: missing={len(report.oracle_missing)} "
              f"frontier_closed={oracle.frontier_closed} coverage={report.coverage_fraction}", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_check_words(cfg: RunConfig, path, word1: str, word2: str) -> int:
    gf = io.load_generator_file(path, cfg.tolerances)
    n = len(gf.generators)
    try:
        w1, w2 = parse_word(word1, n), parse_word(word2, n)
    except ValueError as exc:
        raise _Failure(EXIT_USAGE, str(exc)) from None
    poly, stats, _ = _domain(cfg, gf, compute_volume=False)
    g, h = evaluate_word(w1, gf.generators), evaluate_word(w2, gf.generators)
    rep = same_element_report(g, h, poly.basepoint, stats.injectivity_radius, cfg.tolerances)
    print(f"rho = {stats.injectivity_radius:.12g}")
    print(f"stage 1: | |Re tr| - |Re tr'| | = {rep.trace_gap:.6g}")
    print(f"stage 2: |d(x,gx) - d(x,g'x)| = {rep.displacement_gap:.6g}")
    if not math.isnan(rep.image_distance):
        print(f"stage 3: d(gx, g'x) = {rep.image_distance:.6g} (threshold {2 * stats.injectivity_radius:.6g})")
    print(f"{'equal' if rep.verdict else 'distinct'} (decided at stage {rep.stage})")
    return EXIT_OK if rep.verdict else EXIT_DISTINCT


def _roundtrip_one(path: Path) -> bool:
    text = path.read_text()
    name = path.name
    if name.endswith(".biglist.csv"):
        again = io.biglist_text(io.parse_biglist(text))
    elif name.endswith(".smalllist.csv"):
        again = io.smalllist_text(io.parse_smalllist(text))
    elif name.endswith(".excluded.csv"):
        again = io.excluded_text(io.parse_excluded(text))
    elif name.endswith(".polyhedron.json") or name.endswith(".report.json"):
        try:
            again = io.dumps(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno) from None
    else:
        first = io.parse_generator_text(text)
        second = io.parse_generator_text(io.generator_file_text(first))
        return all(np.array_equal(a, b) for a, b in zip(first.raw_matrices, second.raw_matrices)) \
            and len(first.raw_matrices) == len(second.raw_matrices) \
            and first.relators == second.relators and first.reference_volume == second.reference_volume
    return again == text


def cmd_roundtrip(paths) -> int:
    ok = True
    for p in paths:
        same = _roundtrip_one(Path(p))
        print(f"{p}: {'identical' if same else 'DIFFERS'}")
        ok &= same
    return EXIT_OK if ok else EXIT_ROUNDTRIP


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypdomain", description="Dirichlet domains and length spectra "
                                     "of hyperbolic 3-manifolds from generating matrices.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="generator file (JSON)")
        p.add_argument("--basepoint", nargs=3, type=float, default=(0.0, 0.0, 0.0), metavar=("U1", "U2", "U3"),
                       help="basepoint in Klein coordinates (default: origin)")
        p.add_argument("--max-word-length", type=int, default=16, help="word length limit for the domain (16)")
        p.add_argument("--optimize", action="store_true", help="minimize the spine radius over the basepoint first")
        p.add_argument("--allow-approximate", action="store_true",
                       help="continue with a domain that did not converge")
        p.add_argument("--eps-equal", type=float, default=DEFAULT_TOL.eps_equal, help="equality tolerance (1e-9)")
        p.add_argument("--eps-geom", type=float, default=DEFAULT_TOL.eps_geom, help="geometric tolerance (1e-9)")
        p.add_argument("--quantum", type=float, default=DEFAULT_TOL.quantum, help="hash cell size (1e-6)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for the optimizer (1)")

    p = sub.add_parser("build", help="build the Dirichlet domain and export it")
    common(p)
    p.add_argument("--out", default="out", help="output prefix (writes PREFIX.polyhedron.json)")

    p = sub.add_parser("spectrum", help="length spectrum below a cutoff, with verification report")
    common(p)
    p.add_argument("--out", default="out", help="output prefix for .biglist.csv, .smalllist.csv, "
                   ".excluded.csv and .report.json")
    p.add_argument("--cutoff", type=float, default=1.0, help="real length cutoff (1.0)")
    p.add_argument("--tile-cap", type=int, default=DEFAULT_TILE_CAP, help="maximum number of tiles (10^6)")
    p.add_argument("--oracle-max-length", type=int, default=64, help="word length limit of the oracle (64)")
    p.add_argument("--samples", type=int, default=10000, help="covering samples (10000)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (0)")
    p.add_argument("--oriented", action="store_true", help="count g and its inverse as separate geodesics")

    p = sub.add_parser("check-words", help="decide whether two words give the same group element")
    common(p)
    p.add_argument("word1")
    p.add_argument("word2")

    p = sub.add_parser("roundtrip", help="re-parse export or generator files and check they reproduce")
    p.add_argument("paths", nargs="+")
    return parser


def _config(args) -> RunConfig:
    tol = Tolerance(args.eps_equal, args.eps_geom, args.quantum)
    extra = {}
    if args.command == "spectrum":
        extra = dict(cutoff=args.cutoff, tile_cap=args.tile_cap, oracle_max_length=args.oracle_max_length,
                     samples=args.samples, seed=args.seed, oriented=args.oriented)
    return RunConfig(basepoint=tuple(args.basepoint), max_word_length=args.max_word_length, tolerances=tol,
                     optimize_basepoint=args.optimize, allow_approximate=args.allow_approximate,
                     threads=args.threads, **extra)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "roundtrip":
            return cmd_roundtrip(args.paths)
        try:
            cfg = _config(args)
        except ValueError as exc:
            raise _Failure(EXIT_USAGE, str(exc)) from None
        if args.command == "build":
            return cmd_build(cfg, args.file, args.out)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.file, args.out)
        return cmd_check_words(cfg, args.file, args.word1, args.word2)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypDomainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
