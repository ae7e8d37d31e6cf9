"""Basepoint search minimizing the spine radius of the Dirichlet domain.

The spine radius is only piecewise smooth in the basepoint (the edge set
changes combinatorially), so this is a compass/pattern search: probe the
six unit tangent directions at the current point, move to the first probe
that lowers the spine radius, otherwise halve the step.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import DirichletPolyhedron, build_domain, spine_radius
from .errors import BuildFailed, HypDomainError
from .hypcore import DEFAULT_TOL, ORIGIN, MoebiusElement, Tolerance, exp_map

log = logging.getLogger(__name__)

_DIRECTIONS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    dtype=float,
)


@dataclass(frozen=True)
class OptimizerParams:
    initial_step: float = 0.1
    step_shrink: float = 0.5
    min_step: float = 1e-6
    max_iterations: int = 200

    def __post_init__(self):
        if not self.min_step < self.initial_step:
            raise ValueError("min_step must be smaller than initial_step")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")


@dataclass(frozen=True)
class OptimizerResult:
    basepoint: np.ndarray
    poly: DirichletPolyhedron
    trace: list  # accepted (point, spine radius) pairs, starting point first
    final_step: float
    iterations: int
    skipped_probes: list  # (point, reason) of probes where the build failed

    @property
    def spine_radius(self) -> float:
        return self.trace[-1][1]


def minimize_spine_radius(generators: Sequence[MoebiusElement], x0=ORIGIN,
                          params: OptimizerParams = OptimizerParams(),
                          tol: Tolerance = DEFAULT_TOL, max_word_length: int = 16,
                          threads: int = 1) -> OptimizerResult:
    """Pattern search for a local minimum of the spine radius.

    Raises :class:`BuildFailed` if the domain cannot be built at ``x0``.
    """
    x = np.asarray(x0, dtype=float)

    def evaluate(p):
        poly, stats = build_domain(generators, p, max_word_length, tol, compute_volume=False)
        if not stats.converged:
            raise BuildFailed(f"domain did not converge within word length {max_word_length}")
        return poly, spine_radius(poly)

    try:
        poly, r = evaluate(x)
    except HypDomainError as exc:
        raise BuildFailed(f"cannot build the domain at the starting point: {exc}") from exc
    trace = [(x, r)]
    skipped = []
    step = params.initial_step
    it = 0
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while it < params.max_iterations and step >= params.min_step:
            it += 1
            probes = [exp_map(x, d, step) for d in _DIRECTIONS]
            if pool is not None:
                futures = [pool.submit(_safe, evaluate, p) for p in probes]
                results = [f.result() for f in futures]
            else:
                results = None
            moved = False
            for k, p in enumerate(probes):
                res = results[k] if results is not None else _safe(evaluate, p)
                if isinstance(res, Exception):
                    log.info("probe at %s skipped: %s", p, res)
                    skipped.append((p, str(res)))
                    continue
                p_poly, p_r = res
                # first strictly improving direction in fixed order wins
                if p_r < r - tol.eps_equal:
                    x, poly, r = p, p_poly, p_r
                    trace.append((x, r))
                    moved = True
                    break
            if not moved:
                step *= params.step_shrink
    finally:
        if pool is not None:
            pool.shutdown()
    log.info("spine radius %.12g after %d iterations (step %.3g)", r, it, step)
    return OptimizerResult(x, poly, trace, step, it, skipped)


def _safe(fn, p):
    try:
        return fn(p)
    except HypDomainError as exc:
        return exc
