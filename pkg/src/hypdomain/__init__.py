"""Dirichlet domains, tilings and length spectra of hyperbolic 3-manifolds.

The group is given by generating matrices in SL(2, C).  Typical use::

    from hypdomain import load_fixture, build_domain, tiling_radius, tile_ball, big_to_small

    gf = load_fixture("weeks")
    poly, stats = build_domain(gf.generators)
    tiles = tile_ball(poly, tiling_radius(stats.spine_radius, 1.0))
    spectrum = big_to_small(tiles, 1.0)
"""

from .domain import (
    DirichletPolyhedron,
    DomainStats,
    HalfSpace,
    bisector_halfspace,
    build_domain,
    domain_stats,
    initial_polyhedron,
    injectivity_radius,
    intersect_halfspace,
    max_vertex_distance,
    replace_generator,
    spine_radius,
    volume,
)
from .errors import *  # noqa: F401,F403
from .hypcore import (
    DEFAULT_TOL,
    ORIGIN,
    ComplexLength,
    MoebiusElement,
    Tolerance,
    apply,
    complex_length,
    compose,
    dist,
    element,
    evaluate_word,
    from_klein,
    identity,
    inverse,
    loxodromic,
    normalize,
    parse_word,
    to_klein,
    word_to_string,
)
from .io import load_fixture, load_generator_file
from .optimizer import OptimizerParams, minimize_spine_radius
from .spectrum import SpectrumEntry, big_to_small, spectrum_compare
from .tiling import (
    enumerate_words,
    theorem1_diagnostics,
    tile_ball,
    tiling_radius,
    verify_covering,
)
from .wordprob import ElementIndex, canonical_key, dedup, same_element

__version__ = "0.1.0"
