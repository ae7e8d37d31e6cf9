import sys

import numpy as np
import pytest

from hypdomain.domain import build_domain
from hypdomain.hypcore import element
from hypdomain.io import FIXTURES, load_fixture
from hypdomain.tiling import tile_ball, tiling_radius

_cache = {}


def built(name):
    """Fixture generator file and its converged domain (cached across tests)."""
    if name not in _cache:
        gf = load_fixture(name)
        poly, stats = build_domain(gf.generators)
        _cache[name] = (gf, poly, stats)
    return _cache[name]


def tiles_for(name, cutoff=1.0):
    key = (name, "tiles", cutoff)
    if key not in _cache:
        gf, poly, stats = built(name)
        _cache[key] = tile_ball(poly, tiling_radius(stats.spine_radius, cutoff))
    return _cache[key]


def original_generators(name):
    """The raw presentation recorded next to the face-pairing generators."""
    gf = load_fixture(name)
    return [element(np.array([[complex(*z) for z in row] for row in m]), (k + 1,))
            for k, m in enumerate(gf.extra["original_generators"])]


@pytest.fixture(params=FIXTURES)
def fixture_name(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
