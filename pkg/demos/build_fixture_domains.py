"""Build the Dirichlet domain of each bundled manifold and print its statistics.

    python demos/build_fixture_domains.py
"""

from hypdomain import build_domain, load_fixture
from hypdomain.io import FIXTURES


def main():
    for name in FIXTURES:
        gf = load_fixture(name)
        poly, stats = build_domain(gf.generators)
        print(f"{gf.name:>12}  faces={stats.n_faces:2d} edges={stats.n_edges:2d} vertices={stats.n_vertices:2d} "
              f"(ideal {stats.n_ideal_vertices})  word length {stats.word_length_reached}")
        print(f"{'':>12}  volume {stats.volume:.12f} (reference {gf.reference_volume:.12f}, "
              f"quadrature error {stats.volume_error:.1e})")
        print(f"{'':>12}  injectivity radius {stats.injectivity_radius:.6f}, spine radius {stats.spine_radius:.6f}")


if __name__ == "__main__":
    main()
