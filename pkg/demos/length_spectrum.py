"""Length spectrum of the Weeks manifold up to real length 1.5.

Tiles a ball around the basepoint with translates of the domain, reduces
the tiles to one element per closed geodesic and compares the result with
the values recorded next to the fixture.

    python demos/length_spectrum.py [cutoff]
"""

import sys
import time

from hypdomain import big_to_small, build_domain, load_fixture, tile_ball, tiling_radius, verify_covering


def main(cutoff=1.5):
    gf = load_fixture("weeks")
    poly, stats = build_domain(gf.generators, compute_volume=False)
    R = tiling_radius(stats.spine_radius, cutoff)
    t0 = time.perf_counter()
    tiles = tile_ball(poly, R)
    print(f"R = {R:.6f}: {len(tiles)} tiles in {time.perf_counter() - t0:.1f} s")
    cov = verify_covering(tiles, poly, 2000)
    print(f"covering check: {cov.fraction:.3f} of sampled points lie in some tile")

    spectrum = big_to_small(tiles, cutoff)
    print(f"\n{'lambda':>10} {'theta':>10}  mult")
    for e in spectrum:
        print(f"{e.length.lam:10.6f} {e.length.theta:+10.6f}  {e.multiplicity:4d}   {' '.join(e.representatives)}")
    for p in spectrum.powers:
        root, k = p.is_power_of
        print(f"  (not counted: {p.representatives[0]} is a power {k} of length {root.lam:.6f})")

    print("\nrecorded reference:")
    for e in gf.extra["reference_spectrum"]:
        if e["lambda"] <= cutoff:
            print(f"{e['lambda']:10.6f} {e['theta']:+10.6f}  {e['multiplicity']:4d}")


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 1.5)
