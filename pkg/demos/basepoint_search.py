"""Move the basepoint to reduce the spine radius, and check the spectrum does not care.

    python demos/basepoint_search.py
"""

from hypdomain import (
    big_to_small,
    build_domain,
    load_fixture,
    minimize_spine_radius,
    spectrum_compare,
    tile_ball,
    tiling_radius,
)
from hypdomain.hypcore import ORIGIN, dist, exp_map, to_klein


def spectrum_at(poly, r, cutoff=1.0):
    return big_to_small(tile_ball(poly, tiling_radius(r, cutoff)), cutoff)


def main():
    gf = load_fixture("m003_m2_3")
    start = exp_map(ORIGIN, [1.0, 1.0, 1.0], 0.05)
    res = minimize_spine_radius(gf.generators, start)
    for k, (p, r) in enumerate(res.trace):
        print(f"step {k:2d}: spine radius {r:.8f} at Klein {to_klein(p).round(5)}")
    print(f"{res.iterations} iterations, final step {res.final_step:.1e}, "
          f"moved {float(dist(start, res.basepoint)):.4f} from the start")

    poly0, stats0 = build_domain(gf.generators, compute_volume=False)
    ok, report = spectrum_compare(spectrum_at(poly0, stats0.spine_radius), spectrum_at(res.poly, res.spine_radius))
    print("\nspectrum at the origin vs the optimized basepoint:", "match" if ok else "MISMATCH")
    for line in report:
        print("  " + line)


if __name__ == "__main__":
    main()
