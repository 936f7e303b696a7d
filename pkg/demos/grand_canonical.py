"""Grand-canonical energies: droplets in a container, charges in a simplex.

Without a volume constraint, the droplet functional (energy minus the
optimal per-volume rate times the volume) decides on its own how many
droplets a container supports: at zero background it is indifferent, at
small positive background a few droplets become favorable.  The point-charge
analogue on a unit-volume tetrahedron shows the same structure, together
with an averaging bound that interpolates between neighboring particle
numbers, and an extrapolation of the periodic energy to the infinite-size
limit.
"""

import numpy as np

from liqdrop.coulomb import PeriodicKernel
from liqdrop.droplet import grand_canonical_F
from liqdrop.geom import Ball
from liqdrop.jellium import (
    crystal_positions,
    e_jel_extrapolate,
    grand_canonical_point_jellium,
    periodic_energy,
)


def main() -> None:
    print("Droplets in a ball of radius 2:")
    for rho in (0.0, 0.05):
        rep = grand_canonical_F(Ball(radius=2.0, center=(0.0, 0.0, 0.0)),
                                rho, kmax=2, seed=0, starts=2)
        by_count = ", ".join(f"{k}: {v:+.5f}"
                             for k, v in sorted(rep.values_by_count.items()))
        print(f"  background {rho:4.2f}: best value {rep.value:+.6f} with "
              f"{rep.ball_count} ball(s)  [{by_count}]")
    print("(at zero background one optimal droplet is exactly cost-neutral "
          "and mutual repulsion penalizes a second; a positive background "
          "makes droplets favorable)")

    print("\nPoint charges in a scaled unit tetrahedron (charge 2.5 each):")
    rep = grand_canonical_point_jellium(2.2246, charge=2.5, seed=0,
                                        window=(3, 8), starts=2)
    print(f"  scale {rep.a_scale}, candidates {list(rep.values_by_n)}")
    for n in rep.values_by_n:
        print(f"    n = {n}: value {rep.values_by_n[n]:+.6f}, "
              f"averaging bound {rep.averaging_bounds[n]:+.6f}")
    print(f"  best: n = {rep.best_n} at {rep.best_value:+.6f} "
          "(interior minimum: the energy rises on both sides)")
    print(f"  interpolation bound {rep.interpolation_bound:+.6f}")

    print("\nExtrapolating the periodic crystal energy to infinite size:")
    counts, energies = [], []
    for k in (2, 3, 4):
        n = 2 * k ** 3
        ell = float(n) ** (1.0 / 3.0)
        e = periodic_energy(crystal_positions("bcc", k, ell),
                            PeriodicKernel(ell)).per_particle
        counts.append(n)
        energies.append(e)
        print(f"  n = {n:4d}: per-particle {e:+.12f}")
    e_inf, slope, resid = e_jel_extrapolate(counts, energies)
    print(f"  extrapolated limit {e_inf:+.12f} (finite-size slope {slope:+.1e},"
          f" fit residual {resid:.1e})")


if __name__ == "__main__":
    main()
