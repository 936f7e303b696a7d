"""A self-similar ball packing with geometrically shrinking leftover.

Starting from balls of radius 1/2, each generation introduces a 27x larger
ball and packs it with copies of every earlier generation, filling a fixed
slice of whatever volume was still uncovered.  The uncovered fraction after
K generations therefore decays like (26/27)^K, and the surface area added
per unit volume stays comparable to the same geometric envelope.  All the
bookkeeping is exact rational arithmetic.  A companion certificate shows how
a sequence whose increments are controlled by a geometric envelope must
converge, with an explicit tail bound.
"""

from fractions import Fraction

from liqdrop.appendixlab import recursion_limit, swiss_cheese


def main() -> None:
    s = swiss_cheese(8)
    print(f"Packing schedule (growth {s.growth}, keep fraction "
          f"{s.keep_fraction} of the leftover per level):")
    print("  level   radius                count         leftover/(26/27)^K"
          "   perim ratio")
    for j in range(6):
        r = s.radii[j]
        rs = f"{r}" if r.denominator < 1000 and r.numerator < 10**7 \
            else f"{float(r):.3e}"
        print(f"  {j:3d}     {rs:>20s}  {s.counts[j]:>12d}   "
              f"{float(s.leftover_ratios[j]):14.6f}     "
              f"{float(s.perimeter_ratios[j]):9.3f}")
    lr = s.leftover_ratios[5]
    print(f"  ratios are exact rationals: level 5 leftover ratio = "
          f"{lr.numerator}/... ({len(str(lr.denominator))}-digit denominator),"
          f" bounded in [1/50, 50]")

    print("\nConvergence certificate for a geometrically averaged sequence:")
    # build a sequence whose excess over the geometric average of its own
    # history decays like 0.3^K; such sequences converge to (1 - gamma)
    # times the sum of the excesses, here 0.5 / (1 - 0.3) = 5/7
    gamma = 0.5
    g = [0.3 ** k for k in range(15)]
    values = [g[k] + (1.0 - gamma) * sum(g[:k]) for k in range(15)]
    cert = recursion_limit(values, gamma, allowances=g)
    print(f"  certified limit     {cert.limit:.10f} (infinite-depth value "
          f"{5.0 / 7.0:.10f})")
    print(f"  tail bound          {cert.tail_bound:.3e}")
    print(f"  worst slack         {min(cert.slack):.3e} "
          "(nonnegative = every excess within its allowance)")
    print(f"  certified through index {cert.horizon}")
    assert isinstance(s.leftover_ratios[3], Fraction)


if __name__ == "__main__":
    main()
