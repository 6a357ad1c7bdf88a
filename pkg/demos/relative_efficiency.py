"""Which studies are worth requesting as IPD?

Ten studies of ten participants each differ only in their treatment
proportion.  Under a random-intercept linear mixed model the variance of the
combined treatment effect depends on which studies contribute IPD, and the
best choice spreads the treatment proportions as far apart as possible.
"""
import numpy as np

from ipdad import VarianceComponents, relative_efficiency, re_curve
from ipdad.sim import TABLE1_PI, TABLE2_PI

n = np.full(10, 10.0)
vc = VarianceComponents(sigma_alpha_sq=0.025, sigma_sq=2.5)

for label, pi in (("moderately balanced", TABLE1_PI), ("unbalanced", TABLE2_PI)):
    pi = np.array(pi)
    print(f"{label} treatment proportions: {pi}")
    print(f"  AD-only relative efficiency: {relative_efficiency(n, pi, vc, []):.3f}")
    print("  k1  best RE  best IPD set        worst RE  worst IPD set")
    for row in re_curve(n, pi, vc, range(1, 11)):
        best = ",".join(str(i + 1) for i in row["argmax"])
        worst = ",".join(str(i + 1) for i in row["argmin"])
        print(f"  {row['k1']:2d}  {row['max_re']:.3f}    {best:20s} {row['min_re']:.3f}     {worst}")
    print()

# with equal treatment proportions the choice does not matter at all
flat = np.full(10, 0.5)
print("equal proportions, any 4 studies as IPD:",
      {round(relative_efficiency(n, flat, vc, s), 12) for s in ([0, 1, 2, 3], [2, 5, 7, 9])})
