"""Exact correlations and sensitivities for the wind-gust fit.

The insured cost at a site is a power ``beta`` of the yearly gust maximum.
Here we print, for two sites, the correlation ``R`` of those costs and its
derivatives in the dependence parameters.  No simulation is involved; every
number comes from one-dimensional quadrature.

Run: ``python demos/oracle_tables.py``
"""
import numpy as np

from maxsens import BrParams, Margins, SmithParams, analytic_correlation, analytic_sensitivity

br = BrParams(kappa=3.05, psi=0.86)
smith = SmithParams([[0.88, 0.07], [0.07, 2.43]])
origin = (0.0, 0.0)

print("Brown-Resnick: dR/dkappa, dR/dpsi, their ratios to R, and R")
for x2 in [(1, 1), (3, 2), (9, 9)]:
    for beta in (2, 3, 8):
        m = Margins(eta=26.11, tau=2.90, xi=-0.11, beta=beta)
        r = analytic_correlation(br, (origin, x2), m, m)
        g = analytic_sensitivity(br, (origin, x2), m, m)
        print(f"  x2={x2!s:7} beta={beta}: {g.kappa:7.3f} {g.psi:7.3f} {g.kappa / r:7.3f} {g.psi / r:7.3f}   R={r:.3f}")

# The far site has a low correlation and a large relative sensitivity to psi:
# a small error in the smoothness changes the joint risk substantially.

print("\nSmith: dR/dsigma11, dR/dsigma12, dR/dsigma22 and R")
for x2 in [(1, 1), (3, 2)]:
    for beta in (2, 3):
        m = Margins(eta=26.12, tau=2.92, xi=-0.10, beta=beta)
        r = analytic_correlation(smith, (origin, x2), m, m)
        d = analytic_sensitivity(smith, (origin, x2), m, m).d_sigma
        print(f"  x2={x2!s:7} beta={beta}: {d[0, 0]:7.3f} {d[0, 1]:7.3f} {d[1, 1]:7.3f}   R={r:.3f}")

# Each sigma entry is treated as a free parameter, so d[0, 1] and d[1, 0]
# are equal and a symmetric perturbation of both moves R by twice d[0, 1].
assert np.isclose(d[0, 1], d[1, 0])
