#!/usr/bin/env python3
"""Tabulate the threshold consistency ratio over (h, z) for a circle of radius 1.

For r = 1 and alpha = 2 the ratio equals exp(-c^2 / (4 log(1/h))) with
c = z + log(H I / sqrt(2 pi)); the table shows how slowly it approaches 1
away from the z where c = 0.
"""

import math

import numpy as np

from manifold_extremes.limits import LimitParams, pickands_closed_form, theta_consistency


def main():
    p = LimitParams(1, 2.0, pickands_closed_form(2.0, 1), 2 * math.pi, "circle(radius=1)", "powered_exponential")
    zs = np.linspace(-1, 2, 7)
    print("h        " + "".join(f"z={z:<7.2f}" for z in zs) + "spread")
    for h in (1e-2, 1e-3, 1e-4, 1e-8, 1e-16, 1e-64):
        vals = [theta_consistency(z, h, p) for z in zs]
        print(f"{h:<8.0e} " + "".join(f"{v:<9.4f}" for v in vals) + f"{max(vals) - min(vals):.4f}")
    c0 = -math.log(p.pickands_h * p.integral_i / math.sqrt(2 * math.pi))
    print(f"\nratio is exactly 1 at z = {c0:.4f}")


if __name__ == "__main__":
    main()
