#!/usr/bin/env python3
"""Compare Pickands-constant estimates with exact lattice values.

alpha = 2: the lattice constant is a 1-D integral over Z (the field is rank one).
alpha = 1: the lattice constant follows from Spitzer's identity for the
Gaussian random walk that the field becomes on a lattice.
"""

import argparse
import math

import numpy as np
from scipy.special import logsumexp, ndtr
from scipy.stats import norm

from manifold_extremes.pickands import estimate_H


def exact_alpha2(l, gamma):
    z = np.linspace(-12, 12, 100_001)
    w = norm.pdf(z) * (z[1] - z[0])
    t = gamma * np.arange(-l, l + 1)
    chi = math.sqrt(2) * np.outer(z, t) - t * t
    return float(np.sum(w * np.exp(chi.max(axis=1) - logsumexp(chi, axis=1))) / gamma)


def exact_alpha1(gamma, terms=2_000_000):
    k = np.arange(1, terms + 1, dtype=float)
    return float(math.exp(-2 * np.sum(ndtr(-np.sqrt(k * gamma / 2)) / k)) / gamma)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'alpha':>5} {'l':>5} {'gamma':>6} {'estimate':>10} {'stderr':>8} {'exact':>8}  z")
    rungs = [(2.0, 50, 0.2), (2.0, 200, 0.05), (1.0, 100, 0.2), (1.0, 300, 0.05), (1.0, 1200, 0.01)]
    for alpha, l, g in rungs:
        est = estimate_H(alpha, 1, l, g, args.reps, args.seed)
        exact = exact_alpha2(l, g) if alpha == 2 else exact_alpha1(g)
        print(f"{alpha:5.1f} {l:5d} {g:6.3f} {est.h_rate:10.5f} {est.stderr:8.5f} {exact:8.5f}  "
              f"{(est.h_rate - exact) / est.stderr:+.2f}")
    print("\ncontinuum limits: 1/sqrt(pi) = 0.56419 (alpha = 2), 1 (alpha = 1)")


if __name__ == "__main__":
    main()
