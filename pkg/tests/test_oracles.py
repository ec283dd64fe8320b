"""The reference computations agree with their frozen values and with each other."""

import math

import numpy as np
import pytest

import oracles
from oracles import FROZEN


@pytest.mark.parametrize("T", [0.5, 2.0, 5.0])
def test_alpha2_continuous_sup_matches_closed_form(T):
    assert oracles.alpha2_sup_continuous(T) == pytest.approx(T / math.sqrt(math.pi) + 1, rel=1e-9)


@pytest.mark.parametrize(
    "key, fn",
    [
        ("alpha2_lattice_direct(20, 0.05)", lambda: oracles.alpha2_lattice_direct(20, 0.05)),
        ("alpha2_lattice_direct(40, 0.05)", lambda: oracles.alpha2_lattice_direct(40, 0.05)),
        ("alpha2_lattice_dy(50, 0.2)", lambda: oracles.alpha2_lattice_dy(50, 0.2)),
        ("alpha2_lattice_dy(200, 0.05)", lambda: oracles.alpha2_lattice_dy(200, 0.05)),
        ("alpha1_lattice_constant(0.05)", lambda: oracles.alpha1_lattice_constant(0.05)),
        ("alpha1_lattice_constant(0.01)", lambda: oracles.alpha1_lattice_constant(0.01)),
        ("alpha1_lattice_direct(20, 0.1)", lambda: oracles.alpha1_lattice_direct(20, 0.1)),
    ],
)
def test_frozen_values_reproduce(key, fn):
    assert fn() == pytest.approx(FROZEN[key], rel=1e-9)


def test_lattice_max_below_continuous_sup():
    assert oracles.alpha2_lattice_direct(40, 0.05) < oracles.alpha2_sup_continuous(2.0)


def test_alpha1_direct_series_against_simulated_walk():
    rng = np.random.default_rng(5)
    g = 0.1
    steps = rng.normal(-g, math.sqrt(2 * g), size=(400_000, 20))
    m = np.maximum(np.cumsum(steps, axis=1).max(axis=1), 0.0)
    e = np.exp(m)
    se = e.std() / math.sqrt(len(e))
    assert abs(e.mean() - FROZEN["alpha1_lattice_direct(20, 0.1)"]) < 4 * se


def test_alpha1_lattice_constant_rises_toward_one():
    vals = [oracles.alpha1_lattice_constant(g, terms=200_000) for g in (0.2, 0.05, 0.01)]
    assert vals[0] < vals[1] < vals[2] < 1.0


def test_alpha1_rate_is_limit_of_direct_series():
    g, l = 0.2, 3000
    direct = oracles.alpha1_lattice_direct(l, g)
    assert direct / (l * g) == pytest.approx(oracles.alpha1_lattice_constant(g), rel=0.01)


def test_brute_force_minors_small_case():
    g = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    # minors: 2, 1, -2
    assert oracles.brute_force_minor_norm_sq(g) == pytest.approx(9.0)
