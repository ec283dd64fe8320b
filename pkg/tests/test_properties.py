"""Property-based checks of the invariants each module promises."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from manifold_extremes.covariance import Deformation, Kernel1D, MovingAverage, PoweredExponential, q_of_deltas, radial_stretch
from manifold_extremes.geometry import build_mesh, chart_residual, make_builtin, mesh_spacing_for_theta, tangent_frame
from manifold_extremes.limits import LimitParams, gumbel2, norm_r, theta
from manifold_extremes.sampler import empirical_exceedance, factorize_matrix, sample_batch
from oracles import brute_force_minor_norm_sq

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
alphas = st.floats(0.1, 2.0)


@st.composite
def matrices(draw):
    n = draw(st.integers(1, 6))
    r = draw(st.integers(1, n))
    return draw(arrays(float, (n, r), elements=finite))


@given(matrices())
def test_cauchy_binet(g):
    brute = brute_force_minor_norm_sq(g)
    assert math.isclose(norm_r(g) ** 2, brute, rel_tol=1e-9, abs_tol=1e-9 * max(1.0, np.abs(g).max() ** (2 * g.shape[1])))


@given(matrices(), st.integers(0, 2**32 - 1))
def test_orthogonal_invariance(g, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(g.shape[0],) * 2))
    scale = max(1.0, np.abs(g).max() ** g.shape[1])
    assert abs(norm_r(q @ g) - norm_r(g)) <= 1e-10 * scale


@st.composite
def chart_points(draw):
    kind = draw(st.sampled_from(["circle", "deformed_circle", "torus_surface", "segment"]))
    if kind == "circle":
        m = make_builtin(kind, radius=draw(st.floats(0.1, 10)))
    elif kind == "deformed_circle":
        m = make_builtin(kind, radius=1.0, matrix=[[draw(st.floats(0.5, 2)), draw(st.floats(-0.5, 0.5))], [0.0, draw(st.floats(0.5, 2))]])
    elif kind == "torus_surface":
        rho = draw(st.floats(0.2, 1.0))
        m = make_builtin(kind, R=rho + draw(st.floats(0.1, 3.0)), rho=rho)
    else:
        m = make_builtin(kind, length=draw(st.floats(0.5, 20)))
    c = m.charts[0]
    p = [draw(st.floats(lo, hi)) for lo, hi in zip(c.lower, c.upper)]
    return m, p


@given(chart_points(), st.floats(0.01, 1.0))
def test_frames_orthonormal(mp, h):
    m, p = mp
    f = tangent_frame(m, h, p).frame
    assert np.abs(f.T @ f - np.eye(m.intrinsic_dim)).max() < 1e-10


@settings(max_examples=25)
@given(st.sampled_from(["circle", "torus_surface"]), st.sampled_from([1.0, 0.5, 0.25, 0.125]), st.floats(0.2, 0.5))
def test_mesh_rescaling(kind, h, spacing):
    m = make_builtin(kind)
    if kind == "torus_surface":
        h = max(h, 0.25)
    assert chart_residual(m, build_mesh(m, h, spacing)) < 1e-10


@given(st.floats(0.01, 1), st.floats(0.1, 100), st.floats(0.1, 100), alphas, st.floats(0.1, 10))
def test_spacing_law(gamma, t1, t2, alpha, c):
    lo, hi = sorted((t1, t2))
    if hi > lo * (1 + 1e-9):
        assert mesh_spacing_for_theta(gamma, hi, alpha) < mesh_spacing_for_theta(gamma, lo, alpha)
    assert math.isclose(mesh_spacing_for_theta(c * gamma, t1, alpha), c * mesh_spacing_for_theta(gamma, t1, alpha), rel_tol=1e-12)


def models():
    box = (np.full(2, -5.0), np.full(2, 5.0))
    return st.one_of(
        st.builds(lambda a, d: PoweredExponential(a, d, dim=2), alphas, st.floats(0.1, 5)),
        st.builds(lambda a, b: Deformation(1.0, radial_stretch(a, b), 2, domain=box), st.floats(0.2, 2), st.floats(0, 0.5)),
        st.builds(lambda w: MovingAverage(Kernel1D("triweight", w), 2), st.floats(0.2, 3)),
    )


pairs = arrays(float, (2, 2), elements=st.floats(-4, 4))


@given(models(), pairs, st.floats(0.05, 1.0))
def test_unit_variance_and_symmetry(model, pts, h):
    t1, t2 = pts
    assert model.cov(h, t1, t1) == 1.0
    assert model.cov(h, t1, t2) == model.cov(h, t2, t1)
    assert -1.0 <= model.cov(h, t1, t2) <= 1.0


@settings(max_examples=20)
@given(models(), st.lists(st.floats(0.1, 8), min_size=2, max_size=6))
def test_q_nonincreasing(model, deltas):
    mesh = build_mesh(make_builtin("circle", radius=3.0), 1.0, 0.6)
    deltas = sorted(deltas)
    q = q_of_deltas(model, 1.0, mesh, deltas)
    assert np.all(np.diff(q) <= 0)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(1e-12, 0.99), st.floats(0.1, 100), st.integers(1, 3), alphas)
def test_theta_increasing_in_z(z1, z2, h, I, r, alpha):
    p = LimitParams(r, alpha, 0.5, I)
    lo, hi = sorted((z1, z2))
    assert theta(lo, h, p) <= theta(hi, h, p)


@given(st.floats(-3, 50), st.floats(0.01, 5))
def test_gumbel_increasing_in_unit_interval(z, dz):
    a, b = gumbel2(z), gumbel2(z + dz)
    assert 0 <= a <= b <= 1
    if b < 1 - 1e-12:
        assert a < b


@settings(max_examples=15)
@given(st.floats(-0.9, 0.9), st.lists(st.floats(-1, 4), min_size=2, max_size=8))
def test_exceedance_monotone(rho, thetas):
    batch = sample_batch(factorize_matrix(np.array([[1, rho], [rho, 1.0]])), 500, seed=1, keep_realizations=False)
    probs = [p for p, _ in empirical_exceedance(batch, sorted(thetas))]
    assert all(a <= b for a, b in zip(probs, probs[1:]))
    assert all(0 <= p <= 1 for p in probs)
