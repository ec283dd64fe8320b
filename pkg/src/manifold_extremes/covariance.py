"""Covariance families with an exact local (alpha, D)-structure, plus diagnostics.

Three families are provided:

* :class:`PoweredExponential` -- ``exp(-|D (t1 - t2)|^alpha)`` with constant ``D``;
* :class:`Deformation` -- ``exp(-|phi(h t1)/h - phi(h t2)/h|^alpha)`` whose local
  scaling matrix is exactly the Jacobian of ``phi`` at ``h t``;
* :class:`MovingAverage` -- the normalised autocorrelation of a compactly
  supported product kernel (``alpha = 2``), which vanishes beyond the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DomainError, InvalidGeometryError
from .geometry import ManifoldMesh, ParametrizedManifold, build_mesh


@dataclass(frozen=True)
class ScalingField:
    """``D^0`` as a function of ``t* in H_1``; the field at scale ``h`` is ``D^0(h t)``."""

    d0: Callable[[np.ndarray], np.ndarray]
    dim: int

    def at(self, h: float, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        single = t.ndim == 1
        out = self.d0(h * np.atleast_2d(t))
        return out[0] if single else out

    @classmethod
    def constant(cls, D) -> "ScalingField":
        D = np.atleast_2d(np.asarray(D, dtype=float))
        return cls(lambda x: np.broadcast_to(D, (len(x),) + D.shape).copy(), D.shape[0])


def box_from_manifold(m: ParametrizedManifold, enlarge: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box of ``M_1`` scaled by ``1 + enlarge`` about its centre."""
    lo, hi = m.bounding_box()
    c, half = (lo + hi) / 2, (hi - lo) / 2
    half = np.where(half > 0, half, 1.0) * (1 + enlarge)
    return c - half, c + half


class CovarianceModel:
    """Base class: subclasses implement ``_cross(h, A, B)`` on point arrays."""

    family: str = ""
    alpha: float
    scaling_field: ScalingField
    support_radius: float = math.inf
    domain: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def dim(self) -> int:
        return self.scaling_field.dim

    def with_domain(self, lower, upper):
        import copy

        other = copy.copy(self)
        other.domain = (np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
        return other

    def check_domain(self, h: float, pts: np.ndarray) -> None:
        if self.domain is None:
            return
        lo, hi = self.domain
        x = h * pts
        tol = 1e-9 * (1 + np.abs(hi - lo))
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            raise DomainError("point outside H_h")

    def cross_cov(self, h: float, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        self.check_domain(h, A)
        self.check_domain(h, B)
        return self._cross(h, A, B)

    def cov_matrix(self, h: float, X) -> np.ndarray:
        return self.cross_cov(h, X, X)

    def cov(self, h: float, t1, t2) -> float:
        return float(self.cross_cov(h, np.atleast_1d(t1), np.atleast_1d(t2))[0, 0])

    def describe(self) -> dict:
        raise NotImplementedError

    def _cross(self, h, A, B):
        raise NotImplementedError


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    return alpha


def _powexp(dist: np.ndarray, alpha: float) -> np.ndarray:
    return np.exp(-(dist**alpha))


class PoweredExponential(CovarianceModel):
    family = "powered_exponential"

    def __init__(self, alpha: float, D=1.0, dim: int | None = None):
        self.alpha = _check_alpha(alpha)
        D = np.asarray(D, dtype=float)
        if D.ndim == 0:
            if dim is None:
                raise ValueError("scalar D needs an explicit dim")
            D = float(D) * np.eye(dim)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError("D must be a square matrix")
        if np.linalg.svd(D, compute_uv=False)[-1] <= 0:
            raise ValueError("D must be non-degenerate")
        self.D = D
        self.scaling_field = ScalingField.constant(D)

    def _cross(self, h, A, B):
        return _powexp(cdist(A @ self.D.T, B @ self.D.T), self.alpha)

    def describe(self):
        return {"family": self.family, "alpha": self.alpha, "D": self.D.tolist()}


# ---------------------------------------------------------------------------
# deformations


@dataclass(frozen=True)
class DeformationMap:
    name: str
    params: dict
    phi: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]


def identity_map(dim: int) -> DeformationMap:
    return DeformationMap(
        "identity", {}, lambda x: np.array(x, dtype=float), lambda x: np.broadcast_to(np.eye(dim), (len(x), dim, dim)).copy()
    )


def radial_stretch(a: float, b: float) -> DeformationMap:
    """``phi(x) = x (a + b |x|^2)``; Jacobian ``(a + b|x|^2) I + 2 b x x^T``."""
    if a <= 0 or b < 0:
        raise ValueError("radial_stretch needs a > 0 and b >= 0")

    def phi(x):
        return x * (a + b * np.sum(x * x, axis=1))[:, None]

    def jac(x):
        n = x.shape[1]
        s = a + b * np.sum(x * x, axis=1)
        return s[:, None, None] * np.eye(n) + 2 * b * x[:, :, None] * x[:, None, :]

    return DeformationMap("radial_stretch", {"a": float(a), "b": float(b)}, phi, jac)


def deformation_preset(name: str, dim: int, **params) -> DeformationMap:
    if name == "identity":
        if params:
            raise ValueError(f"identity deformation takes no parameters, got {sorted(params)}")
        return identity_map(dim)
    if name == "radial_stretch":
        return radial_stretch(**params)
    raise ValueError(f"unknown deformation preset {name!r}")


class Deformation(CovarianceModel):
    family = "deformation"

    def __init__(self, alpha: float, deformation: DeformationMap, dim: int, domain=None):
        self.alpha = _check_alpha(alpha)
        self.deformation = deformation
        self.scaling_field = ScalingField(deformation.jacobian, dim)
        self.domain = None if domain is None else (np.asarray(domain[0], float), np.asarray(domain[1], float))
        if self.domain is not None:
            lo, hi = self.domain
            grid = _box_grid(lo, hi, 21)
            sv = np.linalg.svd(deformation.jacobian(grid), compute_uv=False)
            if sv[:, -1].min() <= 0:
                raise ValueError("deformation Jacobian is singular on H_1")

    def _cross(self, h, A, B):
        phi = self.deformation.phi
        return _powexp(cdist(phi(h * A) / h, phi(h * B) / h), self.alpha)

    def describe(self):
        return {
            "family": self.family,
            "alpha": self.alpha,
            "deformation": {"name": self.deformation.name, **self.deformation.params},
        }


# ---------------------------------------------------------------------------
# moving average


_KERNEL_POWERS = {"epanechnikov": 1, "biweight": 2, "triweight": 3}


class Kernel1D:
    """Polynomial kernel ``(1 - (x/w)^2)^p`` on ``[-w, w]``.

    The autocorrelation is evaluated with Gauss-Legendre rules that are exact
    for the polynomial integrand.
    """

    def __init__(self, name: str = "epanechnikov", halfwidth: float = 1.0):
        if name not in _KERNEL_POWERS:
            raise ValueError(f"unknown kernel {name!r}; choose from {sorted(_KERNEL_POWERS)}")
        if halfwidth <= 0:
            raise ValueError("kernel halfwidth must be positive")
        self.name = name
        self.halfwidth = float(halfwidth)
        self.power = _KERNEL_POWERS[name]
        self._nodes, self._wts = np.polynomial.legendre.leggauss(2 * self.power + 1)
        self._k0 = float(self._raw_autocorr(np.zeros(1))[0])

    def __call__(self, x):
        u = np.asarray(x, dtype=float) / self.halfwidth
        return np.where(np.abs(u) <= 1, (1 - u * u) ** self.power, 0.0)

    def derivative(self, x):
        u = np.asarray(x, dtype=float) / self.halfwidth
        p = self.power
        return np.where(np.abs(u) <= 1, -2 * p * u * (1 - u * u) ** (p - 1) / self.halfwidth, 0.0)

    def _raw_autocorr(self, tau):
        w = self.halfwidth
        tau = np.abs(tau)
        lo, hi = tau - w, np.full_like(tau, w)
        mid, half = (lo + hi) / 2, np.clip((hi - lo) / 2, 0.0, None)
        x = mid[..., None] + half[..., None] * self._nodes
        vals = self(x) * self(x - tau[..., None])
        return half * (vals @ self._wts)

    def autocorrelation(self, tau) -> np.ndarray:
        """Normalised ``(K*K)(tau) / (K*K)(0)``; exactly 0 for ``|tau| >= 2w``."""
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        inside = np.abs(tau) < 2 * self.halfwidth
        # rounding can push tiny lags a hair above 1
        out[inside] = np.minimum(self._raw_autocorr(tau[inside]) / self._k0, 1.0)
        return out

    def curvature(self) -> float:
        """``-rho''(0) = int K'^2 / int K^2``."""
        nodes, wts = np.polynomial.legendre.leggauss(2 * self.power + 2)
        x = self.halfwidth * nodes
        return float((self.derivative(x) ** 2) @ wts / ((self(x) ** 2) @ wts))


class MovingAverage(CovarianceModel):
    """Product-kernel moving average: ``r(tau) = prod_i rho(tau_i)``.

    ``D = d I`` with ``d^2 = -rho''(0) / 2``; the covariance vanishes once any
    coordinate lag reaches ``2w``, hence for Euclidean lags beyond ``2 w sqrt(n)``.
    """

    family = "moving_average"

    def __init__(self, kernel: Kernel1D, dim: int):
        self.alpha = 2.0
        self.kernel = kernel
        self.d = math.sqrt(kernel.curvature() / 2)
        self.scaling_field = ScalingField.constant(self.d * np.eye(dim))
        self.support_radius = 2 * kernel.halfwidth * math.sqrt(dim)

    def _cross(self, h, A, B):
        out = np.ones((len(A), len(B)))
        for i in range(A.shape[1]):
            lag = np.abs(A[:, None, i] - B[None, :, i])
            out *= self.kernel.autocorrelation(lag)
        return out

    def describe(self):
        return {
            "family": self.family,
            "alpha": self.alpha,
            "kernel": self.kernel.name,
            "halfwidth": self.kernel.halfwidth,
        }


# ---------------------------------------------------------------------------
# diagnostics


def _box_grid(lo, hi, per_axis):
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    g = np.meshgrid(*axes, indexing="ij")
    return np.stack([x.ravel() for x in g], axis=1)


def _ball_samples(rng, center, radius, n):
    d = len(center)
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = radius * rng.random(n) ** (1.0 / d)
    return center + v * rad[:, None]


def local_expansion_error(
    model: CovarianceModel, h: float, s, radius: float, n_pairs: int, seed: int = 0
) -> float:
    """Max of ``|r - (1 - |D_s (t1 - t2)|^alpha)| / |t1 - t2|^alpha`` over pairs near ``s``."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    s = np.asarray(s, dtype=float)
    rng = np.random.default_rng(seed)
    t1 = _ball_samples(rng, s, radius, n_pairs)
    t2 = _ball_samples(rng, s, radius, n_pairs)
    Ds = model.scaling_field.at(h, s)
    diff = t1 - t2
    lag = np.linalg.norm(diff, axis=1)
    keep = lag > 0
    t1, t2, diff, lag = t1[keep], t2[keep], diff[keep], lag[keep]
    r = np.array([model._cross(h, a[None], b[None])[0, 0] for a, b in zip(t1, t2)])
    approx = 1 - np.linalg.norm(diff @ Ds.T, axis=1) ** model.alpha
    return float(np.max(np.abs(r - approx) / lag**model.alpha))


def pair_distance_blocks(points: np.ndarray, block: int = 1024):
    n = len(points)
    for i in range(0, n, block):
        yield i, cdist(points[i : i + block], points)


def q_of_delta(model: CovarianceModel, h: float, mesh: ManifoldMesh, delta: float) -> float:
    """Max ``|cov|`` over mesh pairs further apart than ``delta`` (0 if there are none)."""
    return float(q_of_deltas(model, h, mesh, [delta])[0])


def q_of_deltas(model: CovarianceModel, h: float, mesh: ManifoldMesh, deltas: Sequence[float]) -> np.ndarray:
    if len(mesh) == 0:
        raise ValueError("mesh is empty")
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0):
        raise ValueError("delta must be positive")
    out = np.zeros(len(deltas))
    pts = mesh.points
    for i, dist in pair_distance_blocks(pts):
        c = np.abs(model._cross(h, pts[i : i + len(dist)], pts))
        for k, d in enumerate(deltas):
            far = dist > d
            if np.any(far):
                out[k] = max(out[k], float(c[far].max()))
    return out


def log_power_v(beta: float = 1.0) -> Callable[[float], float]:
    """``v(delta) = log(delta)^(-beta)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return lambda d: math.log(d) ** (-beta)


@dataclass
class AssumptionReport:
    c_min_alpha: float
    c_max_alpha: float
    q_samples: list[tuple[float, float]]
    eta_margin: float
    v_check: bool
    expansion_sup: float
    q_envelope: list[tuple[float, float]] | None = None
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "c_min_alpha": self.c_min_alpha,
            "c_max_alpha": self.c_max_alpha,
            "q_samples": [list(p) for p in self.q_samples],
            "eta_margin": self.eta_margin,
            "v_check": self.v_check,
            "expansion_sup": self.expansion_sup,
            "q_envelope": None if self.q_envelope is None else [list(p) for p in self.q_envelope],
            "violations": list(self.violations),
        }


def singular_value_bounds(model: CovarianceModel, lower, upper, per_axis: int = 41) -> tuple[float, float]:
    """Extreme singular values of ``D^0`` over a grid on the box ``H_1``."""
    sv = np.linalg.svd(model.scaling_field.d0(_box_grid(lower, upper, per_axis)), compute_uv=False)
    return float(sv.min()), float(sv.max())


def assumption_report(
    model: CovarianceModel,
    manifold: ParametrizedManifold,
    h_list: Sequence[float],
    mesh_spacing: float = 0.5,
    deltas: Sequence[float] | None = None,
    beta: float = 1.0,
    delta_probe: float = 1.0,
    delta0: float = math.e,
    radius: float = 0.01,
    n_pairs: int = 200,
    n_centers: int = 5,
    sweep_per_axis: int = 41,
    seed: int = 0,
) -> AssumptionReport:
    if deltas is None:
        deltas = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.5, 10.0]
    deltas = sorted(float(d) for d in deltas)
    lower, upper = model.domain if model.domain is not None else box_from_manifold(manifold)
    smin, smax = singular_value_bounds(model, lower, upper, sweep_per_axis)
    c_lo, c_hi = smin**model.alpha, smax**model.alpha

    q = np.zeros(len(deltas))
    exp_sup = 0.0
    for h in h_list:
        mesh = build_mesh(manifold, h, mesh_spacing)
        q = np.maximum(q, q_of_deltas(model, h, mesh, deltas))
        idx = np.linspace(0, len(mesh) - 1, min(n_centers, len(mesh))).astype(int)
        for j, i in enumerate(idx):
            exp_sup = max(exp_sup, local_expansion_error(model, h, mesh.points[i], radius, n_pairs, seed + j))

    q_samples = list(zip(deltas, q.tolist()))
    probe = [v for d, v in q_samples if d >= delta_probe]
    eta = max(probe) if probe else 0.0
    r = manifold.intrinsic_dim
    v = log_power_v(beta)
    v_ok = all(val * abs(math.log(d)) ** (2 * r / model.alpha) <= v(d) for d, val in q_samples if d > delta0)

    envelope = None
    if isinstance(model, PoweredExponential):
        envelope = [(d, math.exp(-((smin * d) ** model.alpha))) for d in deltas]
    elif isinstance(model, MovingAverage):
        envelope = [(d, 0.0 if d >= model.support_radius else 1.0) for d in deltas]

    violations = []
    if eta >= 1:
        violations.append(f"eta margin {eta:.4g} >= 1")
    if not v_ok:
        violations.append("Q(delta) |log delta|^(2r/alpha) exceeds v(delta)")
    return AssumptionReport(c_lo, c_hi, q_samples, eta, v_ok, exp_sup, envelope, violations)
