"""Deterministic pieces of the limit law: minor norm, manifold integral,
the threshold ``theta(z)``, the double-exponential limit and tail asymptotes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .covariance import ScalingField
from .errors import DomainError, QuadratureError
from .geometry import ParametrizedManifold, orthonormal_frames, tensor_grid, volume_element

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LimitParams:
    r: int
    alpha: float
    pickands_h: float
    integral_i: float
    manifold_id: str = ""
    model_id: str = ""
    h_source: str = "closed-form"

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        for name in ("pickands_h", "integral_i"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


def pickands_closed_form(alpha: float, r: int) -> float | None:
    """Known values: ``H_2^(r) = pi^(-r/2)`` and ``H_1^(1) = 1``; ``None`` otherwise."""
    if alpha == 2:
        return math.pi ** (-r / 2)
    if alpha == 1 and r == 1:
        return 1.0
    return None


def norm_r(g) -> float:
    """Square root of the sum of squared order-r minors.

    Equal to ``sqrt(det(G^T G))``; evaluated as ``|prod diag R|`` from a QR
    factorisation, which stays accurate when ``G`` is nearly rank deficient.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    n, r = g.shape
    if n < r:
        raise ValueError("need n >= r")
    return float(abs(np.prod(np.diag(np.linalg.qr(g, mode="r")))))


def _norm_r_batch(g: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(np.linalg.det(np.einsum("kni,knj->kij", g, g)), 0.0, None))


def integrate_over_manifold(m: ParametrizedManifold, integrand, rel_tol: float = 1e-6, max_points: int = 2**20,
                            start: int = 16) -> tuple[float, float]:
    """Trapezoid quadrature of ``integrand(points, frames)`` over ``M_1``, doubling until stable.

    Returns ``(value, error_estimate)``.  Raises :class:`QuadratureError` when
    the cap is hit while successive refinements still differ by more than 1e-4.
    """
    r = m.intrinsic_dim

    def once(n):
        total = 0.0
        for c in m.charts:
            params, w, _ = tensor_grid(c, [n] * r)
            J = c.jacobian(params)
            total += float(np.sum(w * volume_element(J) * integrand(c.embed(params), orthonormal_frames(J))))
        return total

    n = start
    prev = once(n)
    while True:
        n *= 2
        if (n + 1) ** r > max_points:
            break
        cur = once(n)
        change = abs(cur - prev)
        if change <= rel_tol * abs(cur):
            return cur, change / 3
        prev = cur
    if change > 1e-4 * abs(prev):
        raise QuadratureError(f"manifold integral did not converge (relative change {change / abs(prev):.3g})")
    log.warning("manifold integral stopped at the point cap with relative change %.3g", change / abs(prev))
    return prev, change / 3


def manifold_integral(m: ParametrizedManifold, sf: ScalingField, rel_tol: float = 1e-6) -> float:
    """``int_{M_1} ||D^0_s M_s||_r ds``."""
    if sf.dim != m.ambient_dim:
        raise ValueError("scaling field and manifold have different ambient dimensions")
    value, _ = integrate_over_manifold(m, lambda pts, frames: _norm_r_batch(sf.d0(pts) @ frames), rel_tol)
    return value


def theta(z, h: float, p: LimitParams):
    if not 0 < h < 1:
        raise DomainError("theta needs 0 < h < 1")
    L = math.log(1 / h)
    b = math.sqrt(2 * p.r * L)
    const = math.log((2 * p.r) ** (p.r / p.alpha - 0.5) / math.sqrt(2 * math.pi) * p.pickands_h * p.integral_i)
    corr = (p.r / p.alpha - 0.5) * math.log(L)
    out = b + (np.asarray(z, dtype=float) + corr + const) / b
    return float(out) if np.ndim(out) == 0 else out


def gumbel2(z):
    with np.errstate(over="ignore"):
        out = np.exp(-2 * np.exp(-np.asarray(z, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def psi(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise DomainError("psi needs u > 0")
    out = norm.pdf(u) / u
    return float(out) if np.ndim(out) == 0 else out


def tail_asymptote(x, p: LimitParams, volume_integral: float):
    """First-order ``P(sup X > x)`` on a fixed manifold: ``x^(2r/alpha) Psi(x) H I``."""
    x = np.asarray(x, dtype=float)
    out = x ** (2 * p.r / p.alpha) * psi(x) * p.pickands_h * volume_integral
    return float(out) if np.ndim(out) == 0 else out


def theta_consistency(z: float, h: float, p: LimitParams) -> float:
    """``theta^(2r/alpha) Psi(theta) H (I / h^r) / e^(-z)``, which tends to 1 as ``h -> 0``."""
    t = theta(z, h, p)
    return float(t ** (2 * p.r / p.alpha) * psi(t) * p.pickands_h * p.integral_i / h**p.r / math.exp(-z))
