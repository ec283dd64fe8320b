"""Compact embedded manifolds and parameter-grid meshes of their rescalings.

A manifold ``M_1`` is given by explicit charts ``psi: R^r -> R^n``.  The
rescaled manifold ``M_h = {t : h t in M_1}`` is never stored; every
operation takes ``h`` and divides the embedding by it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .errors import InvalidGeometryError, RankDeficientError, SpacingTooSmallError

# Reach of flat pieces (segment); finite so it survives JSON round-trips.
FLAT_REACH = 1e300
DEFAULT_MAX_POINTS = 200_000


@dataclass(frozen=True)
class Chart:
    """Box-shaped parameter domain with a vectorised embedding and Jacobian.

    ``embed`` maps ``(N, r)`` parameters to ``(N, n)`` points and ``jacobian``
    maps them to ``(N, n, r)`` matrices.  Periodic axes wrap around, so the
    grid on such an axis omits the upper endpoint.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    embed: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    periodic: tuple[bool, ...]

    def contains(self, param: np.ndarray, tol: float = 1e-12) -> bool:
        p = np.asarray(param, dtype=float)
        return bool(np.all(p >= np.asarray(self.lower) - tol) and np.all(p <= np.asarray(self.upper) + tol))


@dataclass(frozen=True)
class ParametrizedManifold:
    kind: str
    params: dict
    intrinsic_dim: int
    ambient_dim: int
    charts: tuple[Chart, ...]
    reach: float
    volume: float

    @property
    def name(self) -> str:
        args = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({args})"

    def bounding_box(self, samples_per_axis: int = 129) -> tuple[np.ndarray, np.ndarray]:
        pts = np.concatenate([c.embed(_param_grid(c, samples_per_axis, closed=True)) for c in self.charts])
        return pts.min(axis=0), pts.max(axis=0)


@dataclass(frozen=True)
class TangentFrame:
    base_point: np.ndarray
    frame: np.ndarray


@dataclass(frozen=True)
class ManifoldMesh:
    scale: float
    points: np.ndarray  # (N, n) points on M_h
    chart_ids: np.ndarray
    params: np.ndarray  # (N, r) chart parameters
    weights: np.ndarray
    target_spacing: float
    spacing_report: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def __len__(self) -> int:
        return len(self.points)


def _fmt(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ",".join(_fmt(x) for x in np.ravel(v)) + "]"
    return f"{float(v):g}"


# --------------------------------------------------------------------------
# built-in manifolds


def _circle_chart(radius: float, A: np.ndarray) -> Chart:
    def embed(p):
        th = p[:, 0]
        return radius * np.stack([np.cos(th), np.sin(th)], axis=1) @ A.T

    def jac(p):
        th = p[:, 0]
        d = radius * np.stack([-np.sin(th), np.cos(th)], axis=1) @ A.T
        return d[:, :, None]

    return Chart((0.0,), (2 * math.pi,), embed, jac, (True,))


def _torus_chart(R: float, rho: float) -> Chart:
    def embed(p):
        u, v = p[:, 0], p[:, 1]
        w = R + rho * np.cos(v)
        return np.stack([w * np.cos(u), w * np.sin(u), rho * np.sin(v)], axis=1)

    def jac(p):
        u, v = p[:, 0], p[:, 1]
        w = R + rho * np.cos(v)
        du = np.stack([-w * np.sin(u), w * np.cos(u), np.zeros_like(u)], axis=1)
        dv = np.stack([-rho * np.sin(v) * np.cos(u), -rho * np.sin(v) * np.sin(u), rho * np.cos(v)], axis=1)
        return np.stack([du, dv], axis=2)

    return Chart((0.0, 0.0), (2 * math.pi, 2 * math.pi), embed, jac, (True, True))


def _segment_chart(length: float) -> Chart:
    def embed(p):
        return p[:, :1].copy()

    def jac(p):
        return np.ones((len(p), 1, 1))

    return Chart((0.0,), (float(length),), embed, jac, (False,))


def make_builtin(kind: str, **params) -> ParametrizedManifold:
    """Instantiate one of the built-in manifolds.

    ``circle(radius)``, ``deformed_circle(radius, matrix)`` (the image of the
    circle under an invertible 2x2 linear map, i.e. an ellipse),
    ``torus_surface(R, rho)`` and ``segment(length)``.
    """
    if kind == "circle":
        radius = float(params.pop("radius", 1.0))
        _no_extra(kind, params)
        _positive(radius=radius)
        return ParametrizedManifold(
            kind, {"radius": radius}, 1, 2, (_circle_chart(radius, np.eye(2)),), radius, 2 * math.pi * radius
        )
    if kind == "deformed_circle":
        radius = float(params.pop("radius", 1.0))
        A = np.asarray(params.pop("matrix", [[1.0, 0.0], [0.0, 1.0]]), dtype=float)
        _no_extra(kind, params)
        _positive(radius=radius)
        if A.shape != (2, 2):
            raise InvalidGeometryError("deformed_circle matrix must be 2x2")
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
            raise InvalidGeometryError("deformed_circle matrix must be invertible")
        a, b = radius * sv[0], radius * sv[1]
        # ellipse: reach = b^2/a, perimeter = 4 a E(1 - b^2/a^2)
        reach = b * b / a
        volume = 4 * a * float(special.ellipe(1.0 - (b / a) ** 2))
        return ParametrizedManifold(
            kind, {"radius": radius, "matrix": A.tolist()}, 1, 2, (_circle_chart(radius, A),), reach, volume
        )
    if kind == "torus_surface":
        R = float(params.pop("R", 3.0))
        rho = float(params.pop("rho", 1.0))
        _no_extra(kind, params)
        _positive(R=R, rho=rho)
        if R <= rho:
            raise InvalidGeometryError(f"torus_surface needs R > rho, got R={R}, rho={rho}")
        return ParametrizedManifold(
            kind, {"R": R, "rho": rho}, 2, 3, (_torus_chart(R, rho),), min(rho, R - rho), 4 * math.pi**2 * R * rho
        )
    if kind == "segment":
        length = float(params.pop("length", 1.0))
        _no_extra(kind, params)
        _positive(length=length)
        return ParametrizedManifold(kind, {"length": length}, 1, 1, (_segment_chart(length),), FLAT_REACH, length)
    raise InvalidGeometryError(f"unknown manifold kind {kind!r}")


def _positive(**vals):
    for k, v in vals.items():
        if not (np.isfinite(v) and v > 0):
            raise InvalidGeometryError(f"{k} must be positive and finite, got {v}")


def _no_extra(kind, params):
    if params:
        raise InvalidGeometryError(f"unexpected parameters for {kind}: {sorted(params)}")


# --------------------------------------------------------------------------
# frames


def orthonormal_frames(jac: np.ndarray) -> np.ndarray:
    """Orthonormalise the columns of a stack of ``(n, r)`` Jacobians.

    Signs are fixed so that ``R`` has a positive diagonal.
    """
    q, rr = np.linalg.qr(jac)
    signs = np.sign(np.diagonal(rr, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return q * signs[..., None, :]


def tangent_frame(m: ParametrizedManifold, h: float, param, chart: int = 0) -> TangentFrame:
    c = m.charts[chart]
    p = np.atleast_1d(np.asarray(param, dtype=float)).reshape(1, m.intrinsic_dim)
    if not c.contains(p[0]):
        raise InvalidGeometryError(f"parameter {p[0]} outside chart {chart} domain")
    J = c.jacobian(p)[0] / h
    if np.linalg.cond(J) > 1e12:
        raise RankDeficientError("Jacobian columns are numerically dependent")
    return TangentFrame(base_point=c.embed(p)[0] / h, frame=orthonormal_frames(J))


# --------------------------------------------------------------------------
# meshes


def mesh_spacing_for_theta(gamma: float, theta: float, alpha: float) -> float:
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    return gamma * theta ** (-2.0 / alpha)


def _param_grid(c: Chart, per_axis: int, closed: bool = False) -> np.ndarray:
    axes = []
    for lo, hi, per in zip(c.lower, c.upper, c.periodic):
        if per and not closed:
            axes.append(np.linspace(lo, hi, per_axis, endpoint=False))
        else:
            axes.append(np.linspace(lo, hi, per_axis))
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def _axis_nodes(lo: float, hi: float, n_int: int, periodic: bool) -> tuple[np.ndarray, np.ndarray]:
    step = (hi - lo) / n_int
    if periodic:
        return lo + step * np.arange(n_int), np.full(n_int, step)
    w = np.full(n_int + 1, step)
    w[0] = w[-1] = step / 2
    return lo + step * np.arange(n_int + 1), w


def _max_speeds(c: Chart, r: int) -> np.ndarray:
    per_axis = 2049 if r == 1 else 129
    J = c.jacobian(_param_grid(c, per_axis, closed=True))
    return np.linalg.norm(J, axis=1).max(axis=0)


def tensor_grid(c: Chart, counts) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Tensor parameter grid with trapezoid weights (``counts`` = intervals per axis)."""
    nodes, weights = zip(*(_axis_nodes(lo, hi, n, per) for lo, hi, n, per in zip(c.lower, c.upper, counts, c.periodic)))
    grid = np.meshgrid(*nodes, indexing="ij")
    wgrid = np.meshgrid(*weights, indexing="ij")
    params = np.stack([g.ravel() for g in grid], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
    return params, w, list(nodes)


def volume_element(jac: np.ndarray) -> np.ndarray:
    g = np.einsum("kni,knj->kij", jac, jac)
    return np.sqrt(np.clip(np.linalg.det(g), 0.0, None))


def build_mesh(
    m: ParametrizedManifold, h: float, target_spacing: float, max_points: int = DEFAULT_MAX_POINTS
) -> ManifoldMesh:
    """Uniform parameter-grid mesh of ``M_h`` with neighbour spacing at most ``target_spacing``."""
    if not 0 < h <= 1:
        raise ValueError("scale h must lie in (0, 1]")
    if not target_spacing > 0:
        raise ValueError("target_spacing must be positive")
    if target_spacing >= m.reach / h:
        raise InvalidGeometryError(f"target spacing {target_spacing} must be below the reach of M_h, {m.reach / h:g}")
    r = m.intrinsic_dim
    plan = []
    total = 0
    for c in m.charts:
        speeds = _max_speeds(c, r) / h
        extents = np.asarray(c.upper) - np.asarray(c.lower)
        counts = [max(1, math.ceil(e * s / target_spacing - 1e-9)) for e, s in zip(extents, speeds)]
        counts = [max(n, 3) if per else n for n, per in zip(counts, c.periodic)]
        npts = math.prod(n if per else n + 1 for n, per in zip(counts, c.periodic))
        total += npts
        if total > max_points:
            raise SpacingTooSmallError(
                f"spacing {target_spacing:g} on M_h (h={h:g}) needs more than {max_points} points"
            )
        plan.append(counts)

    pts, ids, prm, wts, gaps = [], [], [], [], []
    for k, (c, counts) in enumerate(zip(m.charts, plan)):
        params, w, nodes = tensor_grid(c, counts)
        J = c.jacobian(params)
        pts.append(c.embed(params) / h)
        prm.append(params)
        ids.append(np.full(len(params), k))
        wts.append(w * volume_element(J) / h**r)
        gaps.append(_neighbour_gaps(c, nodes, h))

    gaps = np.concatenate(gaps)
    return ManifoldMesh(
        scale=h,
        points=np.concatenate(pts),
        chart_ids=np.concatenate(ids),
        params=np.concatenate(prm),
        weights=np.concatenate(wts),
        target_spacing=float(target_spacing),
        spacing_report=(float(gaps.min()), float(gaps.max()), float(gaps.mean())),
    )


def _neighbour_gaps(c: Chart, nodes: list[np.ndarray], h: float) -> np.ndarray:
    # geodesic gap ~ |J(midpoint) * step| along each parameter axis
    r = len(nodes)
    out = []
    for ax in range(r):
        a = nodes[ax]
        if c.periodic[ax]:
            nxt = np.append(a[1:], a[0] + (c.upper[ax] - c.lower[ax]))
        else:
            nxt = a[1:]
            a = a[:-1]
        mids_ax = (a + nxt) / 2
        others = [nodes[j] for j in range(r) if j != ax]
        grids = np.meshgrid(mids_ax, *others, indexing="ij")
        cols = [None] * r
        cols[ax] = grids[0].ravel()
        it = iter(grids[1:])
        for j in range(r):
            if j != ax:
                cols[j] = next(it).ravel()
        mids = np.stack(cols, axis=1)
        step = np.repeat(nxt - a, len(mids) // len(a))
        J = c.jacobian(mids)[:, :, ax]
        out.append(np.linalg.norm(J, axis=1) * step / h)
    return np.concatenate(out)


def chart_residual(m: ParametrizedManifold, mesh: ManifoldMesh) -> float:
    """Max distance between ``h * p`` and the chart image of ``p``'s parameter."""
    res = 0.0
    for k, c in enumerate(m.charts):
        sel = mesh.chart_ids == k
        if np.any(sel):
            diff = c.embed(mesh.params[sel]) - mesh.scale * mesh.points[sel]
            res = max(res, float(np.abs(diff).max()))
    return res
