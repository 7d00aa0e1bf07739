"""Domains U = G x Omega (static) or moving balls Omega_{t1}, and their boundaries.

Only the spatial boundary G x dOmega is represented; the temporal faces of
G never meet U n D_p once T > R_+.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numpy.polynomial import Polynomial

from .geometry import Signature, SpaceTimePoint, DimensionError


class DomainError(ValueError):
    pass


class BoundaryError(DomainError):
    """A point expected on the boundary is not on it."""

    def __init__(self, msg, distance=None):
        super().__init__(msg)
        self.distance = distance


BOUNDARY_TOL = 1e-9


def _poly(coeffs) -> Polynomial:
    return Polynomial(np.asarray(coeffs, dtype=float).reshape(-1))


@dataclass(frozen=True, eq=False)
class Ball:
    """Ball of radius rho(t1) about c(t1); profiles are polynomials in t1."""

    center: np.ndarray
    radius: float
    radius_profile: Optional[Polynomial] = None
    center_profile: Optional[tuple] = None
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        object.__setattr__(self, "center", c)
        if self.radius_profile is not None and not isinstance(self.radius_profile, Polynomial):
            object.__setattr__(self, "radius_profile", _poly(self.radius_profile))
        if self.center_profile is not None:
            prof = tuple(p if isinstance(p, Polynomial) else _poly(p) for p in self.center_profile)
            if len(prof) != c.size:
                raise DomainError(f"center_profile has {len(prof)} components, center has {c.size}")
            object.__setattr__(self, "center_profile", prof)
            object.__setattr__(self, "center", np.array([p(0.0) for p in prof]))
        if self.radius_profile is not None:
            object.__setattr__(self, "radius", float(self.radius_profile(0.0)))
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")

    @property
    def n(self) -> int:
        return self.center.size

    @property
    def moving(self) -> bool:
        def nonconst(p):
            return p is not None and np.any(p.coef[1:] != 0)

        return nonconst(self.radius_profile) or (
            self.center_profile is not None and any(nonconst(p) for p in self.center_profile)
        )

    # -- profiles, vectorised over t1 --
    def rho(self, t1, d=0):
        t1 = np.asarray(t1, dtype=float)
        if self.radius_profile is None:
            return np.full(t1.shape, self.radius if d == 0 else 0.0)
        return self.radius_profile.deriv(d)(t1) if d else self.radius_profile(t1)

    def c(self, t1, d=0):
        t1 = np.asarray(t1, dtype=float)
        if self.center_profile is None:
            base = self.center if d == 0 else np.zeros_like(self.center)
            return np.broadcast_to(base, t1.shape + (self.n,)).copy()
        return np.stack([(p.deriv(d) if d else p)(t1) for p in self.center_profile], axis=-1)


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DomainError("box lo/hi lengths differ")
        if not np.all(lo < hi):
            raise DomainError(f"box requires lo < hi componentwise, got lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return self.lo.size

    moving = False


SpatialShape = Union[Ball, Box]


@dataclass(frozen=True, eq=False)
class DomainModel:
    sig: Signature
    T: float
    shape: SpatialShape

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")
        if not isinstance(self.shape, (Ball, Box)):
            raise DomainError(f"unsupported shape kind {type(self.shape).__name__}")
        if self.shape.n != self.sig.n:
            raise DimensionError(f"shape is {self.shape.n}-dimensional, signature has n={self.sig.n}")
        if self.shape.moving:
            t1 = np.linspace(-self.T, self.T, 2049)
            if np.any(self.shape.rho(t1) <= 0):
                raise DomainError("radius profile is not positive on (-T, T)")

    @property
    def moving(self) -> bool:
        return self.shape.moving

    def spatial_bounds(self):
        """Axis-aligned box containing every Omega_{t1}, |t1| < T."""
        s = self.shape
        if isinstance(s, Box):
            return s.lo.copy(), s.hi.copy()
        if not s.moving:
            return s.center - s.radius, s.center + s.radius
        t1 = np.linspace(-self.T, self.T, 4097)
        c = s.c(t1)
        rho = s.rho(t1)
        slack = _lipschitz_slack(s, t1)
        return (c - rho[:, None]).min(axis=0) - slack, (c + rho[:, None]).max(axis=0) + slack


def _lipschitz_slack(s: Ball, t1):
    h = t1[1] - t1[0]
    lip = np.max(np.abs(s.rho(t1, 1))) + np.max(np.linalg.norm(s.c(t1, 1), axis=-1))
    # derivative maximum itself is sampled; pad it with the second derivative
    lip += h * (np.max(np.abs(s.rho(t1, 2))) + np.max(np.linalg.norm(s.c(t1, 2), axis=-1)))
    return lip * h


def contains(dom: DomainModel, t, x):
    """Strict membership in U for batches of points."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    inside_t = np.all(np.abs(t) < dom.T, axis=-1)
    s = dom.shape
    if isinstance(s, Box):
        inside_x = np.all((x > s.lo) & (x < s.hi), axis=-1)
    else:
        t1 = t[..., 0]
        d = np.linalg.norm(x - s.c(t1), axis=-1)
        inside_x = d < s.rho(t1)
    return inside_t & inside_x


def boundary_distance(dom: DomainModel, t, x):
    """Spatial distance of points to dOmega_{t1}."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    s = dom.shape
    if isinstance(s, Ball):
        t1 = t[..., 0]
        return np.abs(np.linalg.norm(x - s.c(t1), axis=-1) - s.rho(t1))
    outside = np.maximum(np.maximum(s.lo - x, x - s.hi), 0.0)
    dist_out = np.linalg.norm(outside, axis=-1)
    dist_in = np.min(np.minimum(x - s.lo, s.hi - x), axis=-1)
    return np.where(dist_out > 0, dist_out, np.abs(dist_in))


@dataclass(frozen=True)
class BoundarySample:
    point: SpaceTimePoint
    normal_t1: float
    normal_x: np.ndarray
    weight: float


@dataclass(frozen=True, eq=False)
class BoundarySamples:
    """Columnar boundary samples; ``slice_index`` refers to the temporal node."""

    t: np.ndarray
    x: np.ndarray
    nu_t1: np.ndarray
    nu_x: np.ndarray
    weight: np.ndarray
    slice_index: np.ndarray
    angle: np.ndarray  # chart parameter along dOmega (angle, face coordinate, ...)

    def __len__(self):
        return self.weight.size

    def __getitem__(self, i) -> BoundarySample:
        return BoundarySample(
            point=SpaceTimePoint(self.t[i], self.x[i]),
            normal_t1=float(self.nu_t1[i]),
            normal_x=self.nu_x[i].copy(),
            weight=float(self.weight[i]),
        )

    def subset(self, mask) -> "BoundarySamples":
        return BoundarySamples(*(getattr(self, k)[mask] for k in
                                 ("t", "x", "nu_t1", "nu_x", "weight", "slice_index", "angle")))

    @property
    def area(self) -> float:
        from .quadrature import pairwise_sum

        return pairwise_sum(self.weight)


def midpoints(lo, hi, n):
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h, h


def temporal_grid(dom: DomainModel, n_t: int):
    """Midpoint nodes and weights on G = (-T, T)^m."""
    axis, h = midpoints(-dom.T, dom.T, n_t)
    grids = np.meshgrid(*([axis] * dom.sig.m), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=-1)
    return nodes, np.full(nodes.shape[0], h ** dom.sig.m)


def _sphere_chart(n: int, n_ang: int):
    """Unit directions, cell measures and chart parameter for S^{n-1}."""
    if n == 1:
        return np.array([[-1.0], [1.0]]), np.ones(2), np.array([-1.0, 1.0])
    if n == 2:
        th, h = midpoints(0.0, 2 * np.pi, n_ang)
        return np.stack([np.cos(th), np.sin(th)], axis=-1), np.full(n_ang, h), th
    if n == 3:
        n_z = max(n_ang // 2, 1)
        z, hz = midpoints(-1.0, 1.0, n_z)
        ph, hp = midpoints(0.0, 2 * np.pi, n_ang)
        Z, P = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1.0 - Z ** 2)
        dirs = np.stack([s * np.cos(P), s * np.sin(P), Z], axis=-1).reshape(-1, 3)
        return dirs, np.full(dirs.shape[0], hz * hp), P.reshape(-1)
    raise DomainError(f"ball boundary sampling supports n <= 3, got n={n}")


def sample_boundary(dom: DomainModel, res, t_nodes=None, t_weights=None) -> BoundarySamples:
    """Tensor-product samples of G x dOmega with outward normals and patch measures.

    ``res`` is an int or ``(n_t, n_ang)``; explicit ``t_nodes``/``t_weights``
    override the temporal grid so that samples share slices with a volume
    rule. Box edges and corners are never sampled.
    """
    n_t, n_ang = (res, res) if np.isscalar(res) else res
    if n_t < 1 or n_ang < 1:
        raise DomainError(f"resolution must be positive, got {res}")
    if t_nodes is None:
        t_nodes, t_weights = temporal_grid(dom, int(n_t))
    t_nodes = np.asarray(t_nodes, dtype=float).reshape(-1, dom.sig.m)
    t_weights = np.asarray(t_weights, dtype=float).reshape(-1)
    s = dom.shape
    if isinstance(s, Ball):
        dirs, dmeas, chart = _sphere_chart(dom.sig.n, int(n_ang))
        K, J = t_nodes.shape[0], dirs.shape[0]
        t1 = t_nodes[:, 0]
        rho = s.rho(t1)[:, None]
        c = s.c(t1)[:, None, :]
        x = c + rho[..., None] * dirs[None]
        # w = d/dt1 of the support function: rho' + omega . c'
        w = s.rho(t1, 1)[:, None] + np.einsum("kn,jn->kj", s.c(t1, 1), dirs)
        if np.any(np.abs(w) >= 1.0):
            k, j = np.argwhere(np.abs(w) >= 1.0)[0]
            raise DomainError(f"boundary is not timelike at t1={t1[k]:.6g} (|rho' + omega.c'| = {abs(w[k, j]):.6g})")
        sfac = np.sqrt(1.0 - w ** 2)
        nu_t1 = w / sfac
        nu_x = dirs[None] / sfac[..., None]
        weight = t_weights[:, None] * sfac * rho ** (dom.sig.n - 1) * dmeas[None]
        tt = np.broadcast_to(t_nodes[:, None, :], (K, J, dom.sig.m))
        return BoundarySamples(
            t=tt.reshape(-1, dom.sig.m).copy(),
            x=x.reshape(-1, dom.sig.n),
            nu_t1=nu_t1.reshape(-1),
            nu_x=nu_x.reshape(-1, dom.sig.n),
            weight=weight.reshape(-1),
            slice_index=np.repeat(np.arange(K), J),
            angle=np.tile(chart, K),
        )
    return _sample_box(dom, s, t_nodes, t_weights, int(n_ang))


def _sample_box(dom, s: Box, t_nodes, t_weights, n_face):
    n = dom.sig.n
    xs, nus, ws, charts = [], [], [], []
    for j in range(n):
        others = [k for k in range(n) if k != j]
        axes, hs = [], []
        for k in others:
            a, h = midpoints(s.lo[k], s.hi[k], n_face)
            axes.append(a)
            hs.append(h)
        if others:
            grids = np.meshgrid(*axes, indexing="ij")
            face = np.stack([g.reshape(-1) for g in grids], axis=-1)
            meas = float(np.prod(hs))
        else:
            face = np.zeros((1, 0))
            meas = 1.0
        for side, val in ((-1.0, s.lo[j]), (1.0, s.hi[j])):
            pts = np.empty((face.shape[0], n))
            pts[:, others] = face
            pts[:, j] = val
            nu = np.zeros_like(pts)
            nu[:, j] = side
            xs.append(pts)
            nus.append(nu)
            ws.append(np.full(face.shape[0], meas))
            # chart label: face id, then first in-face coordinate
            charts.append(np.full(face.shape[0], 2 * j + (side > 0), dtype=float))
    X = np.concatenate(xs)
    NU = np.concatenate(nus)
    W = np.concatenate(ws)
    CH = np.concatenate(charts)
    K, J = t_nodes.shape[0], X.shape[0]
    return BoundarySamples(
        t=np.repeat(t_nodes, J, axis=0),
        x=np.tile(X, (K, 1)),
        nu_t1=np.zeros(K * J),
        nu_x=np.tile(NU, (K, 1)),
        weight=(t_weights[:, None] * W[None]).reshape(-1),
        slice_index=np.repeat(np.arange(K), J),
        angle=np.tile(CH, K),
    )


def normal_batch(dom: DomainModel, t, x):
    """Outward g-unit normals at points assumed to lie on the boundary."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    s = dom.shape
    if isinstance(s, Ball):
        t1 = t[..., 0]
        d = x - s.c(t1)
        omega = d / np.linalg.norm(d, axis=-1, keepdims=True)
        w = s.rho(t1, 1) + np.sum(omega * s.c(t1, 1), axis=-1)
        sfac = np.sqrt(1.0 - w ** 2)
        return w / sfac, omega / sfac[..., None]
    gaps = np.concatenate([x - s.lo, s.hi - x], axis=-1)
    face = np.argmin(np.abs(gaps), axis=-1)
    nu = np.zeros_like(x)
    j = face % s.n
    sign = np.where(face >= s.n, 1.0, -1.0)
    np.put_along_axis(nu, j[..., None], sign[..., None], axis=-1)
    return np.zeros(x.shape[:-1]), nu


def outward_normal(dom: DomainModel, q: SpaceTimePoint):
    """Return ``(nu_t1, nu_x)`` at a boundary point.

    The normal is the g-unit vector g^{ab} d_b phi / |d phi|_g of the level
    set phi = |x - c(t1)| - rho(t1); lowering its t1 index recovers the
    Euclidean level-set gradient direction.
    """
    q.check(dom.sig, "q")
    if np.any(np.abs(q.t) >= dom.T):
        raise BoundaryError(f"t={q.t.tolist()} is outside G = (-T, T)^m")
    dist = float(boundary_distance(dom, q.t, q.x))
    if dist > BOUNDARY_TOL:
        raise BoundaryError(f"point is not on the boundary (distance {dist:.3e})", distance=dist)
    s = dom.shape
    if isinstance(s, Box):
        gaps = np.concatenate([q.x - s.lo, s.hi - q.x])
        outside = np.concatenate([q.x < s.lo - BOUNDARY_TOL, q.x > s.hi + BOUNDARY_TOL])
        if outside.any():
            raise BoundaryError("point lies outside the box", distance=dist)
        if np.sum(np.abs(gaps) <= BOUNDARY_TOL) > 1:
            raise BoundaryError("point is on a box edge or corner; the normal is undefined there")
    nu_t1, nu_x = normal_batch(dom, q.t[None], q.x[None])
    return float(nu_t1[0]), nu_x[0]


def normal_f_batch(nu_t1, nu_x, t, x, p: SpaceTimePoint):
    tp1 = np.asarray(t)[..., 0] - p.t[0]
    xp = np.asarray(x) - p.x
    return 0.5 * (np.sum(nu_x * xp, axis=-1) - nu_t1 * tp1)


def normal_r_batch(nu_x, x, p: SpaceTimePoint):
    """N r_p; r_p does not depend on t, so only the spatial normal enters."""
    xp = np.asarray(x) - p.x
    return np.sum(nu_x * xp, axis=-1) / np.linalg.norm(xp, axis=-1)


def normal_f(dom: DomainModel, q: SpaceTimePoint, p: SpaceTimePoint) -> float:
    p.check(dom.sig, "p")
    nu_t1, nu_x = outward_normal(dom, q)
    return float(normal_f_batch(nu_t1, nu_x, q.t, q.x, p))


def r_plus(dom: DomainModel, p: SpaceTimePoint) -> float:
    """R_+ = sup of r_p over U n D_p.

    A point of U lies in D_p iff some t in G is within r_p of t(p), so the
    supremum is the largest |x - x(p)| over Omega_{t1} among slices that
    satisfy this. Static shapes give the exact value; moving balls use a
    dense t1 scan inflated by a Lipschitz bound.
    """
    p.check(dom.sig, "p")
    s = dom.shape
    if not dom.moving:
        d_t = np.linalg.norm(np.maximum(np.abs(p.t) - dom.T, 0.0))
        if isinstance(s, Ball):
            top = np.linalg.norm(s.center - p.x) + s.radius
        else:
            far = np.maximum(np.abs(s.lo - p.x), np.abs(s.hi - p.x))
            top = float(np.linalg.norm(far))
        if not top > d_t:
            raise DomainError("domain does not meet exterior region")
        return float(top)
    t1 = np.linspace(-dom.T, dom.T, 8193)
    d_rest = np.linalg.norm(np.maximum(np.abs(p.t[1:]) - dom.T, 0.0))
    d_t = np.hypot(t1 - p.t[0], d_rest)
    top = np.linalg.norm(s.c(t1) - p.x, axis=-1) + s.rho(t1)
    ok = top > d_t
    if not ok.any():
        raise DomainError("domain does not meet exterior region")
    return float(top[ok].max() + _lipschitz_slack(s, t1))


def check_T(dom: DomainModel, p: SpaceTimePoint) -> float:
    R = r_plus(dom, p)
    if not dom.T > R:
        raise DomainError(f"T = {dom.T} must exceed R_+ = {R:.6g} (temporal faces would meet U n D_p)")
    return R


@dataclass(frozen=True, eq=False)
class Reparametrization:
    """Map from the static cylinder over Omega_0 onto a moving ball domain."""

    static: DomainModel
    moving: DomainModel

    def map(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        s = self.moving.shape
        t1 = t[..., 0]
        scale = (s.rho(t1) / s.radius)[..., None]
        return t, s.c(t1) + scale * (x - s.center)

    def jacobian(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        s = self.moving.shape
        m, n = self.moving.sig.m, self.moving.sig.n
        t1 = t[..., 0]
        J = np.zeros(t.shape[:-1] + (m + n, m + n))
        J[..., range(m), range(m)] = 1.0
        J[..., m:, 0] = s.c(t1, 1) + (s.rho(t1, 1) / s.radius)[..., None] * (x - s.center)
        J[..., range(m, m + n), range(m, m + n)] = (s.rho(t1) / s.radius)[..., None]
        return J

    def det(self, t):
        s = self.moving.shape
        return (s.rho(np.asarray(t, dtype=float)[..., 0]) / s.radius) ** self.moving.sig.n


def static_reparametrize(dom: DomainModel) -> Reparametrization:
    s = dom.shape
    if not isinstance(s, Ball):
        raise DomainError("reparametrization is defined for ball domains only")
    if s.radius_profile is not None:
        roots = s.radius_profile.roots()
        real = roots[np.abs(roots.imag) < 1e-12].real
        if np.any(np.abs(real) <= dom.T) or np.any(s.rho(np.linspace(-dom.T, dom.T, 2049)) <= 0):
            raise DomainError("radius profile vanishes on [-T, T]")
    static = DomainModel(dom.sig, dom.T, Ball(s.center.copy(), s.radius))
    return Reparametrization(static=static, moving=dom)
