"""Null-coordinate geometry of R^{m+n} centred at a reference point p.

Batch functions take ``t`` of shape ``(..., m)`` and ``x`` of shape
``(..., n)``; the single-point wrappers take :class:`SpaceTimePoint`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """A vector does not match the declared signature."""


class DegenerateFrameError(ValueError):
    """Angular frame requested where tau_p = 0 or r_p = 0."""


@dataclass(frozen=True)
class Signature:
    m: int
    n: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")

    @property
    def dim(self) -> int:
        return self.m + self.n


def _frozen_vector(v, name):
    arr = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components: {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpaceTimePoint:
    """A point (t, x) in Cartesian coordinates."""

    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen_vector(self.t, "t"))
        object.__setattr__(self, "x", _frozen_vector(self.x, "x"))

    def __eq__(self, other):
        if not isinstance(other, SpaceTimePoint):
            return NotImplemented
        return np.array_equal(self.t, other.t) and np.array_equal(self.x, other.x)

    def __hash__(self):
        return hash((tuple(self.t), tuple(self.x)))

    def __repr__(self):
        return f"{type(self).__name__}(t={self.t.tolist()}, x={self.x.tolist()})"

    def check(self, sig: Signature, name: str = "q") -> "SpaceTimePoint":
        if self.t.shape != (sig.m,):
            raise DimensionError(f"{name}.t has length {self.t.size}, signature expects m={sig.m}")
        if self.x.shape != (sig.n,):
            raise DimensionError(f"{name}.x has length {self.x.size}, signature expects n={sig.n}")
        return self

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.t, self.x])


class ReferencePoint(SpaceTimePoint):
    """The centre p = (t(p), x(p)) of the null cone."""


def origin(sig: Signature) -> ReferencePoint:
    return ReferencePoint(np.zeros(sig.m), np.zeros(sig.n))


@dataclass(frozen=True)
class NullFrame:
    """p-centred scalars; fields are floats or equally shaped arrays."""

    u: np.ndarray
    v: np.ndarray
    r: np.ndarray
    tau: np.ndarray
    f: np.ndarray


def _as_batch(t, x, p: SpaceTimePoint):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.shape[-1:] != p.t.shape:
        raise DimensionError(f"t has trailing length {t.shape[-1:]}, reference point has m={p.t.size}")
    if x.shape[-1:] != p.x.shape:
        raise DimensionError(f"x has trailing length {x.shape[-1:]}, reference point has n={p.x.size}")
    return t - p.t, x - p.x


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = 134217729.0 * a  # 2^27 + 1
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _accurate_f(t, x, p: SpaceTimePoint):
    """(|x - x(p)|^2 - |t - t(p)|^2) / 4 as if computed in twice the working precision.

    Differences and squares are split into exact head/tail pairs and summed
    with a compensated cascade, so f keeps full relative accuracy however
    close the point is to the cone.
    """
    s = c = None
    for coords, ref, sign in ((x, p.x, 1.0), (t, p.t, -1.0)):
        for j in range(ref.size):
            dh, dl = _two_sum(coords[..., j], -ref[j])
            sq, e = _two_prod(dh, dh)
            tail = e + 2.0 * dh * dl + dl * dl
            if s is None:
                s, c = sign * sq, sign * tail
            else:
                s, err = _two_sum(s, sign * sq)
                c = c + err + sign * tail
    return 0.25 * (s + c)


def null_frame(t, x, p: SpaceTimePoint) -> NullFrame:
    """Null frame of a batch of points.

    ``f`` is evaluated with compensated arithmetic and ``u`` as ``-f/v``;
    ``v`` has no cancellation, so both keep full relative accuracy near
    the cone where ``(tau - r)/2`` would not.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    tp, xp = _as_batch(t, x, p)
    r = np.linalg.norm(xp, axis=-1)
    tau = np.linalg.norm(tp, axis=-1)
    v = 0.5 * (tau + r)
    f = _accurate_f(t, x, p)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(v > 0, -f / np.where(v > 0, v, 1.0), 0.0)
    return NullFrame(u=u, v=v, r=r, tau=tau, f=f)


def to_null_frame(q: SpaceTimePoint, p: SpaceTimePoint, sig: Signature) -> NullFrame:
    q.check(sig, "q")
    p.check(sig, "p")
    fr = null_frame(q.t, q.x, p)
    return NullFrame(*(float(getattr(fr, k)) for k in ("u", "v", "r", "tau", "f")))


def f_p(t, x, p: SpaceTimePoint):
    return null_frame(t, x, p).f


def in_exterior(q: SpaceTimePoint, p: SpaceTimePoint, sig: Signature) -> bool:
    return to_null_frame(q, p, sig).f > 0.0


def grad_f_batch(t, x, p: SpaceTimePoint):
    tp, xp = _as_batch(t, x, p)
    return -0.5 * tp, 0.5 * xp


def grad_f(q: SpaceTimePoint, p: SpaceTimePoint, sig: Signature):
    """Gradient of f_p = (|x_p|^2 - |t_p|^2)/4 as ``(grad_t, grad_x)``."""
    q.check(sig, "q")
    p.check(sig, "p")
    return grad_f_batch(q.t, q.x, p)


@dataclass(frozen=True)
class GradientSplit:
    du: np.ndarray
    dv: np.ndarray
    q_sph: np.ndarray
    q_tmp: np.ndarray
    grad_t: np.ndarray
    grad_x: np.ndarray
    d_r: np.ndarray
    d_tau: np.ndarray


def split_gradient_batch(grad_t, grad_x, t, x, p: SpaceTimePoint) -> GradientSplit:
    """Decompose a gradient into null derivatives and angular remainders.

    The angular parts are the Euclidean norms of the tangential components
    on the spatial and temporal spheres, which equal the metric
    contractions because g is block diagonal in (t, x).
    """
    tp, xp = _as_batch(t, x, p)
    grad_t = np.asarray(grad_t, dtype=float)
    grad_x = np.asarray(grad_x, dtype=float)
    if grad_t.shape[-1:] != tp.shape[-1:] or grad_x.shape[-1:] != xp.shape[-1:]:
        raise DimensionError("gradient components do not match (m, n)")
    r = np.linalg.norm(xp, axis=-1)
    tau = np.linalg.norm(tp, axis=-1)
    if np.any(r == 0.0) or np.any(tau == 0.0):
        raise DegenerateFrameError("degenerate angular frame: r_p = 0 or tau_p = 0")
    xhat = xp / r[..., None]
    that = tp / tau[..., None]
    d_r = np.sum(xhat * grad_x, axis=-1)
    d_tau = np.sum(that * grad_t, axis=-1)
    tan_x = grad_x - d_r[..., None] * xhat
    tan_t = grad_t - d_tau[..., None] * that
    return GradientSplit(
        du=d_tau - d_r,
        dv=d_tau + d_r,
        q_sph=np.sum(tan_x * tan_x, axis=-1),
        q_tmp=np.sum(tan_t * tan_t, axis=-1),
        grad_t=grad_t,
        grad_x=grad_x,
        d_r=d_r,
        d_tau=d_tau,
    )


def split_gradient(grad_t, grad_x, q: SpaceTimePoint, p: SpaceTimePoint, sig: Signature) -> GradientSplit:
    q.check(sig, "q")
    p.check(sig, "p")
    if np.shape(grad_t) != (sig.m,):
        raise DimensionError(f"grad_t has shape {np.shape(grad_t)}, expected ({sig.m},)")
    if np.shape(grad_x) != (sig.n,):
        raise DimensionError(f"grad_x has shape {np.shape(grad_x)}, expected ({sig.n},)")
    s = split_gradient_batch(grad_t, grad_x, q.t, q.x, p)
    return GradientSplit(
        du=float(s.du), dv=float(s.dv), q_sph=float(s.q_sph), q_tmp=float(s.q_tmp),
        grad_t=s.grad_t, grad_x=s.grad_x, d_r=float(s.d_r), d_tau=float(s.d_tau),
    )


def metric_inner(V, W, sig: Signature) -> float:
    """g(V, W) with g = -dt^2 + dx^2."""
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    if V.shape != (sig.dim,) or W.shape != (sig.dim,):
        raise DimensionError(f"vectors must have length m+n={sig.dim}, got {V.shape} and {W.shape}")
    return float(-V[: sig.m] @ W[: sig.m] + V[sig.m:] @ W[sig.m:])
