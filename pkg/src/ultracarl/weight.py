"""The Carleman weight zeta_{a,b;eps}^p, evaluated in log space.

    zeta = { f/D * exp(2 b sqrt(f) / sqrt(D)) }^{2a},   D = 1 - eps r + eps^2 f,

where D equals (1 + eps u)(1 - eps v). Powers 2a >= 18 under- and overflow
doubles, so everything downstream works with ``log_zeta``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from .geometry import ReferencePoint, Signature, SpaceTimePoint, null_frame, _as_batch


class WeightError(ValueError):
    pass


# tolerance on the admissibility comparisons, so that delta-derived values
# sitting exactly on a boundary of the regime are not rejected by rounding
_SLACK = 1e-12


@dataclass(frozen=True)
class CarlemanParams:
    """Parameters of the weight and of the observation regions.

    ``sigma`` is the absolute neighbourhood width for W_p^eps (None means
    0.1 R). ``kappa1``/``kappa2`` encode eps << b << 1/R as eps <= kappa1*b and
    b <= kappa2/R; ``separation`` encodes every ">>" as a fixed factor.
    """

    p: ReferencePoint
    a: float
    b: float
    eps: float
    R: float
    delta: Optional[float] = None
    mu: float = 0.0
    sigma: Optional[float] = None
    kappa1: float = 0.1
    kappa2: float = 0.1
    separation: float = 10.0

    @classmethod
    def from_delta(cls, p, a, delta, R, **kw) -> "CarlemanParams":
        """eps = delta^2/R and b = delta/R."""
        if not delta > 0:
            raise WeightError(f"delta must be positive, got {delta}")
        if not R > 0:
            raise WeightError(f"R must be positive, got {R}")
        return cls(p=p, a=float(a), b=delta / R, eps=delta ** 2 / R, R=float(R), delta=float(delta), **kw)

    def with_(self, **kw) -> "CarlemanParams":
        return replace(self, **kw)

    @property
    def sigma_abs(self) -> float:
        """Neighbourhood width; defaults to 0.1 R when ``sigma`` is unset."""
        return 0.1 * self.R if self.sigma is None else float(self.sigma)


def validate(params: CarlemanParams, sig: Signature, interior: bool = False) -> List[str]:
    """Violated admissibility conditions; an empty list means admissible."""
    out = []
    a_min = (sig.m + sig.n) ** 2
    if not params.a >= a_min * (1 - _SLACK):
        out.append(f"a >= (m+n)^2 = {a_min} violated (a = {params.a:g})")
    if not params.R > 0:
        out.append(f"R > 0 violated (R = {params.R:g})")
    if not params.b > 0:
        out.append(f"b > 0 violated (b = {params.b:g})")
    if not params.eps >= 0:
        out.append(f"eps >= 0 violated (eps = {params.eps:g})")
    if params.R > 0:
        if not params.eps <= params.kappa1 * params.b * (1 + _SLACK):
            out.append(f"eps <= kappa1*b = {params.kappa1 * params.b:g} violated (eps = {params.eps:g})")
        if not params.b <= params.kappa2 / params.R * (1 + _SLACK):
            out.append(f"b <= kappa2/R = {params.kappa2 / params.R:g} violated (b = {params.b:g})")
        if interior and not params.a >= params.separation * params.R * (1 - _SLACK):
            out.append(f"a >= {params.separation:g}*R = {params.separation * params.R:g} violated (a = {params.a:g})")
    if params.delta is not None and params.R > 0:
        if not np.isclose(params.eps, params.delta ** 2 / params.R, rtol=1e-12, atol=0):
            out.append("eps = delta^2/R violated")
        if not np.isclose(params.b, params.delta / params.R, rtol=1e-12, atol=0):
            out.append("b = delta/R violated")
    if params.mu < 0:
        out.append(f"mu >= 0 violated (mu = {params.mu:g})")
    if params.sigma is not None and not params.sigma > 0:
        out.append(f"sigma > 0 violated (sigma = {params.sigma:g})")
    if params.p.t.size != sig.m or params.p.x.size != sig.n:
        out.append("reference point does not match the signature")
    return out


@dataclass(frozen=True)
class WeightValue:
    log_zeta: np.ndarray
    zeta: np.ndarray
    base: np.ndarray


def _denominator(frame, eps):
    # log D via log1p: D is within eps*R of 1
    arg = -eps * frame.r + eps * eps * frame.f
    D = 1.0 + arg
    if np.any(D <= 0):
        raise WeightError("weight denominator nonpositive")
    return D, np.log1p(arg)


def log_zeta_batch(t, x, params: CarlemanParams):
    frame = null_frame(t, x, params.p)
    return _log_zeta(frame, params)


def _log_zeta(frame, params):
    f = frame.f
    if np.any(f < 0):
        raise WeightError("weight evaluated inside the null cone (f_p < 0)")
    D, logD = _denominator(frame, params.eps)
    with np.errstate(divide="ignore"):
        log_f = np.log(f)
    log_base = log_f - logD + 2.0 * params.b * np.sqrt(f / D)
    return 2.0 * params.a * log_base


def eval_zeta_batch(t, x, params: CarlemanParams) -> WeightValue:
    lz = log_zeta_batch(t, x, params)
    with np.errstate(under="ignore"):
        return WeightValue(log_zeta=lz, zeta=np.exp(lz), base=np.exp(lz / (2.0 * params.a)))


def eval_zeta(q: SpaceTimePoint, params: CarlemanParams, sig: Signature) -> WeightValue:
    q.check(sig, "q")
    w = eval_zeta_batch(q.t, q.x, params)
    return WeightValue(float(w.log_zeta), float(w.zeta), float(w.base))


def grad_log_zeta_batch(t, x, params: CarlemanParams):
    """Cartesian gradient of log zeta, shape ``(..., m+n)``.

    d log zeta = 2a [ df/f - dD/D + d(2b sqrt(f) D^{-1/2}) ],
    dD = -eps dr + eps^2 df.
    """
    tp, xp = _as_batch(t, x, params.p)
    frame = null_frame(t, x, params.p)
    f, r = frame.f, frame.r
    if np.any(f <= 0):
        raise WeightError("gradient undefined on cone (f_p <= 0)")
    eps, b = params.eps, params.b
    D, _ = _denominator(frame, eps)
    df = np.concatenate([-0.5 * tp, 0.5 * xp], axis=-1)
    dr = np.concatenate([np.zeros_like(tp), xp / r[..., None]], axis=-1)
    dD = -eps * dr + eps * eps * df
    sf = np.sqrt(f)[..., None]
    sD = np.sqrt(D)[..., None]
    d_exp = 2.0 * b * (df / (2.0 * sf * sD) - sf * dD / (2.0 * sD ** 3))
    return 2.0 * params.a * (df / f[..., None] - dD / D[..., None] + d_exp)


def grad_zeta(q: SpaceTimePoint, params: CarlemanParams, sig: Signature) -> np.ndarray:
    """Cartesian gradient (d_t zeta, d_x zeta) at a single point."""
    q.check(sig, "q")
    g = grad_log_zeta_batch(q.t, q.x, params)
    return g * float(eval_zeta_batch(q.t, q.x, params).zeta)


def derivative_bound_ratio_batch(t, x, params: CarlemanParams):
    """max_alpha |d_alpha zeta| f / (a R zeta), computed without forming zeta."""
    g = grad_log_zeta_batch(t, x, params)
    f = null_frame(t, x, params.p).f
    return np.max(np.abs(g), axis=-1) * f / (params.a * params.R)


def derivative_bound_ratio(q: SpaceTimePoint, params: CarlemanParams, sig: Signature) -> float:
    q.check(sig, "q")
    return float(derivative_bound_ratio_batch(q.t, q.x, params))


def choose_a(sig: Signature, R_plus: float, delta: float, M0: float, M1: float, mu: float,
             separation: float = 10.0) -> float:
    """Smallest a meeting a >> max{(m+n)^2, R_+, delta^{-1/3} M0^{2/3} R_+^{4/3},
    mu^{-1} delta^{-2} M1^2 R_+^4} with ">>" read as a factor ``separation``."""
    if not mu > 0:
        raise WeightError("mu must be positive to choose a")
    terms = [
        (sig.m + sig.n) ** 2,
        R_plus,
        delta ** (-1.0 / 3.0) * M0 ** (2.0 / 3.0) * R_plus ** (4.0 / 3.0),
        M1 ** 2 * R_plus ** 4 / (mu * delta ** 2),
    ]
    return separation * max(terms)
