"""Observation regions Gamma_p, Gamma_p^eps and W_p^eps, and their measures.

Gamma_p     = dU n D_p n {N f_p > 0}
Gamma_p^eps = dU n D_p n {(1 - eps r_p) N f_p + eps f_p N r_p > 0}
W_p^eps     = union over slices {t} x O_sigma(y), (t, y) in Gamma_p^eps, within U n D_p
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .domain import (Ball, BoundarySamples, DomainModel, normal_f_batch, normal_r_batch, outward_normal,
                     r_plus, temporal_grid)
from .geometry import DegenerateFrameError, SpaceTimePoint, null_frame
from .quadrature import (SurfaceRule, VolumeRule, build_surface_rule, build_volume_rule, pairwise_sum)
from .weight import CarlemanParams

KINDS = ("Gamma_p", "Gamma_p_eps", "W_p_eps", "D_p_boundary_trace")

# temporal slices are shared by construction; this only absorbs rounding
_T_MATCH = 1e-9


class RegionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundaryFlags:
    """Per-sample region data on the boundary."""

    f: np.ndarray
    Nf: np.ndarray
    Nr: np.ndarray
    bracket: np.ndarray
    in_D: np.ndarray
    gamma: np.ndarray
    gamma_eps: np.ndarray


def boundary_flags(samples: BoundarySamples, p: SpaceTimePoint, eps: float) -> BoundaryFlags:
    f = null_frame(samples.t, samples.x, p).f
    Nf = normal_f_batch(samples.nu_t1, samples.nu_x, samples.t, samples.x, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        Nr = normal_r_batch(samples.nu_x, samples.x, p)
    r = np.linalg.norm(samples.x - p.x, axis=-1)
    in_D = f > 0
    bracket = (1.0 - eps * r) * Nf + eps * f * np.where(in_D, Nr, 0.0)
    return BoundaryFlags(f=f, Nf=Nf, Nr=Nr, bracket=bracket, in_D=in_D,
                         gamma=in_D & (Nf > 0), gamma_eps=in_D & (bracket > 0))


def gamma_indicator(q: SpaceTimePoint, p: SpaceTimePoint, dom: DomainModel) -> bool:
    """q in Gamma_p; q must lie on dU."""
    nu_t1, nu_x = outward_normal(dom, q)
    f = float(null_frame(q.t, q.x, p).f)
    Nf = float(normal_f_batch(nu_t1, nu_x, q.t, q.x, p))
    return bool(f > 0 and Nf > 0)


def gamma_eps_indicator(q: SpaceTimePoint, params: CarlemanParams, dom: DomainModel) -> bool:
    """q in Gamma_p^eps; q must lie on dU."""
    p = params.p
    nu_t1, nu_x = outward_normal(dom, q)
    r = float(np.linalg.norm(q.x - p.x))
    if r == 0.0:
        raise DegenerateFrameError("degenerate angular frame: r_p = 0 on the boundary")
    f = float(null_frame(q.t, q.x, p).f)
    Nf = float(normal_f_batch(nu_t1, nu_x, q.t, q.x, p))
    Nr = float(normal_r_batch(nu_x, q.x, p))
    return bool(f > 0 and (1.0 - params.eps * r) * Nf + params.eps * f * Nr > 0)


def w_eps_indicator(q: SpaceTimePoint, params: CarlemanParams, dom: DomainModel,
                    gamma_samples: BoundarySamples) -> bool:
    """q in W_p^eps given the Gamma_p^eps member samples."""
    from .domain import contains

    if len(gamma_samples) == 0:
        warnings.warn("Gamma_p^eps is empty; W_p^eps is empty", RuntimeWarning, stacklevel=2)
        return False
    if not (contains(dom, q.t, q.x) and null_frame(q.t, q.x, params.p).f > 0):
        return False
    tol = _T_MATCH * max(1.0, dom.T)
    same = np.all(np.abs(gamma_samples.t - q.t) <= tol, axis=-1)
    if not same.any():
        return False
    d = np.linalg.norm(gamma_samples.x[same] - q.x, axis=-1)
    return bool(d.min() < params.sigma_abs)


def w_eps_mask(volume: VolumeRule, gamma_samples: BoundarySamples, sigma: float) -> np.ndarray:
    """Vectorised W_p^eps membership of volume nodes, slice by slice."""
    member = np.zeros(len(volume), dtype=bool)
    if len(gamma_samples) == 0:
        warnings.warn("Gamma_p^eps is empty; W_p^eps is empty", RuntimeWarning, stacklevel=2)
        return member
    order = np.argsort(volume.slice_index, kind="stable")
    bounds = np.searchsorted(volume.slice_index[order], np.arange(volume.t_nodes.shape[0] + 1))
    for k in np.unique(gamma_samples.slice_index):
        nodes = order[bounds[k]:bounds[k + 1]]
        if nodes.size == 0:
            continue
        tree = cKDTree(gamma_samples.x[gamma_samples.slice_index == k])
        d, _ = tree.query(volume.x[nodes], k=1)
        member[nodes] = d < sigma
    return member


@dataclass(frozen=True, eq=False)
class RegionSpec:
    kind: str
    params: CarlemanParams
    dom: DomainModel

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RegionError(f"unknown region kind {self.kind!r}; choose from {KINDS}")
        if self.kind != "Gamma_p" and self.kind != "D_p_boundary_trace":
            if not 0 <= self.params.eps * self.params.R < 1:
                raise RegionError("region needs 0 <= eps*R < 1")


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Membership over a set of samples. ``measure_estimate`` sums member weights."""

    samples: object
    member: np.ndarray
    weight: np.ndarray
    measure_estimate: float
    error_bar: Optional[float] = None


def _mask_at(spec: RegionSpec, res, n_ang):
    p = spec.params.p
    vol = build_volume_rule(spec.dom, p, res)
    surf = build_surface_rule(spec.dom, p, vol, n_ang)
    flags = boundary_flags(surf.samples, p, spec.params.eps)
    if spec.kind == "W_p_eps":
        gs = surf.samples.subset(flags.gamma_eps)
        member = w_eps_mask(vol, gs, spec.params.sigma_abs)
        return RegionMask(vol, member, vol.weight, pairwise_sum(vol.weight[member]))
    member = {"Gamma_p": flags.gamma, "Gamma_p_eps": flags.gamma_eps,
              "D_p_boundary_trace": flags.in_D}[spec.kind]
    w = surf.samples.weight
    return RegionMask(surf.samples, member, w, pairwise_sum(w[member]))


def region_mask(spec: RegionSpec, res, n_ang: Optional[int] = None, refine: bool = True) -> RegionMask:
    """Membership mask and measure; ``refine`` adds a one-sided error bar
    from the change under doubling of every resolution."""
    res_arr = res if np.isscalar(res) else tuple(res)
    n_ang = n_ang or (int(res) if np.isscalar(res) else int(max(res)))
    mask = _mask_at(spec, res_arr, n_ang)
    if not refine:
        return mask
    res2 = 2 * res_arr if np.isscalar(res_arr) else tuple(2 * r for r in res_arr)
    fine = _mask_at(spec, res2, 2 * n_ang)
    return RegionMask(mask.samples, mask.member, mask.weight, mask.measure_estimate,
                      abs(fine.measure_estimate - mask.measure_estimate))


def region_measures(dom: DomainModel, params: CarlemanParams, res, n_ang: Optional[int] = None) -> dict:
    """Measures of every region kind from one pair of rules."""
    p = params.p
    n_ang = n_ang or (int(res) if np.isscalar(res) else int(max(res)))
    vol = build_volume_rule(dom, p, res)
    surf = build_surface_rule(dom, p, vol, n_ang)
    flags = boundary_flags(surf.samples, p, params.eps)
    w = surf.samples.weight
    member = w_eps_mask(vol, surf.samples.subset(flags.gamma_eps), params.sigma_abs)
    return {
        "D_p_boundary_trace": pairwise_sum(w[flags.in_D]),
        "Gamma_p": pairwise_sum(w[flags.gamma]),
        "Gamma_p_eps": pairwise_sum(w[flags.gamma_eps]),
        "W_p_eps": pairwise_sum(vol.weight[member]),
    }


# -- symmetric difference between Gamma_p^eps and Gamma_p --

def _ball_slice(dom: DomainModel, p: SpaceTimePoint, t: np.ndarray):
    """Functions of the boundary angle on one temporal slice of a ball, n = 2."""
    s = dom.shape
    t1 = t[0]
    rho, c = float(s.rho(t1)), s.c(t1)
    rho1, c1 = float(s.rho(t1, 1)), s.c(t1, 1)
    tau2 = float(np.sum((t - p.t) ** 2))
    tp1 = t1 - p.t[0]

    def evaluate(theta):
        om = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        x = c + rho * om
        xp = x - p.x
        r = np.linalg.norm(xp, axis=-1)
        w = rho1 + om @ c1
        sf = np.sqrt(1.0 - w * w)
        dot = np.sum(om * xp, axis=-1) / sf
        f = 0.25 * (r * r - tau2)
        Nf = 0.5 * (dot - (w / sf) * tp1)
        Nr = dot / r
        return f, Nf, Nr, r, sf * rho

    return evaluate


def _refined_symdiff_slice(evaluate, eps, n_scan=2048, n_gauss=6):
    theta = (np.arange(n_scan) + 0.5) * (2 * np.pi / n_scan)
    f, Nf, Nr, r, _ = evaluate(theta)
    bracket = (1 - eps * r) * Nf + eps * f * Nr
    cuts = [0.0, 2 * np.pi]
    # wrap: compare last scan node with the first, shifted by 2 pi
    ext = np.concatenate([theta, [theta[0] + 2 * np.pi]])
    for k, vals in enumerate((f, Nf, bracket)):
        v = np.concatenate([vals, vals[:1]])
        idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)

        def g(th, k=k):
            ff, nf, nr, rr, _ = evaluate(np.array([th]))
            return float((ff, nf, (1 - eps * rr) * nf + eps * ff * nr)[k][0])

        for i in idx:
            root = brentq(g, ext[i], ext[i + 1], xtol=1e-15, rtol=1e-15)
            cuts.append(root % (2 * np.pi))
    cuts = np.unique(np.array(cuts))
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    total = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0:
            continue
        mid = np.array([0.5 * (a + b)])
        ff, nf, nr, rr, _ = evaluate(mid)
        if not ff[0] > 0 or nf[0] == 0:
            continue
        # sign(bracket) != sign(Nf) iff this ratio is negative
        ratio = (1 - eps * rr[0]) + eps * ff[0] * nr[0] / nf[0]
        if ratio < 0:
            th = 0.5 * (a + b) + 0.5 * (b - a) * xg
            dens = evaluate(th)[4]
            total.append(0.5 * (b - a) * float(np.dot(wg, dens)))
    return pairwise_sum(np.array(total)) if total else 0.0


def symmetric_difference(dom: DomainModel, p: SpaceTimePoint, eps: float, res: int,
                         method: str = "auto") -> float:
    """Surface measure of Gamma_p^eps symmetric-difference Gamma_p.

    ``refined`` (balls in n = 2) locates the sign changes of f_p, N f_p and
    the bracket on each temporal slice by root finding and integrates the
    g-induced density exactly between them. ``samples`` counts boundary
    samples on a res x res grid.
    """
    use_refined = method == "refined" or (
        method == "auto" and isinstance(dom.shape, Ball) and dom.sig.n == 2)
    if use_refined:
        if not (isinstance(dom.shape, Ball) and dom.sig.n == 2):
            raise RegionError("refined symmetric difference needs a ball with n = 2")
        t_nodes, t_w = temporal_grid(dom, res)
        parts = np.array([_refined_symdiff_slice(_ball_slice(dom, p, tk), eps) for tk in t_nodes])
        return pairwise_sum(t_w * parts)
    from .domain import sample_boundary

    s = sample_boundary(dom, res)
    fl = boundary_flags(s, p, eps)
    diff = fl.gamma != fl.gamma_eps
    return pairwise_sum(s.weight[diff])


@dataclass(frozen=True)
class ConvergenceRow:
    delta: float
    eps: float
    measure: float
    error_bar: float
    regime_ok: bool


@dataclass(frozen=True)
class ConvergenceScan:
    rows: List[ConvergenceRow]
    slope: float
    intercept_delta2: float
    monotone: bool
    method: str


def convergence_scan(dom: DomainModel, p: SpaceTimePoint, deltas: Sequence[float], res: int = 128,
                     method: str = "auto", R: Optional[float] = None, rel_tol: float = 1e-9) -> ConvergenceScan:
    """Symmetric-difference measure for eps = delta^2 / R_+ over a decreasing delta list.

    ``slope`` is the least-squares log-log slope over the positive
    measures (nan if fewer than two); ``intercept_delta2`` is the delta -> 0
    value of a straight-line fit in delta^2. Rows flag whether
    eps <= 0.1 b holds; the regions themselves only need eps R_+ < 1.
    """
    deltas = [float(d) for d in deltas]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise RegionError("delta list must be strictly decreasing")
    R = r_plus(dom, p) if R is None else R
    rows = []
    for d in deltas:
        eps = d * d / R
        if not eps * R < 1:
            raise RegionError(f"delta = {d} gives eps R_+ >= 1")
        m1 = symmetric_difference(dom, p, eps, res, method)
        m2 = symmetric_difference(dom, p, eps, 2 * res, method)
        rows.append(ConvergenceRow(d, eps, m1, abs(m2 - m1), regime_ok=eps <= 0.1 * (d / R) * (1 + 1e-12)))
    meas = np.array([r.measure for r in rows])
    scale = max(float(meas.max(initial=0.0)), np.finfo(float).tiny)
    monotone = bool(np.all(np.diff(meas) <= rel_tol * scale + np.array([r.error_bar for r in rows[1:]])))
    pos = meas > 0
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log(np.array(deltas)[pos]), np.log(meas[pos]), 1)[0])
    else:
        slope = float("nan")
    d2 = np.array(deltas) ** 2
    intercept = float(np.polyfit(d2, meas, 1)[1]) if len(deltas) >= 2 else float("nan")
    used = "refined" if (method == "refined" or (method == "auto" and isinstance(dom.shape, Ball)
                                                 and dom.sig.n == 2)) else "samples"
    return ConvergenceScan(rows, slope, intercept, monotone, used)
