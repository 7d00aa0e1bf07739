"""Both sides of the boundary and interior Carleman estimates, calibration of
the constant C, and the absorption chain behind uniqueness.

Every term is a weighted quadratic form in the field, so all terms for a
list of fields are assembled as Gram matrices in one pass over the nodes.
All weighted integrals are reported divided by exp(log_scale), where
log_scale is the largest log zeta on the rule; ratios and margin signs are
unaffected by this common factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import cholesky, LinAlgError

from .domain import DomainModel, check_T
from .fields import CoefficientSet, ExpField, PolynomialField, ProductField, ScalarField, box_from_hess, make_bump
from .geometry import null_frame
from .quadrature import (CHUNK, SurfaceRule, VolumeRule, build_surface_rule, build_volume_rule, chunk_slices,
                         map_chunks, pairwise_sum)
from .regions import BoundaryFlags, boundary_flags, w_eps_mask
from .weight import CarlemanParams, WeightError, log_zeta_batch, validate

VANISH_TOL = 1e-12


class VerificationError(ValueError):
    pass


class CalibrationError(VerificationError):
    pass


@dataclass(frozen=True, eq=False)
class Setup:
    """Rules, weights and region flags shared by every field at one resolution."""

    dom: DomainModel
    params: CarlemanParams
    volume: VolumeRule
    surface: SurfaceRule
    flags: BoundaryFlags
    log_zeta: np.ndarray
    log_zeta_surface: np.ndarray
    log_scale: float
    u: np.ndarray
    v: np.ndarray
    r: np.ndarray
    f: np.ndarray
    w_mask: Optional[np.ndarray]
    res: object
    n_ang: int
    workers: Optional[int] = None
    tmp_sign: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def grid_meta(self) -> dict:
        return {"res": self.res, "n_ang": self.n_ang, "resolution": list(self.volume.resolution),
                "n_nodes": len(self.volume), "n_surface": len(self.surface),
                "excluded": self.volume.excluded,
                "n_observation": None if self.w_mask is None else int(self.w_mask.sum())}


def prepare(dom: DomainModel, params: CarlemanParams, res, n_ang: Optional[int] = None,
            interior: bool = False, workers: Optional[int] = None, tmp_sign: float = 1.0) -> Setup:
    """Build rules and weights; raises on inadmissible parameters or T <= R_+.

    ``tmp_sign`` multiplies the temporal angular term f q_tmp on the left side.
    """
    if tmp_sign not in (1.0, -1.0):
        raise VerificationError(f"tmp_sign must be +1 or -1, got {tmp_sign}")
    problems = validate(params, dom.sig, interior=interior)
    if problems:
        raise WeightError("inadmissible parameters: " + "; ".join(problems))
    check_T(dom, params.p)
    p = params.p
    vol = build_volume_rule(dom, p, res)
    n_ang = int(n_ang or (res if np.isscalar(res) else max(res)))
    surf = build_surface_rule(dom, p, vol, n_ang)
    flags = boundary_flags(surf.samples, p, params.eps)
    fr = null_frame(vol.t, vol.x, p)
    lz = log_zeta_batch(vol.t, vol.x, params)
    lzs = log_zeta_batch(surf.samples.t, surf.samples.x, params)
    shift = float(max(lz.max(initial=-np.inf), lzs.max(initial=-np.inf)))
    w_mask = None
    if interior:
        gs = surf.samples.subset(flags.gamma_eps)
        w_mask = w_eps_mask(vol, gs, params.sigma_abs)
        if not w_mask.any():
            raise VerificationError("no observation nodes: W_p^eps contains no quadrature node")
    return Setup(dom, params, vol, surf, flags, lz, lzs, shift, fr.u, fr.v, fr.r, fr.f, w_mask, res, n_ang,
                 workers, float(tmp_sign))


# -- Gram assembly --

def _gram(c, F):
    if F.ndim == 2:
        return np.einsum("n,nk,nl->kl", c, F, F)
    return np.einsum("n,nkd,nld->kl", c, F, F)


def _stack(fields, t, x):
    ev = [fld.evaluate(t, x) for fld in fields]
    Z = np.stack([e.value for e in ev], axis=1)
    G = np.stack([e.grad for e in ev], axis=1)
    H = np.stack([e.hess for e in ev], axis=1)
    return Z, G, H


def _volume_chunk(setup: Setup, fields, sl, coeffs: Optional[CoefficientSet], tmp_sign: float, mu: float):
    vol, prm = setup.volume, setup.params
    m = setup.dom.sig.m
    t, x = vol.t[sl], vol.x[sl]
    u, v, r, f = setup.u[sl], setup.v[sl], setup.r[sl], setup.f[sl]
    with np.errstate(under="ignore"):
        zh = np.exp(setup.log_zeta[sl] - setup.log_scale) * vol.weight[sl]
    Z, G, H = _stack(fields, t, x)
    Gt, Gx = G[..., :m], G[..., m:]
    tp = t - prm.p.t
    xp = x - prm.p.x
    tau = np.linalg.norm(tp, axis=-1)
    that = tp / tau[:, None]
    xhat = xp / r[:, None]
    d_r = np.einsum("nkd,nd->nk", Gx, xhat)
    d_tau = np.einsum("nkd,nd->nk", Gt, that)
    tan_x = Gx - d_r[..., None] * xhat[:, None, :]
    tan_t = Gt - d_tau[..., None] * that[:, None, :]
    du, dv = d_tau - d_r, d_tau + d_r
    sf = np.sqrt(f)
    radial = np.stack([u[:, None] * du, v[:, None] * dv], axis=-1)
    out = {
        "first_order": _gram(zh / r, radial) + _gram(zh / r, sf[:, None, None] * tan_x)
        + tmp_sign * _gram(zh / r, sf[:, None, None] * tan_t),
        "zeroth": _gram(zh / sf, Z),
        "bulk": _gram(zh * f / prm.a, box_from_hess(H, m)),
        "weighted_norm": _gram(zh, Z),
        "_max_abs_z": np.max(np.abs(Z), axis=0, initial=0.0),
    }
    if setup.w_mask is not None:
        w = setup.w_mask[sl].astype(float)
        R = prm.R
        out["interior_t"] = prm.a * R ** 2 * _gram(zh * w / f, Gt)
        out["interior_x"] = prm.a * R ** 2 * _gram(zh * w / f, Gx)
        out["interior_zeroth"] = prm.a ** 4 * R ** 4 * _gram(zh * w / f ** 3, Z)
    if coeffs is not None:
        V = coeffs.V.evaluate(t, x).value
        X = coeffs.X_values(t, x)
        XG = np.einsum("nd,nkd->nk", X, G)
        out["I0"] = (2.0 / prm.a) * _gram(zh * f * V * V, Z)
        out["I1"] = (2.0 / prm.a) * _gram(zh * f, XG)
        above = (f > mu).astype(float)
        sv = np.sqrt(v)
        mu_feats = np.stack([np.sqrt(-u)[:, None] * du, sv[:, None] * dv], axis=-1)
        out["first_mu"] = (_gram(zh * above, mu_feats) + _gram(zh * above, sv[:, None, None] * tan_x)
                           + tmp_sign * _gram(zh * above, sv[:, None, None] * tan_t))
        residual = box_from_hess(H, m) + XG + V[:, None] * Z
        if coeffs.F is not None:
            residual = residual - coeffs.F.evaluate(t, x).value[:, None]
        out["residual"] = (1.0 / prm.a) * _gram(zh * f, residual)
    return out


def _surface_chunk(setup: Setup, fields, sl):
    s = setup.surface.samples
    m = setup.dom.sig.m
    t, x = s.t[sl], s.x[sl]
    with np.errstate(under="ignore"):
        zh = np.exp(setup.log_zeta_surface[sl] - setup.log_scale) * s.weight[sl]
    Z, G, _ = _stack(fields, t, x)
    Nz = s.nu_t1[sl][:, None] * G[..., 0] + np.einsum("nd,nkd->nk", s.nu_x[sl], G[..., m:])
    br = setup.flags.bracket[sl]
    gam = setup.flags.gamma_eps[sl].astype(float)
    return {
        "boundary": _gram(zh * br, Nz),
        "boundary_gamma": _gram(zh * br * gam, Nz),
        "_max_abs_z": np.max(np.abs(Z), axis=0, initial=0.0),
    }


def _reduce(parts: List[dict]) -> dict:
    out = {}
    for key in parts[0]:
        stack = np.stack([p[key] for p in parts])
        out[key] = stack.max(axis=0) if key.startswith("_max") else pairwise_sum(stack)
    return out


def assemble(setup: Setup, fields: Sequence[ScalarField], coeffs: Optional[CoefficientSet] = None,
             tmp_sign: Optional[float] = None, check_vanishing: bool = True) -> Dict[str, np.ndarray]:
    """Gram matrices of every term over ``fields`` (K x K each), cached per setup."""
    fields = list(fields)
    tmp_sign = setup.tmp_sign if tmp_sign is None else tmp_sign
    key = (tuple(id(f) for f in fields), id(coeffs), tmp_sign, check_vanishing)
    hit = setup._cache.get(key)
    if hit is not None:
        return hit[2]
    mu = coeffs.mu if coeffs is not None else 0.0
    vparts = map_chunks(lambda sl: _volume_chunk(setup, fields, sl, coeffs, tmp_sign, mu),
                        len(setup.volume), setup.workers)
    grams = _reduce(vparts)
    vol_max = grams.pop("_max_abs_z")
    if len(setup.surface):
        sparts = map_chunks(lambda sl: _surface_chunk(setup, fields, sl), len(setup.surface), setup.workers)
        sg = _reduce(sparts)
    else:
        K = len(fields)
        sg = {"boundary": np.zeros((K, K)), "boundary_gamma": np.zeros((K, K)), "_max_abs_z": np.zeros(K)}
    if check_vanishing and len(fields):
        # rounding in boundary coordinates leaves |z| ~ 1e-16 times the field scale
        scale = np.maximum(1.0, vol_max)
        worst = int(np.argmax(sg["_max_abs_z"] / scale))
        if sg["_max_abs_z"][worst] > VANISH_TOL * scale[worst]:
            raise VerificationError(
                f"field {worst} ({fields[worst].family}) does not vanish on the boundary: "
                f"max |z| = {sg['_max_abs_z'][worst]:.3e}")
    grams.update({k: v for k, v in sg.items() if not k.startswith("_")})
    # keep the inputs alive so their ids stay unique while cached
    setup._cache[key] = (fields, coeffs, grams)
    return grams


# -- reports --

@dataclass(frozen=True)
class EstimateReport:
    kind: str
    variant: Optional[str]
    lhs_first_order: float
    lhs_zeroth: float
    rhs_bulk: float
    rhs_boundary: float
    rhs_interior_grad: float
    rhs_interior_zeroth: float
    eps: float
    b: float
    a: float
    R: float
    calib_C: float
    calib_Cprime: float
    calibrated_on: str
    margin: float
    passed: bool
    log_scale: float
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    field_info: dict = field(default_factory=dict)

    @property
    def lhs_scaled(self) -> float:
        """eps * first-order term + b a^2 * zeroth-order term."""
        return self.eps * self.lhs_first_order + self.b * self.a ** 2 * self.lhs_zeroth

    @property
    def rhs_total(self) -> float:
        if self.kind == "boundary":
            return self.rhs_bulk + self.calib_Cprime * self.rhs_boundary
        return self.rhs_bulk + self.rhs_interior_grad + self.rhs_interior_zeroth

    def terms(self) -> Dict[str, float]:
        keys = ["lhs_first_order", "lhs_zeroth", "rhs_bulk"]
        keys += ["rhs_boundary"] if self.kind == "boundary" else ["rhs_interior_grad", "rhs_interior_zeroth"]
        return {k: getattr(self, k) for k in keys}


def _params_echo(params: CarlemanParams) -> dict:
    return {"p_t": params.p.t.tolist(), "p_x": params.p.x.tolist(), "a": params.a, "b": params.b,
            "eps": params.eps, "R": params.R, "delta": params.delta, "mu": params.mu,
            "sigma": params.sigma_abs}


def _rhs_matrix(grams, kind, variant, C_prime=1.0):
    if kind == "boundary":
        return grams["bulk"] + C_prime * grams["boundary"]
    grad = grams["interior_t" if variant == "t" else "interior_x"]
    return grams["bulk"] + grad + grams["interior_zeroth"]


def _lhs_matrix(grams, params):
    return params.eps * grams["first_order"] + params.b * params.a ** 2 * grams["zeroth"]


def _reports(setup: Setup, grams, fields, kind, variant, C, C_prime, calibrated_on) -> List[EstimateReport]:
    prm = setup.params
    A = _rhs_matrix(grams, kind, variant, C_prime)
    B = _lhs_matrix(grams, prm)
    out = []
    for i, fld in enumerate(fields):
        a_ii, b_ii = float(A[i, i]), float(B[i, i])
        C_i = C
        if C_i is None:
            C_i = a_ii / b_ii if b_ii > 0 else float("inf")
        margin = a_ii - (C_i * b_ii if b_ii > 0 else 0.0)
        grad_key = "interior_t" if variant == "t" else "interior_x"
        out.append(EstimateReport(
            kind=kind, variant=variant,
            lhs_first_order=float(grams["first_order"][i, i]), lhs_zeroth=float(grams["zeroth"][i, i]),
            rhs_bulk=float(grams["bulk"][i, i]),
            rhs_boundary=float(grams["boundary"][i, i]) if kind == "boundary" else 0.0,
            rhs_interior_grad=float(grams[grad_key][i, i]) if kind == "interior" else 0.0,
            rhs_interior_zeroth=float(grams["interior_zeroth"][i, i]) if kind == "interior" else 0.0,
            eps=prm.eps, b=prm.b, a=prm.a, R=prm.R, calib_C=C_i, calib_Cprime=C_prime,
            calibrated_on=calibrated_on, margin=margin, passed=bool(margin >= 0),
            log_scale=setup.log_scale, grid=setup.grid_meta, params=_params_echo(prm),
            field_info=fld.describe(),
        ))
    return out


def verify_boundary(dom: DomainModel, params: CarlemanParams, field: ScalarField, res, C: Optional[float] = None,
                    C_prime: float = 1.0, setup: Optional[Setup] = None, **kw) -> EstimateReport:
    """Both sides of the boundary estimate for one field.

    With ``C=None`` the constant is calibrated on this field alone, which
    passes by construction; pass a suite-calibrated C for a real check.
    """
    setup = setup or prepare(dom, params, res, **kw)
    grams = assemble(setup, [field])
    return _reports(setup, grams, [field], "boundary", None, C, C_prime, "self" if C is None else "given")[0]


def verify_interior(dom: DomainModel, params: CarlemanParams, field: ScalarField, res, C: Optional[float] = None,
                    variant: str = "t", setup: Optional[Setup] = None, **kw) -> EstimateReport:
    """Both sides of the interior estimate; ``variant='x'`` swaps grad_t for grad_x."""
    if variant not in ("t", "x"):
        raise VerificationError(f"variant must be 't' or 'x', got {variant!r}")
    setup = setup or prepare(dom, params, res, interior=True, **kw)
    if setup.w_mask is None:
        raise VerificationError("setup was prepared without interior observation nodes")
    grams = assemble(setup, [field])
    return _reports(setup, grams, [field], "interior", variant, C, 1.0, "self" if C is None else "given")[0]


def verify_suite(setup: Setup, fields: Sequence[ScalarField], C: float, kind: str = "boundary",
                 variant: Optional[str] = None, C_prime: float = 1.0) -> List[EstimateReport]:
    """Per-field reports at a fixed C, sharing one assembly pass."""
    grams = assemble(setup, fields)
    return _reports(setup, grams, fields, kind, variant if kind == "interior" else None, C, C_prime, "given")


# -- calibration --

@dataclass(frozen=True)
class Calibration:
    C: float
    C_prime: float
    C_fieldwise: float
    ratios: tuple
    kind: str
    variant: Optional[str]
    n_fields: int
    iterations: int
    bracket: tuple


# Gram entries carry rounding errors of a few ulps of sqrt(A_ii A_jj), so in
# coordinates with unit right-side diagonal the form is only known up to
# about n * RESOLUTION * |x|^2. Directions below that are not resolved.
RESOLUTION = 64 * np.finfo(float).eps


def _equilibrated(A, B):
    """Right and left forms scaled to unit right-side diagonal, with the
    right side raised by its resolution floor; None if every field is zero.
    """
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    dA, dB = np.diag(A), np.diag(B)
    if np.any((dA <= 0) & (dB > 0)):
        raise CalibrationError("no positive C: some suite field has a nonpositive right side "
                               "(potential implementation bug)")
    keep = dA > 0
    if not keep.any():
        return None
    s = np.sqrt(dA[keep])
    At = A[np.ix_(keep, keep)] / np.outer(s, s)
    Bt = B[np.ix_(keep, keep)] / np.outer(s, s)
    return At + len(s) * RESOLUTION * np.eye(len(s)), Bt


def _is_psd(M):
    try:
        cholesky(M, lower=True, check_finite=True)
        return True
    except LinAlgError:
        return False


def largest_constant(A: np.ndarray, B: np.ndarray, rel_tol: float = 1e-12, max_iter: int = 200):
    """Bisection for the largest C with A - C B positive semidefinite, up to
    the rounding resolution of A.

    Returns ``(C, iterations, (lo, hi))``; C is the certified lower end.
    """
    inf = float("inf")
    eq = _equilibrated(np.asarray(A, float), np.asarray(B, float))
    if eq is None:
        return inf, 0, (inf, inf)
    At, Bt = eq
    db = np.diag(Bt)
    if not np.any(db > 0):
        return inf, 0, (inf, inf)
    hi = float(np.min(np.diag(At)[db > 0] / db[db > 0]))
    lo = 0.0
    it = 0
    while hi - lo > rel_tol * hi and it < max_iter:
        mid = 0.5 * (lo + hi)
        if _is_psd(At - mid * Bt):
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, it, (lo, hi)


def calibrate(dom: DomainModel, params: CarlemanParams, field_suite: Sequence[ScalarField], res,
              kind: str = "boundary", variant: Optional[str] = None, setup: Optional[Setup] = None,
              min_fields: int = 20, **kw) -> Calibration:
    """Largest C (with C' = 1) keeping the margin nonnegative on the whole
    linear span of the suite, up to rounding resolution; ``C_fieldwise`` is
    the per-field minimum."""
    suite = list(field_suite)
    if kind not in ("boundary", "interior"):
        raise VerificationError(f"kind must be 'boundary' or 'interior', got {kind!r}")
    if kind == "interior" and variant is None:
        variant = "t"
    if not suite:
        inf = float("inf")
        return Calibration(inf, 1.0, inf, (), kind, variant, 0, 0, (inf, inf))
    if len(suite) < min_fields:
        raise VerificationError(f"calibration needs at least {min_fields} fields, got {len(suite)}")
    setup = setup or prepare(dom, params, res, interior=(kind == "interior"), **kw)
    grams = assemble(setup, suite)
    A = _rhs_matrix(grams, kind, variant)
    B = _lhs_matrix(grams, params)
    dA, dB = np.diag(A), np.diag(B)
    ratios = tuple(float(a / b) if b > 0 else float("inf") for a, b in zip(dA, dB))
    C, it, br = largest_constant(A, B)
    return Calibration(C, 1.0, float(min(ratios)), ratios, kind, variant, len(suite), it, br)


# -- absorption and uniqueness --

@dataclass(frozen=True)
class AbsorptionReport:
    I0: float
    I1: float
    lhs_zeroth_scaled: float
    lhs_first_mu: float
    dominance_ratios: tuple
    M0: float
    M1: float
    a: float
    mu: float
    delta: float
    R_plus: float
    log_scale: float
    passed: bool
    grid: dict = field(default_factory=dict)


def _check_collar(setup: Setup, coeffs: CoefficientSet):
    inside = setup.f <= coeffs.mu
    if not inside.any():
        return
    t, x = setup.volume.t[inside], setup.volume.x[inside]
    X = coeffs.X_values(t, x)
    bad = np.flatnonzero(np.any(X != 0.0, axis=-1))
    if bad.size:
        shown = ", ".join(f"(t={t[i].tolist()}, x={x[i].tolist()})" for i in bad[:5])
        raise VerificationError(f"collar violated: X != 0 at {bad.size} nodes with f_p <= mu, e.g. {shown}")


def _absorption_parts(setup: Setup, coeffs: CoefficientSet, field: ScalarField):
    prm = setup.params
    if prm.delta is None:
        raise VerificationError("absorption needs delta in the parameters")
    _check_collar(setup, coeffs)
    g = assemble(setup, [field], coeffs=coeffs)
    R = setup.volume.R_plus
    delta = prm.delta
    N = float(g["weighted_norm"][0, 0])
    lhs0 = delta * prm.a ** 2 / R ** 2 * N
    lhs1 = coeffs.mu * delta ** 2 / R ** 3 * float(g["first_mu"][0, 0])
    return g, N, lhs0, lhs1


def _ratio(num, den):
    if den > 0:
        return num / den
    return float("inf")


def verify_absorption(dom: DomainModel, params: CarlemanParams, coeffs: CoefficientSet, field: ScalarField,
                      res, setup: Optional[Setup] = None, M: Optional[tuple] = None, **kw) -> AbsorptionReport:
    """I0, I1 against the left-side terms that must absorb them; pass iff both ratios >= 1."""
    setup = setup or prepare(dom, params, res, **kw)
    g, N, lhs0, lhs1 = _absorption_parts(setup, coeffs, field)
    I0, I1 = float(g["I0"][0, 0]), float(g["I1"][0, 0])
    ratios = (_ratio(lhs0, I0), _ratio(lhs1, I1))
    M0, M1 = M if M is not None else coeffs.sup_bounds(dom)
    return AbsorptionReport(I0=I0, I1=I1, lhs_zeroth_scaled=lhs0, lhs_first_mu=lhs1, dominance_ratios=ratios,
                            M0=M0, M1=M1, a=params.a, mu=coeffs.mu, delta=params.delta,
                            R_plus=setup.volume.R_plus, log_scale=setup.log_scale,
                            passed=bool(min(ratios) >= 1.0), grid=setup.grid_meta)


@dataclass(frozen=True)
class UniquenessReport:
    bound: float
    weighted_norm: float
    residual_term: float
    boundary_term: float
    dominance_ratios: tuple
    C: float
    C_prime: float
    valid: bool
    log_scale: float

    @property
    def consistent(self) -> bool:
        return self.weighted_norm <= self.bound


def uniqueness_report(dom: DomainModel, params: CarlemanParams, coeffs: CoefficientSet, field: ScalarField,
                      res, C: float, C_prime: float = 1.0, setup: Optional[Setup] = None, **kw) -> UniquenessReport:
    """Bound on N = int zeta z^2 from the boundary estimate and the absorption ratios.

    With box z = F - X.grad z - V z and |box z|^2 <= 3(|F|^2 + |X.grad z|^2 + |V z|^2),
      N <= [ 3 res + C' Bd ] / [ (C - 1.5/ratio0) delta a^2 / R_+^2 ]
    provided C > 1.5/ratio0 and C > 1.5/ratio1, where res = (1/a) int zeta f |F|^2
    with F the residual of z and Bd the boundary term over Gamma_p^eps.
    """
    setup = setup or prepare(dom, params, res, **kw)
    g, N, lhs0, lhs1 = _absorption_parts(setup, coeffs, field)
    I0, I1 = float(g["I0"][0, 0]), float(g["I1"][0, 0])
    r0, r1 = _ratio(lhs0, I0), _ratio(lhs1, I1)
    resid = float(g["residual"][0, 0])
    bd = max(float(g["boundary_gamma"][0, 0]), 0.0)
    R = setup.volume.R_plus
    scale = params.delta * params.a ** 2 / R ** 2
    valid = C > 1.5 / r0 and C > 1.5 / r1
    if N == 0.0 and resid == 0.0 and bd == 0.0:
        bound = 0.0
    elif valid:
        bound = (3.0 * resid + C_prime * bd) / ((C - 1.5 / r0) * scale)
    else:
        bound = float("inf")
    return UniquenessReport(bound, N, resid, bd, (r0, r1), C, C_prime, valid, setup.log_scale)


def uniqueness_bound(dom: DomainModel, params: CarlemanParams, coeffs: CoefficientSet, field: ScalarField,
                     res, C: float, **kw) -> float:
    return uniqueness_report(dom, params, coeffs, field, res, C, **kw).bound


def cone_damped_bump(dom: DomainModel, p, k: float, R: float) -> ScalarField:
    """bump * exp(-k f_p / R^2): concentrates at the cone as k grows."""
    sig = dom.sig
    E, c = [], []
    for i in range(sig.dim):
        e = np.zeros(sig.dim, dtype=int)
        e[i] = 2
        E.append(e)
        c.append((k if i < sig.m else -k) / (4.0 * R ** 2))
    damp = ExpField(PolynomialField(sig, E, c, shift=p.coords))
    return ProductField(make_bump(dom), damp, family="bump")
