"""Scalar test fields with closed-form derivatives, coefficient fields, and
the ultrahyperbolic operator.

Coordinates are ordered (t_1..t_m, x_1..x_n). ``evaluate(t, x)`` returns
value ``(N,)``, gradient ``(N, m+n)`` and Hessian ``(N, m+n, m+n)``.
Finite differences appear only in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .domain import Ball, Box, DomainModel, DomainError
from .geometry import Signature, SpaceTimePoint, null_frame


@dataclass(frozen=True)
class FieldValues:
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


def _coords(t, x):
    t = np.atleast_2d(np.asarray(t, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.concatenate([t, x], axis=-1)


class ScalarField:
    family = "custom"
    boundary_vanishing = False

    def __init__(self, sig: Signature):
        self.sig = sig

    def evaluate(self, t, x) -> FieldValues:
        return self._eval(_coords(t, x))

    def _eval(self, y) -> FieldValues:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, q: SpaceTimePoint):
        q.check(self.sig, "q")
        fv = self.evaluate(q.t[None], q.x[None])
        return float(fv.value[0]), fv.grad[0], fv.hess[0]

    def __mul__(self, other):
        return ProductField(self, other)

    def __add__(self, other):
        return SumField([self, other])

    def describe(self) -> dict:
        return {"family": self.family}


class CustomField(ScalarField):
    """Wraps a callable ``y -> (value, grad, hess)`` over stacked coordinates."""

    def __init__(self, sig, fn: Callable, family="custom", boundary_vanishing=False):
        super().__init__(sig)
        self.fn = fn
        self.family = family
        self.boundary_vanishing = boundary_vanishing

    def _eval(self, y):
        return FieldValues(*self.fn(y))


class ConstantField(ScalarField):
    family = "constant"

    def __init__(self, sig, c: float):
        super().__init__(sig)
        self.c = float(c)

    def _eval(self, y):
        N, d = y.shape
        return FieldValues(np.full(N, self.c), np.zeros((N, d)), np.zeros((N, d, d)))

    def describe(self):
        return {"family": self.family, "c": self.c}


class PolynomialField(ScalarField):
    """sum_k c_k prod_i ((y_i - shift_i)/scale)^{e_ki}."""

    family = "polynomial"

    def __init__(self, sig, exponents, coeffs, shift=None, scale=1.0):
        super().__init__(sig)
        self.exponents = np.asarray(exponents, dtype=int).reshape(-1, sig.dim)
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
        if self.coeffs.size != self.exponents.shape[0]:
            raise ValueError("one coefficient per monomial required")
        self.shift = np.zeros(sig.dim) if shift is None else np.asarray(shift, dtype=float)
        self.scale = float(scale)

    @classmethod
    def total_degree(cls, sig, degree, coeffs, **kw):
        return cls(sig, monomials(sig.dim, degree), coeffs, **kw)

    def _eval(self, y):
        z = (y - self.shift) / self.scale
        N, d = z.shape
        E = self.exponents
        top = int(E.max()) if E.size else 0
        # powers[j][:, i] = z_i^j
        pw = [np.ones_like(z)]
        for _ in range(top):
            pw.append(pw[-1] * z)
        pw = np.stack(pw)  # (top+1, N, d)

        def power(e):
            out = np.zeros((N, d))
            ok = e >= 0
            idx = np.where(ok, e, 0)
            vals = pw[idx, :, np.arange(d)]  # (d, N)
            out[:, ok] = vals.T[:, ok]
            return out

        val = np.zeros(N)
        grad = np.zeros((N, d))
        hess = np.zeros((N, d, d))
        for c, e in zip(self.coeffs, E):
            if c == 0:
                continue
            P = power(e)
            val += c * np.prod(P, axis=1)
            for i in range(d):
                if e[i] == 0:
                    continue
                ei = e.copy()
                ei[i] -= 1
                Pi = power(ei)
                grad[:, i] += c * e[i] * np.prod(Pi, axis=1)
                for j in range(i, d):
                    if ei[j] == 0:
                        continue
                    eij = ei.copy()
                    eij[j] -= 1
                    h = c * e[i] * ei[j] * np.prod(power(eij), axis=1)
                    hess[:, i, j] += h
                    if j != i:
                        hess[:, j, i] += h
        s = self.scale
        return FieldValues(val, grad / s, hess / s ** 2)

    def describe(self):
        return {"family": self.family, "exponents": self.exponents.tolist(),
                "coeffs": self.coeffs.tolist(), "shift": self.shift.tolist(), "scale": self.scale}


def monomials(d: int, degree: int) -> np.ndarray:
    out = []

    def rec(prefix, left, k):
        if k == d:
            out.append(prefix)
            return
        for e in range(left + 1):
            rec(prefix + [e], left - e, k + 1)

    rec([], degree, 0)
    out.sort(key=lambda e: (sum(e), [-v for v in e]))
    return np.array(out, dtype=int)


class ProductField(ScalarField):
    def __init__(self, f: ScalarField, g: ScalarField, family=None):
        super().__init__(f.sig)
        self.f, self.g = f, g
        self.family = family or f"{f.family}*{g.family}"
        self.boundary_vanishing = f.boundary_vanishing or g.boundary_vanishing

    def _eval(self, y):
        a = self.f._eval(y)
        b = self.g._eval(y)
        cross = np.einsum("ni,nj->nij", a.grad, b.grad)
        return FieldValues(
            a.value * b.value,
            a.grad * b.value[:, None] + a.value[:, None] * b.grad,
            a.hess * b.value[:, None, None] + a.value[:, None, None] * b.hess
            + cross + np.swapaxes(cross, 1, 2),
        )

    def describe(self):
        return {"family": self.family, "factors": [self.f.describe(), self.g.describe()]}


class SumField(ScalarField):
    def __init__(self, terms: Sequence[ScalarField], weights=None, family="sum"):
        super().__init__(terms[0].sig)
        self.terms = list(terms)
        self.weights = np.ones(len(terms)) if weights is None else np.asarray(weights, dtype=float)
        self.family = family
        self.boundary_vanishing = all(t.boundary_vanishing for t in terms)

    def _eval(self, y):
        out = None
        for w, term in zip(self.weights, self.terms):
            fv = term._eval(y)
            if out is None:
                out = FieldValues(w * fv.value, w * fv.grad, w * fv.hess)
            else:
                out = FieldValues(out.value + w * fv.value, out.grad + w * fv.grad, out.hess + w * fv.hess)
        return out

    def describe(self):
        return {"family": self.family, "weights": self.weights.tolist(),
                "terms": [t.describe() for t in self.terms]}


class ScaledField(ScalarField):
    def __init__(self, f: ScalarField, c: float):
        super().__init__(f.sig)
        self.f, self.c = f, float(c)
        self.family = f.family
        self.boundary_vanishing = f.boundary_vanishing

    def _eval(self, y):
        fv = self.f._eval(y)
        return FieldValues(self.c * fv.value, self.c * fv.grad, self.c * fv.hess)

    def describe(self):
        return {"family": self.family, "scale": self.c, "field": self.f.describe()}


class SineField(ScalarField):
    """amplitude * sin(l.t + k.x + phase)."""

    family = "planewave"

    def __init__(self, sig, l, k, phase=0.0, amplitude=1.0):
        super().__init__(sig)
        self.l = np.asarray(l, dtype=float).reshape(sig.m)
        self.k = np.asarray(k, dtype=float).reshape(sig.n)
        self.phase = float(phase)
        self.amplitude = float(amplitude)

    @property
    def wave(self):
        return np.concatenate([self.l, self.k])

    def _eval(self, y):
        w = self.wave
        arg = y @ w + self.phase
        s, c = np.sin(arg), np.cos(arg)
        A = self.amplitude
        return FieldValues(A * s, A * c[:, None] * w, -A * s[:, None, None] * np.outer(w, w))

    def describe(self):
        return {"family": self.family, "l": self.l.tolist(), "k": self.k.tolist(),
                "phase": self.phase, "amplitude": self.amplitude}


class ExpField(ScalarField):
    """exp(P) for a polynomial P."""

    family = "exp"

    def __init__(self, inner: PolynomialField):
        super().__init__(inner.sig)
        self.inner = inner

    def _eval(self, y):
        p = self.inner._eval(y)
        e = np.exp(p.value)
        return FieldValues(
            e,
            e[:, None] * p.grad,
            e[:, None, None] * (np.einsum("ni,nj->nij", p.grad, p.grad) + p.hess),
        )

    def describe(self):
        return {"family": self.family, "exponent": self.inner.describe()}


class BallFactor(ScalarField):
    """rho(t1)^2 - |x - c(t1)|^2, which vanishes exactly on dOmega_{t1}."""

    family = "ball_factor"
    boundary_vanishing = True

    def __init__(self, sig, ball: Ball):
        super().__init__(sig)
        self.ball = ball

    def _eval(self, y):
        m = self.sig.m
        t1 = y[:, 0]
        x = y[:, m:]
        b = self.ball
        rho, rho1, rho2 = b.rho(t1), b.rho(t1, 1), b.rho(t1, 2)
        c, c1, c2 = b.c(t1), b.c(t1, 1), b.c(t1, 2)
        dx = x - c
        N, d = y.shape
        val = rho ** 2 - np.sum(dx * dx, axis=1)
        grad = np.zeros((N, d))
        grad[:, 0] = 2 * rho * rho1 + 2 * np.sum(dx * c1, axis=1)
        grad[:, m:] = -2 * dx
        hess = np.zeros((N, d, d))
        hess[:, 0, 0] = 2 * rho1 ** 2 + 2 * rho * rho2 - 2 * np.sum(c1 * c1, axis=1) + 2 * np.sum(dx * c2, axis=1)
        hess[:, 0, m:] = 2 * c1
        hess[:, m:, 0] = 2 * c1
        idx = np.arange(m, d)
        hess[:, idx, idx] = -2.0
        return FieldValues(val, grad, hess)

    def describe(self):
        return {"family": self.family}


def box_factor(sig, box: Box) -> ScalarField:
    """prod_j (x_j - lo_j)(hi_j - x_j) / half_j^2, as an exact polynomial."""
    out = None
    for j in range(sig.n):
        half = 0.5 * (box.hi[j] - box.lo[j])
        e1 = np.zeros(sig.dim, dtype=int)
        e1[sig.m + j] = 1
        e2 = 2 * e1
        e0 = np.zeros(sig.dim, dtype=int)
        # (x - lo)(hi - x) = -x^2 + (lo + hi) x - lo hi
        poly = PolynomialField(sig, [e0, e1, e2],
                               np.array([-box.lo[j] * box.hi[j], box.lo[j] + box.hi[j], -1.0]) / half ** 2)
        out = poly if out is None else ProductField(out, poly)
    out.family = "box_factor"
    out.boundary_vanishing = True
    return out


class CompactBump(ScalarField):
    """max(0, s^2 - |x - c|^2)^3: C^2 and supported in a closed ball of radius s."""

    family = "compact_bump"

    def __init__(self, sig, center, radius):
        super().__init__(sig)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.boundary_vanishing = True

    def _eval(self, y):
        m = self.sig.m
        N, d = y.shape
        dx = y[:, m:] - self.center
        s = self.radius ** 2 - np.sum(dx * dx, axis=1)
        on = s > 0
        s = np.where(on, s, 0.0)
        gs = np.zeros((N, d))
        gs[:, m:] = -2 * dx
        hs = np.zeros((N, d, d))
        idx = np.arange(m, d)
        hs[:, idx, idx] = -2.0
        val = s ** 3
        grad = 3 * (s ** 2)[:, None] * gs
        hess = 6 * s[:, None, None] * np.einsum("ni,nj->nij", gs, gs) + 3 * (s ** 2)[:, None, None] * hs
        return FieldValues(val, grad, hess)

    def describe(self):
        return {"family": self.family, "center": self.center.tolist(), "radius": self.radius}


def smoothstep(s):
    """C^2 ramp 6s^5 - 15s^4 + 10s^3 on [0, 1], clamped outside; returns (chi, chi', chi'')."""
    s = np.clip(s, 0.0, 1.0)
    chi = s ** 3 * (10 - 15 * s + 6 * s ** 2)
    d1 = 30 * s ** 2 * (1 - s) ** 2
    d2 = 60 * s * (1 - s) * (1 - 2 * s)
    return chi, d1, d2


class CollarField(ScalarField):
    """chi(f_p) with chi = 0 on f_p <= mu, 1 on f_p >= 2 mu, smoothstep between."""

    family = "collar"

    def __init__(self, sig, p: SpaceTimePoint, mu: float):
        super().__init__(sig)
        if not mu > 0:
            raise ValueError(f"collar width mu must be positive, got {mu}")
        self.p = p
        self.mu = float(mu)

    def _eval(self, y):
        m = self.sig.m
        tp = y[:, :m] - self.p.t
        xp = y[:, m:] - self.p.x
        # same evaluation of f_p as the quadrature uses, so the collar test agrees
        fp = null_frame(y[:, :m], y[:, m:], self.p).f
        chi, d1, d2 = smoothstep((fp - self.mu) / self.mu)
        # exact zero on the collar regardless of rounding in the polynomial
        chi = np.where(fp <= self.mu, 0.0, chi)
        gf = np.concatenate([-0.5 * tp, 0.5 * xp], axis=1)
        Hf = np.diag(np.concatenate([np.full(m, -0.5), np.full(self.sig.n, 0.5)]))
        d1 = d1 / self.mu
        d2 = d2 / self.mu ** 2
        return FieldValues(
            chi,
            d1[:, None] * gf,
            d2[:, None, None] * np.einsum("ni,nj->nij", gf, gf) + d1[:, None, None] * Hf,
        )

    def describe(self):
        return {"family": self.family, "mu": self.mu, "p_t": self.p.t.tolist(), "p_x": self.p.x.tolist()}


# -- operators --

def box_from_hess(H, m: int):
    diag = np.diagonal(H, axis1=-2, axis2=-1)
    return -np.sum(diag[..., :m], axis=-1) + np.sum(diag[..., m:], axis=-1)


def box_values(fv: FieldValues, m: int):
    return box_from_hess(fv.hess, m)


def box_op(field: ScalarField, q: SpaceTimePoint, sig: Signature) -> float:
    """-trace of the temporal Hessian block + trace of the spatial block."""
    q.check(sig, "q")
    return float(box_values(field.evaluate(q.t[None], q.x[None]), sig.m)[0])


@dataclass
class CoefficientSet:
    """Lower-order coefficients V, X and source F for box z + X.grad z + V z = F."""

    V: ScalarField
    X: List[ScalarField]
    F: Optional[ScalarField] = None
    mu: float = 0.0
    description: dict = field(default_factory=dict)

    def X_values(self, t, x):
        return np.stack([c.evaluate(t, x).value for c in self.X], axis=-1)

    def sup_bounds(self, dom: DomainModel, res: int = 33, inflate: float = 1.05):
        """(M0, M1): sampled sup |V| and sup |X| over U, inflated by 5%."""
        t, x = _grid_over_domain(dom, res)
        V = np.abs(self.V.evaluate(t, x).value)
        X = np.linalg.norm(self.X_values(t, x), axis=-1)
        return inflate * float(V.max(initial=0.0)), inflate * float(X.max(initial=0.0))


def _grid_over_domain(dom: DomainModel, res: int):
    from .domain import contains

    lo, hi = dom.spatial_bounds()
    axes = [np.linspace(-dom.T, dom.T, res)[1:-1]] * dom.sig.m
    axes += [np.linspace(lo[j], hi[j], res) for j in range(dom.sig.n)]
    grids = np.meshgrid(*axes, indexing="ij")
    y = np.stack([g.reshape(-1) for g in grids], axis=-1)
    t, x = y[:, : dom.sig.m], y[:, dom.sig.m:]
    inside = contains(dom, t, x)
    return t[inside], x[inside]


def full_op_values(fv: FieldValues, coeffs: CoefficientSet, t, x, m: int):
    Xv = coeffs.X_values(t, x)
    return box_values(fv, m) + np.sum(Xv * fv.grad, axis=-1) + coeffs.V.evaluate(t, x).value * fv.value


def full_op(field: ScalarField, coeffs: CoefficientSet, q: SpaceTimePoint, sig: Signature) -> float:
    """box z + X^alpha d_alpha z + V z at q."""
    q.check(sig, "q")
    t, x = q.t[None], q.x[None]
    return float(full_op_values(field.evaluate(t, x), coeffs, t, x, sig.m)[0])


# -- constructors --

def boundary_factor(dom: DomainModel) -> ScalarField:
    s = dom.shape
    if isinstance(s, Ball):
        return BallFactor(dom.sig, s)
    if isinstance(s, Box):
        return box_factor(dom.sig, s)
    raise DomainError(f"unsupported shape {type(s).__name__}")


def make_bump(dom: DomainModel, poly: Optional[ScalarField] = None) -> ScalarField:
    """Boundary factor times ``poly``; vanishes identically on G x dOmega."""
    bf = boundary_factor(dom)
    if poly is None:
        poly = ConstantField(dom.sig, 1.0)
    return ProductField(bf, poly, family="bump")


def make_cone_collar_coeffs(p: SpaceTimePoint, mu: float, amplitude, sig: Signature,
                            V: float = 1.0, F: Optional[ScalarField] = None) -> CoefficientSet:
    """X^alpha = chi(f_p) * amplitude^alpha, vanishing on {f_p <= mu}.

    ``amplitude`` is a constant vector of length m+n or a sequence of fields.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    chi = CollarField(sig, p, mu)
    if len(amplitude) != sig.dim:
        raise ValueError(f"amplitude needs m+n = {sig.dim} components")
    X = []
    for comp in amplitude:
        if isinstance(comp, ScalarField):
            X.append(ProductField(chi, comp))
        else:
            X.append(ScaledField(chi, float(comp)))
    V_field = V if isinstance(V, ScalarField) else ConstantField(sig, V)
    return CoefficientSet(V=V_field, X=X, F=F, mu=float(mu),
                          description={"mu": float(mu), "V": V_field.describe(),
                                       "amplitude": [a if not isinstance(a, ScalarField) else a.describe()
                                                     for a in amplitude]})


FAMILIES = ("bump", "planewave_bump", "trig_sum")


def random_field(dom: DomainModel, family: str, rng: np.random.Generator, scale: float = 1.0,
                 degree: int = 2) -> ScalarField:
    """One boundary-vanishing field of the given family drawn from ``rng``."""
    sig = dom.sig
    if family == "bump":
        E = monomials(sig.dim, degree)
        poly = PolynomialField(sig, E, rng.standard_normal(E.shape[0]), scale=scale)
        return make_bump(dom, poly)
    if family == "planewave_bump":
        kmag = rng.uniform(0.5, 3.0) / scale
        k = _unit(rng, sig.n) * kmag
        l = _unit(rng, sig.m) * kmag
        wave = SineField(sig, l, k, phase=rng.uniform(0, 2 * np.pi), amplitude=1.0)
        offset = ConstantField(sig, rng.standard_normal())
        f = ProductField(boundary_factor(dom), SumField([wave, offset]), family="planewave_bump")
        return f
    if family == "trig_sum":
        waves = []
        for _ in range(3):
            waves.append(SineField(sig, rng.uniform(-2, 2, sig.m) / scale, rng.uniform(-2, 2, sig.n) / scale,
                                   phase=rng.uniform(0, 2 * np.pi), amplitude=rng.standard_normal()))
        waves.append(ConstantField(sig, rng.standard_normal()))
        return ProductField(boundary_factor(dom), SumField(waves, family="trig_sum"), family="trig_sum")
    raise ValueError(f"unknown field family {family!r}; choose from {FAMILIES}")


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def make_suite(dom: DomainModel, families: Sequence[str], count: int, seed: int,
               scale: float = 1.0, degree: int = 2) -> List[ScalarField]:
    """``count`` fields cycling through ``families``, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    return [random_field(dom, families[i % len(families)], rng, scale=scale, degree=degree)
            for i in range(count)]
