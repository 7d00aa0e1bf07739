"""Command-line front end.

    ultracarl <command> --config <path> [--out <dir>] [--seed <u64>] [--workers <k>]

Exit status: 0 when every check of the command passes, 2 when a check
fails, 1 on usage, configuration or precondition errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from typing import List, Optional

import numpy as np

from . import plots, report
from .config import COMMANDS, ConfigError, RunConfig, load, require
from .domain import Ball, Box, DomainError, DomainModel, r_plus, sample_boundary
from .fields import FAMILIES, make_bump, make_cone_collar_coeffs, make_suite
from .geometry import DegenerateFrameError, DimensionError, ReferencePoint, Signature, null_frame
from .quadrature import QuadratureError, build_volume_rule
from .regions import RegionError, boundary_flags, convergence_scan, region_measures, w_eps_mask
from .verify import (CalibrationError, VerificationError, calibrate, cone_damped_bump, prepare,
                     uniqueness_report, verify_absorption, verify_suite)
from .weight import (CarlemanParams, WeightError, choose_a, derivative_bound_ratio_batch, grad_log_zeta_batch,
                     log_zeta_batch, validate)

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
REPORT_HEADER = ["group", "item", "term", "value"]


class Run:
    """Shared state of one command invocation."""

    def __init__(self, cfg: RunConfig, command: str, out: str, workers: int):
        self.cfg = cfg
        self.command = command
        self.out = out
        self.workers = workers
        self.rows: List[list] = []
        self.sections = {}
        self.derived = {}

    @property
    def meta(self):
        return {"command": self.command, "seed": self.cfg.seed, "config_hash": self.cfg.hash}

    def add(self, group, item, term, value):
        self.rows.append([group, item, term, value])

    def path(self, name):
        return os.path.join(self.out, name)

    def finish(self, title, passed):
        self.sections.setdefault("result", {})["passed"] = passed
        report.write_csv(self.path("report.csv"), REPORT_HEADER, self.rows, self.meta)
        echo = self.cfg.canonical()
        echo["derived"] = self.derived
        report.write_summary(self.path("summary.txt"), title, self.sections, self.meta, echo)
        return EXIT_PASS if passed else EXIT_FAIL


# -- builders --

def build_domain(cfg: RunConfig) -> DomainModel:
    d = cfg["domain"]
    sig = Signature(d["m"], d["n"])
    if d["kind"] == "ball":
        center = d["center"] if d["center"] is not None else [0.0] * sig.n
        radius = d["radius"] if d["radius"] is not None else d["radius_profile"][0]
        shape = Ball(center=center, radius=radius, radius_profile=d["radius_profile"],
                     center_profile=d["center_profile"])
    else:
        shape = Box(lo=d["lo"], hi=d["hi"])
    return DomainModel(sig, d["T"], shape)


def reference_point(cfg: RunConfig, sig: Signature) -> ReferencePoint:
    c = cfg["carleman"]
    t = c["p_t"] if c["p_t"] is not None else [0.0] * sig.m
    x = c["p_x"] if c["p_x"] is not None else [0.0] * sig.n
    if len(t) != sig.m or len(x) != sig.n:
        raise ConfigError(f"[carleman] p_t/p_x must have {sig.m} and {sig.n} components")
    return ReferencePoint(t, x)


def build_params(cfg: RunConfig, dom: DomainModel, a: Optional[float] = None) -> CarlemanParams:
    """Parameters with defaults R = R_+, mu = 0.05 R^2; ``a`` overrides the config."""
    c = cfg["carleman"]
    p = reference_point(cfg, dom.sig)
    R = c["R"] if c["R"] is not None else r_plus(dom, p)
    a = c["a"] if a is None else a
    if a == "auto":
        raise ConfigError("[carleman] a = auto is only available for absorption and uniqueness-demo")
    mu = c["mu"] if c["mu"] is not None else 0.05 * R * R
    kw = dict(mu=mu, sigma=c["sigma"], kappa1=c["kappa1"], kappa2=c["kappa2"], separation=c["separation"])
    if c["delta"] is not None:
        return CarlemanParams.from_delta(p, a, c["delta"], R, **kw)
    return CarlemanParams(p=p, a=float(a), b=c["b"], eps=c["eps"], R=float(R), **kw)


def _echo_params(run: Run, prm: CarlemanParams):
    run.derived.update({"p_t": prm.p.t.tolist(), "p_x": prm.p.x.tolist(), "a": prm.a, "b": prm.b,
                        "eps": prm.eps, "R": prm.R, "delta": prm.delta, "mu": prm.mu, "sigma": prm.sigma_abs})
    for k in ("a", "b", "eps", "R", "delta", "mu", "sigma"):
        run.add("params", "", k, run.derived[k])


def _res(cfg: RunConfig):
    res = cfg["grid"]["res"]
    return res[0], (res[1] if len(res) > 1 else 2 * res[0])


def _check_families(fams):
    bad = [f for f in fams if f not in FAMILIES]
    if bad:
        raise ConfigError(f"[field] families: unknown {bad}; choose from {FAMILIES}")


def _suites(cfg: RunConfig, dom: DomainModel):
    f = cfg["field"]
    _check_families(f["families"])
    seed = cfg.seed
    cal_seed = f["calibration_seed"] if f["calibration_seed"] is not None else seed
    hold_seed = f["holdout_seed"] if f["holdout_seed"] is not None else seed + 1
    if cal_seed == hold_seed:
        raise ConfigError("[field] calibration_seed and holdout_seed must differ")
    A = make_suite(dom, f["families"], f["count"], cal_seed, degree=f["degree"])
    B = make_suite(dom, f["families"], f["holdout_count"], hold_seed, degree=f["degree"])
    return A, B, cal_seed, hold_seed


def _coefficients(cfg: RunConfig, dom: DomainModel, p, R: float, mu: float):
    f = cfg["field"]
    amp = f["amplitude"]
    if amp is None:
        amp = list(np.ones(dom.sig.dim) / np.sqrt(dom.sig.dim))
    return make_cone_collar_coeffs(p, mu, amp, dom.sig, V=f["V"])


def _absorption_params(cfg: RunConfig, dom: DomainModel, run: Run):
    """Parameters and coefficients; ``a = auto`` applies the factor-10 rule."""
    c = cfg["carleman"]
    p = reference_point(cfg, dom.sig)
    R = c["R"] if c["R"] is not None else r_plus(dom, p)
    mu = c["mu"] if c["mu"] is not None else 0.05 * R * R
    if c["delta"] is None:
        raise ConfigError(f"[carleman] {run.command} needs delta")
    coeffs = _coefficients(cfg, dom, p, R, mu)
    M0, M1 = coeffs.sup_bounds(dom)
    a = c["a"]
    if a == "auto":
        a = choose_a(dom.sig, R, c["delta"], M0, M1, mu, separation=c["separation"])
    prm = build_params(cfg, dom, a=a)
    run.derived.update({"M0": M0, "M1": M1, "a_rule": "auto" if c["a"] == "auto" else "given"})
    return prm, coeffs, (M0, M1)


# -- regions and figures --

def _plot_slices(cfg: RunConfig, vol, dom: DomainModel) -> List[int]:
    """Temporal node indices to plot."""
    t_nodes = vol.t_nodes
    rest = vol.p.t[1:]
    wanted = cfg["grid"]["slices"]
    if wanted is None:
        used = np.unique(vol.slice_index)
        t1 = t_nodes[used, 0]
        lo, hi = t1.min(), t1.max()
        wanted = [lo + (hi - lo) * q for q in (1 / 6, 1 / 2, 5 / 6)]
    out = []
    for w in wanted:
        target = np.concatenate([[w], rest])
        out.append(int(np.argmin(np.linalg.norm(t_nodes - target, axis=-1))))
    return sorted(set(out))


def cmd_regions(run: Run, figures: bool = False) -> int:
    cfg = run.cfg
    dom = build_domain(cfg)
    prm = build_params(cfg, dom)
    _echo_params(run, prm)
    problems = [s for s in validate(prm, dom.sig) if "eps <= kappa1" not in s]
    if problems:
        raise WeightError("inadmissible parameters: " + "; ".join(problems))
    if not prm.eps * prm.R < 1:
        raise RegionError("regions need eps R < 1")
    p = prm.p
    res, res2 = _res(cfg)
    n_ang = cfg["grid"]["n_ang"] or res
    vol = build_volume_rule(dom, p, res, cap=cfg["grid"]["cap"])
    # whole boundary on the volume's slices, so the plots show dU outside D_p too
    surf = sample_boundary(dom, (vol.t_nodes.shape[0], n_ang), vol.t_nodes, vol.t_weights)
    flags = boundary_flags(surf, p, prm.eps)
    w_mask = w_eps_mask(vol, surf.subset(flags.gamma_eps), prm.sigma_abs)
    slices = _plot_slices(cfg, vol, dom)
    sig = dom.sig

    header = (["where", "slice"] + [f"t{i + 1}" for i in range(sig.m)] + [f"x{j + 1}" for j in range(sig.n)]
              + ["f_p", "N_f_p", "bracket", "in_D_p", "Gamma_p", "Gamma_p_eps", "W_p_eps"])
    rows = []
    for i in range(len(surf)):
        rows.append(["boundary", int(surf.slice_index[i]), *surf.t[i].tolist(), *surf.x[i].tolist(),
                     float(flags.f[i]), float(flags.Nf[i]), float(flags.bracket[i]), bool(flags.in_D[i]),
                     bool(flags.gamma[i]), bool(flags.gamma_eps[i]), False])
    on_plot = np.isin(vol.slice_index, slices)
    f_vol = null_frame(vol.t, vol.x, p).f
    for i in np.flatnonzero(on_plot):
        rows.append(["interior", int(vol.slice_index[i]), *vol.t[i].tolist(), *vol.x[i].tolist(),
                     float(f_vol[i]), "", "", bool(f_vol[i] > 0), False, False, bool(w_mask[i])])
    report.write_csv(run.path("regions.csv"), header, rows, run.meta)

    m1 = region_measures(dom, prm, res, n_ang)
    refine = cfg["grid"]["refine"]
    m2 = region_measures(dom, prm, res2, 2 * n_ang if res2 == 2 * res else n_ang * res2 // res) if refine else None
    meas = {}
    for k, v in m1.items():
        bar = abs(m2[k] - v) if refine else None
        run.add("measure", k, "value", v)
        run.add("measure", k, "error_bar", bar)
        meas[k] = v
    subset_ok = bool(np.all(flags.in_D[flags.gamma_eps]) and np.all(flags.f[flags.gamma] > 0))
    run.add("invariants", "Gamma_p_eps in trace, Gamma_p in D_p", "holds", subset_ok)
    run.sections["regions"] = {**{f"measure {k}": v for k, v in meas.items()},
                               "boundary samples": len(surf), "volume nodes": len(vol),
                               "W_p^eps nodes": int(w_mask.sum()), "subset invariants hold": subset_ok}
    passed = subset_ok

    if not figures:
        deltas = cfg["grid"]["deltas"]
        scan = convergence_scan(dom, p, deltas, res=res, R=prm.R)
        for row in scan.rows:
            tag = f"delta={row.delta!r}"
            run.add("convergence", tag, "eps", row.eps)
            run.add("convergence", tag, "measure", row.measure)
            run.add("convergence", tag, "error_bar", row.error_bar)
            run.add("convergence", tag, "regime_ok", row.regime_ok)
        run.add("convergence", "", "slope", scan.slope)
        run.add("convergence", "", "intercept_delta2", scan.intercept_delta2)
        run.add("convergence", "", "monotone", scan.monotone)
        last_le_first = scan.rows[-1].measure <= scan.rows[0].measure
        run.sections["convergence"] = {"method": scan.method, "slope": scan.slope, "monotone": scan.monotone,
                                       "last <= first": last_le_first,
                                       "delta -> 0 intercept": scan.intercept_delta2}
        passed = passed and scan.monotone and last_le_first

    files = []
    desc = "; ".join(f"{k}={v}" for k, v in run.meta.items())
    if sig.n == 1:
        name = "slice_xt.svg"
        plots.slice_svg(run.path(name), dom, p, surf, flags, None, vol, w_mask, title="x-t plane", description=desc)
        files.append(name)
    else:
        for k in slices:
            t1 = vol.t_nodes[k, 0]
            name = f"slice_{k:04d}.svg"
            plots.slice_svg(run.path(name), dom, p, surf, flags, k, vol, w_mask,
                            title=f"t1 = {t1:.4g}" + (" (upper half, projected)" if sig.n > 2 else ""), description=desc)
            files.append(name)
        if isinstance(dom.shape, Ball) and sig.n == 2:
            plots.unrolled_svg(run.path("unrolled.svg"), surf, flags, title="boundary, angle against t1",
                               description=desc)
            files.append("unrolled.svg")
    run.sections["files"] = "\n".join(["regions.csv", *files, "report.csv", "summary.txt"])
    return run.finish("Observation regions" if not figures else "Region figures", passed)


# -- estimates --

def cmd_verify(run: Run, kind: str) -> int:
    cfg = run.cfg
    dom = build_domain(cfg)
    prm = build_params(cfg, dom)
    _echo_params(run, prm)
    A, B, cal_seed, hold_seed = _suites(cfg, dom)
    run.derived.update({"calibration_seed": cal_seed, "holdout_seed": hold_seed})
    res, res2 = _res(cfg)
    n_ang = cfg["grid"]["n_ang"]
    variants = [None] if kind == "boundary" else cfg["field"]["variant"]
    for v in variants:
        if v not in (None, "t", "x"):
            raise ConfigError(f"[field] variant must be t or x, got {v!r}")
    C_given = cfg["carleman"]["C"]
    C_prime = cfg["carleman"]["C_prime"]
    interior = kind == "interior"
    sign = cfg["carleman"]["angular_time_sign"]
    setups = {r: prepare(dom, prm, r, n_ang=n_ang and n_ang * r // res, interior=interior, workers=run.workers,
                         tmp_sign=sign)
              for r in (res, res2)}
    passed = True
    status = {}
    for v in variants:
        vtag = v or "-"
        if C_given is None:
            cal = calibrate(dom, prm, A, res, kind=kind, variant=v, setup=setups[res])
            C = cal.C
            run.add("calibration", vtag, "C", C)
            run.add("calibration", vtag, "C_fieldwise", cal.C_fieldwise)
            run.add("calibration", vtag, "bisection_steps", cal.iterations)
            source = f"calibrated at res={res} on {len(A)} fields (seed {cal_seed})"
        else:
            C = float(C_given)
            source = "given in config"
        run.add("calibration", vtag, "C_prime", C_prime)
        for r in (res, res2):
            reps = verify_suite(setups[r], B, C, kind=kind, variant=v, C_prime=C_prime)
            group = f"holdout res={r} variant={vtag}"
            for i, rep in enumerate(reps):
                for term, val in rep.terms().items():
                    run.add(group, i, term, val)
                run.add(group, i, "lhs_scaled", rep.lhs_scaled)
                run.add(group, i, "rhs_total", rep.rhs_total)
                run.add(group, i, "margin", rep.margin)
                run.add(group, i, "passed", rep.passed)
            ok = all(rep.passed for rep in reps)
            worst = min(rep.rhs_total / rep.lhs_scaled if rep.lhs_scaled > 0 else float("inf") for rep in reps)
            status[(v, r)] = ok
            run.sections[f"variant {vtag}, res {r}"] = {
                "C": C, "C source": source, "C_prime": C_prime, "holdout fields": len(reps),
                "all margins >= 0": ok, "smallest rhs/lhs ratio on holdout": worst,
                "log weight scale": setups[r].log_scale, "volume nodes": len(setups[r].volume),
                "surface samples": len(setups[r].surface),
            }
            passed = passed and ok
        stable = status[(v, res)] == status[(v, res2)]
        run.add("stability", vtag, "same_status_at_both_res", stable)
        passed = passed and stable
    title = "Boundary estimate" if kind == "boundary" else "Interior estimate"
    return run.finish(title, passed)


def cmd_weight_check(run: Run) -> int:
    cfg = run.cfg
    dom = build_domain(cfg)
    prm = build_params(cfg, dom)
    _echo_params(run, prm)
    problems = validate(prm, dom.sig)
    if problems:
        raise WeightError("inadmissible parameters: " + "; ".join(problems))
    n = cfg["grid"]["samples"]
    rng = np.random.default_rng(cfg.seed)
    t, x = _sample_exterior(dom, prm, n, rng)
    ratio = derivative_bound_ratio_batch(t, x, prm)
    rmax = float(ratio.max())
    run.add("derivative_bound", "", "samples", n)
    run.add("derivative_bound", "", "max_ratio", rmax)
    run.add("derivative_bound", "", "limit", prm.separation)
    ok_ratio = rmax <= prm.separation

    k = min(n, 200)
    fd_err = _fd_error(t[:k], x[:k], prm)
    run.add("gradient_fd", "", "points", k)
    run.add("gradient_fd", "", "max_rel_error", fd_err)
    ok_fd = fd_err <= 1e-6

    sweep = _cone_sweep(dom, prm)
    for fr, val in sweep:
        run.add("cone_scan", f"f/R^2={fr!r}", "logzeta_over_logf_over_2a", val)
    ok_cone = abs(sweep[-1][1] - 1.0) <= 0.01
    run.sections["weight"] = {"samples": n, "max derivative bound ratio": rmax, "ratio limit": prm.separation,
                              "max relative FD error of grad log zeta": fd_err,
                              "log zeta / (2a log f) at the smallest f": sweep[-1][1]}
    return run.finish("Weight checks", ok_ratio and ok_fd and ok_cone)


def _sample_exterior(dom: DomainModel, prm: CarlemanParams, n: int, rng):
    """Uniform samples of U n D_p by rejection from the bounding box."""
    from .domain import contains

    lo_x, hi_x = dom.spatial_bounds()
    R = r_plus(dom, prm.p)
    lo = np.concatenate([np.maximum(prm.p.t - R, -dom.T), np.maximum(lo_x, prm.p.x - R)])
    hi = np.concatenate([np.minimum(prm.p.t + R, dom.T), np.minimum(hi_x, prm.p.x + R)])
    m = dom.sig.m
    got_t, got_x, have = [], [], 0
    for _ in range(1000):
        y = rng.uniform(lo, hi, size=(4 * n, lo.size))
        t, x = y[:, :m], y[:, m:]
        keep = contains(dom, t, x) & (null_frame(t, x, prm.p).f > 0)
        got_t.append(t[keep])
        got_x.append(x[keep])
        have += int(keep.sum())
        if have >= n:
            break
    if have < n:
        raise WeightError("could not sample U n D_p")
    return np.concatenate(got_t)[:n], np.concatenate(got_x)[:n]


def _fd_error(t, x, prm: CarlemanParams, h_rel: float = 1e-3):
    """Max relative error of grad log zeta against fourth-order central differences.

    The step is a fixed fraction of the local length scale f / |grad f|.
    """
    g = grad_log_zeta_batch(t, x, prm)
    y = np.concatenate([t, x], axis=-1)
    m = t.shape[1]
    fr = null_frame(t, x, prm.p)
    h = h_rel * fr.f / (0.5 * np.hypot(fr.tau, fr.r))

    def lz(yy):
        return log_zeta_batch(yy[:, :m], yy[:, m:], prm)

    fd = np.empty_like(g)
    for j in range(y.shape[1]):
        e = np.zeros_like(y)
        e[:, j] = h
        fd[:, j] = (-lz(y + 2 * e) + 8 * lz(y + e) - 8 * lz(y - e) + lz(y - 2 * e)) / (12 * h)
    err = np.linalg.norm(fd - g, axis=-1) / np.linalg.norm(g, axis=-1)
    return float(err.max())


def _cone_sweep(dom: DomainModel, prm: CarlemanParams):
    """log zeta / (2a log f) along x(p) + r e1 at t = t(p) + tau as f -> 0."""
    R = prm.R
    r = 0.5 * R
    out = []
    for fr in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        f = fr * R * R
        tau = np.sqrt(r * r - 4.0 * f)
        t = (prm.p.t + np.eye(dom.sig.m)[0] * tau)[None]
        x = (prm.p.x + np.eye(dom.sig.n)[0] * r)[None]
        lz = float(log_zeta_batch(t, x, prm)[0])
        fv = float(null_frame(t, x, prm.p).f[0])
        out.append((fr, float(lz / (2 * prm.a * np.log(fv)))))
    return out


# -- absorption chain --

def cmd_absorption(run: Run) -> int:
    cfg = run.cfg
    dom = build_domain(cfg)
    prm, coeffs, M = _absorption_params(cfg, dom, run)
    _echo_params(run, prm)
    res, _ = _res(cfg)
    z = make_bump(dom)
    rep = verify_absorption(dom, prm, coeffs, z, res, M=M, n_ang=cfg["grid"]["n_ang"], workers=run.workers,
                            tmp_sign=cfg["carleman"]["angular_time_sign"])
    for k in ("I0", "I1", "lhs_zeroth_scaled", "lhs_first_mu", "M0", "M1", "a", "mu", "delta", "R_plus",
              "log_scale"):
        run.add("absorption", "", k, getattr(rep, k))
    run.add("absorption", "", "ratio_I0", rep.dominance_ratios[0])
    run.add("absorption", "", "ratio_I1", rep.dominance_ratios[1])
    run.sections["absorption"] = {"I0": rep.I0, "I1": rep.I1, "dominance ratio (I0)": rep.dominance_ratios[0],
                                  "dominance ratio (I1)": rep.dominance_ratios[1], "a": rep.a,
                                  "M0": rep.M0, "M1": rep.M1, "mu": rep.mu,
                                  "log weight scale": rep.log_scale, "both ratios >= 1": rep.passed}
    return run.finish("Absorption of lower-order terms", rep.passed)


def cmd_uniqueness(run: Run) -> int:
    cfg = run.cfg
    dom = build_domain(cfg)
    prm, coeffs, _ = _absorption_params(cfg, dom, run)
    _echo_params(run, prm)
    res, _ = _res(cfg)
    A, _, cal_seed, _ = _suites(cfg, dom)
    ks = cfg["field"]["damping"]
    family = [cone_damped_bump(dom, prm.p, k, prm.R) for k in ks]
    setup = prepare(dom, prm, res, n_ang=cfg["grid"]["n_ang"], workers=run.workers,
                    tmp_sign=cfg["carleman"]["angular_time_sign"])
    C = cfg["carleman"]["C"]
    if C is None:
        C = calibrate(dom, prm, A + family, res, setup=setup).C
    C_prime = cfg["carleman"]["C_prime"]
    run.add("calibration", "", "C", C)
    bounds, ok = [], True
    for k, z in zip(ks, family):
        ur = uniqueness_report(dom, prm, coeffs, z, res, C, C_prime=C_prime, setup=setup)
        tag = f"k={k!r}"
        for name in ("bound", "weighted_norm", "residual_term", "boundary_term", "valid"):
            run.add("uniqueness", tag, name, getattr(ur, name))
        run.add("uniqueness", tag, "consistent", ur.consistent)
        bounds.append(ur.bound)
        ok = ok and ur.valid and ur.consistent
    decreasing = all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))
    run.add("uniqueness", "", "bound_nonincreasing_in_k", decreasing)
    run.sections["uniqueness"] = {"C": C, "damping values": ", ".join(repr(k) for k in ks),
                                  "bounds": ", ".join(repr(b) for b in bounds),
                                  "every norm below its bound": ok, "bounds nonincreasing": decreasing,
                                  "log weight scale": setup.log_scale}
    return run.finish("Uniqueness bound", ok and decreasing)


HANDLERS = {
    "regions": lambda run: cmd_regions(run, figures=False),
    "figures": lambda run: cmd_regions(run, figures=True),
    "verify-boundary": lambda run: cmd_verify(run, "boundary"),
    "verify-interior": lambda run: cmd_verify(run, "interior"),
    "weight-check": cmd_weight_check,
    "absorption": cmd_absorption,
    "uniqueness-demo": cmd_uniqueness,
}

MODEL_ERRORS = (DomainError, WeightError, RegionError, VerificationError, QuadratureError, DimensionError,
                DegenerateFrameError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _parser():
    ap = _Parser(prog="ultracarl", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", help="output directory (default: [run] out, else ./ultracarl-out/<command>)")
    ap.add_argument("--seed", type=int, help="overrides [run] seed")
    ap.add_argument("--workers", type=int, help="threads for quadrature (outputs do not depend on it)")
    return ap


def run(command: str, config: str, out: Optional[str] = None, seed: Optional[int] = None,
        workers: Optional[int] = None) -> int:
    """Run one command; returns the exit status."""
    try:
        cfg = load(config)
        if cfg.command is not None and cfg.command != command:
            raise ConfigError(f"[run] command is {cfg.command!r} but {command!r} was requested")
        if seed is not None:
            if not 0 <= seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.sections["run"]["seed"] = seed
        require(cfg, command)
        out = out or cfg["run"]["out"] or os.path.join("ultracarl-out", command)
        workers = workers if workers is not None else cfg["run"]["workers"]
        os.makedirs(out, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return HANDLERS[command](Run(cfg, command, out, workers))
    except CalibrationError as exc:
        print(f"ultracarl: calibration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, OSError) as exc:
        print(f"ultracarl: configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except MODEL_ERRORS as exc:
        print(f"ultracarl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.seed, args.workers)


if __name__ == "__main__":
    sys.exit(main())
