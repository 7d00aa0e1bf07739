"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Command-level criteria run the shipped configs through the CLI once per
worker count (session fixture) and read the reports back.
"""

import json
import os
from fractions import Fraction

import numpy as np
import pytest

from conftest import fd_gradient
from ultracarl.cli import run
from ultracarl.domain import Ball, Box, DomainModel, contains, r_plus
from ultracarl.fields import PolynomialField, SineField, box_op
from ultracarl.geometry import ReferencePoint, Signature, SpaceTimePoint, null_frame, split_gradient_batch
from ultracarl.regions import convergence_scan
from ultracarl.report import read_csv
from ultracarl.weight import (CarlemanParams, derivative_bound_ratio_batch, eval_zeta, grad_log_zeta_batch,
                              log_zeta_batch, validate)

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)
CONFIGS = os.path.join(ROOT, "configs")
GOLDEN = os.path.join(HERE, "data", "golden")

COMMANDS = {
    "verify_boundary": "verify-boundary",
    "verify_interior": "verify-interior",
    "regions_moving": "regions",
    "absorption": "absorption",
    "uniqueness_demo": "uniqueness-demo",
    "weight_check": "weight-check",
    "verify_boundary_forced_failure": "verify-boundary",
}
FIGURES = ["fig1_p_inside", "fig1_p_outside_trace", "fig1_p_outside_subset",
           "fig2_moving_p_inside", "fig2_moving_p_outside_trace", "fig2_moving_p_outside_subset"]


def verdict(capsys, number, name, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    """Exit code and output directory of every shipped config, with 1 and 3 workers."""
    base = tmp_path_factory.mktemp("acceptance")
    out = {}
    for workers in (1, 3):
        for name, cmd in COMMANDS.items():
            d = base / f"{name}-w{workers}"
            out[(name, workers)] = (run(cmd, os.path.join(CONFIGS, f"{name}.ini"), out=str(d), workers=workers), d)
        for name in FIGURES:
            d = base / f"{name}-w{workers}"
            out[(name, workers)] = (run("figures", os.path.join(CONFIGS, f"{name}.ini"), out=str(d),
                                        workers=workers), d)
    return out


def report_rows(d):
    _, _, rows = read_csv(os.path.join(d, "report.csv"))
    return rows


def terms(rows, group_prefix, term):
    return [r[3] for r in rows if r[0].startswith(group_prefix) and r[2] == term]


# 1
def test_criterion_01_geometry_identities(capsys):
    rng = np.random.default_rng(101)
    worst, violations, n_ext = 0.0, 0, 0
    for m, n in ((1, 2), (2, 3), (1, 1), (2, 1)):
        N = 2500
        p = ReferencePoint(rng.uniform(-1, 1, m), rng.uniform(-1, 1, n))
        t = rng.uniform(-3, 3, (N, m))
        x = rng.uniform(-3, 3, (N, n))
        fr = null_frame(t, x, p)
        neg_uv = -(fr.u * fr.v)
        for i in range(N):
            # exact quarter difference of squares of the double inputs
            exact = (sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(x[i], p.x))
                     - sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(t[i], p.t))) / 4
            ulp = Fraction(float(np.spacing(abs(float(exact)))))
            if exact != 0:
                worst = max(worst, float(abs(Fraction(float(neg_uv[i])) - exact) / ulp),
                            float(abs(Fraction(float(fr.f[i])) - exact) / ulp))
        ext = fr.f > 0
        n_ext += int(ext.sum())
        u, v, r, f = fr.u[ext], fr.v[ext], fr.r[ext], fr.f[ext]
        violations += int(np.sum(~((0 < -u) & (-u < r) & (0 < v) & (v < r) & (0 < f) & (f < r * r))))
    ok = worst <= 4 and violations == 0 and n_ext > 1000
    verdict(capsys, 1, "geometry identities", ok,
            f"10^4 points, max |-uv - (r^2-tau^2)/4| = {worst:.2f} ulp; {violations} inequality violations "
            f"on {n_ext} exterior points")


# 2
def test_criterion_02_gradient_decomposition(capsys):
    rng = np.random.default_rng(202)
    worst = 0.0
    for m, n in ((1, 2), (2, 3)):
        N = 500
        p = ReferencePoint(rng.uniform(-1, 1, m), rng.uniform(-1, 1, n))
        t = p.t + rng.normal(size=(N, m))
        x = p.x + rng.normal(size=(N, n))
        gt = rng.normal(size=(N, m)) * 10 ** rng.uniform(-3, 3, (N, 1))
        gx = rng.normal(size=(N, n)) * 10 ** rng.uniform(-3, 3, (N, 1))
        s = split_gradient_batch(gt, gx, t, x, p)
        nx = np.sum(gx * gx, axis=-1)
        nt = np.sum(gt * gt, axis=-1)
        worst = max(worst, float(np.max(np.abs(s.d_r ** 2 + s.q_sph - nx) / nx)),
                    float(np.max(np.abs(s.d_tau ** 2 + s.q_tmp - nt) / nt)))
    verdict(capsys, 2, "gradient decomposition", worst <= 1e-12,
            f"10^3 pairs, max relative defect {worst:.2e} (limit 1e-12)")


# 3
def test_criterion_03_weight_golden_and_cone(capsys):
    with open(os.path.join(HERE, "data", "golden_zeta.json")) as fh:
        points = json.load(fh)["points"]
    errs = []
    for q in points:
        prm = CarlemanParams(p=ReferencePoint(q["p_t"], q["p_x"]), a=q["a"], b=q["b"], eps=q["eps"], R=q["R"])
        w = eval_zeta(SpaceTimePoint(q["t"], q["x"]), prm, Signature(q["m"], q["n"]))
        # relative error of zeta through the log, so underflowed values still count
        errs.append(abs(np.expm1(w.log_zeta - float(q["log_zeta"]))))
        z = float(q["zeta"])
        if z > np.finfo(float).tiny:
            errs.append(abs(w.zeta - z) / z)
    golden = max(errs)
    prm = CarlemanParams.from_delta(ReferencePoint([0.0], [0.0, 0.0]), 9.0, 0.1, 1.0)
    ratios = []
    for frac in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        f = frac * prm.R ** 2
        t, x = np.array([[np.sqrt(0.25 - 4 * f)]]), np.array([[0.5, 0.0]])
        ratios.append(float(log_zeta_batch(t, x, prm)[0] / np.log(null_frame(t, x, prm.p).f[0])) / (2 * prm.a))
    ok = len(points) == 100 and golden <= 1e-12 and abs(ratios[-1] - 1) <= 0.01
    verdict(capsys, 3, "weight correctness", ok,
            f"100 golden points, max rel error {golden:.2e}; log zeta/(2a log f) at f=1e-6 R^2: {ratios[-1]:.5f}")


def _exterior_samples(dom, p, n, rng):
    lo_x, hi_x = dom.spatial_bounds()
    lo = np.concatenate([np.full(dom.sig.m, -dom.T), lo_x])
    hi = np.concatenate([np.full(dom.sig.m, dom.T), hi_x])
    ts, xs, have = [], [], 0
    while have < n:
        y = rng.uniform(lo, hi, size=(4 * n, lo.size))
        t, x = y[:, :dom.sig.m], y[:, dom.sig.m:]
        keep = contains(dom, t, x) & (null_frame(t, x, p).f > 0)
        ts.append(t[keep])
        xs.append(x[keep])
        have += int(keep.sum())
    return np.concatenate(ts)[:n], np.concatenate(xs)[:n]


# 4
def test_criterion_04_derivative_bound(capsys):
    s12, s21 = Signature(1, 2), Signature(2, 1)
    cases = [
        (DomainModel(s12, 2.0, Ball([0.0, 0.0], 1.0)), ReferencePoint([0.0], [0.0, 0.0])),
        (DomainModel(s12, 4.0, Ball([0.0, 0.0], 1.0, radius_profile=[1.0, 0.1])), ReferencePoint([0.0], [2.0, 0.0])),
        (DomainModel(s21, 3.0, Box([-1.0], [1.0])), ReferencePoint([0.2, -0.1], [0.0])),
    ]
    rng = np.random.default_rng(404)
    worst_ratio, worst_fd, count = 0.0, 0.0, 0
    for dom, p in cases:
        R = r_plus(dom, p)
        for a, delta in ((9.0, 0.1), (30.0, 0.05), (200.0, 0.02)):
            prm = CarlemanParams.from_delta(p, a, delta, R)
            assert not validate(prm, dom.sig)
            t, x = _exterior_samples(dom, p, 1112, rng)
            count += len(t)
            worst_ratio = max(worst_ratio, float(derivative_bound_ratio_batch(t, x, prm).max()))
            m = dom.sig.m
            for i in range(0, len(t), 20):
                y = np.concatenate([t[i], x[i]])[None]
                fr = null_frame(t[i:i + 1], x[i:i + 1], p)
                h = 1e-3 * float(fr.f[0]) / (0.5 * float(np.hypot(fr.tau[0], fr.r[0])))
                fd = fd_gradient(lambda yy: log_zeta_batch(yy[:, :m], yy[:, m:], prm), y, h)
                g = grad_log_zeta_batch(t[i:i + 1], x[i:i + 1], prm)
                worst_fd = max(worst_fd, float(np.linalg.norm(fd - g) / np.linalg.norm(g)))
    ok = worst_ratio <= 10 and worst_fd <= 1e-6 and count >= 10_000
    verdict(capsys, 4, "derivative bound", ok,
            f"{count} samples over 3 domains x 3 parameter sets: max ratio {worst_ratio:.3f} (limit 10); "
            f"FD relative error {worst_fd:.2e} (limit 1e-6)")


def _verify_summary(rows, variants):
    out = []
    ok = True
    for v in variants:
        C = float(terms(rows, "calibration", "C")[variants.index(v)])
        for res in (32, 64):
            passed = terms(rows, f"holdout res={res} variant={v}", "passed")
            margins = [float(m) for m in terms(rows, f"holdout res={res} variant={v}", "margin")]
            ok = ok and len(passed) == 20 and all(p == "true" for p in passed) and min(margins) >= 0
            out.append(f"[{v} res={res}] C={C:.4g}, min margin {min(margins):.3g}")
    stable = terms(rows, "stability", "same_status_at_both_res")
    ok = ok and stable and all(s == "true" for s in stable)
    return ok, "; ".join(out)


def _suite_seeds(d):
    text = open(os.path.join(d, "summary.txt")).read()
    echo = json.loads(text[text.index("{"):])
    return echo["derived"]["calibration_seed"], echo["derived"]["holdout_seed"]


def _span_ranks(name):
    """Ranks of the zeroth-order Gram matrix for the calibration suite and for both suites.

    A larger joint rank means the holdout is not inside the span the
    constant was calibrated on.
    """
    from ultracarl import cli
    from ultracarl.config import load
    from ultracarl.verify import assemble, prepare

    cfg = load(os.path.join(CONFIGS, f"{name}.ini"))
    dom = cli.build_domain(cfg)
    prm = cli.build_params(cfg, dom)
    A, B, _, _ = cli._suites(cfg, dom)
    g = assemble(prepare(dom, prm, 16), A + B)["zeroth"]
    tol = 1e-12 * np.abs(g).max()
    k = len(A)
    return np.linalg.matrix_rank(g[:k, :k], tol=tol), np.linalg.matrix_rank(g, tol=tol)


# 5
def test_criterion_05_boundary_estimate(runs, capsys):
    code, d = runs[("verify_boundary", 1)]
    ok, detail = _verify_summary(report_rows(d), ["-"])
    cal, hold = _suite_seeds(d)
    forced, _ = runs[("verify_boundary_forced_failure", 1)]
    rank_a, rank_ab = _span_ranks("verify_boundary")
    ok = ok and code == 0 and cal != hold and forced == 2 and rank_ab > rank_a
    verdict(capsys, 5, "boundary Carleman estimate", ok,
            f"exit {code}; suite seeds {cal}/{hold}, Gram rank {rank_a} -> {rank_ab} with holdout; {detail}; "
            f"forced C=1e6 exits {forced}")


# 6
def test_criterion_06_interior_estimate(runs, capsys):
    code, d = runs[("verify_interior", 1)]
    rows = report_rows(d)
    a = float(terms(rows, "params", "a")[0])
    R = float(terms(rows, "params", "R")[0])
    ok, detail = _verify_summary(rows, ["t", "x"])
    ok = ok and code == 0 and a >= 10 * R
    verdict(capsys, 6, "interior Carleman estimate", ok, f"exit {code}; a={a:g} >= 10 R={10 * R:g}; {detail}")


# 7
def test_criterion_07_region_convergence(runs, capsys):
    code, d = runs[("regions_moving", 1)]
    rows = report_rows(d)
    meas = [float(v) for v in terms(rows, "convergence", "measure")]
    slope = float(terms(rows, "convergence", "slope")[0])
    monotone = terms(rows, "convergence", "monotone")[0] == "true"
    ok_off = code == 0 and len(meas) == 4 and monotone and all(np.diff(meas) <= 0) and slope >= 1.8
    centre = []
    for dom in (DomainModel(Signature(1, 2), 2.0, Ball([0.0, 0.0], 1.0)),
                DomainModel(Signature(1, 2), 4.0, Ball([0.0, 0.0], 1.0, radius_profile=[1.0, 0.1]))):
        scan = convergence_scan(dom, ReferencePoint([0.0], [0.0, 0.0]), [0.2, 0.1, 0.05, 0.025], res=64)
        centre += [r.measure for r in scan.rows]
    ok = ok_off and all(v == 0.0 for v in centre)
    verdict(capsys, 7, "region convergence", ok,
            f"moving disc, p off centre: measures {', '.join(f'{v:.3e}' for v in meas)}, slope {slope:.4f} "
            f"(limit 1.8), monotone {monotone}; centre measures all zero: {all(v == 0.0 for v in centre)}")


# 8
def test_criterion_08_absorption(runs, capsys):
    code, d = runs[("absorption", 1)]
    rows = report_rows(d)
    r0 = float(terms(rows, "absorption", "ratio_I0")[0])
    r1 = float(terms(rows, "absorption", "ratio_I1")[0])
    a = float(terms(rows, "params", "a")[0])
    ok = code == 0 and r0 >= 1 and r1 >= 1
    verdict(capsys, 8, "absorption chain", ok, f"exit {code}; a={a:.6g}; ratios I0 {r0:.3e}, I1 {r1:.3e}")


def test_shipped_configs_exit_zero(runs):
    bad = {k: code for k, (code, _) in runs.items()
           if code != 0 and k[0] != "verify_boundary_forced_failure"}
    assert not bad
    rows = report_rows(runs[("uniqueness_demo", 1)][1])
    assert all(v == "true" for v in terms(rows, "uniqueness", "valid"))
    assert all(v == "true" for v in terms(rows, "uniqueness", "consistent"))
    assert terms(rows, "uniqueness", "bound_nonincreasing_in_k") == ["true"]


# 9
def test_criterion_09_operator_sanity(capsys):
    rng = np.random.default_rng(909)
    worst = 0.0
    for i in range(50):
        m, n = (1, 2) if i % 2 else (2, 3)
        sig = Signature(m, n)
        kx = rng.normal(size=n) * rng.uniform(0.1, 20)
        kt = rng.normal(size=m)
        kt *= np.linalg.norm(kx) / np.linalg.norm(kt)  # null: |k_t| = |k_x|
        z = SineField(sig, kt, kx, phase=rng.uniform(0, 2 * np.pi))
        k2 = float(np.dot(kx, kx))
        for _ in range(5):
            q = SpaceTimePoint(rng.uniform(-2, 2, m), rng.uniform(-2, 2, n))
            worst = max(worst, abs(box_op(z, q, sig)) / (1 + k2))
    exact = True
    for m, n in ((1, 1), (1, 3), (2, 2)):
        sig = Signature(m, n)
        eye = np.eye(m + n, dtype=int) * 2
        x2 = PolynomialField(sig, list(eye[m:]), [1.0] * n)
        t2 = PolynomialField(sig, list(eye[:m]), [1.0] * m)
        q = SpaceTimePoint(rng.uniform(-2, 2, m), rng.uniform(-2, 2, n))
        exact = exact and box_op(x2, q, sig) == 2 * n and box_op(t2, q, sig) == -2 * m
    ok = worst <= 1e-10 and exact
    verdict(capsys, 9, "operator sanity", ok,
            f"50 null plane waves: max |box z|/(1+|k|^2) = {worst:.2e}; box|x|^2 = 2n, box|t|^2 = -2m exact: {exact}")


def _flags(d):
    _, header, rows = read_csv(os.path.join(d, "regions.csv"))
    col = {h: i for i, h in enumerate(header)}
    b = [r for r in rows if r[col["where"]] == "boundary"]
    in_d = np.array([r[col["in_D_p"]] == "true" for r in b])
    gam = np.array([r[col["Gamma_p"]] == "true" for r in b])
    return in_d, gam


# 10
def test_criterion_10_figures(runs, capsys):
    details, ok = [], True
    for name in FIGURES:
        code, d = runs[(name, 1)]
        got = open(os.path.join(d, "regions.csv"), "rb").read()
        want = open(os.path.join(GOLDEN, f"{name}.csv"), "rb").read()
        svgs = [f for f in os.listdir(d) if f.startswith("slice_") and f.endswith(".svg")]
        in_d, gam = _flags(d)
        if name.endswith("inside") or name.endswith("trace"):
            shape_ok = bool(in_d.any()) and np.array_equal(in_d, gam)
        else:
            shape_ok = bool(gam.any()) and not np.any(gam & ~in_d) and bool(np.any(in_d & ~gam))
        this = code == 0 and got == want and bool(svgs) and shape_ok
        ok = ok and this
        details.append(f"{name}: {'match' if got == want else 'DIFFERS'}, {len(svgs)} slices, "
                       f"Gamma_p {'= trace' if np.array_equal(in_d, gam) else 'proper subset'}")
    verdict(capsys, 10, "figures reproduction", ok, "; ".join(details))


# 11
def test_criterion_11_determinism(runs, capsys):
    compared, differing = 0, []
    for name in list(COMMANDS) + FIGURES:
        c1, d1 = runs[(name, 1)]
        c3, d3 = runs[(name, 3)]
        if c1 != c3:
            differing.append(f"{name} exit codes")
        files = sorted(f for f in os.listdir(d1) if f.endswith((".csv", ".txt", ".svg")))
        for f in files:
            compared += 1
            if open(os.path.join(d1, f), "rb").read() != open(os.path.join(d3, f), "rb").read():
                differing.append(f"{name}/{f}")
    ok = not differing and compared > 0
    verdict(capsys, 11, "determinism", ok,
            f"{compared} output files compared between 1 and 3 workers; differing: {differing or 'none'}")
