"""Regenerate tests/data/golden_zeta.json with a 50-digit oracle.

The oracle uses the product form of the weight,
    zeta = { f / ((1 + eps u)(1 - eps v)) * exp[2b sqrt(f) / sqrt((1 + eps u)(1 - eps v))] }^(2a),
which is independent of the log1p form used by the package. Inputs are
stored as exact double reprs so the oracle sees the same numbers.

    python3 tools/make_golden_zeta.py [--out PATH] [--count N]
"""

import argparse
import json
import os

import mpmath as mp
import numpy as np

mp.mp.dps = 50

SIGNATURES = [(1, 1), (1, 2), (2, 1), (2, 3), (1, 3)]
PARAMS = [  # (a, delta, R)
    (9.0, 0.1, 1.0),
    (16.0, 0.05, 2.0),
    (25.0, 0.2, 3.0),
]


def oracle(t, x, pt, px, a, b, eps):
    tau = mp.sqrt(sum((mp.mpf(ti) - mp.mpf(pi)) ** 2 for ti, pi in zip(t, pt)))
    r = mp.sqrt(sum((mp.mpf(xi) - mp.mpf(pi)) ** 2 for xi, pi in zip(x, px)))
    u = (tau - r) / 2
    v = (tau + r) / 2
    f = -u * v
    a, b, eps = mp.mpf(a), mp.mpf(b), mp.mpf(eps)
    den = (1 + eps * u) * (1 - eps * v)
    base = f / den * mp.exp(2 * b * mp.sqrt(f) / mp.sqrt(den))
    log_zeta = 2 * a * mp.log(base)
    return log_zeta, mp.exp(log_zeta)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    here = os.path.dirname(os.path.abspath(__file__))
    ap.add_argument("--out", default=os.path.join(here, "..", "tests", "data", "golden_zeta.json"))
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=20240601)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    points = []
    while len(points) < args.count:
        m, n = SIGNATURES[len(points) % len(SIGNATURES)]
        a, delta, R = PARAMS[len(points) % len(PARAMS)]
        b, eps = delta / R, delta ** 2 / R
        pt, px = rng.uniform(-0.5, 0.5, m), rng.uniform(-0.5, 0.5, n)
        # f/r^2 over six decades, so some points sit close to the cone
        r = rng.uniform(0.05, 0.95) * R
        frac = 10.0 ** rng.uniform(-6, 0)
        tau = r * np.sqrt(1.0 - frac)
        dt, dx = rng.standard_normal(m), rng.standard_normal(n)
        t = pt + tau * dt / np.linalg.norm(dt)
        x = px + r * dx / np.linalg.norm(dx)
        log_zeta, zeta = oracle(t, x, pt, px, a, b, eps)
        if not mp.isfinite(log_zeta) or zeta == 0:
            continue
        points.append({
            "m": m, "n": n, "a": a, "b": b, "eps": eps, "R": R,
            "p_t": [float(v) for v in pt], "p_x": [float(v) for v in px],
            "t": [float(v) for v in t], "x": [float(v) for v in x],
            "log_zeta": mp.nstr(log_zeta, 40, strip_zeros=False),
            "zeta": mp.nstr(zeta, 40, strip_zeros=False),
        })
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"digits": mp.mp.dps, "seed": args.seed, "points": points}, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
