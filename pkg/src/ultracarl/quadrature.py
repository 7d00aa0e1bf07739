"""Deterministic midpoint quadrature over U n D_p and over the boundary trace.

Sums are pairwise trees in node order, and node evaluation is split into
fixed-size chunks, so results do not depend on how many workers run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .domain import DomainModel, BoundarySamples, check_T, contains, sample_boundary
from .geometry import SpaceTimePoint, null_frame

NODE_CAP = 10_000_000
CHUNK = 1 << 14


class QuadratureError(ValueError):
    pass


def pairwise_sum(values):
    """Pairwise (tree) sum over the leading axis.

    Odd levels are padded with an exact zero, so the association order
    depends only on the length.
    """
    a = np.asarray(values, dtype=float)
    if a.ndim == 0:
        return float(a)
    if a.shape[0] == 0:
        return 0.0 if a.ndim == 1 else np.zeros(a.shape[1:])
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros((1,) + a.shape[1:])])
        a = a[0::2] + a[1::2]
    return float(a[0]) if a.ndim == 1 else a[0]


def chunk_slices(n: int, chunk: int = CHUNK) -> List[slice]:
    return [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]


def map_chunks(fn: Callable[[slice], object], n: int, workers: Optional[int] = None,
               chunk: int = CHUNK) -> list:
    """Apply ``fn`` to fixed chunks of ``range(n)``; results come back in chunk order."""
    slices = chunk_slices(n, chunk)
    if workers is None or workers <= 1 or len(slices) <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, slices))


@dataclass(frozen=True, eq=False)
class VolumeRule:
    """Midpoint nodes of U n D_p.

    ``slice_index`` maps each node to its temporal node in ``t_nodes``;
    surface rules built from this rule share those slices exactly.
    """

    t: np.ndarray
    x: np.ndarray
    weight: np.ndarray
    slice_index: np.ndarray
    t_nodes: np.ndarray
    t_weights: np.ndarray
    resolution: tuple
    excluded: int
    bbox_lo: np.ndarray
    bbox_hi: np.ndarray
    p: SpaceTimePoint
    R_plus: float

    def __len__(self):
        return self.weight.size

    @property
    def nodes(self):
        return [(SpaceTimePoint(self.t[i], self.x[i]), float(self.weight[i])) for i in range(len(self))]

    @property
    def volume(self) -> float:
        return pairwise_sum(self.weight)

    @property
    def bbox_volume(self) -> float:
        return float(np.prod(self.bbox_hi - self.bbox_lo))

    def subset(self, mask) -> "VolumeRule":
        mask = np.asarray(mask, dtype=bool)
        return VolumeRule(self.t[mask], self.x[mask], self.weight[mask], self.slice_index[mask],
                          self.t_nodes, self.t_weights, self.resolution,
                          self.excluded + int((~mask).sum()), self.bbox_lo, self.bbox_hi, self.p, self.R_plus)


def _staggered_axis(lo, hi, n, anchor):
    """Midpoints on [lo, hi]; if a node lands on ``anchor``, shift by half a cell."""
    h = (hi - lo) / n
    nodes = lo + (np.arange(n) + 0.5) * h
    if np.any(np.abs(nodes - anchor) <= 1e-9 * h):
        lo, hi, n = lo - 0.5 * h, hi + 0.5 * h, n + 1
        nodes = lo + (np.arange(n) + 0.5) * h
    return nodes, h, lo, hi


def _resolution(res, d):
    if np.isscalar(res):
        return (int(res),) * d
    res = tuple(int(r) for r in res)
    if len(res) != d:
        raise QuadratureError(f"resolution needs {d} entries (m+n), got {len(res)}")
    return res


def build_volume_rule(dom: DomainModel, p: SpaceTimePoint, res, cap: int = NODE_CAP) -> VolumeRule:
    """Staggered midpoint tensor grid on the bounding box of U n D_p.

    Cells are kept iff their centre lies in U and has f_p > 0. No node sits
    on tau_p = 0 or r_p = 0.
    """
    sig = dom.sig
    R = check_T(dom, p)
    res = _resolution(res, sig.dim)
    if min(res) < 1:
        raise QuadratureError(f"resolution must be positive, got {res}")
    total = int(np.prod([r + 1 for r in res], dtype=np.int64))
    if total > cap:
        raise QuadratureError(
            f"grid of {total} cells exceeds the node cap {cap}; lower [grid] res or raise [grid] cap")
    xlo, xhi = dom.spatial_bounds()
    lo = np.concatenate([np.maximum(p.t - R, -dom.T), np.maximum(xlo, p.x - R)])
    hi = np.concatenate([np.minimum(p.t + R, dom.T), np.minimum(xhi, p.x + R)])
    anchor = p.coords
    axes, hs, blo, bhi = [], [], [], []
    for k in range(sig.dim):
        nodes, h, a, b = _staggered_axis(lo[k], hi[k], res[k], anchor[k])
        axes.append(nodes)
        hs.append(h)
        blo.append(a)
        bhi.append(b)
    m = sig.m
    tg = np.meshgrid(*axes[:m], indexing="ij")
    t_nodes = np.stack([g.reshape(-1) for g in tg], axis=-1)
    xg = np.meshgrid(*axes[m:], indexing="ij")
    x_grid = np.stack([g.reshape(-1) for g in xg], axis=-1)
    cell = float(np.prod(hs))
    ts, xs, sl = [], [], []
    considered = 0
    for k, tk in enumerate(t_nodes):
        tt = np.broadcast_to(tk, (x_grid.shape[0], m))
        keep = contains(dom, tt, x_grid) & (null_frame(tt, x_grid, p).f > 0)
        considered += x_grid.shape[0]
        idx = np.flatnonzero(keep)
        if idx.size:
            ts.append(tt[idx])
            xs.append(x_grid[idx])
            sl.append(np.full(idx.size, k))
    if not ts:
        raise QuadratureError("empty volume rule: no cell centre lies in U n D_p")
    t = np.concatenate(ts)
    x = np.concatenate(xs)
    slice_index = np.concatenate(sl)
    h_t = float(np.prod(hs[:m]))
    return VolumeRule(
        t=t, x=x, weight=np.full(t.shape[0], cell), slice_index=slice_index,
        t_nodes=t_nodes, t_weights=np.full(t_nodes.shape[0], h_t),
        resolution=tuple(len(a) for a in axes), excluded=considered - t.shape[0],
        bbox_lo=np.array(blo), bbox_hi=np.array(bhi), p=p, R_plus=R,
    )


@dataclass(frozen=True, eq=False)
class SurfaceRule:
    """Boundary samples restricted to f_p > 0."""

    samples: BoundarySamples
    n_ang: int

    def __len__(self):
        return len(self.samples)

    @property
    def area(self) -> float:
        return self.samples.area


def build_surface_rule(dom: DomainModel, p: SpaceTimePoint, volume: VolumeRule, n_ang: int) -> SurfaceRule:
    """Samples of dU n D_p on the temporal slices of ``volume``."""
    s = sample_boundary(dom, (volume.t_nodes.shape[0], n_ang), volume.t_nodes, volume.t_weights)
    keep = null_frame(s.t, s.x, p).f > 0
    return SurfaceRule(s.subset(keep), int(n_ang))


def _values(rule, integrand):
    if callable(integrand):
        vals = integrand(rule.t, rule.x) if isinstance(rule, VolumeRule) else integrand(rule.samples)
    else:
        vals = integrand
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (len(rule),):
        raise QuadratureError(f"integrand has shape {vals.shape}, rule has {len(rule)} nodes")
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        tt, xx = (rule.t, rule.x) if isinstance(rule, VolumeRule) else (rule.samples.t, rule.samples.x)
        raise QuadratureError(
            f"non-finite integrand ({vals[i]}) at node {i}: t={tt[i].tolist()}, x={xx[i].tolist()}")
    return vals


def integrate(rule, integrand) -> float:
    """Pairwise sum of weight * integrand over a volume or surface rule.

    ``integrand`` is an array over nodes or a callable: ``(t, x) -> values``
    for volume rules, ``samples -> values`` for surface rules.
    """
    vals = _values(rule, integrand)
    w = rule.weight if isinstance(rule, VolumeRule) else rule.samples.weight
    return pairwise_sum(w * vals)
