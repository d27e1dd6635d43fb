"""Piecewise-linear concave performance/entropy fronts.

A front is the upper boundary ``p = F(h)`` of a downward-closed convex set of
achievable ``(p, h)`` points. Vertices are stored by decreasing entropy and
increasing performance; vertex 0 is the max-entropy end, the last vertex the
max-performance end. Left of the last vertex the front is flat.

Edge ``k`` joins vertices ``k`` and ``k + 1``; its rationality is the weight
``lam`` for which ``h + lam * p`` is constant along the edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

H_TOL = 1e-13
P_TOL = 1e-15


@dataclass(eq=False)
class FrontTable:
    h: np.ndarray
    p: np.ndarray
    lam: np.ndarray
    node: int = -1
    kappa: float = 0.0
    # ego nodes: one sampled rationality policy per vertex
    sigma: Optional[list] = None
    branch_h: Optional[list] = None
    value: Optional[np.ndarray] = None
    # Minkowski sums: which part advanced along each edge
    parts: Optional[list] = None
    weights: Optional[np.ndarray] = None
    steps: Optional[np.ndarray] = None
    gaps: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.h)

    @property
    def h_max(self) -> float:
        return float(self.h[0])

    @property
    def h_min(self) -> float:
        return float(self.h[-1])

    @property
    def p_max(self) -> float:
        return float(self.p[-1])

    @property
    def edge_lams(self) -> np.ndarray:
        try:
            return self._edge_lams
        except AttributeError:
            dh = self.h[:-1] - self.h[1:]
            dp = self.p[1:] - self.p[:-1]
            with np.errstate(divide="ignore", invalid="ignore"):
                lams = np.where(dp > 0, dh / np.where(dp > 0, dp, 1.0), np.inf)
            self._edge_lams = np.maximum.accumulate(lams) if len(lams) else lams
            return self._edge_lams

    def argmax(self, lam: float) -> int:
        """Vertex maximizing ``h + lam * p`` (the higher-entropy one on ties)."""
        return int(np.searchsorted(self.edge_lams, lam, side="left"))

    def support(self, lam: float) -> float:
        k = self.argmax(lam)
        return float(self.h[k] + lam * self.p[k])

    def __call__(self, h: float) -> float:
        """Best performance at entropy ``h``; ``-inf`` beyond the max entropy."""
        if h > self.h[0] + H_TOL:
            return -np.inf
        if h <= self.h[-1]:
            return float(self.p[-1])
        return float(np.interp(h, self.h[::-1], self.p[::-1]))

    def locate(self, h: float) -> tuple[int, float]:
        """Segment ``k`` and fraction ``t`` with ``h = (1-t) h[k] + t h[k+1]``."""
        n = len(self.h)
        if n == 1 or h >= self.h[0]:
            return 0, 0.0
        if h <= self.h[-1]:
            return n - 1, 0.0
        k = int(np.searchsorted(-self.h, -h, side="right")) - 1
        k = min(max(k, 0), n - 2)
        t = (self.h[k] - h) / (self.h[k] - self.h[k + 1])
        return k, float(min(max(t, 0.0), 1.0))

    def split(self, h: float) -> list[float]:
        """Entropy owed by each part of a Minkowski sum to realize ``h`` optimally."""
        if self.parts is None:
            return [min(h, self.h_max)]
        k, t = self.locate(h)
        counts = np.bincount(self.steps[:k], minlength=len(self.parts)) if k else np.zeros(len(self.parts), int)
        out = []
        moving = int(self.steps[k]) if (t > 0 and k < len(self.steps)) else -1
        for i, part in enumerate(self.parts):
            j = int(counts[i])
            hi = float(part.h[j])
            if i == moving:
                hi = (1 - t) * hi + t * float(part.h[j + 1])
            out.append(hi)
        return out


def point_front(h: float, p: float, lam: float = 0.0) -> FrontTable:
    return FrontTable(np.array([float(h)]), np.array([float(p)]), np.array([lam]))


def clean(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Indices of a strictly monotone concave chain through ``(h, p)``.

    Input is ordered by decreasing ``h``; dominated and collinear vertices
    are dropped. The first vertex always survives.
    """
    keep: list[int] = []
    for i in range(len(h)):
        if keep:
            j = keep[-1]
            if p[i] <= p[j] + P_TOL:
                continue
            if h[i] >= h[j] - H_TOL:
                # same entropy, better performance: the earlier vertex is dominated
                keep.pop()
                while keep and p[keep[-1]] >= p[i] - P_TOL:
                    keep.pop()
                keep.append(i)
                continue
        while len(keep) >= 2:
            a, b = keep[-2], keep[-1]
            # drop b if it lies on or below the chord a -> i
            cross = (h[b] - h[a]) * (p[i] - p[a]) - (p[b] - p[a]) * (h[i] - h[a])
            scale = abs(h[i] - h[a]) * abs(p[i] - p[a]) + 1e-300
            if cross <= 1e-12 * scale:
                keep.pop()
            else:
                break
        keep.append(i)
    return np.asarray(keep, dtype=np.int64)


def _vertex_lams(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    dh = h[:-1] - h[1:]
    dp = p[1:] - p[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(dp > 0, dh / np.where(dp > 0, dp, 1.0), np.inf)
    return np.concatenate([[0.0], e])


def minkowski(parts: Sequence[FrontTable], weights: Sequence[float]) -> FrontTable:
    """Probability-weighted sum of fronts (chance successors of one action)."""
    weights = np.asarray(weights, dtype=float)
    if len(parts) == 1 and abs(weights[0] - 1.0) < 1e-15:
        # the child's table may itself be a sum over grandchildren; hide that
        return replace(parts[0], parts=None, weights=None, steps=None)
    h0 = float(sum(w * f.h[0] for f, w in zip(parts, weights)))
    p0 = float(sum(w * f.p[0] for f, w in zip(parts, weights)))
    lam_l, dh_l, dp_l, who_l = [], [], [], []
    for i, (f, w) in enumerate(zip(parts, weights)):
        if len(f) > 1:
            lam_l.append(f.edge_lams)
            dh_l.append(w * np.diff(f.h))
            dp_l.append(w * np.diff(f.p))
            who_l.append(np.full(len(f) - 1, i))
    if not lam_l:
        return FrontTable(np.array([h0]), np.array([p0]), np.array([0.0]),
                          parts=list(parts), weights=weights, steps=np.zeros(0, dtype=np.int64))
    lams = np.concatenate(lam_l)
    who = np.concatenate(who_l)
    order = np.lexsort((who, lams))
    h = np.concatenate([[h0], h0 + np.cumsum(np.concatenate(dh_l)[order])])
    p = np.concatenate([[p0], p0 + np.cumsum(np.concatenate(dp_l)[order])])
    return FrontTable(h, p, np.concatenate([[0.0], lams[order]]),
                      parts=list(parts), weights=weights, steps=who[order].astype(np.int64))


def pointwise_min(fronts: Sequence[FrontTable]) -> FrontTable:
    """Intersection of downward-closed sets: ``F(h) = min_i F_i(h)``."""
    if len(fronts) == 1:
        return fronts[0]
    h_top = min(f.h_max for f in fronts)
    bps = {h_top}
    for f in fronts:
        bps.update(float(x) for x in f.h if x < h_top)
    grid = np.array(sorted(bps, reverse=True))
    vals = np.array([[f(x) for x in grid] for f in fronts])
    extra = []
    for j in range(len(grid) - 1):
        a, b = grid[j], grid[j + 1]
        for x in range(len(fronts)):
            for y in range(x + 1, len(fronts)):
                da = vals[x, j] - vals[y, j]
                db = vals[x, j + 1] - vals[y, j + 1]
                if da * db < 0:
                    extra.append(a + (b - a) * da / (da - db))
    if extra:
        grid = np.array(sorted(set(grid.tolist()) | set(extra), reverse=True))
        vals = np.array([[f(x) for x in grid] for f in fronts])
    pmin = vals.min(axis=0)
    keep = clean(grid, pmin)
    h, p = grid[keep], pmin[keep]
    return FrontTable(h, p, _vertex_lams(h, p))


def certify_gap(lam_i: float, c_i: float, h_i: float, p_i: float,
                lam_j: float, c_j: float, h_j: float, p_j: float) -> float:
    """Largest performance gap between the chord and the tangent-line outer bound.

    Sample ``i`` has the smaller rationality. ``c`` is the scalarized value
    ``h + lam * p`` (ignored for ``lam = inf``).
    """
    if h_i - h_j <= H_TOL:
        return max(p_j - p_i, 0.0)
    if lam_i == 0.0 and np.isinf(lam_j):
        hx, px = h_i, p_j
    elif lam_i == 0.0:
        hx = h_i
        px = (c_j - hx) / lam_j
    elif np.isinf(lam_j):
        px = p_j
        hx = c_i - lam_i * px
    else:
        px = (c_j - c_i) / (lam_j - lam_i)
        hx = c_i - lam_i * px
    hx = min(max(hx, h_j), h_i)
    chord = p_i + (p_j - p_i) * (h_i - hx) / (h_i - h_j)
    return max(float(px - chord), 0.0)
