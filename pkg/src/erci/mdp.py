"""Maximum-causal-entropy policies and front exploration for MDP cores."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .evaluate import MarkovPolicy, Point, sole_env_policy
from .improviser import Improviser, mix_policies
from .preprocess import OWN_EGO, OWN_ENV, CoreSG
from .verdict import (REALIZABLE, UNKNOWN, UNREALIZABLE, WITNESS_TOL, Endpoints,
                      Verdict, resolve_target)

ARGMAX_TOL = 1e-9
LAM_MAX = 100.0


class NotAnMDP(ValueError):
    pass


@dataclass(eq=False)
class RationalityPolicy:
    """Soft-optimal ego policy at rationality ``lam`` (``inf`` for the hard-max limit).

    ``V`` and ``Q`` are the soft values; they are ``None`` for ``lam = inf``.
    ``p`` and ``h`` hold per-node performance and entropy-to-go.
    """

    lam: float
    V: Optional[np.ndarray]
    Q: Optional[np.ndarray]
    sigma: MarkovPolicy
    p: np.ndarray
    h: np.ndarray

    @property
    def point(self) -> Point:
        return Point(float(self.p[0]), float(self.h[0]))

    @property
    def value(self) -> float:
        """Scalarized value ``h + lam * p`` at the initial node (``p`` for ``lam = inf``)."""
        if math.isinf(self.lam):
            return float(self.p[0])
        return float(self.V[0])


def _env_for(core: CoreSG, env) -> MarkovPolicy:
    if env is not None:
        return env
    if not core.is_mdp:
        raise NotAnMDP("env has more than one action at some node")
    return sole_env_policy(core)


def smooth_bellman(core: CoreSG, lam: float, env: Optional[MarkovPolicy] = None) -> RationalityPolicy:
    """One reverse-topological soft backup at rationality ``lam``.

    ``env`` fixes env's behaviour on a game; without it the core must be an MDP.
    """
    if lam < 0 or math.isnan(lam):
        raise ValueError("rationality must be nonnegative")
    envpol = _env_for(core, env)
    if math.isinf(lam):
        sig, p, h = kernels.lex_backward(*core.arrays(), envpol.probs, core.top, ARGMAX_TOL)
        return RationalityPolicy(lam, None, None, MarkovPolicy(core, sig, OWN_EGO), p, h)
    V, Q, sig, p, h = kernels.soft_backward(*core.arrays(), envpol.probs, core.top, float(lam))
    return RationalityPolicy(float(lam), V, Q, MarkovPolicy(core, sig, OWN_EGO), p, h)


def rationality_point(core: CoreSG, lam: float) -> Point:
    return smooth_bellman(core, lam).point


def limit_point_max_performance(core: CoreSG, ties: str = "entropy") -> tuple[Point, MarkovPolicy]:
    """Max-performance endpoint ``(p*, h-)`` and its policy.

    Ties in performance (within 1e-9) are broken by a softmax of entropy-to-go
    (``ties="entropy"``, the limit of the soft policies) or uniformly
    (``ties="uniform"``).
    """
    if ties == "entropy":
        rp = smooth_bellman(core, math.inf)
        return rp.point, rp.sigma
    if ties != "uniform":
        raise ValueError("ties must be 'entropy' or 'uniform'")
    envpol = _env_for(core, None)
    n = core.n_nodes
    pv = np.zeros(n)
    pv[core.top] = 1.0
    sig = np.zeros(core.n_slots)
    for u in range(n - 1, -1, -1):
        if core.is_terminal(u):
            continue
        q = np.empty(len(core.slots(u)))
        for i, a in enumerate(core.slots(u)):
            succ, prob = core.successors(a)
            q[i] = float(np.dot(prob, pv[succ]))
        lo = core.node_ptr[u]
        if core.owner[u] == OWN_EGO:
            best = q >= q.max() - ARGMAX_TOL
            sig[lo:lo + len(q)] = best / best.sum()
        else:
            sig[lo:lo + len(q)] = envpol.probs[lo:lo + len(q)]
        pv[u] = float(np.dot(sig[lo:lo + len(q)], q))
    pol = MarkovPolicy(core, sig, OWN_EGO)
    from .evaluate import evaluate
    return evaluate(core, pol), pol


def _pair_weight(x1: Point, x2: Point, target: Point) -> Optional[float]:
    """Weight ``w`` with ``target <= w*x1 + (1-w)*x2`` where ``x1`` has more entropy."""
    if not x2.h - WITNESS_TOL <= target.h <= x1.h + WITNESS_TOL or x1.h - x2.h <= 0:
        return None
    w = min(max((target.h - x2.h) / (x1.h - x2.h), 0.0), 1.0)
    if w * x1.p + (1 - w) * x2.p >= target.p - WITNESS_TOL:
        return w
    return None


class _Explorer:
    def __init__(self, core: CoreSG, target: Point, env=None):
        self.core = core
        self.target = target
        self.env = env
        self.samples: dict = {}
        self.verdict: Optional[Verdict] = None

    def sample(self, lam: float) -> RationalityPolicy:
        if lam not in self.samples:
            self.samples[lam] = smooth_bellman(self.core, lam, self.env)
            if self.verdict is None:
                self.verdict = self.decide()
        return self.samples[lam]

    def decide(self) -> Optional[Verdict]:
        t = self.target
        lams = sorted(self.samples)
        for lam in lams:
            rp = self.samples[lam]
            x = rp.point
            if t.p <= x.p + WITNESS_TOL and t.h <= x.h + WITNESS_TOL:
                return Verdict(REALIZABLE, t, {"kind": "point", "lambdas": [lam], "points": [[x.p, x.h]], "weight": 1.0},
                               Improviser.markov(rp.sigma, lam))
        for a, b in zip(lams, lams[1:]):
            r1, r2 = self.samples[a], self.samples[b]
            w = _pair_weight(r1.point, r2.point, t)
            if w is not None:
                x1, x2 = r1.point, r2.point
                return Verdict(REALIZABLE, t, {"kind": "pair", "lambdas": [a, b],
                                               "points": [[x1.p, x1.h], [x2.p, x2.h]], "weight": w},
                               mix_policies(Improviser.markov(r1.sigma, a), Improviser.markov(r2.sigma, b), w))
        for lam in lams:
            rp = self.samples[lam]
            x = rp.point
            if math.isinf(lam):
                weights, lhs, rhs = (1.0, 0.0), x.p, t.p
            else:
                weights, lhs, rhs = (lam, 1.0), rp.value, lam * t.p + t.h
            if rhs > lhs + WITNESS_TOL:
                return Verdict(UNREALIZABLE, t, {"kind": "scalarization", "lambdas": [lam], "points": [[x.p, x.h]],
                                                 "weights": list(weights), "slack": rhs - lhs})
        return None

    def front(self) -> list:
        return [(lam, float(r.p[0]), float(r.h[0])) for lam, r in sorted(self.samples.items())]


def mdp_endpoints(core: CoreSG, env=None) -> Endpoints:
    lo, hi = smooth_bellman(core, 0.0, env).point, smooth_bellman(core, math.inf, env).point
    return Endpoints(p_low=lo.p, h_max=lo.h, p_max=hi.p, h_low=hi.h)


def pareto_explore_mdp(core: CoreSG, target=None, regret=None, delta: float = 1e-6,
                       lam_max: float = LAM_MAX, max_samples: int = 2000, env=None) -> Verdict:
    """Decide whether ``target`` (or the regret pair) lies under the front.

    Samples the endpoints, doubles the rationality from 1 until the sampled
    entropy drops to the target, then bisects down to resolution ``delta``.
    """
    if delta <= 0:
        raise ValueError("resolution must be positive")
    _env_for(core, env)
    ends = None
    if regret is not None:
        ends = mdp_endpoints(core, env)
    goal, reg = resolve_target(target, regret, ends)
    ex = _Explorer(core, goal, env)
    x0 = ex.sample(0.0).point
    ex.sample(math.inf)
    lo, hi = 0.0, math.inf
    if ex.verdict is None and goal.h < x0.h:
        lam = 1.0
        while len(ex.samples) < max_samples:
            rp = ex.sample(lam)
            if rp.h[0] <= goal.h:
                hi = lam
                break
            lo = lam
            if ex.verdict is not None:
                break
            lam = min(2 * lam, lam_max) if lam < lam_max else 2 * lam
            if lam > 1e300:
                break
        while ex.verdict is None and math.isfinite(hi) and hi - lo >= delta and len(ex.samples) < max_samples:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if ex.sample(mid).h[0] <= goal.h:
                hi = mid
            else:
                lo = mid
    v = ex.verdict
    if v is None:
        v = Verdict(UNKNOWN, goal, {"kind": "bracket", "lambdas": [lo, hi]})
    v.front = ex.front()
    v.solver = "mdp"
    v.info.update({"delta": delta, "lam_max": lam_max, "samples": len(ex.samples)})
    if reg is not None:
        v.info["regret"] = list(reg)
    return v


def save_front_csv(front, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "p", "h"])
        for lam, p, h in front:
            w.writerow([_fmt(lam), _fmt(p), _fmt(h)])


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return f"{x:.12g}"
