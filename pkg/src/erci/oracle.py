"""Brute-force ground truth for small games."""
from __future__ import annotations

import itertools
import math
from typing import Iterator, Optional, Sequence

import numpy as np

from .evaluate import MarkovPolicy, Point, evaluate
from .improviser import Improviser, exact_point, improviser_guarantee, mix_policies
from .preprocess import OWN_EGO, OWN_ENV, OWN_TERM, CoreSG
from .verdict import REALIZABLE, UNREALIZABLE, Verdict

ENV_CAP = 4096
POLICY_CAP = 200_000
CHECK_TOL = 1e-9


class TooLarge(ValueError):
    pass


def count_env_policies(core: CoreSG) -> int:
    return int(np.prod(core.n_actions[core.env_nodes].astype(object))) if len(core.env_nodes) else 1


def enumerate_env_policies(core: CoreSG, cap: int = ENV_CAP) -> Iterator[MarkovPolicy]:
    """Every deterministic Markov env policy, in lexicographic order of action slots."""
    total = count_env_policies(core)
    if total > cap:
        raise TooLarge(f"{total} env policies exceed the cap of {cap}")
    nodes = [int(n) for n in core.env_nodes]
    ranges = [list(core.slots(n)) for n in nodes]
    for combo in itertools.product(*ranges):
        probs = np.zeros(core.n_slots)
        probs[list(combo)] = 1.0
        yield MarkovPolicy(core, probs, OWN_ENV)


def oracle_guaranteed_point(core: CoreSG, ego, cap: int = ENV_CAP) -> Point:
    """Componentwise minimum over all deterministic env policies, by a literal loop."""
    best_p, best_h = math.inf, math.inf
    for env in enumerate_env_policies(core, cap):
        if isinstance(ego, Improviser):
            x = exact_point(ego, env)
        else:
            x = evaluate(core, ego, env)
        best_p = min(best_p, x.p)
        best_h = min(best_h, x.h)
    return Point(best_p, best_h)


def _simplex_grid(k: int, steps: int) -> list:
    out = []
    for combo in itertools.combinations(range(steps + k - 1), k - 1):
        parts, prev = [], -1
        for c in combo:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + k - 2 - prev)
        out.append(np.array(parts, dtype=float) / steps)
    return out


def nondominated(points: Sequence[Point]) -> list:
    pts = sorted(set((round(x.p, 15), round(x.h, 15)) for x in points), key=lambda t: (-t[0], -t[1]))
    keep, best_h = [], -math.inf
    for p, h in pts:
        if h > best_h:
            keep.append(Point(p, h))
            best_h = h
    return keep


def oracle_front_lower_bound(core: CoreSG, grid_step: float = 0.05, max_ego_nodes: int = 3,
                             max_actions: int = 3, cap: int = POLICY_CAP, env_cap: int = ENV_CAP) -> list:
    """Non-dominated guaranteed points of ego policies on a probability grid."""
    choice_nodes = [int(n) for n in core.ego_nodes if core.n_actions[n] > 1]
    if len(choice_nodes) > max_ego_nodes or any(core.n_actions[n] > max_actions for n in choice_nodes):
        raise TooLarge("too many ego decisions for grid enumeration")
    steps = int(round(1.0 / grid_step))
    grids = [_simplex_grid(int(core.n_actions[n]), steps) for n in choice_nodes]
    total = int(np.prod([len(g) for g in grids], dtype=object)) * count_env_policies(core)
    if total > cap:
        raise TooLarge(f"{total} evaluations exceed the cap of {cap}")
    base = np.zeros(core.n_slots)
    for n in core.ego_nodes:
        base[core.node_ptr[n]] = 1.0
    envs = list(enumerate_env_policies(core, env_cap))
    pts = []
    for combo in itertools.product(*grids):
        probs = base.copy()
        for n, dist in zip(choice_nodes, combo):
            probs[core.node_ptr[n]:core.node_ptr[n + 1]] = dist
        ego = MarkovPolicy(core, probs, OWN_EGO)
        p = h = math.inf
        for env in envs:
            x = evaluate(core, ego, env)
            p, h = min(p, x.p), min(h, x.h)
        pts.append(Point(p, h))
    return nondominated(pts)


# -- hidden-coin mixtures ----------------------------------------------------------------

def mixture_point(core: CoreSG, policies: Sequence[MarkovPolicy], weights: Sequence[float], env: MarkovPolicy) -> Point:
    """Exact performance and causal entropy of an episode-level mixture seen from outside.

    The coin is hidden, so the action distribution at each node is the
    posterior-weighted mixture given the actions observed so far.
    """
    stack = np.array([pol.probs for pol in policies])
    w0 = np.asarray(weights, dtype=float)
    memo: dict = {}

    def value(n: int, post: np.ndarray) -> tuple:
        if n == core.top:
            return 1.0, 0.0
        if core.owner[n] == OWN_TERM:
            return 0.0, 0.0
        key = (n, tuple(np.round(post, 14)))
        if key in memo:
            return memo[key]
        p = h = 0.0
        for a in core.slots(n):
            if core.owner[n] == OWN_EGO:
                q = float(np.dot(post, stack[:, a]))
                if q <= 0.0:
                    continue
                nxt = post * stack[:, a] / q
                local = -math.log(q)
            else:
                q = float(env.probs[a])
                if q <= 0.0:
                    continue
                nxt, local = post, 0.0
            succ, prob = core.successors(a)
            bp = bh = 0.0
            for v, r in zip(succ, prob):
                cp, ch = value(int(v), nxt)
                bp += r * cp
                bh += r * ch
            p += q * bp
            h += q * (bh + local)
        memo[key] = (p, h)
        return p, h

    p, h = value(0, w0 / w0.sum())
    return Point(p, h)


def oracle_mixture_guarantee(core: CoreSG, policies, weights, cap: int = ENV_CAP) -> Point:
    best_p, best_h = math.inf, math.inf
    for env in enumerate_env_policies(core, cap):
        x = mixture_point(core, policies, weights, env)
        best_p, best_h = min(best_p, x.p), min(best_h, x.h)
    return Point(best_p, best_h)


# -- witnesses ------------------------------------------------------------------------------

def _rebuild_improviser(core: CoreSG, verdict: Verdict):
    w = verdict.witness
    if verdict.solver == "sg":
        from .sg import build_front_tables, witness_policy
        tables = getattr(verdict, "tables", None) or build_front_tables(core, verdict.info["kappa"])
        return witness_policy(tables, w["owed"])
    from .mdp import smooth_bellman
    pols = [Improviser.markov(smooth_bellman(core, lam).sigma, lam) for lam in w["lambdas"]]
    if len(pols) == 1:
        return pols[0]
    return mix_policies(pols[0], pols[1], w["weight"])


def check_witness(core: CoreSG, verdict: Verdict, cap: int = ENV_CAP) -> bool:
    """Independently confirm a verdict's witness. Unknown verdicts never check."""
    t = verdict.target
    if verdict.status == REALIZABLE:
        imp = verdict.improviser if verdict.improviser is not None else _rebuild_improviser(core, verdict)
        try:
            x = oracle_guaranteed_point(core, imp, cap)
        except TooLarge:
            x = improviser_guarantee(imp)
        return bool(t.p <= x.p + CHECK_TOL and t.h <= x.h + CHECK_TOL)
    if verdict.status == UNREALIZABLE:
        w = verdict.witness
        wp, wh = w["weights"]
        if verdict.solver == "sg":
            from .sg import build_front_tables, recheck_unrealizable
            tables = getattr(verdict, "tables", None) or build_front_tables(core, verdict.info["kappa"])
            return recheck_unrealizable(tables, verdict)
        from .mdp import smooth_bellman
        rp = smooth_bellman(core, w["lambdas"][0])
        x = rp.point
        return bool(wp * x.p + wh * x.h < wp * t.p + wh * t.h)
    return False
