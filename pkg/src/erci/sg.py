"""Front tables, entropy-matching policies and the refinement loop for full games."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .evaluate import MarkovPolicy, Point
from .fronts import FrontTable, certify_gap, clean, minkowski, point_front, pointwise_min
from .improviser import Choice, Improviser, WorstCaseEnv
from .preprocess import OWN_EGO, OWN_ENV, OWN_TERM, CoreSG
from .verdict import (REALIZABLE, UNKNOWN, UNREALIZABLE, WITNESS_TOL, Endpoints,
                      Verdict, resolve_target)

log = logging.getLogger(__name__)

ARGMAX_TOL = 1e-9
LAM_MAX = 100.0
SAMPLE_BUDGET = 10_000
NODE_BUDGET = 4_000


class ResolutionExhausted(RuntimeError):
    pass


def lambda_grid(lam_max: float = LAM_MAX) -> list:
    grid = [0.0]
    lam = 1.0
    while lam < lam_max:
        grid.append(lam)
        lam *= 2
    return grid + [float(lam_max), math.inf]


# -- min-entropy environment ------------------------------------------------------

@dataclass(eq=False)
class MinEntropyEnv:
    env: MarkovPolicy
    ego: MarkovPolicy
    h: np.ndarray
    p: np.ndarray
    V: np.ndarray


def min_entropy_env(core: CoreSG, lam: float, tol: float = 1e-12) -> MinEntropyEnv:
    """Env minimizing entropy-to-go, then performance, against the soft ego at ``lam``."""
    code = -1.0 if math.isinf(lam) else float(lam)
    env, sig, V, p, h = kernels.min_entropy_pass(*core.arrays(), core.top, code, tol)
    return MinEntropyEnv(MarkovPolicy(core, env, OWN_ENV), MarkovPolicy(core, sig, OWN_EGO), h, p, V)


# -- front tables -------------------------------------------------------------------

@dataclass(eq=False)
class FrontTables:
    core: CoreSG
    kappa: float
    nodes: list
    branches: list
    lambdas: set
    lam_max: float

    @property
    def root(self) -> FrontTable:
        return self.nodes[0]

    def n_samples(self) -> int:
        return sum(len(t) for t in self.nodes if t.sigma is not None)

    def to_dict(self) -> dict:
        out = []
        for n, t in enumerate(self.nodes):
            out.append({
                "id": self.core.label(n),
                "samples": [{"lambda": _enc(float(l)), "h": float(h), "p": float(p)}
                            for l, h, p in zip(t.lam, t.h, t.p)],
                "kappa": self.kappa,
            })
        return {"kappa": self.kappa, "lam_max": self.lam_max, "nodes": out}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _enc(x: float):
    return "inf" if math.isinf(x) else x


def tables_from_dict(d: dict) -> dict:
    """Per-node ``(lambda, h, p)`` arrays from a table dump."""
    out = {}
    for e in d["nodes"]:
        lam = np.array([math.inf if s["lambda"] == "inf" else float(s["lambda"]) for s in e["samples"]])
        out[e["id"]] = (lam, np.array([s["h"] for s in e["samples"]]), np.array([s["p"] for s in e["samples"]]))
    return out


def _ego_sample(branches: list, lam: float) -> tuple:
    """Soft-optimal mixture of branch fronts at rationality ``lam``."""
    if math.isinf(lam):
        hs = np.array([b.h[-1] for b in branches])
        ps = np.array([b.p[-1] for b in branches])
        keep = ps >= ps.max() - ARGMAX_TOL
        s = np.where(keep, hs, -np.inf)
    else:
        idx = [b.argmax(lam) for b in branches]
        hs = np.array([b.h[i] for b, i in zip(branches, idx)])
        ps = np.array([b.p[i] for b, i in zip(branches, idx)])
        s = hs + lam * ps
    top = s.max()
    z = np.exp(s - top)
    sig = z / z.sum()
    nz = sig > 0
    h = float(np.sum(sig[nz] * (hs[nz] - np.log(sig[nz]))))
    p = float(np.dot(sig, ps))
    return h, p, sig, hs


def _ego_table(branches: list, kappa: float, lam_max: float, lambdas: set) -> FrontTable:
    if len(branches) == 1:
        b = branches[0]
        return FrontTable(b.h, b.p, b.lam, kappa=kappa,
                          sigma=[np.ones(1)] * len(b), branch_h=[np.array([x]) for x in b.h],
                          value=b.h + 0.0)
    samples = {}
    for lam in lambda_grid(lam_max):
        samples[lam] = _ego_sample(branches, lam)
    while True:
        lams = sorted(samples)
        if len(lams) > NODE_BUDGET:
            raise ResolutionExhausted(f"more than {NODE_BUDGET} samples at one node")
        todo = []
        for a, b in zip(lams, lams[1:]):
            ha, pa = samples[a][:2]
            hb, pb = samples[b][:2]
            gap = certify_gap(a, ha + a * pa if math.isfinite(a) else 0.0, ha, pa,
                              b, hb + b * pb if math.isfinite(b) else 0.0, hb, pb)
            if gap > kappa:
                mid = 0.5 * (a + b) if math.isfinite(b) else max(2 * a, 1.0)
                if a < mid < b and (mid - a) > 1e-12 * max(1.0, mid):
                    todo.append(mid)
        if not todo:
            break
        for mid in todo:
            samples[mid] = _ego_sample(branches, mid)
    lams = sorted(samples)
    lambdas.update(lams)
    h = np.array([samples[l][0] for l in lams])
    p = np.array([samples[l][1] for l in lams])
    keep = clean(h, p)
    return FrontTable(
        h[keep], p[keep], np.array(lams)[keep], kappa=kappa,
        sigma=[samples[lams[i]][2] for i in keep],
        branch_h=[samples[lams[i]][3] for i in keep],
        value=np.array([h[i] + lams[i] * p[i] if math.isfinite(lams[i]) else math.nan for i in keep]),
    )


def build_front_tables(core: CoreSG, kappa: float = 0.1, lam_max: float = LAM_MAX,
                       max_samples: int = SAMPLE_BUDGET) -> FrontTables:
    """Certified inner approximations of every node's front, built leaves first.

    Env nodes take the pointwise minimum of their action branches and chance
    branches the probability-weighted Minkowski sum, both exactly. Ego nodes
    are sampled over rationality until the chord between adjacent samples is
    within ``kappa`` of the tangent-line outer bound.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")
    n = core.n_nodes
    nodes: list = [None] * n
    branches: list = [None] * core.n_slots
    lambdas: set = set()
    nodes[core.top] = point_front(0.0, 1.0)
    nodes[core.bot] = point_front(0.0, 0.0)
    for u in range(n - 1, -1, -1):
        if core.owner[u] == OWN_TERM:
            if nodes[u] is None:
                nodes[u] = point_front(0.0, 1.0 if u == core.top else 0.0)
            continue
        bs = []
        for a in core.slots(u):
            succ, prob = core.successors(a)
            branches[a] = minkowski([nodes[int(v)] for v in succ], prob)
            bs.append(branches[a])
        if core.owner[u] == OWN_EGO:
            nodes[u] = _ego_table(bs, kappa, lam_max, lambdas)
        else:
            nodes[u] = pointwise_min(bs)
        if len(lambdas) > max_samples:
            raise ResolutionExhausted(f"more than {max_samples} rationality values")
    return FrontTables(core, kappa, nodes, branches, lambdas, lam_max)


# -- entropy matching --------------------------------------------------------------

@dataclass(frozen=True)
class Match:
    lams: tuple
    weight: float
    h: float
    p: float
    vertices: tuple


def match_rationality(table: FrontTable, owed_h: float) -> Match:
    """Adjacent samples whose ``weight``-mixture has entropy ``owed_h`` (clamped to the table)."""
    h = min(max(owed_h, table.h_min), table.h_max)
    k, t = table.locate(h)
    if t <= 0.0 or k == len(table) - 1:
        return Match((float(table.lam[k]),) * 2, 1.0, float(table.h[k]), float(table.p[k]), (k, k))
    w = 1.0 - t
    p = w * table.p[k] + t * table.p[k + 1]
    return Match((float(table.lam[k]), float(table.lam[k + 1])), w, h, float(p), (k, k + 1))


class EntropyMatchingPolicy:
    """Ego automaton carrying the entropy still owed at the current node.

    At ego nodes a hidden coin picks one of the two samples bracketing the
    owed entropy and plays its soft policy; each action branch then owes the
    entropy that sample planned for it. Env moves pass the owed value on
    unchanged, and chance outcomes split it along the branch front.
    """

    def __init__(self, tables: FrontTables, owed: float, lam0: float = math.nan):
        self.tables = tables
        self.core = tables.core
        self.owed0 = float(owed)
        self.lam0 = lam0
        self._cache: dict = {}

    def start(self) -> float:
        return self.owed0

    def decide(self, n: int, s: float) -> list:
        key = (n, s)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        m = match_rationality(self.tables.nodes[n], s)
        t = self.tables.nodes[n]
        out = []
        for k, w in ((m.vertices[0], m.weight), (m.vertices[1], 1.0 - m.weight)):
            if w <= 0.0 or (out and k == m.vertices[0]):
                continue
            out.append(Choice(w, t.sigma[k], float(t.lam[k]), tuple(float(x) for x in t.branch_h[k])))
        self._cache[key] = out
        return out

    def env_branch(self, n: int, s: float, slot: int) -> float:
        return min(s, self.tables.branches[slot].h_max)

    def split(self, slot: int, s: float) -> list:
        return self.tables.branches[slot].split(s)

    def describe(self) -> dict:
        return {"kind": "entropy_matching", "owed": self.owed0,
                "lambda": None if math.isnan(self.lam0) else _enc(self.lam0),
                "kappa": self.tables.kappa}


def entropy_matching_policy(core: CoreSG, tables: FrontTables, lam0: Optional[float] = None,
                            owed: Optional[float] = None) -> EntropyMatchingPolicy:
    """Entropy-matching policy owing ``owed`` at the root, or the entropy of rationality ``lam0`` there."""
    if (lam0 is None) == (owed is None):
        raise ValueError("give exactly one of lam0 or owed")
    if owed is None:
        root = tables.root
        if root.sigma is None:
            raise ValueError("root is not an ego node")
        succ = [tables.branches[a] for a in core.slots(0)]
        owed = _ego_sample(succ, lam0)[0]
        return EntropyMatchingPolicy(tables, owed, lam0)
    return EntropyMatchingPolicy(tables, owed)


# -- refinement loop ---------------------------------------------------------------------

def _decide(tables: FrontTables, goal: Point, slack: float) -> Optional[Verdict]:
    core, root = tables.core, tables.root
    if goal.h > root.h_max + WITNESS_TOL:
        return Verdict(UNREALIZABLE, goal, {"kind": "scalarization", "lambdas": [float(root.lam[0])],
                                            "points": [[float(root.p[0]), float(root.h[0])]],
                                            "weights": [0.0, 1.0], "slack": goal.h - root.h_max, "owed": float(root.h[0])})
    if goal.p > root.p_max + WITNESS_TOL:
        k = len(root) - 1
        return Verdict(UNREALIZABLE, goal, {"kind": "scalarization", "lambdas": [float(root.lam[k])],
                                            "points": [[float(root.p[k]), float(root.h[k])]],
                                            "weights": [1.0, 0.0], "slack": goal.p - root.p_max, "owed": float(root.h[k])})
    f = root(goal.h)
    if goal.p <= f + WITNESS_TOL:
        m = match_rationality(root, goal.h)
        k0, k1 = m.vertices
        if k0 == k1:
            wit = {"kind": "point", "lambdas": [m.lams[0]], "points": [[float(root.p[k0]), float(root.h[k0])]], "weight": 1.0}
        else:
            wit = {"kind": "pair", "lambdas": list(m.lams), "weight": m.weight,
                   "points": [[float(root.p[k0]), float(root.h[k0])], [float(root.p[k1]), float(root.h[k1])]]}
        owed = max(goal.h, root.h_min)
        wit["owed"] = owed
        imp = Improviser(core, [(1.0, EntropyMatchingPolicy(tables, owed))])
        return Verdict(REALIZABLE, goal, wit, imp)
    if goal.p > f + slack:
        k, _ = root.locate(goal.h)
        k = min(k, len(root) - 2)
        lam = float(root.edge_lams[k])
        return Verdict(UNREALIZABLE, goal, {"kind": "scalarization", "lambdas": [lam],
                                            "points": [[float(root.p[k]), float(root.h[k])]],
                                            "weights": [lam, 1.0], "slack": lam * (goal.p - f - slack),
                                            "owed": float(root.h[k])})
    return None


def sg_endpoints(tables: FrontTables) -> Endpoints:
    r = tables.root
    return Endpoints(p_low=float(r.p[0]), h_max=float(r.h[0]), p_max=float(r.p[-1]), h_low=float(r.h[-1]))


def sg_pareto_explore(core: CoreSG, target=None, regret=None, kappa0: float = 0.1, kappa_min: float = 1e-5,
                      lam_max: float = LAM_MAX, max_samples: int = SAMPLE_BUDGET) -> Verdict:
    """Decide a target on a game, halving ``kappa`` while the answer is within the error band."""
    if not 0.0 < kappa0 < 1.0:
        raise ValueError("kappa0 must lie in (0, 1)")
    tau = max(core.longest_path, 1)
    kappa = kappa0
    rounds = 0
    goal, reg, tables, gap, v = None, None, None, math.nan, None
    while True:
        rounds += 1
        try:
            tables = build_front_tables(core, kappa, lam_max, max_samples)
        except ResolutionExhausted as exc:
            log.info("resolution exhausted at kappa=%g: %s", kappa, exc)
            break
        if goal is None:
            goal, reg = resolve_target(target, regret, sg_endpoints(tables) if regret is not None else None)
        v = _decide(tables, goal, kappa * tau)
        if v is not None:
            break
        gap = goal.p - tables.root(goal.h)
        log.info("target within %g of the front at kappa=%g, refining", kappa * tau, kappa)
        if kappa / 2 < kappa_min:
            break
        kappa /= 2
    if goal is None:
        if regret is not None:
            raise ResolutionExhausted("no table could be built for a regret target")
        goal, reg = resolve_target(target, None)
        v = None
    if v is None:
        v = Verdict(UNKNOWN, goal, {"kind": "bracket", "kappa": kappa, "gap": gap})
    if tables is not None:
        r = tables.root
        v.front = [(float(l), float(p), float(h)) for l, p, h in zip(r.lam, r.p, r.h)]
    v.solver = "sg"
    v.info.update({"kappa": kappa, "tau": tau, "rounds": rounds,
                   "lambdas": len(tables.lambdas) if tables is not None else 0})
    if reg is not None:
        v.info["regret"] = list(reg)
    v.tables = tables
    return v


def witness_policy(tables: FrontTables, owed: float) -> Improviser:
    return Improviser(tables.core, [(1.0, EntropyMatchingPolicy(tables, owed))])


def recheck_unrealizable(tables: FrontTables, verdict: Verdict) -> bool:
    """Re-evaluate the witness point exactly and check the strict scalarization inequality."""
    w = verdict.witness
    wp, wh = w["weights"]
    imp = witness_policy(tables, w["owed"])
    p = WorstCaseEnv(imp, "p").point().p
    h = WorstCaseEnv(imp, "h").point().h
    t = verdict.target
    return bool(wp * p + wh * h < wp * t.p + wh * t.h)
