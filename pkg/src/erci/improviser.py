"""Running improvisers: episode stepping, exact evaluation and Monte-Carlo simulation.

An improviser is a top-level mixture of components. A coin flipped once at
episode start selects the component. Each component is a small automaton
whose state is carried along the play:

* ``decide(n, s)`` at an ego node returns a list of weighted ``Choice``
  entries (a hidden coin picks one), each with an action distribution and
  the state carried into every action branch;
* ``env_branch(n, s, slot)`` gives the state carried into the branch env picked;
* ``split(slot, s)`` distributes a branch state over the chance successors.

A Markov policy has the trivial state ``0.0``. Entropy-matching policies
carry the entropy still owed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .evaluate import MarkovPolicy, Point
from .preprocess import OWN_EGO, OWN_ENV, OWN_TERM, CoreSG

Z95 = 1.959963984540054


class OffSupportObservation(ValueError):
    pass


class StepOnEnvNode(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Choice:
    weight: float
    dist: np.ndarray          # over the node's action slots, in slot order
    lam: float
    branch: tuple             # state carried into each action branch


class MarkovComponent:
    """Stateless component following a fixed Markov policy."""

    def __init__(self, policy: MarkovPolicy, lam: float = math.nan):
        self.policy = policy
        self.core = policy.core
        self.lam = lam
        self._cache: dict = {}

    def start(self) -> float:
        return 0.0

    def decide(self, n: int, s: float) -> list:
        try:
            return self._cache[n]
        except KeyError:
            core = self.core
            lo, hi = core.node_ptr[n], core.node_ptr[n + 1]
            out = [Choice(1.0, np.asarray(self.policy.probs[lo:hi], dtype=float), self.lam, (0.0,) * (hi - lo))]
            self._cache[n] = out
            return out

    def env_branch(self, n: int, s: float, slot: int) -> float:
        return 0.0

    def split(self, slot: int, s: float) -> list:
        k = self.core.slot_ptr[slot + 1] - self.core.slot_ptr[slot]
        return [0.0] * int(k)

    def describe(self) -> dict:
        from .evaluate import policy_to_dict
        return {"kind": "markov", "lambda": _num(self.lam), "policy": policy_to_dict(self.policy)}


def _num(x: float):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    if math.isinf(x):
        return "inf"
    return x


class Improviser:
    def __init__(self, core: CoreSG, components: Sequence[tuple]):
        comps = [(float(w), c) for w, c in components if w > 0]
        if not comps:
            raise ValueError("improviser needs a component with positive weight")
        total = sum(w for w, _ in comps)
        self.core = core
        self.weights = np.array([w / total for w, _ in comps])
        self.components = [c for _, c in comps]

    @classmethod
    def markov(cls, policy: MarkovPolicy, lam: float = math.nan) -> "Improviser":
        return cls(policy.core, [(1.0, MarkovComponent(policy, lam))])

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "components": [c.describe() for c in self.components],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def as_improviser(x) -> Improviser:
    if isinstance(x, Improviser):
        return x
    if isinstance(x, MarkovPolicy):
        return Improviser.markov(x)
    lam = getattr(x, "lam", math.nan)
    return Improviser.markov(x.sigma, lam)


def mix_policies(first, second, w: float) -> Improviser:
    """Follow ``first`` with probability ``w`` and ``second`` otherwise, for a whole episode."""
    if not 0.0 <= w <= 1.0:
        raise ValueError("mixing weight must lie in [0, 1]")
    a, b = as_improviser(first), as_improviser(second)
    comps = [(w * wa, c) for wa, c in zip(a.weights, a.components)]
    comps += [((1 - w) * wb, c) for wb, c in zip(b.weights, b.components)]
    return Improviser(a.core, comps)


# -- counter-based randomness -----------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def uniforms(seed: int, episodes, step: int, stream: int) -> np.ndarray:
    """Uniform draws in [0, 1) addressed by (seed, episode, step, stream)."""
    with np.errstate(over="ignore"):
        ep = np.atleast_1d(np.asarray(episodes, dtype=np.uint64))
        key = _mix64(np.full(ep.shape, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64) + _GOLD)
        x = _mix64(key ^ (ep * _GOLD))
        x = _mix64(x + np.uint64(step) * _GOLD + np.uint64(stream))
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _categorical(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = max(cdf[-1], 1.0)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    # never land on a zero-probability entry
    idx = np.minimum(idx, len(probs) - 1)
    return idx


# -- exact evaluation -----------------------------------------------------------

EnvSelect = Callable[[int, int, float], np.ndarray]


class _Evaluator:
    """Memoized recursion over (component, node, state)."""

    def __init__(self, core: CoreSG, comp, env):
        self.core = core
        self.comp = comp
        self.env = env      # "p", "h" (worst case) or callable(n, s) -> local dist
        self.memo: dict = {}
        self.choice: dict = {}

    def branch(self, slot: int, bs: float) -> tuple:
        succ, prob = self.core.successors(slot)
        states = self.comp.split(slot, bs)
        p = h = 0.0
        for v, q, cs in zip(succ, prob, states):
            cp, ch = self.value(int(v), cs)
            p += q * cp
            h += q * ch
        return p, h

    def value(self, n: int, s: float) -> tuple:
        core = self.core
        if n == core.top:
            return 1.0, 0.0
        if core.owner[n] == OWN_TERM:
            return 0.0, 0.0
        key = (n, s)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        lo = int(core.node_ptr[n])
        p = h = 0.0
        if core.owner[n] == OWN_EGO:
            for ch in self.comp.decide(n, s):
                for j, q in enumerate(ch.dist):
                    if q <= 0.0:
                        continue
                    bp, bh = self.branch(lo + j, ch.branch[j])
                    p += ch.weight * q * bp
                    h += ch.weight * q * (bh - math.log(q))
        else:
            hi = int(core.node_ptr[n + 1])
            if callable(self.env):
                dist = self.env(n, s)
                for j, q in enumerate(dist):
                    if q > 0.0:
                        bp, bh = self.branch(lo + j, self.comp.env_branch(n, s, lo + j))
                        p += q * bp
                        h += q * bh
            else:
                coord = 0 if self.env == "p" else 1
                best, best_j = None, 0
                for j in range(hi - lo):
                    val = self.branch(lo + j, self.comp.env_branch(n, s, lo + j))
                    if best is None or val[coord] < best[coord]:
                        best, best_j = val, j
                self.choice[key] = best_j
                p, h = best
        self.memo[key] = (p, h)
        return p, h


def _env_callable(core: CoreSG, env) -> Callable:
    if isinstance(env, MarkovPolicy):
        return lambda n, s: env.probs[core.node_ptr[n]:core.node_ptr[n + 1]]
    if isinstance(env, dict):
        def scripted(n, s):
            lo, hi = core.node_ptr[n], core.node_ptr[n + 1]
            d = np.zeros(hi - lo)
            act = env.get(int(n), env.get(core.label(int(n))))
            d[0 if act is None else core.slot_of(n, act) - lo] = 1.0
            return d
        return scripted
    if env == "uniform":
        return lambda n, s: np.full(core.node_ptr[n + 1] - core.node_ptr[n], 1.0 / (core.node_ptr[n + 1] - core.node_ptr[n]))
    if callable(env):
        return env
    raise ValueError(f"unknown env strategy {env!r}")


def exact_point(imp: Improviser, env) -> Point:
    """Exact (performance, plug-in causal entropy) against a fixed env strategy.

    Entropy is conditional on the improviser's hidden coins, a lower bound on
    the causal entropy of the marginal behavior.
    """
    core = imp.core
    sel = _env_callable(core, env)
    p = h = 0.0
    for w, comp in zip(imp.weights, imp.components):
        cp, ch = _Evaluator(core, comp, sel).value(0, comp.start())
        p += w * cp
        h += w * ch
    return Point(p, h)


class WorstCaseEnv:
    """History-aware adversary minimizing one coordinate of the improviser's outcome.

    The adversary sees the component and its state, which is at least as
    strong as any env restricted to the visible play.
    """

    def __init__(self, imp: Improviser, coord: str):
        self.imp = imp
        self.coord = coord
        self.evals = [_Evaluator(imp.core, c, coord) for c in imp.components]
        self.values = [ev.value(0, c.start()) for ev, c in zip(self.evals, imp.components)]

    def point(self) -> Point:
        p = float(sum(w * v[0] for w, v in zip(self.imp.weights, self.values)))
        h = float(sum(w * v[1] for w, v in zip(self.imp.weights, self.values)))
        return Point(p, h)

    def slot_index(self, ci: int, n: int, s: float) -> int:
        ev = self.evals[ci]
        key = (n, s)
        if key not in ev.choice:
            ev.memo.pop(key, None)
            ev.value(n, s)
        return ev.choice[key]


def improviser_guarantee(imp: Improviser) -> Point:
    """Worst-case performance and worst-case entropy, each minimized separately."""
    return Point(WorstCaseEnv(imp, "p").point().p, WorstCaseEnv(imp, "h").point().h)


# -- single episodes ------------------------------------------------------------

class Episode:
    """One play of an improviser, driven step by step by the caller."""

    def __init__(self, imp: Improviser, seed: int = 0, index: int = 0):
        self.imp = imp
        self.core = imp.core
        self.seed = seed
        self.index = index
        self.counter = 1
        u = float(uniforms(seed, [index], 0, 0)[0])
        self.ci = int(_categorical(imp.weights.copy(), np.array([u]))[0])
        self.comp = imp.components[self.ci]
        self.node = 0
        self.state = self.comp.start()
        self.lam = math.nan
        self.pending: Optional[tuple] = None
        self.log: list = []

    @property
    def done(self) -> bool:
        return self.core.owner[self.node] == OWN_TERM

    @property
    def owed(self) -> Optional[float]:
        return self.state if not isinstance(self.comp, MarkovComponent) else None

    def step(self) -> tuple:
        core, n = self.core, self.node
        if core.owner[n] != OWN_EGO:
            raise StepOnEnvNode(f"node {core.label(n)} is not an ego node")
        choices = self.comp.decide(n, self.state)
        if len(choices) > 1:
            u = uniforms(self.seed, [self.index], self.counter, 1)
            k = int(_categorical(np.array([c.weight for c in choices]), u)[0])
        else:
            k = 0
        ch = choices[k]
        j = int(_categorical(ch.dist.copy(), uniforms(self.seed, [self.index], self.counter, 2))[0])
        self.pending = (ch, j)
        self.lam = ch.lam
        lo = core.node_ptr[n]
        dist = {core.slot_action[lo + i]: float(q) for i, q in enumerate(ch.dist)}
        return dist, core.slot_action[lo + j]

    def observe(self, action, next_node: int) -> None:
        core, n = self.core, self.node
        if self.done:
            raise OffSupportObservation("episode already finished")
        try:
            slot = core.slot_of(n, action)
        except (KeyError, ValueError) as exc:
            raise OffSupportObservation(f"action {action!r} not enabled at {core.label(n)}") from exc
        lo = int(core.node_ptr[n])
        rec = {"node": core.label(n), "owner": "ego" if core.owner[n] == OWN_EGO else "env",
               "action": action, "owed_h": self.owed, "lambda": _num(self.lam)}
        if core.owner[n] == OWN_EGO:
            if self.pending is None:
                self.step()
            ch, _ = self.pending
            if ch.dist[slot - lo] <= 0.0:
                raise OffSupportObservation(f"action {action!r} has probability 0")
            rec["dist"] = {core.slot_action[lo + i]: float(q) for i, q in enumerate(ch.dist)}
            bs = ch.branch[slot - lo]
        else:
            bs = self.comp.env_branch(n, self.state, slot)
        succ, prob = core.successors(slot)
        hits = [i for i, v in enumerate(succ) if int(v) == int(next_node) and prob[i] > 0]
        if not hits:
            raise OffSupportObservation(f"node {next_node} is not a successor of {action!r}")
        self.state = self.comp.split(slot, bs)[hits[0]]
        self.node = int(next_node)
        self.pending = None
        self.counter += 1
        self.log.append(rec)

    def chance(self, action) -> int:
        """Sample the chance outcome of ``action`` at the current node."""
        slot = self.core.slot_of(self.node, action)
        succ, prob = self.core.successors(slot)
        k = int(_categorical(np.asarray(prob, dtype=float), uniforms(self.seed, [self.index], self.counter, 3))[0])
        return int(succ[k])

    def log_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.log)


def improviser_reset(imp: Improviser, seed: int = 0, index: int = 0) -> Episode:
    return Episode(imp, seed, index)


def improviser_step(ep: Episode) -> tuple:
    return ep.step()


def improviser_observe(ep: Episode, action, next_node: int) -> None:
    ep.observe(action, next_node)


# -- batched simulation ------------------------------------------------------------

@dataclass
class SimulationReport:
    episodes: int
    p_hat: float
    p_interval: tuple
    h_hat: float
    h_stderr: float
    env: str
    paths: Optional[dict] = None
    breakdown: dict = field(default_factory=dict)

    @property
    def p_halfwidth(self) -> float:
        return (self.p_interval[1] - self.p_interval[0]) / 2

    def to_dict(self) -> dict:
        return {"episodes": self.episodes, "p_hat": self.p_hat, "p_interval": list(self.p_interval),
                "h_hat": self.h_hat, "h_stderr": self.h_stderr, "env": self.env,
                "breakdown": {k: v.to_dict() for k, v in self.breakdown.items()}}


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple:
    if n == 0:
        return (0.0, 1.0)
    ph = successes / n
    denom = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


ENV_ALIASES = {"worst-p": "worst_case_performance", "worst-h": "worst_case_entropy",
               "uniform": "uniform_random"}


def simulate(core: CoreSG, imp, env="worst_case_performance", n: int = 10000, seed: int = 0,
             record_paths: bool = False) -> SimulationReport:
    """Run ``n`` seeded episodes of ``imp`` against ``env``.

    ``env`` is one of ``worst_case_performance``, ``worst_case_entropy``,
    ``uniform_random``, a scripted ``{node: action}`` mapping or an env
    ``MarkovPolicy``.
    """
    if n < 1:
        raise ValueError("need at least one episode")
    imp = as_improviser(imp)
    name = env if isinstance(env, str) else "scripted"
    name = ENV_ALIASES.get(name, name)
    worst = None
    if name == "worst_case_performance":
        worst = WorstCaseEnv(imp, "p")
    elif name == "worst_case_entropy":
        worst = WorstCaseEnv(imp, "h")
    elif name == "uniform_random":
        sel = _env_callable(core, "uniform")
    else:
        sel = _env_callable(core, env)

    ep = np.arange(n, dtype=np.int64)
    comp = _categorical(imp.weights.copy(), uniforms(seed, ep, 0, 0))
    node = np.zeros(n, dtype=np.int64)
    state = np.array([imp.components[c].start() for c in comp], dtype=float)
    loglik = np.zeros(n)
    path = np.zeros(n, dtype=np.uint64)
    owner = core.owner
    step = 1
    alive = owner[node] != OWN_TERM
    while alive.any():
        idx = np.nonzero(alive)[0]
        keys = np.stack([comp[idx].astype(float), node[idx].astype(float), state[idx]], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(len(uniq) + 1))
        new_node = node.copy()
        new_state = state.copy()
        for g in range(len(uniq)):
            members = idx[order[bounds[g]:bounds[g + 1]]]
            ci, nd, s = int(uniq[g, 0]), int(uniq[g, 1]), float(uniq[g, 2])
            cpt = imp.components[ci]
            lo = int(core.node_ptr[nd])
            width = int(core.node_ptr[nd + 1]) - lo
            if owner[nd] == OWN_EGO:
                choices = cpt.decide(nd, s)
                if len(choices) > 1:
                    pick = _categorical(np.array([c.weight for c in choices]), uniforms(seed, ep[members], step, 1))
                else:
                    pick = np.zeros(len(members), dtype=np.int64)
                for k, ch in enumerate(choices):
                    sub = members[pick == k]
                    if len(sub) == 0:
                        continue
                    j = _categorical(ch.dist.copy(), uniforms(seed, ep[sub], step, 2))
                    loglik[sub] -= np.log(ch.dist[j])
                    for jj in np.unique(j):
                        _advance(core, cpt, lo + int(jj), ch.branch[int(jj)], sub[j == jj],
                                 seed, ep, step, new_node, new_state, path if record_paths else None)
            else:
                if worst is not None:
                    dist = np.zeros(width)
                    dist[worst.slot_index(ci, nd, s)] = 1.0
                else:
                    dist = np.asarray(sel(nd, s), dtype=float)
                j = _categorical(dist.copy(), uniforms(seed, ep[members], step, 2))
                for jj in np.unique(j):
                    slot = lo + int(jj)
                    _advance(core, cpt, slot, cpt.env_branch(nd, s, slot), members[j == jj],
                             seed, ep, step, new_node, new_state, path if record_paths else None)
        node, state = new_node, new_state
        alive = owner[node] != OWN_TERM
        step += 1
    wins = node == core.top
    succ = int(wins.sum())
    paths = None
    if record_paths:
        vals, counts = np.unique(path, return_counts=True)
        paths = {int(v): int(c) for v, c in zip(vals, counts)}
    return SimulationReport(
        episodes=n, p_hat=succ / n, p_interval=wilson_interval(succ, n),
        h_hat=float(loglik.mean()), h_stderr=float(loglik.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        env=name, paths=paths,
    )


def _advance(core, comp, slot, bs, members, seed, ep, step, new_node, new_state, path=None):
    succ, prob = core.successors(slot)
    states = comp.split(slot, bs)
    if len(succ) == 1:
        k = np.zeros(len(members), dtype=np.int64)
    else:
        k = _categorical(np.asarray(prob, dtype=float), uniforms(seed, ep[members], step, 3))
    new_node[members] = np.asarray(succ)[k]
    new_state[members] = np.asarray(states, dtype=float)[k]
    if path is not None:
        # path identity: chosen action slot and chance outcome at every half-step
        big = np.uint64(1000003)
        with np.errstate(over="ignore"):
            path[members] = (path[members] * big + np.uint64(slot + 1)) * big + new_node[members].astype(np.uint64)


def simulate_all_env_policies(core: CoreSG, imp, n: int = 10000, seed: int = 0, cap: int = 4096) -> SimulationReport:
    """Simulate against every deterministic env policy; the report holds the worst entry."""
    from .oracle import enumerate_env_policies
    imp = as_improviser(imp)
    reports = {}
    for i, pol in enumerate(enumerate_env_policies(core, cap)):
        reports[str(i)] = simulate(core, imp, pol, n, seed)
    worst_p = min(reports.values(), key=lambda r: r.p_hat)
    worst_h = min(reports.values(), key=lambda r: r.h_hat)
    return SimulationReport(n, worst_p.p_hat, worst_p.p_interval, worst_h.h_hat, worst_h.h_stderr,
                            "all", breakdown=reports)
