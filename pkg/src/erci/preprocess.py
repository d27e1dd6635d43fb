"""Unrolling, hard-constraint pruning and the resulting core game.

The core game is an explicit, topologically numbered node graph stored in
compressed-row form so that backward passes are plain index sweeps:
node ``n`` owns action slots ``node_ptr[n]:node_ptr[n+1]`` and slot ``a``
owns successor entries ``slot_ptr[a]:slot_ptr[a+1]``. Every edge goes from a
smaller to a larger node index; the two terminals ``top`` and ``bot`` are the
last two nodes.
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from .game import EGO, ENV, StochasticGame, normalize_alternation, prune_unreachable, validate_game, GameError
from .monitor import ACCEPT, Monitor, classify, monitor_step, reach_monitor, trivial_monitor

log = logging.getLogger(__name__)

OWN_EGO, OWN_ENV, OWN_TERM = 0, 1, 2
_OWN_CODE = {EGO: OWN_EGO, ENV: OWN_ENV}
TOP, BOT = "top", "bot"


class HorizonZero(ValueError):
    pass


class UnrealizableHard(Exception):
    """The environment can force a violation of the hard constraint from the start."""

    def __init__(self, losing: int = 0):
        super().__init__(f"hard constraint cannot be guaranteed ({losing} losing nodes)")
        self.losing = losing


class NotAcyclic(ValueError):
    pass


@dataclass(eq=False)
class CoreSG:
    owner: np.ndarray
    node_ptr: np.ndarray
    slot_action: list
    slot_ptr: np.ndarray
    succ: np.ndarray
    prob: np.ndarray
    top: int
    bot: int
    provenance: list = field(default_factory=list)

    initial = 0

    @property
    def n_nodes(self) -> int:
        return len(self.owner)

    @property
    def n_slots(self) -> int:
        return len(self.slot_action)

    @cached_property
    def slot_node(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_nodes), np.diff(self.node_ptr))

    def slots(self, n: int) -> range:
        return range(int(self.node_ptr[n]), int(self.node_ptr[n + 1]))

    def successors(self, slot: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.slot_ptr[slot], self.slot_ptr[slot + 1]
        return self.succ[lo:hi], self.prob[lo:hi]

    def actions(self, n: int) -> list:
        return [self.slot_action[a] for a in self.slots(n)]

    def slot_of(self, n: int, action) -> int:
        for a in self.slots(n):
            if self.slot_action[a] == action:
                return a
        raise KeyError(f"action {action!r} not enabled at node {n}")

    def is_terminal(self, n: int) -> bool:
        return self.owner[n] == OWN_TERM

    @cached_property
    def ego_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.owner == OWN_EGO)

    @cached_property
    def env_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.owner == OWN_ENV)

    @cached_property
    def n_actions(self) -> np.ndarray:
        return np.diff(self.node_ptr)

    @property
    def is_mdp(self) -> bool:
        return bool(np.all(self.n_actions[self.env_nodes] == 1))

    @cached_property
    def longest_path(self) -> int:
        dist = np.zeros(self.n_nodes, dtype=np.int64)
        for n in range(self.n_nodes - 1, -1, -1):
            best = 0
            for a in self.slots(n):
                succ, _ = self.successors(a)
                if len(succ):
                    best = max(best, 1 + int(dist[succ].max()))
            dist[n] = best
        return int(dist[0])

    @cached_property
    def decision_depth(self) -> int:
        """Largest number of ego decision nodes met along a single path."""
        cnt = np.zeros(self.n_nodes, dtype=np.int64)
        for n in range(self.n_nodes - 1, -1, -1):
            best = 0
            for a in self.slots(n):
                succ, _ = self.successors(a)
                if len(succ):
                    best = max(best, int(cnt[succ].max()))
            cnt[n] = best + (1 if self.owner[n] == OWN_EGO and self.n_actions[n] > 1 else 0)
        return max(int(cnt[0]), 1)

    def label(self, n: int) -> str:
        if n == self.top:
            return TOP
        if n == self.bot:
            return BOT
        return f"n{n}"

    def arrays(self):
        return self.owner, self.node_ptr, self.slot_ptr, self.succ, self.prob


def build_core(owner: Sequence[str], edges: Sequence[Sequence[tuple]], top: int, bot: int,
               initial: int = 0, provenance: Optional[Sequence] = None) -> CoreSG:
    """Assemble a :class:`CoreSG` from an arbitrary acyclic node list.

    ``owner[i]`` is ``"ego"``, ``"env"`` or ``"terminal"``; ``edges[i]`` is a
    list of ``(action, [(succ, prob), ...])``. Nodes unreachable from
    ``initial`` are dropped (the two terminals are always kept) and the rest
    renumbered topologically with ``top``/``bot`` last.
    """
    n = len(owner)
    live = {initial}
    stack = [initial]
    while stack:
        u = stack.pop()
        for _, dist in edges[u]:
            for v, p in dist:
                if p > 0 and v not in live:
                    live.add(v)
                    stack.append(v)
    live.discard(top)
    live.discard(bot)
    indeg = {u: 0 for u in live}
    for u in live:
        for _, dist in edges[u]:
            for v, p in dist:
                if p > 0 and v in indeg:
                    indeg[v] += 1
    queue = deque(u for u in sorted(live) if indeg[u] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for _, dist in edges[u]:
            for v, p in dist:
                if p > 0 and v in indeg:
                    indeg[v] -= 1
                    if indeg[v] == 0:
                        queue.append(v)
    if len(order) != len(live):
        raise NotAcyclic("node graph contains a cycle")
    if order and order[0] != initial:
        raise NotAcyclic("initial node has incoming edges")
    order += [top, bot]
    index = {u: i for i, u in enumerate(order)}

    own = np.empty(len(order), dtype=np.int8)
    node_ptr = [0]
    slot_action: list = []
    slot_ptr = [0]
    succ: list[int] = []
    prob: list[float] = []
    for u in order:
        o = owner[u]
        acts = [] if u in (top, bot) else edges[u]
        own[index[u]] = OWN_TERM if (not acts or o == "terminal") else _OWN_CODE[o]
        for act, dist in acts:
            merged: dict[int, float] = {}
            for v, p in dist:
                if p > 0:
                    merged[index[v]] = merged.get(index[v], 0.0) + float(p)
            for v in sorted(merged):
                succ.append(v)
                prob.append(merged[v])
            slot_action.append(act)
            slot_ptr.append(len(succ))
        node_ptr.append(len(slot_action))
    prov = [provenance[u] if provenance is not None else u for u in order]
    return CoreSG(
        owner=own,
        node_ptr=np.asarray(node_ptr, dtype=np.int64),
        slot_action=slot_action,
        slot_ptr=np.asarray(slot_ptr, dtype=np.int64),
        succ=np.asarray(succ, dtype=np.int64),
        prob=np.asarray(prob, dtype=np.float64),
        top=index[top],
        bot=index[bot],
        provenance=prov,
    )


# -- unrolling ------------------------------------------------------------------

Key = tuple  # (state, hard mstate, soft mstate, depth)


@dataclass
class Unrolled:
    root: Key
    owner: dict
    edges: dict
    leaves: dict  # key -> (hard accepts, soft accepts)
    horizon: int

    @property
    def keys(self) -> list:
        return sorted(self.owner, key=lambda k: k[3])

    def __len__(self):
        return len(self.owner)


def unroll(game: StochasticGame, hard: Monitor, soft: Monitor, horizon: int) -> Unrolled:
    """Product of ``game`` with both monitors, cut after ``horizon`` logical steps.

    A logical step is one ego move plus one env move, so the node depth counts
    half-steps and runs up to ``2 * horizon``. Pass-through states inserted by
    alternation normalization are invisible to the monitors.
    """
    if horizon < 1:
        raise HorizonZero("horizon must be at least one logical step")
    cut = 2 * horizon
    hidden = game.passthrough
    s0 = game.initial
    root = (s0, monitor_step(hard, hard.init, s0), monitor_step(soft, soft.init, s0), 0)
    owner = {root: game.owner[s0]}
    edges: dict = {}
    leaves: dict = {}
    queue = deque([root])
    while queue:
        key = queue.popleft()
        s, qh, qs, d = key
        if game.is_terminal(s) or d >= cut:
            leaves[key] = (classify(hard, qh) == ACCEPT, classify(soft, qs) == ACCEPT)
            continue
        out = []
        for a in game.enabled(s):
            dist = []
            for t, p in game.trans[(s, a)].items():
                if p <= 0:
                    continue
                if t in hidden:
                    child = (t, qh, qs, d + 1)
                else:
                    child = (t, monitor_step(hard, qh, t), monitor_step(soft, qs, t), d + 1)
                if child not in owner:
                    owner[child] = game.owner[t]
                    queue.append(child)
                dist.append((child, p))
            out.append((a, dist))
        edges[key] = out
    return Unrolled(root, owner, edges, leaves, horizon)


def losing_nodes(g: Unrolled) -> set:
    """Nodes from which env can force a hard-rejecting leaf with positive probability."""
    losing = set()
    for key in sorted(g.owner, key=lambda k: -k[3]):
        if key in g.leaves:
            if not g.leaves[key][0]:
                losing.add(key)
            continue
        bad = [any(c in losing for c, _ in dist) for _, dist in g.edges[key]]
        if (g.owner[key] == ENV and any(bad)) or (g.owner[key] == EGO and all(bad)):
            losing.add(key)
    return losing


def prune_hard(g: Unrolled) -> CoreSG:
    """Remove losing nodes and ego actions touching them, then merge leaves into top/bot."""
    losing = losing_nodes(g)
    if g.root in losing:
        raise UnrealizableHard(len(losing))
    keys = [k for k in g.keys if k not in losing]
    index = {k: i for i, k in enumerate(keys)}
    top, bot = len(keys), len(keys) + 1
    owner = []
    edges = []
    for k in keys:
        if k in g.leaves:
            owner.append("terminal")
            edges.append([])
            continue
        owner.append(g.owner[k])
        kept = []
        for a, dist in g.edges[k]:
            if any(c in losing for c, _ in dist):
                continue
            tgt = []
            for c, p in dist:
                if c in g.leaves:
                    tgt.append((top if g.leaves[c][1] else bot, p))
                else:
                    tgt.append((index[c], p))
            kept.append((a, tgt))
        edges.append(kept)
    owner += ["terminal", "terminal"]
    edges += [[], []]
    prov = [{"state": k[0], "hard": k[1], "soft": k[2], "depth": k[3]} for k in keys]
    prov += [{"state": TOP}, {"state": BOT}]
    if g.root in g.leaves:
        # Degenerate: the initial state is itself terminal.
        owner[index[g.root]] = EGO
        edges[index[g.root]] = [("stay", [(top if g.leaves[g.root][1] else bot, 1.0)])]
    log.debug("pruned %d losing nodes of %d", len(losing), len(g))
    return build_core(owner, edges, top, bot, initial=index[g.root], provenance=prov)


def to_core(game: StochasticGame, soft: Optional[Monitor] = None, hard: Optional[Monitor] = None,
            horizon: Optional[int] = None) -> CoreSG:
    """Validate, normalize, unroll and prune ``game`` into a core game."""
    game = normalize_alternation(game)
    report = validate_game(game)
    if not report.ok:
        raise GameError("; ".join(f"{e.code}@{e.where}" for e in report.errors))
    game = prune_unreachable(game)
    soft = soft if soft is not None else reach_monitor([TOP])
    hard = hard if hard is not None else trivial_monitor()
    horizon = horizon if horizon is not None else len(game.states)
    return prune_hard(unroll(game, hard, soft, horizon))


def core_stats(core: CoreSG) -> dict:
    live = np.zeros(core.n_nodes, dtype=bool)
    live[0] = True
    for n in range(core.n_nodes):
        if live[n]:
            for a in core.slots(n):
                live[core.successors(a)[0]] = True
    n_edges = int(sum(len(core.successors(a)[0]) for a in range(core.n_slots)))
    return {
        "nodes": int(live.sum()),
        "actions": core.n_slots,
        "edges": n_edges,
        "longest_path": core.longest_path,
        "reaches_top": bool(live[core.top]),
        "reaches_bot": bool(live[core.bot]),
        "ego_nodes": len(core.ego_nodes),
        "env_nodes": len(core.env_nodes),
        "is_mdp": core.is_mdp,
    }


# -- JSON -----------------------------------------------------------------------

_OWN_NAME = {OWN_EGO: EGO, OWN_ENV: ENV, OWN_TERM: ENV}


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def core_to_dict(core: CoreSG) -> dict:
    states = [{"id": core.label(n), "owner": _OWN_NAME[int(core.owner[n])]} for n in range(core.n_nodes)]
    trans = []
    for n in range(core.n_nodes):
        for a in core.slots(n):
            succ, prob = core.successors(a)
            trans.append({
                "from": core.label(n),
                "action": core.slot_action[a],
                "to": [{"state": core.label(int(v)), "prob": float(p)} for v, p in zip(succ, prob)],
            })
    return {
        "states": states,
        "initial": core.label(0),
        "actions": sorted({str(a) for a in core.slot_action}),
        "transitions": trans,
        "provenance": {core.label(n): _jsonable(core.provenance[n]) for n in range(core.n_nodes)},
    }


def core_from_dict(d: Mapping) -> CoreSG:
    ids = [s["id"] for s in d["states"]]
    index = {s: i for i, s in enumerate(ids)}
    owner = [s["owner"] for s in d["states"]]
    edges: list[list] = [[] for _ in ids]
    for tr in d["transitions"]:
        dist = [(index[e["state"]], float(e["prob"]) if "prob" in e else e["prob_num"] / e["prob_den"])
                for e in tr["to"]]
        edges[index[tr["from"]]].append((tr["action"], dist))
    prov_map = d.get("provenance", {})
    prov = [prov_map.get(s, s) for s in ids]
    return build_core(owner, edges, index[TOP], index[BOT], initial=index[d["initial"]], provenance=prov)


def save_core(core: CoreSG, path) -> None:
    with open(path, "w") as fh:
        json.dump(core_to_dict(core), fh, indent=1)


def load_core(path) -> CoreSG:
    with open(path) as fh:
        return core_from_dict(json.load(fh))
