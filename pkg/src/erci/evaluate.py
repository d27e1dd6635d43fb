"""Exact evaluation of performance, causal entropy and guaranteed points."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from . import kernels
from .preprocess import OWN_EGO, OWN_ENV, CoreSG

POLICY_TOL = 1e-9


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    p: float
    h: float

    def __iter__(self):
        yield self.p
        yield self.h


def is_below(x: Point, y: Point) -> bool:
    """``x`` is below ``y`` in the product order (``x <= y`` componentwise)."""
    return x.p <= y.p and x.h <= y.h


def mix_points(x: Point, y: Point, w: float) -> Point:
    return Point(w * x.p + (1 - w) * y.p, w * x.h + (1 - w) * y.h)


@dataclass(eq=False)
class MarkovPolicy:
    """Node-indexed action distributions stored per action slot of ``core``.

    Only the slots of nodes owned by ``player`` are meaningful.
    """

    core: CoreSG
    probs: np.ndarray
    player: int = OWN_EGO

    def dist(self, n: int) -> dict:
        return {self.core.slot_action[a]: float(self.probs[a]) for a in self.core.slots(n)}

    def check(self, tol: float = POLICY_TOL) -> None:
        core = self.core
        nodes = core.ego_nodes if self.player == OWN_EGO else core.env_nodes
        if np.any(self.probs < -tol):
            raise PolicyError("negative probability")
        for n in nodes:
            s = self.probs[core.node_ptr[n]:core.node_ptr[n + 1]].sum()
            if abs(s - 1) > tol:
                raise PolicyError(f"distribution at node {n} sums to {s}")

    def is_deterministic(self) -> bool:
        nodes = self.core.ego_nodes if self.player == OWN_EGO else self.core.env_nodes
        mask = np.isin(self.core.slot_node, nodes)
        vals = self.probs[mask]
        return bool(np.all((vals < 1e-15) | (vals > 1 - 1e-15)))


def uniform_policy(core: CoreSG, player: int = OWN_EGO) -> MarkovPolicy:
    probs = 1.0 / core.n_actions[core.slot_node].astype(float)
    return MarkovPolicy(core, probs, player)


def policy_from_dict(core: CoreSG, d: Mapping[int, Mapping], player: int = OWN_EGO,
                     default_uniform: bool = True) -> MarkovPolicy:
    """Build a policy from ``{node: {action: prob}}``; other nodes are uniform."""
    pol = uniform_policy(core, player) if default_uniform else MarkovPolicy(core, np.zeros(core.n_slots), player)
    for n, dist in d.items():
        for a in core.slots(n):
            pol.probs[a] = 0.0
        for act, q in dist.items():
            pol.probs[core.slot_of(n, act)] = q
    return pol


def deterministic_policy(core: CoreSG, choice: Mapping[int, object], player: int = OWN_ENV) -> MarkovPolicy:
    """``choice`` maps nodes to an action; unlisted nodes take their first action."""
    probs = np.zeros(core.n_slots)
    nodes = core.env_nodes if player == OWN_ENV else core.ego_nodes
    for n in nodes:
        act = choice.get(int(n))
        slot = core.node_ptr[n] if act is None else core.slot_of(n, act)
        probs[slot] = 1.0
    return MarkovPolicy(core, probs, player)


def sole_env_policy(core: CoreSG) -> MarkovPolicy:
    if not core.is_mdp:
        raise PolicyError("env has choices; an env policy is required")
    return deterministic_policy(core, {}, OWN_ENV)


def joint_probs(core: CoreSG, ego, env) -> np.ndarray:
    ego_p = ego.probs if isinstance(ego, MarkovPolicy) else np.asarray(ego, dtype=float)
    if env is None:
        env = sole_env_policy(core)
    env_p = env.probs if isinstance(env, MarkovPolicy) else np.asarray(env, dtype=float)
    is_env = core.owner[core.slot_node] == OWN_ENV
    return np.where(is_env, env_p, ego_p)


def node_values(core: CoreSG, ego, env=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-node (performance, causal entropy) under the joint policy."""
    pol = joint_probs(core, ego, env)
    return kernels.evaluate(*core.arrays(), pol, core.top)


def evaluate(core: CoreSG, ego, env=None) -> Point:
    p, h = node_values(core, ego, env)
    return Point(float(p[0]), float(h[0]))


def performance(core: CoreSG, ego, env=None) -> float:
    return evaluate(core, ego, env).p


def causal_entropy(core: CoreSG, ego, env=None) -> float:
    """Causal entropy of ego's actions in nats."""
    return evaluate(core, ego, env).h


@dataclass(frozen=True, eq=False)
class Guarantee:
    point: Point
    env_p: MarkovPolicy
    env_h: MarkovPolicy


def guaranteed_point(core: CoreSG, ego) -> Guarantee:
    """Worst-case performance and worst-case entropy, minimized independently."""
    probs = ego.probs if isinstance(ego, MarkovPolicy) else np.asarray(ego, dtype=float)
    vp, env_p = kernels.min_pass(*core.arrays(), probs, core.top, 0)
    vh, env_h = kernels.min_pass(*core.arrays(), probs, core.top, 1)
    return Guarantee(
        Point(float(vp[0]), float(vh[0])),
        MarkovPolicy(core, env_p, OWN_ENV),
        MarkovPolicy(core, env_h, OWN_ENV),
    )


def reach_probabilities(core: CoreSG, ego, env=None) -> np.ndarray:
    """Probability of visiting each node under the joint policy."""
    pol = joint_probs(core, ego, env)
    reach = np.zeros(core.n_nodes)
    reach[0] = 1.0
    for n in range(core.n_nodes):
        if reach[n] == 0.0:
            continue
        for a in core.slots(n):
            succ, prob = core.successors(a)
            np.add.at(reach, succ, reach[n] * pol[a] * prob)
    return reach


# -- JSON -----------------------------------------------------------------------

def policy_to_dict(pol: MarkovPolicy) -> dict:
    core = pol.core
    nodes = core.ego_nodes if pol.player == OWN_EGO else core.env_nodes
    return {
        "player": "ego" if pol.player == OWN_EGO else "env",
        "nodes": [
            {"id": core.label(int(n)),
             "dist": [{"action": core.slot_action[a], "prob": float(pol.probs[a])} for a in core.slots(int(n))]}
            for n in nodes
        ],
    }


def policy_from_json_dict(core: CoreSG, d: Mapping) -> MarkovPolicy:
    player = OWN_ENV if d.get("player") == "env" else OWN_EGO
    index = {core.label(n): n for n in range(core.n_nodes)}
    probs = np.zeros(core.n_slots)
    for entry in d["nodes"]:
        n = index[entry["id"]]
        for e in entry["dist"]:
            probs[core.slot_of(n, e["action"])] = float(e["prob"])
    return MarkovPolicy(core, probs, player)


def save_policy(pol: MarkovPolicy, path) -> None:
    with open(path, "w") as fh:
        json.dump(policy_to_dict(pol), fh, indent=1)


def load_policy(core: CoreSG, path) -> MarkovPolicy:
    with open(path) as fh:
        return policy_from_json_dict(core, json.load(fh))
