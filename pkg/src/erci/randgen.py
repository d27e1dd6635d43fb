"""Random acyclic games and cores for property tests and benchmarks."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .game import StochasticGame
from .preprocess import CoreSG, build_core


def _dist(rng: np.random.Generator, targets: list, chance: float) -> list:
    if len(targets) > 1 and rng.random() < chance:
        picks = rng.choice(len(targets), size=2, replace=False)
        w = float(rng.integers(1, 10)) / 10.0
        return [(targets[picks[0]], w), (targets[picks[1]], 1.0 - w)]
    return [(targets[int(rng.integers(len(targets)))], 1.0)]


def random_layers(rng: np.random.Generator, max_nodes: int = 60, depth: Optional[int] = None,
                  max_width: int = 3, max_ego_actions: int = 3, max_env_actions: int = 2,
                  max_env_choices: Optional[int] = None, chance: float = 0.4, terminal_rate: float = 0.2):
    """Layered alternating DAG as ``(owner, edges, top, bot)`` with ego on even layers."""
    depth = depth if depth is not None else int(rng.integers(2, 7))
    layers = [[0]]
    owner = ["ego"]
    for d in range(1, depth):
        width = int(rng.integers(1, max_width + 1))
        if len(owner) + width > max_nodes - 2:
            break
        ids = list(range(len(owner), len(owner) + width))
        owner += ["ego" if d % 2 == 0 else "env"] * width
        layers.append(ids)
    top, bot = len(owner), len(owner) + 1
    owner += ["terminal", "terminal"]
    edges: list = [[] for _ in owner]
    env_choices = 0
    for d, ids in enumerate(layers):
        nxt = layers[d + 1] if d + 1 < len(layers) else []
        for u in ids:
            if owner[u] == "ego":
                k = int(rng.integers(1, max_ego_actions + 1))
            else:
                k = int(rng.integers(1, max_env_actions + 1))
                if k > 1:
                    if max_env_choices is not None and env_choices >= max_env_choices:
                        k = 1
                    else:
                        env_choices += 1
            for i in range(k):
                if not nxt or rng.random() < terminal_rate:
                    targets = [top, bot]
                else:
                    targets = list(nxt) + ([top, bot] if rng.random() < terminal_rate else [])
                edges[u].append((f"a{i}", _dist(rng, targets, chance)))
    return owner, edges, top, bot


def random_core(rng: np.random.Generator, mdp: bool = False, **kw) -> CoreSG:
    if mdp:
        kw["max_env_actions"] = 1
    owner, edges, top, bot = random_layers(rng, **kw)
    return build_core(owner, edges, top, bot)


def random_mdp(rng: np.random.Generator, **kw) -> CoreSG:
    return random_core(rng, mdp=True, **kw)


def random_game(rng: np.random.Generator, **kw) -> StochasticGame:
    """The same layered structure as a named-state game with terminals ``top`` and ``bot``."""
    owner, edges, top, bot = random_layers(rng, **kw)
    names = [f"s{i}" for i in range(len(owner))]
    names[top], names[bot] = "top", "bot"
    own = {names[i]: ("env" if o == "terminal" else o) for i, o in enumerate(owner)}
    trans = {}
    acts = set()
    for u, outs in enumerate(edges):
        for a, dist in outs:
            d: dict = {}
            for v, p in dist:
                d[names[v]] = d.get(names[v], 0.0) + p
            trans[(names[u], a)] = d
            acts.add(a)
    return StochasticGame(tuple(names), own, names[0], tuple(sorted(acts)), trans)
