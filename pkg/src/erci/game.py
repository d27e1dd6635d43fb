"""Stochastic games with ego/env ownership and chance folded into transitions."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

EGO = "ego"
ENV = "env"
OWNERS = (EGO, ENV)

DIST_TOL = 1e-12

Prob = Union[Fraction, float]


class GameError(ValueError):
    pass


class UnknownAction(GameError):
    pass


@dataclass(frozen=True)
class Issue:
    code: str
    where: str
    message: str


@dataclass
class ValidationReport:
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [e.code for e in self.errors]


@dataclass(frozen=True)
class StochasticGame:
    """A finite turn-based game ``<S, iota, A, P>``.

    ``trans`` maps ``(state, action)`` to a distribution over successor states.
    States without any outgoing action are terminal. ``origin`` maps states
    inserted by :func:`normalize_alternation` to the state they feed into.
    """

    states: tuple[str, ...]
    owner: Mapping[str, str]
    initial: str
    actions: tuple[str, ...]
    trans: Mapping[tuple[str, str], Mapping[str, Prob]]
    origin: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        enabled: dict[str, list[str]] = {s: [] for s in self.states}
        for (s, a) in self.trans:
            enabled.setdefault(s, []).append(a)
        order = {a: i for i, a in enumerate(self.actions)}
        object.__setattr__(
            self, "_enabled",
            {s: tuple(sorted(acts, key=lambda a: order.get(a, len(order)))) for s, acts in enabled.items()},
        )

    def enabled(self, s: str) -> tuple[str, ...]:
        return self._enabled.get(s, ())

    def is_terminal(self, s: str) -> bool:
        return not self.enabled(s)

    @property
    def passthrough(self) -> frozenset[str]:
        return frozenset(self.origin)

    def successors(self, s: str, a: str) -> dict[str, Prob]:
        return successors(self, s, a)


def successors(game: StochasticGame, s: str, a: str) -> dict[str, Prob]:
    """Distribution reached from ``s`` under ``a``; only positive-probability entries."""
    if (s, a) not in game.trans:
        raise UnknownAction(f"action {a!r} is not enabled in state {s!r}")
    return {t: p for t, p in game.trans[(s, a)].items() if p > 0}


def _dist_sum_ok(dist: Mapping[str, Prob]) -> bool:
    vals = list(dist.values())
    if vals and all(isinstance(v, (Fraction, int)) for v in vals):
        return sum(vals) == 1
    return abs(sum(float(v) for v in vals) - 1.0) <= DIST_TOL


def reachable(game: StochasticGame) -> set[str]:
    seen = {game.initial}
    stack = [game.initial]
    while stack:
        s = stack.pop()
        for a in game.enabled(s):
            for t, p in game.trans[(s, a)].items():
                if p > 0 and t not in seen and t in game.owner:
                    seen.add(t)
                    stack.append(t)
    return seen


def validate_game(game: StochasticGame) -> ValidationReport:
    """Collect every structural problem of ``game``, ordered by state then action."""
    rep = ValidationReport()
    known = set(game.states)
    if len(known) != len(game.states):
        rep.errors.append(Issue("DUP_STATE", "", "state ids are not unique"))
    if game.initial not in known:
        rep.errors.append(Issue("INIT_UNKNOWN", game.initial, "initial state is not a state"))
    elif game.owner.get(game.initial) != EGO:
        rep.errors.append(Issue("INIT_OWNER", game.initial, "initial state must be ego-owned"))

    actions = set(game.actions)
    for s in game.states:
        own = game.owner.get(s)
        if own not in OWNERS:
            rep.errors.append(Issue("BAD_OWNER", s, f"owner {own!r} is not ego/env"))
        for a in game.enabled(s):
            where = f"{s}/{a}"
            if a not in actions:
                rep.errors.append(Issue("UNKNOWN_ACTION", where, "action not in alphabet"))
            dist = game.trans[(s, a)]
            if not any(p > 0 for p in dist.values()):
                rep.errors.append(Issue("EMPTY_DIST", where, "distribution has empty support"))
                continue
            if any(p < 0 for p in dist.values()):
                rep.errors.append(Issue("NEG_PROB", where, "negative probability"))
            if not _dist_sum_ok(dist):
                total = sum(float(v) for v in dist.values())
                rep.errors.append(Issue("DIST_SUM", where, f"probabilities sum to {total!r}"))
            for t, p in sorted(dist.items()):
                if t not in known:
                    rep.errors.append(Issue("UNKNOWN_SUCC", where, f"successor {t!r} is not a state"))
                elif p > 0 and own in OWNERS and not game.is_terminal(t) and game.owner.get(t) == own:
                    rep.errors.append(
                        Issue("ALTERNATION", where, f"{own} state leads to {own} state {t!r}")
                    )
    for (s, a) in game.trans:
        if s not in known:
            rep.errors.append(Issue("UNKNOWN_STATE", f"{s}/{a}", "transition from unknown state"))

    if game.initial in known:
        live = reachable(game)
        for s in game.states:
            if s not in live:
                rep.warnings.append(Issue("UNREACHABLE", s, "state is unreachable from the initial state"))

    key = lambda i: (i.where, i.code)
    rep.errors.sort(key=key)
    rep.warnings.sort(key=key)
    return rep


def prune_unreachable(game: StochasticGame) -> StochasticGame:
    live = reachable(game)
    if len(live) == len(game.states):
        return game
    return StochasticGame(
        states=tuple(s for s in game.states if s in live),
        owner={s: o for s, o in game.owner.items() if s in live},
        initial=game.initial,
        actions=game.actions,
        trans={k: v for k, v in game.trans.items() if k[0] in live},
        origin={s: o for s, o in game.origin.items() if s in live},
    )


PASS = "pass"


def normalize_alternation(game: StochasticGame) -> StochasticGame:
    """Make ego and env states strictly alternate.

    Every edge ``s -> t`` between two non-terminal states of the same owner is
    rerouted through a fresh single-action state of the other owner that moves
    to ``t`` with probability one. One pass-through is shared per target.
    """
    fresh: dict[str, str] = {}
    trans: dict[tuple[str, str], dict[str, Prob]] = {}
    for (s, a), dist in game.trans.items():
        own = game.owner[s]
        new = {}
        for t, p in dist.items():
            if p > 0 and not game.is_terminal(t) and game.owner.get(t) == own:
                via = fresh.get(t)
                if via is None:
                    via = f"{t}^{ENV if own == EGO else EGO}"
                    while via in game.owner:
                        via += "'"
                    fresh[t] = via
                new[via] = new.get(via, 0) + p
            else:
                new[t] = new.get(t, 0) + p
        trans[(s, a)] = new
    if not fresh:
        return game
    owner = dict(game.owner)
    origin = dict(game.origin)
    states = list(game.states)
    for t, via in fresh.items():
        owner[via] = EGO if game.owner[t] == ENV else ENV
        origin[via] = t
        states.append(via)
        trans[(via, PASS)] = {t: Fraction(1)}
    actions = game.actions if PASS in game.actions else game.actions + (PASS,)
    return StochasticGame(tuple(states), owner, game.initial, actions, trans, origin)


# -- JSON ---------------------------------------------------------------------

def _parse_prob(entry: Mapping) -> Prob:
    if "prob_num" in entry:
        return Fraction(int(entry["prob_num"]), int(entry["prob_den"]))
    return float(entry["prob"])


def game_from_dict(d: Mapping) -> StochasticGame:
    states = tuple(str(s["id"]) for s in d["states"])
    owner = {str(s["id"]): s["owner"] for s in d["states"]}
    trans: dict[tuple[str, str], dict[str, Prob]] = {}
    for tr in d["transitions"]:
        dist: dict[str, Prob] = {}
        for e in tr["to"]:
            dist[str(e["state"])] = dist.get(str(e["state"]), 0) + _parse_prob(e)
        trans[(str(tr["from"]), str(tr["action"]))] = dist
    actions = tuple(d.get("actions") or sorted({a for _, a in trans}))
    origin = {str(k): str(v) for k, v in d.get("origin", {}).items()}
    return StochasticGame(states, owner, str(d["initial"]), actions, trans, origin)


def _prob_entry(t: str, p: Prob) -> dict:
    if isinstance(p, Fraction):
        return {"state": t, "prob_num": p.numerator, "prob_den": p.denominator}
    if isinstance(p, int):
        return {"state": t, "prob_num": p, "prob_den": 1}
    return {"state": t, "prob": p}


def game_to_dict(game: StochasticGame) -> dict:
    out = {
        "states": [{"id": s, "owner": game.owner[s]} for s in game.states],
        "initial": game.initial,
        "actions": list(game.actions),
        "transitions": [
            {"from": s, "action": a, "to": [_prob_entry(t, p) for t, p in dist.items()]}
            for (s, a), dist in game.trans.items()
        ],
    }
    if game.origin:
        out["origin"] = dict(game.origin)
    return out


def load_game(path) -> StochasticGame:
    with open(path) as fh:
        return game_from_dict(json.load(fh))


def save_game(game: StochasticGame, path) -> None:
    with open(path, "w") as fh:
        json.dump(game_to_dict(game), fh, indent=1)
