"""Deterministic finite monitors over observed game states."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional


class MonitorError(KeyError):
    pass


class UnknownMonitorState(MonitorError):
    pass


class UnknownGameState(MonitorError):
    pass


ACCEPT = "accept"
REJECT = "reject"


@dataclass(frozen=True)
class Monitor:
    """``step`` is the explicit transition table; unlisted pairs go to ``default``.

    ``default`` is either ``None`` (unlisted pairs are errors), a monitor state,
    or the sentinel ``"$self"`` which keeps the current monitor state.
    """

    mstates: tuple[Hashable, ...]
    init: Hashable
    accepting: frozenset
    step: Mapping[tuple[Hashable, str], Hashable] = field(default_factory=dict)
    default: Optional[Hashable] = None
    observations: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "_mset", frozenset(self.mstates))


SELF = "$self"


def monitor_step(m: Monitor, q, s: str):
    if q not in m._mset:
        raise UnknownMonitorState(q)
    if m.observations is not None and s not in m.observations:
        raise UnknownGameState(s)
    try:
        return m.step[(q, s)]
    except KeyError:
        if m.default is None:
            raise UnknownGameState(s) from None
        return q if m.default == SELF else m.default


def classify(m: Monitor, q) -> str:
    return ACCEPT if q in m.accepting else REJECT


def run(m: Monitor, path: Iterable[str]):
    q = m.init
    for s in path:
        q = monitor_step(m, q, s)
    return q


def trivial_monitor() -> Monitor:
    """Accepts every path."""
    return Monitor(mstates=("ok",), init="ok", accepting=frozenset({"ok"}), default=SELF)


def reach_monitor(targets: Iterable[str]) -> Monitor:
    """Accepts iff some observed state is in ``targets``."""
    targets = tuple(targets)
    step = {("seeking", t): "seen" for t in targets}
    return Monitor(
        mstates=("seeking", "seen"),
        init="seeking",
        accepting=frozenset({"seen"}),
        step=step,
        default=SELF,
    )


def monitor_to_dict(m: Monitor) -> dict:
    out = {
        "mstates": list(m.mstates),
        "init": m.init,
        "accepting": sorted(m.accepting, key=str),
        "delta": [{"from": q, "obs": s, "to": t} for (q, s), t in m.step.items()],
    }
    if m.default is not None:
        out["default"] = m.default
    if m.observations is not None:
        out["observations"] = sorted(m.observations)
    return out


def _key(x):
    return tuple(x) if isinstance(x, list) else x


def monitor_from_dict(d: Mapping) -> Monitor:
    obs = d.get("observations")
    return Monitor(
        mstates=tuple(_key(q) for q in d["mstates"]),
        init=_key(d["init"]),
        accepting=frozenset(_key(q) for q in d["accepting"]),
        step={(_key(e["from"]), str(e["obs"])): _key(e["to"]) for e in d["delta"]},
        default=_key(d.get("default")),
        observations=frozenset(obs) if obs is not None else None,
    )


def load_monitor(path) -> Monitor:
    with open(path) as fh:
        return monitor_from_dict(json.load(fh))


def save_monitor(m: Monitor, path) -> None:
    with open(path, "w") as fh:
        json.dump(monitor_to_dict(m), fh, indent=1)
