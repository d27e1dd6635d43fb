"""Realizability verdicts and target handling shared by both solvers."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .evaluate import Point

REALIZABLE = "realizable"
UNREALIZABLE = "unrealizable"
UNKNOWN = "unknown"
EXIT_CODES = {REALIZABLE: 0, UNREALIZABLE: 2, UNKNOWN: 3}
WITNESS_TOL = 1e-12


class InvalidTarget(ValueError):
    pass


@dataclass(frozen=True)
class Endpoints:
    """Front extremes: max-entropy point (p_low, h_max) and max-performance point (p_max, h_low)."""

    p_low: float
    h_max: float
    p_max: float
    h_low: float


def resolve_target(target=None, regret=None, ends: Optional[Endpoints] = None) -> tuple[Point, Optional[tuple]]:
    """Absolute target from a point ``(p, h)`` or a regret pair ``(eps, delta)``."""
    if (target is None) == (regret is None):
        raise InvalidTarget("give exactly one of a point target or a regret target")
    if regret is not None:
        eps, dlt = (float(x) for x in regret)
        if not (0.0 <= eps <= 1.0 and 0.0 <= dlt <= 1.0):
            raise InvalidTarget("regret parameters must lie in [0, 1]")
        p = eps * (ends.p_max - ends.p_low) + ends.p_low
        h = dlt * (ends.h_max - ends.h_low) + ends.h_low
        return Point(p, h), (eps, dlt)
    p, h = (float(x) for x in target)
    if not 0.0 <= p <= 1.0 or h < 0.0 or math.isnan(h):
        raise InvalidTarget(f"target ({p}, {h}) outside [0,1] x [0,inf)")
    return Point(p, h), None


def _enc(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
    if isinstance(x, (list, tuple)):
        return [_enc(v) for v in x]
    if isinstance(x, dict):
        return {k: _enc(v) for k, v in x.items()}
    return x


def _dec(x):
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if isinstance(x, list):
        return [_dec(v) for v in x]
    if isinstance(x, dict):
        return {k: _dec(v) for k, v in x.items()}
    return x


@dataclass(eq=False)
class Verdict:
    """Outcome of a realizability query.

    ``witness["kind"]`` is ``point`` or ``pair`` for realizable targets,
    ``scalarization`` for unrealizable ones (``weights`` ``(w_p, w_h)`` with
    ``w_p * p + w_h * h < w_p * p_target + w_h * h_target`` at the witness
    point) and ``bracket`` for unknown ones.
    """

    status: str
    target: Point
    witness: dict
    improviser: object = None
    front: list = field(default_factory=list)
    solver: str = "mdp"
    info: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    @property
    def realizable(self) -> bool:
        return self.status == REALIZABLE

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "solver": self.solver,
            "target": {"p": self.target.p, "h": self.target.h},
            "witness": _enc(self.witness),
            "front": [{"lambda": _enc(float(l)), "p": p, "h": h} for l, p, h in self.front],
            "info": _enc(self.info),
        }
        if self.improviser is not None:
            d["improviser"] = self.improviser.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(
            status=d["status"],
            target=Point(float(d["target"]["p"]), float(d["target"]["h"])),
            witness=_dec(d["witness"]),
            improviser=None,
            front=[(_dec(e["lambda"]), e["p"], e["h"]) for e in d.get("front", [])],
            solver=d.get("solver", "mdp"),
            info=_dec(d.get("info", {})),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def load_verdict(path) -> Verdict:
    with open(path) as fh:
        return Verdict.from_dict(json.load(fh))
