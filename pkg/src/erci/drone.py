"""Grid-world patrol benchmark: an ego drone visits four houses while a patrolling drone circles them."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .game import StochasticGame
from .monitor import SELF, Monitor, trivial_monitor

MOVES = {"stay": (0, 0), "north": (0, 1), "south": (0, -1), "east": (1, 0), "west": (-1, 0)}
CRASH = "crash"


class SpecInvalid(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkSpec:
    k: int = 4
    horizon: int = 6
    lo: float = 1 / 100
    hi: float = 1 / 50

    def validate(self) -> None:
        if self.k < 4:
            raise SpecInvalid("grid side must be at least 4")
        if self.horizon < 1:
            raise SpecInvalid("horizon must be at least 1")
        if not (1 / 100 - 1e-15 <= self.lo <= self.hi <= 1 / 50 + 1e-15):
            raise SpecInvalid("switch probabilities must satisfy 1/100 <= lo <= hi <= 1/50")

    @property
    def houses(self) -> list:
        a, b = self.k // 3, (2 * self.k) // 3
        return [(a, a), (a, b), (b, a), (b, b)]


@dataclass(frozen=True)
class Benchmark:
    game: StochasticGame
    soft: Monitor
    hard: Monitor
    spec: BenchmarkSpec
    mode: str


def patrol_loop(spec: BenchmarkSpec) -> list:
    """Cells of the square through the houses, counterclockwise (y up) from the top-right house."""
    a, b = spec.k // 3, (2 * spec.k) // 3
    loop = [(x, b) for x in range(b, a, -1)]        # top edge, heading west
    loop += [(a, y) for y in range(b, a, -1)]       # west edge, heading south
    loop += [(x, a) for x in range(a, b)]           # bottom edge, heading east
    loop += [(b, y) for y in range(a, b)]           # east edge, heading north
    return loop


def _frac(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10_000)


def gen_drone_benchmark(spec: BenchmarkSpec, mode: str = "point") -> Benchmark:
    """Build the patrol game and its monitors.

    Ego states are ``e:x,y:i:d`` and env states ``v:x,y:i:d`` where ``(x, y)``
    is the ego cell, ``i`` the patrol index and ``d`` the patrol direction.
    """
    spec.validate()
    if mode not in ("point", "interval"):
        raise SpecInvalid(f"unknown mode {mode!r}")
    k = spec.k
    loop = patrol_loop(spec)
    houses = spec.houses
    hidx = {c: i for i, c in enumerate(houses)}
    n = len(loop)
    lo, hi = _frac(spec.lo), _frac(spec.hi)

    def sid(kind, x, y, i, d):
        return f"{kind}:{x},{y}:{i}:{d}"

    states, owner, trans = [], {}, {}
    cells = [(x, y) for x in range(k) for y in range(k)]
    for (x, y) in cells:
        for i in range(n):
            for d in (1, -1):
                e, v = sid("e", x, y, i, d), sid("v", x, y, i, d)
                states += [e, v]
                owner[e], owner[v] = "ego", "env"
                for name, (dx, dy) in MOVES.items():
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < k and 0 <= ny < k:
                        trans[(e, name)] = {sid("v", nx, ny, i, d): Fraction(1)}
                j = (i + d) % n
                keep = sid("e", x, y, j, d)
                flip = sid("e", x, y, j, -d)
                if loop[j] in hidx:
                    if mode == "point":
                        trans[(v, "patrol")] = {keep: 1 - lo, flip: lo}
                    else:
                        trans[(v, "patrol_lo")] = {keep: 1 - lo, flip: lo}
                        trans[(v, "patrol_hi")] = {keep: 1 - hi, flip: hi}
                else:
                    trans[(v, "patrol")] = {keep: Fraction(1)}
    start_env = loop.index(houses[3])
    init = sid("e", 0, 0, start_env, 1)
    actions = tuple(MOVES) + (("patrol",) if mode == "point" else ("patrol", "patrol_lo", "patrol_hi"))
    game = StochasticGame(tuple(states), owner, init, actions, trans)
    return Benchmark(game, house_monitor(spec, states, loop), trivial_monitor(), spec, mode)


def house_monitor(spec: BenchmarkSpec, states, loop) -> Monitor:
    """Accepts once all four houses were visited without ever sharing a cell."""
    houses = {c: i for i, c in enumerate(spec.houses)}
    mstates = tuple(f"m{m}" for m in range(16)) + (CRASH,)
    step = {}
    for s in states:
        _, xy, i, _ = s.split(":")
        cell = tuple(int(t) for t in xy.split(","))
        other = loop[int(i)]
        for m in range(16):
            if cell == other:
                step[(f"m{m}", s)] = CRASH
            elif cell in houses:
                nm = m | (1 << houses[cell])
                if nm != m:
                    step[(f"m{m}", s)] = f"m{nm}"
    return Monitor(mstates, "m0", frozenset({"m15"}), step, default=SELF, observations=frozenset(states))
