"""Small hand-built games used in docs, tests and the CLI examples."""
from __future__ import annotations

from fractions import Fraction

from .game import StochasticGame

THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)


def _game(owner: dict, initial: str, trans: dict) -> StochasticGame:
    actions = sorted({a for _, a in trans})
    return StochasticGame(tuple(owner), owner, initial, tuple(actions),
                          {k: dict(v) for k, v in trans.items()})


def coin_mdp() -> StochasticGame:
    """One ego choice: ``a`` wins, ``b`` loses."""
    owner = {"s0": "ego", "top": "env", "bot": "env"}
    return _game(owner, "s0", {("s0", "a"): {"top": 1}, ("s0", "b"): {"bot": 1}})


def patrol_toy() -> StochasticGame:
    """Two ego choices around an env choice, with chance at the leaves.

    Ego picks ``a`` (to env node s1) or ``b`` (to s2). At s1 env either
    gambles (win w.p. 1/3) or hands over to s3; s2 always hands over.
    At s3 ego gambles (``a``) or gives up (``b``).
    """
    owner = {"s0": "ego", "s1": "env", "s2": "env", "s3": "ego", "top": "env", "bot": "env"}
    trans = {
        ("s0", "a"): {"s1": 1},
        ("s0", "b"): {"s2": 1},
        ("s1", "a"): {"top": THIRD, "bot": TWO_THIRDS},
        ("s1", "b"): {"s3": 1},
        ("s2", "a"): {"s3": 1},
        ("s3", "a"): {"top": THIRD, "bot": TWO_THIRDS},
        ("s3", "b"): {"bot": 1},
    }
    return _game(owner, "s0", trans)


def replanning_toy() -> StochasticGame:
    """Env chooses between a low-entropy and a high-entropy continuation.

    s0 (ego): ``a`` to the env node s2, ``b`` to s1 (a single env step).
    s2 (env): ``a`` to s3 with two ego options, ``b`` to s4 with four.
    """
    owner = {"s0": "ego", "s1": "ego", "s2": "env", "s3": "ego", "s4": "ego", "top": "env", "bot": "env"}
    trans = {
        ("s0", "a"): {"s2": 1},
        ("s0", "b"): {"s1": 1},
        ("s1", "a"): {"top": Fraction(1, 2), "bot": Fraction(1, 2)},
        ("s1", "b"): {"top": 1},
        ("s2", "a"): {"s3": 1},
        ("s2", "b"): {"s4": 1},
        ("s3", "a"): {"top": 1},
        ("s3", "b"): {"bot": 1},
        ("s4", "a"): {"top": 1},
        ("s4", "b"): {"top": 1},
        ("s4", "c"): {"bot": 1},
        ("s4", "d"): {"top": Fraction(1, 2), "bot": Fraction(1, 2)},
    }
    return _game(owner, "s0", trans)
