"""Randomized ego strategies for turn-based stochastic games.

Typical flow: build or load a game, reduce it to a core with ``to_core``,
then ask ``pareto_explore_mdp`` or ``sg_pareto_explore`` whether a
(performance, entropy) target is achievable against every environment.
"""
from .evaluate import Point, evaluate, guaranteed_point
from .game import StochasticGame, load_game, validate_game
from .mdp import pareto_explore_mdp
from .preprocess import to_core
from .sg import sg_pareto_explore
from .verdict import Verdict

__version__ = "0.1.0"

__all__ = [
    "Point", "StochasticGame", "Verdict", "evaluate", "guaranteed_point", "load_game",
    "pareto_explore_mdp", "sg_pareto_explore", "to_core", "validate_game",
]
