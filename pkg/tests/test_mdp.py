import math

import numpy as np
import pytest

from erci.evaluate import Point, evaluate, uniform_policy
from erci.game import StochasticGame
from erci.improviser import improviser_guarantee, mix_policies
from erci.mdp import (NotAnMDP, limit_point_max_performance, mdp_endpoints, pareto_explore_mdp,
                      rationality_point, save_front_csv, smooth_bellman)
from erci.preprocess import to_core
from erci.randgen import random_mdp
from erci.verdict import REALIZABLE, UNREALIZABLE, InvalidTarget

LN2 = math.log(2)


def binary_entropy(q):
    return -sum(x * math.log(x) for x in (q, 1 - q) if x > 0)


@pytest.fixture(scope="module")
def three_paths():
    """Win at once with ``a``, or go through one env step and win either way."""
    owner = {"s0": "ego", "s1": "env", "s2": "ego", "top": "env", "bot": "env"}
    trans = {("s0", "a"): {"top": 1}, ("s0", "b"): {"s1": 1}, ("s1", "go"): {"s2": 1},
             ("s2", "a"): {"top": 1}, ("s2", "b"): {"top": 1}}
    return to_core(StochasticGame(tuple(owner), owner, "s0", ("a", "b", "go"), trans))


@pytest.mark.parametrize("lam", [0.0, 0.5, 3.0, 20.0])
def test_coin_is_logistic(coin, lam):
    rp = smooth_bellman(coin, lam)
    q = 1 / (1 + math.exp(-lam))
    assert rp.point.p == pytest.approx(q, abs=1e-14)
    assert rp.point.h == pytest.approx(binary_entropy(q), abs=1e-14)
    assert rp.value == pytest.approx(math.log(1 + math.exp(lam)), abs=1e-12)


def test_zero_rationality_is_uniform_on_coin(coin):
    rp = smooth_bellman(coin, 0.0)
    np.testing.assert_allclose(rp.sigma.probs, uniform_policy(coin).probs)


def test_zero_rationality_maximizes_entropy(three_paths):
    # not uniform: the branch with more continuations gets more weight
    rp = smooth_bellman(three_paths, 0.0)
    assert rp.point.h == pytest.approx(math.log(3), abs=1e-14)
    assert rp.sigma.dist(0) == pytest.approx({"a": 1 / 3, "b": 2 / 3})


def test_infinite_rationality_ties(three_paths):
    x, _ = limit_point_max_performance(three_paths, ties="entropy")
    assert (x.p, x.h) == pytest.approx((1.0, math.log(3)), abs=1e-14)
    y, pol = limit_point_max_performance(three_paths, ties="uniform")
    assert (y.p, y.h) == pytest.approx((1.0, 1.5 * LN2), abs=1e-14)
    assert evaluate(three_paths, pol).h == pytest.approx(y.h, abs=1e-14)
    with pytest.raises(ValueError):
        limit_point_max_performance(three_paths, ties="random")


def test_monotone_in_rationality():
    rng = np.random.default_rng(2)
    for _ in range(20):
        core = random_mdp(rng, max_nodes=30)
        pts = [rationality_point(core, lam) for lam in (0.0, 0.3, 1.0, 4.0, 30.0, math.inf)]
        for a, b in zip(pts, pts[1:]):
            assert b.p >= a.p - 1e-12 and b.h <= a.h + 1e-12


def test_game_needs_env_policy(patrol):
    with pytest.raises(NotAnMDP):
        smooth_bellman(patrol, 1.0)
    with pytest.raises(ValueError):
        smooth_bellman(patrol, -1.0)


@pytest.mark.parametrize("target,status", [
    ((0.6, 0.7), UNREALIZABLE), ((0.6, 0.6), REALIZABLE), ((0.5, LN2), REALIZABLE),
    ((1.0, 0.1), UNREALIZABLE), ((0.9, 0.3), REALIZABLE), ((1.0, 0.0), REALIZABLE),
])
def test_coin_verdicts(coin, target, status):
    v = pareto_explore_mdp(coin, target)
    assert v.status == status
    if status == REALIZABLE:
        g = improviser_guarantee(v.improviser)
        assert g.p >= target[0] - 1e-9 and g.h >= target[1] - 1e-9
    else:
        wp, wh = v.witness["weights"]
        x = smooth_bellman(coin, v.witness["lambdas"][0]).point
        assert wp * x.p + wh * x.h < wp * target[0] + wh * target[1]
        # independent check: the true front is q -> H(q) for q >= 1/2
        q = target[0]
        assert target[1] > binary_entropy(q) or q > 1


def test_regret_targets(coin):
    ends = mdp_endpoints(coin)
    assert (ends.p_low, ends.h_max, ends.p_max, ends.h_low) == pytest.approx((0.5, LN2, 1.0, 0.0), abs=1e-12)
    v = pareto_explore_mdp(coin, regret=(0.5, 0.5))
    assert v.target.p == pytest.approx(0.75) and v.target.h == pytest.approx(LN2 / 2)
    assert v.status == REALIZABLE      # H(0.75) = 0.562 > ln2 / 2
    with pytest.raises(InvalidTarget):
        pareto_explore_mdp(coin, regret=(1.5, 0.0))
    with pytest.raises(InvalidTarget):
        pareto_explore_mdp(coin, (0.5, 0.5), regret=(0.1, 0.1))


def test_mixture_guarantee_is_convex_combination(coin):
    lo, hi = smooth_bellman(coin, 0.0), smooth_bellman(coin, 5.0)
    imp = mix_policies(lo.sigma, hi.sigma, 0.3)
    g = improviser_guarantee(imp)
    assert g.p == pytest.approx(0.3 * lo.point.p + 0.7 * hi.point.p, abs=1e-14)
    assert g.h == pytest.approx(0.3 * lo.point.h + 0.7 * hi.point.h, abs=1e-14)


def test_front_csv(tmp_path, coin):
    v = pareto_explore_mdp(coin, (0.9, 0.3))
    path = tmp_path / "front.csv"
    save_front_csv(v.front, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,p,h" and len(lines) == len(v.front) + 1
    assert any(row.startswith("inf,") for row in lines)
