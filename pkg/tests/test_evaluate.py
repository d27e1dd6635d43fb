import math

import numpy as np
import pytest

from erci.evaluate import (PolicyError, Point, causal_entropy, deterministic_policy, is_below, evaluate,
                           guaranteed_point, mix_points, policy_from_dict, policy_from_json_dict,
                           policy_to_dict, reach_probabilities, sole_env_policy, uniform_policy)
from erci.oracle import enumerate_env_policies
from erci.preprocess import OWN_EGO, OWN_TERM
from erci.randgen import random_core

LN2 = math.log(2)


def naive_point(core, ego, env, n=0):
    """Plain recursion over the DAG, no memo and no kernels."""
    if n == core.top:
        return 1.0, 0.0
    if core.owner[n] == OWN_TERM:
        return 0.0, 0.0
    pol = ego if core.owner[n] == OWN_EGO else env
    p = h = 0.0
    for a in core.slots(n):
        q = float(pol.probs[a])
        if q <= 0:
            continue
        for v, r in zip(*core.successors(a)):
            cp, ch = naive_point(core, ego, env, int(v))
            p += q * r * cp
            h += q * r * ch
        if core.owner[n] == OWN_EGO:
            h -= q * math.log(q)
    return p, h


def test_patrol_uniform_against_gambling_env(patrol):
    env = deterministic_policy(patrol, {1: "a"})
    x = evaluate(patrol, uniform_policy(patrol), env)
    assert x.p == pytest.approx(0.25, abs=1e-15)
    assert x.h == pytest.approx(1.5 * LN2, abs=1e-15)


def test_patrol_uniform_against_handover_env(patrol):
    env = deterministic_policy(patrol, {1: "b"})
    x = evaluate(patrol, uniform_policy(patrol), env)
    # every path reaches s3: p = 1/2 * 1/3, entropy ln2 at s0 and ln2 at s3
    assert x.p == pytest.approx(1 / 6, abs=1e-15)
    assert x.h == pytest.approx(2 * LN2, abs=1e-15)


def test_deterministic_policy_has_zero_entropy(coin):
    ego = policy_from_dict(coin, {0: {"a": 1.0, "b": 0.0}})
    assert causal_entropy(coin, ego) == 0.0
    assert ego.is_deterministic()
    assert evaluate(coin, ego) == Point(1.0, 0.0)


def test_env_required_on_games(patrol):
    with pytest.raises(PolicyError):
        sole_env_policy(patrol)


def test_policy_check():
    core = random_core(np.random.default_rng(0), max_nodes=20)
    pol = uniform_policy(core)
    pol.check()
    pol.probs[core.node_ptr[0]] += 0.1
    with pytest.raises(PolicyError):
        pol.check()


def test_matches_naive_recursion():
    rng = np.random.default_rng(11)
    for _ in range(30):
        core = random_core(rng, max_nodes=30)
        ego = uniform_policy(core)
        ego.probs[:] = rng.random(core.n_slots) + 0.05
        for n in range(core.n_nodes):
            sl = core.slots(n)
            if len(sl):
                ego.probs[sl.start:sl.stop] /= ego.probs[sl.start:sl.stop].sum()
        env = deterministic_policy(core, {})
        x = evaluate(core, ego, env)
        p, h = naive_point(core, ego, env)
        assert x.p == pytest.approx(p, abs=1e-12) and x.h == pytest.approx(h, abs=1e-12)


def test_guaranteed_point_matches_enumeration():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 25:
        core = random_core(rng, max_nodes=20, max_env_choices=6)
        if len(core.env_nodes) == 0:
            continue
        ego = uniform_policy(core)
        g = guaranteed_point(core, ego)
        envs = list(enumerate_env_policies(core))
        vals = [naive_point(core, ego, e) for e in envs]
        assert g.point.p == pytest.approx(min(v[0] for v in vals), abs=1e-12)
        assert g.point.h == pytest.approx(min(v[1] for v in vals), abs=1e-12)
        assert naive_point(core, ego, g.env_p)[0] == pytest.approx(g.point.p, abs=1e-12)
        assert naive_point(core, ego, g.env_h)[1] == pytest.approx(g.point.h, abs=1e-12)
        checked += 1


def test_reach_probabilities_end_in_terminals(replan):
    env = deterministic_policy(replan, {})
    reach = reach_probabilities(replan, uniform_policy(replan), env)
    assert reach[0] == 1.0
    assert reach[replan.top] + reach[replan.bot] == pytest.approx(1.0, abs=1e-15)
    assert reach[replan.top] == pytest.approx(evaluate(replan, uniform_policy(replan), env).p, abs=1e-15)


def test_point_helpers():
    assert is_below(Point(0.4, 1.0), Point(0.5, 1.0))
    assert not is_below(Point(0.5, 1.1), Point(0.5, 1.0))
    m = mix_points(Point(0.0, 2.0), Point(1.0, 0.0), 0.25)
    assert (m.p, m.h) == pytest.approx((0.75, 0.5))


def test_policy_json_roundtrip(replan):
    pol = uniform_policy(replan)
    back = policy_from_json_dict(replan, policy_to_dict(pol))
    ego = np.isin(replan.slot_node, replan.ego_nodes)
    np.testing.assert_array_equal(back.probs[ego], pol.probs[ego])
