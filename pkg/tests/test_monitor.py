import pytest

from erci.monitor import (ACCEPT, REJECT, Monitor, UnknownGameState, UnknownMonitorState, classify,
                          monitor_from_dict, monitor_step, monitor_to_dict, reach_monitor, run,
                          trivial_monitor)


def test_reach_monitor_latches():
    m = reach_monitor(["goal"])
    assert classify(m, run(m, ["a", "b"])) == REJECT
    assert classify(m, run(m, ["a", "goal", "b"])) == ACCEPT


def test_trivial_accepts_everything():
    m = trivial_monitor()
    assert classify(m, run(m, ["x", "y", "z"])) == ACCEPT


def test_strict_monitor_rejects_unlisted_pairs():
    m = Monitor(("q0", "q1"), "q0", frozenset({"q1"}), {("q0", "a"): "q1"})
    assert monitor_step(m, "q0", "a") == "q1"
    with pytest.raises(UnknownGameState):
        monitor_step(m, "q1", "a")
    with pytest.raises(UnknownMonitorState):
        monitor_step(m, "nope", "a")


def test_observation_alphabet_is_enforced():
    m = Monitor(("q",), "q", frozenset({"q"}), default="$self", observations=frozenset({"a"}))
    assert monitor_step(m, "q", "a") == "q"
    with pytest.raises(UnknownGameState):
        monitor_step(m, "q", "b")


def test_default_target_state():
    m = Monitor(("ok", "dead"), "ok", frozenset({"ok"}), {("ok", "safe"): "ok"}, default="dead")
    assert run(m, ["safe", "boom", "safe"]) == "dead"


def test_json_roundtrip_with_tuple_states():
    m = Monitor(((0, 0), (0, 1)), (0, 0), frozenset({(0, 1)}), {((0, 0), "a"): (0, 1)}, default="$self")
    back = monitor_from_dict(monitor_to_dict(m))
    assert back.init == (0, 0) and back.accepting == m.accepting and back.step == m.step
    assert run(back, ["b", "a"]) == (0, 1)
