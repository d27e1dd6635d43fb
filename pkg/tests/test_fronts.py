import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erci.fronts import FrontTable, certify_gap, clean, minkowski, point_front, pointwise_min


@st.composite
def fronts(draw, max_edges=5):
    """Concave chain built from increasing edge rationalities."""
    n = draw(st.integers(0, max_edges))
    lams = sorted(draw(st.lists(st.floats(0.05, 50), min_size=n, max_size=n, unique=True)))
    dh = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    h0 = sum(dh) + draw(st.floats(0, 0.5))
    p0 = draw(st.floats(0, 0.3))
    h, p = [h0], [p0]
    for lam, d in zip(lams, dh):
        h.append(h[-1] - d)
        p.append(p[-1] + d / lam)
    return FrontTable(np.array(h), np.array(p), np.array([0.0] + lams))


def test_evaluation_and_flat_tail():
    f = FrontTable(np.array([2.0, 1.0, 0.5]), np.array([0.2, 0.6, 0.7]), np.array([0.0, 2.5, 5.0]))
    assert f(2.5) == -np.inf
    assert f(1.5) == pytest.approx(0.4)
    assert f(0.1) == 0.7
    assert list(f.edge_lams) == pytest.approx([2.5, 5.0])
    assert f.argmax(1.0) == 0 and f.argmax(3.0) == 1 and f.argmax(100.0) == 2
    assert f.locate(0.75) == (1, pytest.approx(0.5))


def test_clean_drops_dominated_and_collinear():
    h = np.array([3.0, 2.0, 1.0, 0.5, 0.2])
    p = np.array([0.0, 0.5, 1.0, 1.0, 0.9])
    assert list(clean(h, p)) == [0, 2]


@settings(max_examples=60, deadline=None)
@given(fronts(), fronts(), st.floats(0.05, 0.95), st.floats(0, 1))
def test_minkowski_split_is_optimal(f, g, w, frac):
    s = minkowski([f, g], [w, 1 - w])
    h = s.h_min + frac * (s.h_max - s.h_min)
    hf, hg = s.split(h)
    assert w * hf + (1 - w) * hg == pytest.approx(h, abs=1e-12)
    assert w * f(hf) + (1 - w) * g(hg) == pytest.approx(s(h), abs=1e-12)
    # no other split of the same total entropy does better
    for a in np.linspace(f.h_min, f.h_max, 25):
        b = (h - w * a) / (1 - w)
        if g.h_min - 1e-12 <= b <= g.h_max + 1e-12:
            assert w * f(a) + (1 - w) * g(min(b, g.h_max)) <= s(h) + 1e-12


@settings(max_examples=60, deadline=None)
@given(fronts(), fronts(), st.floats(0, 1))
def test_pointwise_min(f, g, frac):
    m = pointwise_min([f, g])
    assert m.h_max == pytest.approx(min(f.h_max, g.h_max))
    h = m.h_min + frac * (m.h_max - m.h_min)
    assert m(h) == pytest.approx(min(f(h), g(h)), abs=1e-12)


def test_single_part_sum_does_not_expose_grandchildren():
    inner = minkowski([FrontTable(np.array([1.0, 0.0]), np.array([0.5, 1.0]), np.array([0.0, 2.0])),
                       point_front(0.0, 1.0)], [0.5, 0.5])
    outer = minkowski([inner], [1.0])
    assert outer.split(0.3) == [0.3]
    assert inner.split(0.3) == pytest.approx([0.6, 0.0])


def test_certify_gap():
    # samples on p = 1 - (h - 1)^2 / 4 style curve; tangent bound lies above the chord
    gap = certify_gap(1.0, 1.0 + 1.0 * 0.5, 1.0, 0.5, 3.0, 0.2 + 3.0 * 0.9, 0.2, 0.9)
    px = (2.9 - 1.5) / 2.0
    hx = 1.5 - px
    chord = 0.5 + 0.4 * (1.0 - hx) / 0.8
    assert gap == pytest.approx(px - chord)
    assert certify_gap(0.0, 1.0, 1.0, 0.5, np.inf, 0.0, 0.0, 1.0) == pytest.approx(0.5)
    assert certify_gap(1.0, 1.5, 1.0, 0.5, 2.0, 2.5, 1.0, 0.75) == pytest.approx(0.25)
