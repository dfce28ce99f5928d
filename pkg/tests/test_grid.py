import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlskt.errors import DomainError
from nlskt.grid import Domain, Field, State, integrate, norms, split_signs


@pytest.mark.parametrize("n", [3, 7, 64, 101])
def test_integrate_constant_is_volume(n):
    assert integrate(Domain.interval(0, 1, n).constant(1.0)) == 1.0


def test_integrate_zero_and_linear():
    dom = Domain.interval(0, 1, 64)
    assert integrate(dom.constant(0.0)) == 0.0
    assert integrate(dom.sample(lambda x: x)) == pytest.approx(0.5, abs=1e-12)


def test_integrate_2d_box():
    dom = Domain.box((0, -1), (2, 1), (10, 20))
    assert integrate(dom.constant(3.0)) == pytest.approx(12.0, rel=1e-14)
    assert dom.cell_volume == pytest.approx(0.2 * 0.1)


def test_norms_examples():
    dom = Domain.interval(0, 1, 16)
    assert norms(dom.constant(2.0)) == pytest.approx((2.0, 4.0, 2.0))
    assert norms(dom.constant(0.0)) == (0.0, 0.0, 0.0)
    cos = Domain.interval(0, 1, 128).sample(lambda x: np.cos(math.pi * x))
    assert norms(cos).l2sq == pytest.approx(0.5, abs=1e-3)


def test_split_signs_examples():
    dom = Domain.interval(0, 1, 64)
    plus, minus = split_signs(dom.constant(3.0))
    assert np.all(plus.values == 3.0) and np.all(minus.values == 0.0)
    plus, minus = split_signs(dom.constant(-1.0))
    assert np.all(plus.values == 0.0) and np.all(minus.values == 1.0)
    plus, minus = split_signs(dom.sample(lambda x: x - 0.5))
    # triangle areas
    assert integrate(plus) == pytest.approx(0.125, abs=1e-4)
    assert integrate(minus) == pytest.approx(0.125, abs=1e-4)


vals = arrays(np.float64, 24, elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(vals, vals, st.floats(-10, 10), st.floats(-10, 10))
def test_integrate_linear_and_sign_split(f, g, a, b):
    dom = Domain.interval(-1, 2, 24)
    F, G = dom.field(f), dom.field(g)
    lhs = integrate(dom.field(a * f + b * g))
    scale = 1 + abs(a) * np.abs(f).sum() + abs(b) * np.abs(g).sum()
    assert abs(lhs - (a * integrate(F) + b * integrate(G))) <= 1e-13 * scale
    plus, minus = split_signs(F)
    assert norms(F).l1 == pytest.approx(integrate(plus) + integrate(minus), rel=1e-14, abs=1e-300)
    np.testing.assert_array_equal(plus.values - minus.values, F.values)
    assert norms(F).linf >= norms(F).l1 / dom.volume * (1 - 1e-14)


def test_domain_validation():
    with pytest.raises(DomainError):
        Domain.interval(0, 1, 2)
    with pytest.raises(DomainError):
        Domain.interval(1, 0, 10)
    with pytest.raises(DomainError):
        Domain((0, 0, 0), (1, 1, 1), (4, 4, 4))


def test_field_is_read_only_and_checked():
    dom = Domain.interval(0, 1, 4)
    f = dom.field([1, 2, 3, 4])
    with pytest.raises(ValueError):
        f.values[0] = 5.0
    with pytest.raises(DomainError):
        dom.field([1, 2, 3])
    with pytest.raises(DomainError):
        dom.field([1, 2, np.nan, 4])


def test_coords_and_grid_shape():
    dom = Domain.box((0, 0), (1, 2), (4, 8))
    c = dom.coords()
    assert c.shape == (4, 8, 2)
    assert c[0, 0] == pytest.approx((0.125, 0.125))
    assert Domain.interval(0, 1, 5).grid_shape == (5, 1)


def test_state_helpers():
    dom = Domain.interval(0, 1, 4)
    s = State.from_arrays(dom, [1, 2, 3, 4], [0, 0, 0, 1], t=0.5)
    assert s.stacked().shape == (2, 4)
    sw = s.swapped()
    np.testing.assert_array_equal(sw.u1.values, s.u2.values)
    with pytest.raises(DomainError):
        State(dom.constant(1.0), Domain.interval(0, 1, 5).constant(1.0))
    assert isinstance(np.asarray(s.u1), np.ndarray) and isinstance(s.u1, Field)
