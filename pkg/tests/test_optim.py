import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapaware.optim import Adam, DivergenceError, Sgd, clip_weights, make_optimizer


def test_sgd_example():
    w = np.array([1.0])
    Sgd(0.1).step([w], [np.array([1.0])])
    assert w[0] == pytest.approx(0.9, abs=1e-15)


normal_floats = st.floats(-10, 10).filter(lambda x: x == 0 or abs(x) > 1e-200)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1.0), normal_floats, st.sampled_from([0.1, 0.5, 2.0, 4.0]))
def test_sgd_multiplier_linearity(lr, g, mult):
    # starting from zero makes the displacement the computed step itself;
    # subnormal gradients are excluded because scaling them is not exact
    a, b = np.zeros(1), np.zeros(1)
    Sgd(lr).step([a], [np.array([g])], 1.0)
    Sgd(lr).step([b], [np.array([g])], mult)
    if mult in (0.5, 2.0, 4.0):
        assert b[0] == mult * a[0]
    else:
        assert b[0] == pytest.approx(mult * a[0], rel=1e-15)


def test_zero_grads_leave_params():
    w = np.array([0.3, -0.2])
    Sgd(0.5).step([w], [np.zeros(2)])
    opt = Adam(0.01)
    for _ in range(20):
        opt.step([w], [np.zeros(2)])
    np.testing.assert_array_equal(w, [0.3, -0.2])


def test_adam_first_step():
    w = np.array([0.0])
    Adam(0.001, beta1=0.9).step([w], [np.array([1.0])])
    # m_hat = v_hat = 1 at t = 1
    assert -w[0] == pytest.approx(0.001 / (1 + 1e-8), abs=1e-15)
    assert -w[0] == pytest.approx(0.000999999990, abs=1e-9)


def test_adam_multiplier_only_scales_the_step():
    g1, g2 = np.array([0.4, -1.0]), np.array([0.3, 2.0])
    a, b = np.zeros(2), np.zeros(2)
    oa, ob = Adam(0.01, beta1=0.5), Adam(0.01, beta1=0.5)
    oa.step([a], [g1], 1.0)
    ob.step([b], [g1], 1.0)
    np.testing.assert_array_equal(a, b)
    before = a.copy()
    da, db = np.zeros(2), np.zeros(2)
    oa.step([da], [g2], 1.0)
    ob.step([db], [g2], 2.0)
    np.testing.assert_array_equal(db, 2 * da)
    np.testing.assert_array_equal(oa.m[0], ob.m[0])
    np.testing.assert_array_equal(oa.v[0], ob.v[0])
    assert oa.timestep == ob.timestep == 2
    assert np.array_equal(before, a)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 2.0), min_size=1, max_size=10), st.integers(0, 1000))
def test_adam_moments_independent_of_multipliers(mults, seed):
    rng = np.random.default_rng(seed)
    grads = rng.normal(size=(len(mults), 3))
    a, b = Adam(0.01), Adam(0.01)
    pa, pb = np.zeros(3), np.zeros(3)
    for g, m in zip(grads, mults):
        a.step([pa], [g], 1.0)
        b.step([pb], [g], m)
    np.testing.assert_array_equal(a.m[0], b.m[0])
    np.testing.assert_array_equal(a.v[0], b.v[0])


def test_step_errors():
    w = np.zeros(2)
    with pytest.raises(DivergenceError):
        Sgd(0.1).step([w], [np.array([np.nan, 0.0])])
    with pytest.raises(DivergenceError):
        Adam(0.1).step([w], [np.array([np.inf, 0.0])])
    with pytest.raises(ValueError):
        Sgd(0.1).step([w], [np.zeros(2)], 0.0)
    with pytest.raises(ValueError):
        Sgd(0.1).step([w], [])
    with pytest.raises(ValueError):
        Adam(0.1, beta1=1.0)
    with pytest.raises(ValueError):
        make_optimizer("rmsprop", 0.1)


def test_clip_examples():
    p = np.array([5.0, -5.0, 0.05, -0.02])
    clip_weights([p], 0.1)
    np.testing.assert_array_equal(p, [0.1, -0.1, 0.05, -0.02])
    inside = np.array([0.01, -0.09])
    clip_weights([inside], 0.1)
    np.testing.assert_array_equal(inside, [0.01, -0.09])
    with pytest.raises(ValueError):
        clip_weights([p], 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 10.0), st.integers(0, 2**32 - 1))
def test_clip_bound_holds_exactly(c, seed):
    p = np.random.default_rng(seed).normal(scale=5.0, size=(4, 5))
    q = -p
    clip_weights([p, q], c)
    assert np.max(np.abs(p)) <= c
    np.testing.assert_array_equal(q, -p)
