import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from vhjlab.supconv import (EmptyWindow, TimeSeriesField, check_maximizer_window,
                            check_time_lipschitz, initial_layer_excess, maximizer_offsets,
                            sup_convolve, sup_convolve_bruteforce, window_mask)

alphas = st.floats(0.05, 1.0)


@st.composite
def series(draw, nt=(3, 40), nx=(1, 4)):
    n = draw(st.integers(*nt))
    m = draw(st.integers(*nx))
    steps = draw(arrays(float, n - 1, elements=st.floats(0.01, 0.2)))
    times = np.concatenate([[0.0], np.cumsum(steps)])
    vals = draw(arrays(float, (n, m), elements=st.floats(-1, 1)))
    return TimeSeriesField(times, vals)


def test_rejects_bad_meshes():
    with pytest.raises(ValueError):
        TimeSeriesField([0.0, 0.0, 1.0], np.zeros((3, 2)))
    with pytest.raises(ValueError):
        TimeSeriesField([0.0], np.zeros((1, 2)))
    with pytest.raises(ValueError):
        TimeSeriesField([0.0, 1.0], np.array([[0.0], [np.inf]]))


def test_K_follows_values():
    s = TimeSeriesField([0, 1, 2], np.array([[0.5], [-2.0], [1.0]]))
    assert s.K == pytest.approx(2.0)
    assert s.scaled(4).K == pytest.approx(2 * s.K)


def test_constant_series_is_unchanged():
    s = TimeSeriesField(np.linspace(0, 1, 11), np.full((11, 3), 0.7))
    reg = sup_convolve(s, 0.3)
    np.testing.assert_array_equal(reg.values, s.values)
    np.testing.assert_array_equal(maximizer_offsets(s, 0.3), 0.0)
    assert check_time_lipschitz(reg, 0.3).max_slope == 0.0


def test_spike_against_hand_formula():
    t = np.linspace(0, 2, 41)
    dt = t[1]
    vals = np.zeros((41, 1))
    vals[20] = 1.0
    s = TimeSeriesField(t, vals)
    a = 0.4
    reg = sup_convolve(s, a)
    expect = np.maximum(1 - (t - t[20]) ** 2 / a**2, 0.0)
    np.testing.assert_array_equal(reg.values[:, 0], expect)
    lip = check_time_lipschitz(reg, a)
    assert lip.bound == pytest.approx(2 * np.sqrt(2) / a)
    assert lip.passed
    assert check_maximizer_window(s, a)
    assert np.abs(maximizer_offsets(s, a)).max() < s.K * a + dt


@given(series(), alphas)
def test_matches_bruteforce_exactly(s, a):
    reg = sup_convolve(s, a)
    np.testing.assert_array_equal(reg.values, sup_convolve_bruteforce(s.times, s.values, a))


@given(series(), alphas)
def test_dominates_original_and_is_idempotent_from_above(s, a):
    reg = sup_convolve(s, a)
    assert np.all(reg.values >= s.values)
    assert np.all(sup_convolve(reg, a).values >= reg.values)


@given(series(), alphas, alphas)
def test_monotone_in_alpha(s, a1, a2):
    lo, hi = sorted((a1, a2))
    assert np.all(sup_convolve(s, lo).values <= sup_convolve(s, hi).values)


@given(series(nt=(10, 60)), alphas)
def test_lipschitz_and_window(s, a):
    assert check_time_lipschitz(sup_convolve(s, a), a).passed
    assert check_maximizer_window(s, a)


def test_ties_go_to_the_target_time_then_earlier():
    t = np.array([0.0, 1.0, 2.0])
    s = TimeSeriesField(t, np.array([[1.0], [0.0], [1.0]]))
    # at t = 1 the two spikes tie with value 1 - 1/a^2 < 0 = u(1): s* = t
    assert maximizer_offsets(s, 0.5)[1, 0] == 0.0
    # with a huge alpha both spikes beat u(1) by the same amount: the earlier wins
    s2 = TimeSeriesField(t, np.array([[2.0], [0.0], [2.0]]))
    assert maximizer_offsets(s2, 1.0)[1, 0] == -1.0


def test_window_and_restriction():
    t = np.linspace(0, 10, 101)
    s = TimeSeriesField(t, np.sin(t)[:, None] * 0.5)
    mask = window_mask(s, 0.5)
    K = s.K
    assert np.all(t[mask] > K * 0.5) and np.all(t[mask] < 10 - K * 0.5)
    reg = sup_convolve(s, 0.5, restrict=True)
    assert reg.times.size == mask.sum()
    with pytest.raises(EmptyWindow):
        sup_convolve(TimeSeriesField([0, 0.1, 0.2], np.ones((3, 1))), 1.0, restrict=True)


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5])
def test_alpha_range(bad):
    s = TimeSeriesField([0, 1], np.zeros((2, 1)))
    with pytest.raises(ValueError):
        sup_convolve(s, bad)


@given(series(nt=(30, 60)), st.floats(0.05, 0.3))
def test_initial_layer_bound(s, a):
    try:
        excess = initial_layer_excess(s, a)
    except EmptyWindow:
        return
    assert excess <= 0.0
