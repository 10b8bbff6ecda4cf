import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from vrresgld.exchange import (
    ReplicaState,
    SwapDiagnostics,
    attempt_swap,
    corrected_rate,
    deterministic_rate,
    lognormal_bound,
    lognormal_truncated_mean,
    mc_truncated_mean,
    truncate,
    vr_rate,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_deterministic_rate_values():
    assert deterministic_rate(10.0, 5.0, 3.0, 3.0) == 1.0
    assert deterministic_rate(7.0, 7.0, 1.0, 10.0) == 1.0
    assert deterministic_rate(10.0, 5.0, 1.0, 10.0) == pytest.approx(math.exp(4.5), rel=1e-12)
    assert math.exp(4.5) == pytest.approx(90.017, abs=1e-3)


@pytest.mark.parametrize("rate_fn", [corrected_rate, vr_rate])
def test_corrected_rate_values(rate_fn):
    assert rate_fn(10.0, 5.0, 0.0, 2.0, 1.0, 10.0) == deterministic_rate(10.0, 5.0, 1.0, 10.0)
    assert rate_fn(10.0, 5.0, 10.0, 2.0, 1.0, 10.0) == pytest.approx(math.exp(0.45), rel=1e-12)
    assert math.exp(0.45) == pytest.approx(1.5683, abs=1e-4)
    assert rate_fn(10.0, 5.0, 10.0, 1e300, 1.0, 10.0) == pytest.approx(math.exp(4.5), rel=1e-12)
    assert rate_fn(3.0, 3.0, 0.0, 2.0, 1.0, 10.0) == 1.0


def test_f_two_is_half_variance_correction():
    d = 1.0 - 1.0 / 10
    for s2 in (0.5, 3.0, 40.0):
        got = math.log(vr_rate(2.0, 1.0, s2, 2.0, 1.0, 10.0))
        assert got == pytest.approx(d * (1.0 - d * s2 / 2), rel=1e-12)


def test_overflow_clamps_and_counts():
    diag = SwapDiagnostics()
    assert deterministic_rate(1000.0, 0.0, 1.0, 1000.0, diag) == math.inf
    assert corrected_rate(1e6, 0.0, 0.0, 2.0, 1.0, 1000.0, diag) == math.inf
    assert diag.overflow_count == 2
    assert deterministic_rate(-1e6, 0.0, 1.0, 1000.0, diag) == 0.0
    assert diag.overflow_count == 2
    assert truncate(math.inf) == 1.0


def test_truncate_rejects_nan():
    with pytest.raises(ValueError):
        truncate(math.nan)


@settings(max_examples=200, deadline=None)
@given(e1=finite, e2=finite, s2=st.floats(0, 1e4), F=st.floats(0.1, 1e3))
def test_truncated_rate_in_unit_interval(e1, e2, s2, F):
    t = truncate(corrected_rate(e1, e2, s2, F, 1.0, 1000.0))
    assert 0.0 <= t <= 1.0


def test_corrected_rate_decreasing_in_variance():
    grid = np.linspace(0, 50, 51)
    rates = [corrected_rate(3.0, 1.0, s, 2.0, 1.0, 10.0) for s in grid]
    assert np.all(np.diff(rates) < 0)


def test_noisy_energy_rate_non_increasing_in_noise():
    rng = np.random.default_rng(4)
    tau1, tau2, F = 1.0, 10.0, 2.0
    true_diff = -1.0
    means, ses = [], []
    for v in (0.0, 1.0, 4.0, 16.0, 64.0):
        noise = math.sqrt(v) * rng.standard_normal(100000)
        vals = np.array([truncate(corrected_rate(true_diff + z, 0.0, v, F, tau1, tau2)) for z in noise])
        means.append(vals.mean())
        ses.append(vals.std(ddof=1) / math.sqrt(vals.size))
    for a, b, sa, sb in zip(means, means[1:], ses, ses[1:]):
        assert b <= a + 2 * math.hypot(sa, sb)


def _pair(a=1.0, b=2.0):
    return ReplicaState((a, b), (1.0, 10.0), 5, ("cv-a", "cv-b"))


def test_swap_rate_zero_never_accepts():
    rng = np.random.default_rng(0)
    assert not any(attempt_swap(_pair(), 0.0, None, 1e-4, rng)[1].accepted for _ in range(2000))


def test_swap_rate_above_one_always_accepts():
    rng = np.random.default_rng(0)
    for rate in (1.0, 3.0, math.inf):
        pair, dec = attempt_swap(_pair(), rate, None, 1e-4, rng)
        assert dec.accepted and pair.positions == (2.0, 1.0)
        assert pair.control_variates == ("cv-b", "cv-a")
        assert pair.temperatures == (1.0, 10.0)
        assert dec.truncated_rate == 1.0


def test_swap_frequency_half():
    rng = np.random.default_rng(12)
    hits = sum(attempt_swap(_pair(), 0.5, None, 1e-3, rng)[1].accepted for _ in range(100000))
    assert abs(hits / 1e5 - 0.5) < 0.005


def test_swap_intensity_scales_probability():
    rng = np.random.default_rng(3)
    hits = sum(attempt_swap(_pair(), 1.0, 2000.0, 1e-4, rng)[1].accepted for _ in range(20000))
    assert abs(hits / 2e4 - 0.2) < 0.015
    assert not attempt_swap(_pair(), math.inf, 0.0, 1e-4, rng)[1].accepted


def test_swap_decision_consistent():
    rng = np.random.default_rng(8)
    for rate in np.linspace(0, 1.5, 40):
        _, d = attempt_swap(_pair(), float(rate), None, 1e-4, rng)
        assert d.accepted == (d.uniform_draw < min(1.0, rate))
        assert d.truncated_rate == min(1.0, rate)
        assert d.iteration == 5
        assert 0 <= d.uniform_draw < 1


@settings(max_examples=200, deadline=None)
@given(a=finite, b=finite)
def test_swap_involution_and_multiset(a, b):
    rng = np.random.default_rng(0)
    p0 = _pair(a, b)
    p1, _ = attempt_swap(p0, math.inf, None, 1e-4, rng)
    p2, _ = attempt_swap(p1, math.inf, None, 1e-4, rng)
    assert p2 == p0
    assert sorted(p1.positions) == sorted(p0.positions)


def test_lognormal_closed_form_values():
    assert lognormal_truncated_mean(0.0, 0.0) == 1.0
    assert lognormal_truncated_mean(-1.0, 0.0) == pytest.approx(math.exp(-1.0))
    assert lognormal_truncated_mean(0.0, 2.0) == pytest.approx(2 * norm.cdf(-1.0), rel=1e-12)
    assert lognormal_truncated_mean(0.0, 2.0) == pytest.approx(0.31731, abs=1e-5)
    assert lognormal_truncated_mean(800.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        lognormal_truncated_mean(0.0, -1.0)


def test_lognormal_against_ten_million_draws():
    mean, se = mc_truncated_mean(0.0, 2.0, 10**7, np.random.default_rng(21))
    assert abs(mean - lognormal_truncated_mean(0.0, 2.0)) < 3 * se


@pytest.mark.parametrize("u", [-2.0, 0.0, 2.0])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_lognormal_against_monte_carlo(u, sigma):
    mean, se = mc_truncated_mean(u, sigma, 10**6, np.random.default_rng(int(100 * (u + 3) + 10 * sigma)))
    assert abs(mean - lognormal_truncated_mean(u, sigma)) < 4 * se


@pytest.mark.parametrize("sigma", [1.0, 2.0, 4.0, 8.0])
def test_lognormal_bound(sigma):
    assert lognormal_truncated_mean(0.0, sigma) <= lognormal_bound(0.0, sigma)
    assert lognormal_bound(0.0, sigma) == pytest.approx(math.exp(-sigma**2 / 8) * (1 + 1 / sigma**2))
