import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from driftstream import SeededRng
from driftstream.intervals import (
    AdaPiModel,
    Interval,
    MveModel,
    inverse_normal_cdf,
    normal_cdf,
)


class StubRegressor:
    """Base model returning a constant; learning is a no-op."""

    def __init__(self, value=0.0):
        self.value = value

    def predict(self, x):
        return self.value

    def learn(self, x, y):
        pass

    def state_hash(self):
        return hash(self.value) & 0xFFFFFFFFFFFFFFFF


class TestInverseNormalCdf:
    def test_median(self):
        assert inverse_normal_cdf(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_frozen_975(self):
        assert inverse_normal_cdf(0.975) == pytest.approx(1.959963984540054, abs=1e-9)

    def test_against_scipy(self):
        for p in (1e-9, 0.01, 0.024, 0.3, 0.7, 0.976, 0.999, 1 - 1e-9):
            assert inverse_normal_cdf(p) == pytest.approx(stats.norm.ppf(p), abs=1e-8)

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
    def test_roundtrip_against_erf_cdf(self, p):
        z = inverse_normal_cdf(p)
        assert abs(normal_cdf(z) - p) < 1e-9

    def test_domain(self):
        for p in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                inverse_normal_cdf(p)


class TestInterval:
    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)

    def test_contains_closed(self):
        iv = Interval(-1.0, 1.0)
        assert iv.contains(-1.0) and iv.contains(1.0) and iv.contains(0.0)
        assert not iv.contains(1.0000001)


class TestMve:
    def test_degenerate_before_two_errors(self):
        m = MveModel(StubRegressor(5.0), confidence=0.95)
        assert m.predict_interval(np.zeros(1)) == Interval(5.0, 5.0)
        m.learn(np.zeros(1), 6.0)
        assert m.error_std() == 0.0  # still < 2 errors

    def test_half_width_frozen(self):
        m = MveModel(StubRegressor(), confidence=0.95)
        # force sigma = 2 by construction
        m.n = 10
        m.err_mean = 0.0
        m.err_sq_mean = 4.0
        assert m.half_width() == pytest.approx(3.919927969080108, abs=1e-6)

    def test_sigma_converges_on_alternating_errors(self):
        m = MveModel(StubRegressor(0.0))
        for i in range(10_000):
            m.learn(np.zeros(1), 1.0 if i % 2 else -1.0)
        assert m.error_std() == pytest.approx(1.0, abs=1e-3)

    def test_interval_centered(self):
        m = MveModel(StubRegressor(3.0))
        m.n, m.err_sq_mean = 10, 1.0
        y_hat, iv = m.predict_with_interval(np.zeros(1))
        assert y_hat == 3.0
        assert iv.lower + iv.upper == pytest.approx(6.0)

    def test_width_monotone_in_confidence(self):
        widths = []
        for c in (0.5, 0.8, 0.9, 0.95, 0.99):
            m = MveModel(StubRegressor(), confidence=c)
            m.n, m.err_sq_mean = 10, 1.0
            widths.append(m.predict_interval(np.zeros(1)).width)
        assert widths == sorted(widths)
        assert len(set(widths)) == len(widths)


class TestAdaPi:
    def make(self, **kw):
        m = AdaPiModel(StubRegressor(0.0), confidence=0.95, **kw)
        m.n, m.err_sq_mean = 100, 1.0  # sigma = 1
        return m

    def test_fixed_point(self):
        # frozen coverage estimate equal to the target leaves scale untouched
        m = self.make(coverage_decay=1.0)
        m.coverage_estimate = 0.95
        before = m.scale
        m.learn(np.zeros(1), 0.5)
        assert m.scale == before

    def test_scale_widens_under_undercoverage(self):
        m = self.make()
        scales = [m.scale]
        for _ in range(200):
            m.learn(np.zeros(1), 100.0)  # always outside: sustained under-coverage
            scales.append(m.scale)
        assert all(b >= a for a, b in zip(scales, scales[1:]))
        assert scales[-1] > scales[0]

    def test_scale_floor_clamp(self):
        m = self.make(scale_floor=0.01, adaptation_rate=0.5)
        for _ in range(2000):
            m.learn(np.zeros(1), 0.0)  # always covered: pressure to shrink
        assert m.scale == pytest.approx(0.01)
        assert m.scale >= 0.01

    def test_width_monotone_in_scale(self):
        m = self.make()
        m.scale = 1.0
        w1 = m.predict_interval(np.zeros(1)).width
        m.scale = 2.5
        assert m.predict_interval(np.zeros(1)).width == pytest.approx(2.5 * w1)

    def test_update_only_on_learn(self):
        m = self.make()
        s, c = m.scale, m.coverage_estimate
        for _ in range(10):
            m.predict_interval(np.zeros(1))
            m.predict_with_interval(np.zeros(1))
        assert (m.scale, m.coverage_estimate) == (s, c)
