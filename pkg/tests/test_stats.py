import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platformsim.stats import (PosteriorBeta, TwoByTwo, ci, one_sided_prop_test,
                               point_estimate, prob_exceeds,
                               prob_greater_by_margin, reg_inc_beta)


class TestRegIncBeta:
    def test_uniform_cdf(self):
        assert reg_inc_beta(0.5, 1.0, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_closed_form_a_equals_one(self):
        # I_x(1, b) = 1 - (1-x)^b
        assert reg_inc_beta(0.3, 1.0, 4.0) == pytest.approx(1.0 - 0.7 ** 4, abs=1e-12)

    @given(st.floats(0.01, 0.99), st.floats(0.1, 50.0), st.floats(0.1, 50.0))
    @settings(max_examples=100, deadline=None)
    def test_reflection_identity(self, x, a, b):
        assert reg_inc_beta(x, a, b) + reg_inc_beta(1.0 - x, b, a) == pytest.approx(1.0, abs=1e-10)

    def test_matches_continued_fraction_oracle(self):
        # independent high-precision oracle (mpmath's arbitrary-precision
        # implementation) on a random parameter grid
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30
        rng = np.random.default_rng(12345)
        for _ in range(300):
            x = float(rng.uniform(0.001, 0.999))
            a = float(rng.uniform(0.1, 120.0))
            b = float(rng.uniform(0.1, 120.0))
            expected = float(mp.betainc(a, b, 0, x, regularized=True))
            assert reg_inc_beta(x, a, b) == pytest.approx(expected, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            reg_inc_beta(1.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            reg_inc_beta(0.5, -1.0, 1.0)


class TestProbGreaterByMargin:
    def test_symmetry_half(self):
        x = PosteriorBeta(7.0, 5.0)
        assert prob_greater_by_margin(x, x, 0.0) == pytest.approx(0.5, abs=1e-6)

    def test_beta21_vs_uniform(self):
        # P(X > Y) = int 2x * x dx = 2/3
        p = prob_greater_by_margin(PosteriorBeta(2, 1), PosteriorBeta(1, 1), 0.0)
        assert p == pytest.approx(2.0 / 3.0, abs=1e-6)

    def test_beta21_vs_uniform_with_margin(self):
        # 0.9 - (1 - 0.001)/3 = 0.567 exactly
        p = prob_greater_by_margin(PosteriorBeta(2, 1), PosteriorBeta(1, 1), 0.1)
        assert p == pytest.approx(0.567, abs=1e-6)

    def test_matches_monte_carlo_oracle(self):
        rng = np.random.default_rng(99)
        x = rng.beta(31, 21, 10_000_000)
        y = rng.beta(21, 31, 10_000_000)
        mc = float(np.mean(x > y + 0.1))
        quad = prob_greater_by_margin(PosteriorBeta(31, 21), PosteriorBeta(21, 31), 0.1)
        assert quad == pytest.approx(mc, abs=5e-4)

    def test_monotone_in_margin(self):
        x, y = PosteriorBeta(8, 4), PosteriorBeta(5, 7)
        probs = [prob_greater_by_margin(x, y, d) for d in np.linspace(-1.2, 1.2, 25)]
        assert all(a >= b - 1e-9 for a, b in zip(probs, probs[1:]))

    def test_complement_at_zero_margin(self):
        x, y = PosteriorBeta(9, 3), PosteriorBeta(4, 6)
        total = prob_greater_by_margin(x, y, 0.0) + prob_greater_by_margin(y, x, 0.0)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_extreme_margins(self):
        x, y = PosteriorBeta(2, 2), PosteriorBeta(2, 2)
        assert prob_greater_by_margin(x, y, 1.0) == 0.0
        assert prob_greater_by_margin(x, y, -1.0) == pytest.approx(1.0, abs=1e-9)

    @given(st.floats(0.5, 40.0), st.floats(0.5, 40.0), st.floats(0.5, 40.0),
           st.floats(0.5, 40.0), st.floats(-0.9, 0.9))
    @settings(max_examples=60, deadline=None)
    def test_always_a_probability(self, ax, bx, ay, by, d):
        p = prob_greater_by_margin(PosteriorBeta(ax, bx), PosteriorBeta(ay, by), d)
        assert 0.0 <= p <= 1.0


class TestProbExceeds:
    def test_zero_threshold(self):
        assert prob_exceeds(PosteriorBeta(3, 4), 0.0) == 1.0

    def test_uniform(self):
        assert prob_exceeds(PosteriorBeta(1, 1), 0.1) == pytest.approx(0.9, abs=1e-12)

    def test_cross_check_incomplete_beta(self):
        p = prob_exceeds(PosteriorBeta(3, 7), 0.3)
        assert p == pytest.approx(1.0 - reg_inc_beta(0.3, 3, 7), abs=1e-12)


class TestOneSidedPropTest:
    def test_known_value(self):
        # pooled rate 0.5, se 0.1, z = 2 -> 1 - Phi(2)
        assert one_sided_prop_test(TwoByTwo(30, 20, 20, 30)) == pytest.approx(
            0.0227501319, abs=1e-9)

    def test_equal_tables(self):
        assert one_sided_prop_test(TwoByTwo(20, 30, 20, 30)) == pytest.approx(0.5)

    def test_treatment_worse(self):
        assert one_sided_prop_test(TwoByTwo(10, 40, 20, 30)) > 0.5

    def test_degenerate_pooled_rate(self):
        assert one_sided_prop_test(TwoByTwo(0, 25, 0, 25)) == 0.5
        assert one_sided_prop_test(TwoByTwo(25, 0, 25, 0)) == 0.5

    @given(st.integers(0, 40), st.integers(0, 40), st.integers(0, 40), st.integers(0, 40))
    @settings(max_examples=150, deadline=None)
    def test_antisymmetric_under_arm_swap(self, a, b, c, d):
        t = TwoByTwo(a, b + 1, c, d + 1)
        swapped = TwoByTwo(c, d + 1, a, b + 1)
        pooled = (t.t_resp + t.c_resp) / (t.n_t + t.n_c)
        if 0.0 < pooled < 1.0:
            assert one_sided_prop_test(t) == pytest.approx(
                1.0 - one_sided_prop_test(swapped), abs=1e-12)

    def test_requires_nonempty_arms(self):
        with pytest.raises(ValueError):
            one_sided_prop_test(TwoByTwo(0, 0, 5, 5))


class TestPointEstimate:
    def test_rr_and_or(self):
        t = TwoByTwo(30, 20, 20, 30)
        assert point_estimate(t, "RR") == pytest.approx(1.5)
        assert point_estimate(t, "OR") == pytest.approx(2.25)

    def test_identical_arms(self):
        t = TwoByTwo(20, 30, 20, 30)
        assert point_estimate(t, "RR") == pytest.approx(1.0)
        assert point_estimate(t, "OR") == pytest.approx(1.0)

    def test_zero_cell_correction(self):
        # (10, 0 | 5, 5) -> (10.5, 0.5, 5.5, 5.5) -> OR = (10.5 * 5.5) / (0.5 * 5.5)
        assert point_estimate(TwoByTwo(10, 0, 5, 5), "OR") == pytest.approx(21.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            point_estimate(TwoByTwo(1, 1, 1, 1), "HR")


class TestCI:
    def test_ar_symmetric_for_identical_arms(self):
        lo, hi = ci(TwoByTwo(20, 30, 20, 30), "AR", 0.95)
        assert lo == pytest.approx(-hi, abs=1e-12)

    def test_rr_adjusted_log_interval_oracle(self):
        # direct formula on 0.5-adjusted cells
        from scipy.special import ndtri
        a, b, c, d = 30.5, 20.5, 20.5, 30.5
        rr = (a / (a + b)) / (c / (c + d))
        se = math.sqrt(1 / a - 1 / (a + b) + 1 / c - 1 / (c + d))
        z = ndtri(1 - 0.025)
        lo, hi = ci(TwoByTwo(30, 20, 20, 30), "RR", 0.95)
        assert lo == pytest.approx(math.exp(math.log(rr) - z * se), abs=1e-9)
        assert hi == pytest.approx(math.exp(math.log(rr) + z * se), abs=1e-9)

    def test_or_woolf_interval_oracle(self):
        from scipy.special import ndtri
        a, b, c, d = 30.5, 20.5, 20.5, 30.5
        orr = (a * d) / (b * c)
        se = math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
        z = ndtri(1 - 0.025)
        lo, hi = ci(TwoByTwo(30, 20, 20, 30), "OR", 0.95)
        assert lo == pytest.approx(math.exp(math.log(orr) - z * se), abs=1e-9)
        assert hi == pytest.approx(math.exp(math.log(orr) + z * se), abs=1e-9)

    def test_width_monotone_in_level(self):
        t = TwoByTwo(12, 8, 9, 11)
        widths = []
        for level in (0.5, 0.8, 0.9, 0.95, 0.99):
            lo, hi = ci(t, "RR", level)
            widths.append(hi - lo)
        assert all(a < b for a, b in zip(widths, widths[1:]))

    @given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30),
           st.sampled_from(["AR", "RR", "OR"]))
    @settings(max_examples=120, deadline=None)
    def test_lower_never_exceeds_upper(self, a, b, c, d, kind):
        lo, hi = ci(TwoByTwo(a, b + 1, c, d + 1), kind, 0.95)
        assert lo <= hi

    def test_zero_cells_still_finite(self):
        lo, hi = ci(TwoByTwo(10, 0, 0, 10), "OR", 0.95)
        assert math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo <= hi
