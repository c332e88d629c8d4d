import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mlmfg.smoothing import fb, fb_gradient, fb_smoothed, natural_residual

reals = st.floats(-1e6, 1e6, allow_nan=False)
eps_values = st.floats(0.0, 1e3, allow_nan=False)


def test_fb_examples():
    assert fb(0, 0) == 0.0
    assert fb(3, 4) == pytest.approx(-2.0, abs=1e-15)
    assert fb(0, 5) == 0.0


def test_fb_smoothed_examples():
    assert fb_smoothed(0, 0, 1.0) == pytest.approx(math.sqrt(2))
    assert fb_smoothed(1, 1, 1.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        fb_smoothed(1, 1, -1.0)


@given(reals, reals)
def test_eps_zero_is_fb(a, b):
    assert fb_smoothed(a, b, 0.0) == fb(a, b)


def test_fb_gradient_examples():
    assert fb_gradient(3, 4, 0.0) == pytest.approx((-0.4, -0.2))
    assert fb_gradient(0, 0, 1.0) == (-1.0, -1.0)
    k = 1 / math.sqrt(2) - 1
    assert fb_gradient(0, 0, 0.0) == pytest.approx((k, k))


def test_no_overflow_for_large_arguments():
    # sqrt(4e600) - 2e300 = 0 without intermediate overflow
    assert abs(fb_smoothed(1e300, 1e300, 1e300)) <= 1e-12 * 1e300
    assert fb(1e300, 0.0) == 0.0
    assert np.isfinite(fb_gradient(1e300, -1e300, 0.0)).all()


def test_vectorized():
    out = fb(np.array([0.0, 3.0, 0.0]), np.array([0.0, 4.0, 5.0]))
    np.testing.assert_allclose(out, [0.0, -2.0, 0.0], atol=1e-15)


@given(reals, reals)
def test_fb_bracketed_by_min_residual(a, b):
    # (2 - sqrt 2)|min(a, b)| <= |fb(a, b)| <= (2 + sqrt 2)|min(a, b)|, hence
    # fb = 0 exactly on complementary pairs
    r = abs(min(a, b))
    scale = 1e-12 * max(1.0, abs(a), abs(b))
    assert abs(fb(a, b)) >= (2 - math.sqrt(2)) * r - scale
    assert abs(fb(a, b)) <= (2 + math.sqrt(2)) * r + scale


@given(st.sampled_from([0.0, 1.0, 1e-3, 7.5]), st.floats(0, 100))
def test_fb_zero_on_complementary_pairs(zero_part, other):
    assert fb(zero_part * 0, other) == 0.0
    assert fb(other, 0.0) == 0.0


@given(reals, reals, eps_values)
def test_smoothing_gap_bounded(a, b, eps):
    assert abs(fb_smoothed(a, b, eps) - fb(a, b)) <= math.sqrt(2) * eps * (1 + 1e-12) + 1e-9 * max(1, abs(a), abs(b))


@given(reals, reals, eps_values)
def test_gradient_in_unit_ball(a, b, eps):
    da, db = fb_gradient(a, b, eps)
    assert (da + 1) ** 2 + (db + 1) ** 2 <= 1 + 1e-12


@given(reals, reals, eps_values)
def test_symmetry(a, b, eps):
    assert fb(a, b) == fb(b, a)
    assert fb_smoothed(a, b, eps) == fb_smoothed(b, a, eps)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 5))
def test_gradient_matches_central_differences(a, b, eps):
    h = 1e-6
    fa = (fb_smoothed(a + h, b, eps) - fb_smoothed(a - h, b, eps)) / (2 * h)
    fbb = (fb_smoothed(a, b + h, eps) - fb_smoothed(a, b - h, eps)) / (2 * h)
    da, db = fb_gradient(a, b, eps)
    assert da == pytest.approx(fa, rel=1e-7, abs=1e-8)
    assert db == pytest.approx(fbb, rel=1e-7, abs=1e-8)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 10))
def test_smoothed_roots_have_product_eps_squared(a, eps_scale, eps):
    # the positive root b of phi_eps(a, .) is eps^2 / a
    b = eps * eps / a
    assert fb_smoothed(a, b, eps) == pytest.approx(0.0, abs=1e-9 * max(1, a, b))


def test_natural_residual():
    assert natural_residual([1, 0, 2], [0, 3, -1]) == 1.0
    assert natural_residual(np.zeros(3), np.zeros(3)) == 0.0
    with pytest.raises(ValueError):
        natural_residual([5.0], [2.0, 3.0])
