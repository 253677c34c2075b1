import math

import numpy as np
import pytest

from minmaxgap.smooth_minmax import (CapacityError, SmoothingParams,
                                     composed_derivative_sums,
                                     composed_tensor_abs_sums,
                                     derivative_tensors, exact_minmax,
                                     gamma_abs_sum, gradient, omega_abs_sum,
                                     smooth_minmax_batch, smooth_minmax_value,
                                     weight_tensors)
from minmaxgap.verification import fd_gradient, fd_hessian, fd_third

SP11 = SmoothingParams(1.0, 1.0)


def test_exact_minmax_examples():
    assert exact_minmax([[1.0, 2.0], [3.0, 0.0]]) == 2.0
    assert exact_minmax([[7.5]]) == 7.5
    assert exact_minmax(np.full((3, 4), -2.0)) == -2.0


def test_value_collapses_at_1x1():
    for c in (-3.0, 0.0, 11.25):
        for sp in (SP11, SmoothingParams(4.0, 0.3)):
            assert smooth_minmax_value([[c]], sp) == pytest.approx(c, abs=1e-12)


def test_value_constant_matrix_closed_form():
    # c + log(m)/beta - log(n)/(beta*delta) for constant matrices
    assert smooth_minmax_value(np.zeros((2, 3)), SP11) == pytest.approx(
        math.log(3) - math.log(2), abs=1e-12)
    sp = SmoothingParams(2.0, 0.5)
    got = smooth_minmax_value(np.full((4, 5), 1.5), sp)
    assert got == pytest.approx(1.5 + math.log(5) / 2 - math.log(4) / 1.0, abs=1e-12)


def test_translation_equivariance():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 4))
    base = smooth_minmax_value(x, SP11)
    for t in (-100.0, -1.3, 0.5, 100.0):
        assert smooth_minmax_value(x + t, SP11) == pytest.approx(base + t, abs=1e-10)


def test_sandwich_and_convergence():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n, m = rng.integers(1, 9, size=2)
        x = rng.normal(scale=2.0, size=(n, m))
        for beta in (0.5, 1.0, 5.0):
            for delta in (0.5, 1.0, 3.0):
                sp = SmoothingParams(beta, delta)
                F = smooth_minmax_value(x, sp)
                mm = exact_minmax(x)
                env = max(math.log(n) / (beta * delta), math.log(m) / beta)
                assert mm - math.log(n) / (beta * delta) - 1e-9 <= F
                assert F <= mm + math.log(m) / beta + 1e-9
                assert abs(F - mm) <= env + 1e-9


def test_doubling_beta_halves_envelope():
    n, m = 5, 7
    for beta, delta in ((0.5, 1.0), (2.0, 3.0)):
        env = max(math.log(n) / (beta * delta), math.log(m) / beta)
        env2 = max(math.log(n) / (2 * beta * delta), math.log(m) / (2 * beta))
        assert env2 <= env / 2 + 1e-15


def test_overflow_free_for_large_entries():
    x = np.array([[1e4, -1e4], [5e3, 0.0]])
    for sp in (SP11, SmoothingParams(1.0, 3.0)):
        F = smooth_minmax_value(x, sp)
        assert np.isfinite(F)
        assert np.all(np.isfinite(gradient(x, sp)))


def test_non_finite_input_rejected():
    with pytest.raises(ValueError):
        smooth_minmax_value([[np.inf, 0.0]], SP11)
    with pytest.raises(ValueError):
        exact_minmax([[np.nan]])


def test_weight_tensors_symmetric_cases():
    wt = weight_tensors(np.zeros((2, 3)), SP11)
    assert np.allclose(wt.p, 1 / 3, atol=1e-15)
    assert np.allclose(wt.q, 1 / 2, atol=1e-15)
    assert np.allclose(wt.pi, 1 / 6, atol=1e-15)
    wt1 = weight_tensors([[4.2]], SmoothingParams(3.0, 2.0))
    assert wt1.p[0, 0] == pytest.approx(1.0)
    assert wt1.q[0] == pytest.approx(1.0)
    assert wt1.pi[0, 0] == pytest.approx(1.0)


def test_weight_tensors_against_unshifted_high_precision():
    import mpmath
    mpmath.mp.dps = 50
    sp = SmoothingParams(5.0, 1.0)
    x = np.array([[10.0, 0.0], [0.0, 0.0]])
    wt = weight_tensors(x, sp)
    exact = mpmath.exp(50) / (mpmath.exp(50) + 1)
    assert abs(wt.p[1 - 1, 1 - 1] - float(exact)) <= 1e-12


def test_pi_normalization_and_positivity():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.normal(scale=3.0, size=rng.integers(1, 7, size=2))
        sp = SmoothingParams(*rng.uniform(0.2, 4.0, size=2))
        wt = weight_tensors(x, sp)
        assert abs(wt.pi.sum() - 1.0) <= 1e-12
        assert np.all(wt.pi >= 0)
        assert np.allclose(wt.p.sum(axis=1), 1.0, atol=1e-12)
        assert abs(wt.q.sum() - 1.0) <= 1e-12


def test_gradient_is_pi_and_matches_finite_differences():
    rng = np.random.default_rng(3)
    for shape in ((1, 1), (2, 3), (3, 2)):
        x = rng.normal(size=shape)
        sp = SmoothingParams(1.5, 0.8)
        g = gradient(x, sp)
        assert np.allclose(g, weight_tensors(x, sp).pi, atol=1e-15)
        gfd = fd_gradient(lambda z: smooth_minmax_value(z, sp), x)
        assert np.max(np.abs(g - gfd)) / max(np.max(np.abs(gfd)), 1e-12) <= 1e-6


def test_gradient_trivial_cases():
    assert np.allclose(gradient(np.zeros((2, 3)), SP11), 1 / 6, atol=1e-15)
    assert gradient([[0.3]], SP11)[0, 0] == pytest.approx(1.0)


def test_entrywise_monotonicity():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(3, 3))
    sp = SmoothingParams(2.0, 1.0)
    base = smooth_minmax_value(x, sp)
    for i in range(3):
        for j in range(3):
            bumped = x.copy()
            bumped[i, j] += 0.25
            assert smooth_minmax_value(bumped, sp) >= base - 1e-12


def test_derivative_tensors_zero_2x2():
    dt = derivative_tensors(np.zeros((2, 2)), SP11)
    assert np.sum(np.abs(dt.omega)) == pytest.approx(1.5, abs=1e-12)


def test_omega_symmetry():
    rng = np.random.default_rng(5)
    dt = derivative_tensors(rng.normal(size=(2, 3)), SmoothingParams(1.2, 2.0))
    assert np.allclose(dt.omega, dt.omega.T, atol=1e-14)


def test_hessian_and_third_match_finite_differences():
    rng = np.random.default_rng(6)
    for shape in ((1, 2), (2, 2)):
        x = rng.normal(size=shape)
        sp = SmoothingParams(1.0, 1.5)
        dt = derivative_tensors(x, sp)
        Hfd = fd_hessian(lambda z: smooth_minmax_value(z, sp), x)
        assert np.max(np.abs(sp.beta * dt.omega - Hfd)) \
            / max(np.max(np.abs(Hfd)), 1e-12) <= 1e-5
        Tfd = fd_third(lambda z: smooth_minmax_value(z, sp), x)
        assert np.max(np.abs(sp.beta ** 2 * dt.gamma - Tfd)) \
            / max(np.max(np.abs(Tfd)), 1e-12) <= 1e-4


def test_capacity_error_above_limit():
    with pytest.raises(CapacityError):
        derivative_tensors(np.zeros((5, 5)), SP11, limit=16)
    with pytest.raises(CapacityError):
        gamma_abs_sum(np.zeros((5, 5)), SP11, limit=16)


def test_omega_abs_sum_matches_brute_force():
    rng = np.random.default_rng(7)
    for n in range(1, 5):
        for m in range(1, 5):
            if n * m > 12:
                continue
            x = rng.normal(scale=2.0, size=(n, m))
            sp = SmoothingParams(*rng.uniform(0.3, 3.0, size=2))
            brute = float(np.sum(np.abs(derivative_tensors(x, sp).omega)))
            assert omega_abs_sum(x, sp) == pytest.approx(brute, abs=1e-12)


def test_omega_abs_sum_bound_any_size():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(3, 4))
    sp = SmoothingParams(1.0, 2.0)
    assert omega_abs_sum(x, sp) <= 6.0 * (1 + 1e-9)
    # bound holds at larger sizes where the tensor is never materialized
    x_big = rng.normal(size=(10, 12))
    assert omega_abs_sum(x_big, sp) <= 6.0 * (1 + 1e-9)


def test_gamma_abs_sum_bound():
    rng = np.random.default_rng(9)
    assert gamma_abs_sum(np.zeros((1, 1)), SmoothingParams(1.0, 0.5)) <= 6 * 1.5 ** 2
    x = rng.normal(size=(2, 2))
    assert gamma_abs_sum(x, SP11) <= 24.0 * (1 + 1e-9)


def test_composed_derivative_sums_arithmetic():
    x = np.zeros((2, 2))
    assert composed_derivative_sums(x, SP11, (1.0, 0.0, 0.0)) == (4.0, 24.0)
    assert composed_derivative_sums(x, SP11, (0.0, 0.0, 0.0)) == (0.0, 0.0)


def test_composed_tensor_sums_below_bounds():
    from minmaxgap.indicator import IndicatorSpec, IntervalUnion, SmoothIndicator
    rng = np.random.default_rng(10)
    g = SmoothIndicator(IndicatorSpec(tau=0.8, set=IntervalUnion([(-0.4, 0.6)])))
    x = rng.normal(size=(2, 2))
    sp = SmoothingParams(1.3, 0.9)
    F = smooth_minmax_value(x, sp)
    dg = (g.deriv1(F), g.deriv2(F), g.deriv3(F))
    s2, s3 = composed_tensor_abs_sums(x, sp, dg)
    b2, b3 = composed_derivative_sums(
        x, sp, (g.d1_bound, g.d2_bound, g.d3_bound))
    assert s2 <= b2 + 1e-9
    assert s3 <= b3 + 1e-9


def test_batch_value_agrees_with_scalar():
    rng = np.random.default_rng(11)
    xs = rng.normal(size=(40, 3, 2))
    sp = SmoothingParams(2.2, 0.4)
    batch = smooth_minmax_batch(xs, sp)
    for k in range(len(xs)):
        assert batch[k] == pytest.approx(smooth_minmax_value(xs[k], sp), abs=1e-12)


def test_invalid_params_rejected():
    for beta, delta in ((0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)):
        with pytest.raises(ValueError):
            SmoothingParams(beta, delta)
