import math

import numpy as np
import pytest
from scipy import integrate, stats

from minmaxgap.ensembles import (EnsembleSpec, SampleStream, covariance_factor,
                                 equicorrelated, exact_covariance,
                                 exact_entry_third_moment, gaussian_spec,
                                 iid_spec, linear_mix_spec, sample_batch)


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(n=0, m=2, family="gaussian")
    with pytest.raises(ValueError):
        EnsembleSpec(n=2, m=2, family="iid", distribution="cauchy")
    with pytest.raises(ValueError):
        iid_spec(2, 2, "student_t", t_df=3.0)
    with pytest.raises(ValueError):
        gaussian_spec(2, 2, cov=np.eye(3))
    with pytest.raises(ValueError):
        EnsembleSpec(n=2, m=2, family="weird")


def test_equicorrelated_matrix():
    S = equicorrelated(3, 0.25)
    assert np.allclose(np.diag(S), 1.0)
    assert S[0, 1] == 0.25 and S[2, 0] == 0.25
    with pytest.raises(ValueError):
        equicorrelated(3, -0.9)


def test_covariance_factor_reconstructs():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 5))
    S = A @ A.T
    L = covariance_factor(S)
    assert np.allclose(L @ L.T, S, atol=1e-10)
    # rank-deficient PSD handled by the eigendecomposition fallback
    S1 = np.ones((3, 3))
    L1 = covariance_factor(S1)
    assert np.allclose(L1 @ L1.T, S1, atol=1e-10)
    with pytest.raises(ValueError):
        covariance_factor(-np.eye(2))


def test_sample_shapes_and_rademacher_support():
    rng = np.random.default_rng(1)
    xs = sample_batch(iid_spec(3, 2, "rademacher"), 500, rng)
    assert xs.shape == (500, 3, 2)
    assert set(np.unique(xs)) == {-1.0, 1.0}


def test_standardized_entries():
    rng = np.random.default_rng(2)
    N = 60_000
    for dist in ("rademacher", "uniform", "exponential", "student_t"):
        xs = sample_batch(iid_spec(1, 1, dist, t_df=8.0), N, rng).ravel()
        se = xs.std(ddof=1) / math.sqrt(N)
        assert abs(xs.mean()) <= 4 * se
        v = xs ** 2
        assert abs(v.mean() - 1.0) <= 4 * v.std(ddof=1) / math.sqrt(N)


def test_gaussian_sample_covariance():
    rng = np.random.default_rng(3)
    cov = equicorrelated(4, 0.3)
    spec = gaussian_spec(2, 2, cov=cov)
    xs = sample_batch(spec, 50_000, rng).reshape(-1, 4)
    emp = np.cov(xs, rowvar=False)
    assert np.max(np.abs(emp - cov)) <= 0.03


def test_exact_covariance():
    cov = equicorrelated(4, 0.15)
    assert np.allclose(exact_covariance(gaussian_spec(2, 2, cov=cov)), cov)
    assert np.allclose(exact_covariance(iid_spec(2, 3, "uniform")), np.eye(6))
    L = np.array([[1.0, 0.0], [0.5, 0.5]])
    spec = linear_mix_spec(2, 1, L, "rademacher")
    assert np.allclose(exact_covariance(spec), L @ L.T)


def test_linear_mix_sample_covariance():
    rng = np.random.default_rng(4)
    L = np.array([[1.0, 0.0], [0.6, 0.8], [0.0, 1.0], [0.3, -0.3]])
    spec = linear_mix_spec(2, 2, L, "exponential")
    xs = sample_batch(spec, 80_000, rng).reshape(-1, 4)
    assert np.max(np.abs(np.cov(xs, rowvar=False) - L @ L.T)) <= 0.05


def test_third_absolute_moment_constants():
    # frozen closed forms, cross-checked against quadrature
    assert exact_entry_third_moment(iid_spec(1, 1, "rademacher")) == 1.0
    assert exact_entry_third_moment(iid_spec(1, 1, "uniform")) == pytest.approx(
        3.0 * math.sqrt(3.0) / 4.0, rel=1e-12)
    assert exact_entry_third_moment(iid_spec(1, 1, "exponential")) == pytest.approx(
        12.0 / math.e - 2.0, rel=1e-12)
    g = exact_entry_third_moment(gaussian_spec(1, 1))
    assert g == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), rel=1e-12)

    quad_uniform, _ = integrate.quad(
        lambda t: abs(t) ** 3 / (2 * math.sqrt(3)), -math.sqrt(3), math.sqrt(3))
    assert exact_entry_third_moment(iid_spec(1, 1, "uniform")) == pytest.approx(
        quad_uniform, rel=1e-9)
    quad_exp, _ = integrate.quad(
        lambda t: abs(t - 1.0) ** 3 * math.exp(-t), 0, 60)
    assert exact_entry_third_moment(iid_spec(1, 1, "exponential")) == pytest.approx(
        quad_exp, rel=1e-9)
    quad_gauss, _ = integrate.quad(
        lambda t: abs(t) ** 3 * stats.norm.pdf(t), -12, 12)
    assert g == pytest.approx(quad_gauss, rel=1e-9)


def test_third_moment_monte_carlo_only_cases():
    assert exact_entry_third_moment(iid_spec(1, 1, "student_t", t_df=6.0)) is None
    L = np.array([[1.0, 0.5]])
    assert exact_entry_third_moment(linear_mix_spec(1, 1, L, "uniform")) is None


def test_gaussian_third_moment_scales_with_sigma_cubed():
    spec = gaussian_spec(1, 1, cov=np.array([[4.0]]))
    assert exact_entry_third_moment(spec) == pytest.approx(
        8.0 * 2.0 * math.sqrt(2.0 / math.pi), rel=1e-12)


def test_stream_determinism():
    spec = iid_spec(2, 2, "uniform")
    a = SampleStream(spec, seed=7)
    b = SampleStream(spec, seed=7)
    assert np.array_equal(a.sample(), b.sample())
    assert np.array_equal(a.batch(10), b.batch(10))
    c = SampleStream(spec, seed=8)
    assert not np.array_equal(SampleStream(spec, seed=7).sample(), c.sample())


def test_stream_counter_addressing():
    spec = gaussian_spec(2, 3)
    s = SampleStream(spec, seed=11)
    x0 = s.sample()
    x1 = s.sample()
    assert np.array_equal(s.sample_at(0), x0)
    assert np.array_equal(s.sample_at(1), x1)
    assert not np.array_equal(x0, x1)


def test_independent_copy_is_decorrelated():
    spec = gaussian_spec(1, 1)
    s = SampleStream(spec, seed=3)
    t = s.independent_copy()
    xs = s.batch(20_000).ravel()
    ys = t.batch(20_000).ravel()
    assert not np.array_equal(xs, ys)
    assert abs(np.corrcoef(xs, ys)[0, 1]) <= 0.03
