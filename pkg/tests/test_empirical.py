import math
from fractions import Fraction

import numpy as np
import pytest

from minmaxgap.bounds import remark_parameters
from minmaxgap.empirical import (DiscreteDistribution, calibrate_C,
                                 distributional_gap, ecdf_interval_prob,
                                 minmax_samples, quantile_grid,
                                 strassen_min_coupling, strassen_primal_dual)
from minmaxgap.ensembles import equicorrelated, gaussian_spec, iid_spec


def test_minmax_samples_1x1_are_raw_entries():
    xs = minmax_samples(iid_spec(1, 1, "rademacher"), 200, seed=0)
    assert set(np.unique(xs)) <= {-1.0, 1.0}
    assert np.all(np.diff(xs) >= 0)


def test_minmax_samples_min_of_two_normals_mean():
    # E[min(Z1, Z2)] = -1/sqrt(pi) for independent standard normals
    N = 100_000
    xs = minmax_samples(gaussian_spec(2, 1), N, seed=1)
    se = xs.std(ddof=1) / math.sqrt(N)
    assert abs(xs.mean() - (-1.0 / math.sqrt(math.pi))) <= 3 * se


def test_ecdf_interval_prob():
    s = np.array([0.0, 1.0, 1.0, 2.0, 3.0])
    assert ecdf_interval_prob(s, 0.5, 2.5) == pytest.approx(0.6)
    assert ecdf_interval_prob(s, 1.0, 1.0) == pytest.approx(0.4)  # closed interval
    assert ecdf_interval_prob(s, -10.0, 10.0) == 1.0
    assert ecdf_interval_prob(s, 5.0, 6.0) == 0.0


def test_quantile_grid_covers_support():
    rng = np.random.default_rng(2)
    pooled = rng.normal(size=5000)
    grid = quantile_grid(pooled, seed=3)
    lo, hi = pooled.min(), pooled.max()
    assert all(lo <= a <= b <= hi for a, b in grid)
    assert len(grid) == 99 * 2 + 30
    assert quantile_grid(pooled, seed=3) == grid  # deterministic


def test_identical_laws_gap_within_noise():
    spec = gaussian_spec(3, 3)
    sp = remark_parameters(3, 3, 1.0)
    rep = distributional_gap(spec, spec, sp, tau=1.0, C=1.0, N=20_000, seed=4)
    assert rep.passed
    assert all(r["gap"] <= 2 * r["se"] + 1e-12 for r in rep.rows)


def test_degenerate_full_range_interval_gap_zero():
    spec = gaussian_spec(2, 2)
    sp = remark_parameters(2, 2, 1.0)
    rep = distributional_gap(spec, iid_spec(2, 2, "uniform"), sp, tau=1.0,
                             C=1.0, N=5_000, seed=5, grid=[(-1e12, 1e12)])
    (row,) = rep.rows
    assert row["mu_hat"] == 1.0 and row["nu_enlarged_hat"] == 1.0
    assert row["gap"] == 0.0


def test_gap_report_csv_shape():
    spec = gaussian_spec(2, 2)
    sp = remark_parameters(2, 2, 1.0)
    rep = distributional_gap(spec, spec, sp, tau=1.0, C=1.0, N=2_000, seed=6)
    lines = list(rep.csv_lines())
    assert lines[0] == "a,b,mu_hat,nu_enlarged_hat,gap,se"
    assert len(lines) == len(rep.rows) + 1
    assert all(len(line.split(",")) == 6 for line in lines[1:])


def test_gap_shape_mismatch_rejected():
    sp = remark_parameters(2, 2, 1.0)
    with pytest.raises(ValueError):
        distributional_gap(gaussian_spec(2, 2), gaussian_spec(2, 3), sp,
                           tau=1.0, C=1.0, N=100, seed=0)


def test_strassen_point_mass_examples():
    p0 = DiscreteDistribution.point_mass(0.0)
    p1 = DiscreteDistribution.point_mass(1.0)
    assert strassen_min_coupling(p0, p1, 0.5) == 1.0
    assert strassen_min_coupling(p0, p1, 1.5) == 0.0
    half = DiscreteDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
    assert strassen_min_coupling(half, p0, 0.5) == 0.5


def test_strassen_exact_duality_on_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(20):
        na, nb = rng.integers(1, 13, size=2)
        atoms_a = np.sort(rng.choice(np.arange(-20, 21) / 4.0, size=na,
                                     replace=False))
        atoms_b = np.sort(rng.choice(np.arange(-20, 21) / 4.0, size=nb,
                                     replace=False))
        wa = rng.integers(1, 9, size=na).astype(float)
        wb = rng.integers(1, 9, size=nb).astype(float)
        mu = DiscreteDistribution(atoms_a, wa / wa.sum())
        nu = DiscreteDistribution(atoms_b, wb / wb.sum())
        d = float(rng.choice([0.0, 0.25, 0.5, 1.0, 2.5]))
        primal, dual = strassen_primal_dual(mu, nu, d)
        assert primal == dual                       # exact Fractions
        assert Fraction(0) <= primal <= Fraction(1)
        # coupling of a distribution with itself at any distance is free
        assert strassen_min_coupling(mu, mu, d) == 0.0


def test_strassen_monotone_in_distance():
    rng = np.random.default_rng(8)
    mu = DiscreteDistribution(np.array([-1.0, 0.0, 2.0]),
                              np.array([0.25, 0.25, 0.5]))
    nu = DiscreteDistribution(np.array([-0.5, 1.0]), np.array([0.5, 0.5]))
    vals = [strassen_min_coupling(mu, nu, d) for d in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0


def test_calibrate_trivial_scenario_returns_zero():
    spec = gaussian_spec(2, 2)
    sp = remark_parameters(2, 2, 1.0)
    out = calibrate_C([(spec, spec, sp, 1.0)], N=10_000, seed=9)
    assert out["C_star"] == 0.0
    assert out["feasible"]


def test_calibrate_monotone_in_tau():
    # larger tau inflates both epsilon decay and the enlargement; C* never grows
    specA = gaussian_spec(2, 2)
    specB = gaussian_spec(2, 2, cov=equicorrelated(4, 0.3))
    outs = []
    for tau in (1.0, 1.5):
        sp = remark_parameters(2, 2, tau)
        outs.append(calibrate_C([(specA, specB, sp, tau)], N=10_000, seed=10))
    assert outs[1]["C_star"] <= outs[0]["C_star"] + 1e-9


def test_calibrate_reports_binding_scenario():
    specA = gaussian_spec(2, 2)
    sp = remark_parameters(2, 2, 1.0)
    out = calibrate_C([(specA, specA, sp, 1.0),
                       (specA, gaussian_spec(2, 2, cov=equicorrelated(4, 0.2)),
                        sp, 1.0)], N=8_000, seed=11)
    assert out["feasible"]
    assert "binding_scenario" in out
    assert len(out["margins"]) == 2
    with pytest.raises(ValueError):
        calibrate_C([], N=1_000, seed=0)


def test_discrete_distribution_validation():
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([0.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        strassen_min_coupling(DiscreteDistribution.point_mass(0.0),
                              DiscreteDistribution.point_mass(0.0), -1.0)
