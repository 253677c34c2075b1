"""Named verification checks over every analytic guarantee in the library.

Each check returns a record {name, value, bound, passed, seconds, detail}
so the CLI can emit a JSON summary; the acceptance test suite runs the
same checks at its pinned budgets.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from . import smooth_minmax as sm
from .bounds import estimate_B1, estimate_B2, remark_parameters
from .empirical import DiscreteDistribution, strassen_primal_dual
from .ensembles import gaussian_spec, iid_spec
from .indicator import IndicatorSpec, IntervalUnion, SmoothIndicator, epsilon
from .smooth_minmax import SmoothingParams
from .stein import (ComposedIndicatorFunction, LinearFunction,
                    QuadraticFunction, QuadratureBudget, closed_form_solution,
                    exchangeable_pair_moments, gaussian_interpolation_check,
                    stein_identity_residual)

BETAS = (0.5, 1.0, 5.0)
DELTAS = (0.5, 1.0, 3.0)


def _record(name, value, bound, passed, t0, detail=None):
    return {"name": name, "value": float(value), "bound": float(bound),
            "passed": bool(passed), "seconds": round(time.time() - t0, 3),
            "detail": detail or {}}


# -- finite-difference oracles ---------------------------------------------

def fd_gradient(fun, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.size)
    for a in range(x.size):
        e = np.zeros(x.size)
        e[a] = h
        g[a] = (fun(x + e.reshape(x.shape)) - fun(x - e.reshape(x.shape))) / (2 * h)
    return g.reshape(x.shape)


def fd_hessian(fun, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    d = x.size
    H = np.zeros((d, d))
    E = np.eye(d) * h

    def f(v):
        return fun(v.reshape(x.shape))

    x0 = x.reshape(-1)
    f0 = f(x0)
    for a in range(d):
        H[a, a] = (f(x0 + E[a]) - 2 * f0 + f(x0 - E[a])) / h ** 2
        for b in range(a + 1, d):
            v = (f(x0 + E[a] + E[b]) - f(x0 + E[a] - E[b])
                 - f(x0 - E[a] + E[b]) + f(x0 - E[a] - E[b])) / (4 * h ** 2)
            H[a, b] = H[b, a] = v
    return H


def fd_third(fun, x, h=1e-3):
    x = np.asarray(x, dtype=float)
    d = x.size
    T = np.zeros((d, d, d))

    def f(v):
        return fun(v.reshape(x.shape))

    x0 = x.reshape(-1)
    E = np.eye(d) * h
    for a in range(d):
        for b in range(d):
            for c in range(d):
                acc = 0.0
                for sa, sb, sc in itertools.product((1, -1), repeat=3):
                    acc += sa * sb * sc * f(x0 + sa * E[a] + sb * E[b] + sc * E[c])
                T[a, b, c] = acc / (8 * h ** 3)
    return T


# -- checks -----------------------------------------------------------------

def check_sandwich(n_matrices=1000, max_shape=8, seed=0, slack=1e-9):
    """Envelope minmax - log n/(bd) <= F <= minmax + log m/b, random sweep."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    worst = -math.inf
    count = 0
    for beta, delta in itertools.product(BETAS, DELTAS):
        sp = SmoothingParams(beta, delta)
        for _ in range(n_matrices):
            n = int(rng.integers(1, max_shape + 1))
            m = int(rng.integers(1, max_shape + 1))
            x = rng.normal(scale=rng.uniform(0.5, 3.0), size=(n, m))
            F = sm.smooth_minmax_value(x, sp)
            mm = sm.exact_minmax(x)
            lo = mm - math.log(n) / (beta * delta)
            hi = mm + math.log(m) / beta
            worst = max(worst, lo - F, F - hi)
            count += 1
    return _record("sandwich_envelope", worst, slack, worst <= slack, t0,
                   {"matrices": count})


def check_derivative_consistency(seed=1):
    """Gradient/Hessian/third tensor vs central finite differences."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    errs = {"gradient": 0.0, "hessian": 0.0, "third": 0.0}
    for shape in ((1, 1), (2, 2), (1, 3), (2, 3)):
        for sp in (SmoothingParams(1.0, 1.0), SmoothingParams(2.0, 0.5)):
            x = rng.normal(size=shape)

            def F(z):
                return sm.smooth_minmax_value(z, sp)

            g = sm.gradient(x, sp)
            gfd = fd_gradient(F, x)
            errs["gradient"] = max(errs["gradient"],
                                   np.max(np.abs(g - gfd)) / max(np.max(np.abs(gfd)), 1e-12))
            dt = sm.derivative_tensors(x, sp)
            Hfd = fd_hessian(F, x)
            scale_h = max(np.max(np.abs(Hfd)), 1e-12)
            errs["hessian"] = max(errs["hessian"],
                                  np.max(np.abs(sp.beta * dt.omega - Hfd)) / scale_h)
            Tfd = fd_third(F, x)
            scale_t = max(np.max(np.abs(Tfd)), 1e-12)
            errs["third"] = max(errs["third"],
                                np.max(np.abs(sp.beta ** 2 * dt.gamma - Tfd)) / scale_t)
    tols = {"gradient": 1e-6, "hessian": 1e-5, "third": 1e-4}
    passed = all(errs[k] <= tols[k] for k in errs)
    return _record("derivative_consistency", max(errs.values()), max(tols.values()),
                   passed, t0, {"errors": errs, "tolerances": tols})


def check_tensor_sums(seed=2):
    """pi sums to 1; |omega| and |gamma| sums within their bounds; the
    closed-form omega sum matches brute force on all n*m <= 12 shapes."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    worst_pi = 0.0
    worst_closed = 0.0
    ok = True
    detail = {}
    for n in range(1, 5):
        for m in range(1, 5):
            if n * m > 12:
                continue
            for sp in (SmoothingParams(1.0, 1.0), SmoothingParams(3.0, 0.5),
                       SmoothingParams(0.7, 2.0)):
                x = rng.normal(size=(n, m)) * 2.0
                wt = sm.weight_tensors(x, sp)
                worst_pi = max(worst_pi, abs(float(np.sum(wt.pi)) - 1.0))
                oas = sm.omega_abs_sum(x, sp)
                dt = sm.derivative_tensors(x, sp)
                brute = float(np.sum(np.abs(dt.omega)))
                worst_closed = max(worst_closed, abs(oas - brute))
                gas = sm.gamma_abs_sum(x, sp)
                ok &= oas <= 2 * (1 + sp.delta) * (1 + 1e-9)
                ok &= gas <= 6 * (1 + sp.delta) ** 2 * (1 + 1e-9)
    ok &= worst_pi <= 1e-12 and worst_closed <= 1e-12
    detail = {"pi_sum_error": worst_pi, "omega_closed_vs_brute": worst_closed}
    return _record("tensor_sum_bounds", max(worst_pi, worst_closed), 1e-12, ok,
                   t0, detail)


def check_epsilon_formula():
    """(1,1,1) value and the closed form at the default parameter rule."""
    t0 = time.time()
    e = epsilon(SmoothingParams(1.0, 1.0), 1.0)
    err_a = abs(e.epsilon - 2.0 * math.exp(-1.5))
    ok = err_a <= 1e-7 and abs(e.alpha - 3.0) < 1e-12
    worst_rel = 0.0
    for n, m in ((2, 2), (4, 4), (8, 16)):
        sp = remark_parameters(n, m, 1.0)
        got = epsilon(sp, 1.0).epsilon
        L = math.log(n * m)
        closed = 2.0 * math.sqrt(math.e) * L * (n * m) ** (-2.0 * L)
        worst_rel = max(worst_rel, abs(got - closed) / closed)
    ok &= worst_rel <= 1e-12
    return _record("epsilon_formula", max(err_a, worst_rel), 1e-7, ok, t0,
                   {"point_value_error": err_a, "remark_rule_rel_error": worst_rel})


def check_indicator_contract(n_sets=20, taus=(0.05, 0.2, 1.0), grid_pts=10_000,
                             seed=3):
    """Indicator sandwich and derivative sup norms on dense grids."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    ok = True
    worst = {"sandwich": 0.0, "d1": 0.0, "d2": 0.0, "d3": 0.0}
    for tau in taus:
        for _ in range(n_sets):
            k = int(rng.integers(1, 4))
            pts = np.sort(rng.uniform(-3, 3, size=2 * k))
            Q = IntervalUnion(list(zip(pts[0::2], pts[1::2])))
            g = SmoothIndicator(IndicatorSpec(tau=tau, set=Q))
            lo, hi = Q.enlarge(6 * tau).finite_span()
            ts = np.linspace(lo, hi, grid_pts)
            vals = g.value(ts)
            inQ = np.array([Q.contains(t) for t in ts])
            in3 = np.array([Q.enlarge(3 * tau).contains(t) for t in ts])
            worst["sandwich"] = max(worst["sandwich"],
                                    float(np.max(inQ - vals)),
                                    float(np.max(vals - in3)))
            worst["d1"] = max(worst["d1"], float(np.max(np.abs(g.deriv1(ts)))) * tau)
            worst["d2"] = max(worst["d2"], float(np.max(np.abs(g.deriv2(ts)))) * tau ** 2)
            worst["d3"] = max(worst["d3"], float(np.max(np.abs(g.deriv3(ts)))) * tau ** 3)
    ok = (worst["sandwich"] <= 1e-12 and worst["d1"] <= 1.0
          and worst["d2"] <= 0.7 and worst["d3"] <= 2.3)
    return _record("indicator_contract", worst["sandwich"], 1e-12, ok, t0, worst)


def check_stein_closed_form():
    """Pointwise identity from the analytic h: residual at rounding level."""
    t0 = time.time()
    worst = 0.0
    for f, x in ((LinearFunction(np.array([[1.5]]), 0.3), np.array([[0.7]])),
                 (QuadraticFunction((1, 1), A=[[2.0]]), np.array([[2.0]])),
                 (QuadraticFunction((1, 2), A=np.eye(2), b=[0.5, -1.0]),
                  np.array([[0.4, -1.2]]))):
        cov = np.eye(x.size)
        sol = closed_form_solution(f, cov)
        qb = QuadratureBudget(8, 1000, 0)
        r = stein_identity_residual(x, f, cov, qb, solution=sol)
        worst = max(worst, r.residual_covariance_form)
    return _record("stein_identity_closed_form", worst, 1e-10, worst <= 1e-10, t0)


def check_stein_composed(mc_samples=200_000, nodes=32, seed=4, tol=5e-3):
    """Covariance-weighted residual for g o F at a random 2x2 input."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    sp = SmoothingParams(1.0, 1.0)
    g = SmoothIndicator(IndicatorSpec(tau=1.0, set=IntervalUnion([(-0.5, 0.8)])))
    f = ComposedIndicatorFunction(g, sp, (2, 2))
    x = rng.normal(size=(2, 2))
    qb = QuadratureBudget(nodes, mc_samples, seed)
    r = stein_identity_residual(x, f, np.eye(4), qb, tolerance=tol)
    return _record("stein_identity_composed", r.residual_covariance_form, tol,
                   r.covariance_form_passes, t0,
                   {"paper_form_residual": r.residual_paper_form})


def check_interpolation(N=200_000, seed=5):
    """Quadratic test functions in closed form; g o F by paired Monte Carlo."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    ok = True
    worst_quad = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 5))
        M = rng.normal(size=(d, d))
        p = QuadraticFunction((1, d), A=M + M.T, b=rng.normal(size=d))
        A1 = M @ M.T + np.eye(d)
        M2 = rng.normal(size=(d, d))
        A2 = M2 @ M2.T + np.eye(d)
        rep = gaussian_interpolation_check(p, A1, A2, [0.25, 0.5, 0.75], 100, seed)
        worst_quad = max(worst_quad, max(abs(r["diff"]) for r in rep["rows"]))
        ok &= rep["pass"]
    sp = SmoothingParams(1.0, 1.0)
    g = SmoothIndicator(IndicatorSpec(tau=1.0, set=IntervalUnion([(-0.3, 0.9)])))
    f = ComposedIndicatorFunction(g, sp, (2, 2))
    from .ensembles import equicorrelated
    rep = gaussian_interpolation_check(f, np.eye(4), equicorrelated(4, 0.2),
                                       [0.1, 0.3, 0.5, 0.7, 0.9], N, seed)
    ok &= rep["pass"]
    worst_z = max(abs(r["diff"]) / max(r["se"], 1e-12) for r in rep["rows"])
    return _record("gaussian_interpolation", worst_quad, 1e-10,
                   ok and worst_quad <= 1e-10, t0,
                   {"composed_worst_z": worst_z, "composed_pass": rep["pass"]})


def check_exchangeable_pairs(N=100_000, seed=2):
    """Conditional moments of Delta for three 2x2 ensembles."""
    t0 = time.time()
    specs = [gaussian_spec(2, 2), iid_spec(2, 2, "rademacher"),
             iid_spec(2, 2, "exponential")]
    worst = 0.0
    ok = True
    for k, spec in enumerate(specs):
        rep = exchangeable_pair_moments(spec, N, seed + k)
        ok &= rep["pass"]
        for c in rep["checks"]:
            worst = max(worst, c["max_z_first"], c["max_z_second"])
    return _record("exchangeable_pair_moments", worst, 3.0, ok, t0)


def check_strassen(seed=7, n_pairs=20):
    """Primal = dual exactly on random discrete pairs; point-mass cases."""
    t0 = time.time()
    pm = DiscreteDistribution.point_mass
    from .empirical import strassen_min_coupling
    ok = (strassen_min_coupling(pm(0.0), pm(1.0), 0.5) == 1.0
          and strassen_min_coupling(pm(0.0), pm(1.0), 1.5) == 0.0
          and strassen_min_coupling(
              DiscreteDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.5])),
              pm(0.0), 0.5) == 0.5)
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n_pairs):
        na, nb = rng.integers(1, 13, size=2)
        a = np.sort(rng.choice(np.arange(-20, 21), size=na, replace=False)) / 4.0
        b = np.sort(rng.choice(np.arange(-20, 21), size=nb, replace=False)) / 4.0
        wa = rng.integers(1, 9, size=na).astype(float)
        wb = rng.integers(1, 9, size=nb).astype(float)
        mu = DiscreteDistribution(a, wa / wa.sum())
        nu = DiscreteDistribution(b, wb / wb.sum())
        p, dl = strassen_primal_dual(mu, nu, float(rng.choice([0.0, 0.25, 0.5, 1.0])))
        mismatches += (p != dl)
    ok &= mismatches == 0
    return _record("strassen_primal_dual", mismatches, 0, ok, t0,
                   {"pairs": n_pairs})


def check_b_component_oracles(runs=200, N=10_000, seed=8):
    """Closed-form 1x1 component values covered by +-radius in >= 99% of runs."""
    t0 = time.time()
    targets = {
        "gaussian_B1": (lambda s: estimate_B1(gaussian_spec(1, 1), N, s),
                        4.0 * math.exp(-0.5) / math.sqrt(2 * math.pi)),  # E|Z^2-1|
        "gaussian_B2": (lambda s: estimate_B2(gaussian_spec(1, 1), N, s),
                        2.0 * math.sqrt(2.0 / math.pi)),
        "uniform_B2": (lambda s: estimate_B2(iid_spec(1, 1, "uniform"), N, s),
                       3.0 * math.sqrt(3.0) / 4.0),
        "rademacher_B1": (lambda s: estimate_B1(iid_spec(1, 1, "rademacher"), N, s),
                          0.0),
        "rademacher_B2": (lambda s: estimate_B2(iid_spec(1, 1, "rademacher"), N, s),
                          1.0),
    }
    coverage = {}
    ok = True
    for idx, (name, (fn, truth)) in enumerate(targets.items()):
        hits = 0
        for r in range(runs):
            est = fn(seed + 7919 * r + 131 * idx)
            if abs(est.value - truth) <= max(est.radius, 1e-12):
                hits += 1
        coverage[name] = hits / runs
        ok &= coverage[name] >= 0.99
    return _record("b_component_oracles", min(coverage.values()), 0.99, ok, t0,
                   coverage)


QUICK_OVERRIDES = {
    "check_sandwich": {"n_matrices": 100},
    "check_stein_composed": {"mc_samples": 20_000},
    "check_interpolation": {"N": 20_000},
    "check_exchangeable_pairs": {"N": 20_000},
    "check_b_component_oracles": {"runs": 20},
}

ALL_CHECKS = [check_sandwich, check_derivative_consistency, check_tensor_sums,
              check_epsilon_formula, check_indicator_contract,
              check_stein_closed_form, check_stein_composed,
              check_interpolation, check_exchangeable_pairs, check_strassen,
              check_b_component_oracles]


def run_all(quick: bool = False):
    records = []
    for fn in ALL_CHECKS:
        kwargs = QUICK_OVERRIDES.get(fn.__name__, {}) if quick else {}
        records.append(fn(**kwargs))
    return {"checks": records, "pass": all(r["passed"] for r in records)}
