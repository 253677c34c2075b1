"""Empirical side: min-max sampling, distributional gaps, Strassen coupling.

The gap check is the proof target of the coupling inequality: over a
grid of intervals A,

    muhat(A) - nuhat(A^{2*lambda + 3*tau})  <=  theorem RHS,

with binomial error bars.  The Strassen min-coupling solves, at discrete
desk scale, min P(|V - W| > d) over couplings of two finitely supported
laws; it is computed exactly (Fraction arithmetic) as a bipartite
max-flow, and checked against the dual sup over atom subsets.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bounds import (BoundComponents, BoundReport, compute_B3, estimate_B1,
                     estimate_B2, exact_component, lambda_value, theorem_rhs)
from .ensembles import EnsembleSpec, exact_covariance, sample_batch
from .smooth_minmax import SmoothingParams

_SAMPLE_CHUNK = 50_000


@dataclass(frozen=True)
class DiscreteDistribution:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 1 or atoms.shape != weights.shape:
            raise ValueError("atoms and weights must be matching 1-d arrays")
        if np.any(np.diff(atoms) <= 0):
            raise ValueError("atoms must be strictly increasing")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @staticmethod
    def point_mass(v: float) -> "DiscreteDistribution":
        return DiscreteDistribution(np.array([float(v)]), np.array([1.0]))


def minmax_samples(spec: EnsembleSpec, N: int, seed: int) -> np.ndarray:
    """N sorted realizations of min_i max_j X[i,j]."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    out = np.empty(N)
    done = 0
    while done < N:
        k = min(_SAMPLE_CHUNK, N - done)
        batch = sample_batch(spec, k, rng)
        out[done:done + k] = np.min(np.max(batch, axis=2), axis=1)
        done += k
    out.sort()
    return out


def ecdf_interval_prob(sorted_samples: np.ndarray, a: float, b: float) -> float:
    """Empirical probability of the closed interval [a, b]."""
    lo = np.searchsorted(sorted_samples, a, side="left")
    hi = np.searchsorted(sorted_samples, b, side="right")
    return (hi - lo) / len(sorted_samples)


def quantile_grid(pooled: np.ndarray, seed: int, n_quantiles: int = 99,
                  n_random: int = 30):
    """Interval grid: quantile-to-quantile intervals plus random
    sub-intervals of the pooled support."""
    qs = np.quantile(pooled, np.linspace(0.01, 0.99, n_quantiles))
    lo, hi = float(pooled.min()), float(pooled.max())
    intervals = [(lo, float(q)) for q in qs]
    intervals += [(float(q), hi) for q in qs]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    for _ in range(n_random):
        a, b = np.sort(rng.uniform(lo, hi, size=2))
        intervals.append((float(a), float(b)))
    return intervals


@dataclass
class GapReport:
    spec_a: str
    spec_b: str
    enlargement: float
    rows: list                      # dicts: a, b, mu_hat, nu_enlarged_hat, gap, se
    max_gap: float
    max_gap_se: float
    bound: BoundReport
    rhs: float
    passed: bool
    N: int
    seed: int
    extras: dict = field(default_factory=dict)

    CSV_HEADER = "a,b,mu_hat,nu_enlarged_hat,gap,se"

    def to_dict(self):
        return {"spec_a": self.spec_a, "spec_b": self.spec_b,
                "enlargement": self.enlargement,
                "max_gap": self.max_gap, "max_gap_se": self.max_gap_se,
                "rhs": self.rhs, "passed": self.passed,
                "N": self.N, "seed": self.seed,
                "bound": self.bound.to_dict(),
                "rows": self.rows, **self.extras}

    def csv_lines(self):
        yield self.CSV_HEADER
        for r in self.rows:
            yield (f"{r['a']:.12g},{r['b']:.12g},{r['mu_hat']:.12g},"
                   f"{r['nu_enlarged_hat']:.12g},{r['gap']:.12g},{r['se']:.12g}")


def _spec_label(spec: EnsembleSpec) -> str:
    if spec.family == "gaussian":
        return f"gaussian[{spec.n}x{spec.m}]"
    return f"{spec.family}:{spec.distribution}[{spec.n}x{spec.m}]"


def bound_components_for(specA: EnsembleSpec, specB: EnsembleSpec,
                         N: int, seed: int,
                         gaussian_only: bool = False) -> BoundComponents:
    """B components for a pair; B3 exact, B1/B2 Monte Carlo unless the
    Gaussian variant makes them irrelevant."""
    b3 = exact_component(compute_B3(exact_covariance(specA), exact_covariance(specB)))
    if gaussian_only:
        zero = exact_component(0.0)
        return BoundComponents(B1=zero, B1p=zero, B2=zero, B2p=zero, B3=b3)
    return BoundComponents(
        B1=estimate_B1(specA, N, seed + 11),
        B1p=estimate_B1(specB, N, seed + 12),
        B2=estimate_B2(specA, N, seed + 13),
        B2p=estimate_B2(specB, N, seed + 14),
        B3=b3)


def distributional_gap(specA: EnsembleSpec, specB: EnsembleSpec,
                       sp: SmoothingParams, tau: float, C: float,
                       N: int, seed: int, grid=None,
                       comps: BoundComponents | None = None) -> GapReport:
    """Max over the interval grid of muhat(A) - nuhat(A^{2 lambda + 3 tau})."""
    if specA.shape != specB.shape:
        raise ValueError("ensembles must share a shape")
    n, m = specA.shape
    gaussian = specA.is_gaussian and specB.is_gaussian
    if comps is None:
        comp_N = max(N // 10, 1_000)
        comps = bound_components_for(specA, specB, comp_N, seed,
                                     gaussian_only=gaussian)
    bound = theorem_rhs(sp, tau, C, comps, n, m, gaussian=gaussian)
    rhs = bound.rhs_gaussian if gaussian else bound.rhs_general
    r = bound.threshold
    mu = minmax_samples(specA, N, seed + 1)
    nu = minmax_samples(specB, N, seed + 2)
    if grid is None:
        grid = quantile_grid(np.concatenate([mu, nu]), seed + 3)
    rows = []
    for a, b in grid:
        p_mu = ecdf_interval_prob(mu, a, b)
        p_nu = ecdf_interval_prob(nu, a - r, b + r)
        se = math.sqrt(p_mu * (1 - p_mu) / N + p_nu * (1 - p_nu) / N)
        rows.append({"a": a, "b": b, "mu_hat": p_mu, "nu_enlarged_hat": p_nu,
                     "gap": p_mu - p_nu, "se": se})
    worst = max(rows, key=lambda row: row["gap"])
    max_gap, max_se = worst["gap"], worst["se"]
    # pass rule: gap <= rhs + 2 * binomial SE of the gap estimate
    passed = all(row["gap"] <= rhs + 2.0 * row["se"] for row in rows)
    return GapReport(spec_a=_spec_label(specA), spec_b=_spec_label(specB),
                     enlargement=r, rows=rows, max_gap=max_gap,
                     max_gap_se=max_se, bound=bound, rhs=rhs, passed=passed,
                     N=N, seed=seed)


# ---------------------------------------------------------------------------
# Strassen min-coupling at discrete desk scale (exact arithmetic).
# ---------------------------------------------------------------------------

def _max_flow_fraction(caps_src, caps_snk, allowed):
    """Max flow on source -> mu atoms -> nu atoms -> sink, Fractions.

    caps_src[i], caps_snk[j] are atom masses; allowed[i][j] marks edges
    of unbounded capacity.  BFS augmenting paths (Edmonds-Karp); the
    graph has at most ~26 nodes, so this is instant and exact.
    """
    nmu, nnu = len(caps_src), len(caps_snk)
    V = nmu + nnu + 2
    S, T = V - 2, V - 1
    INF = Fraction(10 ** 9)
    r = [[Fraction(0)] * V for _ in range(V)]  # residual capacities
    for i in range(nmu):
        r[S][i] = Fraction(caps_src[i])
    for j in range(nnu):
        r[nmu + j][T] = Fraction(caps_snk[j])
    for i in range(nmu):
        for j in range(nnu):
            if allowed[i][j]:
                r[i][nmu + j] = INF
    total = Fraction(0)
    while True:
        parent = [-1] * V
        parent[S] = S
        dq = deque([S])
        while dq and parent[T] == -1:
            u = dq.popleft()
            for v in range(V):
                if parent[v] == -1 and r[u][v] > 0:
                    parent[v] = u
                    dq.append(v)
        if parent[T] == -1:
            return total
        aug = None
        v = T
        while v != S:
            u = parent[v]
            aug = r[u][v] if aug is None else min(aug, r[u][v])
            v = u
        v = T
        while v != S:
            u = parent[v]
            r[u][v] -= aug
            r[v][u] += aug
            v = u
        total += aug


def strassen_primal_dual(mu: DiscreteDistribution, nu: DiscreteDistribution,
                         d: float):
    """(primal, dual) for min P(|V - W| > d), exact Fractions.

    primal: 1 - (max mass matched within distance d), via max flow;
    dual:   max over subsets S of mu's atoms of mu(S) - nu(S^d).
    """
    if d < 0:
        raise ValueError("distance must be nonnegative")
    wa = [Fraction(float(w)) for w in mu.weights]
    wb = [Fraction(float(w)) for w in nu.weights]
    # normalize exactly so primal/dual cancellation is exact
    wa = [w / sum(wa) for w in wa]
    wb = [w / sum(wb) for w in wb]
    allowed = [[abs(va - vb) <= d + 1e-12 for vb in nu.atoms] for va in mu.atoms]
    matched = _max_flow_fraction(wa, wb, allowed)
    primal = Fraction(1) - matched
    dual = Fraction(0)
    na = len(mu.atoms)
    for mask in range(1, 1 << na):
        mu_S = sum(wa[i] for i in range(na) if mask >> i & 1)
        nu_Sd = sum(wb[j] for j in range(len(nu.atoms))
                    if any(mask >> i & 1 and allowed[i][j] for i in range(na)))
        dual = max(dual, mu_S - nu_Sd)
    return primal, dual


def strassen_min_coupling(mu: DiscreteDistribution, nu: DiscreteDistribution,
                          d: float) -> float:
    """Minimal P(|V - W| > d) over couplings; asserts primal = dual."""
    primal, dual = strassen_primal_dual(mu, nu, d)
    if primal != dual:
        raise AssertionError(f"Strassen duality violated: {primal} != {dual}")
    return float(primal)


# ---------------------------------------------------------------------------
# Calibration of the universal constant C.
# ---------------------------------------------------------------------------

def _gap_passes_at(report_rows, rhs):
    return all(row["gap"] <= rhs + 2.0 * row["se"] for row in report_rows)


def calibrate_C(scenarios, N: int, seed: int, c_hi: float = 1e6,
                tol: float = 1e-4) -> dict:
    """Smallest C >= 0 such that every scenario's gap check passes.

    scenarios: iterable of (specA, specB, SmoothingParams, tau).  The
    gaps do not depend on C, so each scenario is sampled once and C is
    found by bisection on the monotone RHS.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("need at least one scenario")
    prepared = []
    for k, (specA, specB, sp, tau) in enumerate(scenarios):
        rep = distributional_gap(specA, specB, sp, tau, C=1.0,
                                 N=N, seed=seed + 1000 * k)
        gaussian = specA.is_gaussian and specB.is_gaussian
        prepared.append((rep, sp, tau, gaussian))

    def passes(C):
        for rep, sp, tau, gaussian in prepared:
            if C <= 0:
                eps = rep.bound.eps.epsilon
                rhs = eps / (1.0 - eps)
            else:
                b = theorem_rhs(sp, tau, C, rep.bound.components,
                                rep.bound.n, rep.bound.m, gaussian=gaussian)
                rhs = b.rhs_gaussian if gaussian else b.rhs_general
            if not _gap_passes_at(rep.rows, rhs):
                return False
        return True

    if passes(0.0):
        c_star = 0.0
    else:
        lo, hi = 0.0, 1.0
        while not passes(hi):
            hi *= 2.0
            if hi > c_hi:
                return {"C_star": math.inf, "feasible": False}
        while hi - lo > tol * max(1.0, hi):
            mid = (lo + hi) / 2.0
            if passes(mid):
                hi = mid
            else:
                lo = mid
        c_star = hi
    margins = []
    for rep, sp, tau, gaussian in prepared:
        worst = max(row["gap"] - 2.0 * row["se"] for row in rep.rows)
        margins.append({"scenario": f"{rep.spec_a} vs {rep.spec_b}",
                        "max_adjusted_gap": worst,
                        "rhs_at_C0": rep.bound.eps.epsilon / (1 - rep.bound.eps.epsilon)})
    binding = max(margins, key=lambda s: s["max_adjusted_gap"])
    return {"C_star": c_star, "feasible": True, "binding_scenario": binding["scenario"],
            "margins": margins, "N": N, "seed": seed}
