"""Bound components and assembly of the coupling-inequality threshold/RHS.

The deviation threshold is 2*lambda + 3*tau with
lambda = max(log n/(beta*delta), log m/beta), and the right-hand side is

    (eps + C*phi/tau * (B1 + B1' + B3 + phi*(B2 + B2'))) / (1 - eps)

dropping the B1/B2 terms when both ensembles are Gaussian.  The
universal constant C is a configuration parameter (default 1.0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ensembles import EnsembleSpec, exact_covariance, sample_batch
from .indicator import EpsilonValue, epsilon
from .smooth_minmax import SmoothingParams

_B_CHUNK = 20_000


@dataclass(frozen=True)
class ComponentEstimate:
    value: float
    radius: float = 0.0          # 3 standard errors; 0 for exact values
    method: str = "exact"        # "exact" or "monte-carlo"
    samples: int = 0
    seed: int | None = None

    def to_dict(self):
        return {"value": self.value, "radius": self.radius, "method": self.method,
                "samples": self.samples, "seed": self.seed}


@dataclass(frozen=True)
class BoundComponents:
    B1: ComponentEstimate
    B1p: ComponentEstimate
    B2: ComponentEstimate
    B2p: ComponentEstimate
    B3: ComponentEstimate

    def to_dict(self):
        return {k: getattr(self, k).to_dict() for k in ("B1", "B1p", "B2", "B2p", "B3")}


def exact_component(value: float) -> ComponentEstimate:
    return ComponentEstimate(value=float(value))


def lambda_value(n: int, m: int, sp: SmoothingParams) -> float:
    """Envelope half-width: max(log n/(beta*delta), log m/beta)."""
    return max(math.log(n) / (sp.beta * sp.delta), math.log(m) / sp.beta)


def threshold(n: int, m: int, sp: SmoothingParams, tau: float) -> float:
    return 2.0 * lambda_value(n, m, sp) + 3.0 * tau


def compute_B3(covA, covB) -> float:
    """Max absolute entrywise covariance discrepancy; exact."""
    covA = np.asarray(covA, dtype=float)
    covB = np.asarray(covB, dtype=float)
    if covA.shape != covB.shape:
        raise ValueError(f"covariance shapes differ: {covA.shape} vs {covB.shape}")
    return float(np.max(np.abs(covA - covB)))


def _mc_mean(values_fn, spec, N, seed, chunk=_B_CHUNK):
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < N:
        k = min(chunk, N - done)
        vals = values_fn(sample_batch(spec, k, rng))
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals ** 2))
        done += k
    mean = total / N
    var = max(total_sq / N - mean ** 2, 0.0) * N / max(N - 1, 1)
    return mean, 3.0 * math.sqrt(var / N)


def estimate_B1(spec: EnsembleSpec, N: int, seed: int) -> ComponentEstimate:
    """E[max over index pairs |X_a X_b - E[X_a X_b]|], centered with the
    ensemble's declared exact covariance."""
    cov = exact_covariance(spec)

    def vals(batch):
        V = batch.reshape(len(batch), -1)
        prods = V[:, :, None] * V[:, None, :]
        return np.max(np.abs(prods - cov[None]), axis=(1, 2))

    # the (chunk, d, d) product array is the memory hot spot
    chunk = max(64, min(_B_CHUNK, 4_000_000 // (spec.dim ** 2)))
    mean, radius = _mc_mean(vals, spec, N, seed, chunk=chunk)
    return ComponentEstimate(value=mean, radius=radius, method="monte-carlo",
                             samples=N, seed=seed)


def estimate_B2(spec: EnsembleSpec, N: int, seed: int) -> ComponentEstimate:
    """E[max_{i,j} |X_ij|^3]."""

    def vals(batch):
        return np.max(np.abs(batch) ** 3, axis=(1, 2))

    mean, radius = _mc_mean(vals, spec, N, seed)
    return ComponentEstimate(value=mean, radius=radius, method="monte-carlo",
                             samples=N, seed=seed)


@dataclass(frozen=True)
class BoundReport:
    n: int
    m: int
    sp: SmoothingParams
    tau: float
    C: float
    eps: EpsilonValue
    lam: float
    threshold: float
    rhs_general: float
    rhs_gaussian: float | None
    components: BoundComponents
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "n": self.n, "m": self.m,
            "params": {"beta": self.sp.beta, "delta": self.sp.delta,
                       "phi": self.sp.phi, "tau": self.tau, "C": self.C},
            "epsilon": {"alpha": self.eps.alpha, "epsilon": self.eps.epsilon},
            "lambda": self.lam,
            "threshold": self.threshold,
            "rhs_general": self.rhs_general,
            "rhs_gaussian": self.rhs_gaussian,
            "components": self.components.to_dict(),
            "provenance": self.provenance,
        }


def _rhs(eps_val: float, C: float, phi: float, tau: float, bsum: float) -> float:
    return (eps_val + C * phi / tau * bsum) / (1.0 - eps_val)


def theorem_rhs(sp: SmoothingParams, tau: float, C: float,
                comps: BoundComponents, n: int, m: int,
                gaussian: bool = False) -> BoundReport:
    """Assemble the threshold and right-hand side(s) into a report."""
    if C <= 0:
        raise ValueError("C must be positive")
    eps = epsilon(sp, tau)   # raises if tau <= 1/phi
    bsum = (comps.B1.value + comps.B1p.value + comps.B3.value
            + sp.phi * (comps.B2.value + comps.B2p.value))
    rhs_general = _rhs(eps.epsilon, C, sp.phi, tau, bsum)
    rhs_gaussian = _rhs(eps.epsilon, C, sp.phi, tau, comps.B3.value) if gaussian else None
    return BoundReport(
        n=n, m=m, sp=sp, tau=tau, C=C, eps=eps,
        lam=lambda_value(n, m, sp), threshold=threshold(n, m, sp, tau),
        rhs_general=rhs_general, rhs_gaussian=rhs_gaussian, components=comps,
        provenance={k: getattr(comps, k).method
                    for k in ("B1", "B1p", "B2", "B2p", "B3")})


def remark_parameters(n: int, m: int, tau: float) -> SmoothingParams:
    """Default rule beta = log(nm)/tau, delta = 1; needs n*m >= 2."""
    if n * m < 2:
        raise ValueError("n*m must be at least 2 (log(nm) would vanish)")
    if not tau > 0:
        raise ValueError("tau must be positive")
    return SmoothingParams(beta=math.log(n * m) / tau, delta=1.0)


def optimize_parameters(comps: BoundComponents, n: int, m: int, C: float,
                        threshold_cap: float, gaussian: bool = False):
    """Minimize the RHS over (beta, delta, tau) under a threshold cap.

    Coordinates are (log beta, log delta, log(tau*phi - 1)), which makes
    both constraints (tau*phi > 1 and positivity) automatic; the cap is
    enforced by an infinite penalty.  Coarse grid scan, then Nelder-Mead
    from the best grid point.  Deterministic.
    """
    if threshold_cap <= 0:
        return {"feasible": False, "min_threshold": 0.0,
                "note": "threshold cap must be positive; the threshold can be "
                        "made arbitrarily small but not nonpositive"}

    def unpack(z):
        beta = math.exp(z[0])
        delta = math.exp(z[1])
        sp = SmoothingParams(beta=beta, delta=delta)
        tau = (1.0 + math.exp(z[2])) / sp.phi
        return sp, tau

    def objective(z):
        try:
            sp, tau = unpack(z)
        except (OverflowError, ValueError):
            return math.inf
        if threshold(n, m, sp, tau) > threshold_cap:
            return math.inf
        rep = theorem_rhs(sp, tau, C, comps, n, m, gaussian=gaussian)
        return rep.rhs_gaussian if gaussian else rep.rhs_general

    grid = [(lb, ld, ls)
            for lb in np.linspace(-2, 4, 9)
            for ld in np.linspace(-2, 3, 8)
            for ls in np.linspace(-2, 4, 9)]
    evals = [(objective(z), z) for z in grid]
    best_val, best_z = min(evals, key=lambda t: t[0])
    if not math.isfinite(best_val):
        # cap smaller than anything on the grid; report the closest we got
        min_thr = min(threshold(n, m, *unpack(z)) for z in grid)
        return {"feasible": False, "min_threshold": float(min_thr)}
    res = minimize(objective, np.array(best_z), method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 2000})
    z = res.x if math.isfinite(res.fun) and res.fun <= best_val else np.array(best_z)
    sp, tau = unpack(z)
    rhs = objective(z)
    return {"feasible": True, "beta": sp.beta, "delta": sp.delta, "tau": tau,
            "rhs": float(rhs), "threshold": threshold(n, m, sp, tau),
            "grid_best_rhs": float(best_val)}
