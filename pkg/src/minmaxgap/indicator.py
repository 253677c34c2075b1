"""Smooth indicator surrogates and the smoothing-loss factor epsilon.

The smoothing loss is

    epsilon = sqrt(exp(-alpha) * (1 + alpha)),  alpha = phi^2 * tau^2 - 1

with phi = beta*(1+delta), defined for tau > 1/phi.  The smooth indicator
g of a closed-interval union Q is a distance-based quintic smoothstep
ramp of width 3*tau: it equals 1 on Q, 0 outside the 3*tau enlargement,
and its derivative sup norms are explicit:

    |g'|  <= 0.625 / tau        (= (15/8)/(3 tau))
    |g''| <= 0.65  / tau^2
    |g'''|<= 2.25  / tau^3
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .smooth_minmax import SmoothingParams


@dataclass(frozen=True)
class EpsilonValue:
    alpha: float
    epsilon: float


def epsilon(sp: SmoothingParams, tau: float) -> EpsilonValue:
    """Evaluate the smoothing-loss factor; requires tau > 1/phi."""
    tau = float(tau)
    if not tau > 1.0 / sp.phi:
        raise ValueError(
            f"tau = {tau} must exceed 1/phi = {1.0 / sp.phi} (alpha would be <= 0)")
    alpha = sp.phi ** 2 * tau ** 2 - 1.0
    return EpsilonValue(alpha=alpha, epsilon=math.sqrt(math.exp(-alpha) * (1.0 + alpha)))


class IntervalUnion:
    """Finite union of disjoint closed intervals, endpoints possibly infinite."""

    def __init__(self, intervals):
        ivs = sorted((float(a), float(b)) for a, b in intervals)
        if not ivs:
            raise ValueError("interval union must be nonempty")
        for a, b in ivs:
            if b < a:
                raise ValueError(f"invalid interval ({a}, {b})")
        merged = [list(ivs[0])]
        for a, b in ivs[1:]:
            if a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        for a, b in merged:
            if math.isnan(a) or math.isnan(b):
                raise ValueError("interval endpoints must not be NaN")
        self.intervals = [(a, b) for a, b in merged]
        self._lefts = [a for a, _ in self.intervals]

    def __repr__(self):
        return f"IntervalUnion({self.intervals})"

    def __eq__(self, other):
        return isinstance(other, IntervalUnion) and self.intervals == other.intervals

    def contains(self, t: float) -> bool:
        k = bisect.bisect_right(self._lefts, t) - 1
        return k >= 0 and t <= self.intervals[k][1]

    def distance(self, t: float) -> float:
        """Euclidean distance from t to the set (0 on the set)."""
        k = bisect.bisect_right(self._lefts, t) - 1
        best = math.inf
        if k >= 0:
            a, b = self.intervals[k]
            if t <= b:
                return 0.0
            best = t - b
        if k + 1 < len(self.intervals):
            best = min(best, self.intervals[k + 1][0] - t)
        return best

    def nearest_side(self, t: float) -> int:
        """Sign of d/dt distance(t): -1, 0 (on the set), or +1.

        At the midpoint between two intervals the derivative is one-sided;
        the right-hand limit is returned.
        """
        k = bisect.bisect_right(self._lefts, t) - 1
        dl = math.inf
        if k >= 0:
            a, b = self.intervals[k]
            if t <= b:
                return 0
            dl = t - b
        dr = self.intervals[k + 1][0] - t if k + 1 < len(self.intervals) else math.inf
        return 1 if dl < dr else -1

    def enlarge(self, r: float) -> "IntervalUnion":
        """Widen every interval by r on both sides and merge overlaps."""
        if r < 0:
            raise ValueError("enlargement radius must be nonnegative")
        return IntervalUnion([(a - r, b + r) for a, b in self.intervals])

    def finite_span(self, pad: float = 0.0):
        """(lo, hi) covering all finite endpoints, padded; for test grids."""
        finite = [e for iv in self.intervals for e in iv if math.isfinite(e)]
        if not finite:
            return (-pad, pad)
        return (min(finite) - pad, max(finite) + pad)


def enlarge(set_: IntervalUnion, r: float) -> IntervalUnion:
    return set_.enlarge(r)


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_d1(u):
    out = np.where((u > 0.0) & (u < 1.0), 30.0 * u ** 2 * (1.0 - u) ** 2, 0.0)
    return out


def _smoothstep_d2(u):
    return np.where((u > 0.0) & (u < 1.0), 60.0 * u * (2.0 * u - 1.0) * (u - 1.0), 0.0)


def _smoothstep_d3(u):
    return np.where((u > 0.0) & (u < 1.0), 360.0 * u ** 2 - 360.0 * u + 60.0, 0.0)


@dataclass(frozen=True)
class IndicatorSpec:
    tau: float
    set: IntervalUnion

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")


class SmoothIndicator:
    """g(t) = smoothstep(1 - d(t, Q) / (3 tau)): 1 on Q, 0 off Q^{3 tau}.

    Derivative accessors up to order three are analytic except at the
    non-smooth junctions of the distance function (midpoints between
    intervals), where one-sided limits are used.
    """

    # sup norms of the smoothstep derivatives on [0, 1]
    D1_MAX = 15.0 / 8.0
    D2_MAX = 10.0 / math.sqrt(3.0)
    D3_MAX = 60.0

    def __init__(self, spec: IndicatorSpec):
        self.spec = spec
        self.width = 3.0 * spec.tau

    @property
    def d1_bound(self) -> float:
        return self.D1_MAX / self.width

    @property
    def d2_bound(self) -> float:
        return self.D2_MAX / self.width ** 2

    @property
    def d3_bound(self) -> float:
        return self.D3_MAX / self.width ** 3

    def _u_sigma(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).reshape(-1)
        iv = self.spec.set.intervals
        lefts = np.array([a for a, _ in iv])
        rights = np.array([b for _, b in iv])
        k = np.searchsorted(lefts, flat, side="right") - 1
        kc = np.clip(k, 0, len(iv) - 1)
        inside = (k >= 0) & (flat <= rights[kc])
        dl = np.where(k >= 0, flat - rights[kc], np.inf)
        dr = np.where(k + 1 < len(iv), lefts[np.clip(k + 1, 0, len(iv) - 1)] - flat,
                      np.inf)
        d = np.where(inside, 0.0, np.minimum(dl, dr))
        sig = np.where(inside, 0.0, np.where(dl < dr, 1.0, -1.0))
        u = 1.0 - d / self.width
        return t, u.reshape(t.shape), sig.reshape(t.shape)

    def value(self, t):
        _, u, _ = self._u_sigma(t)
        out = _smoothstep(u)
        return float(out) if np.isscalar(t) or np.ndim(t) == 0 else out

    def deriv1(self, t):
        _, u, sig = self._u_sigma(t)
        out = -_smoothstep_d1(u) * sig / self.width
        return float(out) if np.ndim(t) == 0 else out

    def deriv2(self, t):
        _, u, sig = self._u_sigma(t)
        out = _smoothstep_d2(u) * sig ** 2 / self.width ** 2
        return float(out) if np.ndim(t) == 0 else out

    def deriv3(self, t):
        _, u, sig = self._u_sigma(t)
        out = -_smoothstep_d3(u) * sig ** 3 / self.width ** 3
        return float(out) if np.ndim(t) == 0 else out

    def __call__(self, t):
        return self.value(t)


def smooth_indicator(spec: IndicatorSpec) -> SmoothIndicator:
    return SmoothIndicator(spec)
