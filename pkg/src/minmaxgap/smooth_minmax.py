"""Smoothed min-max of a real matrix via nested log-sum-exp.

The smooth surrogate for min_i max_j x[i,j] is

    F(x) = -(1/(beta*delta)) * log sum_i (sum_j exp(beta*x[i,j]))**(-delta)

together with its first three derivative tensors.  Everything here is a
pure function of its arguments; all exponentials go through max-shifted
log-sum-exp so that |beta*x| up to ~1e4 stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

DEFAULT_MATERIALIZE_LIMIT = 16


class CapacityError(ValueError):
    """Explicit tensor materialization requested above the size limit."""


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing parameters (beta, delta) with phi = beta*(1+delta)."""

    beta: float
    delta: float

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")

    @property
    def phi(self) -> float:
        return self.beta * (1.0 + self.delta)


@dataclass(frozen=True)
class WeightTensors:
    """First-order weights: row-softmax p, row distribution q, pi = p*q."""

    p: np.ndarray
    q: np.ndarray
    pi: np.ndarray


@dataclass(frozen=True)
class DerivativeTensors:
    """Explicitly materialized second/third derivative weights.

    The Hessian of F is beta*omega and the third derivative beta^2*gamma,
    with indices flattened row-major to d = n*m.
    """

    omega: np.ndarray  # (d, d)
    gamma: np.ndarray  # (d, d, d)
    materialized: bool = True


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"expected an n x m matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix entries must be finite")
    return x


def exact_minmax(x) -> float:
    """min over rows of the row maxima."""
    x = _as_matrix(x)
    return float(np.min(np.max(x, axis=1)))


def _row_lse(x: np.ndarray, sp: SmoothingParams) -> np.ndarray:
    # l_i = (1/beta) log sum_j exp(beta x_ij), per row, max-shifted
    return logsumexp(sp.beta * x, axis=-1) / sp.beta


def smooth_minmax_value(x, sp: SmoothingParams) -> float:
    x = _as_matrix(x)
    l = _row_lse(x, sp)
    bd = sp.beta * sp.delta
    return float(-logsumexp(-bd * l) / bd)


def smooth_minmax_batch(xs: np.ndarray, sp: SmoothingParams) -> np.ndarray:
    """Vectorized smooth min-max over a stack of matrices (N, n, m)."""
    xs = np.asarray(xs, dtype=float)
    bx = sp.beta * xs
    mx = bx.max(axis=2)
    l = (mx + np.log(np.exp(bx - mx[:, :, None]).sum(axis=2))) / sp.beta
    bd = sp.beta * sp.delta
    a = -bd * l
    ma = a.max(axis=1)
    return -(ma + np.log(np.exp(a - ma[:, None]).sum(axis=1))) / bd


def weight_tensors(x, sp: SmoothingParams) -> WeightTensors:
    x = _as_matrix(x)
    p = softmax(sp.beta * x, axis=1)
    l = _row_lse(x, sp)
    q = softmax(-sp.beta * sp.delta * l)
    pi = p * q[:, None]
    return WeightTensors(p=p, q=q, pi=pi)


def gradient(x, sp: SmoothingParams) -> np.ndarray:
    """dF/dx[i,j] = pi[i,j]; nonnegative, sums to 1."""
    return weight_tensors(x, sp).pi


def derivative_tensors(x, sp: SmoothingParams,
                       limit: int = DEFAULT_MATERIALIZE_LIMIT) -> DerivativeTensors:
    """Materialize omega and gamma for a small matrix (n*m <= limit)."""
    x = _as_matrix(x)
    n, m = x.shape
    d = n * m
    if d > limit:
        raise CapacityError(
            f"n*m = {d} exceeds materialization limit {limit}; "
            "use omega_abs_sum / the contraction helpers instead")
    wt = weight_tensors(x, sp)
    pv = wt.p.reshape(d)
    piv = wt.pi.reshape(d)
    rows = np.repeat(np.arange(n), m)   # row index of each flat entry
    cols = np.tile(np.arange(m), n)
    same_row = rows[:, None] == rows[None, :]
    same_col = cols[:, None] == cols[None, :]
    dlt = sp.delta
    # A[a, b] = delta*pi_b + 1{i_a=i_b}(1{j_a=j_b} - (1+delta) p_b)
    A = dlt * piv[None, :] + same_row * (same_col.astype(float) - (1 + dlt) * pv[None, :])
    omega = piv[:, None] * A
    same_row3 = same_row[:, None, :] & same_row[None, :, :]  # i_a = i_b = i_c
    same_col_bc = same_col[None, :, :]                       # j_b = j_c
    gamma = (omega[:, :, None] * A[:, None, :]
             + dlt * piv[:, None, None] * omega[None, :, :]
             - same_row3 * (1 + dlt) * piv[:, None, None] * pv[None, :, None]
             * (same_col_bc - pv[None, None, :]))
    return DerivativeTensors(omega=omega, gamma=gamma)


def omega_abs_sum(x, sp: SmoothingParams) -> float:
    """Sum of |omega| over all index pairs, O(n*m^2), no materialization.

    Off-diagonal row blocks have omega = delta*pi_a*pi_b >= 0; only the
    same-row blocks need the absolute value.
    """
    x = _as_matrix(x)
    wt = weight_tensors(x, sp)
    dlt = sp.delta
    off = dlt * (1.0 - float(np.sum(wt.q ** 2)))
    eye = np.eye(x.shape[1])
    # per row i: sum_{j1,j2} pi[i,j1]*|delta*pi[i,j2] + 1{j1=j2} - (1+delta)p[i,j2]|
    inner = np.abs(dlt * wt.pi[:, None, :] + eye[None, :, :]
                   - (1 + dlt) * wt.p[:, None, :])
    diag = float(np.sum(wt.pi[:, :, None] * inner))
    return off + diag


def gamma_abs_sum(x, sp: SmoothingParams,
                  limit: int = DEFAULT_MATERIALIZE_LIMIT) -> float:
    """Sum of |gamma| by brute-force enumeration (n*m <= limit)."""
    dt = derivative_tensors(x, sp, limit=limit)
    return float(np.sum(np.abs(dt.gamma)))


def composed_derivative_sums(x, sp: SmoothingParams, gbounds,
                             limit: int = DEFAULT_MATERIALIZE_LIMIT):
    """Bounds on the absolute derivative sums of g composed with F.

    gbounds = (g1, g2, g3) are sup norms of g', g'', g'''.  Returns
    (second_order_bound, third_order_bound):

        g2 + 2*phi*g1
        g3 + 6*phi*g2 + 6*phi^2*g1

    When n*m is within the materialization limit, also verifies that the
    explicit composed tensors (chain rule, derivative values set to the
    sup norms) stay below the returned values.
    """
    g1, g2, g3 = (float(v) for v in gbounds)
    if min(g1, g2, g3) < 0:
        raise ValueError("gbounds must be nonnegative")
    phi = sp.phi
    bound2 = g2 + 2.0 * phi * g1
    bound3 = g3 + 6.0 * phi * g2 + 6.0 * phi ** 2 * g1
    x = _as_matrix(x)
    if x.size <= limit:
        s2, s3 = composed_tensor_abs_sums(x, sp, (g1, g2, g3), limit=limit)
        tol = 1e-9 * (1.0 + bound2 + bound3)
        if s2 > bound2 + tol or s3 > bound3 + tol:
            raise AssertionError(
                f"composed tensor sums ({s2}, {s3}) exceed bounds ({bound2}, {bound3})")
    return bound2, bound3


def composed_tensor_abs_sums(x, sp: SmoothingParams, dg,
                             limit: int = DEFAULT_MATERIALIZE_LIMIT):
    """Absolute sums of the explicit 2nd/3rd derivative tensors of g o F.

    dg = (g', g'', g''') are the derivative values of g at F(x) (or any
    values whose magnitudes do not exceed the declared sup norms).
    """
    dg1, dg2, dg3 = (float(v) for v in dg)
    x = _as_matrix(x)
    d = x.size
    dt = derivative_tensors(x, sp, limit=limit)
    piv = weight_tensors(x, sp).pi.reshape(d)
    b = sp.beta
    H = dg2 * np.outer(piv, piv) + dg1 * b * dt.omega
    T = (dg3 * piv[:, None, None] * piv[None, :, None] * piv[None, None, :]
         + dg2 * b * (dt.omega[:, :, None] * piv[None, None, :]
                      + dt.omega[:, None, :] * piv[None, :, None]
                      + dt.omega[None, :, :] * piv[:, None, None])
         + dg1 * b * b * dt.gamma)
    return float(np.sum(np.abs(H))), float(np.sum(np.abs(T)))


# ---------------------------------------------------------------------------
# Batched contraction helpers.  These evaluate directional contractions of
# the derivative tensors over a stack of matrices without materializing
# omega/gamma, which keeps Monte Carlo loops vectorized.
# ---------------------------------------------------------------------------

def batch_weights(xs: np.ndarray, sp: SmoothingParams):
    """(p, q, pi) for a stack of matrices (N, n, m)."""
    xs = np.asarray(xs, dtype=float)
    p = softmax(sp.beta * xs, axis=2)
    l = logsumexp(sp.beta * xs, axis=2) / sp.beta
    q = softmax(-sp.beta * sp.delta * l, axis=1)
    return p, q, p * q[:, :, None]


def batch_contractions(xs: np.ndarray, vs: np.ndarray, sp: SmoothingParams):
    """Directional contractions of pi, omega, gamma along v, batched.

    xs, vs: (N, n, m).  Returns (pi.v, v.omega.v, gamma.v^3) as (N,)
    arrays, where the contractions run over flattened entry indices.
    """
    p, q, pi = batch_weights(xs, sp)
    vs = np.asarray(vs, dtype=float)
    dlt = sp.delta
    piv = np.sum(pi * vs, axis=(1, 2))                # pi . v
    pv_row = np.sum(p * vs, axis=2)                   # (N, n): sum_j p v
    piv_row = np.sum(pi * vs, axis=2)                 # (N, n): sum_j pi v
    # S_a = delta*(pi.v) + v_a - (1+delta)*(p.v)_{row(a)}
    S = dlt * piv[:, None, None] + vs - (1 + dlt) * pv_row[:, :, None]
    vwv = np.sum(vs * pi * S, axis=(1, 2))            # v . omega . v
    term1 = np.sum(vs * pi * S * S, axis=(1, 2))
    p2v_row = np.sum(p * vs * vs, axis=2)
    term3 = (1 + dlt) * np.sum(piv_row * (p2v_row - pv_row ** 2), axis=1)
    gvvv = term1 + dlt * piv * vwv - term3            # gamma . v^3
    return piv, vwv, gvvv


def batch_hess_quadform(xs: np.ndarray, D: np.ndarray, sp: SmoothingParams):
    """sum_{a,b} D[a,b] * omega[a,b] contractions, batched.

    Returns (pi_D_pi, omega_dot_D) as (N,) arrays for a fixed symmetric
    weight matrix D over flattened indices; used for covariance-weighted
    Hessian expectations.
    """
    xs = np.asarray(xs, dtype=float)
    N, n, m = xs.shape
    d = n * m
    D = np.asarray(D, dtype=float).reshape(d, d)
    p, q, pi = batch_weights(xs, sp)
    piv = pi.reshape(N, d)
    pv = p.reshape(N, d)
    dlt = sp.delta
    pDp = np.einsum('na,ab,nb->n', piv, D, piv)
    rows = np.repeat(np.arange(n), m)
    # same-row part: sum_a pi_a [ D_aa - (1+delta) sum_{b: row b = row a} D_ab p_b ]
    Ddiag = np.diag(D)
    same_row_mask = (rows[:, None] == rows[None, :]).astype(float)
    Dp_same = np.einsum('ab,nb->na', D * same_row_mask, pv)
    omega_D = dlt * pDp + np.sum(piv * (Ddiag[None, :] - (1 + dlt) * Dp_same), axis=1)
    return pDp, omega_D
