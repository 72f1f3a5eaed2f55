"""
Special Functions

Gauss-Hermite rules, the principal Lambert-W branch, the finite-series upper
incomplete gamma function, I0 and guarded factorials. Only what the JFTS
series, the BER expectation and the printed closed forms need.

All functions are pure; array variants never mutate their inputs.
"""

import math
from typing import Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from jfts_am.core.exceptions import DomainError, InvalidArgumentError, NumericalOverflowError
from jfts_am.models.channel import QuadratureRule

MAX_HERMITE_ORDER = 64
MAX_FACTORIAL_ARG = 170
MAX_BESSEL_ARG = 50.0
INV_E = math.exp(-1.0)
SQRT_PI = math.sqrt(math.pi)

LAMBERT_TOL = 1e-14
LAMBERT_MAX_ITER = 64
# Above this, e^L overflows and W(e^L) is solved as w + ln w = L
_LOG_DOMAIN_SWITCH = 700.0


# ============================================================================
# Factorials
# ============================================================================

def factorial(n: int) -> float:
    """n! in floating point, guarded against overflow"""
    if n < 0:
        raise InvalidArgumentError(f"factorial of negative integer {n}")
    if n > MAX_FACTORIAL_ARG:
        raise NumericalOverflowError(f"{n}! overflows double precision")
    return float(math.factorial(n))


def log_factorial(n):
    """ln n!, elementwise for arrays"""
    return gammaln(np.asarray(n, dtype=float) + 1.0)


# ============================================================================
# Gauss-Hermite
# ============================================================================

def _orthonormal_hermite(x: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal Hermite values p_m(x), p_{m-1}(x) and Σ_{k<m} p_k(x)²"""
    p_prev = np.zeros_like(x)
    p = np.full_like(x, math.pi ** -0.25)
    sum_sq = np.zeros_like(x)
    for k in range(m):
        sum_sq += p * p
        p_next = math.sqrt(2.0 / (k + 1)) * x * p - math.sqrt(k / (k + 1)) * p_prev
        p_prev, p = p, p_next
    return p, p_prev, sum_sq


def hermite_rule(m: int) -> QuadratureRule:
    """
    Gauss-Hermite nodes and weights by Golub-Welsch.

    Eigenvalues of the Jacobi matrix give the nodes; two Newton steps on the
    orthonormal recurrence polish them, and the weights come from the
    Christoffel function 1 / Σ_k p_k(r_h)². Both are symmetrized.
    """
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
        raise InvalidArgumentError(f"quadrature order must be an integer, got {m!r}")
    m = int(m)
    if not 1 <= m <= MAX_HERMITE_ORDER:
        raise InvalidArgumentError(
            f"quadrature order must be in [1, {MAX_HERMITE_ORDER}], got {m}"
        )
    if m == 1:
        return QuadratureRule(order=1, nodes=np.zeros(1), weights=np.array([SQRT_PI]))

    off_diagonal = np.sqrt(np.arange(1, m) / 2.0)
    nodes = eigh_tridiagonal(np.zeros(m), off_diagonal, eigvals_only=True)
    nodes = np.sort(nodes)

    for _ in range(2):
        p_m, p_m1, _ = _orthonormal_hermite(nodes, m)
        nodes = nodes - p_m / (math.sqrt(2.0 * m) * p_m1)
    nodes = 0.5 * (nodes - nodes[::-1])
    if m % 2 == 1:
        nodes[m // 2] = 0.0

    _, _, sum_sq = _orthonormal_hermite(nodes, m)
    weights = 1.0 / sum_sq
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(order=m, nodes=nodes, weights=weights)


# ============================================================================
# Lambert W, principal branch
# ============================================================================

def _lambert_initial(x: float) -> float:
    if x < -0.25:
        # Branch-point series in p = sqrt(2(ex + 1))
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    if x < 3.0:
        l1 = math.log1p(x)
        return l1 * (1.0 - math.log1p(l1) / (2.0 + l1))
    l1 = math.log(x)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def lambert_w0(x: float) -> float:
    """
    Principal branch W0 by Halley iteration.

    Raises DomainError for x < -1/e; the lower branch is never used.
    """
    x = float(x)
    if math.isnan(x):
        raise InvalidArgumentError("Lambert W of NaN")
    if x < -INV_E:
        # One ulp of slack so -1/e itself (rounded) stays in the domain
        if x < -INV_E * (1.0 + 4.0 * np.finfo(float).eps):
            raise DomainError(f"Lambert W0 undefined for x = {x!r} < -1/e")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf

    w = _lambert_initial(x)
    for _ in range(LAMBERT_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= LAMBERT_TOL * (1.0 + abs(w)):
            break
    return max(w, -1.0)


def lambert_w0_array(x) -> Tuple[np.ndarray, int]:
    """
    Vectorized W0.

    Entries below -1/e (or NaN) come back as NaN; the second return value
    counts them so callers can report domain failures.
    """
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, np.nan)
    invalid = ~(x >= -INV_E * (1.0 + 4.0 * np.finfo(float).eps))
    domain_errors = int(np.count_nonzero(invalid))
    valid = ~invalid
    if not np.any(valid):
        return out, domain_errors

    xv = np.maximum(x[valid], -INV_E)
    w = np.empty_like(xv)
    near = xv < -0.25
    mid = (xv >= -0.25) & (xv < 3.0)
    far = xv >= 3.0
    p = np.sqrt(np.maximum(2.0 * (math.e * xv[near] + 1.0), 0.0))
    w[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    l1 = np.log1p(xv[mid])
    w[mid] = l1 * (1.0 - np.log1p(l1) / (2.0 + l1))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        l1 = np.log(xv[far])
        l2 = np.log(l1)
        w[far] = l1 - l2 + l2 / l1

        active = np.isfinite(w) & (xv != 0.0)
        w[xv == 0.0] = 0.0
        for _ in range(LAMBERT_MAX_ITER):
            if not np.any(active):
                break
            wa = w[active]
            ew = np.exp(wa)
            f = wa * ew - xv[active]
            wp1 = wa + 1.0
            denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
            step = np.where(wp1 != 0.0, f / denom, 0.0)
            step = np.nan_to_num(step, nan=0.0, posinf=0.0, neginf=0.0)
            w[active] = wa - step
            done = np.abs(step) <= LAMBERT_TOL * (1.0 + np.abs(w[active]))
            idx = np.flatnonzero(active)
            active[idx[done]] = False
    out[valid] = np.maximum(w, -1.0)
    return out, domain_errors


def lambert_w0_exp(log_x) -> np.ndarray:
    """W0(e^L) for real L, without forming e^L when it would overflow"""
    log_x = np.asarray(log_x, dtype=float)
    out = np.empty(log_x.shape)
    small = log_x <= _LOG_DOMAIN_SWITCH
    if np.any(small):
        out[small], _ = lambert_w0_array(np.exp(log_x[small]))
    large = ~small
    if np.any(large):
        target = log_x[large]
        w = target - np.log(target)
        for _ in range(LAMBERT_MAX_ITER):
            # Newton on w + ln w - L
            step = (w + np.log(w) - target) / (1.0 + 1.0 / w)
            w = w - step
            if np.all(np.abs(step) <= LAMBERT_TOL * w):
                break
        out[large] = w
    return out


# ============================================================================
# Incomplete gamma (integer order, finite series)
# ============================================================================

def regularized_upper_gamma(n: int, g: float) -> float:
    """Q(n, g) = e^{-g} Σ_{v<n} g^v / v!, accumulated term-to-term"""
    if n < 1:
        raise InvalidArgumentError(f"incomplete gamma order must be >= 1, got {n}")
    g = float(g)
    if math.isnan(g) or g < 0.0:
        raise InvalidArgumentError(f"incomplete gamma argument must be >= 0, got {g}")
    if g == 0.0:
        return 1.0
    if math.isinf(g):
        return 0.0
    if g < _LOG_DOMAIN_SWITCH:
        term = 1.0
        total = 1.0
        for v in range(1, n):
            term *= g / v
            total += term
        return min(math.exp(-g) * total, 1.0)
    v = np.arange(n)
    log_terms = v * math.log(g) - gammaln(v + 1.0) - g
    peak = float(np.max(log_terms))
    return min(math.exp(peak) * float(np.sum(np.exp(log_terms - peak))), 1.0)


def upper_gamma_int(n: int, g: float) -> float:
    """Γ(n, g) = (n-1)! Q(n, g) for integer n >= 1"""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise InvalidArgumentError(f"incomplete gamma order must be an integer, got {n!r}")
    return factorial(int(n) - 1) * regularized_upper_gamma(int(n), g)


def regularized_upper_gamma_table(t_max: int, g) -> np.ndarray:
    """
    Q(t+1, g) for t = 0..t_max at every g.

    Returns shape (t_max+1,) + g.shape; row t is the partial sum of the
    Poisson(g) probabilities up to t. g = 0 gives ones, g = inf zeros.
    """
    g = np.asarray(g, dtype=float)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise InvalidArgumentError("incomplete gamma arguments must be >= 0")
    v = np.arange(t_max + 1, dtype=float).reshape((-1,) + (1,) * g.ndim)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_terms = v * np.log(g) - gammaln(v + 1.0) - g
    log_terms = np.where(v == 0, -g, log_terms)
    log_terms = np.where(np.isinf(g), -np.inf, log_terms)
    return np.minimum(np.cumsum(np.exp(log_terms), axis=0), 1.0)


# ============================================================================
# Bessel I0
# ============================================================================

def bessel_i0(x: float) -> float:
    """I0(x) = Σ (x/2)^{2k} / (k!)², summed until terms stop contributing"""
    x = float(x)
    if math.isnan(x) or abs(x) > MAX_BESSEL_ARG:
        raise InvalidArgumentError(f"bessel_i0 defined here for |x| <= {MAX_BESSEL_ARG}, got {x}")
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term <= 1e-17 * total:
            return total
