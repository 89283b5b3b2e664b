"""Spherical-harmonic dimensions and normalized Legendre polynomials on S^d.

``harmonic_dim(d, k)`` is the dimension of the space of degree-``k`` spherical
harmonics on S^d (harmonic polynomials in ``d + 1`` variables), and
``cumulative_dim(d, m)`` the dimension of all harmonics of degree ``<= m``.
Both are exact Python integers.

``legendre(d, k, t)`` is the Gegenbauer polynomial with parameter
``(d - 1) / 2`` rescaled so that ``P_k^d(1) = 1``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

__all__ = [
    "check_sphere_dim",
    "harmonic_dim",
    "cumulative_dim",
    "harmonic_dims",
    "log_harmonic_dims",
    "legendre",
    "legendre_table",
    "dim_ratio",
    "smallest_m0",
]


def check_sphere_dim(d: int) -> int:
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise DomainError(f"sphere dimension must be an integer, got {d!r}")
    if d < 2:
        raise DomainError(f"sphere dimension must satisfy d >= 2, got {d}")
    return int(d)


def _check_degree(k: int, name: str = "k") -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise DomainError(f"{name} must be an integer, got {k!r}")
    if k < 0:
        raise DomainError(f"{name} must be nonnegative, got {k}")
    return int(k)


def harmonic_dim(d: int, k: int) -> int:
    """Exact dimension tau_d^k = (2k+d-1)(k+d-2)! / (k! (d-1)!)."""
    d = check_sphere_dim(d)
    k = _check_degree(k)
    # (k+d-2)!/(k!(d-1)!) = C(k+d-2, k)/(d-1); the product is always divisible.
    return (2 * k + d - 1) * math.comb(k + d - 2, k) // (d - 1)


def cumulative_dim(d: int, m: int) -> int:
    """Exact tau_{d+1}^m = (2m+d)(m+d-1)! / (m! d!) = sum_{k<=m} tau_d^k."""
    d = check_sphere_dim(d)
    m = _check_degree(m, "m")
    return (2 * m + d) * math.comb(m + d - 1, m) // d


def harmonic_dims(d: int, k_max: int) -> list:
    """Exact ``[tau_d^0, ..., tau_d^{k_max}]`` by the multiplicative update

    tau_d^{k+1} = tau_d^k (2k+d+1)(k+d-1) / ((k+1)(2k+d-1)),

    where every division is exact.
    """
    d = check_sphere_dim(d)
    k_max = _check_degree(k_max, "k_max")
    out = [1]
    tau = 1
    for k in range(k_max):
        tau = tau * (2 * k + d + 1) * (k + d - 1) // ((k + 1) * (2 * k + d - 1))
        out.append(tau)
    return out


def log_harmonic_dims(d: int, k_max: int) -> np.ndarray:
    """Natural logs of tau_d^k for k = 0..k_max, via log-gamma."""
    d = check_sphere_dim(d)
    k = np.arange(_check_degree(k_max, "k_max") + 1, dtype=float)
    return (
        np.log(2.0 * k + d - 1.0)
        + gammaln(k + d - 1.0)
        - gammaln(k + 1.0)
        - gammaln(float(d))
    )


def legendre_table(d: int, k_max: int, t) -> np.ndarray:
    """Values P_k^d(t) for k = 0..k_max, stacked along the first axis.

    ``t`` may be a scalar or an array; the result has shape
    ``(k_max + 1,) + np.shape(t)``.
    """
    d = check_sphere_dim(d)
    k_max = _check_degree(k_max, "k_max")
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0) or np.any(np.isnan(t)):
        raise DomainError("Legendre argument must lie in [-1, 1]")
    out = np.empty((k_max + 1,) + t.shape)
    out[0] = 1.0
    if k_max >= 1:
        out[1] = t
    for k in range(1, k_max):
        out[k + 1] = ((2 * k + d - 1) * t * out[k] - k * out[k - 1]) / (k + d - 1)
    return out


def legendre(d: int, k: int, t: float) -> float:
    """P_k^d(t) by the normalized three-term recurrence."""
    d = check_sphere_dim(d)
    k = _check_degree(k)
    if not -1.0 <= t <= 1.0:
        raise DomainError(f"Legendre argument must lie in [-1, 1], got {t}")
    if k == 0:
        return 1.0
    p_prev, p = 1.0, float(t)
    for j in range(1, k):
        p_prev, p = p, ((2 * j + d - 1) * t * p - j * p_prev) / (j + d - 1)
    return p


def dim_ratio(d: int, m: int) -> float:
    """tau_{d+1}^m / m^d, which tends to 2/d! as m grows."""
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    return cumulative_dim(d, m) / m**d


def smallest_m0(d: int, m_max: int = 10_000) -> int:
    """Smallest m0 with 1/d! < dim_ratio(d, m) < 4/d! for every m in [m0, m_max].

    The bounds only hold eventually; the value reported is empirical.
    """
    d = check_sphere_dim(d)
    lo, hi = 1.0 / math.factorial(d), 4.0 / math.factorial(d)
    m0 = None
    for m in range(m_max, 0, -1):
        if lo < dim_ratio(d, m) < hi:
            m0 = m
        else:
            break
    if m0 is None:
        raise DomainError(f"no m <= {m_max} satisfies the dimension window for d={d}")
    return m0
