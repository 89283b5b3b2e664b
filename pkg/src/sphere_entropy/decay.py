"""Generalized shifting-operator multipliers and Hoelder defects.

The generalized shift of order ``r`` and angle ``t`` acts on degree-``k``
harmonics by the multiplier

    m_r(k, t) = -2/C(2r, r) * sum_{j=1}^{r} (-1)^j C(2r, r-j) P_k^d(cos(j t)),

whose weights sum to one and annihilate the even moments ``j^2, ..., j^{2r-2}``.
Hence ``1 - m_r(k, t)`` behaves like ``min(1, kt)^{2r}``; the constant of that
comparison is not known in closed form and is measured on a fixed grid.

Near ``kt = 0`` the defect is many orders of magnitude below the individual
terms, so it is evaluated through a recurrence for ``1 - P_k^d(cos theta)`` in
``u = 2 sin^2(theta/2)`` (extended precision), with an mpmath fallback where
the remaining cancellation is still too strong.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import mpmath
import numpy as np

from .errors import DivergenceError, DomainError
from .harmonics import check_sphere_dim, legendre, legendre_table
from .kernels import DEFAULT_TOL, SchoenbergModel, truncation_level

__all__ = [
    "MultiplierSpec",
    "shift_weights",
    "multiplier_bound",
    "shifting_multiplier",
    "multiplier_table",
    "multiplier_defect",
    "defect_table",
    "defect_ratio_window",
    "measure_defect_windows",
    "persisted_defect_windows",
    "holder_defect",
    "holder_defect_grid",
    "holder_constant",
    "decay_check",
    "WINDOW_GRID",
    "WEIGHTED_SUM_CAP",
]

WINDOW_GRID = {"k_max": 200, "t_min": 1e-3, "t_max": 3.0, "t_points": 60}
WEIGHTED_SUM_CAP = 100_000
_STABILIZATION = 1e-12
# long double keeps ~19 digits; below this conditioning the result is trusted
_MAX_CONDITION = 1e9


@dataclass(frozen=True)
class MultiplierSpec:
    d: int
    r: int
    t: float

    def __post_init__(self):
        check_sphere_dim(self.d)
        if isinstance(self.r, bool) or not isinstance(self.r, int) or self.r < 1:
            raise DomainError(f"shift order r must be a positive integer, got {self.r!r}")
        if not 0.0 < self.t < math.pi:
            raise DomainError(f"shift angle t must lie in (0, pi), got {self.t}")


@lru_cache(maxsize=None)
def shift_weights(r: int) -> tuple:
    """Weights ``w_j`` (j = 1..r) with ``m_r = sum_j w_j P_k^d(cos(j t))``."""
    if r < 1:
        raise DomainError(f"r must be positive, got {r}")
    c = math.comb(2 * r, r)
    return tuple(-2.0 / c * (-1) ** j * math.comb(2 * r, r - j) for j in range(1, r + 1))


def multiplier_bound(r: int) -> float:
    """Bound ``4^r / C(2r, r)`` on ``|m_r(k, t) - 1|``, from ``|P| <= 1``."""
    return 4.0**r / math.comb(2 * r, r)


def shifting_multiplier(spec: MultiplierSpec, k: int) -> float:
    """``m_r(k, t)`` evaluated directly from its defining sum."""
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    c = math.comb(2 * spec.r, spec.r)
    total = math.fsum(
        (-1) ** j * math.comb(2 * spec.r, spec.r - j) * legendre(spec.d, k, math.cos(j * spec.t))
        for j in range(1, spec.r + 1)
    )
    return -2.0 / c * total


def multiplier_table(d: int, r: int, k_max: int, t) -> np.ndarray:
    """``m_r(k, t)`` for k = 0..k_max and every entry of ``t``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((k_max + 1,) + t.shape)
    for j, w in enumerate(shift_weights(r), start=1):
        out += w * legendre_table(d, k_max, np.cos(j * t))
    return out


def _one_minus_legendre(d: int, k_max: int, theta: np.ndarray) -> np.ndarray:
    """``1 - P_k^d(cos theta)`` for k = 0..k_max, without forming P."""
    u = 2.0 * np.sin(theta / 2) ** 2
    out = np.zeros((k_max + 1,) + theta.shape, dtype=theta.dtype)
    if k_max >= 1:
        out[1] = u
    for k in range(1, k_max):
        out[k + 1] = ((2 * k + d - 1) * (u + out[k] - u * out[k]) - k * out[k - 1]) / (k + d - 1)
    return out


def _weight_fractions(r: int):
    # exact (numerator, denominator) pairs; float weights such as 0.1 would spoil
    # the moment cancellation that the small-kt defect depends on
    c = math.comb(2 * r, r)
    return [(-2 * (-1) ** j * math.comb(2 * r, r - j), c) for j in range(1, r + 1)]


def _defect_mp(d: int, r: int, k: int, t: float, dps: int = 50) -> float:
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        for j, (num, den) in enumerate(_weight_fractions(r), start=1):
            w = mpmath.mpf(num) / den
            u = 2 * mpmath.sin(j * mpmath.mpf(t) / 2) ** 2
            prev, cur = mpmath.mpf(0), u
            if k == 0:
                cur = mpmath.mpf(0)
            for n in range(1, k):
                prev, cur = cur, ((2 * n + d - 1) * (u + cur - u * cur) - n * prev) / (n + d - 1)
            total += w * cur
        return float(total)


def defect_table(d: int, r: int, k_max: int, t) -> np.ndarray:
    """``1 - m_r(k, t)`` for k = 0..k_max and every entry of ``t``."""
    d = check_sphere_dim(d)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tl = t.astype(np.longdouble)
    acc = np.zeros((k_max + 1,) + t.shape, dtype=np.longdouble)
    mag = np.zeros_like(acc)
    for j, (num, den) in enumerate(_weight_fractions(r), start=1):
        term = np.longdouble(num) / np.longdouble(den) * _one_minus_legendre(d, k_max, j * tl)
        acc += term
        mag += np.abs(term)
    out = acc.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = np.where(acc != 0, mag / np.abs(acc), np.inf)
    condition[0] = 1.0  # k = 0: exactly zero
    for k, i in zip(*np.nonzero(condition > _MAX_CONDITION)):
        out[k, i] = _defect_mp(d, r, int(k), float(t[i]))
    return out


def multiplier_defect(spec: MultiplierSpec, k: int) -> float:
    """``1 - m_r(k, t)``, accurate even when ``k t`` is tiny."""
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    return float(defect_table(spec.d, spec.r, k, [spec.t])[k, 0])


def defect_ratio_window(
    d: int,
    r: int,
    k_max: int = WINDOW_GRID["k_max"],
    t_min: float = WINDOW_GRID["t_min"],
    t_max: float = WINDOW_GRID["t_max"],
    t_points: int = WINDOW_GRID["t_points"],
) -> tuple:
    """Min and max of ``(1 - m_r(k,t)) / min(1, kt)^{2r}`` over k in [1, k_max]
    and ``t_points`` log-spaced angles in [t_min, t_max]."""
    t = np.geomspace(t_min, t_max, t_points)
    k = np.arange(1, k_max + 1, dtype=float)
    defect = defect_table(d, r, k_max, t)[1:]
    ratio = defect / np.minimum(1.0, np.outer(k, t)) ** (2 * r)
    return float(ratio.min()), float(ratio.max())


def measure_defect_windows(
    ds=(2, 3, 5), rs=(1, 2, 3), t_points: int = WINDOW_GRID["t_points"]
) -> dict:
    """Per-(d, r) windows keyed ``"d=<d>,r=<r>"`` plus the overall window."""
    windows = {}
    for d in ds:
        for r in rs:
            windows[f"d={d},r={r}"] = list(defect_ratio_window(d, r, t_points=t_points))
    lo = min(w[0] for w in windows.values())
    hi = max(w[1] for w in windows.values())
    return {"grid": dict(WINDOW_GRID, t_points=t_points), "windows": windows, "overall": [lo, hi]}


def persisted_defect_windows() -> dict:
    """Windows recorded in the package data (regression reference)."""
    text = resources.files("sphere_entropy").joinpath("data/defect_window.json").read_text()
    return json.loads(text)


def holder_defect(
    model: SchoenbergModel, spec: MultiplierSpec, s: float, tol: float = DEFAULT_TOL
) -> tuple:
    """``I_t = sum_k a_k (m_r(k,t) - 1) P_k^d(s)``; returns ``(value, error_bound)``.

    The truncation error is at most ``4^r/C(2r,r)`` times the coefficient tail.
    """
    if not -1.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [-1, 1], got {s}")
    values, err = holder_defect_grid(model, spec.d, spec.r, [spec.t], [s], tol)
    return float(values[0, 0]), err


def holder_defect_grid(model: SchoenbergModel, d: int, r: int, t, s, tol: float = DEFAULT_TOL):
    """``I_t`` on the outer grid ``t x s``; returns ``(values, error_bound)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    for ti in t:
        MultiplierSpec(d, r, float(ti))
    if np.any(np.abs(s) > 1.0):
        raise DomainError("s must lie in [-1, 1]")
    bound = multiplier_bound(r)
    n = truncation_level(model, tol / bound)
    a = model.coefficients(n)
    defect = defect_table(d, r, n, t)
    p = legendre_table(d, n, s)
    values = np.empty((t.size, s.size))
    for i in range(t.size):
        for j in range(s.size):
            values[i, j] = -math.fsum(a * defect[:, i] * p[:, j])
    return values, bound * model.tail_sum(n)


def _defect_sup(d: int, r: int) -> float:
    key = f"d={d},r={r}"
    try:
        stored = persisted_defect_windows()["windows"].get(key)
    except FileNotFoundError:
        stored = None
    c_hi = stored[1] if stored else defect_ratio_window(d, r)[1]
    return max(c_hi, multiplier_bound(r))


def holder_constant(model: SchoenbergModel, d: int, r: int, n0: int = 1) -> float:
    """Empirical constant ``C`` with ``|I_t| <= C t^{2r}``.

    ``C = c * kappa * (sum_{k>=n0} a_k k^{4r})^{1/2}`` where ``c`` is the larger of
    the measured defect-ratio maximum and ``4^r/C(2r,r)``. The weighted sum is
    taken to a fixed cap and must have stabilized over its last decade.
    """
    d = check_sphere_dim(d)
    if r < 1 or n0 < 1:
        raise DomainError("need r >= 1 and n0 >= 1")
    k = np.arange(n0, WEIGHTED_SUM_CAP + 1)
    log_terms = model.log_coefficients(WEIGHTED_SUM_CAP)[n0:] + 4 * r * np.log(k)
    terms = np.exp(log_terms)
    total = math.fsum(terms)
    last_decade = math.fsum(terms[k > WEIGHTED_SUM_CAP // 10])
    if not math.isfinite(total) or total <= 0 or last_decade > _STABILIZATION * total:
        raise DivergenceError(
            f"sum a_k k^{4 * r} has not stabilized by k = {WEIGHTED_SUM_CAP} "
            f"(last-decade share {last_decade / total if total else float('nan'):.3g})"
        )
    kappa = math.sqrt(model.total())
    return _defect_sup(d, r) * kappa * math.sqrt(total)


def decay_check(model: SchoenbergModel, d: int, k_range: int = 1000) -> tuple:
    """``(sup_{1<=k<=k_range} a_k k^d, no growth over the last half of the range)``."""
    d = check_sphere_dim(d)
    if k_range < 10:
        raise DomainError(f"k_range must be at least 10, got {k_range}")
    k = np.arange(1, k_range + 1)
    with np.errstate(divide="ignore"):
        weighted = np.exp(model.log_coefficients(k_range)[1:] + d * np.log(k))
    late = weighted[k >= k_range // 2].max()
    middle = weighted[(k >= k_range // 4) & (k <= k_range // 2)].max()
    return float(weighted.max()), bool(late <= middle * (1 + 1e-12))
