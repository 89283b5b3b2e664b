"""Schoenberg coefficient models and isotropic kernel evaluation.

An isotropic positive definite kernel on S^d is ``K(x, y) = sum_k a_k P_k^d(x.y)``
with ``a_k >= 0`` summable. Three coefficient models are supported:

* :class:`Geometric` -- ``a_k = a0 * theta**k``, optionally declaring a lower
  ratio ``delta`` so that ``delta * a_{k-1} <= a_k <= theta * a_{k-1}``.
* :class:`PolynomialDecay` -- envelope ``c2 k^-rho <= a_k <= c1 k^-(beta+d)``;
  the generated sequence is the upper envelope ``a_k = c1 k^-(beta+d)``.
* :class:`Explicit` -- a stored prefix, optionally continued by a parametric
  tail model evaluated at the absolute index ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import zeta

from .errors import ConvergenceError, DomainError
from .harmonics import check_sphere_dim, legendre_table

__all__ = [
    "SchoenbergModel",
    "Geometric",
    "PolynomialDecay",
    "Explicit",
    "ValidationReport",
    "coefficient",
    "tail_sum",
    "validate",
    "truncation_level",
    "kernel_value",
    "DEFAULT_TOL",
    "TRUNCATION_CAP",
]

DEFAULT_TOL = 1e-10
TRUNCATION_CAP = 2_000_000
# Above this many terms partial sums switch from fsum to closed forms.
_DIRECT_SUM_LIMIT = 1_000_000
# rounding in ln a_k grows with |ln a_k|; comparisons in log space scale their slack
_LOG_SLACK = 1e-13


class SchoenbergModel:
    """Common interface of the coefficient models."""

    regime: str = "undetermined"

    def coefficient(self, k: int) -> float:
        raise NotImplementedError

    def coefficients(self, k_max: int) -> np.ndarray:
        """Array ``[a_0, ..., a_{k_max}]``."""
        raise NotImplementedError

    def log_coefficients(self, k_max: int) -> np.ndarray:
        """Array ``[ln a_0, ..., ln a_{k_max}]`` without underflow."""
        with np.errstate(divide="ignore"):
            return np.log(self.coefficients(k_max))

    def partial_sum(self, m: int) -> float:
        """``sum_{k=0}^{m} a_k``."""
        raise NotImplementedError

    def tail_sum(self, m: int) -> float:
        """Certified upper bound on ``sum_{k>m} a_k``."""
        raise NotImplementedError

    def tail_sum_lower(self, m: int) -> float:
        """Lower bound on ``sum_{k>m} a_k`` (0 when nothing better is known)."""
        return 0.0

    def total(self) -> float:
        """Upper bound on ``sum_k a_k``; exact for closed-form models."""
        return self.partial_sum(0) + self.tail_sum(0)

    @property
    def last_positive(self) -> Optional[int]:
        """Index of the last nonzero coefficient, or None for infinite support."""
        return None


@dataclass(frozen=True)
class Geometric(SchoenbergModel):
    a0: float
    theta: float
    delta: Optional[float] = None

    regime = "geometric"

    def __post_init__(self):
        if not (math.isfinite(self.a0) and self.a0 > 0):
            raise DomainError(f"a0 must be positive, got {self.a0}")
        if not 0.0 < self.theta < 1.0:
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        if self.delta is not None:
            if not 0.0 < self.delta < 1.0:
                raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
            if self.delta > self.theta:
                raise DomainError(
                    f"delta={self.delta} exceeds theta={self.theta}; "
                    "no sequence satisfies both ratio bounds"
                )

    def coefficient(self, k: int) -> float:
        return self.a0 * self.theta**k

    def coefficients(self, k_max: int) -> np.ndarray:
        return self.a0 * self.theta ** np.arange(k_max + 1, dtype=float)

    def log_coefficients(self, k_max: int) -> np.ndarray:
        return math.log(self.a0) + np.arange(k_max + 1) * math.log(self.theta)

    def partial_sum(self, m: int) -> float:
        if m < _DIRECT_SUM_LIMIT:
            return math.fsum(self.coefficients(m))
        return self.a0 * (1.0 - self.theta ** (m + 1)) / (1.0 - self.theta)

    def tail_sum(self, m: int) -> float:
        return self.a0 * self.theta ** (m + 1) / (1.0 - self.theta)

    tail_sum_lower = tail_sum

    def total(self) -> float:
        return self.a0 / (1.0 - self.theta)


@dataclass(frozen=True)
class PolynomialDecay(SchoenbergModel):
    c1: float
    beta: float
    c2: float
    rho: float
    d: int
    a0: Optional[float] = None

    regime = "polynomial"

    def __post_init__(self):
        check_sphere_dim(self.d)
        for name in ("c1", "beta", "c2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if not self.rho > 1.0:
            raise DomainError(f"rho must exceed 1, got {self.rho}")
        if self.rho < self.beta + self.d:
            raise DomainError(
                f"rho={self.rho} < beta+d={self.beta + self.d}: the envelope "
                "c2 k^-rho <= a_k <= c1 k^-(beta+d) is empty for large k"
            )
        if self.c2 > self.c1:
            raise DomainError(f"c2={self.c2} > c1={self.c1}: the envelope is empty at k=1")
        if self.a0 is None:
            object.__setattr__(self, "a0", float(self.c1))
        elif not (math.isfinite(self.a0) and self.a0 > 0):
            raise DomainError(f"a0 must be positive, got {self.a0}")

    @property
    def exponent(self) -> float:
        """Decay exponent ``beta + d`` of the generated sequence."""
        return self.beta + self.d

    def coefficient(self, k: int) -> float:
        if k == 0:
            return float(self.a0)
        return self.c1 * k ** (-self.exponent)

    def coefficients(self, k_max: int) -> np.ndarray:
        out = np.empty(k_max + 1)
        out[0] = self.a0
        out[1:] = self.c1 * np.arange(1, k_max + 1, dtype=float) ** (-self.exponent)
        return out

    def log_coefficients(self, k_max: int) -> np.ndarray:
        out = np.empty(k_max + 1)
        out[0] = math.log(self.a0)
        out[1:] = math.log(self.c1) - self.exponent * np.log(np.arange(1, k_max + 1))
        return out

    def partial_sum(self, m: int) -> float:
        if m < _DIRECT_SUM_LIMIT:
            return math.fsum(self.coefficients(m))
        return self.a0 + self.c1 * float(zeta(self.exponent) - zeta(self.exponent, m + 1))

    def tail_sum(self, m: int) -> float:
        p = self.exponent
        if m == 0:
            # a_1 + integral from 1 to infinity
            return self.c1 * (1.0 + 1.0 / (p - 1.0))
        return self.c1 / (p - 1.0) * m ** (1.0 - p)

    def tail_sum_lower(self, m: int) -> float:
        p = self.exponent
        return self.c1 / (p - 1.0) * (m + 1) ** (1.0 - p)

    def total(self) -> float:
        return self.a0 + self.c1 * float(zeta(self.exponent))


TailModel = Union[Geometric, PolynomialDecay]


@dataclass(frozen=True)
class Explicit(SchoenbergModel):
    coeffs: tuple
    tail: Optional[TailModel] = None

    def __post_init__(self):
        values = tuple(float(c) for c in self.coeffs)
        if not values:
            raise DomainError("coeffs must contain at least one value")
        if not all(math.isfinite(c) for c in values):
            raise DomainError("coeffs must be finite")
        if self.tail is not None and not isinstance(self.tail, (Geometric, PolynomialDecay)):
            raise DomainError("tail must be a Geometric or PolynomialDecay model")
        object.__setattr__(self, "coeffs", values)

    @property
    def regime(self) -> str:  # type: ignore[override]
        return self.tail.regime if self.tail is not None else "undetermined"

    @property
    def prefix_length(self) -> int:
        return len(self.coeffs)

    @property
    def last_positive(self) -> Optional[int]:
        if self.tail is not None:
            return None
        positive = [k for k, c in enumerate(self.coeffs) if c > 0]
        return positive[-1] if positive else -1

    def coefficient(self, k: int) -> float:
        if k < self.prefix_length:
            return self.coeffs[k]
        return self.tail.coefficient(k) if self.tail is not None else 0.0

    def coefficients(self, k_max: int) -> np.ndarray:
        n = self.prefix_length
        if k_max < n:
            return np.array(self.coeffs[: k_max + 1])
        if self.tail is None:
            rest = np.zeros(k_max + 1 - n)
        else:
            rest = self.tail.coefficients(k_max)[n:]
        return np.concatenate([np.array(self.coeffs), rest])

    def log_coefficients(self, k_max: int) -> np.ndarray:
        n = self.prefix_length
        with np.errstate(divide="ignore", invalid="ignore"):
            head = np.log(np.array(self.coeffs[: k_max + 1]))
        if k_max < n:
            return head
        if self.tail is None:
            rest = np.full(k_max + 1 - n, -np.inf)
        else:
            rest = self.tail.log_coefficients(k_max)[n:]
        return np.concatenate([head, rest])

    def partial_sum(self, m: int) -> float:
        n = self.prefix_length
        if m < n or self.tail is None:
            return math.fsum(self.coeffs[: m + 1])
        return math.fsum(self.coeffs) + (self.tail.partial_sum(m) - self.tail.partial_sum(n - 1))

    def tail_sum(self, m: int) -> float:
        n = self.prefix_length
        stored = math.fsum(self.coeffs[m + 1 :]) if m + 1 < n else 0.0
        if self.tail is None:
            return stored
        return stored + self.tail.tail_sum(max(m, n - 1))

    def tail_sum_lower(self, m: int) -> float:
        n = self.prefix_length
        stored = math.fsum(self.coeffs[m + 1 :]) if m + 1 < n else 0.0
        if self.tail is None:
            return stored
        return stored + self.tail.tail_sum_lower(max(m, n - 1))


def coefficient(model: SchoenbergModel, k: int) -> float:
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    return model.coefficient(k)


def tail_sum(model: SchoenbergModel, m: int) -> float:
    """Certified upper bound on ``sum_{k>m} a_k``."""
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    return model.tail_sum(m)


@dataclass
class ValidationReport:
    nonnegativity: bool
    summable: bool
    monotone: bool
    ratio_window: Optional[tuple]
    regime: str
    notes: list = field(default_factory=list)
    ratio_bounds: Optional[bool] = None

    @property
    def ok(self) -> bool:
        checks = [self.nonnegativity, self.summable, self.monotone]
        if self.ratio_bounds is not None:
            checks.append(self.ratio_bounds)
        return all(checks)

    def lines(self) -> list:
        window = (
            "n/a"
            if self.ratio_window is None
            else f"[{self.ratio_window[0]:.12g}, {self.ratio_window[1]:.12g}]"
        )
        out = [
            f"nonnegativity: {self.nonnegativity}",
            f"summable: {self.summable}",
            f"monotone: {self.monotone}",
            f"ratio window: {window}",
            f"regime: {self.regime}",
        ]
        if self.ratio_bounds is not None:
            out.append(f"declared ratio bounds hold: {self.ratio_bounds}")
        out.extend(f"note: {n}" for n in self.notes)
        return out


def validate(model: SchoenbergModel, k_range: int = 1000) -> ValidationReport:
    """Check the Schoenberg hypotheses on ``k = 0..k_range``; never raises on failure."""
    if k_range < 2:
        raise DomainError(f"k_range must be at least 2, got {k_range}")
    a = model.coefficients(k_range)
    notes = []

    nonneg = bool(np.all(a >= 0))
    if not nonneg:
        bad = int(np.flatnonzero(a < 0)[0])
        notes.append(f"negative coefficient a_{bad} = {a[bad]!r}")

    monotone = bool(np.all(np.diff(a) <= 0))
    if not monotone:
        bad = int(np.flatnonzero(np.diff(a) > 0)[0]) + 1
        notes.append(f"a_{bad} > a_{bad - 1}: sequence is not nonincreasing")

    zeros = np.flatnonzero(a[: getattr(model, "prefix_length", 0)] == 0)
    if zeros.size:
        notes.append(
            f"zero coefficient at k = {int(zeros[0])}; determinant lower bounds "
            "cannot use truncation levels at or beyond it"
        )

    if isinstance(model, Explicit):
        summable = model.tail is None or _tail_summable(model.tail)
        if model.tail is None:
            notes.append(
                "finitely supported coefficients: the set {n : a_n > 0} is finite, "
                "so the kernel is not strictly positive definite"
            )
    else:
        summable = _tail_summable(model)

    # ratios in log space: a0 theta^k underflows long before k = 1000 for small theta
    with np.errstate(divide="ignore", invalid="ignore"):
        log_a = model.log_coefficients(k_range)
    mask = np.isfinite(log_a[:-1]) & ~np.isnan(log_a[1:])
    ratio_window = None
    log_ratio = None
    if np.any(mask):
        with np.errstate(invalid="ignore"):
            log_ratio = np.where(mask, log_a[1:] - log_a[:-1], 0.0)
        ratios = np.exp(log_ratio[mask])
        ratio_window = (float(ratios.min()), float(ratios.max()))

    regime = model.regime
    if regime == "geometric" and (ratio_window is None or ratio_window[1] >= 1.0):
        notes.append("declared geometric tail but measured ratio reaches 1")
        regime = "undetermined"

    ratio_bounds = None
    if isinstance(model, Geometric) and model.delta is not None:
        slack = _LOG_SLACK * (1.0 + np.abs(log_a[1:]))
        ratio_bounds = bool(
            np.all(log_ratio >= math.log(model.delta) - slack)
            and np.all(log_ratio <= math.log(model.theta) + slack)
        )
    elif isinstance(model, PolynomialDecay):
        log_k = np.log(np.arange(1, k_range + 1, dtype=float))
        slack = _LOG_SLACK * (1.0 + np.abs(log_a[1:]))
        ratio_bounds = bool(
            np.all(log_a[1:] >= math.log(model.c2) - model.rho * log_k - slack)
            and np.all(log_a[1:] <= math.log(model.c1) - model.exponent * log_k + slack)
        )

    return ValidationReport(
        nonnegativity=nonneg,
        summable=summable,
        monotone=monotone,
        ratio_window=ratio_window,
        regime=regime,
        notes=notes,
        ratio_bounds=ratio_bounds,
    )


def _tail_summable(model: SchoenbergModel) -> bool:
    if isinstance(model, Geometric):
        return model.theta < 1.0
    if isinstance(model, PolynomialDecay):
        return model.exponent > 1.0
    return False


def truncation_level(model: SchoenbergModel, tol: float, cap: int = TRUNCATION_CAP) -> int:
    """Smallest ``N`` with ``tail_sum(model, N) <= tol``."""
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if model.tail_sum(0) <= tol:
        return 0
    hi = 1
    while model.tail_sum(hi) > tol:
        if hi >= cap:
            raise ConvergenceError(f"tail above tol={tol} even at N={cap}")
        hi = min(2 * hi, cap)
    lo = hi // 2  # tail_sum(lo) > tol
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if model.tail_sum(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def kernel_value(
    model: SchoenbergModel, d: int, t: float, tol: float = DEFAULT_TOL
) -> tuple:
    """Evaluate ``K`` at inner product ``t``; returns ``(value, error_bound)``.

    The error bound is the certified tail because ``|P_k^d| <= 1`` on [-1, 1].
    """
    d = check_sphere_dim(d)
    if not -1.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [-1, 1], got {t}")
    _check_model_dim(model, d)
    n = truncation_level(model, tol)
    p = legendre_table(d, n, t)
    return math.fsum(model.coefficients(n) * p), model.tail_sum(n)


def _check_model_dim(model: SchoenbergModel, d: int) -> None:
    inner = model.tail if isinstance(model, Explicit) else model
    if isinstance(inner, PolynomialDecay) and inner.d != d:
        raise DomainError(f"model was built for d={inner.d} but evaluated with d={d}")
