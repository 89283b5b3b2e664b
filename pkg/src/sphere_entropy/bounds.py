"""Finite-epsilon covering-number bounds and asymptotic constants.

All logarithms are natural. ``C(eps)`` denotes the covering number of the
image of the RKHS unit ball in C(S^d) by sup-norm balls of radius ``eps``.

Upper bound: split the embedding into the degree-``<= m`` part (rank
``tau_{d+1}^m``, norm ``kappa_m``) and the tail (norm ``kappa_m^s``). Whenever
``kappa_m^s <= eps/2`` the tail is covered by one ball, and the finite-rank
part by ``(1 + 4 kappa_m / eps)^rank`` balls.

Lower bound: for every ``m`` the finite section ``T_m`` gives the volumetric
estimate ``ln C(eps) >= 1/2 ln det(T_m^* T_m) + tau_{d+1}^m ln(1/eps)``, which
is maximized over integer ``m``. The real critical point of the smooth
surrogate used in asymptotic analysis,

    c = -d / ((d+1)(d + ln(1/delta) - 1)) * ln(4 eps^2 / (a0 (d-1)!)),

sits near the numerical maximizer, but the integer search below does not rely
on it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, PositivityError
from .harmonics import check_sphere_dim, cumulative_dim, harmonic_dims, log_harmonic_dims
from .kernels import Explicit, Geometric, PolynomialDecay, SchoenbergModel, truncation_level

__all__ = [
    "UPPER_SCAN_WINDOW",
    "LOWER_SCAN_FLOOR",
    "upper_ln_covering",
    "lower_ln_covering",
    "m_selector_geometric",
    "m_selector_harmonic",
    "AsymptoticConstants",
    "asymptotic_constants_geometric",
    "asymptotic_constants_harmonic",
    "refined_constants",
    "sharper_upper_constant",
    "DeltaThreshold",
    "delta_threshold",
    "delta_threshold_residuals",
    "lower_critical_point",
    "EnvelopeRow",
    "BoundEnvelope",
    "envelope",
    "estimate_asymptotic_constant",
]

UPPER_SCAN_WINDOW = 64
LOWER_SCAN_FLOOR = 64
_LOWER_SCAN_FACTOR = 8
_CROSSING_CAP = 1 << 24


def _check_eps(eps: float) -> float:
    if not (eps > 0 and math.isfinite(eps)):
        raise DomainError(f"eps must be a positive finite number, got {eps}")
    return float(eps)


def upper_ln_covering(model: SchoenbergModel, d: int, eps: float) -> tuple:
    """Certified upper bound on ``ln C(eps)``; returns ``(value, m_upper)``.

    ``m_upper = -1`` means a single ball of radius ``eps`` already suffices.
    """
    d = check_sphere_dim(d)
    eps = _check_eps(eps)
    if eps >= math.sqrt(model.total()):
        return 0.0, -1
    try:
        m0 = truncation_level(model, eps * eps / 4.0)
    except ConvergenceError as exc:
        raise ConvergenceError(f"no feasible truncation for eps={eps}: {exc}") from exc

    head = model.partial_sum(m0)
    best, best_m = math.inf, m0
    for m in range(m0, m0 + UPPER_SCAN_WINDOW + 1):
        if m > m0:
            head += model.coefficient(m)
        value = cumulative_dim(d, m) * math.log1p(4.0 * math.sqrt(head) / eps)
        if value < best:
            best, best_m = value, m
    return max(best, 0.0), best_m


def _lower_scan_cap(model: SchoenbergModel, d: int, eps: float) -> int:
    """Search cap: a multiple of the first degree where a_m / tau_d^m < eps^2."""
    target = 2.0 * math.log(eps)
    k = LOWER_SCAN_FLOOR
    while True:
        la = model.log_coefficients(k)[-1]
        if la - log_harmonic_dims(d, k)[-1] < target or k >= _CROSSING_CAP:
            break
        k *= 2
    # bisect the crossing inside (k/2, k]
    lo, hi = k // 2, k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if model.log_coefficients(mid)[-1] - log_harmonic_dims(d, mid)[-1] < target:
            hi = mid
        else:
            lo = mid
    return max(LOWER_SCAN_FLOOR, _LOWER_SCAN_FACTOR * hi)


def lower_ln_covering(model: SchoenbergModel, d: int, eps: float) -> tuple:
    """Volumetric lower bound on ``ln C(eps)``; returns ``(value, m_lower)``.

    The bound is clamped at 0 (``C >= 1``); ``m_lower = -1`` flags the clamp.
    """
    d = check_sphere_dim(d)
    eps = _check_eps(eps)
    cap = _lower_scan_cap(model, d, eps)
    last = model.last_positive
    if last is not None:
        cap = min(cap, last)
    log_a = model.log_coefficients(cap)
    bad = np.flatnonzero(~np.isfinite(log_a))
    if bad.size:
        if bad[0] == 0:
            raise PositivityError("a_0 = 0: no truncation gives a determinant bound")
        cap = int(bad[0]) - 1
        log_a = log_a[: cap + 1]
    tau = np.array(harmonic_dims(d, cap), dtype=float)
    log_tau = log_harmonic_dims(d, cap)
    values = 0.5 * np.cumsum(tau * (log_a - log_tau)) + np.cumsum(tau) * -math.log(eps)
    m = int(np.argmax(values))
    if values[m] < 0:
        return 0.0, -1
    return float(values[m]), m


def _geometric_brackets(m: int, eps: float, a0: float, theta: float) -> bool:
    left = math.sqrt(theta ** (m + 1) * a0 / (1.0 - theta))
    right = math.sqrt(theta**m * a0 / (1.0 - theta))
    return left <= eps / 2.0 < right


def m_selector_geometric(eps: float, a0: float, theta: float) -> int:
    """Integer m with sqrt(theta^{m+1} a0/(1-theta)) <= eps/2 < sqrt(theta^m a0/(1-theta)).

    Equality on the left (a boundary tie) resolves to the smaller m.
    """
    eps = _check_eps(eps)
    if not 0.0 < theta < 1.0 or a0 <= 0:
        raise DomainError("need a0 > 0 and 0 < theta < 1")
    if not eps / 2.0 < math.sqrt(a0 / (1.0 - theta)):
        raise DomainError(f"eps={eps} too large: no m >= 0 satisfies the selector")
    x = math.log(eps * eps * (1.0 - theta) / (4.0 * a0)) / math.log(theta)
    m = max(math.ceil(x) - 1, 0)
    return _nudge(m, lambda j: _geometric_brackets(j, eps, a0, theta), lower=0)


def _harmonic_brackets(m: int, eps: float, c1: float, q: float) -> bool:
    left = math.sqrt(c1 / q * (m + 1) ** (-q))
    right = math.sqrt(c1 / q * m ** (-q))
    return left <= eps / 2.0 < right


def m_selector_harmonic(eps: float, c1: float, beta: float, d: int) -> int:
    """Integer m >= 1 with [c1/q (m+1)^-q]^(1/2) <= eps/2 < [c1/q m^-q]^(1/2), q = beta+d-1."""
    eps = _check_eps(eps)
    d = check_sphere_dim(d)
    if c1 <= 0 or beta <= 0:
        raise DomainError("need c1 > 0 and beta > 0")
    q = beta + d - 1.0
    if not eps / 2.0 < math.sqrt(c1 / q):
        raise DomainError(f"eps={eps} too large: no m >= 1 satisfies the selector")
    y = (4.0 * c1 / (q * eps * eps)) ** (1.0 / q)
    m = max(math.ceil(y) - 1, 1)
    return _nudge(m, lambda j: _harmonic_brackets(j, eps, c1, q), lower=1)


def _nudge(m: int, holds, lower: int) -> int:
    # closed-form guess can be off by one through rounding; settle on the exact bracket
    for candidate in (m, m - 1, m + 1, m - 2, m + 2):
        if candidate >= lower and holds(candidate):
            return candidate
    raise ConvergenceError(f"selector bracket not found near m={m}")


@dataclass(frozen=True)
class AsymptoticConstants:
    regime: str
    lower_const: float
    upper_const: float
    rate_descriptor: str
    lower_rate_descriptor: Optional[str] = None
    notes: tuple = ()

    def lines(self) -> list:
        lower_rate = self.lower_rate_descriptor or self.rate_descriptor
        out = [
            f"regime: {self.regime}",
            f"lower constant: {self.lower_const:.17g}  (rate {lower_rate})",
            f"upper constant: {self.upper_const:.17g}  (rate {self.rate_descriptor})",
        ]
        out.extend(f"note: {n}" for n in self.notes)
        return out


def _check_ratio(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value}")


def asymptotic_constants_geometric(d: int, theta: float, delta: float) -> AsymptoticConstants:
    """Liminf/limsup constants of ln C(eps) / (ln 1/eps)^{d+1} under geometric decay."""
    d = check_sphere_dim(d)
    _check_ratio("theta", theta)
    _check_ratio("delta", delta)
    if delta > theta:
        raise DomainError(f"delta={delta} must not exceed theta={theta}")
    fact = math.factorial(d)
    lower = (2 * d) ** d / (fact * (d + math.log(1 / delta) - 1) ** d * (d + 1) ** (d + 1))
    upper = 2 ** (d + 2) / (fact * math.log(1 / theta) ** d)
    return AsymptoticConstants(
        regime="geometric",
        lower_const=lower,
        upper_const=upper,
        rate_descriptor=f"(ln(1/eps))^{d + 1}",
    )


def asymptotic_constants_harmonic(
    d: int, c1: float, beta: float, c2: float, rho: float, a0: float = 1.0
) -> AsymptoticConstants:
    """Constants for polynomial decay c2 k^-rho <= a_k <= c1 k^-(beta+d)."""
    d = check_sphere_dim(d)
    if c1 <= 0 or c2 <= 0 or beta <= 0 or a0 <= 0:
        raise DomainError("need c1, c2, beta, a0 > 0")
    if rho <= 1:
        raise DomainError(f"rho must exceed 1, got {rho}")
    fact = math.factorial(d)
    q = beta + d - 1.0
    upper = 4.0 / fact * (4.0 * c1 / q) ** (d / q)
    s = rho + d - 1.0
    lower = math.log(math.sqrt(a0)) + 2.0 * s / (math.e * d * fact) * (c2 / 2.0) ** (d / s)
    return AsymptoticConstants(
        regime="polynomial",
        lower_const=lower,
        upper_const=upper,
        rate_descriptor=f"(1/eps)^({2 * d}/{_fmt(q)}) * ln(1/eps)",
        lower_rate_descriptor=f"(1/eps)^({d}/(2*{_fmt(s)}))",
    )


def _fmt(x: float) -> str:
    return f"{x:g}"


def refined_constants(d: int, theta: float, delta: float, a0: float = 1.0) -> AsymptoticConstants:
    """Geometric-regime constants against the shifted normalizers.

    The upper normalizer is [ln(2 sqrt(a0) / (eps sqrt(1-theta)))]^{d+1} and the
    lower one [ln(sqrt(a0 (d-1)!/2) / eps)]^{d+1}.
    """
    d = check_sphere_dim(d)
    _check_ratio("theta", theta)
    _check_ratio("delta", delta)
    if a0 <= 0:
        raise DomainError(f"a0 must be positive, got {a0}")
    fact = math.factorial(d)
    upper = 2 ** (d + 1) / (fact * math.log(1 / theta) ** d)
    lower = 2 ** (d + 1) * d**d / (fact * (d + math.log(1 / delta) - 1) ** d * (d + 1) ** (d + 1))
    notes = ()
    if a0 * math.factorial(d - 1) / 4.0 < 1.0:
        notes = ("a0 (d-1)!/4 < 1: the asymptotic lower argument assumes the opposite",)
    return AsymptoticConstants(
        regime="geometric",
        lower_const=lower,
        upper_const=upper,
        rate_descriptor=f"[ln(2*sqrt({_fmt(a0)})/(eps*sqrt(1-{_fmt(theta)})))]^{d + 1}",
        lower_rate_descriptor=f"[ln(sqrt({_fmt(a0)}*{math.factorial(d - 1)}/2)/eps)]^{d + 1}",
        notes=notes,
    )


def _shift_log(theta: float) -> float:
    """ln(2e / sqrt(1 - theta))."""
    return math.log(2.0 * math.e / math.sqrt(1.0 - theta))


def sharper_upper_constant(d: int, theta: float) -> float:
    """Limsup constant of ln C(eps)/(ln 1/eps)^{d+1} when a0 = 1 and a_k <= theta^k."""
    d = check_sphere_dim(d)
    _check_ratio("theta", theta)
    return (
        2 ** (d + 1) * _shift_log(theta) ** (d + 1) / (math.factorial(d) * math.log(1 / theta) ** d)
    )


@dataclass(frozen=True)
class DeltaThreshold:
    value: float
    exponent: float
    valid: bool
    warning: Optional[str] = None


def _threshold_exponent(theta: float, d: int, log_inside: bool = True) -> float:
    shift = _shift_log(theta)
    base = (d + 1) * shift if log_inside else shift ** (d + 1)
    return d / base ** (1.0 + 1.0 / d) + (d - 1) / math.log(theta)


def delta_threshold(theta: float, d: int) -> DeltaThreshold:
    """Ratio threshold delta = theta^c(theta, d) at which lower and upper constants meet.

    c(theta, d) = d / [(d+1) ln(2e/sqrt(1-theta))]^{1+1/d} + (d-1)/ln(theta),
    i.e. the power d+1 sits inside the logarithm. With this reading the refined
    lower constant at ``delta`` equals :func:`sharper_upper_constant`.
    ``valid`` is False when the threshold falls outside ``(0, theta]``.
    """
    d = check_sphere_dim(d)
    _check_ratio("theta", theta)
    c = _threshold_exponent(theta, d)
    value = theta**c
    valid = 0.0 < value <= theta
    warning = None
    if not valid:
        warning = (
            f"threshold {value:.6g} lies outside (0, theta={theta}]; "
            "no sequence satisfies both ratio bounds"
        )
    return DeltaThreshold(value=value, exponent=c, valid=valid, warning=warning)


def delta_threshold_residuals(theta: float, d: int) -> dict:
    """Relative gap between the refined lower constant at the threshold and the
    sharper upper constant, for both placements of the power d+1."""
    target = sharper_upper_constant(d, theta)
    fact = math.factorial(d)
    out = {}
    for label, inside in (("power inside log", True), ("power outside log", False)):
        c = _threshold_exponent(theta, d, log_inside=inside)
        log_inv_delta = c * math.log(1.0 / theta)
        lower = (
            2 ** (d + 1) * d**d / (fact * (d + log_inv_delta - 1) ** d * (d + 1) ** (d + 1))
        )
        out[label] = abs(lower - target) / target
    return out


def lower_critical_point(eps: float, d: int, delta: float, a0: float = 1.0) -> float:
    """Real maximizer of the smooth lower-bound surrogate in the geometric regime."""
    d = check_sphere_dim(d)
    return (
        -d
        / ((d + 1) * (d + math.log(1 / delta) - 1))
        * math.log(4 * eps * eps / (a0 * math.factorial(d - 1)))
    )


@dataclass(frozen=True)
class EnvelopeRow:
    eps: float
    lower_ln_cov: float
    upper_ln_cov: float
    m_lower: int
    m_upper: int
    normalized_lower: float
    normalized_upper: float
    rate_lower: float = math.nan
    rate_upper: float = math.nan


@dataclass
class BoundEnvelope:
    rows: list
    regime: str = "undetermined"
    d: Optional[int] = None
    rate_descriptors: tuple = field(default=("", ""))


def _rates(model: SchoenbergModel, d: int):
    """(regime, lower rate fn, upper rate fn, descriptors) for normalization."""
    inner = model.tail if isinstance(model, Explicit) else model
    if isinstance(inner, PolynomialDecay):
        q = inner.beta + d - 1.0
        s = inner.rho + d - 1.0

        def upper(eps):
            return (1 / eps) ** (2 * d / q) * math.log(1 / eps)

        def lower(eps):
            return (1 / eps) ** (d / (2 * s))

        return (
            "polynomial",
            lower,
            upper,
            (f"(1/eps)^({d}/(2*{_fmt(s)}))", f"(1/eps)^({2 * d}/{_fmt(q)})*ln(1/eps)"),
        )
    if isinstance(inner, Geometric):

        def rate(eps):
            return math.log(1 / eps) ** (d + 1)

        desc = f"(ln(1/eps))^{d + 1}"
        return "geometric", rate, rate, (desc, desc)

    # finite-rank or unclassified: ln C grows like rank * ln(1/eps)
    def rate(eps):
        return math.log(1 / eps)

    return "undetermined", rate, rate, ("ln(1/eps)", "ln(1/eps)")


def _normalize(value: float, rate: float) -> float:
    if not rate > 0 or not math.isfinite(rate):
        return math.nan
    return value / rate


def envelope(
    model: SchoenbergModel,
    d: int,
    eps_grid: Sequence[float],
    workers: Optional[int] = None,
) -> BoundEnvelope:
    """Lower and upper bounds on ln C(eps) for every eps of a descending grid.

    Rows are independent; with ``workers`` they are computed on a thread pool
    and reassembled in grid order.
    """
    d = check_sphere_dim(d)
    grid = [_check_eps(e) for e in eps_grid]
    if not grid:
        raise DomainError("eps_grid is empty")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise DomainError("eps_grid must be strictly descending")
    regime, lower_rate, upper_rate, desc = _rates(model, d)

    def row(eps: float) -> EnvelopeRow:
        lo, m_lo = lower_ln_covering(model, d, eps)
        up, m_up = upper_ln_covering(model, d, eps)
        r_lo, r_up = lower_rate(eps), upper_rate(eps)
        return EnvelopeRow(
            eps=eps,
            lower_ln_cov=lo,
            upper_ln_cov=up,
            m_lower=m_lo,
            m_upper=m_up,
            normalized_lower=_normalize(lo, r_lo),
            normalized_upper=_normalize(up, r_up),
            rate_lower=r_lo,
            rate_upper=r_up,
        )

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, grid))
    else:
        rows = [row(e) for e in grid]
    return BoundEnvelope(rows=rows, regime=regime, d=d, rate_descriptors=desc)


def estimate_asymptotic_constant(env: BoundEnvelope, which: str) -> tuple:
    """Least-squares proportionality constant of a bound against its rate.

    Fits ``bound ~ s * rate`` through the origin over the smallest-eps half of
    the grid and returns ``(s, relative RMS residual)``. Convergence toward the
    limiting constants is logarithmically slow, so the result is a diagnostic.
    """
    if which not in ("lower", "upper"):
        raise DomainError(f"which must be 'lower' or 'upper', got {which!r}")
    if len(env.rows) < 4:
        raise DomainError(f"need at least 4 envelope rows, got {len(env.rows)}")
    rows = sorted(env.rows, key=lambda r: r.eps, reverse=True)
    half = rows[len(rows) // 2 :]
    y = np.array([getattr(r, f"{which}_ln_cov") for r in half])
    x = np.array([getattr(r, f"rate_{which}") for r in half])
    if not np.all(np.isfinite(x)) or not np.any(x > 0):
        raise DomainError("rate function undefined on the fitted rows")
    slope = float(x @ y / (x @ x))
    scale = float(np.sqrt(np.mean(y**2)))
    resid = float(np.sqrt(np.mean((y - slope * x) ** 2)))
    return slope, (resid / scale if scale > 0 else 0.0)
