"""Embedding norms of the RKHS into C(S^d) and finite-section determinants.

The unit ball of the RKHS is the ellipsoid with semi-axes ``sqrt(a_k / tau_d^k)``
repeated ``tau_d^k`` times. The sup-norm embedding has ``kappa^2 = sum a_k``;
its projection onto degrees ``<= m`` has ``kappa_m^2 = sum_{k<=m} a_k`` and the
complementary projection ``(kappa_m^s)^2 = sum_{k>m} a_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, PositivityError
from .harmonics import check_sphere_dim, harmonic_dims, log_harmonic_dims
from .kernels import DEFAULT_TOL, TRUNCATION_CAP, SchoenbergModel

__all__ = ["EmbeddingNorms", "embedding_norms", "log_det_terms", "log_det_Tm"]


@dataclass(frozen=True)
class EmbeddingNorms:
    kappa_sq: float
    kappa_m_sq: float
    kappa_s_m_sq: float
    m: int
    # kappa_sq and kappa_s_m_sq are upper bounds; the true values lie within radius below.
    radius: float = 0.0

    @property
    def kappa(self) -> float:
        return math.sqrt(self.kappa_sq)

    @property
    def kappa_m(self) -> float:
        return math.sqrt(self.kappa_m_sq)

    @property
    def kappa_s_m(self) -> float:
        return math.sqrt(self.kappa_s_m_sq)


def embedding_norms(
    model: SchoenbergModel, m: int, tol: float = DEFAULT_TOL
) -> EmbeddingNorms:
    """Squared norms kappa^2, kappa_m^2 and (kappa_m^s)^2 for truncation ``m``.

    The tail is the certified ``tail_sum``; when its slack against the known
    lower bound exceeds ``tol``, further terms are summed explicitly until the
    remaining slack is below ``tol``.
    """
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    head = model.partial_sum(m)
    tail = model.tail_sum(m)
    radius = tail - model.tail_sum_lower(m)
    if radius > tol:
        n = _refine_level(model, m, tol)
        tail = (model.partial_sum(n) - head) + model.tail_sum(n)
        radius = model.tail_sum(n) - model.tail_sum_lower(n)
    return EmbeddingNorms(
        kappa_sq=head + tail,
        kappa_m_sq=head,
        kappa_s_m_sq=tail,
        m=m,
        radius=max(radius, 0.0),
    )


def _refine_level(model: SchoenbergModel, m: int, tol: float) -> int:
    def slack(n):
        return model.tail_sum(n) - model.tail_sum_lower(n)

    hi = max(2 * m, 1)
    while slack(hi) > tol:
        if hi >= TRUNCATION_CAP:
            raise ConvergenceError(f"tail slack above tol={tol} at N={TRUNCATION_CAP}")
        hi = min(2 * hi, TRUNCATION_CAP)
    lo = m
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if slack(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def log_det_terms(model: SchoenbergModel, d: int, m: int) -> np.ndarray:
    """Per-degree terms ``tau_d^k ln(a_k / tau_d^k)`` for k = 0..m."""
    d = check_sphere_dim(d)
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    log_a = model.log_coefficients(m)
    if not np.all(np.isfinite(log_a)):
        bad = int(np.flatnonzero(~np.isfinite(log_a))[0])
        raise PositivityError(
            f"a_{bad} = {model.coefficient(bad)!r} is not strictly positive; "
            "the determinant of T_m^* T_m degenerates"
        )
    log_tau = log_harmonic_dims(d, m)
    tau = np.array(harmonic_dims(d, m), dtype=float)
    return tau * (log_a - log_tau)


def log_det_Tm(model: SchoenbergModel, d: int, m: int) -> float:
    """ln det(T_m^* T_m) = sum_{k<=m} tau_d^k ln(a_k / tau_d^k), in log space."""
    return math.fsum(log_det_terms(model, d, m))
