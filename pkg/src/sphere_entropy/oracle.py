"""Brute-force covering counts of small Euclidean ellipsoids.

Used to witness the volumetric inequality ``prod(sigma) / eps^n <= C(eps)`` on
the finite sections of the RKHS ball, whose semi-axes are ``sqrt(a_k/tau_d^k)``
with multiplicity ``tau_d^k``.

Two certified covers are built and the smaller is reported:

* a cubic grid of ball centres with spacing ``2 eps / sqrt(n)`` (every cube of
  that side lies inside the ball around its centre), keeping the cubes that
  meet the ellipsoid;
* a greedy net over a fine lattice: with pitch ``h`` every point of the
  ellipsoid lies within ``h sqrt(n)/2`` of a lattice centre whose cell meets
  the ellipsoid, so covering those centres at radius ``eps - h sqrt(n)/2``
  covers the ellipsoid at radius ``eps``.

The lower witness is a greedily grown ``2 eps``-separated subset of the
ellipsoid (no ``eps``-ball holds two of its points).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, ResourceError
from .harmonics import check_sphere_dim, cumulative_dim, harmonic_dim
from .kernels import Geometric, SchoenbergModel

__all__ = [
    "MAX_DIM",
    "CELL_CAP",
    "Ellipsoid",
    "CoveringCount",
    "ellipsoid_from_model",
    "covering_count",
    "verify_volumetric_lower",
    "volumetric_bound",
    "OracleCase",
    "OracleResult",
    "standard_suite",
    "run_case",
]

MAX_DIM = 4
CELL_CAP = 10_000_000
DEFAULT_RESTARTS = 7
DEFAULT_SEED = 20240607
# lattice pitch is eps / (scale * sqrt(n)); the finest scale under the cap is used
_PITCH_SCALES = (8, 6, 4, 3)


@dataclass(frozen=True)
class Ellipsoid:
    semi_axes: tuple

    def __post_init__(self):
        axes = tuple(sorted((float(s) for s in self.semi_axes), reverse=True))
        if not 1 <= len(axes) <= MAX_DIM:
            raise DomainError(f"ellipsoid dimension must lie in 1..{MAX_DIM}, got {len(axes)}")
        if not all(s > 0 and math.isfinite(s) for s in axes):
            raise DomainError("semi-axes must be positive and finite")
        object.__setattr__(self, "semi_axes", axes)

    @property
    def n(self) -> int:
        return len(self.semi_axes)


class CoveringCount(NamedTuple):
    upper_count: int
    lower_count: int


def ellipsoid_from_model(model: SchoenbergModel, d: int, m: int) -> Ellipsoid:
    """Finite section of the RKHS ball: axes sqrt(a_k/tau_d^k), each tau_d^k times."""
    d = check_sphere_dim(d)
    n = cumulative_dim(d, m)
    if n > MAX_DIM:
        raise DomainError(f"section dimension {n} exceeds the oracle cap {MAX_DIM}")
    axes = []
    for k in range(m + 1):
        tau = harmonic_dim(d, k)
        a = model.coefficient(k)
        if a <= 0:
            raise DomainError(f"a_{k} = {a} is not positive; the section is degenerate")
        axes.extend([math.sqrt(a / tau)] * tau)
    return Ellipsoid(tuple(axes))


def volumetric_bound(e: Ellipsoid, eps: float) -> float:
    """``prod(sigma_i) * (1/eps)^n``."""
    return math.prod(e.semi_axes) / eps**e.n


def _axis_centres(sigma: float, h: float) -> np.ndarray:
    count = math.ceil(2.0 * sigma / h) + 1
    return (np.arange(count) - (count - 1) / 2.0) * h


def _cells_meeting(e: Ellipsoid, centres: list, h: float) -> np.ndarray:
    """Boolean mask of the axis-aligned cells (side h) that meet the ellipsoid."""
    total = 0.0
    for axis, (c, s) in enumerate(zip(centres, e.semi_axes)):
        nearest = np.maximum(np.abs(c) - h / 2.0, 0.0) / s
        shape = [1] * e.n
        shape[axis] = -1
        total = total + (nearest**2).reshape(shape)
    # admitting boundary-grazing cells only enlarges the cover
    return total <= 1.0 + 1e-12


def _grid_cover(e: Ellipsoid, eps: float) -> int:
    side = 2.0 * eps / math.sqrt(e.n)
    centres = []
    for s in e.semi_axes:
        count = math.ceil(2.0 * s / side)
        centres.append((np.arange(count) - (count - 1) / 2.0) * side)
    return int(np.count_nonzero(_cells_meeting(e, centres, side)))


def _lattice_pitch(e: Ellipsoid, eps: float, cell_cap: int) -> Optional[float]:
    for scale in _PITCH_SCALES:
        h = eps / (scale * math.sqrt(e.n))
        cells = math.prod(math.ceil(2.0 * s / h) + 1 for s in e.semi_axes)
        if cells <= cell_cap:
            return h
    return None


def _ball_stencil(n: int, radius_cells: float) -> np.ndarray:
    r = int(math.floor(radius_cells))
    ax = np.arange(-r, r + 1, dtype=float)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    return sum(g**2 for g in grids) <= radius_cells**2


def _greedy_net(e: Ellipsoid, eps: float, h: float) -> int:
    centres = [_axis_centres(s, h) for s in e.semi_axes]
    pending = _cells_meeting(e, centres, h)
    radius = eps - h * math.sqrt(e.n) / 2.0
    stencil = _ball_stencil(e.n, radius / h)
    half = stencil.shape[0] // 2
    shape = pending.shape
    flat = pending.reshape(-1)
    pointer, chunk, count = 0, 1 << 16, 0
    while pointer < flat.size:
        hits = np.flatnonzero(flat[pointer : pointer + chunk])
        if hits.size == 0:
            pointer += chunk
            continue
        idx = np.unravel_index(pointer + int(hits[0]), shape)
        count += 1
        target, source = [], []
        for i, n_i in zip(idx, shape):
            lo, hi = max(i - half, 0), min(i + half + 1, n_i)
            target.append(slice(lo, hi))
            source.append(slice(lo - (i - half), hi - (i - half)))
        pending[tuple(target)] &= ~stencil[tuple(source)]
        pointer += int(hits[0])
    return count


def _separated_candidates(e: Ellipsoid, eps: float) -> np.ndarray:
    pitch = eps / 4.0
    centres = [_axis_centres(s, pitch) for s in e.semi_axes]
    grids = np.meshgrid(*centres, indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    inside = np.sum((pts / np.array(e.semi_axes)) ** 2, axis=1) <= 1.0
    extremes = np.vstack([np.diag(e.semi_axes), -np.diag(e.semi_axes)])
    return np.vstack([extremes, pts[inside]])


def _greedy_separated(points: np.ndarray, separation: float) -> int:
    count = 0
    remaining = points
    while remaining.shape[0]:
        p = remaining[0]
        count += 1
        keep = np.sum((remaining - p) ** 2, axis=1) > separation**2
        remaining = remaining[keep]
    return count


def covering_count(
    e: Ellipsoid,
    eps: float,
    cell_cap: int = CELL_CAP,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = DEFAULT_SEED,
) -> CoveringCount:
    """Certified ``(upper_count, lower_count)`` bracketing the covering number."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if eps >= e.semi_axes[0]:
        return CoveringCount(1, 1)
    upper = _grid_cover(e, eps)
    h = _lattice_pitch(e, eps, cell_cap)
    if h is None:
        raise ResourceError(
            f"lattice for eps={eps} on axes {e.semi_axes} exceeds {cell_cap} cells"
        )
    upper = min(upper, _greedy_net(e, eps, h))

    candidates = _separated_candidates(e, eps)
    lower = _greedy_separated(candidates, 2.0 * eps)
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        lower = max(lower, _greedy_separated(candidates[rng.permutation(len(candidates))], 2.0 * eps))
    return CoveringCount(upper, lower)


def verify_volumetric_lower(e: Ellipsoid, eps: float, count: Optional[CoveringCount] = None) -> bool:
    """Whether ``prod(sigma)/eps^n`` stays below the certified covering count."""
    if count is None:
        count = covering_count(e, eps)
    return volumetric_bound(e, eps) <= count.upper_count


class OracleCase(NamedTuple):
    label: str
    ellipsoid: Ellipsoid
    eps: float


class OracleResult(NamedTuple):
    case: OracleCase
    status: str  # "pass", "fail" or "skip"
    bound: float
    count: Optional[CoveringCount]
    message: str = ""


def standard_suite(model: Optional[SchoenbergModel] = None, d: Optional[int] = None) -> list:
    """The fixed ellipsoid suite, plus the finite sections of ``model`` when given."""
    section = ellipsoid_from_model(Geometric(1.0, 0.5), 2, 1)
    cases = [
        OracleCase("1-D exact", Ellipsoid((1.0,)), 0.25),
        OracleCase("eps >= sigma_1", Ellipsoid((1.0, 0.5)), 1.0),
    ]
    for axes, label in (
        ((1.0, 0.5), "2-D"),
        ((1.0, 0.5, 0.25), "3-D"),
        (section.semi_axes, "4-D section d=2 m=1"),
    ):
        for eps in (0.4, 0.3, 0.2):
            cases.append(OracleCase(label, Ellipsoid(axes), eps))
    if model is not None and d is not None:
        m = 0
        while cumulative_dim(d, m + 1) <= MAX_DIM:
            m += 1
        try:
            e = ellipsoid_from_model(model, d, m)
        except DomainError:
            pass
        else:
            for eps in (0.4, 0.3, 0.2):
                cases.append(OracleCase(f"config section d={d} m={m}", e, eps * e.semi_axes[0]))
    return cases


def run_case(case: OracleCase, cell_cap: int = CELL_CAP) -> OracleResult:
    bound = volumetric_bound(case.ellipsoid, case.eps)
    try:
        count = covering_count(case.ellipsoid, case.eps, cell_cap=cell_cap)
    except ResourceError as exc:
        return OracleResult(case, "skip", bound, None, str(exc))
    status = "pass" if bound <= count.upper_count else "fail"
    return OracleResult(case, status, bound, count)
