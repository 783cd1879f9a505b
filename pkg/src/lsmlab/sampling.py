"""Linear sampling indicators, Tikhonov solves and the density experiment.

For a sampling point ``z`` the right-hand side is
``f_n = exp(i pi/4)/sqrt(8 pi k) exp(-ik alpha_n.z)`` and, with
``F = U diag(s) V^H``,

* Colton-Kirsch: ``||g||^2 = sum |(U^H f)_n|^2 / s_n^2``  (solves ``F g = f``)
* Kirsch:        ``||g||^2 = sum |(V^H f)_n|^2 / s_n``    (solves ``(F*F)^(1/4) g = f``)

No spectral cutoff is applied unless asked for; tiny singular values are
only clamped at ``s_1 * UNDERFLOW_FLOOR`` to keep the sums finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .farfield import FarFieldSVD, farfield_constant
from .geometry import DirectionGrid, SamplingGrid

UNDERFLOW_FLOOR = 1e-140
VARIANTS = ("ck", "kirsch")
DEFAULT_EPSILONS = tuple(10.0**-p for p in range(2, 13))


class SamplingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RhsVector:
    z: tuple[float, float]
    entries: np.ndarray
    k: float


class IndicatorValue(NamedTuple):
    value: float
    clamped: int


def rhs_matrix(points, k, grid: DirectionGrid):
    """Right-hand sides for many points at once, shape ``(N, len(points))``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return farfield_constant(k) * np.exp(-1j * k * (grid.vectors @ points.T))


def rhs_vector(z, k, grid: DirectionGrid) -> RhsVector:
    z = tuple(float(c) for c in z)
    return RhsVector(z, rhs_matrix([z], k, grid)[:, 0], float(k))


def _filtered_singular_values(svd: FarFieldSVD, clamp=True, cutoff=None):
    """Singular values with the underflow clamp applied, a keep-mask and the clamp count."""
    s = svd.s
    keep = np.ones(s.size, dtype=bool)
    if cutoff is not None:
        keep = s >= cutoff * s[0]
    if clamp:
        floor = s[0] * UNDERFLOW_FLOOR
        small = s < floor
        return np.where(small, floor, s), keep, int(np.count_nonzero(small & keep))
    if np.any(s[keep] == 0):
        raise SamplingError("zero singular value and clamping disabled")
    return s, keep, 0


def _check_dims(svd, f):
    if f.entries.shape != (svd.n,):
        raise SamplingError(f"rhs length {f.entries.size} does not match matrix size {svd.n}")


def _ck_sums(svd, rhs, clamp, cutoff):
    s, keep, clamped = _filtered_singular_values(svd, clamp, cutoff)
    rho = svd.u.conj().T @ rhs
    return ((np.abs(rho) ** 2 / (s**2)[:, None])[keep]).sum(axis=0), clamped


def _kirsch_sums(svd, rhs, clamp, cutoff):
    s, keep, clamped = _filtered_singular_values(svd, clamp, cutoff)
    mu = svd.v.conj().T @ rhs
    return ((np.abs(mu) ** 2 / s[:, None])[keep]).sum(axis=0), clamped


def indicator_ck(svd: FarFieldSVD, f: RhsVector, clamp=True, cutoff=None) -> IndicatorValue:
    """``sum |rho_n|^2 / s_n^2`` with ``rho = U^H f``."""
    _check_dims(svd, f)
    val, clamped = _ck_sums(svd, f.entries[:, None], clamp, cutoff)
    return IndicatorValue(float(val[0]), clamped)


def indicator_kirsch(svd: FarFieldSVD, f: RhsVector, clamp=True, cutoff=None) -> IndicatorValue:
    """``sum |mu_n|^2 / s_n`` with ``mu = V^H f``."""
    _check_dims(svd, f)
    val, clamped = _kirsch_sums(svd, f.entries[:, None], clamp, cutoff)
    return IndicatorValue(float(val[0]), clamped)


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """Log10 of ``||g||`` for both variants on a sampling grid, shape ``grid.shape``."""

    grid: SamplingGrid
    values_ck: np.ndarray
    values_k: np.ndarray
    clamped: int = 0

    def values(self, variant):
        if variant == "ck":
            return self.values_ck
        if variant == "kirsch":
            return self.values_k
        raise SamplingError(f"unknown indicator variant {variant!r}")


def sweep(
    svd: FarFieldSVD,
    grid: SamplingGrid,
    k: float,
    dgrid: DirectionGrid,
    clamp=True,
    cutoff=None,
) -> IndicatorField:
    """Evaluate ``0.5 log10 ||g||^2`` for both indicators at every grid point."""
    if dgrid.size != svd.n:
        raise SamplingError(f"direction grid size {dgrid.size} does not match matrix size {svd.n}")
    points = grid.points()
    rhs = rhs_matrix(points, k, dgrid)
    ck, clamped = _ck_sums(svd, rhs, clamp, cutoff)
    kir, _ = _kirsch_sums(svd, rhs, clamp, cutoff)
    with np.errstate(divide="ignore"):
        log_ck = 0.5 * np.log10(ck)
        log_k = 0.5 * np.log10(kir)
    for name, vals in (("ck", log_ck), ("kirsch", log_k)):
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            z = points[bad[0]]
            raise SamplingError(f"{name} indicator is not finite at z=({z[0]:g}, {z[1]:g})")
    return IndicatorField(grid, log_ck.reshape(grid.shape), log_k.reshape(grid.shape), clamped)


@dataclass(frozen=True)
class MinimaReport:
    minima: list  # of ((x, y), value), ascending by value
    contrast: float


def strict_local_minima(values):
    """Flat indices of interior nodes strictly below all 8 neighbours."""
    v = np.asarray(values, dtype=float)
    ny, nx = v.shape
    if ny < 3 or nx < 3:
        return np.array([], dtype=int)
    core = v[1:-1, 1:-1]
    is_min = np.ones_like(core, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == dx == 0:
                continue
            is_min &= core < v[1 + dy : ny - 1 + dy, 1 + dx : nx - 1 + dx]
    iy, ix = np.nonzero(is_min)
    return (iy + 1) * nx + (ix + 1)


def locate_minima(field: IndicatorField, variant: str) -> MinimaReport:
    """Strict local minima sorted by value, and ``median - smallest minimum``.

    The contrast is NaN when the field has no strict interior minimum.
    """
    values = field.values(variant)
    flat = values.ravel()
    idx = strict_local_minima(values)
    idx = idx[np.argsort(flat[idx], kind="stable")]
    points = field.grid.points()
    minima = [((float(points[i, 0]), float(points[i, 1])), float(flat[i])) for i in idx]
    contrast = float(np.median(flat) - minima[0][1]) if minima else math.nan
    return MinimaReport(minima, contrast)


def minima_displacement(reference: MinimaReport, other: MinimaReport, count=2):
    """Largest distance from each of the ``count`` lowest reference minima to
    the nearest minimum of ``other``; NaN when either report is empty."""
    ref = [p for p, _ in reference.minima[:count]]
    pts = np.array([p for p, _ in other.minima])
    if not ref or pts.size == 0:
        return math.nan
    return float(max(np.hypot(*(pts - np.asarray(p)).T).min() for p in ref))


class TikhonovResult(NamedTuple):
    g: np.ndarray
    residual: float
    norm: float


def tikhonov_solve(svd: FarFieldSVD, f: RhsVector, eps: float) -> TikhonovResult:
    """Minimizer of ``||F g - f||^2 + eps ||g||^2`` via the SVD filter factors.

    ``g = sum s_n/(s_n^2 + eps) rho_n v_n`` with ``rho = U^H f``; residual and
    norm are evaluated in the singular basis.
    """
    if not eps > 0:
        raise SamplingError(f"regularization parameter must be positive, got {eps}")
    _check_dims(svd, f)
    s = svd.s
    rho = svd.u.conj().T @ f.entries
    denom = s**2 + eps
    coef = s / denom * rho
    residual = math.sqrt(float(((eps / denom) ** 2 * np.abs(rho) ** 2).sum()))
    norm = math.sqrt(float((np.abs(coef) ** 2).sum()))
    return TikhonovResult(svd.v @ coef, residual, norm)


class SweepRecord(NamedTuple):
    eps: float
    residual: float
    norm: float


@dataclass(frozen=True)
class TikhonovSweep:
    z: tuple[float, float]
    rhs_norm: float
    records: list  # of SweepRecord, eps decreasing


def density_experiment(
    svd: FarFieldSVD,
    z,
    k: float,
    dgrid: DirectionGrid,
    eps_list: Sequence[float] = DEFAULT_EPSILONS,
) -> TikhonovSweep:
    """Tikhonov solutions of ``F g = f_z`` for decreasing regularization.

    Residuals shrink toward zero whether or not ``z`` lies inside the
    obstacle, while ``||g||`` keeps growing.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise SamplingError("empty regularization list")
    if any(e <= 0 for e in eps_list):
        raise SamplingError("regularization parameters must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise SamplingError("regularization parameters must be strictly decreasing")
    f = rhs_vector(z, k, dgrid)
    records = []
    for eps in eps_list:
        res = tikhonov_solve(svd, f, eps)
        records.append(SweepRecord(eps, res.residual, res.norm))
    return TikhonovSweep(f.z, float(np.linalg.norm(f.entries)), records)
