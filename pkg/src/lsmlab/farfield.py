"""Far-field matrix, its SVD, consistency checks and data degradation.

Convention: ``F[i, j] = A(alpha_i, beta_j)`` with the scattered field behaving
like ``A(alpha, beta) exp(ikr) / sqrt(r)``.  Rows are observation directions,
columns incidence directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .geometry import DirectionGrid

PROVENANCES = ("synthetic", "noisy", "aperture-restricted", "loaded")


class FarFieldError(ValueError):
    pass


def farfield_constant(k):
    """``exp(i pi/4) / sqrt(8 pi k)``, the 2D far-field factor of the Green's function."""
    return np.exp(1j * np.pi / 4) / math.sqrt(8 * np.pi * k)


@dataclass(frozen=True, eq=False)
class FarFieldMatrix:
    entries: np.ndarray
    grid: DirectionGrid
    k: float
    provenance: str = "synthetic"

    def __post_init__(self):
        F = np.array(self.entries, dtype=complex)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise FarFieldError(f"far-field matrix must be square, got shape {F.shape}")
        if F.shape[0] != self.grid.size:
            raise FarFieldError(
                f"matrix size {F.shape[0]} does not match direction grid size {self.grid.size}"
            )
        if not np.all(np.isfinite(F)):
            raise FarFieldError("far-field matrix has non-finite entries")
        if not self.k > 0:
            raise FarFieldError(f"wavenumber must be positive, got {self.k}")
        F.setflags(write=False)
        object.__setattr__(self, "entries", F)
        object.__setattr__(self, "k", float(self.k))

    @property
    def n(self):
        return self.entries.shape[0]

    def with_entries(self, entries, provenance=None, grid=None):
        return FarFieldMatrix(
            entries, grid or self.grid, self.k, provenance or self.provenance
        )


@dataclass(frozen=True, eq=False)
class FarFieldSVD:
    """``F = U diag(s) V^H`` with ``s`` descending."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def n(self):
        return self.s.size

    def reconstruct(self):
        return (self.u * self.s) @ self.v.conj().T


def svd(F: FarFieldMatrix) -> FarFieldSVD:
    try:
        u, s, vh = np.linalg.svd(F.entries)
    except np.linalg.LinAlgError as exc:
        raise FarFieldError(f"SVD did not converge: {exc}") from exc
    for a in (u, s, vh):
        a.setflags(write=False)
    v = vh.conj().T
    v.setflags(write=False)
    return FarFieldSVD(u, s, v)


def check_reciprocity(F: FarFieldMatrix) -> float:
    """Max deviation from ``A(alpha, beta) = A(-beta, -alpha)``.

    ``-alpha_n`` is ``alpha_{(n + N/2) mod N}``, so the check compares
    ``F[i, j]`` with ``F[j + N/2, i + N/2]`` (indices mod N).
    """
    if F.grid.n_full % 2:
        raise FarFieldError("reciprocity check needs an even number of directions")
    if not F.grid.is_full:
        raise FarFieldError("reciprocity check needs the full direction grid")
    neg = F.grid.negation()
    partner = F.entries[np.ix_(neg, neg)].T
    return float(np.abs(F.entries - partner).max())


def scattering_constant(k):
    """Factor ``c`` making ``S = I + c (2 pi / N) F`` unitary.

    For the disk the far-field operator has eigenvalues
    ``2 pi a_n`` with ``a_n = -sqrt(2/(pi k)) exp(-i pi/4) J_n/H_n``; the
    eigenvalue of ``S`` must be ``-conj(H_n)/H_n = 1 - 2 J_n/H_n``, which
    fixes ``c = 2 k exp(i pi/4)/sqrt(8 pi k)``.
    """
    return 2 * k * farfield_constant(k)


def scattering_matrix_unitarity(F: FarFieldMatrix) -> float:
    """``max |S^H S - I|`` for the discrete scattering matrix of ``F``."""
    if not F.grid.is_full or F.provenance == "aperture-restricted":
        raise FarFieldError("unitarity check needs full-aperture data")
    n = F.n
    S = np.eye(n) + scattering_constant(F.k) * (2 * np.pi / n) * F.entries
    return float(np.abs(S.conj().T @ S - np.eye(n)).max())


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    seed: int = 0

    def __post_init__(self):
        if not (self.level >= 0 and math.isfinite(self.level)):
            raise FarFieldError(f"noise level must be finite and >= 0, got {self.level}")


def add_noise(F: FarFieldMatrix, spec: NoiseSpec) -> FarFieldMatrix:
    """Relative complex Gaussian noise, ``F_ij (1 + level (xi1 + i xi2)/sqrt(2))``.

    Draws are keyed by the full-grid indices, so noise on an
    aperture-restricted matrix equals the restriction of the noisy full
    matrix.
    """
    if spec.level == 0:
        return F.with_entries(F.entries.copy(), provenance="noisy")
    idx = np.asarray(F.grid.indices)
    xi1, xi2 = rng.normal_pair(int(spec.seed), idx[:, None], idx[None, :])
    factor = 1 + spec.level * (xi1 + 1j * xi2) / math.sqrt(2)
    return F.with_entries(F.entries * factor, provenance="noisy")


@dataclass(frozen=True)
class ApertureSpec:
    """Half-open arc ``[theta_lo, theta_hi)`` of admissible directions."""

    theta_lo: float
    theta_hi: float

    def __post_init__(self):
        if not (0 <= self.theta_lo < self.theta_hi <= 2 * np.pi):
            raise FarFieldError(
                f"aperture arc must satisfy 0 <= lo < hi <= 2pi, got [{self.theta_lo}, {self.theta_hi})"
            )

    def mask(self, grid: DirectionGrid):
        # compare fractions of a full turn so that e.g. n/N = 1/2 hits pi exactly
        frac = np.asarray(grid.indices) / grid.n_full
        lo, hi = self.theta_lo / (2 * np.pi), self.theta_hi / (2 * np.pi)
        return (frac >= lo) & (frac < hi)


def restrict_aperture(F: FarFieldMatrix, spec: ApertureSpec) -> FarFieldMatrix:
    """Keep the rows and columns whose directions lie in the arc."""
    keep = np.flatnonzero(spec.mask(F.grid))
    if keep.size < 2:
        raise FarFieldError(
            f"aperture [{spec.theta_lo}, {spec.theta_hi}) contains {keep.size} direction(s), need >= 2"
        )
    if keep.size == F.n:
        return F
    sub = F.entries[np.ix_(keep, keep)]
    return FarFieldMatrix(sub, F.grid.subset(keep), F.k, "aperture-restricted")
