"""Sound-soft scattering in 2D by a combined-field Nystrom method.

The scattered field is sought as the combined layer potential

    u_s(x) = int_S [dPhi(x, y)/dnu(y) - i eta Phi(x, y)] phi(y) ds(y),

with ``Phi = (i/4) H_0(k|x - y|)`` and ``eta = k``.  The Dirichlet condition
``u_s = -u_inc`` on ``S`` gives the second-kind equation

    phi + (2K - 2 i eta S) phi = -2 u_inc,

which is discretized on each parametrized curve with ``M`` equispaced nodes.
The logarithmic singularity of the self-interaction kernel is split off and
integrated with the trigonometric weights ``R_j``; interactions between
different curves are smooth and use the trapezoidal rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import hankel1, jv

from .farfield import FarFieldMatrix, farfield_constant
from .geometry import DirectionGrid, Scatterer

EULER_GAMMA = 0.57721566490153286061
COND_LIMIT = 1e12


class ForwardSolveError(RuntimeError):
    """The boundary integral system could not be solved reliably."""


def log_weights(m):
    """Weights ``R_d`` for ``int ln(4 sin^2((t - tau)/2)) f(tau) dtau``, ``d = i - j``."""
    n = m // 2
    d = np.arange(m)
    q = np.arange(1, n)
    cosines = np.cos(np.outer(d, q) * np.pi / n)
    return -2 * np.pi / n * (cosines / q).sum(axis=1) - np.pi / n**2 * (-1.0) ** d


class _Discretization:
    """Nodes, system matrix and LU factors for one scatterer at one wavenumber."""

    def __init__(self, scatterer: Scatterer, k: float, m: int):
        if not k > 0:
            raise ValueError(f"wavenumber must be positive, got {k}")
        if m % 2 or m < 16:
            raise ValueError(f"nodes per component must be even and >= 16, got {m}")
        self.scatterer = scatterer
        self.k = float(k)
        self.eta = float(k)
        self.m = m
        t = 2 * np.pi * np.arange(m) / m
        parts = [c.evaluate(t) for c in scatterer.components]
        self.x = np.concatenate([p[0] for p in parts], axis=1)
        self.dx = np.concatenate([p[1] for p in parts], axis=1)
        self.ddx = np.concatenate([p[2] for p in parts], axis=1)
        self.speed = np.hypot(self.dx[0], self.dx[1])
        # outward normal scaled by |x'|
        self.normal = np.array([self.dx[1], -self.dx[0]])
        self.weight = 2 * np.pi / m
        self.matrix = self._assemble()
        self.cond = np.linalg.cond(self.matrix)
        if not np.isfinite(self.cond) or self.cond > COND_LIMIT:
            raise ForwardSolveError(
                f"boundary system is near singular (condition estimate {self.cond:.3g}); "
                f"k={k} may be too close to a resonance or M={m} too small"
            )
        self.lu = scipy.linalg.lu_factor(self.matrix)

    def _assemble(self):
        k, eta, m = self.k, self.eta, self.m
        x, normal, speed = self.x, self.normal, self.speed
        total = x.shape[1]
        diff = x[:, :, None] - x[:, None, :]
        r = np.hypot(diff[0], diff[1])
        np.fill_diagonal(r, 1.0)
        kr = k * r
        n_dot = normal[0][None, :] * diff[0] + normal[1][None, :] * diff[1]

        dl = 0.5j * k * n_dot * hankel1(1, kr) / r
        sl = 0.5j * hankel1(0, kr) * speed[None, :]
        kernel = dl - 1j * eta * sl
        A = np.eye(total, dtype=complex) + self.weight * kernel

        t = 2 * np.pi * np.arange(m) / m
        tdiff = t[:, None] - t[None, :]
        R = log_weights(m)[np.abs(np.subtract.outer(np.arange(m), np.arange(m)))]
        with np.errstate(divide="ignore"):
            logsin = np.log(4 * np.sin(tdiff / 2) ** 2)
        np.fill_diagonal(logsin, 0.0)

        for c in range(len(self.scatterer)):
            blk = slice(c * m, (c + 1) * m)
            kr_c, r_c = kr[blk, blk], r[blk, blk]
            sp = speed[blk]
            dl1 = -k / (2 * np.pi) * n_dot[blk, blk] * jv(1, kr_c) / r_c
            sl1 = -1 / (2 * np.pi) * jv(0, kr_c) * sp[None, :]
            k1 = dl1 - 1j * eta * sl1
            k2 = kernel[blk, blk] - k1 * logsin

            xd, xdd = self.dx[:, blk], self.ddx[:, blk]
            nrm = normal[:, blk]
            dl2_diag = (nrm[0] * xdd[0] + nrm[1] * xdd[1]) / (2 * np.pi * sp**2)
            sl1_diag = -sp / (2 * np.pi)
            sl2_diag = (0.5j - EULER_GAMMA / np.pi - np.log(k * sp / 2) / np.pi) * sp
            idx = np.arange(m)
            k1[idx, idx] = -1j * eta * sl1_diag
            k2[idx, idx] = dl2_diag - 1j * eta * sl2_diag

            A[blk, blk] = np.eye(m) + R * k1 + self.weight * k2
        return A

    def incident_rhs(self, betas):
        """Right-hand sides ``-2 exp(ik beta.x)`` for each row of ``betas``."""
        phase = self.k * (np.asarray(betas) @ self.x)
        return (-2 * np.exp(1j * phase)).T

    def solve(self, rhs):
        return scipy.linalg.lu_solve(self.lu, rhs)

    def far_field_operator(self, alphas):
        """Matrix mapping node densities to amplitudes at directions ``alphas``."""
        alphas = np.atleast_2d(alphas)
        k, eta = self.k, self.eta
        a_dot_n = alphas @ self.normal
        phase = np.exp(-1j * k * (alphas @ self.x))
        return (
            -1j * farfield_constant(k) * self.weight
            * (k * a_dot_n + eta * self.speed[None, :]) * phase
        )


@dataclass(frozen=True, eq=False)
class ForwardSolution:
    k: float
    beta: np.ndarray
    density: np.ndarray  # shape (components, M)
    m: int
    _disc: _Discretization

    @property
    def scatterer(self):
        return self._disc.scatterer


@dataclass(frozen=True)
class FarFieldSample:
    direction: tuple[float, float]
    value: complex


def _unit(v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (2,) or abs(np.hypot(*v) - 1) > 1e-12:
        raise ValueError(f"{name} must be a 2D unit vector, got {v!r}")
    return v


def solve_forward(scatterer: Scatterer, k: float, beta, m: int = 128) -> ForwardSolution:
    """Boundary density for plane-wave incidence ``exp(ik beta.x)``."""
    beta = _unit(beta, "beta")
    disc = _Discretization(scatterer, k, m)
    phi = disc.solve(disc.incident_rhs(beta[None, :]))[:, 0]
    if not np.all(np.isfinite(phi)):
        raise ForwardSolveError("boundary solve produced non-finite density")
    return ForwardSolution(float(k), beta, phi.reshape(len(scatterer), m), m, disc)


def far_field(solution: ForwardSolution, alpha) -> FarFieldSample:
    alpha = _unit(alpha, "alpha")
    value = solution._disc.far_field_operator(alpha) @ solution.density.ravel()
    return FarFieldSample((float(alpha[0]), float(alpha[1])), complex(value[0]))


def assemble_far_field_matrix(
    scatterer: Scatterer, k: float, grid: DirectionGrid, m: int = 128
) -> FarFieldMatrix:
    """``F[i, j] = A(alpha_i, beta_j)`` over one direction grid.

    The system matrix is factored once and reused for every incidence
    direction.
    """
    disc = _Discretization(scatterer, k, m)
    dirs = grid.vectors
    densities = disc.solve(disc.incident_rhs(dirs))
    bad = np.flatnonzero(~np.all(np.isfinite(densities), axis=0))
    if bad.size:
        raise ForwardSolveError(f"forward solve failed for incidence column {bad[0]}")
    F = disc.far_field_operator(dirs) @ densities
    return FarFieldMatrix(F, grid, k, "synthetic")


def circle_farfield_series(radius, center, k, alpha, beta, n_max=None):
    """Far-field amplitude of a sound-soft disk by separation of variables.

    ``A(alpha, beta) = -sqrt(2/(pi k)) exp(-i pi/4)
    sum_n J_n(ka)/H_n(ka) exp(in(theta_alpha - theta_beta))``, shifted by the
    phase ``exp(ik(beta - alpha).c)`` for a disk centered at ``c``.
    ``alpha`` and ``beta`` broadcast over leading axes (last axis of size 2).
    """
    if not (radius > 0 and k > 0):
        raise ValueError("radius and k must be positive")
    if n_max is None:
        n_max = math.ceil(k * radius) + 30
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    ka = k * radius
    orders = np.arange(n_max + 1)
    h = hankel1(orders, ka)
    if not np.all(np.isfinite(h)):
        raise ValueError(f"Hankel function evaluation failed for ka={ka}, n_max={n_max}")
    coef = jv(orders, ka) / h
    phi = np.arctan2(alpha[..., 1], alpha[..., 0]) - np.arctan2(beta[..., 1], beta[..., 0])
    series = coef[0] + 2 * (coef[1:] * np.cos(np.multiply.outer(phi, orders[1:]))).sum(axis=-1)
    value = -math.sqrt(2 / (np.pi * k)) * np.exp(-1j * np.pi / 4) * series
    c = np.asarray(center, dtype=float)
    return value * np.exp(1j * k * ((beta - alpha) @ c))
