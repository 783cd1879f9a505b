"""Boundary curves, scatterers and the direction/sampling grids.

Every curve is given by a smooth, counterclockwise, 2*pi-periodic
parametrization ``x(t)``.  The Nystrom solver needs ``x``, ``x'`` and ``x''``
at the quadrature nodes, so :meth:`BoundaryCurve.evaluate` returns all three.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CURVE_KINDS = ("circle", "ellipse", "kite")

#: Default kite coefficients ``(a, b)`` for
#: ``x(t) = (cos t + a cos 2t - a, b sin t)``.
KITE_DEFAULT = (0.65, 1.5)

DISJOINT_SAMPLES = 256
DISJOINT_THRESHOLD = 1e-6


class GeometryError(ValueError):
    """Invalid curve, scatterer or grid description."""


@dataclass(frozen=True)
class BoundaryCurve:
    """A parametrized closed curve.

    Parameters
    ----------
    kind : {'circle', 'ellipse', 'kite'}
    center : (2,) tuple of float
    params : tuple of float
        ``(radius,)`` for a circle, ``(a, b)`` semi-axes for an ellipse and
        ``(a, b)`` kite coefficients for a kite.
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise GeometryError(f"unknown curve kind {self.kind!r}")
        center = tuple(float(c) for c in self.center)
        if len(center) != 2 or not all(math.isfinite(c) for c in center):
            raise GeometryError(f"center must be a finite 2D point, got {self.center!r}")
        params = tuple(float(p) for p in self.params)
        if self.kind == "kite" and not params:
            params = KITE_DEFAULT
        expected = 1 if self.kind == "circle" else 2
        if len(params) != expected:
            raise GeometryError(
                f"{self.kind} takes {expected} shape parameter(s), got {len(params)}"
            )
        if self.kind in ("circle", "ellipse") and min(params) <= 0:
            raise GeometryError(f"{self.kind} parameters must be positive, got {params}")
        if self.kind == "kite" and params[1] <= 0:
            raise GeometryError(f"kite b coefficient must be positive, got {params[1]}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "params", params)

    @classmethod
    def circle(cls, radius=1.0, center=(0.0, 0.0)):
        return cls("circle", center, (radius,))

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0)):
        return cls("ellipse", center, (a, b))

    @classmethod
    def kite(cls, center=(0.0, 0.0), a=KITE_DEFAULT[0], b=KITE_DEFAULT[1]):
        return cls("kite", center, (a, b))

    def evaluate(self, t):
        """Return ``x(t)``, ``x'(t)`` and ``x''(t)``, each of shape ``(2, len(t))``."""
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        if self.kind == "circle":
            (r,) = self.params
            x = np.array([r * c, r * s])
            dx = np.array([-r * s, r * c])
            ddx = -x
        elif self.kind == "ellipse":
            a, b = self.params
            x = np.array([a * c, b * s])
            dx = np.array([-a * s, b * c])
            ddx = -x
        else:
            a, b = self.params
            c2, s2 = np.cos(2 * t), np.sin(2 * t)
            x = np.array([c + a * c2 - a, b * s])
            dx = np.array([-s - 2 * a * s2, b * c])
            ddx = np.array([-c - 4 * a * c2, -b * s])
        x = x + np.asarray(self.center).reshape((2,) + (1,) * t.ndim)
        return x, dx, ddx

    def sample(self, n):
        """Return ``n`` equispaced boundary points, shape ``(2, n)``."""
        t = 2 * np.pi * np.arange(n) / n
        return self.evaluate(t)[0]


def curve_point(curve: BoundaryCurve, t: float):
    """Point ``x(t)`` and tangent ``x'(t)`` of ``curve`` as two length-2 arrays."""
    x, dx, _ = curve.evaluate(np.array([t]))
    return x[:, 0], dx[:, 0]


@dataclass(frozen=True)
class Scatterer:
    """Sound-soft obstacle made of one or more disjoint boundary curves."""

    components: tuple[BoundaryCurve, ...]

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise GeometryError("scatterer needs at least one component")
        object.__setattr__(self, "components", components)
        samples = [c.sample(DISJOINT_SAMPLES) for c in components]
        for i in range(len(samples)):
            for j in range(i + 1, len(samples)):
                diff = samples[i][:, :, None] - samples[j][:, None, :]
                dmin = np.sqrt((diff**2).sum(axis=0)).min()
                if dmin <= DISJOINT_THRESHOLD:
                    raise GeometryError(
                        f"components {i} and {j} are not disjoint (min distance {dmin:.3g})"
                    )

    def __len__(self):
        return len(self.components)

    @classmethod
    def from_records(cls, records: Sequence[dict]):
        """Build from ``{kind, center, parameters}`` records (config form)."""
        curves = []
        for n, rec in enumerate(records):
            try:
                curves.append(
                    BoundaryCurve(
                        rec["kind"],
                        tuple(rec.get("center", (0.0, 0.0))),
                        tuple(rec.get("parameters", ())),
                    )
                )
            except KeyError as exc:
                raise GeometryError(f"scatterer[{n}]: missing field {exc.args[0]!r}") from None
            except GeometryError as exc:
                raise GeometryError(f"scatterer[{n}]: {exc}") from None
        return cls(tuple(curves))

    def to_records(self):
        return [
            {"kind": c.kind, "center": list(c.center), "parameters": list(c.params)}
            for c in self.components
        ]


def two_circles(d, radius=1.0):
    """Circles of equal radius centered at ``(-d, 0)`` and ``(d, 0)``."""
    return Scatterer(
        (BoundaryCurve.circle(radius, (-d, 0.0)), BoundaryCurve.circle(radius, (d, 0.0)))
    )


@dataclass(frozen=True)
class DirectionGrid:
    """Equispaced directions ``theta_n = 2*pi*n/N`` on the unit circle.

    A grid may be a subset of the full ``N``-point grid (after aperture
    restriction); ``indices`` then lists the surviving full-grid indices.
    Angles are always derived from integer indices so that negation
    ``n -> (n + N/2) mod N`` is exact.
    """

    n_full: int
    indices: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        if self.indices is None:
            object.__setattr__(self, "indices", tuple(range(self.n_full)))
        else:
            object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @property
    def size(self):
        return len(self.indices)

    @property
    def is_full(self):
        return self.size == self.n_full

    @property
    def angles(self):
        return 2 * np.pi * np.asarray(self.indices, dtype=float) / self.n_full

    @property
    def vectors(self):
        """Unit direction vectors, shape ``(size, 2)``.

        For even ``N`` the second half of the full grid is the exact negation
        of the first half, so ``-alpha_n == alpha_{n + N/2}`` bit for bit.
        """
        n = self.n_full
        idx = np.asarray(self.indices)
        if n % 2:
            th = 2 * np.pi * idx / n
            return np.column_stack([np.cos(th), np.sin(th)])
        half = n // 2
        base = idx % half
        th = 2 * np.pi * base / n
        sign = np.where(idx >= half, -1.0, 1.0)[:, None]
        return sign * np.column_stack([np.cos(th), np.sin(th)])

    def negation(self):
        """Index map ``n -> m`` with ``alpha_m = -alpha_n`` (full grids only)."""
        if self.n_full % 2:
            raise GeometryError("grid must be closed under negation (N even)")
        if not self.is_full:
            raise GeometryError("negation map needs the full direction grid")
        return (np.arange(self.n_full) + self.n_full // 2) % self.n_full

    def subset(self, positions):
        return DirectionGrid(self.n_full, tuple(self.indices[p] for p in positions))


def build_direction_grid(n: int) -> DirectionGrid:
    if int(n) != n or n < 2 or n % 2:
        raise GeometryError(f"grid must be closed under negation: N={n} must be even and >= 2")
    return DirectionGrid(int(n))


@dataclass(frozen=True)
class SamplingGrid:
    """Rectangular grid of sampling points with step ``h``.

    Points are ordered row-major: ``y`` is the slow index, ``x`` the fast one.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise GeometryError(f"sampling step must be positive, got {self.h}")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise GeometryError("sampling rectangle has negative extent")

    @classmethod
    def square(cls, half_width=4.0, h=0.1):
        return cls(-half_width, half_width, -half_width, half_width, h)

    @property
    def nx(self):
        # tolerance keeps e.g. 8/0.1 from rounding down to 79.999...
        return int(math.floor((self.x_max - self.x_min) / self.h + 1 + 1e-9))

    @property
    def ny(self):
        return int(math.floor((self.y_max - self.y_min) / self.h + 1 + 1e-9))

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def xs(self):
        return self.x_min + self.h * np.arange(self.nx)

    @property
    def ys(self):
        return self.y_min + self.h * np.arange(self.ny)

    def points(self):
        """All sampling points, shape ``(ny * nx, 2)``."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])

    def __len__(self):
        return self.nx * self.ny
