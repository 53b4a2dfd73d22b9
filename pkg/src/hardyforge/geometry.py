"""Constant-curvature model manifolds and the Poincare-ball chart.

The model of curvature -b (b >= 0) in geodesic polar coordinates has radial
measure sn_b(t)^{N-1} dt du with sn_b(t) = sinh(sqrt(b) t)/sqrt(b), or t when
b = 0.  All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# below this value of sqrt(b)*t the hyperbolic functions use Taylor series
SERIES_SWITCH = 1e-4
# x*coth(x) - 1 is a difference of nearly equal terms; a longer series is
# used below this point to keep full relative accuracy
DB_SERIES_SWITCH = 0.1


@dataclass(frozen=True)
class ModelManifold:
    """Rotationally symmetric model of dimension N and curvature -b."""

    N: int
    b: float = 0.0

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {self.N!r}")
        if not math.isfinite(self.b) or self.b < 0.0:
            raise ValueError(f"curvature parameter b must be finite and >= 0, got {self.b!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "b", float(self.b))

    @property
    def is_euclidean(self) -> bool:
        return self.b == 0.0


def _sinhc(x):
    """sinh(x)/x, with a 4-term series near 0."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = 1.0 + x2 / 6.0 + x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sinh(x) / x
    return np.where(np.abs(x) < SERIES_SWITCH, series, direct)


def xcothx_minus_one(x):
    """x*coth(x) - 1 for x >= 0, accurate in relative terms near 0."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    # Bernoulli series of x coth x
    series = x2 * (
        1.0 / 3.0
        + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0
        + x2 * (-1382.0 / 638512875.0)))))
    )
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        direct = x / np.tanh(x) - 1.0
    return np.where(x < DB_SERIES_SWITCH, series, direct)


def metric_radius(m: ModelManifold, t):
    """sn_b(t): t for b = 0, sinh(sqrt(b) t)/sqrt(b) for b > 0."""
    t = np.asarray(t, dtype=float)
    if m.b == 0.0:
        return t * 1.0
    return t * _sinhc(math.sqrt(m.b) * t)


def volume_density(m: ModelManifold, t):
    """Radial measure factor t^{N-1} J_b(t) = sn_b(t)^{N-1}."""
    return metric_radius(m, t) ** (m.N - 1)


def comparison_D(m: ModelManifold, t):
    """D_b(t) = t ct_b(t) - 1 (zero for b = 0)."""
    t = np.asarray(t, dtype=float)
    if m.b == 0.0:
        return np.zeros_like(t)
    return xcothx_minus_one(math.sqrt(m.b) * t)


def log_density_deriv(m: ModelManifold, t):
    """J_b'(t)/J_b(t) = (N-1)(ct_b(t) - 1/t) = (N-1) D_b(t)/t."""
    t = np.asarray(t, dtype=float)
    return (m.N - 1) * comparison_D(m, t) / t


def ball_to_geodesic(r):
    """Geodesic distance to the origin of a point at Euclidean radius r in the ball."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r >= 1.0):
        raise ValueError("ball radius must lie in [0, 1)")
    return 2.0 * np.arctanh(r)


def geodesic_to_ball(rho):
    """Euclidean radius in the ball of a point at geodesic distance rho: tanh(rho/2)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("geodesic radius must be >= 0")
    return np.tanh(0.5 * rho)


def angular_eigenvalue(N: int, ell: int) -> float:
    """Eigenvalue ell(ell + N - 2) of the Laplacian on S^{N-1}."""
    if int(ell) != ell or ell < 0:
        raise ValueError(f"angular mode must be an integer >= 0, got {ell!r}")
    return float(ell * (ell + N - 2))
