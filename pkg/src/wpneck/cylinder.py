"""The degenerating hyperbolic cylinder and its coordinate charts.

The model metric on C = (-1, 1) x S^1 is

    g_ell = d tau^2 / F + F d theta^2,      F(tau) = tau^2 + ell^2,

which has constant Gauss curvature -1 for every ell > 0; ell = 0 denotes
the noded limit (complete, with a cusp at tau = 0).  For any rotationally
symmetric profile F > 0 in this unit-determinant form the curvature is

    K = -F'' / 2.

(Derivation, done once symbolically and frozen into the test suite: with
orthonormal coframe s1 = d tau / sqrt(F), s2 = sqrt(F) d theta the
connection form is w12 = -(F'/2) d theta, so d w12 = -(F''/2) d tau ^
d theta = -(F''/2) s1 ^ s2 = -K s1 ^ s2.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import RadialGrid

__all__ = [
    "CylinderMetric",
    "CoordinateChart",
    "metric_components",
    "profile_curvature",
    "boundary_distance",
    "make_chart",
    "plumbing_substitution_check",
    "plumbing_parameter",
]


@dataclass(frozen=True)
class CylinderMetric:
    """Profile description of g_ell; ell = 0 is the noded limit."""

    ell: float
    tau_min: float = -1.0
    tau_max: float = 1.0

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")
        if not self.tau_min < self.tau_max:
            raise ValueError("empty tau range")

    @property
    def noded(self) -> bool:
        return self.ell == 0.0

    def F(self, tau) -> np.ndarray:
        return np.asarray(tau, dtype=float) ** 2 + self.ell**2

    def Fp(self, tau) -> np.ndarray:
        return 2.0 * np.asarray(tau, dtype=float)

    def Fpp(self, tau) -> np.ndarray:
        return np.full_like(np.asarray(tau, dtype=float), 2.0)

    def curvature(self, tau) -> np.ndarray:
        return np.full_like(np.asarray(tau, dtype=float), -1.0)


def metric_components(m: CylinderMetric, tau: float) -> tuple[float, float]:
    """(g_tau_tau, g_theta_theta) = (1/F, F) at a point; fails loudly at a node."""
    F = float(m.F(tau))
    if F == 0.0:
        raise ZeroDivisionError(
            "metric degenerates at tau = 0 on the noded cylinder (ell = 0)"
        )
    return 1.0 / F, F


def profile_curvature(fvals: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Gauss curvature K = -F''/2 of d tau^2/F + F d theta^2 from grid samples."""
    fvals = np.asarray(fvals, dtype=float)
    if fvals.shape != grid.nodes.shape:
        raise ValueError("profile samples do not match the grid")
    if np.any(fvals <= 0):
        raise ValueError("profile must be positive")
    return -0.5 * (grid.d2 @ fvals)


def boundary_distance(m: CylinderMetric) -> float:
    """Hyperbolic distance from the central geodesic to either boundary circle.

    Equals arcsinh(1/ell) = int_0^1 d tau / sqrt(tau^2 + ell^2); for small
    ell this grows like |log(ell/2)|.
    """
    if m.ell <= 0:
        raise ValueError("boundary distance needs ell > 0")
    return float(np.arcsinh(1.0 / m.ell))


@dataclass(frozen=True)
class CoordinateChart:
    """Forward/inverse map pair for one of the standard cylinder charts."""

    kind: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]

    def roundtrip_error(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.max(np.abs(self.inverse(self.forward(x)) - x)))


def plumbing_parameter(ell: float) -> float:
    """t with ell = pi/|log t|; real and in (0, 1/4) for ell < pi/log 4."""
    return math.exp(-math.pi / ell)


def make_chart(kind: str, m: CylinderMetric) -> CoordinateChart:
    """Charts: tau (identity), arcsinh t = arcsinh(tau/ell), rescaled T = tau/ell,
    plumbing |z| with tau/ell = cot(ell |log z|).

    The plumbing chart covers the half-annulus sqrt(t) <= |z| <= 1/2 and maps
    it to tau >= 0; the mirrored half of the annulus (the other branch of the
    quadric) is taken to be the odd reflection tau -> -tau.  The central
    geodesic is the circle |z| = sqrt(t).
    """
    ell = m.ell
    if kind == "tau":
        return CoordinateChart("tau", lambda x: np.asarray(x, float),
                               lambda x: np.asarray(x, float), (m.tau_min, m.tau_max))
    if ell <= 0:
        raise ValueError(f"chart {kind!r} needs ell > 0")
    if kind == "arcsinh":
        return CoordinateChart(
            "arcsinh",
            lambda tau: np.arcsinh(np.asarray(tau, float) / ell),
            lambda t: ell * np.sinh(np.asarray(t, float)),
            (m.tau_min, m.tau_max),
        )
    if kind == "rescaled":
        return CoordinateChart(
            "rescaled",
            lambda tau: np.asarray(tau, float) / ell,
            lambda T: ell * np.asarray(T, float),
            (m.tau_min, m.tau_max),
        )
    if kind == "plumbing":
        t = plumbing_parameter(ell)
        if not 0.0 < t < 0.25:
            raise ValueError("plumbing parameter outside (0, 1/4); ell too large")

        def fwd(r):
            r = np.asarray(r, dtype=float)
            if np.any((r < math.sqrt(t) * (1 - 1e-12)) | (r > 0.5 * (1 + 1e-12))):
                raise ValueError("sample outside the annulus sqrt(t) <= |z| <= 1/2")
            return ell / np.tan(ell * np.abs(np.log(r)))

        def inv(tau):
            tau = np.asarray(tau, dtype=float)
            # tau/ell = cot(ell s), s = |log r|
            s = np.arctan2(ell, tau) / ell
            return np.exp(-s)

        return CoordinateChart("plumbing", fwd, inv, (math.sqrt(t), 0.5))
    raise ValueError(f"unknown chart kind {kind!r}")


def plumbing_substitution_check(ell: float, n_samples: int = 50) -> float:
    """Max relative discrepancy between the plumbing-annulus hyperbolic metric
    and the pullback of g_ell under the substitution tau/ell = cot(ell |log z|).

    The annulus metric density (coefficient of |dz|^2) is

        ((pi log|z| / log t) csc(pi log|z| / log t))^2 / (|z| log|z|)^2

    with ell = pi/|log t|.  Both the d r^2 and r^2 d phi^2 coefficients of the
    pullback are compared on log-spaced radii in [sqrt(t), 1/2].
    """
    t = plumbing_parameter(ell)
    if not 0.0 < t < 0.25:
        raise ValueError("plumbing parameter outside (0, 1/4); ell too large")
    r = np.exp(np.linspace(math.log(math.sqrt(t)), math.log(0.5), n_samples))

    chi = np.pi * np.log(r) / math.log(t)  # = ell * |log r|, in (0, pi/2]
    density = (chi / np.sin(chi)) ** 2 / (r * np.log(r)) ** 2

    # pullback of d tau^2/F + F d theta^2 under tau = ell cot(chi), theta = phi
    tau = ell / np.tan(chi)
    F = tau**2 + ell**2
    dtau_dr = ell**2 / (np.sin(chi) ** 2 * r)  # d tau/d r = ell csc^2(chi) * dchi/dr
    coeff_dr2 = dtau_dr**2 / F
    coeff_dphi2 = F

    rel1 = np.abs(coeff_dr2 - density) / density
    rel2 = np.abs(coeff_dphi2 - density * r**2) / (density * r**2)
    return float(max(rel1.max(), rel2.max()))
