import numpy as np
import pytest

from wpneck.surface import ModelSurfaceMetric
from wpneck.uniformize import curvature_after, solve_conformal_factor


def test_already_hyperbolic_gives_zero():
    # restrict the solve to the exact-cylinder region: K = -1, u = 0
    surf = ModelSurfaceMetric(ell=0.05)
    cf = solve_conformal_factor(surf, domain=0.7)
    assert np.max(np.abs(cf.u)) < 1e-12
    assert cf.newton_iterations <= 2


def test_solve_residual_and_bound():
    for ell in (0.05, 0.02, 0.005):
        surf = ModelSurfaceMetric(ell=ell)
        cf = solve_conformal_factor(surf)
        assert cf.residual < 1e-10
        assert cf.bound_satisfied
        assert np.max(np.abs(cf.u)) <= cf.bound
        # quadratic convergence: a handful of iterations
        assert cf.newton_iterations <= 6


def test_curvature_range_example():
    # blend-band curvature stays within the documented [-2, -0.5] band
    cf = solve_conformal_factor(ModelSurfaceMetric(ell=0.05))
    lo, hi = cf.curvature_range
    assert -2.0 < lo <= -1.0 and -1.0 <= hi < -0.5
    assert cf.bound <= 0.5 * np.log(2.0) + 1e-9


def test_curvature_after_solve():
    surf = ModelSurfaceMetric(ell=0.05)
    cf = solve_conformal_factor(surf, n=8193)
    K = curvature_after(surf, cf)
    assert np.max(np.abs(K + 1.0)) < 1e-3


def test_refusal_outside_hypotheses():
    with pytest.raises(ValueError):
        solve_conformal_factor(ModelSurfaceMetric(ell=0.3))


def test_monotone_dependence_on_curvature_scale():
    # scaling K_g toward zero pushes u downward monotonically (u solves
    # e^{2u} = K/(target) pointwise at leading order)
    surf = ModelSurfaceMetric(ell=0.05)

    class Scaled:
        def __init__(self, s):
            self.s = s
            self.ell = surf.ell

        def F(self, t):
            return surf.F(t)

        def Fp(self, t):
            return surf.Fp(t)

        def Fpp(self, t):
            return surf.Fpp(t)

        def curvature(self, t):
            return self.s * surf.curvature(t)

    sups = []
    for scale in (1.0, 0.8, 0.6):
        cf = solve_conformal_factor(Scaled(scale))
        sups.append(float(np.min(cf.u)))
    # weaker curvature needs a negative log-factor: u decreases with s
    assert sups[0] > sups[1] > sups[2]


def test_thick_point_family_converges_and_fits():
    from wpneck.wp import fit_polyhomogeneous

    ells = np.geomspace(6e-4, 6e-2, 36)
    vals = []
    for ell in ells:
        cf = solve_conformal_factor(ModelSurfaceMetric(ell=float(ell)), n=2049)
        vals.append(float(np.interp(0.8, cf.grid.nodes, cf.u)))
    # leading constant term detected, nested residuals decay
    fit = fit_polyhomogeneous(ells, vals, 4, 1)
    path = np.asarray(fit.residual_path)
    assert all(b <= a + 1e-18 for a, b in zip(path, path[1:]))
    assert path[-1] <= 1e-3 * max(np.max(np.abs(vals)), 1e-12)
    diffs = np.abs(np.diff(vals))
    assert vals[0] == pytest.approx(vals[5], abs=np.max(np.abs(vals)))
