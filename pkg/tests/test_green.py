import math

import numpy as np
import pytest

from wpneck.green import (BarrierProfile, HomogeneousSolutions,
                          certify_barrier, cylinder_dirichlet_inverse,
                          solve_nonzero_mode, solve_zero_mode,
                          solve_zero_mode_fd)
from wpneck.grids import uniform_grid
from wpneck.modefields import ModeField, Rank, Variant
from wpneck.operators import apply_gauge_laplacian
from wpneck.wp import fit_polyhomogeneous

from conftest import smooth_bump

BUMP = smooth_bump(0.5, 0.75)


def test_homogeneous_solutions_parity_and_ode():
    hom = HomogeneousSolutions(0.37)
    ts = np.linspace(-1, 1, 41)
    assert np.allclose(hom.u(ts), hom.u(-ts))
    assert np.allclose(hom.v(ts), -hom.v(-ts))
    assert hom.wronskian_check(ts) < 1e-13
    # ODE residual with analytic derivatives
    F = ts**2 + 0.37**2
    for w, dw, d2w in ((hom.u, hom.du, hom.d2u), (hom.v, hom.dv, hom.d2v)):
        res = -F * d2w(ts) - 2 * ts * dw(ts) + (1 + ts**2 / F) * w(ts)
        assert np.max(np.abs(res)) < 1e-12


def test_explicit_zero_mode_solves_and_hits_boundary():
    for ell in (0.5, 0.1, 0.01):
        rep = solve_zero_mode(ell, BUMP, 0.3, -0.2, n=8193)
        assert rep.residual < 1e-9
        assert rep.bc_error < 1e-10
        # determinant two ways
        hom = HomogeneousSolutions(ell)
        D_par = -2.0 * float(hom.u(1.0)) * float(hom.v(1.0))
        assert rep.D == pytest.approx(D_par, rel=1e-12)


def test_zero_rhs_homogeneous_data_gives_pure_homogeneous():
    ell = 0.2
    hom = HomogeneousSolutions(ell)
    rep = solve_zero_mode(ell, lambda x: 0.0 * x, float(hom.u(1.0)),
                          float(hom.u(-1.0)))
    assert rep.A == pytest.approx(1.0, abs=1e-12)
    assert rep.B == pytest.approx(0.0, abs=1e-12)
    assert rep.I1 == 0.0 and rep.I2 == 0.0


def test_explicit_matches_fd_oracle():
    for ell in (0.5, 0.1):
        rep = solve_zero_mode(ell, BUMP, 0.25, -0.15, n=8193)
        _, w_fd = solve_zero_mode_fd(ell, BUMP, 0.25, -0.15, n=8193)
        rel = np.max(np.abs(rep.solution - w_fd)) / np.max(np.abs(w_fd))
        assert rel < 1e-6


def test_parity_preserved():
    # even rhs, symmetric data -> even solution
    ell = 0.3
    even = smooth_bump(-0.75, 0.75)
    rep = solve_zero_mode(ell, lambda x: even(x) * (np.abs(x) > 0.5), 0.4, 0.4,
                          enforce_gap=False)
    w = rep.solution
    assert np.max(np.abs(w - w[::-1])) < 1e-7 * np.max(np.abs(w))


def test_support_gap_enforced():
    with pytest.raises(ValueError):
        solve_zero_mode(0.1, smooth_bump(-0.2, 0.2), 0.0, 0.0)
    with pytest.raises(ValueError):
        solve_nonzero_mode(0.1, 2, smooth_bump(0.1, 0.7), c=0.5)


def test_nonzero_mode_maximum_principle_and_trivial():
    ell = 0.1
    tau, w = solve_nonzero_mode(ell, 3, lambda x: 0.0 * x)
    assert np.max(np.abs(w)) == 0.0
    tau, w = solve_nonzero_mode(ell, 3, BUMP, n=4097)
    C = float(np.max(np.abs(BUMP(tau))))
    assert np.max(np.abs(w)) <= C * (1.0 + 1e-12)


def test_barrier_certificate_structure():
    cert = certify_barrier([1e-3, 1e-2, 0.1], range(1, 33), alpha=0.3)
    assert not cert.full_pass  # positivity provably fails near tau = 0
    assert cert.min_margin_certified >= 0.0
    # inner radius tracks ell sqrt(alpha/(1-alpha))
    pred = 0.1 * math.sqrt(0.3 / 0.7)
    assert cert.inner_radius[0.1] == pytest.approx(pred, rel=0.35)
    with pytest.raises(ValueError):
        certify_barrier([0.1], [0], alpha=0.3)
    with pytest.raises(ValueError):
        certify_barrier([0.1], [1], alpha=1.5)


def test_barrier_failure_region_grows_with_alpha():
    lo = certify_barrier([0.1], [4], alpha=0.2)
    hi = certify_barrier([0.1], [4], alpha=0.9)
    assert hi.inner_radius[0.1] > lo.inner_radius[0.1]


def test_solution_below_barrier_on_certified_region():
    alpha = 0.3
    for ell in (1e-3, 1e-2, 0.05):
        cert = certify_barrier([ell], range(1, 9), alpha=alpha)
        r_in = cert.inner_radius[ell]
        for k in (1, 3, 8):
            tau, w = solve_nonzero_mode(ell, k, BUMP, n=4097)
            C = float(np.max(np.abs(BUMP(tau))))
            zeta = BarrierProfile(alpha, 0.5, C, k)(tau)
            mask = (np.abs(tau) >= r_in) & (np.abs(tau) <= 0.5)
            assert np.all(np.abs(w[mask]) <= zeta[mask] + 1e-300)


def test_summed_tail_bound():
    # sum over k of |omega_k| <= C e^{alpha(1/c - 1/|tau|)}/(1 - e^{...}) on
    # the certified region
    ell, alpha, c = 0.01, 0.3, 0.5
    K = 12
    cert = certify_barrier([ell], range(1, K + 1), alpha=alpha)
    r_in = cert.inner_radius[ell]
    tau0, _ = solve_nonzero_mode(ell, 1, BUMP, n=2049)
    total = np.zeros_like(tau0)
    for k in range(1, K + 1):
        _, w = solve_nonzero_mode(ell, k, BUMP, n=2049)
        total += np.abs(w)
    C = float(np.max(np.abs(BUMP(tau0))))
    mask = (np.abs(tau0) >= r_in) & (np.abs(tau0) <= 0.25)
    e = np.exp(alpha * (1.0 / c - 1.0 / np.abs(tau0[mask])))
    bound = C * e / (1.0 - e)
    assert np.all(total[mask] <= bound + 1e-300)


def test_rescaled_regularity_in_ell():
    # solutions restricted to |T| = |tau|/ell <= 10 converge as ell decreases
    T = np.linspace(-10, 10, 41)
    prev = None
    diffs = []
    for ell in (0.04, 0.02, 0.01):
        rep = solve_zero_mode(ell, BUMP, 0.0, 0.0, n=8193)
        vals = np.interp(T * ell, rep.tau, rep.solution)
        if prev is not None:
            diffs.append(np.max(np.abs(vals - prev)))
        prev = vals
    assert diffs[1] < diffs[0]


def test_green_family_polyhomogeneous_fit():
    # solution samples at fixed tau admit a half-integer/log fit with
    # decaying nested residuals
    ells = np.geomspace(1e-3, 1e-1, 40)
    vals = []
    for ell in ells:
        rep = solve_zero_mode(float(ell), BUMP, 0.0, 0.0, n=2049)
        vals.append(np.interp(0.9, rep.tau, rep.solution))
    fit = fit_polyhomogeneous(ells, vals, 4, 1)
    path = np.asarray(fit.residual_path)
    assert all(b <= a + 1e-15 for a, b in zip(path, path[1:]))
    assert path[-1] < 1e-4 * np.max(np.abs(vals))


def test_cylinder_dirichlet_inverse_inverts_gauge_laplacian(cyl_half):
    grid = uniform_grid(-1, 1, 2049)
    x = grid.nodes
    rhs_fields = {}
    for k, variant in ((0, Variant.COS), (2, Variant.COS), (3, Variant.SIN)):
        data = np.vstack([BUMP(x), 0.5 * BUMP(x)])
        rhs_fields[(k, variant)] = ModeField(k, Rank.ONE_FORM, grid, data, variant)
    sols = cylinder_dirichlet_inverse(cyl_half, grid, rhs_fields)
    for key, w in sols.items():
        res = apply_gauge_laplacian(cyl_half, w)
        err = np.max(np.abs((res.data - rhs_fields[key].data)[:, 1:-1]))
        assert err / np.max(np.abs(rhs_fields[key].data)) < 1e-8
        assert abs(w.data[:, 0]).max() < 1e-10 and abs(w.data[:, -1]).max() < 1e-10


def test_cylinder_dirichlet_inverse_zero_mode_delegates_to_explicit(cyl_half):
    # the grid solve of the full operator equals the explicit channel
    # formula applied to the doubled rhs
    grid = uniform_grid(-1, 1, 4097)
    x = grid.nodes
    rhs = ModeField.one_form_rho(0, grid, BUMP(x), np.zeros_like(x))
    sol = cylinder_dirichlet_inverse(cyl_half, grid, {rhs.key: rhs})[rhs.key]
    rep = solve_zero_mode(0.5, lambda t: 2.0 * BUMP(t), 0.0, 0.0, n=8193)
    w1 = sol.rho()[0]
    expect = np.interp(x, rep.tau, rep.solution)
    assert np.max(np.abs(w1 - expect)) / np.max(np.abs(expect)) < 1e-5


def test_cylinder_dirichlet_inverse_support_rejection(cyl_half):
    grid = uniform_grid(-1, 1, 513)
    x = grid.nodes
    bad = ModeField(1, Rank.ONE_FORM, grid,
                    np.vstack([smooth_bump(-0.2, 0.2)(x), np.zeros_like(x)]))
    with pytest.raises(ValueError):
        cylinder_dirichlet_inverse(cyl_half, grid, {bad.key: bad})
    # and accepted when the gap check is waived
    out = cylinder_dirichlet_inverse(cyl_half, grid, {bad.key: bad},
                                     enforce_gap=False)
    assert (1, Variant.COS) in out
