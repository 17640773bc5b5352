"""Symbolic derivations backing the hand-coded operator formulas.

These are the "derive once and document" facts: curvature of the profile
metric, the channel structure of the gauge Laplacian, the Weitzenboeck
identity, and the zero-mode homogeneous solutions.  Everything is checked
for a *generic* profile F(tau), not just the cylinder.
"""

import sympy as sp


def _frame_setup():
    tau, k = sp.symbols("tau k", real=True)
    F = sp.Function("F", positive=True)(tau)
    beta = sp.diff(F, tau) / (2 * sp.sqrt(F))
    return tau, k, F, beta


def test_curvature_is_minus_half_Fpp():
    # Brioschi formula for ds^2 = E dtau^2 + G dtheta^2 (rotational)
    tau = sp.symbols("tau", real=True)
    F = sp.Function("F", positive=True)(tau)
    E, G = 1 / F, F
    Et, Gt = sp.diff(E, tau), sp.diff(G, tau)
    K = (-1 / (2 * sp.sqrt(E * G))
         * (sp.diff(Gt / sp.sqrt(E * G), tau)))
    assert sp.simplify(K - (-sp.diff(F, tau, 2) / 2)) == 0


def test_gauge_laplacian_channels_from_divergence_of_killing():
    tau, k, F, beta = _frame_setup()
    a = sp.Function("a")(tau)
    b = sp.Function("b")(tau)
    d = lambda f: sp.diff(f, tau)

    phi = sp.Rational(1, 2) * (sp.sqrt(F) * d(a) - beta * a - k * b / sp.sqrt(F))
    psi = sp.Rational(1, 2) * (sp.sqrt(F) * d(b) - beta * b - k * a / sp.sqrt(F))
    Pa = -(sp.sqrt(F) * d(phi) + k * psi / sp.sqrt(F) + 2 * beta * phi)
    Pb = -(sp.sqrt(F) * d(psi) + k * phi / sp.sqrt(F) + 2 * beta * psi)

    def channel(u, sign):
        V = (d(d(F)) / 2 + d(F) ** 2 / (4 * F) + sign * k * d(F) / F
             + k ** 2 / F)
        return -F * d(d(u)) - d(F) * d(u) + V * u

    w1, w2 = (a + b) / 2, (a - b) / 2
    assert sp.simplify((Pa + Pb) / 2 - channel(w1, +1) / 2) == 0
    assert sp.simplify((Pa - Pb) / 2 - channel(w2, -1) / 2) == 0


def test_channel_operator_reduces_to_cylinder_form():
    tau, k, F, _ = _frame_setup()
    ell = sp.symbols("ell", positive=True)
    u = sp.Function("u")(tau)
    d = lambda f: sp.diff(f, tau)
    Fc = tau ** 2 + ell ** 2
    V = (sp.diff(Fc, tau, 2) / 2 + sp.diff(Fc, tau) ** 2 / (4 * Fc)
         + k * sp.diff(Fc, tau) / Fc + k ** 2 / Fc)
    general = -Fc * d(d(u)) - sp.diff(Fc, tau) * d(u) + V * u
    display = -Fc * d(d(u)) - 2 * tau * d(u) + (1 + (tau + k) ** 2 / Fc) * u
    assert sp.simplify(general - display) == 0


def test_weitzenboeck_identity_generic_profile():
    tau, k, F, beta = _frame_setup()
    a = sp.Function("a")(tau)
    b = sp.Function("b")(tau)
    d = lambda f: sp.diff(f, tau)

    # Hodge Laplacian route: d(delta) + delta(d)
    s = sp.sqrt(F) * d(a) + beta * a + k * b / sp.sqrt(F)
    c = sp.sqrt(F) * d(b) + beta * b + k * a / sp.sqrt(F)
    lap_a = -sp.sqrt(F) * d(s) + k * c / sp.sqrt(F)
    lap_b = k * s / sp.sqrt(F) - sp.sqrt(F) * d(c)

    # gauge Laplacian route: divergence of the conformal Killing image
    phi = sp.Rational(1, 2) * (sp.sqrt(F) * d(a) - beta * a - k * b / sp.sqrt(F))
    psi = sp.Rational(1, 2) * (sp.sqrt(F) * d(b) - beta * b - k * a / sp.sqrt(F))
    Pa = -(sp.sqrt(F) * d(phi) + k * psi / sp.sqrt(F) + 2 * beta * phi)
    Pb = -(sp.sqrt(F) * d(psi) + k * phi / sp.sqrt(F) + 2 * beta * psi)

    K = -d(d(F)) / 2
    assert sp.simplify(Pa - (lap_a - 2 * K * a) / 2) == 0
    assert sp.simplify(Pb - (lap_b - 2 * K * b) / 2) == 0


def test_zero_mode_homogeneous_solutions_and_wronskian():
    T = sp.symbols("T", real=True)
    u = sp.sqrt(T ** 2 + 1)
    v = (T + sp.atan(T) + T ** 2 * sp.atan(T)) / sp.sqrt(T ** 2 + 1)
    P0 = lambda w: (-(T ** 2 + 1) * sp.diff(w, T, 2) - 2 * T * sp.diff(w, T)
                    + (1 + T ** 2 / (T ** 2 + 1)) * w)
    assert sp.simplify(P0(u)) == 0
    assert sp.simplify(P0(v)) == 0
    W = sp.simplify(u * sp.diff(v, T) - v * sp.diff(u, T))
    assert sp.simplify(W - 2 / (T ** 2 + 1)) == 0
    # boundary value entering the determinant
    assert sp.simplify(v.subs(T, 1) - (1 + sp.pi / 2) / sp.sqrt(2)) == 0


def test_rotational_killing_field_is_conformal_killing_kernel():
    # omega = F dtheta (dual of the rotation) and omega = dtau both satisfy
    # D omega = 0 for any profile: phi and psi vanish identically at k = 0.
    tau, k, F, beta = _frame_setup()
    d = lambda f: sp.diff(f, tau)
    for a, b in ((sp.sqrt(F), sp.S.Zero), (sp.S.Zero, sp.sqrt(F))):
        phi = sp.Rational(1, 2) * (sp.sqrt(F) * d(a) - beta * a)
        psi = sp.Rational(1, 2) * (sp.sqrt(F) * d(b) - beta * b)
        assert sp.simplify(phi) == 0
        assert sp.simplify(psi) == 0


def test_divergence_kernel_profiles():
    # the stated homogeneous solutions of the diagonalized divergence
    tau, k = sp.symbols("tau k", real=True)
    ell = sp.symbols("ell", positive=True)
    F = tau ** 2 + ell ** 2
    lam = sp.exp((k / ell) * sp.atan(tau / ell)) / F
    mu = sp.exp(-(k / ell) * sp.atan(tau / ell)) / F
    Dm = sp.sqrt(F) * sp.diff(lam, tau) + (2 * tau - k) / sp.sqrt(F) * lam
    Dp = sp.sqrt(F) * sp.diff(mu, tau) + (2 * tau + k) / sp.sqrt(F) * mu
    assert sp.simplify(Dm) == 0
    assert sp.simplify(Dp) == 0
