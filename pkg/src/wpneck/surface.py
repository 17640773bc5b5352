"""Closed rotational model surface containing the degenerating cylinder.

A torus of revolution in unit-determinant gauge: tau is periodic with
period 4 and the profile is

    F_ell(tau) = Q(tau) + ell^2 w(tau),

where w is a C^2 quintic plateau (w = 1 on |tau| <= 3/4, w = 0 on
|tau| >= 7/8) and Q is an even C^2 periodic base profile with Q = tau^2 on
|tau| <= 7/8 and a fixed quintic cap on 7/8 <= |tau| <= 2.  Hence the
metric is exactly the hyperbolic cylinder on |tau| <= 3/4, depends on ell
only through the ell^2 w term supported in |tau| < 7/8, and is entirely
ell-independent on |tau| >= 7/8.  (Matching the exact cylinder on
|tau| <= 7/8 *and* keeping the complement ell-independent is impossible:
the boundary value tau^2 + ell^2 moves with ell.  The blend band
(3/4, 7/8) reconciles the two requirements.)

Since any profile torus admits the rotation and the conformal translation,
the one-forms F d theta and d tau are global conformal Killing fields, so
the gauge Laplacian on the closed surface has a two-dimensional kernel in
the k = 0 mode (one vector sqrt(F) per rho channel).  Global solves
deflate it with a bordered system; the downstream projection is unaffected
because the symmetrized derivative annihilates both directions.  This is a
genuine departure from a genus >= 2 surface, where no (conformal) Killing
fields exist and the operator is invertible outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import svdvals

from .grids import RadialGrid, periodic_grid
from .modefields import ModeField, Rank
from .operators import mode_operators

__all__ = [
    "smoothstep",
    "smoothstep_d1",
    "smoothstep_d2",
    "ModelSurfaceMetric",
    "build_model_surface",
    "BuildReport",
    "CutoffPair",
    "default_cutoffs",
    "GlobalModeSolver",
    "SubdomainSolver",
    "thick_indices",
    "thin_indices",
]


def smoothstep(x):
    """Quintic step: 0 for x <= 0, 1 for x >= 1, C^2 at both ends."""
    x = np.clip(np.asarray(x, float), 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def smoothstep_d1(x):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = 30.0 * xm**2 * (1.0 - xm) ** 2
    return out


def smoothstep_d2(x):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = 60.0 * xm * (1.0 - 3.0 * xm + 2.0 * xm**2)
    return out


def _plateau(r, lo, hi):
    """1 for r <= lo, 0 for r >= hi, quintic in between; with derivatives."""
    x = (np.asarray(r, float) - lo) / (hi - lo)
    return (1.0 - smoothstep(x), -smoothstep_d1(x) / (hi - lo),
            -smoothstep_d2(x) / (hi - lo) ** 2)


# fixed thick cap: p(x) = 49/64 + (7/4)x + x^2 + c4 x^4 + c5 x^5 on
# x = |tau| - 7/8 in [0, 9/8], with p'(9/8) = 0 and p''(9/8) = -2,
# so the far pole carries K = +1 (a torus cannot avoid positive curvature
# somewhere; Gauss-Bonnet forces the total to vanish).
_CAP_DELTA = 9.0 / 8.0


def _cap_coeffs() -> tuple[float, float]:
    d = _CAP_DELTA
    # solve [4 d^3, 5 d^4; 12 d^2, 20 d^3] (c4, c5) = (-(7/4 + 2 d), -4)
    a11, a12 = 4.0 * d**3, 5.0 * d**4
    a21, a22 = 12.0 * d**2, 20.0 * d**3
    b1, b2 = -(7.0 / 4.0 + 2.0 * d), -4.0
    det = a11 * a22 - a12 * a21
    c4 = (b1 * a22 - a12 * b2) / det
    c5 = (a11 * b2 - b1 * a21) / det
    return c4, c5


_C4, _C5 = _cap_coeffs()


@dataclass(frozen=True, eq=False)
class ModelSurfaceMetric:
    """Periodic profile metric d tau^2/F + F d theta^2 on the model torus."""

    ell: float
    period: float = 4.0
    thin_plateau: float = 0.75
    thin_support: float = 0.875

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")
        if self.period != 4.0:
            raise ValueError("the fixed thick cap assumes period 4")

    # -- profile pieces ------------------------------------------------------
    def _fold(self, tau):
        """Reduce to r = |tau| in [0, 2] with the sign of the odd extension."""
        t = np.asarray(tau, float)
        tmod = np.mod(t + 2.0, 4.0) - 2.0
        return np.abs(tmod), np.sign(tmod)

    def _base(self, r):
        r = np.asarray(r, float)
        x = r - 0.875
        inside = r <= 0.875
        Q = np.where(inside, r * r,
                     49.0 / 64.0 + 1.75 * x + x * x + _C4 * x**4 + _C5 * x**5)
        Qp = np.where(inside, 2.0 * r,
                      1.75 + 2.0 * x + 4.0 * _C4 * x**3 + 5.0 * _C5 * x**4)
        Qpp = np.where(inside, 2.0, 2.0 + 12.0 * _C4 * x**2 + 20.0 * _C5 * x**3)
        return Q, Qp, Qpp

    def _weight(self, r):
        return _plateau(r, self.thin_plateau, self.thin_support)

    def F(self, tau):
        r, _ = self._fold(tau)
        Q, _, _ = self._base(r)
        w, _, _ = self._weight(r)
        return Q + self.ell**2 * w

    def Fp(self, tau):
        r, s = self._fold(tau)
        _, Qp, _ = self._base(r)
        _, wp, _ = self._weight(r)
        return s * (Qp + self.ell**2 * wp)

    def Fpp(self, tau):
        r, _ = self._fold(tau)
        _, _, Qpp = self._base(r)
        _, _, wpp = self._weight(r)
        return Qpp + self.ell**2 * wpp

    def dF_dell(self, tau):
        """ell-derivative of the profile: 2 ell w(tau)."""
        r, _ = self._fold(tau)
        w, _, _ = self._weight(r)
        return 2.0 * self.ell * w

    def curvature(self, tau):
        return -0.5 * self.Fpp(tau)

    # -- regions ---------------------------------------------------------------
    def in_thin(self, tau):
        r, _ = self._fold(tau)
        return r < 0.75

    def in_thick(self, tau):
        r, _ = self._fold(tau)
        return r > 0.5


def thick_indices(grid: RadialGrid, margin: float = 0.0) -> np.ndarray:
    """Node indices of the thick subdomain |tau| > 1/2 (+ margin)."""
    t = np.mod(grid.nodes + 2.0, 4.0) - 2.0
    return np.nonzero(np.abs(t) > 0.5 + margin)[0]


def thin_indices(grid: RadialGrid, bound: float = 0.75) -> np.ndarray:
    t = np.mod(grid.nodes + 2.0, 4.0) - 2.0
    return np.nonzero(np.abs(t) < bound)[0]


@dataclass(frozen=True)
class CutoffPair:
    """Partition of unity {chi0, chi1} subordinate to {thick, thin}, plus
    the wideners with chi~j chi_j = chi_j and supp(chi~j') disjoint from
    supp(chi_j).  All functions of |tau| on the fundamental domain.

    The default radii give chi0's widener and chi1's widener the widest
    transitions the overlap [1/2, 3/4] allows: the error operator R is
    built from [P, chi~j], and its norm scales with the wideners' first
    and second derivatives, not with chi1's own steepness.
    """

    chi1_plateau: float = 0.580
    chi1_support: float = 0.645
    chi1w_plateau: float = 0.650
    chi1w_support: float = 0.745
    chi0w_zero: float = 0.505
    chi0w_one: float = 0.575

    def __post_init__(self):
        if not (0.5 < self.chi1_plateau < self.chi1_support < self.chi1w_plateau
                < self.chi1w_support < 0.75):
            raise ValueError("cutoff radii out of order")
        if not (self.chi0w_zero < self.chi0w_one <= self.chi1_plateau):
            raise ValueError("thick widener must reach 1 before chi0 turns on")

    def _r(self, tau):
        return np.abs(np.mod(np.asarray(tau, float) + 2.0, 4.0) - 2.0)

    def chi1(self, tau):
        return _plateau(self._r(tau), self.chi1_plateau, self.chi1_support)[0]

    def chi0(self, tau):
        return 1.0 - self.chi1(tau)

    def chi1_widened(self, tau):
        return _plateau(self._r(tau), self.chi1w_plateau, self.chi1w_support)[0]

    def chi0_widened(self, tau):
        r = self._r(tau)
        return 1.0 - _plateau(r, self.chi0w_zero, self.chi0w_one)[0]

    def validate(self, grid: RadialGrid) -> None:
        """Support and partition identities on the given grid."""
        t = grid.nodes
        c0, c1 = self.chi0(t), self.chi1(t)
        w0, w1 = self.chi0_widened(t), self.chi1_widened(t)
        if not np.allclose(c0 + c1, 1.0, atol=1e-14):
            raise AssertionError("chi0 + chi1 != 1")
        for w, c, name in ((w0, c0, "0"), (w1, c1, "1")):
            if np.max(np.abs(w * c - c)) > 1e-14:
                raise AssertionError(f"widener {name} is not 1 on supp chi{name}")
        r = self._r(t)
        if np.any((r < self.chi0w_zero) & (w0 != 0.0)):
            raise AssertionError("thick widener leaks into the deep thin part")
        if np.any((r > self.chi1w_support) & (w1 != 0.0)):
            raise AssertionError("thin widener leaks outside the thin region")


def default_cutoffs() -> CutoffPair:
    return CutoffPair()


class SubdomainSolver:
    """Dirichlet inverse of the mode gauge Laplacian on a node subset.

    Extracting the submatrix on ``idx`` and solving with zero exterior
    values is exactly the Dirichlet problem on the subdomain; the solution
    is returned zero-padded to the full grid.
    """

    def __init__(self, surface: ModelSurfaceMetric, grid: RadialGrid, k: int,
                 idx: np.ndarray):
        ops = mode_operators(surface, grid, k)
        self.idx = np.asarray(idx, dtype=int)
        self.n = grid.n
        self._lus = []
        for sign in (+1, -1):
            mat = sp.csc_matrix(ops.channel_matrix(sign, 0.5))
            sub = mat[self.idx][:, self.idx]
            self._lus.append(spla.splu(sub))

    def solve_channels(self, w: np.ndarray, trans: str = "N") -> np.ndarray:
        """w shape (2, n) channel pairs; returns zero-padded solution."""
        out = np.zeros_like(w)
        for i in (0, 1):
            out[i, self.idx] = self._lus[i].solve(w[i, self.idx], trans=trans)
        return out


def discrete_near_null(mat_csc, seed: np.ndarray, iters: int = 3) -> np.ndarray:
    """Near-null vector of an almost-singular matrix by inverse iteration.

    The analytic kernel sampled on the grid only annihilates the discrete
    operator to O(h^2); a few inverse-power steps sharpen it to the actual
    smallest singular direction, which matters when projecting solutions.
    Falls back to the (normalized) seed if the factorization breaks down.
    """
    q = seed / np.linalg.norm(seed)
    try:
        lu = spla.splu(mat_csc)
        for _ in range(iters):
            y = lu.solve(q)
            ny = np.linalg.norm(y)
            if not np.isfinite(ny) or ny == 0.0:
                return q
            q = y / ny
    except RuntimeError:
        pass
    return q


class GlobalModeSolver:
    """Direct solve of the mode-k gauge Laplacian on the closed surface.

    k >= 1: plain sparse LU per rho channel.  k = 0: each channel has the
    one-dimensional kernel sqrt(F) (sharpened to the discrete near-null
    vector); the solve is a bordered system that constrains the solution to
    the weighted complement of the kernel and absorbs any kernel component
    of the right-hand side in the multiplier.
    """

    def __init__(self, surface: ModelSurfaceMetric, grid: RadialGrid, k: int):
        self.k = int(k)
        self.grid = grid
        ops = mode_operators(surface, grid, k)
        self.kernel = None
        self._lus = []
        if self.k == 0:
            mat0 = sp.csc_matrix(ops.channel_matrix(+1, 0.5))
            q = discrete_near_null(mat0, np.sqrt(np.asarray(surface.F(grid.nodes),
                                                            float)))
            q = q / math.sqrt(float(grid.weights @ (q * q)))
            self.kernel = q
            wq = grid.weights * q
            for sign in (+1, -1):
                mat = sp.csc_matrix(ops.channel_matrix(sign, 0.5))
                bordered = sp.bmat(
                    [[mat, wq[:, None]], [wq[None, :], None]], format="csc"
                )
                self._lus.append(spla.splu(bordered))
        else:
            for sign in (+1, -1):
                self._lus.append(spla.splu(sp.csc_matrix(ops.channel_matrix(sign, 0.5))))

    def project_out_kernel(self, w: np.ndarray) -> np.ndarray:
        if self.kernel is None:
            return w
        q = self.kernel
        wei = self.grid.weights
        out = w.copy()
        for i in (0, 1):
            out[i] -= (wei @ (q * out[i])) * q
        return out

    def solve_channels(self, w: np.ndarray, trans: str = "N") -> np.ndarray:
        out = np.empty_like(w)
        if self.k == 0:
            for i in (0, 1):
                rhs = np.append(w[i], 0.0)
                out[i] = self._lus[i].solve(rhs, trans=trans)[:-1]
        else:
            for i in (0, 1):
                out[i] = self._lus[i].solve(w[i], trans=trans)
        return out

    def solve(self, f: ModeField) -> ModeField:
        if f.rank is not Rank.ONE_FORM:
            raise ValueError("global solver acts on one-forms")
        sol = self.solve_channels(f.rho())
        return ModeField.one_form_rho(f.k, f.grid, sol[0], sol[1], f.variant)


class FactoredGlobalSolver:
    """Global inverse of the *factored* gauge Laplacian divergence o D.

    Composing the discrete divergence with the discrete conformal Killing
    operator gives a matrix P_fact that telescopes exactly against the
    projection pipeline: with G = P_fact^{-1}, the projected tensor
    h0 - D G (divergence h0) is discretely divergence-free to solver
    precision, so the TT projection is an exact discrete projector.  The
    direct channel stencils remain the independent discretization used by
    the operator-identity checks.

    At k = 0 the discrete kernel is spanned by the conformal Killing
    one-forms d tau and F d theta; the bordered system constrains both.
    """

    def __init__(self, surface: ModelSurfaceMetric, grid: RadialGrid, k: int):
        self.k = int(k)
        self.grid = grid
        ops = mode_operators(surface, grid, k)
        mat = sp.csc_matrix(ops.divergence_tf @ ops.conformal_killing)
        n = grid.n
        if self.k == 0:
            F = np.asarray(surface.F(grid.nodes), float)
            sqF = np.sqrt(F)
            kers = []
            for a, b in ((sqF, np.zeros(n)), (np.zeros(n), sqF)):
                v = np.concatenate([a, b])
                kers.append(v / np.linalg.norm(v))
            self.kernel = np.vstack(kers)
            wei = np.concatenate([grid.weights, grid.weights])
            B = (wei[:, None] * self.kernel.T)
            bordered = sp.bmat([[mat, B], [B.T, None]], format="csc")
            self._lu = spla.splu(bordered)
        else:
            self.kernel = None
            self._lu = spla.splu(mat)

    def solve_sigma(self, rhs: np.ndarray) -> np.ndarray:
        """rhs: one-form sigma components (2, n); returns sigma components."""
        v = rhs.reshape(-1)
        if self.k == 0:
            out = self._lu.solve(np.concatenate([v, [0.0, 0.0]]))[:-2]
        else:
            out = self._lu.solve(v)
        return out.reshape(2, -1)


@dataclass(frozen=True)
class BuildReport:
    """Build-time diagnostics for the model surface.

    ``sigma_min_global[0]`` is deflated (the two conformal Killing
    directions removed); ``kernel_residual_k0`` measures how well sqrt(F)
    spans the discrete k = 0 kernel (relative to the operator scale).
    """

    ell: float
    f_min: float
    curvature_thin_dev: float
    seam_jumps: dict[str, float]
    sigma_min_global: dict[int, float]
    sigma_min_thick: dict[int, float]
    sigma_raw_k0: float
    kernel_residual_k0: float


def build_model_surface(
    ell: float,
    *,
    n_check: int = 512,
    k_check: int = 16,
    check: bool = True,
    sigma_tol: float = 1e-8,
) -> tuple[ModelSurfaceMetric, BuildReport | None]:
    """Construct the surface and (optionally) run invertibility prechecks.

    Reports the smallest singular value of the global mode operators (after
    deflating the two k = 0 conformal Killing directions) and of the thick
    Dirichlet operators, at a coarse resolution.  Aborts if any deflated
    operator is numerically singular.
    """
    surf = ModelSurfaceMetric(ell=ell)
    if not check:
        return surf, None
    grid = periodic_grid(-2.0, 2.0, n_check)
    tau = grid.nodes
    F = surf.F(tau)
    if np.any(F <= 0):
        raise ValueError("profile not positive")
    thin = np.abs(np.mod(tau + 2.0, 4.0) - 2.0) <= 0.75
    kdev = float(np.max(np.abs(surf.curvature(tau[thin]) + 1.0)))

    # C^2 seams at 3/4, 7/8 (third derivative may jump)
    seams = {}
    for r0 in (0.75, 0.875):
        eps = 1e-7
        for name, fn in (("F", surf.F), ("Fp", surf.Fp), ("Fpp", surf.Fpp)):
            jump = abs(float(fn(r0 + eps)) - float(fn(r0 - eps)))
            seams[f"{name}@{r0}"] = jump

    sig_glob: dict[int, float] = {}
    sig_thick: dict[int, float] = {}
    idx_thick = thick_indices(grid)
    sigma_raw_k0 = np.inf
    kernel_res = 0.0
    for k in range(0, k_check + 1):
        ops = mode_operators(surf, grid, k)
        worst_g = np.inf
        worst_t = np.inf
        for sign in (+1, -1):
            mat = np.asarray(sp.csr_matrix(ops.channel_matrix(sign, 0.5)).todense())
            vals = svdvals(mat)
            if k == 0:
                sigma_raw_k0 = min(sigma_raw_k0, float(vals[-1]))
                q = np.sqrt(F)
                q = q / np.linalg.norm(q)
                kernel_res = max(kernel_res,
                                 float(np.linalg.norm(mat @ q) / vals[0]))
                worst_g = min(worst_g, float(vals[-2]))  # deflated
            else:
                worst_g = min(worst_g, float(vals[-1]))
            sub = mat[np.ix_(idx_thick, idx_thick)]
            worst_t = min(worst_t, float(svdvals(sub)[-1]))
        sig_glob[k] = worst_g
        sig_thick[k] = worst_t
        if worst_g < sigma_tol or worst_t < sigma_tol:
            raise ArithmeticError(
                f"mode {k} operator numerically singular after deflation "
                f"(global {worst_g:.3e}, thick {worst_t:.3e})"
            )
    report = BuildReport(
        ell=ell,
        f_min=float(np.min(F)),
        curvature_thin_dev=kdev,
        seam_jumps=seams,
        sigma_min_global=sig_glob,
        sigma_min_thick=sig_thick,
        sigma_raw_k0=float(sigma_raw_k0),
        kernel_residual_k0=kernel_res,
    )
    return surf, report
