"""Weil-Petersson pairings of metric variations and the expansion fitter.

The two Fenchel-Nielsen directions at the neck are realized as explicit
k = 0 variation fields of the model family:

* length: d/d ell of the profile metric, with frame components
  (phi, psi, f) = (-dF/dell / F, 0, 0); trace-free by the unit-determinant
  gauge, supported where the profile depends on ell (|tau| < 7/8), and
  divergence-free wherever the profile is exactly tau^2 + ell^2.
* twist: d/d omega of the pullback family theta -> theta + omega s(tau)
  with a smooth step s (0 below tau = -3/4, 1 above 3/4), giving
  (0, F s'(tau), 0).

Pairings are <T g1., T g2.> integrated against exp(-2 phi) dA with T the
TT projection and phi the neck conformal factor; on the rotational
surrogate the phi- and psi-systems decouple at k = 0, so the cross
coefficient g_lw vanishes identically by theta-reflection parity (reported,
not assumed).

The fitter performs least squares in the half-integer/log design
{ell^{k/2} (log ell)^j}; columns are sup-normalized before solving and the
condition number of the normalized design is reported.  Nested residuals
(terms added in the canonical order k, then j) are monotone by
construction; a residual plateau flags a family outside the grading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import RadialGrid, periodic_grid
from .modefields import ModeField, Rank, mode_inner_product
from .parametrix import SolverBank, project_tt
from .surface import ModelSurfaceMetric, smoothstep, smoothstep_d1
from .uniformize import ConformalFactor, solve_conformal_factor

__all__ = [
    "length_variation",
    "twist_variation",
    "wp_inner_product",
    "wp_matrix",
    "sweep_wp_coefficients",
    "ExpansionFit",
    "fit_polyhomogeneous",
    "loglog_slope",
]


def length_variation(surface: ModelSurfaceMetric, grid: RadialGrid) -> ModeField:
    """d g / d ell as a k = 0 full tensor mode (trace-free in this gauge)."""
    tau = grid.nodes
    F = np.asarray(surface.F(tau), float)
    dF = np.asarray(surface.dF_dell(tau), float)
    phi = -dF / F
    zeros = np.zeros_like(phi)
    return ModeField(0, Rank.SYM2_FULL, grid, np.vstack([phi, zeros, zeros]))


def twist_step(tau):
    """Smooth step s: 0 for tau <= -3/4, 1 for tau >= 3/4."""
    return smoothstep((np.asarray(tau, float) + 0.75) / 1.5)


def twist_step_d1(tau):
    return smoothstep_d1((np.asarray(tau, float) + 0.75) / 1.5) / 1.5


def twist_variation(surface: ModelSurfaceMetric, grid: RadialGrid) -> ModeField:
    """d g / d omega of theta -> theta + omega s(tau): F s'(tau) dtau dtheta (sym)."""
    tau = np.mod(grid.nodes + 2.0, 4.0) - 2.0
    F = np.asarray(surface.F(tau), float)
    psi = F * twist_step_d1(tau)
    zeros = np.zeros_like(psi)
    return ModeField(0, Rank.SYM2_FULL, grid, np.vstack([zeros, psi, zeros]))


def wp_inner_product(
    surface: ModelSurfaceMetric,
    grid: RadialGrid,
    g1: ModeField,
    g2: ModeField,
    conformal: ConformalFactor | None = None,
    solvers: SolverBank | None = None,
) -> float:
    """<T g1, T g2> with weight exp(-2 phi) dA (phi = 0 when no factor given)."""
    bank = solvers if solvers is not None else SolverBank(surface, grid)
    t1 = project_tt(surface, grid, {g1.key: g1}, solvers=bank)[g1.key]
    t2 = (t1 if g2 is g1
          else project_tt(surface, grid, {g2.key: g2}, solvers=bank)[g2.key])
    weight = None if conformal is None else conformal.weight(grid.nodes)
    return mode_inner_product(t1, t2, weight)


def wp_matrix(surface: ModelSurfaceMetric, grid: RadialGrid,
              conformal: ConformalFactor | None = None,
              solvers: SolverBank | None = None) -> dict[str, float]:
    """Length/twist WP coefficients (g_ll, g_lw, g_ww) at one ell."""
    bank = solvers if solvers is not None else SolverBank(surface, grid)
    gl = length_variation(surface, grid)
    gw = twist_variation(surface, grid)
    tl = project_tt(surface, grid, {gl.key: gl}, solvers=bank)[gl.key]
    tw = project_tt(surface, grid, {gw.key: gw}, solvers=bank)[gw.key]
    weight = None if conformal is None else conformal.weight(grid.nodes)
    return {
        "g_ll": mode_inner_product(tl, tl, weight),
        "g_lw": mode_inner_product(tl, tw, weight),
        "g_ww": mode_inner_product(tw, tw, weight),
    }


def sweep_wp_coefficients(
    ells,
    *,
    grid_n: int = 16384,
    use_conformal: bool = True,
    jobs: int = 1,
) -> list[dict[str, float]]:
    """WP coefficients over an ell grid; rows sorted by ell ascending.

    The conformal weight is solved per ell where the neck curvature is
    strictly negative, else phi = 0 is used (recorded in the row).
    """
    ells = sorted(float(e) for e in ells)
    grid = periodic_grid(-2.0, 2.0, grid_n)

    def one(ell: float) -> dict[str, float]:
        surface = ModelSurfaceMetric(ell=ell)
        cf = None
        if use_conformal:
            try:
                cf = solve_conformal_factor(surface)
            except ValueError:
                cf = None
        row = {"ell": ell}
        row.update(wp_matrix(surface, grid, conformal=cf))
        row["conformal_bound"] = float("nan") if cf is None else cf.bound
        row["conformal_max"] = (float("nan") if cf is None
                                else float(np.max(np.abs(cf.u))))
        return row

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(one, ells))
    else:
        rows = [one(e) for e in ells]
    return sorted(rows, key=lambda r: r["ell"])


def loglog_slope(ells, values, trim: int = 2) -> float:
    """Least-squares slope of log(value) vs log(ell), dropping ``trim``
    points at each end to suppress boundary-of-sweep contamination."""
    x = np.log(np.asarray(ells, float))
    y = np.log(np.asarray(values, float))
    if trim > 0:
        if x.size <= 2 * trim + 1:
            raise ValueError("not enough sweep points for the trimmed slope")
        x, y = x[trim:-trim], y[trim:-trim]
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


# -- polyhomogeneous expansion fitting ----------------------------------------

@dataclass(frozen=True)
class ExpansionFit:
    """Least-squares fit against sum a_{k,j} ell^{k/2} (log ell)^j."""

    terms: tuple[tuple[int, int, float], ...]
    residual: float
    condition_number: float
    residual_path: tuple[float, ...]
    sample_count: int

    def coefficient(self, half_power: int, log_power: int) -> float:
        for k, j, a in self.terms:
            if (k, j) == (half_power, log_power):
                return a
        raise KeyError((half_power, log_power))

    def evaluate(self, ell) -> np.ndarray:
        ell = np.asarray(ell, float)
        out = np.zeros_like(ell)
        for k, j, a in self.terms:
            out += a * ell ** (k / 2.0) * np.log(ell) ** j
        return out


class FitConditionError(RuntimeError):
    """Design matrix too ill-conditioned for a trustworthy fit."""

    def __init__(self, cond: float, limit: float, detail: str):
        super().__init__(
            f"design matrix condition number {cond:.3e} exceeds {limit:.1e} "
            f"({detail})"
        )
        self.condition_number = cond


def fit_polyhomogeneous(
    ells,
    values,
    max_half_power: int,
    max_log_power: int,
    *,
    cond_limit: float = 1e12,
) -> ExpansionFit:
    """Fit samples (ell_i, f_i) against the half-integer/log grading.

    Requires at least 3 (K+1)(J+1) samples log-spaced over >= 2 decades.
    Columns are sup-normalized before solving; the condition number of the
    normalized design is reported and enforced.  ``residual_path[m]`` is
    the root-mean-square residual of the nested fit using the first m+1
    terms in the canonical order (half powers ascending, then log powers);
    nested least squares makes the path weakly decreasing.
    """
    ell = np.asarray(ells, float)
    val = np.asarray(values, float)
    if ell.ndim != 1 or ell.shape != val.shape:
        raise ValueError("need matching 1-D sample arrays")
    if np.any(ell <= 0):
        raise ValueError("lengths must be positive")
    K, J = int(max_half_power), int(max_log_power)
    n_terms = (K + 1) * (J + 1)
    if ell.size < 3 * n_terms:
        raise ValueError(
            f"need at least {3 * n_terms} samples for {n_terms} terms, "
            f"got {ell.size}"
        )
    if np.log10(ell.max() / ell.min()) < 2.0 - 1e-9:
        raise ValueError("samples must span at least two decades of ell")

    pairs = [(k, j) for k in range(K + 1) for j in range(J + 1)]
    cols = [ell ** (k / 2.0) * np.log(ell) ** j for k, j in pairs]
    A = np.stack(cols, axis=1)
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0.0] = 1.0
    An = A / scale
    cond = float(np.linalg.cond(An))
    if cond > cond_limit:
        raise FitConditionError(
            cond, cond_limit,
            f"K={K}, J={J}, {ell.size} samples over "
            f"{np.log10(ell.max() / ell.min()):.2f} decades",
        )

    coef_n, *_ = np.linalg.lstsq(An, val, rcond=None)
    coef = coef_n / scale
    resid = val - An @ coef_n
    rms = float(np.sqrt(np.mean(resid**2)))

    path = []
    for m in range(1, len(pairs) + 1):
        cm, *_ = np.linalg.lstsq(An[:, :m], val, rcond=None)
        rm = val - An[:, :m] @ cm
        path.append(float(np.sqrt(np.mean(rm**2))))

    return ExpansionFit(
        terms=tuple((k, j, float(a)) for (k, j), a in zip(pairs, coef)),
        residual=rms,
        condition_number=cond,
        residual_path=tuple(path),
        sample_count=int(ell.size),
    )
