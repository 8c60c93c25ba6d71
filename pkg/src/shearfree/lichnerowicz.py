"""Damped-Newton solve of the Lichnerowicz equation.

The conformal factor phi satisfies

    Delta_g phi - (1/8) R[g] phi + A phi^{-7} + B phi^{-3}
        - (3/4) phi^5 = 0,        phi = 1 on the boundary,  phi > 0,

with A = (1/8)|sigma|^2_g and B = (1/8)(|E|^2 + |B|^2 + 2 zeta) assembled
from seed data; both are nonnegative and decay toward the boundary.  The
nonlinearity has poles at phi = 0, so Newton steps are backtracked (step
halving, at most 12 halvings) whenever they would cross the hard
positivity floor or fail to reduce the residual; steps are damped, never
clipped.  The Jacobian reuses the compact elliptic assembly with zeroth
order coefficient

    m = -(1/8) R - 7 A phi^{-8} - 3 B phi^{-4} - (15/4) phi^4,

whose sign structure is negative near solutions; assembly asserts this.
The initial guess is phi = 1 (exact for the vacuum-hyperbolic case and
inside the basin for all desk-scale presets; callers may override).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import elliptic, tensor_ops as top
from .defining_tensor import _hess_rho_bar
from .errors import DataError, NewtonError
from .fields import COMPACTIFIED, PHYSICAL, Metric, ScalarField
from .grid import RADIAL

RESIDUAL_TOL = 1e-10
STEP_TOL = 1e-12
MAX_ITER = 50
MAX_HALVINGS = 12
PHI_FLOOR = 0.05


@dataclass
class LichCoefficients:
    """Nonnegative coefficient fields of the Lichnerowicz equation."""

    a: ScalarField
    b: ScalarField
    scalar_curv: ScalarField

    def __post_init__(self):
        for name, f in (("A", self.a), ("B", self.b)):
            if np.min(f.data) < -1e-13:
                raise DataError(
                    f"Lichnerowicz coefficient {name} is negative "
                    f"({np.min(f.data):.3e}) beyond tolerance")
            np.clip(f.data, 0.0, None, out=f.data)


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    damping_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    floor_hits: int = 0
    final_residual: float = float("nan")
    converged_by: str = ""


def _vec_norm2_physical(metric, vec):
    """|X|^2_g = rho^{-2} gbar(X, X) with the boundary limit 0."""
    ops = top._ops(metric)
    val = ops.vector_norm2_bar(metric, vec.data)
    rho = metric.rho.rho
    safe = np.where(rho > 0.0, rho, 1.0)
    return np.where(rho > 0.0, val / safe ** 2, 0.0)


def assemble_coefficients(seed):
    """LichCoefficients from a seed data set (lam, rho*sigma, Psi).

    A = (1/8) rho^2 |rho sigma|^2_gbar stays bounded to the boundary; the
    matter term uses the decay of the preset fields.
    """
    lam = seed.lam
    rho = lam.rho.rho
    ops = top._ops(lam)
    a_data = 0.125 * rho ** 2 * ops.tensor_norm2_bar(lam, seed.sigma_bar.data)
    e2 = _vec_norm2_physical(lam, seed.psi.e)
    b2 = _vec_norm2_physical(lam, seed.psi.b)
    zeta = seed.psi.zeta.data
    if np.min(zeta) < -1e-13:
        raise DataError("fluid energy zeta must be nonnegative")
    b_data = 0.125 * (e2 + b2 + 2.0 * np.clip(zeta, 0.0, None))
    rcurv = top.scalar_curvature(lam)
    return LichCoefficients(ScalarField(lam.grid, a_data, PHYSICAL),
                            ScalarField(lam.grid, b_data, PHYSICAL),
                            rcurv)


def residual(metric, coeffs, phi):
    """Pointwise Lichnerowicz residual for a candidate phi (full grid)."""
    lap = top.laplacian(metric, phi)
    p = phi.data
    return (lap.data - 0.125 * coeffs.scalar_curv.data * p
            + coeffs.a.data * p ** -7 + coeffs.b.data * p ** -3
            - 0.75 * p ** 5)


def solve_lichnerowicz(metric, coeffs, phi0=None):
    """Newton iteration with backtracking damping and a positivity floor.

    Returns (phi, NewtonReport); raises NewtonError on divergence or an
    unrescuable floor violation, with the report attached for forensics.
    """
    if metric.frame != PHYSICAL:
        raise DataError("the Lichnerowicz equation lives on the physical "
                        "metric")
    grid = metric.grid
    inner = grid.interior
    phi = np.ones(grid.shape) if phi0 is None else np.array(phi0, float)
    phi[grid.boundary] = 1.0
    report = NewtonReport()

    res = residual(metric, coeffs, ScalarField(grid, phi, PHYSICAL))
    res_norm = float(np.max(np.abs(res[inner])))
    report.residual_history.append(res_norm)

    for it in range(MAX_ITER):
        # the FD residual evaluation carries rounding noise ~ eps/h^2, which
        # caps the certifiable residual on fine grids
        floor = rounding_floor(metric, float(np.max(np.abs(phi))))
        if res_norm <= max(RESIDUAL_TOL, floor):
            report.converged_by = report.converged_by or (
                "residual" if res_norm <= RESIDUAL_TOL else "residual-floor")
            break
        p = phi
        m = (-0.125 * coeffs.scalar_curv.data - 7.0 * coeffs.a.data * p ** -8
             - 3.0 * coeffs.b.data * p ** -4 - 3.75 * p ** 4)
        if np.max(m[inner]) >= 0.0:
            raise NewtonError(
                "Jacobian zeroth-order coefficient lost negativity "
                f"(max {np.max(m[inner]):.3e}); outside the basin")
        idx = elliptic._interior_index(grid)
        delta_full = elliptic.solve_compact(metric, m, -res.ravel()[idx])

        step = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = phi + step * delta_full
            if np.min(trial) < PHI_FLOOR:
                report.floor_hits += 1
                step *= 0.5
                continue
            trial_res = residual(metric, coeffs,
                                 ScalarField(grid, trial, PHYSICAL))
            trial_norm = float(np.max(np.abs(trial_res[inner])))
            if trial_norm <= (1.0 - 0.25 * step) * res_norm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            report.iterations = it + 1
            report.final_residual = res_norm
            if res_norm <= 10.0 * floor:
                report.converged_by = "residual-floor"
                break
            raise NewtonError(
                f"Newton stalled at iteration {it}: residual {res_norm:.3e} "
                f"not reduced within {MAX_HALVINGS} halvings "
                f"(floor hits {report.floor_hits})")
        step_size = float(step * np.max(np.abs(delta_full)))
        phi = trial
        res = trial_res
        res_norm = trial_norm
        report.residual_history.append(res_norm)
        report.damping_history.append(step)
        report.step_history.append(step_size)
        report.iterations = it + 1
        if step_size <= STEP_TOL:
            report.converged_by = "step"
            break
    else:
        report.final_residual = res_norm
        raise NewtonError(
            f"Newton did not converge in {MAX_ITER} iterations "
            f"(residual {res_norm:.3e})")
    report.final_residual = res_norm
    if not report.converged_by:
        report.converged_by = "residual"
    return ScalarField(grid, phi, PHYSICAL), report


def rounding_floor(metric, phi_scale=1.0):
    """Noise level of the discrete residual evaluation, ~ eps |phi| / h^2."""
    return 4.0 * np.finfo(float).eps * phi_scale / metric.grid.h ** 2


def laplacian_of_rho_analytic(metric):
    """Delta_g rho with analytic rho-derivatives (metric data only FD)."""
    rho = metric.rho.rho
    hess = _hess_rho_bar(metric)
    ops = top._ops(metric)
    lap_bar = ops.trace_bar_contraction(metric, hess)
    return rho ** 2 * lap_bar - rho * metric.drho_norm2_bar()


def manufactured_source(metric, amplitude, power=2):
    """Matter coefficient reproducing phi* = 1 + amplitude * rho^power.

    With A = 0 the Lichnerowicz equation holds for phi* iff

        B = phi*^3 ( (3/4) phi*^5 + (1/8) R phi* - Delta phi* ),

    evaluated here with closed-form phi* derivatives (Delta rho^p reduces
    to the analytic Delta rho and |drho|^2), so the discrete Newton root
    differs from phi* only by the solver's own truncation error.  On the
    hyperbolic preset the source is nonnegative for every amplitude > 0
    (e.g. Delta_g rho^2 = -6 rho^3 <= 0); raises if it is negative anywhere
    (shrink the amplitude).  Returns (phi_star, LichCoefficients).
    """
    if amplitude <= 0.0:
        raise DataError("manufactured amplitude must be positive")
    grid = metric.grid
    rho = metric.rho.rho
    p = power
    phi_star = 1.0 + amplitude * rho ** p
    # Delta_g rho^p = p rho^{p+1} Lap_gbar rho + p(p-2) rho^p |drho|^2_gbar
    hess = _hess_rho_bar(metric)
    ops = top._ops(metric)
    lap_bar = ops.trace_bar_contraction(metric, hess)
    q = metric.drho_norm2_bar()
    lap_phi = amplitude * (p * rho ** (p + 1) * lap_bar
                           + p * (p - 2.0) * rho ** p * q)
    rcurv = top.scalar_curvature(metric)
    s = phi_star ** 3 * (0.75 * phi_star ** 5
                         + 0.125 * rcurv.data * phi_star - lap_phi)
    if np.min(s[grid.interior]) < -1e-12:
        raise DataError(
            f"manufactured source is negative (min {np.min(s):.3e}); "
            "reduce the amplitude")
    zeros = ScalarField(grid, np.zeros(grid.shape), PHYSICAL)
    coeffs = LichCoefficients(zeros,
                              ScalarField(grid, np.clip(s, 0.0, None),
                                          PHYSICAL),
                              rcurv)
    return ScalarField(grid, phi_star, PHYSICAL), coeffs
