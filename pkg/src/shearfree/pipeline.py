"""The executable conformal method.

Data flow:

    FreeData (lam, nu, Upsilon)
        --Xi (project_free_to_seed)-->  SeedData (lam, sigma, Psi)
        --Pi (seed_to_data)--------->  InitialData (g, Sigma, Phi)

with tau = tr_g K = -3 built in through K = Sigma - g.  The projection
solves two Helmholtz problems (divergence-free electromagnetic fields) and
one vector-Laplacian problem (momentum constraint for sigma); the
parametrization solves the Lichnerowicz equation and applies the conformal
rescalings

    g = phi^4 lam,  Sigma = phi^{-2} sigma,  Phi = phi^2 (.) Psi,

where t (.) (E, B, J, xi) = (t^{-3} E, t^{-3} B, t^{-5} J, t^{-4} xi).

Storage convention: sigma itself has rho^{-1}-singular components, so seed
data holds the bounded field sigma_bar = rho * sigma (whose boundary trace
is the shear-free datum), and initial data holds Sigma_bar = rho * Sigma =
phi^{-2} sigma_bar.  The gauge action (lam, sigma, Psi) -> (theta^4 lam,
theta^{-2} sigma, theta^2 (.) Psi) and the right inverse
iota(lam, sigma, Psi) = (lam, sigma - rho^{-1} H, Psi) of the projection
are exposed so the parametrization statements are executable.

``mode`` is either "shearfree" (boundary condition rho sigma|_bdry = H
asserted) or "weak" (same construction from lower-regularity inputs; the
boundary condition is recorded in the diagnostics but not enforced, and
the shear check downstream reports not-applicable).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import elliptic, lichnerowicz, tensor_ops as top
from .defining_tensor import H_tensor, boundary_restrict
from .errors import DataError
from .fields import (COMPACTIFIED, PHYSICAL, Metric, ScalarField,
                     SymTensor2Field, VectorField, weighted_sup_norm)
from .grid import RADIAL

SHEARFREE = "shearfree"
WEAK = "weak"

TRACE_TOL = 1e-11


@dataclass
class MatterFields:
    """Electromagnetic and fluid sources (e/E, b/B, j/J, zeta/xi)."""

    e: VectorField
    b: VectorField
    j: VectorField
    zeta: ScalarField

    def scaled(self, factors):
        fe, fb, fj, fz = factors
        return MatterFields(
            VectorField(self.e.grid, fe * self.e.data, self.e.frame),
            VectorField(self.b.grid, fb * self.b.data, self.b.frame),
            VectorField(self.j.grid, fj * self.j.data, self.j.frame),
            ScalarField(self.zeta.grid, fz * self.zeta.data,
                        self.zeta.frame))


def matter_scale(t, fields):
    """t (.) (E, B, J, xi) = (t^{-3} E, t^{-3} B, t^{-5} J, t^{-4} xi).

    Generalizes the defining rho (.) scaling to any positive function t,
    as required by the phi^2 (.) Psi step of the conformal decomposition.
    """
    tval = t.data if isinstance(t, ScalarField) else np.asarray(t)
    if np.any(tval <= 0.0):
        raise DataError("matter scaling factor must be positive")
    return fields.scaled((tval ** -3, tval ** -3, tval ** -5, tval ** -4))


def _check_trace_free(metric, tensor, what):
    tr = top._ops(metric).trace_bar_contraction(metric, tensor.data)
    scale = float(np.max(tensor.hbar_norm())) or 1.0
    worst = float(np.max(np.abs(tr)))
    if worst > TRACE_TOL * max(scale, 1.0):
        raise DataError(f"{what} must be trace-free: deviation {worst:.3e}")


@dataclass
class FreeData:
    """Unconstrained inputs (lam, nu, Upsilon) of the projection."""

    lam: Metric
    nu: SymTensor2Field
    upsilon: MatterFields
    decay: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lam.frame != PHYSICAL:
            raise DataError("free metric must be tagged physical")
        _check_trace_free(self.lam, self.nu, "free tensor nu")
        if np.min(self.upsilon.zeta.data) < 0.0:
            raise DataError("fluid energy zeta must be nonnegative")
        rho = self.lam.rho
        self.decay = {
            "nu_C2_sup": weighted_sup_norm(self.nu, 2.0, rho),
            "nu_C1_sup": weighted_sup_norm(self.nu, 1.0, rho),
            "e_C1_sup": weighted_sup_norm(self.upsilon.e, 1.0, rho),
            "b_C1_sup": weighted_sup_norm(self.upsilon.b, 1.0, rho),
        }


@dataclass
class Psi:
    """Seed matter (divergence-free E and B, current j, energy zeta)."""

    e: VectorField
    b: VectorField
    j: VectorField
    zeta: ScalarField


@dataclass
class SeedData:
    lam: Metric
    sigma_bar: SymTensor2Field      # rho * sigma, bounded to the boundary
    psi: Psi
    mode: str = SHEARFREE
    diagnostics: dict = field(default_factory=dict)

    def sigma_interior(self):
        """Plain sigma components on interior nodes (NaN at the boundary)."""
        rho = self.lam.rho.rho
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(rho > 0.0, self.sigma_bar.data / rho, np.nan)


@dataclass
class InitialData:
    g: Metric                        # physical; bar data = phi^4 lambda-bar
    sigma_big_bar: SymTensor2Field   # rho * Sigma
    matter: MatterFields             # (E, B, J, xi)
    phi: ScalarField
    mode: str = SHEARFREE
    newton: object = None
    seed: SeedData = None

    @property
    def tau(self):
        # K = Sigma - g with Sigma trace-free: tr_g K = -3 identically
        return -3.0


def _rho_divide_with_boundary_limit(grid, rho, data):
    """data / rho with the boundary value filled by quadratic extrapolation.

    Used for bounded quotients whose numerator vanishes at the boundary
    (e.g. rho * D W); the extrapolation matches the second-order interior
    scheme.
    """
    out = np.array(data, dtype=float)
    mask = rho.rho > 0.0
    out[..., mask] = out[..., mask] / rho.rho[mask]
    if grid.mode == RADIAL:
        out[..., -1] = (3.0 * out[..., -2] - 3.0 * out[..., -3]
                        + out[..., -4])
    else:
        n = grid.n
        c = n // 2
        nodes = [(n - 1, c, c), (0, c, c), (c, n - 1, c),
                 (c, 0, c), (c, c, n - 1), (c, c, 0)]
        steps = [(-1, 0, 0), (1, 0, 0), (0, -1, 0),
                 (0, 1, 0), (0, 0, -1), (0, 0, 1)]
        for (i, j, k), (di, dj, dk) in zip(nodes, steps):
            samples = [out[..., i + m * di, j + m * dj, k + m * dk]
                       for m in (1, 2, 3)]
            out[..., i, j, k] = (3.0 * samples[0] - 3.0 * samples[1]
                                 + samples[2])
        out[..., grid.exterior] = 0.0
    return out


def _bar_view(metric):
    return Metric(metric.grid, metric.bar, COMPACTIFIED, metric.rho,
                  check=False)


def project_free_to_seed(free, mode=SHEARFREE):
    """The projection Xi: free data -> seed data.

    Steps: Helmholtz-split the electromagnetic fields, solve the vector
    Laplacian for W, and assemble sigma = rho^{-1} H + nu + D W.  The
    divergence of the H-term uses the conformal identity
    Div_lam(rho^{-1} H) = rho Div_gbar H (H annihilates grad rho), and the
    nu-term uses the same adjoint realization the W-solve is assembled
    from, so the momentum identity closes at solver tolerance.
    """
    if mode not in (SHEARFREE, WEAK):
        raise DataError(f"unknown pipeline mode {mode!r}")
    lam = free.lam
    grid = lam.grid
    rho = lam.rho
    reports = {}

    u_e, e_div_free, rep_u = elliptic.helmholtz_split(lam, free.upsilon.e)
    u_b, b_div_free, rep_v = elliptic.helmholtz_split(lam, free.upsilon.b)
    reports["helmholtz_e"] = rep_u
    reports["helmholtz_b"] = rep_v
    psi = Psi(e_div_free, b_div_free, free.upsilon.j, free.upsilon.zeta)

    lam_bar = _bar_view(lam)
    h_field = H_tensor(lam_bar)

    # RHS of the vector-Laplacian problem
    div_h = top.divergence(lam_bar, h_field)
    if grid.mode == RADIAL:
        h_term = rho.rho ** 3 * lam.inv_bar[0] * div_h.data
    else:
        from .fields import sym_full
        h_term = rho.rho ** 3 * np.einsum(
            "jk...,k...->j...", sym_full(lam.inv_bar), div_h.data)
    nu_term = -elliptic.apply_ck_adjoint(lam, free.nu).data
    cross = top.cross(lam, psi.e, psi.b)
    y_data = h_term + nu_term - free.upsilon.j.data - cross.data
    y_data = np.where(np.isfinite(y_data), y_data, 0.0)
    y_data[..., grid.boundary] = 0.0
    if grid.mode == RADIAL:
        y_data[..., 0] = 0.0
    w_field, rep_w = elliptic.solve_vector_laplacian(
        lam, VectorField(grid, y_data, PHYSICAL), 2.0)
    reports["vector_laplacian"] = rep_w

    # rho * D_lam W = rho^{-1} D_gbar W: evaluate the bounded bar form on
    # the plain components of W and divide once
    w_bar = VectorField(grid, w_field.data, COMPACTIFIED)
    ck_bar = top.conformal_killing(lam_bar, w_bar)
    sigma_w_bar = _rho_divide_with_boundary_limit(grid, rho, ck_bar.data)
    sigma_bar_data = h_field.data + rho.rho * free.nu.data + sigma_w_bar
    sigma_bar = SymTensor2Field(grid, sigma_bar_data, PHYSICAL)

    seed = SeedData(lam, sigma_bar, psi, mode)
    seed.diagnostics = _seed_diagnostics(seed, h_field, reports)
    if mode == SHEARFREE:
        _assert_seed(seed)
    return seed


def _seed_diagnostics(seed, h_field=None, reports=None):
    lam = seed.lam
    grid = lam.grid
    inner = grid.interior
    lam_bar = _bar_view(lam)
    if h_field is None:
        h_field = H_tensor(lam_bar)
    div_e = top.divergence(lam, seed.psi.e).data
    div_b = top.divergence(lam, seed.psi.b).data
    # momentum identity, evaluated with the independent Gamma-form
    # divergence on the bounded field rho*sigma:
    #   rho Div_gbar(sbar) - 2 sbar(grad_gbar rho, .) = (j + E x B)^flat
    mom = _seed_momentum_residual(seed)
    bt_sigma = boundary_restrict(seed.sigma_bar, order=2)
    bt_h = boundary_restrict(h_field, order=2)
    bt_sigma1 = boundary_restrict(seed.sigma_bar, order=1)
    bt_h1 = boundary_restrict(h_field, order=1)
    diag = {
        "div_E_sup": float(np.max(np.abs(div_e[inner]))),
        "div_B_sup": float(np.max(np.abs(div_b[inner]))),
        "momentum_sup": float(np.max(np.abs(mom[..., inner]))),
        "sigma_bc_mismatch": float(np.max(np.abs(bt_sigma.values
                                                 - bt_h.values))),
        "sigma_bc_mismatch_order1": float(np.max(np.abs(bt_sigma1.values
                                                        - bt_h1.values))),
        "trace_sup": float(np.max(np.abs(
            top._ops(lam).trace_bar_contraction(lam, seed.sigma_bar.data)))),
    }
    if reports:
        diag["solver_reports"] = reports
    return diag


def _seed_momentum_residual(seed):
    """rho Div(sbar) - 2 sbar(grad rho, .) - (j + E x B)^flat, bounded form.

    All contractions w.r.t. the compactified metric; this is the
    independent (connection-coefficient) realization, distinct from the
    adjoint realization the W-solve enforces, so the residual measures the
    construction at truncation order.
    """
    lam = seed.lam
    grid = lam.grid
    rho = lam.rho
    lam_bar = _bar_view(lam)
    sbar = SymTensor2Field(grid, seed.sigma_bar.data, COMPACTIFIED)
    div_s = top.divergence(lam_bar, sbar).data
    if grid.mode == RADIAL:
        grad_rho = rho.grad * lam.inv_bar[0]
        s_grad = seed.sigma_bar.data[0] * grad_rho
        cross = np.zeros(grid.n)
        j_flat = lam.bar[0] * seed.psi.j.data
        cross_flat = lam.bar[0] * cross
    else:
        from .fields import sym_full
        grad_rho = np.einsum("ij...,j...->i...", sym_full(lam.inv_bar),
                             rho.grad)
        s_grad = np.einsum("ij...,i...->j...", sym_full(seed.sigma_bar.data),
                           grad_rho)
        cross = top.cross(lam, seed.psi.e, seed.psi.b).data
        cross = np.where(np.isfinite(cross), cross, 0.0)
        j_flat = np.einsum("ij...,j...->i...", sym_full(lam.bar),
                           seed.psi.j.data)
        cross_flat = np.einsum("ij...,j...->i...", sym_full(lam.bar), cross)
    # flat_g = rho^{-2} gbar; the matter one-form rho^{-2} gbar(j + ExB)
    # combines with the rho-weighted divergence so that every term is
    # bounded: multiply the identity through by rho^2 ... the bounded form
    # used here is  rho Div(sbar) - 2 sbar(grad rho) - rho^{-2}(j+ExB)^flat
    # restricted to the interior, with the matter term rho-safe.
    p = rho.rho
    safe = np.where(p > 0.0, p, 1.0)
    matter = np.where(p > 0.0, (j_flat + cross_flat) / safe ** 2, 0.0)
    return p * div_s - 2.0 * s_grad - matter


def _assert_seed(seed):
    d = seed.diagnostics
    grid = seed.lam.grid
    h2 = grid.h ** 2
    scale = float(np.max(seed.sigma_bar.hbar_norm())) + 1.0
    if d["sigma_bc_mismatch"] > 1e3 * h2 * scale + 1e-9:
        raise DataError(
            "shear-free boundary condition violated: |rho sigma - H| = "
            f"{d['sigma_bc_mismatch']:.3e} at the boundary (weak-mode data?)")
    if d["trace_sup"] > TRACE_TOL * scale:
        raise DataError("seed sigma lost trace-freeness")


def seed_to_data(seed):
    """The parametrization Pi: seed -> initial data via the conformal
    factor; returns (InitialData, NewtonReport)."""
    lam = seed.lam
    coeffs = lichnerowicz.assemble_coefficients(seed)
    phi, newton_report = lichnerowicz.solve_lichnerowicz(lam, coeffs)
    p = phi.data
    g = Metric(lam.grid, p ** 4 * lam.bar, PHYSICAL, lam.rho, check=False)
    sigma_big_bar = SymTensor2Field(lam.grid, p ** -2 * seed.sigma_bar.data,
                                    PHYSICAL)
    phi_matter = matter_scale(ScalarField(lam.grid, p ** 2, PHYSICAL),
                              MatterFields(seed.psi.e, seed.psi.b,
                                           seed.psi.j, seed.psi.zeta))
    data = InitialData(g, sigma_big_bar, phi_matter, phi, seed.mode,
                       newton_report, seed)
    return data, newton_report


def gauge_transform(seed, theta):
    """(lam, sigma, Psi) -> (theta^4 lam, theta^{-2} sigma, theta^2 (.) Psi).

    theta must be positive with theta = 1 on the boundary.
    """
    th = theta.data if isinstance(theta, ScalarField) else np.asarray(theta)
    if np.any(th <= 0.0):
        raise DataError("gauge function must be positive")
    bnd = seed.lam.grid.boundary
    if np.any(np.abs(th[bnd] - 1.0) > 1e-12):
        raise DataError("gauge function must equal 1 on the boundary")
    lam2 = seed.lam.rescaled(th, 4)
    sigma_bar2 = SymTensor2Field(seed.lam.grid,
                                 th ** -2 * seed.sigma_bar.data, PHYSICAL)
    m = matter_scale(th ** 2, MatterFields(seed.psi.e, seed.psi.b,
                                           seed.psi.j, seed.psi.zeta))
    out = SeedData(lam2, sigma_bar2, Psi(m.e, m.b, m.j, m.zeta), seed.mode)
    out.diagnostics = _seed_diagnostics(out)
    return out


def iota(seed):
    """Right inverse of the projection: nu := sigma - rho^{-1} H."""
    lam = seed.lam
    grid = lam.grid
    h_field = H_tensor(_bar_view(lam))
    nu_data = _rho_divide_with_boundary_limit(
        grid, lam.rho, seed.sigma_bar.data - h_field.data)
    nu = SymTensor2Field(grid, nu_data, PHYSICAL)
    ups = MatterFields(seed.psi.e, seed.psi.b, seed.psi.j, seed.psi.zeta)
    return FreeData(lam, nu, ups)
