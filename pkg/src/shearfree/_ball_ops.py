"""Cartesian (ball3d) realizations of the differential operators.

Fields live on the full cube so every stencil has neighbors; identities and
norms are evaluated on the ball mask by the callers.  Index conventions
follow :mod:`shearfree.fields`: symmetric tensors are stored with component
order xx, xy, xz, yy, yz, zz, and ``sym_full`` expands to (3, 3, ...) views
for einsum contractions.

Physical-frame variants apply the same conformal laws as the radial
backend; rho^{-1} terms are NaN on the boundary/exterior region.
"""

from __future__ import annotations

import numpy as np

from .fields import sym_full, sym_pack
from .grid import dax, dax2


def _inv_rho(rho, k=1):
    with np.errstate(divide="ignore"):
        return np.where(rho > 0.0, rho, np.nan) ** (-k)


def _grad_components(f, h):
    return np.stack([dax(f, h, ax) for ax in range(3)])


def _second_derivatives(f, h):
    """Symmetric-storage array of all second partials of a scalar."""
    d = _grad_components(f, h)
    out = np.empty((6,) + f.shape)
    out[0] = dax2(f, h, 0)
    out[3] = dax2(f, h, 1)
    out[5] = dax2(f, h, 2)
    out[1] = dax(d[0], h, 1)
    out[2] = dax(d[0], h, 2)
    out[4] = dax(d[1], h, 2)
    return out


# -- scalar operators -------------------------------------------------------

def gradient_bar(metric, f):
    df = _grad_components(f, metric.grid.h)
    return np.einsum("ij...,j...->i...", sym_full(metric.inv_bar), df)


def gradient_phys(metric, f):
    return metric.rho.rho ** 2 * gradient_bar(metric, f)


def hessian_bar(metric, f):
    h = metric.grid.h
    df = _grad_components(f, h)
    d2f = _second_derivatives(f, h)
    gam = np.stack([sym_full(metric.christoffel_bar[k]) for k in range(3)])
    corr = np.einsum("kij...,k...->ij...", gam, df)
    return d2f - sym_pack(corr)


def hessian_phys(metric, f):
    h = metric.grid.h
    df = _grad_components(f, h)
    dp = metric.rho.grad
    pairing = np.einsum("ij...,i...,j...->...", sym_full(metric.inv_bar),
                        dp, df)
    sym_dd = sym_pack(np.einsum("i...,j...->ij...", dp, df)
                      + np.einsum("i...,j...->ij...", df, dp))
    corr = sym_dd - pairing * metric.bar
    return hessian_bar(metric, f) + _inv_rho(metric.rho.rho) * corr


def laplacian_bar(metric, f):
    return trace_bar_contraction(metric, hessian_bar(metric, f))


def laplacian_phys(metric, f):
    h = metric.grid.h
    df = _grad_components(f, h)
    pairing = np.einsum("ij...,i...,j...->...", sym_full(metric.inv_bar),
                        metric.rho.grad, df)
    rho = metric.rho.rho
    return rho ** 2 * laplacian_bar(metric, f) - rho * pairing


# -- vector operators -------------------------------------------------------

def div_vector_bar(metric, x):
    """Connection-coefficient divergence d_i X^i + Gamma^k_{ki} X^i."""
    h = metric.grid.h
    gam = np.stack([sym_full(metric.christoffel_bar[k]) for k in range(3)])
    dxx = sum(dax(x[ax], h, ax) for ax in range(3))
    return dxx + np.einsum("kki...,i...->...", gam, x)


def div_vector_phys(metric, x):
    xrho = np.einsum("i...,i...->...", x, metric.rho.grad)
    return div_vector_bar(metric, x) - 3.0 * _inv_rho(metric.rho.rho) * xrho


def div_vector_volume_bar(metric, x):
    """Volume-form divergence (1/J) d_i (J X^i), independent realization."""
    h = metric.grid.h
    j = metric.sqrt_det_bar
    return sum(dax(j * x[ax], h, ax) for ax in range(3)) / j


def div_vector_volume_phys(metric, x):
    xrho = np.einsum("i...,i...->...", x, metric.rho.grad)
    return (div_vector_volume_bar(metric, x)
            - 3.0 * _inv_rho(metric.rho.rho) * xrho)


def conformal_killing_bar(metric, x):
    h = metric.grid.h
    xb = np.einsum("ij...,j...->i...", sym_full(metric.bar), x)
    dxb = np.stack([_grad_components(xb[j], h) for j in range(3)])
    # nabla_i xb_j = d_i xb_j - Gamma^k_{ij} xb_k
    gam = np.stack([sym_full(metric.christoffel_bar[k]) for k in range(3)])
    nab = (np.einsum("ji...->ij...", dxb)
           - np.einsum("kij...,k...->ij...", gam, xb))
    sym = 0.5 * (nab + np.einsum("ij...->ji...", nab))
    div = np.einsum("ij...,ij...->...", sym_full(metric.inv_bar), nab)
    return sym_pack(sym) - (div / 3.0) * metric.bar


def conformal_killing_phys(metric, x):
    return _inv_rho(metric.rho.rho, 2) * conformal_killing_bar(metric, x)


_EPS = np.zeros((3, 3, 3))
_EPS[0, 1, 2] = _EPS[1, 2, 0] = _EPS[2, 0, 1] = 1.0
_EPS[0, 2, 1] = _EPS[2, 1, 0] = _EPS[1, 0, 2] = -1.0


def cross_bar(metric, x, y):
    cov = metric.sqrt_det_bar * np.einsum("lij,i...,j...->l...", _EPS, x, y)
    return np.einsum("kl...,l...->k...", sym_full(metric.inv_bar), cov)


def cross_phys(metric, x, y):
    return _inv_rho(metric.rho.rho) * cross_bar(metric, x, y)


# -- tensor operators -------------------------------------------------------

def div_tensor_bar(metric, t):
    h = metric.grid.h
    tf = sym_full(t)
    inv = sym_full(metric.inv_bar)
    gam = np.stack([sym_full(metric.christoffel_bar[k]) for k in range(3)])
    dt = np.stack([np.stack([dax(t[c], h, ax) for c in range(6)])
                   for ax in range(3)])
    dt_full = np.stack([sym_full(dt[ax]) for ax in range(3)])
    out = np.einsum("ik...,ikj...->j...", inv, dt_full)
    out -= np.einsum("ik...,lik...,lj...->j...", inv, gam, tf)
    out -= np.einsum("ik...,lij...,kl...->j...", inv, gam, tf)
    return out


def div_tensor_phys(metric, t):
    inv = sym_full(metric.inv_bar)
    dp = metric.rho.grad
    grad_rho = np.einsum("ij...,j...->i...", inv, dp)
    t_grad = np.einsum("ij...,i...->j...", sym_full(t), grad_rho)
    tr_bar = trace_bar_contraction(metric, t)
    rho = metric.rho.rho
    return rho ** 2 * (div_tensor_bar(metric, t)
                       + _inv_rho(rho) * (tr_bar * dp - t_grad))


def trace_bar_contraction(metric, t):
    return np.einsum("ij...,ij...->...", sym_full(metric.inv_bar),
                     sym_full(t))


def tensor_norm2_bar(metric, t):
    up = np.einsum("ia...,jb...,ab...->ij...", sym_full(metric.inv_bar),
                   sym_full(metric.inv_bar), sym_full(t))
    return np.einsum("ij...,ij...->...", up, sym_full(t))


def vector_norm2_bar(metric, x):
    return np.einsum("ij...,i...,j...->...", sym_full(metric.bar), x, x)


# -- curvature ---------------------------------------------------------------

def scalar_curvature_bar(metric):
    """Coordinate formula contracted from metric second derivatives."""
    h = metric.grid.h
    inv = sym_full(metric.inv_bar)
    dg = np.stack([sym_full(metric.dbar[ax]) for ax in range(3)])
    d2g = np.stack([
        np.stack([sym_full(np.stack([dax(metric.dbar[ax][c], h, ax2)
                                     for c in range(6)]))
                  for ax in range(3)])
        for ax2 in range(3)])
    # d_l g^{km} = - g^{ka} (d_l g_{ab}) g^{bm}
    dinv = -np.einsum("ka...,lab...,bm...->lkm...", inv, dg, inv)
    # V_{mij} and d_l V_{mij}
    v = (np.einsum("imj...->mij...", dg) + np.einsum("jmi...->mij...", dg)
         - dg)
    dv = (np.einsum("limj...->lmij...", d2g)
          + np.einsum("ljmi...->lmij...", d2g)
          - np.einsum("lmij...->lmij...", d2g))
    dgamma = 0.5 * (np.einsum("lkm...,mij...->lkij...", dinv, v)
                    + np.einsum("km...,lmij...->lkij...", inv, dv))
    gam = 0.5 * np.einsum("km...,mij...->kij...", inv, v)
    term1 = np.einsum("ij...,kkij...->...", inv, dgamma)
    term2 = np.einsum("ij...,ikkj...->...", inv, dgamma)
    term3 = np.einsum("ij...,kkl...,lij...->...", inv, gam, gam)
    term4 = np.einsum("ij...,kil...,lkj...->...", inv, gam, gam)
    return term1 - term2 + term3 - term4


def scalar_curvature_phys(metric):
    rho = metric.rho.rho
    lap_rho = laplacian_bar(metric, rho)
    q = metric.drho_norm2_bar()
    return (rho ** 2 * scalar_curvature_bar(metric)
            + 4.0 * rho * lap_rho - 6.0 * q)
