"""Discrete differential-geometric operators.

Public surface over the radial-profile and Cartesian backends: gradients,
Hessians, Laplacians, divergences, curvature, the conformal Killing
(Ahlfors) operator, cross products, trace manipulations and conformal
rescalings.  All operators accept metrics in either frame; physical-frame
(g = rho^{-2} gbar) variants are evaluated through the conformal
transformation laws so only bounded compactified data is differentiated.

Conventions
-----------
* Laplacian sign: Delta = Div grad = tr Hess (negative spectrum).
* ``divergence`` uses connection coefficients (uniformly second order
  including the coordinate axis); ``divergence_volume`` is an independent
  volume-form realization of the same operator used for cross-checks.
* ``divergence`` of a symmetric 2-tensor returns the covariant one-form.
* Physical-frame outputs that carry a bare factor rho^{-1} are NaN at the
  boundary nodes, where the physical quantity is not defined pointwise;
  callers restrict to the interior or extrapolate.

The composite vector Laplacian L = D* D is exposed through
:func:`vector_laplacian_apply`, which applies the same weighted adjoint
composition of the conformal-Killing operator that the linear solver
assembles, so self-adjointness holds by construction up to rounding.
"""

from __future__ import annotations

import numpy as np

from . import _ball_ops as bops
from . import _radial_ops as rops
from .errors import DataError, FrameError
from .fields import (COMPACTIFIED, PHYSICAL, Metric, OneFormField,
                     ScalarField, SymTensor2Field, VectorField, sym_full,
                     sym_pack)
from .grid import RADIAL


def _ops(metric):
    return rops if metric.grid.mode == RADIAL else bops


def _check(metric, *flds):
    for f in flds:
        if f.grid != metric.grid:
            raise DataError("field and metric live on different grids")
        if isinstance(f, ScalarField):
            continue
        if f.frame != metric.frame:
            raise FrameError(
                f"{f.kind} field is {f.frame}-frame but the metric is "
                f"{metric.frame}-frame")


def _pick(metric, bar_fn, phys_fn, *args):
    fn = bar_fn if metric.frame == COMPACTIFIED else phys_fn
    return fn(metric, *args)


# -- scalar calculus ---------------------------------------------------------

def gradient(metric, f):
    _check(metric, f)
    ops = _ops(metric)
    data = _pick(metric, ops.gradient_bar, ops.gradient_phys, f.data)
    return VectorField(metric.grid, data, metric.frame)


def hessian(metric, f):
    _check(metric, f)
    ops = _ops(metric)
    data = _pick(metric, ops.hessian_bar, ops.hessian_phys, f.data)
    return SymTensor2Field(metric.grid, data, metric.frame)


def laplacian(metric, f):
    """Delta f = tr Hess f; equals trace(metric, hessian(metric, f))."""
    _check(metric, f)
    ops = _ops(metric)
    data = _pick(metric, ops.laplacian_bar, ops.laplacian_phys, f.data)
    return ScalarField(metric.grid, data, metric.frame)


# -- divergences -------------------------------------------------------------

def divergence(metric, fld):
    """Metric divergence; vector -> scalar, symmetric 2-tensor -> one-form."""
    _check(metric, fld)
    ops = _ops(metric)
    if isinstance(fld, VectorField):
        data = _pick(metric, ops.div_vector_bar, ops.div_vector_phys,
                     fld.data)
        return ScalarField(metric.grid, data, metric.frame)
    if isinstance(fld, SymTensor2Field):
        data = _pick(metric, ops.div_tensor_bar, ops.div_tensor_phys,
                     fld.data)
        return OneFormField(metric.grid, data, metric.frame)
    raise DataError(f"divergence of a {fld.kind} field is not defined")


def divergence_volume(metric, fld):
    """Volume-form vector divergence, the independent cross-check
    realization of ``divergence`` (differs from it at O(h^2))."""
    _check(metric, fld)
    if not isinstance(fld, VectorField):
        raise DataError("divergence_volume expects a vector field")
    ops = _ops(metric)
    data = _pick(metric, ops.div_vector_volume_bar,
                 ops.div_vector_volume_phys, fld.data)
    return ScalarField(metric.grid, data, metric.frame)


# -- index gymnastics ---------------------------------------------------------

def sharp(metric, omega):
    """Raise the index of a one-form."""
    _check(metric, omega)
    if metric.grid.mode == RADIAL:
        data = metric.inv_bar[0] * omega.data
    else:
        data = np.einsum("ij...,j...->i...", sym_full(metric.inv_bar),
                         omega.data)
    if metric.frame == PHYSICAL:
        data = metric.rho.rho ** 2 * data
    return VectorField(metric.grid, data, metric.frame)


def flat(metric, x):
    """Lower the index of a vector."""
    _check(metric, x)
    if metric.grid.mode == RADIAL:
        data = metric.bar[0] * x.data
    else:
        data = np.einsum("ij...,j...->i...", sym_full(metric.bar), x.data)
    if metric.frame == PHYSICAL:
        data = _ops(metric)._inv_rho(metric.rho.rho, 2) * data
    return OneFormField(metric.grid, data, metric.frame)


def trace(metric, t):
    """tr_g T.  Frame factors: tr_g = rho^2 * (gbar contraction)."""
    _check(metric, t)
    data = _ops(metric).trace_bar_contraction(metric, t.data)
    if metric.frame == PHYSICAL:
        data = metric.rho.rho ** 2 * data
    return ScalarField(metric.grid, data, metric.frame)


def trace_free_part(metric, t):
    """T - (1/3) tr_g(T) g; identical in both frames and trace-free to
    rounding because the same discrete contraction is subtracted."""
    _check(metric, t)
    tr_bar = _ops(metric).trace_bar_contraction(metric, t.data)
    data = t.data - (tr_bar / 3.0) * metric.bar
    return SymTensor2Field(metric.grid, data, metric.frame)


def norm2(metric, fld):
    """Pointwise |u|_g^2 as a plain array (bounded for bounded data)."""
    _check(metric, fld)
    ops = _ops(metric)
    if isinstance(fld, ScalarField):
        return fld.data ** 2
    if isinstance(fld, VectorField):
        val = ops.vector_norm2_bar(metric, fld.data)
        k = -2
    elif isinstance(fld, SymTensor2Field):
        val = ops.tensor_norm2_bar(metric, fld.data)
        k = 4
    elif isinstance(fld, OneFormField):
        if metric.grid.mode == RADIAL:
            val = metric.inv_bar[0] * fld.data ** 2
        else:
            val = np.einsum("ij...,i...,j...->...", sym_full(metric.inv_bar),
                            fld.data, fld.data)
        k = 2
    else:
        raise DataError(f"norm2 of a {fld.kind} field is not defined")
    if metric.frame == PHYSICAL:
        if k < 0:
            val = val * ops._inv_rho(metric.rho.rho, -k)
        else:
            val = metric.rho.rho ** k * val
    return val


# -- conformal structure -------------------------------------------------------

def conformal_killing(metric, x):
    """D X = (1/2) Lie_X g - (1/3)(Div X) g; trace-free per node."""
    _check(metric, x)
    ops = _ops(metric)
    data = _pick(metric, ops.conformal_killing_bar, ops.conformal_killing_phys,
                 x.data)
    return SymTensor2Field(metric.grid, data, metric.frame)


def cross(metric, x, y):
    """(X x_g Y)^k = g^{kl} eps_{lij} X^i Y^j, right-handed orientation."""
    _check(metric, x, y)
    ops = _ops(metric)
    data = _pick(metric, ops.cross_bar, ops.cross_phys, x.data, y.data)
    return VectorField(metric.grid, data, metric.frame)


def conformal_rescale(metric, theta, exponent):
    """theta^exponent * g with caches rebuilt; theta must be positive."""
    th = theta.data if isinstance(theta, ScalarField) else np.asarray(theta)
    if np.any(th <= 0.0):
        raise DataError("conformal factor must be positive everywhere")
    return metric.rescaled(th, exponent)


def scalar_curvature(metric):
    ops = _ops(metric)
    data = _pick(metric, lambda m: ops.scalar_curvature_bar(m),
                 lambda m: ops.scalar_curvature_phys(m))
    return ScalarField(metric.grid, data, metric.frame)


def sectional_curvatures(metric):
    """Radial and tangential sectional curvatures (radial physical metrics)."""
    if metric.grid.mode != RADIAL or metric.frame != PHYSICAL:
        raise DataError("sectional curvatures implemented for radial "
                        "physical metrics")
    return rops.sectional_curvatures_phys(metric)


def vector_laplacian_apply(metric, w):
    """L W = D*D W through the weighted adjoint of the discrete D.

    Matches the solver assembly exactly; see shearfree.elliptic.
    """
    from . import elliptic
    _check(metric, w)
    return elliptic.apply_vector_laplacian(metric, w)
