"""Closed-form free-data presets.

Every preset provides parameter-dependent analytic definitions of the
compactified metric, the trace-free tensor nu, the matter sources, a gauge
function, and (where applicable) a manufactured target.  Built-ins:

* ``hyperbolic``     -- lambda-bar = delta; the vacuum Minkowski
                        hyperboloid once pushed through the pipeline.
* ``perturbed``      -- lambda-bar = delta + eps rho^2 q with smooth q;
                        satisfies the weakly-asymptotically-hyperbolic
                        normalization with an O(rho^2) correction, so the
                        shear-free construction applies.
* ``weak-lipschitz`` -- lambda-bar = delta + eps rho q; the perturbation
                        decays only linearly in rho, the regularity class
                        of the weak existence mode.

Radial trace-free tensors are built as nu_rr = psi a, nu_tan = -psi b / 2
(exactly trace-free for any profile psi with psi(0) = 0).  Matter profiles
decay like rho^2 so every physical-frame norm in the constraint residuals
stays bounded to the boundary.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .fields import (COMPACTIFIED, PHYSICAL, Metric, ScalarField,
                     SymTensor2Field, VectorField)
from .grid import BALL, RADIAL, coords, defining_function, make_grid
from .pipeline import FreeData, MatterFields

SHEARFREE_CLASS = "shearfree"
WEAK_CLASS = "weak"

DEFAULTS = {
    "metric_eps": 0.1,
    "nu_amp": 0.1,
    "e_amp": 0.05,
    "b_amp": 0.05,
    "j_amp": 0.02,
    "zeta_amp": 0.02,
    "theta_amp": 0.25,
}


def _radial_metric(grid, name, eps):
    r = grid.r
    rho = 0.5 * (1.0 - r * r)
    if name == "hyperbolic":
        a = np.ones_like(r)
        b = np.ones_like(r)
    elif name == "perturbed":
        a = 1.0 + eps * rho ** 2 * np.exp(-r * r)
        b = 1.0 + eps * rho ** 2 * np.cos(r)
    elif name == "weak-lipschitz":
        a = 1.0 + eps * rho * np.exp(-r * r)
        b = 1.0 + eps * rho * np.cos(r)
    else:
        raise ConfigError(f"unknown metric preset {name!r}")
    return np.vstack([a, b])


def _ball_metric(grid, name, eps):
    one = np.ones(grid.shape)
    zer = np.zeros(grid.shape)
    if name == "hyperbolic":
        return np.stack([one, zer, zer, one, zer, one])
    x = coords(grid)
    rho = 0.5 * (1.0 - grid.r ** 2)
    decay = rho ** 2 if name == "perturbed" else rho
    if name not in ("perturbed", "weak-lipschitz"):
        raise ConfigError(f"unknown metric preset {name!r}")
    q11 = 0.3 + 0.2 * x[1]
    q12 = 0.1 * x[2]
    q13 = 0.15 * x[0]
    q22 = -0.2 + 0.1 * x[0]
    q23 = 0.05 * x[1]
    q33 = -0.1 + 0.1 * x[1]
    return np.stack([one + eps * decay * q11, eps * decay * q12,
                     eps * decay * q13, one + eps * decay * q22,
                     eps * decay * q23, one + eps * decay * q33])


def metric_preset(grid, name, eps=None):
    """Physical metric of the named preset on the grid."""
    eps = DEFAULTS["metric_eps"] if eps is None else eps
    rho = defining_function(grid)
    if grid.mode == RADIAL:
        bar = _radial_metric(grid, name, eps)
    else:
        bar = _ball_metric(grid, name, eps)
    return Metric(grid, bar, PHYSICAL, rho)


def nu_preset(grid, metric, amplitude, weak=False):
    """Trace-free symmetric tensor; decays like rho^2 unless weak."""
    if grid.mode == RADIAL:
        r = grid.r
        rho = 0.5 * (1.0 - r * r)
        psi = amplitude * r * r * (1.0 if weak else np.exp(-r * r) * rho)
        a, b = metric.bar
        data = np.vstack([psi * a, -0.5 * psi * b])
    else:
        data = np.zeros((6,) + grid.shape)
    return SymTensor2Field(grid, data, PHYSICAL)


def matter_preset(grid, amps):
    """(e, b, j, zeta) with the decay required by the residual bookkeeping."""
    e_amp, b_amp, j_amp, z_amp = amps
    if grid.mode == RADIAL:
        r = grid.r
        rho = 0.5 * (1.0 - r * r)
        e = e_amp * rho ** 2 * r * np.exp(-r * r)
        b = b_amp * rho ** 2 * r * np.cos(r)
        j = j_amp * rho ** 3 * r * np.exp(-r * r)
        zeta = z_amp * rho ** 2 * np.exp(-r * r)
    else:
        rho = 0.5 * (1.0 - grid.r ** 2)
        x = coords(grid)
        e = e_amp * rho ** 2 * x
        b = -b_amp * rho ** 2 * x
        j = j_amp * rho ** 3 * x
        zeta = z_amp * rho ** 2 * np.ones(grid.shape)
    return MatterFields(VectorField(grid, e, PHYSICAL),
                        VectorField(grid, b, PHYSICAL),
                        VectorField(grid, j, PHYSICAL),
                        ScalarField(grid, np.clip(zeta, 0.0, None),
                                    PHYSICAL))


def theta_preset(grid, amplitude=None, quadratic=False):
    """Gauge function theta = 1 + c rho (or 1 + c rho^2); theta|_bdry = 1."""
    c = DEFAULTS["theta_amp"] if amplitude is None else amplitude
    rho = 0.5 * (1.0 - grid.r ** 2)
    data = 1.0 + c * (rho ** 2 if quadratic else rho)
    return ScalarField(grid, data, PHYSICAL)


def free_data_preset(grid, metric_name, metric_eps=None, nu_amp=None,
                     matter_amps=None, vacuum=False):
    """Assemble a FreeData preset by name.

    ``vacuum=True`` zeroes nu and the matter regardless of amplitudes.
    """
    lam = metric_preset(grid, metric_name, metric_eps)
    weak = metric_name == "weak-lipschitz"
    if vacuum:
        nu = SymTensor2Field(grid, np.zeros(
            ((2,) if grid.mode == RADIAL else (6,)) + grid.shape), PHYSICAL)
        zero_v = np.zeros(grid.shape if grid.mode == RADIAL
                          else (3,) + grid.shape)
        ups = MatterFields(VectorField(grid, zero_v, PHYSICAL),
                           VectorField(grid, zero_v.copy(), PHYSICAL),
                           VectorField(grid, zero_v.copy(), PHYSICAL),
                           ScalarField(grid, np.zeros(grid.shape), PHYSICAL))
    else:
        nu = nu_preset(grid, lam, DEFAULTS["nu_amp"] if nu_amp is None
                       else nu_amp, weak=weak)
        amps = matter_amps or (DEFAULTS["e_amp"], DEFAULTS["b_amp"],
                               DEFAULTS["j_amp"], DEFAULTS["zeta_amp"])
        ups = matter_preset(grid, amps)
    return FreeData(lam, nu, ups)


PRESET_NAMES = ("hyperbolic", "perturbed", "weak-lipschitz")


def default_mode_for(name):
    return "weak" if name == "weak-lipschitz" else "shearfree"
