"""Field storage, frames, weights, norms, and the metric type.

Fields hold per-node components in the background Cartesian frame (ball3d)
or as radial profiles (radial1d):

* scalar  -- f(r)                         shape (n,)        / (n,n,n)
* vector  -- contravariant radial profile shape (n,)        / (3,n,n,n)
  (V^i = w(r) * x^i/r in radial mode; odd in r)
* symmetric 2-tensor -- covariant pair (t_rr, t_tan)  shape (2,n) /
  (6,n,n,n) with component order xx, xy, xz, yy, yz, zz.

A tensor of covariant rank p and contravariant rank q carries the weight
w = p - q.  Physical (g = rho^{-2} gbar) and compactified frames are related
on components by

    compactified components = rho^w * physical components,

which realizes |u|_h = rho^w |u|_hbar on norms.  Most of the pipeline works
with explicitly bounded fields (e.g. rho*sigma rather than sigma) and uses
the conversion only for diagnostics.

Metrics always store their compactified components ``bar`` (these stay
bounded up to the boundary); a physical-frame metric g = rho^{-2} gbar
exposes plain components on interior nodes only and signals FrameError at
the boundary, where they diverge.
"""

from __future__ import annotations

import numpy as np

from . import grid as gridmod
from .errors import DataError, FrameError
from .grid import BALL, EVEN, RADIAL, DefiningFunction, Grid, defining_function

COMPACTIFIED = "compactified"
PHYSICAL = "physical"

# symmetric-tensor component order and the (i, j) -> flat index map
SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
SYM_INDEX = {(i, j): k for k, (i, j) in enumerate(SYM_PAIRS)}
SYM_INDEX.update({(j, i): k for k, (i, j) in enumerate(SYM_PAIRS)})
# multiplicity of each stored component in full contractions
SYM_MULT = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])


def sym_full(t):
    """Expand (6, ...) symmetric storage into a full (3, 3, ...) array."""
    out = np.empty((3, 3) + t.shape[1:])
    for (i, j), k in SYM_INDEX.items():
        out[i, j] = t[k]
    return out


def sym_pack(full):
    """Pack a full (3, 3, ...) symmetric array into (6, ...) storage."""
    return np.stack([0.5 * (full[i, j] + full[j, i]) for i, j in SYM_PAIRS])


class Field:
    """Component array plus grid, frame tag, and tensor weight."""

    weight = 0
    kind = "scalar"

    def __init__(self, grid, data, frame=PHYSICAL):
        data = np.asarray(data, dtype=float)
        expected = self._expected_shape(grid)
        if data.shape != expected:
            raise DataError(
                f"{self.kind} field on {grid.mode} grid needs shape "
                f"{expected}, got {data.shape}")
        self.grid = grid
        self.data = data
        self.frame = frame

    def _expected_shape(self, grid):
        return grid.shape

    def copy(self):
        return type(self)(self.grid, self.data.copy(), self.frame)

    def convert(self, target, rho):
        """Frame conversion by the weight rule; identity for scalars.

        Going compactified -> physical divides by rho^w, which is singular at
        the boundary for positive-weight tensors; that direction raises
        FrameError when the grid contains boundary nodes and w > 0.
        """
        if target == self.frame:
            return self.copy()
        w = self.weight
        if w == 0:
            return type(self)(self.grid, self.data.copy(), target)
        factor = np.where(rho.rho > 0.0, rho.rho, 1.0) ** w
        if target == COMPACTIFIED:
            data = self.data * factor
            # rho = 0 nodes got factor 1 above; overwrite with the limit
            bmask = rho.rho == 0.0
            data[..., bmask] = np.inf if w < 0 else 0.0
            return type(self)(self.grid, data, target)
        if w > 0 and np.any(rho.rho == 0.0):
            raise FrameError(
                "physical-frame components of a weight-%d tensor diverge at "
                "boundary nodes" % w)
        return type(self)(self.grid, self.data / factor, target)

    def hbar_norm(self):
        """Pointwise Euclidean-background norm of the stored components."""
        raise NotImplementedError

    def __add__(self, other):
        self._check_mate(other)
        return type(self)(self.grid, self.data + other.data, self.frame)

    def __sub__(self, other):
        self._check_mate(other)
        return type(self)(self.grid, self.data - other.data, self.frame)

    def __mul__(self, c):
        return type(self)(self.grid, self.data * c, self.frame)

    __rmul__ = __mul__

    def _check_mate(self, other):
        if not isinstance(other, type(self)) or other.grid != self.grid:
            raise DataError("field algebra requires matching kind and grid")
        if other.frame != self.frame:
            raise FrameError("field algebra requires matching frames")


class ScalarField(Field):
    weight = 0
    kind = "scalar"

    def hbar_norm(self):
        return np.abs(self.data)


class VectorField(Field):
    weight = -1
    kind = "vector"

    def _expected_shape(self, grid):
        return grid.shape if grid.mode == RADIAL else (3,) + grid.shape

    def hbar_norm(self):
        if self.grid.mode == RADIAL:
            return np.abs(self.data)
        return np.sqrt(np.sum(self.data ** 2, axis=0))


class OneFormField(Field):
    """Covariant counterpart of VectorField (weight +1).

    Same storage as VectorField: radial profile of the d r component, or
    (3, n, n, n) Cartesian components.  Produced by tensor divergences and
    by ``flat``; consumed by ``sharp``.
    """

    weight = 1
    kind = "oneform"

    def _expected_shape(self, grid):
        return grid.shape if grid.mode == RADIAL else (3,) + grid.shape

    def hbar_norm(self):
        if self.grid.mode == RADIAL:
            return np.abs(self.data)
        return np.sqrt(np.sum(self.data ** 2, axis=0))


class SymTensor2Field(Field):
    weight = 2
    kind = "symtensor2"

    def _expected_shape(self, grid):
        return (2,) + grid.shape if grid.mode == RADIAL else (6,) + grid.shape

    def hbar_norm(self):
        if self.grid.mode == RADIAL:
            t_rr, t_tan = self.data
            return np.sqrt(t_rr ** 2 + 2.0 * t_tan ** 2)
        return np.sqrt(np.einsum("k...,k->...", self.data ** 2, SYM_MULT))


def weighted_sup_norm(fld, delta, rho=None):
    """Discrete C^0_delta norm: max over interior of rho^{w-delta} |u|_hbar.

    ``u`` is measured through its physical components, so for a field stored
    in the compactified frame the stored data already carries rho^w.
    """
    if rho is None:
        rho = defining_function(fld.grid)
    mask = fld.grid.interior
    vals = fld.hbar_norm()[mask]
    p = rho.rho[mask]
    w = fld.weight
    expo = (w - delta) if fld.frame == PHYSICAL else (-delta)
    return float(np.max(p ** expo * vals)) if vals.size else 0.0


# ---------------------------------------------------------------------------
# Metrics.
# ---------------------------------------------------------------------------

class Metric:
    """Riemannian 3-metric with cached inverse and first derivatives.

    ``bar`` always holds the compactified components (radial profile pair
    (a, b) of shape (2, n), or (6, n, n, n) Cartesian components).  A metric
    tagged ``physical`` represents g = rho^{-2} gbar; operators consume the
    bounded ``bar`` data together with analytic rho factors.
    """

    def __init__(self, grid, bar, frame, rho=None, check=True):
        bar = np.asarray(bar, dtype=float)
        expected = (2,) + grid.shape if grid.mode == RADIAL else (6,) + grid.shape
        if bar.shape != expected:
            raise DataError(f"metric components need shape {expected}")
        self.grid = grid
        self.bar = bar
        self.frame = frame
        self.rho = rho if rho is not None else defining_function(grid)
        self._caches = {}
        if check:
            self._validate()

    # -- cached geometry ---------------------------------------------------

    def _cache(self, key, builder):
        if key not in self._caches:
            self._caches[key] = builder()
        return self._caches[key]

    @property
    def inv_bar(self):
        """Inverse of the compactified components."""
        return self._cache("inv", self._build_inverse)

    @property
    def dbar(self):
        """First derivatives of the compactified components.

        Radial: (2, n) profile pair (a', b').  Ball3d: (3, 6, n, n, n) with
        leading index the derivative direction.
        """
        return self._cache("dbar", self._build_dbar)

    @property
    def sqrt_det_bar(self):
        return self._cache("J", self._build_sqrtdet)

    @property
    def christoffel_bar(self):
        """Connection of gbar relative to the flat background.

        With a Cartesian/flat background the difference tensor D[gbar] equals
        the Christoffel symbols of gbar.  Radial mode returns the profile
        triple (G111, G122, G212) of the on-axis symbols; ball3d returns a
        (3, 6, n, n, n) array Gamma^k_{(ij)}.
        """
        return self._cache("gamma", self._build_christoffel)

    def _build_inverse(self):
        if self.grid.mode == RADIAL:
            return 1.0 / self.bar
        full = sym_full(self.bar)
        a, b, c = full[0, 0], full[0, 1], full[0, 2]
        d, e, f = full[1, 1], full[1, 2], full[2, 2]
        ca = d * f - e * e
        cb = c * e - b * f
        cc = b * e - c * d
        det = a * ca + b * cb + c * cc
        inv = np.stack([ca, cb, cc,
                        a * f - c * c, b * c - a * e,
                        a * d - b * b]) / det
        return inv

    def _build_dbar(self):
        g = self.grid
        if g.mode == RADIAL:
            return np.vstack([gridmod.d1(self.bar[0], g.h, EVEN),
                              gridmod.d1(self.bar[1], g.h, EVEN)])
        return np.stack([
            np.stack([gridmod.dax(self.bar[k], g.h, ax) for k in range(6)])
            for ax in range(3)])

    def _build_sqrtdet(self):
        if self.grid.mode == RADIAL:
            a, b = self.bar
            return np.sqrt(a * b * b)
        full = sym_full(self.bar)
        det = (full[0, 0] * (full[1, 1] * full[2, 2] - full[1, 2] ** 2)
               - full[0, 1] * (full[0, 1] * full[2, 2] - full[1, 2] * full[0, 2])
               + full[0, 2] * (full[0, 1] * full[1, 2] - full[1, 1] * full[0, 2]))
        return np.sqrt(det)

    def _build_christoffel(self):
        g = self.grid
        if g.mode == RADIAL:
            a, b = self.bar
            da, db = self.dbar
            diff = a - b
            over = np.zeros_like(diff)
            over[1:] = diff[1:] / g.r[1:]          # (a-b)/r, -> 0 at r = 0
            g111 = da / (2.0 * a)
            g122 = over / a - db / (2.0 * a)
            g212 = db / (2.0 * b)
            return g111, g122, g212
        inv = sym_full(self.inv_bar)
        dg = np.stack([sym_full(self.dbar[ax]) for ax in range(3)])
        # V_{m i j} = d_i g_{m j} + d_j g_{m i} - d_m g_{i j}
        v = (np.einsum("imj...->mij...", dg) + np.einsum("jmi...->mij...", dg)
             - np.einsum("mij...->mij...", dg))
        gamma_full = 0.5 * np.einsum("km...,mij...->kij...", inv, v)
        return np.stack([sym_pack(gamma_full[k]) for k in range(3)])

    # -- contracts -----------------------------------------------------------

    def plain(self, interior_only=False):
        """Plain (physical-frame) components.

        For a physical metric these are rho^{-2} * bar and diverge at the
        boundary; asking for them there raises FrameError.
        """
        if self.frame == COMPACTIFIED:
            return self.bar
        p = self.rho.rho
        if np.any(p == 0.0) and not interior_only:
            raise FrameError("physical metric components diverge at rho = 0; "
                             "request interior_only=True")
        safe = np.where(p > 0.0, p, 1.0)
        out = self.bar / safe ** 2
        if interior_only:
            out = np.where(p > 0.0, out, np.nan)
        return out

    def rescaled(self, factor, exponent=1):
        """New metric with components scaled by factor**exponent."""
        return Metric(self.grid, self.bar * factor ** exponent, self.frame,
                      self.rho, check=False)

    def with_frame(self, frame):
        return Metric(self.grid, self.bar.copy(), frame, self.rho, check=False)

    # -- validation ----------------------------------------------------------

    def _validate(self):
        if self.grid.mode == RADIAL:
            a, b = self.bar
            if np.any(a <= 0.0) or np.any(b <= 0.0):
                raise DataError("metric profiles must be positive definite")
        else:
            full = sym_full(self.bar)
            m1 = full[0, 0]
            m2 = full[0, 0] * full[1, 1] - full[0, 1] ** 2
            if np.any(m1 <= 0.0) or np.any(m2 <= 0.0) or \
                    np.any(self.sqrt_det_bar ** 2 <= 0.0):
                raise DataError("metric components must be positive definite")
        err = self.inverse_identity_error()
        if err > 1e-13:
            raise DataError(f"metric inverse cache off by {err:.2e}")
        bnd = self.boundary_normalization_error()
        if bnd > 1e-10:
            raise DataError(
                f"|d rho|_gbar differs from 1 at the boundary by {bnd:.2e}; "
                "metric is not (weakly) asymptotically hyperbolic")

    def inverse_identity_error(self):
        if self.grid.mode == RADIAL:
            return float(np.max(np.abs(self.bar * self.inv_bar - 1.0)))
        gg = np.einsum("ik...,kj...->ij...", sym_full(self.bar),
                       sym_full(self.inv_bar))
        eye = np.zeros_like(gg)
        for i in range(3):
            eye[i, i] = 1.0
        return float(np.max(np.abs(gg - eye)))

    def boundary_normalization_error(self):
        """max over boundary nodes of | |d rho|^2_gbar - 1 |."""
        mask = self.grid.boundary
        if not np.any(mask):
            return 0.0
        q = self.drho_norm2_bar()
        return float(np.max(np.abs(q[mask] - 1.0)))

    def drho_norm2_bar(self):
        """|d rho|^2 w.r.t. the compactified components, everywhere."""
        dr = self.rho.grad
        if self.grid.mode == RADIAL:
            return dr * dr * self.inv_bar[0]
        return np.einsum("ij...,i...,j...->...", sym_full(self.inv_bar),
                         dr, dr)


def background_structures(grid):
    """The fixed background pair (hbar, h) = (Euclidean, Poincare ball)."""
    rho = defining_function(grid)
    if grid.mode == RADIAL:
        bar = np.ones((2, grid.n))
    else:
        one = np.ones(grid.shape)
        zer = np.zeros(grid.shape)
        bar = np.stack([one, zer, zer, one, zer, one])
    hbar = Metric(grid, bar, COMPACTIFIED, rho)
    h = Metric(grid, bar.copy(), PHYSICAL, rho)
    return hbar, h
