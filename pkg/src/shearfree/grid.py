"""Discretized compact 3-ball, the fixed defining function, and stencils.

The computational domain is the closed unit ball.  Two discretizations are
supported:

* ``radial1d`` -- spherically symmetric fields reduced to profiles on a
  uniform grid r in [0, 1].  Smooth radial fields extend to even or odd
  functions of r, so centered stencils close at the origin with a parity
  ghost; at r = 1 one-sided second-order stencils are used.
* ``ball3d`` -- full Cartesian grid on the cube [-1, 1]^3.  Nodes with
  |x| > 1 are masked exterior; pointwise tensor algebra is evaluated on the
  whole cube (all background quantities are closed-form there) and norms or
  residual reports restrict to the ball.

The defining function is fixed once and for all to

    rho(x) = (1 - |x|^2) / 2,

which vanishes exactly on the unit sphere with |d rho| = 1 there (w.r.t. the
Euclidean background), and makes rho^{-2} * delta the Poincare ball metric.
All rho-derivatives are analytic: d rho = -x . dx and Hess rho = -delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import GridError

RADIAL = "radial1d"
BALL = "ball3d"

EVEN = 1
ODD = -1


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the closed unit ball.

    Attributes
    ----------
    mode : str
        ``radial1d`` or ``ball3d``.
    n : int
        Points per dimension.
    h : float
        Node spacing: 1/(n-1) radial, 2/(n-1) for the cube [-1,1]^3.
    r : ndarray
        Radii of the nodes; shape (n,) radial, (n,n,n) for ball3d.
    axis : ndarray
        1D axis coordinates (ball3d only; equals ``r`` in radial mode).
    """

    mode: str
    n: int
    h: float
    r: np.ndarray
    axis: np.ndarray
    interior: np.ndarray = field(repr=False)   # nodes with rho > 0
    boundary: np.ndarray = field(repr=False)   # nodes with |x| = 1 exactly
    exterior: np.ndarray = field(repr=False)   # ball3d: |x| > 1

    @property
    def shape(self):
        return self.r.shape

    def scalar_zeros(self):
        return np.zeros(self.shape)

    def __eq__(self, other):
        return (isinstance(other, Grid) and self.mode == other.mode
                and self.n == other.n)

    def __hash__(self):
        return hash((self.mode, self.n))


def make_grid(mode, n):
    """Build a Grid.  Rejects n < 3 and unknown modes."""
    if mode not in (RADIAL, BALL):
        raise GridError(f"unknown grid mode {mode!r}")
    if n < 3:
        raise GridError(f"need at least 3 points per dimension, got {n}")
    if mode == RADIAL:
        r = np.linspace(0.0, 1.0, n)
        h = 1.0 / (n - 1)
        interior = r < 1.0
        boundary = ~interior
        exterior = np.zeros(n, dtype=bool)
        return Grid(mode, n, h, r, r, interior, boundary, exterior)
    if n % 2 == 0:
        raise GridError("ball3d grids must have odd n so axis nodes exist")
    ax = np.linspace(-1.0, 1.0, n)
    h = 2.0 / (n - 1)
    x, y, z = np.meshgrid(ax, ax, ax, indexing="ij")
    r = np.sqrt(x * x + y * y + z * z)
    interior = r < 1.0 - 1e-12
    boundary = np.abs(r - 1.0) <= 1e-12
    exterior = r > 1.0 + 1e-12
    return Grid(mode, n, h, r, ax, interior, boundary, exterior)


def coords(grid):
    """Cartesian node coordinates of a ball3d grid, shape (3, n, n, n)."""
    ax = grid.axis
    return np.stack(np.meshgrid(ax, ax, ax, indexing="ij"))


# ---------------------------------------------------------------------------
# Radial stencils.
#
# d/dr and d^2/dr^2 on profiles, second order throughout.  ``parity`` states
# how the profile extends through r = 0 (EVEN for scalars, metric and
# symmetric-tensor profiles, ODD for vector profiles), which closes the
# centered stencil at the origin.  At r = 1 the one-sided stencils are exact
# on quadratics (d1) and cubics (d2).
# ---------------------------------------------------------------------------

def d1(f, h, parity):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = 0.0 if parity == EVEN else f[1] / h
    if f.shape[0] >= 3:
        out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return out


def d2(f, h, parity):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (h * h)
    if parity == EVEN:
        out[0] = 2.0 * (f[1] - f[0]) / (h * h)
    else:
        out[0] = 0.0
    if f.shape[0] >= 4:
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / (h * h)
    else:
        out[-1] = (f[-1] - 2.0 * f[-2] + f[-3]) / (h * h)
    return out


def d1_matrix(n, h, parity):
    """Sparse matrix realization of :func:`d1` (same stencils)."""
    m = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        m[i, i - 1] = -0.5 / h
        m[i, i + 1] = 0.5 / h
    if parity == ODD:
        m[0, 1] = 1.0 / h
    m[n - 1, n - 1] = 1.5 / h
    m[n - 1, n - 2] = -2.0 / h
    m[n - 1, n - 3] = 0.5 / h
    return m.tocsr()


def d2_matrix(n, h, parity):
    m = sp.lil_matrix((n, n))
    h2 = h * h
    for i in range(1, n - 1):
        m[i, i - 1] = 1.0 / h2
        m[i, i] = -2.0 / h2
        m[i, i + 1] = 1.0 / h2
    if parity == EVEN:
        m[0, 0] = -2.0 / h2
        m[0, 1] = 2.0 / h2
    if n >= 4:
        m[n - 1, n - 1] = 2.0 / h2
        m[n - 1, n - 2] = -5.0 / h2
        m[n - 1, n - 3] = 4.0 / h2
        m[n - 1, n - 4] = -1.0 / h2
    else:
        m[n - 1, n - 1] = 1.0 / h2
        m[n - 1, n - 2] = -2.0 / h2
        m[n - 1, n - 3] = 1.0 / h2
    return m.tocsr()


# ---------------------------------------------------------------------------
# Cartesian stencils (ball3d).  Centered in the interior of the cube,
# one-sided second order at the faces.
# ---------------------------------------------------------------------------

def dax(f, h, axis):
    """First derivative along one cube axis."""
    out = np.empty_like(f)
    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    om[1:-1] = (fm[2:] - fm[:-2]) / (2.0 * h)
    om[0] = (-3.0 * fm[0] + 4.0 * fm[1] - fm[2]) / (2.0 * h)
    om[-1] = (3.0 * fm[-1] - 4.0 * fm[-2] + fm[-3]) / (2.0 * h)
    return out


def dax2(f, h, axis):
    """Second derivative along one cube axis."""
    out = np.empty_like(f)
    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    om[1:-1] = (fm[2:] - 2.0 * fm[1:-1] + fm[:-2]) / (h * h)
    om[0] = (2.0 * fm[0] - 5.0 * fm[1] + 4.0 * fm[2] - fm[3]) / (h * h)
    om[-1] = (2.0 * fm[-1] - 5.0 * fm[-2] + 4.0 * fm[-3] - fm[-4]) / (h * h)
    return out


def dax_matrix(n, h):
    """Sparse 1D matrix matching :func:`dax` stencils (no parity)."""
    m = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        m[i, i - 1] = -0.5 / h
        m[i, i + 1] = 0.5 / h
    m[0, 0], m[0, 1], m[0, 2] = -1.5 / h, 2.0 / h, -0.5 / h
    m[n - 1, n - 1], m[n - 1, n - 2], m[n - 1, n - 3] = 1.5 / h, -2.0 / h, 0.5 / h
    return m.tocsr()


def dax2_matrix(n, h):
    """Sparse 1D matrix matching :func:`dax2` stencils."""
    m = sp.lil_matrix((n, n))
    h2 = h * h
    for i in range(1, n - 1):
        m[i, i - 1] = 1.0 / h2
        m[i, i] = -2.0 / h2
        m[i, i + 1] = 1.0 / h2
    m[0, 0], m[0, 1], m[0, 2], m[0, 3] = 2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2
    m[n - 1, n - 1], m[n - 1, n - 2] = 2.0 / h2, -5.0 / h2
    m[n - 1, n - 3], m[n - 1, n - 4] = 4.0 / h2, -1.0 / h2
    return m.tocsr()


def _kron3(m, n, axis):
    eye = sp.identity(n, format="csr")
    mats = [eye, eye, eye]
    mats[axis] = m
    return sp.kron(sp.kron(mats[0], mats[1]), mats[2], format="csr")


def cartesian_d1_matrices(grid):
    """The three sparse d/dx_i operators on flattened (n,n,n) arrays."""
    d = dax_matrix(grid.n, grid.h)
    return tuple(_kron3(d, grid.n, ax) for ax in range(3))


def cartesian_d2_matrices(grid):
    """The three sparse (d/dx_i)^2 operators (compact stencils)."""
    d = dax2_matrix(grid.n, grid.h)
    return tuple(_kron3(d, grid.n, ax) for ax in range(3))


# ---------------------------------------------------------------------------
# Defining function.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DefiningFunction:
    """Nodal values of rho = (1 - |x|^2)/2 and its analytic derivatives.

    ``grad`` holds the covariant components of d rho: the radial profile
    rho' = -r in radial mode (an odd profile), or the (3,n,n,n) array -x_i in
    ball3d.  ``hess`` is Hess_{Euclid} rho = -delta, stored as the profile
    pair (-1, -1) or the constant symmetric array.
    """

    grid: Grid
    rho: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @property
    def drho_dr(self):
        # rho'(r) = -r; meaningful in radial mode only.
        return -self.grid.r


def defining_function(grid):
    """rho, d rho, Hess rho on the grid, all closed-form."""
    if grid.mode == RADIAL:
        r = grid.r
        rho = 0.5 * (1.0 - r * r)
        grad = -r                      # covariant radial profile of d rho
        hess = np.vstack([-np.ones_like(r), -np.ones_like(r)])
    else:
        x = coords(grid)
        rho = 0.5 * (1.0 - grid.r ** 2)
        grad = -x
        ones = np.ones(grid.shape)
        zer = np.zeros(grid.shape)
        # symmetric storage order: xx, xy, xz, yy, yz, zz
        hess = np.stack([-ones, zer, zer, -ones, zer, -ones])
    return DefiningFunction(grid, rho, grad, hess)
