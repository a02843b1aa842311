r"""Finite-difference solution of the quadrant Helmholtz problem.

The equation :math:`\tfrac12\Delta U - \beta(x,y)U + 1 = 0` with
:math:`\beta = \beta_1` on :math:`\{xy>0\}` and :math:`\beta_2` on
:math:`\{xy<0\}` is discretised with the five-point Laplacian on the square
:math:`[-L, L]^2`.  Multiplying by :math:`2h^2` gives the symmetric positive
definite system

.. math::
   (4 + 2h^2\beta_{ij})U_{ij} - \sum_{\text{nbrs}} U = 2h^2,

solved by preconditioned conjugate gradients with Dirichlet data on the outer
ring of nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from .errors import ConvergenceError, DomainError, PreconditionError
from .params import Params

__all__ = ["BoundaryKind", "GridSpec", "Field", "solve", "u_origin", "symmetry_residual",
           "axis_profile", "AxisProfile", "richardson_origin", "RichardsonEstimate",
           "beta_field", "halfplane_profile"]


class BoundaryKind(str, Enum):
    CONSTANT_INV_BETA = "constant"
    HALFPLANE_PROFILE = "halfplane"

    @classmethod
    def parse(cls, v):
        if isinstance(v, cls):
            return v
        for m in cls:
            if str(v).lower() in (m.value, m.name.lower()):
                return m
        raise DomainError(f"unknown boundary kind {v!r}")


@dataclass(frozen=True)
class GridSpec:
    L: float = 8.0
    n: int = 513

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("L must be positive")
        if int(self.n) != self.n or self.n < 5 or self.n % 2 == 0:
            raise DomainError("n must be an odd integer >= 5")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def coords(self) -> np.ndarray:
        # symmetric by construction so that mirrored nodes are bit-identical
        k = np.arange(self.n) - (self.n - 1) // 2
        return k * self.h

    @property
    def center(self) -> int:
        return (self.n - 1) // 2

    def refined(self):
        return GridSpec(self.L, 2 * self.n - 1)


@dataclass(frozen=True)
class Field:
    grid: GridSpec
    values: np.ndarray = field(repr=False)
    params: Params
    boundary_kind: BoundaryKind
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def beta_field(params: Params, grid: GridSpec) -> np.ndarray:
    """beta on the nodes: beta1 where xy > 0, beta2 where xy < 0, the mean on the axes."""
    k = np.arange(grid.n) - grid.center
    s = np.sign(k)[:, None] * np.sign(k)[None, :]
    b = np.full((grid.n, grid.n), 0.5 * (params.beta1 + params.beta2))
    b[s > 0] = params.beta1
    b[s < 0] = params.beta2
    return b


def halfplane_profile(params: Params, t):
    r"""Solution of :math:`\tfrac12u'' - \beta u + 1 = 0` on the line with beta1 for t > 0 and beta2 for t < 0.

    It is :math:`1/\beta_j + A_j e^{-k_j|t|}` with :math:`k_j=\sqrt{2\beta_j}` and the
    constants fixed by continuity of :math:`u` and :math:`u'` at 0.
    """
    t = np.asarray(t, dtype=float)
    b1, b2 = params.beta1, params.beta2
    k1, k2 = math.sqrt(2 * b1), math.sqrt(2 * b2)
    jump = 1.0 / b2 - 1.0 / b1
    a1 = jump * k2 / (k1 + k2)
    a2 = -jump * k1 / (k1 + k2)
    out = np.where(t > 0, 1.0 / b1 + a1 * np.exp(-k1 * np.abs(t)),
                   1.0 / b2 + a2 * np.exp(-k2 * np.abs(t)))
    return np.where(t == 0, 1.0 / b1 + a1, out)


def _boundary_values(params, grid, kind, beta):
    x = grid.coords
    g = 1.0 / beta
    if kind is BoundaryKind.HALFPLANE_PROFILE:
        # along each side the far coordinate fixes the sign; the profile
        # varies with the near one (positive side of x is quadrant-1 for y > 0)
        top = halfplane_profile(params, x)          # y = +L: sign(x) picks the quadrant
        g = g.copy()
        g[:, -1] = top
        g[:, 0] = top[::-1]
        g[-1, :] = top
        g[0, :] = top[::-1]
    return g


def _apply_operator(u_int, diag):
    out = diag * u_int
    out[1:, :] -= u_int[:-1, :]
    out[:-1, :] -= u_int[1:, :]
    out[:, 1:] -= u_int[:, :-1]
    out[:, :-1] -= u_int[:, 1:]
    return out


def solve(params: Params, grid: GridSpec = GridSpec(), tol: float = 1e-10, *,
          boundary_kind=BoundaryKind.CONSTANT_INV_BETA, maxiter: int | None = None,
          beta_override: np.ndarray | None = None) -> Field:
    """Solve the discrete problem; the relative residual is driven below ``tol``.

    ``beta_override`` replaces the coefficient array (used to test that the
    symmetry diagnostics detect asymmetric coefficients).
    """
    if not isinstance(params, Params):
        raise DomainError("params must be a Params instance")
    if not tol > 0:
        raise DomainError("tol must be positive")
    if grid.L < 6.0 / math.sqrt(2.0 * params.beta2):
        raise PreconditionError(
            f"L={grid.L} is shorter than 6 decay lengths 6/sqrt(2*beta2)="
            f"{6.0 / math.sqrt(2.0 * params.beta2):.3g}")
    kind = BoundaryKind.parse(boundary_kind)
    beta = beta_field(params, grid) if beta_override is None else np.asarray(beta_override, float)
    h = grid.h
    g = _boundary_values(params, grid, kind, beta)
    m = grid.n - 2
    diag = 4.0 + 2.0 * h * h * beta[1:-1, 1:-1]
    rhs = np.full((m, m), 2.0 * h * h)
    rhs[0, :] += g[0, 1:-1]
    rhs[-1, :] += g[-1, 1:-1]
    rhs[:, 0] += g[1:-1, 0]
    rhs[:, -1] += g[1:-1, -1]

    A = LinearOperator((m * m, m * m), dtype=float,
                       matvec=lambda v: _apply_operator(v.reshape(m, m), diag).ravel())
    M = sp.diags(1.0 / diag.ravel())
    x0 = (1.0 / beta[1:-1, 1:-1]).ravel()
    history = []
    count = [0]

    def cb(xk):
        # residual sampled every 25 iterations for diagnostics
        count[0] += 1
        if count[0] % 25 == 0:
            history.append(float(np.linalg.norm(rhs.ravel() - A @ xk)))

    maxiter = maxiter or 20 * grid.n
    b = rhs.ravel()
    sol, info = cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=M, callback=cb)
    res = float(np.linalg.norm(b - A @ sol) / np.linalg.norm(b))
    if info != 0 or not res <= 10 * tol:
        raise ConvergenceError(f"CG did not converge (info={info}, residual={res:.3g})",
                               best=sol, history=history)
    u = g.copy()
    u[1:-1, 1:-1] = sol.reshape(m, m)
    lo, hi = sorted((1.0 / params.beta1, 1.0 / params.beta2))
    if beta_override is None and (u.min() < lo - 1e-8 or u.max() > hi + 1e-8):
        raise ConvergenceError(f"solution leaves [{lo}, {hi}]: range [{u.min()}, {u.max()}]",
                               best=u)
    return Field(grid, u, params, kind, residual=res, iterations=count[0])


def u_origin(field: Field) -> float:
    c = field.grid.center
    return float(field.values[c, c])


def symmetry_residual(field: Field) -> float:
    """max |U(x,y) - U(y,x)| and |U(x,y) - U(-x,-y)| over the grid."""
    u = field.values
    return float(max(np.abs(u - u.T).max(), np.abs(u - u[::-1, ::-1]).max()))


@dataclass(frozen=True)
class AxisProfile:
    y: np.ndarray
    values: np.ndarray
    derivative_jump: np.ndarray

    def max_jump(self, y_max: float | None = None) -> float:
        """Largest jump at axis nodes with y <= y_max.

        With constant boundary data the data itself jumps where the axis meets
        the boundary, so the last node row carries an O(1/h) jump; pass
        ``y_max < L`` to look at the interior.
        """
        j = np.abs(self.derivative_jump)
        if y_max is not None:
            j = j[self.y[:-1] <= y_max]
        return float(j.max())


def axis_profile(field: Field) -> AxisProfile:
    """U(0, y) for y >= 0 and the jump of one-sided x-differences across the positive y-axis.

    The jump is ``(U(h,y) - U(0,y))/h - (U(0,y) - U(-h,y))/h`` at interior
    nodes of the axis.
    """
    c = field.grid.center
    h = field.grid.h
    u = field.values
    # first index is x, second is y
    col = u[c, c:]
    right = (u[c + 1, c:-1] - u[c, c:-1]) / h
    left = (u[c, c:-1] - u[c - 1, c:-1]) / h
    return AxisProfile(field.grid.coords[c:].copy(), col.copy(), right - left)


@dataclass(frozen=True)
class RichardsonEstimate:
    value: float
    error_estimate: float
    order: float
    values: tuple
    n_values: tuple


def richardson_origin(params: Params, L: float = 8.0, n0: int = 257, levels: int = 3,
                      tol: float = 1e-11, boundary_kind=BoundaryKind.CONSTANT_INV_BETA):
    """U(0,0) on successively halved grids with an extrapolated value.

    With three or more levels the observed order ``p`` is taken from the last
    two differences; with two levels ``p = 2`` is assumed.  The error
    estimate is the size of the extrapolation correction.
    """
    if levels < 2:
        raise PreconditionError("need at least two grid levels")
    grid = GridSpec(L, n0)
    vals, ns = [], []
    for _ in range(levels):
        vals.append(u_origin(solve(params, grid, tol, boundary_kind=boundary_kind)))
        ns.append(grid.n)
        grid = grid.refined()
    d = np.diff(vals)
    if levels >= 3 and d[-1] != 0 and d[-2] != 0 and abs(d[-2] / d[-1]) > 1.0:
        p = math.log2(abs(d[-2] / d[-1]))
    else:
        p = 2.0
    corr = d[-1] / (2.0 ** p - 1.0) if d.size else 0.0
    return RichardsonEstimate(float(vals[-1] + corr), float(abs(corr)), float(p), tuple(vals),
                              tuple(ns))
