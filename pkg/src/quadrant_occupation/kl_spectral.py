r"""Spectral (Kontorovich-Lebedev) representation of the quadrant problem.

In the first quadrant the solution is written as

.. math::
   V(r,\theta) = \frac{1}{\beta_1} + \int_0^\infty f_1(\nu)K_{i\nu}(r\sqrt{2\beta_1})
       \big[\sinh(\nu(\pi/2-\theta)) + \sinh(\nu\theta)\big]\,d\nu,

and similarly in the second quadrant with :math:`\beta_2` and angles measured
from :math:`\pi/2`.  The densities are

.. math::
   f_j(\nu) = -\frac{2}{\pi\beta_j}\coth(\nu\pi/2) + \int_0^\infty\sin(\nu z)\,\mu_j(dz)

for signed measures :math:`\mu_j` related by the change of variables
:math:`\sqrt{2\beta_1}\sinh z = \sqrt{2\beta_2}\sinh\varphi(z)`.

Measures are represented by atoms, by Gaussian bumps on ``[0, support_bound]``
(used for fitting), by an explicit density, or as the image of another
measure under a map.  Integrals against a measure are taken on panels whose
width follows the local oscillation rate of the integrand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, IllConditionedError, PreconditionError
from .params import Params
from .special_functions import (HALF_PI, absolute_kl_integral, regularized_kl_integral,
                                tanh_transform)

__all__ = ["AtomicMeasure", "BumpMeasure", "DensityMeasure", "PushforwardMeasure",
           "measure_from_document", "phi", "phi_inverse", "phi_jacobian", "pushforward",
           "pushforward_inverse", "SpectralSolution", "spectral_density", "v_eval",
           "continuity_residual", "pasting_residual", "pasting_sides", "FitReport",
           "fit_measure", "default_r_grid", "u_origin_estimate", "OriginEstimate",
           "zero_lambda_density"]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
DEFAULT_SUPPORT = 10.0
DEFAULT_SIGMA = 0.5
# radians of oscillation per 16-point panel
_RAD_PER_PANEL = 6.0
_MAX_PANEL = 0.25


def _panel_nodes(lo: float, hi: float, rate: Callable | None):
    """Composite Gauss-Legendre rule on [lo, hi] with panels of <= 6/rate(z) width."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    zs = np.linspace(lo, hi, 4001)
    dens = np.full(zs.shape, 1.0 / _MAX_PANEL)
    if rate is not None:
        dens = np.maximum(dens, np.asarray(rate(zs), dtype=float) / _RAD_PER_PANEL)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(zs))])
    n = max(1, int(math.ceil(cum[-1] * 1.1)))
    edges = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, zs)
    edges[0], edges[-1] = lo, hi
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * _GL_X).ravel(), (half * _GL_W).ravel()


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomicMeasure:
    """Finite signed measure sum_k w_k delta_{z_k}."""

    locations: np.ndarray
    weights: np.ndarray
    support_bound: float = DEFAULT_SUPPORT

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.locations, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if loc.shape != w.shape or loc.ndim != 1:
            raise DomainError("locations and weights must be 1-d and of equal length")
        if not self.support_bound > 0:
            raise DomainError("support_bound must be positive")
        if loc.size and (loc.min() < 0 or loc.max() > self.support_bound):
            raise DomainError("atom locations must lie in [0, support_bound]")
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        loc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    kind = "atoms"

    def integrate(self, g, rate=None):
        if not self.locations.size:
            return 0.0
        return np.asarray(g(self.locations)) @ self.weights

    def total_variation(self):
        return float(np.abs(self.weights).sum())

    def scaled(self, c):
        return AtomicMeasure(self.locations, c * self.weights, self.support_bound)

    def to_document(self):
        return {"kind": "atoms",
                "entries": [[float(a), float(b)] for a, b in zip(self.locations, self.weights)],
                "support_bound": float(self.support_bound)}


@dataclass(frozen=True)
class BumpMeasure:
    r"""Signed measure with density :math:`\sum_k c_k e^{-(z-z_k)^2/(2\sigma^2)}` on [0, B].

    The default centres :math:`z_k = Bk/n`, ``k = 0..n-1``, make the family
    for ``n`` a subset of the family for ``2n``.
    """

    centers: np.ndarray
    coefficients: np.ndarray
    sigma: float = DEFAULT_SIGMA
    support_bound: float = DEFAULT_SUPPORT

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.centers, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.coefficients, dtype=float)).copy()
        if c.shape != w.shape or c.ndim != 1:
            raise DomainError("centers and coefficients must be 1-d and of equal length")
        if not (self.sigma > 0 and self.support_bound > 0):
            raise DomainError("sigma and support_bound must be positive")
        if c.size and (c.min() < 0 or c.max() > self.support_bound):
            raise DomainError("bump centres must lie in [0, support_bound]")
        c.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "coefficients", w)

    kind = "basis"

    @classmethod
    def nested(cls, n: int, coefficients=None, sigma=DEFAULT_SIGMA, support_bound=DEFAULT_SUPPORT):
        centers = support_bound * np.arange(n) / n
        coef = np.zeros(n) if coefficients is None else coefficients
        return cls(centers, coef, sigma, support_bound)

    def basis(self, z):
        """Bump values, shape (n_bumps, len(z))."""
        z = np.asarray(z, dtype=float)
        return np.exp(-0.5 * ((z[None, :] - self.centers[:, None]) / self.sigma) ** 2)

    def density(self, z):
        return self.coefficients @ self.basis(z)

    def basis_integrals(self, g, rate=None):
        """Integral of ``g`` against each bump (shape (n_bumps,) + g's leading shape)."""
        z, w = _panel_nodes(0.0, self.support_bound, rate)
        vals = np.asarray(g(z)) * w
        return np.tensordot(self.basis(z), vals, axes=([1], [-1]))

    def integrate(self, g, rate=None):
        return np.tensordot(self.coefficients, self.basis_integrals(g, rate), axes=1)

    def total_variation(self):
        z, w = _panel_nodes(0.0, self.support_bound, None)
        return float(np.abs(self.density(z)) @ w)

    def scaled(self, c):
        return BumpMeasure(self.centers, c * self.coefficients, self.sigma, self.support_bound)

    def to_document(self):
        return {"kind": "basis",
                "entries": [[float(a), float(b)] for a, b in zip(self.centers, self.coefficients)],
                "sigma": float(self.sigma), "support_bound": float(self.support_bound)}


@dataclass(frozen=True)
class DensityMeasure:
    """Measure with a callable density on [0, upper]; ``upper`` may exceed any bump support."""

    density: Callable
    upper: float
    kind = "density"

    @property
    def support_bound(self):
        return self.upper

    def _effective_upper(self, g):
        # integrands against an unbounded density must decay; stop where they vanish
        zs = np.linspace(0.0, self.upper, 6001)[1:]
        mag = np.abs(np.asarray(g(zs)) * self.density(zs)).reshape(-1, zs.size).max(axis=0)
        big = np.flatnonzero(mag > 1e-18 * mag.max()) if mag.max() > 0 else np.array([0])
        return min(self.upper, float(zs[big[-1]]) + 0.5)

    def integrate(self, g, rate=None):
        z, w = _panel_nodes(0.0, self._effective_upper(g), rate)
        return np.asarray(g(z)) @ (w * self.density(z))

    def total_variation(self):
        z, w = _panel_nodes(0.0, self.upper, None)
        return float(np.abs(self.density(z)) @ w)


@dataclass(frozen=True)
class PushforwardMeasure:
    r"""Image of ``base`` under an increasing map: :math:`\int g\,d\mu = \int g(m(u))\,\mathrm{base}(du)`.

    ``jacobian`` is :math:`m'` and is used only to translate oscillation rates.
    """

    base: object
    forward: Callable
    jacobian: Callable
    kind = "pushforward"

    @property
    def support_bound(self):
        return float(self.forward(np.array([self.base.support_bound]))[0])

    def integrate(self, g, rate=None):
        r = None if rate is None else (lambda u: rate(self.forward(u)) * self.jacobian(u))
        return self.base.integrate(lambda u: g(self.forward(u)), r)

    def total_variation(self):
        return self.base.total_variation()


def measure_from_document(doc):
    kind = doc.get("kind")
    entries = np.asarray(doc.get("entries", []), dtype=float).reshape(-1, 2)
    bound = float(doc.get("support_bound", DEFAULT_SUPPORT))
    if kind == "atoms":
        return AtomicMeasure(entries[:, 0], entries[:, 1], bound)
    if kind == "basis":
        return BumpMeasure(entries[:, 0], entries[:, 1], float(doc.get("sigma", DEFAULT_SIGMA)), bound)
    raise DomainError(f"unknown measure kind {kind!r}")


# ---------------------------------------------------------------------------
# change of variables
# ---------------------------------------------------------------------------

def _check_params(params):
    if not isinstance(params, Params):
        raise DomainError("params must be a Params instance")
    if not params.beta2 > 0:
        raise DomainError("beta2 must be positive")


def _asinh_scaled(k, z):
    """asinh(k sinh z) for z >= 0 without overflow (k = sqrt of the beta ratio)."""
    z = np.asarray(z, dtype=float)
    flat = np.atleast_1d(z)
    out = np.arcsinh(k * np.sinh(np.minimum(flat, 20.0)))
    big = flat > 20.0
    if np.any(big):
        zb = flat[big]
        logx = math.log(k) + zb + np.log1p(-np.exp(-2.0 * zb)) - math.log(2.0)
        out[big] = logx + np.log1p(np.sqrt(1.0 + np.exp(-2.0 * logx)))
    return out.reshape(z.shape)


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def phi(z, params: Params):
    r"""The map :math:`\varphi` with :math:`\sqrt{\beta_1}\sinh z = \sqrt{\beta_2}\sinh\varphi(z)`."""
    _check_params(params)
    arr = np.asarray(z, dtype=float)
    if np.any(~(arr >= 0)):
        raise DomainError("phi needs z >= 0")
    if params.beta1 == params.beta2:
        return _scalar_or_array(arr.copy(), z)
    return _scalar_or_array(_asinh_scaled(math.sqrt(params.ratio), arr), z)


def phi_inverse(zp, params: Params):
    """Inverse of :func:`phi`."""
    _check_params(params)
    arr = np.asarray(zp, dtype=float)
    if np.any(~(arr >= 0)):
        raise DomainError("phi_inverse needs zp >= 0")
    if params.beta1 == params.beta2:
        return _scalar_or_array(arr.copy(), zp)
    return _scalar_or_array(_asinh_scaled(math.sqrt(1.0 / params.ratio), arr), zp)


def _jac(k, z):
    # k cosh z / sqrt(k^2 sinh^2 z + 1), written to avoid overflow
    z = np.asarray(z, dtype=float)
    t = np.tanh(z)
    sech = 1.0 / np.cosh(np.minimum(z, 350.0))
    return k / np.sqrt(k * k * t * t + sech * sech)


def phi_jacobian(z, params: Params):
    r""":math:`\varphi'(z) = k\cosh z/\sqrt{k^2\sinh^2 z + 1}` with :math:`k^2 = \beta_1/\beta_2`."""
    _check_params(params)
    arr = np.asarray(z, dtype=float)
    if np.any(~(arr >= 0)):
        raise DomainError("phi_jacobian needs z >= 0")
    if params.beta1 == params.beta2:
        return _scalar_or_array(np.ones_like(arr), z)
    return _scalar_or_array(_jac(math.sqrt(params.ratio), arr), z)


def _push(measure, fwd, jac):
    if isinstance(measure, AtomicMeasure):
        loc = fwd(measure.locations)
        return AtomicMeasure(loc, measure.weights, max(float(fwd(np.array([measure.support_bound]))[0]),
                                                       float(loc.max()) if loc.size else 0.0))
    return PushforwardMeasure(measure, fwd, jac)


def pushforward(mu2, params: Params):
    r"""Return :math:`\mu_1` with :math:`\mu_1(dz) = \mu_2(d\varphi(z))`.

    An atom of :math:`\mu_2` at ``u`` becomes an atom of :math:`\mu_1` at
    :math:`\varphi^{-1}(u)` with the same weight.
    """
    _check_params(params)
    if params.beta1 == params.beta2:
        return mu2
    k = math.sqrt(1.0 / params.ratio)
    return _push(mu2, lambda u: _asinh_scaled(k, u), lambda u: _jac(k, u))


def pushforward_inverse(mu1, params: Params):
    r"""Return :math:`\mu_2`, the image of :math:`\mu_1` under :math:`\varphi`."""
    _check_params(params)
    if params.beta1 == params.beta2:
        return mu1
    k = math.sqrt(params.ratio)
    return _push(mu1, lambda z: _asinh_scaled(k, z), lambda z: _jac(k, z))


# ---------------------------------------------------------------------------
# spectral solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralSolution:
    """Parameters and the measure of the first quadrant; the second is derived."""

    params: Params
    mu1: object
    mu2: object = field(init=False, repr=False)

    def __post_init__(self):
        _check_params(self.params)
        object.__setattr__(self, "mu2", pushforward_inverse(self.mu1, self.params))

    def measure(self, which: int):
        if which not in (1, 2):
            raise DomainError("quadrant index must be 1 or 2")
        return self.mu1 if which == 1 else self.mu2

    def beta(self, which: int):
        return self.params.beta1 if which == 1 else self.params.beta2

    def density(self, which: int):
        """f_j as a callable of nu."""
        return lambda nu: spectral_density(nu, which, self)


def zero_lambda_density(alpha: float, upper: float = 60.0) -> DensityMeasure:
    r"""The measure :math:`(4/(\pi^2\alpha))\coth z\,dz` that reproduces ``V = 1/alpha`` when ``lambda = 0``.

    It is infinite, so it is truncated at ``upper``; integrands that decay
    like :math:`e^{-c\cosh z}` make the truncation invisible.
    """
    c = 4.0 / (math.pi ** 2 * alpha)
    return DensityMeasure(lambda z: c / np.tanh(z), upper)


def _sine_transform(measure, nu):
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    numax = float(nu.max()) if nu.size else 0.0
    return measure.integrate(lambda z: np.sin(np.multiply.outer(nu, z)), lambda z: numax + 0 * z)


def spectral_density(nu, which: int, sol: SpectralSolution):
    r"""Evaluate :math:`f_j(\nu)`; ``nu`` must be positive."""
    arr = np.asarray(nu, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("spectral density needs nu > 0 (coth singularity at 0)")
    beta = sol.beta(which)
    flat = np.atleast_1d(arr)
    out = -2.0 / (math.pi * beta) / np.tanh(HALF_PI * flat)
    out = out + np.asarray(_sine_transform(sol.measure(which), flat), dtype=float)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def _coth_part(y: float, d: float) -> float:
    r""":math:`\int_0^\infty \coth(\nu\pi/2)[\sinh\nu a + \sinh\nu b]K_{i\nu}(y)\,d\nu` with a+b = pi/2, d = a-b.

    The weight equals :math:`\cosh(\nu\pi/2)\cosh(\nu d/2)/\cosh(\nu\pi/4)`,
    which is 1 at the origin and grows like :math:`e^{\nu(\pi/4+|d|/2)}`.
    """
    ad = abs(d)
    decay = 0.25 * math.pi - 0.5 * ad

    def w(nu):
        return (0.5 * (1.0 + np.exp(-math.pi * nu)) * np.exp(nu * (0.5 * ad - 0.25 * math.pi))
                * (1.0 + np.exp(-ad * nu)) / (1.0 + np.exp(-HALF_PI * nu)))

    if decay > 0.2:
        value, change, _ = absolute_kl_integral(w, y, decay=decay)
        if change > 1e-9:
            raise ConvergenceError(f"spectral integral changed by {change:.3g}", best=value)
        return value
    res = regularized_kl_integral(w, y, scale=y)
    if not res.change <= 1e-6:
        raise ConvergenceError(f"regularised spectral integral changed by {res.change:.3g}",
                               best=res.value, history=res.diagonal)
    return res.value


def _sine_sinh_closed(y, angle, z):
    r""":math:`(2/\pi)\int\sin(\nu z)\sinh(\nu\,\mathrm{angle})K_{i\nu}(y)d\nu` for 0 <= angle <= pi/2."""
    return np.exp(-y * math.cos(angle) * np.cosh(z)) * np.sin(y * math.sin(angle) * np.sinh(z))


def v_eval(r: float, theta: float, sol: SpectralSolution) -> float:
    """Evaluate V(r, theta) from the quadrant formula that contains ``theta``.

    Angles on an axis use the formula of the quadrant they bound from below
    (theta = 0 and pi/2 use the first and second quadrant respectively).
    """
    if not r > 0:
        raise DomainError("v_eval needs r > 0")
    th = math.fmod(float(theta), math.pi)
    if th < 0:
        th += math.pi
    if th < HALF_PI:
        which, a, b = 1, HALF_PI - th, th
    else:
        which, a, b = 2, math.pi - th, th - HALF_PI
    beta = sol.beta(which)
    y = r * math.sqrt(2.0 * beta)
    coth_part = -2.0 / (math.pi * beta) * _coth_part(y, a - b)
    mu = sol.measure(which)

    def g(z):
        return _sine_sinh_closed(y, a, z) + _sine_sinh_closed(y, b, z)

    mu_part = HALF_PI * float(mu.integrate(g, lambda z: y * np.cosh(z)))
    return 1.0 / beta + coth_part + mu_part


def continuity_residual(r: float, sol: SpectralSolution) -> float:
    r""":math:`\int\sin(r\sqrt{2\beta_1}\sinh z)\mu_1(dz) - \int\sin(r\sqrt{2\beta_2}\sinh z)\mu_2(dz)`."""
    if not r > 0:
        raise DomainError("continuity_residual needs r > 0")
    out = []
    for j in (1, 2):
        y = r * math.sqrt(2.0 * sol.beta(j))
        out.append(float(sol.measure(j).integrate(lambda z: np.sin(y * np.sinh(z)),
                                                  lambda z: y * np.cosh(z))))
    return out[0] - out[1]


FORMS = ("minus", "plus")


def _lhs_integrand(r, params, form):
    y1 = r * math.sqrt(2.0 * params.beta1)
    y2 = r * math.sqrt(2.0 * params.beta2)
    k = math.sqrt(params.ratio)
    sgn = -1.0 if form == "minus" else 1.0

    def g(z):
        z = np.asarray(z, dtype=float)
        sh, ch = np.sinh(z), np.cosh(z)
        p = _asinh_scaled(k, z)
        shp, chp = np.sinh(p), np.cosh(p)
        s1 = np.sin(y1 * sh)
        t1 = y1 * (np.exp(-y1 * ch) * sh + sgn * s1 * ch)
        t2 = y2 * (np.exp(-y2 * chp) * shp + sgn * s1 * chp)
        return HALF_PI * (t1 + t2)

    return g, (lambda z: y1 * np.cosh(z))


def pasting_rhs(r: float, params: Params) -> float:
    r""":math:`\sum_j [-r\sqrt{2/\beta_j} + (2/(\pi\beta_j))\int\nu\tanh(\nu\pi/4)K_{i\nu}(r\sqrt{2\beta_j})d\nu]`."""
    total = 0.0
    for beta in (params.beta1, params.beta2):
        y = r * math.sqrt(2.0 * beta)
        t, change, _ = tanh_transform(y)
        if change > 1e-9:
            raise ConvergenceError(f"tanh transform at y={y:g} changed by {change:.3g}", best=t)
        total += -r * math.sqrt(2.0 / beta) + t / beta
    return total


def pasting_sides(r: float, sol: SpectralSolution, form: str = "minus"):
    """Return (lhs, rhs) of the pasting equation on the positive y-axis."""
    if not r > 0:
        raise DomainError("pasting residual needs r > 0")
    if form not in FORMS:
        raise DomainError(f"form must be one of {FORMS}")
    g, rate = _lhs_integrand(r, sol.params, form)
    return float(sol.mu1.integrate(g, rate)), pasting_rhs(r, sol.params)


def pasting_residual(r: float, sol: SpectralSolution, form: str = "minus") -> float:
    r"""LHS - RHS of the equation expressing a continuous angular derivative on the y-axis.

    With :math:`y_j = r\sqrt{2\beta_j}` and ``form="minus"``

    .. math::
       \mathrm{LHS} = \frac{\pi}{2}\int\mu_1(dz)\Big(
         y_1\big[e^{-y_1\cosh z}\sinh z - \sin(y_1\sinh z)\cosh z\big]
       + y_2\big[e^{-y_2\cosh\varphi}\sinh\varphi - \sin(y_1\sinh z)\cosh\varphi\big]\Big).

    The minus sign comes from :math:`\cosh(z+i\pi/2) = i\sinh z`.
    ``form="plus"`` flips both sine terms, as obtained with the wrong sign
    :math:`-i\sinh z`; it is kept for comparison.
    """
    lhs, rhs = pasting_sides(r, sol, form)
    return lhs - rhs


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def default_r_grid(n: int = 40, r_min: float = 0.05, r_max: float = 8.0):
    return np.geomspace(r_min, r_max, n)


@dataclass(frozen=True)
class FitReport:
    basis_size: int
    regularization: float
    residual_norm_before: float
    residual_norm_after: float
    objective: float
    condition_number: float
    rank: int
    singular_values: tuple
    r_grid: tuple
    residuals: tuple
    form: str

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def design_system(params: Params, basis: BumpMeasure, r_grid, form="minus"):
    """Matrix A (len(r_grid) x n_bumps) and vector b with residual = A c - b."""
    rows, rhs = [], []
    for r in r_grid:
        g, rate = _lhs_integrand(float(r), params, form)
        rows.append(basis.basis_integrals(g, rate))
        rhs.append(pasting_rhs(float(r), params))
    return np.array(rows), np.array(rhs)


def fit_measure(params: Params, basis_size: int, r_grid=None, regularization: float = 1e-8, *,
                sigma: float = DEFAULT_SIGMA, support_bound: float = DEFAULT_SUPPORT,
                form: str = "minus"):
    """Least-squares fit of bump coefficients to the pasting equation.

    Minimises ``sum_r residual(r)^2 + regularization * |c|^2``; the residual
    is affine in the coefficients.
    """
    _check_params(params)
    if int(basis_size) != basis_size or basis_size < 1:
        raise DomainError("basis_size must be a positive integer")
    r_grid = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    if r_grid.size < basis_size:
        raise PreconditionError("r_grid needs at least basis_size points")
    if np.any(~(r_grid > 0)):
        raise DomainError("r_grid must be positive")
    if not regularization >= 0:
        raise DomainError("regularization must be nonnegative")
    basis = BumpMeasure.nested(int(basis_size), sigma=sigma, support_bound=support_bound)
    A, b = design_system(params, basis, r_grid, form)
    sv = np.linalg.svd(A, compute_uv=False)
    tol = sv[0] * max(A.shape) * np.finfo(float).eps if sv.size else 0.0
    rank = int(np.sum(sv > tol))
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if regularization == 0 and rank < basis_size:
        raise IllConditionedError(
            f"design matrix has rank {rank} < {basis_size}; use regularization > 0")
    if regularization > 0:
        A_aug = np.vstack([A, math.sqrt(regularization) * np.eye(basis_size)])
        b_aug = np.concatenate([b, np.zeros(basis_size)])
    else:
        A_aug, b_aug = A, b
    coef = np.linalg.lstsq(A_aug, b_aug, rcond=None)[0]
    res = A @ coef - b
    measure = BumpMeasure(basis.centers, coef, sigma, support_bound)
    report = FitReport(basis_size=int(basis_size), regularization=float(regularization),
                       residual_norm_before=float(np.linalg.norm(b)),
                       residual_norm_after=float(np.linalg.norm(res)),
                       objective=float(res @ res + regularization * coef @ coef),
                       condition_number=cond, rank=rank, singular_values=tuple(map(float, sv)),
                       r_grid=tuple(map(float, r_grid)), residuals=tuple(map(float, res)),
                       form=form)
    return measure, report


# ---------------------------------------------------------------------------
# value at the origin
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OriginEstimate:
    value: float
    error_estimate: float
    r_values: tuple
    v_values: tuple


def u_origin_estimate(sol: SpectralSolution, r_sequence) -> OriginEstimate:
    """Extrapolate V(r, pi/4) to r = 0 by polynomial (Neville) extrapolation."""
    r = np.asarray(r_sequence, dtype=float)
    if r.size < 3 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
        raise PreconditionError("need at least 3 positive, strictly decreasing r values")
    v = np.array([v_eval(float(x), 0.25 * math.pi, sol) for x in r])
    # Neville tableau at 0; the last two diagonal entries give the estimate
    p = v.copy()
    diag = [p[-1]]
    for m in range(1, r.size):
        p = (r[m:] * p[:-1] - r[:-m] * p[1:]) / (r[m:] - r[:-m])
        diag.append(p[-1])
    diffs = np.abs(np.diff(diag))
    if not np.all(np.isfinite(diag)):
        raise ConvergenceError("extrapolation produced non-finite values", history=diag)
    if diffs.size >= 2 and diffs[-1] > diffs[-2] and diffs[-1] > 1e-12 * max(1.0, abs(diag[-1])):
        raise ConvergenceError("extrapolation sequence is not settling", best=float(diag[-1]),
                               history=diag)
    return OriginEstimate(float(diag[-1]), float(diffs[-1]) if diffs.size else math.inf,
                          tuple(map(float, r)), tuple(map(float, v)))
