r"""Modified Bessel functions of imaginary order and Kontorovich-Lebedev identities.

:math:`K_{i\nu}(x)` is evaluated in two regimes.

* For small and moderate :math:`\nu` (below ``max(20, x**2/4)``) the integral

  .. math::
     K_{i\nu}(x) = \int_0^\infty e^{-x\cosh t}\cos(\nu t)\,dt

  is taken along the shifted line :math:`t = s + i\theta`, which gives

  .. math::
     K_{i\nu}(x) = e^{-\nu\theta}\int_0^\infty e^{-x\cosh s\cos\theta}
                   \cos(\nu s - x\sinh s\sin\theta)\,ds .

  :math:`\theta` is chosen close to the saddle point so that the integral is of
  the same size as the result instead of :math:`e^{\nu\pi/2}` times larger.  The
  integrand is analytic and decays double exponentially, so the trapezoidal rule
  converges geometrically (the double-exponential principle with the
  substitution already built into :math:`\cosh`).

* For large :math:`\nu` the ascending series
  :math:`K_{i\nu}(x) = -\pi\,\mathrm{Im}\,I_{i\nu}(x)/\sinh(\pi\nu)` is summed
  with the gamma-function prefactor kept in logarithmic form, which is free of
  cancellation once :math:`\nu \gtrsim x^2/4`.

Most integrals over :math:`\nu` in this package pair :math:`K_{i\nu}` with
weights growing like :math:`e^{\nu\pi/2}`, so the workhorse is
:func:`k_imag_scaled`, returning :math:`e^{\nu\pi/2}K_{i\nu}(x)`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import loggamma

from .errors import ConvergenceError, DomainError, PreconditionError

HALF_PI = 0.5 * math.pi

# cancellation budget e^C for the shifted contour
_CONTOUR_SLACK = 3.0
# target exponent for trapezoid discretisation / truncation error
_TRAP_DIGITS = 40.0
_GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class BesselEval:
    nu: float
    x: float
    value: float
    abs_error_estimate: float


@dataclass(frozen=True)
class IdentityReport:
    """Numerical check of ``lhs == rhs``; ``residual`` is ``lhs - rhs``."""

    lhs: float
    rhs: float
    residual: float
    quadrature_cutoff: float
    regularization_epsilon: float
    converged: bool
    diagnostics: tuple = field(default=(), compare=False)

    @classmethod
    def build(cls, lhs, rhs, **kw):
        return cls(lhs=float(lhs), rhs=float(rhs), residual=float(lhs) - float(rhs), **kw)


# ---------------------------------------------------------------------------
# K_{i nu}(x)
# ---------------------------------------------------------------------------

def series_threshold(x: float) -> float:
    """Order above which the ascending series is used."""
    return max(20.0, 0.25 * x * x)


def _contour(nu, x):
    """Return (theta, d) with d = pi/2 - theta for the shifted integration line."""
    theta = 0.0
    if nu * HALF_PI > _CONTOUR_SLACK:
        theta = HALF_PI - _CONTOUR_SLACK / nu
    if nu < x:
        theta = min(theta, math.asin(nu / x))
    return theta, HALF_PI - theta


def _trap_grid(nu, x, theta, d, x_min=None):
    x_min = x if x_min is None else x_min
    h = min(0.25, math.pi * d / _TRAP_DIGITS)
    smax = math.acosh(1.0 + _TRAP_DIGITS / (x_min * math.sin(d)))
    return h, smax


def _trap_terms(nu, x, theta, s):
    x = np.asarray(x, dtype=float)[..., None]
    return np.exp(-x * np.cosh(s) * math.cos(theta)) * np.cos(nu * s - x * np.sinh(s) * math.sin(theta))


def _trap_integral(nu, x, theta, h, smax):
    """Trapezoid sum for J = e^{nu theta} K_{i nu}(x); x may be an array."""
    s = np.arange(0.0, smax + h, h)
    f = _trap_terms(nu, x, theta, s)
    f[..., 0] *= 0.5
    return h * f.sum(axis=-1), h * np.abs(f).sum(axis=-1)


def _series_scaled(nu, x):
    nu = np.asarray(nu, dtype=float)
    q = 0.25 * x * x
    term = np.ones(nu.shape, dtype=complex)
    total = term.copy()
    for k in range(1, 400):
        term = term * (q / (k * (k + 1j * nu)))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    # e^{nu pi/2}/sinh(nu pi) = 2 e^{-nu pi/2}/(1 - e^{-2 nu pi})
    pref = np.exp(1j * nu * math.log(0.5 * x) - loggamma(1.0 + 1j * nu) - nu * HALF_PI)
    return -2.0 * math.pi * (pref * total).imag / (-np.expm1(-2.0 * math.pi * nu))


def _scaled_scalar(nu, x):
    if nu >= series_threshold(x):
        return float(_series_scaled(np.array([nu]), x)[0])
    theta, d = _contour(nu, x)
    h, smax = _trap_grid(nu, x, theta, d)
    J, _ = _trap_integral(nu, x, theta, h, smax)
    return float(J) * math.exp(nu * d)


def k_imag_scaled(nu, x: float) -> np.ndarray:
    r"""Return :math:`e^{\nu\pi/2}K_{i\nu}(x)` for an array of orders ``nu >= 0``."""
    if not x > 0:
        raise DomainError(f"K_(i nu)(x) requires x > 0, got {x!r}")
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise DomainError("orders must be nonnegative")
    flat = nu.ravel()
    out = np.empty_like(flat)
    big = flat >= series_threshold(x)
    if big.any():
        out[big] = _series_scaled(flat[big], x)
    for i in np.flatnonzero(~big):
        out[i] = _scaled_scalar(flat[i], x)
    return out.reshape(nu.shape)


def k_imag(nu, x: float) -> np.ndarray:
    """Vectorised ``K_{i nu}(x)`` (no error control, ~1e-14 relative to the scaled size)."""
    nu = np.asarray(nu, dtype=float)
    return k_imag_scaled(nu, x) * np.exp(-HALF_PI * nu)


def k_bessel_imag(nu: float, x: float, tol: float = 1e-10, max_refine: int = 8) -> BesselEval:
    """Evaluate K_{i nu}(x) with an absolute error estimate not exceeding ``tol``.

    The trapezoid step is halved until two successive sums agree to ``tol``;
    the reported estimate is that difference, floored by a rounding bound.

    Raises
    ------
    DomainError
        ``x <= 0`` or ``nu < 0``.
    ConvergenceError
        ``tol`` is not reached after ``max_refine`` halvings; ``best`` holds
        the last estimate.
    """
    if not x > 0:
        raise DomainError(f"K_(i nu)(x) requires x > 0, got {x!r}")
    if not nu >= 0:
        raise DomainError(f"order must be nonnegative, got {nu!r}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    theta, d = _contour(nu, x)
    h, smax = _trap_grid(nu, x, theta, d)
    h *= 2.0  # start one level coarser than the default rule
    damp = math.exp(-nu * theta)
    J, mag = _trap_integral(nu, x, theta, h, smax)
    history = [float(J) * damp]
    for _ in range(max_refine):
        s_mid = np.arange(0.5 * h, smax + h, h)
        f_mid = _trap_terms(nu, x, theta, s_mid)
        J_new = 0.5 * J + 0.5 * h * f_mid.sum()
        mag = 0.5 * mag + 0.5 * h * np.abs(f_mid).sum()
        h *= 0.5
        diff = abs(float(J_new - J)) * damp
        J = J_new
        history.append(float(J) * damp)
        floor = 8.0 * np.finfo(float).eps * float(mag) * damp
        err = max(diff, floor, np.finfo(float).tiny)
        if diff <= tol and err <= tol:
            return BesselEval(nu=float(nu), x=float(x), value=float(J) * damp, abs_error_estimate=err)
    raise ConvergenceError(
        f"K_(i{nu})({x}) did not reach tol={tol:g}", best=history[-1], history=history)


def bessel_ode_residual(nu: float, x: float, h: float) -> float:
    r"""Residual :math:`x^2v'' + xv' - (x^2-\nu^2)v` of the Bessel equation for ``v = K_{i nu}``.

    The derivatives are second-order central differences with step ``h``.
    They are formed term by term inside the contour integral, using
    ``e^{-(x+h)w} - e^{-(x-h)w} = -2 e^{-xw} sinh(hw)`` and
    ``e^{-(x+h)w} - 2e^{-xw} + e^{-(x-h)w} = 4 e^{-xw} sinh^2(hw/2)``, which are
    the same quotients without the cancellation of subtracting rounded values.
    """
    if not h > 0:
        raise PreconditionError("step h must be positive")
    if not x - h > 0:
        raise PreconditionError(f"x - h must be positive (x={x}, h={h})")
    if h > 0.25 * x:
        raise PreconditionError(f"step h={h} too large relative to x={x} (need h <= x/4)")
    theta, d = _contour(nu, x)
    hs, smax = _trap_grid(nu, x, theta, d, x_min=x - h)
    hs *= 0.5
    s = np.arange(0.0, smax + hs, hs)
    w = np.cosh(s + 1j * theta)
    term = np.exp(1j * nu * s - x * w)
    term[0] *= 0.5
    damp = hs * math.exp(-nu * theta)
    v0 = damp * term.real.sum()
    d1 = damp * (term * (-2.0 * np.sinh(h * w))).real.sum() / (2.0 * h)
    d2 = damp * (term * 4.0 * np.sinh(0.5 * h * w) ** 2).real.sum() / (h * h)
    return float(x * x * d2 + x * d1 - (x * x - nu * nu) * v0)


# ---------------------------------------------------------------------------
# quadrature over the order
# ---------------------------------------------------------------------------

def gauss_panels(upper: float, width: float):
    """Composite 16-point Gauss-Legendre nodes/weights on [0, ceil(upper/width)*width]."""
    n = max(1, int(math.ceil(upper / width)))
    a = width * np.arange(n)[:, None]
    nodes = (a + 0.5 * width * (_GL_X + 1.0)).ravel()
    weights = np.tile(0.5 * width * _GL_W, n)
    return nodes, weights


def _panel_width(y, nu_max, extra_rate):
    rate = max(1.0, math.log(2.0 * nu_max / y)) + extra_rate
    w = 0.5
    while w * rate > 3.0:
        w *= 0.5
    return w


@lru_cache(maxsize=128)
def kernel_grid(y: float, nu_max: float, width: float):
    """Nodes, weights and scaled kernel values e^{nu pi/2}K_{i nu}(y) on a panel grid."""
    nodes, weights = gauss_panels(nu_max, width)
    vals = k_imag_scaled(nodes, y)
    for arr in (nodes, weights, vals):
        arr.setflags(write=False)
    return nodes, weights, vals


def richardson_table(values: Sequence[float], ratio: float = 2.0):
    """Richardson table for a quantity with an integer-power expansion in the step.

    ``values[i]`` is computed at step ``h0 / ratio**i``.  Row ``j`` of the
    returned list holds the ``j``-fold eliminated estimates.
    """
    table = [list(map(float, values))]
    for j in range(1, len(values)):
        prev = table[-1]
        f = ratio ** j
        table.append([(f * prev[i + 1] - prev[i]) / (f - 1.0) for i in range(len(prev) - 1)])
    return table


@dataclass(frozen=True)
class RegularizedIntegral:
    value: float
    change: float
    eps_min: float
    nu_max: float
    raw: tuple
    diagonal: tuple


def regularized_kl_integral(weight_scaled: Callable[[np.ndarray], np.ndarray], y: float, *,
                            scale: float = 1.0, eps0: float | None = None, levels: int = 7,
                            tail: float = 1e-11, extra_rate: float = 0.0) -> RegularizedIntegral:
    r"""Abel-regularised :math:`\int_0^\infty w(\nu)K_{i\nu}(y)\,d\nu`.

    ``weight_scaled(nu)`` must return :math:`w(\nu)e^{-\nu\pi/2}`, so the
    integrand is that times :func:`k_imag_scaled`.  The integral is damped by
    :math:`e^{-\varepsilon\nu}` for :math:`\varepsilon = \varepsilon_0 2^{-k}`,
    ``k < levels``, and the sequence is Richardson-extrapolated to 0.
    ``scale`` is the rate at which the regularised value varies with
    :math:`\varepsilon`; it sets the default :math:`\varepsilon_0`.
    """
    if eps0 is None:
        eps0 = min(0.5, 2.5 / max(scale, 1e-12))
    eps = eps0 * 0.5 ** np.arange(levels)
    nu_max = math.log(1.0 / tail) / eps[-1]
    width = _panel_width(y, nu_max, extra_rate)
    nodes, weights, kern = kernel_grid(float(y), float(nu_max), width)
    base = weights * weight_scaled(nodes) * kern
    raw = [float(np.sum(base * np.exp(-e * nodes))) for e in eps]
    table = richardson_table(raw)
    diag = [row[-1] for row in table]
    # diag[j] uses levels 0..j; the last two estimates measure convergence
    change = abs(diag[-1] - diag[-2])
    return RegularizedIntegral(value=diag[-1], change=change, eps_min=float(eps[-1]),
                               nu_max=float(nodes[-1]), raw=tuple(raw), diagonal=tuple(diag))


def absolute_kl_integral(weight_scaled, y: float, *, tail: float = 1e-13, extra_rate: float = 0.0,
                         decay: float = HALF_PI):
    """Integral of an absolutely convergent KL integrand; returns (value, change, nu_max).

    ``decay`` is the exponential rate at which ``weight_scaled`` decays.
    ``change`` is the difference against a run with halved panels and a
    25 % longer range.
    """
    nu_max = 1.25 * y + math.log(1.0 / tail) / decay + 5.0
    width = _panel_width(y, nu_max, extra_rate)
    vals = []
    for nm, w in ((nu_max, width), (1.25 * nu_max, 0.5 * width)):
        nodes, weights, kern = kernel_grid(float(y), float(nm), w)
        vals.append(float(np.sum(weights * weight_scaled(nodes) * kern)))
    return vals[1], abs(vals[1] - vals[0]), 1.25 * nu_max


def _check_identity(result, lhs_scale, rhs, tol, strict, what):
    converged = result.change <= tol
    if strict and not (converged and math.isfinite(result.value)):
        raise ConvergenceError(f"{what}: extrapolation changed by {result.change:.3g} > {tol:g}",
                               best=lhs_scale * result.value, history=result.diagonal)
    return IdentityReport.build(lhs_scale * result.value, rhs, quadrature_cutoff=result.nu_max,
                                regularization_epsilon=result.eps_min, converged=converged,
                                diagnostics=tuple(lhs_scale * v for v in result.diagonal))


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise DomainError(f"{k} must be positive, got {v!r}")


def kl_identity_cosh(y: float, *, tol: float = 1e-6, strict: bool = True, **reg) -> IdentityReport:
    r"""Check :math:`(2/\pi)\int_0^\infty\cosh(\nu\pi/2)K_{i\nu}(y)\,d\nu = 1`."""
    _check_positive(y=y)
    res = regularized_kl_integral(lambda nu: 0.5 * (1.0 + np.exp(-math.pi * nu)), y,
                                  scale=y, **reg)
    return _check_identity(res, 2.0 / math.pi, 1.0, tol, strict, "cosh identity")


def kl_identity_sine(z: float, y: float, *, tol: float = 1e-6, strict: bool = True,
                     **reg) -> IdentityReport:
    r"""Check :math:`\int_0^\infty\sin(\nu z)\sinh(\nu\pi/2)K_{i\nu}(y)\,d\nu = (\pi/2)\sin(y\sinh z)`."""
    _check_positive(y=y)
    if not z >= 0:
        raise DomainError(f"z must be nonnegative, got {z!r}")
    res = regularized_kl_integral(lambda nu: np.sin(nu * z) * 0.5 * -np.expm1(-math.pi * nu), y,
                                  scale=y * math.cosh(z), extra_rate=z, **reg)
    return _check_identity(res, 1.0, HALF_PI * math.sin(y * math.sinh(z)), tol, strict,
                           "sine identity")


def kl_identity_nu_sine(a: float, y: float, *, tol: float = 1e-9, strict: bool = True) -> IdentityReport:
    r"""Check :math:`(2/\pi)\int_0^\infty\nu\sin(a\nu)K_{i\nu}(y)\,d\nu = y e^{-y\cosh a}\sinh a` for real ``a``."""
    _check_positive(y=y)
    value, change, nu_max = absolute_kl_integral(
        lambda nu: nu * np.sin(a * nu) * np.exp(-HALF_PI * nu), y, extra_rate=abs(a))
    lhs = 2.0 / math.pi * value
    converged = change <= tol
    if strict and not converged:
        raise ConvergenceError(f"nu-sine identity: refinement changed by {change:.3g}", best=lhs)
    rhs = y * math.exp(-y * math.cosh(a)) * math.sinh(a)
    return IdentityReport.build(lhs, rhs, quadrature_cutoff=nu_max, regularization_epsilon=0.0,
                                converged=converged, diagnostics=(change,))


def tanh_transform(y: float):
    r"""Return :math:`(2/\pi)\int_0^\infty\nu\tanh(\nu\pi/4)K_{i\nu}(y)\,d\nu` and its refinement change."""
    value, change, nu_max = absolute_kl_integral(
        lambda nu: nu * np.tanh(0.25 * math.pi * nu) * np.exp(-HALF_PI * nu), y)
    return 2.0 / math.pi * value, 2.0 / math.pi * change, nu_max


def kl_tanh_probe(y: float, *, tol: float = 1e-9, strict: bool = True) -> IdentityReport:
    r"""Compare :math:`(2/\pi)\int_0^\infty\nu\tanh(\nu\pi/4)K_{i\nu}(y)\,d\nu` with ``y``.

    This is the relation the final pasting equation would need with both
    measures zero at ``lambda = 0``.  It is reported, not asserted; the
    residual is generally far from zero.
    """
    _check_positive(y=y)
    lhs, change, nu_max = tanh_transform(y)
    converged = change <= tol
    if strict and not converged:
        raise ConvergenceError(f"tanh probe: refinement changed by {change:.3g}", best=lhs)
    return IdentityReport.build(lhs, y, quadrature_cutoff=nu_max, regularization_epsilon=0.0,
                                converged=converged, diagnostics=(change,))
