r"""Ground truth for occupation-time statistics of planar Brownian motion.

Moments of :math:`T = \mathrm{Leb}\{t\in[0,1]: (X_t,Y_t)\in R\}` follow from

.. math::
   E[T^k] = k!\int_{0<t_1<\dots<t_k<1} P\big((X,Y)_{t_i}\in R\ \forall i\big)\,dt,

where the probability factorises over the two independent coordinates into
Gaussian orthant probabilities.  With the ratios :math:`u_i = t_i/t_{i+1}` the
integrand only depends on :math:`u` and the outer time integral is explicit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.stats import kstwobign

from .errors import ConvergenceError, DomainError, PreconditionError
from .regions import Region

__all__ = ["MomentResult", "arcsine_cdf", "sign_pair_prob", "orthant3", "moment",
           "ks_threshold"]


@dataclass(frozen=True)
class MomentResult:
    order: int
    region: Region
    value: float
    quadrature_error: float


def arcsine_cdf(u):
    r"""CDF :math:`(2/\pi)\arcsin\sqrt{u}` of the arcsine law on [0, 1]."""
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("arcsine_cdf needs 0 <= u <= 1")
    # atan2 form keeps full relative accuracy near both ends
    out = 2.0 / math.pi * np.arctan2(np.sqrt(arr), np.sqrt(1.0 - arr))
    return float(out) if out.ndim == 0 else out


def sign_pair_prob(s: float, t: float) -> float:
    """P(W_s > 0, W_t > 0) for standard Brownian motion W and 0 < s < t."""
    if not (0.0 < s < t):
        raise DomainError(f"need 0 < s < t, got s={s!r}, t={t!r}")
    return 0.25 + math.asin(math.sqrt(s / t)) / (2.0 * math.pi)


def orthant3(rho12: float, rho13: float, rho23: float) -> float:
    """P(Z1 > 0, Z2 > 0, Z3 > 0) for a centred Gaussian vector with unit variances."""
    corr = np.array([[1.0, rho12, rho13], [rho12, 1.0, rho23], [rho13, rho23, 1.0]])
    if np.any(np.abs(corr) > 1.0) or np.linalg.eigvalsh(corr)[0] < -1e-12:
        raise DomainError("correlation matrix is not positive semidefinite")
    return 0.125 + (math.asin(rho12) + math.asin(rho13) + math.asin(rho23)) / (4.0 * math.pi)


# -- probabilities of sign patterns as functions of the angles th_i = asin(rho) -------------

def _p2(region, th):
    """P(region at t1 and t2); th = asin(sqrt(t1/t2))."""
    r = th / (2.0 * math.pi)
    same, diff = 0.25 + r, 0.25 - r
    if region is Region.HALF_PLANE:
        return same
    if region is Region.SINGLE_QUADRANT:
        return same * same
    return 2.0 * same * same + 2.0 * diff * diff


def _p3(region, th1, th2):
    """P(region at t1, t2, t3); th1 = asin(sqrt(t1/t2)), th2 = asin(sqrt(t2/t3))."""
    a12, a23 = th1, th2
    a13 = math.asin(math.sin(th1) * math.sin(th2))
    if region is Region.HALF_PLANE:
        return 0.125 + (a12 + a13 + a23) / (4.0 * math.pi)
    if region is Region.SINGLE_QUADRANT:
        q = 0.125 + (a12 + a13 + a23) / (4.0 * math.pi)
        return q * q
    total = 0.0
    for s1, s2, s3 in itertools.product((1, -1), repeat=3):
        q = 0.125 + (s1 * s2 * a12 + s1 * s3 * a13 + s2 * s3 * a23) / (4.0 * math.pi)
        total += q * q
    return total


_POINTWISE = {Region.OPPOSITE_QUADRANTS: 0.5, Region.HALF_PLANE: 0.5, Region.SINGLE_QUADRANT: 0.25}


def moment(order: int, region, *, tol: float = 1e-10) -> MomentResult:
    r"""Return :math:`E[T^k]` for ``k = order`` in {1, 2, 3} by quadrature.

    With :math:`u = \sin^2\vartheta` the singular factors
    :math:`\arcsin\sqrt{u}` become the integration variable, so

    * ``k = 2``: :math:`E[T^2] = \int_0^{\pi/2} P_2(\vartheta)\sin 2\vartheta\,d\vartheta`
    * ``k = 3``: :math:`E[T^3] = 2\int\!\!\int u_2 P_3\,du_1\,du_2`
      with :math:`du_i = \sin 2\vartheta_i\,d\vartheta_i`.
    """
    region = Region.parse(region)
    if order not in (1, 2, 3):
        raise DomainError(f"order must be 1, 2 or 3, got {order!r}")
    if order == 1:
        return MomentResult(1, region, _POINTWISE[region], 0.0)
    half = 0.5 * math.pi
    if order == 2:
        value, err = integrate.quad(lambda th: _p2(region, th) * math.sin(2.0 * th), 0.0, half,
                                    epsabs=tol, epsrel=tol, limit=200)
    else:
        value, err = integrate.dblquad(
            lambda th1, th2: 2.0 * math.sin(th2) ** 2 * math.sin(2.0 * th1) * math.sin(2.0 * th2)
            * _p3(region, th1, th2),
            0.0, half, 0.0, half, epsabs=tol, epsrel=tol)
    if not (math.isfinite(value) and err <= max(100.0 * tol, 1e-7)):
        raise ConvergenceError(f"moment quadrature error {err:.3g} too large", best=value)
    return MomentResult(order, region, float(value), float(err))


def ks_threshold(n: int, alpha_level: float = 0.05) -> float:
    """Asymptotic critical value of the one-sample Kolmogorov-Smirnov statistic."""
    if n < 30:
        raise PreconditionError("asymptotic KS threshold needs n >= 30")
    if not 0.0 < alpha_level < 1.0:
        raise DomainError("alpha_level must lie in (0, 1)")
    return float(kstwobign.isf(alpha_level)) / math.sqrt(n)
