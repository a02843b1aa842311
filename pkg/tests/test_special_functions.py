import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from quadrant_occupation.errors import ConvergenceError, DomainError, PreconditionError
from quadrant_occupation.special_functions import (
    bessel_ode_residual, k_bessel_imag, k_imag, kl_identity_cosh, kl_identity_nu_sine,
    kl_identity_sine, kl_tanh_probe, richardson_table)

# oracle: ascending series -(ln(x/2)+gamma) I0(x) + sum (x^2/4)^k H_k/(k!)^2, summed to 1e-18
K0_AT_1 = 0.42102443824070834
# oracle: scipy.quad of exp(-x cosh t) cos(3t) between consecutive zeros of cos(3t)
K3I_AT_HALF = -0.011362530752479859


def k0_series(x):
    q = x * x / 4
    term, harmonic, i0, s, k = 1.0, 0.0, 1.0, 0.0, 0
    while True:
        k += 1
        term *= q / (k * k)
        harmonic += 1.0 / k
        i0 += term
        s += term * harmonic
        if term < 1e-18 * i0:
            return -(math.log(x / 2) + np.euler_gamma) * i0 + s


def test_k0_matches_series():
    r = k_bessel_imag(0.0, 1.0, tol=1e-10)
    assert abs(r.value - K0_AT_1) < 1e-10
    assert abs(k0_series(1.0) - K0_AT_1) < 1e-15
    assert 0 < r.abs_error_estimate <= 1e-10


def test_k3i_matches_split_quadrature():
    assert abs(k_bessel_imag(3.0, 0.5, tol=1e-8).value - K3I_AT_HALF) < 1e-8


def test_split_quadrature_oracle_is_live():
    nu, x = 3.0, 0.5
    edges = [0.0] + [(k + 0.5) * math.pi / nu for k in range(40)]
    f = lambda t: math.exp(-x * math.cosh(t)) * math.cos(nu * t)
    total = sum(integrate.quad(f, a, b, epsabs=1e-15, limit=200)[0] for a, b in zip(edges, edges[1:]))
    assert abs(total - K3I_AT_HALF) < 1e-12


def test_decay_in_x_and_k0_bound():
    a, b = k_bessel_imag(1.0, 5.0).value, k_bessel_imag(1.0, 1.0).value
    assert abs(a) < abs(b)
    assert abs(a) <= k_bessel_imag(0.0, 5.0).value
    assert abs(b) <= k_bessel_imag(0.0, 1.0).value


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
def test_k0_bound_grid(nu, x):
    assert abs(k_bessel_imag(nu, x).value) <= k_bessel_imag(0.0, x).value * (1 + 1e-12)


@pytest.mark.parametrize("nu,x", [(0.3, 0.2), (2.0, 1.0), (7.5, 3.0), (15.0, 0.7), (25.0, 4.0),
                                  (40.0, 12.0), (60.0, 2.0)])
def test_against_mpmath(nu, x):
    ref = float(mp.besselk(1j * nu, x).real)
    scale = math.exp(-0.5 * math.pi * nu)
    assert abs(float(k_imag(nu, x)) - ref) <= 1e-13 * scale + 1e-14 * abs(ref)


def test_errors():
    with pytest.raises(DomainError):
        k_bessel_imag(1.0, 0.0)
    with pytest.raises(DomainError):
        k_bessel_imag(-1.0, 1.0)
    with pytest.raises(ConvergenceError) as info:
        k_bessel_imag(1.0, 1.0, tol=1e-30, max_refine=2)
    assert info.value.best is not None and len(info.value.history) == 3


def test_bit_reproducible():
    a = k_bessel_imag(2.5, 0.7)
    b = k_bessel_imag(2.5, 0.7)
    assert a == b


def test_ode_residual_examples():
    seq = [bessel_ode_residual(0.0, 2.0, h) for h in (1e-2, 1e-3, 1e-4)]
    assert abs(seq[0]) > abs(seq[1]) > abs(seq[2])
    assert abs(bessel_ode_residual(2.0, 1.0, 1e-3)) < 1e-4
    with pytest.raises(PreconditionError):
        bessel_ode_residual(0.0, 1.0, 0.5)


@pytest.mark.parametrize("nu,x", [(0.0, 2.0), (2.0, 1.0), (5.0, 0.5), (1.0, 10.0), (12.0, 3.0)])
def test_ode_residual_order(nu, x):
    hs = np.array([1e-2, 1e-3, 1e-4])
    r = np.abs([bessel_ode_residual(nu, x, h) for h in hs])
    order = np.polyfit(np.log(hs), np.log(r), 1)[0]
    assert order >= 1.9


def test_ode_residual_oracle_differentiated_integral():
    # x^2 v'' + x v' - (x^2 - nu^2) v computed from the integral differentiated in x
    nu, x = 2.0, 1.0
    f = lambda t, p: math.exp(-x * math.cosh(t)) * math.cos(nu * t) * math.cosh(t) ** p
    v, d1, d2 = (integrate.quad(f, 0, 40, args=(p,), limit=400, epsabs=1e-14)[0] for p in (0, 1, 2))
    exact = x * x * d2 - x * d1 - (x * x - nu * nu) * v
    assert abs(exact) < 1e-12
    assert abs(bessel_ode_residual(nu, x, 1e-4) - exact) < 1e-8


@pytest.mark.parametrize("y", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_cosh_identity(y):
    rep = kl_identity_cosh(y)
    assert rep.converged
    assert abs(rep.residual) < (1e-3 if y < 0.5 else 1e-4)
    assert rep.residual == rep.lhs - rep.rhs
    assert rep.rhs == 1.0


@pytest.mark.parametrize("z,y", [(1.0, 1.0), (0.5, 2.0), (0.1, 0.1), (2.0, 5.0), (2.0, 0.1)])
def test_sine_identity(z, y):
    rep = kl_identity_sine(z, y)
    assert rep.converged and abs(rep.residual) < 1e-4
    assert math.isclose(rep.rhs, 0.5 * math.pi * math.sin(y * math.sinh(z)))


def test_sine_identity_small_z():
    rep = kl_identity_sine(1e-8, 1.0)
    assert abs(rep.lhs) < 1e-6 and abs(rep.rhs) < 1e-7


def test_nu_sine_identity():
    assert kl_identity_nu_sine(0.0, 3.0).lhs == 0.0
    rep = kl_identity_nu_sine(1.0, 1.0)
    assert abs(rep.residual) < 1e-4
    assert math.isclose(rep.rhs, math.exp(-math.cosh(1.0)) * math.sinh(1.0))
    assert abs(kl_identity_nu_sine(-1.0, 1.0).lhs + rep.lhs) < 1e-12


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.0, 1.5), y=st.floats(0.1, 5.0))
def test_nu_sine_odd_and_accurate(a, y):
    p, m = kl_identity_nu_sine(a, y), kl_identity_nu_sine(-a, y)
    assert abs(p.lhs + m.lhs) < 1e-12
    assert abs(p.residual) < 1e-8


def test_tanh_probe_reports_inconsistency():
    # the relation the final pasting equation needs at lambda = 0 does not hold
    for y in (0.5, 1.0, 2.0):
        rep = kl_tanh_probe(y)
        assert rep.converged
        assert abs(rep.residual) > 0.1
    assert kl_tanh_probe(1e-3).lhs < 2e-3


def test_tanh_probe_against_mpmath():
    mp.mp.dps = 20
    y = 1.0
    f = lambda nu: nu * mp.tanh(nu * mp.pi / 4) * mp.re(mp.besselk(1j * nu, y))
    ref = 2 / mp.pi * mp.quad(f, [0, 5, 10, 20, 40])
    assert abs(kl_tanh_probe(y).lhs - float(ref)) < 1e-9


def test_identity_reports_deterministic():
    assert kl_identity_cosh(1.0) == kl_identity_cosh(1.0)
    assert kl_identity_sine(0.5, 2.0) == kl_identity_sine(0.5, 2.0)


def test_identity_domain_errors():
    with pytest.raises(DomainError):
        kl_identity_cosh(0.0)
    with pytest.raises(DomainError):
        kl_identity_sine(1.0, -1.0)
    with pytest.raises(DomainError):
        kl_tanh_probe(0.0)


def test_strict_nonconvergence_raises():
    with pytest.raises(ConvergenceError) as info:
        kl_identity_cosh(1.0, tol=1e-16)
    assert len(info.value.history) > 1
    rep = kl_identity_cosh(1.0, tol=1e-16, strict=False)
    assert not rep.converged


def test_richardson_table_exact_for_polynomials():
    vals = [1.0 + 3 * h - 2 * h * h for h in (1.0, 0.5, 0.25)]
    assert abs(richardson_table(vals)[-1][0] - 1.0) < 1e-14
