import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import sici

from psilab.errors import ParameterError
from psilab.kernels import (
    EULER_GAMMA,
    LOG_2PI,
    KernelParams,
    fejer_weight,
    fejer_weight_derivative,
    k_log_mass_integer,
    kernel_moments,
    poisson_sum_U,
    si_asymptotic,
    sine_integral_si,
    sinc_weight,
    smoothing_kernel,
    smoothing_transform,
    u_log_mass_exact,
    verify_k_transf,
)


def fejer_direct(alpha, h):
    n = np.arange(-math.floor(h), math.floor(h) + 1)
    return float(np.real(np.sum((h - np.abs(n)) * np.exp(2j * np.pi * n * alpha))))


def test_constants():
    assert EULER_GAMMA == 0.5772156649015329
    assert LOG_2PI == pytest.approx(math.log(2 * math.pi), abs=0)


def test_kernel_params():
    p = KernelParams(10.5, 0.1)
    assert (p.h0, p.frac_h) == (10, 0.5)
    with pytest.raises(ParameterError):
        KernelParams(-1)
    with pytest.raises(ParameterError):
        KernelParams(2, eta=0.3)


@settings(max_examples=200, deadline=None)
@given(st.floats(-2, 2, allow_nan=False), st.floats(0, 60, allow_nan=False))
def test_fejer_closed_form_matches_coefficient_sum(alpha, h):
    assert fejer_weight(alpha, h) == pytest.approx(fejer_direct(alpha, h), abs=1e-9 * (1 + h * h))


@pytest.mark.parametrize("h", [1, 2, 7, 10.5])
def test_fejer_special_values(h):
    # K(0, h) = sum (h - |n|) over |n| <= h
    n = np.arange(-math.floor(h), math.floor(h) + 1)
    assert fejer_weight(0.0, h) == pytest.approx(float(np.sum(h - np.abs(n))), rel=1e-14)
    assert fejer_weight(1e-12, h) == pytest.approx(fejer_weight(0.0, h), rel=1e-12)
    assert fejer_weight(0.3, h) == pytest.approx(fejer_weight(1.3, h), rel=1e-12)


def test_fejer_h_one_is_constant():
    a = np.linspace(-0.5, 0.5, 11)
    assert np.allclose(fejer_weight(a, 1.0), 1.0, atol=1e-15)


@pytest.mark.parametrize("h", [1.0, 3.0, 7.25])
def test_fejer_derivative_against_finite_difference(h):
    a = np.array([-0.37, -0.1, 1e-9, 0.05, 0.21, 0.49])
    step = 1e-6
    fd = (fejer_weight(a + step, h) - fejer_weight(a - step, h)) / (2 * step)
    assert np.allclose(fejer_weight_derivative(a, h), fd, atol=1e-5 * h * h)


def test_sinc_weight_values():
    assert sinc_weight(0.0, 3.0) == 9.0
    assert sinc_weight(0.25, 2.0) == pytest.approx((1 / (math.pi * 0.25)) ** 2)
    assert sinc_weight(1.0, 2.0) == pytest.approx(0.0, abs=1e-30)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.5, 0.5, allow_nan=False), st.floats(1, 100, allow_nan=False))
def test_poisson_summation(alpha, h):
    assert poisson_sum_U(alpha, h, 64) == pytest.approx(fejer_weight(alpha, h), abs=1e-9 * h)


def test_sine_integral_against_scipy():
    x = np.concatenate([np.linspace(0, 8, 81), np.linspace(8.0001, 200, 300), [1e4, 1e6]])
    si_ref = sici(x)[0] - np.pi / 2
    assert np.allclose(sine_integral_si(x), si_ref, atol=1e-14)
    assert sine_integral_si(0.0) == -math.pi / 2
    with pytest.raises(ParameterError):
        sine_integral_si(-1.0)


def test_si_asymptotic_leading_terms():
    x = 1e3
    assert si_asymptotic(x) == pytest.approx(float(sine_integral_si(x)), abs=3 / x**3)


@pytest.mark.parametrize("h", [1.0, 2.0, 7.0, 10.5, 100.0])
def test_kernel_masses(h):
    k = kernel_moments("K", h)
    u = kernel_moments("U", h)
    assert k.mass == pytest.approx(h / 2, rel=1e-10)
    assert u.mass == pytest.approx(h / 2, rel=1e-8)
    assert u.log_mass == pytest.approx(u_log_mass_exact(h), rel=1e-6)


@pytest.mark.parametrize("h", [1, 2, 7, 30])
def test_k_log_mass_integer_formula(h):
    assert kernel_moments("K", h).log_mass == pytest.approx(k_log_mass_integer(h), rel=1e-9)


def test_k_log_mass_frozen_value():
    assert k_log_mass_integer(7) == pytest.approx(-5.1363933151546, rel=1e-12)


def test_kernel_moment_errors():
    with pytest.raises(ParameterError):
        kernel_moments("V", 2)
    with pytest.raises(ParameterError):
        kernel_moments("K", 0.5)


@pytest.mark.parametrize("eta", [0.05, 0.1, 0.2])
def test_smoothing_transform_shape(eta):
    assert smoothing_transform(0.7, eta) == 1.0
    assert smoothing_transform(1 + eta / 2, eta) == pytest.approx(0.5)
    assert smoothing_transform(1 + eta, eta) == 0.0
    assert smoothing_kernel(2.0, eta, "transform") == 0.0


@pytest.mark.parametrize("eta", [0.05, 0.1, 0.2])
def test_smoothing_kernel_branches_agree(eta):
    # closed form and Fourier integral at points where both are valid
    from psilab.kernels import _eta_closed, _eta_fourier

    x = np.array([0.15, 0.6, 1.3, 0.5 / eta + 0.2])
    for part in ("value", "second_derivative"):
        assert np.allclose(_eta_closed(x, eta, part), _eta_fourier(x, eta, part, 96),
                           rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("eta", [0.1, 0.2])
def test_smoothing_second_derivative_finite_difference(eta):
    x = np.array([0.05, 0.3, 0.5 / eta, 0.5 / eta + 0.7, 3.3])
    s = 1e-4
    fd = (smoothing_kernel(x + s, eta) - 2 * smoothing_kernel(x, eta) + smoothing_kernel(x - s, eta)) / s**2
    assert np.allclose(smoothing_kernel(x, eta, "second_derivative"), fd, atol=1e-5)


def test_smoothing_kernel_value_at_zero():
    # K_eta(0) = integral of the transform = 2 (1 + eta/2)
    eta = 0.1
    assert smoothing_kernel(0.0, eta) == pytest.approx(2 + eta, rel=1e-12)


@pytest.mark.parametrize("eta", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("t_rel", [0.0, 0.5, 1.0, "half", "full", 2.0])
def test_k_transf_identity(eta, t_rel):
    t = {"half": 1 + eta / 2, "full": 1 + eta}.get(t_rel, t_rel)
    c = verify_k_transf(t, eta)
    assert c.lhs == pytest.approx(c.rhs, abs=1e-6)
