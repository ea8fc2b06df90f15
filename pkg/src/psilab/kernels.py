"""Weight kernels K(alpha, h), U(alpha, h), the band-limited taper K_eta and
the sine integral, with their integral identities.

Conventions: e(x) = exp(2 pi i x) and f_hat(t) = int f(x) e(-t x) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import quadrature as quad
from .errors import ParameterError

EULER_GAMMA = 0.5772156649015329
LOG_2PI = 1.8378770664093453

# below this |sin(pi a)| the sine ratio switches to its Taylor expansion
_TAYLOR_SWITCH = 1e-8
_SI_SWITCH = 8.0


@dataclass(frozen=True)
class KernelParams:
    h: float
    eta: float | None = None

    def __post_init__(self):
        if not self.h >= 0:
            raise ParameterError(f"h must be >= 0, got {self.h}")
        if self.eta is not None and not 0 < self.eta < 0.25:
            raise ParameterError(f"eta must lie in (0, 1/4), got {self.eta}")

    @property
    def h0(self) -> int:
        return math.floor(self.h)

    @property
    def frac_h(self) -> float:
        return self.h - math.floor(self.h)


def _reduce(alpha):
    """alpha modulo 1, mapped into [-1/2, 1/2]."""
    alpha = np.asarray(alpha, dtype=np.float64)
    return alpha - np.round(alpha)


def _sine_ratio(a, h0: int):
    """sin(pi h0 a) / sin(pi a) and its a-derivative, for reduced a."""
    s = np.sin(np.pi * a)
    small = np.abs(s) < _TAYLOR_SWITCH
    safe = np.where(small, 1.0, s)
    c = np.cos(np.pi * a)
    sh = np.sin(np.pi * h0 * a)
    ch = np.cos(np.pi * h0 * a)
    r = sh / safe
    dr = np.pi * (h0 * ch * safe - sh * c) / safe**2
    if np.any(small):
        # even Taylor series of the ratio through a**6
        hh = h0 * (h0 - 1) * (h0 + 1)
        c2 = -np.pi**2 * hh / 6
        c4 = np.pi**4 * hh * (3 * h0**2 - 7) / 360
        c6 = -np.pi**6 * hh * (3 * h0**4 - 18 * h0**2 + 31) / 15120
        a2 = a * a
        r_t = h0 + a2 * (c2 + a2 * (c4 + a2 * c6))
        dr_t = a * (2 * c2 + a2 * (4 * c4 + a2 * 6 * c6))
        r = np.where(small, r_t, r)
        dr = np.where(small, dr_t, dr)
    return r, dr


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def fejer_weight(alpha, h):
    """K(alpha, h) = sum over |n| <= h of (h - |n|) e(n alpha).

    Closed form: Fejer kernel of order floor(h) plus {h} times the
    Dirichlet kernel of the same order.
    """
    if h < 0:
        raise ParameterError(f"h must be >= 0, got {h}")
    h0 = math.floor(h)
    fh = h - h0
    a = _reduce(alpha)
    if h0 == 0:
        return _scalar(np.full_like(a, fh))
    r, _ = _sine_ratio(a, h0)
    dirichlet = 1.0 + 2.0 * r * np.cos(np.pi * (h0 + 1) * a)
    return _scalar(r * r + fh * dirichlet)


def fejer_weight_derivative(alpha, h):
    """dK/dalpha, split as the Fejer part plus the {h}-Dirichlet part."""
    if h < 1:
        raise ParameterError(f"h must be >= 1, got {h}")
    h0 = math.floor(h)
    fh = h - h0
    a = _reduce(alpha)
    r, dr = _sine_ratio(a, h0)
    w = np.pi * (h0 + 1)
    fejer_part = 2.0 * r * dr
    dirichlet_part = 2.0 * fh * (dr * np.cos(w * a) - w * r * np.sin(w * a))
    return _scalar(fejer_part + dirichlet_part)


def sinc_weight(alpha, h):
    """U(alpha, h) = (sin(pi h alpha) / (pi alpha))**2, equal to h**2 at 0."""
    if h < 0:
        raise ParameterError(f"h must be >= 0, got {h}")
    alpha = np.asarray(alpha, dtype=np.float64)
    zero = alpha == 0
    safe = np.where(zero, 1.0, alpha)
    out = np.where(zero, float(h) ** 2, (np.sin(np.pi * h * safe) / (np.pi * safe)) ** 2)
    return _scalar(out)


_EM_TERMS = 14


def _oscillating_tail(N: int, a, omega: float):
    """sum_{n >= N} exp(i omega n) / (n + a)^2 for |omega| <= pi.

    Midpoint Euler-Maclaurin about N - 1/2; the integral term is a complex
    exponential integral and the correction terms shrink like
    (omega / 2 pi)^2k.
    """
    from scipy.special import bernoulli, exp1, polygamma

    if omega == 0.0:
        return polygamma(1, N + a).astype(np.complex128)
    L = N - 0.5 + a
    x0 = N - 0.5
    total = np.exp(-1j * omega * a) * (
        np.exp(1j * omega * L) / L + 1j * omega * exp1(-1j * omega * L)
    )
    bern = bernoulli(2 * _EM_TERMS)
    phase = np.exp(1j * omega * x0)
    for k in range(1, _EM_TERMS + 1):
        m = 2 * k - 1
        der = sum(
            math.comb(m, j) * (1j * omega) ** (m - j) * (-1) ** j
            * math.factorial(j + 1) * L ** (-2.0 - j)
            for j in range(m + 1)
        )
        b_half = -(1 - 2.0 ** (1 - 2 * k)) * bern[2 * k]
        total = total - b_half / math.factorial(2 * k) * der * phase
    return total


def poisson_sum_U(alpha, h, n_max: int):
    """Sum of U(n + alpha, h) over all integers n.

    Terms with |n| <= n_max are summed directly.  Beyond that
    sin^2 = (1 - cos) / 2; the constant half is a trigamma value and the
    cosine half only sees h modulo 1, which turns it into a slowly
    oscillating sum handled by ``_oscillating_tail``.
    """
    from scipy.special import polygamma

    a = _reduce(alpha)
    flat = np.atleast_1d(a).ravel()
    out = np.empty_like(flat)
    n = np.arange(-n_max, n_max + 1, dtype=np.float64)
    chunk = max(1, 2_000_000 // n.size)
    for i in range(0, flat.size, chunk):
        x = flat[i : i + chunk, None] + n[None, :]
        out[i : i + chunk] = np.sum(sinc_weight(x, h), axis=1)
    frac = h - math.floor(h)
    omega = 2 * np.pi * (frac - 1.0 if frac > 0.5 else frac)
    tail = np.zeros_like(flat)
    for s in (1.0, -1.0):
        b = s * flat
        osc = np.exp(2j * np.pi * h * b) * _oscillating_tail(n_max + 1, b, omega)
        tail += 0.5 * (polygamma(1, n_max + 1 + b) - osc.real)
    out = out + tail / np.pi**2
    return _scalar(out.reshape(np.shape(a)))


# ---------------------------------------------------------------------------
# sine integral
# ---------------------------------------------------------------------------


def _si_series(x):
    # si(x) = Si(x) - pi/2 with the Taylor series of Si
    term = x.copy()
    total = x.copy()
    x2 = x * x
    for k in range(1, 40):
        term = -term * x2 / ((2 * k) * (2 * k + 1))
        total = total + term / (2 * k + 1)
    return total - np.pi / 2


def _si_continued_fraction(x):
    # si(x) = Im E1(i x); E1 via its continued fraction (modified Lentz)
    z = 1j * x
    tiny = 1e-300
    b = z + 1.0
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / b
    result = d.copy()
    for k in range(1, 200):
        an = -float(k * k)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        result = result * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    e1 = result * np.exp(-z)
    return e1.imag


def sine_integral_si(x):
    """si(x) = -int_x^inf sin(t)/t dt, with si(0) = -pi/2."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ParameterError("si is defined here for x >= 0")
    flat = np.atleast_1d(x).astype(np.float64).ravel()
    out = np.empty_like(flat)
    lo = flat <= _SI_SWITCH
    if np.any(lo):
        out[lo] = _si_series(flat[lo])
    if np.any(~lo):
        out[~lo] = _si_continued_fraction(flat[~lo])
    return _scalar(out.reshape(x.shape))


def si_asymptotic(x):
    """The two leading terms -cos x / x - sin x / x**2 of si for large x."""
    x = np.asarray(x, dtype=np.float64)
    return _scalar(-np.cos(x) / x - np.sin(x) / x**2)


# ---------------------------------------------------------------------------
# smoothing kernel K_eta
# ---------------------------------------------------------------------------

_SINGULAR_RADIUS = 0.1


def _check_eta(eta):
    if not 0 < eta < 0.25:
        raise ParameterError(f"eta must lie in (0, 1/4), got {eta}")


def smoothing_transform(t, eta):
    """K_eta hat: 1 on |t| <= 1, cos^2 taper on [1, 1+eta], 0 beyond."""
    _check_eta(eta)
    t = np.abs(np.asarray(t, dtype=np.float64))
    taper = np.cos(np.pi * (t - 1.0) / (2.0 * eta)) ** 2
    out = np.where(t <= 1.0, 1.0, np.where(t < 1.0 + eta, taper, 0.0))
    return _scalar(out)


def _eta_rational(x, eta):
    """q = 1/(2 pi x (1 - 4 eta^2 x^2)) with its first two derivatives."""
    p = x - 4 * eta**2 * x**3
    dp = 1 - 12 * eta**2 * x**2
    ddp = -24 * eta**2 * x
    q = 1.0 / (2 * np.pi * p)
    dq = -dp / (2 * np.pi * p**2)
    ddq = (2 * dp**2 - p * ddp) / (2 * np.pi * p**3)
    return q, dq, ddq


def eta_second_derivative_terms(eta):
    """K_eta'' as a list of (amplitude, kind, frequency) with
    K_eta''(x) = sum amplitude(x) * kind(2 pi frequency x), valid off the
    removable singularities x = 0, +-1/(2 eta)."""
    b = 1.0 + eta
    return [
        (lambda x: _eta_rational(x, eta)[2] - 4 * np.pi**2 * _eta_rational(x, eta)[0], "sin", 1.0),
        (lambda x: _eta_rational(x, eta)[2] - 4 * np.pi**2 * b**2 * _eta_rational(x, eta)[0], "sin", b),
        (lambda x: 4 * np.pi * _eta_rational(x, eta)[1], "cos", 1.0),
        (lambda x: 4 * np.pi * b * _eta_rational(x, eta)[1], "cos", b),
    ]


def _eta_closed(x, eta, part):
    b = 1.0 + eta
    q, dq, ddq = _eta_rational(x, eta)
    s1, s2 = np.sin(2 * np.pi * x), np.sin(2 * np.pi * b * x)
    if part == "value":
        return q * (s1 + s2)
    c1, c2 = np.cos(2 * np.pi * x), np.cos(2 * np.pi * b * x)
    return (
        s1 * (ddq - 4 * np.pi**2 * q)
        + s2 * (ddq - 4 * np.pi**2 * b**2 * q)
        + c1 * 4 * np.pi * dq
        + c2 * 4 * np.pi * b * dq
    )


def _eta_fourier(x, eta, part, n: int = 64):
    # K_eta(x) = 2 int_0^{1+eta} K_hat(t) cos(2 pi x t) dt; smooth everywhere
    nodes, weights = quad.panel_nodes([0.0, 1.0, 1.0 + eta], n)
    kh = smoothing_transform(nodes, eta) * weights
    if part == "second_derivative":
        kh = kh * (-4 * np.pi**2 * nodes**2)
    return 2.0 * (np.cos(2 * np.pi * np.outer(x, nodes)) @ kh)


def smoothing_kernel(x_or_t, eta, part: str = "value"):
    """K_eta(x), its transform K_eta hat(t), or K_eta''(x).

    ``part`` is one of "value", "transform", "second_derivative".  Near the
    removable singularities of the closed form the kernel is evaluated from
    its Fourier integral instead.
    """
    _check_eta(eta)
    if part == "transform":
        return smoothing_transform(x_or_t, eta)
    if part not in ("value", "second_derivative"):
        raise ParameterError(f"unknown part {part!r}")
    x = np.abs(np.asarray(x_or_t, dtype=np.float64))
    flat = np.atleast_1d(x).ravel()
    near = (flat < _SINGULAR_RADIUS) | (np.abs(flat - 0.5 / eta) < _SINGULAR_RADIUS)
    out = np.empty_like(flat)
    if np.any(~near):
        out[~near] = _eta_closed(flat[~near], eta, part)
    if np.any(near):
        out[near] = _eta_fourier(flat[near], eta, part)
    return _scalar(out.reshape(x.shape))


# ---------------------------------------------------------------------------
# exact identities
# ---------------------------------------------------------------------------


class Moments(NamedTuple):
    mass: float
    log_mass: float


def _sinc_tail(h, L):
    """int_L^inf U(alpha, h) d alpha for L a multiple of 1/h."""
    return -h * sine_integral_si(2 * np.pi * h * L) / np.pi


def _log_sinc_tail(h, L):
    """int_L^inf log(h alpha) U(alpha, h) d alpha."""
    smooth = (math.log(h * L) + 1.0) / (2 * np.pi**2 * L)
    osc = quad.fourier_tail(
        lambda a: np.log(h * a) / (2 * np.pi**2 * a * a), L, h, "cos"
    )
    return smooth - osc


def kernel_moments(kind: str, h: float, rtol: float = 1e-10,
                   log_rtol: float = 1e-8) -> Moments:
    """Mass and log-weighted mass of K over [0, 1/2] or of U over [0, inf).

    The log-weighted integrals use a dedicated x = a exp(-u) panel at the
    singular endpoint.
    """
    if h < 1:
        raise ParameterError(f"h must be >= 1, got {h}")
    if kind == "K":
        h0 = math.floor(h)
        weight = lambda a: fejer_weight(a, h)
        lo, hi = 0.0, 0.5
        start = max(2, 2 * (h0 + 1))
    elif kind == "U":
        weight = lambda a: sinc_weight(a, h)
        lo, hi = 0.0, 8.0 / h
        start = 16
    else:
        raise ParameterError(f"kind must be 'K' or 'U', got {kind!r}")

    mass = quad.refine_until(
        lambda m: quad.panel_integrate(weight, np.linspace(lo, hi, m + 1)), rtol, start
    )
    split = (hi - lo) / start
    logged = lambda a: np.log(h * a) * weight(a)
    head = quad.log_endpoint_integral(logged, split)
    log_mass = head + quad.refine_until(
        lambda m: quad.panel_integrate(logged, np.linspace(split, hi, m + 1)),
        log_rtol, start, abs_floor=1e-14 * h,
    )
    if kind == "U":
        mass += _sinc_tail(h, hi)
        log_mass += _log_sinc_tail(h, hi)
    return Moments(mass, log_mass)


def u_log_mass_exact(h: float) -> float:
    return -0.5 * h * (LOG_2PI + EULER_GAMMA - 1.0)


def k_log_mass_integer(h: int) -> float:
    """Exact K log-mass for integer h from the si-sum representation."""
    n = np.arange(1, h, dtype=np.float64)
    si = sine_integral_si(np.pi * n) if n.size else np.zeros(0)
    total = h * math.log(h) - h * (math.log(2) + 1)
    total -= math.fsum((h - n) / n)
    total -= 2 * math.fsum((h - n) * si / (np.pi * n))
    return 0.5 * total


class TransformCheck(NamedTuple):
    lhs: float
    rhs: float


def verify_k_transf(t: float, eta: float) -> TransformCheck:
    """Compare K_eta hat(t) with int_0^inf K_eta''(x) U(t, x) dx.

    The integral runs with Gauss-Legendre panels up to just past the
    singular point 1/(2 eta); the remainder is split into Fourier-weighted
    pieces handled by QUADPACK's semi-infinite oscillatory routine.
    """
    _check_eta(eta)
    t = abs(float(t))
    lhs = smoothing_transform(t, eta)
    L = math.ceil(0.5 / eta) + 2.0
    edges = np.arange(0.0, L + 0.125, 0.25)

    def head_integrand(x):
        kpp = smoothing_kernel(x, eta, "second_derivative")
        return kpp * sinc_weight_grid(t, x)

    head = quad.panel_integrate(head_integrand, edges, 24)
    tail = 0.0
    for amp, kind, nu in eta_second_derivative_terms(eta):
        if t == 0.0:
            tail += quad.fourier_tail(lambda x, f=amp: f(x) * x * x, L, nu, kind)
            continue
        scale = 1.0 / (2 * np.pi**2 * t * t)
        tail += scale * quad.fourier_tail(amp, L, nu, kind)
        for freq in (nu + t, nu - t):
            if abs(freq) < 1e-12:
                freq = 0.0
            tail -= 0.5 * scale * quad.fourier_tail(amp, L, freq, kind)
    return TransformCheck(lhs, head + tail)


def sinc_weight_grid(t, x):
    """U(t, x) as a function of the window x for fixed frequency t."""
    x = np.asarray(x, dtype=np.float64)
    if t == 0.0:
        return x * x
    return (np.sin(np.pi * x * t) / (np.pi * t)) ** 2
