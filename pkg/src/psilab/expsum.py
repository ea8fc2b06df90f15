"""Exponential sums over primes and their truncated mean squares.

R(alpha) = S(alpha) - T(alpha) is the trigonometric polynomial with
coefficients Lambda(n) - 1, so |R|^2 has the autocorrelation sequence
A_j as Fourier coefficients and every integral of |R|^2 against a weight
with known Fourier coefficients is a finite sum.  The smoothed variant
uses coefficients (Lambda(n) - 1) exp(-n/X), truncated at the point where
the exponential tail drops below ``tail_eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import fft as sp_fft

from . import quadrature as quad
from .errors import CapacityError, ParameterError
from .kernels import _reduce, _sine_ratio, sinc_weight
from .models import c_prime_from_c
from .primes import MangoldtTable

DEFAULT_C = -4.0
DEFAULT_TAIL_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class ExpSumGrid:
    """Samples of R on the grid m/M together with the autocorrelation.

    ``coeffs[n]`` (0 <= n <= N) is the coefficient of e(n alpha); ``autocorr``
    holds A_j for 0 <= j < N.  For the smoothed grid N exceeds X.
    """

    X: int
    N: int
    M: int
    coeffs: np.ndarray
    r_values: np.ndarray
    autocorr: np.ndarray
    smoothed: bool = False
    tail_eps: float | None = None

    def __post_init__(self):
        for arr in (self.coeffs, self.r_values, self.autocorr):
            arr.setflags(write=False)

    @property
    def support(self):
        """Prime powers n <= N and their weights (the S-part of R)."""
        n = np.nonzero(self.coeffs + self._t_coeffs())[0]
        return n, (self.coeffs + self._t_coeffs())[n]

    def _t_coeffs(self):
        n = np.arange(self.N + 1, dtype=np.float64)
        w = np.exp(-n / self.X) if self.smoothed else np.ones_like(n)
        w[0] = 0.0
        return w


def smoothed_length(X: int, tail_eps: float = DEFAULT_TAIL_EPS) -> int:
    """Number of smoothed coefficients kept: ceil(X (log X + log(1/eps)))."""
    return math.ceil(X * (math.log(X) + math.log(1.0 / tail_eps)))


def build_grid(table: MangoldtTable, M: int | None = None, *, X: int | None = None,
               smoothed: bool = False, tail_eps: float = DEFAULT_TAIL_EPS) -> ExpSumGrid:
    """FFT samples of R (or R tilde) and the autocorrelation of its
    coefficients.

    M defaults to the smallest FFT-friendly length >= 2N + 2.
    """
    X = table.X if X is None else int(X)
    if X < 1:
        raise ParameterError("X must be >= 1")
    if smoothed:
        N = smoothed_length(X, tail_eps)
    else:
        N = X
        tail_eps = None
    if N > table.X:
        raise CapacityError(f"need Lambda up to {N}, table stops at {table.X}")
    if M is None:
        M = sp_fft.next_fast_len(2 * N + 2)
    elif M < 2 * N + 2:
        raise ParameterError(f"grid size M={M} must be >= 2N+2 = {2 * N + 2}")

    coeffs = np.zeros(N + 1)
    coeffs[1:] = table.lam[1 : N + 1] - 1.0
    if smoothed:
        coeffs[1:] *= np.exp(-np.arange(1, N + 1) / X)

    padded = np.zeros(M)
    padded[: N + 1] = coeffs
    half = np.fft.rfft(padded)
    # R(m/M) = conj(sum c_n exp(-2 pi i n m / M)); fill the upper half by
    # symmetry so conjugate symmetry holds bit for bit
    r_values = np.empty(M, dtype=np.complex128)
    r_values[: half.size] = np.conj(half)
    upper = np.arange(half.size, M)
    r_values[upper] = half[M - upper]

    power = np.abs(half) ** 2
    autocorr = np.fft.irfft(power, n=M)[:N]
    return ExpSumGrid(X, N, M, coeffs, r_values, autocorr, smoothed, tail_eps)


def eval_T(alpha, X: int):
    """T(alpha) = sum_{n <= X} e(n alpha) in closed form."""
    a = _reduce(alpha)
    ratio, _ = _sine_ratio(a, int(X))
    out = np.exp(1j * np.pi * (X + 1) * a) * ratio
    return complex(out) if np.ndim(out) == 0 else out


def _phases(n, alpha):
    frac = np.remainder(np.multiply.outer(alpha, n.astype(np.float64)), 1.0)
    return np.exp(2j * np.pi * frac)


def eval_S(alpha, table: MangoldtTable, X: int | None = None) -> complex:
    """S(alpha) = sum_{n <= X} Lambda(n) e(n alpha) by compensated direct sum."""
    X = table.X if X is None else int(X)
    n = np.nonzero(table.lam[: X + 1])[0]
    terms = table.lam[n] * _phases(n, float(alpha))
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


@numba.njit(cache=True)
def _direct_sum(alpha, n, w):
    out = np.empty(alpha.size, dtype=np.complex128)
    two_pi = 2.0 * np.pi
    for i in range(alpha.size):
        re = 0.0
        im = 0.0
        re_c = 0.0
        im_c = 0.0
        for k in range(n.size):
            x = n[k] * alpha[i]
            theta = two_pi * (x - np.floor(x))
            # compensated (Kahan) accumulation of both parts
            y = w[k] * np.cos(theta) - re_c
            t = re + y
            re_c = (t - re) - y
            re = t
            y = w[k] * np.sin(theta) - im_c
            t = im + y
            im_c = (t - im) - y
            im = t
        out[i] = complex(re, im)
    return out


def eval_R(alpha, grid: ExpSumGrid):
    """R(alpha) (or R tilde) by direct summation over prime powers plus
    the closed-form geometric T-part; independent of the FFT samples."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
    n, w = grid.support
    out = _direct_sum(np.ascontiguousarray(alpha), n.astype(np.float64), w)
    if grid.smoothed:
        z = np.exp(-1.0 / grid.X + 2j * np.pi * _reduce(alpha))
        t_part = z * (1.0 - z**grid.N) / (1.0 - z)
    else:
        t_part = eval_T(alpha, grid.N)
    return out - t_part


def _sinpi(x):
    """sin(pi x) with exact zeros at the integers."""
    r = np.remainder(x, 2.0)
    sign = np.where(r > 1.0, -1.0, 1.0)
    r = np.where(r > 1.0, r - 1.0, r)
    r = np.where(r > 0.5, 1.0 - r, r)
    return sign * np.sin(np.pi * r)


def r_truncated_exact(grid: ExpSumGrid, xi: float) -> float:
    """Integral of |R|^2 over [-xi, xi] from the autocorrelation.

    2 xi A_0 + sum_{j >= 1} A_j * 2 sin(2 pi j xi) / (pi j), summed in
    ascending j with exact rounding.
    """
    if not 0 < xi <= 0.5:
        raise ParameterError(f"xi must lie in (0, 1/2], got {xi}")
    j = np.arange(1, grid.N, dtype=np.float64)
    terms = grid.autocorr[1:] * 2.0 * _sinpi(2.0 * j * xi) / (np.pi * j)
    return math.fsum(np.concatenate(([2.0 * xi * grid.autocorr[0]], terms)))


def r_truncated_quadrature(grid: ExpSumGrid, xi: float, rtol: float = 1e-8) -> float:
    """Oracle for ``r_truncated_exact``: panel quadrature of |R|^2 evaluated
    by direct summation."""
    if not 0 < xi <= 0.5:
        raise ParameterError(f"xi must lie in (0, 1/2], got {xi}")

    def rule(m):
        edges = np.linspace(0.0, xi, m + 1)
        return 2.0 * quad.panel_integrate(lambda a: np.abs(eval_R(a, grid)) ** 2, edges)

    # the damped coefficients are negligible beyond a few multiples of X
    degree = min(grid.N, 8 * grid.X) if grid.smoothed else grid.N
    start = max(4, math.ceil(xi * degree / 4))
    return quad.refine_until(rule, rtol, start)


def smoothed_truncation_bound(grid: ExpSumGrid, xi: float, value: float) -> float:
    """Bound on the change of R tilde(X, xi) caused by dropping n > N."""
    n = np.arange(grid.N + 1, grid.N + 60 * grid.X, dtype=np.float64)
    sup = math.fsum((np.log(n) + 1.0) * np.exp(-n / grid.X))
    return 2.0 * sup * math.sqrt(2.0 * xi * max(value, 0.0)) + 2.0 * xi * sup * sup


def smoothed_r_truncated(table: MangoldtTable, xi: float, tail_eps: float = DEFAULT_TAIL_EPS,
                         *, X: int | None = None, grid: ExpSumGrid | None = None) -> float:
    """R tilde(X, xi) via the autocorrelation of the damped coefficients.

    ``X`` is the smoothing scale; the table must reach
    ceil(X (log X + log(1/tail_eps))).
    """
    if grid is None:
        if X is None:
            raise ParameterError("smoothing scale X is required")
        grid = build_grid(table, X=X, smoothed=True, tail_eps=tail_eps)
    elif not grid.smoothed:
        raise ParameterError("grid is not smoothed")
    value = r_truncated_exact(grid, xi)
    bound = smoothed_truncation_bound(grid, xi, value)
    if bound > grid.tail_eps * grid.X:
        raise CapacityError(f"truncation bound {bound:.3g} exceeds tail_eps * X")
    return value


def k_weighted_moment(grid: ExpSumGrid, h: float) -> float:
    """Integral over one period of |R|^2 K(., h) = sum_{|j| <= h} (h - |j|) A_|j|."""
    if h <= 0:
        raise ParameterError(f"h must be > 0, got {h}")
    top = min(math.floor(h), grid.N - 1)
    j = np.arange(1, top + 1, dtype=np.float64)
    terms = 2.0 * (h - j) * grid.autocorr[1 : top + 1]
    return math.fsum(np.concatenate(([h * grid.autocorr[0]], terms)))


def f_model(X: float, alpha, c: float = DEFAULT_C):
    """f(X, alpha) = X log(X alpha) + (c/2 + 1) X."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0):
        raise ParameterError("f(X, alpha) needs alpha > 0")
    out = X * np.log(X * alpha) + (c / 2 + 1) * X
    return float(out) if out.ndim == 0 else out


def g_f_part_closed(X: float, x: float, xi: float, c: float = DEFAULT_C) -> float:
    """xi^2 * int_0^inf f(X, a) U(a, x/xi) da in closed form."""
    return 0.5 * x * X * xi * (math.log(X * xi / x) + c_prime_from_c(c))


def g_f_part_quadrature(X: float, x: float, xi: float, c: float = DEFAULT_C) -> float:
    """Numerical value of the same f-part (log panel, Gauss panels and a
    Fourier-weighted tail)."""
    h = x / xi
    L = 8.0 / h
    integrand = lambda a: f_model(X, a, c) * sinc_weight(a, h)
    head = quad.log_endpoint_integral(integrand, L / 16)
    head += quad.panel_integrate(integrand, np.linspace(L / 16, L, 129))
    kappa = c / 2 + 1
    smooth = X * (math.log(X * L) + 1.0 + kappa) / (2 * np.pi**2 * L)
    osc = quad.fourier_tail(
        lambda a: X * (np.log(X * a) + kappa) / (2 * np.pi**2 * a * a), L, h, "cos",
        max_error=1e-9 * X,
    )
    return xi * xi * (head + smooth - osc)


def g_diagnostic(grid: ExpSumGrid, x: float, xi: float, c: float = DEFAULT_C) -> float:
    """g(x, xi) = xi^2 int_0^inf (|R|^2 - f(X, a)) U(a, x/xi) da.

    The |R|^2 part uses the periodised weight: half the K-weighted moment.
    """
    if x <= 0 or not 0 < xi <= 0.5:
        raise ParameterError("need x > 0 and 0 < xi <= 1/2")
    r_part = 0.5 * xi * xi * k_weighted_moment(grid, x / xi)
    return r_part - g_f_part_closed(grid.X, x, xi, c)
