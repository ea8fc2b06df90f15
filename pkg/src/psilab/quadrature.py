"""Quadrature building blocks.

Composite Gauss-Legendre panels do the bulk of the work because every
integrand here is smooth between known breakpoints (panel edges are placed
on the zeros of the oscillating factor).  Semi-infinite oscillatory tails
go through QUADPACK's Fourier-integral routine (``scipy.integrate.quad``
with a sin/cos weight and an infinite upper limit).
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import NumericError


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(edges, n: int = 20):
    """Nodes and weights of composite Gauss-Legendre over ``edges``."""
    edges = np.asarray(edges, dtype=np.float64)
    x, w = gauss_legendre(n)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def panel_integrate(f, edges, n: int = 20) -> float:
    """Composite Gauss-Legendre integral of vectorised ``f``."""
    nodes, weights = panel_nodes(edges, n)
    return math.fsum(weights * f(nodes))


def refine_until(rule, tol: float, start: int, max_doublings: int = 12,
                 abs_floor: float = 0.0):
    """Evaluate ``rule(m)`` for m = start, 2*start, ... until two successive
    values agree to relative ``tol``; returns the finer value."""
    m = start
    prev = rule(m)
    for _ in range(max_doublings):
        m *= 2
        cur = rule(m)
        if abs(cur - prev) <= tol * abs(cur) + abs_floor:
            return cur
        prev = cur
    raise NumericError(
        f"refinement did not reach rtol={tol:g}",
        achieved=abs(cur - prev) / max(abs(cur), 1e-300),
    )


def log_endpoint_integral(f, a: float, u_max: float = 60.0, n: int = 20) -> float:
    """Integral of ``f`` over (0, a] for integrands with an integrable
    logarithmic singularity at 0, via the substitution x = a*exp(-u)."""
    edges = np.linspace(0.0, u_max, int(u_max) + 1)

    def g(u):
        x = a * np.exp(-u)
        return f(x) * x

    return panel_integrate(g, edges, n)


def fourier_tail(amp, lower: float, freq: float, kind: str,
                 epsabs: float = 1e-11, max_error: float = 1e-7) -> float:
    """Integral of amp(x) * trig(2*pi*freq*x) over [lower, inf).

    ``kind`` is "sin" or "cos".  A zero frequency falls back to an
    ordinary semi-infinite integral.  QUADPACK's own error estimate must
    come in below ``max_error``.
    """
    if kind not in ("sin", "cos"):
        raise ValueError(kind)
    if freq < 0:
        sign = -1.0 if kind == "sin" else 1.0
        return sign * fourier_tail(amp, lower, -freq, kind, epsabs, max_error)
    if freq == 0.0:
        if kind == "sin":
            return 0.0
        kwargs = dict(epsrel=1e-12, limit=500)
    else:
        kwargs = dict(weight=kind, wvar=2.0 * np.pi * freq, limlst=200, limit=500)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(amp, lower, np.inf, epsabs=epsabs, **kwargs)[:2]
    if not np.isfinite(val) or err > max_error:
        raise NumericError(
            f"Fourier tail integral reached only {err:.3g}", achieved=err
        )
    return val
