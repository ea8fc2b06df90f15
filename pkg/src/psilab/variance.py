"""Short-interval variance J(X, h), its exponentially weighted variant and
the kernel-weighted second moments of R that approximate them.

psi(x + h) - psi(x) only changes where x or x + h crosses an integer, so
both J and J tilde are finite sums over those breakpoints ("event sweep").
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import fft as sp_fft

from . import quadrature as quad
from .errors import CapacityError, NumericError, ParameterError
from .expsum import DEFAULT_TAIL_EPS, ExpSumGrid, eval_R, k_weighted_moment
from .kernels import poisson_sum_U
from .models import ResidualReport, envelope_E, envelope_E_tilde, make_report
from .primes import MangoldtTable

# breakpoints closer than this are merged (their strip contributes nothing)
_MERGE_GAP = 1e-12


@dataclass(frozen=True)
class VarianceResult:
    X: int
    h: float
    value: float
    method: str
    breakpoints_processed: int


@dataclass(frozen=True, eq=False)
class _Sweep:
    """Subintervals [u, v] on which psi(x + h) - psi(x) - h equals d."""

    u: np.ndarray
    v: np.ndarray
    d: np.ndarray


def _sweep(table: MangoldtTable, lo: float, hi: float, h: float) -> _Sweep:
    if math.floor(hi + h) > table.X:
        raise CapacityError(
            f"window sums need psi up to {math.floor(hi + h)}, table stops at {table.X}"
        )
    ints = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=np.float64)
    shifted = np.arange(math.ceil(lo + h), math.floor(hi + h) + 1, dtype=np.float64) - h
    pts = np.concatenate(([lo, hi], ints, shifted))
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    if pts.size > 2:
        keep = np.concatenate(([True], np.diff(pts) > _MERGE_GAP * max(1.0, hi)))
        keep[-1] = True
        pts = pts[keep]
    u, v = pts[:-1], pts[1:]
    mid = 0.5 * (u + v)
    psi_ = table.psi_prefix
    d = psi_[np.floor(mid + h).astype(np.int64)] - psi_[np.floor(mid).astype(np.int64)] - h
    return _Sweep(u, v, d)


def _check_h(X, h):
    if not 1 <= h <= X:
        raise ParameterError(f"need 1 <= h <= X, got h={h}, X={X}")


def compute_J(table: MangoldtTable, X: int, h: float) -> VarianceResult:
    """J(X, h) = int_1^X (psi(x+h) - psi(x) - h)^2 dx, exactly."""
    _check_h(X, h)
    if table.X < X + math.ceil(h) + 1:
        raise CapacityError(f"table must reach X + ceil(h) + 1 = {X + math.ceil(h) + 1}")
    sw = _sweep(table, 1.0, float(X), h)
    value = math.fsum((sw.v - sw.u) * sw.d**2)
    return VarianceResult(X, h, value, "event_sweep", sw.u.size)


def _window_bound(x, h):
    # |psi(x+h) - psi(x) - h| <= (h + 1) log(x + h) + h
    return (h + 1.0) * np.log(np.maximum(x + h, 2.0)) + h


def _tail_integral(f, start, X):
    """int_start^inf f(x) exp(-2x/X) dx for slowly growing f, in the scaled
    variable x = start + X s / 2."""
    scale = 0.5 * X * math.exp(-2.0 * start / X)
    val, _ = integrate.quad(lambda s: f(start + 0.5 * X * s) * math.exp(-s), 0.0, np.inf)
    return scale * val


def tilde_cutoff(X: int, h: float, tail_eps: float = DEFAULT_TAIL_EPS):
    """Upper limit x_max for J tilde and the certified bound on the
    discarded tail (<= tail_eps * h * X)."""
    target = tail_eps * h * X
    x_max = 0.5 * X * math.log(1.0 / tail_eps)
    for _ in range(200):
        bound = _tail_integral(lambda x: _window_bound(x, h) ** 2, x_max, X)
        if bound <= target:
            return math.ceil(x_max), bound
        x_max += 0.25 * X
    raise NumericError("could not certify the J tilde tail")


def compute_J_tilde(table: MangoldtTable, X: int, h: float,
                    tail_eps: float = DEFAULT_TAIL_EPS) -> VarianceResult:
    """J tilde(X, h) = int_0^inf (psi(x+h) - psi(x) - h)^2 exp(-2x/X) dx."""
    _check_h(X, h)
    x_max, _ = tilde_cutoff(X, h, tail_eps)
    sw = _sweep(table, 0.0, float(x_max), h)
    decay = 0.5 * X * np.exp(-2.0 * sw.u / X) * -np.expm1(-2.0 * (sw.v - sw.u) / X)
    value = math.fsum(sw.d**2 * decay)
    return VarianceResult(X, h, value, "event_sweep", sw.u.size)


def j_tilde_via_laplace(table: MangoldtTable, X: int, h: float,
                        tail_eps: float = DEFAULT_TAIL_EPS) -> float:
    """(2/X) int_0^inf J(t, h) exp(-2t/X) dt with J(t, h) from the sweep.

    J(t, h) is integrated here from 0, matching the lower limit of J tilde;
    it is piecewise linear in t, so Gauss panels are aligned with the
    breakpoints.
    """
    _check_h(X, h)
    t_max, _ = tilde_cutoff(X, h, tail_eps)
    sw = _sweep(table, 0.0, float(t_max), h)
    slope = sw.d**2
    j_at_u = np.concatenate(([0.0], np.cumsum((sw.v - sw.u) * slope)[:-1]))
    x, w = quad.gauss_legendre(4)
    half = 0.5 * (sw.v - sw.u)
    t = sw.u[:, None] + half[:, None] * (x[None, :] + 1.0)
    j_t = j_at_u[:, None] + (t - sw.u[:, None]) * slope[:, None]
    vals = half[:, None] * w[None, :] * j_t * np.exp(-2.0 * t / X)
    body = (2.0 / X) * math.fsum(vals.ravel())
    # J(t) <= J(t_max) + (t - t_max) * bound^2 beyond the cutoff
    j_end = j_at_u[-1] + (sw.v[-1] - sw.u[-1]) * slope[-1]
    tail = _tail_integral(lambda s: j_end + (s - t_max) * _window_bound(s, h) ** 2, t_max, X)
    if (2.0 / X) * tail > tail_eps * h * X * 10:
        raise NumericError("Laplace tail not certified", achieved=tail)
    return body


def u_weighted_moment(grid: ExpSumGrid, h: float, n_max: int = 1000,
                      nodes: int | None = None) -> float:
    """int over R of |R|^2 U(., h), folded onto one period by periodicity.

    |R|^2 is evaluated by direct summation at the nodes of a periodic
    trapezoid rule (exact for the trigonometric polynomial |R|^2 K) and
    multiplied by the full sum of U(n + alpha, h) over n.
    """
    if h < 1:
        raise ParameterError(f"h must be >= 1, got {h}")
    if nodes is None:
        nodes = sp_fft.next_fast_len(2 * (grid.N + math.ceil(h) + 64))
    alpha = (np.arange(nodes) + 0.5) / nodes - 0.5
    power = np.abs(eval_R(alpha, grid)) ** 2
    weight = poisson_sum_U(alpha, h, n_max)
    return math.fsum(power * weight) / nodes


def weighted_second_moment(grid: ExpSumGrid, h: float, kind: str = "K",
                           smoothed: bool | None = None) -> float:
    """Second moment of R (or R tilde) against K over one period or U over R."""
    if h < 1:
        raise ParameterError(f"h must be >= 1, got {h}")
    if smoothed is not None and smoothed != grid.smoothed:
        raise ParameterError("grid smoothing does not match the requested mode")
    if kind == "K":
        return k_weighted_moment(grid, h)
    if kind == "U":
        return u_weighted_moment(grid, h)
    raise ParameterError(f"kind must be 'K' or 'U', got {kind!r}")


def moment_residual(table: MangoldtTable, grid: ExpSumGrid, X: int, h: float,
                    mode: str = "plain", tail_eps: float = DEFAULT_TAIL_EPS) -> ResidualReport:
    """Compare the K-weighted moment with J (plain) or J tilde (smoothed)."""
    if grid.X != X:
        raise ParameterError("grid was built for a different X")
    if mode == "plain":
        if grid.smoothed:
            raise ParameterError("plain mode needs an unsmoothed grid")
        target = compute_J(table, X, h).value
        env = envelope_E(X, h, "rh")
    elif mode == "smoothed":
        if not grid.smoothed:
            raise ParameterError("smoothed mode needs a smoothed grid")
        target = compute_J_tilde(table, X, h, tail_eps).value
        env = envelope_E_tilde(X, h, "rh")
    else:
        raise ParameterError(f"mode must be 'plain' or 'smoothed', got {mode!r}")
    moment = k_weighted_moment(grid, h)
    return make_report(
        computed=moment, main_term=target, envelope=env,
        inputs={"X": X, "param": h, "quantity": f"moment_vs_J_{mode}"},
    )
