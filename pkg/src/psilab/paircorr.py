"""Zero-ordinate tables and the pair-correlation sum F(X, T).

F(X, T) = 4 * sum over 0 < gamma, gamma' <= T of
X^(i(gamma - gamma')) / (4 + (gamma - gamma')^2).  Because 4 / (4 + u^2) is
the Fourier transform of exp(-2|t|), F is also the integral of
exp(-2|t|) |sum_gamma exp(i gamma (log X + t))|^2 over the real line.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import quadrature as quad
from .errors import MonotonicityError, ParameterError, RangeError, ZeroFileError
from .models import ResidualReport, make_report

# ordinates below this are impossible (the first zero is at 14.1347...)
MIN_ORDINATE = 14.0
# |t| cutoff for the integral form; the discarded mass is <= N^2 exp(-40)
T_CUTOFF = 20.0
PANEL_WIDTH = 0.25
# pairs further apart than this contribute < 1e-16 each and are skipped
PAIR_CUTOFF = 2e8
_BLOCK = 2048


@dataclass(frozen=True, eq=False)
class ZeroTable:
    gammas: np.ndarray
    source_digest: str = ""

    def __post_init__(self):
        g = self.gammas
        if g.ndim != 1 or not np.all(np.isfinite(g)):
            raise ParameterError("ordinates must be a finite 1-d array")
        if g.size and g[0] <= MIN_ORDINATE:
            raise ParameterError(f"ordinates must exceed {MIN_ORDINATE}")
        if np.any(np.diff(g) <= 0):
            raise ParameterError("ordinates must be strictly increasing")
        g.setflags(write=False)

    @property
    def max_height(self) -> float:
        return float(self.gammas[-1]) if self.gammas.size else 0.0

    def __len__(self):
        return self.gammas.size

    def up_to(self, T: float) -> np.ndarray:
        if T > max(self.max_height, MIN_ORDINATE):
            raise RangeError(f"T={T} exceeds the table height {self.max_height}")
        return self.gammas[: np.searchsorted(self.gammas, T, side="right")]


def load_zeros(path) -> ZeroTable:
    """Read one ordinate per line; '#' starts a comment, blank lines are
    skipped.  Line numbers in errors are 1-based, entry indices too."""
    raw = Path(path).read_bytes()
    values = []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            v = float(text)
        except ValueError:
            raise ZeroFileError(f"cannot parse {text!r}", line=lineno) from None
        if not math.isfinite(v) or v <= MIN_ORDINATE:
            raise ZeroFileError(f"ordinate {text} is not a finite value > {MIN_ORDINATE}",
                                line=lineno)
        if values and v <= values[-1]:
            raise MonotonicityError(f"line {lineno}: {v} does not exceed {values[-1]}",
                                    index=len(values) + 1)
        values.append(v)
    return ZeroTable(np.array(values, dtype=np.float64), hashlib.sha256(raw).hexdigest())


def _check(X, T):
    if not X > 0:
        raise ParameterError(f"X must be > 0, got {X}")
    if not T > 0:
        raise ParameterError(f"T must be > 0, got {T}")


def _f_naive(g: np.ndarray, logX: float) -> float:
    n = g.size
    parts = [float(n)]
    for i in range(0, n, _BLOCK):
        a = g[i : i + _BLOCK]
        for j in range(i, n, _BLOCK):
            b = g[j : j + _BLOCK]
            if b[0] - a[-1] > PAIR_CUTOFF:
                break
            u = a[:, None] - b[None, :]
            w = 4.0 * np.cos(u * logX) / (4.0 + u * u)
            if i == j:
                w = np.triu(w, k=1)
            parts.append(2.0 * math.fsum(w.ravel()))
    return math.fsum(parts)


def _f_integral(g: np.ndarray, logX: float) -> float:
    span = float(g[-1] - g[0])
    # Gauss nodes per panel: resolve the highest frequency in |sum|^2
    n = 20 + math.ceil(PANEL_WIDTH * span / math.pi)
    edges = np.arange(-T_CUTOFF, T_CUTOFF + PANEL_WIDTH / 2, PANEL_WIDTH)
    nodes, weights = quad.panel_nodes(edges, n)
    centre = 0.5 * (g[0] + g[-1])
    shifted = g - centre
    total = []
    step = max(1, 4_000_000 // g.size)
    for k in range(0, nodes.size, step):
        s = logX + nodes[k : k + step]
        phase = np.remainder(np.multiply.outer(s, shifted), 2 * np.pi)
        z = np.exp(1j * phase).sum(axis=1)
        total.append(weights[k : k + step] * np.exp(-2 * np.abs(nodes[k : k + step]))
                     * np.abs(z) ** 2)
    return math.fsum(np.concatenate(total))


def compute_F(zeros: ZeroTable, X: float, T: float, method: str = "naive") -> float:
    """F(X, T) by the direct pair sum or by its integral representation."""
    _check(X, T)
    g = zeros.up_to(T)
    if g.size == 0:
        return 0.0
    logX = math.log(X)
    if method == "naive":
        return _f_naive(g, logX)
    if method == "integral":
        return _f_integral(g, logX)
    raise ParameterError(f"method must be 'naive' or 'integral', got {method!r}")


def f_main_term(T: float) -> float:
    """(T / 2 pi)(log(T / 2 pi) - 1)."""
    y = T / (2 * math.pi)
    return y * (math.log(y) - 1.0)


def f_residual(zeros: ZeroTable, X: float, T: float, a: float | None = None,
               b: float | None = None, method: str = "naive") -> ResidualReport:
    """F against its main term; with (a, b) the envelope T^(1-a) / (log T)^b
    is attached (no envelope otherwise)."""
    F = compute_F(zeros, X, T, method)
    if a is not None and b is not None:
        envelope = T ** (1 - a) / math.log(T) ** b
    else:
        envelope = math.nan
    inputs = {"X": X, "param": T, "a": a, "b": b, "c": None,
              "zeros": len(zeros.up_to(T)), "source_digest": zeros.source_digest,
              "method": method}
    return make_report(F, f_main_term(T), envelope, inputs)
