"""Identity suite: exact relations every correct build must reproduce.

Each check compares a computed value with an independent reference and a
tolerance; the report is plain text with fixed formatting so that runs with
the same configuration are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expsum import build_grid, r_truncated_exact
from .kernels import (
    EULER_GAMMA,
    LOG_2PI,
    fejer_weight,
    kernel_moments,
    poisson_sum_U,
    verify_k_transf,
)
from .primes import MangoldtTable, cached_table
from .variance import compute_J_tilde, j_tilde_via_laplace, tilde_cutoff, weighted_second_moment

MASS_H = (1.0, 2.0, 7.0, 10.5, 100.0)
ETAS = (0.05, 0.1, 0.2)
MOMENT_H = (1.0, 5.0, 20.0)
JJ_H = (1.0, 2.0, 5.0)
POISSON_POINTS = 200
SEED = 20240601


@dataclass(frozen=True)
class Check:
    group: str
    label: str
    value: float
    reference: float
    error: float
    tol: float
    relative: bool = True

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tol)


def _rel(label, group, value, ref, tol):
    err = abs(value - ref) / max(abs(ref), 1e-300)
    return Check(group, label, float(value), float(ref), err, tol)


def _abs(label, group, value, ref, tol):
    return Check(group, label, float(value), float(ref), abs(value - ref), tol, False)


def mass_checks():
    out = []
    for h in MASS_H:
        k = kernel_moments("K", h)
        u = kernel_moments("U", h)
        out.append(_rel(f"K mass h={h:g}", "masses", k.mass, h / 2, 1e-10))
        out.append(_rel(f"U mass h={h:g}", "masses", u.mass, h / 2, 1e-8))
        ref = -(h / 2) * (LOG_2PI + EULER_GAMMA - 1)
        out.append(_rel(f"U log-mass h={h:g}", "masses", u.log_mass, ref, 1e-6))
    return out


def poisson_checks(points: int = POISSON_POINTS, seed: int = SEED):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(-0.5, 0.5, points)
    hs = rng.uniform(1.0, 100.0, points)
    worst = max(abs(poisson_sum_U(a, h, 64) - fejer_weight(a, h)) for a, h in zip(alpha, hs))
    return [_abs(f"sum U(n+a,h) = K(a,h), {points} points", "poisson", worst, 0.0, 1e-6)]


def parseval_checks(table: MangoldtTable, X: int, grid=None):
    grid = grid or build_grid(table, X=X)
    ref = math.fsum((table.lam[1 : X + 1] - 1.0) ** 2)
    return [_rel(f"R(X,1/2) = sum (Lambda-1)^2, X={X}", "parseval",
                 r_truncated_exact(grid, 0.5), ref, 1e-9)]


def transform_checks():
    out = []
    for eta in ETAS:
        for t in (0.0, 0.5, 1.0, 1 + eta / 2, 1 + eta, 2.0):
            c = verify_k_transf(t, eta)
            out.append(_abs(f"K_eta transform eta={eta:g} t={t:g}", "k-transf",
                            c.lhs, c.rhs, 1e-6))
    return out


def moment_checks(table: MangoldtTable, X: int, grid=None):
    grid = grid or build_grid(table, X=X)
    out = []
    for h in MOMENT_H:
        if h > X:
            continue
        k = weighted_second_moment(grid, h, "K")
        u = weighted_second_moment(grid, h, "U")
        out.append(_rel(f"K vs U moment X={X} h={h:g}", "k-vs-u", u, k, 1e-6))
    return out


def j_tilde_checks(table: MangoldtTable, X: int):
    out = []
    for h in JJ_H:
        if h > X:
            continue
        direct = compute_J_tilde(table, X, h).value
        lap = j_tilde_via_laplace(table, X, h)
        out.append(_rel(f"J tilde sweep vs Laplace X={X} h={h:g}", "j-jtilde",
                        lap, direct, 1e-4))
    return out


def table_limit(X: int) -> int:
    """Table length the suite needs at scale X."""
    x_max, _ = tilde_cutoff(X, max(JJ_H))
    return max(X + 2 * int(max(MOMENT_H)) + 2, x_max + int(max(JJ_H)) + 2)


def run_suite(X: int, *, table: MangoldtTable | None = None, cache_dir=None,
              threads: int = 1):
    if X < 10:
        raise ValueError("the suite needs X >= 10")
    if table is None:
        table = cached_table(table_limit(X), cache_dir, threads=threads)
    grid = build_grid(table, X=X)
    checks = []
    checks += mass_checks()
    checks += poisson_checks()
    checks += parseval_checks(table, X, grid)
    checks += transform_checks()
    checks += moment_checks(table, X, grid)
    checks += j_tilde_checks(table, X)
    return checks


def format_report(checks, header: dict | None = None) -> str:
    lines = []
    for k, v in (header or {}).items():
        lines.append(f"# {k} = {v}")
    lines.append(f"{'status':<6}  {'group':<10}  {'check':<44}  "
                 f"{'value':>22}  {'reference':>22}  {'error':>10}  {'tol':>8}")
    for c in checks:
        lines.append(
            f"{'PASS' if c.passed else 'FAIL':<6}  {c.group:<10}  {c.label:<44}  "
            f"{c.value:>22.15e}  {c.reference:>22.15e}  {c.error:>10.3e}  {c.tol:>8.1e}"
        )
    n_pass = sum(c.passed for c in checks)
    lines.append(f"# {n_pass}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"
