"""Acceptance criteria, one test each, at the stated tolerances.

Frozen empirical constants come from psilab/calibration.json and may not
grow beyond twice their recorded value.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from psilab.calibration import REGRESSION_FACTOR, frozen
from psilab.expsum import build_grid, r_truncated_exact
from psilab.kernels import EULER_GAMMA, LOG_2PI, fejer_weight, kernel_moments, poisson_sum_U, verify_k_transf
from psilab.models import c_prime_from_c, j_main_term, r_main_term
from psilab.paircorr import ZeroTable, compute_F
from psilab.primes import build_mangoldt_table, psi_rh_ratio
from psilab.variance import (
    compute_J,
    compute_J_tilde,
    j_tilde_via_laplace,
    moment_residual,
    weighted_second_moment,
)


@pytest.fixture(scope="module")
def big_table():
    return build_mangoldt_table(1_001_000)


def test_criterion_01_kernel_masses():
    start = time.perf_counter()
    for h in (1.0, 2.0, 7.0, 10.5, 100.0):
        k = kernel_moments("K", h)
        u = kernel_moments("U", h)
        assert abs(k.mass - h / 2) <= 1e-10 * h / 2
        assert abs(u.mass - h / 2) <= 1e-8 * h / 2
        ref = -(h / 2) * (LOG_2PI + EULER_GAMMA - 1)
        assert abs(u.log_mass - ref) <= 1e-6 * abs(ref)
    bound = frozen("k_log_mass_deviation")
    worst = 0.0
    for h in np.linspace(1.0, 100.0, 991):
        dev = kernel_moments("K", h).log_mass + (h / 2) * (LOG_2PI + EULER_GAMMA - 1)
        worst = max(worst, abs(dev))
    print(f"max |K log-mass deviation| on [1, 100]: {worst:.7f} (frozen {bound})")
    assert worst <= bound
    assert time.perf_counter() - start < 10


def test_criterion_02_poisson_and_moments(big_table):
    start = time.perf_counter()
    rng = np.random.default_rng(12345)
    alpha = rng.uniform(-0.5, 0.5, 1000)
    hs = rng.uniform(1.0, 100.0, 1000)
    worst = max(abs(poisson_sum_U(a, h, 64) - fejer_weight(a, h)) for a, h in zip(alpha, hs))
    assert worst <= 1e-6
    for X in (100, 1000, 10_000):
        grid = build_grid(big_table, X=X)
        for h in (1, 5, 20):
            k = weighted_second_moment(grid, h, "K")
            u = weighted_second_moment(grid, h, "U")
            assert abs(k - u) <= 1e-6 * abs(k)
    assert time.perf_counter() - start < 60


def test_criterion_03_parseval(big_table):
    for X in (10, 1000, 10**6):
        ref = math.fsum((big_table.lam[1 : X + 1] - 1.0) ** 2)
        value = r_truncated_exact(build_grid(big_table, X=X), 0.5)
        assert abs(value - ref) <= 1e-9 * ref
        if X == 10:
            assert value == pytest.approx(4.56814, abs=1e-4)


def test_criterion_04_exact_vs_oracle_J(big_table):
    psi_ = big_table.psi_prefix
    for X, h in ((100, 3.5), (1000, 7.5)):
        step = 1e-4
        x = np.arange(1.0, X, step) + step / 2
        d = psi_[np.floor(x + h).astype(np.int64)] - psi_[np.floor(x).astype(np.int64)] - h
        oracle = math.fsum(d * d * step)
        assert abs(compute_J(big_table, X, h).value - oracle) <= 1e-3
    J = compute_J(big_table, 10, 1).value
    assert J == pytest.approx(math.fsum((big_table.lam[2:11] - 1) ** 2), rel=1e-14)
    assert J == pytest.approx(3.56814, abs=1e-4)


def test_criterion_05_J_Jtilde(big_table):
    start = time.perf_counter()
    for X in (100, 1000):
        for h in (1, 2, 5):
            a = compute_J_tilde(big_table, X, h).value
            b = j_tilde_via_laplace(big_table, X, h)
            assert abs(a - b) <= 1e-4 * abs(a)
    assert time.perf_counter() - start < 60


def test_criterion_06_k_transf():
    for eta in (0.05, 0.1, 0.2):
        for t in (0.0, 0.5, 1.0, 1 + eta / 2, 1 + eta, 2.0):
            c = verify_k_transf(t, eta)
            assert abs(c.lhs - c.rhs) <= 1e-6


def test_criterion_07_moment_envelope(big_table):
    bound = REGRESSION_FACTOR * frozen("moment_vs_J")
    for X in (10**3, 10**4, 10**5):
        grid = build_grid(big_table, X=X)
        for h in (2.0, 10.0, X**0.3):
            r = moment_residual(big_table, grid, X, h, "plain")
            assert r.envelope == pytest.approx((h + 1) * X * math.log(X) ** 4)
            print(f"X={X} h={h:.3f} C={r.empirical_constant:.4e}")
            assert r.empirical_constant <= bound


def test_criterion_08_main_term_trends(big_table):
    start = time.perf_counter()
    c = -4.0
    cp = c_prime_from_c(c)
    assert cp == pytest.approx(-EULER_GAMMA - LOG_2PI, abs=1e-15)
    gaps_j, gaps_r = [], []
    for X in (10**4, 10**5, 10**6):
        h, xi = X**0.3, X**-0.4
        rj = compute_J(big_table, X, h).value / j_main_term(X, h, cp)
        rr = r_truncated_exact(build_grid(big_table, X=X), xi) / r_main_term(X, xi, c)
        for r in (rj, rr):
            assert math.isfinite(r) and r > 0
        gaps_j.append(abs(rj - 1))
        gaps_r.append(abs(rr - 1))
        print(f"X={X}: J ratio {rj:.6f}, R ratio {rr:.6f}")
    print(f"|ratio-1| non-increasing: J {gaps_j == sorted(gaps_j, reverse=True)}, "
          f"R {gaps_r == sorted(gaps_r, reverse=True)}")
    assert gaps_j[-1] < 0.5 and gaps_r[-1] < 0.5
    assert time.perf_counter() - start < 300


def test_criterion_09_F_methods(zero_table):
    T = zero_table.gammas[99]
    for X in (2.0, 50.0, 1e3):
        a = compute_F(zero_table, X, T, "naive")
        b = compute_F(zero_table, X, T, "integral")
        assert abs(a - b) <= 1e-4 * abs(a)
        assert abs(a - compute_F(zero_table, 1 / X, T)) <= 1e-10 * abs(a)
    single = ZeroTable(zero_table.gammas[:1].copy())
    assert compute_F(single, 50.0, single.max_height) == 1.0


def test_criterion_10_psi_bound(big_table):
    start = time.perf_counter()
    r = psi_rh_ratio(big_table, 10**6)
    print(f"psi_rh_ratio(1e6) = {r:.7f}")
    assert r <= 0.3
    assert r <= REGRESSION_FACTOR * frozen("psi_rh_ratio_1e6")
    assert time.perf_counter() - start < 30


def test_criterion_11_determinism(tmp_path):
    outputs = []
    for threads in (1, 8):
        out = tmp_path / f"verify_{threads}.txt"
        proc = subprocess.run(
            [sys.executable, "-m", "psilab.cli", "verify", "--X", "10000",
             "--threads", str(threads), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
