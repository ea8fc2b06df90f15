import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psilab.errors import CapacityError, FormatError, RangeError
from psilab.primes import (
    build_mangoldt_table,
    cache_roundtrip,
    cached_table,
    exact_prefix_sums,
    fnv1a64,
    psi,
    psi_rh_ratio,
    read_table,
    write_table,
)

from conftest import mangoldt_by_trial_division


def test_lambda_matches_trial_division(table):
    ref = np.array([mangoldt_by_trial_division(n) for n in range(3000)])
    assert np.array_equal(table.lam[:3000], ref)


def test_prime_power_count_below_10000(table):
    assert int(np.count_nonzero(table.lam[: 10_001])) == 1280


def test_small_psi_values(table):
    assert psi(table, 10) == pytest.approx(3 * math.log(2) + 2 * math.log(3) + math.log(5) + math.log(7), rel=1e-15)
    assert psi(table, 10) == pytest.approx(7.832014, abs=1e-6)
    assert psi(table, 100) == pytest.approx(94.045311, abs=1e-6)
    assert psi(table, 1.999) == 0.0
    assert psi(table, 0) == 0.0


def test_psi_is_exact_prefix_sum(table):
    exact = math.fsum(table.lam[: 200_001])
    assert table.psi_prefix[200_000] == exact


def test_exact_prefix_sums_against_fsum():
    rng = np.random.default_rng(3)
    vals = np.where(rng.random(5000) < 0.3, np.log(rng.integers(2, 10**6, 5000)), 0.0)
    sums = exact_prefix_sums(vals, chunk=777)
    for k in (0, 1, 776, 777, 1500, 4999):
        assert sums[k] == math.fsum(vals[: k + 1])


def test_segment_boundaries_and_threads():
    a = build_mangoldt_table(3 * 2**20 + 17, threads=1)
    b = build_mangoldt_table(3 * 2**20 + 17, threads=4)
    assert a.same_as(b)
    for n in (2**20 - 1, 2**20 + 1, 2**21 + 3, 3 * 2**20 + 17):
        assert a.lam[n] == mangoldt_by_trial_division(n)


def test_psi_range_errors(table):
    with pytest.raises(RangeError):
        psi(table, table.X + 1)
    with pytest.raises(RangeError):
        psi(table, -1)


def test_capacity_errors():
    with pytest.raises(CapacityError):
        build_mangoldt_table(0)
    with pytest.raises(CapacityError):
        build_mangoldt_table(10**6, memory_budget=1000)


def test_psi_rh_ratio(table):
    r = psi_rh_ratio(table, 10_000)
    assert r == pytest.approx(0.0280781, abs=1e-7)
    with pytest.raises(RangeError):
        psi_rh_ratio(table, 50)


def test_tables_are_read_only(table):
    with pytest.raises(ValueError):
        table.lam[5] = 1.0


def test_fnv1a64_reference_vectors():
    # published FNV-1a 64-bit test vectors
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8
    assert fnv1a64(b"foo", b"bar") == fnv1a64(b"foobar")


def test_cache_roundtrip(tmp_path):
    t = build_mangoldt_table(5000)
    assert cache_roundtrip(t, tmp_path / "t.bin").same_as(t)


def test_cache_big_endian_flag(tmp_path):
    import struct

    t = build_mangoldt_table(300)
    lam = t.lam[1:].astype(">f8")
    ps = t.psi_prefix[1:].astype(">f8")
    path = tmp_path / "be.bin"
    path.write_bytes(struct.pack("<8sBQ", b"PSILAB01", 1, 300) + lam.tobytes() + ps.tobytes()
                     + struct.pack("<Q", fnv1a64(lam.tobytes(), ps.tobytes())))
    assert read_table(path).same_as(t)


@pytest.mark.parametrize("damage, offset", [("magic", 0), ("flag", 8), ("truncate", None), ("flip", None)])
def test_cache_corruption_detected(tmp_path, damage, offset):
    path = write_table(build_mangoldt_table(1000), tmp_path / "c.bin")
    data = bytearray(path.read_bytes())
    if damage == "magic":
        data[0:8] = b"NOTMAGIC"
    elif damage == "flag":
        data[8] = 7
    elif damage == "truncate":
        data = data[:-3]
    else:
        data[100] ^= 0x40
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError) as exc:
        read_table(path)
    if offset is not None:
        assert exc.value.offset == offset
    assert "offset" in str(exc.value)


def test_cached_table_reuses_file(tmp_path):
    a = cached_table(2000, tmp_path)
    assert (tmp_path / "mangoldt_2000.bin").exists()
    b = cached_table(2000, tmp_path)
    assert a.same_as(b)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=299_999))
def test_psi_step_equals_lambda(table, n):
    assert psi(table, n) - psi(table, n - 1) == pytest.approx(table.lam[n], abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0, max_value=299_999, allow_nan=False))
def test_psi_monotone_and_left_continuous(table, y):
    assert psi(table, y) == psi(table, math.floor(y))
    assert psi(table, y) <= psi(table, min(y + 1.0, table.X))
