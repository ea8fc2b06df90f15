"""Von Mangoldt tables, Chebyshev's psi and the binary table cache.

The table is built with a segmented sieve of Eratosthenes; prime powers
p**k (k >= 2) only involve base primes p <= sqrt(X) and are written in a
separate pass.  Prefix sums are accumulated exactly in fixed point: every
stored Lambda(n) is a double >= log 2, hence an integer multiple of
2**-53, so psi(n) * 2**53 is an exact integer carried as two int64
cumulative sums and rounded to float64 only once at the end.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import CapacityError, FormatError, RangeError

SEGMENT_SIZE = 1 << 20
MAX_X = 10**9
# Bytes the table (two float64 arrays) may occupy; override per call.
MEMORY_BUDGET = 4 * 2**30

CACHE_MAGIC = b"PSILAB01"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sBQ")

_FIXED_SHIFT = 53
_SPLIT = 26
_SPLIT_MASK = (1 << _SPLIT) - 1


@dataclass(frozen=True, eq=False)
class MangoldtTable:
    """Lambda(n) and psi(n) for 0 <= n <= X.

    Both arrays have length X + 1 with index 0 holding 0, so ``lam[n]`` is
    Lambda(n) and ``psi_prefix[n]`` is psi(n).  Arrays are read-only.
    """

    X: int
    lam: np.ndarray
    psi_prefix: np.ndarray

    def __post_init__(self):
        for arr in (self.lam, self.psi_prefix):
            if arr.shape != (self.X + 1,):
                raise ValueError("table arrays must have length X + 1")
            arr.setflags(write=False)

    def __len__(self):
        return self.X

    def same_as(self, other: "MangoldtTable") -> bool:
        """Bit-level equality of two tables."""
        return (
            self.X == other.X
            and self.lam.tobytes() == other.lam.tobytes()
            and self.psi_prefix.tobytes() == other.psi_prefix.tobytes()
        )


def small_primes(limit: int) -> np.ndarray:
    """All primes <= limit (plain sieve, used for the base primes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.nonzero(flags)[0].astype(np.int64)


def _sieve_segment(lam, lo, hi, base):
    """Write log p at every prime p in [lo, hi)."""
    is_prime = np.ones(hi - lo, dtype=bool)
    if lo <= 1:
        is_prime[: 2 - lo] = False
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        start = max(p * p, -(-lo // p) * p)
        is_prime[start - lo :: p] = False
    idx = np.nonzero(is_prime)[0] + lo
    lam[idx] = np.log(idx.astype(np.float64))


def exact_prefix_sums(lam: np.ndarray, chunk: int = SEGMENT_SIZE) -> np.ndarray:
    """Cumulative sums of ``lam`` rounded once from exact fixed point.

    Every nonzero entry must be >= 0.5 and < 32 so that it is an integer
    multiple of 2**-53 below 2**58.
    """
    out = np.empty(lam.shape[0], dtype=np.float64)
    carry_hi = 0
    carry_lo = 0
    for start in range(0, lam.shape[0], chunk):
        block = lam[start : start + chunk]
        units = np.ldexp(block, _FIXED_SHIFT).astype(np.int64)
        hi = np.cumsum(units >> _SPLIT) + carry_hi
        lo = np.cumsum(units & _SPLIT_MASK) + carry_lo
        carry_hi = int(hi[-1])
        carry_lo = int(lo[-1])
        # normalise so the low word stays below 2**26 before rounding
        hi = hi + (lo >> _SPLIT)
        lo = lo & _SPLIT_MASK
        out[start : start + block.shape[0]] = np.ldexp(
            hi.astype(np.float64), _SPLIT - _FIXED_SHIFT
        ) + np.ldexp(lo.astype(np.float64), -_FIXED_SHIFT)
    return out


def build_mangoldt_table(
    X: int, *, threads: int = 1, memory_budget: int | None = None
) -> MangoldtTable:
    """Sieve Lambda(n) for n <= X and attach exact prefix sums psi(n)."""
    X = int(X)
    budget = MEMORY_BUDGET if memory_budget is None else memory_budget
    if X < 1:
        raise CapacityError(f"table limit must be >= 1, got {X}")
    if X > MAX_X or 16 * (X + 1) > budget:
        raise CapacityError(
            f"table for X={X} needs {16 * (X + 1)} bytes, budget is {budget}"
        )
    lam = np.zeros(X + 1, dtype=np.float64)
    base = small_primes(math.isqrt(X))
    starts = range(0, X + 1, SEGMENT_SIZE)

    def fill(lo):
        _sieve_segment(lam, lo, min(lo + SEGMENT_SIZE, X + 1), base)

    if threads > 1 and len(starts) > 1:
        # segments write disjoint slices, so the result is order independent
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    else:
        for lo in starts:
            fill(lo)

    log_base = np.log(base.astype(np.float64))
    for p, lp in zip(base.tolist(), log_base):
        q = p * p
        while q <= X:
            lam[q] = lp
            q *= p

    return MangoldtTable(X, lam, exact_prefix_sums(lam))


def psi(table: MangoldtTable, y):
    """Chebyshev's psi(y) = sum of Lambda(n) over n <= y (left step value)."""
    arr = np.asarray(y, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > table.X):
        raise RangeError(f"psi argument outside [0, {table.X}]")
    out = table.psi_prefix[np.floor(arr).astype(np.int64)]
    return float(out) if out.ndim == 0 else out


def psi_rh_ratio(table: MangoldtTable, Y: int) -> float:
    """Largest |psi(y) - y| / (sqrt(y) log(y)^2) over integers 100 <= y <= Y."""
    Y = int(Y)
    if Y < 100 or Y > table.X:
        raise RangeError(f"Y must lie in [100, {table.X}], got {Y}")
    y = np.arange(100, Y + 1, dtype=np.float64)
    dev = np.abs(table.psi_prefix[100 : Y + 1] - y)
    return float(np.max(dev / (np.sqrt(y) * np.log(y) ** 2)))


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _fnv1a64(data, h):
    prime = np.uint64(0x100000001B3)
    for b in data:
        h = (h ^ np.uint64(b)) * prime
    return h


def fnv1a64(*buffers) -> int:
    """64-bit FNV-1a hash over the concatenation of ``buffers``."""
    h = np.uint64(0xCBF29CE484222325)
    for buf in buffers:
        h = np.uint64(_fnv1a64(np.frombuffer(buf, dtype=np.uint8), np.uint64(h)))
    return int(h)


def write_table(table: MangoldtTable, path) -> Path:
    path = Path(path)
    lam = np.ascontiguousarray(table.lam[1:], dtype="<f8")
    psi_ = np.ascontiguousarray(table.psi_prefix[1:], dtype="<f8")
    checksum = fnv1a64(lam, psi_)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, 0, table.X))
        fh.write(lam.tobytes())
        fh.write(psi_.tobytes())
        fh.write(struct.pack("<Q", checksum))
    return path


def read_table(path) -> MangoldtTable:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError("truncated header", offset=len(data))
    magic, flag, X = _HEADER.unpack_from(data, 0)
    if magic != CACHE_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if flag not in (0, 1):
        raise FormatError(f"bad endianness flag {flag}", offset=8)
    expected = _HEADER.size + 16 * X + 8
    if len(data) != expected:
        raise FormatError(
            f"file length {len(data)} does not match X={X} (expected {expected})",
            offset=min(len(data), expected),
        )
    dtype = "<f8" if flag == 0 else ">f8"
    body = _HEADER.size
    lam_bytes = data[body : body + 8 * X]
    psi_bytes = data[body + 8 * X : body + 16 * X]
    (stored,) = struct.unpack_from("<Q", data, body + 16 * X)
    if fnv1a64(lam_bytes, psi_bytes) != stored:
        raise FormatError("checksum mismatch", offset=body + 16 * X)
    lam = np.zeros(X + 1)
    psi_ = np.zeros(X + 1)
    lam[1:] = np.frombuffer(lam_bytes, dtype=dtype)
    psi_[1:] = np.frombuffer(psi_bytes, dtype=dtype)
    return MangoldtTable(int(X), lam, psi_)


def cache_roundtrip(table: MangoldtTable, path) -> MangoldtTable:
    """Write ``table`` to ``path`` and read it back."""
    write_table(table, path)
    return read_table(path)


def cached_table(X: int, cache_dir=None, *, threads: int = 1) -> MangoldtTable:
    """Load the table for ``X`` from ``cache_dir`` or build and store it."""
    if cache_dir is None:
        return build_mangoldt_table(X, threads=threads)
    path = Path(cache_dir) / f"mangoldt_{int(X)}.bin"
    if path.exists():
        return read_table(path)
    table = build_mangoldt_table(X, threads=threads)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_table(table, path)
    return table
