"""Exact permanents of complex matrices.

Two routes are kept deliberately independent so each can serve as an oracle
for the other:

* ``perm_naive`` sums products over all n! permutations (the definition).
* ``perm_fast`` is Gray-code Ryser: O(2^n * n) arithmetic with running row
  sums, so each subset update touches one column.  The 2^n terms largely
  cancel, so the accumulator uses Kahan-compensated summation.

``perm_with_multiplicities`` expands repeated rows/columns explicitly and
defers to ``perm_fast``; multiply occupied ports at desk scale do not need a
multiplicity-aware kernel.  Size guards are arguments, not hard-coded limits.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import CostGuardError, DomainError

__all__ = ["perm_naive", "perm_fast", "perm_with_multiplicities"]

NAIVE_MAX_N = 10
FAST_MAX_N = 30


def _as_square_complex(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DomainError(f"need a square matrix of order >= 1, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise DomainError("matrix entries must be finite")
    return np.ascontiguousarray(m)


def _ryser_gray_py(a: np.ndarray) -> complex:
    """Pure-Python Gray-code Ryser, fallback when the JIT is unavailable."""
    n = a.shape[0]
    cols = [a[:, j].copy() for j in range(n)]
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j  # Kahan compensation
    sign = 1.0
    gray = 0
    for m in range(1, 1 << n):
        j = (m & -m).bit_length() - 1  # bit flipped in the Gray code
        bit = 1 << j
        gray ^= bit
        if gray & bit:
            row_sums += cols[j]
        else:
            row_sums -= cols[j]
        sign = -sign  # parity of |S| flips with every Gray-code step
        term = sign * np.prod(row_sums)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    if n % 2:
        total = -total
    return complex(total)


def _ryser_gray_impl(a):  # pragma: no cover - replaced by the JIT when available
    n = a.shape[0]
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    sign = 1.0
    gray = np.uint64(0)
    for m in range(1, 1 << n):
        j = 0
        while not (m >> j) & 1:
            j += 1
        bit = np.uint64(1 << j)
        gray ^= bit
        if gray & bit:
            for i in range(n):
                row_sums[i] += a[i, j]
        else:
            for i in range(n):
                row_sums[i] -= a[i, j]
        sign = -sign
        prod = 1.0 + 0.0j
        for i in range(n):
            prod *= row_sums[i]
        term = sign * prod
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    if n % 2:
        total = -total
    return total


try:  # JIT the Gray-code loop; fall back to the numpy version on any failure
    import numba as _numba

    _ryser_gray_jit = _numba.njit("complex128(complex128[:, ::1])", cache=True)(_ryser_gray_impl)
except Exception:  # pragma: no cover
    _ryser_gray_jit = None


# Permutation index tables for the definitional oracle, cached per order.
_PERM_TABLES: dict[int, np.ndarray] = {}


def _permutation_table(n: int) -> np.ndarray:
    table = _PERM_TABLES.get(n)
    if table is None:
        table = np.array(list(itertools.permutations(range(n))), dtype=np.int8)
        _PERM_TABLES[n] = table
    return table


def perm_naive(a, max_n: int = NAIVE_MAX_N) -> complex:
    """Permanent by direct summation over all n! permutations.

    Refuses orders above ``max_n`` (default 10): the factorial blowup makes
    larger instances pointless when ``perm_fast`` computes the same quantity.
    """
    m = _as_square_complex(a)
    n = m.shape[0]
    if n > max_n:
        raise CostGuardError(f"perm_naive refuses n={n} > {max_n}; use perm_fast")
    rows = np.arange(n)
    total = 0.0 + 0.0j
    # Chunk the permutation table so n=10 stays within ~100 MB of scratch.
    table = _permutation_table(n)
    chunk = max(1, 200_000 // max(n, 1))
    for start in range(0, table.shape[0], chunk):
        block = table[start:start + chunk]
        total += complex(np.prod(m[rows, block], axis=1).sum())
    return total


def perm_fast(a, max_n: int = FAST_MAX_N) -> complex:
    """Permanent via Gray-code Ryser in O(2^n * n) operations."""
    m = _as_square_complex(a)
    n = m.shape[0]
    if n > max_n:
        raise CostGuardError(f"perm_fast refuses n={n} > {max_n}; raise max_n explicitly "
                             "if you accept the 2^n cost")
    if n == 1:
        return complex(m[0, 0])
    if _ryser_gray_jit is not None:
        return complex(_ryser_gray_jit(m))
    return _ryser_gray_py(m)


def perm_with_multiplicities(a, row_mult, col_mult, max_n: int = FAST_MAX_N) -> complex:
    """Permanent of the matrix with rows/columns duplicated per multiplicity.

    ``row_mult[i]`` copies of row i and ``col_mult[j]`` copies of column j are
    laid out in index order; the expanded matrix must be square and within the
    ``perm_fast`` guard.
    """
    m = _as_square_complex(a)
    rm = np.asarray(row_mult, dtype=np.int64)
    cm = np.asarray(col_mult, dtype=np.int64)
    if rm.shape != (m.shape[0],) or cm.shape != (m.shape[0],):
        raise DomainError("multiplicity lists must match the matrix order")
    if np.any(rm < 0) or np.any(cm < 0):
        raise DomainError("multiplicities must be non-negative")
    total_rows = int(rm.sum())
    total_cols = int(cm.sum())
    if total_rows != total_cols:
        raise DomainError(f"row multiplicities sum to {total_rows} but column "
                          f"multiplicities sum to {total_cols}")
    if total_rows == 0:
        raise DomainError("expanded matrix is empty")
    expanded = np.repeat(np.repeat(m, rm, axis=0), cm, axis=1)
    return perm_fast(expanded, max_n=max_n)
