"""Banded linear operators used by the high-resolution objective.

Every operator here has a small, fixed number of nonzeros per row, so a
row-indexed ``(cols, coefs)`` pair of ``(n_rows, width)`` arrays is enough.
Padding slots carry a zero coefficient and column 0.

Difference operators follow the chronological convention
``(D_T s)[k] = s[k + T] - s[k]``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .core import DimensionMismatch, NotDivisible, TooShort


class BandedOperator:
    """Row-sparse matrix with a constant number of stored entries per row.

    Parameters
    ----------
    n_cols : int
        Number of columns.
    cols : ndarray of int, shape (n_rows, width)
        Column index of each stored entry.
    coefs : ndarray of float, shape (n_rows, width)
        Coefficient of each stored entry.
    """

    __slots__ = ("n_rows", "n_cols", "cols", "coefs")

    def __init__(self, n_cols: int, cols, coefs):
        cols = np.asarray(cols, dtype=np.intp)
        coefs = np.asarray(coefs, dtype=np.float64)
        if cols.ndim != 2 or cols.shape != coefs.shape:
            raise DimensionMismatch("cols and coefs must be 2-D arrays of equal shape")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise DimensionMismatch("column index out of range")
        cols.flags.writeable = False
        coefs.flags.writeable = False
        self.n_rows = cols.shape[0]
        self.n_cols = int(n_cols)
        self.cols = cols
        self.coefs = coefs

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def width(self) -> int:
        return self.cols.shape[1]

    def row_nnz(self) -> np.ndarray:
        return np.count_nonzero(self.coefs, axis=1)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_cols,):
            raise DimensionMismatch(f"expected input of length {self.n_cols}, got {x.shape}")
        if self.coefs.shape[1] == 0:
            return np.zeros(self.n_rows)
        # fixed left-to-right accumulation, so results match a plain loop exactly
        out = self.coefs[:, 0] * x[self.cols[:, 0]]
        for j in range(1, self.coefs.shape[1]):
            out += self.coefs[:, j] * x[self.cols[:, j]]
        return out

    def apply_transpose(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.n_rows,):
            raise DimensionMismatch(f"expected input of length {self.n_rows}, got {y.shape}")
        return np.bincount(self.cols.ravel(), weights=(self.coefs * y[:, None]).ravel(),
                           minlength=self.n_cols)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.n_rows), self.width)
        np.add.at(out, (rows, self.cols.ravel()), self.coefs.ravel())
        return out

    def to_scipy(self) -> sp.csr_matrix:
        rows = np.repeat(np.arange(self.n_rows), self.width)
        m = sp.csr_matrix((self.coefs.ravel(), (rows, self.cols.ravel())), shape=self.shape)
        m.eliminate_zeros()
        return m

    def __repr__(self) -> str:
        return f"BandedOperator(shape={self.shape}, width={self.width})"


def _merge_rows(n_cols: int, cols: np.ndarray, coefs: np.ndarray) -> BandedOperator:
    """Combine duplicate columns within each row and drop exact zeros."""
    n_rows, width = cols.shape
    if width == 0 or n_rows == 0:
        return BandedOperator(n_cols, cols.reshape(n_rows, 0), coefs.reshape(n_rows, 0))
    order = np.argsort(cols, axis=1, kind="stable")
    cols = np.take_along_axis(cols, order, axis=1)
    coefs = np.take_along_axis(coefs, order, axis=1)
    rows = np.repeat(np.arange(n_rows), width)
    flat_cols = cols.ravel()
    key = rows * n_cols + flat_cols
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    sums = np.add.reduceat(coefs.ravel(), starts)
    u_rows, u_cols = rows[starts], flat_cols[starts]
    keep = sums != 0.0
    u_rows, u_cols, sums = u_rows[keep], u_cols[keep], sums[keep]
    counts = np.bincount(u_rows, minlength=n_rows)
    new_width = int(counts.max()) if counts.size else 0
    out_cols = np.zeros((n_rows, new_width), dtype=np.intp)
    out_coefs = np.zeros((n_rows, new_width))
    offsets = np.r_[0, np.cumsum(counts)[:-1]]
    slot = np.arange(u_rows.size) - offsets[u_rows]
    out_cols[u_rows, slot] = u_cols
    out_coefs[u_rows, slot] = sums
    return BandedOperator(n_cols, out_cols, out_coefs)


def identity(n: int) -> BandedOperator:
    return BandedOperator(n, np.arange(n)[:, None], np.ones((n, 1)))


def downsample(s, n: int) -> np.ndarray:
    """Block means of `s` over consecutive blocks of `n` samples."""
    s = np.asarray(s, dtype=np.float64)
    if n < 1 or s.size % n:
        raise NotDivisible(f"length {s.size} is not divisible by {n}")
    return build_aggregation(s.size, n).apply(s)


def seasonal_difference(s, t_period: int) -> np.ndarray:
    """``s[k + t_period] - s[k]`` for every valid ``k``."""
    s = np.asarray(s, dtype=np.float64)
    if t_period < 1 or s.size <= t_period:
        raise TooShort(f"length {s.size} must exceed the lag {t_period}")
    return s[t_period:] - s[:-t_period]


def build_aggregation(t_r: int, n: int) -> BandedOperator:
    if n < 1 or t_r % n:
        raise NotDivisible(f"{t_r} is not divisible by {n}")
    cols = np.arange(t_r).reshape(t_r // n, n)
    return BandedOperator(t_r, cols, np.full(cols.shape, 1.0 / n))


def build_seasonal_diff(length: int, t_period: int) -> BandedOperator:
    if t_period < 1 or length <= t_period:
        raise TooShort(f"length {length} must exceed the lag {t_period}")
    k = np.arange(length - t_period)
    cols = np.stack([k, k + t_period], axis=1)
    coefs = np.tile([-1.0, 1.0], (k.size, 1))
    return BandedOperator(length, cols, coefs)


def build_first_diff(length: int) -> BandedOperator:
    if length < 2:
        raise TooShort("first difference needs at least 2 samples")
    return build_seasonal_diff(length, 1)


def build_second_diff(length: int) -> BandedOperator:
    if length < 3:
        raise TooShort("second difference needs at least 3 samples")
    k = np.arange(length - 2)
    cols = np.stack([k, k + 1, k + 2], axis=1)
    coefs = np.tile([-1.0, 2.0, -1.0], (k.size, 1))
    return BandedOperator(length, cols, coefs)


def hstack_double(op: BandedOperator) -> BandedOperator:
    """``[op, op]``: the same operator applied to both halves and summed."""
    return BandedOperator(2 * op.n_cols, np.hstack([op.cols, op.cols + op.n_cols]),
                          np.hstack([op.coefs, op.coefs]))


def bdiag_double(op: BandedOperator) -> BandedOperator:
    """Block-diagonal ``bdiag(op, op)``."""
    return BandedOperator(2 * op.n_cols, np.vstack([op.cols, op.cols + op.n_cols]),
                          np.vstack([op.coefs, op.coefs]))


def compose(left: BandedOperator, right: BandedOperator) -> BandedOperator:
    """Matrix product ``left @ right`` in row-sparse form."""
    if left.n_cols != right.n_rows:
        raise DimensionMismatch(f"cannot compose {left.shape} with {right.shape}")
    cols = right.cols[left.cols]                                # (n, wl, wr)
    coefs = left.coefs[:, :, None] * right.coefs[left.cols]
    n = left.n_rows
    return _merge_rows(right.n_cols, cols.reshape(n, -1), coefs.reshape(n, -1))


def apply(op: BandedOperator, x) -> np.ndarray:
    return op.apply(x)


def apply_transpose(op: BandedOperator, y) -> np.ndarray:
    return op.apply_transpose(y)
