"""Non-increasing / non-decreasing rearrangements of weighted samples.

A weighted sample stands in for a non-negative function W on a finite measure
space.  The two rearrangements are the usual sup-definitions over level sets:

    dec(t) = sup{s > 0 : mass{W >= s} >= t}     (largest value carried by mass t)
    inc(t) = sup{s > 0 : mass{W <= s} <  t}

Both are evaluated with closed comparisons, no epsilon fudging: with exact
(int/Fraction) values and weights the results are exact.  Two-variable
functions get a partial rearrangement (per-column, in the first variable) and
a repeated rearrangement (rearrange the partial result in the second
variable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._util import Number


def _check_finite(x) -> bool:
    try:
        return math.isfinite(x)
    except TypeError:
        return True  # Fractions / ints are always finite


@dataclass(frozen=True)
class WeightedSample:
    """Flat list of (value, weight) atoms with cached total mass."""

    values: tuple
    weights: tuple
    total: Number = field(init=False)

    def __init__(self, values: Sequence, weights: Sequence):
        values = tuple(values)
        weights = tuple(weights)
        if len(values) != len(weights):
            raise ValueError("values and weights must have equal length")
        if not values:
            raise ValueError("empty sample")
        for v in values:
            if not _check_finite(v) or v < 0:
                raise ValueError(f"values must be finite and >= 0, got {v!r}")
        total = 0
        for w in weights:
            if not _check_finite(w) or w < 0:
                raise ValueError(f"weights must be finite and >= 0, got {w!r}")
            total = total + w
        if not total > 0:
            raise ValueError("total mass must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "total", total)

    def __len__(self) -> int:
        return len(self.values)

    def scaled(self, c: Number) -> "WeightedSample":
        return WeightedSample([c * v for v in self.values], self.weights)


def rearrange_dec(sample: WeightedSample, t: Number) -> Number:
    """Non-increasing rearrangement of the sample at mass t, 0 < t <= total.

    Sorting descending and cumulating weights, returns the value at the first
    cumulative mass >= t.  Equal values may be merged into one bucket without
    changing the result, so no explicit tie handling is needed.
    """
    if not (t > 0):
        raise ValueError(f"t must be positive, got {t!r}")
    if t > sample.total:
        raise ValueError(f"t={t!r} exceeds total mass {sample.total!r}")
    order = sorted(range(len(sample)), key=lambda i: sample.values[i], reverse=True)
    cum = 0
    for i in order:
        cum = cum + sample.weights[i]
        if cum >= t:
            return sample.values[i]
    # unreachable: cum == total >= t
    return sample.values[order[-1]]


def rearrange_inc(sample: WeightedSample, t: Number) -> Number:
    """Non-decreasing rearrangement at mass t, 0 < t < total.

    Sup over s of the strict condition mass{W <= s} < t: sorting ascending,
    this is the value at the first cumulative mass >= t.
    """
    if not (t > 0):
        raise ValueError(f"t must be positive, got {t!r}")
    if not (t < sample.total):
        raise ValueError(f"t={t!r} must be below total mass {sample.total!r}")
    order = sorted(range(len(sample)), key=lambda i: sample.values[i])
    cum = 0
    for i in order:
        cum = cum + sample.weights[i]
        if cum >= t:
            return sample.values[i]
    return sample.values[order[-1]]


@dataclass(frozen=True)
class Matrix2D:
    """Two-variable non-negative function on a product of finite measure spaces.

    ``entries[i][j]`` is the value at (row atom i, column atom j); the row and
    column weights are the two measures.  Entries may be a nested sequence
    (exact arithmetic) or a 2-d numpy array (fast path).
    """

    entries: object
    row_weights: tuple
    col_weights: tuple

    def __init__(self, entries, row_weights: Sequence, col_weights: Sequence):
        row_weights = tuple(row_weights)
        col_weights = tuple(col_weights)
        if isinstance(entries, np.ndarray):
            if entries.ndim != 2:
                raise ValueError("entries array must be 2-d")
            if entries.shape != (len(row_weights), len(col_weights)):
                raise ValueError("entry shape does not match weights")
            if not np.all(np.isfinite(entries)) or np.any(entries < 0):
                raise ValueError("entries must be finite and >= 0")
        else:
            entries = tuple(tuple(row) for row in entries)
            if len(entries) != len(row_weights):
                raise ValueError("row count does not match row weights")
            for row in entries:
                if len(row) != len(col_weights):
                    raise ValueError("column count does not match col weights")
                for e in row:
                    if not _check_finite(e) or e < 0:
                        raise ValueError("entries must be finite and >= 0")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "row_weights", row_weights)
        object.__setattr__(self, "col_weights", col_weights)

    @property
    def row_total(self) -> Number:
        return sum(self.row_weights)

    @property
    def col_total(self) -> Number:
        return sum(self.col_weights)

    def column(self, j: int) -> WeightedSample:
        if isinstance(self.entries, np.ndarray):
            vals = self.entries[:, j].tolist()
        else:
            vals = [row[j] for row in self.entries]
        return WeightedSample(vals, self.row_weights)

    def transpose(self) -> "Matrix2D":
        if isinstance(self.entries, np.ndarray):
            ent = self.entries.T.copy()
        else:
            ent = tuple(zip(*self.entries))
        return Matrix2D(ent, self.col_weights, self.row_weights)


def _partial_rearrange_fast(entries: np.ndarray, row_weights, t) -> list:
    """Vectorized per-column rearrangement for integer row weights.

    Matches rearrange_dec exactly when weights and t are integers (cumulative
    sums are then exact in int64).
    """
    w = np.asarray(row_weights, dtype=np.int64)
    order = np.argsort(-entries, axis=0, kind="stable")
    cums = np.cumsum(w[order], axis=0)
    idx = np.argmax(cums >= int(t), axis=0)
    cols = np.arange(entries.shape[1])
    return entries[order[idx, cols], cols].tolist()


def partial_rearrange(matrix: Matrix2D, t: Number) -> WeightedSample:
    """Rearrange in the row variable at mass t, per column.

    Returns the column function s -> F*(.,s)(t) as a sample weighted by the
    column measure.  Per-column work is independent of evaluation order.
    """
    if not (t > 0) or t > matrix.row_total:
        raise ValueError(f"t={t!r} outside (0, row mass]")
    entries = matrix.entries
    if (
        isinstance(entries, np.ndarray)
        and all(isinstance(w, int) and not isinstance(w, bool) for w in matrix.row_weights)
        and isinstance(t, int)
    ):
        vals = _partial_rearrange_fast(entries, matrix.row_weights, t)
    else:
        vals = [rearrange_dec(matrix.column(j), t) for j in range(len(matrix.col_weights))]
    return WeightedSample(vals, matrix.col_weights)


def repeated_rearrange(matrix: Matrix2D, t: Number, u: Number) -> Number:
    """Repeated non-increasing rearrangement: rows at mass t, then columns at mass u."""
    if not (u > 0) or u > matrix.col_total:
        raise ValueError(f"u={u!r} outside (0, column mass]")
    return rearrange_dec(partial_rearrange(matrix, t), u)


# -- invariant helpers used by tests and reports ------------------------------

def min_max_inequality(entries) -> bool:
    """min over rows of the row max >= max over columns of the column min."""
    rows = [list(r) for r in (entries.tolist() if isinstance(entries, np.ndarray) else entries)]
    left = min(max(row) for row in rows)
    right = max(min(col) for col in zip(*rows))
    return left >= right
