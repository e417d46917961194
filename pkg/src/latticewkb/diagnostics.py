"""Finite-range stand-ins for infinite-tail hypotheses.

Summability and limit statements cannot be decided on finite data. The
helpers here apply fixed, scale-free rules so every decision is
reproducible and reported rather than silently assumed.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Deceleration(NamedTuple):
    passed: bool
    increment: float
    total: float

    @property
    def ratio(self):
        return self.increment / self.total if self.total else 0.0


def decelerating(partial_sums, fraction=0.1) -> Deceleration:
    """Cauchy-style test: the last-quarter increment must be < ``fraction`` of the total.

    ``partial_sums`` is a nondecreasing array of partial sums of a
    nonnegative series.
    """
    ps = np.asarray(partial_sums, dtype=float)
    if ps.size < 4:
        return Deceleration(True, 0.0, float(ps[-1]) if ps.size else 0.0)
    total = float(ps[-1])
    start = ps[(3 * ps.size) // 4 - 1]
    inc = float(total - start)
    if not np.isfinite(total):
        return Deceleration(False, inc, total)
    if total == 0.0:
        return Deceleration(True, 0.0, 0.0)
    return Deceleration(inc < fraction * abs(total), inc, total)


def series_decelerating(terms, fraction=0.1) -> Deceleration:
    """Deceleration test applied to the partial sums of ``|terms|``."""
    return decelerating(np.cumsum(np.abs(np.asarray(terms, dtype=float))), fraction)


class TailLimit(NamedTuple):
    mean: float
    drift: float

    @property
    def is_zero(self):
        """A limit counts as zero when |mean| <= 10 * drift."""
        return abs(self.mean) <= 10.0 * self.drift


def tail_limit(values) -> TailLimit:
    """Estimate a limit from the last quarter of ``values``.

    The uncertainty is the change of the quarter mean relative to the
    previous quarter.
    """
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size < 2:
        return TailLimit(float(v[-1]) if v.size else float("nan"), float("inf"))
    q = max(1, v.size // 4)
    last = v[-q:].mean()
    prev = v[-2 * q:-q].mean() if v.size >= 2 * q else v[:-q].mean()
    return TailLimit(float(last), float(abs(last - prev)))


def bounded_trend(values, growth=1.5) -> bool:
    """Running-maximum test for boundedness.

    Passes when the running max over the second half of the window grows
    by less than the factor ``growth`` compared with the first half.
    """
    a = np.abs(np.asarray(values, dtype=float))
    if a.size < 2 or not np.all(np.isfinite(a)):
        return bool(np.all(np.isfinite(a)))
    half = a.size // 2
    m1 = a[:half].max()
    m2 = a.max()
    return bool(m2 <= growth * m1) if m1 > 0 else bool(m2 == 0)
