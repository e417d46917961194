"""Indexed lattice sequences with exact index bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalOverflowError, WindowError


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != 1:
        raise ValueError("sequence values must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LatticeSequence:
    """Real values on the integer window ``[n_lo, n_lo + len(values) - 1]``.

    Indexing uses absolute lattice indices. Anything outside the window
    raises :class:`WindowError`; nothing is ever padded with zeros.
    """

    n_lo: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n_lo", int(self.n_lo))
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.values.size < 1:
            raise ValueError("window length must be at least 1")

    @property
    def n_hi(self) -> int:
        return self.n_lo + self.values.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def __len__(self):
        return self.values.size

    def contains(self, n) -> bool:
        return self.n_lo <= n <= self.n_hi

    def _check(self, a, b):
        if a < self.n_lo or b > self.n_hi or a > b:
            raise WindowError(
                f"indices [{a}, {b}] outside window [{self.n_lo}, {self.n_hi}]"
            )

    def __getitem__(self, n):
        if isinstance(n, slice):
            raise TypeError("use window(a, b) for ranges")
        n = int(n)
        self._check(n, n)
        return float(self.values[n - self.n_lo])

    def at(self, idx) -> np.ndarray:
        """Vectorized access at an array of absolute indices."""
        idx = np.asarray(idx, dtype=int)
        if idx.size and (idx.min() < self.n_lo or idx.max() > self.n_hi):
            raise WindowError(
                f"indices [{idx.min()}, {idx.max()}] outside window "
                f"[{self.n_lo}, {self.n_hi}]"
            )
        return self.values[idx - self.n_lo]

    def window(self, a, b) -> "LatticeSequence":
        self._check(a, b)
        return LatticeSequence(a, self.values[a - self.n_lo:b - self.n_lo + 1])

    def map(self, func) -> "LatticeSequence":
        return LatticeSequence(self.n_lo, func(self.values))

    def scaled(self, c) -> "LatticeSequence":
        return LatticeSequence(self.n_lo, c * self.values)

    def normalized(self, n=None) -> "LatticeSequence":
        """Rescale so the value at ``n`` (default: left edge) is 1."""
        n = self.n_lo if n is None else n
        return self.scaled(1.0 / self[n])

    @classmethod
    def from_function(cls, func, n_lo, n_hi):
        idx = np.arange(n_lo, n_hi + 1)
        return cls(n_lo, np.asarray(func(idx), dtype=float))


@dataclass(frozen=True)
class LogSequence:
    """Sign and log-magnitude of a sequence that may leave double range.

    The represented value at ``n`` is ``sign[n] * exp(log_abs[n])``; zeros
    carry ``sign = 0`` and ``log_abs = -inf``.
    """

    n_lo: int
    log_abs: np.ndarray
    sign: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n_lo", int(self.n_lo))
        object.__setattr__(self, "log_abs", _frozen_array(self.log_abs))
        object.__setattr__(self, "sign", _frozen_array(self.sign))
        if self.log_abs.shape != self.sign.shape or self.log_abs.size < 1:
            raise ValueError("log_abs and sign must be nonempty and aligned")

    @property
    def n_hi(self) -> int:
        return self.n_lo + self.log_abs.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def window(self, a, b) -> "LogSequence":
        if a < self.n_lo or b > self.n_hi or a > b:
            raise WindowError(
                f"indices [{a}, {b}] outside window [{self.n_lo}, {self.n_hi}]"
            )
        s = slice(a - self.n_lo, b - self.n_lo + 1)
        return LogSequence(a, self.log_abs[s], self.sign[s])

    def to_linear(self) -> LatticeSequence:
        """Convert to a plain sequence, failing at the first overflow."""
        with np.errstate(over="ignore"):
            vals = self.sign * np.exp(self.log_abs)
        bad = ~np.isfinite(vals)
        if bad.any():
            k = int(np.argmax(bad))
            raise NumericalOverflowError(
                f"value overflows double precision at n={self.n_lo + k}",
                index=self.n_lo + k,
            )
        return LatticeSequence(self.n_lo, vals)

    @classmethod
    def from_linear(cls, seq: LatticeSequence) -> "LogSequence":
        v = seq.values
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(v))
        return cls(seq.n_lo, la, np.sign(v))
