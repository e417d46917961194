"""Difference operators, recursions, Wronskians and solution bases.

The equation throughout is ``(-Delta + V) psi = 0`` with
``(Delta f)_n = f_{n+1} + f_{n-1} - 2 f_n``, i.e. the forward step
``psi_{n+1} = (2 + V_n) psi_n - psi_{n-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import singledispatch
from typing import NamedTuple

import numpy as np

from .errors import (ConvergenceError, DomainError, InvariantError,
                     NumericalOverflowError, WindowError)
from .potentials import PotentialSpec, exponential_root
from .sequences import LatticeSequence, LogSequence


def second_difference(f: LatticeSequence, n: int) -> float:
    """``f_{n+1} + f_{n-1} - 2 f_n``."""
    return f[n + 1] + f[n - 1] - 2.0 * f[n]


def nabla(f: LatticeSequence, n: int, direction: str = "plus") -> float:
    """Forward (``plus``) or backward (``minus``) first difference at ``n``."""
    if direction == "plus":
        return f[n + 1] - f[n]
    if direction == "minus":
        return f[n] - f[n - 1]
    raise ValueError(f"direction must be 'plus' or 'minus', got {direction!r}")


def forward_solve(V: PotentialSpec, seed, n_max: int, n0: int | None = None) -> LatticeSequence:
    """Propagate ``(psi_{n0}, psi_{n0+1}) = seed`` up to ``n_max``.

    Uses ``V_n`` for ``n0 < n < n_max``. A non-finite value raises
    :class:`NumericalOverflowError` carrying the first offending index.
    """
    n0 = V.origin if n0 is None else int(n0)
    if n_max < n0 + 1:
        raise ValueError("n_max must be >= n0 + 1")
    out = np.empty(n_max - n0 + 1)
    out[0], out[1] = float(seed[0]), float(seed[1])
    if n_max > n0 + 1:
        c = (2.0 + V.values(n0 + 1, n_max - 1)).tolist()
        prev, cur = float(out[0]), float(out[1])
        for i in range(len(c)):
            prev, cur = cur, c[i] * cur - prev
            out[i + 2] = cur
            if not math.isfinite(cur):
                raise NumericalOverflowError(
                    f"forward recursion overflowed at n={n0 + i + 2}", index=n0 + i + 2)
    return LatticeSequence(n0, out)


def backward_solve(V: PotentialSpec, seed, n_hi: int, n_min: int) -> LatticeSequence:
    """Propagate ``(psi_{n_hi}, psi_{n_hi+1}) = seed`` down to ``n_min``.

    Uses ``V_n`` for ``n_min < n <= n_hi``.
    """
    if n_min > n_hi:
        raise ValueError("n_min must be <= n_hi")
    size = n_hi + 1 - n_min + 1
    out = np.empty(size)
    out[-2], out[-1] = float(seed[0]), float(seed[1])
    if n_hi > n_min:
        c = 2.0 + V.values(n_min + 1, n_hi)
        nxt, cur = out[-1], out[-2]
        for i in range(c.size - 1, -1, -1):
            nxt, cur = cur, c[i] * cur - nxt
            out[i] = cur
            if not math.isfinite(cur):
                raise NumericalOverflowError(
                    f"backward recursion overflowed at n={n_min + i}", index=n_min + i)
    return LatticeSequence(n_min, out)


class Subdominant(NamedTuple):
    sequence: LatticeSequence
    agreement: float
    log: LogSequence


_BIG = 1e150
_LOG_BIG = math.log(_BIG)


def _miller(c, keep):
    """Backward recursion from ``(1, 0)`` with rescaling, tracked in logs.

    ``c[i] = 2 + V`` at the i-th index of the run (index 0 = n_lo + 1).
    Returns ``(log_abs, sign)`` of the first ``keep`` values.
    """
    m = c.size  # positions 0..m+1; seed psi_m = 1, psi_{m+1} = 0
    mant = np.empty(keep)
    shift = np.zeros(keep)
    nxt, cur = 0.0, 1.0
    k = 0  # number of rescalings so far
    if m < keep:
        mant[m] = cur
    for i in range(m - 1, -1, -1):
        nxt, cur = cur, c[i] * cur - nxt
        if abs(cur) > _BIG:
            nxt /= _BIG
            cur /= _BIG
            k += 1
        if i < keep:
            mant[i] = cur
            shift[i] = k
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(mant)) + shift * _LOG_BIG
    return la, np.sign(mant)


def backward_subdominant(V: PotentialSpec, n_lo: int, n_hi: int, tail_pad: int,
                         tol: float = 1e-10) -> Subdominant:
    """Minimal (subdominant) solution on ``[n_lo, n_hi]`` by backward recursion.

    Two runs are made, seeded with ``(1, 0)`` at ``n_hi + tail_pad`` and at
    ``n_hi + 2 * tail_pad``. The pointwise relative agreement of the two
    normalized runs is returned as a diagnostic, and
    :class:`ConvergenceError` is raised when it is worse than ``tol``.
    The result is the longer run, normalized to 1 at ``n_lo``, both as a
    plain sequence (which may underflow far out) and in log form.
    Only ``V_n`` with ``n_lo < n`` is used.
    """
    if tail_pad < 1:
        raise ValueError("tail_pad must be >= 1")
    keep = n_hi - n_lo + 1
    c = 2.0 + V.values(n_lo + 1, n_hi + 2 * tail_pad)
    runs = []
    for m in (keep - 1 + tail_pad, keep - 1 + 2 * tail_pad):
        la, sg = _miller(c[:m], keep)
        if sg[0] == 0 or not np.all(np.isfinite(la[sg != 0])):
            raise ConvergenceError(
                "backward recursion vanished at the left edge; "
                "no subdominant solution resolved on this range", achieved=float("inf"))
        runs.append((la - la[0], sg * sg[0]))
    (l1, s1), (l2, s2) = runs
    with np.errstate(invalid="ignore"):
        rel = np.where(s1 == s2, np.abs(np.expm1(l1 - l2)), np.inf)
    rel = np.where((s1 == 0) & (s2 == 0), 0.0, rel)
    agreement = float(np.max(rel))
    if not np.isfinite(agreement) or agreement > tol:
        raise ConvergenceError(
            f"tail doubling agreement {agreement:.3g} worse than tol {tol:.3g}; "
            "no subdominant solution resolved on this range", achieved=agreement)
    log = LogSequence(n_lo, l2, s2)
    with np.errstate(under="ignore"):
        lin = s2 * np.exp(l2)
    return Subdominant(LatticeSequence(n_lo, lin), agreement, log)


def forward_solve_log(V: PotentialSpec, seed, n_max: int, n0: int | None = None) -> LogSequence:
    """Like :func:`forward_solve` but rescaled, returning sign and log-magnitude.

    Suited to dominant solutions that leave double range.
    """
    n0 = V.origin if n0 is None else int(n0)
    if n_max < n0 + 1:
        raise ValueError("n_max must be >= n0 + 1")
    size = n_max - n0 + 1
    mant = np.empty(size)
    shift = np.zeros(size)
    mant[0], mant[1] = float(seed[0]), float(seed[1])
    prev, cur = mant[0], mant[1]
    k = 0
    if size > 2:
        c = 2.0 + V.values(n0 + 1, n_max - 1)
        for i in range(c.size):
            prev, cur = cur, c[i] * cur - prev
            if abs(cur) > _BIG:
                prev /= _BIG
                cur /= _BIG
                k += 1
            mant[i + 2] = cur
            shift[i + 2] = k
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(mant)) + shift * _LOG_BIG
    return LogSequence(n0, la, np.sign(mant))


def residual(V: PotentialSpec, psi: LatticeSequence) -> LatticeSequence:
    """``((-Delta + V) psi)_n`` at the interior points of ``psi``."""
    v = psi.values
    if v.size < 3:
        raise WindowError("residual needs at least three points")
    vn = V.values(psi.n_lo + 1, psi.n_hi - 1)
    r = -(v[2:] + v[:-2] - 2.0 * v[1:-1]) + vn * v[1:-1]
    return LatticeSequence(psi.n_lo + 1, r)


def relative_residual(V: PotentialSpec, psi: LatticeSequence) -> LatticeSequence:
    """Residual divided by ``|psi_{n-1}| + |psi_n| + |psi_{n+1}|`` (0 where that is 0)."""
    r = residual(V, psi)
    a = np.abs(psi.values)
    scale = a[2:] + a[:-2] + a[1:-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, np.abs(r.values) / scale, 0.0)
    return LatticeSequence(r.n_lo, rel)


@dataclass(frozen=True)
class SolutionBasis:
    """A pair ``(phi+, phi-)`` stored as sign and log-magnitude, with Wronskian.

    ``plus`` and ``minus`` give plain sequences and raise on overflow;
    ``log_plus`` and ``log_minus`` are always available.
    """

    log_plus: LogSequence
    log_minus: LogSequence
    wronskian: float

    def __post_init__(self):
        w = float(self.wronskian)
        if w == 0.0 or not math.isfinite(w):
            raise DomainError("Wronskian must be finite and nonzero")
        object.__setattr__(self, "wronskian", w)

    @classmethod
    def from_sequences(cls, plus: LatticeSequence, minus: LatticeSequence, wronskian=None):
        lo = max(plus.n_lo, minus.n_lo)
        hi = min(plus.n_hi, minus.n_hi)
        lp = LogSequence.from_linear(plus.window(lo, hi))
        lm = LogSequence.from_linear(minus.window(lo, hi))
        if wronskian is None:
            wronskian = minus[lo] * plus[lo + 1] - minus[lo + 1] * plus[lo]
        return cls(lp, lm, wronskian)

    @property
    def n_lo(self):
        return max(self.log_plus.n_lo, self.log_minus.n_lo)

    @property
    def n_hi(self):
        return min(self.log_plus.n_hi, self.log_minus.n_hi)

    @property
    def plus(self) -> LatticeSequence:
        return self.log_plus.to_linear()

    @property
    def minus(self) -> LatticeSequence:
        return self.log_minus.to_linear()

    def logs(self, n_lo, n_hi):
        """``(lp, sp, lm, sm)`` arrays on ``[n_lo, n_hi]``."""
        p = self.log_plus.window(n_lo, n_hi)
        m = self.log_minus.window(n_lo, n_hi)
        return p.log_abs, p.sign, m.log_abs, m.sign

    def window(self, n_lo, n_hi) -> "SolutionBasis":
        return SolutionBasis(self.log_plus.window(n_lo, n_hi),
                             self.log_minus.window(n_lo, n_hi), self.wronskian)

    def wronskian_profile(self) -> LatticeSequence:
        """Pointwise ``phi-_n phi+_{n+1} - phi-_{n+1} phi+_n`` on the window."""
        lp, sp, lm, sm = self.logs(self.n_lo, self.n_hi)
        with np.errstate(invalid="ignore", over="ignore"):
            t1 = sm[:-1] * sp[1:] * np.exp(lm[:-1] + lp[1:])
            t2 = sm[1:] * sp[:-1] * np.exp(lm[1:] + lp[:-1])
        return LatticeSequence(self.n_lo, t1 - t2)

    def check(self, rtol=1e-10):
        """Raise :class:`InvariantError` unless the Wronskian is constant to ``rtol``."""
        prof = self.wronskian_profile().values
        dev = np.abs(prof - self.wronskian) / abs(self.wronskian)
        worst = float(np.max(dev))
        if not worst <= rtol:
            k = int(np.argmax(dev))
            raise InvariantError(
                f"Wronskian deviates by {worst:.3g} (relative) at n={self.n_lo + k}")
        return worst


def wronskian(basis, n: int, form: str = "standard") -> float:
    """Wronskian of a basis (or of a ``(plus, minus)`` pair) at ``n``.

    ``form`` selects ``phi-_n phi+_{n+1} - phi-_{n+1} phi+_n`` (``standard``)
    or the difference forms ``phi- nabla+/- phi+ - phi+ nabla+/- phi-``
    (``plus`` / ``minus``; the ``minus`` form is evaluated at ``n + 1``).
    """
    if isinstance(basis, SolutionBasis):
        plus, minus = basis.plus, basis.minus
    else:
        plus, minus = basis
    if form == "standard":
        return minus[n] * plus[n + 1] - minus[n + 1] * plus[n]
    if form == "plus":
        return minus[n] * nabla(plus, n, "plus") - plus[n] * nabla(minus, n, "plus")
    if form == "minus":
        m = n + 1
        return minus[m] * nabla(plus, m, "minus") - plus[m] * nabla(minus, m, "minus")
    raise ValueError(f"unknown Wronskian form {form!r}")


@singledispatch
def reflect_symmetry(obj):
    """Apply ``V -> -4 - V`` to potentials and ``psi_n -> (-1)^n psi_n`` to sequences."""
    raise TypeError(f"cannot reflect {type(obj).__name__}")


@reflect_symmetry.register
def _(obj: PotentialSpec):
    if obj.family == "reflected":
        return obj.params["base"]
    if obj.family == "constant":
        return PotentialSpec.constant(-4.0 - obj.params["V"], obj.origin)
    return PotentialSpec.reflected(obj)


@reflect_symmetry.register
def _(obj: LatticeSequence):
    return LatticeSequence(obj.n_lo, np.where(obj.indices % 2 == 0, 1.0, -1.0) * obj.values)


@reflect_symmetry.register
def _(obj: LogSequence):
    return LogSequence(obj.n_lo, obj.log_abs,
                       np.where(obj.indices % 2 == 0, 1.0, -1.0) * obj.sign)


def second_solution(psi_minus: LatticeSequence, m: int, M: int) -> LatticeSequence:
    """Reduction of order: ``psi+_n = psi-_n sum_{k=m}^{n-1} 1/(psi-_k psi-_{k+1})``.

    The result vanishes at ``m`` and has Wronskian 1 with ``psi_minus``.
    """
    w = psi_minus.window(m, M).values
    if np.any(w == 0.0):
        k = int(np.argmax(w == 0.0))
        raise DomainError(f"psi_minus vanishes at n={m + k}")
    inv = 1.0 / (w[:-1] * w[1:])
    s = np.concatenate(([0.0], np.cumsum(inv)))
    return LatticeSequence(m, w * s)


def exponential_basis(V_inf: float, n_lo: int, n_hi: int) -> SolutionBasis:
    """Exact basis ``phi- = x^n``, ``phi+ = x^{-n}`` for a constant potential.

    ``x`` solves ``x + 1/x = 2 + V_inf`` with ``|x| < 1``; the Wronskian
    is ``1/x - x``.
    """
    x = exponential_root(V_inf)
    n = np.arange(n_lo, n_hi + 1)
    lx = math.log(abs(x))
    sgn = np.where((n % 2 == 1) & (x < 0), -1.0, 1.0)
    lm = LogSequence(n_lo, n * lx, sgn)
    lp = LogSequence(n_lo, -n * lx, sgn)
    return SolutionBasis(lp, lm, 1.0 / x - x)
