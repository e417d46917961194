"""Three-term recurrences, Jacobi data and orthogonal polynomials.

The normalized polynomials obey

    x p_n = a_{n+1} p_{n+1} + b_{n+1} p_n + a_n p_{n-1},   p_0 = 1, p_{-1} = 0,

which in transfer form reads ``(p_{n+1}, a_{n+1} p_n) = A_{n+1} (p_n, a_n p_{n-1})``
with ``A_{n+1} = a_{n+1}^{-1} [[x - b_{n+1}, -1], [a_{n+1}^2, 0]]``. The
coefficient ``a_0`` only ever appears multiplied by ``p_{-1} = 0``; it is taken
to be 1 where bookkeeping needs it.

A potential ``V`` with origin ``n0`` maps to ``a = 1`` and ``b_{k+1} = V_{n0+k} + 2``.
Polynomial index ``k`` then sits at lattice index ``n0 + k``, and
``(-1)^k p_k(E)`` solves ``-f_{n+1} - f_{n-1} + (V_n + 2) f_n = E f_n``.
The raw ``p_k(E)`` solves the same equation for the reflected potential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, WindowError
from .potentials import PotentialSpec
from .sequences import LatticeSequence

__all__ = [
    "JacobiData",
    "jacobi_from_potential",
    "poly_first_kind",
    "poly_second_kind",
    "poly_monic",
    "transfer_matrix",
    "propagate",
    "pairing",
    "schrodinger_sequence",
]


@dataclass(frozen=True)
class JacobiData:
    """Jacobi coefficients ``a_n > 0`` and ``b_n``, both indexed from 1.

    ``origin`` records the lattice index of ``p_0`` when the data came from a
    potential.
    """

    a: LatticeSequence
    b: LatticeSequence
    origin: int = 0

    def __post_init__(self):
        if self.a.n_lo != 1 or self.b.n_lo != 1:
            raise WindowError("Jacobi coefficients are indexed from 1")
        bad = np.flatnonzero(~(self.a.values > 0))
        if bad.size:
            raise DomainError(f"Jacobi coefficient a[{1 + int(bad[0])}] must be positive")

    @classmethod
    def from_arrays(cls, a, b, origin=0):
        return cls(LatticeSequence(1, np.asarray(a, float)),
                   LatticeSequence(1, np.asarray(b, float)), origin)

    @property
    def size(self) -> int:
        """Largest ``N`` for which ``p_N`` is defined."""
        return min(self.a.n_hi, self.b.n_hi)

    def _need(self, N):
        if N > self.size:
            raise WindowError(f"Jacobi data covers p_n for n <= {self.size}, requested {N}")


def jacobi_from_potential(V: PotentialSpec, E: float, N: int):
    """``(JacobiData, x)`` with ``a = 1``, ``b_{k+1} = V_{origin+k} + 2`` and ``x = E``.

    Enough coefficients are taken to evaluate ``p_n`` for ``n <= N``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    b = V.values(V.origin, V.origin + N - 1) + 2.0
    return JacobiData.from_arrays(np.ones(N), b, V.origin), float(E)


def _run(J: JacobiData, x: float, N: int, first, second):
    J._need(N)
    out = np.empty(N + 1)
    out[0] = first
    a, b = J.a.values, J.b.values
    prev_scaled = second  # a_n p_{n-1}
    for n in range(N):
        a1 = a[n]
        nxt = ((x - b[n]) * out[n] - prev_scaled) / a1
        prev_scaled = a1 * out[n]
        out[n + 1] = nxt
    return LatticeSequence(0, out)


def poly_first_kind(J: JacobiData, x: float, N: int) -> LatticeSequence:
    """``p_0 .. p_N`` at ``x``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N == 0:
        return LatticeSequence(0, [1.0])
    return _run(J, x, N, 1.0, 0.0)


def poly_second_kind(J: JacobiData, x: float, N: int) -> LatticeSequence:
    """``q_0 .. q_N`` at ``x``: the transfer solution with initial data ``(0, -1)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return _run(J, x, N, 0.0, -1.0)


def poly_monic(J: JacobiData, x: float, N: int) -> LatticeSequence:
    """Monic ``P_0 .. P_N``: ``P_{n+1} = (x - b_{n+1}) P_n - a_n^2 P_{n-1}``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    J._need(N)
    out = np.empty(N + 1)
    out[0] = 1.0
    a, b = J.a.values, J.b.values
    prev = 0.0
    for n in range(N):
        an2 = a[n - 1] ** 2 if n >= 1 else 1.0
        out[n + 1] = (x - b[n]) * out[n] - an2 * prev
        prev = out[n]
    return LatticeSequence(0, out)


def transfer_matrix(J: JacobiData, x: float, n: int) -> np.ndarray:
    """``A_n(x) = a_n^{-1} [[x - b_n, -1], [a_n^2, 0]]`` for ``n >= 1``.

    It maps ``(p_{n-1}, a_{n-1} p_{n-2})`` to ``(p_n, a_n p_{n-1})``.
    """
    n = int(n)
    if n < 1:
        raise WindowError("transfer matrices are indexed from 1")
    J._need(n)
    a, b = J.a[n], J.b[n]
    return np.array([[x - b, -1.0], [a * a, 0.0]]) / a


def propagate(J: JacobiData, x: float, N: int, start=(1.0, 0.0)) -> np.ndarray:
    """Apply ``A_N ... A_1`` to ``start``; returns ``(y_N, a_N y_{N-1})``."""
    v = np.asarray(start, float)
    for n in range(1, N + 1):
        v = transfer_matrix(J, x, n) @ v
    return v


def pairing(J: JacobiData, p: LatticeSequence, q: LatticeSequence) -> LatticeSequence:
    """``a_{n+1} (p_{n+1} q_n - p_n q_{n+1})`` for ``n = 0 .. N-1``.

    Constant for any two solutions of the same recurrence, and equal to ``-1``
    for the first and second kind polynomials.
    """
    N = min(p.n_hi, q.n_hi)
    pv, qv = p.window(0, N).values, q.window(0, N).values
    a = J.a.values[:N]
    return LatticeSequence(0, a * (pv[1:] * qv[:-1] - pv[:-1] * qv[1:]))


def schrodinger_sequence(V: PotentialSpec, E: float, N: int, kind: str = "first") -> LatticeSequence:
    """``(-1)^k p_k(E)`` (or ``q_k``) placed at lattice indices ``origin + k``.

    The result solves ``(-Delta + V - E) f = 0`` at interior points.
    """
    J, x = jacobi_from_potential(V, E, N)
    if kind == "first":
        poly = poly_first_kind(J, x, N)
    elif kind == "second":
        poly = poly_second_kind(J, x, N)
    else:
        raise ValueError(f"kind must be 'first' or 'second', got {kind!r}")
    sign = np.where(np.arange(N + 1) % 2 == 0, 1.0, -1.0)
    return LatticeSequence(V.origin, sign * poly.values)
