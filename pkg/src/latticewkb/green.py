"""Green matrices, reconstruction from the Green diagonal, and Agmon distances.

For a basis ``(phi+, phi-)`` with Wronskian ``W`` the Green matrix is
``G_mn = phi+_min(m,n) phi-_max(m,n) / W``. Its diagonal ``g_n = G_nn``
determines everything else: with ``z = sqrt(g)``,

    S_n = (1 + sqrt(1 + 4 z_n^2 z_{n-1}^2)) / (2 z_n z_{n-1}),
    phi+-_n = z_n prod_{k=m+1}^{n} S_k^{+-1},
    V_n = [sqrt(1 + 4 g_n g_{n+1}) + sqrt(1 + 4 g_n g_{n-1})] / (2 g_n) - 2.

The reconstruction returns the ``V > -2`` branch. The diagonal of the
reflected potential ``-4 - V`` is the same, so the other branch is obtained
with :func:`latticewkb.core.reflect_symmetry`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SolutionBasis
from .errors import DomainError, WindowError
from .potentials import PotentialSpec
from .sequences import LatticeSequence, LogSequence

__all__ = [
    "AGMON_VARIANTS",
    "GreenDiagonal",
    "AgmonReport",
    "green_matrix",
    "green_column",
    "green_diagonal",
    "s_from_diag",
    "basis_from_diag",
    "potential_from_diag",
    "k_a_constant",
    "simple_constant",
    "diag_bounds",
    "s_bounds",
    "agmon_terms",
    "agmon_distance",
    "agmon_report",
]

AGMON_VARIANTS = ("K_A_form", "lg_form", "simplified_form")


def _check_window(basis, *ns):
    for n in ns:
        if not basis.n_lo <= n <= basis.n_hi:
            raise WindowError(f"index {n} outside basis window [{basis.n_lo}, {basis.n_hi}]")


def green_matrix(basis: SolutionBasis, m: int, n: int) -> float:
    """``G_mn = phi+_min(m,n) phi-_max(m,n) / W``, evaluated in log space."""
    m, n = int(m), int(n)
    _check_window(basis, m, n)
    lo, hi = min(m, n), max(m, n)
    lp = basis.log_plus.log_abs[lo - basis.log_plus.n_lo]
    sp = basis.log_plus.sign[lo - basis.log_plus.n_lo]
    lm = basis.log_minus.log_abs[hi - basis.log_minus.n_lo]
    sm = basis.log_minus.sign[hi - basis.log_minus.n_lo]
    if sp == 0 or sm == 0:
        return 0.0
    w = basis.wronskian
    return float(sp * sm * math.copysign(1.0, w) * math.exp(lp + lm - math.log(abs(w))))


def green_column(basis: SolutionBasis, m: int) -> LatticeSequence:
    """The column ``n -> G_nm`` over the whole basis window."""
    _check_window(basis, m)
    lo, hi = basis.n_lo, basis.n_hi
    lp, sp, lm, sm = basis.logs(lo, hi)
    n = np.arange(lo, hi + 1)
    k = m - lo
    la = np.where(n <= m, lp + lm[k], lp[k] + lm)
    sg = np.where(n <= m, sp * sm[k], sp[k] * sm)
    w = basis.wronskian
    with np.errstate(under="ignore", invalid="ignore"):
        vals = np.where(sg == 0, 0.0, sg * np.exp(la - math.log(abs(w))))
    return LatticeSequence(lo, math.copysign(1.0, w) * vals)


@dataclass(frozen=True)
class GreenDiagonal:
    """The Green diagonal ``g_n = G_nn`` with ``z = sqrt(g)`` and ``S^(z)``.

    ``g`` must be strictly positive; negative diagonals are rejected rather
    than assigned a phase.
    """

    g: LatticeSequence
    z: LatticeSequence = field(init=False, repr=False)
    s_z: LatticeSequence = field(init=False, repr=False)

    def __post_init__(self):
        vals = self.g.values
        if len(vals) < 2:
            raise DomainError("Green diagonal needs at least two entries")
        bad = np.flatnonzero(~(vals > 0))
        if bad.size:
            n = self.g.n_lo + int(bad[0])
            raise DomainError(f"Green diagonal must be positive; g[{n}] = {vals[bad[0]]!r}")
        z = np.sqrt(vals)
        object.__setattr__(self, "z", LatticeSequence(self.g.n_lo, z))
        object.__setattr__(self, "s_z", LatticeSequence(self.g.n_lo + 1, _s_of_zz(z[1:] * z[:-1])))

    @property
    def n_lo(self) -> int:
        return self.g.n_lo

    @property
    def n_hi(self) -> int:
        return self.g.n_hi

    def check(self, rtol=1e-10) -> float:
        """Verify ``S > 1`` and ``S - 1/S = 1/(z_n z_{n-1})``; return the worst deviation."""
        s = self.s_z.values
        if not np.all(s > 1):
            raise DomainError("S^(z) must exceed 1")
        z = self.z.values
        target = 1.0 / (z[1:] * z[:-1])
        dev = float(np.max(np.abs(s - 1 / s - target) / target))
        if dev > rtol:
            from .errors import InvariantError
            raise InvariantError(f"S - 1/S identity off by {dev:.3g}")
        return dev


def _s_of_zz(zz):
    # (1 + sqrt(1 + 4 zz^2)) / (2 zz), the root exceeding 1
    return (1.0 + np.sqrt(1.0 + 4.0 * zz * zz)) / (2.0 * zz)


def green_diagonal(basis: SolutionBasis, n_lo: int | None = None,
                   n_hi: int | None = None) -> GreenDiagonal:
    """Diagonal ``phi+_n phi-_n / W`` of the Green matrix on a window."""
    n_lo = basis.n_lo if n_lo is None else int(n_lo)
    n_hi = basis.n_hi if n_hi is None else int(n_hi)
    _check_window(basis, n_lo, n_hi)
    lp, sp, lm, sm = basis.logs(n_lo, n_hi)
    w = basis.wronskian
    with np.errstate(under="ignore", invalid="ignore"):
        g = np.where(sp * sm == 0, 0.0,
                     math.copysign(1.0, w) * sp * sm * np.exp(lp + lm - math.log(abs(w))))
    return GreenDiagonal(LatticeSequence(n_lo, g))


def _as_diag(g) -> GreenDiagonal:
    if isinstance(g, GreenDiagonal):
        return g
    if isinstance(g, LatticeSequence):
        return GreenDiagonal(g)
    raise TypeError(f"expected GreenDiagonal or LatticeSequence, got {type(g).__name__}")


def s_from_diag(g, n: int) -> float:
    """``S^(z)_n`` from ``g_n`` and ``g_{n-1}``."""
    g = _as_diag(g)
    return float(g.s_z[int(n)])


def basis_from_diag(g, m: int, n_lo: int | None = None,
                    n_hi: int | None = None) -> SolutionBasis:
    """Solution pair ``phi+-_n = z_n prod_{k=m+1}^{n} S_k^{+-1}`` with ``W = 1``.

    The anchor ``m`` is where both members equal ``z_m``.
    """
    g = _as_diag(g)
    n_lo = g.n_lo if n_lo is None else int(n_lo)
    n_hi = g.n_hi if n_hi is None else int(n_hi)
    if not (g.n_lo <= n_lo <= m <= n_hi <= g.n_hi) or n_hi <= n_lo:
        raise WindowError(
            f"need {g.n_lo} <= n_lo <= m <= n_hi <= {g.n_hi} with n_lo < n_hi; "
            f"got n_lo={n_lo}, m={m}, n_hi={n_hi}")
    lz = 0.5 * np.log(g.g.window(n_lo, n_hi).values)
    ls = np.log(g.s_z.window(n_lo + 1, n_hi).values)
    cum = np.concatenate(([0.0], np.cumsum(ls)))
    rel = cum - cum[m - n_lo]
    ones = np.ones_like(lz)
    return SolutionBasis(LogSequence(n_lo, lz + rel, ones),
                         LogSequence(n_lo, lz - rel, ones), 1.0)


def potential_from_diag(g, n: int) -> float:
    """Potential at ``n`` recovered from ``g_{n-1}, g_n, g_{n+1}`` (``V > -2`` branch)."""
    g = _as_diag(g)
    n = int(n)
    gm, g0, gp = g.g[n - 1], g.g[n], g.g[n + 1]
    return float((math.sqrt(1 + 4 * g0 * gp) + math.sqrt(1 + 4 * g0 * gm)) / (2 * g0) - 2)


def potential_sequence(g, n_lo: int | None = None, n_hi: int | None = None) -> LatticeSequence:
    """Vectorized :func:`potential_from_diag` over the interior of the diagonal."""
    g = _as_diag(g)
    n_lo = g.n_lo + 1 if n_lo is None else int(n_lo)
    n_hi = g.n_hi - 1 if n_hi is None else int(n_hi)
    v = g.g.window(n_lo - 1, n_hi + 1).values
    g0 = v[1:-1]
    out = (np.sqrt(1 + 4 * g0 * v[2:]) + np.sqrt(1 + 4 * g0 * v[:-2])) / (2 * g0) - 2
    return LatticeSequence(n_lo, out)


__all__.append("potential_sequence")


def k_a_constant(C: float) -> float:
    """``K_A = sqrt(1 + t^2) + t`` with ``t = 2 / (C (C + 2))``."""
    if not C > 0:
        raise DomainError(f"C must be positive, got {C!r}")
    t = 2.0 / (C * (C + 2.0))
    return math.hypot(1.0, t) + t


def simple_constant(C: float) -> float:
    """The cruder constant ``sqrt(1 + 4 / C^2)``, which dominates ``K_A``."""
    if not C > 0:
        raise DomainError(f"C must be positive, got {C!r}")
    return math.sqrt(1.0 + 4.0 / (C * C))


@dataclass(frozen=True)
class DiagBounds:
    lower: LatticeSequence
    upper: LatticeSequence
    K_A: float
    simple: float


__all__.append("DiagBounds")


def _check_C(V, C, n_lo, n_hi):
    if not C > 0:
        raise DomainError(f"C must be positive, got {C!r}")
    v = V.values(n_lo, n_hi)
    vmin = float(np.min(v))
    if not vmin > C:
        raise DomainError(f"min V = {vmin!r} over [{n_lo}, {n_hi}] does not exceed C = {C!r}")
    return v


def diag_bounds(V: PotentialSpec, C: float, n_lo: int, n_hi: int) -> DiagBounds:
    """Sandwich ``1/(V+2) <= G_nn <= K_A/(V+2)``, valid for ``n`` large enough.

    Requires ``min V > C > 0`` over the range.
    """
    v = _check_C(V, C, n_lo, n_hi)
    ka = k_a_constant(C)
    return DiagBounds(LatticeSequence(n_lo, 1.0 / (v + 2)),
                      LatticeSequence(n_lo, ka / (v + 2)), ka, simple_constant(C))


def s_bounds(V: PotentialSpec, C: float, n_lo: int, n_hi: int):
    """Lower and upper bounds for ``S^(z)_n`` on ``[n_lo, n_hi]``.

    With ``P = (V_n + 2)(V_{n-1} + 2)`` the upper bound is
    ``(sqrt(P) + sqrt(P + 4)) / 2`` and the lower bound is that divided by ``K_A``.
    """
    v = _check_C(V, C, n_lo - 1, n_hi) + 2
    P = v[1:] * v[:-1]
    up = 0.5 * (np.sqrt(P) + np.sqrt(P + 4))
    ka = k_a_constant(C)
    return LatticeSequence(n_lo, up / ka), LatticeSequence(n_lo, up)


def agmon_terms(V: PotentialSpec, n_lo: int, n_hi: int, variant: str = "lg_form",
                C: float | None = None) -> np.ndarray:
    """Per-step Agmon terms for ``l = n_lo..n_hi``."""
    if variant not in AGMON_VARIANTS:
        raise ValueError(f"unknown Agmon variant {variant!r}; expected one of {AGMON_VARIANTS}")
    v = V.values(n_lo, n_hi)
    if variant == "K_A_form":
        if C is None:
            raise ValueError("variant K_A_form needs C")
        v = _check_C(V, C, n_lo, n_hi)
        return np.log(v + 2) - math.log(k_a_constant(C))
    bad = np.flatnonzero(~(v > 0))
    if bad.size:
        raise DomainError(
            f"Agmon term needs V > 0; V[{n_lo + int(bad[0])}] = {v[bad[0]]!r}")
    if variant == "lg_form":
        return np.log((v + 2 + np.sqrt(v * (v + 4))) / 2)
    return np.log1p(v)


def agmon_distance(V: PotentialSpec, m: int, n: int, variant: str = "lg_form",
                   C: float | None = None) -> float:
    """``d_A(m, n)``: sum of the per-step terms over ``l = m+1..n``."""
    m, n = int(m), int(n)
    if not m < n:
        raise ValueError(f"need m < n, got m={m}, n={n}")
    return math.fsum(agmon_terms(V, m + 1, n, variant, C))


@dataclass(frozen=True)
class AgmonReport:
    """Agmon distances from a base point and the weighted subdominant envelope.

    ``distance`` holds ``d_A(m, n)`` for ``n`` in the window (zero at ``m``),
    ``log_weighted`` holds ``d_A(m, n) + log|phi-_n| - log|phi-_m|`` and
    ``envelope`` is the sup of its exponential.
    """

    variant: str
    m: int
    distance: LatticeSequence
    log_weighted: LatticeSequence
    envelope: float
    K_A: float | None
    pairs: dict = field(default_factory=dict)

    @property
    def weighted(self) -> LatticeSequence:
        return LatticeSequence(self.log_weighted.n_lo, np.exp(self.log_weighted.values))


def agmon_report(V: PotentialSpec, psi_minus, m: int, n_hi: int | None = None,
                 variant: str = "lg_form", C: float | None = None, pairs=()) -> AgmonReport:
    """Distances ``d_A(m, .)`` and ``sup_n e^{d_A(m,n)} |phi-_n / phi-_m|``.

    ``psi_minus`` is a :class:`LogSequence` or :class:`LatticeSequence` covering
    ``[m, n_hi]``. ``pairs`` lists extra ``(a, b)`` distances to report.
    """
    log = psi_minus if isinstance(psi_minus, LogSequence) else LogSequence.from_linear(psi_minus)
    n_hi = log.n_hi if n_hi is None else int(n_hi)
    if not log.n_lo <= m < n_hi <= log.n_hi:
        raise WindowError(f"need {log.n_lo} <= m < n_hi <= {log.n_hi}")
    terms = agmon_terms(V, m + 1, n_hi, variant, C)
    d = np.concatenate(([0.0], np.cumsum(terms)))
    seg = log.window(m, n_hi)
    if np.any(seg.sign == 0):
        raise DomainError("subdominant solution vanishes inside the window")
    lw = d + seg.log_abs - seg.log_abs[0]
    extra = {(int(a), int(b)): agmon_distance(V, a, b, variant, C) for a, b in pairs}
    ka = k_a_constant(C) if C is not None else None
    return AgmonReport(variant, int(m), LatticeSequence(m, d), LatticeSequence(m, lw),
                       float(np.exp(np.max(lw))), ka, extra)
