"""Discrete Liouville-Green (WKB) comparison equations.

A builder picks ``b_n``, takes ``S_n`` as the larger root of
``S + 1/S = b_n`` and fixes ``z_n`` by the Wronski constraint
``z_n z_{n+1} (S_{n+1} - 1/S_{n+1}) = 1``. The pair
``phi+-_n = z_n prod_{l<=n} S_l^{+-1}`` then solves ``(-Delta + Vt) phi = 0``
exactly, with ``Vt`` the comparison potential.

Alternating products over ``D_k = b_k^2 - 4`` are anchored at the origin
of the potential: relative index ``j = n - origin + 1`` plays the role of
``n`` in the closed forms, so ``j = 1`` is the first index.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import SolutionBasis
from .diagnostics import decelerating, series_decelerating
from .errors import (DegenerateRootError, DomainError, InvariantError,
                     SummabilityWarning)
from .potentials import PotentialSpec
from .sequences import LatticeSequence, LogSequence


class JStrategy(str, enum.Enum):
    """Choices of ``J_n`` with ``b_{n+1}^2 - 4 = J_{n+1} J_n``."""

    canonical = "canonical"
    geometric_mean = "geometric_mean"
    arithmetic_mean = "arithmetic_mean"
    skip_pairs = "skip_pairs"


@dataclass(frozen=True)
class ComparisonModel:
    """Output of a Liouville-Green builder.

    ``b``, ``S`` and ``z`` live on ``[anchor, n_hi]``; ``V_tilde`` on the
    interior ``[anchor + 1, n_hi - 1]``.
    """

    b: LatticeSequence
    S: LatticeSequence
    z: LatticeSequence
    C_z: float
    V_tilde: LatticeSequence
    regime: str
    strategy: str | None = None
    J: LatticeSequence | None = None
    diagnostics: dict = field(default_factory=dict)
    warnings: tuple = ()

    @property
    def anchor(self):
        return self.z.n_lo

    @property
    def n_hi(self):
        return self.z.n_hi

    def check(self, rtol=1e-10):
        """Verify the root relation and the Wronski constraint; return the worst deviation."""
        b, S, z = self.b.values, self.S.values, self.z.values
        e1 = np.max(np.abs(S + 1.0 / S - b) / np.abs(b))
        w = z[:-1] * z[1:] * (S[1:] - 1.0 / S[1:])
        e2 = np.max(np.abs(w - 1.0))
        if not (e1 <= 1e-12 and e2 <= rtol and np.all(np.abs(S) > 1) and np.all(np.abs(b) > 2)):
            raise InvariantError(f"model invariants violated: root {e1:.3g}, Wronski {e2:.3g}")
        return max(float(e1), float(e2))


def s_from_b(b):
    """Root of larger magnitude of ``S + 1/S = b``; requires ``|b| > 2``."""
    b_arr = np.asarray(b, dtype=float)
    if np.any(np.abs(b_arr) <= 2.0):
        raise DegenerateRootError(
            "|b| <= 2: the roots of S + 1/S = b coincide or are complex")
    s = (b_arr + np.sign(b_arr) * np.sqrt(b_arr * b_arr - 4.0)) / 2.0
    return float(s) if np.ndim(b) == 0 else s


def _relative_parity(n, anchor):
    """+1 where the relative index ``n - anchor + 1`` is even, else -1."""
    return np.where((np.asarray(n) - anchor + 1) % 2 == 0, 1.0, -1.0)


def _log_z(logD, anchor, C_z):
    """``log z_n`` from the anchored alternating products of ``D``.

    ``logD[i]`` is ``log D`` at ``anchor + i``. The numerator collects
    indices of the opposite parity below ``n``, the denominator those of
    the same parity up to ``n``.
    """
    m = logD.size
    # same-parity running sums: A[i] = logD[i] + logD[i-2] + ...
    A = logD.copy()
    A[2:] = 0.0
    for i in range(2, m):
        A[i] = logD[i] + A[i - 2]
    num = np.concatenate(([0.0], A[:-1]))
    n = anchor + np.arange(m)
    return _relative_parity(n, anchor) * math.log(C_z) + 0.5 * (num - A)


def cz_constant(V: PotentialSpec, n_hi: int, V_inf: float | None = None, logD=None) -> float:
    """Normalization making even and odd ``z_n`` share one limit.

    ``(V_inf (V_inf + 4))^{-1/4} prod_m sqrt(D_{2m} / D_{2m-1})`` with
    ``D = V (V + 4)`` over complete pairs of relative indices in
    ``[origin, n_hi]``, accumulated as a sum of logs. ``V_inf`` defaults to
    the last value of the range. A precomputed ``logD`` (with ``V_inf``
    then read as ``D_inf``) generalizes the formula to other ``b``.
    """
    if logD is None:
        v = V.values(V.origin, n_hi)
        D = v * (v + 4.0)
        if np.any(D <= 0):
            raise DomainError("nonpositive factor V (V + 4) in the C_z product")
        logD = np.log(D)
        d_inf = None if V_inf is None else V_inf * (V_inf + 4.0)
    else:
        d_inf = V_inf
    if d_inf is None:
        d_inf = math.exp(logD[-1])
    if d_inf <= 0:
        raise DomainError("nonpositive limiting factor in C_z")
    pairs = logD.size // 2
    # relative index 2m-1 sits at offset 2m-2, 2m at offset 2m-1
    s = np.sum(logD[1:2 * pairs:2] - logD[0:2 * pairs:2])
    return math.exp(-0.25 * math.log(d_inf) + 0.5 * s)


def _vtilde_forms(S, logz):
    """Comparison potential from the phi+ and phi- forms, plus a scale."""
    rp = np.exp(logz[2:] - logz[1:-1])   # z_{n+1}/z_n
    rm = np.exp(logz[:-2] - logz[1:-1])  # z_{n-1}/z_n
    plus_terms = (rp * S[2:], rm / S[1:-1])
    minus_terms = (rp / S[2:], rm * S[1:-1])
    vp = plus_terms[0] + plus_terms[1] - 2.0
    vm = minus_terms[0] + minus_terms[1] - 2.0
    scale = np.abs(plus_terms[0]) + np.abs(plus_terms[1])
    return vp, vm, scale


def _finish(V, anchor, b, S, logz, C_z, regime, n_hi, strategy=None, J=None,
            diagnostics=None, warns=(), tol=1e-10):
    vp, vm, scale = _vtilde_forms(S, logz)
    err = np.abs(vp - vm) / scale
    if np.any(err > tol):
        raise InvariantError(
            f"phi+ and phi- forms of the comparison potential differ by {err.max():.3g}")
    diag = dict(diagnostics or {})
    v = V.values(anchor + 1, n_hi - 1)
    dv = vp - v
    diag["vtilde_form_mismatch"] = float(err.max()) if err.size else 0.0
    diag["vtilde_minus_v_abs_sum"] = float(np.sum(np.abs(dv)))
    if dv.size >= 4:
        dec = series_decelerating(dv)
        diag["vtilde_minus_v_deceleration"] = dec.ratio
    model = ComparisonModel(
        b=LatticeSequence(anchor, b),
        S=LatticeSequence(anchor, S),
        z=LatticeSequence(anchor, np.exp(logz)),
        C_z=float(C_z),
        V_tilde=LatticeSequence(anchor + 1, vp),
        regime=regime,
        strategy=strategy,
        J=None if J is None else LatticeSequence(anchor, J),
        diagnostics=diag,
        warnings=tuple(warns),
    )
    return model


def _warn(msgs, text):
    msgs.append(text)
    warnings.warn(text, SummabilityWarning, stacklevel=3)


def build_bounded_slow(V: PotentialSpec, n_hi: int, C: float | None = None,
                       V_inf: float | None = None) -> ComparisonModel:
    """Bounded, slowly varying regime: ``b_n = V_n + 2``.

    ``S_n = (V_n + 2 + sqrt(V_n (V_n + 4))) / 2`` and ``z_n`` from the
    anchored alternating products with ``C_z`` from :func:`cz_constant`.
    The hypothesis ``n (V_{n+1} - V_n)`` summable is reported as a
    deceleration diagnostic, with a warning when it fails.
    """
    anchor = V.origin
    if n_hi < anchor + 2:
        raise ValueError("range too short for a comparison model")
    if C is not None and C <= 0:
        raise DomainError("C must be positive")
    v = V.values(anchor, n_hi)
    if np.any(v <= 0) or (C is not None and np.any(v < C)):
        raise DomainError("bounded builder needs V_n >= C > 0 on the range")
    b = v + 2.0
    S = 0.5 * (b + np.sqrt(v * (v + 4.0)))
    logD = np.log(v) + np.log(v + 4.0)
    C_z = cz_constant(V, n_hi, V_inf)
    logz = _log_z(logD, anchor, C_z)
    msgs = []
    n = np.arange(anchor, n_hi)
    dec = series_decelerating(n * np.diff(v))
    if not dec.passed:
        _warn(msgs, f"bounded_slow: n|V_(n+1)-V_n| partial sums not decelerating "
                    f"(last-quarter share {dec.ratio:.3g})")
    z = np.exp(logz)
    drift = decelerating(np.cumsum(np.abs(z - z[-1])))
    diag = {"n_dV_deceleration": dec.ratio, "z_drift_sum": float(np.sum(np.abs(z - z[-1]))),
            "z_drift_deceleration": drift.ratio}
    return _finish(V, anchor, b, S, logz, C_z, "bounded_slow", n_hi,
                   diagnostics=diag, warns=msgs)


def _j_values(V, strategy, anchor, n_hi):
    """``J_n`` on ``[anchor, n_hi]`` for a strategy (``V_{anchor-1} := V_anchor``)."""
    v = V.values(anchor, n_hi)
    u = v + 2.0
    u_prev = np.concatenate(([u[0]], u[:-1]))
    strategy = JStrategy(strategy)
    if strategy is JStrategy.canonical:
        j2 = u * u - 4.0
    elif strategy is JStrategy.geometric_mean:
        u_next = V.values(anchor + 1, n_hi + 1) + 2.0
        j2 = u_next * u - 4.0
    elif strategy is JStrategy.arithmetic_mean:
        j2 = 0.5 * (u * u + u_prev * u_prev) - 4.0
    else:
        # relative indices 2k and 2k+1 share V at relative index 2k
        rel = np.arange(anchor, n_hi + 1) - anchor + 1
        src = np.where(rel % 2 == 0, rel, rel - 1)
        src = np.maximum(src, 1) - 1
        j2 = u[src] ** 2 - 4.0
    if np.any(j2 <= 0):
        raise DomainError(f"strategy {strategy.value} gives J_n <= 0")
    return np.sqrt(j2)


def build_bounded_general(V: PotentialSpec, strategy, n_hi: int,
                          V_inf: float | None = None) -> ComparisonModel:
    """General bounded regime via ``b_{n+1} = sqrt(J_{n+1} J_n + 4)``.

    ``J_{anchor-1} := J_anchor``. ``C_z`` is the generalized constant
    built from ``D_n = J_n J_{n-1}``; ``V_inf``, if given, is the limit of
    the potential and sets ``D_inf = V_inf (V_inf + 4)``.
    """
    anchor = V.origin
    if n_hi < anchor + 2:
        raise ValueError("range too short for a comparison model")
    v = V.values(anchor, n_hi)
    if np.any(v <= 0):
        raise DomainError("bounded_general needs V_n > 0 on the range")
    strategy = JStrategy(strategy)
    J = _j_values(V, strategy, anchor, n_hi)
    J_prev = np.concatenate(([J[0]], J[:-1]))
    D = J * J_prev
    b = np.sqrt(D + 4.0)
    if np.any(b <= 2.0):
        raise DegenerateRootError("b_n <= 2 under the chosen strategy")
    S = s_from_b(b)
    logD = np.log(D)
    d_inf = None if V_inf is None else V_inf * (V_inf + 4.0)
    C_z = cz_constant(V, n_hi, d_inf, logD=logD)
    logz = _log_z(logD, anchor, C_z)
    db = np.abs(np.diff(b))
    msgs = []
    dec = series_decelerating(db)
    if not dec.passed:
        _warn(msgs, f"bounded_general: |b_(n+1)-b_n| partial sums not decelerating "
                    f"(last-quarter share {dec.ratio:.3g})")
    diag = {"db_abs_sum": float(db.sum()), "db_deceleration": dec.ratio}
    return _finish(V, anchor, b, S, logz, C_z, "bounded_general", n_hi,
                   strategy=strategy.value, J=J, diagnostics=diag, warns=msgs)


def summation_terms(V: PotentialSpec, n_lo: int, n_hi: int) -> np.ndarray:
    """Terms ``V_n^{-1/2} (V_{n+1}^{-3/2} + V_{n-1}^{-3/2})`` on ``[n_lo, n_hi]``."""
    v = V.values(n_lo - 1, n_hi + 1)
    if np.any(v <= 0):
        raise DomainError("summation terms need V_n > 0")
    return v[1:-1] ** -0.5 * (v[2:] ** -1.5 + v[:-2] ** -1.5)


def build_unbounded(V: PotentialSpec, n_hi: int) -> ComparisonModel:
    """Unbounded regime: ``S_n - 1/S_n = sqrt((V_n + 2)(V_{n-1} + 2))``.

    Closed forms: ``b_n = sqrt(u_n u_{n-1} + 4)``, ``z_n = u_n^{-1/2}``,
    ``C_z = 1``, with ``u = V + 2`` and ``V_{anchor-1} := V_anchor``. The
    summability hypothesis is checked as a deceleration diagnostic.
    """
    anchor = V.origin
    if n_hi < anchor + 2:
        raise ValueError("range too short for a comparison model")
    v = V.values(anchor, n_hi)
    if np.any(v <= -2.0):
        raise DomainError("unbounded builder needs V_n > -2")
    u = v + 2.0
    u_prev = np.concatenate(([u[0]], u[:-1]))
    P = u * u_prev
    b = np.sqrt(P + 4.0)
    S = 0.5 * (np.sqrt(P) + np.sqrt(P + 4.0))
    logz = -0.5 * np.log(u)
    msgs = []
    diag = {}
    if np.all(v > 0) and n_hi - 1 >= anchor + 1:
        terms = summation_terms(V, anchor + 1, n_hi - 1)
        dec = series_decelerating(terms)
        diag["summation_deceleration"] = dec.ratio
        diag["summation_partial_sum"] = dec.total
        if not dec.passed:
            _warn(msgs, f"unbounded: summability partial sums not decelerating "
                        f"(last-quarter share {dec.ratio:.3g})")
    else:
        _warn(msgs, "unbounded: summability hypothesis needs V_n > 0; not checked")
    return _finish(V, anchor, b, S, logz, 1.0, "unbounded", n_hi,
                   diagnostics=diag, warns=msgs)


def unbounded_error(V: PotentialSpec, n_lo: int, n_hi: int) -> LatticeSequence:
    """Cancellation-free ``Vt_n - V_n`` for the unbounded model.

    Equals ``sum over s = n+-1 of 2 / (u_s (1 + sqrt(1 + 4 / (u_n u_s))))``
    with ``u = V + 2``, which behaves like ``1/u_{n+1} + 1/u_{n-1}``.
    """
    u = V.values(n_lo - 1, n_hi + 1) + 2.0
    un = u[1:-1]
    out = np.zeros(un.size)
    for us in (u[2:], u[:-2]):
        out += 2.0 / (us * (1.0 + np.sqrt(1.0 + 4.0 / (un * us))))
    return LatticeSequence(n_lo, out)


def comparison_potential(model: ComparisonModel, n: int, tol: float = 1e-10) -> float:
    """``Vt_n`` recomputed from the model's ``z`` and ``S``.

    Both the phi+ form and the phi- form are evaluated; a disagreement
    beyond ``tol`` (relative) raises :class:`InvariantError`.
    """
    z = model.z
    S = model.S
    zn = z[n]
    if zn == 0.0:
        raise DomainError(f"z vanishes at n={n}")
    rp, rm = z[n + 1] / zn, z[n - 1] / zn
    vp = rp * S[n + 1] + rm / S[n] - 2.0
    vm = rp / S[n + 1] + rm * S[n] - 2.0
    scale = abs(rp * S[n + 1]) + abs(rm / S[n])
    if abs(vp - vm) > tol * scale:
        raise InvariantError(
            f"comparison potential forms disagree at n={n}: {vp!r} vs {vm!r}")
    return vp


def lg_basis(model: ComparisonModel, n_lo: int | None = None,
             n_hi: int | None = None) -> SolutionBasis:
    """``phi+-_n = z_n prod_{anchor <= l <= n} S_l^{+-1}`` in log space; Wronskian 1."""
    a = model.anchor
    n_lo = a if n_lo is None else n_lo
    n_hi = model.n_hi if n_hi is None else n_hi
    S = model.S.values
    z = model.z.values
    logS = np.log(np.abs(S))
    cum = np.cumsum(logS)
    sS = np.cumprod(np.sign(S))
    lz = np.log(np.abs(z))
    sz = np.sign(z)
    lp = LogSequence(a, lz + cum, sz * sS)
    lm = LogSequence(a, lz - cum, sz * sS)
    return SolutionBasis(lp.window(n_lo, n_hi), lm.window(n_lo, n_hi), 1.0)
