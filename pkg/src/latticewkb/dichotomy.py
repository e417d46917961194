"""Classification of coefficient trajectories.

``I + M_n`` splits into a lower-triangular part
``G_n = [[p+_n, 0], [-q_n, p-_n]]`` (``p+- = 1 +- beta phi+ phi-``,
``q = beta (phi+)^2``) and a strictly upper error. The running product
``G_n ... G_first = [[Pi+_n, 0], [Sigma_n, Pi-_n]]`` defines the change of
variables ``a_{n+1} = [[Pi+_n, 0], [Sigma_n, Pi-_n]] f_{n+1}`` whose limits
sort a solution into one of the asymptotic cases.

All products are re-seeded at the first index of the analyzed window,
which therefore plays the role of index 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import bounded_trend, series_decelerating, tail_limit
from .errors import DomainError, WindowError
from .perturbation import CoefficientTrajectory, PerturbationPair, _exp
from .sequences import LatticeSequence

CASES = (
    "finite_collapse_plus",
    "finite_collapse_minus",
    "sigma_driven",
    "generic",
    "unbounded_sigma_dominant",
    "unbounded_sigma_vanishing_plus",
    "hypotheses_not_met",
)


@dataclass(frozen=True)
class TriangularProducts:
    """``Sigma_n``, ``Pi+-_n`` and the factors ``p+-_n`` on a window.

    ``log_pi_plus``/``log_pi_minus`` hold the log-magnitudes of the
    products; the plain sequences may over/underflow for long windows.
    """

    sigma: LatticeSequence
    pi_plus: LatticeSequence
    pi_minus: LatticeSequence
    p_plus: LatticeSequence
    p_minus: LatticeSequence
    q: LatticeSequence
    log_pi_plus: np.ndarray = field(repr=False, default=None)
    log_pi_minus: np.ndarray = field(repr=False, default=None)

    @property
    def n_lo(self):
        return self.sigma.n_lo

    @property
    def n_hi(self):
        return self.sigma.n_hi

    def matrix(self, n):
        """``[[Pi+_n, 0], [Sigma_n, Pi-_n]]``."""
        return np.array([[self.pi_plus[n], 0.0], [self.sigma[n], self.pi_minus[n]]])


def _log_cumprod(x):
    """Cumulative product as (log-magnitude, sign)."""
    with np.errstate(divide="ignore"):
        la = np.cumsum(np.log(np.abs(x)))
    sg = np.cumprod(np.sign(x))
    return la, sg


def triangular_products(pair: PerturbationPair, n_lo: int | None = None,
                        n_hi: int | None = None) -> TriangularProducts:
    """``Sigma`` and ``Pi+-`` re-seeded at ``n_lo``.

    ``Sigma_{n_lo} = -q_{n_lo}`` and
    ``Sigma_n = -q_n Pi+_{n-1} + p-_n Sigma_{n-1}``.
    """
    c = pair.couplings(n_lo, n_hi)
    lo = c["n_lo"]
    s, q = c["s"], c["q"]
    pp, pm = 1.0 + s, 1.0 - s
    lpp, spp = _log_cumprod(pp)
    lpm, spm = _log_cumprod(pm)
    pi_p = _exp(lpp, spp)
    pi_m = _exp(lpm, spm)
    sig = np.empty(s.size)
    sig[0] = -q[0]
    # Sigma may overflow with Pi+; the log forms stay exact
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, s.size):
            sig[i] = -q[i] * pi_p[i - 1] + pm[i] * sig[i - 1]
    return TriangularProducts(
        sigma=LatticeSequence(lo, sig),
        pi_plus=LatticeSequence(lo, pi_p),
        pi_minus=LatticeSequence(lo, pi_m),
        p_plus=LatticeSequence(lo, pp),
        p_minus=LatticeSequence(lo, pm),
        q=LatticeSequence(lo, q),
        log_pi_plus=lpp,
        log_pi_minus=lpm,
    )


def product_identity_error(prods: TriangularProducts) -> float:
    """Max relative error of ``P_n = G_n P_{n-1}`` over the window."""
    pp, pm, q = prods.p_plus.values, prods.p_minus.values, prods.q.values
    Pp, Pm, S = prods.pi_plus.values, prods.pi_minus.values, prods.sigma.values
    e_pp = np.abs(Pp[1:] - pp[1:] * Pp[:-1]) / np.abs(Pp[1:])
    e_pm = np.abs(Pm[1:] - pm[1:] * Pm[:-1]) / np.abs(Pm[1:])
    rhs = -q[1:] * Pp[:-1] + pm[1:] * S[:-1]
    scale = np.abs(q[1:] * Pp[:-1]) + np.abs(pm[1:] * S[:-1])
    e_s = np.where(scale > 0, np.abs(S[1:] - rhs) / np.where(scale > 0, scale, 1), 0.0)
    base = max(abs(Pp[0] - pp[0]) / abs(Pp[0]), abs(Pm[0] - pm[0]) / abs(Pm[0]),
               abs(S[0] + q[0]) / max(abs(q[0]), 1e-300))
    return float(max(base, e_pp.max(initial=0), e_pm.max(initial=0), e_s.max(initial=0)))


def f_coefficients(traj: CoefficientTrajectory, prods: TriangularProducts):
    """Solve ``a_{n+1} = [[Pi+_n, 0], [Sigma_n, Pi-_n]] f_{n+1}``.

    The products must start at the trajectory's first index ``N``;
    ``f_N = a_N``. Returns ``(f_plus, f_minus, r)`` with ``r = f- / f+``
    and NaN marking indices where ``f+ = 0`` (ratio absent).
    """
    N, hi = traj.N, traj.n_hi
    if prods.n_lo != N or prods.n_hi < hi - 1:
        raise WindowError("products must start at the trajectory start and cover it")
    ap = traj.a_plus.values
    am = traj.a_minus.values
    Pp = prods.pi_plus.window(N, hi - 1).values
    Pm = prods.pi_minus.window(N, hi - 1).values
    S = prods.sigma.window(N, hi - 1).values
    if np.any(Pp == 0) or np.any(Pm == 0):
        raise DomainError("Pi+- vanishes: sup |beta phi+ phi-| < 1 violated")
    fp = np.empty(ap.size)
    fm = np.empty(ap.size)
    fp[0], fm[0] = ap[0], am[0]
    fp[1:] = ap[1:] / Pp
    fm[1:] = (am[1:] - S * fp[1:]) / Pm
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = np.where(fp != 0, fm / np.where(fp != 0, fp, 1.0), np.nan)
    return LatticeSequence(N, fp), LatticeSequence(N, fm), LatticeSequence(N, r)


@dataclass(frozen=True)
class DichotomyVerdict:
    """One case out of :data:`CASES` with the supporting numbers."""

    case: str
    limits: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    disjunct: str | None = None
    onset: int | None = None
    reason: str = ""


def _collapse(u, am, N, sb, sp, sm):
    """Exact collapse with onset inside the window: ``(case, onset)`` or ``(None, None)``.

    A terminal run of zeros in ``a-`` (resp. ``a+``, tested through the
    weighted ``u``) counts only if it starts after the first index and the
    coupling that would revive it, ``beta (phi+)^2`` (resp.
    ``beta (phi-)^2``), vanishes exactly on the run. Floating underflow of
    a coefficient whose coupling is nonzero is therefore never mistaken
    for a collapse.
    """
    for zero, other, coupling_zero, case in (
            (am, u, (sb == 0) | (sp == 0), "finite_collapse_plus"),
            (u, am, (sb == 0) | (sm == 0), "finite_collapse_minus")):
        z = zero == 0.0
        if not z[-1]:
            continue
        k = z.size - 1
        while k > 0 and z[k - 1]:
            k -= 1
        if k == 0:
            continue  # zero from the start: no collapse event inside the window
        if np.all(other[k:] != 0.0) and np.all(coupling_zero[k:-1]):
            return case, N + k
    return None, None


def classify(traj: CoefficientTrajectory, prods: TriangularProducts,
             pair: PerturbationPair) -> DichotomyVerdict:
    """Sort a trajectory into an asymptotic case.

    Order of decisions: exact-zero collapse with onset inside the window;
    hypothesis diagnostics (``sup |beta phi+ phi-| < 1``, summability of
    ``J = (V - V0) phi+ phi-``); then the bounded-``Sigma`` path (case 3 vs 4
    by whether the ``f-`` tail limit is zero) or the unbounded path
    (``f+`` limit nonzero vs ``a-`` tending to a nonzero limit). A limit is
    zero when its tail mean is at most 10 times its drift.
    """
    N, hi = traj.N, traj.n_hi
    ap, am = traj.a_plus.values, traj.a_minus.values
    c = pair.couplings(N, hi)
    s = c["s"]
    sig = prods.sigma.window(N, hi).values
    diag = {
        "sup_sigma": float(np.max(np.abs(sig))),
        "sup_beta_phiphi": float(np.max(np.abs(s))),
    }
    # zero tests on the weighted u: a+ itself can underflow to 0.0
    case, onset = _collapse(traj.u.values, am, N, c["sb"], c["sp"], c["sm"])
    if case is not None:
        frozen = ap if case == "finite_collapse_plus" else am
        k = onset - N
        key = "a_plus" if case == "finite_collapse_plus" else "a_minus"
        return DichotomyVerdict(case, {key: (float(frozen[-1]), float(np.ptp(frozen[k:])))},
                                diag, onset=onset, reason="exact zero from onset on")
    if diag["sup_beta_phiphi"] >= 1.0:
        return DichotomyVerdict("hypotheses_not_met", {}, diag,
                                reason="sup |beta phi+ phi-| >= 1")
    J = s * pair.wronskian
    jdec = series_decelerating(J)
    diag["J_deceleration"] = jdec.ratio
    if not jdec.passed:
        return DichotomyVerdict("hypotheses_not_met", {}, diag,
                                reason="sum |J_n| not decelerating")
    fp, fm, r = f_coefficients(traj, prods)
    fp, fm = fp.values, fm.values
    sigma_bounded = bounded_trend(sig)
    diag["sigma_bounded"] = sigma_bounded
    if sigma_bounded:
        phim2 = _exp(2 * c["lm"], np.ones_like(c["lm"]))
        dv = np.abs(c["abs_beta"] * abs(pair.wronskian))
        if series_decelerating(phim2).passed:
            disjunct = "sum |phi-|^2 finite"
        elif series_decelerating(dv).passed:
            disjunct = "sum |V - V0| finite"
        else:
            return DichotomyVerdict("hypotheses_not_met", {}, diag,
                                    reason="neither disjunct certified")
        lp_, lm_ = tail_limit(fp), tail_limit(fm)
        limits = {"f_plus": (lp_.mean, lp_.drift), "f_minus": (lm_.mean, lm_.drift)}
        if lm_.is_zero:
            if lp_.is_zero:
                return DichotomyVerdict("hypotheses_not_met", limits, diag, disjunct,
                                        reason="both f limits vanish")
            return DichotomyVerdict("sigma_driven", limits, diag, disjunct)
        return DichotomyVerdict("generic", limits, diag, disjunct)
    # unbounded Sigma
    sb = c["sb"][c["sb"] != 0]
    if sb.size and not (np.all(sb > 0) or np.all(sb < 0)):
        return DichotomyVerdict("hypotheses_not_met", {}, diag,
                                reason="V - V0 changes sign")
    phim2 = _exp(2 * c["lm"], np.ones_like(c["lm"]))
    if not bounded_trend(phim2 * sig):
        return DichotomyVerdict("hypotheses_not_met", {}, diag,
                                reason="(phi-)^2 Sigma not bounded")
    with np.errstate(divide="ignore", invalid="ignore"):
        fhat = fm[2:] / sig[:-2] if sig.size > 2 else np.array([])
    diag["f_hat_minus_tail"] = tail_limit(fhat).mean if fhat.size else float("nan")
    lp_ = tail_limit(fp)
    if not lp_.is_zero:
        return DichotomyVerdict("unbounded_sigma_dominant",
                                {"a_plus_inf": (lp_.mean, lp_.drift)}, diag)
    la = tail_limit(am)
    if la.is_zero:
        return DichotomyVerdict("hypotheses_not_met", {"a_minus_inf": (la.mean, la.drift)},
                                diag, reason="both a+ and a- limits vanish")
    return DichotomyVerdict("unbounded_sigma_vanishing_plus",
                            {"a_minus_inf": (la.mean, la.drift)}, diag)
