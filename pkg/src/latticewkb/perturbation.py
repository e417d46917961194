"""Variation of constants around a known solution basis.

A solution of ``(-Delta + V) psi = 0`` is written as
``psi_n = a+_n phi+_n + a-_n phi-_n`` with ``phi+-`` solving the
comparison equation for ``V0``. The coefficients obey
``a_{n+1} = (I + M_n) a_n`` with

    M_n = beta_n [[ phi+ phi-,  (phi-)^2 ],
                  [-(phi+)^2,  -phi+ phi-]],   beta_n = (V_n - V0_n) / W.

``M_n`` is nilpotent, so ``(I + M_n)^{-1} = I - M_n``. The subdominant
solution is the fixed point of ``a = e - M a`` with ``e = (0, 1)`` and
``(M a)_n = sum_{k >= n} M_k a_k``, truncated at the right edge of the
range.

Everything that can leave double range (``beta``, ``phi+ ** 2``) is kept as
sign and log-magnitude; the iteration works on the weighted pair
``(u, w) = ((phi+)^2 a+, a-)``, whose sup norm is the norm of the
coefficient space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SolutionBasis
from .diagnostics import decelerating, series_decelerating
from .errors import (ContractionError, ConvergenceError, DomainError,
                     WindowError)
from .potentials import PotentialSpec, difference_log
from .sequences import LatticeSequence


def _exp(log_abs, sign):
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        out = sign * np.exp(log_abs)
    return np.where(sign == 0, 0.0, out)


def _unweight(u, lp):
    """``u / (phi+)^2`` from the log of ``|phi+|``."""
    with np.errstate(divide="ignore"):
        return _exp(np.log(np.abs(u)) - 2 * lp, np.sign(u))


@dataclass(frozen=True)
class PerturbationPair:
    """Target potential ``V``, comparison ``V0`` and a basis for ``V0``.

    The working window is the basis window clipped to where both
    potentials are defined.
    """

    V: PotentialSpec
    V0: PotentialSpec
    basis: SolutionBasis
    n_lo: int = field(init=False)
    n_hi: int = field(init=False)
    log_beta: np.ndarray = field(init=False, repr=False)
    sign_beta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        W = self.basis.wronskian
        if W == 0.0:
            raise DomainError("zero Wronskian")
        lo = max(self.basis.n_lo, self.V.origin, self.V0.origin)
        hi = self.basis.n_hi
        if hi < lo:
            raise WindowError("basis window does not overlap the potentials' domain")
        ld, sd = difference_log(self.V, self.V0, lo, hi)
        lb = ld - math.log(abs(W))
        sb = sd * math.copysign(1.0, W)
        lb.setflags(write=False)
        sb.setflags(write=False)
        object.__setattr__(self, "n_lo", lo)
        object.__setattr__(self, "n_hi", hi)
        object.__setattr__(self, "log_beta", lb)
        object.__setattr__(self, "sign_beta", sb)

    @property
    def wronskian(self):
        return self.basis.wronskian

    @property
    def beta(self) -> LatticeSequence:
        return LatticeSequence(self.n_lo, _exp(self.log_beta, self.sign_beta))

    def couplings(self, n_lo=None, n_hi=None):
        """Entries of ``M_n`` and helpers on ``[n_lo, n_hi]`` as a dict.

        ``s = beta phi+ phi-``, ``m = beta (phi-)^2``, ``q = beta (phi+)^2``
        (plain floats; ``q`` and ``m`` may over/underflow), ``p`` the
        signed product ``phi+ phi-``, and the logs ``lp``/``lm`` with signs.
        """
        n_lo = self.n_lo if n_lo is None else n_lo
        n_hi = self.n_hi if n_hi is None else n_hi
        if n_lo < self.n_lo or n_hi > self.n_hi or n_lo > n_hi:
            raise WindowError(f"[{n_lo}, {n_hi}] outside pair window [{self.n_lo}, {self.n_hi}]")
        i = slice(n_lo - self.n_lo, n_hi - self.n_lo + 1)
        lb, sb = self.log_beta[i], self.sign_beta[i]
        lp, sp, lm, sm = self.basis.logs(n_lo, n_hi)
        sgn_pm = sp * sm
        return {
            "n_lo": n_lo,
            "lb": lb, "sb": sb, "lp": lp, "sp": sp, "lm": lm, "sm": sm,
            "p": _exp(lp + lm, sgn_pm),
            "s": _exp(lb + lp + lm, sb * sgn_pm),
            "m": _exp(lb + 2 * lm, sb),
            "q": _exp(lb + 2 * lp, sb),
            "abs_beta": _exp(lb, np.abs(sb)),
        }


def beta(V: PotentialSpec, V0: PotentialSpec, basis: SolutionBasis) -> LatticeSequence:
    """``beta_n = (V_n - V0_n) / W`` on the basis window."""
    return PerturbationPair(V, V0, basis).beta


def transfer_matrix(pair: PerturbationPair, n: int) -> np.ndarray:
    """``I + M_n``."""
    c = pair.couplings(n, n)
    s, m, q = c["s"][0], c["m"][0], c["q"][0]
    return np.array([[1.0 + s, m], [-q, 1.0 - s]])


def transfer_step(a, pair: PerturbationPair, n: int) -> np.ndarray:
    """``(I + M_n) a``."""
    return transfer_matrix(pair, n) @ np.asarray(a, dtype=float)


def contraction_terms(pair: PerturbationPair, n_lo=None, n_hi=None) -> np.ndarray:
    """``|beta_n| (1 + |phi+_n phi-_n|^2)``."""
    c = pair.couplings(n_lo, n_hi)
    return c["abs_beta"] + _exp(c["lb"] + 2 * (c["lp"] + c["lm"]), np.abs(c["sb"]))


def contraction_threshold(pair: PerturbationPair, n_lo=None, n_hi=None, target=0.5):
    """Smallest ``N`` whose tail sum of ``|beta| (1 + |phi+ phi-|^2)`` is below ``target``.

    Returns ``(N, kappa)`` with ``kappa`` the achieved tail sum. The terms
    must pass the deceleration diagnostic on the range, otherwise the
    tail cannot be trusted to be finite and :class:`ContractionError` is
    raised, as it is when no index qualifies.
    """
    n_lo = pair.n_lo if n_lo is None else n_lo
    n_hi = pair.n_hi if n_hi is None else n_hi
    t = contraction_terms(pair, n_lo, n_hi)
    dec = series_decelerating(t)
    if not dec.passed:
        raise ContractionError(
            f"contraction terms not decelerating on [{n_lo}, {n_hi}] "
            f"(last-quarter share {dec.ratio:.3g}); tail sum not certified")
    tail = np.cumsum(t[::-1])[::-1]
    ok = np.nonzero(tail < target)[0]
    if ok.size == 0:
        raise ContractionError(f"no N in [{n_lo}, {n_hi}] with tail sum < {target}")
    k = int(ok[0])
    return n_lo + k, float(tail[k])


def contraction_bound(pair: PerturbationPair, N: int, n_hi: int) -> float:
    """Rigorous contraction constant of the truncated operator on ``[N, n_hi]``.

    ``sup_n max(1, rho_n) sum_{k >= n} |beta_k| (1 + p_k) max(1, p_k)``
    with ``p = |phi+ phi-|`` and ``rho_n = (|phi+_n| / min_{m >= n} |phi+_m|)^2``.
    It equals the threshold sum when ``phi+`` is nondecreasing and
    ``|phi+ phi-| = 1``, and never exceeds twice the threshold sum.
    """
    c = pair.couplings(N, n_hi)
    p = np.abs(c["p"])
    t = c["abs_beta"] * (1.0 + p) * np.maximum(1.0, p)
    T = np.cumsum(t[::-1])[::-1]
    lp = c["lp"]
    run_min = np.minimum.accumulate(lp[::-1])[::-1]
    rho = np.exp(2.0 * (lp - run_min))
    return float(np.max(rho * T))


@dataclass(frozen=True)
class CoefficientTrajectory:
    """Coefficients ``a+-_n`` on ``[N, n_hi]`` with solve diagnostics.

    ``u`` is the weighted coefficient ``(phi+)^2 a+``; ``a_plus`` itself may
    underflow to zero where ``phi+`` is huge.
    """

    a_plus: LatticeSequence
    a_minus: LatticeSequence
    u: LatticeSequence
    N: int
    kappa: float
    contraction: float
    iterations: int
    distances: tuple = ()
    step_ratios: tuple = ()
    truncation_tail: float = 0.0

    @property
    def n_hi(self):
        return self.a_minus.n_hi


def _apply_M(c, u, w):
    """Weighted ``(M X)`` for ``X = (u / (phi+)^2, w)``; returns ``(U, Wm)``."""
    p = c["p"]
    # upper: sum_{k>=n} beta_k (phi+_n/phi+_k)^2 (p_k u_k + p_k^2 w_k)
    g = p * u + p * p * w
    lb, sb, lp = c["lb"], c["sb"], c["lp"]
    beta = _exp(lb, sb)
    ratio = np.exp(2.0 * (lp[:-1] - lp[1:]))
    U = np.empty_like(u)
    acc = 0.0
    for i in range(u.size - 1, -1, -1):
        if i < u.size - 1:
            acc *= ratio[i]
        acc += beta[i] * g[i]
        U[i] = acc
    # lower: -sum_{k>=n} beta_k (u_k + p_k w_k)
    lower = -(beta * (u + p * w))
    Wm = np.cumsum(lower[::-1])[::-1]
    return U, Wm


def neumann_solve(pair: PerturbationPair, N: int, n_hi: int | None = None,
                  tol: float = 1e-12, max_iter: int | None = None) -> CoefficientTrajectory:
    """Fixed point of ``a = e - M a`` on ``[N, n_hi]`` by Neumann iteration.

    Iterates ``X <- e - M X`` from ``X = e`` in the weighted sup norm
    until successive iterates differ by at most ``tol``. The iteration
    count is bounded by ``ceil(log(tol) / log(L)) + 1`` where ``L`` is
    :func:`contraction_bound`; exceeding it raises
    :class:`ConvergenceError`. Each step's distance ratio is recorded.
    """
    n_hi = pair.n_hi if n_hi is None else n_hi
    kappa = float(np.sum(contraction_terms(pair, N, n_hi)))
    L = contraction_bound(pair, N, n_hi)
    if L >= 1.0:
        raise ContractionError(f"contraction constant {L:.4g} >= 1 at N={N}")
    if max_iter is None:
        max_iter = 1 if L == 0.0 else int(math.ceil(math.log(tol) / math.log(L))) + 1
        max_iter = max(max_iter, 1)
    c = pair.couplings(N, n_hi)
    size = n_hi - N + 1
    u = np.zeros(size)
    w = np.ones(size)
    dists, ratios = [], []
    it = 0
    while True:
        U, Wm = _apply_M(c, u, w)
        u_new, w_new = -U, 1.0 - Wm
        d = float(np.max(np.abs(u_new - u) + np.abs(w_new - w)))
        it += 1
        if dists and dists[-1] > 0:
            ratios.append(d / dists[-1])
        dists.append(d)
        u, w = u_new, w_new
        if d <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"Neumann iteration did not reach tol {tol:g} within {max_iter} "
                f"iterations (last distance {d:.3g})", achieved=d)
    slack = 1e-9
    for r, prev in zip(ratios, dists[:-1]):
        # rounding floor: distances near machine precision carry no information
        if prev > 1e-13 and r > L * (1 + slack) + 1e-13 / prev:
            raise ConvergenceError(f"iterate ratio {r:.4g} exceeds contraction bound {L:.4g}")
    a_plus = _unweight(u, c["lp"])
    tail = 0.0
    if n_hi < pair.n_hi:
        tail = float(np.sum(contraction_terms(pair, n_hi + 1, pair.n_hi)))
    return CoefficientTrajectory(
        a_plus=LatticeSequence(N, a_plus),
        a_minus=LatticeSequence(N, w),
        u=LatticeSequence(N, u),
        N=N, kappa=kappa, contraction=L, iterations=it,
        distances=tuple(dists), step_ratios=tuple(ratios),
        truncation_tail=tail,
    )


def backward_coefficients(pair: PerturbationPair, N: int, n_hi: int | None = None) -> CoefficientTrajectory:
    """The same fixed point by backward propagation ``a_n = (I - M_n) a_{n+1}``.

    Starts from ``e`` just beyond ``n_hi``; an independent check of
    :func:`neumann_solve`.
    """
    n_hi = pair.n_hi if n_hi is None else n_hi
    c = pair.couplings(N, n_hi)
    size = n_hi - N + 1
    beta = _exp(c["lb"], c["sb"])
    p = c["p"]
    lp = c["lp"]
    u = np.zeros(size)
    w = np.ones(size)
    un, wn = 0.0, 1.0  # weighted values at n + 1, with weight at n + 1
    for i in range(size - 1, -1, -1):
        # weight change from n+1 to n
        if i < size - 1:
            un *= math.exp(2.0 * (lp[i] - lp[i + 1]))
        # a_n = (I - M_n) a_{n+1}, in weighted form at index n
        ui = un - beta[i] * (p[i] * un + p[i] * p[i] * wn)
        wi = wn + beta[i] * (un + p[i] * wn)
        u[i], w[i] = ui, wi
        un, wn = ui, wi
    a_plus = _unweight(u, lp)
    return CoefficientTrajectory(
        a_plus=LatticeSequence(N, a_plus), a_minus=LatticeSequence(N, w),
        u=LatticeSequence(N, u), N=N,
        kappa=float(np.sum(contraction_terms(pair, N, n_hi))),
        contraction=float("nan"), iterations=0)


def forward_trajectory(pair: PerturbationPair, a_start, n_start: int,
                       n_end: int | None = None) -> CoefficientTrajectory:
    """Propagate ``a_{n+1} = (I + M_n) a_n`` from ``a_start`` at ``n_start``."""
    n_end = pair.n_hi if n_end is None else n_end
    c = pair.couplings(n_start, n_end)
    s, m, q = c["s"], c["m"], c["q"]
    size = n_end - n_start + 1
    ap = np.empty(size)
    am = np.empty(size)
    ap[0], am[0] = float(a_start[0]), float(a_start[1])
    for i in range(size - 1):
        ap[i + 1] = (1.0 + s[i]) * ap[i] + m[i] * am[i]
        am[i + 1] = -q[i] * ap[i] + (1.0 - s[i]) * am[i]
    with np.errstate(over="ignore", invalid="ignore"):
        u = ap * np.exp(2 * c["lp"])
    return CoefficientTrajectory(
        a_plus=LatticeSequence(n_start, ap), a_minus=LatticeSequence(n_start, am),
        u=LatticeSequence(n_start, np.where(ap == 0, 0.0, u)), N=n_start,
        kappa=float("nan"), contraction=float("nan"), iterations=0)


def e2c_residual(traj: CoefficientTrajectory, basis: SolutionBasis) -> LatticeSequence:
    """Relative residual of ``(nabla- a+_n) phi+_{n-1} + (nabla- a-_n) phi-_{n-1} = 0``.

    All four terms are divided by ``phi-_{n-1}`` before combining; the
    result is ``|sum| / sum |terms|`` at ``n`` in ``(N, n_hi]``.
    """
    N, hi = traj.N, traj.n_hi
    lp, sp, lm, sm = basis.logs(N, hi)
    u = traj.u.values
    w = traj.a_minus.values
    # a+_k phi+_{n-1} / phi-_{n-1} = u_k * phi+_{n-1} / (phi+_k^2 phi-_{n-1})
    def plus_term(k_off):
        k = np.arange(1, u.size) - 1 + k_off
        lg = lp[:-1] - 2 * lp[k] - lm[:-1]
        sg = sp[:-1] * sm[:-1]
        return u[k] * _exp(lg, sg)
    t1 = plus_term(1)
    t2 = -plus_term(0)
    t3 = w[1:]
    t4 = -w[:-1]
    total = t1 + t2 + t3 + t4
    scale = np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4)
    rel = np.where(scale > 0, np.abs(total) / np.where(scale > 0, scale, 1.0), 0.0)
    return LatticeSequence(N + 1, rel)


def synthesize_solution(traj: CoefficientTrajectory, basis: SolutionBasis) -> LatticeSequence:
    """``psi_n = a+_n phi+_n + a-_n phi-_n`` on the trajectory window."""
    N, hi = traj.N, traj.n_hi
    if N < basis.n_lo or hi > basis.n_hi:
        raise WindowError("trajectory window exceeds the basis window")
    lp, sp, lm, sm = basis.logs(N, hi)
    u = traj.u.values
    w = traj.a_minus.values
    with np.errstate(divide="ignore"):
        first = _exp(np.log(np.abs(u)) - lp, np.sign(u) * sp)
    second = w * _exp(lm, sm)
    out = first + second
    if not np.all(np.isfinite(out)):
        k = int(np.argmax(~np.isfinite(out)))
        from .errors import NumericalOverflowError
        raise NumericalOverflowError(f"synthesized solution overflows at n={N + k}", index=N + k)
    return LatticeSequence(N, out)


def error_form(psi: LatticeSequence, basis: SolutionBasis, envelope: str = "monotone") -> LatticeSequence:
    """``r_n`` in ``psi_n = phi-_n + r_n * env_n``.

    ``envelope="monotone"`` uses ``max_{m >= n} |phi-_m|`` over the window;
    ``"literal"`` uses ``|phi-_n|``.
    """
    lp, sp, lm, sm = basis.logs(psi.n_lo, psi.n_hi)
    phi = _exp(lm, sm)
    if envelope == "monotone":
        env = np.maximum.accumulate(np.abs(phi)[::-1])[::-1]
    elif envelope == "literal":
        env = np.abs(phi)
    else:
        raise ValueError(f"unknown envelope {envelope!r}")
    return LatticeSequence(psi.n_lo, (psi.values - phi) / env)


def trench_J(V: PotentialSpec, V0: PotentialSpec, basis: SolutionBasis, n: int) -> float:
    """``J_n = phi+_n phi-_n (V_n - V0_n)``."""
    pair = PerturbationPair(V, V0, basis)
    c = pair.couplings(n, n)
    return float(c["s"][0] * pair.wronskian)


def trench_series(pair: PerturbationPair, n_lo=None, n_hi=None):
    """``J_n`` on a window plus the deceleration diagnostic of ``sum |J_n|``."""
    c = pair.couplings(n_lo, n_hi)
    J = c["s"] * pair.wronskian
    return LatticeSequence(c["n_lo"], J), series_decelerating(J)
