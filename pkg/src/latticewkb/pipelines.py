"""Command pipelines: a :class:`RunConfig` in, a :class:`ResultTable` out.

Every :class:`SummabilityWarning` raised while a pipeline runs is captured
and copied into the table's warnings, so failed finite-range diagnostics
always reach the output file.
"""

from __future__ import annotations

import json
import logging
import math
import warnings

import numpy as np

from . import __version__
from .config import RunConfig
from .core import (SolutionBasis, backward_subdominant, exponential_basis,
                   forward_solve, forward_solve_log, relative_residual)
from .dichotomy import classify, f_coefficients, triangular_products
from .errors import ConfigError, ContractionError, DomainError, SummabilityWarning
from .green import (agmon_report, diag_bounds, green_diagonal, potential_sequence)
from .liouville_green import (build_bounded_general, build_bounded_slow,
                              build_unbounded, lg_basis)
from .orthopoly import jacobi_from_potential, poly_first_kind, poly_second_kind
from .output import ResultTable
from .perturbation import (PerturbationPair, contraction_threshold, neumann_solve,
                           forward_trajectory, synthesize_solution)
from .potentials import PotentialSpec
from .sequences import LatticeSequence

__all__ = ["run", "PIPELINES"]

log = logging.getLogger(__name__)

NAN = float("nan")


def _padded(seq: LatticeSequence, n_lo, n_hi):
    """Values of ``seq`` on ``[n_lo, n_hi]`` with NaN outside its window."""
    out = np.full(n_hi - n_lo + 1, NAN)
    a, b = max(n_lo, seq.n_lo), min(n_hi, seq.n_hi)
    if a <= b:
        out[a - n_lo:b - n_lo + 1] = seq.window(a, b).values
    return out


def _tail_pad(cfg: RunConfig):
    return cfg.option("tail_pad", max(50, cfg.n_hi - cfg.n_lo + 1))


def _base_metadata(cfg: RunConfig):
    return {
        "tool": "latticewkb",
        "version": __version__,
        "command": cfg.command,
        "config_sha256": cfg.digest,
        "potential": json.dumps(cfg.potential.to_dict(), sort_keys=True),
        "range": [cfg.n_lo, cfg.n_hi],
        "tol": cfg.tol,
    }


def _solve(cfg: RunConfig) -> ResultTable:
    V, lo, hi = cfg.potential, cfg.n_lo, cfg.n_hi
    meta = _base_metadata(cfg)
    seed = cfg.option("seed")
    if seed is not None:
        psi = forward_solve(V, seed, hi, n0=lo)
        meta["solution"] = "forward"
        meta["seed"] = list(seed)
    else:
        pad = _tail_pad(cfg)
        sub = backward_subdominant(V, lo, hi, pad, tol=max(cfg.tol, 1e-14))
        psi = sub.sequence
        meta["solution"] = "subdominant"
        meta["tail_pad"] = pad
        meta["tail_agreement"] = sub.agreement
    res = _padded(relative_residual(V, psi), lo, hi)
    meta["max_relative_residual"] = float(np.nanmax(res)) if np.any(np.isfinite(res)) else NAN
    n = np.arange(lo, hi + 1)
    v = _padded(LatticeSequence(max(lo, V.origin), V.values(max(lo, V.origin), hi)), lo, hi)
    return ResultTable(["n", "V", "psi", "residual"],
                       {"n": n, "V": v, "psi": psi.values, "residual": res}, meta)


def _build_model(cfg: RunConfig, n_hi: int):
    V = cfg.potential
    regime = cfg.option("regime", "bounded_slow")
    if regime == "bounded_slow":
        return build_bounded_slow(V, n_hi, C=cfg.option("C"), V_inf=cfg.option("V_inf"))
    if regime == "bounded_general":
        return build_bounded_general(V, cfg.option("strategy", "canonical"), n_hi,
                                     V_inf=cfg.option("V_inf"))
    return build_unbounded(V, n_hi)


def _compare(cfg: RunConfig, warn) -> ResultTable:
    V, hi = cfg.potential, cfg.n_hi
    meta = _base_metadata(cfg)
    model = _build_model(cfg, hi + 1)
    meta["regime"] = model.regime
    if model.strategy:
        meta["strategy"] = str(getattr(model.strategy, "value", model.strategy))
    meta["C_z"] = model.C_z
    for key in sorted(model.diagnostics):
        meta[f"lg.{key}"] = model.diagnostics[key]
    start = max(cfg.n_lo, model.anchor + 1)
    meta["n_start"] = start
    V0 = PotentialSpec.table(model.V_tilde.values, origin=model.V_tilde.n_lo)
    basis = lg_basis(model, model.V_tilde.n_lo, hi)
    pair = PerturbationPair(V, V0, basis)
    n = np.arange(start, hi + 1)
    cols = {
        "n": n,
        "V": V.values(start, hi),
        "V_tilde": model.V_tilde.window(start, hi).values,
        "beta": pair.beta.window(start, hi).values,
    }
    nan = np.full(n.size, NAN)
    try:
        N, kappa = contraction_threshold(pair, start, hi, target=cfg.option("target", 0.5))
        traj = neumann_solve(pair, N, hi, tol=cfg.tol, max_iter=cfg.option("max_iter"))
    except ContractionError as exc:
        warn(f"contraction: {exc}")
        cols.update(a_plus=nan, a_minus=nan, psi_minus=nan, residual=nan)
    else:
        meta.update(N=N, kappa=kappa, contraction=traj.contraction,
                    iterations=traj.iterations)
        psi = synthesize_solution(traj, basis)
        cols["a_plus"] = _padded(traj.a_plus, start, hi)
        cols["a_minus"] = _padded(traj.a_minus, start, hi)
        cols["psi_minus"] = _padded(psi, start, hi)
        res = relative_residual(V, psi)
        cols["residual"] = _padded(res, start, hi)
        meta["max_relative_residual"] = float(np.max(res.values)) if len(res) else NAN
    names = ["n", "V", "V_tilde", "beta", "a_plus", "a_minus", "psi_minus", "residual"]
    return ResultTable(names, cols, meta)


def _comparison_basis(V0: PotentialSpec, lo, hi) -> SolutionBasis:
    if V0.family != "constant":
        raise ConfigError("only constant comparison potentials are supported", "comparison.family")
    return exponential_basis(V0.params["V"], lo, hi)


def _classify(cfg: RunConfig) -> ResultTable:
    V, lo, hi = cfg.potential, cfg.n_lo, cfg.n_hi
    V0 = cfg.option("comparison")
    meta = _base_metadata(cfg)
    meta["comparison"] = json.dumps(V0.to_dict(), sort_keys=True)
    basis = _comparison_basis(V0, lo, hi)
    pair = PerturbationPair(V, V0, basis)
    mode = cfg.option("mode", "neumann")
    meta["mode"] = mode
    if mode == "neumann":
        if cfg.option("N") is not None:
            N = cfg.option("N")
            meta["N_source"] = "config"
        else:
            N, _ = contraction_threshold(pair, pair.n_lo, hi, target=cfg.option("target", 0.5))
            meta["N_source"] = "threshold"
        traj = neumann_solve(pair, N, hi, tol=cfg.tol, max_iter=cfg.option("max_iter"))
        meta.update(N=N, kappa=traj.kappa, contraction=traj.contraction,
                    iterations=traj.iterations)
    else:
        traj = forward_trajectory(pair, cfg.option("seed"), pair.n_lo, hi)
        meta.update(N=traj.N, seed=list(cfg.option("seed")))
    prods = triangular_products(pair, traj.N, hi)
    fp, fm, _ = f_coefficients(traj, prods)
    verdict = classify(traj, prods, pair)
    meta["verdict"] = verdict.case
    if verdict.reason:
        meta["verdict_reason"] = verdict.reason
    if verdict.onset is not None:
        meta["onset"] = verdict.onset
    if verdict.disjunct:
        meta["disjunct"] = verdict.disjunct
    for key in sorted(verdict.limits):
        meta[f"limit.{key}"] = verdict.limits[key]
    s = prods.sigma
    idx = s.indices
    for parity, name in ((0, "even"), (1, "odd")):
        sel = idx[idx % 2 == parity]
        if sel.size:
            meta[f"sigma_last_{name}"] = float(s[int(sel[-1])])
    a, b = traj.N, hi
    cols = {
        "n": np.arange(a, b + 1),
        "Sigma": s.window(a, b).values,
        "Pi_plus": prods.pi_plus.window(a, b).values,
        "Pi_minus": prods.pi_minus.window(a, b).values,
        "f_plus": _padded(fp, a, b),
        "f_minus": _padded(fm, a, b),
        "a_plus": traj.a_plus.window(a, b).values,
        "a_minus": traj.a_minus.window(a, b).values,
    }
    names = ["n", "Sigma", "Pi_plus", "Pi_minus", "f_plus", "f_minus", "a_plus", "a_minus"]
    return ResultTable(names, cols, meta)


def _green_basis(cfg: RunConfig):
    V, lo, hi = cfg.potential, cfg.n_lo, cfg.n_hi
    pad = _tail_pad(cfg)
    sub = backward_subdominant(V, lo, hi, pad, tol=max(cfg.tol, 1e-14))
    lm = sub.log
    boundary = cfg.option("boundary", "mirror")
    if boundary == "mirror":
        # phi+ leaves n_lo with the reciprocal of the ratio of phi-
        r = math.exp(lm.log_abs[0] - lm.log_abs[1]) * lm.sign[0] * lm.sign[1]
        seed = (1.0, r)
    else:
        seed = (0.0, 1.0)
    lp = forward_solve_log(V, seed, hi, n0=lo)
    basis = SolutionBasis(lp, lm, 1.0)
    prof = basis.wronskian_profile().values
    w = float(prof[0])
    if w == 0.0 or not math.isfinite(w):
        raise DomainError("boundary solution is proportional to the subdominant one")
    return SolutionBasis(lp, lm, w), sub, boundary


def _green(cfg: RunConfig) -> ResultTable:
    V, hi = cfg.potential, cfg.n_hi
    meta = _base_metadata(cfg)
    basis, sub, boundary = _green_basis(cfg)
    meta["boundary"] = boundary
    meta["tail_agreement"] = sub.agreement
    meta["wronskian"] = basis.wronskian
    lo = cfg.n_lo + 1 if boundary == "dirichlet" else cfg.n_lo
    g = green_diagonal(basis, lo, hi)
    rec = potential_sequence(g)
    n = np.arange(lo, hi + 1)
    cols = {"n": n, "V": V.values(lo, hi), "G_nn": g.g.values}
    names = ["n", "V", "G_nn"]
    C = cfg.option("C")
    if C is not None:
        bounds = diag_bounds(V, C, lo, hi)
        cols["lower"] = bounds.lower.values
        cols["upper"] = bounds.upper.values
        names += ["lower", "upper"]
        meta["C"] = C
        meta["K_A"] = bounds.K_A
        meta["simple_constant"] = bounds.simple
    cols["V_recovered"] = _padded(rec, lo, hi)
    names.append("V_recovered")
    dev = np.abs(rec.values - V.values(rec.n_lo, rec.n_hi)) / np.maximum(1.0, np.abs(rec.values))
    meta["max_recovery_error"] = float(np.max(dev)) if dev.size else NAN
    return ResultTable(names, cols, meta)


def _agmon(cfg: RunConfig) -> ResultTable:
    V, lo, hi = cfg.potential, cfg.n_lo, cfg.n_hi
    meta = _base_metadata(cfg)
    variant = cfg.option("variant", "lg_form")
    pad = _tail_pad(cfg)
    sub = backward_subdominant(V, lo, hi, pad, tol=max(cfg.tol, 1e-14))
    rep = agmon_report(V, sub.log, lo, hi, variant=variant, C=cfg.option("C"))
    meta.update(variant=variant, anchor=lo, tail_agreement=sub.agreement,
                envelope=rep.envelope)
    if rep.K_A is not None:
        meta["K_A"] = rep.K_A
    n = np.arange(lo, hi + 1)
    cols = {"n": n, "V": V.values(lo, hi), "d_A": rep.distance.values,
            "log_abs_psi_minus": sub.log.log_abs,
            "log_weighted": rep.log_weighted.values}
    return ResultTable(list(cols), cols, meta)


def _ortho(cfg: RunConfig) -> ResultTable:
    V, lo, hi = cfg.potential, cfg.n_lo, cfg.n_hi
    if lo < 0:
        raise ConfigError("polynomial indices start at 0", "range")
    E = cfg.option("E", 0.0)
    meta = _base_metadata(cfg)
    meta["E"] = E
    J, x = jacobi_from_potential(V, E, hi)
    p = poly_first_kind(J, x, hi).window(lo, hi).values
    q = poly_second_kind(J, x, hi).window(lo, hi).values
    n = np.arange(lo, hi + 1)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    cols = {"n": n, "lattice_n": n + V.origin, "p": p, "q": q, "psi": sign * p}
    return ResultTable(list(cols), cols, meta)


PIPELINES = {
    "solve": _solve,
    "compare": _compare,
    "classify": _classify,
    "green": _green,
    "agmon": _agmon,
    "ortho": _ortho,
}


def run(cfg: RunConfig) -> ResultTable:
    """Run the pipeline for ``cfg.command`` and return its table."""
    found = []

    def warn(text):
        if text not in found:
            found.append(text)
            log.warning(text)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SummabilityWarning)
        func = PIPELINES[cfg.command]
        table = func(cfg, warn) if cfg.command == "compare" else func(cfg)
    for w in caught:
        if issubclass(w.category, SummabilityWarning):
            warn(str(w.message))
        else:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    table.warnings = found
    return table
