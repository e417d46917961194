import math

import numpy as np
import pytest

from conftest import X1, example61
from latticewkb.core import exponential_basis
from latticewkb.dichotomy import (CASES, TriangularProducts, classify, f_coefficients,
                                  product_identity_error, triangular_products)
from latticewkb.perturbation import (CoefficientTrajectory, PerturbationPair,
                                     contraction_threshold, forward_trajectory,
                                     neumann_solve, transfer_matrix)
from latticewkb.potentials import PotentialSpec
from latticewkb.sequences import LatticeSequence

# Parity limits of Sigma for the geometric example, computed independently
# with 50-digit arithmetic. They differ from the 0/1 values one might
# expect; the odd-even gap equals the infinite product of (1 + s_n).
SIGMA_EVEN_LIMIT = 0.127313430444778
SIGMA_ODD_LIMIT = 0.997230852830845
PI_PLUS_LIMIT = 0.869917422386067


def flat_pair(n_hi=200):
    V0 = PotentialSpec.constant(1.0)
    return PerturbationPair(V0, V0, exponential_basis(1.0, 1, n_hi))


def test_cases_enumerated():
    assert len(CASES) == 7
    assert CASES[-1] == "hypotheses_not_met"


# products -------------------------------------------------------------------

def test_sigma_spot_values(ex61_pair):
    sig = triangular_products(ex61_pair).sigma
    x = X1
    assert sig[1] == pytest.approx(1.0, rel=1e-12)
    assert sig[2] == pytest.approx(x**2 - x**4, rel=1e-12)
    assert sig[3] == pytest.approx(1 - x**6 + x**8 - x**10, rel=1e-12)
    assert sig[2] == pytest.approx(0.1246118, abs=1e-7)
    assert sig[3] == pytest.approx(0.9972814, abs=1e-7)


def test_sigma_parity_limits_measured(ex61_pair):
    prods = triangular_products(ex61_pair)
    sig = prods.sigma
    assert sig[400] == pytest.approx(SIGMA_EVEN_LIMIT, abs=1e-12)
    assert sig[401] == pytest.approx(SIGMA_ODD_LIMIT, abs=1e-12)
    assert sig[401] - sig[400] == pytest.approx(PI_PLUS_LIMIT, abs=1e-12)
    assert prods.pi_plus[401] == pytest.approx(PI_PLUS_LIMIT, abs=1e-12)


def test_trivial_products():
    prods = triangular_products(flat_pair())
    assert np.all(prods.sigma.values == 0.0)
    assert np.all(prods.pi_plus.values == 1.0)
    assert np.all(prods.pi_minus.values == 1.0)


def test_product_identity(ex61_pair):
    assert product_identity_error(triangular_products(ex61_pair)) <= 1e-10


def test_products_match_direct_multiplication(ex61_pair):
    prods = triangular_products(ex61_pair, 1, 40)
    P = np.eye(2)
    for n in range(1, 41):
        G = np.array([[prods.p_plus[n], 0.0], [-prods.q[n], prods.p_minus[n]]])
        P = G @ P
        assert np.allclose(prods.matrix(n), P, rtol=1e-10, atol=1e-15)


def test_reseeded_products(ex61_pair):
    prods = triangular_products(ex61_pair, 5, 60)
    assert prods.n_lo == 5
    assert prods.sigma[5] == pytest.approx(-prods.q[5], rel=1e-15)
    assert prods.pi_plus[5] == prods.p_plus[5]


@pytest.mark.parametrize("n", [1, 2, 3, 10, 100])
def test_unimodularity(ex61_pair, n):
    prods = triangular_products(ex61_pair)
    detG = prods.p_plus[n] * prods.p_minus[n]
    s = ex61_pair.couplings(n, n)["s"][0]
    assert detG == pytest.approx(1 - s * s, abs=1e-12)
    assert np.linalg.det(transfer_matrix(ex61_pair, n)) == pytest.approx(1.0, abs=1e-12)


def test_log_products_do_not_overflow():
    # a sizeable constant-sign s drives Pi+ geometrically
    V0 = PotentialSpec.constant(1.0)
    V = PotentialSpec.constant(1.0 + 0.5 * math.sqrt(5.0))
    pair = PerturbationPair(V, V0, exponential_basis(1.0, 1, 3000))
    prods = triangular_products(pair)
    assert prods.log_pi_plus[-1] == pytest.approx(3000 * math.log(1.5), rel=1e-12)
    assert np.isinf(prods.pi_plus.values[-1])


# f coefficients -----------------------------------------------------------------

def test_f_identity_when_beta_zero():
    p = flat_pair()
    traj = forward_trajectory(p, (0.3, 0.7), 1)
    fp, fm, r = f_coefficients(traj, triangular_products(p))
    assert np.all(fp.values == 0.3)
    assert np.all(fm.values == 0.7)
    assert np.allclose(r.values, 0.7 / 0.3)


def test_f_constant_for_hand_built_trajectory(ex61_pair):
    c1, c2 = 0.6, -1.3
    prods = triangular_products(ex61_pair, 1, 80)
    ap = [c1]
    am = [c2]
    for n in range(1, 80):
        a = prods.matrix(n) @ np.array([c1, c2])
        ap.append(a[0])
        am.append(a[1])
    traj = CoefficientTrajectory(LatticeSequence(1, ap), LatticeSequence(1, am),
                                 LatticeSequence(1, ap), 1, 0.0, 0.0, 0)
    fp, fm, _ = f_coefficients(traj, prods)
    assert np.allclose(fp.values, c1, rtol=1e-14, atol=0)
    assert np.allclose(fm.values, c2, rtol=1e-13, atol=0)


def test_reconstruction(ex61_pair):
    traj = neumann_solve(ex61_pair, 1, n_hi=100)
    prods = triangular_products(ex61_pair, 1, 100)
    fp, fm, _ = f_coefficients(traj, prods)
    for n in range(1, 100):
        a = prods.matrix(n) @ np.array([fp[n + 1], fm[n + 1]])
        assert a[0] == pytest.approx(traj.a_plus[n + 1], rel=1e-14, abs=1e-300)
        assert a[1] == pytest.approx(traj.a_minus[n + 1], rel=1e-14)


def test_f_ratio_absent_where_f_plus_zero():
    p = flat_pair()
    traj = forward_trajectory(p, (0.0, 1.0), 1)
    _, _, r = f_coefficients(traj, triangular_products(p))
    assert np.all(np.isnan(r.values))


def test_f_window_mismatch_rejected(ex61_pair):
    traj = neumann_solve(ex61_pair, 1, n_hi=100)
    with pytest.raises(Exception):
        f_coefficients(traj, triangular_products(ex61_pair, 2, 100))


# classifier ----------------------------------------------------------------------

def _classify(pair, traj):
    prods = triangular_products(pair, traj.N, traj.n_hi)
    return classify(traj, prods, pair)


def test_example61_subdominant_is_generic(ex61_pair):
    N, _ = contraction_threshold(ex61_pair)
    v = _classify(ex61_pair, neumann_solve(ex61_pair, N))
    assert v.case == "generic"
    mean, drift = v.limits["f_minus"]
    assert abs(mean) > 0.1
    assert drift < 1e-6
    assert v.disjunct is not None
    assert v.diagnostics["sup_beta_phiphi"] < 1


def test_example61_forward_seed_is_generic(ex61_pair):
    v = _classify(ex61_pair, forward_trajectory(ex61_pair, (1.0, 1.0), 1))
    assert v.case == "generic"


def test_trivial_seed_generic_with_unit_limit():
    p = flat_pair()
    v = _classify(p, forward_trajectory(p, (0.0, 1.0), 1))
    assert v.case == "generic"
    assert v.limits["f_plus"][0] == 0.0
    assert v.limits["f_minus"][0] == 1.0


def test_finite_collapse_plus():
    V0 = PotentialSpec.constant(1.0)
    V = PotentialSpec.sparse(V0, [5], amplitude=0.05)
    pair = PerturbationPair(V, V0, exponential_basis(1.0, 1, 200))
    c = pair.couplings(5, 5)
    s, q = c["s"][0], c["q"][0]
    # seed chosen so that the single kick at n = 5 zeroes a- exactly
    traj = forward_trajectory(pair, (1.0 - s, q), 1)
    assert traj.a_minus[6] == 0.0
    v = _classify(pair, traj)
    assert v.case == "finite_collapse_plus"
    assert v.onset == 6
    frozen, spread = v.limits["a_plus"]
    # (1 + s)(1 - s) + m q = 1 since m q = s^2
    assert frozen == pytest.approx(1.0, rel=1e-14)
    assert spread == 0.0


def test_finite_collapse_minus():
    V0 = PotentialSpec.constant(1.0)
    V = PotentialSpec.sparse(V0, [5], amplitude=0.05)
    pair = PerturbationPair(V, V0, exponential_basis(1.0, 1, 200))
    c = pair.couplings(5, 5)
    s, m = c["s"][0], c["m"][0]
    # (1 + s) a+ + m a- = 0 at the kick
    traj = forward_trajectory(pair, (m, -(1.0 + s)), 1)
    assert traj.a_plus[6] == 0.0
    v = _classify(pair, traj)
    assert v.case == "finite_collapse_minus"
    assert v.onset == 6


def test_underflow_is_not_collapse(ex61_pair):
    # a+ of the subdominant trajectory underflows far out but is never exactly zero
    traj = neumann_solve(ex61_pair, 1)
    assert v_case(ex61_pair, traj) != "finite_collapse_minus"


def v_case(pair, traj):
    return _classify(pair, traj).case


def test_hypotheses_not_met_for_large_coupling():
    V0 = PotentialSpec.constant(1.0)
    V = PotentialSpec.sparse(V0, [3], amplitude=5.0)
    pair = PerturbationPair(V, V0, exponential_basis(1.0, 1, 100))
    v = _classify(pair, forward_trajectory(pair, (1.0, 1.0), 1))
    assert v.case == "hypotheses_not_met"
    assert "sup" in v.reason


def test_verdict_stable_under_range_doubling():
    for hi in (201, 401):
        pair = example61(1, hi)
        assert v_case(pair, neumann_solve(pair, 1)) == "generic"
        assert v_case(pair, forward_trajectory(pair, (1.0, 1.0), 1)) == "generic"
    for hi in (100, 200):
        V0 = PotentialSpec.constant(1.0)
        V = PotentialSpec.sparse(V0, [5], amplitude=0.05)
        pair = PerturbationPair(V, V0, exponential_basis(1.0, 1, hi))
        c = pair.couplings(5, 5)
        traj = forward_trajectory(pair, (1.0 - c["s"][0], c["q"][0]), 1)
        assert v_case(pair, traj) == "finite_collapse_plus"


def test_products_type(ex61_pair):
    assert isinstance(triangular_products(ex61_pair, 1, 10), TriangularProducts)
