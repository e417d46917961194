import dataclasses
import math
import warnings

import numpy as np
import pytest

from latticewkb.core import relative_residual, wronskian
from latticewkb.errors import DegenerateRootError, InvariantError, SummabilityWarning
from latticewkb.green import green_matrix
from latticewkb.liouville_green import (JStrategy, build_bounded_general, build_bounded_slow,
                                        build_unbounded, comparison_potential, cz_constant,
                                        lg_basis, s_from_b, unbounded_error)
from latticewkb.potentials import PotentialSpec
from latticewkb.sequences import LatticeSequence

GOLD = (3 + math.sqrt(5)) / 2


def slow_potential():
    return PotentialSpec.perturbed(PotentialSpec.constant(1.0), PotentialSpec.power_decay(1.0))


def test_s_from_b():
    assert s_from_b(3.0) == pytest.approx(GOLD, rel=1e-14)
    assert s_from_b(2.5) == 2.0
    assert s_from_b(-3.0) == pytest.approx(-GOLD, rel=1e-14)
    b = np.array([2.1, 5.0, -7.0])
    S = s_from_b(b)
    np.testing.assert_allclose(S - 1 / S, np.sign(b) * np.sqrt(b * b - 4), rtol=1e-12)
    for bad in (2.0, -2.0, 1.0):
        with pytest.raises(DegenerateRootError):
            s_from_b(bad)


def test_bounded_slow_constant():
    m = build_bounded_slow(PotentialSpec.constant(1.0), 60)
    np.testing.assert_allclose(m.S.values, GOLD, rtol=1e-14)
    np.testing.assert_allclose(m.z.values, 5 ** -0.25, rtol=1e-13)
    assert m.C_z == pytest.approx(5 ** -0.25, rel=1e-14)
    np.testing.assert_allclose(m.V_tilde.values, 1.0, rtol=1e-13)
    np.testing.assert_allclose(m.z.values ** 2, 1 / math.sqrt(5), rtol=1e-13)
    assert m.check() < 1e-12


def test_bounded_slow_product_identity():
    V = slow_potential()
    m = build_bounded_slow(V, 400)
    z = m.z.values
    v = V.values(m.anchor + 1, m.n_hi)
    np.testing.assert_allclose(z[:-1] * z[1:], 1 / np.sqrt(v * (v + 4)), rtol=1e-10)
    m.check()


def test_bounded_slow_tail_increment():
    # the increase beyond n = 200 is about 1.2e-5: the error decays like 1/n^3
    m = build_bounded_slow(slow_potential(), 1001)
    V = slow_potential()
    d = np.abs(m.V_tilde.window(2, 1000).values - V.values(2, 1000))
    n = np.arange(2, 1001)
    beyond = d[n > 200].sum()
    assert 1e-5 < beyond < 1.5e-5
    # away from the truncation edge the error is about 1/n^3
    assert np.max((d * n ** 3.0)[n <= 500]) < 1.3


def test_cz_constant():
    assert cz_constant(PotentialSpec.constant(1.0), 100) == pytest.approx(5 ** -0.25, rel=1e-14)
    assert cz_constant(PotentialSpec.constant(3.0), 100) == pytest.approx(21 ** -0.25, rel=1e-14)
    V = slow_potential()
    assert cz_constant(V, 500) == pytest.approx(cz_constant(V, 1000), abs=1e-6)


@pytest.mark.parametrize("strategy", list(JStrategy))
def test_bounded_general_constant_matches_slow(strategy):
    V = PotentialSpec.constant(1.0)
    m = build_bounded_general(V, strategy, 40)
    np.testing.assert_allclose(m.b.values, 3.0, rtol=1e-14)
    np.testing.assert_allclose(m.J.values, math.sqrt(5), rtol=1e-14)
    slow = build_bounded_slow(V, 40)
    np.testing.assert_allclose(m.S.values, slow.S.values, rtol=1e-14)
    np.testing.assert_allclose(m.V_tilde.values, 1.0, rtol=1e-13)
    m.check()


def test_skip_pairs():
    V = PotentialSpec.table([1.0, 2.0] * 20)
    m = build_bounded_general(V, "skip_pairs", 40)
    J = m.J
    for k in range(1, 19):
        expected = math.sqrt((V(2 * k) + 2) ** 2 - 4)
        assert J[2 * k] == pytest.approx(expected)
        assert J[2 * k + 1] == pytest.approx(expected)
    m.check()


def test_unbounded_fluct_spot_values():
    m = build_unbounded(PotentialSpec.fluctuating(3), 50)
    assert m.b[3] == pytest.approx(math.sqrt(91), rel=1e-12)
    assert m.z[3] == pytest.approx(1 / math.sqrt(29), rel=1e-12)
    assert m.S[3] == pytest.approx((math.sqrt(87) + math.sqrt(91)) / 2, rel=1e-12)
    assert m.C_z == 1.0
    m.check()


def test_unbounded_constant_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m = build_unbounded(PotentialSpec.constant(1.0), 400)
    assert any(issubclass(w.category, SummabilityWarning) for w in caught)
    assert m.warnings


def test_unbounded_cubic_envelope():
    # for V = n^3 the error is about 2/n^3, not O(n^-6)
    V = PotentialSpec.table(np.arange(1, 1002, dtype=float) ** 3)
    d = unbounded_error(V, 2, 1000).values
    n = np.arange(2, 1001)
    oracle = 1 / (V.values(3, 1001) + 2) + 1 / (V.values(1, 999) + 2)
    np.testing.assert_allclose(d[n >= 3], oracle[n >= 3], rtol=0.02)
    env = V.values(3, 1001) ** -1.5 * (n ** 3.0) ** -0.5 + (n ** 3.0) ** -0.5 * V.values(1, 999) ** -1.5
    assert np.max(np.abs(d) / env) > 1e3


def test_unbounded_error_matches_subtraction():
    V = PotentialSpec.fluctuating(3)
    m = build_unbounded(V, 60)
    direct = m.V_tilde.window(2, 58).values - V.values(2, 58)
    np.testing.assert_allclose(unbounded_error(V, 2, 58).values, direct, rtol=1e-9, atol=1e-12)


def test_comparison_potential_forms_and_invariant():
    m = build_bounded_slow(PotentialSpec.constant(1.0), 30)
    assert comparison_potential(m, 10) == pytest.approx(1.0, rel=1e-13)
    z = m.z.values.copy()
    z[11 - m.z.n_lo] *= 1.01
    bad = dataclasses.replace(m, z=LatticeSequence(m.z.n_lo, z))
    with pytest.raises(InvariantError):
        comparison_potential(bad, 10)


def test_lg_basis(x1):
    m = build_bounded_slow(PotentialSpec.constant(1.0), 40)
    b = lg_basis(m)
    minus = b.minus.values
    np.testing.assert_allclose(minus / minus[0], x1 ** np.arange(minus.size), rtol=1e-12)
    assert b.check(rtol=1e-9) < 1e-9
    for n in (2, 10, 30):
        assert wronskian(b, n) == pytest.approx(1.0, rel=1e-9)


def test_lg_basis_solves_comparison_equation():
    for m in (build_bounded_slow(slow_potential(), 200), build_unbounded(PotentialSpec.fluctuating(3), 30)):
        b = lg_basis(m)
        Vt = PotentialSpec.table(m.V_tilde.values, origin=m.V_tilde.n_lo)
        lo, hi = m.V_tilde.n_lo - 1, m.V_tilde.n_hi + 1
        for seq in (b.minus.window(lo, hi), b.plus.window(lo, hi)):
            assert np.max(relative_residual(Vt, seq).values) < 1e-10


def test_green_from_lg_basis_product_form():
    m = build_bounded_slow(slow_potential(), 60)
    b = lg_basis(m)
    z, S = m.z, m.S
    for (i, j) in ((5, 9), (12, 12), (30, 20)):
        lo, hi = min(i, j), max(i, j)
        prod = np.prod([1 / S[k] for k in range(lo + 1, hi + 1)])
        assert green_matrix(b, i, j) == pytest.approx(z[i] * z[j] * prod, rel=1e-12)


def test_unbounded_telescoping_product(rng):
    from latticewkb.liouville_green import _log_z
    for _ in range(20):
        v = rng.uniform(0.1, 50.0, 40)
        V = PotentialSpec.table(v)
        with warnings.catch_warnings():
            # random values are not summable; only the algebra is tested here
            warnings.simplefilter("ignore", SummabilityWarning)
            model = build_unbounded(V, 40)
        logD = np.log(model.b.values ** 2 - 4.0)
        # bottom factor is V_1 + 2 itself; b_1 carries the V_0 := V_1 convention
        logD[0] = math.log(v[0] + 2.0)
        # alternating product of (b^2 - 4) collapses to V_n + 2
        ratio = np.exp(-2.0 * _log_z(logD, 1, 1.0))
        assert np.allclose(ratio, v + 2.0, rtol=1e-10)
        assert np.allclose(model.z.values ** -2, v + 2.0, rtol=1e-12)


def test_bounded_slow_z_drift_decelerates():
    model = build_bounded_slow(slow_potential(), 400)
    z = model.z.values
    partial = np.cumsum(np.abs(z - z[-1]))
    assert np.isfinite(partial[-1])
    q = partial.size // 4
    assert partial[-1] - partial[-q - 1] < 0.1 * partial[-1]
    assert model.diagnostics["z_drift_deceleration"] < 0.1
