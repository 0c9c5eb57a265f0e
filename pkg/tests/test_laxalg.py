import json
import random
from fractions import Fraction

import pytest

from laxforge import ode7, pii
from laxforge.errors import InsufficientOrders
from laxforge.laxalg import (
    E2,
    I_SIGMA2,
    N_MINUS,
    N_PLUS,
    SIGMA1,
    SIGMA3,
    ExpansionData,
    LaurentMat2,
    compat_residual,
    expansion_residuals,
    gauge_cov_residuals,
    inverse_constant,
    scalar_laurent_is_zero,
)
from laxforge.symcore import RationalExpr, ReductionSystem, probe, random_point, reduce, sym

x, u, ux, uxx, alpha, d = sym("x u ux uxx alpha d")


def random_laurent(rng, names=("x", "u")):
    coeffs = {}
    for p in rng.sample(range(-2, 3), 2):
        coeffs[p] = [[_rand_expr(rng, names) for _ in range(2)] for _ in range(2)]
    return LaurentMat2.from_coeffs(coeffs)


def _rand_expr(rng, names):
    e = RationalExpr.const(rng.randint(-3, 3))
    for n in names:
        e = e + rng.randint(-3, 3) * RationalExpr.symbol(n) ** rng.randint(0, 2)
    return e


def test_product_is_convolution():
    A = LaurentMat2.from_coeffs({-1: [[1, 0], [0, 0]], 1: [[0, x], [0, 0]]})
    B = LaurentMat2.from_coeffs({1: [[u, 0], [1, 0]]})
    C = A @ B
    assert C.powers == [0, 2]
    assert C.coeff(0) == [[u, 0], [0, 0]]
    assert C.coeff(2) == [[x, 0], [0, 0]]


def test_no_explicit_zero_terms():
    A = LaurentMat2.from_coeffs({1: [[x, 0], [0, 0]]})
    Z = A - A
    assert Z.is_zero() and Z.powers == []


def test_commutator_antisymmetric_and_traceless():
    rng = random.Random(3)
    for _ in range(10):
        A, B = random_laurent(rng), random_laurent(rng)
        assert A.commutator(B) == -B.commutator(A)
        assert scalar_laurent_is_zero(A.commutator(B).trace())


def test_nilpotents_and_gauge_inverse():
    assert (N_PLUS @ N_PLUS).is_zero()
    assert (N_MINUS @ N_MINUS).is_zero()
    delta = (1 - 2 * alpha) / (2 * ux + 2 * u**2 + x)
    for N in (N_PLUS, N_MINUS):
        G = E2 + N.shift(-1) * (delta / 2)
        Ginv = E2 - N.shift(-1) * (delta / 2)
        assert G @ Ginv == E2
    assert N_PLUS == LaurentMat2.constant([[1, 1], [-1, -1]])
    assert N_MINUS == LaurentMat2.constant([[1, -1], [1, -1]])


def test_json_round_trip():
    A = LaurentMat2.from_coeffs({-2: [[x / (u + 1), 0], [0, Fraction(1, 3)]], 1: [[0, 1], [u, 0]]})
    obj = json.loads(A.to_json())
    assert obj["minPower"] == -2 and obj["maxPower"] == 1
    assert LaurentMat2.from_json(A.to_json()) == A


def test_lam_in_coefficient_rejected():
    with pytest.raises(ValueError):
        LaurentMat2.constant([[sym("lam"), 0], [0, 0]])


def test_pii_compatibility_on_shell():
    P, Q = pii.pii_lax()
    assert compat_residual(P, Q, pii.pii_system()).is_zero()


def test_pii_compatibility_without_rules_is_multiple_of_equation():
    P, Q = pii.pii_lax()
    r = compat_residual(P, Q, pii.free_system())
    assert not r.is_zero()
    eq = uxx - 2 * u**3 - x * u + alpha
    for p in r.powers:
        for row in r.coeff(p):
            for e in row:
                if e.is_zero():
                    continue
                assert "uxx" not in (e / eq).symbols


def test_dual_formulation_gives_same_condition():
    P, Q = pii.pii_lax()
    S = pii.free_system()
    direct = compat_residual(P, Q, S)
    dual = compat_residual(-P.transpose(), -Q.transpose(), S)
    assert dual == -direct.transpose()


def test_ode7_compatibility_on_shell():
    st = ode7.symbolic_state()
    P, Q = ode7.ode7_lax(st)
    assert compat_residual(P, Q, st.system()).is_zero()


def test_identity_gauge_is_covariant():
    P, Q = pii.pii_lax()
    rx, rl = gauge_cov_residuals(E2, P, Q, P, Q, pii.pii_system())
    assert rx.is_zero() and rl.is_zero()


def test_gauge_with_wrong_target_alpha_fails():
    P, Q = pii.pii_lax()
    system = pii.pii_system()
    new_u, _ = pii.bt_closed_form("plus")
    Pt, Qt = pii.pii_lax(new_u, system.dx(new_u), alpha)  # should be 1 - alpha
    G = pii.pii_gauges()[0]
    rx, rl = gauge_cov_residuals(G, P, Q, Pt, Qt, system)
    assert rx.is_zero()
    assert not rl.is_zero()
    entry = next(e for p in rl.powers for row in rl.coeff(p) for e in row if not e.is_zero())
    pt = random_point(entry.symbols, random.Random(5))
    assert probe(entry, pt) != 0


def test_psi0_determinant():
    e = pii.pii_expansion()
    (a, b), (c, dd) = e.data.psi0.coeff(0)
    assert a * dd - b * c == -2


def test_pii_expansion_orders():
    e = pii.pii_expansion()
    P, Q = pii.pii_lax()
    rs = expansion_residuals(e.data, P, Q, [-1, 0], pii.expansion_system())
    assert [(r.equation, r.order) for r in rs] == [("lambda", -1), ("lambda", 0), ("x", 0)]
    assert all(r.is_zero() for r in rs)


def test_pii_expansion_with_wrong_delta_fails():
    e = pii.pii_expansion()
    P, Q = pii.pii_lax()
    rho = LaurentMat2.constant([[0, 0], [e.delta2, 0]])
    bad = ExpansionData(e.data.psi0, rho, e.data.lambda_logderiv)
    rs = expansion_residuals(bad, P, Q, [-1, 0], pii.expansion_system(), equations=("lambda",))
    by_order = {r.order: r for r in rs}
    assert by_order[-1].is_zero()
    assert not by_order[0].is_zero()


def test_expansion_needs_most_singular_order():
    e = pii.pii_expansion()
    P, Q = pii.pii_lax()
    with pytest.raises(InsufficientOrders):
        expansion_residuals(e.data, P, Q, [0], pii.expansion_system())
    with pytest.raises(InsufficientOrders):
        expansion_residuals(e.data, P, Q, [-1, 0, 1], pii.expansion_system())


def test_logderiv_must_be_diagonal():
    with pytest.raises(ValueError):
        ExpansionData(E2, LaurentMat2.zero(), SIGMA1.shift(-1))


def test_inverse_constant():
    M = LaurentMat2.constant([[d, 1 / d], [d, -1 / d]])
    assert M @ inverse_constant(M) == E2


def test_pauli_relations():
    assert SIGMA1 @ SIGMA1 == E2
    assert SIGMA3 @ SIGMA3 == E2
    assert I_SIGMA2 @ I_SIGMA2 == -E2
    assert SIGMA3 @ SIGMA1 == I_SIGMA2


def test_reduce_uses_system():
    S = ReductionSystem({"x": 1, "u": ux}, {"ux": u**2})
    A = LaurentMat2.constant([[ux, 0], [0, 0]])
    assert A.reduce(S) == LaurentMat2.constant([[u**2, 0], [0, 0]])
    assert reduce(ux * u, S) == u**3
