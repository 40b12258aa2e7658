import json
from fractions import Fraction

import pytest

from amencert.chains import (
    FLOAT,
    ChainError,
    act_chain,
    adjoint_coboundary,
    chain_from_json,
    chain_norm,
    chain_to_json,
    coboundary,
    convert_mode,
    defect,
    dual_from_json,
    dual_norm,
    dual_to_json,
    evaluation_functional,
    is_n0,
    is_w0,
    make_chain,
    make_dual,
    normalize_chain,
    pair,
    sigma,
    sigma_functional,
    zero_chain,
)
from amencert.groups import make_group
from amencert.spaces import make_space

Z = make_group("Z^1")
F2 = make_group("F_2")
ZP = make_space(Z, "point")


def test_sigma_examples():
    assert sigma(make_chain(Z, ZP, {(0,): 1})) == 1
    O = make_space(F2, "onepoint")
    f = O.indicator(F2.identity)
    g1 = F2.parse("a")
    xi = make_chain(F2, O, {F2.identity: f, g1: O.scale(-1, f)})
    assert O.constant_value(sigma(xi)) == 0
    assert is_n0(xi)
    convex = make_chain(Z, ZP, {(0,): Fraction(3, 10), (1,): Fraction(7, 10)})
    assert sigma(convex) == 1


def test_is_w0_examples():
    assert is_w0(make_chain(Z, ZP, {(0,): 5, (3,): -2})) == (True, 3)
    X = make_space(make_group("Z^1"), "finite: x->(0)(1)")
    m = is_w0(make_chain(Z, X, {(0,): (1, 0)}))
    assert not m.member


def test_normal_form_prunes_zero_entries():
    xi = make_chain(Z, ZP, {(0,): 0, (2,): 1, (1,): Fraction(1, 2)})
    assert xi.support == [(1,), (2,)]
    assert len(zero_chain(Z, ZP)) == 0


def test_act_chain_examples():
    xi = make_chain(Z, ZP, {(0,): 1})
    assert act_chain((0,), xi) == xi
    assert act_chain((4,), xi).as_dict() == {(4,): 1}
    O = make_space(F2, "onepoint")
    f = O.indicator(F2.identity)
    g1 = F2.parse("a")
    k = F2.parse("bA")
    moved = act_chain(k, make_chain(F2, O, {F2.identity: f, g1: O.scale(-1, f)}))
    assert moved.as_dict() == {k: O.translate(k, f), F2.mul(k, g1): O.scale(-1, O.translate(k, f))}


def test_coboundary_examples():
    C5 = make_group("perm:[(0 1 2 3 4)]")
    P = make_space(C5, "point")
    uniform = make_chain(C5, P, {g: Fraction(1, 5) for g in C5.elements})
    assert all(len(c) == 0 for c in coboundary(uniform).components)
    b1 = make_chain(Z, ZP, {g: Fraction(1, 3) for g in Z.ball(1).elements})
    assert [chain_norm(c) for c in coboundary(b1).components] == [Fraction(2, 3)] * 2
    assert defect(b1) == Fraction(2, 3)
    for c in coboundary(make_chain(Z, ZP, {(0,): 1, (2,): -1})).components:
        assert all(Z.length(g) <= 3 for g in c.support)


def test_coboundary_injective_on_infinite_groups():
    for G in (Z, F2, make_group("Z^2")):
        P = make_space(G, "point")
        els = G.ball(2).elements
        xi = make_chain(G, P, {g: (i % 3) - 1 for i, g in enumerate(els)})
        assert len(xi) > 0
        assert any(len(c) > 0 for c in coboundary(xi).components)


def test_adjoint_example():
    psi_plus = make_dual(Z, ZP, {((0,), 0): 1})
    psi_minus = make_dual(Z, ZP, {})
    delta_star = adjoint_coboundary([psi_plus, psi_minus])
    # (delta* psi)(g) = sum_s psi_s(g) - psi_s(s g): the +1 coefficient at h = 0
    # reappears with sign -1 at g = s^{-1} h = -1
    assert delta_star.coefficients() == {((0,), 0): 1, ((-1,), 0): -1}
    assert adjoint_coboundary([psi_minus, psi_minus]).terms == ()


def test_chain_norm_examples():
    assert chain_norm(make_chain(Z, ZP, {(0,): 1})) == 1
    X = make_space(F2, "finite: a->(0 1); b->(0 1)")
    xi = make_chain(F2, X, {F2.identity: (1, 2), F2.parse("a"): (-3, 0)})
    assert chain_norm(xi) == 4


def test_pair_examples():
    b1 = make_chain(Z, ZP, {g: Fraction(1, 3) for g in Z.ball(1).elements})
    assert pair(sigma_functional(Z, ZP), b1) == 1
    assert pair(make_dual(Z, ZP, {}), b1) == 0
    assert pair(evaluation_functional(Z, ZP, (1,), 0), b1) == Fraction(1, 3)
    X = make_space(make_group("Z^1"), "finite: x->(0)(1)")
    with pytest.raises(ChainError):
        pair(sigma_functional(Z, X), make_chain(Z, X, {(0,): (1, 0)}))


def test_normalize_examples():
    xi = make_chain(Z, ZP, {(0,): Fraction(1, 2), (1,): Fraction(1, 2)})
    assert normalize_chain(xi) == xi
    out = normalize_chain(make_chain(Z, ZP, {(0,): 2, (1,): -1}))
    assert out.as_dict() == {(0,): Fraction(2, 3), (1,): Fraction(1, 3)}
    with pytest.raises(ChainError):
        normalize_chain(make_chain(Z, ZP, {(0,): 2}))


def test_dual_norm():
    phi = make_dual(Z, ZP, {((0,), 0): 2, ((1,), 0): -3})
    assert dual_norm(phi) == 3
    with pytest.raises(ChainError):
        dual_norm(sigma_functional(Z, ZP))


def test_json_round_trip():
    for spec in ("point", "onepoint", "finite:a->(0 1 2);b->(0 1 2)", "boundary"):
        X = make_space(F2, spec)
        if spec == "point":
            f = Fraction(2, 7)
        elif spec == "onepoint":
            f = X.make({F2.parse("ab"): Fraction(1, 3)}, Fraction(-1, 2))
        elif spec == "boundary":
            f = X.indicator(F2.parse("aB"), Fraction(5, 3), Fraction(0))
        else:
            f = (Fraction(1), Fraction(0), Fraction(-2, 9))
        xi = make_chain(F2, X, {F2.parse("b"): f, F2.identity: f})
        data = json.loads(json.dumps(chain_to_json(xi)))
        assert chain_from_json(data) == xi
    phi = make_dual(F2, make_space(F2, "point"), {(F2.parse("a"), 0): Fraction(1, 3)})
    assert dual_from_json(json.loads(json.dumps(dual_to_json(phi)))).terms == phi.terms


def test_rationals_serialize_as_strings():
    data = chain_to_json(make_chain(Z, ZP, {(1,): Fraction(2, 3)}))
    assert data["entries"] == [["(1)", "*", "2/3"]]
    fl = chain_to_json(convert_mode(make_chain(Z, ZP, {(1,): Fraction(1, 3)}), FLOAT))
    assert fl["entries"][0][2] == "0.33333333333333331"


def test_mixed_modes_rejected():
    a = make_chain(Z, ZP, {(0,): 1})
    b = convert_mode(a, FLOAT)
    from amencert.chains import chain_sub

    with pytest.raises(ChainError):
        chain_sub(a, b)
