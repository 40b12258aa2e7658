import json
from fractions import Fraction

import pytest

from amencert.certificates import (
    INFEASIBLE,
    CertificateError,
    PonziCertificate,
    PrefixChain,
    TransferMap,
    approximate_mean,
    boundary_folner,
    certificate_from_json,
    dumps_certificate,
    folner_optimize,
    load_certificate,
    ponzi_optimize,
    pullback_chain,
    save_certificate,
    sidecar_path,
    tent_certificate,
    tent_sequence,
    transfer_chain,
    verify_certificate,
    verify_folner,
    verify_ponzi,
    weak_duality_replay,
)
from amencert.chains import (
    FLOAT,
    chain_norm,
    defect,
    dual_act,
    dual_norm,
    evaluation_functional,
    is_w0,
    make_chain,
    make_dual,
    pair,
    sigma_functional,
)
from amencert.groups import make_group
from amencert.spaces import make_map, make_space

from helpers import SIX, THREE

Z = make_group("Z^1")
F2 = make_group("F_2")


def point(G):
    return make_space(G, "point")


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_integers_closed_form(n):
    fc = folner_optimize(Z, point(Z), n)
    pc = ponzi_optimize(Z, point(Z), n)
    assert fc.defect == Fraction(2, 2 * n + 1)
    assert pc.norm_bound == Fraction(2 * n + 1, 2)
    assert verify_folner(fc)["ok"] and verify_ponzi(pc, folner=[fc])["ok"]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_free_group_point(n):
    size = 2 * 3**n - 1
    fc = folner_optimize(F2, point(F2), n)
    assert fc.defect == 1 + Fraction(1, size)
    assert fc.defect >= 1
    pc = ponzi_optimize(F2, point(F2), n)
    assert pc.norm_bound * fc.defect == 1
    assert pc.constant == fc.defect


def test_direct_and_dual_ponzi_agree():
    X3 = make_space(F2, THREE)
    for G, X, n in ((Z, point(Z), 3), (F2, point(F2), 2), (F2, X3, 1), (make_group("Z^2"), point(make_group("Z^2")), 2)):
        direct = ponzi_optimize(G, X, n, method="direct")
        dual = ponzi_optimize(G, X, n, method="dual")
        assert direct.norm_bound == dual.norm_bound
        assert verify_ponzi(direct)["ok"] and verify_ponzi(dual)["ok"]


def test_finite_group_vanishes():
    C5 = make_group("perm:[(0 1 2 3 4)]")
    for n in (2, 3):
        assert folner_optimize(C5, point(C5), n).defect == 0
        assert ponzi_optimize(C5, point(C5), n).status == INFEASIBLE


def test_signed_variant_is_a_relaxation():
    G = make_group("Z^2")
    pos = folner_optimize(G, point(G), 2)
    signed = folner_optimize(G, point(G), 2, signed=True)
    assert signed.defect <= pos.defect
    assert is_w0(signed.chain) == (True, 1)


def test_float_mode_matches_exact():
    G = make_group("Z^2")
    fc = folner_optimize(G, point(G), 3, mode=FLOAT)
    assert abs(fc.defect - 10 / 21) <= 1e-9
    assert verify_folner(fc)["ok"]


def test_scaled_ponzi_fails_normalization_by_half():
    pc = ponzi_optimize(Z, point(Z), 2)
    half = PonziCertificate(Z, point(Z), 2, pc.mode, pc.status,
                            tuple(make_dual(Z, point(Z), {(h, x): c / 2 for h, x, c in p.terms}) for p in pc.psis),
                            pc.norm_bound / 2)
    report = verify_ponzi(half)
    assert report["normalization"]["violation"] == Fraction(1, 2)
    assert not report["ok"]


def test_weak_duality_replay_free_group():
    pc = ponzi_optimize(F2, point(F2), 3)
    for m in (1, 2, 3):
        fc = folner_optimize(F2, point(F2), m)
        r = weak_duality_replay(pc, fc)
        assert r["ok"] and r["pairing"] == 1 and fc.defect >= 1 / pc.norm_bound
    assert weak_duality_replay(ponzi_optimize(F2, point(F2), 1), folner_optimize(F2, point(F2), 2))["applicable"] is False


def test_three_point_space_values():
    X = make_space(F2, THREE)
    ts = [folner_optimize(F2, X, n).defect for n in (1, 2)]
    assert ts == [Fraction(6, 5), Fraction(18, 17)]
    assert ponzi_optimize(F2, X, 2).norm_bound == Fraction(17, 18)


def test_boundary_chain():
    for n in range(1, 7):
        cert = boundary_folner(2, n)
        pc = cert.chain
        assert cert.defect == Fraction(2, n) == pc.defect_by_cylinders()
        assert pc.norm() == 1 and pc.sigma_value() == 1
    for n in (1, 2, 3):
        xi = boundary_folner(2, n).chain.to_chain()
        assert defect(xi) == Fraction(2, n) and chain_norm(xi) == 1
        assert is_w0(xi) == (True, 1)
    with pytest.raises(CertificateError):
        boundary_folner(1, 3)


def test_prefix_chain_general_weights():
    pc = PrefixChain(2, (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)))
    assert pc.defect() == pc.defect_by_cylinders() == defect(pc.to_chain())
    pc3 = PrefixChain(3, (Fraction(0), Fraction(1, 4), Fraction(3, 4)))
    assert pc3.defect() == pc3.defect_by_cylinders()


@pytest.mark.parametrize("spec", ["F_2", "Z^2", "Z^1"])
def test_tent_sequence(spec):
    G = make_group(spec)
    O = make_space(G, "onepoint")
    g1 = G.gens[0]
    for n in range(1, 5):
        xi = tent_sequence(O, g1, n)
        full = xi.to_chain()
        assert xi.norm() == chain_norm(full) <= 4
        assert xi.defect() == defect(full) <= Fraction(4, n)
        assert xi.pair_ev() == 1 == pair(evaluation_functional(G, O, G.identity, G.identity), full)
        assert is_w0(full) == (True, 0)


def test_tent_radius_one():
    O = make_space(F2, "onepoint")
    a = F2.parse("a")
    full = tent_sequence(O, a, 1).to_chain()
    one = O.indicator(F2.identity)
    assert full.as_dict() == {F2.identity: one, a: O.scale(-1, one)}
    with pytest.raises(CertificateError):
        tent_sequence(O, F2.identity, 3)


def test_pullback_examples():
    X, Y = make_space(F2, SIX), make_space(F2, THREE)
    ident = make_map(X, X, range(6))
    eta = folner_optimize(F2, X, 1).chain
    assert pullback_chain(ident, eta) == eta
    P = point(F2)
    const = make_map(X, P, [0] * 6)
    xi = folner_optimize(F2, P, 2).chain
    pulled = pullback_chain(const, xi)
    assert defect(pulled) == defect(xi)
    assert all(f == (v,) * 6 for (g, f), (_, v) in zip(pulled.entries, xi.entries))
    with pytest.raises(CertificateError):
        pullback_chain(make_map(X, Y, [i % 3 for i in range(6)]), eta)


def test_transfer_examples():
    X, Y = make_space(F2, SIX), make_space(F2, THREE)
    ident = TransferMap(make_map(X, X, range(6)))
    xi = folner_optimize(F2, X, 1).chain
    assert transfer_chain(ident, xi) == xi
    mu = TransferMap(make_map(X, Y, [i % 3 for i in range(6)]))
    eta = folner_optimize(F2, Y, 1).chain
    lifted = pullback_chain(mu.fmap, eta)
    assert transfer_chain(mu, lifted) == eta
    with pytest.raises(CertificateError):
        TransferMap(make_map(X, X, [0] * 6)) if False else TransferMap(make_map(Y, make_space(F2, SIX.replace("(0 1 2 3 4 5)", "(0 1 2)(3 4 5)")), [0, 1, 2]))


def test_approximate_mean():
    G = make_group("Z^2")
    cert = folner_optimize(G, point(G), 4)
    assert approximate_mean(cert, sigma_functional(G, point(G))) == 1
    assert approximate_mean(cert, make_dual(G, point(G), {})) == 0
    phi = evaluation_functional(G, point(G), G.identity, 0)
    for s in G.gens:
        gap = abs(approximate_mean(cert, dual_act(s, phi)) - approximate_mean(cert, phi))
        assert gap <= dual_norm(phi) * cert.defect


def test_json_round_trip_and_tamper(tmp_path):
    certs = [
        folner_optimize(Z, point(Z), 3),
        ponzi_optimize(F2, point(F2), 2),
        ponzi_optimize(make_group("perm:[(0 1 2 3 4)]"), point(make_group("perm:[(0 1 2 3 4)]")), 3),
        boundary_folner(2, 5),
        tent_certificate(make_space(F2, "onepoint"), F2.parse("a"), 4),
        folner_optimize(F2, make_space(F2, THREE), 1, mode=FLOAT),
    ]
    for i, cert in enumerate(certs):
        path = save_certificate(cert, tmp_path / f"c{i}.json", {"created": "now"})
        assert sidecar_path(path).exists()
        again = load_certificate(path)
        assert dumps_certificate(again) == path.read_text()
        assert verify_certificate(again)["ok"]
    data = json.loads((tmp_path / "c0.json").read_text())
    data["defect"] = "2/9"
    assert not verify_certificate(certificate_from_json(data))["ok"]
    data = json.loads((tmp_path / "c0.json").read_text())
    data["data"]["entries"][0][2] = "1/2"
    assert not verify_certificate(certificate_from_json(data))["ok"]
    data["schema_version"] = 2
    with pytest.raises(CertificateError):
        certificate_from_json(data)


def test_deterministic_bytes():
    a = dumps_certificate(folner_optimize(F2, point(F2), 2))
    b = dumps_certificate(folner_optimize(F2, point(F2), 2))
    assert a == b
