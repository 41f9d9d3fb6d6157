from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from oracles import fp_oracle

from hindman_forge.ip import (
    EXHAUSTED, IP, NOT_IP_EXACT, VIOLATION_AT_BOUNDS, InvalidHomomorphism, SetPredicate, complement,
    difference, dip_witness_bounded, fp_set, iip_witness_bounded, ip_witness_bounded,
    is_ip_quotient, partition_check, quotient_predicate,
)
from hindman_forge.semigroups import (
    ExplicitMap, FiniteSemigroup, FreeWord, Homomorphism, ModRule, NatAdd, NatMul, cyclic_group,
    left_zero, mod_homomorphism,
)

NAT = NatAdd()


def residues(d, rs, S=NAT):
    return quotient_predicate(mod_homomorphism(S, d), set(rs))


EVENS = residues(2, {0})
ALL = SetPredicate(lambda a: True)


def all_in(S, basis, X):
    return all(X(a) for a in fp_oracle(S.product, basis))


def test_fp_set_examples():
    assert fp_set(NAT, [1, 2, 4]) == {1, 2, 3, 4, 5, 6, 7}
    assert fp_set(NAT, [2, 2]) == {2, 4}
    W = FreeWord("ab")
    words = {W.display(a) for a in fp_set(W, [W.parse("a"), W.parse("b")])}
    assert words == {"a", "b", "ab"}
    with pytest.raises(ValueError):
        fp_set(NAT, [])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=7))
def test_fp_set_matches_oracle_nat(basis):
    fp = fp_set(NAT, basis)
    assert fp == fp_oracle(NAT.product, basis)
    assert len(fp) <= 2 ** len(basis) - 1


@given(st.lists(st.integers(0, 40), min_size=1, max_size=6))
def test_fp_set_matches_oracle_free_word(basis):
    W = FreeWord("ab")
    assert fp_set(W, basis) == fp_oracle(W.product, basis)


@given(st.lists(st.integers(0, 20), min_size=1, max_size=6), st.integers(1, 6))
def test_fp_prefix_monotone(basis, j):
    assert fp_set(NAT, basis[:j]) <= fp_set(NAT, basis)


def test_ip_witness_examples():
    v = ip_witness_bounded(NAT, EVENS, 4, 64)
    assert v.verdict == IP and v.witness.basis == (0, 0, 0, 0)
    v = ip_witness_bounded(NAT, EVENS, 4, 64, skip_identity=True)
    assert v.witness.basis == (2, 2, 2, 2)
    assert ip_witness_bounded(NAT, residues(2, {1}), 2, 100).verdict == EXHAUSTED
    L = left_zero(3, names=["a", "b", "c"])
    v = ip_witness_bounded(L, SetPredicate({0}.__contains__), 5, 3)
    assert v.witness.basis == (0,) * 5 and v.witness.fp == {0}


def lex_least_basis(S, X, k, N, distinct=False):
    """Reference search: every k-tuple over the first N elements, in lexicographic order."""
    for basis in itertools.product(range(N), repeat=k):
        if distinct and len(set(basis)) < k:
            continue
        if all_in(S, basis, X):
            return basis
    return None


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.sets(st.integers(0, 4), min_size=1), st.integers(1, 3), st.booleans())
def test_bounded_search_is_lexicographically_least(d, rs, k, distinct):
    X = residues(d, {r % d for r in rs})
    search = dip_witness_bounded if distinct else ip_witness_bounded
    got = search(NAT, X, k, 8)
    expected = lex_least_basis(NAT, X, k, 8, distinct)
    assert (got.witness.basis if got.is_ip else None) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.sets(st.integers(0, 5), min_size=1), st.integers(1, 3))
def test_witness_monotone_in_window_and_depth(d, rs, k):
    X = residues(d, {r % d for r in rs})
    small = ip_witness_bounded(NAT, X, k, 20)
    if small.is_ip:
        assert ip_witness_bounded(NAT, X, k, 40).is_ip
        assert all_in(NAT, small.witness.basis, X)
    if ip_witness_bounded(NAT, X, k + 1, 20).is_ip:
        assert small.is_ip


def test_iip_examples():
    L = left_zero(3)
    assert iip_witness_bounded(L, SetPredicate({0}.__contains__), 5, 2, 3).verdict == EXHAUSTED
    v = iip_witness_bounded(NAT, EVENS, 3, 7, 64)
    assert v.witness.basis == (2, 4, 8)
    assert iip_witness_bounded(NAT, EVENS, 3, 8, 64).verdict == EXHAUSTED


def test_dip_examples():
    F = cyclic_group(3)
    for bits in range(1, 8):
        X = SetPredicate(lambda a, b=bits: b >> a & 1)
        assert dip_witness_bounded(F, X, 4, 3).verdict == EXHAUSTED
    threes = residues(3, {0})
    assert lex_least_basis(NAT, threes, 3, 12, distinct=True) == (0, 3, 6)
    assert dip_witness_bounded(NAT, threes, 3, 100).witness.basis == (0, 3, 6)
    assert dip_witness_bounded(NAT, threes, 3, 100, skip_identity=True).witness.basis == (3, 6, 9)
    W = FreeWord("ab")
    A = SetPredicate(lambda a: W.display(a).startswith("a"))
    v = dip_witness_bounded(W, A, 2, 20)
    assert [W.display(a) for a in v.witness.basis] == ["a", "aa"]
    assert all(W.display(a).startswith("a") for a in v.witness.fp)


def test_is_ip_quotient_examples():
    v = is_ip_quotient(residues(4, {0}), skip_identity=True)
    assert v.verdict == IP and v.witness.basis == (4, 4, 4, 4)
    odd = residues(4, {1, 3})
    assert is_ip_quotient(odd).verdict == NOT_IP_EXACT
    assert ip_witness_bounded(NAT, odd, 3, 200).verdict == EXHAUSTED
    v = is_ip_quotient(residues(6, {3}, NatMul()))
    assert v.verdict == IP and v.witness.basis[0] == 3 and v.witness.fp == {3 ** n for n in range(1, 5)}
    assert all(a % 6 == 3 for a in v.witness.fp)


def test_is_ip_quotient_rejects_fake_homomorphism():
    h = Homomorphism(NAT, cyclic_group(4), ModRule(3))
    with pytest.raises(InvalidHomomorphism):
        is_ip_quotient(quotient_predicate(h, {0}))
    with pytest.raises(ValueError):
        is_ip_quotient(SetPredicate(lambda a: True))


def test_is_ip_quotient_respects_image():
    # 0 is idempotent in the target but outside the image of this map
    F = FiniteSemigroup([[0, 0], [0, 1]])
    h = Homomorphism(left_zero(1), F, ExplicitMap((1,)))
    assert is_ip_quotient(quotient_predicate(h, {0})).verdict == NOT_IP_EXACT
    assert is_ip_quotient(quotient_predicate(h, {1})).verdict == IP


def test_boolean_predicates_keep_quotients():
    X, Y = residues(2, {0}), residues(6, {0})
    assert difference(X, Y).quotient is None  # different homomorphisms
    X6 = residues(6, {0, 2, 4})
    rest = difference(X6, residues(6, {0}))
    assert rest.quotient[1] == {2, 4}
    assert complement(X6).quotient[1] == {1, 3, 5}


def test_partition_examples():
    r = partition_check(NAT, ALL, EVENS, 4, 64)
    assert r.y.is_ip
    r = partition_check(NAT, ALL, residues(3, {1}), 3, 200)
    assert r.y.verdict == EXHAUSTED and r.x_minus_y.is_ip
    assert r.flag is None
    X, Y = residues(6, {0, 2, 4}), residues(6, {0})
    r = partition_check(NAT, X, Y, 3, 300)
    # X∖Y sits in residues {2, 4} mod 6; three terms always have a block sum ≡ 0 mod 6
    assert r.y.is_ip and r.x_minus_y.verdict == EXHAUSTED
    assert r.exact["X\\Y"].verdict == NOT_IP_EXACT and r.exact["Y"].is_ip
    with pytest.raises(ValueError):
        partition_check(NAT, Y, X, 2, 20)


def test_violation_at_bounds_flag():
    # (1, 1) works for X = {1, 2, 3}, but neither {1, 3} nor {2} has a depth-2 basis
    X = SetPredicate(lambda a: 1 <= a <= 3)
    Y = SetPredicate(lambda a: a in (1, 3))
    r = partition_check(NAT, X, Y, 2, 5)
    assert r.x.is_ip and not r.y.is_ip and not r.x_minus_y.is_ip
    assert r.flag == VIOLATION_AT_BOUNDS


def test_verdict_json():
    v = ip_witness_bounded(NAT, EVENS, 2, 10, skip_identity=True)
    out = v.to_json(NAT)
    assert out["verdict"] == "ip" and out["basis"] == [2, 2] and out["bounds"] == {"k": 2, "N": 10}
