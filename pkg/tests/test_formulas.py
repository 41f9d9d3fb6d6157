from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from hindman_forge.formulas import (
    X, Y, And, Atom, FormulaGenerator, Not, Or, Undecided, constants, definable_set,
    enumerate_formula, evaluate, free_vars, from_json, reduce_to_quotient, render, substitute_x,
    to_json,
)
from hindman_forge.semigroups import FreeWord, NatAdd
from hindman_forge.specs import build_context

GOLDEN = Path(__file__).parent / "golden" / "enumeration_arity2_two_predicates.txt"


def nat_ctx(**preds):
    specs = {name: {"type": "mod", "d": d, "residues": list(rs)} for name, (d, rs) in preds.items()}
    return build_context(NatAdd(), specs)


CTX = nat_ctx(P=(2, [0]), Q=(3, [0]))
MOD4 = nat_ctx(P=(4, [0]))


def formulas(preds=("P", "Q"), variables=(X, Y), max_const=6):
    letters = st.sampled_from(variables) | st.integers(0, max_const)
    atoms = st.builds(Atom, st.sampled_from(preds), st.lists(letters, min_size=1, max_size=3).map(tuple))
    return st.recursive(atoms, lambda inner: st.one_of(
        st.builds(Not, inner), st.builds(And, inner, inner), st.builds(Or, inner, inner)), max_leaves=6)


def test_eval_examples():
    P = nat_ctx(P=(2, [0]))
    assert evaluate(P, Atom("P", (X, Y)), x=3, y=5)
    contradiction = And(Atom("P", (X,)), Not(Atom("P", (X,))))
    assert not any(evaluate(P, contradiction, x=a) for a in range(20))
    W = FreeWord("ab")
    ctx = build_context(W, {"P": {"type": "prefix", "letter": "a"}})
    assert not evaluate(ctx, Atom("P", (X, Y)), x=W.parse("b"), y=W.parse("a"))
    assert evaluate(ctx, Atom("P", (X, Y)), x=W.parse("a"), y=W.parse("b"))


def test_eval_needs_assignments_and_known_predicates():
    with pytest.raises(ValueError):
        evaluate(CTX, Atom("P", (X,)))
    with pytest.raises(KeyError):
        evaluate(CTX, Atom("R", (X,)), x=1)


def test_substitute_x_example():
    f = substitute_x(Atom("P", (X, Y)), 3)
    assert f == Atom("P", (3, Y))
    assert render(f) == "P(3·y)"
    assert free_vars(f) == {Y}


@settings(max_examples=200)
@given(formulas(), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_substitution_extensionality(f, u, a, b):
    assert evaluate(CTX, substitute_x(f, u), x=a, y=b) == evaluate(CTX, f, x=u, y=b)


@settings(max_examples=200)
@given(formulas(), st.integers(0, 30), st.integers(0, 30))
def test_de_morgan_and_double_negation(f, a, b):
    g = Not(f)
    assert evaluate(CTX, Not(Not(f)), x=a, y=b) == evaluate(CTX, f, x=a, y=b)
    assert evaluate(CTX, Not(And(f, g)), x=a, y=b) == evaluate(CTX, Or(Not(f), Not(g)), x=a, y=b)
    assert evaluate(CTX, Not(Or(f, g)), x=a, y=b) == evaluate(CTX, And(Not(f), Not(g)), x=a, y=b)


@given(formulas())
def test_encoding_roundtrip(f):
    data = CTX.encode(f)
    assert CTX.decode(data) == f
    assert from_json(to_json(f)) == f


def test_encoding_layout():
    # atom: 0x01, predicate index, term length, letters (x=0, y=1, constant c = c+2)
    assert CTX.encode(Atom("P", (X,))) == bytes([1, 0, 1, 0])
    assert CTX.encode(Atom("Q", (Y, 3))) == bytes([1, 1, 2, 1, 5])
    assert CTX.encode(Not(Atom("P", (X,)))) == bytes([2, 1, 0, 1, 0])
    f = Atom("P", (X,))
    assert CTX.encode(And(f, f))[0] == 3 and CTX.encode(Or(f, f))[0] == 4
    # constants past 125 need a second varint byte
    assert CTX.encode(Atom("P", (200,))) == bytes([1, 0, 1, 0xCA, 0x01])
    with pytest.raises(ValueError):
        CTX.decode(bytes([1, 0, 1, 0, 0]))


def test_golden_enumeration_prefix():
    lines = [l.split("\t") for l in GOLDEN.read_text(encoding="utf-8").splitlines() if not l.startswith("#")]
    assert len(lines) == 100
    enum = CTX.enumeration(2)
    for i, (index, hexcode, text) in enumerate(lines):
        f = enum[i]
        assert int(index) == i
        assert CTX.encode(f).hex() == hexcode
        assert render(f) == text


def test_enumeration_is_injective_and_indexed():
    enum = CTX.enumeration(2)
    seen = set()
    for i in range(600):
        f = enum[i]
        assert f not in seen
        seen.add(f)
        assert enum.index_of(f) == i
        assert free_vars(f) <= {X, Y}
    arity1 = CTX.enumeration(1)
    assert all(free_vars(arity1[i]) <= {X} for i in range(300))


def test_enumeration_completeness_small():
    # every formula over P, Q with constants {0, 1} and size <= 7 appears
    enum = CTX.enumeration(2)
    count = 0
    for f in FormulaGenerator(CTX, (X, Y), (0, 1)).up_to(7):
        i = enum.index_of(f)
        assert enum[i] == f
        count += 1
    assert count == 896


def test_enumeration_weight_order():
    enum = CTX.enumeration(2)
    weights = [CTX.weight(enum[i]) for i in range(400)]
    assert weights == sorted(weights)
    assert all(max(constants(enum[i]), default=-1) < CTX.weight(enum[i]) for i in range(400))


def test_pinned_formula_takes_index_zero():
    x_formula = Atom("Q", (X, X))
    assert enumerate_formula(CTX, 1, 0, pinned=x_formula) == x_formula
    plain = CTX.enumeration(1)
    pinned = CTX.enumeration(1, x_formula)
    n = plain.index_of(x_formula)
    assert pinned[n] == plain[0]
    assert [pinned[i] for i in range(1, n)] == [plain[i] for i in range(1, n)]
    with pytest.raises(ValueError):
        CTX.enumeration(1, Atom("P", (Y,)))


def test_definable_set_examples():
    assert [a for a in range(13) if definable_set(MOD4, Atom("P", (Y,)))(a)] == [0, 4, 8, 12]
    empty = And(Atom("P", (Y,)), Not(Atom("P", (Y,))))
    assert not any(definable_set(MOD4, empty)(a) for a in range(50))
    shifted = definable_set(MOD4, Atom("P", (2, Y)))
    assert all(shifted(a) == ((2 + a) % 4 == 0) for a in range(50))


def test_reduce_to_quotient_examples():
    assert reduce_to_quotient(MOD4, Atom("P", (Y,))) == {0}
    assert reduce_to_quotient(MOD4, Not(Atom("P", (Y,)))) == {1, 2, 3}
    assert reduce_to_quotient(MOD4, Atom("P", (2, Y))) == {2}
    with pytest.raises(ValueError):
        reduce_to_quotient(MOD4, Atom("P", (X, Y)))


@settings(max_examples=100, deadline=None)
@given(formulas(variables=(Y,)))
def test_quotient_soundness(f):
    T = reduce_to_quotient(CTX, f)
    h = CTX.hom
    pred = definable_set(CTX, f)
    assert all(pred(a) == (h(a) in T) == evaluate(CTX, f, y=a) for a in range(200))


def test_undecided_is_a_lookup_error():
    assert issubclass(Undecided, LookupError)
