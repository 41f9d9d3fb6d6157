"""Quantifier-free formulas over a semigroup structure.

A structure is a semigroup plus named base predicates.  Terms are nonempty
words over the variables ``x``, ``y`` and constants (carrier indices), read
left to right as products.  Formulas are Boolean combinations of atoms
``P(term)``.

Canonical byte encoding (used for enumeration order, golden files and
``psi_trace``)::

    atom  = 0x01 varint(pred_index) varint(len(term)) letter*
    not   = 0x02 formula
    and   = 0x03 formula formula
    or    = 0x04 formula formula
    letter: varint(0) for x, varint(1) for y, varint(2 + c) for constant c

varints are unsigned LEB128.  The enumeration of a given arity lists every
formula exactly once, ordered by (weight, encoded size, encoding), where
weight = max(encoded size, 1 + largest constant).  Level ``w`` therefore only
uses the first ``w`` carrier elements as constants, and each level is finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Union

from .ip import SetPredicate, quotient_predicate
from .semigroups import Homomorphism, Semigroup

X, Y = "x", "y"
Letter = Union[str, int]
Term = tuple  # tuple[Letter, ...]


@dataclass(frozen=True)
class Atom:
    pred: str
    term: Term

    def __post_init__(self):
        if not self.term:
            raise ValueError("terms are nonempty words")


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, Not, And, Or]


class Undecided(LookupError):
    """Raised when a finite-stage oracle cannot answer yet."""


def conj(formulas: Iterable[Formula]) -> Formula:
    return reduce(And, formulas)


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(l for l in f.term if isinstance(l, str))
    if isinstance(f, Not):
        return free_vars(f.arg)
    return free_vars(f.left) | free_vars(f.right)


def constants(f: Formula) -> frozenset[int]:
    if isinstance(f, Atom):
        return frozenset(l for l in f.term if not isinstance(l, str))
    if isinstance(f, Not):
        return constants(f.arg)
    return constants(f.left) | constants(f.right)


def atoms(f: Formula):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.arg)
    else:
        yield from atoms(f.left)
        yield from atoms(f.right)


def substitute(f: Formula, var: str, word: Term) -> Formula:
    """Replace every occurrence of ``var`` by the letters of ``word``."""
    if isinstance(f, Atom):
        if var not in f.term:
            return f
        term: list = []
        for l in f.term:
            if l == var and isinstance(l, str):
                term.extend(word)
            else:
                term.append(l)
        return Atom(f.pred, tuple(term))
    if isinstance(f, Not):
        return Not(substitute(f.arg, var, word))
    return type(f)(substitute(f.left, var, word), substitute(f.right, var, word))


def substitute_x(f: Formula, u: int, *, keep_x: bool = False) -> Formula:
    """x ↦ u, or x ↦ u·x when ``keep_x`` is set."""
    return substitute(f, X, (u, X) if keep_x else (u,))


def rename(f: Formula, src: str, dst: str) -> Formula:
    return substitute(f, src, (dst,))


def render(f: Formula, S: Semigroup | None = None) -> str:
    if isinstance(f, Atom):
        letters = [l if isinstance(l, str) else (S.display(l) if S else str(l)) for l in f.term]
        return f"{f.pred}({'·'.join(letters)})"
    if isinstance(f, Not):
        return f"¬{render(f.arg, S)}"
    op = "∧" if isinstance(f, And) else "∨"
    return f"({render(f.left, S)} {op} {render(f.right, S)})"


# -- JSON --------------------------------------------------------------------

def to_json(f: Formula):
    if isinstance(f, Atom):
        return {"atom": {"pred": f.pred,
                         "term": [l if isinstance(l, str) else {"const": l} for l in f.term]}}
    if isinstance(f, Not):
        return {"not": to_json(f.arg)}
    key = "and" if isinstance(f, And) else "or"
    return {key: [to_json(f.left), to_json(f.right)]}


def from_json(obj) -> Formula:
    if "atom" in obj:
        term = tuple(l if isinstance(l, str) else int(l["const"]) for l in obj["atom"]["term"])
        for l in term:
            if isinstance(l, str) and l not in (X, Y):
                raise ValueError(f"unknown variable {l!r}")
        return Atom(obj["atom"]["pred"], term)
    if "not" in obj:
        return Not(from_json(obj["not"]))
    if "and" in obj:
        return And(*(from_json(g) for g in obj["and"]))
    if "or" in obj:
        return Or(*(from_json(g) for g in obj["or"]))
    raise ValueError(f"not a formula: {obj!r}")


# -- byte encoding -----------------------------------------------------------

def _varint(n: int) -> bytes:
    out = bytearray()
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    value = shift = 0
    while True:
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        shift += 7
        if not byte & 0x80:
            return value, pos


def _letter_code(l: Letter) -> int:
    if l == X:
        return 0
    if l == Y:
        return 1
    return 2 + l


# -- structures ----------------------------------------------------------------

class StructureContext:
    """A semigroup with named base predicates (all quotient-backed or not)."""

    def __init__(self, semigroup: Semigroup, predicates: Mapping[str, SetPredicate],
                 skip_identity: bool = False):
        if not predicates:
            raise ValueError("at least one base predicate required")
        self.semigroup = semigroup
        self.predicates = dict(predicates)
        self.pred_names = list(self.predicates)
        self.pred_index = {name: i for i, name in enumerate(self.pred_names)}
        self.skip_identity = skip_identity
        homs = {p.quotient[0] if p.quotient else None for p in self.predicates.values()}
        self.hom: Homomorphism | None = homs.pop() if len(homs) == 1 else None
        self._enumerations: dict = {}
        self._const_class: dict[tuple[int, int], int] = {}
        self._skip = None

    @property
    def quotient_backed(self) -> bool:
        return self.hom is not None

    @property
    def skipped(self) -> frozenset[int]:
        """Carrier elements excluded from "least element" choices."""
        if self._skip is None:
            S = self.semigroup
            self._skip = frozenset({0}) if self.skip_identity and S.is_identity(0) else frozenset()
        return self._skip

    def check(self, f: Formula) -> Formula:
        for a in atoms(f):
            if a.pred not in self.pred_index:
                raise KeyError(f"unregistered predicate {a.pred!r}")
            for l in a.term:
                if not isinstance(l, str):
                    self.semigroup._check(l)
        return f

    def encode(self, f: Formula) -> bytes:
        if isinstance(f, Atom):
            out = bytearray(b"\x01")
            out += _varint(self.pred_index[f.pred])
            out += _varint(len(f.term))
            for l in f.term:
                out += _varint(_letter_code(l))
            return bytes(out)
        if isinstance(f, Not):
            return b"\x02" + self.encode(f.arg)
        tag = b"\x03" if isinstance(f, And) else b"\x04"
        return tag + self.encode(f.left) + self.encode(f.right)

    def decode(self, data: bytes) -> Formula:
        f, pos = self._decode(data, 0)
        if pos != len(data):
            raise ValueError("trailing bytes after formula")
        return f

    def _decode(self, data: bytes, pos: int) -> tuple[Formula, int]:
        tag = data[pos]
        pos += 1
        if tag == 1:
            p, pos = _read_varint(data, pos)
            n, pos = _read_varint(data, pos)
            term = []
            for _ in range(n):
                code, pos = _read_varint(data, pos)
                term.append(X if code == 0 else Y if code == 1 else code - 2)
            return Atom(self.pred_names[p], tuple(term)), pos
        if tag == 2:
            arg, pos = self._decode(data, pos)
            return Not(arg), pos
        if tag in (3, 4):
            left, pos = self._decode(data, pos)
            right, pos = self._decode(data, pos)
            return (And if tag == 3 else Or)(left, right), pos
        raise ValueError(f"bad tag {tag} at byte {pos - 1}")

    def weight(self, f: Formula) -> int:
        consts = constants(f)
        return max(len(self.encode(f)), max(consts) + 1 if consts else 0)

    def constant_budget(self, level: int) -> range:
        """Constants usable at enumeration level ``level``: the first ``level`` elements."""
        return self.semigroup.elements(level)

    def enumeration(self, arity: int, pinned: Formula | None = None) -> "FormulaEnumeration":
        key = (arity, pinned)
        if key not in self._enumerations:
            self._enumerations[key] = FormulaEnumeration(self, arity, pinned)
        return self._enumerations[key]

    def const_class(self, h: Homomorphism, c: int) -> int:
        key = (id(h), c)
        v = self._const_class.get(key)
        if v is None:
            v = self._const_class[key] = h(c)
        return v


# -- semantics -------------------------------------------------------------------

def eval_term(S: Semigroup, term: Term, x: int | None = None, y: int | None = None) -> int:
    acc = None
    for l in term:
        if l == X and isinstance(l, str):
            if x is None:
                raise ValueError("no value assigned to x")
            v = x
        elif l == Y and isinstance(l, str):
            if y is None:
                raise ValueError("no value assigned to y")
            v = y
        else:
            v = l
        acc = v if acc is None else S.product(acc, v)
    return acc


def evaluate(ctx: StructureContext, f: Formula, x: int | None = None, y: int | None = None) -> bool:
    """Truth of ``f`` in the structure under x := x, y := y."""
    if isinstance(f, Atom):
        try:
            pred = ctx.predicates[f.pred]
        except KeyError:
            raise KeyError(f"unregistered predicate {f.pred!r}") from None
        return pred(eval_term(ctx.semigroup, f.term, x, y))
    if isinstance(f, Not):
        return not evaluate(ctx, f.arg, x, y)
    if isinstance(f, And):
        return evaluate(ctx, f.left, x, y) and evaluate(ctx, f.right, x, y)
    return evaluate(ctx, f.left, x, y) or evaluate(ctx, f.right, x, y)


def _quotient_of(ctx: StructureContext, f: Formula) -> Homomorphism:
    hom = None
    for a in atoms(f):
        pred = ctx.predicates.get(a.pred)
        if pred is None:
            raise KeyError(f"unregistered predicate {a.pred!r}")
        if pred.quotient is None:
            raise ValueError(f"predicate {a.pred!r} is not quotient-backed")
        if hom is None:
            hom = pred.quotient[0]
        elif pred.quotient[0] != hom:
            raise ValueError("atoms use different homomorphisms")
    return hom


def evaluate_in_quotient(ctx: StructureContext, f: Formula, x: int | None = None,
                         y: int | None = None) -> bool:
    """Truth of ``f`` computed in the finite quotient with x, y ranging over classes."""
    if isinstance(f, Atom):
        h, subset = ctx.predicates[f.pred].quotient
        table = h.target.table
        acc = None
        for l in f.term:
            if l == X and isinstance(l, str):
                if x is None:
                    raise ValueError("no class assigned to x")
                v = x
            elif l == Y and isinstance(l, str):
                if y is None:
                    raise ValueError("no class assigned to y")
                v = y
            else:
                v = ctx.const_class(h, l)
            acc = v if acc is None else table[acc][v]
        return acc in subset
    if isinstance(f, Not):
        return not evaluate_in_quotient(ctx, f.arg, x, y)
    if isinstance(f, And):
        return evaluate_in_quotient(ctx, f.left, x, y) and evaluate_in_quotient(ctx, f.right, x, y)
    return evaluate_in_quotient(ctx, f.left, x, y) or evaluate_in_quotient(ctx, f.right, x, y)


def _single_var(f: Formula, var: str) -> None:
    extra = free_vars(f) - {var}
    if extra:
        raise ValueError(f"expected a formula in {var} only, found free {sorted(extra)}")


def reduce_to_quotient(ctx: StructureContext, f: Formula, var: str = Y) -> frozenset[int]:
    """The classes T of the quotient with f(a) ⇔ h(a) ∈ T."""
    _single_var(f, var)
    h = _quotient_of(ctx, f)
    return frozenset(
        t for t in range(h.target.order)
        if evaluate_in_quotient(ctx, f, **{var: t})
    )


def definable_set(ctx: StructureContext, f: Formula, var: str = Y) -> SetPredicate:
    _single_var(f, var)
    ctx.check(f)
    if ctx.quotient_backed:
        return quotient_predicate(ctx.hom, reduce_to_quotient(ctx, f, var), render(f))
    return SetPredicate(lambda a: evaluate(ctx, f, **{var: a}), None, render(f))


# -- enumeration -------------------------------------------------------------------

class FormulaGenerator:
    """All formulas of a given encoded size over fixed variables and constants."""

    def __init__(self, ctx: StructureContext, variables: Iterable[str], consts: Iterable[int]):
        self.ctx = ctx
        letters = list(variables) + list(consts)
        self.letters = [(l, len(_varint(_letter_code(l)))) for l in letters]
        self._by_size: dict[int, list[Formula]] = {}
        self._words: dict[int, list[Term]] = {}

    def words(self, nbytes: int) -> list[Term]:
        if nbytes not in self._words:
            out = []
            for l, b in self.letters:
                if b == nbytes:
                    out.append((l,))
                elif b < nbytes:
                    out.extend((l,) + w for w in self.words(nbytes - b))
            self._words[nbytes] = out
        return self._words[nbytes]

    def of_size(self, size: int) -> list[Formula]:
        if size in self._by_size:
            return self._by_size[size]
        out: list[Formula] = []
        for p, name in enumerate(self.ctx.pred_names):
            head = 1 + len(_varint(p))
            for nbytes in range(1, size - head):
                for w in self.words(nbytes):
                    if head + len(_varint(len(w))) + nbytes == size:
                        out.append(Atom(name, w))
        if size > 1:
            out.extend(Not(f) for f in self.of_size(size - 1))
        for left in range(1, size - 1):
            right = size - 1 - left
            for f in self.of_size(left):
                for g in self.of_size(right):
                    out.append(And(f, g))
                    out.append(Or(f, g))
        self._by_size[size] = out
        return out

    def up_to(self, max_size: int):
        for size in range(1, max_size + 1):
            yield from self.of_size(size)


class FormulaEnumeration:
    """Bijection ℕ → formulas whose variables lie in {x} (arity 1) or {x, y} (arity 2).

    ``pinned`` swaps the given formula into index 0.
    """

    def __init__(self, ctx: StructureContext, arity: int, pinned: Formula | None = None):
        if arity not in (1, 2):
            raise ValueError("arity must be 1 or 2")
        self.ctx = ctx
        self.arity = arity
        self.vars = (X,) if arity == 1 else (X, Y)
        self._items: list[Formula] = []
        self._natural: dict[Formula, int] = {}
        self._level = 0
        self.pinned = None
        self._swap = 0
        if pinned is not None:
            ctx.check(pinned)
            if not free_vars(pinned) <= set(self.vars):
                raise ValueError("pinned formula has the wrong free variables")
            self._swap = self._natural_index(pinned)
            self.pinned = pinned

    def _permute(self, i: int) -> int:
        if i == 0:
            return self._swap
        if i == self._swap:
            return 0
        return i

    def __getitem__(self, i: int) -> Formula:
        if i < 0:
            raise IndexError("enumeration indices are natural numbers")
        n = self._permute(i)
        while len(self._items) <= n:
            self._grow()
        return self._items[n]

    def index_of(self, f: Formula) -> int:
        self.ctx.check(f)
        if not free_vars(f) <= set(self.vars):
            raise ValueError("formula has the wrong free variables for this arity")
        return self._permute(self._natural_index(f))

    def prefix(self, n: int) -> list[Formula]:
        return [self[i] for i in range(n)]

    def _natural_index(self, f: Formula) -> int:
        target = self.ctx.weight(f)
        while self._level < target:
            self._grow()
        return self._natural[f]

    def _grow(self) -> None:
        self._level += 1
        level = self._level
        gen = FormulaGenerator(self.ctx, self.vars, self.ctx.constant_budget(level))
        fresh = [f for size in range(1, level + 1) for f in gen.of_size(size)
                 if size == level or (level - 1) in constants(f)]
        encoded = {f: self.ctx.encode(f) for f in fresh}
        fresh.sort(key=lambda f: (len(encoded[f]), encoded[f]))
        for f in fresh:
            self._natural[f] = len(self._items)
            self._items.append(f)


def enumerate_formula(ctx: StructureContext, arity: int, i: int,
                      pinned: Formula | None = None) -> Formula:
    return ctx.enumeration(arity, pinned)[i]
