"""Concrete countable semigroups over a canonical natural-number carrier.

Every element is represented by its index in a fixed enumeration of the
carrier.  ``nat-add`` and ``nat-mul`` use numeric order (0 included), free
word semigroups use shortlex order over the alphabet (the empty word is not
an element), and finite semigroups use table row order.  Products, searches
and "least element" choices all work on these indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence


class Element(NamedTuple):
    index: int
    display: str


class Semigroup:
    """Base class; subclasses define ``product`` on carrier indices."""

    kind: str = ""
    order: int | None = None

    def product(self, a: int, b: int) -> int:
        raise NotImplementedError

    def display(self, a: int) -> str:
        return str(a)

    def parse(self, text: str) -> int:
        return self._check(int(text))

    def nth_element(self, i: int) -> Element:
        return Element(self._check(i), self.display(i))

    def multiply(self, elements: Iterable[int]) -> int:
        it = iter(elements)
        acc = next(it)
        for b in it:
            acc = self.product(acc, b)
        return acc

    def elements(self, n: int | None = None) -> range:
        """The first ``n`` carrier indices (all of them for finite semigroups)."""
        if self.order is not None:
            return range(self.order if n is None else min(n, self.order))
        if n is None:
            raise ValueError("infinite semigroup needs an explicit window")
        return range(n)

    def is_identity(self, a: int, window: int = 64) -> bool:
        """Two-sided identity test, exhaustive for finite semigroups."""
        return all(
            self.product(a, b) == b and self.product(b, a) == b
            for b in self.elements(window)
        )

    def _check(self, a: int) -> int:
        if a < 0 or (self.order is not None and a >= self.order):
            raise IndexError(f"element {a} out of range for {self.kind}")
        return a

    def to_spec(self) -> dict:
        return {"kind": self.kind}


class NatAdd(Semigroup):
    kind = "nat-add"

    def product(self, a: int, b: int) -> int:
        return a + b

    def __eq__(self, other):
        return type(other) is NatAdd

    def __hash__(self):
        return hash(self.kind)

    def __repr__(self):
        return "NatAdd()"


class NatMul(Semigroup):
    kind = "nat-mul"

    def product(self, a: int, b: int) -> int:
        return a * b

    def __eq__(self, other):
        return type(other) is NatMul

    def __hash__(self):
        return hash(self.kind)

    def __repr__(self):
        return "NatMul()"


class FreeWord(Semigroup):
    """Free semigroup on ``alphabet``; index ``i`` is the ``i``-th nonempty word in shortlex order."""

    kind = "free-word"

    def __init__(self, alphabet: str = "ab"):
        if not alphabet or len(set(alphabet)) != len(alphabet):
            raise ValueError(f"bad alphabet {alphabet!r}")
        self.alphabet = alphabet
        self.base = len(alphabet)

    # A word w = d_1..d_L (digits 1..m) has bijective base-m value
    # sum d_j m^(L-j); its index is that value minus one.
    def _length(self, value: int) -> int:
        m = self.base
        if m == 1:
            return value
        length, top, power = 1, m, m
        while value > top:
            power *= m
            top += power
            length += 1
        return length

    def product(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        vb = b + 1
        return (a + 1) * self.base ** self._length(vb) + vb - 1

    def display(self, a: int) -> str:
        self._check(a)
        value, letters = a + 1, []
        while value:
            value, digit = divmod(value - 1, self.base)
            letters.append(self.alphabet[digit])
        return "".join(reversed(letters))

    def parse(self, text: str) -> int:
        if not text:
            raise ValueError("the empty word is not an element")
        value = 0
        for ch in text:
            pos = self.alphabet.find(ch)
            if pos < 0:
                raise ValueError(f"letter {ch!r} not in alphabet {self.alphabet!r}")
            value = value * self.base + pos + 1
        return value - 1

    def letter(self, ch: str) -> int:
        return self.parse(ch)

    def to_spec(self) -> dict:
        return {"kind": self.kind, "alphabet": self.alphabet}

    def __eq__(self, other):
        return isinstance(other, FreeWord) and other.alphabet == self.alphabet

    def __hash__(self):
        return hash((self.kind, self.alphabet))

    def __repr__(self):
        return f"FreeWord({self.alphabet!r})"


class FiniteSemigroup(Semigroup):
    """A finite semigroup given by its Cayley table ``table[a][b] = a·b``."""

    kind = "finite-table"

    def __init__(self, table: Sequence[Sequence[int]], names: Sequence[str] | None = None,
                 check: bool = True):
        n = len(table)
        if n < 1:
            raise ValueError("a semigroup needs at least one element")
        rows = tuple(tuple(int(v) for v in row) for row in table)
        for row in rows:
            if len(row) != n:
                raise ValueError("Cayley table must be square")
            for v in row:
                if not 0 <= v < n:
                    raise ValueError(f"table entry {v} out of range for order {n}")
        self.table = rows
        self.order = n
        self.names = tuple(names) if names is not None else None
        if self.names is not None and len(self.names) != n:
            raise ValueError("one name per element required")
        if check:
            bad = check_associativity(self)
            if bad is not None:
                raise ValueError(f"not associative: violation at {bad}")

    def product(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        return self.table[a][b]

    def display(self, a: int) -> str:
        self._check(a)
        return self.names[a] if self.names else str(a)

    def parse(self, text: str) -> int:
        if self.names and text in self.names:
            return self.names.index(text)
        return self._check(int(text))

    def to_spec(self) -> dict:
        spec = {"kind": self.kind, "order": self.order, "table": [list(r) for r in self.table]}
        if self.names:
            spec["names"] = list(self.names)
        return spec

    def __eq__(self, other):
        return isinstance(other, FiniteSemigroup) and other.table == self.table

    def __hash__(self):
        return hash(self.table)

    def __repr__(self):
        return f"FiniteSemigroup(order={self.order})"


def product(S: Semigroup, a: int, b: int) -> int:
    return S.product(a, b)


def nth_element(S: Semigroup, i: int) -> Element:
    return S.nth_element(i)


# -- finite semigroup families ------------------------------------------------

def cyclic_group(d: int) -> FiniteSemigroup:
    """(Z_d, +)."""
    return FiniteSemigroup([[(a + b) % d for b in range(d)] for a in range(d)], check=False)


def multiplicative_mod(d: int) -> FiniteSemigroup:
    """(Z_d, ×)."""
    return FiniteSemigroup([[(a * b) % d for b in range(d)] for a in range(d)], check=False)


def left_zero(n: int, names: Sequence[str] | None = None) -> FiniteSemigroup:
    """x·y = x."""
    return FiniteSemigroup([[a] * n for a in range(n)], names=names, check=False)


def transformation_semigroup(generators: Sequence[Sequence[int]]) -> tuple[FiniteSemigroup, list[int]]:
    """Semigroup of maps on ``{0..n-1}`` generated by ``generators``.

    Composition is left-to-right (``f·g`` applies ``f`` first), matching
    concatenation when letters act on automaton states.  Returns the table
    and the element index of each generator.
    """
    gens = [tuple(g) for g in generators]
    elements: list[tuple[int, ...]] = []
    index: dict[tuple[int, ...], int] = {}
    frontier = []
    for g in gens:
        if g not in index:
            index[g] = len(elements)
            elements.append(g)
            frontier.append(g)
    while frontier:
        nxt = []
        for f in frontier:
            for g in gens:
                h = tuple(g[f[s]] for s in range(len(f)))
                if h not in index:
                    index[h] = len(elements)
                    elements.append(h)
                    nxt.append(h)
        frontier = nxt
    table = [[index[tuple(g[f[s]] for s in range(len(f)))] for g in elements] for f in elements]
    return FiniteSemigroup(table, check=False), [index[g] for g in gens]


# -- finite semigroup analysis -------------------------------------------------

def check_associativity(F: FiniteSemigroup | Sequence[Sequence[int]]) -> tuple[int, int, int] | None:
    """Return the lexicographically least violating triple, or None if associative."""
    t = F.table if isinstance(F, FiniteSemigroup) else F
    n = len(t)
    for a, b, c in itertools.product(range(n), repeat=3):
        if t[t[a][b]][c] != t[a][t[b][c]]:
            return (a, b, c)
    return None


def idempotents(F: FiniteSemigroup) -> frozenset[int]:
    return frozenset(e for e in range(F.order) if F.table[e][e] == e)


def cyclic_closure(F: FiniteSemigroup, f: int) -> frozenset[int]:
    """{f, f², f³, ...}."""
    seen = [F._check(f)]
    power = F.table[f][f]
    while power not in seen:
        seen.append(power)
        power = F.table[power][f]
    return frozenset(seen)


def subsemigroup_generated(F: FiniteSemigroup, gens: Iterable[int]) -> frozenset[int]:
    closure = set(gens)
    frontier = list(closure)
    while frontier:
        nxt = []
        for a in frontier:
            for b in list(closure):
                for c in (F.table[a][b], F.table[b][a]):
                    if c not in closure:
                        closure.add(c)
                        nxt.append(c)
        frontier = nxt
    return frozenset(closure)


# -- homomorphisms onto finite semigroups ---------------------------------------

@dataclass(frozen=True)
class ModRule:
    """n ↦ n mod d (nat-add or nat-mul sources)."""
    d: int

    def to_spec(self) -> dict:
        return {"type": "mod", "d": self.d}


@dataclass(frozen=True)
class LetterImage:
    """Free-word source: each letter maps to a target element, words to products."""
    images: tuple[int, ...]

    def to_spec(self) -> dict:
        return {"type": "letter-image", "images": list(self.images)}


@dataclass(frozen=True)
class ExplicitMap:
    """Finite-table source: element ``a`` maps to ``values[a]``."""
    values: tuple[int, ...]

    def to_spec(self) -> dict:
        return {"type": "explicit", "values": list(self.values)}


@dataclass(frozen=True)
class Homomorphism:
    source: Semigroup
    target: FiniteSemigroup
    rule: ModRule | LetterImage | ExplicitMap
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        rule = self.rule
        if isinstance(rule, ModRule):
            if not isinstance(self.source, (NatAdd, NatMul)):
                raise ValueError("mod rule needs a nat-add or nat-mul source")
            if rule.d < 1 or rule.d > self.target.order:
                raise ValueError(f"mod {rule.d} does not land in a target of order {self.target.order}")
        elif isinstance(rule, LetterImage):
            if not isinstance(self.source, FreeWord) or len(rule.images) != self.source.base:
                raise ValueError("letter-image rule needs one image per alphabet letter")
            for v in rule.images:
                self.target._check(v)
        elif isinstance(rule, ExplicitMap):
            if not isinstance(self.source, FiniteSemigroup) or len(rule.values) != self.source.order:
                raise ValueError("explicit rule needs one value per source element")
            for v in rule.values:
                self.target._check(v)
        else:
            raise TypeError(f"unknown rule {rule!r}")

    def __call__(self, a: int) -> int:
        rule = self.rule
        if isinstance(rule, ModRule):
            return a % rule.d
        if isinstance(rule, ExplicitMap):
            return rule.values[a]
        word = self.source.display(a)
        alphabet = self.source.alphabet
        return self.target.multiply(rule.images[alphabet.index(ch)] for ch in word)

    def image(self) -> frozenset[int]:
        """h(M) as a subset of the target, computed exactly from the rule."""
        if "image" not in self._cache:
            rule = self.rule
            if isinstance(rule, ModRule):
                img = frozenset(range(rule.d))
            elif isinstance(rule, ExplicitMap):
                img = frozenset(rule.values)
            else:
                img = subsemigroup_generated(self.target, rule.images)
            self._cache["image"] = img
        return self._cache["image"]

    def least_in_fiber(self, t: int, *, above: int = -1, skip: frozenset[int] = frozenset(),
                       window: int = 100_000) -> int | None:
        """Least carrier element ``a > above`` with ``h(a) = t``, not in ``skip``."""
        rule = self.rule
        if isinstance(rule, ModRule):
            d = rule.d
            if t >= d:
                return None
            a = t if t > above else t + d * ((above - t) // d + 1)
            while a in skip:
                a += d
            return a
        for a in self.source.elements(window):
            if a > above and a not in skip and self(a) == t:
                return a
        return None

    def to_spec(self) -> dict:
        return {"source": self.source.to_spec(), "target": self.target.to_spec(),
                "rule": self.rule.to_spec()}


def verify_homomorphism(h: Homomorphism, window: int) -> tuple[int, int] | None:
    """First pair (a, b) among the first ``window`` elements with h(a·b) ≠ h(a)·h(b)."""
    S, F = h.source, h.target
    elems = S.elements(window)
    hv = [h(a) for a in elems]
    for a in elems:
        for b in elems:
            if h(S.product(a, b)) != F.table[hv[a]][hv[b]]:
                return (a, b)
    return None


def mod_homomorphism(source: Semigroup, d: int) -> Homomorphism:
    """Reduction mod d onto (Z_d,+) or (Z_d,×), matching the source operation."""
    if isinstance(source, NatAdd):
        return Homomorphism(source, cyclic_group(d), ModRule(d))
    if isinstance(source, NatMul):
        return Homomorphism(source, multiplicative_mod(d), ModRule(d))
    raise ValueError(f"no mod homomorphism from {source.kind}")


def first_letter_homomorphism(source: FreeWord) -> Homomorphism:
    """Word ↦ its first letter, onto the left-zero semigroup on the alphabet."""
    return Homomorphism(source, left_zero(source.base, names=list(source.alphabet)),
                        LetterImage(tuple(range(source.base))))


def identity_homomorphism(F: FiniteSemigroup) -> Homomorphism:
    return Homomorphism(F, F, ExplicitMap(tuple(range(F.order))))


def associative_window(S: Semigroup, window: int) -> tuple[int, int, int] | None:
    """Spot-check associativity over the first ``window`` elements."""
    elems = S.elements(window)
    for a, b, c in itertools.product(elems, repeat=3):
        if S.product(S.product(a, b), c) != S.product(a, S.product(b, c)):
            return (a, b, c)
    return None
