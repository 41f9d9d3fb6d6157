"""Finite-product sets and IP-set oracles.

Bounded searches look for a basis ``u_1..u_k`` drawn from the first ``N``
carrier elements with every index-increasing product inside the target set.
They run depth-first in enumeration order, so the first basis found is the
lexicographically least one.  When a predicate is the preimage of a subset of
a finite semigroup under a homomorphism, ``is_ip_quotient`` decides IP-ness
exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .semigroups import Homomorphism, Semigroup, idempotents, verify_homomorphism

log = logging.getLogger(__name__)

IP = "ip"
NOT_IP_EXACT = "not-ip-exact"
EXHAUSTED = "exhausted"
VIOLATION_AT_BOUNDS = "VIOLATION-AT-BOUNDS"


class InvalidHomomorphism(ValueError):
    pass


@dataclass(frozen=True)
class SetPredicate:
    """A subset of a semigroup, given by a membership test.

    ``quotient`` optionally presents the set as ``h⁻¹(subset)``.
    """

    evaluator: Callable[[int], bool]
    quotient: tuple[Homomorphism, frozenset[int]] | None = None
    name: str = ""

    def __call__(self, a: int) -> bool:
        return bool(self.evaluator(a))


def quotient_predicate(h: Homomorphism, subset, name: str = "") -> SetPredicate:
    subset = frozenset(subset)
    for t in subset:
        h.target._check(t)
    return SetPredicate(lambda a: h(a) in subset, (h, subset), name)


def complement(X: SetPredicate) -> SetPredicate:
    quotient = None
    if X.quotient is not None:
        h, sub = X.quotient
        quotient = (h, frozenset(range(h.target.order)) - sub)
    return SetPredicate(lambda a: not X(a), quotient, f"¬{X.name}")


def intersection(X: SetPredicate, Y: SetPredicate) -> SetPredicate:
    quotient = None
    if X.quotient is not None and Y.quotient is not None and X.quotient[0] == Y.quotient[0]:
        quotient = (X.quotient[0], X.quotient[1] & Y.quotient[1])
    return SetPredicate(lambda a: X(a) and Y(a), quotient, f"{X.name}∧{Y.name}")


def difference(X: SetPredicate, Y: SetPredicate) -> SetPredicate:
    D = intersection(X, complement(Y))
    return SetPredicate(D.evaluator, D.quotient, f"{X.name}∖{Y.name}")


@dataclass(frozen=True)
class IpWitness:
    basis: tuple[int, ...]
    fp: frozenset[int]

    @property
    def depth(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class OracleVerdict:
    verdict: str
    witness: IpWitness | None = None
    bounds: tuple[int, int] | None = None

    @property
    def is_ip(self) -> bool:
        return self.verdict == IP

    def to_json(self, S: Semigroup | None = None) -> dict:
        out: dict = {"verdict": self.verdict, "basis": [], "bounds": None}
        if self.witness is not None:
            out["basis"] = list(self.witness.basis)
            out["fp"] = sorted(self.witness.fp)
            if S is not None and S.kind == "free-word":
                out["basis_display"] = [S.display(a) for a in self.witness.basis]
        if self.bounds is not None:
            out["bounds"] = {"k": self.bounds[0], "N": self.bounds[1]}
        return out


def fp_set(S: Semigroup, basis: Sequence[int]) -> frozenset[int]:
    """All products u_{i1}···u_{ij} over nonempty index-increasing subsequences."""
    if not basis:
        raise ValueError("basis must be nonempty")
    products: set[int] = set()
    for u in basis:
        # every product ending at u is an earlier product times u
        products |= {S.product(p, u) for p in products}
        products.add(u)
    return frozenset(products)


def _identity_skip(S: Semigroup, window: int, skip_identity: bool) -> frozenset[int]:
    if skip_identity and S.is_identity(0, max(window, 2)):
        return frozenset({0})
    return frozenset()


def _search(S: Semigroup, X: SetPredicate, k: int, N: int, *, distinct: bool = False,
            min_distinct: int = 1, skip_identity: bool = False) -> tuple[int, ...] | None:
    if k < 1 or N < 1:
        raise ValueError("depth and window must be positive")
    skip = _identity_skip(S, N, skip_identity)
    member: dict[int, bool] = {}

    def inside(a: int) -> bool:
        v = member.get(a)
        if v is None:
            v = member[a] = X(a)
        return v

    candidates = [a for a in S.elements(N) if a not in skip and inside(a)]
    dead: set[tuple[frozenset[int], int]] = set()
    memo = not distinct and min_distinct <= 1

    def extend(basis: list[int], fp: frozenset[int]) -> tuple[int, ...] | None:
        remaining = k - len(basis)
        if remaining == 0:
            return tuple(basis) if len(fp) >= min_distinct else None
        if (len(fp) + 1) * 2 ** remaining - 1 < min_distinct:
            return None
        if memo:
            key = (fp, remaining)
            if key in dead:
                return None
        for a in candidates:
            if distinct and a in basis:
                continue
            new = set()
            for p in fp:
                q = S.product(p, a)
                if not inside(q):
                    break
                new.add(q)
            else:
                basis.append(a)
                found = extend(basis, fp | new | {a})
                basis.pop()
                if found is not None:
                    return found
        if memo:
            dead.add(key)
        return None

    return extend([], frozenset())


def _verdict(S: Semigroup, basis, k: int, N: int) -> OracleVerdict:
    if basis is None:
        return OracleVerdict(EXHAUSTED, bounds=(k, N))
    return OracleVerdict(IP, IpWitness(basis, fp_set(S, basis)), bounds=(k, N))


def ip_witness_bounded(S: Semigroup, X: SetPredicate, k: int, N: int, *,
                       skip_identity: bool = False) -> OracleVerdict:
    """Lexicographically least depth-``k`` basis from the first ``N`` elements, repeats allowed."""
    return _verdict(S, _search(S, X, k, N, skip_identity=skip_identity), k, N)


def iip_witness_bounded(S: Semigroup, X: SetPredicate, k: int, m: int, N: int, *,
                        skip_identity: bool = False) -> OracleVerdict:
    """As ``ip_witness_bounded`` but the FP set must have at least ``m`` distinct values."""
    if m < 1:
        raise ValueError("m must be positive")
    return _verdict(S, _search(S, X, k, N, min_distinct=m, skip_identity=skip_identity), k, N)


def dip_witness_bounded(S: Semigroup, X: SetPredicate, k: int, N: int, *,
                        skip_identity: bool = False) -> OracleVerdict:
    """As ``ip_witness_bounded`` with pairwise distinct basis entries."""
    return _verdict(S, _search(S, X, k, N, distinct=True, skip_identity=skip_identity), k, N)


def quotient_ip_classes(h: Homomorphism, subset: frozenset[int]) -> list[int]:
    """Idempotents of the image subsemigroup h(M) lying in ``subset``."""
    return sorted(idempotents(h.target) & h.image() & subset)


def checked_homomorphism(h: Homomorphism) -> Homomorphism:
    if not h._cache.get("verified"):
        window = max(32, 2 * h.target.order)
        bad = verify_homomorphism(h, window)
        if bad is not None:
            raise InvalidHomomorphism(f"map is not a homomorphism: fails at {bad}")
        h._cache["verified"] = True
    return h


def is_ip_quotient(X: SetPredicate, *, depth: int = 4, skip_identity: bool = False) -> OracleVerdict:
    """Exact IP decision for ``X = h⁻¹(S)``.

    X is IP iff an idempotent of h(M) lies in S.  The witness is the
    constant basis (v, v, ..., v) at the least carrier element v mapping to
    such an idempotent.
    """
    if X.quotient is None:
        raise ValueError(f"predicate {X.name!r} has no quotient form")
    h, subset = X.quotient
    checked_homomorphism(h)
    classes = quotient_ip_classes(h, subset)
    if not classes:
        return OracleVerdict(NOT_IP_EXACT)
    skip = _identity_skip(h.source, 64, skip_identity)
    v = min(h.least_in_fiber(c, skip=skip) for c in classes)
    basis = (v,) * depth
    return OracleVerdict(IP, IpWitness(basis, fp_set(h.source, basis)))


@dataclass
class PartitionReport:
    y: OracleVerdict
    x_minus_y: OracleVerdict
    x: OracleVerdict
    flag: str | None = None
    exact: dict[str, OracleVerdict] = field(default_factory=dict)

    def to_json(self, S: Semigroup | None = None) -> dict:
        return {
            "Y": self.y.to_json(S),
            "X\\Y": self.x_minus_y.to_json(S),
            "X": self.x.to_json(S),
            "flag": self.flag,
            "exact": {key: v.to_json(S) for key, v in sorted(self.exact.items())},
        }


def partition_check(S: Semigroup, X: SetPredicate, Y: SetPredicate, k: int, N: int, *,
                    skip_identity: bool = False) -> PartitionReport:
    """Bounded verdicts for Y and X∖Y, with exact ones when both are quotient-backed.

    A VIOLATION-AT-BOUNDS flag means X has a depth-k witness while both
    sides exhaust, i.e. the bounds are too small.  It is never a
    counterexample to Hindman's theorem.
    """
    for a in S.elements(N):
        if Y(a) and not X(a):
            raise ValueError(f"Y is not a subset of X: {S.display(a)} is in Y but not X")
    rest = difference(X, Y)
    report = PartitionReport(
        y=ip_witness_bounded(S, Y, k, N, skip_identity=skip_identity),
        x_minus_y=ip_witness_bounded(S, rest, k, N, skip_identity=skip_identity),
        x=ip_witness_bounded(S, X, k, N, skip_identity=skip_identity),
    )
    if report.x.is_ip and not report.y.is_ip and not report.x_minus_y.is_ip:
        report.flag = VIOLATION_AT_BOUNDS
        log.warning("both sides exhausted at k=%d N=%d; bounds too small", k, N)
    if Y.quotient is not None and rest.quotient is not None:
        report.exact = {
            "Y": is_ip_quotient(Y, depth=k, skip_identity=skip_identity),
            "X\\Y": is_ip_quotient(rest, depth=k, skip_identity=skip_identity),
        }
    return report
