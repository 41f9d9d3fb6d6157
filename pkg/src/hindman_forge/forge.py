"""Stage-by-stage construction of an idempotent type from an IP oracle.

At stage s the state holds a finite set A of one-variable formulas (stored in
the variable x), a set B of negated two-variable formulas, the index set J of
rejected two-variable formulas and the witnesses u chosen for accepted ones.
Each step decides the next one-variable formula (positively if the set stays
IP, negatively otherwise) and then looks for the least u making
A(y) ∧ ψ_s(u, y) IP.

Two oracle modes are available.  ``exact-quotient`` needs every base
predicate to be a preimage under one homomorphism onto a finite semigroup;
all decisions are then exact.  ``bounded`` uses depth/window-limited search
and labels every negative decision as made at bounds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

from .formulas import (
    X, Y, And, Atom, Formula, Not, Or, StructureContext, Undecided, conj, definable_set, evaluate,
    free_vars, reduce_to_quotient, rename, render, substitute,
    substitute_x, to_json,
)
from .ip import checked_homomorphism, ip_witness_bounded
from .semigroups import idempotents

log = logging.getLogger(__name__)

EXACT = "exact-quotient"
BOUNDED = "bounded"


class NotIP(ValueError):
    """The formula handed to the forge does not define an IP set."""


class ForgeError(RuntimeError):
    """An invariant failed in exact mode; this is a bug, not a bounds artifact."""


@dataclass(frozen=True)
class ForgeMode:
    kind: str = EXACT
    k: int = 0
    N: int = 0

    @classmethod
    def bounded(cls, k: int, N: int) -> "ForgeMode":
        if k < 1 or N < 1:
            raise ValueError("bounded mode needs positive k and N")
        return cls(BOUNDED, k, N)

    @property
    def exact(self) -> bool:
        return self.kind == EXACT

    def to_json(self) -> dict:
        return {"kind": self.kind} if self.exact else {"kind": self.kind, "k": self.k, "N": self.N}


class IpDecider:
    """Answers "does this conjunction of formulas in x define an IP set?"."""

    def __init__(self, ctx: StructureContext, mode: ForgeMode):
        self.ctx = ctx
        self.mode = mode
        self._cache: dict[Formula, bool] = {}
        if mode.exact:
            if not ctx.quotient_backed:
                raise ValueError("exact-quotient mode needs all predicates on one homomorphism")
            h = checked_homomorphism(ctx.hom)
            self.good_classes = idempotents(h.target) & h.image()
            reps = []
            for t in sorted(h.image()):
                r = h.least_in_fiber(t, skip=ctx.skipped)
                if r is not None:
                    reps.append(r)
            # one representative per class, least first
            self.class_reps = sorted(reps)

    def is_ip(self, formulas: Sequence[Formula]) -> bool:
        f = conj(formulas)
        v = self._cache.get(f)
        if v is None:
            if self.mode.exact:
                v = bool(reduce_to_quotient(self.ctx, f, X) & self.good_classes)
            else:
                pred = definable_set(self.ctx, f, X)
                v = ip_witness_bounded(self.ctx.semigroup, pred, self.mode.k, self.mode.N,
                                       skip_identity=self.ctx.skip_identity).is_ip
            self._cache[f] = v
        return v

    def u_candidates(self) -> list[int]:
        """Values of u to try, in carrier order.

        In exact mode a formula's truth depends on u only through its class,
        so the least representative of each class covers every u ∈ M.
        """
        if self.mode.exact:
            return self.class_reps
        skip = self.ctx.skipped
        return [a for a in self.ctx.semigroup.elements(self.mode.N) if a not in skip]


@dataclass(frozen=True)
class AEntry:
    formula: Formula  # in the variable x
    source: str  # "phi" or "psi"
    index: int
    positive: bool = True
    u: int | None = None


@dataclass(frozen=True)
class StageDecision:
    stage: int
    phi_index: int
    phi_positive: bool
    phi_at_bounds: bool
    psi_index: int
    psi_accepted: bool
    witness_u: int | None
    psi_at_bounds: bool


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    exhaustive: bool = True
    detail: str = ""


@dataclass(frozen=True)
class InvariantReport:
    conditions: dict

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_json(self) -> dict:
        return {
            name: {"passed": c.passed, "check": "exhaustive" if c.exhaustive else "sampled",
                   **({"detail": c.detail} if c.detail else {})}
            for name, c in self.conditions.items()
        }


@dataclass(frozen=True)
class ClaimWitness:
    u: int
    v: int
    verified: bool


@dataclass(frozen=True)
class StageRecord:
    decision: StageDecision
    invariants: InvariantReport
    claim: ClaimWitness | None


@dataclass(frozen=True)
class ForgeState:
    ctx: StructureContext
    mode: ForgeMode
    x_formula: Formula
    stage: int
    A: tuple[AEntry, ...]
    B: tuple[Formula, ...]
    J: frozenset[int]
    witness_log: tuple[tuple[int, int], ...] = ()
    decisions: tuple[StageDecision, ...] = ()
    assumptions: tuple[str, ...] = ()
    records: tuple[StageRecord, ...] = ()
    decider: IpDecider = field(default=None, compare=False, repr=False)

    def phi(self, i: int) -> Formula:
        return self.ctx.enumeration(1, self.x_formula)[i]

    def psi(self, j: int) -> Formula:
        return self.ctx.enumeration(2)[j]

    @property
    def formulas(self) -> list[Formula]:
        return [e.formula for e in self.A]

    @property
    def witnesses(self) -> dict[int, int]:
        return dict(self.witness_log)


def psi_at(psi: Formula, u: int) -> Formula:
    """ψ(u, y) rewritten in the variable x, ready to join A."""
    return rename(substitute_x(psi, u), Y, X)


def forge_init(ctx: StructureContext, x_formula: Formula, mode: ForgeMode | None = None) -> ForgeState:
    mode = mode or ForgeMode()
    ctx.check(x_formula)
    if not free_vars(x_formula) <= {X}:
        raise ValueError("the X-formula must be a formula in x")
    decider = IpDecider(ctx, mode)
    if not decider.is_ip([x_formula]):
        raise NotIP(f"{render(x_formula)} does not define an IP set"
                    + ("" if mode.exact else f" (bounded k={mode.k}, N={mode.N})"))
    return ForgeState(ctx, mode, x_formula, 0, (AEntry(x_formula, "phi", 0),), (), frozenset(),
                      decider=decider)


def forge_step(state: ForgeState) -> ForgeState:
    dec = state.decider
    s = state.stage
    bounded = not state.mode.exact
    assumptions = list(state.assumptions)

    phi = state.phi(s + 1)
    A = list(state.A)
    formulas = state.formulas
    if dec.is_ip(formulas + [phi]):
        A.append(AEntry(phi, "phi", s + 1, True))
        phi_positive = True
    else:
        A.append(AEntry(Not(phi), "phi", s + 1, False))
        phi_positive = False
        if bounded and not dec.is_ip(formulas + [Not(phi)]):
            assumptions.append(f"stage {s + 1}: both φ_{s + 1} and its negation exhausted at bounds")

    psi = state.psi(s)
    base = [e.formula for e in A]
    witness = None
    for u in dec.u_candidates():
        if dec.is_ip(base + [psi_at(psi, u)]):
            witness = u
            break
    B, J, wlog = state.B, state.J, state.witness_log
    if witness is not None:
        A.append(AEntry(psi_at(psi, witness), "psi", s, True, witness))
        wlog = wlog + ((s, witness),)
    else:
        B = B + (Not(psi),)
        J = J | {s}

    decision = StageDecision(s + 1, s + 1, phi_positive, bounded and not phi_positive,
                             s, witness is not None, witness, bounded and witness is None)
    return replace(state, stage=s + 1, A=tuple(A), B=B, J=J, witness_log=wlog,
                   decisions=state.decisions + (decision,), assumptions=tuple(assumptions))


def check_invariants(state: ForgeState) -> InvariantReport:
    dec = state.decider
    exact = state.mode.exact
    s = state.stage
    formulas = state.formulas
    present = set(formulas)
    out = {}

    bad = [i for i in range(s + 1)
           if (state.phi(i) in present) + (Not(state.phi(i)) in present) != 1]
    out["1"] = ConditionResult(not bad, True, f"indices {bad}" if bad else "")

    ip = dec.is_ip(formulas)
    out["2"] = ConditionResult(ip, exact, "" if ip else "A does not define an IP set")

    expected = {Not(state.psi(j)) for j in state.J}
    ok3 = set(state.B) == expected and len(state.B) == len(expected) and state.J <= set(range(s))
    out["3"] = ConditionResult(ok3, True, "" if ok3 else "B differs from {¬ψ_j : j ∈ J}")

    fails = []
    for j in sorted(state.J):
        for u in dec.u_candidates():
            if dec.is_ip(formulas + [psi_at(state.psi(j), u)]):
                fails.append((j, u))
                break
    out["4"] = ConditionResult(not fails, exact, f"IP for (j, u) in {fails}" if fails else "")

    wit = state.witnesses
    missing = [j for j in range(s) if j not in state.J
               and (j not in wit or psi_at(state.psi(j), wit[j]) not in present)]
    out["5"] = ConditionResult(not missing, True, f"indices {missing}" if missing else "")
    return InvariantReport(out)


def _claim_holds(state: ForgeState, u: int, v: int) -> bool:
    ctx = state.ctx
    uv = ctx.semigroup.product(u, v)
    return (all(evaluate(ctx, f, x=u) for f in state.formulas)
            and all(evaluate(ctx, f, x=v) for f in state.formulas)
            and all(evaluate(ctx, f, x=uv) for f in state.formulas)
            and all(evaluate(ctx, b, x=u, y=v) for b in state.B))


def consistency_witness(state: ForgeState, window: int = 1000) -> ClaimWitness | None:
    """A pair (u, v) satisfying A(x) ∪ A(y) ∪ A(x·y) ∪ B(x, y).

    u is the least element with A(u) such that A(y) ∧ A(u·y) is IP; v is the
    least element of that set avoiding every rejected ψ_j(u, ·).
    """
    ctx, dec = state.ctx, state.decider
    formulas = state.formulas
    for u in dec.u_candidates():
        if not all(evaluate(ctx, f, x=u) for f in formulas):
            continue
        shifted = [substitute_x(f, u, keep_x=True) for f in formulas]
        if not dec.is_ip(formulas + shifted):
            continue
        avoid = [Not(psi_at(state.psi(j), u)) for j in sorted(state.J)]
        target = conj(formulas + shifted + avoid)
        v = _least_satisfying(state, target, window)
        if v is None:
            return None
        return ClaimWitness(u, v, _claim_holds(state, u, v))
    return None


def _least_satisfying(state: ForgeState, f: Formula, window: int) -> int | None:
    ctx = state.ctx
    skip = ctx.skipped
    if state.mode.exact:
        h = ctx.hom
        classes = reduce_to_quotient(ctx, f, X) & h.image()
        found = [h.least_in_fiber(t, skip=skip) for t in classes]
        found = [a for a in found if a is not None]
        return min(found) if found else None
    for a in ctx.semigroup.elements(window):
        if a not in skip and evaluate(ctx, f, x=a):
            return a
    return None


# -- oracles -----------------------------------------------------------------------

class ForgeOracle:
    """The decided part of q_0 at a finite stage.

    Answers True for members of A(x) ∪ A(y) ∪ A(x·y) ∪ B, False for their
    negations, evaluates sentences directly, and combines the rest through
    ¬/∧/∨.  Anything else raises ``Undecided``.
    """

    def __init__(self, state: ForgeState, witness_window: int = 256):
        self.state = state
        self.ctx = state.ctx
        self.witness_window = witness_window
        pos = set(state.B)
        for f in state.formulas:
            pos.add(f)
            pos.add(rename(f, X, Y))
            pos.add(substitute(f, X, (X, Y)))
        self._positive = pos
        self.provenance = {"kind": "forge-approximation", "stage": state.stage}

    def _value(self, f: Formula) -> bool | None:
        if f in self._positive:
            return True
        if isinstance(f, Not) and f.arg in self._positive:
            return False
        if Not(f) in self._positive:
            return False
        if not free_vars(f):
            return evaluate(self.ctx, f)
        if isinstance(f, Not):
            v = self._value(f.arg)
            return None if v is None else not v
        if isinstance(f, (And, Or)):
            a, b = self._value(f.left), self._value(f.right)
            if isinstance(f, And):
                if a is False or b is False:
                    return False
                return True if a and b else None
            if a is True or b is True:
                return True
            return False if a is False and b is False else None
        return None

    def query(self, f: Formula) -> bool:
        self.ctx.check(f)
        if not free_vars(f) <= {X, Y}:
            raise ValueError("oracle formulas use only x and y")
        v = self._value(f)
        if v is None:
            raise Undecided(f"undecided-at-stage-{self.state.stage}: {render(f)}")
        return v

    def witness(self, f: Formula, above: int = -1) -> int:
        if not self.query(f):
            raise ValueError(f"{render(f)} is not in the type")
        skip = self.ctx.skipped
        for j, u in self.state.witness_log:
            if u > above and self.state.psi(j) == f:
                return u
        for u in self.ctx.semigroup.elements(self.witness_window + above + 1):
            if u > above and u not in skip and self._value(substitute_x(f, u)) is True:
                return u
        raise Undecided(f"undecided-at-stage-{self.state.stage}: no witness for {render(f)}")


class QuotientTypeOracle:
    """The type of an idempotent class e: x and y both read as e in the quotient."""

    def __init__(self, ctx: StructureContext, e: int, provenance: dict | None = None):
        if not ctx.quotient_backed:
            raise ValueError("quotient types need a quotient-backed structure")
        h = checked_homomorphism(ctx.hom)
        F = h.target
        if F.product(e, e) != e:
            raise ValueError(f"class {e} is not idempotent")
        if h.least_in_fiber(e, skip=ctx.skipped) is None:
            raise ValueError(f"no carrier element maps to class {e} in the search window")
        self.ctx = ctx
        self.e = e
        self.provenance = provenance or {"kind": "quotient-idempotent", "e": e}
        self._table = F.table
        self._subsets = {name: p.quotient[1] for name, p in ctx.predicates.items()}
        self._consts: dict[int, int] = {}

    def _class(self, l) -> int:
        if isinstance(l, str):
            if l not in (X, Y):
                raise ValueError("oracle formulas use only x and y")
            return self.e
        c = self._consts.get(l)
        if c is None:
            c = self._consts[l] = self.ctx.hom(self.ctx.semigroup._check(l))
        return c

    def _eval(self, f: Formula) -> bool:
        # validation and evaluation in one walk; x and y both read as e
        if isinstance(f, Atom):
            subset = self._subsets.get(f.pred)
            if subset is None:
                raise KeyError(f"unregistered predicate {f.pred!r}")
            table = self._table
            acc = None
            for l in f.term:
                v = self._class(l)
                acc = v if acc is None else table[acc][v]
            return acc in subset
        if isinstance(f, Not):
            return not self._eval(f.arg)
        left, right = self._eval(f.left), self._eval(f.right)
        return left and right if isinstance(f, And) else left or right

    def query(self, f: Formula) -> bool:
        return self._eval(f)

    def witness(self, f: Formula, above: int = -1) -> int:
        if not self.query(f):
            raise ValueError(f"{render(f)} is not in the type")
        u = self.ctx.hom.least_in_fiber(self.e, above=above, skip=self.ctx.skipped)
        if u is None:
            raise Undecided(f"fiber of {self.e} has no element above {above} in the window")
        return u


def quotient_idempotent_type(ctx: StructureContext, e: int) -> QuotientTypeOracle:
    return QuotientTypeOracle(ctx, e)


def quotient_completion(state: ForgeState) -> QuotientTypeOracle:
    """A complete idempotent type extending the stage's decided part (exact mode only).

    Any idempotent class e of h(M) satisfying A works: A(x), A(y), A(x·y)
    hold at e since e·e = e, and every rejected ψ_j fails at (e, e) because
    condition (4) rules out the class e for y.
    """
    if not state.mode.exact:
        raise ValueError("quotient completion needs exact-quotient mode")
    ctx = state.ctx
    h = ctx.hom
    T = reduce_to_quotient(ctx, conj(state.formulas), X) & state.decider.good_classes
    if not T:
        raise ForgeError("A defines no IP set; invariant (2) is broken")
    e = min(T, key=lambda t: h.least_in_fiber(t, skip=ctx.skipped))
    return QuotientTypeOracle(ctx, e, {"kind": "quotient-completion", "stage": state.stage, "e": e})


def run_forge(ctx: StructureContext, x_formula: Formula, stages: int,
              mode: ForgeMode | None = None, window: int = 1000) -> tuple[ForgeState, ForgeOracle]:
    """Run ``stages`` steps, checking the invariants and the consistency claim after each."""
    if stages < 1:
        raise ValueError("need at least one stage")
    state = forge_init(ctx, x_formula, mode)
    for _ in range(stages):
        state = forge_step(state)
        report = check_invariants(state)
        claim = consistency_witness(state, window)
        if state.mode.exact and (not report.ok or claim is None or not claim.verified):
            raise ForgeError(f"stage {state.stage}: invariants {report.to_json()} claim {claim}")
        if not report.ok:
            log.warning("stage %d: invariant failure at bounds: %s", state.stage, report.to_json())
        state = replace(state, records=state.records + (StageRecord(state.decisions[-1], report, claim),))
    return state, ForgeOracle(state)


# -- transcripts -------------------------------------------------------------------

def stage_record_json(state: ForgeState, rec: StageRecord) -> dict:
    d = rec.decision
    bounded = not state.mode.exact
    phi = {"index": d.phi_index, "formula": to_json(state.phi(d.phi_index)),
           "decision": "positive" if d.phi_positive else "negative"}
    psi = {"index": d.psi_index, "formula": to_json(state.psi(d.psi_index)),
           "decision": "accepted" if d.psi_accepted else "rejected"}
    if bounded:
        phi["at_bounds"] = d.phi_at_bounds
        psi["at_bounds"] = d.psi_at_bounds
    return {
        "type": "stage",
        "stage": d.stage,
        "phi": phi,
        "psi": psi,
        "witness_u": d.witness_u,
        "J": sorted(j for j in state.J if j < d.stage),
        "claim_witness": None if rec.claim is None else [rec.claim.u, rec.claim.v],
        "invariants": rec.invariants.to_json(),
    }


def transcript(state: ForgeState) -> list[dict]:
    """One JSON record per stage."""
    return [stage_record_json(state, rec) for rec in state.records]


def verify_transcript(records: list[dict], ctx: StructureContext, x_formula: Formula,
                      mode: ForgeMode, window: int = 1000) -> list[str]:
    """Replay a transcript; returns a list of problems (empty when it checks out).

    Every stage is recomputed, compared field by field, and each claim
    witness is re-evaluated directly against A, A(y), A(x·y) and B.
    """
    problems = []
    stages = [r for r in records if r.get("type") == "stage"]
    if not stages:
        return ["transcript has no stage records"]
    state = forge_init(ctx, x_formula, mode)
    for rec in stages:
        state = forge_step(state)
        report = check_invariants(state)
        claim = consistency_witness(state, window)
        expect = stage_record_json(state, StageRecord(state.decisions[-1], report, claim))
        if expect != rec:
            problems.append(f"stage {rec.get('stage')}: record differs from replay")
        cw = rec.get("claim_witness")
        if cw is not None and not _claim_holds(state, cw[0], cw[1]):
            problems.append(f"stage {rec.get('stage')}: claim witness {cw} fails direct evaluation")
    return problems
