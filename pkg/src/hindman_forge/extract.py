"""Reading an FP basis off an idempotent-type oracle.

Start from ψ₁(x, y) = Y(x) ∧ Y(x·y).  Given ψ_i in the type, ask the oracle
for u_i with ψ_i(u_i, y) in the type and continue with
ψ_{i+1}(x, y) = ψ_i(x, y) ∧ ψ_i(u_i·x, y).  The sentences accumulated in
ψ_i(u_i, y) put every finite product of u_1..u_i in Y.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

from .certify import brute_fp, first_fp_failure
from .formulas import (
    X, Y, And, Formula, Not, StructureContext, Undecided, evaluate, free_vars, render,
    substitute, substitute_x,
)
from .forge import ForgeMode, quotient_completion, run_forge
from .ip import fp_set

log = logging.getLogger(__name__)


class TypeOracle(Protocol):
    provenance: dict

    def query(self, f: Formula) -> bool: ...

    def witness(self, f: Formula, above: int = -1) -> int: ...


class ContractViolation(RuntimeError):
    pass


@dataclass
class ExtractionResult:
    basis: list[int]
    psi_trace: list[Formula]
    fp: list[int]
    certificate: dict[int, bool]
    y_formula: Formula
    renamed: bool = False
    truncated_at: int | None = None
    verified: bool = False
    side: str = "Y"
    provenance: dict = field(default_factory=dict)

    def to_json(self, ctx: StructureContext) -> dict:
        out = {
            "basis": self.basis,
            "psi_trace": [ctx.encode(f).hex() for f in self.psi_trace],
            "fp": self.fp,
            "verified": self.verified,
            "renamed": self.renamed,
            "truncated_at": self.truncated_at,
            "side": self.side,
        }
        if ctx.semigroup.kind == "free-word":
            out["basis_display"] = [ctx.semigroup.display(a) for a in self.basis]
        return out


def next_psi(psi: Formula, u: int) -> Formula:
    """ψ(x, y) ∧ ψ(u·x, y)."""
    return And(psi, substitute(psi, X, (u, X)))


def verify_basis(ctx: StructureContext, basis: list[int], y_formula: Formula) -> int | None:
    """Least FP element failing Y, checked by direct evaluation; None when all pass."""
    if not basis:
        return None
    var = X if X in free_vars(y_formula) else Y
    return first_fp_failure(ctx.semigroup, basis, lambda a: evaluate(ctx, y_formula, **{var: a}))


def extract_basis(ctx: StructureContext, oracle: TypeOracle, y_formula: Formula, k: int, *,
                  x_formula: Formula | None = None, distinct: bool = False) -> ExtractionResult:
    """Extract a length-``k`` basis for the set Y contained in the oracle's type.

    If the type contains X ∧ ¬Y instead of Y (``x_formula`` given), the
    extraction proceeds for X∖Y and the result is marked ``renamed``.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if free_vars(y_formula) - {X}:
        raise ValueError("Y must be a formula in x")
    result = ExtractionResult([], [], [], {}, y_formula, provenance=dict(oracle.provenance))
    try:
        inside = oracle.query(y_formula)
        if not inside:
            if x_formula is None:
                raise ValueError(f"{render(y_formula)} is not in the type and no X was given")
            y_formula = And(x_formula, Not(y_formula))
            if not oracle.query(y_formula):
                raise ContractViolation("neither Y nor X∖Y is in the type; X(x) is missing")
            log.warning("Y is not in the type; extracting a basis for X∖Y instead")
            result.y_formula, result.renamed, result.side = y_formula, True, "X\\Y"
        psi = And(y_formula, substitute(y_formula, X, (X, Y)))
        for i in range(k):
            if not oracle.query(psi):
                raise ContractViolation(f"ψ_{i + 1} is not in the type (idempotence contract)")
            above = max(result.basis) if distinct and result.basis else -1
            u = oracle.witness(psi, above)
            if not oracle.query(substitute_x(psi, u)):
                raise ContractViolation(f"witness {u} fails ψ_{i + 1}(u, y) (independence contract)")
            result.psi_trace.append(psi)
            result.basis.append(u)
            psi = next_psi(psi, u)
    except Undecided as exc:
        result.truncated_at = len(result.basis)
        log.warning("extraction truncated after %d elements: %s", len(result.basis), exc)
    _certify(ctx, result)
    return result


def _certify(ctx: StructureContext, result: ExtractionResult) -> None:
    if not result.basis:
        result.verified = False
        return
    S = ctx.semigroup
    result.fp = sorted(fp_set(S, result.basis))
    result.certificate = {a: evaluate(ctx, result.y_formula, x=a) for a in brute_fp(S, result.basis)}
    result.verified = (verify_basis(ctx, result.basis, result.y_formula) is None
                       and all(result.certificate.values()))


def partition_via_types(ctx: StructureContext, x_formula: Formula, y_formula: Formula, k: int, *,
                        stages: int = 8, mode: ForgeMode | None = None,
                        distinct: bool = False) -> ExtractionResult:
    """Decide a side of X = Y ∪ (X∖Y) through an idempotent type containing X.

    The forge builds the type's decided part and answers whether Y(x) or
    X(x) ∧ ¬Y(x) is in it.  In exact mode the basis is read from the
    quotient completion of that stage; in bounded mode from the forge
    oracle itself, which may truncate.
    """
    state, oracle = run_forge(ctx, x_formula, stages, mode)
    side_y = oracle.query(y_formula)
    if not side_y and not oracle.query(And(x_formula, Not(y_formula))):
        raise ContractViolation("the forge type contains neither Y nor X∖Y")
    source = quotient_completion(state) if state.mode.exact else oracle
    if source.query(y_formula) != side_y:
        raise ContractViolation("completion disagrees with the forge on Y(x)")
    return extract_basis(ctx, source, y_formula, k, x_formula=x_formula, distinct=distinct)
