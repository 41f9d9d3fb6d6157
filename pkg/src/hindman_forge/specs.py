"""JSON and command-line spec formats for semigroups, homomorphisms and predicates.

Semigroups::

    {"kind": "nat-add"} | {"kind": "nat-mul"} | {"kind": "free-word", "alphabet": "ab"}
    {"kind": "finite-table", "order": n, "table": [[...], ...], "names": [...]?}

Short forms: ``nat-add``, ``nat-mul``, ``free-word:ab``, ``cyclic:4``,
``mulmod:6``, ``left-zero:3``, or a path to a JSON file.

Homomorphisms::

    {"source": <semigroup>, "target": <finite-table>, "rule": {"type": "mod", "d": 5}}
    rule types: mod (d), letter-image (images), explicit (values)

Predicates::

    {"type": "mod", "d": 4, "residues": [0]}
    {"type": "explicit-bitset", "window": N, "bits": <base64, bit a = byte a//8, bit a%8>}
    {"type": "prefix", "letter": "a"}          (free-word: words starting with a)
    {"type": "set", "elements": [0, 2]}        (finite-table)
    {"type": "formula-ref", "formula": <formula JSON over earlier predicates>}

Short forms: ``mod:4:0``, ``mod:4:0,2``, ``prefix:a``, ``set:0,2``,
``bits:N:BASE64``, each optionally prefixed with ``NAME=``.
"""

from __future__ import annotations

import base64
import json
import math
from pathlib import Path

from .formulas import StructureContext, definable_set, from_json
from .ip import SetPredicate, quotient_predicate
from .semigroups import (
    ExplicitMap, FiniteSemigroup, FreeWord, Homomorphism, LetterImage, ModRule, NatAdd, NatMul,
    Semigroup, cyclic_group, first_letter_homomorphism, identity_homomorphism, left_zero,
    mod_homomorphism, multiplicative_mod,
)


class SpecError(ValueError):
    """A spec failed to parse or validate."""


def load_json_arg(text: str):
    """Inline JSON, or the contents of a JSON file."""
    text = text.strip()
    if text.startswith(("{", "[")):
        return json.loads(text)
    return json.loads(Path(text).read_text(encoding="utf-8"))


def semigroup_from_json(obj: dict) -> Semigroup:
    try:
        kind = obj["kind"]
        if kind == "nat-add":
            return NatAdd()
        if kind == "nat-mul":
            return NatMul()
        if kind == "free-word":
            return FreeWord(obj.get("alphabet", "ab"))
        if kind == "finite-table":
            F = FiniteSemigroup(obj["table"], names=obj.get("names"))
            if "order" in obj and obj["order"] != F.order:
                raise SpecError(f"order {obj['order']} does not match a {F.order}x{F.order} table")
            return F
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad semigroup spec {obj!r}: {exc}") from exc
    raise SpecError(f"unknown semigroup kind {obj.get('kind')!r}")


def parse_semigroup(text: str) -> Semigroup:
    name, _, arg = text.partition(":")
    try:
        if text in ("nat-add", "nat-mul"):
            return semigroup_from_json({"kind": text})
        if name == "free-word":
            return FreeWord(arg or "ab")
        if name == "cyclic":
            return cyclic_group(int(arg))
        if name == "mulmod":
            return multiplicative_mod(int(arg))
        if name == "left-zero":
            return left_zero(int(arg))
    except ValueError as exc:
        raise SpecError(f"bad semigroup spec {text!r}: {exc}") from exc
    try:
        return semigroup_from_json(load_json_arg(text))
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read semigroup spec {text!r}: {exc}") from exc


def homomorphism_from_json(obj: dict) -> Homomorphism:
    try:
        source = semigroup_from_json(obj["source"])
        target = semigroup_from_json(obj["target"])
        if not isinstance(target, FiniteSemigroup):
            raise SpecError("homomorphism targets must be finite tables")
        rule = obj["rule"]
        if rule["type"] == "mod":
            r = ModRule(int(rule["d"]))
        elif rule["type"] == "letter-image":
            r = LetterImage(tuple(int(v) for v in rule["images"]))
        elif rule["type"] == "explicit":
            r = ExplicitMap(tuple(int(v) for v in rule["values"]))
        else:
            raise SpecError(f"unknown rule type {rule['type']!r}")
        return Homomorphism(source, target, r)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"bad homomorphism spec: {exc}") from exc


def _short_predicate(text: str) -> dict:
    kind, _, rest = text.partition(":")
    try:
        if kind == "mod":
            d, _, residues = rest.partition(":")
            return {"type": "mod", "d": int(d), "residues": [int(r) for r in residues.split(",")]}
        if kind == "prefix":
            return {"type": "prefix", "letter": rest}
        if kind == "set":
            return {"type": "set", "elements": [int(a) for a in rest.split(",") if a]}
        if kind == "bits":
            window, _, bits = rest.partition(":")
            return {"type": "explicit-bitset", "window": int(window), "bits": bits}
    except ValueError as exc:
        raise SpecError(f"bad predicate spec {text!r}: {exc}") from exc
    try:
        return load_json_arg(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"bad predicate spec {text!r}") from exc


def parse_predicate_arg(text: str, default_name: str) -> tuple[str, dict]:
    """``NAME=SPEC`` or ``SPEC`` → (name, JSON spec)."""
    name, sep, spec = text.partition("=")
    if not sep or not name.isidentifier():
        name, spec = default_name, text
    return name, _short_predicate(spec)


def encode_bitset(members, window: int) -> str:
    data = bytearray((window + 7) // 8)
    for a in members:
        if 0 <= a < window:
            data[a // 8] |= 1 << (a % 8)
    return base64.b64encode(bytes(data)).decode("ascii")


def build_context(S: Semigroup, specs: dict[str, dict], skip_identity: bool = False) -> StructureContext:
    """Structure with the given named predicates.

    All ``mod`` predicates share one homomorphism onto Z_D (D the lcm of
    their moduli), so a structure built only from them is quotient-backed.
    """
    if not specs:
        raise SpecError("at least one predicate is required")
    try:
        moduli = [int(s["d"]) for s in specs.values() if s.get("type") == "mod"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad mod predicate: {exc}") from exc
    common = None
    if moduli:
        if min(moduli) < 1:
            raise SpecError("moduli must be positive")
        try:
            common = mod_homomorphism(S, math.lcm(*moduli))
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
    preds: dict[str, SetPredicate] = {}
    for name, spec in specs.items():
        preds[name] = _predicate(S, spec, name, common, preds, skip_identity)
    return StructureContext(S, preds, skip_identity=skip_identity)


def _predicate(S, spec, name, common, earlier, skip_identity) -> SetPredicate:
    kind = spec.get("type")
    try:
        if kind == "mod":
            d = int(spec["d"])
            residues = {int(r) for r in spec["residues"]}
            if any(not 0 <= r < d for r in residues):
                raise SpecError(f"residues must lie in [0, {d})")
            D = common.rule.d
            return quotient_predicate(common, {t for t in range(D) if t % d in residues}, name)
        if kind == "prefix":
            if not isinstance(S, FreeWord) or spec["letter"] not in S.alphabet or len(spec["letter"]) != 1:
                raise SpecError("prefix predicates need a free-word semigroup and one alphabet letter")
            h = first_letter_homomorphism(S)
            return quotient_predicate(h, {S.alphabet.index(spec["letter"])}, name)
        if kind == "set":
            if not isinstance(S, FiniteSemigroup):
                raise SpecError("set predicates need a finite-table semigroup")
            return quotient_predicate(identity_homomorphism(S), {S._check(int(a)) for a in spec["elements"]}, name)
        if kind == "explicit-bitset":
            window = int(spec["window"])
            data = base64.b64decode(spec["bits"], validate=True)
            if len(data) * 8 < window:
                raise SpecError("bitset shorter than its window")
            members = frozenset(a for a in range(window) if data[a // 8] >> (a % 8) & 1)
            # elements beyond the window are outside the set
            return SetPredicate(members.__contains__, None, name)
        if kind == "formula-ref":
            if not earlier:
                raise SpecError("formula-ref needs earlier predicates to refer to")
            base = StructureContext(S, earlier, skip_identity)
            f = from_json(spec["formula"])
            p = definable_set(base, f, "x")
            return SetPredicate(p.evaluator, p.quotient, name)
    except SpecError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SpecError(f"bad predicate spec {spec!r}: {exc}") from exc
    raise SpecError(f"unknown predicate type {kind!r}")
