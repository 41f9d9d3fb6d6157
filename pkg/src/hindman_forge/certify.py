"""Independent re-checks of emitted witnesses and certificates.

Nothing here calls the search code it checks: FP sets are rebuilt from
explicit index subsets, and colourings are scanned over all k-subsets.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Sequence

from .semigroups import Semigroup


def brute_fp(S: Semigroup, basis: Sequence[int]) -> list[int]:
    """Products over every nonempty index subset, multiplied in index order; sorted, deduplicated."""
    out = set()
    n = len(basis)
    for size in range(1, n + 1):
        for idx in combinations(range(n), size):
            acc = basis[idx[0]]
            for i in idx[1:]:
                acc = S.product(acc, basis[i])
            out.add(acc)
    return sorted(out)


def first_fp_failure(S: Semigroup, basis: Sequence[int], member: Callable[[int], bool]) -> int | None:
    """Least FP element (by carrier index) outside the set, or None."""
    for a in brute_fp(S, basis):
        if not member(a):
            return a
    return None


def colouring_violation(colouring: Sequence[int], k: int) -> tuple[int, ...] | None:
    """A monochromatic set of k distinct numbers in [1, n] with all subset sums coloured alike."""
    n = len(colouring)
    for parts in combinations(range(1, n + 1), k):
        if sum(parts) > n:
            continue
        c = colouring[parts[0] - 1]
        ok = True
        for size in range(1, k + 1):
            for sub in combinations(parts, size):
                if colouring[sum(sub) - 1] != c:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return parts
    return None
