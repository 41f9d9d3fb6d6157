"""Finite Hindman windows over (ℕ, +).

``hindman_window(r, k, n_max)`` is the least N such that every r-colouring
of [1, N] has k distinct numbers whose nonempty subset sums all receive the
same colour.  For k = 2 this is one more than the weak Schur number.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class WindowResult:
    r: int
    k: int
    n_max: int
    window: int | None  # None when every N <= n_max admits a good colouring
    certificate: tuple[int, ...]  # colours of 1..len, 0-based

    @property
    def exhausted(self) -> bool:
        return self.window is None

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "k": self.k,
            "N_max": self.n_max,
            "verdict": "exhausted" if self.exhausted else "found",
            "N": self.window,
            "certificate": list(self.certificate),
        }


def _closing_sets(n: int, k: int, lo: int = 1):
    """Sets of k distinct integers >= lo, in increasing order, summing to n."""
    if k == 1:
        if n >= lo:
            yield (n,)
        return
    # smallest part a, remaining k-1 parts each > a
    a = lo
    while a * k + k * (k - 1) // 2 <= n:
        for rest in _closing_sets(n - a, k - 1, a + 1):
            yield (a,) + rest
        a += 1


def _subset_sums(parts):
    sums = [0]
    for p in parts:
        sums += [s + p for s in sums]
    return sums[1:]


def _closes_monochromatic(colour: list[int], n: int, c: int, k: int) -> bool:
    """Does giving n colour c complete a monochromatic k-set whose total is n?"""
    for parts in _closing_sets(n, k):
        if all(s == n or colour[s] == c for s in _subset_sums(parts)):
            return True
    return False


def longest_good_colouring(r: int, k: int, limit: int) -> list[int]:
    """A longest colouring of [1, m], m <= limit, with no monochromatic k-set.

    Colour 0 is forced on 1 and a new colour may only be introduced as the
    next unused one, which removes the r! relabelling symmetry.
    """
    best: list[int] = []
    colour = [-1] * (limit + 1)  # colour[0] unused

    def dfs(n: int, used: int) -> bool:
        nonlocal best
        if n - 1 > len(best):
            best = colour[1:n]
        if n > limit:
            return True
        for c in range(min(used + 1, r)):
            if not _closes_monochromatic(colour, n, c, k):
                colour[n] = c
                if dfs(n + 1, max(used, c + 1)):
                    return True
                colour[n] = -1
        return False

    dfs(1, 0)
    return list(best)


def hindman_window(r: int, k: int, n_max: int) -> WindowResult:
    if r < 1 or k < 2 or n_max < 1:
        raise ValueError("need r >= 1, k >= 2, N_max >= 1")
    best = longest_good_colouring(r, k, n_max)
    if len(best) >= n_max:
        return WindowResult(r, k, n_max, None, tuple(best[:n_max]))
    return WindowResult(r, k, n_max, len(best) + 1, tuple(best))
