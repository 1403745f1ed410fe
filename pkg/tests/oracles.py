"""Naive reference implementations used to cross-check the library."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def naive_bisimulation(g1, g2) -> bool:
    """Greatest bisimulation between two graphs by deleting violating pairs until nothing changes."""
    R = {(a, b) for a in g1.nodes for b in g2.nodes}
    changed = True
    while changed:
        changed = False
        for a, b in list(R):
            ca, cb = g1.children[a], g2.children[b]
            forth = all(any((x, y) in R for y in cb) for x in ca)
            back = all(any((x, y) in R for x in ca) for y in cb)
            if not (forth and back):
                R.discard((a, b))
                changed = True
    return (g1.root, g2.root) in R


def naive_level_equiv(g1, g2, n: int) -> bool:
    """``~n`` by direct recursion on the definition."""

    @lru_cache(maxsize=None)
    def eq(a, b, k):
        if k == 0:
            return True
        ca, cb = g1.children[a], g2.children[b]
        return all(any(eq(x, y, k - 1) for y in cb) for x in ca) and all(
            any(eq(x, y, k - 1) for x in ca) for y in cb
        )

    return eq(g1.root, g2.root, n)


def stationary_by_solve(P) -> np.ndarray:
    """Solve ``u P = u`` with one balance equation replaced by ``sum(u) = 1``."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)
