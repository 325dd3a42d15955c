"""Closed-form limiting moments from compositions, CCMIs and labelled trees.

The moment is assembled as a symbolic :class:`~covspec.qgraph.MomentExpansion`
so it can be compared term by term with the graph enumeration.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Sequence

from .mixed_moments import MixedMomentProvider, canonical_key
from .qgraph import (DEFAULT_K_CAP, DEFAULT_M_CAP, MomentExpansion, enumerate_c1_classes,
                     evaluate_expansion)

MODES = ("literal", "stabilizer")
TREE_CAP = 8

Tree = frozenset  # of (a, b) pairs with a < b, vertices 1..r


class EmptyPermutationSetError(ZeroDivisionError):
    """Raised in literal mode when the permutation set in the denominator is empty."""


def prufer_to_tree(seq: Sequence[int], r: int) -> Tree:
    """Decode a Prüfer sequence over ``1..r`` (length ``r-2``)."""
    degree = [1] * (r + 1)
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(v for v in range(1, r + 1) if degree[v] == 1)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = (w for w in range(1, r + 1) if degree[w] == 1)
    edges.append((u, v))
    return frozenset(edges)


def enumerate_trees(r: int) -> list[Tree]:
    """All labelled trees on ``H_1..H_r`` (``r^(r-2)`` of them for ``r >= 2``)."""
    if r < 1:
        raise ValueError("r must be positive")
    if r > TREE_CAP:
        raise ValueError(f"r={r} exceeds the tree cap {TREE_CAP}")
    if r == 1:
        return [frozenset()]
    if r == 2:
        return [frozenset({(1, 2)})]
    return [prufer_to_tree(seq, r) for seq in product(range(1, r + 1), repeat=r - 2)]


def compositions(k: int, r: int):
    """Ordered compositions of ``k`` into ``r`` positive parts."""
    for cuts in combinations(range(1, k), r - 1):
        bounds = (0,) + cuts + (k,)
        yield tuple(b - a for a, b in zip(bounds, bounds[1:]))


def split_word(nu: Sequence[int], lprime: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    if sum(nu) != len(lprime):
        raise ValueError(f"composition {tuple(nu)} does not match word length {len(lprime)}")
    out, pos = [], 0
    for part in nu:
        out.append(tuple(lprime[pos:pos + part]))
        pos += part
    return tuple(out)


def _as_components(nu, lprime) -> tuple[tuple[int, ...], ...]:
    """Accept ``lprime`` either flat or already split into components."""
    if lprime and isinstance(lprime[0], (tuple, list)):
        comps = tuple(tuple(w) for w in lprime)
        if tuple(len(w) for w in comps) != tuple(nu):
            raise ValueError(f"component lengths {[len(w) for w in comps]} do not match {tuple(nu)}")
        return comps
    return split_word(nu, lprime)


def n_own(comps, m: int) -> list[list[int]]:
    """``n_l^{(a)}``: colour counts in each CCMI, first entry dropped for ``a > 1``."""
    out = []
    for a, word in enumerate(comps):
        counts = [0] * m
        for j, l in enumerate(word):
            if a == 0 or j > 0:
                counts[l - 1] += 1
        out.append(counts)
    return out


def s_powers(nu, lprime, m: int | None = None) -> tuple[int, ...]:
    """Exponent of ``Δt_l`` for every interval."""
    comps = _as_components(nu, lprime)
    if m is None:
        m = max(max(w) for w in comps)
    counts = n_own(comps, m)
    return tuple(sum(c[l] for c in counts) for l in range(m))


def _children(tree: Tree, r: int) -> list[list[int]]:
    """Neighbours of each vertex excluding its parent towards ``H_1`` (1-based lists)."""
    adj = {v: set() for v in range(1, r + 1)}
    for a, b in tree:
        adj[a].add(b)
        adj[b].add(a)
    parent = {1: None}
    stack = [1]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in parent:
                parent[w] = v
                stack.append(w)
    return [[w for w in adj[v] if w != parent[v]] for v in range(1, r + 1)]


def placement_count(tree: Tree, comps, m: int) -> int:
    """Number of ways to position the vertical connections of ``tree``."""
    r = len(comps)
    own = n_own(comps, m)
    total = 1
    for a, kids in enumerate(_children(tree, r)):
        need = [0] * m
        for b in kids:
            need[comps[b - 1][0] - 1] += 1
        for l in range(m):
            if need[l] > own[a][l]:
                return 0
            total *= math.perm(own[a][l], need[l])
    return total


def _relabel(tree: Tree, pi: dict) -> Tree:
    return frozenset((min(pi[a], pi[b]), max(pi[a], pi[b])) for a, b in tree)


def _perms_of_rest(r: int):
    rest = list(range(2, r + 1))
    for img in permutations(rest):
        pi = {1: 1}
        pi.update(zip(rest, img))
        yield pi


def permutation_set_size(tree: Tree, comps, mode: str) -> int:
    """``|S_{l',G}|`` under the chosen reading."""
    r = len(comps)
    fixing = 0
    for pi in _perms_of_rest(r):
        same_labels = all(comps[pi[p] - 1] == comps[p - 1] for p in range(2, r + 1))
        if same_labels and _relabel(tree, pi) == tree:
            fixing += 1
    if mode == "literal":
        return math.factorial(r - 1) - fixing
    if mode == "stabilizer":
        return math.factorial(r - 1) // fixing
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def c_coefficient(r: int, nu, lprime, mode: str = "stabilizer", m: int | None = None) -> Fraction:
    """Number of similarity classes attributed to ``(r, ν, l')`` by the closed form.

    In literal mode the permutation set is the complement of the
    stabilizer; it is empty whenever ``r <= 2`` and the quotient is then
    undefined, which raises :class:`EmptyPermutationSetError`.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    comps = _as_components(nu, lprime)
    if len(comps) != r:
        raise ValueError(f"r={r} but {len(comps)} components given")
    if m is None:
        m = max(max(w) for w in comps)
    total = Fraction(0)
    for tree in enumerate_trees(r):
        size = permutation_set_size(tree, comps, mode)
        if size == 0:
            raise EmptyPermutationSetError(
                f"{mode} mode: division by zero, |S| = 0 for r={r}, nu={tuple(nu)}")
        count = placement_count(tree, comps, m)
        if count:
            total += Fraction(count, size)
    return total


@dataclass(frozen=True)
class FormulaExpansion:
    expansion: MomentExpansion
    # (r, nu, components) -> coefficient, zeros included
    detail: dict


def formula_expansion(k: int, m: int, mode: str = "stabilizer", *,
                      k_cap: int = DEFAULT_K_CAP, m_cap: int = DEFAULT_M_CAP) -> FormulaExpansion:
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")
    if k > k_cap or m > m_cap:
        raise ValueError(f"(k={k}, m={m}) exceeds caps (k<={k_cap}, m<={m_cap})")
    counts = Counter()
    detail = {}
    for r in range(1, k + 1):
        for nu in compositions(k, r):
            for flat in product(range(1, m + 1), repeat=k):
                comps = split_word(nu, flat)
                coeff = c_coefficient(r, nu, comps, mode, m)
                detail[(r, nu, comps)] = coeff
                if coeff:
                    key = (r, s_powers(nu, comps, m), tuple(sorted(canonical_key(w) for w in comps)))
                    counts[key] += coeff
    return FormulaExpansion(MomentExpansion.from_counts(k, m, counts), detail)


def theorem1_moment(k: int, c, deltas, provider: MixedMomentProvider, mode: str = "stabilizer"):
    """Limiting ``k``-th moment from the closed form."""
    deltas = list(deltas)
    return evaluate_expansion(formula_expansion(k, len(deltas), mode).expansion, c, deltas, provider)


def _term_key(r, nu, comps, m):
    return (r, s_powers(nu, comps, m), tuple(sorted(canonical_key(w) for w in comps)))


def _num(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else str(x)


def compare_formula_oracle(k: int, m: int, mode: str = "stabilizer") -> dict:
    """Term-by-term audit of the closed form against the graph enumeration.

    Terms are matched on ``(r, s_counts, multiset of canonical CCMIs)``;
    each diff names one representative ``(ν, l')``.
    """
    report = {"k": k, "m": m, "mode": mode, "matches": False, "diffs": []}
    classes = enumerate_c1_classes(k, m)
    oracle = Counter()
    oracle_rep = {}
    for cls in classes:
        key = (cls.r, cls.s_counts, cls.ccmi_multiset)
        oracle[key] += 1
        oracle_rep.setdefault(key, (cls.nu, cls.ccmis))
    try:
        fexp = formula_expansion(k, m, mode)
    except EmptyPermutationSetError as exc:
        report["error"] = str(exc)
        return report
    formula = Counter()
    formula_rep = {}
    for (r, nu, comps), coeff in fexp.detail.items():
        key = _term_key(r, nu, comps, m)
        formula[key] += coeff
        formula_rep.setdefault(key, (nu, comps))
    diffs = []
    for key in sorted(set(oracle) | set(formula)):
        f, o = formula.get(key, Fraction(0)), oracle.get(key, 0)
        if f != o:
            nu, comps = formula_rep.get(key) or oracle_rep[key]
            diffs.append({"r": key[0], "s_counts": list(key[1]), "nu": list(nu),
                          "lprime": [list(w) for w in comps],
                          "formula_coeff": _num(f), "oracle_coeff": _num(o)})
    report["diffs"] = diffs
    report["matches"] = not diffs
    return report
