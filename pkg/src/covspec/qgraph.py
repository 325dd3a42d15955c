"""Colored Q+-graph combinatorics: enumeration of leading-order classes.

A colored Q+-graph of order ``k`` lives on index positions ``1..3k`` of the
``i``-line and ``k`` vertices ``j_1..j_k`` on the colour lines.  Block
``s`` contributes, in order,

* a horizontal ``T_{l_s}`` edge  ``3s-2 -> 3s-1``,
* a down edge                    ``3s-1 -> j_s``,
* an up edge                     ``j_s -> 3s``,
* a horizontal ``T_{l_s}^*`` edge ``3s -> 3s+1`` (position ``3k+1`` is ``1``).

A structure is a colour vector plus equality patterns on the ``i``
positions and on the ``j`` vertices.  Leading-order (category C1)
structures arise from a colour-compatible matching ``σ`` that glues down
edge ``s`` to up edge ``σ(s)``; the oracle enumerates those and keeps the
ones whose pillar is a tree.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from typing import Sequence

from .mixed_moments import MixedMomentProvider, canonical_key, mixed_moment

DEFAULT_K_CAP = 6
DEFAULT_M_CAP = 3


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller label wins so roots are canonical
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def blocks(self) -> tuple[tuple, ...]:
        groups = defaultdict(list)
        for x in self.parent:
            groups[self.find(x)].append(x)
        return tuple(sorted(tuple(sorted(g)) for g in groups.values()))


def _pos(p: int, k: int) -> int:
    """Wrap position ``3k+1`` to ``1``."""
    return (p - 1) % (3 * k) + 1


def _labels_from_blocks(blocks, universe) -> dict:
    lab = {}
    for b in blocks:
        for x in b:
            lab[x] = b[0]
    missing = set(universe) - set(lab)
    if missing:
        raise ValueError(f"partition does not cover {sorted(missing)}")
    return lab


@dataclass(frozen=True)
class Structure:
    """Raw identification data: colours and equality blocks."""

    colors: tuple[int, ...]
    i_blocks: tuple[tuple[int, ...], ...]
    j_blocks: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.colors)

    @classmethod
    def from_identifications(cls, colors: Sequence[int], i_pairs=(), j_pairs=()) -> "Structure":
        """Close a list of equalities ``i_a = i_b`` and ``j_s = j_t`` into blocks."""
        colors = tuple(int(c) for c in colors)
        k = len(colors)
        if k < 1:
            raise ValueError("k must be >= 1")
        ui = _UnionFind(range(1, 3 * k + 1))
        uj = _UnionFind(range(1, k + 1))
        for a, b in i_pairs:
            if not (1 <= a <= 3 * k and 1 <= b <= 3 * k):
                raise ValueError(f"i position out of range in ({a}, {b})")
            ui.union(a, b)
        for s, t in j_pairs:
            if not (1 <= s <= k and 1 <= t <= k):
                raise ValueError(f"j index out of range in ({s}, {t})")
            if colors[s - 1] != colors[t - 1]:
                raise ValueError(f"j_{s} and j_{t} lie on different colour lines")
            uj.union(s, t)
        return cls(colors, ui.blocks(), uj.blocks())

    @classmethod
    def from_matching(cls, colors: Sequence[int], sigma: Sequence[int]) -> "Structure":
        """Minimal identifications of the matching ``down s <-> up sigma[s-1]`` (1-based)."""
        k = len(colors)
        if sorted(sigma) != list(range(1, k + 1)):
            raise ValueError(f"{sigma} is not a permutation of 1..{k}")
        for s, t in enumerate(sigma, start=1):
            if colors[s - 1] != colors[t - 1]:
                raise ValueError(f"matching pairs colour {colors[s - 1]} with colour {colors[t - 1]}")
        i_pairs = [(3 * s - 1, 3 * t) for s, t in enumerate(sigma, start=1)]
        j_pairs = [(s, t) for s, t in enumerate(sigma, start=1)]
        return cls.from_identifications(colors, i_pairs, j_pairs)


@dataclass(frozen=True)
class Classification:
    category: str
    r: int
    s: int
    p: int
    max_multiplicity: int
    pillar_is_tree: bool


def _analyse(st: Structure):
    k = st.k
    ilab = _labels_from_blocks(st.i_blocks, range(1, 3 * k + 1))
    jlab = _labels_from_blocks(st.j_blocks, range(1, k + 1))
    for b in st.j_blocks:
        if len({st.colors[s - 1] for s in b}) > 1:
            raise ValueError(f"j block {b} mixes colour lines")

    # head: i-classes joined by horizontal edges
    head = _UnionFind(sorted(set(ilab.values())))
    horizontal = []
    for s in range(1, k + 1):
        horizontal.append((ilab[3 * s - 2], ilab[3 * s - 1]))
        horizontal.append((ilab[3 * s], ilab[_pos(3 * s + 1, k)]))
    for a, b in horizontal:
        head.union(a, b)

    # vertical edges keyed by (i-class, colour line, j-class)
    downs, ups = Counter(), Counter()
    for s in range(1, k + 1):
        jv = (st.colors[s - 1], jlab[s])
        downs[(ilab[3 * s - 1], jv)] += 1
        ups[(ilab[3 * s], jv)] += 1
    edges = set(downs) | set(ups)
    mult = {e: downs[e] + ups[e] for e in edges}
    p = len(edges)
    jverts = {(st.colors[s - 1], jlab[s]) for s in range(1, k + 1)}
    s_total = len(jverts)
    comps = {head.find(x) for x in ilab.values()}
    r = len(comps)

    # pillar: head components + j vertices, one edge per distinct vertical edge
    pillar = _UnionFind([("H", c) for c in comps] + [("J", v) for v in jverts])
    for (ic, jv) in edges:
        pillar.union(("H", head.find(ic)), ("J", jv))
    connected = len({pillar.find(x) for x in pillar.parent}) == 1
    is_tree = connected and p == r + s_total - 1
    return ilab, jlab, head, downs, ups, mult, r, s_total, p, is_tree


def classify_structure(st: Structure) -> Classification:
    """Category of a structure: C2 (a single vertical edge), C1 (perfect
    down/up pairing with a tree pillar) or C3 (everything else).

    For C3 the bound ``r + s - 1 < k`` is asserted, and every head vertex
    is checked to have horizontal degree at least two.
    """
    k = st.k
    ilab, jlab, head, downs, ups, mult, r, s, p, is_tree = _analyse(st)
    top = max(mult.values())
    if min(mult.values()) == 1:
        return Classification("C2", r, s, p, top, is_tree)
    perfect = all(downs[e] == 1 and ups[e] == 1 for e in mult)
    if perfect and is_tree:
        assert p == k and k == r + s - 1, (st, r, s, p)
        return Classification("C1", r, s, p, top, is_tree)
    assert r + s - 1 < k, f"C3 structure violates r+s-1<k: {st}"
    degree = Counter()
    for pos in range(1, 3 * k + 1):
        degree[ilab[pos]] += 2 if pos % 3 == 1 else 1
    assert min(degree.values()) >= 2, f"C3 head vertex of degree < 2: {st}"
    return Classification("C3", r, s, p, top, is_tree)


@dataclass(frozen=True)
class SimilarityClass:
    """One leading-order class with its derived quantities.

    ``ccmis`` lists the component words with ``H_1`` (the component of
    ``i_1``) first and the others in order of their first up edge; each
    word lists the colours of the up edges reaching the component in
    natural order.  ``trace_words`` are the words read off by walking each
    component cycle, which is what the head sum actually produces.
    """

    colors: tuple[int, ...]
    i_partition: tuple[tuple[int, ...], ...]
    j_partition: tuple[tuple[int, ...], ...]
    sigma: tuple[int, ...]
    r: int
    nu: tuple[int, ...]
    ccmis: tuple[tuple[int, ...], ...]
    trace_words: tuple[tuple[int, ...], ...]
    s_counts: tuple[int, ...]
    p: int

    @property
    def k(self) -> int:
        return len(self.colors)

    @property
    def s(self) -> int:
        return sum(self.s_counts)

    @property
    def key(self):
        return (self.colors, self.i_partition, self.j_partition)

    @property
    def ccmi_multiset(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(canonical_key(w) for w in self.trace_words))

    def n_counts(self, m: int) -> tuple[int, ...]:
        """``Σ_a n_l^{(a)}`` per colour from the CCMIs (first entry dropped for a > 1)."""
        out = [0] * m
        for a, word in enumerate(self.ccmis):
            for j, l in enumerate(word):
                if a == 0 or j > 0:
                    out[l - 1] += 1
        return tuple(out)


def _build_class(st: Structure, sigma, m: int) -> SimilarityClass:
    k = st.k
    ilab, jlab, head, downs, ups, mult, r, s, p, is_tree = _analyse(st)
    comp_of = {pos: head.find(ilab[pos]) for pos in range(1, 3 * k + 1)}

    # order components: H_1 holds position 1, rest by first arriving up edge
    first_up = {}
    for t in range(1, k + 1):
        first_up.setdefault(comp_of[3 * t], t)
    h1 = comp_of[1]
    order = [h1] + sorted((c for c in first_up if c != h1), key=first_up.get)
    assert set(order) == set(comp_of.values()) and len(order) == r

    ccmis = []
    for c in order:
        ccmis.append(tuple(st.colors[t - 1] for t in range(1, k + 1) if comp_of[3 * t] == c))

    # walk each component cycle: from up edge t the next up edge is sigma(t+1)
    trace_words = []
    for c in order:
        start = first_up[c]
        word, t = [], start
        while True:
            word.append(st.colors[t - 1])
            t = sigma[t % k]
            if t == start:
                break
        trace_words.append(tuple(word))

    i_partition = tuple(sorted(tuple(sorted(p_ for p_ in comp_of if comp_of[p_] == c)) for c in order))
    s_counts = [0] * m
    for l, _ in {(st.colors[t - 1], jlab[t]) for t in range(1, k + 1)}:
        s_counts[l - 1] += 1

    cls = SimilarityClass(
        colors=st.colors,
        i_partition=i_partition,
        j_partition=st.j_blocks,
        sigma=tuple(sigma),
        r=r,
        nu=tuple(len(w) for w in ccmis),
        ccmis=tuple(ccmis),
        trace_words=tuple(trace_words),
        s_counts=tuple(s_counts),
        p=p,
    )
    _check_class(cls, h1_has_position_1=comp_of[1] == order[0])
    return cls


def _is_rotation(a, b) -> bool:
    return len(a) == len(b) and (not a or canonical_key(a) == canonical_key(b)
                                 and any(a[i:] + a[:i] == tuple(b) for i in range(len(a))))


def _check_class(cls: SimilarityClass, h1_has_position_1: bool):
    k = cls.k
    assert k == cls.r + cls.s - 1, f"tree identity fails for {cls}"
    assert sum(cls.nu) == k
    assert h1_has_position_1
    for natural, walked in zip(cls.ccmis, cls.trace_words):
        assert _is_rotation(natural, walked), f"component word is not a rotation of its CCMI: {cls}"


@dataclass
class EnumerationResult:
    classes: list[SimilarityClass]
    # (colors, i_partition) pairs whose j_partition is not unique
    j_partition_flags: list[tuple]
    # classes whose CCMI colour counts disagree with s_l
    counting_flags: list[SimilarityClass] = field(default_factory=list)
    structures_examined: int = 0


def _check_caps(k: int, m: int, k_cap: int, m_cap: int):
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")
    if k > k_cap:
        raise ValueError(f"k={k} exceeds the oracle cap {k_cap}")
    if m > m_cap:
        raise ValueError(f"m={m} exceeds the oracle cap {m_cap}")


def _colorings(sigma, m: int):
    """Colour vectors constant on the cycles of ``sigma``."""
    k = len(sigma)
    seen, cycles = set(), []
    for s in range(1, k + 1):
        if s in seen:
            continue
        cyc, t = [], s
        while t not in seen:
            seen.add(t)
            cyc.append(t)
            t = sigma[t - 1]
        cycles.append(cyc)
    for cols in product(range(1, m + 1), repeat=len(cycles)):
        colors = [0] * k
        for cyc, c in zip(cycles, cols):
            for t in cyc:
                colors[t - 1] = c
        yield tuple(colors)


def enumerate_c1(k: int, m: int, *, k_cap: int = DEFAULT_K_CAP, m_cap: int = DEFAULT_M_CAP) -> EnumerationResult:
    """All C1 similarity classes of order ``k`` with ``m`` colours, with diagnostics."""
    _check_caps(k, m, k_cap, m_cap)
    found: dict = {}
    examined = 0
    for sigma in permutations(range(1, k + 1)):
        for colors in _colorings(sigma, m):
            examined += 1
            st = Structure.from_matching(colors, sigma)
            if classify_structure(st).category != "C1":
                continue
            cls = _build_class(st, sigma, m)
            found.setdefault(cls.key, cls)

    by_head = defaultdict(set)
    for cls in found.values():
        by_head[(cls.colors, cls.i_partition)].add(cls.j_partition)
    flags = sorted(key for key, js in by_head.items() if len(js) > 1)
    counting = [c for c in found.values() if c.n_counts(m) != c.s_counts]
    classes = sorted(found.values(), key=lambda c: (c.r, c.colors, c.i_partition, c.j_partition))
    return EnumerationResult(classes, flags, counting, examined)


def enumerate_c1_classes(k: int, m: int, **caps) -> list[SimilarityClass]:
    return enumerate_c1(k, m, **caps).classes


# ---------------------------------------------------------------------------
# moment expansions


@dataclass(frozen=True)
class Term:
    r: int
    s_counts: tuple[int, ...]
    ccmis: tuple[tuple[int, ...], ...]  # sorted canonical keys
    coeff: Fraction

    @property
    def key(self):
        return (self.r, self.s_counts, self.ccmis)


@dataclass(frozen=True)
class MomentExpansion:
    """``m_k = Σ coeff · c^{r-1} · Π_l Δt_l^{s_l} · Π M_{ccmi}``."""

    k: int
    m: int
    terms: tuple[Term, ...]

    @classmethod
    def from_counts(cls, k: int, m: int, counts: dict) -> "MomentExpansion":
        terms = tuple(Term(r, s, w, Fraction(v)) for (r, s, w), v in sorted(counts.items()) if v != 0)
        for t in terms:
            assert sum(len(w) for w in t.ccmis) == k, t
            assert sum(t.s_counts) == k - t.r + 1, t
            assert len(t.s_counts) == m
        return cls(k, m, terms)

    def as_dict(self) -> dict:
        return {t.key: t.coeff for t in self.terms}

    def to_json(self) -> dict:
        def num(x: Fraction):
            return x.numerator if x.denominator == 1 else str(x)

        return {
            "k": self.k,
            "m": self.m,
            "terms": [{"r": t.r, "s_counts": list(t.s_counts), "ccmis": [list(w) for w in t.ccmis],
                       "coeff": num(t.coeff)} for t in self.terms],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def keys_needed(self) -> set[tuple[int, ...]]:
        return {w for t in self.terms for w in t.ccmis}

    def c_polynomial(self, deltas, provider: MixedMomentProvider) -> list:
        """Coefficients of ``1, c, c^2, …`` after substituting ``Δt`` and ``M``."""
        coeffs = [0] * self.k
        for t in self.terms:
            coeffs[t.r - 1] += t.coeff * _weight(t, deltas, provider)
        return coeffs


def _weight(t: Term, deltas, provider):
    w = 1
    for d, s in zip(deltas, t.s_counts):
        if s:
            w = w * d**s
    for key in t.ccmis:
        w = w * mixed_moment(provider, key)
    return w


def oracle_moment_expansion(k: int, m: int, **caps) -> MomentExpansion:
    """Leading-order expansion of the ``k``-th limiting moment: one unit per C1 class."""
    counts = Counter()
    for cls in enumerate_c1_classes(k, m, **caps):
        counts[(cls.r, cls.s_counts, cls.ccmi_multiset)] += 1
    return MomentExpansion.from_counts(k, m, counts)


def evaluate_expansion(e: MomentExpansion, c, deltas, provider: MixedMomentProvider):
    """Numeric value of an expansion.

    Works in whatever number type the inputs use: pass ``Fraction``
    values for exact results.
    """
    deltas = list(deltas)
    if len(deltas) != e.m:
        raise ValueError(f"expected {e.m} interval lengths, got {len(deltas)}")
    if any(d <= 0 for d in deltas):
        raise ValueError("interval lengths must be positive")
    if abs(sum(deltas) - 1) > 1e-12:
        raise ValueError(f"interval lengths sum to {sum(deltas)}, not 1")
    total = 0
    for t in e.terms:
        total = total + t.coeff * c ** (t.r - 1) * _weight(t, deltas, provider)
    return total
