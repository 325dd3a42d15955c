"""Mixed spectral moments ``(1/N) tr Π T_{l_i} T_{l_i}^*`` and a freeness diagnostic.

Words are tuples of 1-based interval indices.  Because of trace
cyclicity a word and all its rotations name the same quantity, so every
lookup goes through :func:`canonical_key`.
"""

from __future__ import annotations

import threading
from typing import Mapping, Sequence

import numpy as np

from .model import EnsembleSpec, StepIntegrand


def canonical_key(word) -> tuple[int, ...]:
    """Lexicographically least cyclic rotation of ``word``."""
    w = tuple(int(x) for x in word)
    if not w:
        raise ValueError("empty word")
    return min(w[i:] + w[:i] for i in range(len(w)))


class MixedMomentProvider:
    """Source of mixed moment values.

    Build one with :meth:`numeric`, :meth:`analytic` or :meth:`constant`.
    """

    def __init__(self, *, integrand: StepIntegrand | None = None,
                 table: Mapping | None = None, value=None, m: int | None = None):
        modes = sum(x is not None for x in (integrand, table, value))
        if modes != 1:
            raise ValueError("exactly one of integrand, table, value must be given")
        self.integrand = integrand
        self.value = value
        self.table = None
        if table is not None:
            self.table = {}
            for word, v in table.items():
                key = canonical_key(word)
                if key in self.table and self.table[key] != v:
                    raise ValueError(f"conflicting values for rotations of {key}")
                self.table[key] = v
        self.m = integrand.m if integrand is not None else m
        self._cache: dict[tuple[int, ...], float] = {}
        self._lock = threading.Lock()
        self._covs = integrand.covariances() if integrand is not None else None

    @classmethod
    def numeric(cls, integrand: StepIntegrand) -> "MixedMomentProvider":
        return cls(integrand=integrand)

    @classmethod
    def analytic(cls, table: Mapping, m: int | None = None) -> "MixedMomentProvider":
        return cls(table=table, m=m)

    @classmethod
    def constant(cls, value=1, m: int | None = None) -> "MixedMomentProvider":
        return cls(value=value, m=m)

    @property
    def kind(self) -> str:
        if self.integrand is not None:
            return "numeric"
        return "analytic" if self.table is not None else "constant"

    def __call__(self, word):
        return mixed_moment(self, word)

    def _trace_product(self, key: tuple[int, ...]) -> float:
        # left-to-right, no reordering
        P = self._covs[key[0] - 1]
        for l in key[1:]:
            P = P @ self._covs[l - 1]
        return float(np.trace(P) / P.shape[0])


def mixed_moment(provider: MixedMomentProvider, key):
    """Value of ``M_l^k`` for the word ``key``."""
    key = canonical_key(key)
    if provider.m is not None and (min(key) < 1 or max(key) > provider.m):
        raise ValueError(f"word {key} has entries outside 1..{provider.m}")
    if provider.value is not None:
        return provider.value
    if provider.table is not None:
        try:
            return provider.table[key]
        except KeyError:
            raise KeyError(f"analytic table has no entry for {key}") from None
    with provider._lock:
        hit = provider._cache.get(key)
    if hit is not None:
        return hit
    val = provider._trace_product(key)
    with provider._lock:
        provider._cache.setdefault(key, val)
    return val


def joint_spectrum(specs: Sequence[EnsembleSpec], N: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Atoms and weights of the joint law of ``(T_1T_1^*, …, T_mT_m^*)`` eigenvalues.

    Each family member is a diagonal laid out in the given order, so
    position ``i`` carries one joint atom.  Returns ``(atoms, weights)``
    with ``atoms`` of shape ``(num_atoms, m)``.
    """
    kinds = {s.kind for s in specs}
    if kinds - {"common_basis_diagonal_family", "identity", "scaled_identity"}:
        raise ValueError(f"analytic mixed moments need a common-basis family, got kinds {sorted(kinds)}")
    if N is None:
        N = 1
        for s in specs:
            if s.spectrum is not None:
                N = np.lcm(N, len(s.spectrum))
            elif s.two_point is not None:
                w = s.two_point[2]
                # smallest N making N * w integral
                for cand in range(1, 10_001):
                    if abs(cand * w - round(cand * w)) < 1e-12:
                        N = np.lcm(N, cand)
                        break
                else:
                    raise ValueError(f"weight {w} is not a simple rational")
        N = int(N)
    cols = []
    for s in specs:
        if s.kind == "identity":
            cols.append(np.ones(N))
        elif s.kind == "scaled_identity":
            cols.append(np.full(N, s.scale**2))
        else:
            cols.append(s.diagonal(N, sort=False) ** 2)
    pts = np.stack(cols, axis=1)
    atoms, counts = np.unique(pts, axis=0, return_counts=True)
    return atoms, counts / N


def analytic_mixed_moment(specs: Sequence[EnsembleSpec], key, N: int | None = None) -> float:
    """Closed form for jointly diagonalizable families: ``Σ_atoms w Π_i x_{l_i}``."""
    key = canonical_key(key)
    if max(key) > len(specs):
        raise ValueError(f"word {key} refers to interval {max(key)} but the family has {len(specs)}")
    atoms, weights = joint_spectrum(specs, N)
    prod = np.ones(len(weights))
    for l in key:
        prod = prod * atoms[:, l - 1]
    return float(weights @ prod)


def analytic_table(specs: Sequence[EnsembleSpec], k_max: int) -> dict[tuple[int, ...], float]:
    """All canonical words of length <= k_max for a common-basis family."""
    from itertools import product

    m = len(specs)
    table = {}
    for k in range(1, k_max + 1):
        for w in product(range(1, m + 1), repeat=k):
            key = canonical_key(w)
            if key not in table:
                table[key] = analytic_mixed_moment(specs, key)
    return table


def freeness_defect(integrand: StepIntegrand, word) -> float:
    """Normalized trace of the centered alternating product.

    ``word`` is a sequence of ``(interval, power)`` pairs with adjacent
    intervals distinct.  Values near zero indicate approximate asymptotic
    freeness of the ``T_l T_l^*`` at this ``N``.
    """
    word = [(int(l), int(p)) for l, p in word]
    if not word:
        raise ValueError("empty word")
    for (l1, _), (l2, _) in zip(word, word[1:]):
        if l1 == l2:
            raise ValueError(f"adjacent factors share interval {l1}")
    for l, p in word:
        if not 1 <= l <= integrand.m or p < 1:
            raise ValueError(f"bad factor ({l}, {p})")
    covs = integrand.covariances()
    N = integrand.N
    P = np.eye(N)
    for l, p in word:
        A = np.linalg.matrix_power(covs[l - 1], p)
        A = A - (np.trace(A) / N) * np.eye(N)
        P = P @ A
    return float(np.trace(P) / N)
