"""Simulated covariation matrices: path estimator, Gram form, modified estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .model import StepIntegrand

ESTIMATOR_KINDS = ("path", "gram", "modified")
# slack when taking the integer part of n * (t_l - t_{l-1}) in floating point
FLOOR_SLACK = 1e-9


@dataclass(frozen=True)
class CovariationMatrix:
    entries: np.ndarray
    estimator_kind: str
    provenance: tuple = ()

    def __post_init__(self):
        if self.estimator_kind not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator kind {self.estimator_kind!r}")
        A = np.asarray(self.entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"covariation matrix must be square, got {A.shape}")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A), initial=0.0)):
            raise ValueError("covariation matrix is not symmetric")
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue_ok(self) -> bool:
        """PSD check with the relative slack used throughout the package."""
        ev = np.linalg.eigvalsh(self.entries)
        return bool(ev[0] >= -1e-9 * max(np.trace(self.entries) / self.N, 1e-300))


def overlap_lengths(breakpoints, n: int) -> list[list[tuple[int, float]]]:
    """For every interval ``l``, the pairs ``(i, |((i-1)/n, i/n] ∩ [t_{l-1}, t_l)|)``
    with positive overlap, ``i`` ascending and 1-based."""
    out = []
    for lo, hi in zip(breakpoints, breakpoints[1:]):
        first = max(1, math.floor(lo * n))
        last = min(n, math.ceil(hi * n) + 1)
        pairs = []
        for i in range(first, last + 1):
            lam = min(i / n, hi) - max((i - 1) / n, lo)
            if lam > 0:
                pairs.append((i, lam))
        out.append(pairs)
    return out


def block_sizes(integrand: StepIntegrand, n: int) -> list[int]:
    """Column counts ``floor(n * Δt_l)`` of the Gram blocks."""
    sizes = []
    for l, d in enumerate(integrand.deltas, start=1):
        cols = math.floor(n * d + FLOOR_SLACK)
        if cols < 1:
            lo, hi = integrand.breakpoints[l - 1], integrand.breakpoints[l]
            raise ValueError(f"interval {l} = [{lo}, {hi}) has n*Δt = {n * d:.6g} < 1: empty Gram block")
        sizes.append(cols)
    return sizes


def _gaussian_block(seed: int, N: int, l: int, indices) -> np.ndarray:
    """Columns ``z_{i,l}`` for the given increment indices, as an N x len(indices) array."""
    Z = np.empty((N, len(indices)))
    for col, i in enumerate(indices):
        Z[:, col] = rng.gaussian_vector(seed, N, l, i)
    return Z


def simulate_increments(integrand: StepIntegrand, n: int, seed: int) -> np.ndarray:
    """Increments ``Δ_i X = Σ_l T_l sqrt(λ_{i,l}) z_{i,l}`` as columns of an N x n array."""
    if n < 1:
        raise ValueError("n must be >= 1")
    N = integrand.N
    D = np.zeros((N, n))
    for l, (T, pairs) in enumerate(zip(integrand.matrices, overlap_lengths(integrand.breakpoints, n)), start=1):
        if not pairs:
            continue
        idx = np.array([i for i, _ in pairs])
        scale = np.sqrt(np.array([lam for _, lam in pairs]))
        Z = _gaussian_block(seed, N, l, idx)
        D[:, idx - 1] += T @ (Z * scale)
    return D


def simulate_path_covariation(integrand: StepIntegrand, n: int, seed: int, rep: int = 0,
                              increments: np.ndarray | None = None) -> CovariationMatrix:
    """Realized covariation ``Σ_i Δ_iX Δ_iX^T`` of the simulated path."""
    D = simulate_increments(integrand, n, seed) if increments is None else increments
    return CovariationMatrix(D @ D.T, "path", (integrand.N, n, seed, rep))


def simulate_gram(integrand: StepIntegrand, n: int, seed: int, rep: int = 0) -> CovariationMatrix:
    """Gram form ``(1/n) Σ_l T_l Y_l Y_l^T T_l^T`` with ``floor(n Δt_l)`` columns in ``Y_l``.

    Column ``j`` of ``Y_l`` reuses the Gaussian of the ``j``-th increment
    overlapping interval ``l``, which couples it to the path estimator.
    """
    N = integrand.N
    sizes = block_sizes(integrand, n)
    out = np.zeros((N, N))
    for l, (T, pairs, cols) in enumerate(
            zip(integrand.matrices, overlap_lengths(integrand.breakpoints, n), sizes), start=1):
        idx = [i for i, _ in pairs][:cols]
        if len(idx) < cols:
            # only reachable through FLOOR_SLACK; extend past the interval
            idx += list(range(n + 1, n + 1 + cols - len(idx)))
        W = T @ _gaussian_block(seed, N, l, idx)
        out += W @ W.T
    return CovariationMatrix(out / n, "gram", (N, n, seed, rep))


def modified_estimator(increments, n: int) -> CovariationMatrix:
    """Trace-rescaled sum of normalized rank-one increments.

    ``(tr[X] / n) Σ_i Δ_iX Δ_iX^T / |Δ_iX|^2``; its trace equals ``tr[X]``.
    """
    D = np.asarray(increments, dtype=float)
    if D.ndim == 1:
        D = D[None, :]
    if D.ndim != 2:
        raise ValueError("increments must be a list of N-vectors")
    # accept both a list of vectors (n x N) and the N x n column layout
    if isinstance(increments, (list, tuple)):
        D = D.T
    if D.shape[1] != n:
        raise ValueError(f"expected {n} increments, got {D.shape[1]}")
    norms2 = np.einsum("ij,ij->j", D, D)
    bad = np.flatnonzero(norms2 == 0)
    if bad.size:
        raise ValueError(f"increment {int(bad[0]) + 1} has zero norm")
    trace_x = float(norms2.sum())
    U = D / np.sqrt(norms2)
    return CovariationMatrix((trace_x / n) * (U @ U.T), "modified", (D.shape[0], n))
