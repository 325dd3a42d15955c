"""Empirical spectral distributions and their moments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class EmpiricalSpectralDistribution:
    """``F^A(x) = #{j : lambda_j <= x} / N`` stored as sorted eigenvalues."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.sort(np.asarray(self.eigenvalues, dtype=float).ravel())
        if ev.size == 0:
            raise ValueError("an ESD needs at least one eigenvalue")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def N(self) -> int:
        return self.eigenvalues.size

    def cdf(self, x) -> np.ndarray:
        return np.searchsorted(self.eigenvalues, x, side="right") / self.N

    def moment(self, k: int) -> float:
        return esd_moment(self, k)

    def moments(self, k_max: int) -> np.ndarray:
        """Moments 1..k_max in one pass."""
        ev = self.eigenvalues
        return np.array([np.mean(ev**k) for k in range(1, k_max + 1)])


def _check_symmetric(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return A


def esd(A) -> EmpiricalSpectralDistribution:
    """ESD of a real symmetric matrix via a dense symmetric eigensolver."""
    A = _check_symmetric(A)
    # eigvalsh reads one triangle only; symmetrize so both triangles count
    return EmpiricalSpectralDistribution(np.linalg.eigvalsh(0.5 * (A + A.T)))


def esd_moment(d, k: int) -> float:
    """``(1/N) sum_j lambda_j^k``; a matrix argument uses ``tr(A^k)/N`` instead."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(d, EmpiricalSpectralDistribution):
        return float(np.mean(d.eigenvalues**k))
    A = _check_symmetric(d)
    return float(np.trace(np.linalg.matrix_power(A, k)) / A.shape[0])


def ks_distance(d1: EmpiricalSpectralDistribution, d2: EmpiricalSpectralDistribution) -> float:
    """Exact sup-distance between two ESD step functions.

    Both CDFs are right-continuous steps, so the supremum is attained at
    one of the pooled jump points.
    """
    pts = np.concatenate([d1.eigenvalues, d2.eigenvalues])
    return float(np.max(np.abs(d1.cdf(pts) - d2.cdf(pts))))
