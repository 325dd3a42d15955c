"""Step integrands and the matrix ensembles that populate them."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import rng

NORM_SLACK = 1e-8

KINDS = (
    "identity",
    "scaled_identity",
    "diagonal_from_spectrum",
    "common_basis_diagonal_family",
    "haar_rotated_diagonal",
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def operator_norm(T, tol: float = 1e-8) -> float:
    """Largest singular value of a square matrix.

    LAPACK's SVD is accurate to a few ulps of the largest singular value,
    well inside ``tol``.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"operator_norm expects a square matrix, got shape {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError("matrix has non-finite entries")
    if T.size == 0:
        return 0.0
    return float(np.linalg.svd(T, compute_uv=False)[0])


@dataclass(frozen=True)
class StepIntegrand:
    """Piecewise-constant integrand ``f_t = T_l`` on ``[t_{l-1}, t_l)``."""

    breakpoints: tuple[float, ...]
    matrices: tuple[np.ndarray, ...]
    tau0: float

    def __post_init__(self):
        t = tuple(float(x) for x in self.breakpoints)
        if len(t) < 2:
            raise ValueError("need at least two breakpoints")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValueError(f"breakpoints must start at 0 and end at 1, got {t[0]} and {t[-1]}")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError(f"breakpoints must be strictly increasing: {t}")
        mats = tuple(_frozen(T) for T in self.matrices)
        if len(mats) != len(t) - 1:
            raise ValueError(f"{len(t) - 1} intervals but {len(mats)} matrices")
        N = mats[0].shape[0]
        for l, T in enumerate(mats, start=1):
            if T.ndim != 2 or T.shape != (N, N) or N < 1:
                raise ValueError(f"T_{l} has shape {T.shape}, expected ({N}, {N})")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        for l, T in enumerate(mats, start=1):
            norm = operator_norm(T)
            if norm > self.tau0 * (1 + NORM_SLACK):
                raise ValueError(f"||T_{l}||_op = {norm!r} exceeds tau0 = {self.tau0!r}")
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "tau0", float(self.tau0))

    @property
    def m(self) -> int:
        return len(self.matrices)

    @property
    def N(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def deltas(self) -> tuple[float, ...]:
        t = self.breakpoints
        return tuple(b - a for a, b in zip(t, t[1:]))

    def covariances(self) -> tuple[np.ndarray, ...]:
        """The products ``T_l T_l^*``."""
        return tuple(T @ T.T for T in self.matrices)


@dataclass(frozen=True)
class ModelConfig:
    N: int
    n: int
    master_seed: int = 0
    reps: int = 1

    def __post_init__(self):
        if self.N < 1 or self.n < 1:
            raise ValueError("N and n must be positive integers")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if not 0 <= self.master_seed <= rng.MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def c(self) -> Fraction:
        return Fraction(self.N, self.n)


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for one ``T_l``.

    ``spectrum`` is either an explicit list of diagonal values or a
    two-point law ``(value_a, value_b, weight_a)``; ``scale`` is used by
    ``scaled_identity``.  ``rotate`` applies a basis rotation shared by all
    members of a ``common_basis_diagonal_family``.
    """

    kind: str
    scale: float = 1.0
    spectrum: tuple[float, ...] | None = None
    two_point: tuple[float, float, float] | None = None
    rotate: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected one of {KINDS}")
        if self.spectrum is not None:
            object.__setattr__(self, "spectrum", tuple(float(x) for x in self.spectrum))
        if self.two_point is not None:
            a, b, w = (float(x) for x in self.two_point)
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"two-point weight {w} outside [0, 1]")
            object.__setattr__(self, "two_point", (a, b, w))
        if self.kind in ("diagonal_from_spectrum", "common_basis_diagonal_family", "haar_rotated_diagonal"):
            if (self.spectrum is None) == (self.two_point is None):
                raise ValueError(f"{self.kind} needs exactly one of spectrum or two_point")

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        known = {"kind", "scale", "spectrum", "two_point", "rotate"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown ensemble fields {sorted(extra)}")
        kw = dict(d)
        if "two_point" in kw and isinstance(kw["two_point"], dict):
            tp = kw["two_point"]
            kw["two_point"] = (tp["value_a"], tp["value_b"], tp["weight_a"])
        return cls(**kw)

    def diagonal(self, N: int, *, sort: bool) -> np.ndarray:
        """Diagonal values block-replicated to length ``N``."""
        if self.two_point is not None:
            a, b, w = self.two_point
            count_a = N * w
            if abs(count_a - round(count_a)) > 1e-9:
                raise ValueError(f"two-point weight {w} does not split N={N} into whole blocks")
            count_a = int(round(count_a))
            values = np.array([a] * count_a + [b] * (N - count_a), dtype=float)
        else:
            spec = np.asarray(self.spectrum, dtype=float)
            if spec.size == 0 or N % spec.size:
                raise ValueError(f"spectrum of length {spec.size} does not divide N={N}")
            values = np.repeat(spec, N // spec.size)
        if np.any(values < 0):
            raise ValueError("spectrum entries must be nonnegative")
        return np.sort(values) if sort else values


def haar_orthogonal(N: int, seed: int, *counter: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix: Q of a Gaussian QR with diag(R) > 0."""
    gen = rng.keyed_generator(seed, rng.TAG_ENSEMBLE, *counter)
    Z = gen.standard_normal((N, N))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def build_matrix(spec: EnsembleSpec, N: int, seed: int, l: int) -> np.ndarray:
    if spec.kind == "identity":
        return np.eye(N)
    if spec.kind == "scaled_identity":
        return spec.scale * np.eye(N)
    if spec.kind == "diagonal_from_spectrum":
        return np.diag(spec.diagonal(N, sort=True))
    if spec.kind == "common_basis_diagonal_family":
        D = np.diag(spec.diagonal(N, sort=False))
        if spec.rotate:
            # counter 0 is shared by the whole family
            Q = haar_orthogonal(N, seed, 0)
            return Q @ D @ Q.T
        return D
    if spec.kind == "haar_rotated_diagonal":
        Q = haar_orthogonal(N, seed, l)
        return Q @ np.diag(spec.diagonal(N, sort=True)) @ Q.T
    raise AssertionError(spec.kind)


def build_integrand(specs: Sequence[EnsembleSpec], breakpoints: Sequence[float], N: int,
                    seed: int = 0, tau0: float | None = None) -> StepIntegrand:
    """Materialize ``T_1..T_m`` from ensemble recipes.

    Interval ``l`` (1-based) draws its rotation from counter ``l``, so
    adding an interval never changes the matrices of the others.  When
    ``tau0`` is omitted the largest operator norm is used as the cap.
    """
    if len(specs) != len(breakpoints) - 1:
        raise ValueError(f"{len(specs)} ensemble specs for {len(breakpoints) - 1} intervals")
    if N < 1:
        raise ValueError("N must be positive")
    specs = [s if isinstance(s, EnsembleSpec) else EnsembleSpec.from_dict(s) for s in specs]
    mats = [build_matrix(s, N, seed, l) for l, s in enumerate(specs, start=1)]
    if tau0 is None:
        tau0 = max(max(operator_norm(T) for T in mats), 1e-300)
    return StepIntegrand(tuple(breakpoints), tuple(mats), tau0)
