"""Stieltjes transforms, the Marčenko–Pastur fixed point, and density recovery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SpectralLaw:
    """Discrete population law ``Σ w_j δ_{x_j}``, or the MP law with a given ratio."""

    atoms: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    mp_ratio: float | None = None

    def __post_init__(self):
        if self.mp_ratio is not None:
            if self.atoms or self.weights:
                raise ValueError("an MP reference law carries no atoms")
            if not self.mp_ratio > 0:
                raise ValueError("MP ratio must be positive")
            return
        x = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.size == 0 or x.shape != w.shape:
            raise ValueError("atoms and weights must be non-empty and of equal length")
        if np.any(x < 0):
            raise ValueError("atoms must be nonnegative")
        if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "atoms", tuple(float(v) for v in x[order]))
        object.__setattr__(self, "weights", tuple(float(v) for v in w[order]))

    @classmethod
    def point(cls, x: float = 1.0) -> "SpectralLaw":
        return cls((x,), (1.0,))

    @classmethod
    def from_eigenvalues(cls, eigenvalues) -> "SpectralLaw":
        vals, counts = np.unique(np.asarray(eigenvalues, dtype=float), return_counts=True)
        return cls(tuple(vals), tuple(counts / counts.sum()))

    @classmethod
    def mp_reference(cls, ratio: float) -> "SpectralLaw":
        return cls(mp_ratio=ratio)

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralLaw":
        if "mp_ratio" in d:
            return cls.mp_reference(d["mp_ratio"])
        return cls(tuple(d["atoms"]), tuple(d["weights"]))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self.mp_ratio is not None:
            raise ValueError("the MP reference law has no atoms; discretize it first")
        return np.asarray(self.atoms), np.asarray(self.weights)

    def discretize(self, points: int = 2000) -> "SpectralLaw":
        """Atomic approximation of an MP reference law (midpoint rule on its support)."""
        if self.mp_ratio is None:
            return self
        a, b = mp_edges(self.mp_ratio)
        edges = np.linspace(a, b, points + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        w = mp_reference_density(self.mp_ratio, mids) * np.diff(edges)
        atoms, weights = list(mids), list(w)
        atom0 = max(0.0, 1 - 1 / self.mp_ratio)
        if atom0 > 0:
            atoms.insert(0, 0.0)
            weights.insert(0, atom0)
        weights = np.asarray(weights)
        return SpectralLaw(tuple(atoms), tuple(weights / weights.sum()))


def _check_upper(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("z must lie in the upper half plane (Im z > 0)")
    return z


def stieltjes_transform(law: SpectralLaw, z):
    """``∫ dF(x) / (x - z)``."""
    zz = _check_upper(z)
    if law.mp_ratio is not None:
        out = _mp_stieltjes(law.mp_ratio, zz)
    else:
        x, w = law.arrays()
        out = np.sum(w / (x - zz[..., None]), axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def _mp_stieltjes(c: float, z: np.ndarray) -> np.ndarray:
    """Closed-form Stieltjes transform of the MP law (unit variance, ratio ``c``)."""
    disc = np.sqrt((z - 1 - c) ** 2 - 4 * c + 0j)
    cands = [(1 - c - z + sgn * disc) / (2 * c * z) for sgn in (1, -1)]
    # the Herglotz branch has Im > 0
    return np.where(cands[0].imag > 0, cands[0], cands[1])


def _integral_term(x: np.ndarray, w: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.sum(w * x / (1 + x * v[..., None]), axis=-1)


def mp_residual(law: SpectralLaw, c: float, z, v):
    x, w = law.arrays()
    v = np.asarray(v, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return np.abs(z - c * _integral_term(x, w, v) + 1 / v)


def solve_mp_equation(law: SpectralLaw, c: float, z, damping: float = 0.5, tol: float = 1e-10,
                      max_iter: int = 10_000, *, raise_on_failure: bool = True):
    """Solve ``-1/v = z - c ∫ x/(1+xv) dF(x)`` by damped substitution from ``v = -1/z``.

    ``z`` may be an array; each point iterates until its own residual is
    below ``tol``.  Returns ``v`` (and, when ``raise_on_failure`` is false,
    a tuple ``(v, residual, converged)``).
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if not c > 0:
        raise ValueError("c must be positive")
    law = law.discretize()
    zz = np.atleast_1d(_check_upper(z)).astype(complex)
    x, w = law.arrays()
    v = -1 / zz
    res = np.abs(zz - c * _integral_term(x, w, v) + 1 / v)
    active = res >= tol
    for _ in range(max_iter):
        if not active.any():
            break
        va, za = v[active], zz[active]
        step = -1 / (za - c * _integral_term(x, w, va))
        va = (1 - damping) * va + damping * step
        v[active] = va
        res[active] = np.abs(za - c * _integral_term(x, w, va) + 1 / va)
        active = res >= tol
    converged = ~active
    scalar = np.ndim(z) == 0
    if raise_on_failure:
        if not converged.all():
            worst = float(res.max())
            raise NonConvergenceError(
                f"MP fixed point did not converge in {max_iter} iterations (residual {worst:.3e})", worst)
        return complex(v[0]) if scalar else v
    if scalar:
        return complex(v[0]), float(res[0]), bool(converged[0])
    return v, res, converged


def companion_to_esd(v, z, c: float):
    """Stieltjes transform of the ESD from the companion transform: ``m = (v + (1-c)/z) / c``."""
    if c == 0:
        raise ValueError("c must be nonzero")
    return (v + (1 - c) / z) / c


def esd_to_companion(m, z, c: float):
    """Inverse of :func:`companion_to_esd`: ``v = -(1-c)/z + c m``."""
    return -(1 - c) / z + c * m


def mp_edges(c: float) -> tuple[float, float]:
    return (1 - math.sqrt(c)) ** 2, (1 + math.sqrt(c)) ** 2


def mp_reference_density(c: float, x):
    """Continuous part of the MP density ``sqrt((b-x)(x-a)) / (2π c x)``.

    For ``c > 1`` the law also has an atom of mass ``1 - 1/c`` at zero,
    returned separately by :func:`mp_atom_at_zero`.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    a, b = mp_edges(c)
    x = np.asarray(x, dtype=float)
    inside = (x > a) & (x < b) & (x > 0)
    xs = np.where(inside, x, 1.0)
    out = np.where(inside, np.sqrt(np.clip((b - xs) * (xs - a), 0, None)) / (2 * math.pi * c * xs), 0.0)
    return float(out) if out.ndim == 0 else out


def mp_atom_at_zero(c: float) -> float:
    return max(0.0, 1 - 1 / c)


def mp_reference_mass(c: float) -> float:
    """Quadrature of the continuous MP density over its support."""
    a, b = mp_edges(c)
    val, _ = integrate.quad(lambda t: mp_reference_density(c, t), a, b, limit=200)
    return val


@dataclass
class StieltjesGrid:
    energies: np.ndarray
    eta: float
    v_values: np.ndarray = field(default=None)
    m_values: np.ndarray = field(default=None)
    density: np.ndarray = field(default=None)
    residuals: np.ndarray = field(default=None)
    converged: np.ndarray = field(default=None)
    c: float | None = None
    atom_at_zero: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return np.asarray(self.energies) + 1j * self.eta

    def to_csv_rows(self):
        for i, E in enumerate(self.energies):
            v, m = self.v_values[i], self.m_values[i]
            yield [E, self.eta, v.real, v.imag, m.real, m.imag, self.density[i]]

    def mass(self) -> float:
        return float(integrate.trapezoid(self.density, self.energies)) + self.atom_at_zero

    def moment(self, k: int) -> float:
        return float(integrate.trapezoid(self.density * np.asarray(self.energies) ** k, self.energies))


CSV_COLUMNS = ("E", "eta", "re_v", "im_v", "re_m", "im_m", "density")


def default_energies(c: float, law: SpectralLaw, points: int = 400) -> np.ndarray:
    """``points`` energies over ``[max(0, a-0.5), b+0.5]`` of the MP support scaled by the law."""
    a, b = mp_edges(c)
    if law.mp_ratio is None:
        x, _ = law.arrays()
        lo_scale, hi_scale = float(x.min()), float(x.max())
    else:
        lo_scale, hi_scale = mp_edges(law.mp_ratio)
    return np.linspace(max(0.0, a * lo_scale - 0.5), b * max(hi_scale, 1e-12) + 0.5, points)


def density_from_stieltjes(grid: StieltjesGrid) -> np.ndarray:
    """``(1/π) Im m(E + iη)``, small negatives within -1e-9 zeroed; unconverged points are NaN."""
    dens = np.asarray(grid.m_values).imag / math.pi
    if np.any(dens < -1e-9):
        bad = np.flatnonzero(dens < -1e-9)
        raise ValueError(f"negative density {dens[bad[0]]:.3e} at E={grid.energies[bad[0]]}")
    dens = np.where(dens < 0, 0.0, dens)
    if grid.converged is not None:
        dens = np.where(grid.converged, dens, np.nan)
    return dens


def solve_grid(law: SpectralLaw, c: float, energies=None, eta: float = 1e-3, damping: float = 0.5,
               tol: float = 1e-10, max_iter: int = 10_000, points: int = 400) -> StieltjesGrid:
    """Solve the MP equation on ``E + iη`` and recover the sample density.

    Unconverged points are flagged in ``converged`` rather than raising.
    """
    if energies is None:
        energies = default_energies(c, law, points)
    grid = StieltjesGrid(np.asarray(energies, dtype=float), float(eta), c=c)
    v, res, ok = solve_mp_equation(law, c, grid.z, damping, tol, max_iter, raise_on_failure=False)
    grid.v_values, grid.residuals, grid.converged = v, res, ok
    grid.m_values = companion_to_esd(v, grid.z, c)
    grid.density = density_from_stieltjes(grid)
    if c > 1:
        # the atom 1 - 1/c at zero is reported apart from the continuous density
        grid.atom_at_zero = mp_atom_at_zero(c)
        grid.density = np.where(grid.energies < 1e-12, 0.0, grid.density)
    return grid


@dataclass
class CarlemanReport:
    B: float
    checks: list  # (order, moment, bound, ok)
    passed: bool
    statement: str

    def to_json(self) -> dict:
        return {"B": self.B, "passed": self.passed, "statement": self.statement,
                "checks": [{"order": o, "moment": float(mv), "bound": b, "ok": ok} for o, mv, b, ok in self.checks]}


def carleman_bound_check(moments, m: int, tau0: float, c: float, deltas) -> CarlemanReport:
    """Check ``m_{2k} <= B^{2k}`` with ``B = m τ0² (1 + sqrt(c / min Δt))²``.

    ``moments[j]`` is ``m_{j+1}``.  If every available even moment obeys
    the bound, each summand of the Carleman series is at least ``1/B``.
    """
    moments = list(moments)
    if len(moments) < 2:
        raise ValueError("need at least m_1 and m_2")
    B = m * tau0**2 * (1 + math.sqrt(c / min(deltas))) ** 2
    checks = []
    for order in range(2, len(moments) + 1, 2):
        val = moments[order - 1]
        bound = B**order
        checks.append((order, val, bound, bool(val <= bound)))
    passed = all(ok for *_, ok in checks)
    if passed:
        statement = f"Carleman sum diverges: lower bound Σ B^{{-1}} = ∞ (B = {B:g})"
    else:
        statement = "bound violated; Carleman divergence not established"
    return CarlemanReport(B, checks, passed, statement)
