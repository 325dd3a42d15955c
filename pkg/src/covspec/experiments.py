"""Monte Carlo runs, limit computations and reports behind the CLI commands."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rng
from .config import ConfigError, RunConfig
from .limit_formula import EmptyPermutationSetError, compare_formula_oracle, formula_expansion
from .mixed_moments import MixedMomentProvider
from .model import StepIntegrand
from .mp_solver import carleman_bound_check, solve_grid
from .qgraph import evaluate_expansion, oracle_moment_expansion
from .simulate import modified_estimator, simulate_gram, simulate_increments, simulate_path_covariation
from .spectra import esd, ks_distance


@dataclass
class RepResult:
    rep: int
    seed: int
    eigenvalues: dict  # estimator -> sorted eigenvalues
    moments: dict      # estimator -> array of m_1..m_kmax
    ks_path_gram: float | None = None


def run_rep(integrand: StepIntegrand, n: int, master_seed: int, rep: int,
            estimators=("path", "gram"), k_max: int = 4) -> RepResult:
    """One replication: every requested estimator from the same keyed Gaussians."""
    seed = rng.split_seed(master_seed, rep)
    mats = {}
    if "path" in estimators or "modified" in estimators:
        D = simulate_increments(integrand, n, seed)
        if "path" in estimators:
            mats["path"] = simulate_path_covariation(integrand, n, seed, rep, increments=D)
        if "modified" in estimators:
            mats["modified"] = modified_estimator(D, n)
    if "gram" in estimators:
        mats["gram"] = simulate_gram(integrand, n, seed, rep)
    esds = {name: esd(cm.entries) for name, cm in mats.items()}
    res = RepResult(
        rep, seed,
        {name: d.eigenvalues for name, d in esds.items()},
        {name: d.moments(k_max) for name, d in esds.items()},
    )
    if "path" in esds and "gram" in esds:
        res.ks_path_gram = ks_distance(esds["path"], esds["gram"])
    return res


def run_reps(integrand: StepIntegrand, n: int, master_seed: int, reps: int,
             estimators=("path", "gram"), k_max: int = 4, threads: int = 1) -> list[RepResult]:
    """Independent replications, returned in rep order whatever the thread count."""
    job = lambda rep: run_rep(integrand, n, master_seed, rep, estimators, k_max)
    if threads <= 1:
        return [job(rep) for rep in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(reps)))


def aggregate_moments(results: list[RepResult], estimator: str) -> tuple[np.ndarray, np.ndarray]:
    """Mean and Monte Carlo standard error of each moment, summed in rep order."""
    M = np.stack([r.moments[estimator] for r in sorted(results, key=lambda r: r.rep)])
    mean = M.mean(axis=0)
    stderr = M.std(axis=0, ddof=1) / math.sqrt(len(M)) if len(M) > 1 else np.full(M.shape[1], np.nan)
    return mean, stderr


def provider_for(cfg: RunConfig, integrand: StepIntegrand) -> MixedMomentProvider:
    mm = cfg.model.mixed_moments
    if mm and "table" in mm:
        return MixedMomentProvider.analytic({tuple(w): v for w, v in mm["table"]}, m=integrand.m)
    if mm and "constant" in mm:
        return MixedMomentProvider.constant(mm["constant"], m=integrand.m)
    return MixedMomentProvider.numeric(integrand)


def limit_moments(k_max: int, c, deltas, provider: MixedMomentProvider, mode: str = "stabilizer",
                  k_cap: int = 6, m_cap: int = 3, with_formula: bool = True) -> list[dict]:
    """Oracle (and closed-form) limiting moments with their expansions."""
    if k_max > k_cap:
        raise ConfigError(f"run.k_max={k_max} exceeds oracle.k_cap={k_cap}")
    m = len(deltas)
    out = []
    for k in range(1, k_max + 1):
        e = oracle_moment_expansion(k, m, k_cap=k_cap, m_cap=m_cap)
        rec = {"k": k, "oracle": float(evaluate_expansion(e, c, deltas, provider)),
               "oracle_expansion": e.to_json()}
        if with_formula:
            try:
                fe = formula_expansion(k, m, mode, k_cap=k_cap, m_cap=m_cap).expansion
                rec["formula"] = float(evaluate_expansion(fe, c, deltas, provider))
                rec["formula_expansion"] = fe.to_json()
            except EmptyPermutationSetError as exc:
                rec["formula"] = None
                rec["formula_error"] = str(exc)
        out.append(rec)
    return out


def carleman_report(k_pairs: int, m: int, tau0: float, c: float, deltas, provider, k_cap: int = 6):
    """Carleman check on oracle moments ``m_1..m_{2 k_pairs}``."""
    moments = []
    for k in range(1, 2 * k_pairs + 1):
        e = oracle_moment_expansion(k, m, k_cap=max(k_cap, 2 * k_pairs))
        moments.append(evaluate_expansion(e, c, deltas, provider))
    return carleman_bound_check(moments, m, tau0, c, deltas)


def variance_scan(cfg: RunConfig, N_ladder=None, reps=None, estimator: str = "gram", k_max=None,
                  threads: int | None = None) -> dict:
    """Spread of ``m_k`` across replications along a ladder of ``N`` at fixed ``c``."""
    model = cfg.model
    N_ladder = list(N_ladder or cfg.run.N_ladder)
    reps = reps or cfg.run.reps
    k_max = k_max or cfg.run.k_max
    threads = threads or cfg.run.threads
    c = Fraction(model.N, model.n)
    rows = []
    for N in N_ladder:
        n = N / c
        if n.denominator != 1:
            raise ConfigError(f"run.N_ladder: N={N} gives non-integer n at c={c}")
        integrand = model.integrand(cfg.run.master_seed, N)
        results = run_reps(integrand, int(n), cfg.run.master_seed, reps, (estimator,), k_max, threads)
        M = np.stack([r.moments[estimator] for r in results])
        for k in range(1, k_max + 1):
            rows.append({"N": N, "n": int(n), "k": k, "mean": float(M[:, k - 1].mean()),
                         "std": float(M[:, k - 1].std(ddof=1))})
    slopes = {}
    for k in range(1, k_max + 1):
        pts = [(math.log(r["N"]), math.log(r["std"])) for r in rows if r["k"] == k and r["std"] > 0]
        if len(pts) >= 2:
            x, y = np.array(pts).T
            slopes[k] = float(np.polyfit(x, y, 1)[0])
    return {"c": float(c), "estimator": estimator, "reps": reps, "rows": rows, "loglog_slopes": slopes}


def mp_grid(cfg: RunConfig):
    mp = cfg.mp
    c = mp.c if mp.c is not None else (cfg.model.c if cfg.model else None)
    if c is None:
        raise ConfigError("mp.c: required when no model section is given")
    law = mp.spectral_law()
    energies = None
    if mp.e_min is not None or mp.e_max is not None:
        if mp.e_min is None or mp.e_max is None:
            raise ConfigError("mp.grid: give both e_min and e_max or neither")
        energies = np.linspace(mp.e_min, mp.e_max, mp.points)
    return solve_grid(law, c, energies, mp.eta, mp.damping, mp.tol, mp.max_iter, mp.points)


def comparison_table(results, estimators, limits) -> list[dict]:
    rows = []
    for est in estimators:
        mean, se = aggregate_moments(results, est)
        for rec in limits:
            k = rec["k"]
            emp, ora = float(mean[k - 1]), rec["oracle"]
            rows.append({"estimator": est, "k": k, "empirical": emp, "stderr": float(se[k - 1]),
                         "oracle": ora, "abs_err": abs(emp - ora),
                         "rel_err": abs(emp - ora) / abs(ora) if ora else None})
    return rows


def formula_audits(k_max: int, m: int, mode: str) -> list[dict]:
    return [compare_formula_oracle(k, m, mode) for k in range(1, k_max + 1)]
