"""Run configuration: a single JSON object validated into dataclasses."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .model import EnsembleSpec, build_integrand
from .mp_solver import SpectralLaw
from .simulate import ESTIMATOR_KINDS


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


def _get(d: dict, key: str, path: str, default=..., kind=None):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}: required field missing")
        return default
    val = d[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{path}.{key}: expected {getattr(kind, '__name__', kind)}, got {val!r}")
    return val


def _check_keys(d: dict, allowed: set, path: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{path}: unknown fields {sorted(extra)}")


@dataclass
class ModelSection:
    N: int
    n: int
    breakpoints: list
    ensembles: list
    tau0: float | None = None
    mixed_moments: dict | None = None  # optional analytic table {"table": [[word, value], ...]}

    @property
    def c(self) -> float:
        return self.N / self.n

    @property
    def m(self) -> int:
        return len(self.ensembles)

    def specs(self) -> list[EnsembleSpec]:
        return [EnsembleSpec.from_dict(e) for e in self.ensembles]

    def integrand(self, seed: int, N: int | None = None):
        return build_integrand(self.specs(), self.breakpoints, N or self.N, seed, self.tau0)


@dataclass
class RunSection:
    master_seed: int = 0
    reps: int = 1
    k_max: int = 4
    threads: int = 1
    estimators: list = field(default_factory=lambda: ["path", "gram"])
    N_ladder: list = field(default_factory=lambda: [100, 200, 400])
    histogram_bins: int = 50


@dataclass
class OracleSection:
    k_cap: int = 6
    m_cap: int = 3


@dataclass
class MPSection:
    c: float | None = None
    law: dict | None = None
    e_min: float | None = None
    e_max: float | None = None
    points: int = 400
    eta: float = 1e-3
    tol: float = 1e-10
    damping: float = 0.5
    max_iter: int = 10_000

    def spectral_law(self) -> SpectralLaw:
        return SpectralLaw.from_dict(self.law or {"atoms": [1.0], "weights": [1.0]})


@dataclass
class RunConfig:
    model: ModelSection | None
    run: RunSection
    oracle: OracleSection
    formula_mode: str
    mp: MPSection
    out_dir: str
    formats: list
    raw: dict

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON, ignoring thread count and output location."""
        raw = copy.deepcopy(self.raw)
        raw.get("run", {}).pop("threads", None)
        raw.pop("output", None)
        blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def header_comment(self) -> str:
        return f"# covspec {__version__} config_sha256={self.config_hash()}"


def _int(d, key, path, default=..., minimum=None):
    if key not in d and default is not ...:
        return default
    val = _get(d, key, path)
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{path}.{key} must be ≥ {minimum}, got {val}")
    return val


def _float(d, key, path, default=..., positive=False):
    if key not in d and default is not ...:
        return default
    val = _get(d, key, path)
    if val is None:
        return val
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}: expected a number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key} must be positive, got {val}")
    return float(val)


def parse_config(raw: dict) -> RunConfig:
    _check_keys(raw, {"model", "run", "oracle", "formula", "mp", "output"}, "config")

    model = None
    if "model" in raw:
        md = raw["model"]
        _check_keys(md, {"N", "n", "breakpoints", "ensembles", "tau0", "mixed_moments"}, "model")
        N = _int(md, "N", "model", minimum=1)
        n = _int(md, "n", "model", minimum=1)
        bps = _get(md, "breakpoints", "model", kind=list)
        ens = _get(md, "ensembles", "model", kind=list)
        if len(ens) != len(bps) - 1:
            raise ConfigError(f"model.ensembles: {len(ens)} entries for {len(bps) - 1} intervals")
        for i, e in enumerate(ens):
            try:
                EnsembleSpec.from_dict(e)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"model.ensembles[{i}]: {exc}") from None
        model = ModelSection(N, n, [float(x) for x in bps], ens, _float(md, "tau0", "model", None, positive=True),
                             md.get("mixed_moments"))
        try:
            model.integrand(0)
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from None

    rd = raw.get("run", {})
    _check_keys(rd, {"master_seed", "reps", "k_max", "threads", "estimators", "N_ladder", "histogram_bins"}, "run")
    run = RunSection(
        master_seed=_int(rd, "master_seed", "run", 0, minimum=0),
        reps=_int(rd, "reps", "run", 1, minimum=1),
        k_max=_int(rd, "k_max", "run", 4),
        threads=_int(rd, "threads", "run", 1, minimum=1),
        estimators=list(_get(rd, "estimators", "run", ["path", "gram"], kind=list)),
        N_ladder=list(_get(rd, "N_ladder", "run", [100, 200, 400], kind=list)),
        histogram_bins=_int(rd, "histogram_bins", "run", 50, minimum=1),
    )
    if run.k_max < 1:
        raise ConfigError("run.k_max must be ≥ 1")
    if run.master_seed >= 1 << 64:
        raise ConfigError("run.master_seed must fit in 64 bits")
    for e in run.estimators:
        if e not in ESTIMATOR_KINDS:
            raise ConfigError(f"run.estimators: unknown estimator {e!r}")
    for N in run.N_ladder:
        if not isinstance(N, int) or N < 1:
            raise ConfigError(f"run.N_ladder: {N!r} is not a positive integer")

    od = raw.get("oracle", {})
    _check_keys(od, {"k_cap", "m_cap"}, "oracle")
    oracle = OracleSection(_int(od, "k_cap", "oracle", 6, minimum=1), _int(od, "m_cap", "oracle", 3, minimum=1))

    fd = raw.get("formula", {})
    _check_keys(fd, {"mode"}, "formula")
    mode = fd.get("mode", "stabilizer")
    if mode not in ("literal", "stabilizer"):
        raise ConfigError(f"formula.mode: expected 'literal' or 'stabilizer', got {mode!r}")

    pd = raw.get("mp", {})
    _check_keys(pd, {"c", "law", "grid", "tol", "damping", "max_iter"}, "mp")
    gd = pd.get("grid", {})
    _check_keys(gd, {"e_min", "e_max", "points", "eta"}, "mp.grid")
    mp = MPSection(
        c=_float(pd, "c", "mp", None, positive=True),
        law=pd.get("law"),
        e_min=_float(gd, "e_min", "mp.grid", None),
        e_max=_float(gd, "e_max", "mp.grid", None),
        points=_int(gd, "points", "mp.grid", 400, minimum=2),
        eta=_float(gd, "eta", "mp.grid", 1e-3, positive=True),
        tol=_float(pd, "tol", "mp", 1e-10, positive=True),
        damping=_float(pd, "damping", "mp", 0.5, positive=True),
        max_iter=_int(pd, "max_iter", "mp", 10_000, minimum=1),
    )
    if mp.damping > 1:
        raise ConfigError("mp.damping must lie in (0, 1]")
    if mp.law is not None:
        try:
            mp.spectral_law()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"mp.law: {exc}") from None

    outd = raw.get("output", {})
    _check_keys(outd, {"directory", "formats"}, "output")
    out_dir = outd.get("directory", "out")
    formats = list(outd.get("formats", ["csv", "json"]))

    if model is not None:
        if model.m > oracle.m_cap:
            raise ConfigError(f"model.ensembles: m={model.m} exceeds oracle.m_cap={oracle.m_cap}")
    return RunConfig(model, run, oracle, mode, mp, out_dir, formats, raw)


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    return parse_config(raw)
