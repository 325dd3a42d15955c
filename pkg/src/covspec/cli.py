"""Command line entry point: ``covspec simulate|limit|compare|variance-scan|mp-solve``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, RunConfig, load_config
from .mp_solver import CSV_COLUMNS, NonConvergenceError

log = logging.getLogger("covspec")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

MOMENT_COLUMNS = ("source", "estimator", "k", "value", "stderr", "N", "n", "c", "rep")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if np.isnan(x) else format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, cfg: RunConfig, columns, rows):
    buf = io.StringIO()
    buf.write(cfg.header_comment() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_json(path: Path, cfg: RunConfig, payload: dict):
    doc = {"covspec_version": cfg.header_comment().split()[2], "config_sha256": cfg.config_hash()}
    doc.update(_jsonable(payload))
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def _require_model(cfg: RunConfig):
    if cfg.model is None:
        raise ConfigError("model: required for this command")


def _simulate(cfg: RunConfig):
    _require_model(cfg)
    model, run = cfg.model, cfg.run
    integrand = model.integrand(run.master_seed)
    results = ex.run_reps(integrand, model.n, run.master_seed, run.reps, run.estimators, run.k_max, run.threads)
    return integrand, results


def moment_rows(cfg: RunConfig, results):
    model, run = cfg.model, cfg.run
    rows = []
    for est in run.estimators:
        for r in results:
            for k in range(1, run.k_max + 1):
                rows.append(["empirical", est, k, r.moments[est][k - 1], None, model.N, model.n, model.c, r.rep])
        mean, se = ex.aggregate_moments(results, est)
        for k in range(1, run.k_max + 1):
            rows.append(["empirical_mean", est, k, mean[k - 1], se[k - 1], model.N, model.n, model.c, "all"])
    return rows


def histogram_rows(cfg: RunConfig, results, est: str):
    ev = np.concatenate([r.eigenvalues[est] for r in results])
    hi = float(ev.max()) if ev.size else 1.0
    edges = np.linspace(min(0.0, float(ev.min())), hi if hi > 0 else 1.0, cfg.run.histogram_bins + 1)
    counts, _ = np.histogram(ev, bins=edges)
    dens = counts / (ev.size * np.diff(edges))
    return [[edges[i], edges[i + 1], int(counts[i]), dens[i]] for i in range(len(counts))]


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    integrand, results = _simulate(cfg)
    write_csv(out / "moments.csv", cfg, MOMENT_COLUMNS, moment_rows(cfg, results))
    for est in cfg.run.estimators:
        write_csv(out / f"esd_hist_{est}.csv", cfg, ("lo", "hi", "count", "density"),
                  histogram_rows(cfg, results, est))
    if all(r.ks_path_gram is not None for r in results):
        write_csv(out / "ks_path_gram.csv", cfg, ("rep", "ks_distance", "bound_4m_over_N"),
                  [[r.rep, r.ks_path_gram, 4 * integrand.m / integrand.N] for r in results])
    return EXIT_OK


def _limits(cfg: RunConfig, integrand):
    model = cfg.model
    provider = ex.provider_for(cfg, integrand)
    return ex.limit_moments(cfg.run.k_max, model.c, integrand.deltas, provider, cfg.formula_mode,
                            cfg.oracle.k_cap, cfg.oracle.m_cap), provider


def cmd_limit(cfg: RunConfig, out: Path) -> int:
    _require_model(cfg)
    integrand = cfg.model.integrand(cfg.run.master_seed)
    limits, provider = _limits(cfg, integrand)
    pairs = max(1, cfg.oracle.k_cap // 2)
    carleman = ex.carleman_report(pairs, integrand.m, integrand.tau0, cfg.model.c, integrand.deltas,
                                  provider, cfg.oracle.k_cap)
    model = cfg.model
    rows = []
    for rec in limits:
        rows.append(["oracle", "", rec["k"], rec["oracle"], None, model.N, model.n, model.c, ""])
        if rec.get("formula") is not None:
            rows.append(["formula", "", rec["k"], rec["formula"], None, model.N, model.n, model.c, ""])
    write_csv(out / "moments.csv", cfg, MOMENT_COLUMNS, rows)
    write_json(out / "limit.json", cfg, {"provider": provider.kind, "mode": cfg.formula_mode,
                                         "moments": limits, "carleman": carleman.to_json()})
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out: Path) -> int:
    integrand, results = _simulate(cfg)
    limits, provider = _limits(cfg, integrand)
    table = ex.comparison_table(results, cfg.run.estimators, limits)
    audits = ex.formula_audits(min(cfg.run.k_max, 3), integrand.m, cfg.formula_mode)
    write_csv(out / "moments.csv", cfg, MOMENT_COLUMNS, moment_rows(cfg, results) + [
        ["oracle", "", rec["k"], rec["oracle"], None, cfg.model.N, cfg.model.n, cfg.model.c, ""] for rec in limits])
    ks = [r.ks_path_gram for r in results if r.ks_path_gram is not None]
    write_json(out / "compare.json", cfg, {
        "provider": provider.kind, "table": table, "formula_audit": audits,
        "ks_path_gram": {"values": ks, "bound": 4 * integrand.m / integrand.N},
    })
    return EXIT_OK


def cmd_variance_scan(cfg: RunConfig, out: Path) -> int:
    _require_model(cfg)
    est = "gram" if "gram" in cfg.run.estimators else cfg.run.estimators[0]
    report = ex.variance_scan(cfg, estimator=est)
    write_csv(out / "variance.csv", cfg, ("N", "n", "k", "mean", "std"),
              [[r["N"], r["n"], r["k"], r["mean"], r["std"]] for r in report["rows"]])
    write_json(out / "variance.json", cfg, report)
    return EXIT_OK


def cmd_mp_solve(cfg: RunConfig, out: Path) -> int:
    grid = ex.mp_grid(cfg)
    write_csv(out / "mp_grid.csv", cfg, CSV_COLUMNS, grid.to_csv_rows())
    ok = bool(np.all(grid.converged))
    write_json(out / "mp_summary.json", cfg, {
        "c": grid.c, "eta": grid.eta, "points": len(grid.energies), "all_converged": ok,
        "unconverged_energies": [float(E) for E, c in zip(grid.energies, grid.converged) if not c],
        "max_residual": float(np.max(grid.residuals)), "mass": grid.mass() if ok else None,
        "atom_at_zero": grid.atom_at_zero,
    })
    if not ok:
        raise NonConvergenceError("MP solver left grid points unconverged", float(np.max(grid.residuals)))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "limit": cmd_limit,
    "compare": cmd_compare,
    "variance-scan": cmd_variance_scan,
    "mp-solve": cmd_mp_solve,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covspec", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="path to the JSON run configuration")
    p.add_argument("--threads", type=int, default=None, help="override run.threads")
    p.add_argument("--out", default=None, help="override output.directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be ≥ 1")
            cfg.run.threads = args.threads
        out = Path(args.out or cfg.out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            probe = out / ".covspec_write_test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output.directory: {out} is not writable ({exc})") from None
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"covspec: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"covspec: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"covspec: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
