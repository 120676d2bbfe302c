"""Seeded SA ensembles and the run report they produce."""
from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .inclusion import field_sup_norm, wapt_defect_bounds
from .io import write_json, write_measure
from .measures import mass_near, occupation_measure
from .scenarios import ScenarioConfig
from .stochastic import interpolate, noise_sup_stat, sa_run

REPORT_KEYS = ("config", "runs", "aggregates")
# execution settings that must not change the report bytes
_EXECUTION_KEYS = ("out", "jobs")


def run_member(cfg: ScenarioConfig, index: int, sup_norm: float | None = None):
    """One ensemble member with seed ``cfg.seed + index``; returns ``(summary, measure)``."""
    F, domain = cfg.field_and_domain()
    grid = cfg.grid()
    seed = cfg.seed + index
    run = sa_run(F, cfg.start(), cfg.step_schedule(), cfg.noise_model(), cfg.n,
                 seed=seed, domain=domain)
    X = interpolate(run)
    mu = occupation_measure(X, X.horizon, grid)
    center = cfg.target()
    taus = run.taus
    if sup_norm is None:
        sup_norm = field_sup_norm(F, grid)
    defects = []
    for n in cfg.checkpoints:
        if n <= cfg.n and taus[n] + cfg.T <= taus[-1]:
            b = wapt_defect_bounds(X, taus[n], cfg.T, F, grid, cfg.h, compute_lower=False,
                                   sup_norm=sup_norm)
            defects.append({"n": int(n), **b.to_dict()})
    noise_table = []
    for n in cfg.noise_stat_n:
        if 1 <= n <= cfg.n and taus[n] + cfg.T <= taus[-1]:
            noise_table.append({"n": int(n), "T": cfg.T, "stat": noise_sup_stat(run, n, cfg.T)})
    terminal = run.terminal
    summary = {
        "index": index,
        "seed": seed,
        "terminal": terminal.tolist(),
        "terminal_distance": domain.distance(terminal, center),
        "horizon": float(taus[-1]),
        "mass_near": {repr(float(r)): mass_near(mu, center, r) for r in cfg.radii},
        "defects": defects,
        "noise_sup": noise_table,
        "backend": run.info["backend"],
    }
    return summary, mu


def _member_job(args):
    cfg_dict, index, sup_norm = args
    return run_member(ScenarioConfig.from_dict(cfg_dict), index, sup_norm)


def _stats(values):
    values = [float(v) for v in values]
    return {"mean": statistics.fmean(values), "min": min(values), "max": max(values),
            "median": statistics.median(values)}


def run_ensemble(cfg: ScenarioConfig, out_dir=None) -> dict:
    """Run ``cfg.ensemble`` members (in parallel when ``cfg.jobs > 1``) and aggregate in seed order.

    With ``out_dir`` each member's occupation measure goes to
    ``measure_<index>.csv`` and the report to ``report.json``.
    """
    F, _ = cfg.field_and_domain()
    sup_norm = field_sup_norm(F, cfg.grid())
    jobs = [(cfg.to_dict(), i, sup_norm) for i in range(cfg.ensemble)]
    if cfg.jobs > 1 and cfg.ensemble > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_member_job, jobs))
    else:
        results = [_member_job(j) for j in jobs]
    runs = []
    for summary, mu in results:
        if out_dir is not None:
            path = Path(out_dir) / f"measure_{summary['index']:04d}.csv"
            write_measure(path, mu)
            summary["measure_file"] = path.name
        runs.append(summary)
    shown = {k: v for k, v in cfg.to_dict().items() if k not in _EXECUTION_KEYS}
    report = {"config": shown, "runs": runs, "aggregates": aggregate(runs, cfg)}
    if out_dir is not None:
        write_json(Path(out_dir) / "report.json", report)
    return report


def aggregate(runs, cfg: ScenarioConfig) -> dict:
    agg = {"ensemble": len(runs)}
    masses = {}
    for key in runs[0]["mass_near"]:
        vals = [r["mass_near"][key] for r in runs]
        masses[key] = {**_stats(vals),
                       "pass_fraction": sum(v >= cfg.mass_threshold for v in vals) / len(vals),
                       "threshold": cfg.mass_threshold}
    agg["mass_near"] = masses
    dists = [r["terminal_distance"] for r in runs]
    agg["terminal"] = {**_stats(dists), "radius": cfg.terminal_radius,
                       "pass_fraction": sum(d <= cfg.terminal_radius for d in dists) / len(dists)}
    by_n = {}
    for r in runs:
        for d in r["defects"]:
            by_n.setdefault(d["n"], []).append(d["upper"])
    agg["defect_upper"] = {str(n): _stats(v) for n, v in sorted(by_n.items())}
    noise = {}
    for r in runs:
        for d in r["noise_sup"]:
            noise.setdefault(d["n"], []).append(d["stat"])
    agg["noise_sup"] = {str(n): _stats(v) for n, v in sorted(noise.items())}
    return agg

