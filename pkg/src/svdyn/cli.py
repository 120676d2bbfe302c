"""``svdyn`` command line.  Exit codes: 0 success, 1 invalid input, 2 verification failure."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .ensemble import REPORT_KEYS, run_ensemble
from .inclusion import MinNorm, RandomVertex, euler_trajectory, wapt_defect_bounds
from .measures import occupation_measure
from .relations import (MAX_SUBSET_SUPPORT, FLOW_TOL, check_condition_flow,
                        check_condition_subsets, coupling_residual, discretize_field,
                        kernel_from_coupling, pathspace_shift_check, poincare_verify,
                        random_invariant_measure, random_measure, random_relation,
                        recurrent_set, some_invariant_measure, stationarity_residual)
from .scenarios import ConfigError, ScenarioConfig

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _add_scenario(p):
    p.add_argument("--config", help="flat JSON config (schema 1); flags override its keys")
    p.add_argument("--scenario")
    p.add_argument("--cells", type=_ints, help="cells per axis, comma separated")


def _config(args, **keys) -> ScenarioConfig:
    cfg = ScenarioConfig.from_json(args.config) if getattr(args, "config", None) else ScenarioConfig()
    over = {"scenario": getattr(args, "scenario", None), "cells": getattr(args, "cells", None)}
    over.update(keys)
    cfg = cfg.override(**over)
    cfg.validate()
    return cfg


def cmd_simulate(args):
    cfg = _config(args, x0=args.x0, h=args.h, T=args.T, seed=args.seed)
    F, domain = cfg.field_and_domain()
    sel = RandomVertex(cfg.seed) if args.selection == "random_vertex" else MinNorm()
    X = euler_trajectory(F, cfg.start(), cfg.h, cfg.T, sel, seed=cfg.seed, domain=domain)
    io.write_trajectory(args.out, X)
    print(f"wrote {len(X)} knots to {args.out} (clip events: {X.info['clip_events']})")
    return EXIT_OK


def cmd_sa(args):
    cfg = _config(args, x0=args.x0, a=args.a, n0=args.n0, alpha=args.alpha, n=args.n,
                  ensemble=args.ensemble, seed=args.seed, jobs=args.jobs,
                  noise=args.noise, noise_radius=args.noise_radius, radii=args.radii,
                  mass_threshold=args.mass_threshold, checkpoints=args.checkpoints,
                  h=args.h, T=args.T, out=args.out)
    report = run_ensemble(cfg, cfg.out)
    for key, m in report["aggregates"]["mass_near"].items():
        print(f"mass_near(r={key}): mean {m['mean']:.4f}  pass_fraction {m['pass_fraction']:.3f} "
              f"(threshold {m['threshold']})")
    print(f"report: {Path(cfg.out) / 'report.json'}")
    return EXIT_OK


def cmd_occupation(args):
    cfg = _config(args)
    _, domain = cfg.field_and_domain()
    X = io.read_trajectory(args.trajectory, domain)
    t = args.t if args.t is not None else X.horizon
    mu = occupation_measure(X, t, cfg.grid(), t0=args.t0)
    io.write_measure(args.out, mu)
    print(f"wrote {cfg.grid().n_cells} cell weights to {args.out}")
    return EXIT_OK


def cmd_defect(args):
    cfg = _config(args, h=args.h, T=args.T)
    F, domain = cfg.field_and_domain()
    X = io.read_trajectory(args.trajectory, domain)
    grid = cfg.grid()
    times = args.times or [float(X.times[0])]
    out = [wapt_defect_bounds(X, t, cfg.T, F, grid, cfg.h, compute_lower=not args.no_lower)
           for t in times]
    io.write_defects(args.out, out)
    for b in out:
        print(f"t={b.t:g}: [{b.lower:.6g}, {b.upper:.6g} + {b.model_err:.3g}]"
              f"{'' if b.certified else ' (heuristic lower)'}")
    return EXIT_OK


def verify_relation(F, mu) -> dict:
    """Every invariance check on one (relation, measure) pair."""
    supp = int(np.count_nonzero(mu.p))
    cond1 = check_condition_subsets(F, mu) if supp <= MAX_SUBSET_SUPPORT else None
    coupling = check_condition_flow(F, mu)
    result = {"condition1": cond1, "condition3": coupling is not None,
              "kernel_residual": None, "shift_defect": None, "poincare": None}
    if coupling is not None:
        K = kernel_from_coupling(coupling, mu, F.n)
        result["kernel_residual"] = stationarity_residual(K, mu)
        result["shift_defect"] = pathspace_shift_check(K, mu, 5, F)
        result["poincare"] = poincare_verify(F, mu, coupling)
    return result


def _relation_consistent(r) -> bool:
    if r["condition1"] is not None and r["condition1"] != r["condition3"]:
        return False
    if r["condition3"]:
        return (r["kernel_residual"] <= FLOW_TOL and r["shift_defect"] <= FLOW_TOL
                and r["poincare"])
    return True


def cmd_relation_check(args):
    F = io.read_edges(args.edges, args.states)
    mu = io.read_state_measure(args.measure, F.n)
    result = verify_relation(F, mu)
    if args.out:
        io.write_json(args.out, result)
    print(json.dumps(io.to_plain(result), sort_keys=True))
    return EXIT_OK if _relation_consistent(result) else EXIT_VERIFY


def cmd_relation_birkhoff(args):
    F = io.read_edges(args.edges, args.states)
    rec = recurrent_set(F)
    io.write_states(args.out, rec)
    print(f"{rec.size} of {F.n} states recurrent; wrote {args.out}")
    return EXIT_OK


def cmd_relation_discretize(args):
    cfg = _config(args, h=args.h)
    F, _ = cfg.field_and_domain()
    grid = cfg.grid()
    R = discretize_field(F, grid, cfg.h)
    io.write_edges(args.out, R)
    print(f"{grid.n_cells} cells, {len(R.edges())} edges; wrote {args.out}")
    return EXIT_OK


def poincare_suite(instances: int, max_states: int, seed: int) -> dict:
    """Random relations, each tried with a random, a circulation-built and a cycle measure."""
    violations = certified = disagreements = 0
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        n = int(rng.integers(1, max_states + 1))
        F = random_relation(rng, n)
        candidates = [random_measure(rng, n), random_invariant_measure(rng, F),
                      some_invariant_measure(F)[0]]
        for mu in candidates:
            coupling = check_condition_flow(F, mu)
            if coupling is None:
                continue
            certified += 1
            if not poincare_verify(F, mu, coupling):
                violations += 1
            if coupling_residual(coupling, mu, n) > FLOW_TOL:
                disagreements += 1
    return {"instances": instances, "max_states": max_states, "seed": seed,
            "certified": certified, "violations": violations,
            "certificate_failures": disagreements}


def cmd_poincare(args):
    if args.instances < 1 or args.max_states < 1:
        raise ConfigError("--instances and --max-states must be >= 1")
    summary = poincare_suite(args.instances, args.max_states, args.seed)
    if args.out:
        io.write_json(args.out, summary)
    print(f"certified {summary['certified']} invariant measures on {args.instances} relations, "
          f"violations: {summary['violations']}")
    ok = summary["violations"] == 0 and summary["certificate_failures"] == 0
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_report(args):
    root = Path(args.dir)
    reports = sorted(root.rglob("report.json"))
    if not reports:
        raise ConfigError(f"no report.json under {root}")
    entries = []
    missing = []
    for path in reports:
        rep = io.read_json(path)
        if any(k not in rep for k in REPORT_KEYS):
            raise ConfigError(f"{path} is not a run report")
        for r in rep["runs"]:
            f = r.get("measure_file")
            if f and not (path.parent / f).exists():
                missing.append(str(path.parent / f))
        entries.append({"path": str(path.relative_to(root)), "scenario": rep["config"]["scenario"],
                        "ensemble": rep["aggregates"]["ensemble"],
                        "aggregates": rep["aggregates"]})
    summary = {"reports": entries, "missing_files": missing}
    out = args.out or str(root / "summary.json")
    io.write_json(out, summary)
    print(f"summarized {len(entries)} reports into {out}")
    return EXIT_OK if not missing else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="svdyn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="Euler trajectory of a scenario field -> trajectory CSV")
    _add_scenario(s)
    s.add_argument("--x0", type=_floats)
    s.add_argument("--h", type=float)
    s.add_argument("--T", type=float)
    s.add_argument("--selection", choices=["min_norm", "random_vertex"], default="min_norm")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sa", help="stochastic approximation ensemble -> report JSON + measure CSVs")
    _add_scenario(s)
    s.add_argument("--x0", type=_floats)
    s.add_argument("--a", type=float)
    s.add_argument("--n0", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--ensemble", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--noise", choices=["uniform_ball", "gaussian_truncated", "zero"])
    s.add_argument("--noise-radius", type=float)
    s.add_argument("--radii", type=_floats)
    s.add_argument("--mass-threshold", type=float)
    s.add_argument("--checkpoints", type=_ints)
    s.add_argument("--h", type=float)
    s.add_argument("--T", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sa)

    s = sub.add_parser("occupation", help="trajectory CSV -> occupation measure CSV")
    _add_scenario(s)
    s.add_argument("--trajectory", required=True)
    s.add_argument("--t", type=float)
    s.add_argument("--t0", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_occupation)

    s = sub.add_parser("defect", help="trajectory CSV + scenario field -> defect bounds CSV")
    _add_scenario(s)
    s.add_argument("--trajectory", required=True)
    s.add_argument("--times", type=_floats)
    s.add_argument("--T", type=float)
    s.add_argument("--h", type=float)
    s.add_argument("--no-lower", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_defect)

    rel = sub.add_parser("relation", help="finite relation tools")
    rs = rel.add_subparsers(dest="relation_command", required=True, parser_class=_Parser)
    s = rs.add_parser("check", help="edge list + measure -> verification JSON")
    s.add_argument("--edges", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--states", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_relation_check)
    s = rs.add_parser("birkhoff", help="edge list -> recurrent set CSV")
    s.add_argument("--edges", required=True)
    s.add_argument("--states", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_relation_birkhoff)
    s = rs.add_parser("discretize", help="scenario field -> cell relation edge list")
    _add_scenario(s)
    s.add_argument("--h", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_relation_discretize)

    s = sub.add_parser("poincare", help="random-relation recurrence suite -> JSON summary")
    s.add_argument("--instances", type=int, default=500)
    s.add_argument("--max-states", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_poincare)

    s = sub.add_parser("report", help="aggregate run directory -> summary JSON")
    s.add_argument("--dir", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, OSError, KeyError) as exc:
        print(f"svdyn: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
