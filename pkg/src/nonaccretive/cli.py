"""
Command line front end.

    nonaccretive <check|spectrum|agmon|truncate|verify|probe> --config FILE --out DIR [--seed N] [--jobs N]

Each run writes ``report_<command>.json`` (plus CSV or JSONL bulk files) into
the output directory.  Exit status: 0 when every asserted check passes, 2 when
a check derived from the theory fails, 1 on operational errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .agmon import agmon_distance, certify_decay, certify_generalized, write_profile_csv
from .assembly import assemble_operator
from .assumptions import Certificate, NoCertificate, certify, diagnose_asymptotics, recheck_refined
from .config import ConfigError, ProblemConfig, load_config
from .eigensolve import (ConvergenceError, FactorizationError, IllSeparatedContour, eigenpairs_near,
                         resolvent_probe, richardson_values, riesz_projector)
from .enclosure import RESOLVENT, boundary_mass, classify, placement_check, truncation_study
from .fields import ElectromagneticField
from .forms import DiscreteForm, WeightFunction, loc_convergence
from .grid import Grid, random_compact_support, write_csv

__all__ = ["main", "run", "SCHEMA_VERSION", "COMMANDS"]

SCHEMA_VERSION = "1.0"
COMMANDS = ("check", "spectrum", "agmon", "truncate", "verify", "probe")
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("nonaccretive")


# -- helpers -------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(float(obj.real)), _jsonable(float(obj.imag))]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return None
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def _setup(cfg: ProblemConfig):
    field_ = ElectromagneticField.from_strings(cfg.dim, cfg.V, cfg.A)
    grid = Grid(tuple(cfg.lower), tuple(cfg.upper), tuple(cfg.n))
    return field_, grid


def _certificate(cfg: ProblemConfig, field_, grid) -> Certificate:
    if cfg.fixed_gamma1 is not None:
        return Certificate.manual(cfg.fixed_gamma1, cfg.fixed_gamma2)
    return certify(field_, grid, cfg.gamma1, cfg.gamma2_cap)


def _vinf(field_, grid) -> float:
    """Shell minimum of |V| over grid nodes in the outer half (by distance from the origin)."""
    r = grid.radius
    shell = r >= 0.5 * np.max(r)
    return float(np.min(np.abs(field_.V_at(grid.points[:, shell]))))


def _eigenpairs(cfg, op):
    return eigenpairs_near(op, cfg.shifts, k=cfg.k, m=cfg.m, tol=cfg.tol, max_restarts=cfg.max_restarts,
                           seed=cfg.seed, polish=cfg.polish)


def _contour_radius(lam, others):
    dist = [abs(lam - o) for o in others if o != lam]
    r = 0.1 * (1 + abs(lam))
    if dist:
        r = min(r, 0.5 * min(dist))
    return r


def _multiplicity(cfg, op, pair, values):
    try:
        proj = riesz_projector(op, pair.value, _contour_radius(pair.value, values), n_quad=cfg.n_quad,
                               probe_basis=pair.vector.reshape(-1, 1), seed=cfg.seed)
    except (IllSeparatedContour, FactorizationError) as exc:
        return None, {"error": str(exc)}
    return proj, proj.to_dict()


def _enlarged_grid(grid: Grid, factor: float) -> Grid:
    lower = tuple(a * factor for a in grid.lower)
    upper = tuple(b * factor for b in grid.upper)
    n = tuple(int(round((b - a) / h)) - 1 for a, b, h in zip(lower, upper, grid.h))
    return Grid(lower, upper, n)


# -- subcommands -----------------------------------------------------------------


def cmd_check(cfg, out, jobs):
    field_, grid = _setup(cfg)
    result, checks = {}, {}
    try:
        cert = _certificate(cfg, field_, grid)
    except NoCertificate as exc:
        result["certificate"] = None
        result["no_certificate"] = {"message": str(exc), "table": exc.table}
        checks["certificate_found"] = False
        return result, checks, {}
    result["certificate"] = cert.to_dict()
    checks["certificate_found"] = True
    if cfg.fixed_gamma1 is None:
        checks["certificate_valid"] = cert.valid
        result["refinement"] = recheck_refined(field_, grid, cert)
    reach = float(min(max(abs(a), abs(b)) for a, b in zip(grid.lower, grid.upper)))
    radii = np.linspace(0.25, 1.0, 4) * reach
    result["asymptotics"] = diagnose_asymptotics(field_, radii).to_dict()
    return result, checks, {}


def cmd_spectrum(cfg, out, jobs):
    field_, grid = _setup(cfg)
    op = assemble_operator(field_, grid, cfg.scheme)
    cert = _certificate(cfg, field_, grid)
    vinf = _vinf(field_, grid)
    pairs = _eigenpairs(cfg, op)
    values = [p.value for p in pairs]
    rows, certified, contradictions = [], [], 0
    files = {}
    for i, p in enumerate(pairs):
        proj, proj_info = _multiplicity(cfg, op, p, values)
        prof = agmon_distance(field_, grid, p.value, cert, cfg.x0)
        decay = certify_decay(prof, p.vector, cfg.eps)
        bmass = boundary_mass(grid, p.vector)
        ok = decay.passed or bmass < 0.01
        certified.append(ok)
        tag = classify(p.value, cert, vinf)
        if tag == RESOLVENT and ok:
            contradictions += 1
        row = p.to_dict()
        row.update(multiplicity=None if proj is None else proj.multiplicity, projector=proj_info, region=tag,
                   decay=decay.verdict, boundary_mass=bmass, certified=ok)
        rows.append(row)
        if out is not None:
            name = f"eigenvector_{i}.csv"
            write_csv(os.path.join(out, name), grid, p.vector)
            files[name] = "eigenvector"
    if cfg.richardson:
        fine = grid.refine()
        fine_pairs = _eigenpairs(cfg, assemble_operator(field_, fine, cfg.scheme))
        for row, val in zip(rows, richardson_values(pairs, fine_pairs)):
            row["extrapolated"] = val
    placement = placement_check(pairs, cert, certified)
    result = {"operator": op.meta, "certificate": cert.to_dict(), "vinf_estimate": vinf,
              "eigenpairs": rows, "placement": placement.to_dict()}
    checks = {"placement": placement.passed, "no_resolvent_eigenvalue": contradictions == 0}
    return result, checks, files


def cmd_agmon(cfg, out, jobs):
    field_, grid = _setup(cfg)
    op = assemble_operator(field_, grid, cfg.scheme)
    cert = _certificate(cfg, field_, grid)
    pairs = _eigenpairs(cfg, op)
    values = [p.value for p in pairs]
    big = _enlarged_grid(grid, cfg.enlarge)
    op_big = assemble_operator(field_, big, cfg.scheme)
    rows, files, all_ok = [], {}, True
    for i, p in enumerate(pairs):
        prof = agmon_distance(field_, grid, p.value, cert, cfg.x0)
        enlarged = None
        try:
            near = eigenpairs_near(op_big, [p.value + 1e-6 * (1 + abs(p.value))], k=1, tol=cfg.tol,
                                   seed=cfg.seed, polish=cfg.polish)
            if near and abs(near[0].value - p.value) < 1e-4 * (1 + abs(p.value)):
                enlarged = (agmon_distance(field_, big, near[0].value, cert, cfg.x0), near[0].vector)
        except (ConvergenceError, FactorizationError):
            enlarged = None
        rep = certify_decay(prof, p.vector, cfg.eps, enlarged=enlarged)
        proj, proj_info = _multiplicity(cfg, op, p, values)
        gen = certify_generalized(prof, proj, cfg.eps) if proj is not None else []
        ok = rep.verdict != "fail" and all(g.verdict != "fail" for g in gen)
        all_ok &= ok
        rows.append({"eigenvalue": p.value, "decay": rep.to_dict(),
                     "multiplicity": None if proj is None else proj.multiplicity,
                     "generalized": [g.to_dict() for g in gen], "boundary_agmon_distance": prof.boundary_distance(),
                     "enlarged_box": enlarged is not None})
        if out is not None:
            name = f"agmon_{i}.csv"
            write_profile_csv(os.path.join(out, name), prof, p.vector)
            files[name] = "agmon profile"
    result = {"certificate": cert.to_dict(), "eps": cfg.eps, "enlarge": cfg.enlarge, "profiles": rows}
    return result, {"decay": all_ok}, files


def cmd_truncate(cfg, out, jobs):
    field_, grid = _setup(cfg)
    if cfg.radii is None:
        raise ConfigError("truncate needs [truncation] radii")
    cert = _certificate(cfg, field_, grid)
    h = cfg.trunc_h if cfg.trunc_h is not None else float(np.max(grid.h))
    study = truncation_study(field_, cfg.radii, cfg.shifts, cfg.eps, cert, h, reference_radius=cfg.reference,
                             k=cfg.trunc_k, scheme=cfg.scheme, tol=cfg.tol)
    files = {}
    if out is not None:
        name = "truncation.csv"
        with open(os.path.join(out, name), "w", newline="") as fh:
            wr = csv.writer(fh)
            for row in study.csv_rows():
                wr.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        files[name] = "truncation drifts"
    return {"certificate": cert.to_dict(), "study": study.to_dict()}, {"truncation": study.passed}, files


def _verify_one(df: DiscreteForm, cfg, cert, weights, chi, index):
    seed = int(np.random.SeedSequence([cfg.seed, index]).generate_state(1)[0])
    u = random_compact_support(df.grid, cfg.margin, seed)
    gaps = [df.coercivity_gap(u, cfg.mu, W) for W in weights]
    for g, W in zip(gaps, weights):
        g.id = f"coercivity[{W.label}]"
    gaps.append(df.coercivity_bound_gap(u, cfg.mu, cert))
    gaps.append(df.lemma_gap("BmBV", u))
    gaps.append(df.lemma_gap("loc", u, chi=chi))
    for d in cfg.deltas:
        g = df.lemma_gap("nablaA", u, delta=d)
        g.id = f"nablaA[{d:g}]"
        gaps.append(g)
    gaps.append(df.lemma_gap("B2", u))
    return seed, gaps


def cmd_verify(cfg, out, jobs):
    field_, grid = _setup(cfg)
    cert = _certificate(cfg, field_, grid)
    df = DiscreteForm(field_, grid)
    eta = math.sqrt(1 - cfg.eps) / 3
    prof = agmon_distance(field_, grid, cfg.mu, cert, cfg.x0)
    weights = [WeightFunction.zero(grid), WeightFunction.clipped_ramp(grid),
               WeightFunction.agmon_cutoff(grid, prof.distance, n=5.0 / eta, eps=cfg.eps)]
    centre = (np.array(grid.lower) + np.array(grid.upper)) / 2
    width = float(np.min(np.array(grid.upper) - np.array(grid.lower)))
    chi = np.exp(-np.sum((grid.points - centre[:, None]) ** 2, axis=0) / (2 * (0.2 * width) ** 2))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda k: _verify_one(df, cfg, cert, weights, chi, k), range(cfg.samples)))
    records, summary = [], {}
    for seed, gaps in results:
        for g in gaps:
            records.append({"id": g.id, "seed": seed, "gap": g.gap, "tol": g.tol, "pass": g.passed})
            s = summary.setdefault(g.id, {"count": 0, "violations": 0, "min_gap_over_tol": None, "asserted": g.asserted})
            s["count"] += 1
            s["violations"] += int(not g.passed)
            if g.asserted and g.tol > 0:
                r = g.gap / g.tol
                s["min_gap_over_tol"] = r if s["min_gap_over_tol"] is None else min(s["min_gap_over_tol"], r)
            if g.id == "B2":
                s["max_smallest_C"] = max(s.get("max_smallest_C", 0.0), g.gap)
    conv = loc_convergence(field_, grid)
    graph = df.graph_norm_estimate(0.5, sample_size=min(cfg.samples, 50), seed=cfg.seed, margin=cfg.margin)
    files = {}
    if out is not None:
        name = "verify_records.jsonl"
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")
        files[name] = "inequality records"
    checks = {"inequalities": all(r["pass"] for r in records), "loc_order": conv["order"] >= 1.5}
    result = {"certificate": cert.to_dict(), "mu": cfg.mu, "samples": cfg.samples, "summary": summary,
              "loc_convergence": conv, "graph_norm_estimate": {"delta": 0.5, "C_hat": graph}}
    return result, checks, files


def cmd_probe(cfg, out, jobs):
    field_, grid = _setup(cfg)
    op = assemble_operator(field_, grid, cfg.scheme)
    cert = _certificate(cfg, field_, grid)
    rng = np.random.default_rng(cfg.seed)
    h2 = float(np.max(grid.h)) ** 2
    rows, ok = [], True
    for j in range(cfg.probe_count):
        g = float(np.exp(rng.uniform(math.log(cfg.gap_min), math.log(cfg.gap_max))))
        im = float(rng.uniform(-1, 1) * (g + 10))
        mu = complex(-cert.gamma2 - g - abs(im), im)
        probe = resolvent_probe(op, mu, n_iters=30, seed=cfg.seed + j)
        bound = 2 / g * (1 + 1e-3) + 10 * h2
        passed = probe.norm_estimate <= bound
        ok &= passed
        rows.append({"mu": mu, "gap": g, "region": classify(mu, cert), "estimate": probe.norm_estimate,
                     "bound": bound, "solve_residual": probe.solve_residual, "pass": passed})
    return {"certificate": cert.to_dict(), "probes": rows}, {"resolvent_bound": ok}, {}


HANDLERS = {"check": cmd_check, "spectrum": cmd_spectrum, "agmon": cmd_agmon, "truncate": cmd_truncate,
            "verify": cmd_verify, "probe": cmd_probe}


def run(command, config_path, out_dir, seed=None, jobs=1):
    """Run one subcommand; returns ``(exit_status, report_dict)``."""
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = int(seed)
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    result, checks, files = HANDLERS[command](cfg, out_dir, jobs)
    elapsed = time.perf_counter() - t0
    status = EXIT_OK if all(checks.values()) else EXIT_FAIL
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.echo(),
        "config_sha256": cfg.sha256,
        "seed": cfg.seed,
        "result": result,
        "checks": checks,
        "status": "pass" if status == EXIT_OK else "fail",
        "files": files,
        "timings": {"total_seconds": elapsed, "jobs": jobs},
    }
    report = _jsonable(report)
    with open(os.path.join(out_dir, f"report_{command}.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status, report


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nonaccretive", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="problem configuration file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override [run] seed")
    ap.add_argument("--jobs", type=int, default=1, help="worker threads (never changes results)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        status, report = run(args.command, args.config, args.out, args.seed, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # operational failure: solver, I/O, evaluation
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    failed = [k for k, v in report["checks"].items() if not v]
    print(f"{args.command}: {report['status']}" + (f" (failed: {', '.join(failed)})" if failed else ""))
    return status


if __name__ == "__main__":
    sys.exit(main())
