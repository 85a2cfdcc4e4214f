"""Command-line pipeline: generate | solve | refine | verify | montecarlo | report.

Every command writes its primary artifact deterministically (fixed seeds in,
identical bytes out) plus a ``<out>.manifest.json`` side file carrying the
command line, config snapshot, seeds, input hashes and wall time; manifests
are the only place timestamps appear.

Exit codes: 0 success, 2 infeasible-but-completed, 3 partial refinement,
1 error.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constants import EARTH, PhysicalConstants
from .errors import OrbtourError, SchemaError
from .optimizer import OptimizerConfig, optimize
from .scenario import (MissionScenario, ScenarioConfig, load_scenario,
                       sample_scenario, save_scenario)
from .scp import RefineOptions, load_arcs, refine_tour, save_arcs
from .tour import Tour, brute_force, heuristic_walks, tour_cost
from .verify import PropagatorConfig, Tolerances, save_report, verify_trajectory


def active_constants() -> PhysicalConstants:
    """Constants, optionally overridden by the ORBTOUR_CONSTANTS env file."""
    path = os.environ.get("ORBTOUR_CONSTANTS")
    if not path:
        return EARTH
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return PhysicalConstants(**{**dataclasses.asdict(EARTH), **data})


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_path: str | Path, command: str, args: dict,
                   inputs: list, outputs: list, seeds: dict,
                   wall_time: float) -> None:
    manifest = {
        "tool": f"orbtour {__version__}",
        "command": command,
        "args": {k: str(v) for k, v in args.items()},
        "seeds": seeds,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs
                   if Path(p).exists()],
        "outputs": [str(p) for p in outputs],
        "wall_time_s": wall_time,
    }
    with open(f"{out_path}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def derived_seed(base: int, index: int) -> int:
    """Stable per-task seed derivation."""
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def _scenario_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "insertion_inclination_deg" in data:
        data["insertion_inclination"] = math.radians(data.pop("insertion_inclination_deg"))
    if "insertion_raan_deg" in data:
        data["insertion_raan"] = math.radians(data.pop("insertion_raan_deg"))
    return ScenarioConfig(**data)


def _optimizer_config(path: str | None, seed: int | None) -> OptimizerConfig:
    data = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    if "algorithms" in data:
        data["algorithms"] = tuple(data["algorithms"])
    if seed is not None:
        data["seed"] = seed
    return OptimizerConfig(**data)


# ---------------------------------------------------------------------------
# tour serialization (external interface)
# ---------------------------------------------------------------------------

def tour_to_dict(tour: Tour) -> dict:
    legs = []
    for i, est in enumerate(tour.legs):
        label = (f"bundle{tour.order[i]}" if i < len(tour.order) else "decommission")
        legs.append({
            "label": label,
            "dv_mps": est.dv_total * 1000.0,
            "fuel_kg": est.fuel_mass,
            "burns": est.burn_count,
            "tof_s": est.tof_total,
        })
    return {
        "version": 1,
        "order": [int(i) for i in tour.order],
        "legs": legs,
        "totals": {"fuel_kg": float(tour.fuel_total),
                   "dv_mps": float(tour.dv_total) * 1000.0,
                   "tof_s": float(tour.tof_total)},
        "feasible": bool(tour.feasible),
        "cost": float(tour.cost),
    }


def save_tour(tour: Tour, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tour_to_dict(tour), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_tour_order(path: str | Path) -> list[int]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "order" not in data:
        raise SchemaError(f"{path} is not a tour record")
    return [int(i) for i in data["order"]]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    t0 = time.time()
    consts = active_constants()
    config = _scenario_config(args.config)
    outputs = []
    if args.count == 1:
        scn = sample_scenario(config, args.seed, consts)
        save_scenario(scn, args.out, consts)
        outputs.append(args.out)
    else:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for i in range(args.count):
            seed_i = derived_seed(args.seed, i)
            scn = sample_scenario(config, seed_i, consts)
            path = outdir / f"scenario_{i:04d}.json"
            save_scenario(scn, path, consts)
            outputs.append(path)
    write_manifest(outputs[0] if args.count == 1 else Path(args.out) / "generate",
                   "generate", vars(args), [args.config] if args.config else [],
                   outputs, {"seed": args.seed}, time.time() - t0)
    return 0


def cmd_solve(args) -> int:
    t0 = time.time()
    consts = active_constants()
    scn = load_scenario(args.scenario, consts)
    seeds_in: list = []
    if args.seed_candidates == "walks":
        seeds_in = list(heuristic_walks(scn, consts).values())
    for path in args.seed_tours or []:
        seeds_in.append(load_tour_order(path))

    if args.exact:
        tour = brute_force(scn, consts=consts)
        trace = None
    else:
        config = _optimizer_config(args.optimizer_config, args.seed)
        tour, trace = optimize(scn, config, seeds=seeds_in or None, consts=consts)

    save_tour(tour, args.out)
    outputs = [args.out]
    if args.trace and trace is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace.to_csv())
        outputs.append(args.trace)
    write_manifest(args.out, "solve", vars(args),
                   [args.scenario] + (args.seed_tours or []),
                   outputs, {"seed": args.seed}, time.time() - t0)
    return 0 if tour.feasible else 2


def cmd_refine(args) -> int:
    t0 = time.time()
    consts = active_constants()
    scn = load_scenario(args.scenario, consts)
    order = load_tour_order(args.tour)
    tour = tour_cost(scn, order, consts)
    options = RefineOptions(arcs_per_problem=args.arcs_per_problem)
    arcs = refine_tour(tour, scn, options, consts)
    save_arcs(arcs, args.out)
    write_manifest(args.out, "refine", vars(args), [args.scenario, args.tour],
                   [args.out], {}, time.time() - t0)
    bad = [a.label for a in arcs if not a.converged]
    if bad:
        print(f"refine: {len(bad)} arc(s) did not converge: {', '.join(bad)}",
              file=sys.stderr)
        return 3
    return 0


def cmd_verify(args) -> int:
    t0 = time.time()
    consts = active_constants()
    scn = load_scenario(args.scenario, consts)
    order = load_tour_order(args.tour)
    tour = tour_cost(scn, order, consts)
    arcs = load_arcs(args.arcs)
    report = verify_trajectory(arcs, tour, scn,
                               Tolerances(sma_km=args.tol_sma, inc_deg=args.tol_inc),
                               PropagatorConfig(step=args.step), consts)
    save_report(report, args.out, args.csv)
    write_manifest(args.out, "verify", vars(args),
                   [args.scenario, args.tour, args.arcs],
                   [args.out] + ([args.csv] if args.csv else []),
                   {}, time.time() - t0)
    return 0


def _mc_row(scenario: MissionScenario, tour: Tour, index: int, seed: int) -> dict:
    smas = np.array([b.target.a for b in scenario.bundles])
    incs = np.array([math.degrees(b.target.i) for b in scenario.bundles])
    return {
        "scenario": index,
        "seed": seed,
        "n_bundles": scenario.n_bundles,
        "fuel_kg": float(tour.fuel_total),
        "dv_mps": float(tour.dv_total) * 1000.0,
        "tof_days": float(tour.tof_total) / 86400.0,
        "feasible": bool(tour.feasible),
        "min_payload_mass_kg": float(min(b.mass for b in scenario.bundles)),
        "sma_std_km": float(np.std(smas)),
        "sma_range_km": float(np.ptp(smas)),
        "inc_std_deg": float(np.std(incs)),
        "inc_range_deg": float(np.ptp(incs)),
    }


def _mc_task(payload: tuple) -> tuple[int, dict, dict]:
    index, scn_seed, opt_seed, config, opt, consts = payload
    scn = sample_scenario(config, scn_seed, consts)
    opt = dataclasses.replace(opt, seed=opt_seed)
    tour, _ = optimize(scn, opt, consts=consts)
    return index, _mc_row(scn, tour, index, scn_seed), tour_to_dict(tour)


MC_FIELDS = ["scenario", "seed", "n_bundles", "fuel_kg", "dv_mps", "tof_days",
             "feasible", "min_payload_mass_kg", "sma_std_km", "sma_range_km",
             "inc_std_deg", "inc_range_deg"]


def summarize_rows(rows: list[dict]) -> list[dict]:
    """Fuel statistics grouped by bundle count."""
    groups: dict[int, list[dict]] = {}
    for row in rows:
        groups.setdefault(int(row["n_bundles"]), []).append(row)
    out = []
    for nb in sorted(groups):
        fuels = np.array([float(r["fuel_kg"]) for r in groups[nb]])
        feas = np.array([str(r["feasible"]) in ("True", "true") or r["feasible"] is True
                         for r in groups[nb]])
        out.append({"n_bundles": nb, "count": len(fuels),
                    "fuel_mean_kg": float(np.mean(fuels)),
                    "fuel_std_kg": float(np.std(fuels)),
                    "fuel_min_kg": float(np.min(fuels)),
                    "fuel_max_kg": float(np.max(fuels)),
                    "feasible_fraction": float(np.mean(feas))})
    return out


def cmd_montecarlo(args) -> int:
    t0 = time.time()
    consts = active_constants()
    config = _scenario_config(args.config)
    if args.bundles is not None:
        config = dataclasses.replace(config, fixed_bundles=args.bundles)
    opt = _optimizer_config(args.optimizer_config, None)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for i in range(args.n):
        tasks.append((i, derived_seed(args.seed, 2 * i),
                      derived_seed(args.seed, 2 * i + 1), config, opt, consts))

    rows: list[dict | None] = [None] * args.n
    tours: list[dict | None] = [None] * args.n
    jobs = args.jobs or os.cpu_count() or 1
    failures = 0
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for fut in [pool.submit(_mc_task, t) for t in tasks]:
                try:
                    idx, row, tour_d = fut.result()
                    rows[idx], tours[idx] = row, tour_d
                except Exception as exc:  # logged, run continues
                    failures += 1
                    print(f"montecarlo: scenario failed: {exc}", file=sys.stderr)
    else:
        for t in tasks:
            try:
                idx, row, tour_d = _mc_task(t)
                rows[idx], tours[idx] = row, tour_d
            except Exception as exc:
                failures += 1
                print(f"montecarlo: scenario {t[0]} failed: {exc}", file=sys.stderr)

    ok_rows = [r for r in rows if r is not None]
    with open(outdir / "montecarlo.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MC_FIELDS)
        writer.writeheader()
        for row in ok_rows:
            writer.writerow(row)
    for i, tour_d in enumerate(tours):
        if tour_d is not None:
            with open(outdir / f"tour_{i:04d}.json", "w", encoding="utf-8") as fh:
                json.dump(tour_d, fh, indent=2, sort_keys=True)
                fh.write("\n")
    summary = summarize_rows(ok_rows)
    with open(outdir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary[0].keys()) if summary
                                else ["n_bundles"])
        writer.writeheader()
        for row in summary:
            writer.writerow(row)
    write_manifest(outdir / "montecarlo", "montecarlo", vars(args),
                   [args.config] if args.config else [],
                   [outdir / "montecarlo.csv", outdir / "summary.csv"],
                   {"seed": args.seed}, time.time() - t0)
    if failures:
        return 1
    infeasible = any(not r["feasible"] for r in ok_rows)
    return 2 if infeasible else 0


def cmd_report(args) -> int:
    with open(Path(args.dir) / "montecarlo.csv", encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    summary = summarize_rows(rows)
    out = args.out or str(Path(args.dir) / "summary.csv")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary[0].keys()))
        writer.writeheader()
        for row in summary:
            writer.writerow(row)
    for row in summary:
        print(f"bundles={row['n_bundles']:>2} n={row['count']:>4} "
              f"fuel={row['fuel_mean_kg']:.2f}±{row['fuel_std_kg']:.2f} kg "
              f"feasible={row['feasible_fraction']:.0%}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbtour",
                                     description="multi-target rendezvous mission design")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample randomized mission scenarios")
    p.add_argument("--config", help="scenario config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="optimize the visit order")
    p.add_argument("--scenario", required=True)
    p.add_argument("--optimizer-config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seed-candidates", choices=["walks"],
                   help="inject hand-crafted candidate walks")
    p.add_argument("--seed-tours", nargs="*", help="tour JSON files to inject")
    p.add_argument("--exact", action="store_true", help="brute-force oracle")
    p.add_argument("--trace", help="evolution trace CSV path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("refine", help="re-optimize transfer arcs")
    p.add_argument("--tour", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--arcs-per-problem", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("verify", help="re-propagate refined arcs")
    p.add_argument("--arcs", required=True)
    p.add_argument("--tour", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--tol-sma", type=float, default=10.0)
    p.add_argument("--tol-inc", type=float, default=0.1)
    p.add_argument("--step", type=float, default=10.0)
    p.add_argument("--csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("montecarlo", help="batch mission analysis")
    p.add_argument("--config", help="scenario config JSON")
    p.add_argument("--optimizer-config")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bundles", type=int, help="pin the bundle count")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("report", help="summarize a montecarlo directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OrbtourError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
