"""Command-line driver.

Every command reads a spec (file or preset), derives all randomness from one
64-bit seed, and writes a JSON summary plus CSV rows (and a diagnostic PNG
for the analysis commands) into --out.  Outputs embed (spec hash, seed, tool
version) and carry no timestamps, so re-running a command with identical
configuration reproduces identical bytes at any worker count.

Exit codes: 0 success, 2 schema/usage error, 3 budget error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__, figures
from .config import load_spec, spec_hash
from .dimension import expected_pressure, expected_subsystem_pressure, solve_s0, solve_sn
from .errors import BudgetError, NumericError, SchemaError, SpongeError
from .estimator import (energy_trend, estimate_box_dimension,
                        fit_transversality_constant, lebesgue_positivity_probe,
                        make_transversality_pairs, probe_transversality,
                        sample_cloud, transversality_bound)
from .measure import simulate_martingale, weight_statistics, weights_from_dimension
from .render import render_cloud, render_iterates
from .rifs import attractor_box, realize
from .symbolic import Tail

_GEOMETRIC_MEAN_SAFETY = 0.5


def _resolve_spec(args):
    name = args.spec or args.preset
    if not name:
        raise SchemaError("need --spec FILE or --preset NAME")
    return load_spec(name)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("SPONGE_SEED", "0"))


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _meta(args, spec, seed) -> dict:
    return {"command": args.command, "spec_hash": spec_hash(spec),
            "spec_name": spec.name, "seed": seed, "tool_version": __version__}


def _write_summary(outdir, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    print(text)


def _append_csv(path, header, rows) -> None:
    fresh = not os.path.exists(path)
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _parse_floats(text) -> list:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _parse_ints(text) -> list:
    return [int(v) for v in str(text).split(",") if v.strip()]


def cmd_solve(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    out = _outdir(args)
    if args.subsystem:
        sub = spec.subsystem(args.subsystem)
        report = solve_sn(spec, sub, args.tol)
        curve = lambda s: expected_subsystem_pressure(spec, sub, s)
    else:
        report = solve_s0(spec, args.tol)
        curve = lambda s: expected_pressure(spec, s)
    payload = {**_meta(args, spec, seed), **report.to_dict()}
    _write_summary(out, payload)
    _append_csv(os.path.join(out, "solve.csv"),
                ["spec_hash", "subsystem_n", "s_star", "residual", "evaluations"],
                [[payload["spec_hash"], report.subsystem_n or 0, repr(report.s_star),
                  repr(report.residual), report.evaluations]])
    figures.pressure_figure(spec, report, os.path.join(out, "pressure.png"), curve)
    return 0


def cmd_sample(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    out = _outdir(args)
    tree = realize(spec, seed)
    cloud = sample_cloud(tree, args.points, args.depth, seed)
    with open(os.path.join(out, "points.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{k + 1}" for k in range(spec.d)])
        for row in cloud.points:
            writer.writerow([repr(float(v)) for v in row])
    payload = {**_meta(args, spec, seed), "points": args.points, "depth": args.depth,
               "error_radius": [float(v) for v in cloud.error_radius]}
    _write_summary(out, payload)
    figures.cloud_figure(cloud, os.path.join(out, "cloud.png"))
    return 0


def cmd_boxcount(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    out = _outdir(args)
    tree = realize(spec, seed)
    cloud = sample_cloud(tree, args.points, args.depth, seed)
    radii = _parse_floats(args.radii)
    fit = estimate_box_dimension(cloud, radii, attractor_box(spec))
    _append_csv(os.path.join(out, "boxcount.csv"), ["radius", "count"],
                [[repr(r), c] for r, c in zip(fit.radii, fit.counts)])
    payload = {**_meta(args, spec, seed), "points": args.points, "depth": args.depth,
               "slope": fit.slope, "stderr": fit.stderr, "ci95": list(fit.ci95),
               "clipped_radii": fit.clipped, "residuals": list(fit.residuals)}
    _write_summary(out, payload)
    figures.boxcount_figure(fit, os.path.join(out, "boxcount.png"))
    return 0


def cmd_martingale(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    out = _outdir(args)
    sub = spec.subsystem(args.n)
    report = solve_sn(spec, sub, args.tol)
    tree = realize(spec, seed)
    family = weights_from_dimension(tree, sub, report)
    stats = simulate_martingale(family, args.depth, args.trials, seed,
                                keep_samples=True, workers=args.workers)
    wstats = weight_statistics(family, args.trials, seed + 1)
    bound, bound_se = wstats.second_moment_bound()
    header = ["trial"] + [f"X{k + 1}" for k in range(args.depth)]
    rows = [[i] + [repr(float(v)) for v in stats.samples[i]]
            for i in range(stats.samples.shape[0])]
    _append_csv(os.path.join(out, "martingale.csv"), header, rows)
    second = (stats.variances + stats.means**2).tolist()
    payload = {**_meta(args, spec, seed), "n": args.n, "s_n": report.s_star,
               "sigma": list(report.sigma), **stats.to_dict(),
               "second_moments": second,
               "weight_sum_mean": wstats.sum_mean, "weight_sum_se": wstats.sum_se,
               "weight_sum_sq_mean": wstats.sum_sq_mean,
               "second_moment_bound": bound, "second_moment_bound_se": bound_se}
    _write_summary(out, payload)
    figures.martingale_figure(stats, bound, os.path.join(out, "martingale.png"))
    return 0


def _rho_schedule(spec, pair, octaves: int):
    box = attractor_box(spec)
    g = float(np.sqrt(spec.alpha_lo * spec.alpha_hi))
    base = float(box.width.max()) * g**pair.lcp_len * _GEOMETRIC_MEAN_SAFETY
    return [base * 2.0 ** (-0.5 * j) for j in range(2 * octaves)]


def cmd_transversality(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    out = _outdir(args)
    sub = spec.subsystem(args.n)
    pairs = make_transversality_pairs(spec, sub, args.pairs, seed,
                                      tail_supers=args.tail_supers)
    rhos = [_rho_schedule(spec, p, args.octaves) for p in pairs]
    rows = probe_transversality(spec, sub, pairs, rhos, args.environments,
                                args.resamples, seed)
    cal = [r for r in rows if r.env < args.calibration_envs]
    test = [r for r in rows if r.env >= args.calibration_envs]
    C = fit_transversality_constant(cal, safety=args.safety)
    violations = [r for r in test
                  if r.p_hat > transversality_bound(C, r.rho, r.alpha_lcp)]
    _append_csv(os.path.join(out, "transversality.csv"),
                ["pair", "env", "rho", "p_hat", "alpha_lcp_min", "bound"],
                [[r.pair, r.env, repr(r.rho), repr(r.p_hat), repr(min(r.alpha_lcp)),
                  repr(transversality_bound(C, r.rho, r.alpha_lcp))] for r in rows])
    payload = {**_meta(args, spec, seed), "n": args.n, "pairs": args.pairs,
               "environments": args.environments, "resamples": args.resamples,
               "calibration_envs": args.calibration_envs, "fitted_C": C,
               "safety": args.safety, "test_rows": len(test),
               "bound_violations": len(violations)}
    _write_summary(out, payload)
    figures.transversality_figure(rows, C, os.path.join(out, "transversality.png"))
    return 0


def cmd_energy(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    out = _outdir(args)
    sub = spec.subsystem(args.n)
    report = solve_sn(spec, sub, args.tol)
    tree = realize(spec, seed)
    family = weights_from_dimension(tree, sub, report)
    if args.t:
        ts = _parse_floats(args.t)
    else:
        ts = [max(report.s_star - 0.1, 1e-3), report.s_star + 0.3]
    depths = _parse_ints(args.super_depths)
    by_t = {}
    rows = []
    for t in ts:
        pts = energy_trend(family, t, args.pairs, depths, seed)
        by_t[t] = pts
        rows.extend([[repr(t), p.depth, repr(p.estimate), repr(p.floor), p.pairs]
                     for p in pts])
    _append_csv(os.path.join(out, "energy.csv"),
                ["t", "depth_letters", "estimate", "floor", "pairs"], rows)
    payload = {**_meta(args, spec, seed), "n": args.n, "s_n": report.s_star,
               "t_values": ts, "super_depths": depths, "pairs": args.pairs,
               "estimates": {repr(t): [p.estimate for p in pts] for t, pts in by_t.items()}}
    _write_summary(out, payload)
    figures.energy_figure(by_t, os.path.join(out, "energy.png"))
    return 0


def cmd_positivity(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    out = _outdir(args)
    tree = realize(spec, seed)
    cloud = sample_cloud(tree, args.points, args.depth, seed)
    box = attractor_box(spec)
    meshes = _parse_floats(args.meshes)
    estimates = [lebesgue_positivity_probe(cloud, box, h) for h in meshes]
    _append_csv(os.path.join(out, "positivity.csv"), ["mesh", "estimate"],
                [[repr(h), repr(e)] for h, e in zip(meshes, estimates)])
    payload = {**_meta(args, spec, seed), "points": args.points, "depth": args.depth,
               "meshes": meshes, "estimates": estimates}
    _write_summary(out, payload)
    figures.positivity_figure(meshes, estimates, os.path.join(out, "positivity.png"))
    return 0


def cmd_render(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    tree = realize(spec, seed)
    doc = render_iterates(tree, args.levels)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(doc)
    print(json.dumps({"command": "render", "out": args.out, "levels": args.levels,
                      "spec_hash": spec_hash(spec), "seed": seed,
                      "tool_version": __version__}, sort_keys=True))
    return 0


def cmd_render_cloud(args) -> int:
    spec = _resolve_spec(args)
    seed = _resolve_seed(args)
    tree = realize(spec, seed)
    cloud = sample_cloud(tree, args.points, args.depth, seed)
    payload = render_cloud(cloud, args.res, attractor_box(spec))
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "wb") as fh:
        fh.write(payload)
    print(json.dumps({"command": "render-cloud", "out": args.out, "points": args.points,
                      "res": args.res, "spec_hash": spec_hash(spec), "seed": seed,
                      "tool_version": __version__}, sort_keys=True))
    return 0


def _add_common(p):
    p.add_argument("--spec", help="spec JSON file (or a preset name)")
    p.add_argument("--preset", help="bundled preset name")
    p.add_argument("--seed", type=int, default=None,
                   help="64-bit run seed (default: $SPONGE_SEED or 0)")
    p.add_argument("--out", default="sponge-out", help="output directory")
    p.add_argument("--workers", type=int, default=1, help="worker pool size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sponge",
        description="Random self-affine sponges: solve, sample, and probe.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("solve", help="solve the expected-pressure equation")
    _add_common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--subsystem", type=int, default=0, metavar="N",
                   help="solve the block-subsystem root s_n instead of s0")
    p.set_defaults(func=cmd_solve)

    p = subs.add_parser("sample", help="sample a point cloud to CSV")
    _add_common(p)
    p.add_argument("--points", type=int, default=20000)
    p.add_argument("--depth", type=int, default=12)
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("boxcount", help="estimate the box-counting dimension")
    _add_common(p)
    p.add_argument("--points", type=int, default=100000)
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--radii", default="0.125,0.0625,0.03125,0.015625,0.0078125,0.00390625")
    p.set_defaults(func=cmd_boxcount)

    p = subs.add_parser("martingale", help="simulate the weight martingale")
    _add_common(p)
    p.add_argument("--n", type=int, default=1, help="subsystem block length")
    p.add_argument("--depth", type=int, default=3, help="super-levels")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_martingale)

    p = subs.add_parser("transversality", help="conditional collision probe")
    _add_common(p)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--pairs", type=int, default=5)
    p.add_argument("--environments", type=int, default=5)
    p.add_argument("--calibration-envs", type=int, default=2)
    p.add_argument("--resamples", type=int, default=4000)
    p.add_argument("--octaves", type=int, default=4)
    p.add_argument("--tail-supers", type=int, default=2)
    p.add_argument("--safety", type=float, default=2.0)
    p.set_defaults(func=cmd_transversality)

    p = subs.add_parser("energy", help="truncated pair-energy trend")
    _add_common(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--t", default="", help="comma list of exponents "
                   "(default: s_n - 0.1 and s_n + 0.3)")
    p.add_argument("--pairs", type=int, default=20000)
    p.add_argument("--super-depths", default="8,12,16")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_energy)

    p = subs.add_parser("positivity", help="occupied-volume probe")
    _add_common(p)
    p.add_argument("--points", type=int, default=100000)
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--meshes", default="0.0625,0.03125,0.015625,0.0078125")
    p.set_defaults(func=cmd_positivity)

    p = subs.add_parser("render", help="render cylinder iterates to SVG")
    _add_common(p)
    p.add_argument("--levels", type=int, default=2)
    p.set_defaults(func=cmd_render, out_is_file=True)
    p.set_defaults(out="fig.svg")

    p = subs.add_parser("render-cloud", help="raster a planar cloud to PPM")
    _add_common(p)
    p.add_argument("--points", type=int, default=100000)
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--res", type=int, default=1024)
    p.set_defaults(func=cmd_render_cloud, out_is_file=True)
    p.set_defaults(out="cloud.ppm")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except SpongeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
