"""Configuration-driven command line runner.

Every subcommand writes CSV (plus .dat plot data where meaningful) into the
output directory, renders trend figures for the report-style subcommands, and
finishes with a manifest listing every output file with its content hash.
Identical configuration and seed produce byte-identical CSV/.dat outputs.

    discrit <subcommand> [--config cfg.json] [--seed N] [--out DIR]
            [--mode float|rational] [--threads N] [--no-figures]

Subcommands: rearrange, extremal, choquet, kernels, partitions, criteria,
example63.  Flags override config values; the config is a single JSON object
whose "params" block is subcommand-specific.  In rational mode numeric
parameters accept "p/q" strings.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from ._util import parse_number
from .choquet import base_polyhedron_max, choquet_integral, random_submodular
from .criteria import (
    GammaFunction,
    divergence_sweep,
    single_rearrangement_bounds,
    sweep_centers_varying_radius,
)
from .extremal import ExtremalInstance, check_rearrangement_bounds, fractional_min_integral, min_integral_bruteforce
from .kernels import KernelSpec, kernel_band_check, save_profile_dat
from .partitions import cantor_system, product_system, save_report_csv, save_system_csv, verify_dense_system
from .potentials import cantor_window_potential
from .rearrange import WeightedSample, rearrange_dec, rearrange_inc
from .reporting import (
    criterion_report_csv,
    criterion_report_dat,
    render_trend_figure,
    write_csv,
    write_manifest,
)

USAGE_EXIT = 2

DEFAULTS = {
    "rearrange": {"instances": 200, "max_atoms": 8, "max_value": 9},
    "extremal": {"instances": 100, "max_atoms": 10, "theta": "2"},
    "choquet": {"instances": 40, "ground": 5},
    "kernels": {"kind": "riesz", "dimension": 3, "r_values": [0.25, 0.5, 1.0], "r0": 1.0, "pairs": 60},
    "partitions": {"dimension": 1, "levels": 8, "trials": 500},
    "criteria": {
        "criterion": "single",
        "alpha_gamma": "1",
        "r": 0.2,
        "grid_n": 12,
        "potential": "radial_growth",
        "norms": [1, 2, 3, 4, 5, 6],
    },
    "example63": {"alpha": "1", "theta": "1/9", "n": 2, "norms": [1, 2, 3, 4, 5, 6], "j_max": 6},
}


def _rng_for(seed: int) -> random.Random:
    return random.Random(seed)


def _random_sample(rng: random.Random, max_atoms: int, max_value: int) -> WeightedSample:
    n = rng.randint(2, max_atoms)
    values = [Fraction(rng.randint(0, max_value), rng.randint(1, 4)) for _ in range(n)]
    weights = [Fraction(rng.randint(1, 6), rng.randint(1, 4)) for _ in range(n)]
    return WeightedSample(values, weights)


def run_rearrange(params, out: Path, seed: int, mode: str, threads: int) -> list[Path]:
    rng = _rng_for(seed)
    rows = []
    for k in range(int(params["instances"])):
        sample = _random_sample(rng, int(params["max_atoms"]), int(params["max_value"]))
        t = sample.total * Fraction(rng.randint(1, 7), 8)
        c = Fraction(rng.randint(1, 5))
        scaling_ok = rearrange_dec(sample.scaled(c), t) == c * rearrange_dec(sample, t)
        t2 = sample.total * Fraction(rng.randint(1, 7), 8)
        lo_t, hi_t = min(t, t2), max(t, t2)
        monotone_ok = rearrange_dec(sample, lo_t) >= rearrange_dec(sample, hi_t)
        rows.append([k, str(t), str(rearrange_dec(sample, t)),
                     str(rearrange_inc(sample, sample.total * Fraction(1, 2))),
                     int(scaling_ok), int(monotone_ok)])
    path = write_csv(out / "rearrange_lemmas.csv",
                     ["instance", "t", "dec", "inc_half", "scaling_ok", "monotone_ok"], rows)
    return [path]


def run_extremal(params, out: Path, seed: int, mode: str, threads: int) -> list[Path]:
    rng = _rng_for(seed)
    theta = parse_number(params["theta"], "rational")
    rows = []
    for k in range(int(params["instances"])):
        sample = _random_sample(rng, int(params["max_atoms"]), 9)
        t = sample.total * Fraction(rng.randint(1, 7), 8)
        inst = ExtremalInstance(sample, t)
        j = fractional_min_integral(inst)
        i = min_integral_bruteforce(inst)
        tb = sample.total * Fraction(rng.randint(1, 3), 4)
        lower_ok, upper_ok = check_rearrangement_bounds(inst, theta, tb)
        rows.append([k, str(t), str(j), str(i), int(j <= i), int(lower_ok), int(upper_ok)])
    path = write_csv(out / "extremal_oracle.csv",
                     ["instance", "t", "fractional_min", "subset_min", "j_le_i", "lower_ok", "upper_ok"],
                     rows)
    return [path]


def run_choquet(params, out: Path, seed: int, mode: str, threads: int) -> list[Path]:
    rng = _rng_for(seed)
    n = int(params["ground"])
    rows = []
    for k in range(int(params["instances"])):
        v = random_submodular(n, rng)
        f = [Fraction(rng.randint(0, 6), rng.randint(1, 3)) for _ in range(n)]
        ci = choquet_integral(v, f)
        bp = base_polyhedron_max(v, f)
        rows.append([k, str(ci), str(bp.value), str(bp.greedy), int(ci == bp.value)])
    path = write_csv(out / "choquet_duality.csv",
                     ["instance", "choquet", "bp_max", "greedy", "equal"], rows)
    return [path]


def run_kernels(params, out: Path, seed: int, mode: str, threads: int) -> list[Path]:
    spec = KernelSpec(params["kind"], int(params["dimension"]))
    files = []
    rows = []
    for r in params["r_values"]:
        result = kernel_band_check(spec, np.zeros(spec.dimension), float(r), float(params["r0"]),
                                   int(params["pairs"]), rng_seed=seed)
        for i, (ratio, sep) in enumerate(zip(result.ratios, result.separations)):
            rows.append([float(r), i, repr(sep), repr(ratio)])
    files.append(write_csv(out / "kernel_band.csv", ["r", "pair", "separation", "ratio"], rows))
    profile_path = out / "kernel_profile.dat"
    save_profile_dat(spec, profile_path)
    files.append(profile_path)
    return files


def run_partitions(params, out: Path, seed: int, mode: str, threads: int) -> list[Path]:
    d = int(params["dimension"])
    base = cantor_system(int(params["levels"]))
    system = base if d == 1 else product_system(base, d)
    report = verify_dense_system(system, int(params["trials"]), seed)
    files = []
    system_path = out / "dense_system.csv"
    save_system_csv(system, system_path)
    files.append(system_path)
    report_path = out / "dense_system_report.csv"
    save_report_csv(report, report_path, system.dimension)
    files.append(report_path)
    return files


def _criteria_potential(name: str, d: int):
    from .measure_space import build_cube_grid
    from .potentials import grid_potential

    if name == "radial_growth":
        def build(center, r, grid_n):
            grid = build_cube_grid(center, r, grid_n)
            vals = (np.linalg.norm(grid.centers, axis=1)) ** 2
            return grid_potential(grid, vals)

        return build
    raise ValueError(f"unknown potential preset {name!r}")


def run_criteria(params, out: Path, seed: int, mode: str, threads: int, figures: bool = True) -> list[Path]:
    d = 3
    gamma = GammaFunction("power", parse_number(params["alpha_gamma"], "rational"))
    r = float(params["r"])
    grid_n = int(params["grid_n"])
    builder = _criteria_potential(params["potential"], d)
    centers = [np.array([float(nm), 0.0, 0.0]) for nm in params["norms"]]
    values = []
    for center in centers:
        V = builder(center, r, grid_n)
        lo, hi = single_rearrangement_bounds(V, center, r, gamma, grid_n)
        values.append(lo)
    from .criteria import CriterionReport, _window_minima

    window_of, minima = _window_minima(values, 3)
    report = CriterionReport(
        params["criterion"], [tuple(c) for c in centers], values, window_of, minima,
        all(a < b for a, b in zip(minima, minima[1:])),
        {"r": r, "grid_n": grid_n, "potential": params["potential"]},
    )
    files = [criterion_report_csv(report, out / "criterion_sweep.csv"),
             criterion_report_dat(report, out / "criterion_sweep.dat")]
    if figures:
        files.append(render_trend_figure(report, out / "criterion_sweep.png"))
    return files


def run_example63(params, out: Path, seed: int, mode: str, threads: int, figures: bool = True) -> list[Path]:
    """Separation run: the pair criterion diverges along lattice cells while the
    plain rearrangement stays flat along the shrinking-cube trail."""
    d = 3
    alpha = parse_number(params["alpha"], "rational")
    theta = Fraction(str(params["theta"]))
    n = int(params["n"])
    gamma = GammaFunction("power", alpha)
    V = cantor_window_potential(d, alpha, theta=theta)
    base = cantor_system(max(10, n + 2), theta=theta)
    system = product_system(base, d)

    cells = [(int(nm), 0, 0) for nm in params["norms"]]
    double_report = divergence_sweep(
        "madic_double", V, cells, {"n": n, "system": system, "gamma": gamma}, threads=threads
    )
    files = [
        criterion_report_csv(double_report, out / "example63_madic_double.csv"),
        criterion_report_dat(double_report, out / "example63_madic_double.dat"),
    ]

    j_max = int(params["j_max"])
    trail = []
    for j in range(1, j_max + 1):
        r_j = Fraction(1, 3**j)
        a_j1 = Fraction(1, 3**j)  # left end of the leftmost level-j interval
        center = (a_j1 + j, Fraction(0), Fraction(0))
        trail.append((center, r_j))
    single_report = sweep_centers_varying_radius("single_shrinking", V, trail, gamma)
    files += [
        criterion_report_csv(single_report, out / "example63_single.csv"),
        criterion_report_dat(single_report, out / "example63_single.dat"),
    ]
    if figures:
        files.append(render_trend_figure(double_report, out / "example63_madic_double.png"))
        files.append(render_trend_figure(single_report, out / "example63_single.png"))
    summary = write_csv(
        out / "example63_summary.csv",
        ["sweep", "diverging", "window_minima"],
        [
            ["madic_double", int(double_report.diverging), ";".join(repr(v) for v in double_report.window_minima)],
            ["single", int(single_report.diverging), ";".join(repr(v) for v in single_report.window_minima)],
        ],
    )
    files.append(summary)
    return files


RUNNERS = {
    "rearrange": run_rearrange,
    "extremal": run_extremal,
    "choquet": run_choquet,
    "kernels": run_kernels,
    "partitions": run_partitions,
    "criteria": run_criteria,
    "example63": run_example63,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discrit",
        description="rearrangement / capacity / dense-system criterion toolkit",
    )
    parser.add_argument("subcommand", nargs="?", choices=sorted(RUNNERS), help="what to run")
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 0 or config value)")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--mode", choices=["float", "rational"], default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    config = {}
    if args.config is not None:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return USAGE_EXIT

    subcommand = args.subcommand or config.get("subcommand")
    if not subcommand:
        parser.print_usage(sys.stderr)
        print("error: no subcommand given (flag or config)", file=sys.stderr)
        return USAGE_EXIT
    if subcommand not in RUNNERS:
        print(f"error: unknown subcommand {subcommand!r}", file=sys.stderr)
        return USAGE_EXIT

    params = dict(DEFAULTS[subcommand])
    params.update(config.get("params", {}))
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    mode = args.mode or config.get("mode", "float")
    threads = args.threads if args.threads != 1 else int(config.get("threads", 1))

    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    effective = {
        "subcommand": subcommand,
        "params": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in params.items()},
        "seed": seed,
        "mode": mode,
        "threads": threads,
    }

    start = time.perf_counter()
    try:
        runner = RUNNERS[subcommand]
        if subcommand in ("criteria", "example63"):
            files = runner(params, out, seed, mode, threads, figures=not args.no_figures)
        else:
            files = runner(params, out, seed, mode, threads)
    except (ValueError, KeyError) as exc:
        print(f"runtime failure in {subcommand}: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - start
    write_manifest(out, effective, seed, wall, files)
    print(f"{subcommand}: wrote {len(files)} file(s) + manifest.json to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
