"""Command-line interface: ``chromonet <subcommand> [flags]``.

Every flag can also come from a JSON file given with ``--config``; keys are
the flag names with dashes or underscores.  Flags on the command line win.
List-valued flags (``--sites``, ``--diameter``, ``--lambda``) take ``7``,
``30,40,50`` or an inclusive range ``2-20`` / ``30:100:10``.

Exit status: 0 ok, 2 invalid configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .bath import QuadratureError
from .ensemble import (
    SweepPlan,
    correlation_report,
    density_histograms,
    evaluate,
    read_records,
    run_plan,
    sample_for,
    saturation_point,
    select_extremes,
    sweep_n_table,
)
from .exciton import build_hamiltonian
from .geometry import Configuration, CouplingModel, GeometryError, PackingError
from .pathways import PathLimitError, path_summary
from .tc2 import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

DEFAULTS = {
    "sites": "7",
    "diameter": "30",
    "lambda": "35",
    "gamma": 50.0,
    "temp": 298.0,
    "r_trap": 1.0,
    "r_loss": 1e-3,
    "energy_window": 500.0,
    "coupling_const": 134000.0,
    "samples": None,
    "seed": 0,
    "solver": "laplace",
    "out": None,
    "bins": 10,
    "threshold": 1000.0,
    "workers": 1,
    "input": None,
    "top": 100,
}


SWEEP_SAMPLES = 200


class ConfigError(ValueError):
    pass


def _number_list(text, kind=float) -> tuple:
    if isinstance(text, (int, float)):
        return (kind(text),)
    if isinstance(text, list):
        return tuple(kind(v) for v in text)
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            lo, hi, step = (float(v) for v in part.split(":"))
            out.extend(kind(v) for v in np.arange(lo, hi + step / 2, step))
        elif "-" in part[1:]:
            lo, hi = part.split("-")
            out.extend(kind(v) for v in range(int(lo), int(hi) + 1))
        elif part:
            out.append(kind(float(part)))
    if not out:
        raise ConfigError(f"empty list {text!r}")
    return tuple(out)


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file mirroring these flags")
    shared.add_argument("--sites", help="chromophore count(s), e.g. 7 or 2-20")
    shared.add_argument("--diameter", help="sphere diameter(s) in A")
    shared.add_argument("--lambda", dest="lambda", help="reorganization energy(ies) in cm^-1")
    shared.add_argument("--gamma", type=float, help="bath cutoff in cm^-1 (default 50)")
    shared.add_argument("--temp", type=float, help="temperature in K (default 298)")
    shared.add_argument("--r-trap", dest="r_trap", type=float, help="trapping rate in 1/ps (default 1)")
    shared.add_argument("--r-loss", dest="r_loss", type=float, help="loss rate in 1/ps (default 0.001)")
    shared.add_argument("--energy-window", dest="energy_window", type=float, help="site energy window in cm^-1")
    shared.add_argument("--coupling-const", dest="coupling_const", type=float, help="dipole constant in cm^-1 A^3")
    shared.add_argument("--samples", type=int, help="samples per cell (default 200 for sweeps, else 1)")
    shared.add_argument("--seed", type=int, help="master seed")
    shared.add_argument("--solver", choices=("laplace", "time"))
    shared.add_argument("--out", help="output file (directory for analyze)")
    shared.add_argument("--bins", type=int, help="histogram bins (default 10)")
    shared.add_argument("--threshold", type=float, help="dominant path threshold in cm^-1 (default 1000)")
    shared.add_argument("--workers", type=int, help="worker processes (default 1)")
    shared.add_argument("--input", help="configuration JSON (ete, paths) or records JSONL (analyze)")
    shared.add_argument("--top", type=int, help="tail size for analyze (default 100)")
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="chromonet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[shared], help="sample random configurations as JSONL")
    sub.add_parser("ete", parents=[shared], help="transfer efficiency of configurations")
    sub.add_parser("sweep-n", parents=[shared], help="mean ETE versus number of sites")
    sub.add_parser("sweep-density", parents=[shared], help="ETE histograms versus diameter and lambda")
    sub.add_parser("analyze", parents=[shared], help="tables and summary from a records file")
    sub.add_parser("paths", parents=[shared], help="spatial path summary of configurations")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key == "temperature":
                key = "temp"
            if key not in opts:
                raise ConfigError(f"unknown config key {key!r}")
            opts[key] = value
    for key in opts:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def plan_from_options(opts: dict, command: str = "sweep-n") -> SweepPlan:
    samples = opts["samples"]
    if samples is None:
        samples = SWEEP_SAMPLES if command.startswith("sweep") else 1
    try:
        return SweepPlan(
            diameters=_number_list(opts["diameter"]),
            site_counts=_number_list(opts["sites"], int),
            lambdas=_number_list(opts["lambda"]),
            samples_per_cell=int(samples),
            master_seed=int(opts["seed"]),
            gamma=float(opts["gamma"]),
            temperature=float(opts["temp"]),
            r_trap=float(opts["r_trap"]),
            r_loss=float(opts["r_loss"]),
            energy_window=float(opts["energy_window"]),
            coupling_const=float(opts["coupling_const"]),
            threshold=float(opts["threshold"]),
            solver=str(opts["solver"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _validate(plan: SweepPlan) -> None:
    # Surface bad physical parameters before any work starts.
    for lam in plan.lambdas:
        plan.bath(lam)
    CouplingModel(plan.coupling_const)
    for n in plan.site_counts:
        if n < 2:
            raise ConfigError("--sites must be >= 2")
    for d in plan.diameters:
        if d < 10:
            raise ConfigError("--diameter must be >= 10 A")
    if plan.r_trap <= 0 or plan.r_loss <= 0:
        raise ConfigError("--r-trap and --r-loss must be > 0")


def _writer(path):
    return open(path, "w") if path else contextlib.nullcontext(sys.stdout)


def _configurations(opts: dict, plan: SweepPlan):
    """Configurations from --input (JSON object or JSONL), else sampled from the plan."""
    if opts["input"]:
        text = Path(opts["input"]).read_text()
        try:
            items = [json.loads(text)]
        except json.JSONDecodeError:
            items = [json.loads(line) for line in text.splitlines() if line.strip()]
        return [Configuration.from_dict(item) for item in items]
    return [sample_for(plan, n, d, i)[0]
            for n in plan.site_counts for d in plan.diameters for i in range(plan.samples_per_cell)]


def cmd_generate(opts, plan):
    with _writer(opts["out"]) as fh:
        for config in _configurations(opts, plan):
            fh.write(config.to_json() + "\n")


def cmd_ete(opts, plan):
    with _writer(opts["out"]) as fh:
        for i, config in enumerate(_configurations(opts, plan)):
            for lam in plan.lambdas:
                fh.write(evaluate(config, plan, lam, sample_index=i).to_json() + "\n")


def cmd_paths(opts, plan):
    model = CouplingModel(plan.coupling_const)
    with _writer(opts["out"]) as fh:
        for config in _configurations(opts, plan):
            h = build_hamiltonian(config, model)
            summary = path_summary(h, config.initial_index, config.trap_index, plan.threshold, int(opts["bins"]))
            summary = {"seed": config.seed, "n": config.n, "diameter": config.diameter, **summary}
            fh.write(json.dumps(summary, separators=(",", ":")) + "\n")


def cmd_sweep_n(opts, plan):
    records = run_plan(plan, opts["out"], int(opts["workers"]))
    rows = sweep_n_table(records)
    _write_csv(sys.stdout, rows)
    for (d, lam) in sorted({(r["diameter"], r["lambda"]) for r in rows}):
        cell = [r for r in rows if r["diameter"] == d and r["lambda"] == lam]
        if len(cell) >= 4:
            n_sat, _ = saturation_point(cell)
            print(f"# d={d:g} lambda={lam:g}: saturation at n={n_sat}", file=sys.stderr)


def cmd_sweep_density(opts, plan):
    records = run_plan(plan, opts["out"], int(opts["workers"]))
    for row in density_histograms(records, int(opts["bins"])):
        print(json.dumps(row, separators=(",", ":")))


def _write_csv(fh, rows):
    if not rows:
        return
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)


def analyze(records, out_dir, bins: int = 10, m: int = 100) -> str:
    """Write CSV tables and a text summary for ``records`` into ``out_dir``; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    hist_rows = []
    for row in density_histograms(records, bins):
        for k, count in enumerate(row["counts"]):
            hist_rows.append({"diameter": row["diameter"], "lambda": row["lambda"],
                              "bin_lo": row["edges"][k], "bin_hi": row["edges"][k + 1], "count": count})
    with open(out / "histogram.csv", "w", newline="") as fh:
        _write_csv(fh, hist_rows)
    with open(out / "sweep.csv", "w", newline="") as fh:
        _write_csv(fh, sweep_n_table(records))

    tail_rows = []
    groups = {}
    for rec in records:
        groups.setdefault((rec.n, rec.diameter, rec.lam), []).append(rec)
    for recs in groups.values():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            top, bottom = select_extremes(recs, m)
        for tail, chosen in (("top", top), ("bottom", bottom)):
            for rank, rec in enumerate(chosen):
                tail_rows.append({"tail": tail, "rank": rank, **rec.to_dict()})
    with open(out / "tails.csv", "w", newline="") as fh:
        _write_csv(fh, tail_rows)

    report = correlation_report(records, m)
    with open(out / "correlation.csv", "w", newline="") as fh:
        _write_csv(fh, [{k: v for k, v in r.items() if k != "dominant_vs_m"} for r in report])
    with open(out / "dominant.csv", "w", newline="") as fh:
        _write_csv(fh, [{"diameter": r["diameter"], "lambda": r["lambda"], **row}
                        for r in report for row in r["dominant_vs_m"]])

    lines = [f"{len(records)} records, tails of {m}"]
    for row in density_histograms(records, bins):
        lines.append(f"d={row['diameter']:g} lambda={row['lambda']:g}: mean eta {row['mean_eta']:.4f} "
                     f"std {row['std_eta']:.4f} (n={row['count']}, {row['positivity_flags']} clamped)")
    for r in report:
        lines.append(f"d={r['diameter']:g} lambda={r['lambda']:g}: overlap top/bottom {r['overlap_ratio']:.3f}, "
                     f"gap top {r['top_gap_mean']:.1f} bottom {r['bottom_gap_mean']:.1f} cm^-1, "
                     f"z top/all {r['z_top'] / r['z_all']:.3f}")
    summary = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(summary)
    return summary


def cmd_analyze(opts, plan):
    if not opts["input"]:
        raise ConfigError("analyze needs --input records.jsonl")
    try:
        records = read_records(opts["input"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read records: {exc}") from exc
    if not records:
        raise ConfigError("no records in input")
    sys.stdout.write(analyze(records, opts["out"] or "analysis", int(opts["bins"]), int(opts["top"])))


COMMANDS = {
    "generate": cmd_generate,
    "ete": cmd_ete,
    "sweep-n": cmd_sweep_n,
    "sweep-density": cmd_sweep_density,
    "analyze": cmd_analyze,
    "paths": cmd_paths,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
        plan = plan_from_options(opts, args.command)
        _validate(plan)
        COMMANDS[args.command](opts, plan)
    except (ConfigError, GeometryError, PackingError, PathLimitError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, QuadratureError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
