"""Monte-Carlo sweep harness and command-line entry point.

Three sweeps mirror the headline experiments (total power, surface location,
element count) plus a single-point mode.  Every scheme sees the same channel
realization at matched total power within a trial, rows are emitted in a
deterministic order regardless of worker count, and per-row failures are
recorded in the status column without aborting the sweep.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ao
from .channel import save_channels, synth_channels
from .errors import DomainError, FormatError, RiswiptError
from .scenario import (SCHEMES, Scenario, default_scenario, dbm_to_watt,
                       load_config, trial_seed, watt_to_dbm)

CSV_SCHEMA_LINE = "# riswipt-csv v1"
SWEEP_KINDS = ("power", "ris_location", "elements", "single")


@dataclass(frozen=True)
class SweepSpec:
    kind: str                        # one of SWEEP_KINDS
    grid: tuple[float, ...]          # dBm for power, meters for location, counts for elements
    trials: int
    schemes: tuple[str, ...]
    master_seed: int
    out_path: str
    parallel: int = 1
    dump_channels: str | None = None

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise DomainError(f"kind must be one of {SWEEP_KINDS}")
        if not self.grid:
            raise DomainError("sweep grid must be non-empty")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not self.schemes or any(sc not in SCHEMES for sc in self.schemes):
            raise DomainError(f"schemes must be a non-empty subset of {SCHEMES}")


def apply_sweep_value(base: Scenario, kind: str, value: float) -> Scenario:
    if kind == "power":
        return base.replace(p_total=dbm_to_watt(value))
    if kind == "ris_location":
        return base.replace(ris_pos=(float(value), base.ris_pos[1]))
    if kind == "elements":
        return base.replace(n_elements=int(value))
    return base


def result_columns(s: Scenario) -> list[str]:
    cols = ["scheme", "trial", "seed", "sweep_kind", "sweep_value",
            "iterations", "status", "wsr_bits"]
    cols += [f"rate_{k + 1}" for k in range(s.n_ir)]
    cols += [f"harvested_{i + 1}" for i in range(s.n_er)]
    cols += ["bs_power_used", "ris_power_used", "runtime_ms"]
    return cols


def _run_task(args):
    base, kind, value, scheme, trial, master_seed, engine = args
    seed = trial_seed(master_seed, trial)
    scen = apply_sweep_value(base, kind, value).replace(scheme=scheme)
    cs = synth_channels(scen, seed=seed)
    tic = time.perf_counter()
    trace = ao.run(scen, cs, seed=seed, engine=engine)
    runtime_ms = (time.perf_counter() - tic) * 1e3
    if trace.metrics is not None:
        rates = list(trace.metrics.rates)
        harvested = list(trace.metrics.harvested)
        wsr = trace.metrics.wsr
        bs_used = trace.metrics.bs_power
        ris_used = trace.metrics.ris_power
    else:
        rates = [0.0] * scen.n_ir
        harvested = [0.0] * scen.n_er
        wsr = bs_used = ris_used = 0.0
    row = {
        "scheme": scheme, "trial": trial, "seed": seed, "sweep_kind": kind,
        "sweep_value": value, "iterations": trace.iterations,
        "status": trace.status, "wsr_bits": wsr,
        "bs_power_used": bs_used, "ris_power_used": ris_used,
        "runtime_ms": runtime_ms,
    }
    for k, r in enumerate(rates):
        row[f"rate_{k + 1}"] = r
    for i, h in enumerate(harvested):
        row[f"harvested_{i + 1}"] = h
    return row


def run_sweep(spec: SweepSpec, base: Scenario | None = None,
              engine: str | None = None, clock=None) -> str:
    """Execute the sweep and write one CSV; returns the output path.

    `clock` overrides the per-row runtime measurement (injectable so that
    byte-level reproducibility can be tested); when given, it is called once
    per row in deterministic order after the runs complete.
    """
    base = base if base is not None else default_scenario()
    tasks = []
    for value in spec.grid:
        for trial in range(spec.trials):
            for scheme in spec.schemes:
                tasks.append((base, spec.kind, value, scheme, trial,
                              spec.master_seed, engine))

    if spec.parallel > 1:
        with ProcessPoolExecutor(max_workers=spec.parallel) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        rows = [_run_task(t) for t in tasks]

    order = {sc: i for i, sc in enumerate(SCHEMES)}
    rows.sort(key=lambda r: (r["sweep_value"], order[r["scheme"]], r["trial"]))
    if clock is not None:
        for row in rows:
            row["runtime_ms"] = clock()

    if spec.dump_channels:
        import os
        os.makedirs(spec.dump_channels, exist_ok=True)
        for value in spec.grid:
            scen = apply_sweep_value(base, spec.kind, value)
            for trial in range(spec.trials):
                seed = trial_seed(spec.master_seed, trial)
                cs = synth_channels(scen, seed=seed)
                name = f"{spec.kind}_{value:g}_trial{trial}.chan"
                save_channels(cs, os.path.join(spec.dump_channels, name))

    columns = result_columns(base)
    with open(spec.out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_LINE + "\n")
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})
    return spec.out_path


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def read_rows(csv_path) -> list[dict]:
    with open(csv_path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# riswipt-csv"):
            raise FormatError("missing schema line")
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "wsr_bits" not in reader.fieldnames:
            raise FormatError("missing header row")
        rows = list(reader)
    for row in rows:
        try:
            row["sweep_value"] = float(row["sweep_value"])
            row["wsr_bits"] = float(row["wsr_bits"])
            row["trial"] = int(row["trial"])
        except (KeyError, TypeError, ValueError) as ex:
            raise FormatError(f"malformed row: {ex}") from ex
    return rows


def summarize(csv_path) -> list[dict]:
    """Per (scheme, sweep value): mean/median converged WSR and failure count.

    Rows whose status is not 'converged' count as failures and are excluded
    from the mean; a cell with no converged rows reports nan.
    """
    rows = read_rows(csv_path)
    cells: dict[tuple, list] = {}
    for row in rows:
        cells.setdefault((row["scheme"], row["sweep_value"]), []).append(row)
    out = []
    for (scheme, value), bucket in sorted(cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        good = [r["wsr_bits"] for r in bucket if r["status"] == "converged"]
        out.append({
            "scheme": scheme, "sweep_value": value,
            "mean_wsr": float(np.mean(good)) if good else float("nan"),
            "median_wsr": float(np.median(good)) if good else float("nan"),
            "trials": len(bucket), "failures": len(bucket) - len(good),
        })
    return out


def run_imported(args, base: Scenario) -> int:
    """Single-point run on one imported channel realization, per scheme."""
    from .channel import load_channels

    cs = load_channels(args.channels)
    if cs.n_elements != base.n_elements or cs.n_antennas != base.n_antennas:
        raise FormatError("channel dump does not match the scenario dimensions")
    columns = result_columns(base)
    schemes = tuple(sc.strip() for sc in args.schemes.split(",") if sc.strip())
    value = watt_to_dbm(base.p_total)
    rows = []
    for scheme in schemes:
        scen = base.replace(scheme=scheme)
        tic = time.perf_counter()
        trace = ao.run(scen, cs, seed=args.seed, engine=args.engine)
        row = {"scheme": scheme, "trial": 0, "seed": args.seed,
               "sweep_kind": "power", "sweep_value": value,
               "iterations": trace.iterations, "status": trace.status,
               "wsr_bits": trace.metrics.wsr if trace.metrics else 0.0,
               "bs_power_used": trace.metrics.bs_power if trace.metrics else 0.0,
               "ris_power_used": trace.metrics.ris_power if trace.metrics else 0.0,
               "runtime_ms": (time.perf_counter() - tic) * 1e3}
        for k in range(base.n_ir):
            row[f"rate_{k + 1}"] = trace.metrics.rates[k] if trace.metrics else 0.0
        for i in range(base.n_er):
            row[f"harvested_{i + 1}"] = trace.metrics.harvested[i] if trace.metrics else 0.0
        rows.append(row)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_SCHEMA_LINE + "\n")
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})
    print(f"wrote {args.out}")
    return 0


# --- command line ------------------------------------------------------------

DEFAULT_GRIDS = {
    "power": tuple(np.arange(20.0, 41.0, 2.0)),        # dBm
    "ris_location": tuple(np.arange(5.0, 31.0, 5.0)),  # meters along x
    "elements": (10, 20, 30, 40, 50, 60, 70, 80),
}


def _parse_grid(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riswipt",
        description="Monte-Carlo transmission-design sweeps for an "
                    "amplifying-surface SWIPT downlink")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "power": "weighted sum rate versus total power (grid in dBm)",
        "location": "weighted sum rate versus surface x-coordinate (meters)",
        "elements": "weighted sum rate versus element count",
        "single": "one grid point using the scenario as configured",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="scenario config file (flat key = value)")
        p.add_argument("--trials", type=int, default=50)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--schemes", default="active,passive,none",
                       help="comma separated subset of active,passive,none")
        p.add_argument("--out", default=f"{name}_sweep.csv")
        p.add_argument("--parallel", type=int, default=1)
        p.add_argument("--grid", help="comma separated sweep values")
        p.add_argument("--dump-channels", dest="dump_channels",
                       help="directory for per-trial channel dumps")
        p.add_argument("--engine", choices=("native", "clarabel"))
        if name == "single":
            p.add_argument("--channels", help="run on a saved channel realization")
    summ = sub.add_parser("summarize", help="aggregate a sweep CSV")
    summ.add_argument("csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "summarize":
            for row in summarize(args.csv):
                print(f"{row['scheme']:8s} value={row['sweep_value']!r} "
                      f"mean={row['mean_wsr']!r} median={row['median_wsr']!r} "
                      f"trials={row['trials']} failures={row['failures']}")
            return 0
        base = load_config(args.config) if args.config else default_scenario()
        if args.command == "single" and args.channels:
            return run_imported(args, base)
        kind = {"power": "power", "location": "ris_location",
                "elements": "elements", "single": "single"}[args.command]
        if kind == "single":
            grid = (watt_to_dbm(base.p_total),) if args.grid is None \
                else _parse_grid(args.grid)
            kind = "power"
        else:
            grid = DEFAULT_GRIDS[kind] if args.grid is None else _parse_grid(args.grid)
        spec = SweepSpec(
            kind=kind, grid=tuple(grid), trials=args.trials,
            schemes=tuple(sc.strip() for sc in args.schemes.split(",") if sc.strip()),
            master_seed=args.seed, out_path=args.out, parallel=args.parallel,
            dump_channels=args.dump_channels)
        path = run_sweep(spec, base=base, engine=args.engine)
        print(f"wrote {path}")
        return 0
    except (RiswiptError, OSError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
