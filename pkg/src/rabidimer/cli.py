"""Command-line front end: ``rabidimer {run,sweep,oracle-compare,spectrum,diagram}``.

Every subcommand resolves a :class:`~rabidimer.config.RunConfig` from
``--config`` plus ``--set key=value`` flags, writes its artifacts and a
``manifest.txt`` into the output directory, and exits with 0 (success),
2 (configuration error) or 3 (numerical abort).
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import arp_check, energy_diagram, fit_peak_law, plz_spectrum
from .ansatz import initialize
from .config import OUTPUT_ENV, QUBIT_STATES, ConfigError, RunConfig, expand_sweep, parse_config
from .eom import SolverFailure
from .integrator import PropagationAbort, propagate
from .observables import COLUMNS, TrajectoryRecord
from .oracle import FockLeakage, initial_state, propagate_exact

log = logging.getLogger("rabidimer")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


class NumericalAbort(RuntimeError):
    pass


def build_initial_state(config: RunConfig):
    ic = config.initial
    state = initialize(ic.M, ic.n_photons, seed=ic.seed, side=ic.side, noise=ic.noise,
                       seed_around=ic.seed_around)
    q = QUBIT_STATES[ic.qubits]
    if q != 3:
        state.amplitudes[[q, 3]] = state.amplitudes[[3, q]]
    return state


def write_manifest(path: Path, config: RunConfig, status: str, extra=()) -> None:
    lines = [f"# rabidimer {__version__}", f"status = {status}"]
    lines += [str(x) for x in extra]
    lines += config.manifest_lines()
    path.write_text("\n".join(lines) + "\n")


def run_trajectory(config: RunConfig, out_dir: Path, name: str = "trajectory.csv") -> TrajectoryRecord:
    """Propagate one configuration and write its CSV and manifest.

    Raises :class:`NumericalAbort` after writing the partial record and the
    abort reason.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        state = build_initial_state(config)
        record = propagate(state, config.model, config.propagation)
    except (PropagationAbort, SolverFailure, ArithmeticError) as exc:
        partial = getattr(exc, "record", None)
        if partial is not None:
            partial.write_csv(out_dir / name)
        write_manifest(out_dir / "manifest.txt", config, "aborted", [f"abort_reason = {exc}"])
        raise NumericalAbort(str(exc)) from None
    record.write_csv(out_dir / name)
    elapsed = time.perf_counter() - start
    write_manifest(out_dir / "manifest.txt", config, "ok",
                   [f"rows = {len(record)}", f"wall_seconds = {elapsed:.1f}"])
    return record


def _sweep_worker(args):
    config, out_dir = args
    try:
        run_trajectory(config, out_dir)
        return config.label, "ok", ""
    except NumericalAbort as exc:
        return config.label, "aborted", str(exc)


def run_sweep(config: RunConfig, out_dir: Path, workers: int = 0):
    """Run every sweep point in a process pool; the coordinator writes ``index.csv``."""
    points = expand_sweep(config)
    keys = sorted(config.sweep)
    jobs = [(p, out_dir / p.label) for p in points]
    n_workers = workers or os.cpu_count() or 1
    if n_workers == 1 or len(jobs) == 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with cf.ProcessPoolExecutor(max_workers=min(n_workers, len(jobs))) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "index.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *keys, "status", "path", "reason"])
        for p, (label, status, reason) in zip(points, results):
            w.writerow([label, *(repr(p[k]) for k in keys), status,
                        f"{label}/trajectory.csv", reason])
    write_manifest(out_dir / "manifest.txt", config,
                   "ok" if all(r[1] == "ok" for r in results) else "aborted",
                   [f"points = {len(points)}"])
    return points, results


def compare_records(var: TrajectoryRecord, exact: TrajectoryRecord, tolerance: float):
    """Per-column max |variational - exact| on the common time grid."""
    tv, te = var["t"], exact["t"]
    n = min(len(tv), len(te))
    if not np.allclose(tv[:n], te[:n], atol=1e-9):
        raise ValueError("time grids of the two records differ")
    rows = []
    for c in COLUMNS[1:-1]:
        d = np.abs(var[c][:n] - exact[c][:n])
        i = int(np.argmax(d))
        rows.append((c, float(d[i]), float(tv[i]), bool(d[i] < tolerance)))
    return rows


def run_oracle_compare(config: RunConfig, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    prop = config.propagation
    sample = prop.dt * prop.output_stride
    o_dt = config["oracle.dt"]
    o_stride = int(round(sample / o_dt))
    if o_stride < 1 or abs(o_stride * o_dt - sample) > 1e-9 * sample:
        raise ConfigError("dt * output_stride must be a multiple of oracle.dt")
    ic = config.initial
    var = run_trajectory(config, out_dir, "variational.csv")
    fock = config.fock
    psi, lost = initial_state(fock, ic.n_photons, QUBIT_STATES[ic.qubits], ic.side)
    try:
        ex = propagate_exact(psi, config.model, fock, o_dt, prop.t_end, o_stride,
                             truncation_loss=lost)
    except FockLeakage as exc:
        write_manifest(out_dir / "manifest.txt", config, "aborted",
                       [f"abort_reason = oracle {exc}"])
        raise NumericalAbort(f"oracle: {exc}") from None
    ex.record.write_csv(out_dir / "exact.csv")
    tol = config["oracle.tolerance"]
    rows = compare_records(var, ex.record, tol)
    with open(out_dir / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "max_abs_diff", "at_t", "within_tolerance"])
        for c, d, t, ok in rows:
            w.writerow([c, f"{d:.17g}", f"{t:.17g}", ok])
    worst = max(rows, key=lambda r: r[1])
    write_manifest(out_dir / "manifest.txt", config, "ok", [
        f"fock_dimension = {fock.dim}",
        f"truncation_loss = {ex.truncation_loss:.3e}",
        f"max_leakage = {ex.max_leakage:.3e}",
        f"worst_column = {worst[0]} ({worst[1]:.3e} at t={worst[2]:.4g})",
        f"all_within_tolerance = {all(r[3] for r in rows)}",
    ])
    return rows


def _spectrum_of(record: TrajectoryRecord, t_min: float, guard: float):
    t = record["t"]
    keep = t >= t_min
    dt = float(np.median(np.diff(t)))
    left = plz_spectrum(record["P_LZ_L"][keep], dt, guard)
    right = plz_spectrum(record["P_LZ_R"][keep], dt, guard)
    return left, right


def run_spectrum(config: RunConfig, out_dir: Path):
    """FFT of P_LZ series: from ``analysis.input`` when set, otherwise from fresh
    trajectories (one per sweep point). With several points the peak law is fitted
    against omega_r."""
    out_dir.mkdir(parents=True, exist_ok=True)
    guard = config["analysis.guard_band"]
    t_min = config["analysis.t_min"]
    if config["analysis.input"]:
        sources = [(config, TrajectoryRecord.read_csv(config["analysis.input"]))]
    else:
        points, results = run_sweep(config, out_dir / "runs", config["run.workers"])
        bad = [r for r in results if r[1] != "ok"]
        if bad:
            raise NumericalAbort(f"{len(bad)} trajectories aborted: {bad[0][2]}")
        sources = [(p, TrajectoryRecord.read_csv(out_dir / "runs" / p.label / "trajectory.csv"))
                   for p in points]
    peaks = []
    with open(out_dir / "spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "qubit", "frequency", "magnitude"])
        for cfg, rec in sources:
            left, right = _spectrum_of(rec, t_min, guard)
            for q, s in (("L", left), ("R", right)):
                for f, m in zip(s.frequencies, s.magnitudes):
                    w.writerow([cfg.label or "input", q, f"{f:.17g}", f"{m:.17g}"])
            peaks.append((cfg.label or "input", cfg["model.omega_r"], cfg["model.omega_ph"],
                          left.peak_frequency, right.peak_frequency, left.resolution))
    with open(out_dir / "peaks.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "omega_r", "omega_ph", "peak_L", "peak_R", "resolution",
                    "omega_r_over_pi"])
        for lab, wr, wph, pl, pr, res in peaks:
            w.writerow([lab, wr, wph, f"{pl:.17g}", f"{pr:.17g}", f"{res:.17g}",
                        f"{wr / np.pi:.17g}"])
    extra = []
    wr = np.array([p[1] for p in peaks])
    if np.unique(wr).size >= 2:
        slope, intercept, resid = fit_peak_law(wr, [p[3] for p in peaks])
        extra = [f"fit_slope = {slope:.17g}", f"fit_intercept = {intercept:.17g}",
                 f"fit_residual = {resid:.3e}",
                 f"slope_over_inverse_pi = {slope * np.pi:.6f}"]
    write_manifest(out_dir / "manifest.txt", config, "ok", extra)
    return peaks


def run_diagram(config: RunConfig, out_dir: Path):
    """Diabatic level table and crossing list (with ARP verdicts) for both qubits."""
    out_dir.mkdir(parents=True, exist_ok=True)
    params = config.model
    n_show = config["analysis.n_show"]
    t_end = config["propagation.t_end"] or None
    threshold = config["analysis.arp_threshold"]
    with open(out_dir / "diagram.csv", "w", newline="") as fd, \
            open(out_dir / "crossings.csv", "w", newline="") as fc:
        wd = csv.writer(fd, lineterminator="\n")
        wc = csv.writer(fc, lineterminator="\n")
        wd.writerow(["qubit", "t", "qubit_state", "n", "energy"])
        wc.writerow(["qubit", "time", "n", "branch", "gap", "sweep_rate", "ratio", "adiabatic"])
        for side, drive in (("L", params.drive_L), ("R", params.drive_R)):
            d = energy_diagram(drive, params, n_show, t_end)
            for label, levels in (("down", d.down_levels), ("up", d.up_levels)):
                for n, row in enumerate(levels):
                    for t, e in zip(d.times, row):
                        wd.writerow([side, f"{t:.17g}", label, n, f"{e:.17g}"])
            for c in d.crossings:
                ok, ratio = arp_check(c, c.n, threshold)
                wc.writerow([side, f"{c.time:.17g}", c.n, c.branch, f"{c.gap:.17g}",
                             f"{c.sweep_rate:.17g}", f"{ratio:.17g}", ok])
    write_manifest(out_dir / "manifest.txt", config, "ok")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rabidimer", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, hlp in (("run", "propagate one trajectory"),
                      ("sweep", "propagate every point of the sweep.* lists"),
                      ("oracle-compare", "variational vs exact Fock propagation"),
                      ("spectrum", "FFT of P_LZ series and the peak-frequency law"),
                      ("diagram", "diabatic energy diagram and avoided crossings")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", "-c", help="key = value config file")
        sp.add_argument("--set", "-s", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--output-dir", "-o",
                        help=f"output directory (overrides config and ${OUTPUT_ENV})")
        sp.add_argument("--workers", "-j", type=int, help="sweep worker processes (0: all CPUs)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.set) + [f"run.mode={args.command}"]
    if args.output_dir:
        overrides.append(f"run.output_dir={args.output_dir}")
    if args.workers is not None:
        overrides.append(f"run.workers={args.workers}")
    try:
        config = parse_config(args.config, overrides)
        if args.output_dir:
            # an explicit flag beats the environment variable
            config.values["run.output_dir"] = args.output_dir
            config.provenance["run.output_dir"] = "flag"
        out = config.output_dir
        if args.command == "run":
            if config.sweep:
                raise ConfigError("sweep.* keys need the 'sweep' subcommand")
            run_trajectory(config, out)
        elif args.command == "sweep":
            _, results = run_sweep(config, out, config["run.workers"])
            bad = [r for r in results if r[1] != "ok"]
            if bad:
                print(f"{len(bad)} of {len(results)} sweep points aborted", file=sys.stderr)
                return EXIT_ABORT
        elif args.command == "oracle-compare":
            rows = run_oracle_compare(config, out)
            for c, d, t, ok in rows:
                print(f"{c:>10} {d:.3e} at t={t:<8.4g} {'ok' if ok else 'EXCEEDS'}")
        elif args.command == "spectrum":
            for lab, wr, wph, pl, pr, res in run_spectrum(config, out):
                print(f"{lab}: omega_r={wr:g} omega_ph={wph:g} peak_L={pl:.4f} "
                      f"peak_R={pr:.4f} (omega_r/pi={wr / np.pi:.4f}, bin={res:.4f})")
        elif args.command == "diagram":
            run_diagram(config, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
