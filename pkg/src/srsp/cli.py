"""Command line entry point: simulate, mass-limit ladders, inequality checks, reports."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config import ConfigError, RunConfig, load_config
from .dynamics import Trajectory, evolve
from .presets import init_preset
from .snapshot import write_snapshot
from .state import StateError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4
EXIT_PICARD = 5

log = logging.getLogger("srsp")


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def diagnostics_header(K: int) -> list[str]:
    return ["step", "time", *[f"charge_{k}" for k in range(1, K + 1)], "energy", "hs_norm", "orthonormality_residual"]


def read_diagnostics(path) -> Trajectory:
    """Load a diagnostics CSV back into a Trajectory (diagnostic arrays only)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        K = sum(1 for h in header if h.startswith("charge_"))
        traj = Trajectory(mass=float("nan"), family="", params=None)
        for row in reader:
            vals = [float(x) for x in row]
            traj.times.append(vals[1])
            traj.charges.append(np.array(vals[2:2 + K]))
            traj.energies.append(vals[2 + K])
            traj.hs_norms.append(vals[3 + K])
            traj.residuals.append(vals[4 + K])
    return traj


def _open_run_dir(path: Path) -> logging.Handler:
    path.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def run(config: RunConfig, output_dir=None) -> int:
    """Simulate ``config``; write diagnostics, snapshots and a log. Returns an exit code."""
    out = Path(output_dir or config.output_dir)
    try:
        handler = _open_run_dir(out)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        log.info("config digest %s", config.digest())
        try:
            state = init_preset(config)
            w = config.interaction(state.grid)
            params = config.params()
        except (StateError, ValueError) as exc:
            log.error("configuration error: %s", exc)
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

        snap_dir = out / "snapshots"
        digest = config.digest()

        def save(step, t, st):
            if config.snapshot_every and step % config.snapshot_every == 0:
                snap_dir.mkdir(exist_ok=True)
                write_snapshot(st, snap_dir / f"snap_{step:07d}.bin", time=t, config_digest=digest)

        traj = evolve(state, config.mass, params, w, config.family, callback=save)
        write_csv(out / "diagnostics.csv", diagnostics_header(state.K), traj.rows())
        summary = {
            "status": traj.status,
            "message": traj.message,
            "steps": len(traj.times) - 1,
            "last_valid_time": traj.last_valid_time,
            "config_digest": digest,
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        if traj.status == "completed":
            log.info("completed %d steps", len(traj.times) - 1)
            return EXIT_OK
        log.error("%s: %s", traj.status, traj.message)
        print(f"{traj.status}: {traj.message}", file=sys.stderr)
        return EXIT_PICARD if traj.status == "picard_diverged" else EXIT_BLOWUP
    except OSError as exc:
        log.error("I/O error: %s", exc)
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        log.removeHandler(handler)
        handler.close()


def _masses(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad mass list {text!r}") from None


def _limit(args, kind: str) -> int:
    config = _load(args.config)
    if isinstance(config, int):
        return config
    fn = analysis.mass_limit_large if kind == "large" else analysis.mass_limit_zero
    try:
        report = fn(config, args.masses, args.horizon)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except analysis.BlowUpError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BLOWUP
    out = Path(args.output_dir or config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / f"limit_{kind}.csv", ["mass", "error", "free_error"], report.rows())
        summary = {"fitted_order": report.fitted_order, "horizon": report.horizon,
                   "monotone": report.monotone()}
        (out / f"limit_{kind}.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for m, e, f in report.rows():
        print(f"m = {m:<10g} error = {e:.6e}  (g=0 closed form {f:.6e})")
    print(f"log-log slope {report.fitted_order:.4f}, horizon {report.horizon:.6g}, "
          f"non-increasing: {report.monotone()}")
    return EXIT_OK


def _inequalities(args) -> int:
    config = _load(args.config)
    if isinstance(config, int):
        return config
    ratios = analysis.inequality_ensemble(config.grid(), config.gamma, config.s, args.samples, args.seed)
    out = Path(args.output_dir or config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "inequalities.csv", ["sample", "hardy", "gn", "leibniz"],
                  ((i, ratios["hardy"][i], ratios["gn"][i], ratios["leibniz"][i]) for i in range(args.samples)))
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, vals in ratios.items():
        print(f"{name:8s} max {vals.max():.10g}  mean {vals.mean():.6g}")
    return EXIT_OK


def _report(args) -> int:
    path = Path(args.run_dir) / "diagnostics.csv"
    try:
        traj = read_diagnostics(path)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    cons = analysis.conservation_report(traj)
    env = analysis.gronwall_envelope(traj)
    rows = list(cons.rows()) + list(env.rows())
    try:
        write_csv(Path(args.run_dir) / "report.csv", ["quantity", "value"], rows)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, value in rows:
        print(f"{name:26s} {value:.6e}")
    return EXIT_OK


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srsp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="evolve the configured initial state")
    sim.add_argument("config")
    sim.add_argument("--output-dir")

    for name in ("limit-large", "limit-zero"):
        lp = sub.add_parser(name, help=f"mass ladder ({name.split('-')[1]}-mass limit)")
        lp.add_argument("config")
        lp.add_argument("--masses", type=_masses, required=True, help="comma separated ladder")
        lp.add_argument("--horizon", type=float)
        lp.add_argument("--output-dir")

    ineq = sub.add_parser("check-inequalities", help="random-ensemble inequality ratios")
    ineq.add_argument("config")
    ineq.add_argument("--samples", type=int, default=200)
    ineq.add_argument("--seed", type=int, default=0)
    ineq.add_argument("--output-dir")

    rep = sub.add_parser("report", help="conservation and growth report of a finished run")
    rep.add_argument("run_dir")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        config = _load(args.config)
        if isinstance(config, int):
            return config
        return run(config, args.output_dir)
    if args.command == "limit-large":
        return _limit(args, "large")
    if args.command == "limit-zero":
        return _limit(args, "zero")
    if args.command == "check-inequalities":
        return _inequalities(args)
    return _report(args)


if __name__ == "__main__":
    sys.exit(main())
