"""Command-line entry point: ``rzbattery {evolve,compare,sweep2d,spectrum,scaling}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import random
import sys

import numpy as np

from . import __version__, analytic
from .config import BACKENDS, COMMANDS, ConfigError, load_config_file, resolve
from .metrics import format_float, numeric_series, write_table
from .model import ModelParams
from .propagator import EvolutionConfig, NumericalError, evolve
from .spectrum import kink_location, lambda_sweep, peak_location
from .sweeps import (SCALING_COLUMNS, SPECTRUM_COLUMNS, SWEEP2D_COLUMNS, axis_values,
                     dynamic_peaks, scaling_fits, scaling_rows, sweep2d_rows)

log = logging.getLogger("rzbattery")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
DEVIATION_SCHEMA = "rzbattery.deviation/1"
SWEEP2D_SCHEMA = "rzbattery.sweep2d/1"
SPECTRUM_SCHEMA = "rzbattery.spectrum/1"
SCALING_SCHEMA = "rzbattery.scaling/1"
SCALING_FIT_SCHEMA = "rzbattery.scaling-fit/1"

_DEFAULT_OUT = {"evolve": "evolve-out", "compare": "compare-out", "sweep2d": "sweep2d.csv",
                "spectrum": "spectrum.csv", "scaling": "scaling.csv"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rzbattery", description="Rosen-Zener collective-spin battery simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "evolve": "time series of every metric for one or more drive strengths",
        "compare": "evolve with both backends and report their deviation",
        "sweep2d": "final and peak values on a (v0, T) grid",
        "spectrum": "static levels and order parameter versus lambda",
        "scaling": "peak metrics versus N for several interactions",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", metavar="PATH", help="JSON config, or an output file to rerun from its header")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       help="override one config field by dotted path (value parsed as JSON)")
        p.add_argument("--backend", choices=BACKENDS, help="overrides the config backend")
        p.add_argument("--out", metavar="PATH",
                       help="output directory (evolve, compare) or file (others); default %s" % _DEFAULT_OUT[name])
        p.add_argument("--workers", type=int, default=1, metavar="INT", help="worker processes for grid cells")
        p.add_argument("--seedless", action="store_true",
                       help="fail loudly if anything asks for a random number (nothing should)")
        p.add_argument("-q", "--quiet", action="store_true")
    return parser


@contextlib.contextmanager
def _forbid_rng():
    def refuse(*_a, **_k):
        raise RuntimeError("random number generation requested in a --seedless run")

    saved = [(np.random, n, getattr(np.random, n)) for n in ("default_rng", "seed", "rand", "randn", "random")]
    saved += [(random, n, getattr(random, n)) for n in ("random", "seed", "uniform")]
    for mod, name, _ in saved:
        setattr(mod, name, refuse)
    try:
        yield
    finally:
        for mod, name, fn in saved:
            setattr(mod, name, fn)


def _params(model: dict, **changes) -> ModelParams:
    m = dict(model, **changes)
    return ModelParams(n_atoms=m["n_atoms"], t_period=m["t_period"], v0=m["v0"], lam=m["lambda"],
                       delta=m["delta"], tau=m["tau"])


def _evolution_config(integ: dict) -> EvolutionConfig:
    return EvolutionConfig(steps=int(integ["steps"]), store_every=int(integ["store_every"]),
                           method=integ["method"], tol=float(integ["tol"]))


def _header(cfg: dict, schema: str, **extra) -> dict:
    return {"schema": schema, "version": __version__, "config": cfg, **extra}


def _tag(x: float) -> str:
    return format_float(x).replace("-", "m")


# ---------------------------------------------------------------------------
# commands


def cmd_evolve(cfg: dict, out: str, workers: int, compare: bool = False) -> dict:
    """One CSV per backend per drive strength, plus ``deviation.json`` when both ran."""
    backend = "both" if compare else cfg["backend"]
    runs = []
    os.makedirs(out, exist_ok=True)
    for v0 in cfg["v0_values"]:
        p = _params(cfg["model"], v0=float(v0))
        want_num = backend in ("numeric", "both")
        want_ana = backend in ("analytic", "both")
        if want_ana and p.n_atoms < 2:
            log.warning("N = 1: the closed-form entropy is undefined; using the numeric backend instead")
            want_ana, want_num = False, True
        t_end = p.charge_window[1]
        num = ana = None
        if want_num:
            traj = evolve(p, cfg=_evolution_config(cfg["integrator"]))
            num = numeric_series(traj)
            times = num.times
        else:
            n_out = cfg["integrator"]["steps"] // cfg["integrator"]["store_every"]
            times = np.linspace(0.0, t_end, n_out + 1)
        if want_ana:
            ana = analytic.analytic_series(p, times)
        for series in (num, ana):
            if series is not None:
                path = os.path.join(out, f"evolve_v0-{_tag(p.v0)}_{series.backend}.csv")
                series.write_csv(path, {"config": cfg, "version": __version__})
        if num is not None and ana is not None:
            scale = p.n_atoms * p.delta
            dE = np.abs(num.E - ana.E) / scale
            runs.append({
                "v0": p.v0,
                "E_max_dev": float(dE.max()),
                "E_rms_dev": float(np.sqrt(np.mean(dE**2))),
                "Sigma_max_dev": float(np.abs(num.Sigma - ana.Sigma).max()),
                "S_max_dev": float(np.abs(num.S_diag - ana.S_diag).max()),
                "n_steps": int(num.meta["n_steps"]),
            })
    summary = _header(cfg, DEVIATION_SCHEMA, runs=runs)
    if runs:
        with open(os.path.join(out, "deviation.json"), "w") as fh:
            json.dump(summary, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return summary


def cmd_sweep2d(cfg: dict, out: str, workers: int) -> None:
    base = _params(cfg["model"])
    backend = cfg["backend"]
    if backend == "analytic" and base.n_atoms < 2:
        log.warning("N = 1: the closed-form entropy is undefined; using the numeric backend instead")
        backend = "numeric"
    v0_axis = axis_values(cfg["grid"]["v0"])
    t_axis = axis_values(cfg["grid"]["t_period"])
    if backend == "analytic" and np.any(v0_axis <= 0):
        raise ConfigError("field 'grid.v0': the analytic backend needs v0 > 0")
    rows = sweep2d_rows(base, v0_axis, t_axis, backend, _evolution_config(cfg["integrator"]), workers)
    header = _header(cfg, SWEEP2D_SCHEMA, backend=backend, shape=[len(v0_axis), len(t_axis)],
                     order="v0 outer, t_period inner", proximity="within one grid cell")
    write_table(out, header, SWEEP2D_COLUMNS, rows)


def cmd_spectrum(cfg: dict, out: str, workers: int) -> None:
    base = _params(cfg["model"])
    grid = axis_values(cfg["lambda_grid"])
    peaks = None
    if cfg["dynamic"]:
        peaks = dynamic_peaks(base, grid, _evolution_config(cfg["integrator"]), workers)
    pts = lambda_sweep(base.n_atoms, base.delta, grid, cfg["transverse"])
    rows = []
    for i, pt in enumerate(pts):
        dyn = float("nan") if peaks is None else peaks[i]
        rows.append((pt.lam, pt.e_ground, pt.e_excited, pt.gap, pt.order_parameter, dyn))
    extra = {"energy_unit": "N delta / 2"}
    if len(pts) >= 3:
        extra["kink_lambda"] = kink_location(grid, [pt.order_parameter for pt in pts])
    if peaks is not None:
        extra["dynamic_peak_lambda"] = peak_location(grid, peaks)
    write_table(out, _header(cfg, SPECTRUM_SCHEMA, **extra), SPECTRUM_COLUMNS, rows)


def cmd_scaling(cfg: dict, out: str, workers: int) -> None:
    base = _params(cfg["model"])
    n_values = [int(n) for n in np.rint(axis_values(cfg["n_values"]))]
    lambdas = [float(x) for x in axis_values(cfg["lambdas"])]
    rows = scaling_rows(base, n_values, lambdas, _evolution_config(cfg["integrator"]), workers)
    write_table(out, _header(cfg, SCALING_SCHEMA, order="lambda outer, n_atoms inner"), SCALING_COLUMNS, rows)
    fits = [fit.__dict__ for fit in scaling_fits(rows)]
    with open(out + ".fit.json", "w") as fh:
        json.dump(_header(cfg, SCALING_FIT_SCHEMA, log_base=2, fits=fits), fh, sort_keys=True, indent=1)
        fh.write("\n")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(name)s: %(message)s")
    out = args.out or _DEFAULT_OUT[args.command]
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        file_doc = load_config_file(args.config) if args.config else None
        cfg = resolve(args.command, file_doc, args.set, args.backend)
        # build every parameter set once up front so bad values are config errors
        _params(cfg["model"])
        _evolution_config(cfg["integrator"])
    except (ConfigError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    guard = _forbid_rng() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            if args.command in ("evolve", "compare"):
                summary = cmd_evolve(cfg, out, args.workers, compare=args.command == "compare")
                if args.command == "compare":
                    for r in summary["runs"]:
                        print(f"v0={r['v0']:g}  max|dE|/N={r['E_max_dev']:.4g}  rms={r['E_rms_dev']:.4g}  "
                              f"max|dSigma|={r['Sigma_max_dev']:.4g}  max|dS|={r['S_max_dev']:.4g}")
            elif args.command == "sweep2d":
                cmd_sweep2d(cfg, out, args.workers)
            elif args.command == "spectrum":
                cmd_spectrum(cfg, out, args.workers)
            else:
                cmd_scaling(cfg, out, args.workers)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, ValueError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
