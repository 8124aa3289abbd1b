"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 a verification threshold failed.
Options may come from a YAML file (``--config``); flags given on the command
line override it. Results go to ``--out`` (stdout by default); run metadata
such as the timestamp goes to ``<out>.meta.yaml`` so the main output stays
byte-identical across runs.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import yaml

from . import io as sio
from .correspondence import (
    CorrespondenceSpec,
    QuadraticU,
    build_phases,
    soliton_system,
    r_limit_study,
    random_lattice,
    random_times,
    soliton_tau,
)
from .coulomb import (
    ConformalExterior,
    DiscExteriorConductor,
    FreePlane,
    HalfPlaneConductor,
    JoukowskiInverse,
    LatticeGas,
    QuarterPlane,
    canonical_partition,
    grand_partition,
    observables,
    random_sites,
    sector_decomposition,
)
from .errors import RangeError, SolitonGasError
from .matrix_model import DiscreteMeasure, determinant_partition
from .soliton import HierarchyKind, SolitonSystem, TimesVector, tau_hirota
from .suites import SUITES, run_suite

COMMANDS = ("tau", "gas", "correspond", "limit-study", "verify", "nmm", "observables")

GEOMETRIES = {
    "free": FreePlane,
    "half-plane": HalfPlaneConductor,
    "quarter-plane": QuarterPlane,
    "disc": DiscExteriorConductor,
    "joukowski": lambda: ConformalExterior(JoukowskiInverse()),
}


class VerificationFailed(Exception):
    pass


# ------------------------------------------------------------------ options


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML file with default options")
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    p.add_argument("--seed", type=int, help="seed for random lattices and times")
    p.add_argument("--n", type=int, help="number of sites / solitons")
    p.add_argument("--workers", type=int, help="enumeration threads (default: SOLITONGAS_WORKERS or all cores)")
    p.add_argument("--deterministic", action="store_true", help="single-threaded, fixed summation order")


def _lattice_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lattice", help="CSV file with columns x,y, or comma-separated complex list")
    p.add_argument("--kind", help="KP, BKP or 2DTL")
    p.add_argument("--R", type=float, help="disc radius")
    p.add_argument("--m", type=int, help="discrete Toda index")
    p.add_argument("--mu", type=float, help="chemical potential")
    p.add_argument("--confine", type=float, help="coefficient c of U = c |z|^2")
    p.add_argument("--p-max", dest="p_max", type=int, help="time truncation order")
    p.add_argument("--t", help="times t_1,t_2,... as complex literals")
    p.add_argument("--tbar", help="conjugate times; 'conj' pairs them with t")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solitongas", description="Soliton tau-functions as lattice Coulomb gases")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tau", help="evaluate an N-soliton tau-function")
    _common(p)
    _lattice_opts(p)
    p.add_argument("--a", help="momenta a_i (complex list)")
    p.add_argument("--b", help="momenta b_i (complex list)")
    p.add_argument("--phi0", help="initial phases (complex list)")

    p = sub.add_parser("gas", help="grand and canonical partition functions of a lattice gas")
    _common(p)
    _lattice_opts(p)
    p.add_argument("--geometry", choices=sorted(GEOMETRIES))
    p.add_argument("--beta", type=float)

    p = sub.add_parser("correspond", help="compare the soliton tau with the gas partition function")
    _common(p)
    _lattice_opts(p)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("limit-study", help="R -> 0 convergence table")
    _common(p)
    _lattice_opts(p)
    p.add_argument("--r", dest="r_values", help="decreasing radii, e.g. 1e-2,1e-3,1e-4")
    p.add_argument("--ell", type=int, help="fixed point charge at the origin")
    p.add_argument("--min-order", dest="min_order", type=float, help="fail (exit 2) below this fitted order")

    p = sub.add_parser("verify", help="run a verification suite")
    _common(p)
    p.add_argument("--suite", choices=sorted(SUITES) + ["all"])

    p = sub.add_parser("nmm", help="normal-matrix partition functions by moment determinants")
    _common(p)
    _lattice_opts(p)
    p.add_argument("--basis", choices=["monomial", "newton"])

    p = sub.add_parser("observables", help="grand-canonical <E> and <n>")
    _common(p)
    _lattice_opts(p)
    p.add_argument("--geometry", choices=sorted(GEOMETRIES))
    p.add_argument("--beta", type=float)
    return parser


DEFAULTS = {
    "seed": 0, "n": 6, "kind": "2DTL", "R": 0.5, "m": 0, "mu": 0.0, "confine": 0.25, "p_max": 4,
    "beta": 2.0, "tol": 1e-11, "r_values": "1e-2,1e-3,1e-4", "ell": 0, "suite": "all", "basis": "newton",
}


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags, then validate."""
    opts = dict(DEFAULTS)
    explicit = set()
    if getattr(args, "config", None):
        cfg = sio.load_config(args.config)
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key == "r":
                key = "r_values"
            opts[key] = v
            explicit.add(key)
    for k, v in vars(args).items():
        if v is not None and v is not False:
            opts[k] = v
            explicit.add(k)
    opts["_explicit"] = explicit
    if int(opts["n"]) < 0:
        raise RangeError("n must be nonnegative")
    if float(opts.get("beta", 2.0)) <= 0:
        raise RangeError("beta must be positive")
    if int(opts["p_max"]) < 1:
        raise RangeError("p_max must be positive")
    return opts


def _workers(opts) -> int:
    if opts.get("deterministic"):
        return 1
    if opts.get("workers"):
        return int(opts["workers"])
    env = os.environ.get("SOLITONGAS_WORKERS")
    return int(env) if env else (os.cpu_count() or 1)


def _times(opts, kind: HierarchyKind, rng) -> TimesVector:
    p_max = int(opts["p_max"])
    m = int(opts.get("m", 0))
    if opts.get("t") is None:
        return random_times(kind, p_max, rng, m=m)
    t = sio.parse_complex_list(opts["t"])
    tb = opts.get("tbar")
    if tb == "conj":
        tbar = np.conj(t)
    else:
        tbar = sio.parse_complex_list(tb) if tb is not None else np.zeros(0)
    return TimesVector(t, tbar, m, p_max)


def _lattice(opts, kind: HierarchyKind, rng) -> np.ndarray:
    lat = opts.get("lattice")
    if lat is None:
        return random_lattice(kind, int(opts["n"]), rng, float(opts["R"]))
    if isinstance(lat, str) and Path(lat).exists():
        return sio.read_lattice_csv(lat)
    return sio.parse_complex_list(lat)


def _spec(opts, rng) -> CorrespondenceSpec:
    kind = HierarchyKind.parse(opts["kind"])
    z = _lattice(opts, kind, rng)
    times = _times(opts, kind, rng)
    m = int(opts.get("m", 0))
    if kind is HierarchyKind.TODA2D and not 0 <= m <= z.size:
        raise RangeError(f"m = {m} outside 0..{z.size}")
    ell = opts.get("ell") or None
    return CorrespondenceSpec(
        kind, z, R=float(opts["R"]), m=m, ell=ell if kind is HierarchyKind.TODA2D else None,
        U=QuadraticU(float(opts["confine"])), times=times,
        mu=float(opts["mu"]) if kind is not HierarchyKind.TODA2D else 0.0,
    )


def _gas(opts, rng) -> LatticeGas:
    geom_name = opts.get("geometry")
    if geom_name is None:
        spec = _spec(opts, rng)
        return LatticeGas(spec.lattice, spec.geometry, float(opts["beta"]), float(opts["mu"]), spec.U, spec.times)
    if geom_name not in GEOMETRIES:
        raise SolitonGasError(f"unknown geometry {geom_name!r}")
    geom = DiscExteriorConductor(float(opts["R"])) if geom_name == "disc" else GEOMETRIES[geom_name]()
    lat = opts.get("lattice")
    z = random_sites(geom, int(opts["n"]), rng) if lat is None else _lattice(opts, HierarchyKind.TODA2D, rng)
    kind = {"half-plane": HierarchyKind.KP, "quarter-plane": HierarchyKind.BKP}.get(geom_name, HierarchyKind.TODA2D)
    times = _times(opts, kind, rng)
    return LatticeGas(z, geom, float(opts["beta"]), float(opts["mu"]), QuadraticU(float(opts["confine"])), times)


# ----------------------------------------------------------------- commands


def _tv(v) -> dict:
    return {"log_magnitude": v.log_magnitude, "phase": v.phase, "is_zero": v.is_zero}


def cmd_tau(opts, rng):
    if opts.get("a") is not None:
        a = sio.parse_complex_list(opts["a"])
        b = sio.parse_complex_list(opts["b"])
        phi0 = sio.parse_complex_list(opts["phi0"]) if opts.get("phi0") is not None else None
        kind = HierarchyKind.parse(opts["kind"])
        system = SolitonSystem(kind, a, b, phi0)
        times = _times(opts, kind, rng)
    else:
        spec = _spec(opts, rng)
        system = soliton_system(spec, "gas")
        times = build_phases(spec, "gas").soliton_times
    tau = tau_hirota(system, times, workers=opts["_workers"])
    return "report", {"command": "tau", "kind": system.kind.value, "n": system.n, "tau": _tv(tau)}, 0


def cmd_gas(opts, rng):
    gas = _gas(opts, rng)
    Z = grand_partition(gas, workers=opts["_workers"])
    sec = sector_decomposition(gas)
    rows = [{"n": k, **_tv(v)} for k, v in enumerate(sec.values)]
    return "report", {"command": "gas", "n": gas.n, "beta": gas.beta, "mu": gas.mu,
                      "log_Z": Z.log_magnitude, "sectors": rows}, 0


def cmd_correspond(opts, rng):
    spec = _spec(opts, rng)
    tau = soliton_tau(spec, workers=opts["_workers"])
    Z = grand_partition(spec.gas(), workers=opts["_workers"])
    err = tau.rel_diff(Z)
    tol = float(opts["tol"])
    ok = err <= tol
    data = {"command": "correspond", "kind": spec.kind.value, "n": spec.n, "log_tau": tau.log_magnitude,
            "log_Z": Z.log_magnitude, "relative": err, "tol": tol, "passed": ok}
    return "report", data, 0 if ok else 2


def cmd_limit(opts, rng):
    opts = dict(opts, kind="2DTL")
    spec = _spec(opts, rng)
    rv = opts["r_values"]
    Rs = [float(x) for x in (rv.split(",") if isinstance(rv, str) else rv)]
    study = r_limit_study(spec, Rs)
    ratios = [""] + study.ratios()
    rows = [(r.R, r.log_tau, r.log_z, r.deviation, q) for r, q in zip(study.rows, ratios)]
    status = 0
    if opts.get("min_order") is not None and not study.order >= float(opts["min_order"]):
        status = 2
    meta = {"order": study.order, "monotone": study.monotone, "m": study.m, "ell": study.ell}
    return "table", (["R", "log_tau", "log_Z", "deviation", "ratio"], rows, meta), status


def cmd_verify(opts, rng):
    n = opts.get("n") if "n" in opts.get("_explicit", ()) else None
    checks = run_suite(opts["suite"], n, int(opts["seed"]))
    ok = all(c.passed for c in checks)
    data = {"command": "verify", "suite": opts["suite"], "seed": int(opts["seed"]), "passed": ok,
            "checks": [c.to_dict() for c in checks]}
    return "report", data, 0 if ok else 2


def cmd_nmm(opts, rng):
    opts = dict(opts, kind="2DTL")
    spec = _spec(opts, rng)
    meas = DiscreteMeasure.from_lattice(spec.lattice, spec.U, spec.times, spec.ell or 0)
    gas = spec.free_plane_gas()
    rows = []
    for m in range(spec.n + 1):
        d = determinant_partition(meas, m, basis=opts["basis"])
        c = canonical_partition(gas, m)
        rows.append((m, d.log_magnitude, c.log_magnitude, d.rel_diff(c)))
    return "table", (["m", "log_det", "log_enum", "relative"], rows, {}), 0


def cmd_observables(opts, rng):
    gas = _gas(opts, rng)
    e, n = observables(gas)
    return "report", {"command": "observables", "n_sites": gas.n, "beta": gas.beta, "mu": gas.mu,
                      "mean_energy": e, "mean_particles": n}, 0


HANDLERS = {
    "tau": cmd_tau, "gas": cmd_gas, "correspond": cmd_correspond, "limit-study": cmd_limit,
    "verify": cmd_verify, "nmm": cmd_nmm, "observables": cmd_observables,
}


# --------------------------------------------------------------------- main


def _emit(kind, payload, out: Path | None, opts) -> None:
    extra = {}
    if kind == "table":
        header, rows, extra = payload
        text = sio.table_text(header, rows)
    else:
        text = sio.report_text(payload)
    if out is None:
        sys.stdout.write(text)
        return
    out.write_text(text)
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    meta = {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "version": version,
        "command": opts["command"],
        "seed": int(opts["seed"]),
        "workers": opts["_workers"],
        **extra,
    }
    Path(str(out) + ".meta.yaml").write_text(sio.report_text(meta))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        opts["_workers"] = _workers(opts)
        rng = np.random.default_rng(int(opts["seed"]))
        kind, payload, status = HANDLERS[args.command](opts, rng)
        _emit(kind, payload, args.out, opts)
    except (ValueError, OSError, yaml.YAMLError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(sio.report_text(diag))
        return 1
    return status


if __name__ == "__main__":
    sys.exit(main())
