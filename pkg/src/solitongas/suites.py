"""Named verification suites used by ``solitongas verify``.

Each suite returns a list of :class:`Check` records; a suite passes when all
of its checks do.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correspondence import random_spec, sector_extract, soliton_system, soliton_tau
from .coulomb import canonical_partition, grand_partition
from .matrix_model import DiscreteMeasure, determinant_partition
from .soliton import SolitonSystem, TimesVector
from .verify import (
    PartitionChain,
    ResidualReport,
    SolitonTodaChain,
    kp_equation_residual,
    residue_contour_check,
    toda_bilinear_residual,
    toda_u_equation_residual,
)


@dataclass(frozen=True)
class Check:
    name: str
    report: ResidualReport
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "tol": self.tol, "passed": self.passed, **self.report.to_dict()}


def _rel(name: str, value: float, tol: float, **meta) -> Check:
    rep = ResidualReport(value, 1.0, value, "compare", meta)
    return Check(name, rep, tol, value <= tol)


def toda_chain(n: int = 6, seed: int = 0, R: float = 0.5) -> list[Check]:
    rng = np.random.default_rng(seed)
    spec = random_spec("2DTL", n, rng, R=R, m=1, p_max=3)
    chain = PartitionChain.from_spec(spec)
    out = []
    for m in range(n + 1):
        rep = toda_bilinear_residual(chain, m)
        out.append(Check(f"bilinear Z m={m}", rep, 1e-10, rep.relative <= 1e-10))
    gauge = SolitonTodaChain(soliton_system(spec, "limit", R), spec.times, R=R)
    for m in range(n + 1):
        rep = toda_bilinear_residual(gauge, m)
        out.append(Check(f"bilinear gauge R={R} m={m}", rep, 1e-10, rep.relative <= 1e-10))
    return out


def toda_u(n: int = 5, seed: int = 0, h: float = 1e-2) -> list[Check]:
    rng = np.random.default_rng(seed)
    spec = random_spec("2DTL", n, rng, m=1, p_max=3)
    chain = PartitionChain.from_spec(spec)
    out = []
    for m in range(1, n):
        rep = toda_u_equation_residual(chain, m, h)
        order = rep.meta["order"]
        out.append(Check(f"u-equation m={m}", rep, 0.2, abs(order - 2.0) <= 0.2))
    return out


KP_CASES = {
    1: ([0.8], [0.8]),
    2: ([0.5, 0.9], [0.6, 1.0]),
    3: ([0.4, 0.7, 1.0], [0.5, 0.8, 1.1]),
}


def kp(n: int = 3, seed: int = 0) -> list[Check]:
    times = TimesVector([0.3, -0.2, 0.1], p_max=3)
    out = []
    for N, (a, b) in KP_CASES.items():
        if N > n:
            break
        rep = kp_equation_residual(SolitonSystem("KP", a, b, [0.0] * N), times)
        out.append(Check(f"KP equation N={N}", rep, 0.2, abs(rep.meta["order"] - 2.0) <= 0.2))
    return out


def _random_momenta(rng, n, sector=(0.0, 2 * np.pi)):
    r = rng.uniform(0.6, 1.4, (2, n))
    th = rng.uniform(*sector, (2, n))
    return r[0] * np.exp(1j * th[0]), r[1] * np.exp(1j * th[1])


def residue(n: int = 4, seed: int = 0, draws: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    damp = 0.15 ** np.arange(1, 4)
    for kind in ("KP", "TODA2D"):
        for d in range(draws):
            N = int(rng.integers(1, n + 1))
            a, b = _random_momenta(rng, N)
            system = SolitonSystem(kind, a, b, rng.normal(size=N))
            if kind == "KP":
                t = TimesVector(1j * rng.normal(size=3) * damp, p_max=3)
                tp = TimesVector(1j * rng.normal(size=3) * damp, p_max=3)
            else:
                def rt():
                    return (rng.normal(size=3) + 1j * rng.normal(size=3)) * damp

                m = int(rng.integers(-2, 3))
                t = TimesVector(rt(), rt(), m=m, p_max=3)
                tp = TimesVector(rt(), rt(), m=m + int(rng.integers(-2, 3)), p_max=3)
            rep = residue_contour_check(kind, system, t, tp)
            ok = rep.relative <= 1e-9 and rep.meta["stability"] <= 1e-9
            out.append(Check(f"residue {kind} draw={d} N={N}", rep, 1e-9, ok))
    return out


def correspondence(n: int = 10, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for kind in ("KP", "BKP", "TODA2D"):
        spec = random_spec(kind, n, rng, R=0.8, m=1)
        err = soliton_tau(spec).rel_diff(grand_partition(spec.gas()))
        out.append(_rel(f"tau = Z {kind}", err, 1e-11, n=n))
    return out


def oracle(n: int = 8, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    spec = random_spec("TODA2D", n, rng, R=0.5, p_max=3)
    gas = spec.free_plane_gas()
    meas = DiscreteMeasure.from_lattice(spec.lattice, spec.U, spec.times)
    sec = sector_extract(spec)
    out = []
    for m in range(n + 1):
        c = canonical_partition(gas, m)
        d = determinant_partition(meas, m)
        err = max(c.rel_diff(d), c.rel_diff(sec[m]), d.rel_diff(sec[m]))
        out.append(_rel(f"oracles m={m}", err, 1e-10))
    return out


SUITES = {
    "toda-chain": toda_chain,
    "toda-u": toda_u,
    "kp": kp,
    "residue": residue,
    "correspondence": correspondence,
    "oracle": oracle,
}


def run_suite(name: str, n: int | None = None, seed: int = 0) -> list[Check]:
    if name == "all":
        out = []
        for key in SUITES:
            out.extend(run_suite(key, n, seed))
        return out
    fn = SUITES[name]
    return fn(seed=seed) if n is None else fn(n=n, seed=seed)

