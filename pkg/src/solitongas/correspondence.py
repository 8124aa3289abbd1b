"""Dictionary between lattice gases and soliton systems, and the R -> 0 limit.

For each hierarchy the momenta are tied to lattice sites so that the
interaction factor equals ``exp(-2 V)`` for the matching image geometry:

    KP    a = zeta,       b = -conj(zeta)     upper half-plane, conducting axis
    BKP   a = zeta,       b = conj(zeta)      quarter plane
    2DTL  a = zeta / R,   b = R / conj(zeta)  exterior of a conducting disc

Two phase conventions exist for the 2DTL. The *gas* convention reproduces the
grand partition function of the disc-exterior gas exactly at every R. The
*limit* convention fixes ``phi0 = -2 U - log R`` (or ``(2l - 1) log R`` with
a fixed charge ``l`` at the origin); after the gauge transformation the
n-particle sector then carries the factor ``R^{(m-n)^2}`` and only the
``n = m`` sector survives as ``R -> 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import _enumeration
from .coulomb import (
    ConformalMap,
    FreePlane,
    LatticeGas,
    SectorDecomposition,
    external_potential,
    geometry_for,
    random_sites,
)
from .errors import DomainError, RangeError, SolitonGasError
from .soliton import HierarchyKind, SolitonSystem, TimesVector, tau_hirota, tau_sectors
from .tauvalue import Accumulator, TauValue

BETA = 2.0


def _u_values(U, z) -> np.ndarray:
    if U is None:
        return np.zeros(np.shape(z))
    return np.real(np.asarray(U(np.asarray(z, dtype=complex)), dtype=complex))


@dataclass(frozen=True, eq=False)
class CorrespondenceSpec:
    """Lattice, geometry parameters and times defining both sides of the map.

    ``times`` are the gas-side (harmonic-field) times. ``m`` overrides
    ``times.m``. ``ell`` is the optional fixed point charge at the origin
    (2DTL limit convention only).
    """

    kind: HierarchyKind
    lattice: np.ndarray
    R: float = 1.0
    m: int = 0
    ell: int | None = None
    U: Callable | None = None
    times: TimesVector | None = None
    mu: float = 0.0
    conformal: ConformalMap | None = None
    beta: float = BETA

    def __post_init__(self):
        kind = HierarchyKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        z = np.atleast_1d(np.asarray(self.lattice, dtype=complex))
        object.__setattr__(self, "lattice", z)
        if self.beta != BETA:
            raise RangeError("the soliton correspondence holds at beta = 2 only")
        if not self.R > 0:
            raise DomainError("R must be positive")
        times = self.times if self.times is not None else TimesVector.zeros()
        object.__setattr__(self, "times", times.with_m(self.m))
        if kind is HierarchyKind.KP and np.any(z.imag <= 0):
            raise DomainError("KP lattice sites need Im zeta > 0")
        if kind is HierarchyKind.BKP and np.any((z.real <= 0) | (z.imag <= 0)):
            raise DomainError("BKP lattice sites need Re zeta > 0 and Im zeta > 0")
        if kind is HierarchyKind.TODA2D:
            if self.conformal is not None:
                self.conformal.validate(z)
            elif np.any(np.abs(z) <= self.R):
                raise DomainError("2DTL lattice sites need |zeta| > R")
        elif self.ell is not None or self.conformal is not None:
            raise SolitonGasError("fixed charge and conformal maps apply to the 2DTL only")

    @property
    def n(self) -> int:
        return self.lattice.size

    @cached_property
    def geometry(self):
        return geometry_for(self.kind, self.R, self.conformal)

    def gas(self) -> LatticeGas:
        """Gas whose grand partition function equals the gas-convention tau."""
        return LatticeGas(self.lattice, self.geometry, BETA, self.mu, self.U, self.times)

    def free_plane_gas(self, ell: int | None = None) -> LatticeGas:
        """R = 0 gas: free plane, harmonic field, optional charge ``ell`` at the origin."""
        ell = self.ell if ell is None else ell
        U = self.U
        if ell:
            base = U

            def U(z, base=base, ell=ell):
                return _u_values(base, z) - ell * np.log(np.abs(z))

        return LatticeGas(self.lattice, FreePlane(), BETA, 0.0, U, self.times.with_m(0))

    def with_(self, **changes) -> "CorrespondenceSpec":
        return replace(self, **changes)


# ------------------------------------------------------------------ momenta


def map_lattice_to_momenta(spec: CorrespondenceSpec, R: float | None = None):
    """Return ``(a, b)`` arrays for the spec's lattice."""
    z = spec.lattice
    kind = spec.kind
    if kind is HierarchyKind.KP:
        return z.copy(), -np.conj(z)
    if kind is HierarchyKind.BKP:
        return z.copy(), np.conj(z)
    if spec.conformal is not None:
        w = spec.conformal.validate(z)
        # the reflected momentum is 1/conj(f), which keeps L = exp(-2V) on the w-plane
        return w, 1.0 / np.conj(w)
    R = spec.R if R is None else R
    return z / R, R / np.conj(z)


# ------------------------------------------------------------------- phases


@dataclass(frozen=True)
class PhaseData:
    phi0: np.ndarray
    phi: np.ndarray
    soliton_times: TimesVector


def build_phases(spec: CorrespondenceSpec, convention: str = "gas", R: float | None = None) -> PhaseData:
    """Initial and full soliton phases.

    ``gas``: ``phi_i = -2 (w_i - mu)`` with ``w = Vt + W``, matching the grand
    partition function of ``spec.gas()``. For the disc the soliton times are
    ``R^p T_p`` and ``phi0`` picks up ``2 m log R``.

    ``limit`` (2DTL): ``phi0 = -2 U - log R``, or ``-2 U + (2 ell - 1) log R``.
    The returned full phases are those entering the gauge-transformed tau at
    index ``m - 1`` and times ``R^p T_p``.
    """
    a, b = map_lattice_to_momenta(spec, R)
    z = spec.lattice
    uvals = _u_values(spec.U, z)
    if convention == "gas":
        gas = spec.gas()
        phi0 = -BETA * (gas.self_energies + uvals - spec.mu) + 0j
        st = spec.times
        if spec.kind is HierarchyKind.TODA2D and spec.conformal is None:
            Rv = spec.R if R is None else R
            phi0 = phi0 + BETA * spec.times.m * math.log(Rv)
            st = spec.times.scaled(Rv)
        system = SolitonSystem(spec.kind, a, b, phi0)
        return PhaseData(phi0, system.phases(st), st)
    if convention == "limit":
        if spec.kind is not HierarchyKind.TODA2D or spec.conformal is not None:
            raise SolitonGasError("the limit convention is defined for the disc 2DTL only")
        Rv = spec.R if R is None else R
        ell = spec.ell or 0
        phi0 = -BETA * uvals + (2 * ell - 1) * math.log(Rv) + 0j
        st = spec.times.with_m(spec.times.m - 1).scaled(Rv)
        system = SolitonSystem(spec.kind, a, b, phi0)
        return PhaseData(phi0, system.phases(st), st)
    raise SolitonGasError(f"unknown phase convention {convention!r}")


def soliton_system(spec: CorrespondenceSpec, convention: str = "gas", R: float | None = None) -> SolitonSystem:
    a, b = map_lattice_to_momenta(spec, R)
    return SolitonSystem(spec.kind, a, b, build_phases(spec, convention, R).phi0)


def soliton_tau(spec: CorrespondenceSpec, **kwargs) -> TauValue:
    """Gas-convention tau; equals ``grand_partition(spec.gas())``."""
    ph = build_phases(spec, "gas")
    return tau_hirota(soliton_system(spec, "gas"), ph.soliton_times, **kwargs)


# -------------------------------------------------------------------- gauge


def gauge_transform_tau(system: SolitonSystem, times: TimesVector, R: float, **kwargs) -> TauValue:
    """``R^{m^2} tau_N(m - 1, R t_1, R tbar_1, R^2 t_2, ...)`` with ``m = times.m``."""
    if system.kind is not HierarchyKind.TODA2D:
        raise SolitonGasError("the gauge transformation is defined for the 2DTL")
    if not R > 0:
        raise DomainError("R must be positive")
    m = times.m
    inner = times.with_m(m - 1).scaled(R)
    return tau_hirota(system, inner, **kwargs).scale_log(m * m * math.log(R))


def limit_tau(spec: CorrespondenceSpec, R: float, **kwargs) -> TauValue:
    """Transformed tau of the limit-convention system at radius ``R``."""
    return gauge_transform_tau(soliton_system(spec, "limit", R), spec.times, R, **kwargs)


def gauge_energy_oracle(spec: CorrespondenceSpec, R: float) -> TauValue:
    """``sum_nu exp(-2 E_nu)`` with the transformed-tau energy written out.

    ``E = sum_{i<j} V_R(zeta_i, zeta_j) + sum_i (U + U_R - (m-1) log|zeta_i|)
    + (n (2m - 1 - 2 ell) - m^2) / 2 * log R``, where ``V_R`` and ``U_R`` are the
    disc-exterior pair potential and harmonic field. Evaluated by subset
    enumeration, independently of the soliton code path.
    """
    from .coulomb import DiscExteriorConductor, subset_sum

    m = spec.times.m
    ell = spec.ell or 0
    geom = DiscExteriorConductor(R)
    uvals = _u_values(spec.U, spec.lattice)
    harm = external_potential(geom, spec.lattice, None, spec.times, m=0)
    w = uvals + np.atleast_1d(harm) - (m - 1) * np.log(np.abs(spec.lattice))
    V = LatticeGas(spec.lattice, geom, BETA).pair_matrix
    acc = Accumulator()
    logR = math.log(R)
    for n in range(spec.n + 1):
        c = subset_sum(V, w, BETA, n)
        if not c.is_zero:
            acc._merge_raw(c.log_magnitude - BETA * (n * (2 * m - 1 - 2 * ell) - m * m) / 2 * logR,
                           c.phase.real, c.phase.imag)
    return acc.result()


# ----------------------------------------------------------------- sectors


def stripped_exponents(spec: CorrespondenceSpec, R: float, m: int | None = None):
    """Pair and site exponents of the transformed tau with the R-powers removed.

    The n-configuration weight of the transformed tau equals
    ``R^{(m-n)^2 + 2 ell n}`` times the weight built from these exponents,
    which stay finite at ``R = 0``.
    """
    if spec.kind is not HierarchyKind.TODA2D or spec.conformal is not None:
        raise SolitonGasError("sector stripping applies to the disc 2DTL")
    m = spec.times.m if m is None else m
    z = spec.lattice
    R2 = float(R) ** 2
    al = z
    be = 1.0 / np.conj(z)
    n = z.size
    iu, ju = np.triu_indices(n, 1)
    pair = np.zeros((n, n), dtype=complex)
    if iu.size:
        num = (al[iu] - al[ju]) * (be[iu] - be[ju])
        den = (al[iu] - R2 * be[ju]) * (R2 * be[iu] - al[ju])
        v = np.log(num / den)
        pair[iu, ju] = v
        pair[ju, iu] = v
    harm = np.zeros(n, dtype=complex)
    T = spec.times
    zc = np.conj(z)
    for p in range(1, T.p_max + 1):
        tp, tbp = T.t[p - 1], T.tbar[p - 1]
        if tp == 0 and tbp == 0:
            continue
        harm = harm + (z**p - R2**p / zc**p) * tp + (zc**p - R2**p / z**p) * tbp
    site = -BETA * _u_values(spec.U, z) + (m - 1) * np.log(np.abs(z) ** 2) + harm
    return pair, site


def stripped_sectors(spec: CorrespondenceSpec, R: float = 0.0, m: int | None = None, **kwargs) -> list[TauValue]:
    pair, site = stripped_exponents(spec, R, m)
    return _enumeration.hirota_sectors(pair, site, **kwargs)


def sector_power(m: int, n: int, ell: int = 0) -> int:
    """Exponent of R carried by the n-particle sector of the transformed tau."""
    return (m - n) ** 2 + 2 * ell * n


def sector_extract(spec: CorrespondenceSpec, **kwargs) -> SectorDecomposition:
    """``R = 0`` chain ``Z_n`` computed on the soliton side.

    ``Z_n`` is the stripped n-sector of the transformed tau at index
    ``m = n + ell``; for ``ell = 0`` this is the normal-matrix partition
    function of the free-plane gas with ``n`` particles.
    """
    ell = spec.ell or 0
    N = spec.n
    values = [TauValue.one()]
    for n in range(1, N + 1):
        secs = stripped_sectors(spec, 0.0, n + ell, **kwargs)
        values.append(secs[n])
    return SectorDecomposition(values)


def chain_value(spec: CorrespondenceSpec, m: int, **kwargs) -> TauValue:
    """``Z_m`` for any integer m; zero outside ``0..N``."""
    if m < 0 or m > spec.n:
        return TauValue.zero()
    if m == 0:
        return TauValue.one()
    return stripped_sectors(spec, 0.0, m + (spec.ell or 0), **kwargs)[m]


def sector_logs(spec: CorrespondenceSpec, R: float, **kwargs) -> np.ndarray:
    """``log|sector_n|`` of the transformed tau at finite ``R`` (unstripped)."""
    system = soliton_system(spec, "limit", R)
    inner = spec.times.with_m(spec.times.m - 1).scaled(R)
    secs = tau_sectors(system, inner, **kwargs)
    shift = spec.times.m ** 2 * math.log(R)
    return np.array([s.log_magnitude + shift if not s.is_zero else -np.inf for s in secs])


@dataclass(frozen=True)
class LimitRow:
    R: float
    log_tau: float
    log_z: float
    deviation: float


@dataclass(frozen=True)
class LimitStudy:
    m: int
    ell: int
    rows: tuple
    order: float
    monotone: bool

    def ratios(self) -> list[float]:
        d = [r.deviation for r in self.rows]
        return [d[i + 1] / d[i] for i in range(len(d) - 1)]


def fit_order(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def r_limit_study(spec: CorrespondenceSpec, R_sequence: Sequence[float], **kwargs) -> LimitStudy:
    """Deviation of the normalised transformed tau from ``Z_{m - ell}`` per R.

    The transformed tau is divided by its leading power ``R^{2 m ell - ell^2}``
    (zero for ``ell = 0``) before comparison.
    """
    if spec.kind is not HierarchyKind.TODA2D:
        raise SolitonGasError("the limit study is defined for the 2DTL")
    m = spec.times.m
    ell = spec.ell or 0
    n = m - ell
    if not 0 <= n <= spec.n:
        raise RangeError(f"surviving sector {n} outside 0..{spec.n}")
    Rs = [float(r) for r in R_sequence]
    if any(r >= float(np.min(np.abs(spec.lattice))) for r in Rs) or any(r <= 0 for r in Rs):
        raise DomainError("every R must lie in (0, min|zeta|)")
    if any(Rs[i + 1] >= Rs[i] for i in range(len(Rs) - 1)):
        raise RangeError("R sequence must be decreasing")
    z = chain_value(spec, n, **kwargs)
    lead = sector_power(m, n, ell)
    rows = []
    for R in Rs:
        tau = limit_tau(spec, R, **kwargs).scale_log(-lead * math.log(R))
        if not math.isfinite(tau.log_magnitude):
            raise SolitonGasError("log-space transformed tau is not finite")
        rows.append(LimitRow(R, tau.log_magnitude, z.log_magnitude, tau.rel_diff(z)))
    devs = [r.deviation for r in rows]
    order = fit_order(Rs, devs) if len(Rs) > 1 and all(d > 0 for d in devs) else float("nan")
    mono = all(devs[i + 1] < devs[i] for i in range(len(devs) - 1))
    return LimitStudy(m, ell, tuple(rows), order, mono)


# --------------------------------------------------------------- generators


def random_lattice(kind, n: int, rng=None, R: float = 1.0, conformal: ConformalMap | None = None) -> np.ndarray:
    geom = geometry_for(kind, R, conformal)
    return random_sites(geom, n, rng)


def random_times(kind, p_max: int = 4, rng=None, scale: float = 0.2, m: int = 0,
                 depth: int | None = None) -> TimesVector:
    """Random admissible times for real-potential mode.

    KP: purely imaginary. BKP: real, odd indices. 2DTL: ``tbar = conj(t)``.
    Coefficient ``p`` is damped by ``scale^p``.
    """
    kind = HierarchyKind.parse(kind)
    rng = np.random.default_rng(rng)
    depth = p_max if depth is None else depth
    p = np.arange(1, depth + 1)
    mag = scale**p
    if kind is HierarchyKind.KP:
        t = 1j * rng.uniform(-1, 1, depth) * mag
        return TimesVector(t, (), m, p_max)
    if kind is HierarchyKind.BKP:
        t = rng.uniform(-1, 1, depth) * mag
        t[1::2] = 0
        return TimesVector(t, (), m, p_max)
    t = (rng.uniform(-1, 1, depth) + 1j * rng.uniform(-1, 1, depth)) * mag
    return TimesVector(t, np.conj(t), m, p_max)


def random_spec(kind, n: int, rng=None, *, R: float = 1.0, m: int = 0, p_max: int = 4,
                mu: float | None = None, confine: float | None = None) -> CorrespondenceSpec:
    """Random spec with a quadratic confining potential."""
    rng = np.random.default_rng(rng)
    kind = HierarchyKind.parse(kind)
    z = random_lattice(kind, n, rng, R)
    c = float(rng.uniform(0.1, 0.4)) if confine is None else confine
    mu = float(rng.uniform(-0.3, 0.3)) if mu is None else mu
    times = random_times(kind, p_max, rng, m=m)
    return CorrespondenceSpec(kind, z, R=R, m=m, U=QuadraticU(c), times=times, mu=mu)


@dataclass(frozen=True)
class QuadraticU:
    """``U(z) = c |z|^2``; a picklable confining potential."""

    c: float = 0.5

    def __call__(self, z):
        return self.c * np.abs(np.asarray(z, dtype=complex)) ** 2
