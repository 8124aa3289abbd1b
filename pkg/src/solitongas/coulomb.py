"""Lattice Coulomb-Dyson gases with image-charge boundaries.

Potentials follow the method of images: each geometry supplies the pair
potential ``V(z, z')`` (a Green function of the 2D Laplacian with the
boundary condition built in), the self-energy ``Vt(z)`` of a charge with its
own images, and the harmonic external field set by the hierarchy times.
Partition functions are evaluated by exact enumeration.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from . import _enumeration
from .errors import CoincidenceError, DomainError, RangeError
from .soliton import HierarchyKind, TimesVector, check_real_mode
from .tauvalue import Accumulator, TauValue, log_sum

_EDGE_TOL = 1e-14


# ------------------------------------------------------------ conformal maps


class ConformalMap:
    """Map from the exterior of a compact domain onto ``|w| > 1``."""

    def __call__(self, z):
        raise NotImplementedError

    def validate(self, z) -> np.ndarray:
        w = np.asarray(self(z), dtype=complex)
        if np.any(np.abs(w) <= 1.0):
            raise DomainError("conformal map sends a site into the closed unit disc")
        return w


@dataclass(frozen=True)
class Scale(ConformalMap):
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError("scale radius must be positive")

    def __call__(self, z):
        return np.asarray(z, dtype=complex) / self.R


@dataclass(frozen=True)
class JoukowskiInverse(ConformalMap):
    """Inverse of ``w -> w + 1/w``: exterior of ``[-2, 2]`` onto ``|w| > 1``.

    Of the two roots ``z/2 -+ sqrt(z^2/4 - 1)`` (whose product is 1) the one
    outside the unit circle is taken pointwise.
    """

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        s = np.sqrt(z * z / 4 - 1)
        w1 = z / 2 - s
        w2 = z / 2 + s
        return np.where(np.abs(w1) >= np.abs(w2), w1, w2)


@dataclass(frozen=True)
class SampledMap(ConformalMap):
    """User-supplied map; must accept and return complex arrays."""

    fn: Callable

    def __call__(self, z):
        return np.asarray(self.fn(np.asarray(z, dtype=complex)), dtype=complex)


# ----------------------------------------------------------------- geometry


def _harmonic_sum(z, times: TimesVector | None, term) -> np.ndarray:
    out = np.zeros(np.shape(z), dtype=complex)
    if times is None:
        return out
    for p in range(1, times.p_max + 1):
        tp, tbp = times.t[p - 1], times.tbar[p - 1]
        if tp == 0 and tbp == 0:
            continue
        out = out + term(p, tp, tbp)
    return out


def _as_real(x, what: str) -> np.ndarray:
    x = np.asarray(x)
    if np.iscomplexobj(x):
        bad = np.abs(x.imag) > 1e-9 * np.maximum(1.0, np.abs(x.real))
        if np.any(bad):
            raise DomainError(f"{what} came out complex")
        x = x.real
    return x


class BoundaryGeometry:
    """Base class. Subclasses implement the image construction."""

    kind: HierarchyKind | None = None

    def contains(self, z, strict: bool = True) -> np.ndarray:
        raise NotImplementedError

    def _pair(self, z, zp):
        raise NotImplementedError

    def _self(self, z):
        raise NotImplementedError

    def _harmonic(self, z, times, m):
        raise NotImplementedError

    def images(self, zp):
        """Free-plane charges reproducing ``V(., zp)``: ``(positions, charges, constant)``."""
        raise NotImplementedError

    def conductor_walls(self, count: int, rng=None) -> np.ndarray:
        """Sample points on the conducting part of the boundary."""
        return np.zeros(0, dtype=complex)


@dataclass(frozen=True)
class FreePlane(BoundaryGeometry):
    """Plane without boundaries; the external field is the small-disc limit
    ``-1/2 sum_p (z^p t_p + zbar^p tbar_p)``."""

    def contains(self, z, strict=True):
        return np.isfinite(np.asarray(z, dtype=complex))

    def _pair(self, z, zp):
        return -np.log(np.abs(z - zp))

    def _self(self, z):
        return np.zeros(np.shape(z))

    def _harmonic(self, z, times, m):
        if times is not None:
            check_real_mode(HierarchyKind.TODA2D, times)
        zc = np.conj(z)
        return -0.5 * _harmonic_sum(z, times, lambda p, t, tb: z**p * t + zc**p * tb)

    def images(self, zp):
        return np.array([zp], dtype=complex), np.array([1.0]), 0.0


@dataclass(frozen=True)
class HalfPlaneConductor(BoundaryGeometry):
    """Upper half-plane above a conducting real axis."""

    kind = HierarchyKind.KP

    def contains(self, z, strict=True):
        y = np.imag(z)
        return y > 0 if strict else y >= 0

    def _pair(self, z, zp):
        return -np.log(np.abs(z - zp)) + np.log(np.abs(np.conj(z) - zp))

    def _self(self, z):
        return np.log(np.abs(np.conj(z) - z))

    def _harmonic(self, z, times, m):
        if times is not None:
            check_real_mode(HierarchyKind.KP, times)
        zc = np.conj(z)
        return -0.5 * _harmonic_sum(z, times, lambda p, t, tb: (z**p - zc**p) * t)

    def images(self, zp):
        return np.array([zp, np.conj(zp)]), np.array([1.0, -1.0]), 0.0

    def conductor_walls(self, count, rng=None):
        rng = np.random.default_rng(rng)
        return rng.uniform(-5, 5, count) + 0j


@dataclass(frozen=True)
class QuarterPlane(BoundaryGeometry):
    """Corner ``Re z > 0, Im z > 0``: dielectric real axis, conducting imaginary axis."""

    kind = HierarchyKind.BKP

    def contains(self, z, strict=True):
        x, y = np.real(z), np.imag(z)
        return (x > 0) & (y > 0) if strict else (x >= 0) & (y >= 0)

    def _pair(self, z, zp):
        zc = np.conj(z)
        return (
            -np.log(np.abs(z - zp))
            - np.log(np.abs(zc - zp))
            + np.log(np.abs(z + zp))
            + np.log(np.abs(zc + zp))
        )

    def _self(self, z):
        zc = np.conj(z)
        return np.log(np.abs(zc - z)) - np.log(np.abs(zc + z)) - np.log(np.abs(2 * z))

    def _harmonic(self, z, times, m):
        if times is not None:
            check_real_mode(HierarchyKind.BKP, times)
        zc = np.conj(z)
        return -0.5 * _harmonic_sum(z, times, lambda p, t, tb: (z**p + zc**p) * t)

    def images(self, zp):
        zc = np.conj(zp)
        # one image of the same sign, two of the opposite sign
        return np.array([zp, zc, -zp, -zc]), np.array([1.0, 1.0, -1.0, -1.0]), 0.0

    def conductor_walls(self, count, rng=None):
        rng = np.random.default_rng(rng)
        return 1j * rng.uniform(0, 5, count)


@dataclass(frozen=True)
class DiscExteriorConductor(BoundaryGeometry):
    """Exterior of a conducting disc ``|z| <= R`` centred at the origin."""

    R: float = 1.0
    kind = HierarchyKind.TODA2D

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError("disc radius must be positive")

    def contains(self, z, strict=True):
        r = np.abs(z)
        return r > self.R if strict else r >= self.R * (1 - _EDGE_TOL)

    def _pair(self, z, zp):
        R2 = self.R**2
        return -np.log(np.abs(z - zp)) + np.log(np.abs(np.conj(z) * zp - R2)) - math.log(self.R)

    def _self(self, z):
        return np.log(np.abs(z - self.R**2 / np.conj(z)))

    def _harmonic(self, z, times, m):
        if times is not None:
            check_real_mode(HierarchyKind.TODA2D, times)
        zc = np.conj(z)
        R2 = self.R**2

        def term(p, t, tb):
            return (z**p - R2**p / zc**p) * t + (zc**p - R2**p / z**p) * tb

        return -m * np.log(np.abs(z)) - 0.5 * _harmonic_sum(z, times, term)

    def images(self, zp):
        img = self.R**2 / np.conj(zp)
        return np.array([zp, img]), np.array([1.0, -1.0]), math.log(abs(zp) / self.R)

    def conductor_walls(self, count, rng=None):
        rng = np.random.default_rng(rng)
        return self.R * np.exp(1j * rng.uniform(0, 2 * np.pi, count))


@dataclass(frozen=True)
class ConformalExterior(BoundaryGeometry):
    """Exterior of a conducting domain mapped onto the unit-disc exterior by ``map``."""

    map: ConformalMap = field(default_factory=JoukowskiInverse)
    kind = HierarchyKind.TODA2D

    def contains(self, z, strict=True):
        r = np.abs(self.map(z))
        return r > 1 if strict else r >= 1 - 1e-12

    def _pair(self, z, zp):
        return DiscExteriorConductor(1.0)._pair(self.map(z), self.map(zp))

    def _self(self, z):
        return DiscExteriorConductor(1.0)._self(self.map(z))

    def _harmonic(self, z, times, m):
        return DiscExteriorConductor(1.0)._harmonic(self.map(z), times, m)

    def conductor_walls(self, count, rng=None):
        rng = np.random.default_rng(rng)
        if isinstance(self.map, JoukowskiInverse):
            return rng.uniform(-2, 2, count) + 0j
        if isinstance(self.map, Scale):
            return self.map.R * np.exp(1j * rng.uniform(0, 2 * np.pi, count))
        return np.zeros(0, dtype=complex)


def _check_domain(geometry: BoundaryGeometry, z, strict: bool) -> None:
    if not np.all(geometry.contains(z, strict=strict)):
        raise DomainError(f"point outside the admissible region of {type(geometry).__name__}")


# --------------------------------------------------------------- potentials


def pair_potential(geometry: BoundaryGeometry, z, zp, check: bool = True):
    """Two-particle potential ``V(z, z')``; points on the boundary are allowed."""
    z = np.asarray(z, dtype=complex)
    zp = np.asarray(zp, dtype=complex)
    if check:
        _check_domain(geometry, z, strict=False)
        _check_domain(geometry, zp, strict=False)
    if np.any(z == zp):
        raise CoincidenceError("V(z, z) is infinite")
    out = geometry._pair(z, zp)
    return float(out) if out.ndim == 0 else out


def self_potential(geometry: BoundaryGeometry, z):
    """Interaction of a unit charge with its own images."""
    z = np.asarray(z, dtype=complex)
    _check_domain(geometry, z, strict=True)
    out = geometry._self(z)
    return float(out) if np.ndim(out) == 0 else out


def external_potential(geometry: BoundaryGeometry, z, U=None, times: TimesVector | None = None,
                       m: int | None = None):
    """``W(z) = U(z) + harmonic part`` set by the times (and ``m`` on the disc)."""
    z = np.asarray(z, dtype=complex)
    if m is None:
        m = times.m if times is not None else 0
    w = _as_real(geometry._harmonic(z, times, m), "harmonic potential")
    if U is not None:
        w = w + _as_real(U(z), "confining potential")
    return float(w) if np.ndim(w) == 0 else w


def image_superposition(geometry: BoundaryGeometry, z, zp):
    """``V(z, zp)`` rebuilt from the explicit free-plane image charges."""
    pos, q, const = geometry.images(complex(zp))
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, const, dtype=float)
    for p, c in zip(pos, q):
        out = out - c * np.log(np.abs(z - p))
    return out


# -------------------------------------------------------------------- gases


@dataclass(frozen=True)
class EnergyBreakdown:
    pair_sum: float
    self_sum: float
    external_sum: float
    total: float

    def __post_init__(self):
        assert math.isclose(
            self.total, self.pair_sum + self.self_sum + self.external_sum, rel_tol=0, abs_tol=1e-9 * (1 + abs(self.total))
        )


@dataclass(frozen=True)
class SectorDecomposition:
    """Canonical partition values indexed by particle number.

    ``values[k]`` is the sector with ``k + offset`` particles.
    """

    values: tuple
    offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n: int) -> TauValue:
        k = n - self.offset
        if 0 <= k < len(self.values):
            return self.values[k]
        return TauValue.zero()

    def reassemble(self, beta: float, mu: float) -> TauValue:
        """``sum_n Z_n exp(beta mu n)``."""
        return log_sum(
            v.scale_log(beta * mu * (k + self.offset)) for k, v in enumerate(self.values) if not v.is_zero
        )


@dataclass(frozen=True, eq=False)
class LatticeGas:
    sites: np.ndarray
    geometry: BoundaryGeometry
    beta: float = 2.0
    mu: float = 0.0
    U: Callable | None = None
    times: TimesVector | None = None

    def __post_init__(self):
        sites = np.atleast_1d(np.asarray(self.sites, dtype=complex))
        object.__setattr__(self, "sites", sites)
        if not self.beta > 0:
            raise RangeError("inverse temperature must be positive")
        if sites.size:
            _check_domain(self.geometry, sites, strict=True)
            diam = max(float(np.max(np.abs(sites[:, None] - sites[None, :]))), 1.0)
            d = np.abs(sites[:, None] - sites[None, :])
            np.fill_diagonal(d, np.inf)
            if np.min(d) <= 1e-12 * diam:
                raise CoincidenceError("lattice sites must be pairwise distinct")

    @property
    def n(self) -> int:
        return self.sites.size

    @cached_property
    def pair_matrix(self) -> np.ndarray:
        n = self.n
        V = np.zeros((n, n))
        iu, ju = np.triu_indices(n, 1)
        if iu.size:
            v = pair_potential(self.geometry, self.sites[iu], self.sites[ju])
            V[iu, ju] = v
            V[ju, iu] = v
        return V

    @cached_property
    def self_energies(self) -> np.ndarray:
        return np.atleast_1d(self_potential(self.geometry, self.sites)) if self.n else np.zeros(0)

    @cached_property
    def external_energies(self) -> np.ndarray:
        if not self.n:
            return np.zeros(0)
        return np.atleast_1d(external_potential(self.geometry, self.sites, self.U, self.times))

    @property
    def site_energies(self) -> np.ndarray:
        """``w_i = Vt(zeta_i) + W(zeta_i)``."""
        return self.self_energies + self.external_energies

    def with_(self, **changes) -> "LatticeGas":
        from dataclasses import replace

        return replace(self, **changes)


def _mask(gas: LatticeGas, occupied) -> np.ndarray:
    occ = np.asarray(list(occupied) if not isinstance(occupied, np.ndarray) else occupied)
    if occ.dtype == bool:
        if occ.shape != (gas.n,):
            raise RangeError("occupation mask must have one entry per site")
        return occ
    mask = np.zeros(gas.n, dtype=bool)
    if occ.size:
        if occ.min() < 0 or occ.max() >= gas.n:
            raise RangeError("occupied index outside the lattice")
        mask[occ.astype(int)] = True
    return mask


def gas_energy(gas: LatticeGas, occupied) -> EnergyBreakdown:
    """Energy of a configuration given as site indices or a boolean mask."""
    mask = _mask(gas, occupied)
    idx = np.nonzero(mask)[0]
    pair = 0.0
    if idx.size > 1:
        pair = math.fsum(gas.pair_matrix[i, j] for a, i in enumerate(idx) for j in idx[a + 1 :])
    self_sum = math.fsum(gas.self_energies[idx]) if idx.size else 0.0
    ext = math.fsum(gas.external_energies[idx]) if idx.size else 0.0
    return EnergyBreakdown(pair, self_sum, ext, pair + self_sum + ext)


def _gas_exponents(gas: LatticeGas):
    return -gas.beta * gas.pair_matrix, -gas.beta * (gas.site_energies - gas.mu)


def grand_partition(gas: LatticeGas, *, order: str = "naive", workers=None,
                    n_max: int = _enumeration.N_MAX_DEFAULT) -> TauValue:
    """``Z = sum_nu exp(-beta (E(nu) - mu n))`` over all 2^N occupations."""
    pair, site = _gas_exponents(gas)
    return _enumeration.hirota_total(pair, site, order=order, workers=workers, n_max=n_max)


def _combinations(n: int, k: int, chunk: int = 1 << 15):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), k)


def canonical_partition(gas: LatticeGas, n: int) -> TauValue:
    """n-particle partition function by enumerating n-element site subsets.

    Equivalent to the ordered n-fold site sum divided by n!: terms with a
    repeated site vanish and every subset is counted n! times.
    """
    return subset_sum(gas.pair_matrix, gas.site_energies, gas.beta, n)


def subset_sum(V: np.ndarray, w: np.ndarray, beta: float, n: int) -> TauValue:
    """``sum_{|S| = n} exp(-beta (sum_{i<j in S} V_ij + sum_{i in S} w_i))``."""
    N = w.shape[0]
    if not 0 <= n <= N:
        raise RangeError(f"particle number {n} outside 0..{N}")
    if n == 0:
        return TauValue.one()
    acc = Accumulator()
    for combos in _combinations(N, n):
        E = w[combos].sum(axis=1)
        for a in range(n):
            for b in range(a + 1, n):
                E = E + V[combos[:, a], combos[:, b]]
        acc.add_logs(-beta * E)
    return acc.result()


def sector_decomposition(gas: LatticeGas) -> SectorDecomposition:
    return SectorDecomposition([canonical_partition(gas, n) for n in range(gas.n + 1)])


def observables(gas: LatticeGas, *, n_max: int = _enumeration.N_MAX_DEFAULT) -> tuple[float, float]:
    """Grand-canonical averages ``(<E>, <n>)``."""
    _enumeration._check_size(gas.n, n_max)
    V = gas.pair_matrix
    w = gas.site_energies
    acc_z, acc_e, acc_n = Accumulator(), Accumulator(), Accumulator()
    for bits in _enumeration.iter_bits(gas.n):
        E = 0.5 * np.einsum("ki,ij,kj->k", bits, V, bits) + bits @ w
        nn = bits.sum(axis=1)
        logw = -gas.beta * (E - gas.mu * nn)
        acc_z.add_logs(logw)
        acc_e.add_logs(logw, E)
        acc_n.add_logs(logw, nn)
    z = acc_z.result()
    mean_e = (acc_e.result() / z).real if not acc_e.result().is_zero else 0.0
    mean_n = (acc_n.result() / z).real if not acc_n.result().is_zero else 0.0
    return mean_e, mean_n


# ----------------------------------------------------- boundary diagnostics


def dielectric_normal_derivative(geometry: BoundaryGeometry, x, zp, h: float) -> np.ndarray:
    """Second-order one-sided estimate of ``dV/dy`` at ``y = 0``.

    Only meaningful for the quarter plane, whose real axis is dielectric.
    """
    x = np.asarray(x, dtype=float)
    v0 = geometry._pair(x + 0j, zp)
    v1 = geometry._pair(x + 1j * h, zp)
    v2 = geometry._pair(x + 2j * h, zp)
    return (-3 * v0 + 4 * v1 - v2) / (2 * h)


def laplacian_5pt(f: Callable, z, h: float):
    """Five-point Laplacian of a real function of a complex argument."""
    z = np.asarray(z, dtype=complex)
    return (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4 * f(z)) / h**2


def random_sites(geometry: BoundaryGeometry, n: int, rng=None, scale: float = 1.0,
                 min_sep: float = 0.05) -> np.ndarray:
    """Random admissible, well separated lattice sites."""
    rng = np.random.default_rng(rng)
    out: list[complex] = []
    while len(out) < n:
        if isinstance(geometry, HalfPlaneConductor):
            z = complex(rng.uniform(-1.5, 1.5), rng.uniform(0.2, 1.5)) * scale
        elif isinstance(geometry, QuarterPlane):
            z = complex(rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)) * scale
        elif isinstance(geometry, DiscExteriorConductor):
            z = geometry.R * rng.uniform(1.2, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi)) * scale
        elif isinstance(geometry, ConformalExterior):
            z = complex(rng.uniform(-3.0, 3.0), rng.uniform(-1.5, 1.5)) * scale
            if abs(geometry.map(z)) < 1.15:
                continue
        else:
            z = rng.uniform(0.3, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi)) * scale
        if all(abs(z - o) > min_sep * scale for o in out):
            out.append(z)
    return np.array(out, dtype=complex)


def geometry_for(kind, R: float = 1.0, conformal: ConformalMap | None = None) -> BoundaryGeometry:
    """Boundary geometry that the soliton correspondence pairs with ``kind``."""
    kind = HierarchyKind.parse(kind)
    if kind is HierarchyKind.KP:
        return HalfPlaneConductor()
    if kind is HierarchyKind.BKP:
        return QuarterPlane()
    if conformal is not None:
        return ConformalExterior(conformal)
    return DiscExteriorConductor(R)


def occupied_subsets(n: int) -> Iterable[tuple]:
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)
