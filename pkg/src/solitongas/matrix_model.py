"""Normal-matrix side: moment determinants for discrete and gridded measures.

For a measure ``rho`` with weight ``w = exp(-2 U - 2 Uh)``,

    Z_m = (1/m!) int prod_{i<j} |z_i - z_j|^2 prod w(z_i) drho(z_i)
        = det_{0<=j,k<m} int z^j zbar^k w drho.

For a discrete measure (unit mass per site, total mass N) the left side is
the canonical partition function of the free-plane gas. The determinant is
taken from a QR factorisation of the weighted Vandermonde matrix rather than
from the moment matrix itself, which squares the condition number.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ModeError, NonConvergence, RankWarning, SolitonGasError
from .soliton import HierarchyKind, TimesVector, check_real_mode
from .tauvalue import TauValue


def _log_weights(z: np.ndarray, U=None, times: TimesVector | None = None, ell: int = 0) -> np.ndarray:
    """``-2 U + sum_p (z^p t_p + zbar^p tbar_p) + 2 ell log|z|`` (real)."""
    out = np.zeros(z.shape, dtype=complex)
    if U is not None:
        out = out - 2 * np.asarray(U(z), dtype=complex)
    if times is not None:
        check_real_mode(HierarchyKind.TODA2D, times)
        zc = np.conj(z)
        for p in range(1, times.p_max + 1):
            tp, tbp = times.t[p - 1], times.tbar[p - 1]
            if tp or tbp:
                out = out + z**p * tp + zc**p * tbp
    if ell:
        out = out + 2 * ell * np.log(np.abs(z))
    if np.any(np.abs(out.imag) > 1e-9 * np.maximum(1.0, np.abs(out.real))):
        raise ModeError("measure weights must be real")
    return out.real


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Point masses at ``sites`` with positive weights ``exp(log_weights)``."""

    sites: np.ndarray
    log_weights: np.ndarray = None

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.sites, dtype=complex))
        lw = np.zeros(z.size) if self.log_weights is None else np.asarray(self.log_weights, dtype=float)
        if lw.shape != z.shape:
            raise SolitonGasError("one weight per site")
        if not np.all(np.isfinite(lw)):
            raise SolitonGasError("discrete weights must be strictly positive")
        object.__setattr__(self, "sites", z)
        object.__setattr__(self, "log_weights", lw)

    @classmethod
    def from_lattice(cls, sites, U=None, times: TimesVector | None = None, ell: int = 0) -> "DiscreteMeasure":
        z = np.atleast_1d(np.asarray(sites, dtype=complex))
        return cls(z, _log_weights(z, U, times, ell))

    @property
    def support(self) -> int:
        return int(np.unique(np.round(self.sites, 12)).size)

    @property
    def total_mass(self) -> float:
        return float(np.exp(self.log_weights).sum())

    def nodes(self):
        return self.sites, self.log_weights


# ---------------------------------------------------------------- densities


@dataclass(frozen=True, eq=False)
class GriddedDensity:
    """Density ``rho`` integrated by the midpoint rule.

    ``shape="rect"``: ``bounds = (x0, x1, y0, y1)``, an ``n x n`` grid.
    ``shape="disc"``: ``bounds = (radius,)``, a polar ``n x 2n`` grid, which
    keeps the boundary exact. ``U`` and ``times`` set the weight ``exp(-2 U - 2 Uh)``.
    """

    density: Callable
    bounds: tuple
    shape: str = "rect"
    n: int = 64
    U: Callable | None = None
    times: TimesVector | None = None

    def __post_init__(self):
        if self.shape not in ("rect", "disc"):
            raise SolitonGasError(f"unknown grid shape {self.shape!r}")
        if self.n < 2:
            raise SolitonGasError("grid needs at least 2 cells per side")

    def with_n(self, n: int) -> "GriddedDensity":
        return GriddedDensity(self.density, self.bounds, self.shape, n, self.U, self.times)

    def nodes(self):
        """Points and log weights ``log(rho * area) - 2 U - 2 Uh``."""
        n = self.n
        if self.shape == "rect":
            x0, x1, y0, y1 = self.bounds
            hx, hy = (x1 - x0) / n, (y1 - y0) / n
            xs = x0 + hx * (np.arange(n) + 0.5)
            ys = y0 + hy * (np.arange(n) + 0.5)
            X, Y = np.meshgrid(xs, ys)
            z = (X + 1j * Y).ravel()
            area = np.full(z.size, hx * hy)
        else:
            (rad,) = self.bounds
            hr, ht = rad / n, np.pi / n
            rs = hr * (np.arange(n) + 0.5)
            ts = ht * (np.arange(2 * n) + 0.5)
            Rr, Tt = np.meshgrid(rs, ts)
            z = (Rr * np.exp(1j * Tt)).ravel()
            area = (Rr * hr * ht).ravel()
        rho = np.asarray(self.density(z), dtype=float)
        if np.any(rho < 0):
            raise SolitonGasError("density must be nonnegative")
        mass = rho * area
        keep = mass > 0
        z, mass = z[keep], mass[keep]
        lw = np.log(mass) + _log_weights(z, self.U, self.times)
        return z, lw


@dataclass(frozen=True, eq=False)
class SampledDensity:
    """Density values on a fixed set of cell centres (e.g. read from CSV)."""

    points: np.ndarray
    values: np.ndarray
    cell_area: float
    U: Callable | None = None
    times: TimesVector | None = None

    def nodes(self):
        z = np.asarray(self.points, dtype=complex)
        rho = np.asarray(self.values, dtype=float)
        if np.any(rho < 0):
            raise SolitonGasError("density must be nonnegative")
        keep = rho > 0
        return z[keep], np.log(rho[keep] * self.cell_area) + _log_weights(z[keep], self.U, self.times)


def lattice_density(sites, width: float) -> Callable:
    """Sum of unit-mass Gaussian bumps of standard deviation ``width`` per axis."""
    sites = np.asarray(sites, dtype=complex)

    def rho(z):
        z = np.asarray(z, dtype=complex)
        d2 = np.abs(z[..., None] - sites) ** 2
        return np.exp(-d2 / (2 * width**2)).sum(axis=-1) / (2 * np.pi * width**2)

    return rho


# ------------------------------------------------------------ determinants


def _basis(z: np.ndarray, m: int, basis: str) -> np.ndarray:
    if basis == "monomial":
        return z[:, None] ** np.arange(m)[None, :]
    if basis == "newton":
        # Leja-ordered centres keep the Newton basis well scaled
        centres = _leja(z, m - 1)
        V = np.ones((z.size, m), dtype=complex)
        for j in range(1, m):
            V[:, j] = V[:, j - 1] * (z - centres[j - 1])
        return V
    raise SolitonGasError(f"unknown basis {basis!r}")


def _leja(z: np.ndarray, k: int) -> np.ndarray:
    if k <= 0:
        return np.zeros(0, dtype=complex)
    pts = [z[np.argmax(np.abs(z))]]
    logd = np.log(np.abs(z - pts[0]) + 1e-300)
    for _ in range(k - 1):
        j = int(np.argmax(logd))
        pts.append(z[j])
        logd = logd + np.log(np.abs(z - z[j]) + 1e-300)
    return np.array(pts)


def moment_matrix(measure, m: int) -> np.ndarray:
    """``M_jk = sum z^j zbar^k w`` for ``0 <= j, k < m``."""
    if m < 1:
        raise SolitonGasError("moment matrix needs m >= 1")
    z, lw = measure.nodes()
    w = np.exp(lw)
    V = z[:, None] ** np.arange(m)[None, :]
    support = getattr(measure, "support", z.size)
    if support < m:
        warnings.warn(f"support of {support} points < m = {m}; moment matrix is singular", RankWarning, stacklevel=2)
    return (V * w[:, None]).T @ np.conj(V)


def determinant_partition(measure, m: int, basis: str = "newton") -> TauValue:
    """``Z_m = det M`` via QR of the weighted Vandermonde matrix.

    ``det M = prod |R_jj|^2``. The default Newton basis on Leja-ordered
    centres is a unit-triangular change of the monomial basis, so the
    determinant is unchanged while the conditioning improves markedly. Returns zero (with a RankWarning) when the
    support has fewer than ``m`` points.
    """
    if m < 0:
        raise SolitonGasError("m must be nonnegative")
    if m == 0:
        return TauValue.one()
    z, lw = measure.nodes()
    support = getattr(measure, "support", z.size)
    if support < m:
        warnings.warn(f"support of {support} points < m = {m}; Z_m = 0", RankWarning, stacklevel=2)
        return TauValue.zero()
    # shift weights so the largest is 1; restore the factor m * shift afterwards
    shift = float(lw.max())
    A = np.exp(0.5 * (lw - shift))[:, None] * _basis(z, m, basis)
    Rm = np.linalg.qr(A, mode="r")
    d = np.abs(np.diag(Rm))
    if np.any(d == 0):
        return TauValue.zero()
    return TauValue.from_log(2 * float(np.log(d).sum()) + m * shift)


@dataclass(frozen=True)
class RefinementStudy:
    m: int
    ns: tuple
    values: tuple
    changes: tuple
    converged: bool

    @property
    def value(self) -> TauValue:
        return self.values[-1]

    @property
    def error(self) -> float:
        return self.changes[-1] if self.changes else float("nan")


def continuous_refinement(measure: GriddedDensity, m: int, levels: int = 4) -> RefinementStudy:
    """Evaluate ``det M`` on ``levels`` successively doubled grids."""
    ns, vals, changes = [], [], []
    g = measure
    for k in range(levels):
        v = determinant_partition(g, m)
        if vals:
            changes.append(v.rel_diff(vals[-1]))
        ns.append(g.n)
        vals.append(v)
        g = g.with_n(2 * g.n)
    return RefinementStudy(m, tuple(ns), tuple(vals), tuple(changes), False)


def continuous_partition(measure, m: int, tol: float = 1e-6, max_levels: int = 6) -> TauValue:
    """Midpoint-rule ``Z_m`` for a density, refined until two grids agree to ``tol``.

    Sampled (CSV) densities cannot be refined and are evaluated once.
    """
    if isinstance(measure, SampledDensity):
        return determinant_partition(measure, m)
    prev = determinant_partition(measure, m)
    g = measure
    for _ in range(max_levels - 1):
        g = g.with_n(2 * g.n)
        cur = determinant_partition(g, m)
        if cur.rel_diff(prev) <= tol:
            return cur
        prev = cur
    raise NonConvergence(f"grid refinement did not reach tol={tol} for m={m}")
