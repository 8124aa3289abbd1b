"""Checks that tau-functions and partition chains solve the hierarchy equations.

Conventions
-----------
Toda chains are functions of ``t_1`` and the negative time ``t_{-1} = -tbar_1``,
treated as independent complex variables. The bilinear equation checked is

    d1 tau(m) * d-1 tau(m) - tau(m) * d1 d-1 tau(m) = tau(m-1) tau(m+1).

A 2DTL Hirota sum ``sigma`` solves it only after multiplication by the vacuum
factor ``exp(-sum_k k t_k t_{-k})``; :class:`SolitonTodaChain` includes that
factor. The normal-matrix chain :class:`PartitionChain` needs none.

Residue identities are evaluated by the trapezoid rule on circles, using the
closed-form Miwa shift factors. Sides with shifts by ``[z^{-1}]`` are
integrated on a large circle enclosing every momentum, sides with shifts by
``[z]`` on a small circle inside all of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _enumeration
from .correspondence import CorrespondenceSpec, _u_values
from .errors import (
    ContourError,
    DegenerateError,
    NonConvergence,
    RangeError,
    SolitonGasError,
    UnsupportedError,
)
from .soliton import (
    HierarchyKind,
    ShiftSpec,
    SolitonSystem,
    TimesVector,
    _log_pair,
    shift_factors,
)
from .tauvalue import TauValue


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    scale: float
    relative: float
    method: str = ""
    meta: dict = field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return self.relative <= tol

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "scale": self.scale,
            "relative": self.relative,
            "method": self.method,
            "meta": dict(self.meta),
        }


def _report(terms: Sequence[TauValue], signs: Sequence[int], method: str, **meta) -> ResidualReport:
    """Residual of ``sum sign_k * term_k`` measured against the largest term."""
    live = [t for t in terms if not t.is_zero]
    if not live:
        return ResidualReport(0.0, 0.0, 0.0, method, meta)
    top = max(t.log_magnitude for t in live)
    total = 0j
    for t, s in zip(terms, signs):
        if not t.is_zero:
            total += s * t.phase * math.exp(t.log_magnitude - top)
    rel = abs(total)
    scale = math.exp(top) if top < 700 else math.inf
    res = rel * scale if math.isfinite(scale) else math.inf
    meta.setdefault("log_scale", top)
    return ResidualReport(res, scale, rel, method, meta)


def _check_vars(variables) -> tuple:
    variables = tuple(int(v) for v in variables)
    if any(v == 0 for v in variables):
        raise UnsupportedError("time index 0 does not exist")
    return variables


# ------------------------------------------------------------------- chains


class TodaChain:
    """Interface: ``value(m)`` and ``derivative(m, variables)`` with
    variables given as signed time indices (``1`` is ``t_1``, ``-1`` is
    ``t_{-1}``)."""

    n: int | None = None

    def value(self, m: int) -> TauValue:
        raise NotImplementedError

    def derivative(self, m: int, variables) -> TauValue:
        raise NotImplementedError

    def shifted(self, p: int, delta: complex) -> "TodaChain":
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class PartitionChain(TodaChain):
    """``Z_m = sum_{|S|=m} prod |z_i - z_j|^2 prod exp(-2 U - 2 Uh)`` with the
    free-plane harmonic field ``Uh = -1/2 sum_p (z^p t_p + zbar^p tbar_p)``.

    ``tbar`` need not equal ``conj(t)`` here; the chain is holomorphic in
    each time separately. ``ell`` adds the weight ``|z|^{2 ell}``.
    """

    sites: np.ndarray
    times: TimesVector
    u_values: np.ndarray | None = None
    ell: int = 0

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.sites, dtype=complex))
        object.__setattr__(self, "sites", z)
        u = np.zeros(z.size) if self.u_values is None else np.asarray(self.u_values, dtype=float)
        object.__setattr__(self, "u_values", u)

    @classmethod
    def from_spec(cls, spec: CorrespondenceSpec) -> "PartitionChain":
        return cls(spec.lattice, spec.times, _u_values(spec.U, spec.lattice), spec.ell or 0)

    @property
    def n(self) -> int:
        return self.sites.size

    def _exponents(self):
        z = self.sites
        zc = np.conj(z)
        d = z[:, None] - z[None, :]
        np.fill_diagonal(d, 1.0)
        pair = np.log(np.abs(d) ** 2) + 0j
        site = -2 * self.u_values + 0j
        if self.ell:
            site = site + 2 * self.ell * np.log(np.abs(z))
        T = self.times
        for p in range(1, T.p_max + 1):
            tp, tbp = T.t[p - 1], T.tbar[p - 1]
            if tp != 0 or tbp != 0:
                site = site + z**p * tp + zc**p * tbp
        return pair, site

    def dvec(self, p: int) -> np.ndarray:
        """Per-site derivative of the site exponent in ``t_p``."""
        z = self.sites
        return z**p if p > 0 else -np.conj(z) ** (-p)

    def sectors(self, variables=()) -> list[TauValue]:
        variables = _check_vars(variables)
        pair, site = self._exponents()
        derivs = [self.dvec(p) for p in variables]
        return _enumeration.hirota_sectors(pair, site, derivs=derivs, order="naive")

    def value(self, m: int) -> TauValue:
        return self.derivative(m, ())

    def derivative(self, m: int, variables) -> TauValue:
        if m < 0 or m > self.n:
            return TauValue.zero()
        return self.sectors(variables)[m]

    def shifted(self, p: int, delta: complex) -> "PartitionChain":
        return replace(self, times=self.times.add(p, delta))


def exact_time_derivative(chain: TodaChain, m: int, variables) -> TauValue:
    """Exact derivative of ``tau(m)`` in the given signed time indices."""
    if not isinstance(chain, (PartitionChain, SolitonTodaChain)):
        raise UnsupportedError("exact derivatives need an exponential-linear chain")
    return chain.derivative(m, variables)


@dataclass(frozen=True, eq=False)
class SolitonTodaChain(TodaChain):
    """2DTL soliton chain ``tau(m) = exp(-sum_k k t_k t_{-k}) sigma(m)``.

    With ``R`` set, the chain is the gauge transform
    ``R^{m^2} tau(m - 1; R^p T_p)`` and ``times`` are the outer times ``T``.
    """

    system: SolitonSystem
    times: TimesVector
    R: float | None = None

    def __post_init__(self):
        if self.system.kind is not HierarchyKind.TODA2D:
            raise SolitonGasError("Toda chains need a 2DTL system")

    def shifted(self, p: int, delta: complex) -> "SolitonTodaChain":
        return replace(self, times=self.times.add(p, delta))

    def _inner(self, m: int):
        if self.R is None:
            return self.times.with_m(m), 1.0, 0.0
        R = float(self.R)
        return self.times.with_m(m - 1).scaled(R), R, m * m * math.log(R)

    def value(self, m: int) -> TauValue:
        return self.derivative(m, ())

    def derivative(self, m: int, variables) -> TauValue:
        variables = _check_vars(variables)
        if len(variables) > 2:
            raise UnsupportedError("at most second-order derivatives")
        inner, R, log_pref = self._inner(m)
        a, b = self.system.a, self.system.b
        phases = self.system.phases(inner)
        pair = _log_pair(self.system)

        def dphi(p):
            return a**p - b**p

        def sig(vs):
            return _enumeration.hirota_total(pair, phases, derivs=[dphi(p) for p in vs])

        tpos, tneg = inner.positive, inner.negative
        vac_log = -sum(k * tpos[k - 1] * tneg[k - 1] for k in range(1, inner.p_max + 1))

        def dv(p):
            k = abs(p)
            return -k * (tneg[k - 1] if p > 0 else tpos[k - 1])

        def dvv(p, q):
            return -abs(p) if p == -q else 0.0

        # chain rule to the outer times: d/dT_p = R^{|p|} d/dt_p
        jac = 1.0
        for p in variables:
            jac *= R ** abs(p)
        if not variables:
            out = sig(())
        elif len(variables) == 1:
            (p,) = variables
            out = sig((p,)) + sig(()) * TauValue.from_value(dv(p))
        else:
            p, q = variables
            out = (
                sig((p, q))
                + sig((q,)) * TauValue.from_value(dv(p))
                + sig((p,)) * TauValue.from_value(dv(q))
                + sig(()) * TauValue.from_value(dv(p) * dv(q) + dvv(p, q))
            )
        if out.is_zero:
            return out
        return TauValue.from_log(out.log() + vac_log + log_pref + math.log(jac))


# ---------------------------------------------------------------- residuals


def toda_bilinear_residual(chain: TodaChain, m: int) -> ResidualReport:
    """Residual of ``d1 tau d-1 tau - tau d1 d-1 tau - tau(m-1) tau(m+1)``."""
    if chain.n is not None and not 0 <= m <= chain.n:
        raise RangeError(f"m = {m} outside 0..{chain.n}")
    d1 = chain.derivative(m, (1,))
    dm1 = chain.derivative(m, (-1,))
    d2 = chain.derivative(m, (1, -1))
    t0 = chain.value(m)
    terms = [d1 * dm1, t0 * d2, chain.value(m - 1) * chain.value(m + 1)]
    return _report(terms, [1, -1, -1], "exact", m=m)


def _log_ratio(chain: TodaChain, m: int, base: TauValue, dp: complex, dm: complex) -> complex:
    c = chain
    if dp:
        c = c.shifted(1, dp)
    if dm:
        c = c.shifted(-1, dm)
    v = c.value(m)
    if v.is_zero:
        raise DegenerateError(f"tau({m}) vanishes inside the stencil")
    return (v / base).log()


def _mixed_second(chain: TodaChain, m: int, h: float) -> complex:
    base = chain.value(m)
    if base.is_zero:
        raise DegenerateError(f"tau({m}) vanishes at the stencil centre")
    f = lambda s1, s2: _log_ratio(chain, m, base, s1 * h, s2 * h)  # noqa: E731
    return (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h)


def _e_minus_u(chain: TodaChain, k: int) -> complex:
    """``exp(-u(k)) = tau(k+1) tau(k-1) / tau(k)^2``; zero past a chain end."""
    mid = chain.value(k)
    if mid.is_zero:
        raise DegenerateError(f"tau({k}) vanishes")
    num = chain.value(k + 1) * chain.value(k - 1)
    if num.is_zero:
        return 0j
    return (num / (mid * mid)).value


def _u_residual_at(chain: TodaChain, m: int, h: float):
    lhs = (
        2 * _mixed_second(chain, m, h)
        - (_mixed_second(chain, m + 1, h) if not (chain.n is not None and m + 1 > chain.n) else 0)
        - (_mixed_second(chain, m - 1, h) if m - 1 >= 0 else 0)
    )
    rhs = _e_minus_u(chain, m + 1) + _e_minus_u(chain, m - 1) - 2 * _e_minus_u(chain, m)
    return lhs, rhs


def toda_u_equation_residual(chain: TodaChain, m: int, h: float = 1e-2) -> ResidualReport:
    """Check ``d1 d-1 u(m) = e^{-u(m+1)} + e^{-u(m-1)} - 2 e^{-u(m)}``.

    ``u(m) = log(tau(m)^2 / (tau(m+1) tau(m-1)))``. At the chain ends the
    missing neighbour contributes nothing (``e^{-u}`` vanishes there). The
    mixed derivative uses a four-point central stencil; the residual is
    reported at ``h`` together with the order fitted from ``h`` and ``h/2``.
    """
    if chain.n is not None and not 1 <= m <= chain.n - 1:
        raise RangeError(f"u-equation needs 1 <= m <= N-1, got m = {m}")
    res = []
    for hh in (h, h / 2):
        lhs, rhs = _u_residual_at(chain, m, hh)
        res.append((abs(lhs - rhs), max(abs(lhs), abs(rhs), 1e-300)))
    order = math.log2(res[0][0] / res[1][0]) if res[1][0] > 0 and res[0][0] > 0 else float("nan")
    r, s = res[0]
    return ResidualReport(r, s, r / s, "central", {"m": m, "h": h, "residual_half": res[1][0], "order": order})


# ------------------------------------------------------------------ KP test

_D1 = {-1: -0.5, 1: 0.5}
_D2 = {-1: 1.0, 0: -2.0, 1: 1.0}
_D3 = {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5}
_D4 = {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0}
_D6 = {-3: 1.0, -2: -6.0, -1: 15.0, 0: -20.0, 1: 15.0, 2: -6.0, 3: 1.0}


def _kp_terms(system: SolitonSystem, times: TimesVector, h: float):
    pts = set()
    for i in _D6:
        pts.add((i, 0, 0))
    for i in _D2:
        for j in _D2:
            pts.add((i, j, 0))
    for i in _D3:
        for k in _D1:
            pts.add((i, 0, k))
    pts = sorted(pts)
    base = system.phases(times)
    a, b = system.a, system.b
    dx = a - (-b)
    dy = a**2 - (-b) ** 2
    dt = a**3 - (-b) ** 3
    rows = np.array([base + h * (i * dx + j * dy + k * dt) for i, j, k in pts])
    if system.n == 0:
        F = {p: 0j for p in pts}
    else:
        logs = _enumeration.hirota_batch(_log_pair(system), rows)
        ref = logs[pts.index((0, 0, 0))]
        # principal log of tau ratios; the stencil is small enough to stay on one branch
        F = {p: complex(np.log(np.exp(v - ref))) for p, v in zip(pts, logs)}
    Fx2 = sum(c * F[(i, 0, 0)] for i, c in _D2.items()) / h**2
    Fx3 = sum(c * F[(i, 0, 0)] for i, c in _D3.items()) / h**3
    Fx4 = sum(c * F[(i, 0, 0)] for i, c in _D4.items()) / h**4
    Fx6 = sum(c * F[(i, 0, 0)] for i, c in _D6.items()) / h**6
    Fxxyy = sum(ci * cj * F[(i, j, 0)] for i, ci in _D2.items() for j, cj in _D2.items()) / h**4
    Fxxxt = sum(ci * ck * F[(i, 0, k)] for i, ci in _D3.items() for k, ck in _D1.items()) / h**4
    return [-6 * Fxxyy, 8 * Fxxxt, -24 * Fx3 * Fx3, -24 * Fx2 * Fx4, -2 * Fx6]


def kp_equation_residual(system: SolitonSystem, times: TimesVector, h: float = 0.2,
                         levels: int = 3) -> ResidualReport:
    """Residual of ``3 u_yy - d_x(4 u_t + 6 u u_x - u_xxx)``, ``u = -2 (log tau)_xx``.

    Written in ``F = log tau`` and discretised with second-order central
    stencils at steps ``h, h/2, ...``. The report holds the finest-level
    residual and the convergence order fitted over the last two levels.
    """
    if system.kind is not HierarchyKind.KP:
        raise SolitonGasError("the KP equation needs a KP system")
    hs = [h / 2**k for k in range(levels)]
    rows = []
    for hh in hs:
        terms = _kp_terms(system, times, hh)
        r = abs(sum(terms))
        s = max(abs(t) for t in terms)
        rows.append((hh, r, s))
    if system.n == 0:
        return ResidualReport(0.0, 0.0, 0.0, "central", {"h": hs, "residuals": [0.0] * levels, "order": float("nan")})
    if any(not np.isfinite(r) for _, r, _ in rows):
        raise DegenerateError("tau vanishes inside the KP stencil")
    r1, r2 = rows[-2][1], rows[-1][1]
    order = math.log2(r1 / r2) if r1 > 0 and r2 > 0 else float("nan")
    _, r, s = rows[-1]
    scale = max(x[2] for x in rows)
    return ResidualReport(
        r, scale, r / scale if scale else 0.0, "central",
        {"h": hs, "residuals": [x[1] for x in rows], "order": order},
    )


# ------------------------------------------------------- residue identities


def _pole_radii(system: SolitonSystem) -> np.ndarray:
    return np.concatenate([np.abs(system.a), np.abs(system.b)])


def _xi(times_vec: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for k, t in enumerate(times_vec, start=1):
        if t != 0:
            out = out + t * z**k
    return out


def _shift_logs(system: SolitonSystem, zs: np.ndarray, c: int, side: str) -> np.ndarray:
    return np.array([np.log(shift_factors(system, ShiftSpec(z, c, side))) for z in zs])


def _vacuum(times: TimesVector) -> complex:
    tp, tn = times.positive, times.negative
    return -sum(k * tp[k - 1] * tn[k - 1] for k in range(1, times.p_max + 1))


def _contour_integrals(kind, system, t, tp, r_big, r_small, M):
    """Return ``(lhs, rhs, scale)`` for one contour configuration."""
    pair = _log_pair(system) if system.n else None
    zb = r_big * np.exp(2j * np.pi * np.arange(M) / M)

    def tau_logs(times, zs, c, side):
        if system.n == 0:
            return np.zeros(zs.size, dtype=complex)
        rows = system.phases(times)[None, :] + _shift_logs(system, zs, c, side)
        return _enumeration.hirota_batch(pair, rows)

    if kind is HierarchyKind.KP:
        g = _xi(t.positive - tp.positive, zb) + tau_logs(t, zb, -1, "positive") + tau_logs(tp, zb, 1, "positive")
        f = np.exp(g) * zb
        return f.mean(), 0j, float(np.abs(f).mean())
    if kind is HierarchyKind.BKP:
        g = _xi(t.positive - tp.positive, zb) + tau_logs(t, zb, -2, "positive") + tau_logs(tp, zb, 2, "positive")
        f = np.exp(g)
        rhs = 1.0 + 0j
        if system.n:
            rhs = np.exp(_enumeration.hirota_batch(pair, np.array([system.phases(t), system.phases(tp)])).sum())
        return f.mean(), rhs, float(np.abs(f).mean())
    # 2DTL, primed chain at index m', unprimed at m; tau includes the vacuum factor,
    # whose Miwa shifts contribute the exp(+-xi) terms below
    m, mp = t.m, tp.m
    tn, tpn = t.negative, tp.negative
    gl = (
        (mp - m) * np.log(zb)
        + _xi(tp.positive - t.positive, zb)
        + tau_logs(tp, zb, -1, "positive") + _vacuum(tp) + _xi(tpn, 1 / zb)
        + tau_logs(t, zb, 1, "positive") + _vacuum(t) - _xi(tn, 1 / zb)
    )
    fl = np.exp(gl) * zb
    zs = r_small * np.exp(2j * np.pi * np.arange(M) / M)
    gr = (
        (mp - m) * np.log(zs)
        + _xi(tpn - tn, 1 / zs)
        + tau_logs(tp.with_m(mp + 1), zs, -1, "negative") + _vacuum(tp) + _xi(tp.positive, zs)
        + tau_logs(t.with_m(m - 1), zs, 1, "negative") + _vacuum(t) - _xi(t.positive, zs)
    )
    fr = np.exp(gr) * zs
    return fl.mean(), fr.mean(), float(max(np.abs(fl).mean(), np.abs(fr).mean()))


def residue_contour_check(kind, system: SolitonSystem, t: TimesVector, t_prime: TimesVector,
                          m: int | None = None, m_prime: int | None = None, r: float | None = None,
                          M: int = 128, r_small: float | None = None, tol: float = 1e-9,
                          max_M: int = 4096) -> ResidualReport:
    """Hirota residue identity by trapezoid quadrature.

    KP:   res_z exp(xi(t - t', z)) tau(t - [1/z]) tau(t' + [1/z]) = 0
    BKP:  (1/2 pi i) oint exp(xi(t - t', z)) tau(t - 2[1/z]) tau(t' + 2[1/z]) dz / z
          = tau(t) tau(t')                    (odd times, odd Miwa shifts)
    2DTL: oint_large z^{m'-m} exp(xi(t' - t, z)) tau_{m'}(t' - [1/z]) tau_m(t + [1/z]) dz
          = oint_small z^{m'-m} exp(xi(s' - s, 1/z)) tau_{m'+1}(s' - [z]) tau_{m-1}(s + [z]) dz
          with ``s`` the negative times and tau including the vacuum factor.

    ``r`` is the large radius (default three times the largest momentum modulus),
    ``r_small`` the small one (default half the smallest). The point count
    is doubled from ``M`` until two successive results agree to ``tol``; the
    report's ``stability`` is the larger change under ``r -> r/2`` and
    ``M -> 2M`` at the converged ``M``.
    """
    kind = HierarchyKind.parse(kind)
    if system.kind is not kind:
        raise SolitonGasError("system kind does not match the requested identity")
    if M < 4 or M & (M - 1):
        raise ContourError("M must be a power of two")
    if m is not None:
        t = t.with_m(m)
    if m_prime is not None:
        t_prime = t_prime.with_m(m_prime)
    radii = _pole_radii(system) if system.n else np.array([1.0])
    rho_max, rho_min = float(radii.max()), float(radii.min())
    r = 3 * rho_max if r is None else float(r)
    r_small = 0.5 * rho_min if r_small is None else float(r_small)
    if r <= rho_max:
        raise ContourError(f"large contour radius {r} must exceed every pole radius ({rho_max})")
    if kind is HierarchyKind.TODA2D and r_small >= rho_min:
        raise ContourError(f"small contour radius {r_small} must stay inside every pole ({rho_min})")
    if kind is not HierarchyKind.TODA2D and (t.has_negative or t_prime.has_negative):
        raise SolitonGasError("negative times exist for the 2DTL only")

    def run(rb, rs, MM):
        lhs, rhs, quad = _contour_integrals(kind, system, t, t_prime, rb, rs, MM)
        return lhs, rhs, quad

    MM = M
    prev = run(r, r_small, MM)
    while True:
        if MM * 2 > max_M:
            raise NonConvergence(f"quadrature not stable at M = {MM}")
        nxt = run(r, r_small, 2 * MM)
        sc = max(abs(nxt[0]), abs(nxt[1]), 1e-300) if kind is not HierarchyKind.KP else nxt[2]
        if max(abs(nxt[0] - prev[0]), abs(nxt[1] - prev[1])) <= tol * sc:
            break
        MM *= 2
        prev = nxt
    lhs, rhs, quad = prev
    if kind is HierarchyKind.KP:
        scale = quad
    else:
        scale = max(abs(lhs), abs(rhs))
    res = abs(lhs - rhs)
    half_big = r / 2 if r / 2 > rho_max else r
    halved = run(half_big, r_small / 2, MM)
    change = max(abs(halved[0] - lhs), abs(halved[1] - rhs), abs(nxt[0] - lhs), abs(nxt[1] - rhs))
    return ResidualReport(
        float(res), float(scale), float(res / scale) if scale else 0.0, "trapezoid",
        {
            "kind": kind.value, "r": r, "r_small": r_small, "M": MM,
            "lhs": complex(lhs), "rhs": complex(rhs),
            "stability": float(change / scale) if scale else 0.0,
            "halved_radius": half_big, "quadrature_scale": quad,
        },
    )


# ------------------------------------------------------- difference helpers


def central_difference(fn: Callable[[complex], complex], x: complex, h: float) -> complex:
    return (fn(x + h) - fn(x - h)) / (2 * h)


def complex_step(fn: Callable[[complex], complex], x: float, h: float = 1e-20) -> float:
    """First derivative of a real-analytic ``fn`` at real ``x``; no cancellation."""
    return float(np.imag(fn(x + 1j * h)) / h)


def chain_difference(chain: TodaChain, m: int, p: int, h: float) -> complex:
    """Central difference of ``tau(m)`` in the signed time ``t_p``."""
    return ((chain.shifted(p, h).value(m) - chain.shifted(p, -h).value(m)).value) / (2 * h)
