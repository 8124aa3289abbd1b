"""Soliton data and Hirota-form tau-functions for the KP, BKP and 2DTL hierarchies.

The N-soliton tau-function is the configuration sum

    tau = sum_nu prod_{i<j} L_ij^{nu_i nu_j} prod_i exp(phi_i nu_i)

where ``L_ij`` is the pairwise interaction factor and ``phi_i`` the soliton
phase. Interaction factors are evaluated as rational functions of the
momenta; the phase shift ``A_ij = log L_ij`` is only reported, never used to
build ``L``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _enumeration
from .errors import ModeError, PoleError, SolitonGasError, TruncationError
from .tauvalue import TauValue

P_MAX_DEFAULT = 8
POLE_RTOL = 1e-13


class HierarchyKind(enum.Enum):
    KP = "KP"
    BKP = "BKP"
    TODA2D = "TODA2D"

    @classmethod
    def parse(cls, value) -> "HierarchyKind":
        if isinstance(value, cls):
            return value
        key = str(value).upper().replace("-", "").replace("_", "")
        aliases = {"KP": cls.KP, "BKP": cls.BKP, "TODA2D": cls.TODA2D, "2DTL": cls.TODA2D, "TODA": cls.TODA2D}
        if key not in aliases:
            raise SolitonGasError(f"unknown hierarchy kind {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class MomentumPair:
    a: complex
    b: complex


def _as_tuple(values, p_max: int, name: str) -> tuple:
    vals = tuple(complex(v) for v in values)
    if len(vals) > p_max:
        extra = [i + 1 for i, v in enumerate(vals) if i >= p_max and v != 0]
        if extra:
            raise TruncationError(f"{name}_{extra[0]} given but P_max = {p_max}")
        vals = vals[:p_max]
    return vals + (0j,) * (p_max - len(vals))


@dataclass(frozen=True)
class TimesVector:
    """Truncated hierarchy times.

    ``t[p-1]`` holds ``t_p`` for ``p = 1..p_max``. For the 2DTL, ``tbar[p-1]``
    holds the conjugate times; the negative times entering soliton phases are
    ``t_{-p} = -tbar_p``. ``m`` is the discrete Toda index.
    """

    t: tuple = ()
    tbar: tuple = ()
    m: int = 0
    p_max: int = P_MAX_DEFAULT

    def __post_init__(self):
        if self.p_max < 1:
            raise TruncationError("P_max must be positive")
        object.__setattr__(self, "t", _as_tuple(self.t, self.p_max, "t"))
        object.__setattr__(self, "tbar", _as_tuple(self.tbar, self.p_max, "tbar"))
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def zeros(cls, p_max: int = P_MAX_DEFAULT, m: int = 0) -> "TimesVector":
        return cls((), (), m, p_max)

    @classmethod
    def from_dict(cls, t: dict | None = None, tbar: dict | None = None, m: int = 0,
                  p_max: int = P_MAX_DEFAULT) -> "TimesVector":
        def dense(d):
            d = d or {}
            if any(p < 1 for p in d):
                raise TruncationError("time indices start at 1")
            top = max(d, default=0)
            if top > p_max:
                raise TruncationError(f"index {top} exceeds P_max = {p_max}")
            return [d.get(p, 0) for p in range(1, top + 1)]

        return cls(dense(t), dense(tbar), m, p_max)

    def get(self, p: int) -> complex:
        """``t_p`` for ``p > 0``; the negative time ``t_p = -tbar_{|p|}`` for ``p < 0``."""
        if p == 0 or abs(p) > self.p_max:
            raise TruncationError(f"time index {p} outside 1..{self.p_max}")
        return self.t[p - 1] if p > 0 else -self.tbar[-p - 1]

    @property
    def positive(self) -> np.ndarray:
        return np.array(self.t, dtype=complex)

    @property
    def negative(self) -> np.ndarray:
        """``t_{-p}`` for ``p = 1..p_max``."""
        return -np.array(self.tbar, dtype=complex)

    @property
    def has_negative(self) -> bool:
        return any(v != 0 for v in self.tbar)

    def with_m(self, m: int) -> "TimesVector":
        return replace(self, m=m)

    def scaled(self, r: float) -> "TimesVector":
        """``t_p -> r^p t_p`` and ``tbar_p -> r^p tbar_p``."""
        pw = float(r) ** np.arange(1, self.p_max + 1)
        return replace(self, t=tuple(self.positive * pw), tbar=tuple(np.array(self.tbar) * pw))

    def add(self, p: int, delta: complex) -> "TimesVector":
        """Return a copy with ``t_p`` (or the negative time ``t_p`` if ``p < 0``) shifted."""
        self.get(p)
        if p > 0:
            t = list(self.t)
            t[p - 1] += delta
            return replace(self, t=tuple(t))
        tb = list(self.tbar)
        tb[-p - 1] -= delta
        return replace(self, tbar=tuple(tb))


def check_real_mode(kind: HierarchyKind, times: TimesVector, tol: float = 1e-12) -> None:
    """Raise ModeError unless the harmonic external potential is real.

    KP needs purely imaginary times, BKP real odd times, the 2DTL
    ``tbar_p = conj(t_p)``.
    """
    kind = HierarchyKind.parse(kind)
    t = times.positive
    if kind is HierarchyKind.KP:
        if np.any(np.abs(t.real) > tol * np.maximum(1.0, np.abs(t))):
            raise ModeError("KP times must be purely imaginary in real-potential mode")
        if times.has_negative:
            raise ModeError("KP has no negative times")
    elif kind is HierarchyKind.BKP:
        if np.any(np.abs(t[1::2]) > 0):
            raise ModeError("BKP uses odd times only")
        if np.any(np.abs(t.imag) > tol * np.maximum(1.0, np.abs(t))):
            raise ModeError("BKP times must be real in real-potential mode")
        if times.has_negative:
            raise ModeError("BKP has no negative times")
    else:
        tb = np.array(times.tbar)
        if np.any(np.abs(tb - t.conj()) > tol * np.maximum(1.0, np.abs(t))):
            raise ModeError("2DTL real-potential mode needs tbar_p = conj(t_p)")


# ------------------------------------------------------------ phase shifts


def _factors(kind: HierarchyKind, a1, b1, a2, b2):
    """Numerator and denominator factor lists of the interaction factor."""
    if kind is HierarchyKind.KP:
        return [a1 - a2, b1 - b2], [a1 + b2, b1 + a2]
    if kind is HierarchyKind.BKP:
        return [a1 - a2, b1 - b2, a1 - b2, b1 - a2], [a1 + a2, b1 + b2, a1 + b2, b1 + a2]
    if kind is HierarchyKind.TODA2D:
        return [a1 - a2, b1 - b2], [a1 - b2, b1 - a2]
    raise SolitonGasError(f"unsupported hierarchy {kind!r}")


def _interaction(kind, a1, b1, a2, b2):
    num, den = _factors(kind, a1, b1, a2, b2)
    scale = np.maximum.reduce([np.abs(a1), np.abs(b1), np.abs(a2), np.abs(b2)])
    for d in den:
        if np.any(np.abs(d) <= POLE_RTOL * scale):
            raise PoleError(f"{kind.value} interaction factor has a vanishing denominator")
    out = np.ones_like(np.asarray(num[0], dtype=complex))
    for x in num:
        out = out * x
    for x in den:
        out = out / x
    return out


def phase_shift(kind, p1: MomentumPair, p2: MomentumPair) -> tuple[complex, complex]:
    """Return ``(A_12, L_12)``; ``L_12`` is the rational interaction factor
    and ``A_12`` its principal logarithm."""
    kind = HierarchyKind.parse(kind)
    L = complex(_interaction(kind, complex(p1.a), complex(p1.b), complex(p2.a), complex(p2.b)))
    A = complex(np.log(L)) if L != 0 else complex(-np.inf, 0.0)
    return A, L


def interaction_matrix(kind, a, b) -> np.ndarray:
    """Symmetric (N, N) matrix of ``L_ij``; the diagonal is set to 1."""
    kind = HierarchyKind.parse(kind)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = a.shape[0]
    L = np.ones((n, n), dtype=complex)
    iu, ju = np.triu_indices(n, 1)
    if iu.size:
        vals = _interaction(kind, a[iu], b[iu], a[ju], b[ju])
        L[iu, ju] = vals
        L[ju, iu] = vals
    return L


# ------------------------------------------------------------------- phases


def soliton_phases(kind, a, b, phi0, times: TimesVector) -> np.ndarray:
    """Full phases ``phi_i`` for arrays of momenta."""
    kind = HierarchyKind.parse(kind)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    phi = np.array(phi0, dtype=complex)
    t = times.positive
    p = np.arange(1, times.p_max + 1)
    live = np.nonzero(t)[0]
    if kind is HierarchyKind.KP:
        if times.has_negative:
            raise SolitonGasError("negative times are defined for the 2DTL only")
        for k in live:
            phi = phi + (a ** p[k] - (-b) ** p[k]) * t[k]
    elif kind is HierarchyKind.BKP:
        if times.has_negative:
            raise SolitonGasError("negative times are defined for the 2DTL only")
        if np.any(t[1::2] != 0):
            raise SolitonGasError("BKP phases take odd times only")
        for k in live:
            phi = phi + (a ** p[k] + b ** p[k]) * t[k]
    else:
        if np.any(a == 0) or np.any(b == 0):
            raise PoleError("2DTL momenta must be nonzero")
        if times.m:
            phi = phi + times.m * (np.log(a) - np.log(b))
        for k in live:
            phi = phi + (a ** p[k] - b ** p[k]) * t[k]
        tn = times.negative
        for k in np.nonzero(tn)[0]:
            phi = phi + (a ** (-p[k]) - b ** (-p[k])) * tn[k]
    return phi


def soliton_phase(kind, p: MomentumPair, phi0: complex, times: TimesVector) -> complex:
    return complex(soliton_phases(kind, [p.a], [p.b], [phi0], times)[0])


# ------------------------------------------------------------------- system


@dataclass(frozen=True, eq=False)
class SolitonSystem:
    kind: HierarchyKind
    a: np.ndarray
    b: np.ndarray
    phi0: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", HierarchyKind.parse(self.kind))
        a = np.atleast_1d(np.asarray(self.a, dtype=complex))
        b = np.atleast_1d(np.asarray(self.b, dtype=complex))
        if a.shape != b.shape or a.ndim != 1:
            raise SolitonGasError("momentum arrays must be 1-d and of equal length")
        phi0 = np.zeros_like(a) if self.phi0 is None else np.atleast_1d(np.asarray(self.phi0, dtype=complex))
        if phi0.shape != a.shape:
            raise SolitonGasError("need one initial phase per soliton")
        if self.kind is HierarchyKind.TODA2D and (np.any(a == 0) or np.any(b == 0)):
            raise PoleError("2DTL momenta must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "phi0", phi0)
        # validates every pair
        _ = self.interaction_matrix

    @classmethod
    def from_pairs(cls, kind, pairs: Iterable[MomentumPair], phi0=None) -> "SolitonSystem":
        pairs = list(pairs)
        return cls(kind, [p.a for p in pairs], [p.b for p in pairs], phi0)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def momenta(self) -> list[MomentumPair]:
        return [MomentumPair(complex(x), complex(y)) for x, y in zip(self.a, self.b)]

    @cached_property
    def interaction_matrix(self) -> np.ndarray:
        return interaction_matrix(self.kind, self.a, self.b)

    @property
    def phase_shifts(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.interaction_matrix)

    def phases(self, times: TimesVector) -> np.ndarray:
        return soliton_phases(self.kind, self.a, self.b, self.phi0, times)

    def with_phi0(self, phi0) -> "SolitonSystem":
        return SolitonSystem(self.kind, self.a, self.b, phi0)


def _log_pair(system: SolitonSystem) -> np.ndarray:
    # exp() of these exponents reproduces L_ij; the branch of the log is irrelevant
    with np.errstate(divide="ignore"):
        return np.log(system.interaction_matrix)


def _log_site(phases: np.ndarray, factors: np.ndarray | None = None) -> np.ndarray:
    if factors is None:
        return phases
    with np.errstate(divide="ignore"):
        return phases + np.log(factors.astype(complex))


def tau_sectors(system: SolitonSystem, times: TimesVector, *, factors=None, derivs=None,
                order: str = "gray", workers: int | None = None,
                n_max: int = _enumeration.N_MAX_DEFAULT) -> list[TauValue]:
    """Hirota sum split by the number of excited solitons."""
    site = _log_site(system.phases(times), factors)
    return _enumeration.hirota_sectors(
        _log_pair(system), site, derivs=derivs, order=order, workers=workers, n_max=n_max
    )


def tau_hirota(system: SolitonSystem, times: TimesVector, *, order: str = "gray",
               workers: int | None = None, n_max: int = _enumeration.N_MAX_DEFAULT,
               derivs=None, factors=None) -> TauValue:
    """Evaluate the N-soliton tau-function by exact enumeration of 2^N terms."""
    site = _log_site(system.phases(times), factors)
    return _enumeration.hirota_total(
        _log_pair(system), site, derivs=derivs, order=order, workers=workers, n_max=n_max
    )


# ------------------------------------------------------------------- shifts


@dataclass(frozen=True)
class ShiftSpec:
    """Miwa shift of the times at a point ``z``.

    ``side="positive"`` shifts ``t_p -> t_p + c z^{-p}/p`` (for BKP only odd
    ``p`` are shifted). ``side="negative"`` is 2DTL only and shifts the
    negative times ``t_{-p} -> t_{-p} + c z^p/p``.
    """

    z: complex
    c: int = 1
    side: str = "positive"


def _check_den(den, scale, what):
    if np.any(np.abs(den) <= POLE_RTOL * np.maximum(scale, 1.0)):
        raise PoleError(f"shift point sits on a pole of the {what} factor")


def shift_factors(system: SolitonSystem, shift: ShiftSpec) -> np.ndarray:
    """Closed-form multipliers of ``exp(phi_i)`` produced by ``shift``."""
    z = complex(shift.z)
    c = int(shift.c)
    a, b = system.a, system.b
    kind = system.kind
    if c == 0:
        return np.ones_like(a)
    if shift.side == "positive":
        if z == 0:
            raise PoleError("a shift by [1/z] needs z != 0")
        if kind is HierarchyKind.KP:
            num, den = 1 + b / z, 1 - a / z
            _check_den(den, np.abs(a / z), "KP shift")
            return (num / den) ** c
        if kind is HierarchyKind.BKP:
            if c % 2:
                raise SolitonGasError("BKP shifts must be even multiples of [1/z]")
            den = (z - a) * (z - b)
            _check_den(den, np.abs(z) ** 2 + np.abs(a * b), "BKP shift")
            return (((z + a) * (z + b)) / den) ** (c // 2)
        num, den = 1 - b / z, 1 - a / z
        _check_den(den, np.abs(a / z), "2DTL shift")
        return (num / den) ** c
    if shift.side == "negative":
        if kind is not HierarchyKind.TODA2D:
            raise SolitonGasError("negative-time shifts exist for the 2DTL only")
        num, den = 1 - z / b, 1 - z / a
        _check_den(den, np.abs(z / a), "2DTL negative shift")
        return (num / den) ** c
    raise SolitonGasError(f"unknown shift side {shift.side!r}")


def tau_shifted(system: SolitonSystem, times: TimesVector, shift: ShiftSpec | Sequence[ShiftSpec],
                **kwargs) -> TauValue:
    """Tau-function at Miwa-shifted times, evaluated in closed form (no truncation)."""
    shifts = [shift] if isinstance(shift, ShiftSpec) else list(shift)
    factors = np.ones(system.n, dtype=complex)
    for s in shifts:
        factors = factors * shift_factors(system, s)
    return tau_hirota(system, times, factors=factors, **kwargs)
