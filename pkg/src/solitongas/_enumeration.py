"""Exact enumeration of ``sum_nu exp(sum_{i<j} A_ij nu_i nu_j + sum_i phi_i nu_i)``.

Both the soliton tau-function and the lattice-gas grand partition function
have this form. The sum is returned resolved by particle number
``n = sum(nu)`` so that canonical sectors come for free.

Two orders are available:

``gray``
    Low ``c`` bits are generated by reflecting the binary-reflected Gray code,
    so each new configuration is its mirror partner with one extra bit set and
    costs one O(N) update. High bits are walked in Gray order block by block,
    each step flipping one site and updating the cross field in O(N).
``naive``
    Binary counting with the full quadratic form evaluated per term. Kept as an
    independent cross-check.

Entries equal to ``-inf`` (vanishing factors) are tracked with integer zero
counts so that ``0 * -inf`` never appears.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .errors import SizeError
from .tauvalue import Accumulator, TauValue

N_MAX_DEFAULT = 24
BLOCK_BITS = 14


def default_workers() -> int:
    env = os.environ.get("SOLITONGAS_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def _split_finite(arr: np.ndarray):
    """Return (finite copy with -inf replaced by 0, integer zero mask or None)."""
    arr = np.array(arr, dtype=complex)
    bad = np.isneginf(arr.real)
    if not bad.any():
        return arr, None
    arr[bad] = 0.0
    return arr, bad.astype(np.int64)


def _check_size(n: int, n_max: int) -> None:
    if n > n_max:
        raise SizeError(f"exact enumeration over 2^{n} configurations exceeds N_max={n_max}")


def hirota_sectors(
    log_pair,
    log_site,
    *,
    derivs: Sequence[np.ndarray] | None = None,
    order: str = "gray",
    workers: int | None = None,
    n_max: int = N_MAX_DEFAULT,
    block_bits: int = BLOCK_BITS,
) -> list[TauValue]:
    """Sector-resolved configuration sum.

    ``log_pair`` is a symmetric (N, N) array of pair exponents (diagonal
    ignored), ``log_site`` the (N,) site exponents. ``derivs`` is an optional
    list of (N,) vectors ``d_k``; each term is then weighted by
    ``prod_k (nu . d_k)``, which is how exact time derivatives of
    exponential-linear sums are formed.

    Returns ``N + 1`` TauValues, entry ``n`` holding the ``n``-particle sector.
    """
    log_site = np.asarray(log_site, dtype=complex)
    n = log_site.shape[0]
    _check_size(n, n_max)
    log_pair = np.asarray(log_pair, dtype=complex).reshape(n, n)
    derivs = [np.asarray(d, dtype=complex) for d in (derivs or [])]
    if n == 0:
        # only the empty configuration; every linear weight vanishes on it
        return [TauValue.zero() if derivs else TauValue.one()]
    pair = log_pair.copy()
    np.fill_diagonal(pair, 0.0)
    pair, zpair = _split_finite(pair)
    site, zsite = _split_finite(log_site)
    if order == "gray":
        accs = _gray(pair, site, zpair, zsite, derivs, workers, block_bits)
    elif order == "naive":
        accs = _naive(pair, site, zpair, zsite, derivs)
    else:
        raise ValueError(f"unknown enumeration order {order!r}")
    return [a.result() for a in accs]


def hirota_total(log_pair, log_site, **kwargs) -> TauValue:
    """Full configuration sum (all sectors)."""
    secs = hirota_sectors(log_pair, log_site, **kwargs)
    acc = Accumulator()
    for s in secs:
        if not s.is_zero:
            acc._merge_raw(s.log_magnitude, s.phase.real, s.phase.imag)
    return acc.result()


# ---------------------------------------------------------------- gray order


def _low_block(pair, site, zpair, zsite, c):
    """Reflected Gray code over the first ``c`` sites."""
    e = np.zeros(1, dtype=complex)
    bits = np.zeros((1, 0), dtype=np.float64)
    zc = np.zeros(1, dtype=np.int64) if (zpair is not None or zsite is not None) else None
    for k in range(c):
        rbits = bits[::-1]
        inc = site[k] + rbits @ pair[:k, k]
        e = np.concatenate([e, e[::-1] + inc])
        if zc is not None:
            zinc = (zsite[k] if zsite is not None else 0)
            if zpair is not None:
                zinc = zinc + (rbits @ zpair[:k, k]).astype(np.int64)
            zc = np.concatenate([zc, zc[::-1] + zinc])
        bits = np.vstack(
            [
                np.hstack([bits, np.zeros((bits.shape[0], 1))]),
                np.hstack([rbits, np.ones((bits.shape[0], 1))]),
            ]
        )
    return e, bits, zc


def _gray(pair, site, zpair, zsite, derivs, workers, block_bits):
    n = site.shape[0]
    c = min(n, block_bits)
    h = n - c
    e_low, bits, zc_low = _low_block(pair, site, zpair, zsite, c)
    pc_low = bits.sum(axis=1).astype(np.int64)
    groups = [np.nonzero(pc_low == k)[0] for k in range(c + 1)]
    d_low = [bits @ d[:c] for d in derivs]
    cross = pair[c:, :c]
    zcross = zpair[c:, :c] if zpair is not None else None

    def run(g0: int, g1: int):
        accs = [Accumulator() for _ in range(n + 1)]
        code = g0 ^ (g0 >> 1)
        occ = np.array([(code >> j) & 1 for j in range(h)], dtype=bool)
        idx = np.nonzero(occ)[0]
        e_high = site[c + idx].sum() + sum(pair[c + i, c + j] for a, i in enumerate(idx) for j in idx[a + 1 :])
        field = cross[idx].sum(axis=0) if h else np.zeros(c, dtype=complex)
        z_high = 0
        zfield = np.zeros(c, dtype=np.int64)
        if zc_low is not None:
            if zsite is not None:
                z_high += int(zsite[c + idx].sum())
            if zpair is not None:
                z_high += int(sum(zpair[c + i, c + j] for a, i in enumerate(idx) for j in idx[a + 1 :]))
                zfield = zcross[idx].sum(axis=0).astype(np.int64) if h else zfield
        d_high = [complex(d[c + idx].sum()) for d in derivs]
        for g in range(g0, g1):
            e = e_low + (e_high + bits @ field)
            if zc_low is not None:
                zc = zc_low + z_high + (bits @ zfield).astype(np.int64)
                e = np.where(zc > 0, complex(-math.inf, 0.0), e)
            w = None
            if derivs:
                w = np.ones(e.shape[0], dtype=complex)
                for dl, dh in zip(d_low, d_high):
                    w = w * (dl + dh)
            pc_high = int(occ.sum())
            for k, gi in enumerate(groups):
                if gi.size:
                    accs[k + pc_high].add_logs(e[gi], None if w is None else w[gi])
            if g + 1 >= g1:
                break
            j = ((g + 1) & -(g + 1)).bit_length() - 1
            sgn = -1.0 if occ[j] else 1.0
            others = np.nonzero(occ)[0]
            others = others[others != j]
            e_high = e_high + sgn * (site[c + j] + pair[c + j, c + others].sum())
            field = field + sgn * cross[j]
            if zc_low is not None:
                dz = 0
                if zsite is not None:
                    dz += int(zsite[c + j])
                if zpair is not None:
                    dz += int(zpair[c + j, c + others].sum())
                    zfield = zfield + int(sgn) * zcross[j].astype(np.int64)
                z_high += int(sgn) * dz
            for k, d in enumerate(derivs):
                d_high[k] += sgn * d[c + j]
            occ[j] = not occ[j]
        return accs

    total = 1 << h
    workers = workers or default_workers()
    workers = max(1, min(workers, total))
    if workers == 1:
        parts = [run(0, total)]
    else:
        edges = np.linspace(0, total, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(run, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
            parts = [f.result() for f in futs]
    accs = parts[0]
    for p in parts[1:]:
        for a, b in zip(accs, p):
            a.merge(b)
    return accs


# --------------------------------------------------------------- naive order


def iter_bits(n: int, chunk: int = 1 << 14):
    """Yield float (K, n) occupation arrays in binary-counting order."""
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        yield ((idx[:, None] >> shifts) & 1).astype(np.float64)


def _naive(pair, site, zpair, zsite, derivs):
    n = site.shape[0]
    accs = [Accumulator() for _ in range(n + 1)]
    for bits in iter_bits(n):
        e = 0.5 * np.einsum("ki,ij,kj->k", bits, pair, bits) + bits @ site
        if zpair is not None or zsite is not None:
            zc = np.zeros(bits.shape[0])
            if zpair is not None:
                zc = zc + 0.5 * np.einsum("ki,ij,kj->k", bits, zpair, bits)
            if zsite is not None:
                zc = zc + bits @ zsite
            e = np.where(zc > 0, complex(-math.inf, 0.0), e)
        w = None
        if derivs:
            w = np.ones(bits.shape[0], dtype=complex)
            for d in derivs:
                w = w * (bits @ d)
        pc = bits.sum(axis=1).astype(np.int64)
        for k in range(n + 1):
            gi = np.nonzero(pc == k)[0]
            if gi.size:
                accs[k].add_logs(e[gi], None if w is None else w[gi])
    return accs


# --------------------------------------------------------------- batch mode

BATCH_N_MAX = 16


def hirota_batch(log_pair, log_sites) -> np.ndarray:
    """Complex ``log`` of the configuration sum for K site-exponent rows at once.

    ``log_sites`` has shape (K, N). All 2^N occupations are materialised, so
    this is meant for the small systems used in quadrature and stencils.
    Entries of ``-inf`` are not supported here.
    """
    log_sites = np.atleast_2d(np.asarray(log_sites, dtype=complex))
    k, n = log_sites.shape
    if n > BATCH_N_MAX:
        raise SizeError(f"batch evaluation limited to N <= {BATCH_N_MAX}")
    if n == 0:
        return np.zeros(k, dtype=complex)
    pair = np.array(log_pair, dtype=complex).reshape(n, n)
    np.fill_diagonal(pair, 0.0)
    bits = next(iter_bits(n, 1 << n))
    base = 0.5 * np.einsum("ci,ij,cj->c", bits, pair, bits)
    e = base[None, :] + log_sites @ bits.T
    shift = e.real.max(axis=1, keepdims=True)
    s = np.exp(e - shift).sum(axis=1)
    return np.log(s) + shift[:, 0]
