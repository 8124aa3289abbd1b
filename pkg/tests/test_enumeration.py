import numpy as np
import pytest

from solitongas import _enumeration as en
from solitongas.errors import SizeError


def _random_exponents(rng, n):
    pair = rng.normal(scale=0.5, size=(n, n)) + 1j * rng.normal(scale=0.3, size=(n, n))
    pair = pair + pair.T
    site = rng.normal(size=n) + 1j * rng.normal(scale=0.5, size=n)
    return pair, site


def test_empty_sum_is_one():
    assert en.hirota_total(np.zeros((0, 0)), np.zeros(0)).value == 1.0


@pytest.mark.parametrize("n", [1, 5, 11, 16])
def test_gray_matches_naive(rng, n):
    pair, site = _random_exponents(rng, n)
    g = en.hirota_sectors(pair, site, order="gray", block_bits=3)
    s = en.hirota_sectors(pair, site, order="naive")
    for a, b in zip(g, s):
        assert a.rel_diff(b) <= 1e-12


def test_parallel_matches_sequential(rng):
    pair, site = _random_exponents(rng, 15)
    seq = en.hirota_total(pair, site, workers=1, block_bits=4)
    par = en.hirota_total(pair, site, workers=4, block_bits=4)
    assert par.rel_diff(seq) <= 1e-10


def test_factorises_without_interaction(rng):
    site = rng.normal(size=7) + 0j
    tau = en.hirota_total(np.zeros((7, 7)), site)
    assert abs(tau.log_magnitude - np.sum(np.log1p(np.exp(site.real)))) < 1e-12


def test_infinite_negative_pair_kills_terms():
    pair = np.array([[0, -np.inf], [-np.inf, 0]], dtype=complex)
    tau = en.hirota_total(pair, np.zeros(2))
    assert abs(tau.value - 3.0) < 1e-14


def test_derivative_weights(rng):
    pair, site = _random_exponents(rng, 6)
    d = rng.normal(size=6)
    exact = en.hirota_total(pair, site, derivs=[d]).value
    h = 1e-6
    fd = (en.hirota_total(pair, site + h * d).value - en.hirota_total(pair, site - h * d).value) / (2 * h)
    assert abs(exact - fd) <= 1e-7 * abs(exact)


def test_batch_matches_single(rng):
    pair, site = _random_exponents(rng, 8)
    sites = np.stack([site, site + 0.3, site - 1j])
    out = en.hirota_batch(pair, sites)
    for k in range(3):
        assert abs(out[k] - en.hirota_total(pair, sites[k]).log()) < 1e-11


def test_size_limit():
    with pytest.raises(SizeError):
        en.hirota_total(np.zeros((30, 30)), np.zeros(30))
