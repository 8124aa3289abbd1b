import math

import numpy as np
import pytest

from solitongas.correspondence import QuadraticU, random_spec, sector_extract
from solitongas.coulomb import canonical_partition
from solitongas.errors import NonConvergence, RankWarning
from solitongas.matrix_model import (
    DiscreteMeasure,
    GriddedDensity,
    SampledDensity,
    continuous_partition,
    continuous_refinement,
    determinant_partition,
    lattice_density,
    moment_matrix,
)

WORKED = DiscreteMeasure([1, 1j, -1])


def test_moment_matrix_examples():
    M = moment_matrix(WORKED, 2)
    assert np.allclose(M, [[3, -1j], [1j, 3]], atol=1e-15)
    assert np.allclose(moment_matrix(WORKED, 1), [[3]])


def test_moment_matrix_hermitian(rng):
    meas = DiscreteMeasure(rng.normal(size=9) + 1j * rng.normal(size=9), rng.normal(size=9))
    M = moment_matrix(meas, 6)
    assert np.max(np.abs(M - M.conj().T)) <= 1e-13 * np.max(np.abs(M))


def test_determinant_examples():
    assert determinant_partition(WORKED, 0).value == 1
    assert abs(determinant_partition(WORKED, 2).value - 8) < 1e-12
    assert abs(determinant_partition(WORKED, 3).value - 16) < 1e-12
    assert abs(determinant_partition(WORKED, 3, basis="newton").value - 16) < 1e-12


def test_rank_bound():
    with pytest.warns(RankWarning):
        assert determinant_partition(WORKED, 4).is_zero
    with pytest.warns(RankWarning):
        M = moment_matrix(WORKED, 4)
    assert abs(np.linalg.det(M)) < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_three_oracles_agree(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec("2DTL", 10, rng, R=0.5, p_max=3)
    meas = DiscreteMeasure.from_lattice(spec.lattice, spec.U, spec.times)
    gas = spec.free_plane_gas()
    sec = sector_extract(spec)
    for m in range(11):
        c = canonical_partition(gas, m)
        d = determinant_partition(meas, m)
        assert c.rel_diff(d) <= 1e-10 and c.rel_diff(sec[m]) <= 1e-10


def test_fixed_charge_weights(rng):
    spec = random_spec("2DTL", 6, rng, R=1.0, p_max=2).with_(ell=2)
    meas = DiscreteMeasure.from_lattice(spec.lattice, spec.U, spec.times, ell=2)
    gas = spec.free_plane_gas()
    for m in range(7):
        assert determinant_partition(meas, m).rel_diff(canonical_partition(gas, m)) <= 1e-10


def test_real_line_measure(rng):
    x = np.sort(rng.uniform(-2, 2, 6))
    meas = DiscreteMeasure(x)
    want = np.prod([(x[i] - x[j]) ** 2 for i in range(6) for j in range(i)])
    assert abs(determinant_partition(meas, 6).value - want) <= 1e-10 * want


def test_gaussian_disc_mass():
    rad = 1.5
    dens = GriddedDensity(lambda z: np.ones(z.shape), (rad,), "disc", 64, U=QuadraticU(0.5))
    want = math.pi * (1 - math.exp(-rad**2))
    z1 = continuous_partition(dens, 1, tol=1e-5)
    assert abs(z1.value - want) <= 1e-4 * want


def test_gaussian_disc_second_order():
    dens = GriddedDensity(lambda z: np.ones(z.shape), (1.0,), "disc", 16, U=QuadraticU(0.5))
    want = math.pi * (1 - math.exp(-1.0))
    study = continuous_refinement(dens, 1, levels=3)
    errs = [abs(v.value - want) for v in study.values]
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_rotation_invariant_offdiagonal_decay():
    dens = GriddedDensity(lambda z: np.exp(-np.abs(z) ** 2), (2.0,), "disc", 32)
    M = moment_matrix(dens, 4)
    off = np.abs(M - np.diag(np.diag(M))).max()
    assert off < 1e-12 * np.abs(M).max()


def test_lattice_density_approaches_discrete():
    sites = np.array([0.5, 0.5j, -0.4 - 0.3j])
    disc = determinant_partition(DiscreteMeasure(sites), 2)
    errs = []
    for w in (0.04, 0.02):
        dens = GriddedDensity(lattice_density(sites, w), (-1.2, 1.2, -1.2, 1.2), "rect", 480)
        errs.append(determinant_partition(dens, 2).rel_diff(disc))
    assert errs[1] < errs[0] and errs[1] < 5e-3


def test_sampled_density_single_evaluation():
    pts = np.array([0.1, 0.2j, -0.3])
    dens = SampledDensity(pts, np.array([1.0, 2.0, 0.0]), 0.5)
    z, lw = dens.nodes()
    assert z.size == 2 and np.allclose(np.exp(lw), [0.5, 1.0])
    assert abs(continuous_partition(dens, 1).value - 1.5) < 1e-14


def test_refinement_failure_is_reported():
    dens = GriddedDensity(lambda z: np.ones(z.shape), (1.0,), "disc", 4)
    with pytest.raises(NonConvergence):
        continuous_partition(dens, 2, tol=1e-14, max_levels=2)


def test_newton_and_monomial_bases_agree(rng):
    meas = DiscreteMeasure(rng.normal(size=8) + 1j * rng.normal(size=8), rng.normal(size=8))
    for m in range(1, 9):
        a = determinant_partition(meas, m, basis="monomial")
        b = determinant_partition(meas, m, basis="newton")
        assert a.rel_diff(b) <= 1e-10
