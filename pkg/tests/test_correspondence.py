import math

import numpy as np
import pytest

from solitongas.correspondence import (
    CorrespondenceSpec,
    QuadraticU,
    build_phases,
    chain_value,
    gauge_energy_oracle,
    gauge_transform_tau,
    limit_tau,
    map_lattice_to_momenta,
    r_limit_study,
    random_spec,
    sector_extract,
    sector_logs,
    sector_power,
    soliton_system,
    soliton_tau,
    stripped_sectors,
)
from solitongas.coulomb import JoukowskiInverse, canonical_partition, grand_partition
from solitongas.errors import DomainError, RangeError, SolitonGasError
from solitongas.soliton import HierarchyKind, SolitonSystem, TimesVector, tau_hirota


def test_momentum_examples():
    a, b = map_lattice_to_momenta(CorrespondenceSpec("KP", [1j]))
    assert a[0] == 1j and b[0] == 1j
    a, b = map_lattice_to_momenta(CorrespondenceSpec("2DTL", [2.0], R=1.0))
    assert a[0] == 2 and abs(b[0] - 0.5) < 1e-16


def test_interaction_is_boltzmann_factor(rng):
    for kind in ("KP", "BKP", "2DTL"):
        spec = random_spec(kind, 6, rng, R=0.7)
        L = soliton_system(spec).interaction_matrix
        V = spec.gas().pair_matrix
        iu = np.triu_indices(6, 1)
        assert np.max(np.abs(L[iu] - np.exp(-2 * V[iu]))) < 1e-13


def test_phase_examples():
    spec = CorrespondenceSpec("KP", [1j])
    assert abs(build_phases(spec).phi[0] + 2 * math.log(2)) < 1e-15
    d = 0.4
    base = build_phases(CorrespondenceSpec("KP", [1j, 0.5 + 2j], mu=0.1)).phi
    moved = build_phases(CorrespondenceSpec("KP", [1j, 0.5 + 2j], mu=0.1 + d)).phi
    assert np.allclose(moved - base, 2 * d, atol=1e-15)


def test_spec_validation():
    with pytest.raises(DomainError):
        CorrespondenceSpec("KP", [1.0 - 1j])
    with pytest.raises(DomainError):
        CorrespondenceSpec("2DTL", [0.3], R=0.5)
    with pytest.raises(RangeError):
        CorrespondenceSpec("KP", [1j], beta=1.0)
    with pytest.raises(SolitonGasError):
        CorrespondenceSpec("KP", [1j], ell=1)


@pytest.mark.parametrize("kind", ["KP", "BKP", "2DTL"])
def test_tau_equals_grand_partition(kind, rng):
    for _ in range(3):
        spec = random_spec(kind, 9, rng, R=0.6, m=int(rng.integers(0, 4)) if kind == "2DTL" else 0)
        assert soliton_tau(spec).rel_diff(grand_partition(spec.gas())) <= 1e-11


def test_conformal_exterior_correspondence(rng):
    z = np.array([3.0 + 0.5j, -2.5 + 1j, 0.5 + 2j, 1.0 - 2.2j, -3.0 - 1.0j])
    t = np.array([0.1 + 0.05j, 0.02j])
    spec = CorrespondenceSpec("2DTL", z, m=1, U=QuadraticU(0.1), times=TimesVector(t, t.conj()),
                              conformal=JoukowskiInverse())
    assert soliton_tau(spec).rel_diff(grand_partition(spec.gas())) <= 1e-11


def test_gauge_identity_at_unit_radius(rng):
    s = SolitonSystem("2DTL", rng.uniform(1.2, 2, 4), rng.uniform(0.2, 0.6, 4), rng.normal(size=4))
    t = TimesVector([0.1 + 0.1j], [0.1 - 0.1j], m=2)
    assert gauge_transform_tau(s, t, 1.0).rel_diff(tau_hirota(s, t.with_m(1))) < 1e-15
    t0 = TimesVector.zeros(m=0)
    assert gauge_transform_tau(s, t0, 0.5).rel_diff(tau_hirota(s, t0.scaled(0.5).with_m(-1))) < 1e-15


def test_gauge_matches_energy_expression(rng):
    for R in (0.5, 0.2):
        spec = random_spec("2DTL", 6, rng, R=1.0, m=2, p_max=3, mu=0.0)
        assert limit_tau(spec, R).rel_diff(gauge_energy_oracle(spec, R)) < 1e-12
    spec = CorrespondenceSpec("2DTL", [1.5, 2j], R=1.0, m=1, ell=1, U=QuadraticU(0.2))
    assert limit_tau(spec, 0.5).rel_diff(gauge_energy_oracle(spec, 0.5)) < 1e-12


def test_chain_value_examples():
    spec = CorrespondenceSpec("2DTL", [1, 1j, -1], R=0.5)
    assert chain_value(spec, 0).value == 1
    assert chain_value(spec, -1).is_zero and chain_value(spec, 4).is_zero
    assert abs(chain_value(spec, 2).value - 8) < 1e-12
    assert abs(chain_value(spec, 3).value - 16) < 1e-12


def test_sector_extract_matches_enumeration(rng):
    spec = random_spec("2DTL", 7, rng, R=0.5, p_max=3)
    sec = sector_extract(spec)
    gas = spec.free_plane_gas()
    for n in range(8):
        assert sec[n].rel_diff(canonical_partition(gas, n)) <= 1e-10


def test_stripped_sectors_equal_scaled_sectors(rng):
    spec = random_spec("2DTL", 5, rng, R=1.0, m=2, p_max=3)
    R = 0.3
    raw = sector_logs(spec, R)
    stripped = stripped_sectors(spec, R)
    for n in range(6):
        want = stripped[n].log_magnitude + sector_power(2, n) * math.log(R)
        assert abs(raw[n] - want) < 1e-10


def test_sector_slopes(rng):
    spec = random_spec("2DTL", 6, rng, R=1.0, m=3, p_max=3)
    Rs = [1e-3, 1e-4]
    logs = np.array([sector_logs(spec, R) for R in Rs])
    slopes = (logs[0] - logs[1]) / (math.log(Rs[0]) - math.log(Rs[1]))
    assert np.max(np.abs(slopes - [(3 - n) ** 2 for n in range(7)])) <= 0.05


def test_limit_study_converges(rng):
    spec = random_spec("2DTL", 6, rng, R=1.0, m=3, p_max=3)
    study = r_limit_study(spec, [1e-2, 1e-3, 1e-4])
    assert study.order >= 0.9 and study.monotone
    assert all(0.05 < r < 0.2 for r in study.ratios())


def test_limit_study_with_fixed_charge(rng):
    spec = random_spec("2DTL", 5, rng, R=1.0, m=3, p_max=2).with_(ell=1)
    study = r_limit_study(spec, [1e-2, 1e-3, 1e-4])
    assert study.order >= 0.9
    assert study.rows[-1].deviation < 1e-2


def test_limit_study_validation(rng):
    spec = random_spec("2DTL", 4, rng, R=1.0, m=2)
    with pytest.raises(RangeError):
        r_limit_study(spec, [1e-3, 1e-2])
    with pytest.raises(DomainError):
        r_limit_study(spec, [5.0, 1e-2])
    with pytest.raises(RangeError):
        r_limit_study(spec.with_(m=7), [1e-2])
