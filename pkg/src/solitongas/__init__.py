"""Soliton tau-functions of the KP, BKP and 2D Toda hierarchies as lattice Coulomb gases."""
from .correspondence import CorrespondenceSpec, limit_tau, r_limit_study, soliton_tau
from .coulomb import LatticeGas, canonical_partition, grand_partition, observables
from .errors import SolitonGasError
from .matrix_model import DiscreteMeasure, GriddedDensity, continuous_partition, determinant_partition
from .soliton import HierarchyKind, SolitonSystem, TimesVector, tau_hirota
from .tauvalue import TauValue

__all__ = [
    "CorrespondenceSpec", "DiscreteMeasure", "GriddedDensity", "HierarchyKind", "LatticeGas",
    "SolitonGasError", "SolitonSystem", "TauValue", "TimesVector", "canonical_partition",
    "continuous_partition", "determinant_partition", "grand_partition", "limit_tau", "observables",
    "r_limit_study", "soliton_tau", "tau_hirota",
]
