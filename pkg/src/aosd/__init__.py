"""Assisted optimal unambiguous discrimination of three qutrit states with a qubit ancilla."""

from .ensemble import Ensemble, OverlapSet, Priors, validate_ensemble
from .jointstate import EtaBasis, build_rho
from .protocol import ProtocolParams, Regime, critical_gammas, optimize
from .separability import SeparableDecomposition, build_decomposition

__all__ = [
    "Ensemble",
    "EtaBasis",
    "OverlapSet",
    "Priors",
    "ProtocolParams",
    "Regime",
    "SeparableDecomposition",
    "build_decomposition",
    "build_rho",
    "critical_gammas",
    "optimize",
    "validate_ensemble",
]
