"""Orbital entanglement analysis of exact active-space wave functions."""

__version__ = "0.1.0"

from .determinants import Determinant, SectorBasis, enumerate_sector, excitation_sign
from .diagrams import (
    DiagramSpec,
    emit_mutual_information_diagram,
    emit_s1_profile,
    render_mutual_information_diagram,
    render_s1_profile,
)
from .eigensolver import ConvergenceReport, GroundState, SolverOptions, davidson, ground_state
from .entanglement import (
    CorrelationDiagnosis,
    EntanglementProfile,
    classify_orbital,
    diagnose,
    profile,
    von_neumann_entropy,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    DegeneracyWarning,
    DuplicateRecordWarning,
    LogicError,
    NumericalError,
    OrbentError,
    ParseError,
    ValidationError,
)
from .fcidump import (
    ActiveSpace,
    IntegralTable,
    build_hubbard_chain,
    build_random_hamiltonian,
    parse_fcidump,
    read_fcidump,
    write_fcidump,
)
from .hamiltonian import CIVector, apply_hamiltonian, build_dense, hamiltonian_diagonal
from .rdm import LocalState, OneOrbitalRDM, TwoOrbitalRDM, one_orbital_rdm, two_orbital_rdm
from .analysis import analyze, compare_reports, validate_report

__all__ = [
    "ActiveSpace",
    "IntegralTable",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
    "build_hubbard_chain",
    "build_random_hamiltonian",
    "Determinant",
    "SectorBasis",
    "enumerate_sector",
    "excitation_sign",
    "CIVector",
    "apply_hamiltonian",
    "build_dense",
    "hamiltonian_diagonal",
    "SolverOptions",
    "ConvergenceReport",
    "GroundState",
    "davidson",
    "ground_state",
    "LocalState",
    "OneOrbitalRDM",
    "TwoOrbitalRDM",
    "one_orbital_rdm",
    "two_orbital_rdm",
    "EntanglementProfile",
    "CorrelationDiagnosis",
    "von_neumann_entropy",
    "classify_orbital",
    "profile",
    "diagnose",
    "DiagramSpec",
    "render_mutual_information_diagram",
    "render_s1_profile",
    "emit_mutual_information_diagram",
    "emit_s1_profile",
    "analyze",
    "compare_reports",
    "validate_report",
    "OrbentError",
    "ParseError",
    "ValidationError",
    "CapacityError",
    "LogicError",
    "NumericalError",
    "ConvergenceError",
    "DegeneracyWarning",
    "DuplicateRecordWarning",
]
