"""Synchronization of homogeneous discrete-time LTI networks.

Model-based design (spectral test + modified Riccati equation) and
data-driven design (informativity verification + convex gain synthesis from
one agent's noiseless input-state record), with a network simulator and a
CLI for end-to-end experiments.
"""

from .data import (
    DataMatrices,
    DataRecord,
    IdentifiabilityVerdict,
    build_matrices,
    consistency_residual,
    generate_data,
    is_identifiable,
    numerical_rank,
    read_data_csv,
    write_data_csv,
)
from .informativity import (
    CouplingViolated,
    EquationInfeasible,
    GainCertificate,
    ImageInclusionResult,
    Infeasible,
    InformativityError,
    LmiSolution,
    NotSchur,
    RankDeficient,
    RightInverseFamily,
    check_rank_condition,
    gain_from_family,
    image_inclusion,
    synthesize_gain,
    verify_certificate,
    write_certificate_json,
)
from .network import (
    LtiModel,
    NetworkModel,
    StateBlowUp,
    SynchronizationVerdict,
    TrajectoryRecord,
    assemble_network,
    is_synchronizing,
    simulate,
    spectral_radius,
    write_trajectory_csv,
)
from .riccati import (
    IndefiniteIterate,
    NonConvergence,
    RiccatiError,
    RiccatiProblem,
    RiccatiSolution,
    riccati_gain,
    riccati_residual,
    solve_modified_dare,
)
from .topology import (
    AssumptionViolation,
    ComplexSpectrum,
    InterconnectionMatrix,
    MultiplicityViolation,
    NonPositiveEigenvalue,
    NotAnEigenvector,
    SpectrumSummary,
    complete_graph_laplacian,
    laplacian_from_edges,
    read_edge_list,
    read_matrix_csv,
    validate_assumption,
)

__version__ = "0.1.0"
