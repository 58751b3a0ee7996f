"""Consistent-histories toolkit for finite-dimensional Hilbert spaces.

Checks family consistency (weak decoherence), computes history
probabilities, constructs generated families and refinements, searches
for and verifies contrary inferences, checks ordered consistency, and
simulates an ensemble-level support semantics with structural checkers.
"""

from .errors import CHError
from .kernels import BACKEND as KERNEL_BACKEND
from .linalg import (
    DEFAULT_TOL,
    MAX_DIM,
    Projector,
    commutes,
    complement,
    identity_projector,
    leq,
    orthogonal,
    projector_from_matrix,
    projector_from_vectors,
    zero_projector,
)
from .histories import (
    Decomposition,
    DecoherenceReport,
    Family,
    History,
    Scenario,
    chain_operator,
    coarse_history_cell,
    conditional_probability,
    decoherence_functional,
    enumerate_elementary,
    history_in_family,
    is_weakly_decoherent,
    probability,
    validate_decomposition,
)
from .family_algebra import (
    CompatibilityResult,
    FamilyOrderResult,
    are_compatible,
    atoms_of,
    common_refinement,
    generated_family,
    is_coarse_graining,
)
from .inference import (
    ContraryInferenceCertificate,
    OrderedConsistencyVerdict,
    check_contrary_quadruple,
    find_contrary_inferences,
    history_leq,
    is_ordered_consistent,
    three_box_fixture,
    verify_certificate,
)
from .support_sim import (
    CaseCounts,
    CheckReport,
    SupportModel,
    SystemRecord,
    TruthValue,
    build_support_model,
    check_contrary_supports_disjoint,
    check_mutual_exclusivity,
    check_occurrence_agreement,
    check_strict_exclusivity,
    check_support_monotonicity,
    check_support_partition,
    classify_support_cases,
    frequency_report,
    truth_functional,
)
from .scenario_io import load_scenario, parse_scenario

__version__ = "0.1.0"
