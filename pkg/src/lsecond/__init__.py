"""Partial condition numbers of equality-constrained least squares solutions."""

__version__ = "0.1.0"

from .condition import (  # noqa: E402
    ConditionOperator,
    ConditionReport,
    closed_matrix,
    cond_exact_closed,
    cond_exact_gsvd,
    cond_exact_kron,
    cond_lls_closed,
    cond_lls_single,
    cond_lls_svd,
    cond_upper_bound,
    kron_oracle,
    vec_permutation,
)
from .core import (  # noqa: E402
    ConditionWeights,
    GsvdFactors,
    LseProblem,
    LseSolution,
    check_assumptions,
    gsvd,
    null_projector,
    solve_lse,
)
from .errors import (  # noqa: E402
    DomainError,
    GeneratorError,
    LseError,
    OracleTooLargeError,
    RankDeficiencyError,
    ShapeError,
    StructureViolationError,
)
from .estimators import (  # noqa: E402
    PceReport,
    SsceReport,
    estimate_condition_pce,
    kappa_dir_sq,
    pce_estimate,
    ssce_estimate,
    wallis,
)
from .structured import (  # noqa: E402
    StructureKind,
    StructureSpec,
    build_structure,
    cond_structured,
    cond_structured_lls,
    extract_params,
    structured_derivative,
)
