"""Pathwise counterparts of Doob's maximal inequalities, checked exactly and statistically."""

from .derivation import (
    ChainReport,
    chain_llogl,
    chain_lp,
    layer_cake_log,
    layer_cake_power,
    log_young_step,
    young_step,
)
from .errors import (
    ClassificationError,
    ClassMismatch,
    DomainError,
    DoobPathwiseError,
    EmptyPath,
    ExponentOutOfRange,
    NonFiniteEntry,
    TreeFormatError,
)
from .montecarlo import (
    GeneratorSpec,
    GenKind,
    MCEstimate,
    estimate_sides,
    estimate_transform,
    generate,
)
from .path_core import (
    NonnegPath,
    Path,
    PositiveStartPath,
    first_crossing,
    increments,
    running_max,
    validate,
)
from .pathwise_ineq import (
    LLOGL_CONST,
    Case,
    HedgeDecomposition,
    IneqReport,
    Which,
    eval_ineq1,
    eval_ineq2,
    eval_llogl,
    eval_lp,
    gap_oracle,
    hedge_decompose,
)
from .prob_tree import (
    ExpectationReport,
    Kind,
    ProcessClass,
    TreeModel,
    chain,
    classify,
    counterexample_eq8,
    counterexample_threshold,
    doob_closure,
    expect_functional,
    functionals,
    node,
    transform_expectation,
    verify_ineq3,
    verify_ineq4,
    verify_ineq8,
    verify_ineq9,
)

__version__ = "0.1.0"
