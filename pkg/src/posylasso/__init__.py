"""Sparse identification of posynomial models via the nonnegative
regularized square-root LASSO."""

from .basis import (
    Dataset,
    DesignMatrix,
    ExponentGrid,
    MonomialBasis,
    build_basis,
    build_design_matrix,
    eval_monomial,
    load_grid,
)
from .errors import ConfigError, DataError, DomainError, IntegrityError, NumericalError, PosyError
from .model import PosynomialModel, Term, deserialize, from_solution, predict, relative_error, serialize
from .solver import (
    DualCertificate,
    FeatureEliminationReport,
    KernelColumns,
    ProblemData,
    Solution,
    SolverConfig,
    SolverState,
    coordinate_update,
    dual_bound,
    eliminate_features,
    is_zero_optimal,
    kernel_column,
    objective,
    solve,
    univariate_solve,
)

__version__ = "0.1.0"
