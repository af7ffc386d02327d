"""
Hyper-model: maps task conditions to a parameter space.

One polynomial regression is trained per output parameter, each mapping the
full condition vector to that single parameter. Conditions are expanded into
the complete monomial basis of total degree <= degree, graded
lexicographically: 1, a, b, a^2, a b, b^2, ...
"""

import logging
from itertools import combinations_with_replacement
from math import comb
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, model_validator

from core.errors import InvalidArgumentError, PreconditionError
from core.numeric import FloatArray, Matrix, Vector, as_matrix, as_vector, lstsq

logger = logging.getLogger(__name__)

FEATURE_ORDERING = "graded-lex"

# Columns whose total sum of squares falls below this get R^2 = 0
SST_FLOOR = 1e-12

TargetKind = Literal["deformable-params", "model-coefficients"]


def monomial_exponents(n_vars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of every monomial with total degree <= degree, graded-lex order"""
    exponents = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(n_vars), total):
            powers = [0] * n_vars
            for var in combo:
                powers[var] += 1
            exponents.append(tuple(powers))
    return exponents


def feature_count(n_vars: int, degree: int) -> int:
    return comb(n_vars + degree, degree)


def expand_conditions(condition: ArrayLike, degree: int) -> Vector:
    """Evaluate the full total-degree monomial basis at one condition vector"""
    if degree < 1:
        raise InvalidArgumentError(f"hyper-model degree must be at least 1, got {degree}")
    condition = as_vector(condition, "condition")
    powers = np.array(monomial_exponents(condition.size, degree), dtype=np.float64)
    return np.prod(condition ** powers, axis=1)


def design_matrix(conditions: ArrayLike, degree: int) -> Matrix:
    return np.vstack([expand_conditions(c, degree) for c in as_matrix(conditions, "conditions")])


class HyperModel(BaseModel):
    """Per-output polynomial maps from conditions to parameters"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    degree: int
    condition_dim: int
    target_kind: TargetKind
    coefficients: FloatArray  # (outputs, features)
    r2_per_output: FloatArray
    r2_mean: float
    feature_ordering: str = FEATURE_ORDERING

    @model_validator(mode="after")
    def _check_dimensions(self):
        expected = feature_count(self.condition_dim, self.degree)
        if self.coefficients.ndim != 2 or self.coefficients.shape[1] != expected:
            raise ValueError(
                f"coefficients need {expected} features per output, got shape {self.coefficients.shape}"
            )
        if self.r2_per_output.shape != (self.coefficients.shape[0],):
            raise ValueError("one R^2 per output required")
        return self

    @property
    def n_outputs(self) -> int:
        return self.coefficients.shape[0]

    @property
    def per_output(self) -> list[Vector]:
        return list(self.coefficients)


def r_squared(target: Vector, fitted: Vector) -> float:
    """1 - SSE/SST about the target mean, 0 for (near-)constant targets"""
    sst = float(np.sum((target - target.mean()) ** 2))
    if sst < SST_FLOOR:
        return 0.0
    sse = float(np.sum((target - fitted) ** 2))
    return 1.0 - sse / sst


def train(
    conditions: ArrayLike,
    targets: ArrayLike,
    degree: int,
    target_kind: TargetKind,
    allow_underdetermined: bool = False,
) -> HyperModel:
    """
    Fit one least-squares polynomial per target column.

    Parameters
    ----------
    conditions : array_like, shape (N, c)
    targets : array_like, shape (N, outputs)
    degree : int
        Total degree of the condition expansion.
    target_kind : {"deformable-params", "model-coefficients"}
    allow_underdetermined : bool
        Accept fewer tasks than expanded features; each output then takes the
        minimum-norm interpolating solution.
    """
    conditions = as_matrix(conditions, "conditions")
    targets = as_matrix(targets, "targets")
    n_tasks, condition_dim = conditions.shape
    if targets.shape[0] != n_tasks:
        raise InvalidArgumentError(f"{n_tasks} conditions but {targets.shape[0]} target rows")

    n_features = feature_count(condition_dim, degree)
    if n_tasks < n_features:
        if not allow_underdetermined:
            raise InvalidArgumentError(
                f"hyper-model degree {degree} expands {condition_dim} conditions into "
                f"{n_features} features but only {n_tasks} tasks are available"
            )
        logger.warning(
            f"Hyper-model degree {degree} is under-determined "
            f"({n_features} features, {n_tasks} tasks), using minimum-norm fits"
        )

    A = design_matrix(conditions, degree)
    coefficients = np.vstack([lstsq(A, column) for column in targets.T])
    fitted = A @ coefficients.T
    r2 = np.array([r_squared(targets[:, j], fitted[:, j]) for j in range(targets.shape[1])])

    return HyperModel(
        degree=degree,
        condition_dim=condition_dim,
        target_kind=target_kind,
        coefficients=coefficients,
        r2_per_output=r2,
        r2_mean=float(r2.mean()),
    )


def generate_params(h: HyperModel, condition: ArrayLike) -> Vector:
    """Evaluate every per-output polynomial at one condition"""
    condition = as_vector(condition, "condition")
    if condition.size != h.condition_dim:
        raise PreconditionError(
            f"condition has {condition.size} entries, hyper-model expects {h.condition_dim}"
        )
    return h.coefficients @ expand_conditions(condition, h.degree)
