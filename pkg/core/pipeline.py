"""
End-to-end generation of a predictor for an unseen condition.

HyperProcessModel     shared input grid, shapes are source outputs on the grid
HyperProcessModel2    per-task input ranges, shapes stack inputs and outputs
HyperModelBaseline    hyper-model trained directly on source coefficients

Each class follows the same two-step use: ``fit(tasks)`` learns from the
source tasks once, ``generate(condition)`` produces a GeneratedModel. The
module-level ``hpm``, ``hpm2`` and ``hm_baseline`` functions do both in one
call.
"""

import logging
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, model_validator

from core import hypermodel, ssm
from core.errors import InvalidArgumentError, PreconditionError
from core.numeric import FloatArray, Vector, as_vector, linspace
from core.regressors import Regressor, RegressorFamily, fit, predict
from core.ssm import ComponentSelection

logger = logging.getLogger(__name__)

DEFAULT_FINAL_FAMILY = RegressorFamily.polynomial(7)

Method = Literal["HPM", "HPM2", "HM"]


class SourceTask(BaseModel):
    """A trained source model paired with the condition it was trained under"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    regressor: Regressor
    condition: FloatArray

    @model_validator(mode="after")
    def _check_condition(self):
        if self.condition.ndim != 1 or self.condition.size == 0:
            raise ValueError(f"condition must be a non-empty vector, got shape {self.condition.shape}")
        return self


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    lo: float
    hi: float
    n: int


class Provenance(BaseModel):
    """Everything needed to re-run a generation"""

    model_config = ConfigDict(frozen=True)

    method: Method
    task_ids: list[str]
    hyper_degree: int
    hyper_r2: float
    allow_underdetermined: bool = False
    selection: ComponentSelection | None = None
    n_components: int | None = None
    model_degree: int | None = None
    grid: GridSpec | None = None
    task_grids: list[GridSpec] | None = None
    final_family: str
    plausibility_flags: list[bool] = []
    nonmonotone_inputs: bool = False


class GeneratedModel(BaseModel):
    """Predictor generated for an unseen condition"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    regressor: Regressor
    condition: FloatArray
    params: FloatArray  # b' for HPM/HPM2, coefficients for HM
    inputs: FloatArray | None = None
    shape: FloatArray | None = None
    provenance: Provenance

    def predict(self, x: ArrayLike) -> Vector:
        return predict(self.regressor, x)


def _condition_matrix(tasks: Sequence[SourceTask], minimum: int = 2) -> np.ndarray:
    if len(tasks) < minimum:
        raise PreconditionError(f"at least {minimum} source tasks are required, got {len(tasks)}")
    dims = {task.condition.size for task in tasks}
    if len(dims) != 1:
        raise PreconditionError(f"source tasks mix condition dimensions {sorted(dims)}")
    return np.vstack([task.condition for task in tasks])


def _check_condition(condition: ArrayLike, expected_dim: int) -> Vector:
    condition = as_vector(condition, "target condition")
    if condition.size != expected_dim:
        raise PreconditionError(
            f"target condition has {condition.size} entries, source conditions have {expected_dim}"
        )
    return condition


class HyperProcessModel:
    """Shape-model based generation over one shared input grid"""

    method: Method = "HPM"

    def __init__(
        self,
        n: int,
        lo: float,
        hi: float,
        selection: ComponentSelection,
        hyper_degree: int,
        new_model_family: RegressorFamily = DEFAULT_FINAL_FAMILY,
        allow_underdetermined: bool = False,
    ):
        self.n = n
        self.lo = lo
        self.hi = hi
        self.selection = selection
        self.hyper_degree = hyper_degree
        self.new_model_family = new_model_family
        self.allow_underdetermined = allow_underdetermined

        self.tasks: list[SourceTask] = []
        self.inputs: Vector | None = None
        self.shapes: np.ndarray | None = None
        self.deformable_model: ssm.DeformableModel | None = None
        self.params: np.ndarray | None = None
        self.hyper_model: hypermodel.HyperModel | None = None

    def _sample_shapes(self, tasks: Sequence[SourceTask]) -> np.ndarray:
        self.inputs = linspace(self.lo, self.hi, self.n)
        return np.vstack([predict(task.regressor, self.inputs) for task in tasks])

    def fit(self, tasks: Sequence[SourceTask]) -> "HyperProcessModel":
        """Build the shape model and train the hyper-model on the source tasks"""
        conditions = _condition_matrix(tasks)
        if self.selection.count is not None and self.selection.count > len(tasks) - 1:
            raise PreconditionError(
                f"{self.selection.count} components requested from {len(tasks)} source tasks "
                f"(at most {len(tasks) - 1})"
            )
        self.tasks = list(tasks)
        self.shapes = self._sample_shapes(tasks)
        self.deformable_model = ssm.build(self.shapes, self.selection)
        self.params = np.vstack([ssm.project(self.deformable_model, s) for s in self.shapes])
        self.hyper_model = hypermodel.train(
            conditions,
            self.params,
            self.hyper_degree,
            "deformable-params",
            allow_underdetermined=self.allow_underdetermined,
        )
        logger.info(
            f"{self.method} fitted on {len(tasks)} tasks: "
            f"{self.deformable_model.n_components} components, "
            f"hyper degree {self.hyper_degree}, R^2 {self.hyper_model.r2_mean:.3f}"
        )
        return self

    def _require_fitted(self) -> None:
        if self.hyper_model is None:
            raise InvalidArgumentError(f"{self.method} must be fitted before generating")

    def _split(self, shape: Vector) -> tuple[Vector, Vector]:
        return self.inputs, shape

    def _provenance(self, flags: list[bool], nonmonotone: bool) -> Provenance:
        return Provenance(
            method=self.method,
            task_ids=[task.id for task in self.tasks],
            hyper_degree=self.hyper_degree,
            hyper_r2=self.hyper_model.r2_mean,
            allow_underdetermined=self.allow_underdetermined,
            selection=self.selection,
            n_components=self.deformable_model.n_components,
            grid=GridSpec(lo=self.lo, hi=self.hi, n=self.n),
            final_family=self.new_model_family.tag,
            plausibility_flags=flags,
            nonmonotone_inputs=nonmonotone,
        )

    def generate(self, condition: ArrayLike) -> GeneratedModel:
        """Generate shape and predictor for an unseen condition"""
        self._require_fitted()
        condition = _check_condition(condition, self.hyper_model.condition_dim)
        b = hypermodel.generate_params(self.hyper_model, condition)
        shape = ssm.reconstruct(self.deformable_model, b)
        flags = ssm.plausibility_check(self.deformable_model, b)
        if any(flags):
            logger.info(f"Generated parameters exceed 3 sqrt(lambda) on components {flags}")

        x, y = self._split(shape)
        nonmonotone = bool(np.any(np.diff(x) <= 0.0))
        if nonmonotone:
            logger.warning(f"Generated inputs for condition {condition.tolist()} are not increasing")
        regressor = fit(self.new_model_family, x, y)
        return GeneratedModel(
            regressor=regressor,
            condition=condition,
            params=b,
            inputs=x,
            shape=shape,
            provenance=self._provenance(flags, nonmonotone),
        )


class HyperProcessModel2(HyperProcessModel):
    """Shape-model based generation with per-task input ranges"""

    method: Method = "HPM2"

    def __init__(
        self,
        n: int,
        mins: ArrayLike,
        maxs: ArrayLike,
        selection: ComponentSelection,
        hyper_degree: int,
        new_model_family: RegressorFamily = DEFAULT_FINAL_FAMILY,
        allow_underdetermined: bool = False,
    ):
        mins = np.asarray(mins, dtype=np.float64)
        maxs = np.asarray(maxs, dtype=np.float64)
        # single input feature: accept (m,) or (m, 1)
        if mins.ndim == 2 and mins.shape[1] == 1:
            mins = mins[:, 0]
        if maxs.ndim == 2 and maxs.shape[1] == 1:
            maxs = maxs[:, 0]
        mins = as_vector(mins, "min")
        maxs = as_vector(maxs, "max")
        if mins.shape != maxs.shape:
            raise InvalidArgumentError(f"min has {mins.size} rows but max has {maxs.size}")
        super().__init__(
            n,
            float(mins.min()),
            float(maxs.max()),
            selection,
            hyper_degree,
            new_model_family,
            allow_underdetermined,
        )
        self.mins = mins
        self.maxs = maxs
        self.task_inputs: list[Vector] = []

    def _sample_shapes(self, tasks: Sequence[SourceTask]) -> np.ndarray:
        if len(tasks) != self.mins.size:
            raise PreconditionError(f"{len(tasks)} tasks but {self.mins.size} input ranges")
        self.task_inputs = [linspace(lo, hi, self.n) for lo, hi in zip(self.mins, self.maxs)]
        return np.vstack(
            [
                np.concatenate([x, predict(task.regressor, x)])
                for task, x in zip(tasks, self.task_inputs)
            ]
        )

    def _split(self, shape: Vector) -> tuple[Vector, Vector]:
        return shape[: self.n], shape[self.n :]

    def _provenance(self, flags: list[bool], nonmonotone: bool) -> Provenance:
        provenance = super()._provenance(flags, nonmonotone)
        task_grids = [GridSpec(lo=lo, hi=hi, n=self.n) for lo, hi in zip(self.mins, self.maxs)]
        return provenance.model_copy(update={"grid": None, "task_grids": task_grids})


class HyperModelBaseline:
    """Hyper-model trained on the coefficients of homogeneous polynomial sources"""

    method: Method = "HM"

    def __init__(self, hyper_degree: int, allow_underdetermined: bool = False):
        self.hyper_degree = hyper_degree
        self.allow_underdetermined = allow_underdetermined
        self.tasks: list[SourceTask] = []
        self.family: RegressorFamily | None = None
        self.hyper_model: hypermodel.HyperModel | None = None

    def fit(self, tasks: Sequence[SourceTask]) -> "HyperModelBaseline":
        conditions = _condition_matrix(tasks)
        families = {task.regressor.family for task in tasks}
        if len(families) != 1:
            tags = sorted(family.tag for family in families)
            raise PreconditionError(f"HM needs one shared source family, got {tags}")
        family = families.pop()
        if family.kind != "polynomial":
            raise PreconditionError(f"HM needs polynomial sources, got {family.tag}")

        self.tasks = list(tasks)
        self.family = family
        targets = np.vstack([task.regressor.coefficients for task in tasks])
        self.hyper_model = hypermodel.train(
            conditions,
            targets,
            self.hyper_degree,
            "model-coefficients",
            allow_underdetermined=self.allow_underdetermined,
        )
        logger.info(
            f"HM fitted on {len(tasks)} {family.tag} tasks, "
            f"hyper degree {self.hyper_degree}, R^2 {self.hyper_model.r2_mean:.3f}"
        )
        return self

    def generate(self, condition: ArrayLike) -> GeneratedModel:
        if self.hyper_model is None:
            raise InvalidArgumentError("HM must be fitted before generating")
        condition = _check_condition(condition, self.hyper_model.condition_dim)
        coefficients = hypermodel.generate_params(self.hyper_model, condition)
        regressor = Regressor(family=self.family, coefficients=coefficients)
        return GeneratedModel(
            regressor=regressor,
            condition=condition,
            params=coefficients,
            provenance=Provenance(
                method="HM",
                task_ids=[task.id for task in self.tasks],
                hyper_degree=self.hyper_degree,
                hyper_r2=self.hyper_model.r2_mean,
                allow_underdetermined=self.allow_underdetermined,
                model_degree=self.family.degree,
                final_family=self.family.tag,
            ),
        )


def hpm(
    tasks: Sequence[SourceTask],
    condition: ArrayLike,
    n: int,
    lo: float,
    hi: float,
    selection: ComponentSelection,
    hyper_degree: int,
    new_model_family: RegressorFamily = DEFAULT_FINAL_FAMILY,
    allow_underdetermined: bool = False,
) -> GeneratedModel:
    """Hyper-process modelling over a shared input grid"""
    model = HyperProcessModel(
        n, lo, hi, selection, hyper_degree, new_model_family, allow_underdetermined
    )
    return model.fit(tasks).generate(condition)


def hpm2(
    tasks: Sequence[SourceTask],
    condition: ArrayLike,
    n: int,
    mins: ArrayLike,
    maxs: ArrayLike,
    selection: ComponentSelection,
    hyper_degree: int,
    new_model_family: RegressorFamily = DEFAULT_FINAL_FAMILY,
    allow_underdetermined: bool = False,
) -> GeneratedModel:
    """Hyper-process modelling with inputs and outputs in every shape"""
    model = HyperProcessModel2(
        n, mins, maxs, selection, hyper_degree, new_model_family, allow_underdetermined
    )
    return model.fit(tasks).generate(condition)


def hm_baseline(
    tasks: Sequence[SourceTask],
    condition: ArrayLike,
    hyper_degree: int,
    allow_underdetermined: bool = False,
) -> GeneratedModel:
    """Coefficient hyper-model over homogeneous polynomial sources"""
    return HyperModelBaseline(hyper_degree, allow_underdetermined).fit(tasks).generate(condition)
