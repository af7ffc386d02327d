"""
Beta-distribution scenario: 25 source tasks, 16 unseen test conditions.

Each task is the density of Beta(alpha, beta) on (0, 1). Sources are fitted
on 20 points, generated models are scored against the true density on 100
points. Two grids are run:

    HM    (model degree, hyper degree)  in {3, 4, 5, 6}^2
    HPM   (components,   hyper degree)  in {3, 4, 5, 6}^2

Rows come out hyper degree first, then model degree or components, whatever
the number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core import ssm
from core.errors import InvalidArgumentError
from core.numeric import FloatArray, Vector, linspace
from core.pipeline import HyperModelBaseline, HyperProcessModel, SourceTask
from core.regressors import RegressorFamily, beta_pdf, fit
from core.ssm import ComponentSelection

logger = logging.getLogger(__name__)

Method = Literal["HM", "HPM"]

# Benchmark hyper degree 6 expands (alpha, beta) into 28 features for 25 tasks
ALLOW_UNDERDETERMINED = True


class ScenarioSpec(BaseModel):
    """Fixed layout of the beta-distribution experiment"""

    model_config = ConfigDict(frozen=True)

    train_values: tuple[float, ...] = (0.5, 1.0, 5.0, 10.0, 15.0)
    test_values: tuple[float, ...] = (4.0, 6.0, 8.0, 12.0)
    lo: float = 0.01
    hi: float = 0.99
    train_points: int = 20
    eval_points: int = 100
    landmarks: int = 100
    model_degrees: tuple[int, ...] = (3, 4, 5, 6)
    component_counts: tuple[int, ...] = (3, 4, 5, 6)
    hyper_degrees: tuple[int, ...] = (3, 4, 5, 6)
    final_family: RegressorFamily = RegressorFamily.polynomial(7)

    @model_validator(mode="after")
    def _check_domain(self):
        if not 0.0 < self.lo < self.hi < 1.0:
            raise ValueError(f"grid [{self.lo}, {self.hi}] must lie strictly inside (0, 1)")
        if min(self.train_values + self.test_values) <= 0.0:
            raise ValueError("beta parameters must be positive")
        return self

    @property
    def train_params(self) -> list[tuple[float, float]]:
        return list(product(self.train_values, repeat=2))

    @property
    def test_params(self) -> list[tuple[float, float]]:
        return list(product(self.test_values, repeat=2))

    @property
    def train_grid(self) -> Vector:
        return linspace(self.lo, self.hi, self.train_points)

    @property
    def eval_grid(self) -> Vector:
        return linspace(self.lo, self.hi, self.eval_points)

    def settings(self, method: Method) -> list[tuple[int, int]]:
        """(model degree or components, hyper degree) in table order"""
        first = self.model_degrees if method == "HM" else self.component_counts
        return [(p, h) for h in self.hyper_degrees for p in first]


class ResultRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Method
    param1: int
    param2: int
    mean_mse: float = Field(ge=0.0)
    std_mse: float = Field(ge=0.0)
    hyper_r2: float


class CurveRecord(BaseModel):
    """Generated curve against the true density for one test condition"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    method: Method
    param1: int
    param2: int
    alpha: float
    beta: float
    mse: float
    predicted: FloatArray
    ground_truth: FloatArray
    plausibility_flags: list[bool] = []


class GridCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    row: ResultRow
    curves: list[CurveRecord]


class SourceFitRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    task_id: str
    alpha: float
    beta: float
    family: str
    family_mse: float
    poly5_mse: float


class SpectrumReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eigenvalues: FloatArray
    explained_variance_ratio: FloatArray
    cumulative_variance: FloatArray
    total_variance: float


def assign_family(alpha: float, beta: float) -> RegressorFamily:
    """
    Family of the source model for Beta(alpha, beta).

    Both parameters above 1 give a bell (Gaussian). Equal parameters at or
    below 1 give the flat or U-shaped curves (Polynomial(7)). Everything else
    rises or decays towards one end (Exponential).
    """
    if alpha > 1.0 and beta > 1.0:
        return RegressorFamily.gaussian()
    if alpha <= 1.0 and beta <= 1.0 and alpha == beta:
        return RegressorFamily.polynomial(7)
    return RegressorFamily.exponential()


def task_id(alpha: float, beta: float) -> str:
    return f"beta-{alpha:g}-{beta:g}"


def mse(predicted: Vector, truth: Vector) -> float:
    return float(np.mean((predicted - truth) ** 2))


def build_training_tasks(spec: ScenarioSpec, family: RegressorFamily | None = None) -> list[SourceTask]:
    """Fit one source per training pair; family None uses assign_family"""
    x = spec.train_grid
    tasks = []
    for alpha, beta in spec.train_params:
        chosen = family or assign_family(alpha, beta)
        regressor = fit(chosen, x, beta_pdf(alpha, beta, x))
        tasks.append(SourceTask(id=task_id(alpha, beta), regressor=regressor, condition=[alpha, beta]))
    logger.info(f"Fitted {len(tasks)} beta sources ({family or 'assigned families'})")
    return tasks


def _fit_generator(method: Method, spec: ScenarioSpec, tasks: Sequence[SourceTask], param1: int, param2: int):
    if method == "HM":
        return HyperModelBaseline(param2, allow_underdetermined=ALLOW_UNDERDETERMINED).fit(tasks)
    return HyperProcessModel(
        spec.landmarks,
        spec.lo,
        spec.hi,
        ComponentSelection.components(param1),
        param2,
        spec.final_family,
        allow_underdetermined=ALLOW_UNDERDETERMINED,
    ).fit(tasks)


def _curve(method: Method, spec: ScenarioSpec, generator, param1: int, param2: int, alpha: float, beta: float) -> CurveRecord:
    x = spec.eval_grid
    generated = generator.generate([alpha, beta])
    predicted = generated.predict(x)
    truth = beta_pdf(alpha, beta, x)
    return CurveRecord(
        method=method,
        param1=param1,
        param2=param2,
        alpha=alpha,
        beta=beta,
        mse=mse(predicted, truth),
        predicted=predicted,
        ground_truth=truth,
        plausibility_flags=generated.provenance.plausibility_flags,
    )


def evaluate_cell(
    method: Method, spec: ScenarioSpec, tasks: Sequence[SourceTask], param1: int, param2: int
) -> GridCell:
    """Score one grid setting over every test condition"""
    generator = _fit_generator(method, spec, tasks, param1, param2)
    curves = [
        _curve(method, spec, generator, param1, param2, alpha, beta)
        for alpha, beta in spec.test_params
    ]
    errors = np.array([curve.mse for curve in curves])
    row = ResultRow(
        method=method,
        param1=param1,
        param2=param2,
        mean_mse=float(errors.mean()),
        std_mse=float(errors.std()),
        hyper_r2=generator.hyper_model.r2_mean,
    )
    logger.info(f"{method} ({param1}, {param2}): mean MSE {row.mean_mse:.4f}, R^2 {row.hyper_r2:.3f}")
    return GridCell(row=row, curves=curves)


def _run_cells(jobs: list[tuple], workers: int) -> list[GridCell]:
    if workers <= 1:
        return [evaluate_cell(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order
        return list(pool.map(lambda job: evaluate_cell(*job), jobs))


def run_hm_cells(spec: ScenarioSpec, workers: int = 1) -> list[GridCell]:
    sources = {d: build_training_tasks(spec, RegressorFamily.polynomial(d)) for d in spec.model_degrees}
    jobs = [("HM", spec, sources[d], d, h) for d, h in spec.settings("HM")]
    return _run_cells(jobs, workers)


def run_hpm_cells(spec: ScenarioSpec, workers: int = 1, tasks: Sequence[SourceTask] | None = None) -> list[GridCell]:
    tasks = tasks if tasks is not None else build_training_tasks(spec)
    jobs = [("HPM", spec, tasks, p, h) for p, h in spec.settings("HPM")]
    return _run_cells(jobs, workers)


def run_hm_grid(spec: ScenarioSpec, workers: int = 1) -> list[ResultRow]:
    """HM with Polynomial(model degree) sources over the full settings grid"""
    return [cell.row for cell in run_hm_cells(spec, workers)]


def run_hpm_grid(spec: ScenarioSpec, workers: int = 1) -> list[ResultRow]:
    """HPM with family-assigned sources over the full settings grid"""
    return [cell.row for cell in run_hpm_cells(spec, workers)]


def curve_report(
    method: Method,
    setting: tuple[int, int],
    condition: Sequence[float],
    spec: ScenarioSpec | None = None,
) -> CurveRecord:
    """Generated curve and true density for one setting and condition"""
    spec = spec or ScenarioSpec()
    if method not in ("HM", "HPM"):
        raise InvalidArgumentError(f"unknown method '{method}'")
    if tuple(setting) not in spec.settings(method):
        raise InvalidArgumentError(f"setting {tuple(setting)} is outside the {method} grid")
    if len(condition) != 2 or min(condition) <= 0.0:
        raise InvalidArgumentError(f"condition must be a positive (alpha, beta) pair, got {list(condition)}")

    param1, param2 = setting
    family = RegressorFamily.polynomial(param1) if method == "HM" else None
    tasks = build_training_tasks(spec, family)
    generator = _fit_generator(method, spec, tasks, param1, param2)
    alpha, beta = (float(c) for c in condition)
    return _curve(method, spec, generator, param1, param2, alpha, beta)


def source_fit_report(spec: ScenarioSpec, tasks: Sequence[SourceTask] | None = None) -> list[SourceFitRecord]:
    """Train MSE of each assigned-family source next to a Polynomial(5) fit"""
    tasks = tasks if tasks is not None else build_training_tasks(spec)
    x = spec.train_grid
    poly5 = RegressorFamily.polynomial(5)
    records = []
    for task in tasks:
        alpha, beta = (float(c) for c in task.condition)
        records.append(
            SourceFitRecord(
                task_id=task.id,
                alpha=alpha,
                beta=beta,
                family=task.regressor.family.tag,
                family_mse=task.regressor.train_mse,
                poly5_mse=fit(poly5, x, beta_pdf(alpha, beta, x)).train_mse,
            )
        )
    return records


def shape_model(spec: ScenarioSpec, tasks: Sequence[SourceTask] | None = None) -> ssm.DeformableModel:
    """Full-rank shape model over the landmark grid the HPM grid samples"""
    tasks = tasks if tasks is not None else build_training_tasks(spec)
    x = linspace(spec.lo, spec.hi, spec.landmarks)
    shapes = np.vstack([task.regressor.predict(x) for task in tasks])
    return ssm.build(shapes, ComponentSelection.components(len(tasks) - 1))


def variance_spectrum(spec: ScenarioSpec, tasks: Sequence[SourceTask] | None = None) -> SpectrumReport:
    """Explained variance of the shape model the HPM grid is built on"""
    model = shape_model(spec, tasks)
    return SpectrumReport(
        eigenvalues=model.spectrum,
        explained_variance_ratio=model.explained_variance_ratio(),
        cumulative_variance=model.cumulative_variance(),
        total_variance=model.total_variance,
    )


def best_row(rows: Sequence[ResultRow]) -> ResultRow:
    """Lowest mean MSE, first in table order on ties"""
    if not rows:
        raise InvalidArgumentError("no rows to rank")
    return min(rows, key=lambda row: row.mean_mse)
