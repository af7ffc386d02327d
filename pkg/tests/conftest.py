import numpy as np
import pytest

from core.pipeline import SourceTask
from core.regressors import Regressor, RegressorFamily
from scenarios.beta.benchmark import ScenarioSpec, build_training_tasks


def polynomial_task(task_id, coefficients, condition):
    """Source task wrapping a polynomial with fixed coefficients"""
    family = RegressorFamily.polynomial(len(coefficients) - 1)
    regressor = Regressor(family=family, coefficients=coefficients)
    return SourceTask(id=task_id, regressor=regressor, condition=condition)


@pytest.fixture
def spec():
    return ScenarioSpec()


@pytest.fixture(scope="session")
def beta_tasks():
    """The 25 family-assigned beta sources"""
    return build_training_tasks(ScenarioSpec())


@pytest.fixture(scope="session")
def beta_shapes(beta_tasks):
    x = np.linspace(0.01, 0.99, 100)
    return np.vstack([task.regressor.predict(x) for task in beta_tasks])


@pytest.fixture
def linear_tasks():
    """Lines whose coefficients depend linearly on a 2-D condition"""
    tasks = []
    for a in (0.0, 1.0, 2.0):
        for b in (0.0, 1.0, 2.0):
            tasks.append(polynomial_task(f"line-{a:g}-{b:g}", [1.0 + a, 2.0 - 0.5 * b], [a, b]))
    return tasks


@pytest.fixture
def curved_tasks():
    """Quadratics indexed by a scalar condition, one per c in 0..3"""
    return [
        polynomial_task(f"quad-{c}", [c, np.sin(c), 0.5 * c * c - 1.0], [float(c)])
        for c in range(4)
    ]
