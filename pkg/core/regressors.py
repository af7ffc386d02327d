"""
Fittable function families used as source models and as final predictors.

Families:
    polynomial    y = sum_k c_k x^k                     (degree + 1 coefficients)
    exponential   y = a * exp(b * x) + c                (a, b, c)
    gaussian      y = a * exp(-(x - m)^2 / (2 s^2))     (a, m, s)

Polynomials are solved directly by least squares on the Vandermonde
expansion; the two nonlinear families go through damped Gauss-Newton.
"""

import logging
import math
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, model_validator

from core.errors import InvalidArgumentError
from core.numeric import FloatArray, Vector, as_vector, gauss_newton, lstsq, vandermonde

logger = logging.getLogger(__name__)

# Lanczos approximation, g = 7, 9 coefficients
LANCZOS_G = 7
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# Starting exponents tried for the exponential family, best residual wins
EXPONENTIAL_START_RATES = (1.0, -1.0, 5.0, -5.0, 20.0, -20.0)


class RegressorFamily(BaseModel):
    """One of Polynomial(degree), Exponential, Gaussian"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["polynomial", "exponential", "gaussian"]
    degree: int | None = None

    @model_validator(mode="after")
    def _check_degree(self):
        if self.kind == "polynomial":
            if self.degree is None or self.degree < 0:
                raise ValueError("polynomial family needs a non-negative degree")
        elif self.degree is not None:
            raise ValueError(f"{self.kind} family takes no degree")
        return self

    @classmethod
    def polynomial(cls, degree: int) -> "RegressorFamily":
        return cls(kind="polynomial", degree=degree)

    @classmethod
    def exponential(cls) -> "RegressorFamily":
        return cls(kind="exponential")

    @classmethod
    def gaussian(cls) -> "RegressorFamily":
        return cls(kind="gaussian")

    @classmethod
    def from_tag(cls, tag: str) -> "RegressorFamily":
        """Parse 'poly7', 'exponential' or 'gaussian'"""
        tag = tag.strip().lower()
        if tag.startswith("poly"):
            digits = tag.removeprefix("polynomial").removeprefix("poly")
            if not digits.isdigit():
                raise InvalidArgumentError(f"polynomial tag needs a degree, got '{tag}'")
            return cls.polynomial(int(digits))
        if tag in ("exponential", "exp"):
            return cls.exponential()
        if tag in ("gaussian", "gauss"):
            return cls.gaussian()
        raise InvalidArgumentError(f"unknown regressor family '{tag}'")

    @property
    def arity(self) -> int:
        if self.kind == "polynomial":
            return self.degree + 1
        return 3

    @property
    def tag(self) -> str:
        if self.kind == "polynomial":
            return f"poly{self.degree}"
        return self.kind

    def __str__(self) -> str:
        return self.tag


class Regressor(BaseModel):
    """A fitted family member with its training diagnostics"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: RegressorFamily
    coefficients: FloatArray
    train_mse: float = 0.0
    converged: bool = True
    iterations: int = 0

    @model_validator(mode="after")
    def _check_arity(self):
        if self.coefficients.ndim != 1 or self.coefficients.size != self.family.arity:
            raise ValueError(
                f"{self.family.tag} needs {self.family.arity} coefficients, "
                f"got shape {self.coefficients.shape}"
            )
        if not self.train_mse >= 0.0:
            raise ValueError("train_mse must be non-negative")
        return self

    def predict(self, x: ArrayLike) -> Vector:
        return predict(self, x)


def _evaluate(family: RegressorFamily, params: Vector, x: Vector) -> Vector:
    if family.kind == "polynomial":
        return vandermonde(x, family.degree) @ params
    if family.kind == "exponential":
        a, b, c = params
        return a * np.exp(b * x) + c
    a, m, s = params
    return a * np.exp(-((x - m) ** 2) / (2.0 * s * s))


def _exponential_jacobian(params: Vector, x: Vector) -> np.ndarray:
    a, b, _ = params
    e = np.exp(b * x)
    return np.column_stack([e, a * x * e, np.ones_like(x)])


def _gaussian_jacobian(params: Vector, x: Vector) -> np.ndarray:
    a, m, s = params
    d = x - m
    g = np.exp(-(d * d) / (2.0 * s * s))
    return np.column_stack([g, a * g * d / (s * s), a * g * d * d / (s * s * s)])


def _exponential_starts(x: Vector, y: Vector) -> list[np.ndarray]:
    """Endpoint-matched (a, b, c) for each starting rate b"""
    lo, hi = int(np.argmin(x)), int(np.argmax(x))
    starts = []
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for rate in EXPONENTIAL_START_RATES:
            e = np.exp(rate * x)
            a = (y[hi] - y[lo]) / (e[hi] - e[lo])
            starts.append(np.array([a, rate, y[lo] - a * e[lo]]))
    return starts


def fit(
    family: RegressorFamily,
    x: ArrayLike,
    y: ArrayLike,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> Regressor:
    """Fit a family member to (x, y) pairs by least squares"""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.size != y.size:
        raise InvalidArgumentError(f"x has {x.size} values but y has {y.size}")
    if np.unique(x).size < family.arity:
        raise InvalidArgumentError(
            f"{family.tag} needs at least {family.arity} distinct points, "
            f"got {np.unique(x).size}"
        )

    if family.kind == "polynomial":
        params = lstsq(vandermonde(x, family.degree), y)
        converged, iterations = True, 0
    else:
        if family.kind == "exponential":
            jacobian = _exponential_jacobian
            starts = _exponential_starts(x, y)
        else:
            jacobian = _gaussian_jacobian
            peak = int(np.argmax(y))
            starts = [np.array([y[peak], x[peak], 0.25 * (x.max() - x.min())])]

        best = None
        for start in starts:
            with np.errstate(over="ignore", invalid="ignore"):
                usable = np.all(np.isfinite(start)) and np.all(
                    np.isfinite(_evaluate(family, start, x))
                )
            if not usable:
                continue
            result = gauss_newton(
                lambda p: _evaluate(family, p, x) - y,
                lambda p: jacobian(p, x),
                start,
                max_iter=max_iter,
                tol=tol,
            )
            if best is None or result.cost < best.cost:
                best = result
        if best is None:
            raise InvalidArgumentError(f"no finite starting point for {family.tag} fit")

        params, converged, iterations = best.params, best.converged, best.iterations
        if family.kind == "gaussian":
            params = np.array([params[0], params[1], abs(params[2])])
        if not converged:
            logger.warning(f"{family.tag} fit did not converge after {iterations} iterations")

    train_mse = float(np.mean((_evaluate(family, params, x) - y) ** 2))
    return Regressor(
        family=family,
        coefficients=params,
        train_mse=train_mse,
        converged=converged,
        iterations=iterations,
    )


def predict(r: Regressor, x: ArrayLike) -> Vector:
    """Evaluate the regressor elementwise at x"""
    return _evaluate(r.family, r.coefficients, as_vector(x, "x"))


def log_gamma(z: float) -> float:
    """ln Gamma(z) for z > 0 by the Lanczos approximation"""
    if z <= 0.0:
        raise InvalidArgumentError(f"log_gamma needs a positive argument, got {z}")
    if z < 0.5:
        # reflection
        return math.log(math.pi / abs(math.sin(math.pi * z))) - log_gamma(1.0 - z)
    z -= 1.0
    series = LANCZOS_COEFFICIENTS[0]
    for i, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        series += coefficient / (z + i)
    t = z + LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(series)


def log_beta(alpha: float, beta: float) -> float:
    return log_gamma(alpha) + log_gamma(beta) - log_gamma(alpha + beta)


def beta_pdf(alpha: float, beta: float, x: ArrayLike) -> Vector:
    """Beta distribution density on the open interval (0, 1)"""
    if not (alpha > 0.0 and beta > 0.0):
        raise InvalidArgumentError(f"beta parameters must be positive, got ({alpha}, {beta})")
    x = as_vector(x, "x")
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise InvalidArgumentError("beta_pdf is evaluated strictly inside (0, 1)")
    log_density = (alpha - 1.0) * np.log(x) + (beta - 1.0) * np.log1p(-x) - log_beta(alpha, beta)
    return np.exp(log_density)
