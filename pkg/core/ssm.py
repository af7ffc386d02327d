"""
Statistical shape model over landmark vectors.

A shape is a fixed-length vector of landmark values. ``build`` computes the
mean shape and the principal modes of variation (covariance normalised by
1/N); ``project`` maps a shape to deformable parameters b = phi^T (x - mean)
and ``reconstruct`` maps them back, x' = mean + phi b.

With fewer shapes than landmarks the eigenproblem is solved on the N x N
Gram matrix (1/N) D^T D and each eigenvector q is lifted to D q / ||D q||.
"""

import logging
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, model_validator

from core.errors import InvalidArgumentError, NumericalError
from core.numeric import FloatArray, Matrix, TINY, Vector, as_matrix, as_vector, fix_signs, sym_eig

logger = logging.getLogger(__name__)

# Negative eigenvalues down to -tol * lambda_max are roundoff and clamp to zero
EIGENVALUE_CLAMP_TOL = 1e-10

# Gram-path eigenvectors whose lifted norm falls below this share of ||D||_F
# carry no direction of their own
DEGENERATE_LIFT_TOL = 1e-12

# Slack when comparing a cumulative variance share against the requested fraction
FRACTION_SLACK = 1e-12


class ComponentSelection(BaseModel):
    """Either an explicit component count or a cumulative variance fraction"""

    model_config = ConfigDict(frozen=True)

    count: int | None = None
    fraction: float | None = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.count is None) == (self.fraction is None):
            raise ValueError("give exactly one of count or fraction")
        if self.count is not None and self.count < 1:
            raise ValueError(f"component count must be positive, got {self.count}")
        if self.fraction is not None and not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"variance fraction must lie in (0, 1], got {self.fraction}")
        return self

    @classmethod
    def components(cls, count: int) -> "ComponentSelection":
        return cls(count=count)

    @classmethod
    def variance(cls, fraction: float = 0.95) -> "ComponentSelection":
        return cls(fraction=fraction)

    def __str__(self) -> str:
        if self.count is not None:
            return f"{self.count} components"
        return f"{self.fraction:.0%} variance"


class DeformableModel(BaseModel):
    """Mean shape plus retained modes of variation"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: FloatArray
    components: FloatArray  # (landmarks, p), orthonormal columns
    eigenvalues: FloatArray  # (p,), descending
    spectrum: FloatArray  # every eigenvalue before truncation
    total_variance: float
    n_shapes: int

    @model_validator(mode="after")
    def _check_shapes(self):
        d, p = self.components.shape
        if self.mean.shape != (d,):
            raise ValueError(f"mean has shape {self.mean.shape}, components {self.components.shape}")
        if self.eigenvalues.shape != (p,):
            raise ValueError(f"{p} components but {self.eigenvalues.size} eigenvalues")
        if np.any(self.eigenvalues < 0.0) or np.any(np.diff(self.eigenvalues) > 0.0):
            raise ValueError("eigenvalues must be non-negative and descending")
        return self

    @property
    def landmark_dim(self) -> int:
        return self.mean.size

    @property
    def n_components(self) -> int:
        return self.eigenvalues.size

    @property
    def max_components(self) -> int:
        return self.spectrum.size

    def explained_variance_ratio(self) -> Vector:
        """Share of total variance carried by every mode of the full spectrum"""
        if self.total_variance <= 0.0:
            return np.zeros_like(self.spectrum)
        return self.spectrum / self.total_variance

    def cumulative_variance(self) -> Vector:
        return np.cumsum(self.explained_variance_ratio())

    def truncate(self, p: int) -> "DeformableModel":
        """Keep the leading p components"""
        if not 1 <= p <= self.n_components:
            raise InvalidArgumentError(f"cannot keep {p} of {self.n_components} components")
        return self.model_copy(
            update={"components": self.components[:, :p], "eigenvalues": self.eigenvalues[:p]}
        )

    def reconstruction_error(self, shapes: ArrayLike) -> float:
        """Sum of squared reconstruction errors over shapes"""
        X = _shape_matrix(shapes)
        if X.shape[1] != self.landmark_dim:
            raise InvalidArgumentError(f"shapes have {X.shape[1]} landmarks, model {self.landmark_dim}")
        deviations = X - self.mean
        B = deviations @ self.components
        return float(np.sum((deviations - B @ self.components.T) ** 2))


def _shape_matrix(shapes: ArrayLike) -> Matrix:
    try:
        X = as_matrix(shapes, "shapes")
    except InvalidArgumentError:
        raise
    except ValueError as e:
        raise InvalidArgumentError(f"shapes must share one length: {e}") from e
    return X


def _clamp(eigenvalues: Vector) -> Vector:
    largest = max(float(eigenvalues.max(initial=0.0)), 0.0)
    floor = -EIGENVALUE_CLAMP_TOL * max(largest, TINY)
    if np.any(eigenvalues < floor):
        raise NumericalError(
            f"covariance has a negative eigenvalue {eigenvalues.min():.3e} below roundoff level"
        )
    return np.maximum(eigenvalues, 0.0)


def _gram_modes(D: Matrix) -> tuple[Vector, Matrix]:
    """Eigenpairs of (1/N) D D^T through the N x N Gram matrix, D is (landmarks, N)"""
    n = D.shape[1]
    mu, Q = sym_eig((D.T @ D) / n)
    lifted = D @ Q
    norms = np.linalg.norm(lifted, axis=0)
    scale = max(np.linalg.norm(D), TINY)
    usable = norms > DEGENERATE_LIFT_TOL * scale
    lifted[:, usable] /= norms[usable]
    lifted[:, ~usable] = 0.0
    # Householder QR keeps every column orthonormal, degenerate ones included
    basis, R = np.linalg.qr(lifted)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    return mu, basis * signs


def _covariance_modes(D: Matrix) -> tuple[Vector, Matrix]:
    n = D.shape[1]
    return sym_eig((D @ D.T) / n)


def build(
    shapes: ArrayLike,
    retained: ComponentSelection,
    method: Literal["auto", "gram", "covariance"] = "auto",
) -> DeformableModel:
    """
    Build a deformable model from N shapes stacked as rows.

    Parameters
    ----------
    shapes : array_like, shape (N, landmarks)
    retained : ComponentSelection
        Explicit count p (at most N - 1) or the smallest p whose cumulative
        variance share reaches the fraction.
    method : {"auto", "gram", "covariance"}
        "gram" solves the N x N problem, "covariance" the landmarks x landmarks
        one; "auto" picks the smaller.
    """
    X = _shape_matrix(shapes)
    n_shapes, d = X.shape
    if n_shapes < 2:
        raise InvalidArgumentError(f"a deformable model needs at least 2 shapes, got {n_shapes}")
    max_components = min(n_shapes - 1, d)
    if retained.count is not None and retained.count > max_components:
        raise InvalidArgumentError(
            f"{retained.count} components requested but {n_shapes} shapes of "
            f"{d} landmarks support at most {max_components}"
        )

    mean = X.mean(axis=0)
    D = (X - mean).T
    total_variance = float(np.sum(D * D)) / n_shapes

    if method == "auto":
        method = "gram" if n_shapes < d else "covariance"
    if method == "gram":
        eigenvalues, vectors = _gram_modes(D)
    elif method == "covariance":
        eigenvalues, vectors = _covariance_modes(D)
    else:
        raise InvalidArgumentError(f"unknown build method '{method}'")

    eigenvalues = _clamp(eigenvalues[:max_components])
    vectors = fix_signs(vectors[:, :max_components])

    if retained.count is not None:
        p = retained.count
    elif total_variance <= 0.0:
        p = 1
    else:
        shares = np.cumsum(eigenvalues) / total_variance
        p = int(np.searchsorted(shares, retained.fraction - FRACTION_SLACK) + 1)
        p = min(p, max_components)

    logger.info(
        f"Deformable model: {n_shapes} shapes x {d} landmarks, {method} path, "
        f"kept {p}/{max_components} components"
    )
    return DeformableModel(
        mean=mean,
        components=vectors[:, :p],
        eigenvalues=eigenvalues[:p],
        spectrum=eigenvalues,
        total_variance=total_variance,
        n_shapes=n_shapes,
    )


def project(m: DeformableModel, s: ArrayLike) -> Vector:
    """Deformable parameters b = phi^T (s - mean)"""
    s = as_vector(s, "shape")
    if s.size != m.landmark_dim:
        raise InvalidArgumentError(f"shape has {s.size} landmarks, model expects {m.landmark_dim}")
    return m.components.T @ (s - m.mean)


def reconstruct(m: DeformableModel, b: ArrayLike) -> Vector:
    """Shape mean + phi b"""
    b = as_vector(b, "b")
    if b.size != m.n_components:
        raise InvalidArgumentError(f"b has {b.size} entries, model has {m.n_components} components")
    return m.mean + m.components @ b


def plausibility_check(m: DeformableModel, b: ArrayLike, bound: float = 3.0) -> list[bool]:
    """Flag each component whose |b_i| exceeds bound * sqrt(lambda_i); nothing is clipped"""
    b = as_vector(b, "b")
    if b.size != m.n_components:
        raise InvalidArgumentError(f"b has {b.size} entries, model has {m.n_components} components")
    limits = bound * np.sqrt(m.eigenvalues)
    return [bool(flag) for flag in np.abs(b) > limits * (1.0 + 1e-9) + 1e-12]
