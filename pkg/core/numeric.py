"""
Numerical kernels used by every other module.

All functions are pure: inputs are copied before any in-place work and
outputs are fresh arrays.
"""

import logging
from dataclasses import dataclass
from typing import Annotated, Callable

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike, NDArray
from pydantic import BeforeValidator, PlainSerializer

from core.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]

EPS = np.finfo(np.float64).eps
TINY = np.finfo(np.float64).tiny

# Levenberg damping schedule
INITIAL_DAMPING = 1e-3
DAMPING_FACTOR = 10.0
MAX_DAMPING = 1e16


def as_vector(values: ArrayLike, name: str = "vector") -> Vector:
    """Copy values into a finite 1-D float array"""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def as_matrix(values: ArrayLike, name: str = "matrix") -> Matrix:
    """Copy values into a finite 2-D float array"""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def linspace(lo: float, hi: float, n: int) -> Vector:
    """n equally spaced values from lo to hi, both endpoints included"""
    if n < 2:
        raise InvalidArgumentError(f"linspace needs at least 2 points, got {n}")
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise InvalidArgumentError(f"linspace needs lo < hi, got [{lo}, {hi}]")
    return np.linspace(lo, hi, n, dtype=np.float64)


def vandermonde(x: ArrayLike, degree: int) -> Matrix:
    """Columns [1, x, ..., x^degree]"""
    if degree < 0:
        raise InvalidArgumentError(f"degree must be non-negative, got {degree}")
    return np.vander(as_vector(x, "x"), degree + 1, increasing=True)


def lstsq(A: ArrayLike, y: ArrayLike, rcond: float | None = None) -> Vector:
    """
    Least-squares solution of A c = y.

    Uses Householder QR with column pivoting. When the numerical rank is
    below the column count, a complete orthogonal decomposition gives the
    minimum-norm solution, so wide systems are accepted too.

    Parameters
    ----------
    A : array_like, shape (m, n)
    y : array_like, shape (m,)
    rcond : float, optional
        Relative cutoff on |R_ii| / |R_00| for the rank decision.
        Defaults to max(m, n) * machine epsilon.

    Returns
    -------
    c : ndarray, shape (n,)
    """
    A = as_matrix(A, "A")
    y = as_vector(y, "y")
    m, n = A.shape
    if m != y.size:
        raise InvalidArgumentError(f"A has {m} rows but y has {y.size} entries")

    Q, R, perm = la.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if rcond is None:
        rcond = max(m, n) * EPS
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(n)
    rank = int(np.count_nonzero(diag > rcond * diag[0]))

    qty = Q[:, :rank].T @ y
    if rank == n:
        w = la.solve_triangular(R[:n, :n], qty)
    else:
        # R1 = U^T Z^T, minimum-norm w = Z U^-T qty
        Z, U = la.qr(R[:rank, :].T, mode="economic")
        w = Z @ la.solve_triangular(U, qty, trans="T")

    coefficients = np.empty(n)
    coefficients[perm] = w
    return coefficients


def sym_eig(C: ArrayLike, tol: float = 1e-10, max_sweeps: int = 100) -> tuple[Vector, Matrix]:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and orthonormal eigenvectors as
    columns. Each eigenvector is signed so that its largest-magnitude entry is
    positive (first such entry on ties), which makes the output reproducible.
    """
    A = as_matrix(C, "C")
    n, cols = A.shape
    if n != cols:
        raise InvalidArgumentError(f"sym_eig needs a square matrix, got {A.shape}")

    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > tol * max(scale, TINY):
        raise InvalidArgumentError("sym_eig needs a symmetric matrix")
    if scale == 0.0:
        return np.zeros(n), np.eye(n)

    A = 0.5 * (A + A.T)
    V = np.eye(n)
    threshold = n * EPS * scale

    for sweep in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0.0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                _rotate_columns(A, p, q, c, s)
                _rotate_rows(A, p, q, c, s)
                A[p, q] = A[q, p] = 0.0
                _rotate_columns(V, p, q, c, s)
    else:
        logger.warning(f"Jacobi sweeps exhausted ({max_sweeps}) before full convergence")

    eigenvalues = np.diag(A).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvectors = fix_signs(V[:, order])
    return eigenvalues, eigenvectors


def _rotate_columns(M: Matrix, p: int, q: int, c: float, s: float) -> None:
    mp = M[:, p].copy()
    mq = M[:, q].copy()
    M[:, p] = c * mp - s * mq
    M[:, q] = s * mp + c * mq


def _rotate_rows(M: Matrix, p: int, q: int, c: float, s: float) -> None:
    mp = M[p, :].copy()
    mq = M[q, :].copy()
    M[p, :] = c * mp - s * mq
    M[q, :] = s * mp + c * mq


def fix_signs(vectors: Matrix) -> Matrix:
    """Flip columns so each one's largest-magnitude entry is positive"""
    vectors = np.array(vectors, dtype=np.float64)
    if vectors.size == 0:
        return vectors
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class GaussNewtonResult:
    params: Vector
    converged: bool
    iterations: int
    cost: float


def gauss_newton(
    residual_fn: Callable[[Vector], Vector],
    jacobian_fn: Callable[[Vector], Matrix],
    init: ArrayLike,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> GaussNewtonResult:
    """
    Damped Gauss-Newton (Levenberg) minimisation of ||r(p)||^2.

    Each step solves the augmented least-squares system
    [J; sqrt(mu) I] dp = [-r; 0]. Damping mu starts at 1e-3, is divided by 10
    after an accepted step and multiplied by 10 after a rejected one. A step is
    accepted only if it strictly lowers the residual norm.

    Converges when the step norm falls below tol * (||p|| + tol) or an
    accepted step lowers the squared residual norm by no more than tol
    relative to its previous value. Running out of iterations is reported
    through ``converged=False``, never raised.
    """
    params = as_vector(init, "init")
    residual = np.asarray(residual_fn(params), dtype=np.float64)
    if not np.all(np.isfinite(residual)):
        raise InvalidArgumentError("residual is non-finite at the initial parameters")
    cost = float(residual @ residual)

    damping = INITIAL_DAMPING
    converged = False
    iterations = 0
    identity = np.eye(params.size)

    for iterations in range(1, max_iter + 1):
        if cost == 0.0:
            converged = True
            break
        jacobian = np.asarray(jacobian_fn(params), dtype=np.float64)
        if jacobian.shape != (residual.size, params.size):
            raise InvalidArgumentError(
                f"jacobian shape {jacobian.shape} does not match "
                f"({residual.size}, {params.size})"
            )
        if not np.all(np.isfinite(jacobian)):
            damping *= DAMPING_FACTOR
            continue

        augmented = np.vstack([jacobian, np.sqrt(damping) * identity])
        rhs = np.concatenate([-residual, np.zeros(params.size)])
        step = lstsq(augmented, rhs)
        small_step = np.linalg.norm(step) <= tol * (np.linalg.norm(params) + tol)

        candidate = params + step
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            candidate_residual = np.asarray(residual_fn(candidate), dtype=np.float64)
        if np.all(np.isfinite(candidate_residual)):
            candidate_cost = float(candidate_residual @ candidate_residual)
        else:
            candidate_cost = np.inf

        if candidate_cost < cost:
            decrease = cost - candidate_cost
            previous = cost
            params, residual, cost = candidate, candidate_residual, candidate_cost
            damping /= DAMPING_FACTOR
            if small_step or decrease <= tol * previous:
                converged = True
                break
        else:
            damping *= DAMPING_FACTOR
            if small_step:
                converged = True
                break
            if damping > MAX_DAMPING:
                break

    if not converged:
        logger.debug(f"Gauss-Newton stopped after {iterations} iterations without converging")
    return GaussNewtonResult(params=params, converged=converged, iterations=iterations, cost=cost)


def _frozen_array(values: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite entries")
    arr.setflags(write=False)
    return arr


# ndarray field type for pydantic models: validated finite, read-only, dumped as nested lists
FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_frozen_array),
    PlainSerializer(lambda arr: arr.tolist(), return_type=list),
]
