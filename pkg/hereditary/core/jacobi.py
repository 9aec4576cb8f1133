"""
Cyclic Jacobi solvers for small dense matrices.

eigh_jacobi rotates a symmetric matrix to diagonal form. svd_jacobi applies
the same rotations to the Gram matrix AᵀA implicitly, by rotating pairs of
columns of A until they are mutually orthogonal, so AᵀA is never formed and
small singular values keep their relative accuracy.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from hereditary.config import settings
from hereditary.errors import ConditioningError, DimensionError

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)

# beyond this |θ| the rotation tangent is 1/(2θ) to working precision
THETA_LIMIT = 1e150


def _off_norm(A: np.ndarray) -> float:
    return math.sqrt(2.0) * float(np.linalg.norm(np.triu(A, 1)))


def _rotation(app: float, aqq: float, apq: float) -> Tuple[float, float]:
    """Cosine and sine of the rotation annihilating apq in [[app, apq], [apq, aqq]]."""
    diff = aqq - app
    if abs(diff) > THETA_LIMIT * abs(2.0 * apq):
        t = apq / diff
    else:
        theta = diff / (2.0 * apq)
        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
    c = 1.0 / math.sqrt(1.0 + t * t)
    return c, t * c


def _rotate_columns(X: np.ndarray, p: int, q: int, c: float, s: float) -> None:
    xp, xq = X[:, p].copy(), X[:, q].copy()
    X[:, p] = c * xp - s * xq
    X[:, q] = s * xp + c * xq


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Signs making the largest-magnitude entry of every column positive."""
    if not V.size:
        return np.ones(V.shape[1])
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(V.shape[1])])
    return np.where(signs == 0, 1.0, signs)


def _check_matrix(A) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"Expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConditioningError("Matrix has non-finite entries")
    return A


def eigh_jacobi(A, tol: float = 1e-14, max_sweeps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Args:
        A: Symmetric square matrix
        tol: Stop once the off-diagonal norm drops below tol·‖A‖_F
        max_sweeps: Sweep cap, settings.JACOBI_MAX_SWEEPS when omitted

    Returns:
        (eigenvalues, eigenvectors) with eigenvalues in descending order and
        each eigenvector signed so its largest-magnitude entry is positive
    """
    A = _check_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-14 * max(np.abs(A).max(initial=0.0), 1.0)):
        raise DimensionError("Jacobi eigensolver needs a symmetric matrix")
    A = 0.5 * (A + A.T)
    size = A.shape[0]
    sweeps_allowed = max_sweeps or settings.JACOBI_MAX_SWEEPS
    V = np.eye(size)
    threshold = tol * np.linalg.norm(A)

    sweep = 0
    while _off_norm(A) > threshold:
        if sweep >= sweeps_allowed:
            off = _off_norm(A)
            if off > 1e3 * threshold:
                raise ConditioningError(f"Jacobi did not converge in {sweeps_allowed} sweeps (off-diagonal {off:.3e})")
            logger.warning(f"Jacobi stopped after {sweeps_allowed} sweeps with off-diagonal {off:.3e}")
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                if abs(apq) <= EPS * math.sqrt(abs(A[p, p] * A[q, q])):
                    A[p, q] = A[q, p] = 0.0
                    continue
                c, s = _rotation(A[p, p], A[q, q], apq)
                _rotate_columns(A, p, q, c, s)
                _rotate_columns(A.T, p, q, c, s)
                A[p, q] = A[q, p] = 0.0
                _rotate_columns(V, p, q, c, s)
        sweep += 1
    logger.debug(f"Jacobi converged in {sweep} sweeps on a {size}x{size} matrix")

    eigvals = np.diag(A).copy()
    order = np.argsort(-eigvals, kind="stable")
    eigvals, V = eigvals[order], V[:, order]
    return eigvals, V * _fix_signs(V)


def svd_jacobi(A, tol: float = 1e-14, max_sweeps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Singular value decomposition by one-sided cyclic Jacobi rotations.

    Every rotation is the Jacobi rotation of the 2×2 block of AᵀA on columns
    (p, q); V accumulates them and W = AV has mutually orthogonal columns.

    Args:
        A: Real matrix
        tol: Columns p, q count as orthogonal once |w_pᵀw_q| <= tol·‖w_p‖‖w_q‖;
            never below rows·eps, the rounding level of the dot product
        max_sweeps: Sweep cap, settings.JACOBI_MAX_SWEEPS when omitted

    Returns:
        (s, W, V): singular values in descending order, W = AV with column
        norms s, and orthogonal V whose columns are the right singular
        vectors, each signed so its largest-magnitude entry is positive
    """
    W = _check_matrix(A)
    rows, cols = W.shape
    tol = max(tol, rows * EPS)
    sweeps_allowed = max_sweeps or settings.JACOBI_MAX_SWEEPS
    V = np.eye(cols)

    sweep = 0
    while True:
        rotations = 0
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                gamma = float(W[:, p] @ W[:, q])
                alpha = float(W[:, p] @ W[:, p])
                beta = float(W[:, q] @ W[:, q])
                if abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                c, s = _rotation(alpha, beta, gamma)
                _rotate_columns(W, p, q, c, s)
                _rotate_columns(V, p, q, c, s)
                rotations += 1
        sweep += 1
        if rotations == 0:
            break
        if sweep >= sweeps_allowed:
            raise ConditioningError(f"One-sided Jacobi did not converge in {sweeps_allowed} sweeps ({rotations} rotations in the last)")
    logger.debug(f"One-sided Jacobi converged in {sweep} sweeps on a {W.shape[0]}x{cols} matrix")

    s = np.linalg.norm(W, axis=0)
    order = np.argsort(-s, kind="stable")
    s, W, V = s[order], W[:, order], V[:, order]
    signs = _fix_signs(V)
    return s, W * signs, V * signs
