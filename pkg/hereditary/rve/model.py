"""
Discrete periodic RVE.

An RVE is a set of material points e with weights w_e, strain maps
ε_e = B_e u and local laws σ_e = ℂ_e ε_e - Σ_i A_ei ∫ e^(-λ_ei(t-s)) ε_e(s) ds.
The macroscopic strain is the constraint ε̄ = C u with C = Σ w_e B_e / Σ w_e.
"""
import hashlib
import logging
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from hereditary.core.models import FloatArray
from hereditary.errors import AssemblyError, ConditioningError

logger = logging.getLogger(__name__)


class RveModel(BaseModel):
    """
    Assembled RVE.

    Attributes:
        weights: Point weights w_e, shape (m,)
        B: Strain-displacement map, sparse (m·c, n_dof); rows e·c..e·c+c-1 belong to point e
        moduli: Elastic moduli ℂ_e, shape (m, c, c)
        amplitudes: Branch amplitudes A_ei, shape (m, W, c, c)
        rates: Branch rates λ_ei, shape (m, W)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: FloatArray
    B: sp.csr_matrix
    moduli: FloatArray
    amplitudes: FloatArray
    rates: FloatArray
    label: str = "rve"

    @model_validator(mode="after")
    def check_arrays(self):
        m = self.weights.size
        if m == 0:
            raise ValueError("RVE has no material points")
        if np.any(self.weights <= 0):
            raise ValueError("Point weights must be positive")
        if self.moduli.ndim != 3 or self.moduli.shape[0] != m or self.moduli.shape[1] != self.moduli.shape[2]:
            raise ValueError(f"Moduli have shape {self.moduli.shape}, expected ({m}, c, c)")
        c = self.moduli.shape[1]
        if self.B.shape[0] != m * c:
            raise ValueError(f"B has {self.B.shape[0]} rows, expected {m * c}")
        W = self.rates.shape[1] if self.rates.ndim == 2 else -1
        if self.rates.shape != (m, W) or self.amplitudes.shape != (m, W, c, c):
            raise ValueError("Branch amplitudes and rates do not match the points")
        if np.any(self.rates <= 0):
            raise ValueError("Branch rates must be positive")
        if not np.allclose(self.moduli, np.swapaxes(self.moduli, 1, 2)):
            raise ValueError("Elastic moduli must be symmetric")
        if np.min(np.linalg.eigvalsh(self.moduli)) <= 0:
            raise ValueError("Elastic moduli must be positive definite")
        return self

    @property
    def n_points(self) -> int:
        return int(self.weights.size)

    @property
    def n_components(self) -> int:
        return int(self.moduli.shape[1])

    @property
    def n_branches(self) -> int:
        return int(self.rates.shape[1])

    @property
    def n_dof(self) -> int:
        return int(self.B.shape[1])

    @property
    def volume_fractions(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @property
    def constraint(self) -> np.ndarray:
        """C = Σ w_e B_e / Σ w_e as a dense (c, n_dof) array."""
        averaging = sp.kron(sp.csr_matrix(self.volume_fractions[None, :]), sp.identity(self.n_components))
        return np.asarray((averaging @ self.B).todense())

    def point_strains(self, u: np.ndarray) -> np.ndarray:
        return (self.B @ u).reshape(self.n_points, self.n_components)

    def stiffness(self, local: np.ndarray) -> np.ndarray:
        """Dense Bᵀ W L B for per-point moduli L of shape (m, c, c), W the volume fractions."""
        m = self.n_points
        blocks = self.volume_fractions[:, None, None] * local
        D = sp.bsr_matrix((blocks, np.arange(m), np.arange(m + 1)), shape=(m * self.n_components,) * 2)
        return np.asarray((self.B.T @ D @ self.B).todense())

    def laplace_kernel(self, s: float) -> np.ndarray:
        """Local K̃_e(s) = Σ_i A_ei / (s + λ_ei), shape (m, c, c)."""
        return np.einsum("mw,mwij->mij", 1.0 / (s + self.rates), self.amplitudes)

    def digest(self) -> str:
        """SHA-256 over all arrays of the assembly."""
        h = hashlib.sha256()
        B = self.B.copy()
        B.sort_indices()
        for arr in (self.weights, B.indptr, B.indices, B.data, self.moduli, self.amplitudes, self.rates):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def factor_spd(K: np.ndarray, what: str = "stiffness") -> Tuple[np.ndarray, bool]:
    """Cholesky factor of a symmetric positive definite matrix."""
    try:
        return cho_factor(K)
    except LinAlgError as e:
        raise AssemblyError(f"Singular or indefinite {what} matrix ({K.shape[0]} dofs)") from e


def condensed_moduli(model: RveModel, local: np.ndarray, what: str = "stiffness") -> np.ndarray:
    """(C K^(-1) Cᵀ)^(-1) with K = Bᵀ W L B."""
    factor = factor_spd(model.stiffness(local), what)
    C = model.constraint
    schur = C @ cho_solve(factor, C.T)
    try:
        result = np.linalg.inv(schur)
    except np.linalg.LinAlgError as e:
        raise AssemblyError("Macroscopic constraint is rank deficient") from e
    return 0.5 * (result + result.T)


def effective_elastic(model: RveModel) -> np.ndarray:
    """Effective elastic moduli ℂ̄ = (C (Bᵀ W ℂ B)^(-1) Cᵀ)^(-1)."""
    return condensed_moduli(model, model.moduli, "elastic stiffness")


def effective_kernel_laplace(model: RveModel, s: float) -> np.ndarray:
    """
    Effective hereditary kernel in Laplace representation at real s > 0.

    K̄̃(s) = ℂ̄ - (C (Bᵀ W (ℂ - K̃(s)) B)^(-1) Cᵀ)^(-1)
    """
    if s <= 0:
        raise ConditioningError(f"Laplace variable must be positive, got s={s}")
    local = model.moduli - model.laplace_kernel(s)
    if np.min(np.linalg.eigvalsh(local)) <= 0:
        raise ConditioningError(f"Local moduli ℂ - K̃(s) are indefinite at s={s}")
    kernel = effective_elastic(model) - condensed_moduli(model, local, "Laplace stiffness")
    return 0.5 * (kernel + kernel.T)
