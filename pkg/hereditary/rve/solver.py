"""
Quasi-static viscoelastic time stepping of an RVE under macroscopic strain control.

Every point carries one internal vector h_ei per branch, advanced with the
exact exponential recursion for piecewise-linear strain. For a fixed step the
effective stiffness Bᵀ W (ℂ - Σ b_i A_i) B is constant and factored once;
the macroscopic stress is the Lagrange multiplier of the constraint C u = ε̄.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import cho_solve

from hereditary.core.kernels import SHEAR_XY, exponential_step_weights
from hereditary.core.models import FloatArray, TimeGrid
from hereditary.errors import AssemblyError, DimensionError
from hereditary.oracles.base import BaseOracle
from hereditary.rve.model import RveModel, factor_spd

logger = logging.getLogger(__name__)


class RveState(BaseModel):
    """Internal variables h (m, W, c) and dofs u after time index `index`."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    index: int
    h: FloatArray
    u: FloatArray


class _ConstrainedSolver:
    """Factored K and Schur complement C K^(-1) Cᵀ for one set of local moduli."""

    def __init__(self, model: RveModel, local: np.ndarray, what: str):
        self.factor = factor_spd(model.stiffness(local), what)
        self.C = model.constraint
        self.K_inv_Ct = cho_solve(self.factor, self.C.T)
        schur = self.C @ self.K_inv_Ct
        try:
            self.schur_inv = np.linalg.inv(schur)
        except np.linalg.LinAlgError as e:
            raise AssemblyError("Macroscopic constraint is rank deficient") from e

    def solve(self, macro_strain: np.ndarray, load: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Solve K u + f = Cᵀ σ̄, C u = ε̄ for (σ̄, u)."""
        K_inv_f = cho_solve(self.factor, load)
        sigma = self.schur_inv @ (macro_strain + self.C @ K_inv_f)
        u = self.K_inv_Ct @ sigma - K_inv_f
        return sigma, u


class RveTimeStepper:
    """Time integrator of one RVE on a fixed step."""

    def __init__(self, model: RveModel, dt: float):
        """
        Factor the elastic and step stiffness matrices.

        Args:
            model: Assembled RVE
            dt: Time step
        """
        self.model = model
        self.dt = dt
        self.decay, self.w_old, self.w_new = exponential_step_weights(model.rates, dt)
        step_moduli = model.moduli - np.einsum("mw,mwij->mij", self.w_new, model.amplitudes)
        self._elastic = _ConstrainedSolver(model, model.moduli, "elastic stiffness")
        self._step = _ConstrainedSolver(model, step_moduli, "step stiffness")
        logger.debug(f"Factored RVE '{model.label}' stiffness with {model.n_dof} dofs, Δt={dt}")

    def initial(self, macro_strain: np.ndarray) -> Tuple[np.ndarray, RveState]:
        """Instantaneous elastic response at t_0; the internal variables start at zero."""
        m, W, c = self.model.n_points, self.model.n_branches, self.model.n_components
        sigma, u = self._elastic.solve(macro_strain, np.zeros(self.model.n_dof))
        return sigma, RveState(index=0, h=np.zeros((m, W, c)), u=u)

    def step(self, state: RveState, macro_strain: np.ndarray) -> Tuple[np.ndarray, RveState]:
        """Advance one step to the macroscopic strain `macro_strain`."""
        model = self.model
        eps_old = model.point_strains(state.u)
        history = self.decay[:, :, None] * state.h + self.w_old[:, :, None] * eps_old[:, None, :]
        residual = -np.einsum("mwij,mwj->mi", model.amplitudes, history)
        load = model.B.T @ (model.volume_fractions[:, None] * residual).ravel()
        sigma, u = self._step.solve(macro_strain, load)
        eps_new = model.point_strains(u)
        h = history + self.w_new[:, :, None] * eps_new[:, None, :]
        return sigma, RveState(index=state.index + 1, h=h, u=u)


def solve_time_domain(model: RveModel, grid: TimeGrid, macro_strain) -> np.ndarray:
    """
    Average stress evolution σ̄(t_i) of the RVE under macroscopic strain control.

    Args:
        model: Assembled RVE
        grid: Uniform time grid
        macro_strain: ε̄(t_i), shape (n + 1, c); zero before t_0

    Returns:
        σ̄(t_i), shape (n + 1, c)
    """
    strain = np.asarray(macro_strain, dtype=float)
    c = model.n_components
    if strain.shape != (grid.n + 1, c):
        raise DimensionError(f"Macroscopic strain has shape {strain.shape}, expected ({grid.n + 1}, {c})")
    stepper = RveTimeStepper(model, grid.step)
    stress = np.empty_like(strain)
    stress[0], state = stepper.initial(strain[0])
    for i in range(1, grid.n + 1):
        stress[i], state = stepper.step(state, strain[i])
    return stress


class RveOracle(BaseOracle):
    """
    Scalar oracle over one macroscopic channel of an RVE.

    For the grain cube the channel is the tensorial shear ε̄_xy (Mandel
    component √2 ε̄_xy) with all other components held at zero.
    """

    def __init__(self, model: RveModel, grid: TimeGrid, channel: Optional[int] = None, oracle_id: str = "rve"):
        """
        Initialize the oracle.

        Args:
            model: Assembled RVE
            grid: Time grid of the programs
            channel: Mandel component; xy shear for 6 components, 0 for scalar models
            oracle_id: Identifier carried into responses
        """
        super().__init__(grid, oracle_id)
        c = model.n_components
        if channel is None:
            channel = SHEAR_XY if c == 6 else 0
        if not 0 <= channel < c:
            raise DimensionError(f"Channel {channel} outside 0..{c - 1}")
        self.model = model
        self.channel = channel
        self.scale = np.sqrt(2.0) if c == 6 and channel >= 3 else 1.0
        self._stepper = RveTimeStepper(model, grid.step)
        logger.info(f"RVE oracle '{oracle_id}' on channel {channel} with {model.n_points} points")

    def _respond(self, strain: np.ndarray) -> np.ndarray:
        macro = np.zeros((strain.size, self.model.n_components))
        macro[:, self.channel] = self.scale * strain
        stress = np.empty(strain.size)
        sigma, state = self._stepper.initial(macro[0])
        stress[0] = sigma[self.channel]
        for i in range(1, strain.size):
            sigma, state = self._stepper.step(state, macro[i])
            stress[i] = sigma[self.channel]
        return stress / self.scale
