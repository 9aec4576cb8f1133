"""
Analytic oracles for exponential-sum kernels.

σ(t) = C ε(t) - Σ_i a_i I_i(t) with I_i(t) = ∫₀ᵗ e^(-r_i(t-s)) ε(s) ds, every
I_i advanced by the exact exponential recursion for piecewise-linear strain.
"""
import logging
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from hereditary.core.kernels import PronyKernel, ScalarKernel, exponential_step_weights
from hereditary.core.models import TimeGrid
from hereditary.core.operator import SlsParams
from hereditary.errors import ConfigError
from hereditary.oracles.base import BaseOracle

logger = logging.getLogger(__name__)


class ExponentialSumOracle(BaseOracle):
    """Scalar hereditary law with kernel K(τ) = Σ a_i e^(-r_i τ)."""

    def __init__(self, modulus: float, amplitudes, rates, grid: TimeGrid, oracle_id: str = "exp-sum"):
        """
        Initialize the oracle.

        Args:
            modulus: Instantaneous modulus C
            amplitudes: Kernel amplitudes a_i
            rates: Decay rates r_i > 0
            grid: Time grid of the programs
            oracle_id: Identifier carried into responses
        """
        super().__init__(grid, oracle_id)
        self.modulus = float(modulus)
        self.amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=float))
        self.rates = np.atleast_1d(np.asarray(rates, dtype=float))
        if self.amplitudes.shape != self.rates.shape:
            raise ConfigError("Kernel amplitudes and rates differ in length")
        if np.any(self.rates <= 0):
            raise ConfigError("Kernel rates must be positive")
        self._decay, self._w_old, self._w_new = exponential_step_weights(self.rates, grid.step)
        logger.debug(f"Oracle '{oracle_id}' with {self.rates.size} exponential terms on {grid.n} steps")

    @property
    def instantaneous_modulus(self) -> Optional[float]:
        return self.modulus

    def _respond(self, strain: np.ndarray) -> np.ndarray:
        stress = self.modulus * strain
        if strain.size == 0:
            return stress
        steps = np.arange(strain.size)
        for amp, E, a, b in zip(self.amplitudes, self._decay, self._w_old, self._w_new):
            # lfilter starts the recursion with b ε_0 at t_0; the true integral starts at zero
            filtered = lfilter([b, a], [1.0, -E], strain)
            integral = filtered - b * strain[0] * E ** steps
            stress = stress - amp * integral
        return stress


def make_kernel_oracle(modulus: float, kernel: ScalarKernel, grid: TimeGrid, oracle_id: Optional[str] = None) -> ExponentialSumOracle:
    """Oracle for σ = C ε - K * ε with any exponential-sum kernel."""
    amplitudes, rates = kernel.exponential_terms()
    return ExponentialSumOracle(modulus, amplitudes, rates, grid, oracle_id or kernel.type)


def make_sls_oracle(p: SlsParams, grid: TimeGrid) -> ExponentialSumOracle:
    """σ(t) = C0 ε(t) - ∫₀ᵗ C1 e^(-λ(t-s)) ε(s) ds."""
    return ExponentialSumOracle(p.C0, [p.C1], [p.lam], grid, "sls")


def make_prony_oracle(kernel: PronyKernel, grid: TimeGrid) -> ExponentialSumOracle:
    """σ(t) = R(0) ε(t) - Σ_i (μ_i/τ_i) ∫₀ᵗ e^(-(t-s)/τ_i) ε(s) ds."""
    return make_kernel_oracle(kernel.instantaneous_modulus, kernel, grid, "prony")
