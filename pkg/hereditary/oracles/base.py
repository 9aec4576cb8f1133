"""
Black-box material oracles.

An oracle maps a strain evolution ε(t) on [0, T] (zero for t < 0) to the
stress evolution σ(t). The identification pipeline only sees this interface;
conversion between the evolution frame t and the history frame τ = T - t
happens in this module and nowhere else.
"""
import asyncio
import logging
import threading
from abc import ABC, abstractmethod
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hereditary.config import settings
from hereditary.core.history import basis_matrix, ramp_history
from hereditary.core.models import BasisSpec, FloatArray, HistorySample, TimeGrid
from hereditary.errors import DimensionError, HereditaryError, OracleError

logger = logging.getLogger(__name__)


class StrainProgram(BaseModel):
    """Strain ε(t_i) prescribed in physical time, piecewise linear between nodes."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    values: FloatArray

    @model_validator(mode="after")
    def check_length(self):
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError(f"Program has shape {self.values.shape}, grid needs ({self.grid.n + 1},)")
        return self

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], grid: TimeGrid) -> "StrainProgram":
        return cls(grid=grid, values=np.broadcast_to(fn(grid.nodes), (grid.n + 1,)))

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "StrainProgram":
        return cls(grid=grid, values=np.zeros(grid.n + 1))

    def __mul__(self, factor: float) -> "StrainProgram":
        return StrainProgram(grid=self.grid, values=float(factor) * self.values)

    __rmul__ = __mul__


class OracleResponse(BaseModel):
    """Stress evolution returned by an oracle."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    stress: FloatArray
    oracle_id: str = Field(..., description="Identifier of the responding oracle")
    evaluations: int = Field(0, description="Oracle evaluations performed so far, this one included")

    @model_validator(mode="after")
    def check_length(self):
        if self.stress.shape != (self.grid.n + 1,):
            raise ValueError(f"Response has shape {self.stress.shape}, grid needs ({self.grid.n + 1},)")
        return self


class BaseOracle(ABC):
    """Linear, causal strain-to-stress map on a fixed grid."""

    def __init__(self, grid: TimeGrid, oracle_id: str):
        """
        Initialize the oracle.

        Args:
            grid: Time grid every program must be sampled on
            oracle_id: Identifier carried into responses and reports
        """
        self.grid = grid
        self.oracle_id = oracle_id
        self._evaluations = 0
        self._lock = threading.Lock()

    @property
    def evaluations(self) -> int:
        return self._evaluations

    @property
    def instantaneous_modulus(self) -> Optional[float]:
        """Instantaneous modulus if the oracle knows it, None otherwise."""
        return None

    @abstractmethod
    def _respond(self, strain: np.ndarray) -> np.ndarray:
        """Stress samples for nodal strain samples on self.grid."""

    def evaluate(self, program: StrainProgram) -> OracleResponse:
        if program.grid != self.grid:
            raise DimensionError(f"Program grid {program.grid!r} differs from oracle grid {self.grid!r}")
        try:
            stress = np.asarray(self._respond(np.asarray(program.values)), dtype=float)
        except HereditaryError:
            raise
        except Exception as e:
            raise OracleError(f"Oracle '{self.oracle_id}' failed: {e}") from e
        if stress.shape != program.values.shape or not np.all(np.isfinite(stress)):
            raise OracleError(f"Oracle '{self.oracle_id}' returned an unusable response")
        with self._lock:
            self._evaluations += 1
            count = self._evaluations
        return OracleResponse(grid=self.grid, stress=stress, oracle_id=self.oracle_id, evaluations=count)


def evaluate(oracle: BaseOracle, program: StrainProgram) -> OracleResponse:
    """Evaluate an oracle on a strain program."""
    return oracle.evaluate(program)


def instantaneous_modulus(oracle: BaseOracle) -> float:
    """
    The oracle's instantaneous modulus C_eff.

    Uses the exposed value when there is one, otherwise probes the oracle
    with a unit step and reads σ(0).
    """
    exposed = oracle.instantaneous_modulus
    if exposed is not None:
        return float(exposed)
    response = oracle.evaluate(StrainProgram(grid=oracle.grid, values=np.ones(oracle.grid.n + 1)))
    modulus = float(response.stress[0])
    if not np.isfinite(modulus) or modulus <= 0.0:
        raise OracleError(f"Step probe of '{oracle.oracle_id}' gave a non-positive modulus {modulus}")
    logger.info(f"Measured instantaneous modulus {modulus:.6g} of '{oracle.oracle_id}' by step probe")
    return modulus


def history_to_program(f: HistorySample) -> StrainProgram:
    """Program ε(t) = f(T - t) whose history at t = T is f."""
    return StrainProgram(grid=f.grid, values=f.values[::-1])


def response_to_history(response: OracleResponse) -> HistorySample:
    """Stress history σ_T(τ) = σ(T - τ)."""
    return HistorySample(grid=response.grid, values=response.stress[::-1])


def history_at(program: StrainProgram, i: int) -> HistorySample:
    """History ε_{t_i}(τ) = ε(t_i - τ) at node i, zero where t_i - τ < 0."""
    n = program.grid.n
    if not 0 <= i <= n:
        raise DimensionError(f"Time index {i} outside 0..{n}")
    values = np.zeros(n + 1)
    values[: i + 1] = program.values[i::-1]
    return HistorySample(grid=program.grid, values=values)


def inelastic_history(oracle: BaseOracle, f: HistorySample, modulus: Optional[float] = None) -> HistorySample:
    """
    Inelastic strain history ε^p_T = f - σ_T/C of the oracle for the history f.

    Args:
        oracle: Oracle on the grid of f
        f: Strain history at t = T
        modulus: Instantaneous modulus C; measured by a step probe when omitted
    """
    if oracle.grid != f.grid:
        raise DimensionError(f"Oracle grid {oracle.grid!r} differs from history grid {f.grid!r}")
    C = float(modulus) if modulus is not None else instantaneous_modulus(oracle)
    response = oracle.evaluate(history_to_program(f))
    return HistorySample(grid=f.grid, values=np.asarray(f.values) - response_to_history(response).values / C)


def ramp_response_at_zero(oracle: BaseOracle, modulus: float) -> float:
    """
    (S u)(0) for the ramp history u(τ) = 1 - τ/T, from one evaluation of the
    program ε(t) = t/T.
    """
    ramp = ramp_history(oracle.grid)
    try:
        return float(inelastic_history(oracle, ramp, modulus=modulus).values[0])
    except DimensionError:
        raise
    except HereditaryError as e:
        raise OracleError(f"Ramp evaluation failed: {e}") from e


def _inelastic_history(oracle: BaseOracle, column: np.ndarray, grid: TimeGrid, modulus: float, j: int) -> HistorySample:
    try:
        response = oracle.evaluate(StrainProgram(grid=grid, values=column[::-1]))
    except DimensionError:
        raise
    except HereditaryError as e:
        raise OracleError(f"Sampling failed: {e}", basis_index=j) from e
    stress_history = response.stress[::-1]
    return HistorySample(grid=grid, values=column - stress_history / modulus)


async def _sample_concurrently(oracle, columns, grid, modulus, indices, workers: int) -> List[HistorySample]:
    semaphore = asyncio.Semaphore(workers)

    async def one(col, j):
        async with semaphore:
            return await asyncio.to_thread(_inelastic_history, oracle, col, grid, modulus, j)

    # gather keeps argument order regardless of completion order
    return list(await asyncio.gather(*(one(col, j) for col, j in zip(columns, indices))))


def sample_basis_responses(oracle: BaseOracle, b: BasisSpec, modulus: Optional[float] = None) -> List[HistorySample]:
    """
    Inelastic-strain histories p_j = e_j - σ_j/C for every basis function.

    Args:
        oracle: Oracle on the basis grid
        b: Basis specification
        modulus: Instantaneous modulus C; measured by a step probe when omitted

    Returns:
        M histories ordered j = -m..m
    """
    grid = b.space.grid
    if oracle.grid != grid:
        raise DimensionError(f"Oracle grid {oracle.grid!r} differs from basis grid {grid!r}")
    C = float(modulus) if modulus is not None else instantaneous_modulus(oracle)
    E = basis_matrix(b)
    columns = [np.asarray(E[:, k]) for k in range(b.M)]
    indices = [int(j) for j in b.signed_indices]

    workers = settings.SAMPLING_WORKERS
    logger.info(f"Sampling {b.M} basis responses from '{oracle.oracle_id}' with {workers} worker(s)")
    if workers > 1:
        return asyncio.run(_sample_concurrently(oracle, columns, grid, C, indices, workers))
    return [_inelastic_history(oracle, col, grid, C, j) for col, j in zip(columns, indices)]
