"""
Core models for the hereditary toolkit.

This module defines the value types shared across the package: time grids,
fading-memory weights, history spaces, sampled histories and basis
specifications. All of them are immutable once constructed.
"""
from enum import Enum
from typing import Annotated, Callable

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from hereditary.core.quadrature import nodal_weights
from hereditary.errors import DimensionError


def _as_float_array(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    arr.setflags(write=False)
    return arr


FloatArray = Annotated[np.ndarray, BeforeValidator(_as_float_array)]


class Quadrature(str, Enum):
    """Nodal quadrature rules on the uniform grid."""
    TRAPEZOID = "trapezoid"
    SIMPSON = "simpson"


class TimeGrid(BaseModel):
    """Uniform grid τ_i = iT/n on [0, T]."""
    model_config = ConfigDict(frozen=True)

    T: float = Field(..., gt=0, description="Duration of the histories")
    n: int = Field(..., ge=2, description="Number of uniform intervals")

    @property
    def step(self) -> float:
        return self.T / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(T=self.T, n=self.n * factor)


class WeightFn(BaseModel):
    """Exponential fading-memory weight w(τ) = exp(-λ0 τ)."""
    model_config = ConfigDict(frozen=True)

    lambda0: float = Field(..., ge=0, description="Decay rate of the weight")

    def __call__(self, tau):
        return np.exp(-self.lambda0 * np.asarray(tau, dtype=float))


class HistorySpace(BaseModel):
    """The weighted Hilbert space H of histories on a sampled interval."""
    model_config = ConfigDict(frozen=True)

    grid: TimeGrid
    weight: WeightFn
    quadrature: Quadrature = Quadrature.SIMPSON

    @model_validator(mode="after")
    def check_rule(self):
        if self.quadrature == Quadrature.SIMPSON and self.grid.n % 2:
            raise ValueError(f"Simpson quadrature needs an even interval count, got n={self.grid.n}")
        return self

    @classmethod
    def build(cls, T: float, n: int, lambda0: float, quadrature: str = "simpson") -> "HistorySpace":
        return cls(grid=TimeGrid(T=T, n=n), weight=WeightFn(lambda0=lambda0), quadrature=Quadrature(quadrature))

    @property
    def T(self) -> float:
        return self.grid.T

    @property
    def lambda0(self) -> float:
        return self.weight.lambda0

    def quadrature_weights(self) -> np.ndarray:
        """Unweighted nodal weights; positive and summing to T."""
        return nodal_weights(self.grid.n, self.grid.step, self.quadrature.value)

    def measure(self) -> np.ndarray:
        """Nodal weights of the measure w(τ)dτ."""
        return self.quadrature_weights() * self.weight(self.grid.nodes)


class HistorySample(BaseModel):
    """
    Samples f(τ_i) of a history on a grid.

    τ = 0 is the present and τ = T the distant past.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    values: FloatArray

    @model_validator(mode="after")
    def check_length(self):
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError(f"History has shape {self.values.shape}, grid needs ({self.grid.n + 1},)")
        return self

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], grid: TimeGrid) -> "HistorySample":
        return cls(grid=grid, values=np.broadcast_to(fn(grid.nodes), (grid.n + 1,)))

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "HistorySample":
        return cls(grid=grid, values=np.zeros(grid.n + 1))

    def _other_values(self, other: "HistorySample") -> np.ndarray:
        if other.grid != self.grid:
            raise DimensionError("Histories live on different grids")
        return other.values

    def __add__(self, other: "HistorySample") -> "HistorySample":
        return HistorySample(grid=self.grid, values=self.values + self._other_values(other))

    def __sub__(self, other: "HistorySample") -> "HistorySample":
        return HistorySample(grid=self.grid, values=self.values - self._other_values(other))

    def __mul__(self, factor: float) -> "HistorySample":
        return HistorySample(grid=self.grid, values=float(factor) * self.values)

    __rmul__ = __mul__


class BasisSpec(BaseModel):
    """Trig-exponential basis e_n, n = -m..m, on a history space."""
    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=0, description="Half-width; the basis has M = 2m + 1 functions")
    space: HistorySpace

    @property
    def M(self) -> int:
        return 2 * self.m + 1

    @property
    def signed_indices(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    def shift(self, i: int) -> int:
        """Signed index Σ(i) = i - m - 1 of the 1-based matrix index i."""
        if not 1 <= i <= self.M:
            raise DimensionError(f"Matrix index {i} outside 1..{self.M}")
        return i - self.m - 1

    def column(self, n: int) -> int:
        """0-based array column holding the signed index n."""
        return n + self.m
