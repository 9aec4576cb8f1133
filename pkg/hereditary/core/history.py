"""
Weighted history space operations: inner products, the trig-exponential basis,
projection and reconstruction, and admissibility of fading-memory weights.
"""
import logging
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from hereditary.core.models import BasisSpec, HistorySample, HistorySpace, TimeGrid, WeightFn
from hereditary.errors import BasisIndexError, DimensionError

logger = logging.getLogger(__name__)


def _check_grid(f: HistorySample, sp: HistorySpace) -> None:
    if f.grid != sp.grid:
        raise DimensionError(f"History sampled on {f.grid!r}, space uses {sp.grid!r}")


def inner_product(f: HistorySample, g: HistorySample, sp: HistorySpace) -> float:
    """
    Weighted inner product (f, g)_H by nodal quadrature.

    Args:
        f: First history
        g: Second history
        sp: History space fixing grid, weight and quadrature rule

    Returns:
        Σ q_i w(τ_i) f(τ_i) g(τ_i)
    """
    _check_grid(f, sp)
    _check_grid(g, sp)
    return float(np.dot(sp.measure(), f.values * g.values))


def history_norm(f: HistorySample, sp: HistorySpace) -> float:
    return float(np.sqrt(max(inner_product(f, f, sp), 0.0)))


def history_error(f: HistorySample, g: HistorySample, sp: HistorySpace, boundary_layer: float = 0.0) -> float:
    """
    H-norm of f - g.

    A positive boundary_layer drops the layers [0, δ) and (T - δ, T] where
    truncated reconstructions of non-smooth histories oscillate.
    """
    _check_grid(f, sp)
    _check_grid(g, sp)
    diff = f.values - g.values
    if boundary_layer > 0.0:
        tau = sp.grid.nodes
        diff = np.where((tau < boundary_layer) | (tau > sp.T - boundary_layer), 0.0, diff)
    return float(np.sqrt(max(np.dot(sp.measure(), diff * diff), 0.0)))


def unit_frame(f: HistorySample, sp: HistorySpace) -> HistorySample:
    """Image of f under the unitary map H → L²(0, T), f ↦ e^(-λ0τ/2) f."""
    _check_grid(f, sp)
    return HistorySample(grid=sp.grid, values=f.values * np.exp(-0.5 * sp.lambda0 * sp.grid.nodes))


def step_history(grid: TimeGrid, rho: float) -> HistorySample:
    """Forward step h_ρ: 1 for τ ≤ ρ, 0 beyond."""
    tol = 1e-12 * grid.T
    return HistorySample(grid=grid, values=(grid.nodes <= rho + tol).astype(float))


def ramp_history(grid: TimeGrid) -> HistorySample:
    """Ramp u(τ) = 1 - τ/T: one at τ = 0, zero at τ = T."""
    return HistorySample(grid=grid, values=1.0 - grid.nodes / grid.T)


def _basis_values(n: int, tau: np.ndarray, T: float, lambda0: float) -> np.ndarray:
    envelope = np.exp(0.5 * lambda0 * tau)
    if n == 0:
        return np.sqrt(1.0 / T) * envelope
    phase = 2.0 * np.pi * abs(n) * tau / T
    trig = np.cos(phase) if n < 0 else np.sin(phase)
    return np.sqrt(2.0 / T) * envelope * trig


def basis_eval(n: int, tau, b: BasisSpec):
    """
    Evaluate the basis function e_n at τ.

    Negative indices carry cosines, positive indices sines, and n = 0 the
    constant mode, all times the envelope e^(λ0τ/2).

    Args:
        n: Signed basis index, |n| <= b.m
        tau: Time or array of times in [0, T]
        b: Basis specification

    Returns:
        e_n(τ) as a float, or an array for array input
    """
    if abs(n) > b.m:
        raise BasisIndexError(f"Basis index {n} outside -{b.m}..{b.m}")
    t = np.asarray(tau, dtype=float)
    if np.any(t < -1e-12 * b.space.T) or np.any(t > b.space.T * (1 + 1e-12)):
        raise DimensionError(f"τ outside [0, {b.space.T}]")
    values = _basis_values(n, t, b.space.T, b.space.lambda0)
    return float(values) if values.ndim == 0 else values


@lru_cache(maxsize=16)
def _basis_matrix_cached(b: BasisSpec) -> np.ndarray:
    tau = b.space.grid.nodes
    cols = [_basis_values(int(n), tau, b.space.T, b.space.lambda0) for n in b.signed_indices]
    matrix = np.column_stack(cols)
    matrix.setflags(write=False)
    return matrix


def basis_matrix(b: BasisSpec) -> np.ndarray:
    """Samples of e_{Σ(1)}, …, e_{Σ(M)} as columns of an (n+1) × M array."""
    return _basis_matrix_cached(b)


def project(f: HistorySample, b: BasisSpec) -> np.ndarray:
    """Coefficients q_i = (f, e_{Σ(i)})_H."""
    _check_grid(f, b.space)
    return basis_matrix(b).T @ (b.space.measure() * f.values)


def reconstruct(q, b: BasisSpec) -> HistorySample:
    """Pointwise sum Σ q_i e_{Σ(i)} on the grid."""
    coeffs = np.asarray(q, dtype=float)
    if coeffs.shape != (b.M,):
        raise DimensionError(f"Coefficient vector has shape {coeffs.shape}, basis needs ({b.M},)")
    return HistorySample(grid=b.space.grid, values=basis_matrix(b) @ coeffs)


WeightLike = Union[WeightFn, Callable[[np.ndarray], np.ndarray], np.ndarray]


def check_admissible(w: WeightLike, grid: TimeGrid, tol: float = 1e-12) -> bool:
    """
    Check the fading-memory conditions on a grid.

    Args:
        w: Exponential weight, any callable, or values tabulated on the grid nodes
        grid: Grid on which the conditions are scanned
        tol: Slack for the semigroup and monotonicity checks

    Returns:
        True iff w(0) = 1, w is non-increasing, and w(s) >= w(s-t) w(t) for all grid pairs t <= s
    """
    if callable(w):
        values = np.asarray(w(grid.nodes), dtype=float)
    else:
        values = np.asarray(w, dtype=float)
    values = np.broadcast_to(values, (grid.n + 1,)) if values.ndim == 0 else values
    if values.shape != (grid.n + 1,):
        raise DimensionError(f"Tabulated weight has shape {values.shape}, grid needs ({grid.n + 1},)")

    if abs(values[0] - 1.0) > tol:
        logger.debug(f"Weight rejected: w(0) = {values[0]}")
        return False
    if np.any(np.diff(values) > tol):
        logger.debug("Weight rejected: not non-increasing")
        return False
    # on a uniform grid s - t is again a node, so w(s - t) is a lookup
    s_idx, t_idx = np.tril_indices(grid.n + 1)
    slack = values[s_idx] - values[s_idx - t_idx] * values[t_idx]
    if np.any(slack < -tol):
        worst = int(np.argmin(slack))
        logger.debug(f"Weight rejected: semigroup fails at s={grid.nodes[s_idx[worst]]}, t={grid.nodes[t_idx[worst]]}")
        return False
    return True
