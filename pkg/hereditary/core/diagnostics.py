"""
Error and convergence diagnostics for reduced hereditary models.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from hereditary.core.history import step_history
from hereditary.core.models import BasisSpec, TimeGrid
from hereditary.core.reduce import ReducedModel, encode
from hereditary.errors import DimensionError

logger = logging.getLogger(__name__)

SAMPLING_TERM_UNKNOWN = "unknown, vanishing in M"


class ErrorReport(BaseModel):
    """Error certificate of a rank-N model built from an M-sample."""
    M: int
    N: int
    T: float
    rank_error: float = Field(..., description="s_{M,N+1}, zero when N = M")
    sampling_error: Optional[float] = Field(None, description="‖S - S_M‖ when a reference is supplied")
    bound_form: str = "s_{M,N+1} + ||S - S_M||"
    bound: Optional[float] = Field(None, description="s_{M,N+1} + ‖S - S_M‖")
    exact_rank_error: Optional[float] = Field(None, description="s_{N+1}(S) from an analytic spectrum")
    exact_bound: Optional[float] = Field(None, description="s_{N+1}(S) + 2‖S - S_M‖")
    spectrum_gaps: Optional[List[float]] = Field(None, description="|s_{M,k} - s_k| for the supplied k")
    gibbs_width: float = Field(..., description="max(T/M, T/N)")

    @property
    def sampling_term(self) -> str:
        return SAMPLING_TERM_UNKNOWN if self.sampling_error is None else f"{self.sampling_error:.6e}"


def error_report(
    s: Sequence[float],
    M: int,
    N: int,
    T: float,
    exact: Optional[Sequence[float]] = None,
    sampling_error: Optional[float] = None,
) -> ErrorReport:
    """
    Build the error certificate for a rank-N model.

    Args:
        s: Singular values s_{M,k} of S_M in non-increasing order (at least N + 1 unless N = M)
        M: Sampling size
        N: Rank
        T: History duration
        exact: Optional analytic singular values s_k of S
        sampling_error: Optional estimate of ‖S - S_M‖

    Returns:
        ErrorReport
    """
    values = np.asarray(s, dtype=float)
    if not 1 <= N <= M:
        raise DimensionError(f"Rank N={N} outside 1..{M}")
    if N < M and values.size <= N:
        raise DimensionError(f"Need s_{{M,{N + 1}}}, got {values.size} singular values")
    rank_error = 0.0 if N == M else float(values[N])

    report = {
        "M": M, "N": N, "T": T,
        "rank_error": rank_error,
        "gibbs_width": max(T / M, T / N),
    }
    if sampling_error is not None:
        report["sampling_error"] = float(sampling_error)
        report["bound"] = rank_error + float(sampling_error)
    if exact is not None:
        reference = np.asarray(exact, dtype=float)
        if reference.size > N:
            report["exact_rank_error"] = float(reference[N])
            if sampling_error is not None:
                report["exact_bound"] = float(reference[N]) + 2.0 * float(sampling_error)
        k = min(reference.size, values.size)
        report["spectrum_gaps"] = np.abs(values[:k] - reference[:k]).tolist()
    return ErrorReport(**report)


def fit_loglog_slope(ranks: Sequence[float], errors: Sequence[float], floor_ratio: float = 0.95) -> Optional[float]:
    """
    Least-squares slope of log(error) against log(N) over the pre-floor range.

    The pre-floor range is the leading run over which each error is below
    floor_ratio times its predecessor; None when it holds fewer than 2 points.
    """
    x = np.asarray(ranks, dtype=float)
    y = np.asarray(errors, dtype=float)
    if x.shape != y.shape:
        raise DimensionError("Ranks and errors differ in length")
    end = 1
    while end < y.size and y[end] > 0 and y[end] < floor_ratio * y[end - 1]:
        end += 1
    if end < 2 or y[0] <= 0:
        return None
    slope, _ = np.polyfit(np.log(x[:end]), np.log(y[:end]), 1)
    return float(slope)


def mid_interval_rms(error, grid: TimeGrid) -> float:
    """RMS of an error signal over the nodes in [T/4, 3T/4]."""
    tau = grid.nodes
    mask = (tau >= 0.25 * grid.T) & (tau <= 0.75 * grid.T)
    values = np.asarray(error, dtype=float)[mask]
    return float(np.sqrt(np.mean(values * values)))


def gibbs_layer_extent(error, grid: TimeGrid, factor: float = 5.0) -> Optional[int]:
    """
    Last grid index where |error| exceeds factor times its mid-interval RMS.

    Returns None when no node exceeds the threshold.
    """
    values = np.abs(np.asarray(error, dtype=float))
    if values.shape != (grid.n + 1,):
        raise DimensionError(f"Error has shape {values.shape}, grid needs ({grid.n + 1},)")
    exceed = np.flatnonzero(values > factor * mid_interval_rms(values, grid))
    return int(exceed[-1]) if exceed.size else None


def reduced_relaxation_function(rm: ReducedModel, rho: float, b: BasisSpec) -> float:
    """L_N(ρ) = (S_{M,N} h_ρ)(0), read like the stress: h_ρ(0) = 1 enters through the ramp residual."""
    if not 0.0 <= rho <= b.space.T * (1 + 1e-12):
        raise DimensionError(f"ρ={rho} outside [0, {b.space.T}]")
    if rho <= 0.0:
        return 0.0
    q = encode(rm, step_history(b.space.grid, rho), b)
    return float(rm.ramp_residual + q @ rm.readout_values())


def reduced_relaxation_curve(rm: ReducedModel, rhos: Sequence[float], b: BasisSpec) -> np.ndarray:
    return np.array([reduced_relaxation_function(rm, float(r), b) for r in rhos])
