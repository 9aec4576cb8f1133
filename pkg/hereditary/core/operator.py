"""
The inelastic-strain history operator S and its adjoint.

(Sf)(τ) = ∫_τ^T K(ρ-τ)/C f(ρ) dρ maps a strain history to the inelastic part
of the response, ε^p = ε - σ/C. This module evaluates S and S* by nodal
quadrature and carries the closed-form analysis of the standard linear solid:
spectrum, eigenfunctions, Hilbert–Schmidt norm and the exact step response.
"""
import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq
from scipy.sparse.linalg import svds

from hereditary.config import settings
from hereditary.core.history import basis_matrix, step_history
from hereditary.core.kernels import ExpKernel, ScalarKernel, kernel_eval
from hereditary.core.models import BasisSpec, FloatArray, HistorySample, HistorySpace, TimeGrid
from hereditary.core.quadrature import nodal_weights, segment_weights
from hereditary.errors import BasisIndexError, DimensionError, SpectrumError

logger = logging.getLogger(__name__)


class SlsParams(BaseModel):
    """Standard linear solid σ(t) = C0 ε(t) - ∫₀ᵗ C1 e^(-λ(t-s)) ε(s) ds on H."""
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    C0: float = Field(..., gt=0, description="Elastic modulus")
    C1: float = Field(..., ge=0, description="Kernel amplitude")
    lam: float = Field(..., gt=0, alias="lambda", description="Kernel rate")
    lambda0: float = Field(..., gt=0, description="Weight rate")
    T: float = Field(..., gt=0, description="History duration")

    @property
    def k(self) -> float:
        return self.C1 / self.C0

    @property
    def alpha(self) -> float:
        return self.lam - 0.5 * self.lambda0

    @property
    def a(self) -> float:
        return self.lam + 0.5 * self.lambda0

    @property
    def kernel(self) -> ExpKernel:
        return ExpKernel(k=self.C1, lam=self.lam)

    def space(self, n: int, quadrature: str = "simpson") -> HistorySpace:
        return HistorySpace.build(T=self.T, n=n, lambda0=self.lambda0, quadrature=quadrature)


def _check_grid(f: HistorySample, sp: HistorySpace) -> None:
    if f.grid != sp.grid:
        raise DimensionError(f"History sampled on {f.grid!r}, space uses {sp.grid!r}")


@lru_cache(maxsize=2)
def _operator_matrix(kernel: ScalarKernel, sp: HistorySpace, modulus: float, adjoint: bool) -> np.ndarray:
    n, h = sp.grid.n, sp.grid.step
    rule = sp.quadrature.value
    lags = np.arange(n + 1) * h
    kvals = np.asarray(kernel_eval(kernel, lags)) / modulus
    A = np.zeros((n + 1, n + 1))
    if not adjoint:
        for i in range(n + 1):
            length = n - i
            A[i, i:] = segment_weights(length, h, rule) * kvals[: length + 1]
    else:
        # w(ρ)/w(τ) = e^(λ0(τ-ρ)) depends on the lag only
        lagged = kvals * np.exp(sp.lambda0 * lags)
        for i in range(n + 1):
            A[i, : i + 1] = segment_weights(i, h, rule) * lagged[i::-1]
    A.setflags(write=False)
    logger.debug(f"Built {'adjoint ' if adjoint else ''}history operator on {n + 1} nodes")
    return A


def history_operator_matrix(kernel: ScalarKernel, sp: HistorySpace, modulus: float = 1.0, adjoint: bool = False) -> np.ndarray:
    """Nodal matrix A with (Sf)(τ_i) = Σ_j A_ij f(τ_j), or the same for S*."""
    return _operator_matrix(kernel, sp, float(modulus), bool(adjoint))


def apply_S(kernel: ScalarKernel, f: HistorySample, sp: HistorySpace, modulus: float = 1.0) -> HistorySample:
    """
    Apply the history operator S by nodal quadrature.

    Args:
        kernel: Scalar hereditary kernel K
        f: Strain history on sp.grid
        sp: History space
        modulus: Elastic modulus C dividing the kernel (1 for a raw kernel)

    Returns:
        (Sf)(τ_i) = ∫_{τ_i}^T K(ρ-τ_i)/C f(ρ) dρ
    """
    _check_grid(f, sp)
    return HistorySample(grid=sp.grid, values=history_operator_matrix(kernel, sp, modulus) @ f.values)


def apply_S_adjoint(kernel: ScalarKernel, f: HistorySample, sp: HistorySpace, modulus: float = 1.0) -> HistorySample:
    """(S*f)(τ_i) = ∫₀^{τ_i} K(τ_i-ρ)/C f(ρ) w(ρ)/w(τ_i) dρ."""
    _check_grid(f, sp)
    return HistorySample(grid=sp.grid, values=history_operator_matrix(kernel, sp, modulus, adjoint=True) @ f.values)


class SlsSpectrum(BaseModel):
    """
    Singular system of S for the standard linear solid.

    When hyperbolic_first is set, kappa[0] holds β of the imaginary first
    root κ_1 = iβ (α < 0 with |α|T > 1).
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: SlsParams
    kappa: FloatArray
    mu: FloatArray
    s: FloatArray
    norms: FloatArray
    hyperbolic_first: bool = False

    @property
    def n_max(self) -> int:
        return int(self.kappa.size)


def _root(fn: Callable[[float], float], lo: float, hi: float) -> float:
    try:
        return brentq(fn, lo, hi, xtol=1e-15, maxiter=200)
    except (ValueError, RuntimeError) as e:
        raise SpectrumError(f"Root not bracketed in ({lo}, {hi}): {e}") from e


def sls_spectrum(p: SlsParams, n_max: int) -> SlsSpectrum:
    """
    Characteristic roots, eigenvalues and normalizations of S*S.

    Roots solve tan(κT) + κ/α = 0, found by Brent's method on α sin κT + κ cos κT = 0.
    For α > 0 the n-th root lies in ((n-½)π/T, nπ/T), for α < 0 in
    ((n-1)π/T, (n-½)π/T); |α| < 1e-12 uses κ_n = (n-½)π/T.
    """
    if n_max < 1:
        raise BasisIndexError("n_max must be >= 1")
    T, alpha, k = p.T, p.alpha, p.k
    kappa = np.empty(n_max)
    hyperbolic = False

    def characteristic(x: float) -> float:
        return alpha * math.sin(x * T) + x * math.cos(x * T)

    if abs(alpha) < 1e-12:
        kappa[:] = (np.arange(1, n_max + 1) - 0.5) * np.pi / T
    else:
        for n in range(1, n_max + 1):
            if alpha > 0:
                lo, hi = (n - 0.5) * np.pi / T, n * np.pi / T
            else:
                lo, hi = (n - 1) * np.pi / T, (n - 0.5) * np.pi / T
            if alpha < 0 and n == 1:
                slope = 1.0 + alpha * T
                if abs(slope) < 1e-9:
                    raise SpectrumError(f"Degenerate first root at |α|T = 1 (α={alpha}, T={T})")
                if slope < 0:
                    # first mode is hyperbolic: α sinh βT + β cosh βT = 0 with 0 < β < |α|
                    hyperbolic = True
                    kappa[0] = _root(
                        lambda b: alpha * math.sinh(b * T) + b * math.cosh(b * T), 1e-6 * abs(alpha), abs(alpha)
                    )
                    continue
                lo = 1e-6 * np.pi / T
            kappa[n - 1] = _root(characteristic, lo, hi)

    denom = alpha * alpha + kappa * kappa
    with np.errstate(divide="ignore"):
        norms = np.sqrt(2.0 / (T + alpha / denom))
    if hyperbolic:
        d1 = alpha * alpha - kappa[0] ** 2
        denom[0] = d1
        norms[0] = math.sqrt(2.0 / (-T - alpha / d1))
    mu = k * k / denom
    logger.debug(f"SLS spectrum: α={alpha}, first roots {kappa[:3]}")
    return SlsSpectrum(params=p, kappa=kappa, mu=mu, s=np.sqrt(mu), norms=norms, hyperbolic_first=hyperbolic)


def sls_eigenfunctions(spec: SlsSpectrum, p: SlsParams, n: int, tau) -> Tuple[np.ndarray, np.ndarray]:
    """
    Right and left singular functions (φ_n(τ), ψ_n(τ)) with ψ_n = S φ_n.

    Args:
        spec: Spectrum from sls_spectrum
        p: Parameters the spectrum was computed for
        n: 1-based mode index
        tau: Time or array of times

    Returns:
        Tuple of arrays (φ_n, ψ_n) shaped like tau
    """
    if not 1 <= n <= spec.n_max:
        raise BasisIndexError(f"Mode {n} outside 1..{spec.n_max}")
    t = np.asarray(tau, dtype=float)
    kap, N, alpha = spec.kappa[n - 1], spec.norms[n - 1], p.alpha
    envelope = np.exp(0.5 * p.lambda0 * t)
    if spec.hyperbolic_first and n == 1:
        phi = N * envelope * np.sinh(kap * t)
        psi = p.k * N / (alpha * alpha - kap * kap) * envelope * (alpha * np.sinh(kap * t) + kap * np.cosh(kap * t))
    else:
        phi = N * envelope * np.sin(kap * t)
        psi = p.k * N / (alpha * alpha + kap * kap) * envelope * (alpha * np.sin(kap * t) + kap * np.cos(kap * t))
    return phi, psi


def sls_hs_norm(p: SlsParams) -> float:
    """
    Hilbert–Schmidt norm k √((2αT + e^(-2αT) - 1)/(4α²)).

    The unitary image e^(-λ0τ/2) S e^(λ0ρ/2) has kernel k e^(-α(ρ-τ)),
    α = λ - λ0/2; the limit α → 0 is kT/√2.
    """
    x = p.alpha * p.T
    if abs(x) < 1e-3:
        ratio = 0.5 - x / 3.0 + x * x / 6.0 - x ** 3 / 15.0
    else:
        ratio = (2.0 * x + math.expm1(-2.0 * x)) / (4.0 * x * x)
    return p.k * p.T * math.sqrt(ratio)


def relaxation_function(apply: Callable[[HistorySample], HistorySample], rho: float, sp: HistorySpace) -> float:
    """
    L(ρ) = (S h_ρ)(0) for the forward step h_ρ; works for any operator closure.

    Args:
        apply: Map from histories to inelastic-strain histories
        rho: Step length in [0, T]
        sp: History space

    Returns:
        Value of the image history at τ = 0
    """
    if not 0.0 <= rho <= sp.T * (1 + 1e-12):
        raise DimensionError(f"ρ={rho} outside [0, {sp.T}]")
    if rho <= 0.0:
        return 0.0
    return float(apply(step_history(sp.grid, rho)).values[0])


def step_exact(p: SlsParams, grid: Optional[TimeGrid] = None) -> Tuple[HistorySample, HistorySample]:
    """
    Exact inelastic strain and stress histories for the unit step history
    ε(τ) = 1 for τ ≤ T/2, 0 beyond.
    """
    if grid is None:
        grid = TimeGrid(T=p.T, n=settings.DEFAULT_GRID_INTERVALS)
    if not math.isclose(grid.T, p.T, rel_tol=1e-12):
        raise DimensionError(f"Grid duration {grid.T} differs from T={p.T}")
    tau = grid.nodes
    inside = tau <= 0.5 * p.T * (1 + 1e-12)
    decay = np.exp(-p.lam * np.where(inside, 0.5 * p.T - tau, 0.0))
    ep = np.where(inside, p.C1 / (p.C0 * p.lam) * (1.0 - decay), 0.0)
    sigma = np.where(inside, p.C0 + p.C1 / p.lam * (decay - 1.0), 0.0)
    return HistorySample(grid=grid, values=ep), HistorySample(grid=grid, values=sigma)


def _unit_frame_kernel(kernel: ScalarKernel, sp: HistorySpace, modulus: float) -> Tuple[np.ndarray, np.ndarray]:
    tau = sp.grid.nodes
    lag = np.subtract.outer(tau, tau).T  # lag[i, j] = τ_j - τ_i
    K = np.asarray(kernel_eval(kernel, lag)) / modulus
    K *= np.exp(0.5 * sp.lambda0 * lag)
    np.fill_diagonal(K, 0.5 * K.diagonal())
    return K, nodal_weights(sp.grid.n, sp.grid.step, "trapezoid")


def hs_norm_numeric(kernel: ScalarKernel, sp: HistorySpace, modulus: float = 1.0) -> float:
    """Dense-grid Hilbert–Schmidt norm, ∫∫ |k(τ,ρ)|² w(τ)/w(ρ) dρ dτ by product trapezoid."""
    K, t = _unit_frame_kernel(kernel, sp, modulus)
    return float(np.sqrt(t @ (K * K) @ t))


def truncation_error_surrogate(kernel: ScalarKernel, b: BasisSpec, modulus: float = 1.0) -> float:
    """
    Dense-grid estimate of ‖S - S_M‖ with S_M = Π_M S Π_M.

    Uses a Nyström discretization of the unitary image of S; keep the grid
    moderate, the operator is formed densely.
    """
    K, t = _unit_frame_kernel(kernel, b.space, modulus)
    root = np.sqrt(t)
    A = root[:, None] * K * root[None, :]
    envelope = np.exp(-0.5 * b.space.lambda0 * b.space.grid.nodes)
    E = root[:, None] * envelope[:, None] * basis_matrix(b)
    compressed = E @ (E.T @ A @ E) @ E.T
    return float(svds(A - compressed, k=1, return_singular_vectors=False)[0])
