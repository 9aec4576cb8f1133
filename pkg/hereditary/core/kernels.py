"""
Relaxation kernels and elastic moduli.

Every scalar kernel is a finite sum of decaying exponentials
K(τ) = Σ a_i e^(-r_i τ); `exponential_terms` exposes that form so oracles,
RVE materials and closed-form assemblies share one representation.
Tensors use Mandel notation with component order (xx, yy, zz, yz, xz, xy).
"""
import logging
from typing import Annotated, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hereditary.core.history import check_admissible
from hereditary.core.models import TimeGrid, WeightFn
from hereditary.core.quadrature import nodal_weights
from hereditary.errors import AdmissibilityError

logger = logging.getLogger(__name__)

MANDEL_COMPONENTS = ("xx", "yy", "zz", "yz", "xz", "xy")
SHEAR_XY = 5

_KERNEL_CONFIG = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")


class ExpKernel(BaseModel):
    """Single exponential kernel K(τ) = k e^(-λτ)."""
    model_config = _KERNEL_CONFIG

    type: Literal["exp"] = "exp"
    k: float = Field(..., ge=0, description="Amplitude (modulus per time)")
    lam: float = Field(..., gt=0, alias="lambda", description="Decay rate")

    def exponential_terms(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([self.k]), np.array([self.lam])


class PronyBranch(BaseModel):
    """One Maxwell branch of a Wiechert model."""
    model_config = _KERNEL_CONFIG

    mu: float = Field(..., gt=0, description="Branch modulus")
    tau: float = Field(..., gt=0, description="Relaxation time")


class PronyKernel(BaseModel):
    """
    Prony series R(τ) = μ_inf + Σ μ_i e^(-τ/τ_i).

    The hereditary law uses ℂ = R(0) and K = -R', so the kernel terms are
    (μ_i/τ_i, 1/τ_i).
    """
    model_config = _KERNEL_CONFIG

    type: Literal["prony"] = "prony"
    mu_inf: float = Field(..., ge=0, description="Long-term modulus")
    branches: Tuple[PronyBranch, ...] = Field(default=(), description="Maxwell branches")

    @property
    def instantaneous_modulus(self) -> float:
        return self.mu_inf + sum(b.mu for b in self.branches)

    def relaxation_modulus(self, tau):
        t = np.asarray(tau, dtype=float)
        value = np.full(t.shape, self.mu_inf)
        for b in self.branches:
            value = value + b.mu * np.exp(-t / b.tau)
        return value

    def exponential_terms(self) -> Tuple[np.ndarray, np.ndarray]:
        mu = np.array([b.mu for b in self.branches], dtype=float)
        tau = np.array([b.tau for b in self.branches], dtype=float)
        return mu / tau, 1.0 / tau

    def scaled(self, factor: float) -> "PronyKernel":
        return PronyKernel(
            mu_inf=factor * self.mu_inf,
            branches=tuple(PronyBranch(mu=factor * b.mu, tau=b.tau) for b in self.branches),
        )


class SpectralAtom(BaseModel):
    model_config = _KERNEL_CONFIG

    lam: float = Field(..., gt=0, alias="lambda")
    nu: float = Field(..., ge=0)


class DiscreteSpectrum(BaseModel):
    """Atomic relaxation spectrum: K(τ) = Σ (λ_i - λ0) ν_i e^(-λ_i τ)."""
    model_config = _KERNEL_CONFIG

    type: Literal["spectrum"] = "spectrum"
    lambda0: float = Field(..., ge=0)
    atoms: Tuple[SpectralAtom, ...] = ()

    @model_validator(mode="after")
    def check_cutoff(self):
        for atom in self.atoms:
            if atom.lam <= self.lambda0:
                raise ValueError(f"Spectral atom at λ={atom.lam} must lie above the cutoff λ0={self.lambda0}")
        return self

    def exponential_terms(self) -> Tuple[np.ndarray, np.ndarray]:
        lam = np.array([a.lam for a in self.atoms], dtype=float)
        nu = np.array([a.nu for a in self.atoms], dtype=float)
        return (lam - self.lambda0) * nu, lam


Kernel = Annotated[Union[ExpKernel, PronyKernel, DiscreteSpectrum], Field(discriminator="type")]
ScalarKernel = Union[ExpKernel, PronyKernel, DiscreteSpectrum]


def kernel_eval(kernel: ScalarKernel, tau):
    """
    Evaluate the hereditary kernel K(τ); zero for τ < 0.

    Args:
        kernel: Exponential, Prony or discrete-spectrum kernel
        tau: Time or array of times

    Returns:
        K(τ) as a float, or an array for array input
    """
    amplitudes, rates = kernel.exponential_terms()
    t = np.asarray(tau, dtype=float)
    causal = t >= 0
    t_pos = np.where(causal, t, 0.0)
    values = np.zeros(t.shape)
    for a, r in zip(amplitudes, rates):
        values = values + a * np.exp(-r * t_pos)
    values = np.where(causal, values, 0.0)
    return float(values) if values.ndim == 0 else values


def exponential_step_weights(rates, dt: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Exact one-step weights of the hereditary integral for piecewise-linear input.

    With h(t) = ∫₀ᵗ e^(-λ(t-s)) ε(s) ds and ε linear on [t_i, t_i + Δt]:
    h_{i+1} = E h_i + a ε_i + b ε_{i+1}.

    Args:
        rates: Decay rates λ (any shape)
        dt: Step Δt

    Returns:
        (E, a, b) arrays with the shape of rates
    """
    x = np.asarray(rates, dtype=float) * dt
    E = np.exp(-x)
    a = np.empty_like(x)
    b = np.empty_like(x)

    small = x < 0.1
    if np.any(small):
        xs = x[small]
        j = np.arange(10)
        factorial = np.cumprod(np.arange(1, 12, dtype=float))  # 1!, 2!, ..., 11!
        sign = (-1.0) ** j
        coeff_a = sign * (j + 1) / factorial[j + 1]
        coeff_b = sign / factorial[j + 1]
        a[small] = dt * np.polynomial.polynomial.polyval(xs, coeff_a)
        b[small] = dt * np.polynomial.polynomial.polyval(xs, coeff_b)

    large = ~small
    if np.any(large):
        xl = x[large]
        one_minus_e = -np.expm1(-xl)
        a_l = dt * (one_minus_e - xl * E[large]) / (xl * xl)
        a[large] = a_l
        b[large] = dt * one_minus_e / xl - a_l
    return E, a, b


class HsBound(BaseModel):
    """Hilbert–Schmidt bound γ√T of the history operator."""
    value: float = Field(..., description="γ√T, +inf when the integral diverges")
    gamma_sq: float = Field(..., description="∫₀ᵀ K²/w dτ on the finer grid")
    divergent: bool = Field(False, description="Grid refinement changed γ² by more than 1.5x")
    near_inadmissible: bool = Field(False, description="K²/w grows over [0, T]")


def hs_bound(kernel: ScalarKernel, w: WeightFn, T: float, n: int = 2000) -> HsBound:
    """
    Bound ‖S‖_HS ≤ γ√T with γ² = ∫₀ᵀ K(τ)² w(τ)^(-1) dτ.

    The integral is evaluated with Simpson's rule on n and 2n intervals; a
    ratio above 1.5 between the two flags divergence.
    """
    n = n + (n % 2)
    grid = TimeGrid(T=T, n=n)
    if not check_admissible(w, grid):
        raise AdmissibilityError(f"Weight with λ0={w.lambda0} is not admissible")

    def gamma_sq(intervals: int) -> Tuple[float, np.ndarray]:
        tau = np.linspace(0.0, T, intervals + 1)
        with np.errstate(over="ignore", invalid="ignore"):
            integrand = np.asarray(kernel_eval(kernel, tau)) ** 2 / w(tau)
            total = float(np.dot(nodal_weights(intervals, T / intervals, "simpson"), integrand))
        return total, integrand

    coarse, _ = gamma_sq(n)
    fine, integrand = gamma_sq(2 * n)

    divergent = not np.isfinite(fine) or (coarse > 0 and fine / coarse > 1.5)
    near_inadmissible = bool(np.isfinite(integrand[-1]) and integrand[-1] > integrand[0] > 0) or divergent
    if divergent:
        logger.warning("Hilbert–Schmidt integral diverges numerically; kernel decays slower than w^(1/2)")
        return HsBound(value=float("inf"), gamma_sq=float("inf"), divergent=True, near_inadmissible=True)
    if near_inadmissible:
        logger.warning(f"K²/w grows on [0, {T}]: kernel decays slower than w^(1/2), bound is grid-sensitive")
    return HsBound(value=float(np.sqrt(fine * T)), gamma_sq=fine, near_inadmissible=near_inadmissible)


def volumetric_projector() -> np.ndarray:
    m = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    return np.outer(m, m) / 3.0


def deviatoric_projector() -> np.ndarray:
    return np.eye(6) - volumetric_projector()


class IsotropicModuli(BaseModel):
    """Isotropic elasticity ℂ = 3κ P_vol + 2μ P_dev in Mandel notation."""
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(..., gt=0, description="Bulk modulus")
    mu: float = Field(..., ge=0, description="Shear modulus")

    @property
    def matrix(self) -> np.ndarray:
        return 3.0 * self.kappa * volumetric_projector() + 2.0 * self.mu * deviatoric_projector()


def isotropic(kappa: float, mu: float) -> IsotropicModuli:
    """Isotropic moduli; the Mandel xy diagonal entry equals 2μ."""
    return IsotropicModuli(kappa=kappa, mu=mu)
