"""
Random grain properties for polycrystalline RVEs.

Each grain carries W Maxwell branches with viscosities η and relaxation
times τ drawn from Gamma laws; the branch moduli are μ = η/τ.
"""
import logging
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from hereditary.core.kernels import PronyBranch, PronyKernel
from hereditary.core.models import FloatArray
from hereditary.errors import ConfigError

logger = logging.getLogger(__name__)


def gamma_sample(mean: float, shape: float, rng: np.random.Generator, size=None):
    """Gamma draw with the given mean and shape (scale = mean/shape)."""
    if mean <= 0 or shape <= 0:
        raise ConfigError(f"Gamma law needs positive mean and shape, got mean={mean}, shape={shape}")
    return rng.gamma(shape, scale=mean / shape, size=size)


class GammaLaw(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mean: float = Field(..., gt=0)
    shape: float = Field(..., gt=0)

    @property
    def scale(self) -> float:
        return self.mean / self.shape

    def pdf(self, x) -> np.ndarray:
        return stats.gamma(a=self.shape, scale=self.scale).pdf(x)


class GrainDraws(BaseModel):
    """Sampled viscosities and relaxation times, one row per grain."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eta: FloatArray
    tau: FloatArray

    @property
    def mu(self) -> np.ndarray:
        return self.eta / self.tau


class GrainSampler(BaseModel):
    """Seeded sampler of grain relaxation moduli."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(0, ge=0)
    gamma_visc: GammaLaw = GammaLaw(mean=2.0, shape=2.0)
    gamma_tau: GammaLaw = GammaLaw(mean=1.0, shape=2.0)
    branches: int = Field(3, ge=1, description="Maxwell branches per grain")
    mu_inf: float = Field(1.0, ge=0, description="Long-term shear modulus")
    kappa: float = Field(5.0 / 3.0, gt=0, description="Bulk modulus")

    def sample(self, n_grains: int) -> GrainDraws:
        """
        Draw η and τ for every grain.

        All viscosities are drawn before all relaxation times, so the result
        depends only on the seed and the grain count.
        """
        if n_grains < 1:
            raise ConfigError("Need at least one grain")
        rng = np.random.default_rng(self.seed)
        shape = (n_grains, self.branches)
        eta = gamma_sample(self.gamma_visc.mean, self.gamma_visc.shape, rng, size=shape)
        tau = gamma_sample(self.gamma_tau.mean, self.gamma_tau.shape, rng, size=shape)
        logger.debug(f"Sampled {n_grains} grains x {self.branches} branches with seed {self.seed}")
        return GrainDraws(eta=eta, tau=tau)

    def kernels(self, draws: GrainDraws) -> List[PronyKernel]:
        """Shear relaxation moduli R(t) = μ_inf + Σ_i (η_i/τ_i) e^(-t/τ_i), one per grain."""
        return [
            PronyKernel(
                mu_inf=self.mu_inf,
                branches=tuple(PronyBranch(mu=float(e / t), tau=float(t)) for e, t in zip(eta_row, tau_row)),
            )
            for eta_row, tau_row in zip(draws.eta, draws.tau)
        ]


def histogram(values, law: GammaLaw, bins: int = 20) -> np.ndarray:
    """
    Histogram rows (left, right, count, density, gamma_pdf) of sampled values.

    gamma_pdf is the law's density at the bin centre.
    """
    data = np.ravel(np.asarray(values, dtype=float))
    counts, edges = np.histogram(data, bins=bins)
    width = np.diff(edges)
    density = counts / (data.size * width)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return np.column_stack([edges[:-1], edges[1:], counts, density, law.pdf(centres)])
