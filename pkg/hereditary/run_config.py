"""
Run configuration: one JSON document describing space, basis, oracle,
reduction and test programs of a command.
"""
import logging
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from hereditary.config import settings
from hereditary.core.kernels import Kernel, PronyKernel
from hereditary.core.models import HistorySpace
from hereditary.core.operator import SlsParams
from hereditary.errors import ConfigError
from hereditary.rve.sampling import GammaLaw, GrainSampler

logger = logging.getLogger(__name__)

_STRICT = ConfigDict(extra="forbid", populate_by_name=True)

DEFAULT_SPECTRUM_SWEEP = [5, 11, 21, 31, 41, 63]


class SpaceConfig(BaseModel):
    model_config = _STRICT

    T: float = Field(..., gt=0, description="History duration")
    n: int = Field(default_factory=lambda: settings.DEFAULT_GRID_INTERVALS, ge=2)
    lambda0: float = Field(..., gt=0, description="Weight decay rate")
    quadrature: Literal["trapezoid", "simpson"] = Field(default_factory=lambda: settings.DEFAULT_QUADRATURE)

    @model_validator(mode="after")
    def check_parity(self):
        if self.quadrature == "simpson" and self.n % 2:
            raise ValueError(f"Simpson quadrature needs an even n, got {self.n}")
        return self

    def build(self) -> HistorySpace:
        return HistorySpace.build(T=self.T, n=self.n, lambda0=self.lambda0, quadrature=self.quadrature)


class BasisConfig(BaseModel):
    model_config = _STRICT

    m: int = Field(..., ge=0, description="Half-width; M = 2m + 1")
    sweep: List[int] = Field(default_factory=lambda: list(DEFAULT_SPECTRUM_SWEEP), description="M values of the spectrum sweep")
    k_max: int = Field(6, ge=1, description="Singular values reported per M")

    @field_validator("sweep")
    @classmethod
    def check_sweep(cls, v):
        if not v or any(M < 1 or M % 2 == 0 for M in v):
            raise ValueError("sweep must list odd sizes M >= 1")
        return sorted(v)


class SlsOracleConfig(BaseModel):
    model_config = _STRICT

    oracle: Literal["sls"] = "sls"
    C0: float = Field(..., gt=0)
    C1: float = Field(..., ge=0)
    lam: float = Field(..., gt=0, alias="lambda")
    closed_form: bool = Field(False, description="Assemble S_M from closed-form integrals instead of sampling")

    def params(self, space: SpaceConfig) -> SlsParams:
        return SlsParams(C0=self.C0, C1=self.C1, lam=self.lam, lambda0=space.lambda0, T=space.T)


class PronyOracleConfig(BaseModel):
    model_config = _STRICT

    oracle: Literal["prony"] = "prony"
    kernel: PronyKernel


class KernelOracleConfig(BaseModel):
    model_config = _STRICT

    oracle: Literal["kernel"] = "kernel"
    modulus: float = Field(..., gt=0)
    kernel: Kernel


class LayerConfig(BaseModel):
    model_config = _STRICT

    modulus: float = Field(..., gt=0)
    kernel: Optional[Kernel] = None


class RveOracleConfig(BaseModel):
    model_config = _STRICT

    oracle: Literal["rve"] = "rve"
    geometry: Literal["cube", "laminate", "file"] = "cube"
    grains_per_side: int = Field(2, ge=1)
    elems_per_grain_side: int = Field(2, ge=1)
    seed: int = Field(0, ge=0)
    gamma_visc: GammaLaw = GammaLaw(mean=2.0, shape=2.0)
    gamma_tau: GammaLaw = GammaLaw(mean=1.0, shape=2.0)
    branches: int = Field(3, ge=1)
    mu_inf: float = Field(1.0, ge=0)
    kappa: float = Field(5.0 / 3.0, gt=0)
    homogeneous: Optional[PronyKernel] = Field(None, description="Use this shear relaxation modulus in every grain")
    layers: List[LayerConfig] = []
    fractions: List[float] = []
    assembly_file: Optional[str] = None
    channel: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def check_geometry(self):
        if self.geometry == "laminate" and (not self.layers or len(self.layers) != len(self.fractions)):
            raise ValueError("laminate geometry needs layers and one fraction per layer")
        if self.geometry == "file":
            if self.assembly_file is None:
                raise ValueError("file geometry needs assembly_file")
            if not Path(self.assembly_file).exists():
                raise ValueError(f"assembly_file not found: {self.assembly_file}")
        return self

    def sampler(self) -> GrainSampler:
        return GrainSampler(
            seed=self.seed, gamma_visc=self.gamma_visc, gamma_tau=self.gamma_tau,
            branches=self.branches, mu_inf=self.mu_inf, kappa=self.kappa,
        )


OracleConfig = Annotated[
    Union[SlsOracleConfig, PronyOracleConfig, KernelOracleConfig, RveOracleConfig],
    Field(discriminator="oracle"),
]


class ReductionConfig(BaseModel):
    model_config = _STRICT

    N_list: List[int] = Field(default_factory=lambda: [1, 2, 4, 8, 16])
    fourier_baseline: bool = True

    @field_validator("N_list")
    @classmethod
    def check_ranks(cls, v):
        if not v or any(N < 1 for N in v):
            raise ValueError("N_list must hold ranks >= 1")
        return sorted(set(v))


class ProgramSelection(BaseModel):
    model_config = _STRICT

    step: bool = True
    parabolic: bool = False
    parabolic_literal: bool = False
    program_file: Optional[str] = None

    @field_validator("program_file")
    @classmethod
    def check_file(cls, v):
        if v is not None and not Path(v).exists():
            raise ValueError(f"program_file not found: {v}")
        return v


class RunConfig(BaseModel):
    """Validated run configuration."""
    model_config = _STRICT

    space: SpaceConfig
    basis: BasisConfig
    oracle: OracleConfig
    reduction: Optional[ReductionConfig] = None
    tests: ProgramSelection = ProgramSelection()
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    seed: Optional[int] = Field(None, ge=0, description="Overrides the RVE seed")

    @model_validator(mode="after")
    def check_ranks(self):
        M = 2 * self.basis.m + 1
        if self.reduction is not None and max(self.reduction.N_list) > M:
            raise ValueError(f"N_list holds ranks above M = 2m + 1 = {M}")
        return self

    @property
    def M(self) -> int:
        return 2 * self.basis.m + 1


def _format_errors(e: ValidationError) -> str:
    return "; ".join(f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors())


def parse_run_config(text: str) -> RunConfig:
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {_format_errors(e)}") from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a run configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    config = parse_run_config(path.read_text())
    logger.debug(f"Loaded run configuration from {path}")
    return config


def with_overrides(
    config: RunConfig,
    output_dir: Optional[str] = None,
    seed: Optional[int] = None,
    paper_scale: bool = False,
) -> RunConfig:
    """
    Apply command-line overrides and re-validate.

    paper_scale switches an RVE run to 4³ grains of 2³ hexahedra, T = 5 and m = 20.
    """
    data = config.model_dump(by_alias=True)
    if output_dir is not None:
        data["output_dir"] = output_dir
    if seed is not None:
        data["seed"] = seed
    if data.get("seed") is not None and data["oracle"]["oracle"] == "rve":
        data["oracle"]["seed"] = data["seed"]
    if paper_scale:
        if data["oracle"]["oracle"] != "rve":
            raise ConfigError("--paper-scale applies to RVE runs only")
        data["oracle"].update(grains_per_side=4, elems_per_grain_side=2)
        data["space"]["T"] = 5.0
        data["basis"]["m"] = 20
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration after overrides: {_format_errors(e)}") from e
