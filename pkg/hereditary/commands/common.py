"""
Shared plumbing of the subcommands: spaces, oracles, operator matrices,
test histories and the identification step used by several commands.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from hereditary.core.diagnostics import error_report
from hereditary.core.history import step_history
from hereditary.core.kernels import ScalarKernel
from hereditary.core.models import BasisSpec, HistorySample, HistorySpace
from hereditary.core.operator import SlsParams, sls_spectrum, step_exact, truncation_error_surrogate
from hereditary.core.reduce import (
    OperatorMatrix, ReducedModel, assemble_closed_form, assemble_from_oracle, fourier_truncate,
    singular_values, svd_truncate
)
from hereditary.errors import ConfigError, DimensionError
from hereditary.oracles.analytic import make_kernel_oracle, make_prony_oracle, make_sls_oracle
from hereditary.oracles.base import BaseOracle, inelastic_history
from hereditary.rve.mesh import LayerMaterial, build_grain_cube, build_laminate, load_assembly
from hereditary.rve.model import RveModel
from hereditary.rve.solver import RveOracle
from hereditary.run_config import ReductionConfig, RunConfig, RveOracleConfig, SlsOracleConfig
from hereditary.utils.files import RunReport, read_csv, write_csv, write_model

logger = logging.getLogger(__name__)


def output_dir(config: RunConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def new_report(command: str, config: RunConfig) -> RunReport:
    return RunReport(command=command, config=config.model_dump(mode="json", by_alias=True))


def sls_params(config: RunConfig) -> Optional[SlsParams]:
    """Parameters of an SLS run, None for any other oracle."""
    if isinstance(config.oracle, SlsOracleConfig):
        return config.oracle.params(config.space)
    return None


def analytic_kernel(config: RunConfig) -> Optional[Tuple[ScalarKernel, float]]:
    """(kernel, modulus) of an analytic oracle, None for RVE runs."""
    spec = config.oracle
    if isinstance(spec, SlsOracleConfig):
        p = spec.params(config.space)
        return p.kernel, p.C0
    if spec.oracle == "prony":
        return spec.kernel, spec.kernel.instantaneous_modulus
    if spec.oracle == "kernel":
        return spec.kernel, spec.modulus
    return None


def build_rve(spec: RveOracleConfig) -> RveModel:
    if spec.geometry == "laminate":
        layers = [LayerMaterial(modulus=layer.modulus, kernel=layer.kernel) for layer in spec.layers]
        return build_laminate(layers, spec.fractions)
    if spec.geometry == "file":
        return load_assembly(spec.assembly_file)
    return build_grain_cube(spec.grains_per_side, spec.elems_per_grain_side, spec.sampler(), homogeneous=spec.homogeneous)


def build_oracle(config: RunConfig, space: HistorySpace, rve: Optional[RveModel] = None) -> BaseOracle:
    """Oracle described by the configuration, on the space grid."""
    spec = config.oracle
    grid = space.grid
    if isinstance(spec, SlsOracleConfig):
        return make_sls_oracle(spec.params(config.space), grid)
    if spec.oracle == "prony":
        return make_prony_oracle(spec.kernel, grid)
    if spec.oracle == "kernel":
        return make_kernel_oracle(spec.modulus, spec.kernel, grid)
    model = rve if rve is not None else build_rve(spec)
    return RveOracle(model, grid, channel=spec.channel, oracle_id=f"rve-{model.label}")


def assemble(config: RunConfig, b: BasisSpec, oracle: Optional[BaseOracle]) -> OperatorMatrix:
    """Closed-form S_M for SLS runs that ask for it, sampled S_M otherwise."""
    p = sls_params(config)
    if p is not None and config.oracle.closed_form:
        return assemble_closed_form(p, b)
    if oracle is None:
        raise ConfigError("Sampled assembly needs an oracle")
    return assemble_from_oracle(oracle, b)


def exact_singular_values(config: RunConfig, count: int) -> Optional[np.ndarray]:
    """Analytic s_1..s_count for SLS runs."""
    p = sls_params(config)
    if p is None:
        return None
    return np.asarray(sls_spectrum(p, count).s)


def history_from_program(values, space: HistorySpace) -> HistorySample:
    """History at t = T of a program sampled on the space grid."""
    return HistorySample(grid=space.grid, values=np.asarray(values, dtype=float)[::-1])


def program_histories(config: RunConfig, space: HistorySpace) -> Dict[str, HistorySample]:
    """
    Test histories at t = T keyed by name.

    step is 1 for τ <= T/2; parabolic follows ε(t) = (4/T²) t (T - t);
    parabolic_literal follows ε(t) = 4/25 t (1 - t); a program file holds
    (t, strain) rows on the run grid and is keyed by its stem.
    """
    grid, T = space.grid, space.T
    t = grid.nodes
    out: Dict[str, HistorySample] = {}
    if config.tests.step:
        out["step"] = step_history(grid, 0.5 * T)
    if config.tests.parabolic:
        out["parabolic"] = history_from_program(4.0 / T ** 2 * t * (T - t), space)
    if config.tests.parabolic_literal:
        out["parabolic_literal"] = history_from_program(4.0 / 25.0 * t * (1.0 - t), space)
    if config.tests.program_file is not None:
        rows = read_csv(config.tests.program_file)
        if rows.shape[0] != grid.n + 1 or rows.shape[1] < 2 or not np.allclose(rows[:, 0], t, atol=1e-9 * T):
            raise DimensionError(f"Program file {config.tests.program_file} is not sampled on the run grid")
        out[Path(config.tests.program_file).stem] = history_from_program(rows[:, 1], space)
    if not out:
        raise ConfigError("No test program selected")
    return out


def reference_inelastic(
    name: str, f: HistorySample, config: RunConfig, space: HistorySpace, oracle: BaseOracle, modulus: float
) -> HistorySample:
    """Exact inelastic strain of a test history: closed form for the SLS step, the oracle otherwise."""
    p = sls_params(config)
    if p is not None and name == "step":
        return step_exact(p, space.grid)[0]
    return inelastic_history(oracle, f, modulus)


def identify_models(config: RunConfig, S: OperatorMatrix, out: Path, report: RunReport) -> Dict[int, ReducedModel]:
    """
    Optimal (and baseline) reductions of S_M for every configured rank.

    Writes spectrum_identify.csv, model_N<N>.json and fourier_N<N>.json and
    appends the error certificates to the report.
    """
    reduction = config.reduction or ReductionConfig(N_list=[S.M])
    s = singular_values(S)
    write_csv(out / "spectrum_identify.csv", ["k", "s_Mk"], [np.arange(1, S.M + 1), s], int_columns=[0])
    report.tables.append("spectrum_identify.csv")

    exact = exact_singular_values(config, S.M)
    sampling_error = None
    analytic = analytic_kernel(config)
    if analytic is not None:
        sampling_error = truncation_error_surrogate(analytic[0], S.basis, analytic[1])
        logger.info(f"Sampling-error surrogate ‖S - S_M‖ ≈ {sampling_error:.6e}")

    models: Dict[int, ReducedModel] = {}
    A = np.asarray(S.matrix)
    for N in reduction.N_list:
        if N > S.M:
            raise DimensionError(f"Rank {N} exceeds M={S.M}")
        rm = svd_truncate(S, N)
        residual = float(np.linalg.norm(A - np.asarray(rm.Psi) @ np.asarray(rm.Phi).T, 2))
        logger.info(f"N={N}: residual ‖S_M - ΨΦᵀ‖₂ = {residual:.3e}, s_(M,N+1) = {0.0 if N == S.M else s[N]:.3e}")
        name = f"model_N{N}.json"
        write_model(out / name, rm)
        report.tables.append(name)
        if reduction.fourier_baseline:
            name = f"fourier_N{N}.json"
            write_model(out / name, fourier_truncate(S, N))
            report.tables.append(name)
        certificate = error_report(s, S.M, N, S.basis.space.T, exact=exact, sampling_error=sampling_error)
        report.error_reports.append(certificate.model_dump())
        models[N] = rm
    report.spectrum["identify"] = {"M": S.M, "provenance": S.provenance, "C_eff": S.modulus, "s": s.tolist()}
    return models


def basis_spec(config: RunConfig, space: HistorySpace, m: Optional[int] = None) -> BasisSpec:
    return BasisSpec(m=config.basis.m if m is None else m, space=space)
