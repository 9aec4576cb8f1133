"""
Identification and optimal reduction of the history operator.

The operator is sampled in the trig-exponential basis as the M×M matrix S_M.
Its best rank-N approximation Ψ Φᵀ comes from the eigenvectors of S_MᵀS_M,
computed by one-sided Jacobi on S_M itself; the N numbers q = Φᵀ project(ε_t)
are the internal variables of the reduced hereditary law and Ψ decodes them
into an inelastic-strain history.

Stress readout at τ = 0 is anchored on the ramp history u(τ) = 1 - τ/T:
ε_t - ε(t)u has no jump at the ends of [0, T], so its projection carries no
Gibbs overshoot into (S ε_t)(0), and (S u)(0) itself is measured exactly.
"""
import logging
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.linalg import toeplitz

from hereditary.core.history import basis_matrix, project, ramp_history, reconstruct
from hereditary.core.jacobi import svd_jacobi
from hereditary.core.models import BasisSpec, FloatArray, HistorySample
from hereditary.core.operator import SlsParams
from hereditary.errors import DimensionError, NumericsError
from hereditary.oracles.base import (
    BaseOracle, OracleResponse, StrainProgram, instantaneous_modulus, ramp_response_at_zero, sample_basis_responses
)

logger = logging.getLogger(__name__)

RANK_CUTOFF = 1e-12


class OperatorMatrix(BaseModel):
    """Coordinate matrix S_M,ij = (e_Σ(i), S e_Σ(j))_H."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: FloatArray
    basis: BasisSpec
    provenance: str = Field(..., description="Oracle id or closed form")
    modulus: float = Field(..., gt=0, description="Instantaneous modulus C_eff")
    response_at_zero: Optional[FloatArray] = Field(None, description="Unprojected values (S e_j)(0)")
    ramp_at_zero: Optional[float] = Field(None, description="(S u)(0) for the ramp u(τ) = 1 - τ/T")

    @model_validator(mode="after")
    def check_matrix(self):
        M = self.basis.M
        if self.matrix.shape != (M, M):
            raise ValueError(f"Operator matrix has shape {self.matrix.shape}, basis needs ({M}, {M})")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("Operator matrix has non-finite entries")
        if self.response_at_zero is not None and self.response_at_zero.shape != (M,):
            raise ValueError(f"response_at_zero has shape {self.response_at_zero.shape}, expected ({M},)")
        return self

    @property
    def M(self) -> int:
        return self.basis.M


class ReducedModel(BaseModel):
    """
    Rank-N hereditary law S_{M,N} = Ψ Φᵀ in basis coordinates.

    readout holds ψ_k(0) from unprojected responses when those were
    available; otherwise the reconstruction of Ψ is read at τ = 0.
    ramp_residual is (S u)(0) - Σ_k ψ_k(0)(u, φ_k)_H, the part of the ramp
    response the rank-N law misses.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    N: int = Field(..., ge=1)
    s: FloatArray
    Phi: FloatArray
    Psi: FloatArray
    basis: BasisSpec
    modulus: float = Field(..., gt=0)
    kind: Literal["optimal", "fourier"] = "optimal"
    readout: Optional[FloatArray] = None
    ramp_residual: float = 0.0
    provenance: str = ""

    @model_validator(mode="after")
    def check_invariants(self):
        M, N = self.basis.M, self.N
        if N > M:
            raise ValueError(f"Rank N={N} exceeds M={M}")
        if self.s.shape != (N,) or self.Phi.shape != (M, N) or self.Psi.shape != (M, N):
            raise ValueError("Reduced model arrays do not match (M, N)")
        if self.readout is not None and self.readout.shape != (N,):
            raise ValueError(f"Readout has shape {self.readout.shape}, expected ({N},)")
        if not np.isfinite(self.ramp_residual):
            raise ValueError("Ramp residual is not finite")
        if np.any(self.s < 0) or np.any(np.diff(self.s) > 1e-12 * max(self.s[0], 1.0)):
            raise ValueError("Singular values must be non-negative and non-increasing")
        scale = max(float(self.s[0]), 1.0)
        if np.max(np.abs(self.Phi.T @ self.Phi - np.eye(N))) > 1e-10:
            raise ValueError("Encoder directions are not orthonormal")
        if np.max(np.abs(np.linalg.norm(self.Psi, axis=0) - self.s)) > 1e-10 * scale:
            raise ValueError("Decoder column norms differ from the singular values")
        if self.kind == "optimal":
            gram = self.Psi.T @ self.Psi
            off = gram - np.diag(np.diag(gram))
            if np.max(np.abs(off), initial=0.0) > 1e-10 * scale * scale:
                raise ValueError("Decoder directions are not mutually orthogonal")
        return self

    @property
    def M(self) -> int:
        return self.basis.M

    def readout_values(self) -> np.ndarray:
        """ψ_k(0) for k = 1..N."""
        if self.readout is not None:
            return np.asarray(self.readout)
        return basis_matrix(self.basis)[0] @ self.Psi


def assemble_from_oracle(oracle: BaseOracle, b: BasisSpec) -> OperatorMatrix:
    """
    Sample S_M from an oracle: M basis evaluations, one ramp evaluation, and a
    step probe when the oracle does not expose its instantaneous modulus.
    """
    modulus = instantaneous_modulus(oracle)
    responses = sample_basis_responses(oracle, b, modulus=modulus)
    matrix = np.column_stack([project(p, b) for p in responses])
    at_zero = np.array([p.values[0] for p in responses])
    ramp = ramp_response_at_zero(oracle, modulus)
    logger.info(f"Assembled S_M (M={b.M}) from '{oracle.oracle_id}', ‖S_M‖_F = {np.linalg.norm(matrix):.6g}")
    return OperatorMatrix(
        matrix=matrix, basis=b, provenance=oracle.oracle_id, modulus=modulus,
        response_at_zero=at_zero, ramp_at_zero=ramp,
    )


def _trig_coefficients(m: int) -> np.ndarray:
    """G with g_n(τ) = Σ_p G[n, p] e^(i ω_p τ), ω_p = 2πp/T, p = -m..m."""
    M = 2 * m + 1
    G = np.zeros((M, M), dtype=complex)
    G[m, m] = 1.0
    for n in range(1, m + 1):
        G[m - n, m + n] = G[m - n, m - n] = 0.5
        G[m + n, m + n] = 0.5 / 1j
        G[m + n, m - n] = -0.5 / 1j
    return G


def _exp_integral(y: np.ndarray, T: float) -> np.ndarray:
    """∫₀ᵀ e^(yτ) dτ for complex y; purely real arguments go through expm1."""
    y = np.asarray(y, dtype=complex)
    out = np.empty(y.shape, dtype=complex)
    real = y.imag == 0
    x = y.real[real]
    tiny = np.abs(x) * T < 1e-12
    out_real = np.full(x.shape, T, dtype=float)
    out_real[~tiny] = np.expm1(x[~tiny] * T) / x[~tiny]
    out[real] = out_real
    z = y[~real]
    out[~real] = (np.exp(z * T) - 1.0) / z
    return out


def _double_integrals(freqs: np.ndarray, alpha: float, T: float) -> np.ndarray:
    """I(u, v) = ∫₀ᵀ e^(iuτ) ∫_τ^T e^(-α(ρ-τ)) e^(ivρ) dρ dτ for all frequency pairs."""
    u = freqs[:, None]
    v = freqs[None, :]
    if abs(alpha) * T < 1e-12:
        alpha = 0.0
    z = 1j * v - alpha
    # A = e^(zT) ∫₀ᵀ e^((iu+α)τ) dτ without forming e^(αT)
    with np.errstate(divide="ignore", invalid="ignore"):
        A = (np.exp(1j * (u + v) * T) - np.exp(z * T)) / (alpha + 1j * u)
    zero_u = np.broadcast_to(u == 0, A.shape)
    if alpha == 0.0:
        A_u0 = T * np.exp(z * T)
    else:
        A_u0 = np.exp(1j * v * T) * (-np.expm1(-alpha * T)) / alpha
    A = np.where(zero_u, np.broadcast_to(A_u0, A.shape), A)

    E_uv = _exp_integral(1j * (u + v), T)
    with np.errstate(divide="ignore", invalid="ignore"):
        I = (A - E_uv) / z
    if alpha == 0.0:
        # z = 0 on the v = 0 column: ∫₀ᵀ e^(iuτ)(T - τ) dτ
        y = 1j * freqs
        with np.errstate(divide="ignore", invalid="ignore"):
            first_moment = T * np.exp(y * T) / y - (np.exp(y * T) - 1.0) / (y * y)
        first_moment = np.where(freqs == 0, 0.5 * T * T, first_moment)
        col = int(np.flatnonzero(freqs == 0)[0])
        I[:, col] = T * _exp_integral(y, T) - first_moment
    return I


def _basis_scales(m: int, T: float) -> np.ndarray:
    c = np.full(2 * m + 1, np.sqrt(2.0 / T))
    c[m] = np.sqrt(1.0 / T)
    return c


def sls_response_at_zero(p: SlsParams, b: BasisSpec) -> np.ndarray:
    """(S e_j)(0) = k c_j ∫₀ᵀ e^(-αρ) g_j(ρ) dρ in closed form."""
    if not (np.isclose(b.space.T, p.T, rtol=1e-12) and np.isclose(b.space.lambda0, p.lambda0, rtol=1e-12)):
        raise DimensionError("Basis space does not match the SLS parameters")
    m, T = b.m, p.T
    freqs = 2.0 * np.pi * np.arange(-m, m + 1) / T
    G = _trig_coefficients(m)
    integrals = _exp_integral(1j * freqs - p.alpha, T)
    return p.k * _basis_scales(m, T) * np.real(G @ integrals)


def sls_ramp_at_zero(p: SlsParams) -> float:
    """(S u)(0) = k ∫₀ᵀ e^(-λρ)(1 - ρ/T) dρ = kT (x - 1 + e^(-x))/x², x = λT."""
    x = p.lam * p.T
    if x < 1e-3:
        ratio = 0.5 - x / 6.0 + x * x / 24.0
    else:
        ratio = (x + np.expm1(-x)) / (x * x)
    return float(p.k * p.T * ratio)


def assemble_closed_form(p: SlsParams, b: BasisSpec) -> OperatorMatrix:
    """
    S_M for the standard linear solid from exact exponential-trig integrals.

    With the envelope absorbed, S_M,ij = k c_i c_j ∫∫_{τ<ρ} g_i(τ) e^(-α(ρ-τ)) g_j(ρ),
    g the cos/1/sin factors; no quadrature is involved.
    """
    if not (np.isclose(b.space.T, p.T, rtol=1e-12) and np.isclose(b.space.lambda0, p.lambda0, rtol=1e-12)):
        raise DimensionError("Basis space does not match the SLS parameters")
    m, T = b.m, p.T
    freqs = 2.0 * np.pi * np.arange(-m, m + 1) / T
    G = _trig_coefficients(m)
    I = _double_integrals(freqs, p.alpha, T)
    c = _basis_scales(m, T)
    matrix = p.k * c[:, None] * np.real(G @ I @ G.T) * c[None, :]
    logger.debug(f"Closed-form S_M for α={p.alpha}, M={b.M}")
    return OperatorMatrix(
        matrix=matrix, basis=b, provenance="closed-form-sls", modulus=p.C0,
        response_at_zero=sls_response_at_zero(p, b), ramp_at_zero=sls_ramp_at_zero(p),
    )


def restrict(S: OperatorMatrix, m: int) -> OperatorMatrix:
    """
    S_M for a smaller half-width m.

    Entries (e_i, S e_j)_H do not depend on M, so the smaller matrix is the
    central principal block and no further oracle evaluations are needed.
    """
    if not 0 <= m <= S.basis.m:
        raise DimensionError(f"Half-width {m} outside 0..{S.basis.m}")
    keep = slice(S.basis.m - m, S.basis.m + m + 1)
    at_zero = None if S.response_at_zero is None else np.asarray(S.response_at_zero)[keep]
    return OperatorMatrix(
        matrix=np.asarray(S.matrix)[keep, keep], basis=BasisSpec(m=m, space=S.basis.space),
        provenance=S.provenance, modulus=S.modulus, response_at_zero=at_zero, ramp_at_zero=S.ramp_at_zero,
    )


def singular_values(S: OperatorMatrix) -> np.ndarray:
    """All M singular values s_{M,k} of S_M, non-increasing."""
    s, _, _ = svd_jacobi(S.matrix)
    return s


def _check_rank(S: OperatorMatrix, N: int) -> None:
    if not 1 <= N <= S.M:
        raise DimensionError(f"Rank N={N} outside 1..{S.M}")


def svd_truncate(S: OperatorMatrix, N: int) -> ReducedModel:
    """
    Optimal rank-N reduction of S_M.

    Args:
        S: Sampled operator matrix
        N: Rank, 1 <= N <= M

    Returns:
        ReducedModel with Φ the top-N eigenvectors of S_MᵀS_M and Ψ = S_M Φ

    Raises:
        NumericsError: The decomposition violates the reduced-model invariants
    """
    _check_rank(S, N)
    s, W, V = svd_jacobi(S.matrix)
    s, Phi, Psi = s[:N], V[:, :N], W[:, :N]

    cut = s <= RANK_CUTOFF * s[0]
    if s[0] > 0 and np.any(cut):
        logger.warning(f"Rank cutoff: {int(cut.sum())} of {N} singular values below {RANK_CUTOFF:g}·s_1")
    s = np.where(cut, 0.0, s)
    Psi = np.where(cut[None, :], 0.0, Psi)

    readout, ramp_residual = None, 0.0
    if S.response_at_zero is not None:
        readout = np.where(cut, 0.0, np.asarray(S.response_at_zero) @ Phi)
        if S.ramp_at_zero is not None:
            ramp_coefficients = Phi.T @ project(ramp_history(S.basis.space.grid), S.basis)
            ramp_residual = float(S.ramp_at_zero - readout @ ramp_coefficients)
    logger.debug(f"Rank-{N} reduction, leading singular values {s[:3]}, ramp residual {ramp_residual:.3e}")
    try:
        return ReducedModel(
            N=N, s=s, Phi=Phi, Psi=Psi, basis=S.basis, modulus=S.modulus, kind="optimal",
            readout=readout, ramp_residual=ramp_residual, provenance=S.provenance,
        )
    except ValidationError as e:
        raise NumericsError(f"Rank-{N} reduction of '{S.provenance}' is inconsistent: {e}") from e


def fourier_order(m: int) -> np.ndarray:
    """Signed indices 0, 1, -1, 2, -2, … used by the Fourier baseline."""
    order = [0]
    for n in range(1, m + 1):
        order.extend([n, -n])
    return np.array(order)


def fourier_truncate(S: OperatorMatrix, N: int) -> ReducedModel:
    """Galerkin restriction P S_M P onto the first N basis functions in Fourier order."""
    _check_rank(S, N)
    M, m = S.M, S.basis.m
    Phi = np.zeros((M, N))
    Phi[fourier_order(m)[:N] + m, np.arange(N)] = 1.0
    A = np.asarray(S.matrix)
    Psi = Phi @ (Phi.T @ A @ Phi)
    norms = np.linalg.norm(Psi, axis=0)
    # sort columns so the recorded norms are non-increasing
    order = np.argsort(-norms, kind="stable")
    return ReducedModel(
        N=N, s=norms[order], Phi=Phi[:, order], Psi=Psi[:, order], basis=S.basis,
        modulus=S.modulus, kind="fourier", readout=None, provenance=S.provenance,
    )


def _check_basis(rm: ReducedModel, b: BasisSpec) -> None:
    if b != rm.basis:
        raise DimensionError("Basis does not match the reduced model")


def encode(rm: ReducedModel, f: HistorySample, b: BasisSpec) -> np.ndarray:
    """Internal variables q = Φᵀ project(f)."""
    _check_basis(rm, b)
    return np.asarray(rm.Phi).T @ project(f, b)


def decode(rm: ReducedModel, q, b: BasisSpec) -> HistorySample:
    """Inelastic-strain history Σ_k q_k ψ_k."""
    _check_basis(rm, b)
    q = np.asarray(q, dtype=float)
    if q.shape != (rm.N,):
        raise DimensionError(f"Internal variables have shape {q.shape}, model needs ({rm.N},)")
    return reconstruct(np.asarray(rm.Psi) @ q, b)


def apply_reduced(rm: ReducedModel, f: HistorySample, b: BasisSpec) -> HistorySample:
    """Approximate inelastic strain S_{M,N} f."""
    return decode(rm, encode(rm, f, b), b)


def _check_program(rm: ReducedModel, program: StrainProgram) -> None:
    if program.grid != rm.basis.space.grid:
        raise DimensionError(f"Program grid {program.grid!r} differs from the model grid")


def internal_variables(rm: ReducedModel, program: StrainProgram) -> np.ndarray:
    """
    q_k(t_i) = (ε_{t_i}, φ_k)_H for every node, an (n+1) × N array.

    Row i uses the zero-padded history ε_{t_i}(τ) = ε(t_i - τ).
    """
    _check_program(rm, program)
    eps = np.asarray(program.values)
    first_row = np.zeros_like(eps)
    first_row[0] = eps[0]
    histories = toeplitz(eps, first_row)
    b = rm.basis
    weighted_basis = b.space.measure()[:, None] * basis_matrix(b)
    return histories @ weighted_basis @ np.asarray(rm.Phi)


def stress_from_internal(rm: ReducedModel, q, program: StrainProgram) -> np.ndarray:
    """
    σ(t_i) = C((1 - r) ε(t_i) - Σ_k ψ_k(0) q_k(t_i)), r the ramp residual.

    Splitting ε_t = ε(t)u + (ε_t - ε(t)u) and reading the first part exactly
    gives (S ε_t)(0) ≈ ε(t)(S u)(0) + Σ_k ψ_k(0)(q_k - ε(t)(u, φ_k)_H).
    """
    _check_program(rm, program)
    q = np.asarray(q, dtype=float)
    if q.shape != (program.grid.n + 1, rm.N):
        raise DimensionError(f"Internal variables have shape {q.shape}")
    eps = np.asarray(program.values)
    return rm.modulus * ((1.0 - rm.ramp_residual) * eps - q @ rm.readout_values())


def predict_stress(rm: ReducedModel, program: StrainProgram) -> OracleResponse:
    """Stress evolution of the reduced hereditary law σ_t = C(I - S_{M,N})ε_t at τ = 0."""
    stress = stress_from_internal(rm, internal_variables(rm, program), program)
    return OracleResponse(grid=program.grid, stress=stress, oracle_id=f"reduced-{rm.kind}-N{rm.N}", evaluations=0)
