"""
RVE geometries: series laminates, periodic grain cubes and imported assemblies.
"""
import itertools
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from hereditary.core.kernels import PronyKernel, ScalarKernel, deviatoric_projector, volumetric_projector
from hereditary.errors import ConfigError
from hereditary.rve.model import RveModel
from hereditary.rve.sampling import GrainSampler

logger = logging.getLogger(__name__)

# trilinear hexahedron corners as (x, y, z) offsets
HEX_CORNERS = np.array([
    [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
])
GAUSS_POINTS = np.array(list(itertools.product((-1.0, 1.0), repeat=3))) / np.sqrt(3.0)


class LayerMaterial(BaseModel):
    """Scalar layer law σ = C ε - K * ε."""
    model_config = ConfigDict(frozen=True)

    modulus: float = Field(..., gt=0)
    kernel: Optional[ScalarKernel] = None


LayerLike = Union[LayerMaterial, Tuple[float, Optional[ScalarKernel]]]


def _pad_branches(terms: List[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """Stack per-point (amplitudes, rates); missing branches get zero amplitude and unit rate."""
    W = max((len(r) for _, r in terms), default=0)
    amps = np.zeros((len(terms), W))
    rates = np.ones((len(terms), W))
    for e, (a, r) in enumerate(terms):
        amps[e, : len(a)] = a
        rates[e, : len(r)] = r
    return amps, rates


def build_laminate(materials: Sequence[LayerLike], fractions: Sequence[float]) -> RveModel:
    """
    Series (Reuss) laminate with one scalar strain component.

    Interface displacements u_1..u_L are the dofs (u_0 = 0); layer e has
    strain (u_e - u_{e-1})/f_e and weight f_e, so ε̄ = u_L.
    """
    if not materials:
        raise ConfigError("Laminate needs at least one material")
    layers = [m if isinstance(m, LayerMaterial) else LayerMaterial(modulus=m[0], kernel=m[1]) for m in materials]
    f = np.asarray(fractions, dtype=float)
    if f.shape != (len(layers),):
        raise ConfigError(f"Got {f.size} fractions for {len(layers)} layers")
    if np.any(f <= 0) or not np.isclose(f.sum(), 1.0, rtol=1e-12):
        raise ConfigError("Layer fractions must be positive and sum to 1")

    L = len(layers)
    rows = np.concatenate([np.arange(L), np.arange(1, L)])
    cols = np.concatenate([np.arange(L), np.arange(L - 1)])
    vals = np.concatenate([1.0 / f, -1.0 / f[1:]])
    B = sp.csr_matrix((vals, (rows, cols)), shape=(L, L))

    terms = [
        layer.kernel.exponential_terms() if layer.kernel is not None else (np.zeros(0), np.zeros(0))
        for layer in layers
    ]
    amps, rates = _pad_branches(terms)
    moduli = np.array([layer.modulus for layer in layers]).reshape(L, 1, 1)
    logger.debug(f"Laminate with {L} layers, {amps.shape[1]} branches per layer")
    return RveModel(
        weights=f, B=B, moduli=moduli, amplitudes=amps[:, :, None, None], rates=rates, label="laminate",
    )


def _hex_strain_operators(h: float) -> np.ndarray:
    """Mandel B matrices (8 Gauss points × 6 × 24) of a cube element of side h."""
    signs = 2.0 * HEX_CORNERS - 1.0
    r2 = np.sqrt(2.0)
    out = np.zeros((8, 6, 24))
    for g, xi in enumerate(GAUSS_POINTS):
        factors = 1.0 + signs * xi  # (8, 3)
        grads = np.empty((8, 3))
        for d in range(3):
            others = [k for k in range(3) if k != d]
            grads[:, d] = 0.125 * signs[:, d] * factors[:, others[0]] * factors[:, others[1]] * (2.0 / h)
        for a in range(8):
            gx, gy, gz = grads[a]
            out[g, :, 3 * a: 3 * a + 3] = [
                [gx, 0, 0],
                [0, gy, 0],
                [0, 0, gz],
                [0, gz / r2, gy / r2],
                [gz / r2, 0, gx / r2],
                [gy / r2, gx / r2, 0],
            ]
    return out


def build_grain_cube(
    grains_per_side: int,
    elems_per_grain_side: int,
    sampler: GrainSampler,
    homogeneous: Optional[PronyKernel] = None,
) -> RveModel:
    """
    Periodic unit cube of N_g = grains_per_side³ cubic grains.

    Dofs are [ε̄ (6 Mandel components) | periodic fluctuation displacements],
    with node 0 pinned to remove the translation. Every Gauss point of the
    trilinear hexahedra is one material point of weight h³/8.

    Args:
        grains_per_side: Grains along each edge
        elems_per_grain_side: Hexahedra along each grain edge
        sampler: Grain property sampler (bulk modulus, long-term modulus, Gamma laws)
        homogeneous: Optional shear relaxation modulus used for every grain instead of sampling

    Returns:
        RveModel with 6 strain components
    """
    if grains_per_side < 1 or elems_per_grain_side < 1:
        raise ConfigError("Grain and element counts must be >= 1")
    g, e = grains_per_side, elems_per_grain_side
    ne = g * e
    h = 1.0 / ne
    n_grains = g ** 3

    if homogeneous is not None:
        grain_kernels = [homogeneous] * n_grains
    else:
        grain_kernels = sampler.kernels(sampler.sample(n_grains))

    # element (a, b, c) -> its 8 periodic node ids
    idx = np.array(list(itertools.product(range(ne), repeat=3)))[:, ::-1]  # columns x, y, z with x fastest
    corners = (idx[:, None, :] + HEX_CORNERS[None, :, :]) % ne
    nodes = corners[:, :, 0] + ne * (corners[:, :, 1] + ne * corners[:, :, 2])  # (E, 8)
    node_dofs = 6 + 3 * (nodes[:, :, None] - 1) + np.arange(3)[None, None, :]
    node_dofs = np.where(nodes[:, :, None] == 0, -1, node_dofs).reshape(-1, 24)  # (E, 24)
    n_dof = 6 + 3 * (ne ** 3 - 1)

    n_elems = idx.shape[0]
    m = 8 * n_elems
    Bref = _hex_strain_operators(h)
    rows = (np.arange(m).reshape(n_elems, 8)[:, :, None, None] * 6 + np.arange(6)[None, None, :, None])
    rows = np.broadcast_to(rows, (n_elems, 8, 6, 24))
    cols = np.broadcast_to(node_dofs[:, None, None, :], (n_elems, 8, 6, 24))
    vals = np.broadcast_to(Bref[None], (n_elems, 8, 6, 24))
    keep = cols >= 0
    macro_rows = (np.arange(m)[:, None] * 6 + np.arange(6)[None, :]).ravel()
    macro_cols = np.tile(np.arange(6), m)
    B = sp.csr_matrix(
        (
            np.concatenate([vals[keep], np.ones(macro_rows.size)]),
            (np.concatenate([rows[keep], macro_rows]), np.concatenate([cols[keep], macro_cols])),
        ),
        shape=(6 * m, n_dof),
    )

    grain_of_elem = (idx[:, 0] // e) + g * ((idx[:, 1] // e) + g * (idx[:, 2] // e))
    Pvol, Pdev = volumetric_projector(), deviatoric_projector()
    W = max(len(k.branches) for k in grain_kernels)
    grain_moduli = np.empty((n_grains, 6, 6))
    grain_amps = np.zeros((n_grains, W, 6, 6))
    grain_rates = np.ones((n_grains, W))
    for gi, kernel in enumerate(grain_kernels):
        grain_moduli[gi] = 3.0 * sampler.kappa * Pvol + 2.0 * kernel.instantaneous_modulus * Pdev
        amps, rates = kernel.exponential_terms()
        grain_amps[gi, : amps.size] = 2.0 * amps[:, None, None] * Pdev
        grain_rates[gi, : rates.size] = rates

    point_grain = np.repeat(grain_of_elem, 8)
    logger.info(f"Grain cube: {n_grains} grains, {n_elems} hexahedra, {m} points, {n_dof} dofs")
    return RveModel(
        weights=np.full(m, h ** 3 / 8.0),
        B=B,
        moduli=grain_moduli[point_grain],
        amplitudes=grain_amps[point_grain],
        rates=grain_rates[point_grain],
        label="grain-cube",
    )


class AssemblyBranch(BaseModel):
    model_config = ConfigDict(extra="forbid")

    amplitude: List[List[float]]
    rate: float = Field(..., gt=0)


class AssemblyMaterial(BaseModel):
    model_config = ConfigDict(extra="forbid")

    modulus: List[List[float]]
    branches: List[AssemblyBranch] = []


class AssemblyPoint(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weight: float = Field(..., gt=0)
    B: List[List[float]]
    material: str


class AssemblyFile(BaseModel):
    """Structured mesh import: material points with weights, B rows and material ids."""
    model_config = ConfigDict(extra="forbid")

    label: str = "imported"
    components: int = Field(..., ge=1)
    n_dof: int = Field(..., ge=1)
    materials: Dict[str, AssemblyMaterial]
    points: List[AssemblyPoint]


def load_assembly(path: Union[str, Path]) -> RveModel:
    """Read an RVE assembly from a JSON file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Assembly file not found: {path}")
    try:
        spec = AssemblyFile.model_validate_json(path.read_text())
    except ValidationError as e:
        raise ConfigError(f"Invalid assembly file {path}: {e}") from e

    c, n_dof = spec.components, spec.n_dof
    missing = {p.material for p in spec.points} - set(spec.materials)
    if missing:
        raise ConfigError(f"Assembly references unknown materials: {sorted(missing)}")
    W = max((len(mat.branches) for mat in spec.materials.values()), default=0)
    m = len(spec.points)
    moduli = np.empty((m, c, c))
    amps = np.zeros((m, W, c, c))
    rates = np.ones((m, W))
    B = np.zeros((m * c, n_dof))
    for e, point in enumerate(spec.points):
        rows = np.asarray(point.B, dtype=float)
        if rows.shape != (c, n_dof):
            raise ConfigError(f"Point {e}: B has shape {rows.shape}, expected ({c}, {n_dof})")
        B[e * c: (e + 1) * c] = rows
        mat = spec.materials[point.material]
        moduli[e] = np.asarray(mat.modulus, dtype=float)
        for i, branch in enumerate(mat.branches):
            amps[e, i] = np.asarray(branch.amplitude, dtype=float)
            rates[e, i] = branch.rate
    try:
        model = RveModel(
            weights=np.array([p.weight for p in spec.points]),
            B=sp.csr_matrix(B), moduli=moduli, amplitudes=amps, rates=rates, label=spec.label,
        )
    except ValidationError as e:
        raise ConfigError(f"Inconsistent assembly in {path}: {e}") from e
    logger.info(f"Loaded assembly '{spec.label}' with {m} points and {n_dof} dofs from {path}")
    return model
