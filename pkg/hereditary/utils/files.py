"""
Output files: atomic writes, CSV tables, reduced-model and report documents.
"""
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from hereditary import __version__
from hereditary.core.models import BasisSpec, HistorySpace
from hereditary.core.reduce import ReducedModel
from hereditary.errors import ConfigError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MODEL_FILE_VERSION = 1
SIGN_CONVENTION = "ep=eps-sigma/C"


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text to a temporary file in the target directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False, encoding="utf-8") as tmp:
        tmp.write(text)
        tmp_path = tmp.name
    try:
        os.replace(tmp_path, path)
    except OSError:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug(f"Wrote {path}")
    return path


def write_csv(path: PathLike, header: Sequence[str], columns: Sequence, int_columns: Sequence[int] = ()) -> Path:
    """
    Write a CSV table with a header row.

    Floats use scientific notation with 17 significant digits; the columns
    listed in int_columns are written as integers.
    """
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns]) if columns else np.zeros((0, len(header)))
    if data.shape[1] != len(header):
        raise ValueError(f"{len(header)} header names for {data.shape[1]} columns")
    fmt = ["%d" if i in int_columns else "%.16e" for i in range(len(header))]
    buffer = io.StringIO()
    np.savetxt(buffer, data, fmt=fmt, delimiter=",", header=",".join(header), comments="")
    return atomic_write_text(path, buffer.getvalue())


def read_csv(path: PathLike) -> np.ndarray:
    """Numeric body of a CSV written by write_csv, shape (rows, columns)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"CSV file not found: {path}")
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


class ModelFile(BaseModel):
    """On-disk form of a reduced model."""
    version: int = MODEL_FILE_VERSION
    tool_version: str = __version__
    T: float
    lambda0: float
    n: int
    quadrature: str
    m: int
    M: int
    N: int
    C_eff: float
    kind: str
    provenance: str = ""
    s: List[float]
    Phi: List[List[float]]
    Psi: List[List[float]]
    readout: Optional[List[float]] = None
    ramp_residual: float = 0.0
    basis: str = "trig-exp"
    sign_convention: str = SIGN_CONVENTION


def model_to_file(rm: ReducedModel) -> ModelFile:
    space = rm.basis.space
    return ModelFile(
        T=space.T, lambda0=space.lambda0, n=space.grid.n, quadrature=space.quadrature.value,
        m=rm.basis.m, M=rm.M, N=rm.N, C_eff=rm.modulus, kind=rm.kind, provenance=rm.provenance,
        s=np.asarray(rm.s).tolist(), Phi=np.asarray(rm.Phi).tolist(), Psi=np.asarray(rm.Psi).tolist(),
        readout=None if rm.readout is None else np.asarray(rm.readout).tolist(), ramp_residual=rm.ramp_residual,
    )


def model_from_file(doc: ModelFile) -> ReducedModel:
    if doc.basis != "trig-exp" or doc.sign_convention != SIGN_CONVENTION:
        raise ConfigError(f"Unsupported model file (basis={doc.basis}, sign_convention={doc.sign_convention})")
    space = HistorySpace.build(T=doc.T, n=doc.n, lambda0=doc.lambda0, quadrature=doc.quadrature)
    b = BasisSpec(m=doc.m, space=space)
    if b.M != doc.M:
        raise ConfigError(f"Model file lists M={doc.M} for m={doc.m}")
    return ReducedModel(
        N=doc.N, s=doc.s, Phi=doc.Phi, Psi=doc.Psi, basis=b, modulus=doc.C_eff,
        kind=doc.kind, readout=doc.readout, ramp_residual=doc.ramp_residual, provenance=doc.provenance,
    )


def write_model(path: PathLike, rm: ReducedModel) -> Path:
    return atomic_write_text(path, model_to_file(rm).model_dump_json(indent=2) + "\n")


def read_model(path: PathLike) -> ReducedModel:
    """Load a reduced model written by write_model."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Model file not found: {path}")
    try:
        return model_from_file(ModelFile.model_validate_json(path.read_text()))
    except ValidationError as e:
        raise ConfigError(f"Invalid model file {path}: {e}") from e


class RunReport(BaseModel):
    """Summary written next to the outputs of every command."""
    tool: str = "hereditary"
    tool_version: str = __version__
    command: str
    config: dict
    tables: List[str] = Field(default_factory=list, description="Files produced, relative to the output directory")
    spectrum: dict = Field(default_factory=dict)
    convergence: dict = Field(default_factory=dict)
    slopes: dict = Field(default_factory=dict)
    error_reports: List[dict] = Field(default_factory=list)
    notes: dict = Field(default_factory=dict)


def write_report(out_dir: PathLike, report: RunReport) -> Path:
    return atomic_write_text(Path(out_dir) / "report.json", report.model_dump_json(indent=2) + "\n")
