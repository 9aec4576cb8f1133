"""
rve: generate an RVE, export its sampled parameters and basis responses,
and optionally identify reduced models from it.
"""
import logging
from pathlib import Path
from typing import List

from hereditary.commands.common import build_oracle, build_rve, identify_models, new_report, output_dir
from hereditary.core.history import basis_matrix
from hereditary.core.models import BasisSpec
from hereditary.core.reduce import assemble_from_oracle
from hereditary.errors import ConfigError
from hereditary.oracles.base import StrainProgram
from hereditary.rve.sampling import histogram
from hereditary.run_config import RunConfig, RveOracleConfig
from hereditary.utils.files import RunReport, write_csv, write_report

logger = logging.getLogger(__name__)

HISTOGRAM_HEADER = ["left", "right", "count", "density", "gamma_pdf"]


def _write_histograms(spec: RveOracleConfig, out: Path, report: RunReport) -> None:
    """η and τ histograms of the grain draws; the cube re-draws them from the same seed."""
    sampler = spec.sampler()
    draws = sampler.sample(spec.grains_per_side ** 3)
    for name, values, law in (("eta", draws.eta, spec.gamma_visc), ("tau", draws.tau, spec.gamma_tau)):
        rows = histogram(values, law)
        write_csv(out / f"{name}_histogram.csv", HISTOGRAM_HEADER, list(rows.T), int_columns=[2])
        report.tables.append(f"{name}_histogram.csv")


def cmd_rve(config: RunConfig) -> List[str]:
    spec = config.oracle
    if not isinstance(spec, RveOracleConfig):
        raise ConfigError("The rve command needs an 'rve' oracle")
    out = output_dir(config)
    report = new_report("rve", config)
    space = config.space.build()
    b = BasisSpec(m=config.basis.m, space=space)

    model = build_rve(spec)
    report.notes["digest"] = model.digest()
    report.notes["points"] = model.n_points
    report.notes["dofs"] = model.n_dof
    if spec.geometry == "cube" and spec.homogeneous is None:
        _write_histograms(spec, out, report)

    oracle = build_oracle(config, space, rve=model)
    E = basis_matrix(b)
    grid = space.grid
    for j in range(max(-2, -b.m), min(2, b.m) + 1):
        program = StrainProgram(grid=grid, values=E[::-1, b.column(j)])
        response = oracle.evaluate(program)
        name = f"response_j{j}.csv"
        write_csv(out / name, ["t", "strain", "stress"], [grid.nodes, program.values, response.stress])
        report.tables.append(name)
        logger.debug(f"Basis response j={j} written")

    if config.reduction is not None:
        S = assemble_from_oracle(oracle, b)
        identify_models(config, S, out, report)
    report.notes["oracle_evaluations"] = oracle.evaluations

    write_report(out, report)
    logger.info(f"RVE '{model.label}' outputs written to {out}")
    return report.tables
