"""
predict: stress and inelastic-strain predictions of reduced models on test programs.

With a model file the model is evaluated on every configured test program
against the oracle. Without one a convergence study runs over N_list with
M = 2N + 1, comparing optimal and Fourier-truncated models.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from hereditary.commands.common import (
    assemble, build_oracle, new_report, output_dir, program_histories, reference_inelastic, sls_params
)
from hereditary.core.diagnostics import fit_loglog_slope, gibbs_layer_extent
from hereditary.core.history import history_error
from hereditary.core.models import BasisSpec, HistorySample, HistorySpace
from hereditary.core.reduce import (
    ReducedModel, apply_reduced, fourier_truncate, predict_stress, restrict, svd_truncate
)
from hereditary.errors import DimensionError
from hereditary.oracles.base import BaseOracle, history_to_program, instantaneous_modulus
from hereditary.run_config import ReductionConfig, RunConfig
from hereditary.utils.files import RunReport, read_model, write_csv, write_report

logger = logging.getLogger(__name__)


def _gibbs_width(rm: ReducedModel) -> float:
    T = rm.basis.space.T
    return max(T / rm.M, T / rm.N)


def _predict_with_model(
    rm: ReducedModel, histories: Dict[str, HistorySample], config: RunConfig,
    space: HistorySpace, oracle: BaseOracle, out: Path, report: RunReport,
) -> None:
    modulus = instantaneous_modulus(oracle)
    grid = space.grid
    for name, f in histories.items():
        program = history_to_program(f)
        predicted = predict_stress(rm, program)
        reference = oracle.evaluate(program)
        write_csv(
            out / f"prediction_{name}.csv", ["t", "strain", "stress_predicted", "stress_reference"],
            [grid.nodes, program.values, predicted.stress, reference.stress],
        )
        ep_predicted = apply_reduced(rm, f, rm.basis)
        ep_exact = reference_inelastic(name, f, config, space, oracle, modulus)
        write_csv(
            out / f"history_{name}.csv", ["tau", "ep_predicted", "ep_exact"],
            [grid.nodes, ep_predicted.values, ep_exact.values],
        )
        report.tables.extend([f"prediction_{name}.csv", f"history_{name}.csv"])
        width = _gibbs_width(rm)
        report.convergence[name] = {
            "N": rm.N,
            "M": rm.M,
            "error_H": history_error(ep_predicted, ep_exact, space),
            "error_H_outside_boundary_layer": history_error(ep_predicted, ep_exact, space, boundary_layer=width),
            "gibbs_width": width,
            "stress_max_abs_error": float(np.max(np.abs(predicted.stress - reference.stress))),
        }
        logger.info(f"{name}: H-norm error {report.convergence[name]['error_H']:.6e} for N={rm.N}")


def _convergence_study(
    histories: Dict[str, HistorySample], config: RunConfig, space: HistorySpace,
    oracle: BaseOracle, out: Path, report: RunReport,
) -> None:
    reduction = config.reduction or ReductionConfig()
    ranks = reduction.N_list
    S_max = assemble(config, BasisSpec(m=max(ranks), space=space), oracle)
    grid = space.grid
    for name, f in histories.items():
        reference = reference_inelastic(name, f, config, space, oracle, S_max.modulus)
        optimal, fourier, gibbs = [], [], []
        for N in ranks:
            S = restrict(S_max, N)
            rm = svd_truncate(S, N)
            approx = apply_reduced(rm, f, S.basis)
            optimal.append(history_error(approx, reference, space))
            extent = gibbs_layer_extent(reference.values - approx.values, grid)
            gibbs.append(None if extent is None else float(grid.nodes[extent]))
            if reduction.fourier_baseline:
                fourier.append(history_error(apply_reduced(fourier_truncate(S, N), f, S.basis), reference, space))
            logger.debug(f"{name}: N={N} optimal {optimal[-1]:.6e}" + (f", fourier {fourier[-1]:.6e}" if fourier else ""))

        header = ["N", "M", "error_optimal"]
        columns = [ranks, [2 * N + 1 for N in ranks], optimal]
        if reduction.fourier_baseline:
            header.append("error_fourier")
            columns.append(fourier)
        write_csv(out / f"convergence_{name}.csv", header, columns, int_columns=[0, 1])
        report.tables.append(f"convergence_{name}.csv")

        slope = fit_loglog_slope(ranks, optimal)
        report.slopes[name] = slope
        report.convergence[name] = {
            "N": ranks, "error_optimal": optimal, "error_fourier": fourier or None, "gibbs_last_tau": gibbs,
        }
        logger.info(f"{name}: log-log slope {'n/a' if slope is None else f'{slope:.3f}'} over the pre-floor range")


def cmd_predict(config: RunConfig, model_path: Optional[str] = None) -> List[str]:
    """
    Evaluate a stored model on the test programs, or run the convergence
    study when no model is given.
    """
    out = output_dir(config)
    report = new_report("predict", config)
    space = config.space.build()
    histories = program_histories(config, space)
    oracle = build_oracle(config, space)

    if model_path is not None:
        rm = read_model(model_path)
        model_space = rm.basis.space
        if model_space != space:
            raise DimensionError(f"Model {model_path} was identified on a different history space")
        report.notes["model"] = {"path": Path(model_path).name, "N": rm.N, "M": rm.M, "kind": rm.kind}
        _predict_with_model(rm, histories, config, space, oracle, out, report)
    else:
        report.notes["closed_form"] = bool(sls_params(config) is not None and config.oracle.closed_form)
        _convergence_study(histories, config, space, oracle, out, report)

    report.notes["oracle_evaluations"] = oracle.evaluations
    write_report(out, report)
    return report.tables
