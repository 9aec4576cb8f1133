"""
spectrum: singular values s_{M,k} of the sampled operator over a sweep of M.
"""
import logging
from typing import List

import numpy as np

from hereditary.commands.common import (
    assemble, basis_spec, build_oracle, exact_singular_values, new_report, output_dir, sls_params
)
from hereditary.core.operator import sls_hs_norm, sls_spectrum
from hereditary.core.reduce import restrict, singular_values
from hereditary.run_config import RunConfig
from hereditary.utils.files import write_csv, write_report

logger = logging.getLogger(__name__)


def cmd_spectrum(config: RunConfig) -> List[str]:
    """
    Write spectrum.csv with rows (M, k, s_Mk[, s_k]) for k <= min(k_max, M).

    S_M is assembled once at the largest M of the sweep and restricted to the
    smaller sizes. SLS runs also get sls_spectrum.csv with the analytic
    singular system.
    """
    out = output_dir(config)
    report = new_report("spectrum", config)
    space = config.space.build()
    sweep = config.basis.sweep
    k_max = config.basis.k_max

    largest = basis_spec(config, space, m=(sweep[-1] - 1) // 2)
    oracle = None if (sls_params(config) is not None and config.oracle.closed_form) else build_oracle(config, space)
    S = assemble(config, largest, oracle)
    exact = exact_singular_values(config, k_max)

    rows = []
    for M in sweep:
        s = singular_values(restrict(S, (M - 1) // 2))
        for k in range(1, min(k_max, M) + 1):
            row = [M, k, s[k - 1]]
            if exact is not None:
                row.append(exact[k - 1])
            rows.append(row)
        logger.info(f"M={M}: s_(M,1..3) = {s[:3]}")
        report.spectrum[str(M)] = s[:k_max].tolist()

    header = ["M", "k", "s_Mk"] + (["s_k"] if exact is not None else [])
    data = np.asarray(rows, dtype=float)
    write_csv(out / "spectrum.csv", header, [data[:, c] for c in range(len(header))], int_columns=[0, 1])
    report.tables.append("spectrum.csv")

    p = sls_params(config)
    if p is not None:
        spec = sls_spectrum(p, k_max)
        write_csv(
            out / "sls_spectrum.csv", ["n", "kappa_n", "mu_n", "s_n", "N_n"],
            [np.arange(1, k_max + 1), spec.kappa, spec.mu, spec.s, spec.norms], int_columns=[0],
        )
        report.tables.append("sls_spectrum.csv")
        report.notes["hs_norm"] = sls_hs_norm(p)
        report.notes["hyperbolic_first"] = spec.hyperbolic_first

    write_report(out, report)
    logger.info(f"Spectrum sweep {sweep} written to {out}")
    return report.tables
