"""
identify: sample S_M from the configured oracle and write optimal reduced models.
"""
import logging
from typing import List

from hereditary.commands.common import (
    assemble, basis_spec, build_oracle, identify_models, new_report, output_dir, sls_params
)
from hereditary.run_config import RunConfig
from hereditary.utils.files import write_report

logger = logging.getLogger(__name__)


def cmd_identify(config: RunConfig) -> List[str]:
    out = output_dir(config)
    report = new_report("identify", config)
    space = config.space.build()
    b = basis_spec(config, space)
    oracle = None if (sls_params(config) is not None and config.oracle.closed_form) else build_oracle(config, space)
    S = assemble(config, b, oracle)
    if oracle is not None:
        report.notes["oracle_evaluations"] = oracle.evaluations
    models = identify_models(config, S, out, report)
    write_report(out, report)
    logger.info(f"Identified {len(models)} model(s) with M={S.M} from '{S.provenance}'")
    return report.tables
