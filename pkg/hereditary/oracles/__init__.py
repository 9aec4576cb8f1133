from hereditary.oracles.base import (
    BaseOracle, OracleResponse, StrainProgram, evaluate, history_at, inelastic_history, ramp_response_at_zero,
    history_to_program, instantaneous_modulus, response_to_history, sample_basis_responses
)
from hereditary.oracles.analytic import (
    ExponentialSumOracle, make_kernel_oracle, make_prony_oracle, make_sls_oracle
)
