import numpy as np
import pytest

from hereditary.config import settings
from hereditary.core.models import BasisSpec, HistorySample, TimeGrid
from hereditary.core.operator import apply_S
from hereditary.errors import DimensionError, NumericsError, OracleError
from hereditary.oracles import (
    BaseOracle, StrainProgram, evaluate, history_at, history_to_program, inelastic_history,
    instantaneous_modulus, make_kernel_oracle, make_prony_oracle, make_sls_oracle,
    response_to_history, sample_basis_responses
)
from hereditary.core.kernels import DiscreteSpectrum, PronyBranch, PronyKernel


class _HiddenModulus(BaseOracle):
    """Elastic oracle that does not expose its modulus."""

    def _respond(self, strain):
        return 3.0 * strain


class _Broken(BaseOracle):
    def __init__(self, grid, error):
        super().__init__(grid, "broken")
        self.error = error

    def _respond(self, strain):
        raise self.error


@pytest.fixture
def grid():
    return TimeGrid(T=1.0, n=200)


def test_sls_step_response_is_exact(sls, grid):
    oracle = make_sls_oracle(sls, grid)
    response = evaluate(oracle, StrainProgram(grid=grid, values=np.ones(grid.n + 1)))
    t = grid.nodes
    expected = sls.C0 - sls.C1 / sls.lam * (1.0 - np.exp(-sls.lam * t))
    np.testing.assert_allclose(response.stress, expected, atol=1e-12)
    assert response.oracle_id == "sls"
    assert response.evaluations == 1


def test_sls_ramp_response_is_exact(sls, grid):
    oracle = make_sls_oracle(sls, grid)
    program = StrainProgram.from_function(lambda t: t, grid)
    t = grid.nodes
    integral = t / sls.lam - (1.0 - np.exp(-sls.lam * t)) / sls.lam**2
    np.testing.assert_allclose(oracle.evaluate(program).stress, sls.C0 * t - sls.C1 * integral, atol=1e-12)


def test_zero_program_gives_zero_stress(sls, grid):
    response = make_sls_oracle(sls, grid).evaluate(StrainProgram.zeros(grid))
    assert np.all(response.stress == 0.0)


def test_prony_oracle_relaxation(grid):
    kernel = PronyKernel(mu_inf=1.0, branches=(PronyBranch(mu=2.0, tau=0.5),))
    oracle = make_prony_oracle(kernel, grid)
    response = oracle.evaluate(StrainProgram(grid=grid, values=np.ones(grid.n + 1)))
    np.testing.assert_allclose(response.stress, kernel.relaxation_modulus(grid.nodes), atol=1e-12)
    assert instantaneous_modulus(oracle) == pytest.approx(3.0)


def test_kernel_oracle_accepts_spectra(grid):
    spec = DiscreteSpectrum(lambda0=1.0, atoms=[{"lambda": 2.0, "nu": 0.5}])
    oracle = make_kernel_oracle(4.0, spec, grid)
    assert oracle.oracle_id == "spectrum"
    assert oracle.evaluate(StrainProgram(grid=grid, values=np.ones(grid.n + 1))).stress[0] == pytest.approx(4.0)


def test_program_scaling_and_linearity(sls, grid):
    oracle = make_sls_oracle(sls, grid)
    p1 = StrainProgram.from_function(np.sin, grid)
    p2 = StrainProgram.from_function(lambda t: t * t, grid)
    both = StrainProgram(grid=grid, values=2.0 * p1.values + p2.values)
    np.testing.assert_allclose(
        oracle.evaluate(both).stress,
        2.0 * oracle.evaluate(p1).stress + oracle.evaluate(p2).stress,
        atol=1e-12,
    )
    np.testing.assert_allclose((2.0 * p1).values, 2.0 * p1.values)


def test_grid_mismatch_is_rejected(sls, grid):
    oracle = make_sls_oracle(sls, grid)
    with pytest.raises(DimensionError):
        oracle.evaluate(StrainProgram.zeros(TimeGrid(T=1.0, n=100)))


def test_failures_are_wrapped(grid):
    with pytest.raises(OracleError, match="broken"):
        _Broken(grid, RuntimeError("solver diverged")).evaluate(StrainProgram.zeros(grid))


def test_step_probe_measures_hidden_modulus(grid):
    oracle = _HiddenModulus(grid, "hidden")
    assert oracle.instantaneous_modulus is None
    assert instantaneous_modulus(oracle) == pytest.approx(3.0)
    assert oracle.evaluations == 1


def test_step_probe_rejects_non_positive_modulus(grid):
    class _Negative(BaseOracle):
        def _respond(self, strain):
            return -strain

    with pytest.raises(OracleError):
        instantaneous_modulus(_Negative(grid, "negative"))


def test_frame_conversions(grid):
    values = grid.nodes**2
    f = HistorySample(grid=grid, values=values)
    program = history_to_program(f)
    np.testing.assert_allclose(program.values, values[::-1])
    assert program.values[-1] == f.values[0]


def test_history_at_pads_with_zeros(grid):
    program = StrainProgram.from_function(lambda t: 1.0 + t, grid)
    h = history_at(program, 10)
    np.testing.assert_allclose(h.values[:11], program.values[10::-1])
    assert np.all(h.values[11:] == 0.0)
    np.testing.assert_allclose(history_at(program, grid.n).values, program.values[::-1])
    with pytest.raises(DimensionError):
        history_at(program, grid.n + 1)


def test_response_to_history_reverses_time(sls, grid):
    response = make_sls_oracle(sls, grid).evaluate(StrainProgram.from_function(lambda t: t, grid))
    np.testing.assert_allclose(response_to_history(response).values, response.stress[::-1])


def test_inelastic_history_matches_operator(sls, space):
    oracle = make_sls_oracle(sls, space.grid)
    tau = space.grid.nodes
    f = HistorySample(grid=space.grid, values=4.0 * tau * (1.0 - tau))
    expected = apply_S(sls.kernel, f, space, sls.C0)
    np.testing.assert_allclose(inelastic_history(oracle, f).values, expected.values, atol=1e-5)


def test_sample_basis_responses_concurrent_matches_sequential(sls, small_space, mocker):
    b = BasisSpec(m=3, space=small_space)
    oracle = make_sls_oracle(sls, small_space.grid)
    sequential = sample_basis_responses(oracle, b)
    mocker.patch.object(settings, "SAMPLING_WORKERS", 4)
    concurrent = sample_basis_responses(oracle, b)
    assert len(concurrent) == b.M
    for a, c in zip(sequential, concurrent):
        np.testing.assert_array_equal(a.values, c.values)
    assert oracle.evaluations == 2 * b.M


def test_sampling_failure_reports_basis_index(small_space):
    b = BasisSpec(m=2, space=small_space)
    oracle = _Broken(small_space.grid, NumericsError("singular step"))
    with pytest.raises(OracleError) as excinfo:
        sample_basis_responses(oracle, b, modulus=1.0)
    assert excinfo.value.basis_index == -2
    assert "basis index -2" in str(excinfo.value)
