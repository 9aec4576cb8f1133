import json

import numpy as np
import pytest
from scipy.integrate import simpson

from hereditary.core.history import history_error, history_norm, step_history
from hereditary.core.kernels import ExpKernel, PronyBranch, PronyKernel, SHEAR_XY, deviatoric_projector, volumetric_projector
from hereditary.core.models import BasisSpec, HistorySample, HistorySpace, TimeGrid
from hereditary.core.reduce import apply_reduced, assemble_from_oracle, predict_stress, svd_truncate
from hereditary.errors import ConditioningError, ConfigError, DimensionError
from hereditary.oracles import (
    StrainProgram, history_to_program, inelastic_history, make_kernel_oracle, make_prony_oracle, response_to_history
)
from hereditary.rve import (
    GammaLaw, GrainSampler, RveOracle, build_grain_cube, build_laminate, effective_elastic,
    effective_kernel_laplace, gamma_sample, load_assembly, solve_time_domain
)
from hereditary.rve.sampling import histogram

FAST = ExpKernel(k=1.0, lam=1.0)
SLOW = ExpKernel(k=0.3, lam=3.0)


@pytest.fixture
def laminate():
    return build_laminate([(2.0, FAST), (1.0, SLOW)], [0.25, 0.75])


def _harmonic(moduli, fractions):
    return 1.0 / sum(f / c for c, f in zip(moduli, fractions))


def test_gamma_sample_mean(rng):
    draws = gamma_sample(2.0, 2.0, rng, size=200_000)
    assert draws.mean() == pytest.approx(2.0, rel=1e-2)
    with pytest.raises(ConfigError):
        gamma_sample(-1.0, 2.0, rng)


def test_sampler_is_seeded():
    a = GrainSampler(seed=3).sample(8)
    b = GrainSampler(seed=3).sample(8)
    c = GrainSampler(seed=4).sample(8)
    np.testing.assert_array_equal(a.eta, b.eta)
    np.testing.assert_array_equal(a.tau, b.tau)
    assert not np.array_equal(a.eta, c.eta)
    assert a.eta.shape == (8, 3)
    np.testing.assert_allclose(a.mu, a.eta / a.tau)


def test_sampler_kernels():
    sampler = GrainSampler(seed=1, branches=2, mu_inf=0.5)
    draws = sampler.sample(3)
    kernels = sampler.kernels(draws)
    assert len(kernels) == 3
    assert kernels[0].mu_inf == 0.5
    assert kernels[0].branches[1].tau == pytest.approx(draws.tau[0, 1])


def test_histogram_density_integrates_to_one(rng):
    law = GammaLaw(mean=1.0, shape=2.0)
    rows = histogram(gamma_sample(law.mean, law.shape, rng, size=5000), law, bins=12)
    assert rows.shape == (12, 5)
    assert rows[:, 2].sum() == 5000
    assert np.sum(rows[:, 3] * (rows[:, 1] - rows[:, 0])) == pytest.approx(1.0)
    assert np.all(rows[:, 4] >= 0)


def test_laminate_effective_moduli_are_harmonic(laminate):
    assert effective_elastic(laminate)[0, 0] == pytest.approx(_harmonic([2.0, 1.0], [0.25, 0.75]), rel=1e-10)
    for s in (0.1, 1.0, 10.0):
        local = [2.0 - 1.0 / (s + 1.0), 1.0 - 0.3 / (s + 3.0)]
        expected = _harmonic([2.0, 1.0], [0.25, 0.75]) - _harmonic(local, [0.25, 0.75])
        assert effective_kernel_laplace(laminate, s)[0, 0] == pytest.approx(expected, rel=1e-10)


def test_laplace_kernel_rejects_non_positive_s(laminate):
    with pytest.raises(ConditioningError):
        effective_kernel_laplace(laminate, 0.0)


def test_single_layer_laminate_matches_analytic_oracle():
    grid = TimeGrid(T=1.0, n=100)
    model = build_laminate([(2.0, FAST)], [1.0])
    program = StrainProgram.from_function(lambda t: np.sin(3.0 * t) + t, grid)
    expected = make_kernel_oracle(2.0, FAST, grid).evaluate(program).stress
    np.testing.assert_allclose(RveOracle(model, grid).evaluate(program).stress, expected, atol=1e-10)


def test_laminate_step_response_matches_laplace_kernel(laminate):
    grid = TimeGrid(T=200.0, n=20000)
    stress = RveOracle(laminate, grid).evaluate(StrainProgram(grid=grid, values=np.ones(grid.n + 1))).stress
    t = grid.nodes
    elastic = effective_elastic(laminate)[0, 0]
    assert stress[0] == pytest.approx(elastic, rel=1e-10)
    for s in (0.1, 1.0, 10.0):
        from_time_domain = elastic - s * simpson(np.exp(-s * t) * stress, x=t)
        assert from_time_domain == pytest.approx(effective_kernel_laplace(laminate, s)[0, 0], rel=1e-2)


def test_homogeneous_cube_is_the_local_law():
    kernel = PronyKernel(mu_inf=1.0, branches=(PronyBranch(mu=2.0, tau=0.5),))
    sampler = GrainSampler(kappa=2.0)
    cube = build_grain_cube(2, 1, sampler, homogeneous=kernel)
    assert cube.n_points == 64
    assert cube.n_components == 6

    expected = 3.0 * 2.0 * volumetric_projector() + 2.0 * kernel.instantaneous_modulus * deviatoric_projector()
    np.testing.assert_allclose(effective_elastic(cube), expected, atol=1e-9)
    amplitudes, rates = kernel.exponential_terms()
    kernel_at_one = np.sum(amplitudes / (1.0 + rates))
    np.testing.assert_allclose(effective_kernel_laplace(cube, 1.0), 2.0 * kernel_at_one * deviatoric_projector(), atol=1e-9)

    grid = TimeGrid(T=1.0, n=50)
    program = StrainProgram.from_function(lambda t: t * (1.0 - t) + 0.1, grid)
    expected_stress = make_prony_oracle(kernel.scaled(2.0), grid).evaluate(program).stress
    np.testing.assert_allclose(RveOracle(cube, grid).evaluate(program).stress, expected_stress, atol=1e-9)


def test_cube_time_domain_keeps_other_components_at_rest():
    kernel = PronyKernel(mu_inf=1.0, branches=(PronyBranch(mu=1.0, tau=1.0),))
    cube = build_grain_cube(2, 1, GrainSampler(), homogeneous=kernel)
    grid = TimeGrid(T=1.0, n=10)
    macro = np.zeros((grid.n + 1, 6))
    macro[:, SHEAR_XY] = 1.0
    stress = solve_time_domain(cube, grid, macro)
    others = [i for i in range(6) if i != SHEAR_XY]
    np.testing.assert_allclose(stress[:, others], 0.0, atol=1e-10)
    with pytest.raises(DimensionError):
        solve_time_domain(cube, grid, macro[:, :3])


def test_digest_depends_on_seed_only():
    a = build_grain_cube(2, 1, GrainSampler(seed=5))
    b = build_grain_cube(2, 1, GrainSampler(seed=5))
    c = build_grain_cube(2, 1, GrainSampler(seed=6))
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()


def test_rve_oracle_channel_range(laminate):
    with pytest.raises(DimensionError):
        RveOracle(laminate, TimeGrid(T=1.0, n=10), channel=1)


def _write_assembly(path, material="soft"):
    f = [0.25, 0.75]
    assembly = {
        "label": "two-layer",
        "components": 1,
        "n_dof": 2,
        "materials": {
            "stiff": {"modulus": [[2.0]], "branches": [{"amplitude": [[1.0]], "rate": 1.0}]},
            "soft": {"modulus": [[1.0]], "branches": [{"amplitude": [[0.3]], "rate": 3.0}]},
        },
        "points": [
            {"weight": f[0], "B": [[1.0 / f[0], 0.0]], "material": "stiff"},
            {"weight": f[1], "B": [[-1.0 / f[1], 1.0 / f[1]]], "material": material},
        ],
    }
    path.write_text(json.dumps(assembly))
    return path


def test_load_assembly_reproduces_laminate(tmp_path, laminate):
    model = load_assembly(_write_assembly(tmp_path / "assembly.json"))
    assert model.label == "two-layer"
    np.testing.assert_allclose(effective_elastic(model), effective_elastic(laminate), rtol=1e-12)
    np.testing.assert_allclose(effective_kernel_laplace(model, 2.0), effective_kernel_laplace(laminate, 2.0), rtol=1e-12)


def test_load_assembly_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_assembly(tmp_path / "missing.json")
    with pytest.raises(ConfigError, match="unknown materials"):
        load_assembly(_write_assembly(tmp_path / "bad.json", material="glass"))


@pytest.mark.slow
def test_desk_rve_reduction():
    space = HistorySpace.build(T=5.0, n=200, lambda0=0.0)
    cube = build_grain_cube(2, 2, GrainSampler(seed=0))
    oracle = RveOracle(cube, space.grid)
    b = BasisSpec(m=10, space=space)
    S = assemble_from_oracle(oracle, b)

    tau = space.grid.nodes
    T = space.T
    f = HistorySample(grid=space.grid, values=4.0 / T**2 * tau * (T - tau))
    reference = inelastic_history(oracle, f, modulus=S.modulus)
    errors = [history_error(apply_reduced(svd_truncate(S, N), f, b), reference, space) for N in (1, 2, 4, 8, 16, b.M)]
    for previous, current in zip(errors, errors[1:]):
        assert current <= 1.05 * previous

    program = history_to_program(f)
    predicted = response_to_history(predict_stress(svd_truncate(S, b.M), program))
    actual = response_to_history(oracle.evaluate(program))
    assert history_error(predicted, actual, space) <= 1e-2 * history_norm(actual, space)

    step = apply_reduced(svd_truncate(S, 4), step_history(space.grid, 2.5), b)
    assert np.all(np.isfinite(step.values))


@pytest.mark.slow
def test_weighted_rve_reduction_keeps_decoder_orthogonal():
    space = HistorySpace.build(T=5.0, n=200, lambda0=1.0)
    oracle = RveOracle(build_grain_cube(2, 2, GrainSampler(seed=0)), space.grid)
    S = assemble_from_oracle(oracle, BasisSpec(m=10, space=space))
    for N in (1, 4, S.M):
        rm = svd_truncate(S, N)
        kept = rm.s > 0
        U = rm.Psi[:, kept] / rm.s[kept]
        np.testing.assert_allclose(U.T @ U, np.eye(int(kept.sum())), atol=1e-10)
