import math

import numpy as np
import pytest

from hereditary.core.diagnostics import (
    SAMPLING_TERM_UNKNOWN, error_report, fit_loglog_slope, gibbs_layer_extent, mid_interval_rms,
    reduced_relaxation_curve, reduced_relaxation_function
)
from hereditary.core.history import step_history
from hereditary.core.models import BasisSpec, TimeGrid
from hereditary.core.operator import step_exact
from hereditary.core.reduce import apply_reduced, assemble_closed_form, restrict, svd_truncate
from hereditary.errors import DimensionError


def test_error_report_basic():
    report = error_report([1.0, 0.5, 0.25], M=3, N=1, T=2.0)
    assert report.rank_error == 0.5
    assert report.bound is None
    assert report.sampling_term == SAMPLING_TERM_UNKNOWN
    assert report.gibbs_width == pytest.approx(2.0)


def test_error_report_with_references():
    report = error_report([1.0, 0.5, 0.25], M=3, N=2, T=1.0, exact=[1.1, 0.6, 0.3], sampling_error=0.01)
    assert report.rank_error == 0.25
    assert report.bound == pytest.approx(0.26)
    assert report.exact_rank_error == pytest.approx(0.3)
    assert report.exact_bound == pytest.approx(0.32)
    np.testing.assert_allclose(report.spectrum_gaps, [0.1, 0.1, 0.05])
    assert report.gibbs_width == pytest.approx(0.5)


def test_error_report_full_rank():
    assert error_report([1.0, 0.5], M=2, N=2, T=1.0).rank_error == 0.0


def test_error_report_needs_next_singular_value():
    with pytest.raises(DimensionError):
        error_report([1.0], M=3, N=1, T=1.0)
    with pytest.raises(DimensionError):
        error_report([1.0, 0.5], M=3, N=4, T=1.0)


def test_loglog_slope_of_power_law():
    ranks = np.array([1, 2, 4, 8, 16])
    assert fit_loglog_slope(ranks, 3.0 * ranks**-0.5) == pytest.approx(-0.5)


def test_loglog_slope_stops_at_floor():
    ranks = [1, 2, 4, 8, 16]
    assert fit_loglog_slope(ranks, [1.0, 0.5, 0.25, 0.25, 0.25]) == pytest.approx(-1.0)
    assert fit_loglog_slope(ranks, [1.0, 1.0, 1.0, 1.0, 1.0]) is None


def test_mid_interval_rms():
    grid = TimeGrid(T=1.0, n=100)
    assert mid_interval_rms(np.full(101, 2.0), grid) == pytest.approx(2.0)


def test_gibbs_layer_extent():
    grid = TimeGrid(T=1.0, n=100)
    error = np.full(101, 0.01)
    error[95] = 1.0
    assert gibbs_layer_extent(error, grid) == 95
    assert gibbs_layer_extent(np.full(101, 0.01), grid) is None
    with pytest.raises(DimensionError):
        gibbs_layer_extent(np.zeros(5), grid)


@pytest.mark.parametrize("N", [4, 8, 16])
def test_gibbs_layer_sits_at_the_far_end(sls, space, N):
    exact, _ = step_exact(sls, space.grid)
    S = restrict(assemble_closed_form(sls, BasisSpec(m=16, space=space)), N)
    approx = apply_reduced(svd_truncate(S, N), step_history(space.grid, 0.5), S.basis)
    idx = gibbs_layer_extent(exact.values - approx.values, space.grid)
    assert idx is None or space.grid.nodes[idx] >= sls.T - 4.0 * sls.T / N


def test_reduced_relaxation_function(sls, space):
    b = BasisSpec(m=20, space=space)
    rm = svd_truncate(assemble_closed_form(sls, b), b.M)
    for rho in (0.3, 0.7):
        expected = sls.k * (1.0 - math.exp(-sls.lam * rho)) / sls.lam
        assert reduced_relaxation_function(rm, rho, b) == pytest.approx(expected, abs=2e-2)
    assert reduced_relaxation_function(rm, 0.0, b) == 0.0
    curve = reduced_relaxation_curve(rm, [0.0, 0.5, 1.0], b)
    assert curve.shape == (3,)
    with pytest.raises(DimensionError):
        reduced_relaxation_function(rm, 1.5, b)
