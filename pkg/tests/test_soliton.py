"""
Unit tests for soliton residuals and field classification
"""

import numpy as np
import pytest

from conftest import scalar_field, vector_field
from src.geometry.errors import ManifoldError, MissingAuxiliaryDataError, SingularMetricError
from src.geometry.expr import parse
from src.geometry.manifold import VectorFieldSpec
from src.geometry.soliton import (
    HessianSelector,
    LiePath,
    SolitonInstance,
    conformal_extract,
    einstein_extract,
    gradient_rbs_residual,
    killing_check,
    lie_samples,
    proportional_hessian_extract,
    rbs_residual,
    trace_factors,
)


@pytest.mark.parametrize("rho", [0.0, 0.1, 1.0])
def test_hyperbolic_space_is_a_trivial_rbs(hyp3, rho):
    """Ric = -2 g and R = -6, so X = 0 with lambda = -2 + 6 rho solves the equation"""
    instance = SolitonInstance(hyp3, -2.0 + 6.0 * rho, rho, field=VectorFieldSpec.zero(hyp3))
    stats = rbs_residual(instance, hyp3.sample_grid(5))
    assert stats.max_abs < 1e-8
    assert len(stats.per_block) == 3
    assert all(len(row) == 3 for row in stats.per_block)


def test_wrong_lambda_shows_in_residual(hyp3):
    instance = SolitonInstance(hyp3, -1.0, 0.0, field=VectorFieldSpec.zero(hyp3))
    stats = rbs_residual(instance, hyp3.sample_grid(3))
    assert stats.max_abs == pytest.approx(np.exp(2 * 0.9), rel=1e-8)
    assert stats.worst_point["x"] == pytest.approx(0.9)


def test_gaussian_soliton_on_flat_space(flat3):
    """u = |x|^2 / 2 gives Hess u = g, a shrinking gradient Ricci soliton with lambda = 1"""
    u = scalar_field(flat3, "(x^2 + y^2 + z^2) / 2")
    instance = SolitonInstance(flat3, 1.0, 0.0, potential=u)
    assert gradient_rbs_residual(instance, flat3.sample_grid(5)).max_abs < 1e-10


def test_gradient_potential_also_satisfies_vector_form(flat3):
    """rbs_residual on an instance carrying u uses X = grad u"""
    u = scalar_field(flat3, "(x^2 + y^2 + z^2) / 2")
    instance = SolitonInstance(flat3, 1.0, 0.0, potential=u)
    assert rbs_residual(instance, flat3.sample_grid(3)).max_abs < 1e-10


def test_gradient_form_needs_potential(flat3):
    instance = SolitonInstance(flat3, 0.0, 0.0, field=VectorFieldSpec.zero(flat3))
    with pytest.raises(MissingAuxiliaryDataError):
        gradient_rbs_residual(instance, flat3.sample_grid(2))


def test_instance_needs_exactly_one_potential(flat3):
    with pytest.raises(ManifoldError):
        SolitonInstance(flat3, 0.0, 0.0)
    with pytest.raises(ManifoldError):
        SolitonInstance(flat3, 0.0, 0.0, field=VectorFieldSpec.zero(flat3),
                        potential=scalar_field(flat3, "x"))


def test_labels(flat3):
    zero = VectorFieldSpec.zero(flat3)
    u = scalar_field(flat3, "x")
    assert SolitonInstance(flat3, 0.0, 0.0, field=zero).label == "Ricci soliton"
    assert SolitonInstance(flat3, 0.0, 0.5, field=zero).label == "Ricci-Bourguignon soliton"
    assert SolitonInstance(flat3, 0.0, 0.0, potential=u).label == "gradient Ricci soliton"
    assert SolitonInstance(flat3, 0.0, 0.5, potential=u).is_gradient


def test_closed_form_lie_path_matches_oracle(rand_riemann):
    field = vector_field(rand_riemann, [["x"], ["y^2"], ["z"]])
    grid = rand_riemann.sample_grid(3)
    exact = lie_samples(rand_riemann, field, grid, LiePath.ORACLE)
    closed = lie_samples(rand_riemann, field, grid, LiePath.CLOSED_FORM)
    np.testing.assert_allclose(closed, exact, atol=1e-10)


def test_closed_form_lie_path_needs_structured_field(flat3):
    mixed = list(vector_field(flat3, [["y"], ["0"], ["0"]]).flat_components)
    with pytest.raises(ManifoldError):
        lie_samples(flat3, mixed, flat3.sample_grid(2), LiePath.CLOSED_FORM)


def test_killing_and_conformal_classification(flat3):
    grid = flat3.sample_grid(3)
    translation = vector_field(flat3, [["1"], ["0"], ["0"]])
    holds, stats = killing_check(flat3, translation, grid, 1e-10)
    assert holds and stats.max_abs == 0.0

    dilation = vector_field(flat3, [["x"], ["y"], ["z"]])
    holds, _ = killing_check(flat3, dilation, grid, 1e-10)
    assert not holds
    fit = conformal_extract(flat3, dilation, grid)
    assert fit.mean == pytest.approx(1.0)
    assert fit.holds(1e-10, constant=True)


def test_conformal_fit_on_a_factor(hyp3):
    """On the bare first factor d_x is Killing"""
    factor = hyp3.factors[0]
    fit = conformal_extract(factor, [parse("1", factor.coords)], hyp3.sample_grid(2))
    assert fit.spread == 0.0 and fit.mean == 0.0


def test_einstein_extract(hyp3, rand_riemann):
    fit = einstein_extract(hyp3, hyp3.sample_grid(3))
    assert fit.mean == pytest.approx(-2.0)
    assert fit.holds(1e-9, constant=True)

    fit = einstein_extract(rand_riemann, rand_riemann.sample_grid(3))
    assert not fit.holds(1e-6)


def test_proportional_hessians_on_hyperbolic_space(hyp3):
    """Hess1 f = e^x g1 and HessBar h = e^x gbar for f = h = e^x"""
    grid = hyp3.sample_grid(3)
    sigma = proportional_hessian_extract(hyp3, HessianSelector.FIRST_FACTOR, grid)
    psi = proportional_hessian_extract(hyp3, HessianSelector.BASE, grid)
    expected = [np.exp(p["x"]) for p in grid]
    np.testing.assert_allclose(sigma.factor_samples, expected, rtol=1e-12)
    np.testing.assert_allclose(psi.factor_samples, expected, rtol=1e-10)
    assert psi.residual.max_abs < 1e-10
    assert not psi.holds(1e-6, constant=True)


def test_trace_factors():
    """tr(g^-1 T) / n recovers the multiple and a singular metric sample is reported"""
    metrics = np.array([np.diag([1.0, 4.0]), np.diag([-1.0, 2.0])])
    tensors = np.array([3.0 * metrics[0], -0.5 * metrics[1]])
    assert trace_factors(tensors, metrics, 2.0) == pytest.approx([3.0, -0.5])

    singular = np.array([[[1.0, 1.0], [1.0, 1.0]]])
    with pytest.raises(SingularMetricError, match="not invertible"):
        trace_factors(np.ones((1, 2, 2)), singular, 2.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
