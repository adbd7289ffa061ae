"""
Unit tests for factors, sequential warped products, grids and fields
"""

import numpy as np
import pytest

from conftest import catalog, vector_field
from src.geometry.errors import (
    DegenerateMetricError,
    FactorSpecError,
    ManifoldError,
    PointOutsideBoxError,
    WarpingFunctionError,
)
from src.geometry.expr import parse
from src.geometry.manifold import (
    Decomposition,
    Factor,
    Interval,
    Point,
    Rejection,
    SequentialWarpedProduct,
    VectorFieldSpec,
    WarpKind,
    decompose_vector_field,
)


def line(name: str, coord: str, entry: str = "1", box=(-1.0, 1.0)) -> Factor:
    return Factor(name, (coord,), ((parse(entry, (coord,)),),), (Interval(*box),))


def product(f: str = "1", h: str = "1", kind: WarpKind = WarpKind.GENERIC,
            third: str = "1") -> SequentialWarpedProduct:
    factors = (line("M1", "x"), line("M2", "y"), line("M3", "z", third))
    return SequentialWarpedProduct(kind, factors, parse(f, ("x",)), parse(h, ("x", "y")))


def test_assembled_metric_is_block_diagonal(rand_riemann):
    """g = diag(1, f^2, h^2) for one-dimensional flat factors"""
    point = Point(("x", "y", "z"), (0.5, 0.4, 0.3))
    f = 1 + 0.25
    h = 1 + 0.25 + 0.16
    expected = np.diag([1.0, f**2, h**2])
    np.testing.assert_allclose(rand_riemann.assemble_metric(point), expected, rtol=1e-12)


def test_block_layout(hyp3):
    assert hyp3.dims == (1, 1, 1)
    assert hyp3.coords == ("x", "y", "z")
    assert hyp3.block_slices == (slice(0, 1), slice(1, 2), slice(2, 3))
    assert hyp3.block_of("z") == 2
    with pytest.raises(ManifoldError):
        hyp3.block_of("w")


def test_time_coordinate(mink, desitter, flat3):
    assert mink.time_coordinate == "t"
    assert desitter.time_coordinate == "t"
    assert flat3.time_coordinate is None


def test_grid_is_inset_and_ordered(flat3):
    """Grid has per_dim^n points, inset 5% from the box and in lexicographic order"""
    grid = flat3.sample_grid(5)
    assert len(grid) == 125
    values = np.array([p.values for p in grid])
    assert values.min() == pytest.approx(-0.9)
    assert values.max() == pytest.approx(0.9)
    assert grid[0].as_dict() == pytest.approx({"x": -0.9, "y": -0.9, "z": -0.9})
    assert grid[1].as_dict()["z"] == pytest.approx(-0.45)


def test_grid_needs_two_samples(flat3):
    with pytest.raises(ManifoldError):
        flat3.sample_grid(1)


def test_point_outside_box(flat3):
    with pytest.raises(PointOutsideBoxError):
        flat3.assemble_metric(Point(("x", "y", "z"), (2.0, 0.0, 0.0)))


def test_empty_interval_rejected():
    with pytest.raises(FactorSpecError):
        Interval(1.0, 1.0)


def test_zero_dimensional_factor_rejected():
    with pytest.raises(FactorSpecError):
        Factor("M1", (), (), ())


def test_metric_entry_must_use_own_coordinates():
    with pytest.raises(FactorSpecError):
        Factor("M1", ("x",), ((parse("1 + y", ("x", "y")),),), (Interval(-1, 1),))


def test_warping_dependencies_enforced():
    factors = (line("M1", "x"), line("M2", "y"), line("M3", "z"))
    with pytest.raises(WarpingFunctionError):
        SequentialWarpedProduct(WarpKind.GENERIC, factors, parse("y", ("x", "y")),
                                parse("1", ("x", "y")))


def test_non_positive_warping_rejected_on_grid():
    manifold = product(f="x")
    with pytest.raises(WarpingFunctionError):
        manifold.validate(manifold.sample_grid(3))


def test_degenerate_factor_rejected_on_grid():
    factors = (line("M1", "x", "x^2", box=(-1.0, 1.0)), line("M2", "y"), line("M3", "z"))
    manifold = SequentialWarpedProduct(WarpKind.GENERIC, factors, parse("1", ("x",)),
                                       parse("1", ("x", "y")))
    with pytest.raises(DegenerateMetricError):
        manifold.validate(manifold.sample_grid(3))


def test_signature_change_rejected():
    factors = (line("M1", "x", "x", box=(-1.0, 1.0)), line("M2", "y"), line("M3", "z"))
    manifold = SequentialWarpedProduct(WarpKind.GENERIC, factors, parse("1", ("x",)),
                                       parse("1", ("x", "y")))
    with pytest.raises(DegenerateMetricError):
        manifold.validate(manifold.sample_grid(4))


def test_static_kind_needs_time_interval():
    with pytest.raises(ManifoldError):
        product(kind=WarpKind.STANDARD_STATIC)
    assert product(kind=WarpKind.STANDARD_STATIC, third="-1").time_coordinate == "z"


def test_restricted_h_fixes_second_factor_at_midpoint():
    factors = (line("M1", "x"), line("M2", "y", box=(0.0, 2.0)), line("M3", "z"))
    manifold = SequentialWarpedProduct(WarpKind.GENERIC, factors, parse("1", ("x",)),
                                       parse("1 + x^2 + y", ("x", "y")))
    assert manifold.restricted_h.free_variables == frozenset({"x"})
    assert manifold.restricted_h.evaluate({"x": 1.0}) == 3.0


def test_catalog_instances_validate():
    for name in ("flat3", "hyp3", "mink-static", "desitter-grw", "rand-riemann"):
        manifold = catalog(name)
        manifold.validate(manifold.sample_grid(3))


def test_structured_field_decomposes(flat3):
    field = vector_field(flat3, [["x"], ["y"], ["z"]])
    decomposition = decompose_vector_field(field)
    assert isinstance(decomposition, Decomposition)
    assert [block[0].to_source() for block in decomposition.blocks] == ["x", "y", "z"]


def test_mixed_field_is_rejected(flat3):
    """X1 = y d/dx references a factor-2 coordinate"""
    field = vector_field(flat3, [["y"], ["0"], ["0"]])
    rejection = decompose_vector_field(field)
    assert isinstance(rejection, Rejection)
    assert (rejection.factor, rejection.component, rejection.variable) == (0, 0, "y")
    assert "factor-1" in rejection.message
    assert not field.structured


def test_zero_field_is_structured(hyp3):
    field = VectorFieldSpec.zero(hyp3)
    assert field.structured
    assert all(c.is_zero for c in field.flat_components)


def test_field_block_sizes_checked(flat3):
    with pytest.raises(ManifoldError):
        vector_field(flat3, [["x", "y"], ["0"], ["0"]])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
