"""
Sequential Warped Product Manifolds

This module:
1. Models the three factor charts and the warping functions f and h
2. Assembles the block metric (g1 + f^2 g2) + h^2 g3 symbolically
3. Samples deterministic point grids inside the chart boxes
4. Splits vector fields into per-factor blocks

Single-chart box domains are used for every factor.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from src.config import DEGENERACY_THRESHOLD, GRID_INSET_FRACTION
from src.geometry.errors import (
    DegenerateMetricError,
    FactorSpecError,
    ManifoldError,
    PointOutsideBoxError,
    WarpingFunctionError,
)
from src.geometry.expr import Expression

logger = logging.getLogger(__name__)


class WarpKind(str, Enum):
    GENERIC = "generic"
    STANDARD_STATIC = "standard-static"
    GRW = "grw"


# ===========================
# Points and boxes
# ===========================


@dataclass(frozen=True)
class Interval:
    low: float
    high: float

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise FactorSpecError(f"empty interval [{self.low}, {self.high}]")

    @property
    def length(self) -> float:
        return self.high - self.low

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low + self.high)

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high

    def samples(self, per_dim: int) -> np.ndarray:
        inset = GRID_INSET_FRACTION * self.length
        return np.linspace(self.low + inset, self.high - inset, per_dim)


@dataclass(frozen=True)
class Point:
    """Coordinate values covering every coordinate of a product"""

    names: tuple[str, ...]
    values: tuple[float, ...]

    @classmethod
    def from_mapping(cls, coords: dict[str, float]) -> Point:
        return cls(tuple(coords), tuple(float(v) for v in coords.values()))

    @cached_property
    def bindings(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def __getitem__(self, name: str) -> float:
        return self.bindings[name]

    def array(self, coords: Sequence[str]) -> np.ndarray:
        return np.array([self.bindings[name] for name in coords])

    def shifted(self, deltas: dict[str, float]) -> Point:
        values = tuple(v + deltas.get(n, 0.0) for n, v in zip(self.names, self.values))
        return Point(self.names, values)

    def as_dict(self) -> dict[str, float]:
        return dict(self.bindings)


# ===========================
# Coordinate metrics
# ===========================


@dataclass(frozen=True, eq=False)
class CoordinateMetric:
    """
    Symmetric matrix of expressions over a coordinate list.

    Derivative tables hold the nonzero first and second partial derivatives of
    the upper-triangular entries; they are built lazily and reused for every
    point. Points may bind extra variables, which act as parameters.
    """

    coords: tuple[str, ...]
    entries: tuple[tuple[Expression, ...], ...]
    label: str = "metric"

    def __post_init__(self) -> None:
        n = len(self.coords)
        if n == 0:
            raise FactorSpecError(f"{self.label}: metric needs at least one coordinate")
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise FactorSpecError(f"{self.label}: metric must be {n}x{n}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def _upper(self) -> list[tuple[int, int, Expression]]:
        return [
            (i, j, self.entries[i][j])
            for i in range(self.dim)
            for j in range(i, self.dim)
            if not self.entries[i][j].is_zero
        ]

    @cached_property
    def first_derivatives(self) -> list[tuple[int, int, int, Expression]]:
        table = []
        for i, j, entry in self._upper:
            for m, name in enumerate(self.coords):
                if name in entry.free_variables:
                    derivative = entry.differentiate(name)
                    if not derivative.is_zero:
                        table.append((m, i, j, derivative))
        return table

    @cached_property
    def second_derivatives(self) -> list[tuple[int, int, int, int, Expression]]:
        table = []
        for m, i, j, first in self.first_derivatives:
            for l in range(m, self.dim):
                name = self.coords[l]
                if name in first.free_variables:
                    derivative = first.differentiate(name)
                    if not derivative.is_zero:
                        table.append((m, l, i, j, derivative))
        return table

    def evaluate(self, point: Point) -> np.ndarray:
        env = point.bindings
        matrix = np.zeros((self.dim, self.dim))
        for i, j, entry in self._upper:
            matrix[i, j] = matrix[j, i] = entry.evaluate(env)
        return matrix

    def check_symmetric(self, point: Point) -> None:
        env = point.bindings
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                if self.entries[i][j].evaluate(env) != self.entries[j][i].evaluate(env):
                    raise FactorSpecError(
                        f"{self.label}: entries ({i},{j}) and ({j},{i}) differ at {point.as_dict()}"
                    )


def signature(matrix: np.ndarray) -> tuple[int, int]:
    """(negative, positive) eigenvalue counts of a symmetric matrix"""
    eigenvalues = np.linalg.eigvalsh(matrix)
    return int(np.sum(eigenvalues < 0)), int(np.sum(eigenvalues > 0))


# ===========================
# Factors and products
# ===========================


@dataclass(frozen=True, eq=False)
class Factor:
    """One semi-Riemannian factor chart (M_i, g_i) with its sample box"""

    name: str
    coords: tuple[str, ...]
    metric: tuple[tuple[Expression, ...], ...]
    box: tuple[Interval, ...]

    def __post_init__(self) -> None:
        if not self.coords:
            raise FactorSpecError(f"factor {self.name}: dimension 0 is not supported")
        if len(set(self.coords)) != len(self.coords):
            raise FactorSpecError(f"factor {self.name}: duplicate coordinates {self.coords}")
        if len(self.box) != len(self.coords):
            raise FactorSpecError(f"factor {self.name}: box needs one interval per coordinate")
        for row in self.metric:
            for entry in row:
                stray = entry.free_variables - set(self.coords)
                if stray:
                    raise FactorSpecError(
                        f"factor {self.name}: metric entry {entry} uses {sorted(stray)}"
                    )
        n = len(self.coords)
        if len(self.metric) != n or any(len(row) != n for row in self.metric):
            raise FactorSpecError(f"factor {self.name}: metric must be {n}x{n}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def coordinate_metric(self) -> CoordinateMetric:
        return CoordinateMetric(self.coords, self.metric, label=f"g[{self.name}]")


@dataclass(frozen=True, eq=False)
class SequentialWarpedProduct:
    """
    (M1 x_f M2) x_h M3 with metric (g1 + f^2 g2) + h^2 g3.

    Args:
        kind: generic, standard-static (M3 = I with -dt^2) or grw (M1 = I with -dt^2)
        factors: the three factors in order
        f: warping function over factor-1 coordinates
        h: warping function over factor-1 and factor-2 coordinates
    """

    kind: WarpKind
    factors: tuple[Factor, Factor, Factor]
    f: Expression
    h: Expression
    name: str = "instance"

    def __post_init__(self) -> None:
        if len(self.factors) != 3:
            raise ManifoldError("a sequential warped product has exactly three factors")
        names = [c for factor in self.factors for c in factor.coords]
        if len(set(names)) != len(names):
            raise ManifoldError(f"coordinate names must be distinct across factors: {names}")
        first, second, third = (set(factor.coords) for factor in self.factors)
        if not self.f.free_variables <= first:
            raise WarpingFunctionError(f"f may only depend on {sorted(first)}, got {self.f}")
        if not self.h.free_variables <= first | second:
            raise WarpingFunctionError(
                f"h may only depend on {sorted(first | second)}, got {self.h}"
            )
        if self.kind is WarpKind.STANDARD_STATIC:
            self._require_time_factor(2)
        elif self.kind is WarpKind.GRW:
            self._require_time_factor(0)

    def _require_time_factor(self, index: int) -> None:
        factor = self.factors[index]
        entry = factor.metric[0][0]
        if factor.dim != 1 or not entry.is_constant or entry.evaluate({}) != -1.0:
            raise ManifoldError(
                f"{self.kind.value}: factor {index + 1} must be an interval with metric -dt^2"
            )

    # Layout ----------------------------------------------------------------

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.factors[0].dim, self.factors[1].dim, self.factors[2].dim)

    @property
    def dim(self) -> int:
        return sum(self.dims)

    @cached_property
    def coords(self) -> tuple[str, ...]:
        return tuple(c for factor in self.factors for c in factor.coords)

    @cached_property
    def block_slices(self) -> tuple[slice, slice, slice]:
        n1, n2, n3 = self.dims
        return (slice(0, n1), slice(n1, n1 + n2), slice(n1 + n2, n1 + n2 + n3))

    def block_of(self, coord: str) -> int:
        """0-based factor index owning a coordinate"""
        for index, factor in enumerate(self.factors):
            if coord in factor.coords:
                return index
        raise ManifoldError(f"unknown coordinate '{coord}'")

    @property
    def time_coordinate(self) -> Optional[str]:
        if self.kind is WarpKind.STANDARD_STATIC:
            return self.factors[2].coords[0]
        if self.kind is WarpKind.GRW:
            return self.factors[0].coords[0]
        return None

    @cached_property
    def box(self) -> dict[str, Interval]:
        return {c: interval for factor in self.factors
                for c, interval in zip(factor.coords, factor.box)}

    # Symbolic metrics ------------------------------------------------------

    def _scaled(self, factor: Factor, scale: Expression, coords: tuple[str, ...]
                ) -> list[list[Expression]]:
        return [[(scale * entry).with_variables(coords) for entry in row] for row in factor.metric]

    def _block_metric(self, blocks: Sequence[list[list[Expression]]], coords: tuple[str, ...],
                      label: str) -> CoordinateMetric:
        n = len(coords)
        zero = Expression.constant(0.0, coords)
        rows = [[zero] * n for _ in range(n)]
        offset = 0
        for block in blocks:
            size = len(block)
            for i in range(size):
                for j in range(size):
                    rows[offset + i][offset + j] = block[i][j]
            offset += size
        return CoordinateMetric(coords, tuple(tuple(row) for row in rows), label=label)

    @cached_property
    def coordinate_metric(self) -> CoordinateMetric:
        coords = self.coords
        one = Expression.constant(1.0, coords)
        return self._block_metric(
            [
                self._scaled(self.factors[0], one, coords),
                self._scaled(self.factors[1], self.f ** 2, coords),
                self._scaled(self.factors[2], self.h ** 2, coords),
            ],
            coords,
            label=f"g[{self.name}]",
        )

    @cached_property
    def base_metric(self) -> CoordinateMetric:
        """g1 + f^2 g2 on M1 x_f M2, without the third factor"""
        coords = self.factors[0].coords + self.factors[1].coords
        one = Expression.constant(1.0, coords)
        return self._block_metric(
            [
                self._scaled(self.factors[0], one, coords),
                self._scaled(self.factors[1], self.f ** 2, coords),
            ],
            coords,
            label=f"gbar[{self.name}]",
        )

    def factor_metric(self, index: int) -> CoordinateMetric:
        """Bare metric of factor `index` (0-based)"""
        return self.factors[index].coordinate_metric

    @cached_property
    def restricted_h(self) -> Expression:
        """h with factor-2 coordinates fixed at the midpoints of their intervals"""
        second = self.factors[1]
        middle = {c: interval.midpoint for c, interval in zip(second.coords, second.box)}
        return self.h.substitute(middle)

    # Points ----------------------------------------------------------------

    def check_point(self, point: Point) -> None:
        for name in self.coords:
            try:
                value = point[name]
            except KeyError:
                raise PointOutsideBoxError(
                    f"point {point.as_dict()} lacks coordinate '{name}'"
                ) from None
            if not self.box[name].contains(value):
                interval = self.box[name]
                raise PointOutsideBoxError(
                    f"{name}={value} outside [{interval.low}, {interval.high}]"
                )

    def assemble_metric(self, point: Point) -> np.ndarray:
        """Block-diagonal metric [g1 | f^2 g2 | h^2 g3] at a point inside the box"""
        self.check_point(point)
        for factor in self.factors:
            value = factor.coordinate_metric.evaluate(point)
            if abs(np.linalg.det(value)) <= DEGENERACY_THRESHOLD:
                raise DegenerateMetricError(
                    f"factor {factor.name} metric is degenerate at {point.as_dict()}"
                )
        return self.coordinate_metric.evaluate(point)

    def sample_grid(self, per_dim: int) -> list[Point]:
        return sample_grid(self, per_dim)

    def validate(self, grid: Iterable[Point]) -> None:
        """
        Check warping positivity, factor symmetry, nondegeneracy and constant
        signature on a grid.
        """
        signatures: dict[str, tuple[int, int]] = {}
        for point in grid:
            env = point.bindings
            f_value, h_value = self.f.evaluate(env), self.h.evaluate(env)
            if f_value <= 0.0 or h_value <= 0.0:
                raise WarpingFunctionError(
                    f"warping functions must be positive: f={f_value}, h={h_value} "
                    f"at {point.as_dict()}"
                )
            for factor in self.factors:
                metric = factor.coordinate_metric
                metric.check_symmetric(point)
                value = metric.evaluate(point)
                if abs(np.linalg.det(value)) <= DEGENERACY_THRESHOLD:
                    raise DegenerateMetricError(
                        f"factor {factor.name} metric is degenerate at {point.as_dict()}"
                    )
                current = signature(value)
                if signatures.setdefault(factor.name, current) != current:
                    raise DegenerateMetricError(
                        f"factor {factor.name} changes signature at {point.as_dict()}"
                    )
        logger.debug("validated %s on grid", self.name)


def sample_grid(manifold: SequentialWarpedProduct, per_dim: int) -> list[Point]:
    """
    Tensor-product grid, inset 5% from every interval end.

    Ordered lexicographically by coordinate name, then sample index.
    """
    if per_dim < 2:
        raise ManifoldError(f"per_dim must be at least 2, got {per_dim}")
    ordered = sorted(manifold.coords)
    axes = [manifold.box[name].samples(per_dim) for name in ordered]
    points = []
    for combo in itertools.product(*axes):
        values = dict(zip(ordered, combo))
        points.append(Point(manifold.coords, tuple(float(values[c]) for c in manifold.coords)))
    return points


MetricSource = Union[CoordinateMetric, Factor, SequentialWarpedProduct]


def as_coordinate_metric(source: MetricSource) -> CoordinateMetric:
    if isinstance(source, CoordinateMetric):
        return source
    return source.coordinate_metric


# ===========================
# Fields
# ===========================


@dataclass(frozen=True, eq=False)
class ScalarFieldSpec:
    """Scalar function over a subset of the product coordinates"""

    expression: Expression
    name: str = "u"

    @classmethod
    def on(cls, manifold: SequentialWarpedProduct, expression: Expression, name: str = "u"
           ) -> ScalarFieldSpec:
        stray = expression.free_variables - set(manifold.coords)
        if stray:
            raise ManifoldError(f"scalar field {name} uses unknown coordinates {sorted(stray)}")
        return cls(expression.with_variables(manifold.coords), name)


@dataclass(frozen=True)
class Rejection:
    """A vector field block referencing another factor's coordinate"""

    factor: int
    component: int
    variable: str

    @property
    def message(self) -> str:
        return (
            f"factor-{self.factor + 1} component {self.component} references "
            f"coordinate '{self.variable}' of another factor"
        )


@dataclass(frozen=True)
class Decomposition:
    """Per-factor component views X1, X2, X3"""

    blocks: tuple[tuple[Expression, ...], ...]


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    """
    Vector field given per factor block.

    Components are expressions over the product coordinates; the field is
    structured when block i only references factor-i coordinates.
    """

    factor_coords: tuple[tuple[str, ...], ...]
    components: tuple[tuple[Expression, ...], ...]
    name: str = "X"

    def __post_init__(self) -> None:
        if len(self.components) != len(self.factor_coords):
            raise ManifoldError(f"vector field {self.name}: one component block per factor")
        for index, (coords, block) in enumerate(zip(self.factor_coords, self.components)):
            if len(coords) != len(block):
                raise ManifoldError(
                    f"vector field {self.name}: block {index + 1} needs {len(coords)} components"
                )

    @classmethod
    def on(cls, manifold: SequentialWarpedProduct, blocks: Sequence[Sequence[Expression]],
           name: str = "X") -> VectorFieldSpec:
        coords = manifold.coords
        for block in blocks:
            for component in block:
                stray = component.free_variables - set(coords)
                if stray:
                    raise ManifoldError(
                        f"vector field {name} uses unknown coordinates {sorted(stray)}"
                    )
        return cls(
            tuple(factor.coords for factor in manifold.factors),
            tuple(tuple(c.with_variables(coords) for c in block) for block in blocks),
            name,
        )

    @classmethod
    def zero(cls, manifold: SequentialWarpedProduct, name: str = "X") -> VectorFieldSpec:
        zero = Expression.constant(0.0, manifold.coords)
        return cls.on(manifold, [[zero] * factor.dim for factor in manifold.factors], name)

    @property
    def coords(self) -> tuple[str, ...]:
        return tuple(c for block in self.factor_coords for c in block)

    @property
    def flat_components(self) -> tuple[Expression, ...]:
        return tuple(c for block in self.components for c in block)

    def first_violation(self) -> Optional[Rejection]:
        for index, (coords, block) in enumerate(zip(self.factor_coords, self.components)):
            for position, component in enumerate(block):
                stray = sorted(component.free_variables - set(coords))
                if stray:
                    return Rejection(index, position, stray[0])
        return None

    @property
    def structured(self) -> bool:
        return self.first_violation() is None


def decompose_vector_field(field_spec: VectorFieldSpec) -> Union[Decomposition, Rejection]:
    violation = field_spec.first_violation()
    if violation is not None:
        return violation
    return Decomposition(field_spec.components)
