"""
Coordinate Curvature Oracle

This module:
1. Evaluates metric jets (g, dg, ddg) from exact symbolic derivatives
2. Computes Christoffel symbols, Riemann, Ricci and scalar curvature
3. Computes Hessians, gradients, Laplacians and Lie derivatives of the metric

Conventions:
    Gamma[k, i, j]  = G^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    riemann[l, i, j, k] = R^l_ijk = d_j G^l_ik - d_k G^l_ij + G^l_jm G^m_ik - G^l_km G^m_ij
    ricci[i, k] = R^l_ilk

Everything here is computed from the assembled coordinate metric alone.
A central-difference jet is available as an independent cross-check backend.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from src.config import CONDITION_WARNING, DEGENERACY_THRESHOLD, FD_STEP
from src.geometry.errors import ManifoldError, SingularMetricError
from src.geometry.expr import Expression
from src.geometry.manifold import (
    CoordinateMetric,
    MetricSource,
    Point,
    ScalarFieldSpec,
    VectorFieldSpec,
    as_coordinate_metric,
)

logger = logging.getLogger(__name__)

ScalarSource = Union[ScalarFieldSpec, Expression]
VectorSource = Union[VectorFieldSpec, Sequence[Expression]]


class Backend(str, Enum):
    SYMBOLIC = "symbolic"
    FINITE_DIFFERENCE = "finite-difference"


class FieldKind(str, Enum):
    VECTOR = "vector"
    COVECTOR = "covector"
    TENSOR = "2-tensor"


class Provenance(str, Enum):
    ORACLE = "oracle"
    CLOSED_FORM = "closedform"


# ===========================
# Data Models
# ===========================


@dataclass(frozen=True)
class MetricJet:
    """g, first[m, i, j] = d_m g_ij and second[m, l, i, j] = d_m d_l g_ij at a point"""

    coords: tuple[str, ...]
    value: np.ndarray
    first: np.ndarray
    second: np.ndarray


@dataclass(frozen=True)
class ChristoffelSample:
    coords: tuple[str, ...]
    point: Point
    gamma: np.ndarray
    inverse: np.ndarray
    determinant: float
    condition: Optional[float] = None


@dataclass(frozen=True)
class FieldSample:
    kind: FieldKind
    coords: tuple[str, ...]
    point: Point
    components: np.ndarray
    provenance: Provenance = Provenance.ORACLE

    def component(self, *names: str) -> float:
        index = tuple(self.coords.index(name) for name in names)
        return float(self.components[index])


@dataclass(frozen=True)
class CurvatureSample:
    christoffel: ChristoffelSample
    gamma_derivative: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float


# ===========================
# Jets
# ===========================


def metric_jet(metric: CoordinateMetric, point: Point) -> MetricJet:
    """Metric value and exact first/second derivatives at a point"""
    n = metric.dim
    env = point.bindings
    first = np.zeros((n, n, n))
    second = np.zeros((n, n, n, n))
    for m, i, j, expr in metric.first_derivatives:
        first[m, i, j] = first[m, j, i] = expr.evaluate(env)
    for m, l, i, j, expr in metric.second_derivatives:
        value = expr.evaluate(env)
        second[m, l, i, j] = second[m, l, j, i] = value
        second[l, m, i, j] = second[l, m, j, i] = value
    return MetricJet(metric.coords, metric.evaluate(point), first, second)


def finite_difference_jet(metric: CoordinateMetric, point: Point, step: float = FD_STEP
                          ) -> MetricJet:
    """Central differences of the metric values only (cross-check backend)"""
    n = metric.dim
    coords = metric.coords
    value = metric.evaluate(point)

    def at(shifts: dict[str, float]) -> np.ndarray:
        return metric.evaluate(point.shifted(shifts))

    first = np.zeros((n, n, n))
    second = np.zeros((n, n, n, n))
    for m, a in enumerate(coords):
        plus, minus = at({a: step}), at({a: -step})
        first[m] = (plus - minus) / (2.0 * step)
        second[m, m] = (plus - 2.0 * value + minus) / step**2
        for l in range(m + 1, n):
            b = coords[l]
            mixed = (
                at({a: step, b: step})
                - at({a: step, b: -step})
                - at({a: -step, b: step})
                + at({a: -step, b: -step})
            ) / (4.0 * step**2)
            second[m, l] = second[l, m] = mixed
    return MetricJet(coords, value, first, second)


@lru_cache(maxsize=16384)
def _jet(metric: CoordinateMetric, point: Point, backend: Backend) -> MetricJet:
    if backend is Backend.FINITE_DIFFERENCE:
        return finite_difference_jet(metric, point)
    return metric_jet(metric, point)


def _invert(matrix: np.ndarray, label: str) -> tuple[np.ndarray, float, Optional[float]]:
    """Inverse by LU with partial pivoting; condition reported above the warning level"""
    lu, pivots = lu_factor(matrix, check_finite=True)
    swaps = int(np.count_nonzero(pivots != np.arange(len(pivots))))
    determinant = float((-1) ** swaps * np.prod(np.diag(lu)))
    if abs(determinant) <= DEGENERACY_THRESHOLD:
        raise SingularMetricError(f"{label}: |det| = {abs(determinant):.3e} is singular")
    inverse = lu_solve((lu, pivots), np.eye(len(matrix)))
    condition = float(np.linalg.cond(matrix))
    if condition > CONDITION_WARNING:
        logger.warning("%s: metric condition number %.3e", label, condition)
        return inverse, determinant, condition
    return inverse, determinant, None


# ===========================
# Connection and curvature
# ===========================


def _lowered_christoffel(first: np.ndarray) -> np.ndarray:
    # [l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    return 0.5 * (np.einsum("ijl->lij", first) + np.einsum("jil->lij", first) - first)


@lru_cache(maxsize=16384)
def _christoffel(metric: CoordinateMetric, point: Point, backend: Backend) -> ChristoffelSample:
    jet = _jet(metric, point, backend)
    inverse, determinant, condition = _invert(jet.value, metric.label)
    gamma = np.einsum("kl,lij->kij", inverse, _lowered_christoffel(jet.first))
    gamma = 0.5 * (gamma + gamma.transpose(0, 2, 1))
    return ChristoffelSample(metric.coords, point, gamma, inverse, determinant, condition)


@lru_cache(maxsize=16384)
def _curvature(metric: CoordinateMetric, point: Point, backend: Backend) -> CurvatureSample:
    jet = _jet(metric, point, backend)
    sample = _christoffel(metric, point, backend)
    gamma, inverse = sample.gamma, sample.inverse

    lowered = _lowered_christoffel(jet.first)
    second = jet.second
    d_lowered = 0.5 * (
        np.einsum("mijl->mlij", second) + np.einsum("mjil->mlij", second) - second
    )
    d_inverse = -np.einsum("ka,mab,bl->mkl", inverse, jet.first, inverse)
    d_gamma = np.einsum("mkl,lij->mkij", d_inverse, lowered) + np.einsum(
        "kl,mlij->mkij", inverse, d_lowered
    )
    d_gamma = 0.5 * (d_gamma + d_gamma.transpose(0, 1, 3, 2))

    riemann = (
        np.einsum("jlik->lijk", d_gamma)
        - np.einsum("klij->lijk", d_gamma)
        + np.einsum("ljm,mik->lijk", gamma, gamma)
        - np.einsum("lkm,mij->lijk", gamma, gamma)
    )
    ricci = np.einsum("lilk->ik", riemann)
    scalar = float(np.einsum("ik,ik->", inverse, ricci))
    return CurvatureSample(sample, d_gamma, riemann, ricci, scalar)


def curvature_at(metric: MetricSource, point: Point, backend: Backend = Backend.SYMBOLIC
                 ) -> CurvatureSample:
    return _curvature(as_coordinate_metric(metric), point, backend)


def christoffel(metric: MetricSource, point: Point, backend: Backend = Backend.SYMBOLIC
                ) -> ChristoffelSample:
    """Levi-Civita connection coefficients G^k_ij, symmetric in (i, j)"""
    return _christoffel(as_coordinate_metric(metric), point, backend)


def riemann(metric: MetricSource, point: Point, backend: Backend = Backend.SYMBOLIC
            ) -> np.ndarray:
    return curvature_at(metric, point, backend).riemann


def ricci(metric: MetricSource, point: Point, backend: Backend = Backend.SYMBOLIC
          ) -> FieldSample:
    cm = as_coordinate_metric(metric)
    return FieldSample(FieldKind.TENSOR, cm.coords, point, _curvature(cm, point, backend).ricci)


def scalar_curvature(metric: MetricSource, point: Point, backend: Backend = Backend.SYMBOLIC
                     ) -> float:
    return curvature_at(metric, point, backend).scalar


def first_bianchi_residual(metric: MetricSource, point: Point) -> float:
    """max |R^l_ijk + R^l_jki + R^l_kij|"""
    r = riemann(metric, point)
    cyclic = r + np.einsum("ljki->lijk", r) + np.einsum("lkij->lijk", r)
    return float(np.max(np.abs(cyclic)))


# ===========================
# Scalar and vector fields
# ===========================


def _scalar_expression(u: ScalarSource) -> Expression:
    return u.expression if isinstance(u, ScalarFieldSpec) else u


SecondDerivatives = dict[tuple[int, int], Expression]


@lru_cache(maxsize=4096)
def _scalar_derivatives(expr: Expression, coords: tuple[str, ...]
                        ) -> tuple[tuple[Optional[Expression], ...], SecondDerivatives]:
    gradient: list[Optional[Expression]] = []
    hessian: dict[tuple[int, int], Expression] = {}
    for i, a in enumerate(coords):
        if a not in expr.free_variables:
            gradient.append(None)
            continue
        first = expr.differentiate(a)
        gradient.append(first)
        for j in range(i, len(coords)):
            b = coords[j]
            if b in first.free_variables:
                hessian[(i, j)] = first.differentiate(b)
    return tuple(gradient), hessian


def scalar_jet(u: ScalarSource, coords: tuple[str, ...], point: Point
               ) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, coordinate gradient and coordinate second derivatives of u"""
    expr = _scalar_expression(u)
    env = point.bindings
    gradient_exprs, hessian_exprs = _scalar_derivatives(expr, coords)
    n = len(coords)
    grad = np.array([0.0 if d is None else d.evaluate(env) for d in gradient_exprs])
    second = np.zeros((n, n))
    for (i, j), d in hessian_exprs.items():
        second[i, j] = second[j, i] = d.evaluate(env)
    return expr.evaluate(env), grad, second


def _vector_components(metric: CoordinateMetric, field: VectorSource) -> tuple[Expression, ...]:
    if isinstance(field, VectorFieldSpec):
        if field.coords != metric.coords:
            raise ManifoldError(
                f"vector field {field.name} lives on {field.coords}, metric on {metric.coords}"
            )
        return field.flat_components
    components = tuple(field)
    if len(components) != metric.dim:
        raise ManifoldError(f"expected {metric.dim} vector components, got {len(components)}")
    return components


def vector_jet(metric: CoordinateMetric, field: VectorSource, point: Point
               ) -> tuple[np.ndarray, np.ndarray]:
    """Components X^k and jacobian[i, k] = d_i X^k"""
    n = metric.dim
    values = np.zeros(n)
    jacobian = np.zeros((n, n))
    env = point.bindings
    for k, component in enumerate(_vector_components(metric, field)):
        values[k] = component.evaluate(env)
        for i, name in enumerate(metric.coords):
            if name in component.free_variables:
                jacobian[i, k] = _partial(component, name).evaluate(env)
    return values, jacobian


@lru_cache(maxsize=4096)
def _partial(expr: Expression, name: str) -> Expression:
    return expr.differentiate(name)


def hessian(metric: MetricSource, u: ScalarSource, point: Point) -> FieldSample:
    """Hess u(d_i, d_j) = d_i d_j u - G^k_ij d_k u"""
    cm = as_coordinate_metric(metric)
    gamma = christoffel(cm, point).gamma
    _, grad, second = scalar_jet(u, cm.coords, point)
    components = second - np.einsum("kij,k->ij", gamma, grad)
    return FieldSample(FieldKind.TENSOR, cm.coords, point, components)


def differential(metric: MetricSource, u: ScalarSource, point: Point) -> FieldSample:
    """du = d_i u dx^i"""
    cm = as_coordinate_metric(metric)
    _, grad, _ = scalar_jet(u, cm.coords, point)
    return FieldSample(FieldKind.COVECTOR, cm.coords, point, grad)


def gradient(metric: MetricSource, u: ScalarSource, point: Point) -> FieldSample:
    """grad u = g^ij d_j u d_i, signs of the inverse metric included"""
    cm = as_coordinate_metric(metric)
    inverse = christoffel(cm, point).inverse
    du = differential(cm, u, point)
    return FieldSample(FieldKind.VECTOR, cm.coords, point, inverse @ du.components)


def laplacian(metric: MetricSource, u: ScalarSource, point: Point) -> float:
    cm = as_coordinate_metric(metric)
    inverse = christoffel(cm, point).inverse
    return float(np.einsum("ij,ij->", inverse, hessian(cm, u, point).components))


def _lie_from_jet(jet: MetricJet, gamma: np.ndarray, values: np.ndarray, jacobian: np.ndarray
                  ) -> np.ndarray:
    g = jet.value
    lowered = g @ values
    # d_i (g_jk X^k)
    d_lowered = np.einsum("ijk,k->ij", jet.first, values) + np.einsum("jk,ik->ij", g, jacobian)
    covariant = d_lowered - np.einsum("kij,k->ij", gamma, lowered)
    return covariant + covariant.T


def lie_derivative(metric: MetricSource, field: VectorSource, point: Point) -> FieldSample:
    """(L_X g)_ij = nabla_i X_j + nabla_j X_i with X lowered by g"""
    cm = as_coordinate_metric(metric)
    jet = _jet(cm, point, Backend.SYMBOLIC)
    gamma = christoffel(cm, point).gamma
    values, jacobian = vector_jet(cm, field, point)
    lie = _lie_from_jet(jet, gamma, values, jacobian)
    return FieldSample(FieldKind.TENSOR, cm.coords, point, lie)


def lie_derivative_of_gradient(metric: MetricSource, u: ScalarSource, point: Point
                               ) -> FieldSample:
    """L_{grad u} g with the gradient field differentiated through the metric jet"""
    cm = as_coordinate_metric(metric)
    jet = _jet(cm, point, Backend.SYMBOLIC)
    sample = christoffel(cm, point)
    inverse = sample.inverse
    _, grad, second = scalar_jet(u, cm.coords, point)
    values = inverse @ grad
    d_inverse = -np.einsum("ka,iab,bl->ikl", inverse, jet.first, inverse)
    jacobian = np.einsum("ikl,l->ik", d_inverse, grad) + np.einsum("kl,il->ik", inverse, second)
    components = _lie_from_jet(jet, sample.gamma, values, jacobian)
    return FieldSample(FieldKind.TENSOR, cm.coords, point, components)


def clear_caches() -> None:
    for cached in (_jet, _christoffel, _curvature, _scalar_derivatives, _partial):
        cached.cache_clear()
