"""
Soliton Residuals and Field Classification

This module:
1. Evaluates Ricci-Bourguignon soliton residuals Ric + 1/2 L_X g - lambda g - rho R g
   (and the gradient form with Hess u)
2. Classifies vector fields as Killing or conformal
3. Extracts Einstein factors and proportional-Hessian factors by trace fits

Proportionality factors are fitted pointwise by metric traces, e.g.
mu(p) = tr(g^-1 Ric) / n, and the residual is what remains after subtracting
the fitted multiple of the metric.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np

from src.geometry import closedform, oracle
from src.geometry.errors import ManifoldError, MissingAuxiliaryDataError, SingularMetricError
from src.geometry.expr import Expression
from src.geometry.manifold import (
    CoordinateMetric,
    Factor,
    Point,
    ScalarFieldSpec,
    SequentialWarpedProduct,
    VectorFieldSpec,
    as_coordinate_metric,
)
from src.geometry.stats import FitResult, ResidualStats

logger = logging.getLogger(__name__)

Target = Union[SequentialWarpedProduct, Factor, CoordinateMetric]
FieldOnTarget = Union[VectorFieldSpec, Sequence[Expression]]


class LiePath(str, Enum):
    ORACLE = "oracle"
    CLOSED_FORM = "closedform"


class HessianSelector(str, Enum):
    FIRST_FACTOR = "M1"  # Hess^1 f on (M1, g1)
    BASE = "Mbar"  # HessBar h on (M1 x_f M2, g1 + f^2 g2)


# ===========================
# Data Models
# ===========================


@dataclass(frozen=True, eq=False)
class SolitonInstance:
    """
    Product manifold with a potential (vector field X or function u) and constants.

    Args:
        manifold: The sequential warped product
        lam: lambda
        rho: rho (rho = 0 gives a Ricci soliton)
        field: Potential vector field X
        potential: Potential function u (gradient form)
    """

    manifold: SequentialWarpedProduct
    lam: float
    rho: float
    field: Optional[VectorFieldSpec] = None
    potential: Optional[ScalarFieldSpec] = None

    def __post_init__(self) -> None:
        if (self.field is None) == (self.potential is None):
            raise ManifoldError("a soliton instance needs exactly one of X or u")

    @property
    def is_gradient(self) -> bool:
        return self.potential is not None

    @property
    def label(self) -> str:
        base = "Ricci soliton" if self.rho == 0.0 else "Ricci-Bourguignon soliton"
        return f"gradient {base}" if self.is_gradient else base


# ===========================
# Helper Functions
# ===========================


def _layout(target: Target) -> tuple[CoordinateMetric, list[slice]]:
    metric = as_coordinate_metric(target)
    if isinstance(target, SequentialWarpedProduct):
        return metric, list(target.block_slices)
    return metric, [slice(0, metric.dim)]


def _stats(points: Sequence[Point], tensors: np.ndarray, metric: CoordinateMetric,
           blocks: list[slice]) -> ResidualStats:
    return ResidualStats.from_samples(points, tensors, metric.coords, row_blocks=blocks)


def _over_grid(grid: Sequence[Point], sample: Callable[[Point], np.ndarray]) -> np.ndarray:
    return np.stack([sample(point) for point in grid]) if grid else np.zeros((0, 0, 0))


def lie_samples(target: Target, field: FieldOnTarget, grid: Sequence[Point],
                path: LiePath = LiePath.ORACLE) -> np.ndarray:
    """L_X g at every grid point via the oracle or the closed-form split"""
    if path is LiePath.CLOSED_FORM:
        if not (isinstance(target, SequentialWarpedProduct)
                and isinstance(field, VectorFieldSpec)):
            raise ManifoldError("the closed-form Lie path needs a product and a structured field")
        return _over_grid(grid, lambda p: closedform.assemble_blocks(
            target, lambda pair: closedform.lie_closed(target, field, pair, p)))
    metric = as_coordinate_metric(target)
    return _over_grid(grid, lambda p: oracle.lie_derivative(metric, field, p).components)


def metric_samples(target: Target, grid: Sequence[Point]) -> np.ndarray:
    metric = as_coordinate_metric(target)
    return _over_grid(grid, metric.evaluate)


def ricci_samples(target: Target, grid: Sequence[Point]) -> np.ndarray:
    metric = as_coordinate_metric(target)
    return _over_grid(grid, lambda p: oracle.ricci(metric, p).components)


def scalar_samples(target: Target, grid: Sequence[Point]) -> np.ndarray:
    metric = as_coordinate_metric(target)
    return np.array([oracle.scalar_curvature(metric, p) for p in grid])


def trace_factors(tensors: np.ndarray, metrics: np.ndarray, scale: float) -> np.ndarray:
    """factor(p) = tr(g^-1 T) / scale; a sampled metric that cannot be inverted is an error"""
    factors = []
    for t, g in zip(tensors, metrics):
        try:
            inverse = np.linalg.inv(g)
        except np.linalg.LinAlgError as e:
            raise SingularMetricError(f"trace fit: metric sample is not invertible ({e})") from e
        factors.append(np.einsum("ij,ij->", inverse, t) / scale)
    return np.array(factors)


def _trace_fit(tensors: np.ndarray, metrics: np.ndarray, scale: float
               ) -> tuple[np.ndarray, np.ndarray]:
    """factor(p) = tr(g^-1 T) / scale and residual T - factor * g"""
    factors = trace_factors(tensors, metrics, scale)
    residual = tensors - factors[:, None, None] * metrics
    return factors, residual


# ===========================
# Soliton residuals
# ===========================


def rbs_samples(instance: SolitonInstance, grid: Sequence[Point],
                path: LiePath = LiePath.ORACLE) -> np.ndarray:
    """
    Ric + 1/2 L_X g - lambda g - rho R g at every grid point.

    An instance carrying u uses X = grad u.
    """
    manifold = instance.manifold
    metric = manifold.coordinate_metric
    if instance.potential is not None:
        potential = instance.potential
        lie = _over_grid(
            grid, lambda p: oracle.lie_derivative_of_gradient(metric, potential, p).components
        )
    else:
        assert instance.field is not None
        lie = lie_samples(manifold, instance.field, grid, path)
    g = metric_samples(manifold, grid)
    scalar = scalar_samples(manifold, grid)
    rhs = (instance.lam + instance.rho * scalar)[:, None, None] * g
    return ricci_samples(manifold, grid) + 0.5 * lie - rhs


def gradient_rbs_samples(instance: SolitonInstance, grid: Sequence[Point]) -> np.ndarray:
    """Ric + Hess u - lambda g - rho R g at every grid point"""
    if instance.potential is None:
        raise MissingAuxiliaryDataError("the gradient soliton equation needs a potential u")
    manifold = instance.manifold
    metric = manifold.coordinate_metric
    potential = instance.potential
    hess = _over_grid(grid, lambda p: oracle.hessian(metric, potential, p).components)
    g = metric_samples(manifold, grid)
    scalar = scalar_samples(manifold, grid)
    rhs = (instance.lam + instance.rho * scalar)[:, None, None] * g
    return ricci_samples(manifold, grid) + hess - rhs


def rbs_residual(instance: SolitonInstance, grid: Sequence[Point],
                 path: LiePath = LiePath.ORACLE) -> ResidualStats:
    metric, blocks = _layout(instance.manifold)
    stats = _stats(grid, rbs_samples(instance, grid, path), metric, blocks)
    logger.info("%s residual on %s: max %.3e", instance.label, instance.manifold.name,
                stats.max_abs)
    return stats


def gradient_rbs_residual(instance: SolitonInstance, grid: Sequence[Point]) -> ResidualStats:
    metric, blocks = _layout(instance.manifold)
    return _stats(grid, gradient_rbs_samples(instance, grid), metric, blocks)


# ===========================
# Field classification
# ===========================


def killing_check(target: Target, field: FieldOnTarget, grid: Sequence[Point], tolerance: float,
                  path: LiePath = LiePath.ORACLE) -> tuple[bool, ResidualStats]:
    """L_X g = 0 within tolerance"""
    metric, blocks = _layout(target)
    stats = _stats(grid, lie_samples(target, field, grid, path), metric, blocks)
    return stats.max_abs < tolerance, stats


def conformal_extract(target: Target, field: FieldOnTarget, grid: Sequence[Point],
                      path: LiePath = LiePath.ORACLE) -> FitResult:
    """phi(p) = tr(g^-1 L_X g) / (2n); residual L_X g - 2 phi g"""
    metric, blocks = _layout(target)
    lie = lie_samples(target, field, grid, path)
    g = metric_samples(target, grid)
    phi, _ = _trace_fit(lie, g, 2.0 * metric.dim)
    residual = lie - 2.0 * phi[:, None, None] * g
    return FitResult.from_samples(phi, _stats(grid, residual, metric, blocks))


def einstein_extract(target: Target, grid: Sequence[Point]) -> FitResult:
    """mu(p) = tr(g^-1 Ric) / n; residual Ric - mu g"""
    metric, blocks = _layout(target)
    mu, residual = _trace_fit(ricci_samples(target, grid), metric_samples(target, grid), metric.dim)
    return FitResult.from_samples(mu, _stats(grid, residual, metric, blocks))


def proportional_hessian_extract(manifold: SequentialWarpedProduct, selector: HessianSelector,
                                 grid: Sequence[Point]) -> FitResult:
    """
    Hess^1 f = sigma g1 on M1, or HessBar h = psi gbar on M1 x_f M2.

    sigma and psi are allowed to vary from point to point.
    """
    if selector is HessianSelector.FIRST_FACTOR:
        metric, function = manifold.factor_metric(0), manifold.f
        blocks = [slice(0, metric.dim)]
    else:
        metric, function = manifold.base_metric, manifold.h
        blocks = list(manifold.block_slices[:2])
    hess = _over_grid(grid, lambda p: oracle.hessian(metric, function, p).components)
    factors, residual = _trace_fit(hess, metric_samples(metric, grid), metric.dim)
    return FitResult.from_samples(factors, _stats(grid, residual, metric, blocks))
