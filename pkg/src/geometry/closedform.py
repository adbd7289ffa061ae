"""
Closed-Form Block Formulas for Sequential Warped Products

This module:
1. Computes the warp invariants f#, h# and f<> from f, h and their derivatives
2. Evaluates the printed connection, Ricci and Lie-derivative block formulas
   for the generic, standard-static and GRW kinds

Formulas are evaluated exactly as printed, signs included. Factor-level
objects (Ric^i, L^i, nabla^i) and sub-metric Hessians/Laplacians come from the
oracle run on the bare factor metric or on gbar = g1 + f^2 g2; the full metric
of M is never consulted here.

Block indices in the public API are 1-based (1, 2, 3).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from src.geometry import oracle
from src.geometry.errors import InvalidBlockPairError, UnstructuredFieldError
from src.geometry.expr import Expression
from src.geometry.manifold import (
    CoordinateMetric,
    Decomposition,
    Point,
    SequentialWarpedProduct,
    VectorFieldSpec,
    WarpKind,
    decompose_vector_field,
)
from src.geometry.oracle import FieldKind, FieldSample, Provenance

BLOCK_PAIRS: tuple[tuple[int, int], ...] = ((1, 1), (2, 2), (3, 3), (1, 2), (1, 3), (2, 3))

FactorConnection = Callable[[CoordinateMetric, Point], np.ndarray]
FactorRicci = Callable[[CoordinateMetric, Point], np.ndarray]
FactorLie = Callable[[CoordinateMetric, Sequence[Expression], Point], np.ndarray]


def _oracle_connection(metric: CoordinateMetric, point: Point) -> np.ndarray:
    return oracle.christoffel(metric, point).gamma


def _oracle_ricci(metric: CoordinateMetric, point: Point) -> np.ndarray:
    return oracle.ricci(metric, point).components


def _oracle_lie(metric: CoordinateMetric, components: Sequence[Expression], point: Point
                ) -> np.ndarray:
    return oracle.lie_derivative(metric, components, point).components


# ===========================
# Warp invariants
# ===========================


@dataclass(frozen=True)
class WarpInvariants:
    """
    Scalars entering the Ricci block formulas at one point.

    f_sharp   = f * laplacian_f + (n2 - 1) * grad_f_norm        (on M1)
    h_sharp   = h * laplacian_h + (n3 - 1) * grad_h_norm        (on gbar)
    f_diamond = -f * f_ddot + (n2 - 1) * f_dot^2                 (grw only)
    """

    f: float
    h: float
    f_sharp: float
    h_sharp: float
    laplacian_f: float
    grad_f_norm: float
    laplacian_h: float
    grad_h_norm: float
    f_diamond: Optional[float] = None
    f_dot: Optional[float] = None
    f_ddot: Optional[float] = None
    h_t: Optional[float] = None
    h_tt: Optional[float] = None


def _time_derivatives(expr: Expression, time: str, point: Point) -> tuple[float, float]:
    _, grad, second = oracle.scalar_jet(expr, (time,), point)
    return float(grad[0]), float(second[0, 0])


@lru_cache(maxsize=8192)
def warp_invariants(manifold: SequentialWarpedProduct, point: Point) -> WarpInvariants:
    n1, n2, n3 = manifold.dims
    env = point.bindings
    f_value = manifold.f.evaluate(env)
    h_value = manifold.h.evaluate(env)

    first = manifold.factor_metric(0)
    laplacian_f = oracle.laplacian(first, manifold.f, point)
    grad_f = oracle.gradient(first, manifold.f, point).components
    _, df, _ = oracle.scalar_jet(manifold.f, first.coords, point)
    grad_f_norm = float(grad_f @ df)
    f_sharp = f_value * laplacian_f + (n2 - 1) * grad_f_norm

    base = manifold.base_metric
    laplacian_h = oracle.laplacian(base, manifold.h, point)
    grad_h = oracle.gradient(base, manifold.h, point).components
    _, dh, _ = oracle.scalar_jet(manifold.h, base.coords, point)
    grad_h_norm = float(grad_h @ dh)
    h_sharp = h_value * laplacian_h + (n3 - 1) * grad_h_norm

    if manifold.kind is not WarpKind.GRW:
        return WarpInvariants(
            f_value, h_value, f_sharp, h_sharp, laplacian_f, grad_f_norm, laplacian_h, grad_h_norm
        )

    time = manifold.factors[0].coords[0]
    f_dot, f_ddot = _time_derivatives(manifold.f, time, point)
    h_t, h_tt = _time_derivatives(manifold.h, time, point)
    f_diamond = -f_value * f_ddot + (n2 - 1) * f_dot**2
    return WarpInvariants(
        f_value, h_value, f_sharp, h_sharp, laplacian_f, grad_f_norm, laplacian_h, grad_h_norm,
        f_diamond=f_diamond, f_dot=f_dot, f_ddot=f_ddot, h_t=h_t, h_tt=h_tt,
    )


# ===========================
# Helper Functions
# ===========================


def _block_index(pair: tuple[int, int]) -> tuple[int, int]:
    if len(pair) != 2 or any(b not in (1, 2, 3) for b in pair):
        raise InvalidBlockPairError(f"block pair must use blocks 1..3, got {pair}")
    return pair[0] - 1, pair[1] - 1


def _local_index(manifold: SequentialWarpedProduct, block: int, coord: str) -> int:
    coords = manifold.factors[block].coords
    if coord not in coords:
        raise InvalidBlockPairError(
            f"basis vector d_{coord} does not belong to block {block + 1} {coords}"
        )
    return coords.index(coord)


def _coordinate_gradient(manifold: SequentialWarpedProduct, expr: Expression, point: Point
                         ) -> np.ndarray:
    _, grad, _ = oracle.scalar_jet(expr, manifold.coords, point)
    return grad


def _blocks(field: VectorFieldSpec) -> tuple[tuple[Expression, ...], ...]:
    outcome = decompose_vector_field(field)
    if not isinstance(outcome, Decomposition):
        raise UnstructuredFieldError(outcome.message)
    return outcome.blocks


def directional(manifold: SequentialWarpedProduct, blocks: Sequence[Sequence[Expression]],
                which: Sequence[int], expr: Expression, point: Point) -> float:
    """(X_a + X_b + ...)(expr) for the listed 0-based blocks"""
    grad = _coordinate_gradient(manifold, expr, point)
    env = point.bindings
    total = 0.0
    for block in which:
        offset = manifold.block_slices[block].start
        for k, component in enumerate(blocks[block]):
            total += component.evaluate(env) * grad[offset + k]
    return total


def time_component(manifold: SequentialWarpedProduct, blocks: Sequence[Sequence[Expression]],
                   point: Point) -> tuple[float, float]:
    """w and dw/dt for the time block of a static or GRW field"""
    time = manifold.time_coordinate
    if time is None:
        raise InvalidBlockPairError("generic products have no time coordinate")
    w = blocks[manifold.block_of(time)][0]
    env = point.bindings
    dw = w.differentiate(time).evaluate(env) if time in w.free_variables else 0.0
    return w.evaluate(env), dw


# ===========================
# Connection
# ===========================


def connection_closed(manifold: SequentialWarpedProduct, pair: tuple[int, int],
                      basis: tuple[str, str], point: Point,
                      factor_connection: Optional[FactorConnection] = None) -> FieldSample:
    """
    nabla_{d_a} d_b for coordinate vectors d_a in block pair[0], d_b in pair[1].

    Returns the printed right-hand side as a vector in product coordinates.
    """
    factor_connection = factor_connection or _oracle_connection
    bi, bj = _block_index(pair)
    a, b = basis
    ia, ib = _local_index(manifold, bi, a), _local_index(manifold, bj, b)
    if bi > bj:
        bi, bj, a, b, ia, ib = bj, bi, b, a, ib, ia

    slices = manifold.block_slices
    out = np.zeros(manifold.dim)
    env = point.bindings
    f_value = manifold.f.evaluate(env)
    h_value = manifold.h.evaluate(env)
    base = manifold.base_metric
    kind = manifold.kind

    if (bi, bj) == (0, 0):
        if kind is not WarpKind.GRW:
            out[slices[0]] = factor_connection(manifold.factor_metric(0), point)[:, ia, ib]
    elif (bi, bj) in ((0, 1), (0, 2)) and kind is WarpKind.GRW:
        inv = warp_invariants(manifold, point)
        out[slices[bj].start + ib] = inv.f_dot / f_value
    elif (bi, bj) == (0, 1):
        out[slices[1].start + ib] = _coordinate_gradient(manifold, manifold.f, point)[
            slices[0].start + ia] / f_value
    elif (bi, bj) == (1, 1):
        g2 = manifold.factor_metric(1).evaluate(point)
        out[slices[1]] = factor_connection(manifold.factor_metric(1), point)[:, ia, ib]
        if kind is WarpKind.GRW:
            inv = warp_invariants(manifold, point)
            out[slices[0].start] -= f_value * inv.f_dot * g2[ia, ib]
        else:
            grad_f = oracle.gradient(manifold.factor_metric(0), manifold.f, point).components
            out[slices[0]] -= f_value * g2[ia, ib] * grad_f
    elif (bi, bj) in ((0, 2), (1, 2)):
        dh = _coordinate_gradient(manifold, manifold.h, point)
        out[slices[2].start + ib] = dh[slices[bi].start + ia] / h_value
    else:
        grad_h = oracle.gradient(base, manifold.h, point).components
        if kind is WarpKind.STANDARD_STATIC:
            out[: base.dim] = h_value * grad_h
        else:
            g3 = manifold.factor_metric(2).evaluate(point)
            out[slices[2]] = factor_connection(manifold.factor_metric(2), point)[:, ia, ib]
            out[: base.dim] -= h_value * g3[ia, ib] * grad_h
    return FieldSample(FieldKind.VECTOR, manifold.coords, point, out, Provenance.CLOSED_FORM)


# ===========================
# Ricci blocks
# ===========================


def ricci_closed(manifold: SequentialWarpedProduct, pair: tuple[int, int], point: Point,
                 factor_ricci: Optional[FactorRicci] = None) -> np.ndarray:
    """Printed Ricci block (n_i x n_j); mixed blocks are zero"""
    factor_ricci = factor_ricci or _oracle_ricci
    bi, bj = _block_index(pair)
    dims = manifold.dims
    if bi != bj:
        return np.zeros((dims[bi], dims[bj]))

    n1, n2, n3 = dims
    inv = warp_invariants(manifold, point)
    f_value, h_value = inv.f, inv.h
    kind = manifold.kind
    slices = manifold.block_slices
    metric = manifold.factor_metric(bi)
    g_block = metric.evaluate(point)

    if kind is WarpKind.GRW and bi == 0:
        return np.array([[(n2 / f_value) * inv.f_ddot + (n3 / h_value) * inv.h_tt]])
    if kind is WarpKind.STANDARD_STATIC and bi == 2:
        return np.array([[h_value * inv.laplacian_h]])
    if bi == 2:
        return factor_ricci(metric, point) - inv.h_sharp * g_block

    hess_h = oracle.hessian(manifold.base_metric, manifold.h, point).components
    h_weight = (1.0 if kind is WarpKind.STANDARD_STATIC else n3) / h_value
    own = factor_ricci(metric, point) - h_weight * hess_h[slices[bi], slices[bi]]
    if bi == 0:
        hess_f = oracle.hessian(metric, manifold.f, point).components
        return own - (n2 / f_value) * hess_f
    warp = inv.f_diamond if kind is WarpKind.GRW else inv.f_sharp
    return own - warp * g_block


# ===========================
# Lie derivative blocks
# ===========================


def lie_closed(manifold: SequentialWarpedProduct, field: VectorFieldSpec, pair: tuple[int, int],
               point: Point, factor_lie: Optional[FactorLie] = None) -> np.ndarray:
    """Printed split of L_X g into factor Lie terms plus warp transport terms"""
    factor_lie = factor_lie or _oracle_lie
    blocks = _blocks(field)
    bi, bj = _block_index(pair)
    dims = manifold.dims
    if bi != bj:
        return np.zeros((dims[bi], dims[bj]))

    kind = manifold.kind
    env = point.bindings
    f_value = manifold.f.evaluate(env)
    h_value = manifold.h.evaluate(env)
    metric = manifold.factor_metric(bi)
    g_block = metric.evaluate(point)

    if kind is WarpKind.GRW:
        w, dw = time_component(manifold, blocks, point)
        if bi == 0:
            return np.array([[-2.0 * dw]])
        own = factor_lie(metric, blocks[bi], point)
        if bi == 1:
            f_dot = warp_invariants(manifold, point).f_dot
            return f_value**2 * own + 2.0 * w * f_value * f_dot * g_block
        h_t = warp_invariants(manifold, point).h_t
        x2_h = directional(manifold, blocks, [1], manifold.h, point)
        return h_value**2 * own + 2.0 * w * h_value * (h_t + x2_h) * g_block

    if bi == 0:
        return factor_lie(metric, blocks[0], point)
    if bi == 1:
        x1_f = directional(manifold, blocks, [0], manifold.f, point)
        return f_value**2 * factor_lie(metric, blocks[1], point) + 2.0 * f_value * x1_f * g_block
    x12_h = directional(manifold, blocks, [0, 1], manifold.h, point)
    if kind is WarpKind.STANDARD_STATIC:
        _, dw = time_component(manifold, blocks, point)
        return np.array([[-2.0 * h_value**2 * dw - 2.0 * h_value * x12_h]])
    return h_value**2 * factor_lie(metric, blocks[2], point) + 2.0 * h_value * x12_h * g_block


def assemble_blocks(manifold: SequentialWarpedProduct,
                    block: Callable[[tuple[int, int]], np.ndarray]) -> np.ndarray:
    """Full n x n tensor from a per-block-pair function"""
    out = np.zeros((manifold.dim, manifold.dim))
    slices = manifold.block_slices
    for i, j in BLOCK_PAIRS:
        value = block((i, j))
        out[slices[i - 1], slices[j - 1]] = value
        out[slices[j - 1], slices[i - 1]] = value.T
    return out
