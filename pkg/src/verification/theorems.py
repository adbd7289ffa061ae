"""
Theorem Registry and Verification Harness

This module:
1. Registers every soliton theorem on sequential warped products as shared
   hypotheses plus clauses, each clause with its own hypotheses and conclusions
2. Evaluates hypotheses first; a failed hypothesis turns itself and every
   dependent conclusion into SKIP
3. Evaluates conclusions as pointwise identities, recomputing the stated
   constants (mu_i, alpha, lambda_i + rho_i R_i) next to the fitted ones
4. Collects conclusion FLAGs into the fidelity ledger

Every check names the operation it invokes; its tolerance is the run tolerance.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Optional, Sequence

import numpy as np

from src.geometry import closedform, oracle
from src.geometry.closedform import WarpInvariants
from src.geometry.errors import (
    InstanceKindError,
    MissingAuxiliaryDataError,
    UnstructuredFieldError,
)
from src.geometry.expr import Expression
from src.geometry.manifold import Decomposition, Point, WarpKind, decompose_vector_field
from src.geometry.soliton import (
    HessianSelector,
    SolitonInstance,
    conformal_extract,
    einstein_extract,
    gradient_rbs_samples,
    lie_samples,
    metric_samples,
    proportional_hessian_extract,
    rbs_samples,
    ricci_samples,
    scalar_samples,
    trace_factors,
)
from src.geometry.stats import FitResult
from src.verification.compare import identity_check, sort_ledger
from src.verification.models import (
    CheckResult,
    CheckRole,
    DerivedConstant,
    LedgerEntry,
    Verdict,
    VerdictReport,
)

logger = logging.getLogger(__name__)

_CASE_ID = re.compile(r"^(?P<case>[TSG]\d\.\d)(?:\((?P<clause>[a-z]+)\))?$")


# ===========================
# Evaluation context
# ===========================


class CaseContext:
    """
    Grid-wide samples shared by all checks of one theorem run.

    Arrays are indexed by grid point first. Everything is computed lazily
    and at most once.
    """

    def __init__(self, instance: SolitonInstance, grid: Sequence[Point], tolerance: float):
        self.instance = instance
        self.manifold = instance.manifold
        self.grid = list(grid)
        self.tolerance = tolerance
        self._memo: dict[tuple[Any, ...], Any] = {}

    def _cached(self, key: tuple[Any, ...], build: Callable[[], Any]) -> Any:
        if key not in self._memo:
            self._memo[key] = build()
        return self._memo[key]

    # Layout ----------------------------------------------------------------

    @property
    def n(self) -> tuple[int, int, int]:
        return self.manifold.dims

    @property
    def coords(self) -> list[str]:
        return list(self.manifold.coords)

    def factor_coords(self, index: int) -> list[str]:
        return list(self.manifold.factors[index].coords)

    # Whole manifold ----------------------------------------------------------

    @cached_property
    def metric(self) -> np.ndarray:
        return metric_samples(self.manifold, self.grid)

    @cached_property
    def ricci(self) -> np.ndarray:
        return ricci_samples(self.manifold, self.grid)

    @cached_property
    def lam_rho(self) -> np.ndarray:
        """lambda + rho R per point"""
        scalar = scalar_samples(self.manifold, self.grid)
        return self.instance.lam + self.instance.rho * scalar

    @cached_property
    def soliton_residual(self) -> np.ndarray:
        if self.instance.is_gradient:
            return gradient_rbs_samples(self.instance, self.grid)
        return rbs_samples(self.instance, self.grid)

    @cached_property
    def lie(self) -> np.ndarray:
        return lie_samples(self.manifold, self.field, self.grid)

    @cached_property
    def conformal(self) -> FitResult:
        return conformal_extract(self.manifold, self.field, self.grid)

    @cached_property
    def einstein(self) -> FitResult:
        return einstein_extract(self.manifold, self.grid)

    # Auxiliary data ---------------------------------------------------------

    @property
    def field(self) -> Any:
        if self.instance.field is None:
            raise MissingAuxiliaryDataError("this check needs a potential vector field X")
        return self.instance.field

    @property
    def potential(self) -> Expression:
        if self.instance.potential is None:
            raise MissingAuxiliaryDataError("this check needs a potential function u")
        return self.instance.potential.expression

    @cached_property
    def blocks(self) -> tuple[tuple[Expression, ...], ...]:
        outcome = decompose_vector_field(self.field)
        if not isinstance(outcome, Decomposition):
            raise UnstructuredFieldError(outcome.message)
        return outcome.blocks

    # Factors ----------------------------------------------------------------

    def factor_metric(self, index: int) -> np.ndarray:
        return self._cached(("g", index), lambda: metric_samples(
            self.manifold.factor_metric(index), self.grid))

    def factor_ricci(self, index: int) -> np.ndarray:
        return self._cached(("ric", index), lambda: ricci_samples(
            self.manifold.factor_metric(index), self.grid))

    def factor_lie(self, index: int) -> np.ndarray:
        """L^i_{X_i} g_i on the bare factor"""
        return self._cached(("lie", index), lambda: lie_samples(
            self.manifold.factor_metric(index), self.blocks[index], self.grid))

    def factor_einstein(self, index: int) -> FitResult:
        return self._cached(("einstein", index), lambda: einstein_extract(
            self.manifold.factor_metric(index), self.grid))

    def factor_hessian(self, index: int, function: Expression) -> np.ndarray:
        metric = self.manifold.factor_metric(index)
        return self._cached(("hess", index, function.to_source()), lambda: np.stack([
            oracle.hessian(metric, function, p).components for p in self.grid]))

    # Warping functions ------------------------------------------------------

    @cached_property
    def invariants(self) -> list[WarpInvariants]:
        return [closedform.warp_invariants(self.manifold, p) for p in self.grid]

    def invariant(self, name: str) -> np.ndarray:
        return np.array([getattr(inv, name) for inv in self.invariants], dtype=float)

    @cached_property
    def f(self) -> np.ndarray:
        return self.invariant("f")

    @cached_property
    def h(self) -> np.ndarray:
        return self.invariant("h")

    @cached_property
    def sigma(self) -> FitResult:
        return proportional_hessian_extract(self.manifold, HessianSelector.FIRST_FACTOR, self.grid)

    @cached_property
    def psi(self) -> FitResult:
        return proportional_hessian_extract(self.manifold, HessianSelector.BASE, self.grid)

    @cached_property
    def hess_f(self) -> np.ndarray:
        return self.factor_hessian(0, self.manifold.f)

    @cached_property
    def hess_h(self) -> np.ndarray:
        base = self.manifold.base_metric
        return np.stack([oracle.hessian(base, self.manifold.h, p).components for p in self.grid])

    def directional(self, which: Sequence[int], function: Expression) -> np.ndarray:
        """(X_a + X_b + ...)(function) per point, 0-based blocks"""
        return self._cached(("dir", tuple(which), function.to_source()), lambda: np.array([
            closedform.directional(self.manifold, self.blocks, which, function, p)
            for p in self.grid]))

    @cached_property
    def time_field(self) -> tuple[np.ndarray, np.ndarray]:
        """w and dw/dt per point"""
        pairs = [closedform.time_component(self.manifold, self.blocks, p) for p in self.grid]
        return np.array([w for w, _ in pairs]), np.array([dw for _, dw in pairs])


# ===========================
# Checks
# ===========================


@dataclass
class Measurement:
    """Both sides of a pointwise identity, shaped (points, rows, cols)"""

    lhs: np.ndarray
    rhs: np.ndarray
    rows: Sequence[str]
    cols: Sequence[str]
    constants: Sequence[DerivedConstant] = ()
    require: bool = True
    note: Optional[str] = None


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    operation: str
    measure: Callable[[CaseContext], Measurement]


@dataclass(frozen=True)
class Clause:
    label: Optional[str]
    hypotheses: tuple[Check, ...] = ()
    conclusions: tuple[Check, ...] = ()


@dataclass(frozen=True)
class TheoremCase:
    case_id: str
    kind: WarpKind
    statement: str
    hypotheses: tuple[Check, ...]
    clauses: tuple[Clause, ...]
    needs_field: bool = True
    needs_potential: bool = False

    @property
    def clause_labels(self) -> list[str]:
        return [c.label for c in self.clauses if c.label is not None]


Stated = Callable[[CaseContext], np.ndarray]


def _scaled(values: np.ndarray, tensors: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=float)[:, None, None] * tensors


def _scalar(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(-1, 1, 1)


def _constant_note(fit: FitResult, tolerance: float, what: str) -> Optional[str]:
    if fit.spread < tolerance:
        return None
    return f"fitted {what} varies over the grid (spread {fit.spread:.3e})"


# Hypotheses ----------------------------------------------------------------


def soliton_holds() -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        residual = ctx.soliton_residual
        return Measurement(residual, np.zeros_like(residual), ctx.coords, ctx.coords)

    return Check("M is a RBS", "Ric + 1/2 L_X g = lambda g + rho R g",
                 "soliton.rbs_residual", measure)


def gradient_soliton_holds() -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        residual = ctx.soliton_residual
        return Measurement(residual, np.zeros_like(residual), ctx.coords, ctx.coords)

    return Check("M is a gradient RBS", "Ric + Hess u = lambda g + rho R g",
                 "soliton.gradient_rbs_residual", measure)


def killing_on_manifold() -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        return Measurement(ctx.lie, np.zeros_like(ctx.lie), ctx.coords, ctx.coords)

    return Check("X Killing on M", "L_X g = 0", "soliton.killing_check", measure)


def conformal_on_manifold() -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        fit = ctx.conformal
        alpha = np.array(fit.factor_samples)
        return Measurement(
            ctx.lie, 2.0 * _scaled(alpha, ctx.metric), ctx.coords, ctx.coords,
            constants=[DerivedConstant.from_samples("alpha (fitted)", alpha)],
            require=fit.spread < ctx.tolerance,
            note=_constant_note(fit, ctx.tolerance, "alpha"),
        )

    return Check("X conformal on M with constant factor", "L_X g = 2 alpha g, alpha constant",
                 "soliton.conformal_extract", measure)


def hessian_f_proportional() -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        sigma = np.array(ctx.sigma.factor_samples)
        return Measurement(
            ctx.hess_f, _scaled(sigma, ctx.factor_metric(0)),
            ctx.factor_coords(0), ctx.factor_coords(0),
            constants=[DerivedConstant.from_samples("sigma (fitted)", sigma)],
        )

    return Check("Hess1 f = sigma g1", "Hess f = sigma g",
                 "soliton.proportional_hessian_extract(M1)", measure)


def hessian_h_proportional() -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        psi = np.array(ctx.psi.factor_samples)
        coords = ctx.factor_coords(0) + ctx.factor_coords(1)
        gbar = metric_samples(ctx.manifold.base_metric, ctx.grid)
        return Measurement(
            ctx.hess_h, _scaled(psi, gbar), coords, coords,
            constants=[DerivedConstant.from_samples("psi (fitted)", psi)],
        )

    return Check("HessBar h = psi gbar", "HessBar h = psi g",
                 "soliton.proportional_hessian_extract(Mbar)", measure)


def factor_killing(index: int) -> Check:
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        lie = ctx.factor_lie(index)
        coords = ctx.factor_coords(index)
        return Measurement(lie, np.zeros_like(lie), coords, coords)

    return Check(f"X{i} Killing on M{i}", f"L{i}_X{i} g{i} = 0", "soliton.killing_check", measure)


def factor_conformal_with(index: int, stated: Stated, printed: str) -> Check:
    """L^i_{X_i} g_i = c g_i with a prescribed factor c"""
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        factor = stated(ctx)
        coords = ctx.factor_coords(index)
        return Measurement(
            ctx.factor_lie(index), _scaled(factor, ctx.factor_metric(index)), coords, coords,
            constants=[DerivedConstant.from_samples(f"conformal factor of X{i} (stated)", factor)],
        )

    return Check(f"X{i} conformal on M{i} with factor {printed}",
                 f"L{i}_X{i} g{i} = ({printed}) g{i}", "oracle.lie_derivative", measure)


def field_confined(keep: Sequence[int]) -> Check:
    """Components of X outside the kept blocks vanish"""
    name = " + ".join(f"X{b + 1}" for b in keep)

    def measure(ctx: CaseContext) -> Measurement:
        dropped = [b for b in range(3) if b not in keep]
        components = [c for b in dropped for c in ctx.blocks[b]]
        cols = [c for b in dropped for c in ctx.factor_coords(b)]
        values = np.array([[[c.evaluate(p.bindings) for c in components]] for p in ctx.grid])
        return Measurement(values, np.zeros_like(values), ["X"], cols)

    return Check(f"X = {name}", f"X = {name}", "manifold.decompose_vector_field", measure)


def x2_h_vanishes() -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        values = _scalar(ctx.directional([1], ctx.manifold.h))
        return Measurement(values, np.zeros_like(values), ["X2(h)"], ["-"])

    return Check("X2(h) = 0", "X2(h) = 0", "closedform.directional", measure)


def factor_is_einstein(index: int) -> Check:
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        fit = ctx.factor_einstein(index)
        mu = np.array(fit.factor_samples)
        coords = ctx.factor_coords(index)
        return Measurement(
            ctx.factor_ricci(index), _scaled(mu, ctx.factor_metric(index)), coords, coords,
            constants=[DerivedConstant.from_samples(f"mu{i} (fitted)", mu)],
            require=fit.spread < ctx.tolerance,
            note=_constant_note(fit, ctx.tolerance, f"mu{i}"),
        )

    return Check(f"M{i} Einstein", f"Ric{i} = mu{i} g{i}", "soliton.einstein_extract", measure)


def potential_is_primitive() -> Check:
    """u depends on t only, with du/dt = f"""

    def measure(ctx: CaseContext) -> Measurement:
        manifold = ctx.manifold
        time = manifold.time_coordinate
        lhs, rhs = [], []
        for p in ctx.grid:
            _, grad, _ = oracle.scalar_jet(ctx.potential, manifold.coords, p)
            target = np.zeros(manifold.dim)
            target[manifold.coords.index(time)] = manifold.f.evaluate(p.bindings)
            lhs.append([grad])
            rhs.append([target])
        return Measurement(np.array(lhs), np.array(rhs), ["du"], ctx.coords)

    return Check("u = int_a^t f(r) dr", "du = f(t) dt", "oracle.scalar_jet", measure)


# Conclusions ---------------------------------------------------------------


def factor_soliton(index: int, combination: Stated, printed: str,
                   lie_scale: Optional[Stated] = None) -> Check:
    """Ric^i + 1/2 L^i_{s X_i} g_i = (lambda_i + rho_i R_i) g_i with s constant on M_i"""
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        scale = lie_scale(ctx) if lie_scale is not None else np.ones(len(ctx.grid))
        lhs = ctx.factor_ricci(index) + 0.5 * _scaled(scale, ctx.factor_lie(index))
        combo = combination(ctx)
        coords = ctx.factor_coords(index)
        return Measurement(
            lhs, _scaled(combo, ctx.factor_metric(index)), coords, coords,
            constants=[DerivedConstant.from_samples(f"lambda{i} + rho{i} R{i} (stated)", combo)],
        )

    return Check(f"M{i} is a RBS", printed, "oracle.ricci + oracle.lie_derivative", measure)


def factor_einstein_with(index: int, stated: Stated, printed: str) -> Check:
    """Ric^i = mu_i g_i with the stated mu_i; the fitted mu_i must be constant"""
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        mu = stated(ctx)
        fit = ctx.factor_einstein(index)
        coords = ctx.factor_coords(index)
        return Measurement(
            ctx.factor_ricci(index), _scaled(mu, ctx.factor_metric(index)), coords, coords,
            constants=[
                DerivedConstant.from_samples(f"mu{i} (stated)", mu),
                DerivedConstant.from_samples(f"mu{i} (fitted)", fit.factor_samples),
            ],
            require=fit.spread < ctx.tolerance,
            note=_constant_note(fit, ctx.tolerance, f"mu{i}"),
        )

    return Check(f"M{i} Einstein", printed, "soliton.einstein_extract", measure)


def manifold_einstein_with(stated: Stated, printed: str) -> Check:
    def measure(ctx: CaseContext) -> Measurement:
        mu = stated(ctx)
        fit = ctx.einstein
        return Measurement(
            ctx.ricci, _scaled(mu, ctx.metric), ctx.coords, ctx.coords,
            constants=[
                DerivedConstant.from_samples("mu (stated)", mu),
                DerivedConstant.from_samples("mu (fitted)", fit.factor_samples),
            ],
            require=fit.spread < ctx.tolerance,
            note=_constant_note(fit, ctx.tolerance, "mu"),
        )

    return Check("M Einstein", printed, "soliton.einstein_extract", measure)


def factor_conformal_conclusion(index: int, stated: Stated, printed: str) -> Check:
    """L^i_{X_i} g_i = 2 phi_i g_i with the stated phi_i"""
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        phi = stated(ctx)
        coords = ctx.factor_coords(index)
        g = ctx.factor_metric(index)
        lie = ctx.factor_lie(index)
        fitted = trace_factors(lie, g, 2.0 * len(coords))
        return Measurement(
            lie, 2.0 * _scaled(phi, g), coords, coords,
            constants=[
                DerivedConstant.from_samples(f"phi{i} (stated)", phi),
                DerivedConstant.from_samples(f"phi{i} (fitted)", fitted),
            ],
        )

    return Check(f"X{i} conformal on M{i}", printed, "soliton.conformal_extract", measure)


def scalar_identity(name: str, lhs: Stated, printed: str) -> Check:
    """Scalar identity lhs = lambda + rho R"""

    def measure(ctx: CaseContext) -> Measurement:
        return Measurement(_scalar(lhs(ctx)), _scalar(ctx.lam_rho), [name], ["-"])

    return Check(name, printed, "closedform.warp_invariants", measure)


def factor_gradient_soliton(index: int, potential: Callable[[CaseContext], Expression],
                            combination: Stated, printed: str) -> Check:
    """Ric^i + Hess^i phi_i = (lambda_i + rho_i R_i) g_i"""
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        lhs = ctx.factor_ricci(index) + ctx.factor_hessian(index, potential(ctx))
        combo = combination(ctx)
        coords = ctx.factor_coords(index)
        return Measurement(
            lhs, _scaled(combo, ctx.factor_metric(index)), coords, coords,
            constants=[DerivedConstant.from_samples(f"lambda{i} + rho{i} R{i} (stated)", combo)],
        )

    return Check(f"M{i} is a gradient RBS", printed, "oracle.ricci + oracle.hessian", measure)


def hessian_proportional_block(index: int) -> Check:
    """Hess u = f' g restricted to block i"""
    i = index + 1

    def measure(ctx: CaseContext) -> Measurement:
        block = ctx.manifold.block_slices[index]
        hess = np.stack([
            oracle.hessian(ctx.manifold, ctx.potential, p).components for p in ctx.grid
        ])
        f_dot = ctx.invariant("f_dot")
        coords = ctx.factor_coords(index)
        return Measurement(
            hess[:, block, block], _scaled(f_dot, ctx.metric[:, block, block]), coords, coords,
            constants=[DerivedConstant.from_samples("f'", f_dot)],
        )

    return Check(f"Hess u = f' g on block {i}", "Hess u = f' g", "oracle.hessian", measure)


# ===========================
# Stated constants
# ===========================


def _ratio(weight: int, fit: FitResult, warp: np.ndarray) -> np.ndarray:
    return weight / warp * np.array(fit.factor_samples)


def _first_combination(h_weight: Callable[[CaseContext], int]) -> Stated:
    """lambda + rho R + (n2/f) sigma + (w/h) psi"""
    return lambda ctx: (ctx.lam_rho + _ratio(ctx.n[1], ctx.sigma, ctx.f)
                        + _ratio(h_weight(ctx), ctx.psi, ctx.h))


def _n3(ctx: CaseContext) -> int:
    return ctx.n[2]


def _one(ctx: CaseContext) -> int:
    return 1


def _psi_f2(ctx: CaseContext, weight: int) -> np.ndarray:
    return _ratio(weight, ctx.psi, ctx.h) * ctx.f**2


def _x1_f(ctx: CaseContext) -> np.ndarray:
    return ctx.directional([0], ctx.manifold.f)


def _x12_h(ctx: CaseContext) -> np.ndarray:
    return ctx.directional([0, 1], ctx.manifold.h)


def _x2_h(ctx: CaseContext) -> np.ndarray:
    return ctx.directional([1], ctx.manifold.h)


def _alpha(ctx: CaseContext) -> np.ndarray:
    return np.array(ctx.conformal.factor_samples)


def _fitted_mu(index: int) -> Stated:
    return lambda ctx: np.array(ctx.factor_einstein(index).factor_samples)


def _grw_time_term(ctx: CaseContext) -> np.ndarray:
    """-(n2/f) f'' - (n3/h) d2h/dt2"""
    n2, n3 = ctx.n[1], ctx.n[2]
    return -(n2 / ctx.f) * ctx.invariant("f_ddot") - (n3 / ctx.h) * ctx.invariant("h_tt")


def _static_time_term(ctx: CaseContext) -> np.ndarray:
    """-Laplacian(h) / h on the base"""
    return -ctx.invariant("laplacian_h") / ctx.h


def _phi1(ctx: CaseContext) -> Expression:
    """u - n2 ln f - n3 ln h1, h1 being h on the factor-2 midpoint slice"""
    manifold = ctx.manifold
    _, n2, n3 = manifold.dims
    return ctx.potential - n2 * manifold.f.apply("ln") - n3 * manifold.restricted_h.apply("ln")


# ===========================
# Registry
# ===========================


def _generic_cases() -> list[TheoremCase]:
    rbs, hess_f, hess_h = soliton_holds(), hessian_f_proportional(), hessian_h_proportional()
    combo1 = _first_combination(_n3)

    def mu2(ctx: CaseContext) -> np.ndarray:
        return ctx.lam_rho * ctx.f**2 + ctx.invariant("f_sharp") + _psi_f2(ctx, ctx.n[2])

    def mu3(ctx: CaseContext) -> np.ndarray:
        return ctx.lam_rho * ctx.h**2 + ctx.invariant("h_sharp")

    mu1_text = "Ric1 = (lambda + rho R + (n2/f) sigma + (n3/h) psi) g1"
    mu2_text = "Ric2 = (lambda f^2 + rho R f^2 + f# + (n3/h) psi f^2) g2"
    mu3_text = "Ric3 = (lambda h^2 + rho R h^2 + h#) g3"
    einstein = manifold_einstein_with(lambda ctx: ctx.lam_rho, "Ric = (lambda + rho R) g")

    return [
        TheoremCase(
            "T3.1", WarpKind.GENERIC,
            "RBS with X = X1 + X2 + X3 induces factor solitons and an Einstein M2",
            (rbs,),
            (
                Clause("i", (hess_f, hess_h), (factor_soliton(
                    0, combo1,
                    "lambda1 + rho1 R1 = lambda + rho R + (n2/f) sigma + (n3/h) psi"),)),
                Clause("ii", (factor_killing(1), hess_h), (factor_einstein_with(
                    1, lambda ctx: mu2(ctx) - ctx.f * _x1_f(ctx),
                    "Ric2 = (lambda f^2 + rho R f^2 + f# + (n3/h) psi f^2 - f X1(f)) g2"),)),
                Clause("iii", (), (factor_soliton(
                    2, lambda ctx: mu3(ctx) - ctx.h * _x12_h(ctx),
                    "lambda3 + rho3 R3 = lambda h^2 + rho R h^2 + h# - h (X1 + X2)(h)",
                    lie_scale=lambda ctx: ctx.h**2),)),
            ),
        ),
        TheoremCase(
            "T3.2", WarpKind.GENERIC,
            "RBS with Killing X makes the factors Einstein",
            (rbs, killing_on_manifold()),
            (
                Clause("i", (hess_f, hess_h), (factor_einstein_with(0, combo1, mu1_text),)),
                Clause("ii", (hess_h,), (factor_einstein_with(1, mu2, mu2_text),)),
                Clause("iii", (), (factor_einstein_with(2, mu3, mu3_text),)),
            ),
        ),
        TheoremCase(
            "T3.3", WarpKind.GENERIC,
            "RBS with X = Xi Killing on Mi and proportional Hessians makes the factors Einstein",
            (rbs, hess_f, hess_h),
            (
                Clause("i", (field_confined([0]), factor_killing(0)), (
                    factor_einstein_with(0, combo1, mu1_text),
                    factor_einstein_with(
                        1, lambda ctx: mu2(ctx) - ctx.f * _x1_f(ctx),
                        "Ric2 = (lambda f^2 + rho R f^2 + f# + (n3/h) psi f^2 - f X1(f)) g2"),
                    factor_einstein_with(2, mu3, mu3_text),
                )),
                Clause("ii", (field_confined([1]), factor_killing(1)), (
                    factor_einstein_with(0, combo1, mu1_text),
                    factor_einstein_with(1, mu2, mu2_text),
                    factor_einstein_with(
                        2, lambda ctx: mu3(ctx) - ctx.h * _x2_h(ctx),
                        "Ric3 = (lambda h^2 + rho R h^2 + h# - h X2(h)) g3"),
                )),
                Clause("iii", (field_confined([2]), factor_killing(2)), (
                    factor_einstein_with(0, combo1, mu1_text),
                    factor_einstein_with(1, mu2, mu2_text),
                    factor_einstein_with(2, mu3, mu3_text),
                )),
            ),
        ),
        TheoremCase(
            "T3.4", WarpKind.GENERIC,
            "RBS with conformal X makes the factors Einstein",
            (rbs, conformal_on_manifold()),
            (
                Clause("i", (hess_f, hess_h), (factor_einstein_with(
                    0, lambda ctx: combo1(ctx) - _alpha(ctx),
                    "Ric1 = (lambda + rho R - alpha + (n2/f) sigma + (n3/h) psi) g1"),)),
                Clause("ii", (hess_h,), (factor_einstein_with(
                    1, lambda ctx: mu2(ctx) - _alpha(ctx) * ctx.f**2,
                    "Ric2 = (lambda f^2 + rho R f^2 - alpha f^2 + (n3/h) psi f^2 + f#) g2"),)),
                Clause("iii", (), (factor_einstein_with(
                    2, lambda ctx: mu3(ctx) - _alpha(ctx) * ctx.h**2,
                    "Ric3 = (lambda h^2 + rho R h^2 - alpha h^2 + h#) g3"),)),
            ),
        ),
        TheoremCase(
            "T3.5", WarpKind.GENERIC,
            "Sufficient conditions on X for M to be Einstein",
            (rbs,),
            (
                Clause("i", (field_confined([2]), factor_killing(2)), (einstein,)),
                Clause("ii", (
                    factor_killing(0),
                    factor_conformal_with(1, lambda ctx: -2.0 * _x1_f(ctx) / ctx.f,
                                          "-2 X1(ln f)"),
                    factor_conformal_with(2, lambda ctx: -2.0 * _x12_h(ctx) / ctx.h,
                                          "-2 (X1 + X2)(ln h)"),
                ), (einstein,)),
                Clause("iii", (
                    field_confined([1, 2]), factor_killing(1), factor_killing(2), x2_h_vanishes(),
                ), (einstein,)),
            ),
        ),
        TheoremCase(
            "T3.6", WarpKind.GENERIC,
            "Einstein factors force conformal components of X",
            (rbs,),
            (
                Clause("i", (factor_is_einstein(0), hess_f, hess_h), (factor_conformal_conclusion(
                    0, lambda ctx: combo1(ctx) - _fitted_mu(0)(ctx),
                    "L1_X1 g1 = 2 (lambda + rho R - mu1 + (n2/f) sigma + (n3/h) psi) g1"),)),
                Clause("ii", (factor_is_einstein(1), hess_h), (factor_conformal_conclusion(
                    1, lambda ctx: (mu2(ctx) - _fitted_mu(1)(ctx) - ctx.f * _x1_f(ctx)) / ctx.f**2,
                    "L2_X2 g2 = (2/f^2)(lambda f^2 + rho R f^2 - mu2 + f# + (n3/h) psi f^2 "
                    "- f X1(f)) g2"),)),
                Clause("iii", (factor_is_einstein(2),), (factor_conformal_conclusion(
                    2, lambda ctx: (mu3(ctx) - _fitted_mu(2)(ctx) - ctx.h * _x12_h(ctx)) / ctx.h**2,
                    "L3_X3 g3 = (2/h^2)(lambda h^2 + rho R h^2 - mu3 + h# - h (X1 + X2)(h)) g3"),)),
            ),
        ),
        TheoremCase(
            "T3.7", WarpKind.GENERIC,
            "Gradient RBS induces gradient solitons on M1 and M3",
            (gradient_soliton_holds(),),
            (
                Clause("i", (), (factor_gradient_soliton(
                    0, _phi1, lambda ctx: ctx.lam_rho,
                    "phi1 = u1 - n2 ln f - n3 ln h1, lambda1 + rho1 R1 = lambda + rho R"),)),
                Clause("ii", (), (factor_gradient_soliton(
                    2, lambda ctx: ctx.potential, mu3,
                    "phi3 = u, lambda3 + rho3 R3 = lambda h^2 + rho R h^2 + h#"),)),
            ),
            needs_field=False,
            needs_potential=True,
        ),
    ]


def _static_cases() -> list[TheoremCase]:
    rbs, hess_f, hess_h = soliton_holds(), hessian_f_proportional(), hessian_h_proportional()
    combo1 = _first_combination(_one)

    def mu2(ctx: CaseContext) -> np.ndarray:
        return ctx.lam_rho * ctx.f**2 + ctx.invariant("f_sharp") + _psi_f2(ctx, 1)

    einstein = manifold_einstein_with(lambda ctx: ctx.lam_rho, "Ric = (lambda + rho R) g")

    return [
        TheoremCase(
            "S4.1", WarpKind.STANDARD_STATIC,
            "RBS on a sequential standard static space-time",
            (rbs,),
            (
                Clause("i", (hess_f, hess_h), (factor_soliton(
                    0, combo1,
                    "lambda1 + rho1 R1 = lambda + rho R + (n2/f) sigma + (1/h) psi"),)),
                Clause("ii", (factor_killing(1), hess_h), (factor_einstein_with(
                    1, lambda ctx: mu2(ctx) - ctx.f * _x1_f(ctx),
                    "Ric2 = (lambda f^2 + rho R f^2 + f# + (1/h) psi f^2 - f X1(f)) g2"),)),
                Clause("iii", (), (scalar_identity(
                    "time-block identity",
                    lambda ctx: (_static_time_term(ctx) + ctx.time_field[1]
                                 + _x12_h(ctx) / ctx.h),
                    "-Lap h / h + dw/dt + (1/h)(X1 + X2)(h) = lambda + rho R"),)),
            ),
        ),
        TheoremCase(
            "S4.2", WarpKind.STANDARD_STATIC,
            "Conformal X on a standard static space-time makes M1 and M2 Einstein",
            (rbs, conformal_on_manifold(), hess_f, hess_h),
            (
                Clause(None, (), (
                    factor_einstein_with(
                        0, lambda ctx: (_static_time_term(ctx)
                                        + _ratio(ctx.n[1], ctx.sigma, ctx.f)
                                        + _ratio(1, ctx.psi, ctx.h)),
                        "mu1 = -Lap h / h + (n2/f) sigma + (1/h) psi"),
                    factor_einstein_with(
                        1, lambda ctx: (_static_time_term(ctx) * ctx.f**2
                                        + ctx.invariant("f_sharp") + _psi_f2(ctx, 1)),
                        "mu2 = -(Lap h / h) f^2 + f# + (1/h) psi f^2"),
                )),
            ),
        ),
        TheoremCase(
            "S4.3", WarpKind.STANDARD_STATIC,
            "Sufficient conditions on X for a standard static space-time to be Einstein",
            (rbs,),
            (
                Clause("i", (field_confined([2]), factor_killing(2)), (einstein,)),
                Clause("ii", (
                    factor_killing(0),
                    factor_conformal_with(1, lambda ctx: -2.0 * _x1_f(ctx) / ctx.f,
                                          "-2 X1(ln f)"),
                    factor_conformal_with(2, lambda ctx: -2.0 * _x12_h(ctx) / ctx.h,
                                          "-2 (X1 + X2)(ln h)"),
                ), (einstein,)),
                Clause("iii", (
                    field_confined([1, 2]), factor_killing(1),
                    factor_killing(2), x2_h_vanishes(),
                ), (einstein,)),
            ),
        ),
        TheoremCase(
            "S4.4", WarpKind.STANDARD_STATIC,
            "Einstein M1, M2 force conformal X1, X2 on a standard static space-time",
            (rbs, hess_f, hess_h),
            (
                Clause("i", (factor_is_einstein(0),), (factor_conformal_conclusion(
                    0, lambda ctx: combo1(ctx) - _fitted_mu(0)(ctx),
                    "L1_X1 g1 = 2 (lambda + rho R - mu1 + (n2/f) sigma + (1/h) psi) g1"),)),
                Clause("ii", (factor_is_einstein(1),), (factor_conformal_conclusion(
                    1, lambda ctx: (mu2(ctx) - _fitted_mu(1)(ctx) - ctx.f * _x1_f(ctx)) / ctx.f**2,
                    "L2_X2 g2 = (2/f^2)((lambda + rho R) f^2 - mu2 + f# + (1/h) psi f^2 "
                    "- f X1(f)) g2"),)),
            ),
        ),
    ]


def _grw_cases() -> list[TheoremCase]:
    rbs, hess_h = soliton_holds(), hessian_h_proportional()

    def psi_term(ctx: CaseContext) -> np.ndarray:
        return _ratio(ctx.n[2], ctx.psi, ctx.h)

    def h_dot(ctx: CaseContext) -> np.ndarray:
        return ctx.invariant("h_t")

    return [
        TheoremCase(
            "G4.1", WarpKind.GRW,
            "RBS on a sequential generalized Robertson-Walker space-time",
            (rbs,),
            (
                Clause("i", (), (scalar_identity(
                    "time-block identity",
                    lambda ctx: _grw_time_term(ctx) + ctx.time_field[1],
                    "-(n2/f) f'' - (n3/h) d2h/dt2 + dw/dt = lambda + rho R"),)),
                Clause("ii", (hess_h,), (factor_soliton(
                    1,
                    lambda ctx: (ctx.lam_rho * ctx.f**2 + ctx.invariant("f_diamond")
                                 - ctx.time_field[0] * ctx.f * ctx.invariant("f_dot")
                                 + psi_term(ctx)),
                    "lambda2 + rho2 R2 = lambda f^2 + rho R f^2 + f<> - w f f' + (n3/h) psi",
                    lie_scale=lambda ctx: ctx.f**2),)),
                Clause("iii", (), (factor_soliton(
                    2,
                    lambda ctx: (ctx.lam_rho * ctx.h**2 + ctx.invariant("h_sharp")
                                 - ctx.time_field[0] * ctx.h * h_dot(ctx)
                                 - ctx.time_field[0] * ctx.h * _x2_h(ctx)),
                    "lambda3 + rho3 R3 = lambda h^2 + rho R h^2 + h# - w h dh/dt - w h X2(h)",
                    lie_scale=lambda ctx: ctx.h**2),)),
            ),
        ),
        TheoremCase(
            "G4.2", WarpKind.GRW,
            "Conformal X on a GRW space-time makes M2 and M3 Einstein",
            (rbs, conformal_on_manifold(), hess_h),
            (
                Clause(None, (), (
                    factor_einstein_with(
                        1, lambda ctx: (_grw_time_term(ctx) * ctx.f**2
                                        + ctx.invariant("f_diamond") + psi_term(ctx)),
                        "mu2 = (-(n2/f) f'' - (n3/h) d2h/dt2) f^2 + f<> + (n3/h) psi"),
                    factor_einstein_with(
                        2, lambda ctx: _grw_time_term(ctx) * ctx.h**2 + ctx.invariant("h_sharp"),
                        "mu3 = (-(n2/f) f'' - (n3/h) d2h/dt2) h^2 + h#"),
                )),
            ),
        ),
        TheoremCase(
            "G4.3", WarpKind.GRW,
            "Gradient RBS with u = int_a^t f(r) dr is Einstein with factor lambda + rho R - f'",
            (potential_is_primitive(),),
            (
                Clause("a", (), tuple(hessian_proportional_block(b) for b in range(3))),
                Clause("b", (gradient_soliton_holds(),), (manifold_einstein_with(
                    lambda ctx: ctx.lam_rho - ctx.invariant("f_dot"),
                    "Ric = (lambda + rho R - f') g"),)),
            ),
            needs_field=False,
            needs_potential=True,
        ),
    ]


THEOREM_CASES: dict[str, TheoremCase] = {
    case.case_id: case for case in _generic_cases() + _static_cases() + _grw_cases()
}


def parse_case_id(case_id: str) -> tuple[TheoremCase, Optional[str]]:
    """Split 'T3.5(i)' into the registered case and the clause label"""
    match = _CASE_ID.match(case_id.strip())
    if match is None or match.group("case") not in THEOREM_CASES:
        raise KeyError(f"unknown theorem case '{case_id}'; known: {sorted(THEOREM_CASES)}")
    case = THEOREM_CASES[match.group("case")]
    clause = match.group("clause")
    if clause is not None and clause not in case.clause_labels:
        raise KeyError(f"{case.case_id} has no clause '{clause}'; clauses: {case.clause_labels}")
    return case, clause


# ===========================
# Harness
# ===========================


@dataclass
class _Run:
    ctx: CaseContext
    case_id: str
    checks: list[CheckResult] = field(default_factory=list)
    ledger: list[LedgerEntry] = field(default_factory=list)

    def evaluate(self, check: Check, role: CheckRole, clause: Optional[str]) -> CheckResult:
        measurement = check.measure(self.ctx)
        result, entry = identity_check(
            check.name, check.anchor, check.operation, measurement.lhs, measurement.rhs,
            self.ctx.grid, measurement.rows, measurement.cols, self.ctx.tolerance,
            role=role, clause=clause, constants=measurement.constants,
            require=measurement.require, note=measurement.note,
        )
        if role is CheckRole.HYPOTHESIS:
            if result.verdict is Verdict.FLAG:
                worst = result.stats.max_abs if result.stats else 0.0
                logger.warning("%s: hypothesis '%s' not satisfied (max residual %.3e)",
                               self.case_id, check.name, worst)
                note = "hypothesis not satisfied"
                if result.note:
                    note = f"{note}; {result.note}"
                result = result.model_copy(update={"verdict": Verdict.SKIP, "note": note})
        elif entry is not None:
            label = f"({clause})" if clause else ""
            self.ledger.append(entry.model_copy(
                update={"identity": f"{self.case_id}{label}: {check.name}"}))
        self.checks.append(result)
        return result

    def skip(self, check: Check, clause: Optional[str], failed: Sequence[str]) -> None:
        self.checks.append(CheckResult(
            name=check.name,
            anchor=check.anchor,
            operation=check.operation,
            tolerance=self.ctx.tolerance,
            role=CheckRole.CONCLUSION,
            clause=clause,
            verdict=Verdict.SKIP,
            note="hypothesis failed: " + ", ".join(failed),
        ))


def verify_theorem(case_id: str, instance: SolitonInstance, grid: Sequence[Point],
                   tolerance: float) -> VerdictReport:
    """
    Run hypotheses then conclusions of one registered case.

    Args:
        case_id: Registered id, optionally clause-qualified ("T3.5(i)")
        instance: Soliton instance carrying X or u
        grid: Sample points
        tolerance: Pointwise residual threshold

    Returns:
        VerdictReport with hypothesis and conclusion rows in registry order
    """
    case, only = parse_case_id(case_id)
    manifold = instance.manifold
    if manifold.kind is not case.kind:
        raise InstanceKindError(
            f"{case.case_id} applies to {case.kind.value} products, "
            f"instance '{manifold.name}' is {manifold.kind.value}"
        )
    if case.needs_field and instance.field is None:
        raise MissingAuxiliaryDataError(f"{case.case_id} needs a potential vector field X")
    if case.needs_potential and instance.potential is None:
        raise MissingAuxiliaryDataError(f"{case.case_id} needs a potential function u")

    logger.info("verifying %s on %s (%d points)", case_id, manifold.name, len(grid))
    run = _Run(CaseContext(instance, grid, tolerance), case.case_id)

    shared_failed = [
        check.name for check in case.hypotheses
        if run.evaluate(check, CheckRole.HYPOTHESIS, None).verdict is not Verdict.PASS
    ]
    for clause in case.clauses:
        if only is not None and clause.label != only:
            continue
        failed = list(shared_failed)
        for check in clause.hypotheses:
            if run.evaluate(check, CheckRole.HYPOTHESIS, clause.label).verdict is not Verdict.PASS:
                failed.append(check.name)
        for check in clause.conclusions:
            if failed:
                run.skip(check, clause.label, failed)
            else:
                run.evaluate(check, CheckRole.CONCLUSION, clause.label)

    report = VerdictReport(
        case_id=case_id,
        instance=manifold.name,
        kind=manifold.kind.value,
        tolerance=tolerance,
        grid_points=len(grid),
        checks=run.checks,
        ledger=sort_ledger(run.ledger),
    )
    logger.info("%s on %s: %s", case_id, manifold.name, report.counts())
    return report
