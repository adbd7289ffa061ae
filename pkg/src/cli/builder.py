"""
Run Configuration Builder

This module:
1. Loads and schema-validates the JSON run configuration
2. Builds the product manifold, named fields and soliton instance
3. Resolves grid size, tolerance and seed (CLI flag > JSON value > environment)

Every failure is raised as ConfigError naming the JSON path of the offending
value, e.g. instance.factors[0].metric[0][0].
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from pydantic import ValidationError

from src.cli.catalog import CATALOG, catalog_entry
from src.cli.models import (
    UNION_TAGS,
    CatalogInstance,
    InlineInstance,
    RunConfig,
    ScalarFieldConfig,
    SolitonConfig,
    VectorFieldConfig,
)
from src.config import DEFAULT_GRID_PER_DIM, DEFAULT_SEED, DEFAULT_TOLERANCE
from src.geometry.errors import ConfigError, ExpressionError, ManifoldError
from src.geometry.expr import Expression, parse
from src.geometry.manifold import (
    Factor,
    Interval,
    Point,
    ScalarFieldSpec,
    SequentialWarpedProduct,
    VectorFieldSpec,
    WarpKind,
)
from src.geometry.soliton import SolitonInstance

logger = logging.getLogger(__name__)


@dataclass
class RunSetup:
    """Everything a run needs, built and validated"""

    manifold: SequentialWarpedProduct
    per_dim: int
    tolerance: float
    seed: int
    vector_fields: dict[str, VectorFieldSpec] = field(default_factory=dict)
    scalar_fields: dict[str, ScalarFieldSpec] = field(default_factory=dict)
    soliton: Optional[SolitonInstance] = None
    grid: list[Point] = field(default_factory=list)


# ===========================
# JSON paths
# ===========================


def format_location(location: Sequence[Union[str, int]]) -> str:
    """('instance', 'inline', 'factors', 0, 'box') -> 'instance.factors[0].box'"""
    path = ""
    for part in location:
        if isinstance(part, int):
            path += f"[{part}]"
        elif part in UNION_TAGS:
            continue
        else:
            path += f".{part}" if path else part
    return path or "$"


def load_config(path: Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError("$", f"cannot read {path}: {e}", e) from e
    except json.JSONDecodeError as e:
        message = f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        raise ConfigError("$", message, e) from e
    return validate_config(data)


def validate_config(data: Any) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(format_location(first["loc"]), first["msg"], e) from e


# ===========================
# Builders
# ===========================


def _parse(source: str, variables: Sequence[str], path: str) -> Expression:
    try:
        return parse(source, variables)
    except ExpressionError as e:
        raise ConfigError(path, str(e), e) from e


def _resolve_instance(config: Union[CatalogInstance, InlineInstance]) -> InlineInstance:
    if isinstance(config, InlineInstance):
        return config
    try:
        return InlineInstance.model_validate(catalog_entry(config.catalog))
    except KeyError:
        raise ConfigError(
            "instance.catalog",
            f"unknown catalog instance '{config.catalog}'; known: {sorted(CATALOG)}",
        ) from None


def build_manifold(config: Union[CatalogInstance, InlineInstance]) -> SequentialWarpedProduct:
    inline = _resolve_instance(config)
    factors = []
    for i, spec in enumerate(inline.factors):
        path = f"instance.factors[{i}]"
        metric = tuple(
            tuple(_parse(entry, spec.coords, f"{path}.metric[{r}][{c}]")
                  for c, entry in enumerate(row))
            for r, row in enumerate(spec.metric)
        )
        box = []
        for k, (low, high) in enumerate(spec.box):
            try:
                box.append(Interval(low, high))
            except ManifoldError as e:
                raise ConfigError(f"{path}.box[{k}]", str(e), e) from e
        try:
            factors.append(Factor(f"M{i + 1}", tuple(spec.coords), metric, tuple(box)))
        except ManifoldError as e:
            raise ConfigError(path, str(e), e) from e

    first = factors[0].coords
    f = _parse(inline.f, first, "instance.f")
    h = _parse(inline.h, first + factors[1].coords, "instance.h")
    try:
        return SequentialWarpedProduct(WarpKind(inline.kind), tuple(factors), f, h,
                                       name=inline.name)
    except ManifoldError as e:
        raise ConfigError("instance", str(e), e) from e


def build_vector_field(blocks: Sequence[Sequence[str]], manifold: SequentialWarpedProduct,
                       path: str, name: str = "X") -> VectorFieldSpec:
    if len(blocks) != 3:
        raise ConfigError(path, "a vector field needs one component block per factor")
    parsed = []
    for i, (block, factor) in enumerate(zip(blocks, manifold.factors)):
        if len(block) != factor.dim:
            raise ConfigError(f"{path}[{i}]", f"block needs {factor.dim} components")
        parsed.append([
            _parse(source, manifold.coords, f"{path}[{i}][{k}]") for k, source in enumerate(block)
        ])
    try:
        return VectorFieldSpec.on(manifold, parsed, name)
    except ManifoldError as e:
        raise ConfigError(path, str(e), e) from e


def build_scalar_field(source: str, manifold: SequentialWarpedProduct, path: str,
                       name: str = "u") -> ScalarFieldSpec:
    return ScalarFieldSpec.on(manifold, _parse(source, manifold.coords, path), name)


def build_soliton(config: SolitonConfig, manifold: SequentialWarpedProduct,
                  vectors: dict[str, VectorFieldSpec], scalars: dict[str, ScalarFieldSpec]
                  ) -> SolitonInstance:
    if config.u is not None:
        potential = scalars.get(config.u) or build_scalar_field(config.u, manifold, "soliton.u")
        return SolitonInstance(manifold, config.lam, config.rho, potential=potential)

    value = config.X
    if isinstance(value, float) or value == "0":
        vector = VectorFieldSpec.zero(manifold)
    elif isinstance(value, str):
        if value not in vectors:
            known = sorted(vectors)
            raise ConfigError("soliton.X", f"unknown vector field '{value}'; known: {known}")
        vector = vectors[value]
    else:
        assert value is not None
        vector = build_vector_field(value, manifold, "soliton.X")
    return SolitonInstance(manifold, config.lam, config.rho, field=vector)


def build_run(config: RunConfig, grid: Optional[int] = None, tolerance: Optional[float] = None
              ) -> RunSetup:
    """
    Build the run from a validated configuration.

    Args:
        config: Validated run configuration
        grid: --grid override
        tolerance: --tol override
    """
    manifold = build_manifold(config.instance)
    setup = RunSetup(
        manifold=manifold,
        per_dim=grid or config.grid or DEFAULT_GRID_PER_DIM,
        tolerance=tolerance or config.tol or DEFAULT_TOLERANCE,
        seed=config.seed if config.seed is not None else DEFAULT_SEED,
    )
    for name, definition in config.fields.items():
        path = f"fields.{name}"
        if isinstance(definition, VectorFieldConfig):
            setup.vector_fields[name] = build_vector_field(definition.vector, manifold,
                                                           f"{path}.vector", name)
        elif isinstance(definition, ScalarFieldConfig):
            setup.scalar_fields[name] = build_scalar_field(definition.scalar, manifold,
                                                           f"{path}.scalar", name)
    if config.soliton is not None:
        setup.soliton = build_soliton(config.soliton, manifold, setup.vector_fields,
                                      setup.scalar_fields)

    try:
        setup.grid = manifold.sample_grid(setup.per_dim)
        manifold.validate(setup.grid)
    except ManifoldError as e:
        raise ConfigError("instance", str(e), e) from e
    logger.info("built %s (%s, dims %s) with %d grid points", manifold.name, manifold.kind.value,
                manifold.dims, len(setup.grid))
    return setup
