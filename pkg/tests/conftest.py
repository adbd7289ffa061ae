"""
Shared fixtures: catalog instances, small grids and field helpers
"""

import pytest

from src.cli.builder import build_manifold
from src.cli.models import CatalogInstance
from src.geometry import oracle
from src.geometry.expr import parse
from src.geometry.manifold import ScalarFieldSpec, SequentialWarpedProduct, VectorFieldSpec


def catalog(name: str) -> SequentialWarpedProduct:
    """Build a built-in instance through the same path the CLI uses"""
    return build_manifold(CatalogInstance(catalog=name))


def vector_field(manifold: SequentialWarpedProduct, blocks, name: str = "X") -> VectorFieldSpec:
    """Vector field from nested lists of source strings"""
    parsed = [[parse(source, manifold.coords) for source in block] for block in blocks]
    return VectorFieldSpec.on(manifold, parsed, name)


def scalar_field(manifold: SequentialWarpedProduct, source: str,
                 name: str = "u") -> ScalarFieldSpec:
    return ScalarFieldSpec.on(manifold, parse(source, manifold.coords), name)


@pytest.fixture(autouse=True)
def fresh_caches():
    """Oracle caches are keyed by metric identity; start every test cold"""
    oracle.clear_caches()
    yield
    oracle.clear_caches()


@pytest.fixture
def flat3():
    return catalog("flat3")


@pytest.fixture
def hyp3():
    return catalog("hyp3")


@pytest.fixture
def mink():
    return catalog("mink-static")


@pytest.fixture
def desitter():
    return catalog("desitter-grw")


@pytest.fixture
def rand_riemann():
    return catalog("rand-riemann")


@pytest.fixture
def grid3():
    """Factory for a 3-per-dimension grid on any instance"""

    def make(manifold: SequentialWarpedProduct):
        return manifold.sample_grid(3)

    return make
