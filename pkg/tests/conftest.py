from __future__ import annotations

from fractions import Fraction

import pytest

from predim import (
    FinStructure,
    LinearOracle,
    PredimensionSpec,
    Signature,
    oracle_by_name,
)
from predim.sampling import graph_signature


def graph(n: int, edges, weight: Fraction = Fraction(1)) -> FinStructure:
    """Undirected graph on 0..n-1 with the usual symmetric edge relation."""
    return FinStructure(graph_signature(weight), range(n), {"E": [tuple(e) for e in edges]})


def vectors(*coords: tuple[int, ...]) -> FinStructure:
    """Relation-free structure whose elements carry vector annotations."""
    ann = {i: tuple(str(c) for c in v) for i, v in enumerate(coords)}
    return FinStructure(Signature(()), range(len(coords)), {}, ann)


def spec_alpha(weight: Fraction = Fraction(1)) -> PredimensionSpec:
    return PredimensionSpec.make(relational=True)


def spec_fusion(p: int = 5) -> PredimensionSpec:
    return PredimensionSpec.make(
        relational=False,
        components=(
            (LinearOracle(p), Fraction(1)),
            (oracle_by_name("free"), Fraction(1)),
            (oracle_by_name("cardinality"), Fraction(-1)),
        ),
    )


@pytest.fixture
def alpha1() -> PredimensionSpec:
    return spec_alpha()


@pytest.fixture
def fusion() -> PredimensionSpec:
    return spec_fusion()


@pytest.fixture
def k3() -> FinStructure:
    return graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4() -> FinStructure:
    return graph(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])


@pytest.fixture
def path4() -> FinStructure:
    return graph(4, [(0, 1), (1, 2), (2, 3)])
