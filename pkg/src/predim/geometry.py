"""The pregeometry induced by the predimension.

Dimension of A over C is delta of the closure of A union C minus delta of the
closure of C.  Geometric closure collects the elements of dimension zero.
Both notions need an integer-valued predimension that gives single elements
at most one unit, so validity is checked up front.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional

from .predimension import PredimensionSpec, delta
from .strongsets import closure
from .structures import FinStructure


class GeometryError(ValueError):
    """The spec or structure does not induce a pregeometry."""


def require_geometric(spec: PredimensionSpec, struct: FinStructure) -> None:
    """Integer-valued delta with singletons worth at most 1, on a valid spec."""
    if not spec.valid:
        raise GeometryError("pregeometry needs a valid (submodular) spec")
    for name in struct.sig.names:
        if struct.sig.weight(name).denominator != 1:
            raise GeometryError(f"weight of {name} is not an integer")
    for _, coef in spec.components:
        if coef.denominator != 1:
            raise GeometryError(f"component coefficient {coef} is not an integer")
    for e in struct.universe:
        v = delta(spec, struct, (e,))
        if v > 1:
            raise GeometryError(f"element {e} has predimension {v} > 1")


def dim(
    spec: PredimensionSpec,
    struct: FinStructure,
    subset: Iterable[int],
    over: Iterable[int] = (),
) -> int:
    """Dimension of `subset` over `over` inside `struct`."""
    require_geometric(spec, struct)
    a = frozenset(int(e) for e in subset)
    c = frozenset(int(e) for e in over)
    joint = closure(spec, struct, a | c)
    ground = closure(spec, struct, c)
    value = delta(spec, struct, joint) - delta(spec, struct, ground)
    assert value.denominator == 1
    return int(value)


def gcl_member(
    spec: PredimensionSpec,
    struct: FinStructure,
    elem: int,
    base: Iterable[int] = (),
) -> bool:
    """Whether one element is geometrically dependent on the base."""
    return dim(spec, struct, (elem,), base) == 0


def gcl(
    spec: PredimensionSpec,
    struct: FinStructure,
    base: Iterable[int] = (),
) -> tuple[int, ...]:
    """Geometric closure: every element of dimension zero over the base."""
    require_geometric(spec, struct)
    b = frozenset(int(e) for e in base)
    ground = closure(spec, struct, b)
    d_ground = delta(spec, struct, ground)
    out = []
    for e in struct.universe:
        if e in ground:
            out.append(e)
            continue
        joint = closure(spec, struct, b | {e})
        if delta(spec, struct, joint) - d_ground == 0:
            out.append(e)
    return tuple(out)


def check_exchange(
    spec: PredimensionSpec,
    struct: FinStructure,
    a: int,
    b: int,
    over: Iterable[int] = (),
) -> bool:
    """Exchange law: a depending on b over C (but not on C alone) forces b to
    depend on a over C.  True when the law holds on this triple."""
    c = frozenset(int(e) for e in over)
    if not gcl_member(spec, struct, a, c | {b}):
        return True
    if gcl_member(spec, struct, a, c):
        return True
    return gcl_member(spec, struct, b, c | {a})
