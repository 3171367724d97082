"""Predimension evaluation: weighted instance counts plus matroid components.

The relational part of the predimension of a finite set X is

    |X| - sum over symbols R of weight(R) * (number of R-instances inside X)

and each matroid component contributes coefficient * rank(X).  All
arithmetic is exact (`fractions.Fraction`).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional

from .structures import Embedding, FinStructure, StructureError


class SpecError(ValueError):
    """Invalid predimension specification or component data."""


class MatroidOracle(ABC):
    """Rank function on subsets of a structure's universe.

    `modular` must be True only when rank is modular (rank(A) + rank(B) ==
    rank(A|B) + rank(A&B) for all A, B); negative coefficients are legal for
    modular components only, otherwise submodularity of the predimension
    breaks.
    """

    name: str = "?"
    modular: bool = False

    @abstractmethod
    def rank(self, struct: FinStructure, subset: frozenset[int]) -> Fraction:
        ...

    def embedding_ok(self, emb: Embedding) -> bool:
        """Whether the embedding preserves this component's rank pattern.

        Checks rank equality on every subset of the source universe, so it is
        meant for small sources (the exact contract, not a heuristic).
        """
        src = emb.source
        if src.n > 16:
            raise SpecError("embedding rank check refused beyond 16 source elements")
        m = emb.mapping
        for r in range(src.n + 1):
            for combo in combinations(src.universe, r):
                sub = frozenset(combo)
                img = frozenset(m[e] for e in combo)
                if self.rank(src, sub) != self.rank(emb.target, img):
                    return False
        return True

    def __repr__(self):
        return f"{type(self).__name__}()"


class FreeOracle(MatroidOracle):
    """Free matroid: every set is independent, rank(X) = |X|."""

    name = "free"
    modular = True
    sizelike = True

    def rank(self, struct, subset):
        return Fraction(len(subset))

    def embedding_ok(self, emb):
        return True

    def __eq__(self, other):
        return type(other) is type(self)

    def __hash__(self):
        return hash(self.name)


class CardinalityOracle(FreeOracle):
    """Counting component: rank(X) = |X|.  Modular, so it may carry a
    negative coefficient (the usual way to put -|X| into a predimension
    whose relational part is switched off)."""

    name = "cardinality"


class UniformOracle(MatroidOracle):
    """Uniform matroid U_k: rank(X) = min(|X|, k).  Not modular."""

    modular = False

    def __init__(self, k: int):
        if k < 1:
            raise SpecError("uniform matroid needs k >= 1")
        self.k = k
        self.name = f"uniform{k}"

    def rank(self, struct, subset):
        return Fraction(min(len(subset), self.k))

    def embedding_ok(self, emb):
        # Rank only depends on cardinality, which embeddings preserve.
        return True

    def __eq__(self, other):
        return type(other) is type(self) and other.k == self.k

    def __hash__(self):
        return hash((self.name, self.k))


class LinearOracle(MatroidOracle):
    """Linear matroid over the prime field F_p, vectors read from annotations.

    An element's vector is its annotation token tuple, each token an integer
    mod p; shorter vectors are padded with zeros on the right.  Elements
    without an annotation are the zero vector.  Not modular.
    """

    modular = False

    def __init__(self, p: int):
        if p < 2 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
            raise SpecError(f"linear oracle needs a prime modulus, got {p}")
        self.p = p
        self.name = f"linear{p}"

    def vector(self, struct: FinStructure, elem: int, width: int) -> tuple[int, ...]:
        toks = struct.annotation(elem)
        try:
            vals = tuple(int(t) % self.p for t in toks)
        except ValueError:
            raise SpecError(f"non-integer annotation token on element {elem}: {toks}")
        return vals + (0,) * (width - len(vals))

    def _width(self, struct: FinStructure) -> int:
        return max((len(t) for t in struct.annotations.values()), default=0)

    def rank(self, struct, subset):
        width = self._width(struct)
        if width == 0 or not subset:
            return Fraction(0)
        rows = [list(self.vector(struct, e, width)) for e in sorted(subset)]
        return Fraction(_rank_mod_p(rows, self.p))

    def __eq__(self, other):
        return type(other) is type(self) and other.p == self.p

    def __hash__(self):
        return hash((self.name, self.p))


def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    """Gaussian elimination over F_p."""
    if not rows:
        return 0
    width = len(rows[0])
    rank = 0
    col = 0
    rows = [r[:] for r in rows]
    while rank < len(rows) and col < width:
        pivot = next((i for i in range(rank, len(rows)) if rows[i][col] % p), None)
        if pivot is None:
            col += 1
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][col], p - 2, p)
        rows[rank] = [(x * inv) % p for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] % p:
                f = rows[i][col]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


_ORACLE_BUILDERS = {
    "free": lambda: FreeOracle(),
    "cardinality": lambda: CardinalityOracle(),
}


def oracle_by_name(name: str) -> MatroidOracle:
    """Oracle factory for spec files: free, cardinality, linear<p>, uniform<k>."""
    if name in _ORACLE_BUILDERS:
        return _ORACLE_BUILDERS[name]()
    if name.startswith("linear") and name[6:].isdigit():
        return LinearOracle(int(name[6:]))
    if name.startswith("uniform") and name[7:].isdigit():
        return UniformOracle(int(name[7:]))
    raise SpecError(f"unknown matroid oracle {name!r}")


@dataclass(frozen=True)
class PredimensionSpec:
    """Which terms enter the predimension.

    `relational` toggles the |X| - sum(weight * instance count) part; the
    per-symbol weights live on the structure's signature.  `components` are
    (oracle, coefficient) pairs.  Construction validates that every negative
    coefficient sits on a modular oracle; `make(..., allow_invalid=True)`
    records violations instead of raising, which keeps deliberately broken
    specs constructible for audits.
    """

    relational: bool = True
    components: tuple[tuple[MatroidOracle, Fraction], ...] = ()
    violations: tuple[str, ...] = ()

    @staticmethod
    def make(
        relational: bool = True,
        components: Iterable[tuple[MatroidOracle, Fraction]] = (),
        allow_invalid: bool = False,
    ) -> "PredimensionSpec":
        comps = tuple((oracle, Fraction(coef)) for oracle, coef in components)
        problems = []
        for oracle, coef in comps:
            if coef == 0:
                problems.append(f"component {oracle.name} has zero coefficient")
            if coef < 0 and not oracle.modular:
                problems.append(
                    f"component {oracle.name} is not modular but has negative coefficient {coef}"
                )
        if problems and not allow_invalid:
            raise SpecError("; ".join(problems))
        return PredimensionSpec(relational, comps, tuple(problems))

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def monotone(self) -> bool:
        """True when delta is provably monotone, hence every set is strong.

        Holds when the relational part is off and, after merging size-like
        components (free/cardinality both have rank(X) = |X|), every net
        coefficient is nonnegative.
        """
        if self.relational:
            return False
        size_coef = Fraction(0)
        for oracle, coef in self.components:
            if getattr(oracle, "sizelike", False):
                size_coef += coef
            elif coef < 0:
                return False
        return size_coef >= 0

    def describe(self) -> str:
        parts = [f"relational={'on' if self.relational else 'off'}"]
        parts += [f"{oracle.name}:{coef}" for oracle, coef in self.components]
        return " ".join(parts)


def delta(spec: PredimensionSpec, struct: FinStructure, subset: Optional[Iterable[int]] = None) -> Fraction:
    """Predimension of `subset` inside `struct` (whole universe by default)."""
    if subset is None:
        sub = frozenset(struct.universe)
    else:
        sub = frozenset(int(e) for e in subset)
        stray = sub - frozenset(struct.universe)
        if stray:
            raise StructureError(f"delta over non-elements {sorted(stray)}")
    value = Fraction(0)
    if spec.relational:
        value += len(sub)
        for name in struct.sig.names:
            w = struct.sig.weight(name)
            inside = sum(1 for t in struct.instances[name] if sub.issuperset(t))
            if inside:
                value -= w * inside
    for oracle, coef in spec.components:
        value += coef * oracle.rank(struct, sub)
    return value


def delta_rel(
    spec: PredimensionSpec,
    struct: FinStructure,
    subset: Iterable[int],
    base: Iterable[int],
) -> Fraction:
    """Relative predimension of `subset` over `base`: delta(X|B) - delta(B)."""
    b = frozenset(int(e) for e in base)
    x = frozenset(int(e) for e in subset)
    return delta(spec, struct, x | b) - delta(spec, struct, b)


def is_embedding_compatible(spec: PredimensionSpec, emb: Embedding) -> bool:
    """Embedding respects every matroid component's rank pattern."""
    return all(oracle.embedding_ok(emb) for oracle, _ in spec.components)


ALPHA_ONE = PredimensionSpec()
"""Default specification: relational part only (weights from the signature)."""
