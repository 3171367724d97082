"""Seeded property audits shared by the CLI driver and the test suite.

Every audit takes an explicit `random.Random` plus a sample budget and
returns an AuditResult: how many checks ran, how many failed, and a
reproducible description of the first failure.  A zero budget yields a
vacuous result, which callers must report as such rather than as evidence.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .amalgams import free_amalgam
from .geometry import check_exchange, dim, require_geometric
from .predimension import LinearOracle, PredimensionSpec, delta
from .sampling import (
    graph_signature,
    random_structure,
    random_subset,
    random_vectors,
)
from .strongsets import brute_force_is_strong, closure, in_class, is_strong
from .structures import Embedding, FinStructure, Signature

StructSource = Callable[[random.Random], FinStructure]


@dataclass(frozen=True)
class AuditResult:
    name: str
    checked: int
    violations: int
    witness: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.violations == 0

    @property
    def vacuous(self) -> bool:
        return self.checked == 0


def _ids(elems) -> str:
    return "[" + " ".join(str(e) for e in sorted(elems)) + "]"


def _sketch(struct: FinStructure) -> str:
    """One-line reproduction aid for a witness report."""
    parts = [f"n={len(struct.universe)}"]
    for name in struct.sig.names:
        tuples = struct.instances.get(name, ())
        parts.append(f"{name}={';'.join(','.join(map(str, t)) for t in tuples)}")
    if struct.annotations:
        anns = ";".join(
            f"{e}:{','.join(struct.annotation(e))}" for e in sorted(struct.annotations)
        )
        parts.append(f"ann={anns}")
    return " ".join(parts)


def structure_source(
    spec: PredimensionSpec,
    *,
    weight: Fraction = Fraction(1),
    max_n: int = 10,
    density: float = 0.35,
    width: int = 2,
) -> StructSource:
    """Random structures matched to the spec: graphs when the relational part
    is on, bare annotated sets otherwise; vectors appear whenever a linear
    component needs them."""
    primes = [o.p for o, _ in spec.components if isinstance(o, LinearOracle)]
    sig = graph_signature(weight) if spec.relational else Signature(())

    def make(rng: random.Random) -> FinStructure:
        n = rng.randrange(1, max_n + 1)
        s = random_structure(rng, sig, n, density)
        if primes:
            return FinStructure(sig, s.universe, s.instances, random_vectors(rng, n, width, primes[0]))
        return s

    return make


# ---------------------------------------------------------------------------
# predimension laws


def audit_submodularity(
    spec: PredimensionSpec,
    source: StructSource,
    rng: random.Random,
    samples: int,
) -> AuditResult:
    """delta(X) + delta(Y) >= delta(X|Y) + delta(X&Y) on sampled pairs."""
    violations = 0
    witness = None
    for _ in range(samples):
        struct = source(rng)
        x = frozenset(random_subset(rng, struct.universe))
        y = frozenset(random_subset(rng, struct.universe))
        lhs = delta(spec, struct, x) + delta(spec, struct, y)
        rhs = delta(spec, struct, x | y) + delta(spec, struct, x & y)
        if lhs < rhs:
            violations += 1
            if witness is None:
                witness = f"X={_ids(x)} Y={_ids(y)} slack={lhs - rhs} on {_sketch(struct)}"
    return AuditResult("submodularity", samples, violations, witness)


def audit_strong_laws(
    spec: PredimensionSpec,
    source: StructSource,
    rng: random.Random,
    samples: int,
) -> AuditResult:
    """Transitivity and intersection-closure of self-sufficiency.

    Chains come from closures, so both premises hold by construction and
    every sample is a live instance of the law being tested.
    """
    checked = 0
    violations = 0
    witness = None
    for _ in range(samples):
        struct = source(rng)
        univ = struct.universe

        # transitivity: strong inside a strong set is strong outright
        b = closure(spec, struct, random_subset(rng, univ))
        a = closure(spec, struct, random_subset(rng, b), within=b)
        checked += 1
        if not is_strong(spec, struct, a).verdict:
            violations += 1
            if witness is None:
                witness = f"transitivity A={_ids(a)} B={_ids(b)} on {_sketch(struct)}"

        # intersection of two strong sets is strong
        c = closure(spec, struct, random_subset(rng, univ))
        d = closure(spec, struct, random_subset(rng, univ))
        meet = frozenset(c) & frozenset(d)
        checked += 1
        if not is_strong(spec, struct, meet).verdict:
            violations += 1
            if witness is None:
                witness = f"intersection C={_ids(c)} D={_ids(d)} on {_sketch(struct)}"
    return AuditResult("strong-laws", checked, violations, witness)


def audit_oracle_equivalence(
    spec: PredimensionSpec,
    source: StructSource,
    rng: random.Random,
    samples: int,
    max_free: int = 12,
) -> AuditResult:
    """Routed strength engines against the exhaustive oracle.

    Verdict and deficiency must match exactly; a negative verdict's witness
    must attain the reported deficiency.
    """
    violations = 0
    witness = None
    for _ in range(samples):
        struct = source(rng)
        base = random_subset(rng, struct.universe)
        rest = [e for e in struct.universe if e not in set(base)]
        cap = min(len(rest), max_free)
        free = random_subset(rng, rest, k=rng.randrange(cap + 1)) if rest else ()
        within = tuple(sorted(set(base) | set(free)))
        fast = is_strong(spec, struct, base, within)
        slow = brute_force_is_strong(spec, struct, base, within)
        bad = fast.verdict != slow.verdict or fast.deficiency != slow.deficiency
        if not bad and not fast.verdict:
            d_base = delta(spec, struct, base)
            attained = delta(spec, struct, set(base) | set(fast.witness)) - d_base
            bad = attained != fast.deficiency
        if bad:
            violations += 1
            if witness is None:
                witness = (
                    f"A={_ids(base)} W={_ids(within)} fast={fast.verdict}/{fast.deficiency} "
                    f"brute={slow.verdict}/{slow.deficiency} on {_sketch(struct)}"
                )
    return AuditResult("oracle-equivalence", samples, violations, witness)


# ---------------------------------------------------------------------------
# amalgamation


def _random_in_class(spec: PredimensionSpec, source: StructSource, rng: random.Random) -> FinStructure:
    while True:
        struct = source(rng)
        if in_class(spec, struct):
            return struct


def _grow_factor(
    spec: PredimensionSpec,
    base: FinStructure,
    rng: random.Random,
    extra: int,
) -> Optional[FinStructure]:
    """Extend `base` by fresh elements plus sparse edges; None when the draw
    leaves the class or breaks the base's self-sufficiency."""
    fresh = max(base.universe, default=-1) + 1
    new = list(range(fresh, fresh + extra))
    elems = list(base.universe) + new
    name = base.sig.names[0]
    edges = {tuple(t) for t in base.instances.get(name, ())}
    for v in new:
        others = [e for e in elems if e != v]
        for u in rng.sample(others, min(len(others), rng.randrange(0, 3))):
            edges.add((min(u, v), max(u, v)))
    cand = FinStructure(base.sig, elems, {name: sorted(edges)}, base.annotations)
    if not in_class(spec, cand):
        return None
    if not is_strong(spec, cand, base.universe).verdict:
        return None
    return cand


def audit_amalgamation(
    spec: PredimensionSpec,
    source: StructSource,
    rng: random.Random,
    samples: int,
) -> AuditResult:
    """Free amalgams of in-class factors over a common strong base: the
    amalgam stays in the class, both factors sit strongly inside it, and
    predimension adds up with the base counted once.

    Relational specs only; the instance sets of the two factors are disjoint
    over the base, which is what the predimension identity rests on.
    """
    if not spec.relational:
        raise ValueError("the amalgamation audit needs a relational spec")
    checked = 0
    violations = 0
    witness = None
    attempts = 0
    while checked < samples and attempts < 6 * samples:
        attempts += 1
        b1 = _random_in_class(spec, source, rng)
        seed_cap = min(len(b1.universe), 2)
        a = closure(spec, b1, random_subset(rng, b1.universe, k=rng.randrange(seed_cap + 1)))
        base = b1.restrict(a)
        b2 = _grow_factor(spec, base, rng, rng.randrange(1, 4))
        if b2 is None:
            continue
        ident = {e: e for e in a}
        res = free_amalgam(Embedding.make(base, b1, ident), Embedding.make(base, b2, ident))
        d = res.amalgam
        checked += 1
        problems = []
        if not in_class(spec, d):
            problems.append("amalgam left the class")
        if not is_strong(spec, d, res.left.image).verdict:
            problems.append("left factor not strong")
        if not is_strong(spec, d, res.right.image).verdict:
            problems.append("right factor not strong")
        total = delta(spec, b1) + delta(spec, b2) - delta(spec, base)
        if delta(spec, d) != total:
            problems.append(f"delta {delta(spec, d)} != {total}")
        if problems:
            violations += 1
            if witness is None:
                witness = f"{'; '.join(problems)} base={_ids(a)} on {_sketch(d)}"
    return AuditResult("amalgamation", checked, violations, witness)


# ---------------------------------------------------------------------------
# geometry laws


def audit_exchange(
    spec: PredimensionSpec,
    source: StructSource,
    rng: random.Random,
    samples: int,
    *,
    fresh_every: int = 10,
) -> AuditResult:
    """Exchange law on sampled (a, b, C) triples."""
    checked = 0
    violations = 0
    witness = None
    struct = None
    drawn_at = -1
    attempts = 0
    while checked < samples and attempts < 4 * samples + 16:
        attempts += 1
        if struct is None or (fresh_every and checked % fresh_every == 0 and drawn_at != checked):
            struct = source(rng)
            require_geometric(spec, struct)
            drawn_at = checked
        if len(struct.universe) < 2:
            struct = None
            continue
        a, b = rng.sample(list(struct.universe), 2)
        pool = [e for e in struct.universe if e not in (a, b)]
        c = random_subset(rng, pool, k=rng.randrange(min(len(pool), 3) + 1))
        checked += 1
        if not check_exchange(spec, struct, a, b, c):
            violations += 1
            if witness is None:
                witness = f"a={a} b={b} C={_ids(c)} on {_sketch(struct)}"
    return AuditResult("exchange", checked, violations, witness)


def audit_dim_additivity(
    spec: PredimensionSpec,
    source: StructSource,
    rng: random.Random,
    samples: int,
    *,
    fresh_every: int = 10,
) -> AuditResult:
    """dim(XY/C) = dim(X/YC) + dim(Y/C) on sampled triples of subsets."""
    checked = 0
    violations = 0
    witness = None
    struct = None
    for i in range(samples):
        if struct is None or (fresh_every and i % fresh_every == 0):
            struct = source(rng)
            require_geometric(spec, struct)
        univ = struct.universe
        x = set(random_subset(rng, univ, k=rng.randrange(min(len(univ), 3) + 1)))
        y = set(random_subset(rng, univ, k=rng.randrange(min(len(univ), 3) + 1)))
        c = set(random_subset(rng, univ, k=rng.randrange(min(len(univ), 3) + 1)))
        checked += 1
        joint = dim(spec, struct, x | y, c)
        split = dim(spec, struct, x, y | c) + dim(spec, struct, y, c)
        if joint != split:
            violations += 1
            if witness is None:
                witness = (
                    f"X={_ids(x)} Y={_ids(y)} C={_ids(c)} joint={joint} "
                    f"split={split} on {_sketch(struct)}"
                )
    return AuditResult("dim-additivity", checked, violations, witness)
