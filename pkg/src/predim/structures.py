"""Finite relational structures: signatures, instances, annotations, embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence


class StructureError(ValueError):
    """Malformed signature, structure, instance, or embedding."""


@dataclass(frozen=True)
class Signature:
    """A finite relational signature.

    `symbols` lists (name, arity) pairs.  `weights` optionally assigns a
    positive rational weight to a symbol; unlisted symbols weigh 1.  `ordered`
    selects tuple semantics for the whole signature: unordered instances are
    sets of pairwise distinct elements, ordered instances are raw tuples and
    may repeat elements.
    """

    symbols: tuple[tuple[str, int], ...] = ()
    weights: tuple[tuple[str, Fraction], ...] = ()
    ordered: bool = False

    def __post_init__(self):
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            raise StructureError("duplicate relation symbol name")
        for name, arity in self.symbols:
            if not name or any(ch.isspace() for ch in name):
                raise StructureError(f"bad relation symbol name: {name!r}")
            if arity < 1:
                raise StructureError(f"relation {name} must have positive arity")
        seen = set()
        for name, weight in self.weights:
            if name not in dict(self.symbols):
                raise StructureError(f"weight given for unknown symbol {name}")
            if name in seen:
                raise StructureError(f"duplicate weight for symbol {name}")
            seen.add(name)
            if not isinstance(weight, Fraction) or weight <= 0:
                raise StructureError(f"weight of {name} must be a positive Fraction")
        # weight 1 is the default; drop explicit entries so equal signatures
        # compare equal no matter how they were written down
        if any(w == 1 for _, w in self.weights):
            object.__setattr__(
                self, "weights", tuple((n, w) for n, w in self.weights if w != 1)
            )

    def arity(self, name: str) -> int:
        for sym, arity in self.symbols:
            if sym == name:
                return arity
        raise StructureError(f"unknown relation symbol {name}")

    def weight(self, name: str) -> Fraction:
        for sym, weight in self.weights:
            if sym == name:
                return weight
        self.arity(name)  # raises on unknown symbol
        return Fraction(1)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)


def _normalize_instance(sig: Signature, name: str, elems: Sequence[int]) -> tuple[int, ...]:
    arity = sig.arity(name)
    tup = tuple(int(e) for e in elems)
    if len(tup) != arity:
        raise StructureError(f"instance of {name} has {len(tup)} elements, arity is {arity}")
    if sig.ordered:
        return tup
    if len(set(tup)) != arity:
        raise StructureError(f"unordered instance of {name} repeats an element: {tup}")
    return tuple(sorted(tup))


class FinStructure:
    """A finite structure over a fixed relational signature.

    Elements are integers.  Instances are kept in normal form (sorted tuples
    of distinct elements under unordered semantics, raw tuples under ordered
    semantics).  An annotation attaches an ordered tuple of string tokens to
    an element; matroid rank oracles interpret the tokens, the relational
    part ignores them.
    """

    __slots__ = ("sig", "universe", "instances", "annotations", "_uset", "_codes")

    def __init__(
        self,
        sig: Signature,
        universe: Iterable[int] = (),
        instances: Optional[Mapping[str, Iterable[Sequence[int]]]] = None,
        annotations: Optional[Mapping[int, Sequence[str]]] = None,
    ):
        uni = [int(e) for e in universe]
        uset = set(uni)
        if len(uset) != len(uni):
            raise StructureError("duplicate element in universe")
        self.sig = sig
        self.universe: tuple[int, ...] = tuple(sorted(uset))
        self._uset = frozenset(uset)
        inst: dict[str, frozenset[tuple[int, ...]]] = {name: frozenset() for name in sig.names}
        for name, tuples in (instances or {}).items():
            if name not in inst:
                raise StructureError(f"instances given for unknown symbol {name}")
            normed = frozenset(_normalize_instance(sig, name, t) for t in tuples)
            for t in normed:
                missing = set(t) - uset
                if missing:
                    raise StructureError(f"instance {t} of {name} uses non-elements {sorted(missing)}")
            inst[name] = normed
        self.instances = inst
        ann: dict[int, tuple[str, ...]] = {}
        for elem, tokens in (annotations or {}).items():
            e = int(elem)
            if e not in uset:
                raise StructureError(f"annotation on non-element {e}")
            toks = tuple(str(t) for t in tokens)
            if not toks:
                raise StructureError(f"empty annotation on element {e}")
            for tok in toks:
                if not tok or any(ch.isspace() for ch in tok):
                    raise StructureError(f"bad annotation token {tok!r} on element {e}")
            ann[e] = toks
        self.annotations = ann
        self._codes: dict = {}

    # -- basic views ------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.universe)

    def __contains__(self, elem: int) -> bool:
        return elem in self._uset

    def __len__(self) -> int:
        return len(self.universe)

    def count(self, name: str) -> int:
        return len(self.instances[name])

    def sorted_instances(self, name: str) -> list[tuple[int, ...]]:
        return sorted(self.instances[name])

    def all_instances(self) -> Iterator[tuple[str, tuple[int, ...]]]:
        for name in self.sig.names:
            for t in sorted(self.instances[name]):
                yield name, t

    def annotation(self, elem: int) -> tuple[str, ...]:
        return self.annotations.get(elem, ())

    def _key(self):
        return (
            self.sig,
            self.universe,
            tuple((name, self.instances[name]) for name in self.sig.names),
            tuple(sorted(self.annotations.items())),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinStructure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        counts = ", ".join(f"{name}:{len(self.instances[name])}" for name in self.sig.names)
        return f"FinStructure(n={self.n}, {counts})"

    # -- derived structures -----------------------------------------------

    def restrict(self, subset: Iterable[int]) -> "FinStructure":
        """Induced substructure on `subset` (must consist of elements)."""
        sub = set(int(e) for e in subset)
        stray = sub - self._uset
        if stray:
            raise StructureError(f"restrict to non-elements {sorted(stray)}")
        inst = {
            name: [t for t in tuples if sub.issuperset(t)]
            for name, tuples in self.instances.items()
        }
        ann = {e: toks for e, toks in self.annotations.items() if e in sub}
        return FinStructure(self.sig, sub, inst, ann)

    def relabel(self, mapping: Mapping[int, int]) -> "FinStructure":
        """Rename elements by an injective map defined on the whole universe."""
        if set(mapping) != set(self.universe):
            raise StructureError("relabel map must be defined exactly on the universe")
        if len(set(mapping.values())) != len(mapping):
            raise StructureError("relabel map must be injective")
        inst = {
            name: [tuple(mapping[e] for e in t) for t in tuples]
            for name, tuples in self.instances.items()
        }
        ann = {mapping[e]: toks for e, toks in self.annotations.items()}
        return FinStructure(self.sig, mapping.values(), inst, ann)

    def extended(
        self,
        new_elements: Iterable[int] = (),
        new_instances: Optional[Mapping[str, Iterable[Sequence[int]]]] = None,
        new_annotations: Optional[Mapping[int, Sequence[str]]] = None,
    ) -> "FinStructure":
        """Copy with extra elements, instances, and annotations added."""
        new_elems = [int(e) for e in new_elements]
        clash = set(new_elems) & self._uset
        if clash:
            raise StructureError(f"extension reuses existing elements {sorted(clash)}")
        inst: dict[str, list] = {name: list(tuples) for name, tuples in self.instances.items()}
        for name, tuples in (new_instances or {}).items():
            inst.setdefault(name, []).extend(tuples)
        ann = dict(self.annotations)
        for e, toks in (new_annotations or {}).items():
            if int(e) in ann and tuple(toks) != ann[int(e)]:
                raise StructureError(f"conflicting annotation for element {e}")
            ann[int(e)] = toks
        return FinStructure(self.sig, list(self.universe) + new_elems, inst, ann)

    def instances_meeting(self, subset: Iterable[int]) -> Iterator[tuple[str, tuple[int, ...]]]:
        """Instances with at least one element in `subset`."""
        sub = set(subset)
        for name, t in self.all_instances():
            if sub.intersection(t):
                yield name, t

    def adjacency(self) -> dict[int, set[int]]:
        """Element co-occurrence graph over all instances."""
        adj: dict[int, set[int]] = {e: set() for e in self.universe}
        for _, t in self.all_instances():
            uniq = set(t)
            for a in uniq:
                adj[a].update(uniq - {a})
        return adj


@dataclass(frozen=True)
class Embedding:
    """An induced embedding between structures over the same signature.

    Induced means instance preservation in both directions: the image of the
    source is a substructure of the target isomorphic to the source via the
    map.  Annotation agreement is not part of this notion; rank oracles apply
    their own compatibility check on top.
    """

    source: FinStructure
    target: FinStructure
    pairs: tuple[tuple[int, int], ...]

    @staticmethod
    def make(source: FinStructure, target: FinStructure, mapping: Mapping[int, int]) -> "Embedding":
        emb = Embedding(source, target, tuple(sorted((int(a), int(b)) for a, b in mapping.items())))
        emb.validate()
        return emb

    @property
    def mapping(self) -> dict[int, int]:
        return dict(self.pairs)

    def __getitem__(self, elem: int) -> int:
        for a, b in self.pairs:
            if a == elem:
                return b
        raise KeyError(elem)

    @property
    def image(self) -> frozenset[int]:
        return frozenset(b for _, b in self.pairs)

    def apply(self, t: Sequence[int]) -> tuple[int, ...]:
        m = self.mapping
        out = tuple(m[e] for e in t)
        return out if self.source.sig.ordered else tuple(sorted(out))

    def validate(self) -> None:
        if self.source.sig != self.target.sig:
            raise StructureError("embedding across different signatures")
        m = self.mapping
        if set(m) != set(self.source.universe):
            raise StructureError("embedding must be defined exactly on the source universe")
        if len(set(m.values())) != len(m):
            raise StructureError("embedding must be injective")
        if not set(m.values()).issubset(self.target._uset):
            raise StructureError("embedding hits non-elements of the target")
        image = set(m.values())
        for name in self.source.sig.names:
            mapped = {self.apply(t) for t in self.source.instances[name]}
            present = {t for t in self.target.instances[name] if image.issuperset(t)}
            if mapped - present:
                raise StructureError(f"embedding loses an instance of {name}")
            if present - mapped:
                raise StructureError(f"embedding image has an extra instance of {name}")

    def compose(self, outer: "Embedding") -> "Embedding":
        if outer.source is not self.target and outer.source != self.target:
            raise StructureError("composition mismatch")
        om = outer.mapping
        return Embedding.make(self.source, outer.target, {a: om[b] for a, b in self.pairs})


def identity_embedding(struct: FinStructure, sub: Iterable[int]) -> Embedding:
    """Inclusion of an induced substructure into its parent."""
    part = struct.restrict(sub)
    return Embedding.make(part, struct, {e: e for e in part.universe})


def find_embeddings(
    source: FinStructure,
    target: FinStructure,
    *,
    fixed: Optional[Mapping[int, int]] = None,
    avoid: Iterable[int] = (),
    compat: Optional[Callable[[dict[int, int]], bool]] = None,
    limit: Optional[int] = None,
) -> list[dict[int, int]]:
    """All induced embeddings of `source` into `target`, in a fixed order.

    `fixed` pins part of the map (typically a common base, pointwise).  Free
    source elements are assigned in sorted order; target candidates are tried
    in sorted order, so the result list order is deterministic.  `avoid`
    excludes target elements from free assignments.  `compat` filters
    completed maps (rank-oracle compatibility goes here).  `limit` stops the
    search once that many embeddings are found.
    """
    if source.sig != target.sig:
        raise StructureError("embedding search across different signatures")
    fixed = {int(a): int(b) for a, b in (fixed or {}).items()}
    for a, b in fixed.items():
        if a not in source._uset:
            raise StructureError(f"fixed point {a} is not a source element")
        if b not in target._uset:
            raise StructureError(f"fixed image {b} is not a target element")
    if len(set(fixed.values())) != len(fixed):
        raise StructureError("fixed part of embedding is not injective")
    avoid_set = set(avoid)

    free = [e for e in source.universe if e not in fixed]
    # Instances indexed by the latest free element they involve, so each
    # assignment step checks exactly the constraints it completes.
    order_pos = {e: i for i, e in enumerate(free)}
    by_step: list[list[tuple[str, tuple[int, ...]]]] = [[] for _ in free]
    base_only: list[tuple[str, tuple[int, ...]]] = []
    for name, t in source.all_instances():
        steps = [order_pos[e] for e in set(t) if e in order_pos]
        if steps:
            by_step[max(steps)].append((name, t))
        else:
            base_only.append((name, t))

    tinst = {name: target.instances[name] for name in target.sig.names}
    for name, t in base_only:
        mapped = tuple(fixed[e] for e in t)
        if not source.sig.ordered:
            mapped = tuple(sorted(mapped))
        if mapped not in tinst[name]:
            return []

    results: list[dict[int, int]] = []
    assignment = dict(fixed)
    used = set(fixed.values())

    target_adj = target.adjacency()
    by_target_elem: dict[int, list[tuple[str, tuple[int, ...]]]] = {e: [] for e in target.universe}
    for name, t in target.all_instances():
        for e in set(t):
            by_target_elem[e].append((name, t))

    def pulls_back(name: str, t: tuple[int, ...], inv: dict[int, int]) -> bool:
        back = tuple(inv[e] for e in t)
        if not source.sig.ordered:
            back = tuple(sorted(back))
        return back in source.instances[name]

    # Target instances fully inside the fixed image must already pull back.
    if fixed:
        inv0 = {b: a for a, b in fixed.items()}
        for b in sorted(set(fixed.values())):
            for name, t in by_target_elem[b]:
                if used.issuperset(t) and max(t) == b and not pulls_back(name, t, inv0):
                    return []

    def reflected_ok(new_target_elem: int) -> bool:
        # Every target instance lying inside the current image and touching
        # the new element must pull back to a source instance.
        inv = {b: a for a, b in assignment.items()}
        for name, t in by_target_elem[new_target_elem]:
            if used.issuperset(t) and not pulls_back(name, t, inv):
                return False
        return True

    def candidates(step: int) -> list[int]:
        # If the source element touches an already-assigned one through an
        # instance, restrict to co-occurrence neighbours of its image.
        e = free[step]
        anchors = set()
        for name, t in by_step[step]:
            for x in t:
                if x != e and x in assignment:
                    anchors.add(assignment[x])
        if anchors:
            pool = set.intersection(*(target_adj[a] | {a} for a in anchors))
            return sorted(pool)
        return list(target.universe)

    def forward_ok(step: int) -> bool:
        for name, t in by_step[step]:
            if not all(e in assignment for e in t):
                continue
            mapped = tuple(assignment[e] for e in t)
            if not source.sig.ordered:
                mapped = tuple(sorted(mapped))
            if mapped not in tinst[name]:
                return False
        return True

    def rec(step: int) -> bool:
        if step == len(free):
            final = dict(assignment)
            if compat is None or compat(final):
                results.append(final)
                if limit is not None and len(results) >= limit:
                    return True
            return False
        e = free[step]
        for cand in candidates(step):
            if cand in used or cand in avoid_set:
                continue
            assignment[e] = cand
            used.add(cand)
            if forward_ok(step) and reflected_ok(cand):
                if rec(step + 1):
                    return True
            used.discard(cand)
            del assignment[e]
        return False

    rec(0)
    return results
