"""Approximation of the generic structure by scheduled free extensions.

Obligations at level k: for every strong subset A of the current structure
(|A| < k) and every extension class (A, B) with |B| <= k, B in the
nonnegative class, and A strong in B, some strong embedding of B over A must
exist.  The builder walks obligations in lexicographic order of
(|A|, |B|, class code, A), discharges the first unmet one by a free
extension, and stops the moment the first unmet obligation does not fit the
element budget.  That stopping rule makes resume(n) twice identical to
resume(2n).

Satisfaction is monotone under free growth over strong bases (strong sets
stay strong, embeddings survive), so previously satisfied obligations are
cached and never rechecked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterator, Optional

from .canonical import code_over_base
from .extensions import ExtensionClass, enumerate_extensions
from .predimension import PredimensionSpec, SpecError, is_embedding_compatible
from .richness import Pseudoforest, met_fast
from .structures import Embedding, FinStructure, find_embeddings
from .strongsets import alpha_one_profile, in_class, strong_verdict


def _fast_engine(spec: PredimensionSpec, struct: FinStructure) -> Optional[Pseudoforest]:
    if not alpha_one_profile(spec, struct):
        return None
    pf = Pseudoforest(struct)
    return pf if pf.valid else None


class BuilderError(ValueError):
    """Invalid builder input or state."""


@dataclass(frozen=True)
class DischargeRecord:
    step: int
    base: tuple[int, ...]
    code: bytes
    new_elements: tuple[int, ...]


@dataclass(frozen=True)
class BlockedRecord:
    base: tuple[int, ...]
    code: bytes
    needed: int


@dataclass(frozen=True)
class RichnessReport:
    k: int
    total: int
    satisfied: int
    unmet: tuple[tuple[tuple[int, ...], bytes], ...]

    @property
    def fraction(self) -> Fraction:
        if self.total == 0:
            return Fraction(1)
        return Fraction(self.satisfied, self.total)


class GenericApprox:
    """Mutable build state: the structure so far plus scheduling caches."""

    def __init__(
        self,
        spec: PredimensionSpec,
        start: FinStructure,
        k: int,
        allowance: int,
        seed: int = 0,
        annotation_palette: Optional[Callable] = None,
    ):
        if k < 1:
            raise BuilderError("level k must be at least 1")
        if not spec.valid:
            raise BuilderError("builder requires a valid spec")
        if not in_class(spec, start):
            raise BuilderError("start structure is outside the nonnegative class")
        self.spec = spec
        self.k = k
        self.allowance = allowance
        self.seed = seed  # recorded for reports; the schedule is deterministic
        self.annotation_palette = annotation_palette
        self.current = start
        self.history: list[DischargeRecord] = []
        self.blocked: Optional[BlockedRecord] = None
        self._satisfied: set[tuple[tuple[int, ...], bytes]] = set()
        self._class_cache: dict[bytes, list[ExtensionClass]] = {}
        self._strong: list[tuple[int, ...]] = []
        self._pf = _fast_engine(spec, start)
        self._seed_strong()

    def _is_strong(self, combo: tuple[int, ...]) -> bool:
        if self._pf is not None:
            return not combo or self._pf.set_strong(combo)
        return strong_verdict(self.spec, self.current, combo)

    def _seed_strong(self) -> None:
        elems = self.current.universe
        found = []
        for size in range(0, self.k):
            for combo in combinations(elems, size):
                if self._is_strong(combo):
                    found.append(tuple(combo))
        self._strong = sorted(found, key=lambda t: (len(t), t))

    def _note_new_elements(self, new_ids: tuple[int, ...]) -> None:
        # Only subsets meeting the fresh elements can change strength status;
        # everything else keeps its verdict under free growth.
        M = self.current
        newset = set(new_ids)
        old = [e for e in M.universe if e not in newset]
        added = []
        for size in range(1, self.k):
            for j in range(1, min(size, len(new_ids)) + 1):
                for newpart in combinations(sorted(newset), j):
                    for oldpart in combinations(old, size - j):
                        combo = tuple(sorted(newpart + oldpart))
                        if self._is_strong(combo):
                            added.append(combo)
        self._strong = sorted(self._strong + added, key=lambda t: (len(t), t))


def classes_over(
    spec: PredimensionSpec,
    struct: FinStructure,
    base_ids: tuple[int, ...],
    k: int,
    cache: dict[bytes, list[ExtensionClass]],
    annotation_palette: Optional[Callable] = None,
) -> list[ExtensionClass]:
    """Obligation classes over a concrete base, via a per-shape cache."""
    base_struct = struct.restrict(base_ids)
    key = code_over_base(base_struct, base_ids)
    if key not in cache:
        max_new = k - len(base_ids)
        classes = enumerate_extensions(
            spec, base_struct, max_new, annotation_palette=annotation_palette
        )
        cache[key] = [c for c in classes if c.base_strong and c.ext_in_class]
        return cache[key]
    return [c.transport(base_struct) for c in cache[key]]


def obligation_met(
    spec: PredimensionSpec,
    struct: FinStructure,
    base_ids: tuple[int, ...],
    cls: ExtensionClass,
    pf: Optional[Pseudoforest] = None,
) -> bool:
    """Does some strong embedding of the class exist over this base?"""
    if pf is not None:
        return met_fast(pf, struct, base_ids, cls)
    fixed = {a: a for a in base_ids}

    def ok(mapping: dict[int, int]) -> bool:
        if spec.components:
            emb = Embedding(cls.ext, struct, tuple(sorted(mapping.items())))
            if not is_embedding_compatible(spec, emb):
                return False
        return strong_verdict(spec, struct, mapping.values())

    return bool(find_embeddings(cls.ext, struct, fixed=fixed, compat=ok, limit=1))


def _obligations(
    spec: PredimensionSpec,
    struct: FinStructure,
    strong_sets: list[tuple[int, ...]],
    k: int,
    cache: dict[bytes, list[ExtensionClass]],
    annotation_palette: Optional[Callable],
) -> Iterator[tuple[tuple[int, ...], ExtensionClass]]:
    """All obligations in (|A|, |B|, class code, A) order."""
    for asize in range(0, k):
        bases = [A for A in strong_sets if len(A) == asize]
        per_bsize: dict[int, list[tuple[bytes, tuple[int, ...], ExtensionClass]]] = {}
        for A in bases:
            for cls in classes_over(spec, struct, A, k, cache, annotation_palette):
                per_bsize.setdefault(cls.size, []).append((cls.code, A, cls))
        for bsize in sorted(per_bsize):
            for code, A, cls in sorted(per_bsize[bsize], key=lambda t: (t[0], t[1])):
                yield A, cls


def _first_unmet(ga: GenericApprox) -> Optional[tuple[tuple[int, ...], ExtensionClass]]:
    for A, cls in _obligations(
        ga.spec, ga.current, ga._strong, ga.k, ga._class_cache, ga.annotation_palette
    ):
        key = (A, cls.code)
        if key in ga._satisfied:
            continue
        if obligation_met(ga.spec, ga.current, A, cls, pf=ga._pf):
            ga._satisfied.add(key)
            continue
        return A, cls
    return None


def _annotation_shift(
    struct: FinStructure,
    ext: FinStructure,
    base_ids: tuple[int, ...],
    new_elems: tuple[int, ...],
    mapping: dict[int, int],
) -> dict[int, tuple[str, ...]]:
    """Move an extension's fresh annotation coordinates beyond the structure's.

    Extension annotations are relative: coordinates up to the base width refer
    to the base's span, later ones are the extension's own fresh axes.  On
    discharge the fresh block shifts past every coordinate in use, which
    keeps it independent of the whole ambient structure, not just the base.
    """
    if not ext.annotations:
        return {}
    base_width = max((len(ext.annotation(e)) for e in base_ids), default=0)
    ambient_width = max((len(t) for t in struct.annotations.values()), default=0)
    out = {}
    for e in new_elems:
        toks = ext.annotation(e)
        if not toks:
            continue
        head = list(toks[:base_width]) + ["0"] * max(0, base_width - len(toks))
        tail = list(toks[base_width:])
        out[mapping[e]] = tuple(head + ["0"] * (ambient_width - base_width) + tail)
    return out


def free_extend(
    struct: FinStructure,
    ext: FinStructure,
    base_ids: tuple[int, ...],
    targets: Optional[dict[int, int]] = None,
) -> tuple[FinStructure, dict[int, int]]:
    """Free amalgam of `struct` and `ext` over the base, with the extension's
    new elements landing on fresh ids (or on the given targets)."""
    new_elems = tuple(e for e in ext.universe if e not in base_ids)
    mapping = {e: e for e in base_ids}
    if targets is None:
        fresh = max(struct.universe, default=-1) + 1
        for i, e in enumerate(new_elems):
            mapping[e] = fresh + i
    else:
        mapping.update({e: targets[e] for e in new_elems})
    new_ids = tuple(mapping[e] for e in new_elems)
    new_instances: dict[str, list] = {}
    newset = set(new_elems)
    for name in ext.sig.names:
        for t in ext.instances[name]:
            if newset.intersection(t):
                new_instances.setdefault(name, []).append(tuple(mapping[x] for x in t))
    annotations = _annotation_shift(struct, ext, base_ids, new_elems, mapping)
    return struct.extended(new_ids, new_instances, annotations), mapping


def discharge(ga: GenericApprox, base_ids: tuple[int, ...], cls: ExtensionClass) -> tuple[int, ...]:
    """Freely extend the current structure by the class over the base."""
    M = ga.current
    extended, mapping = free_extend(M, cls.ext, base_ids)
    new_ids = tuple(mapping[e] for e in cls.new_elements)
    ga.current = extended
    ga.history.append(DischargeRecord(len(ga.history), base_ids, cls.code, new_ids))
    ga._satisfied.add((base_ids, cls.code))
    if ga._pf is not None:
        ga._pf = _fast_engine(ga.spec, ga.current)
    ga._note_new_elements(new_ids)
    return new_ids


def _run(ga: GenericApprox) -> None:
    ga.blocked = None
    while True:
        nxt = _first_unmet(ga)
        if nxt is None:
            return
        A, cls = nxt
        need = len(cls.new_elements)
        if ga.current.n + need > ga.allowance:
            ga.blocked = BlockedRecord(A, cls.code, need)
            return
        discharge(ga, A, cls)


def build_generic(
    spec: PredimensionSpec,
    start: FinStructure,
    k: int,
    budget: int,
    seed: int = 0,
    annotation_palette: Optional[Callable] = None,
) -> GenericApprox:
    """Grow `start` by free extensions until every obligation at level k is
    met or the next discharge would push past `budget` elements."""
    ga = GenericApprox(spec, start, k, budget, seed, annotation_palette)
    _run(ga)
    return ga


def resume(ga: GenericApprox, extra_budget: int) -> GenericApprox:
    """Raise the element allowance and continue the same schedule."""
    if extra_budget < 0:
        raise BuilderError("extra budget must be nonnegative")
    ga.allowance += extra_budget
    _run(ga)
    return ga


def audit_richness(
    spec: PredimensionSpec,
    struct: FinStructure,
    k: int,
    annotation_palette: Optional[Callable] = None,
) -> RichnessReport:
    """Count satisfied obligations at level k on a fixed structure."""
    if not spec.valid:
        raise BuilderError("audit requires a valid spec")
    pf = _fast_engine(spec, struct)
    strong_sets = []
    for size in range(0, k):
        for combo in combinations(struct.universe, size):
            if pf is not None:
                hit = not combo or pf.set_strong(combo)
            else:
                hit = strong_verdict(spec, struct, combo)
            if hit:
                strong_sets.append(tuple(combo))
    strong_sets.sort(key=lambda t: (len(t), t))
    cache: dict[bytes, list[ExtensionClass]] = {}
    total = 0
    satisfied = 0
    unmet = []
    for A, cls in _obligations(spec, struct, strong_sets, k, cache, annotation_palette):
        total += 1
        if obligation_met(spec, struct, A, cls, pf=pf):
            satisfied += 1
        else:
            unmet.append((A, cls.code))
    return RichnessReport(k=k, total=total, satisfied=satisfied, unmet=tuple(unmet))
