"""Extension classes: the ways a base can grow by a few elements, up to
isomorphism fixing the base pointwise.

A class records its representative structure, the relative predimension of
the extension, and the tags every consumer filters on (base strong in the
extension, extension in the nonnegative class, minimal, zero relative
predimension).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Optional, Sequence

from .canonical import code_over_base, pair_code
from .predimension import PredimensionSpec, SpecError, delta, is_embedding_compatible
from .structures import Embedding, FinStructure, StructureError, find_embeddings
from .strongsets import in_class, strong_verdict


@dataclass(frozen=True)
class ExtensionClass:
    """One isomorphism class of extensions of a fixed base."""

    base: FinStructure
    ext: FinStructure
    new_elements: tuple[int, ...]
    delta_over_base: Fraction
    base_strong: bool
    ext_in_class: bool
    minimal: bool
    prealgebraic: bool
    code: bytes
    pair: bytes

    @property
    def size(self) -> int:
        return self.ext.n

    def transport(self, concrete_base: FinStructure) -> "ExtensionClass":
        """The same class over an isomorphic concrete base.

        The concrete base must have the same pointed code (elements matched
        in sorted order), which keeps every tag and both codes valid; only
        ids change.  New elements are renumbered above the base's ids.
        """
        old = self.base.universe
        new = concrete_base.universe
        if len(old) != len(new):
            raise StructureError("transport to a base of different size")
        mapping = dict(zip(old, new))
        start = max(new, default=-1) + 1
        for i, e in enumerate(self.new_elements):
            mapping[e] = start + i
        ext = self.ext.relabel(mapping)
        return replace(
            self,
            base=concrete_base,
            ext=ext,
            new_elements=tuple(mapping[e] for e in self.new_elements),
        )


def _candidate_instances(sig, elems: Sequence[int], new: Sequence[int]):
    """All possible instances touching at least one new element."""
    newset = set(new)
    out = []
    for name, arity in sig.symbols:
        if sig.ordered:
            cands = product(elems, repeat=arity)
        else:
            cands = combinations(sorted(elems), arity)
        for t in cands:
            if newset.intersection(t):
                out.append((name, t))
    return out


def linear_extension_palette(prime: int) -> Callable:
    """Annotation options for new elements over an annotated base.

    Each new element may carry a fresh coordinate axis of its own, a copy of
    a base element's vector, or the zero vector.  Fresh axes sit beyond every
    base coordinate and are numbered by the new element's position, which
    keeps codes stable across enumerations.
    """

    def palette(base: FinStructure, new_elems: Sequence[int]) -> list[dict[int, tuple[str, ...]]]:
        width = max((len(t) for t in base.annotations.values()), default=0)
        total = width + len(new_elems)

        def pad(vals: Sequence[int]) -> tuple[str, ...]:
            vec = list(vals) + [0] * (total - len(vals))
            return tuple(str(v % prime) for v in vec)

        base_vectors = []
        seen = set()
        for e in sorted(base.universe):
            toks = base.annotation(e)
            vec = pad([int(t) for t in toks] if toks else [])
            if vec not in seen:
                seen.add(vec)
                base_vectors.append(vec)
        options_per_elem = []
        for i, e in enumerate(new_elems):
            fresh = [0] * (width + i) + [1]
            opts = [pad(fresh)]
            opts.extend(base_vectors)
            zero = pad([])
            if zero not in opts:
                opts.append(zero)
            options_per_elem.append(opts)
        out = []
        for combo in product(*options_per_elem):
            out.append({e: v for e, v in zip(new_elems, combo)})
        return out

    return palette


def _profile(
    ext: FinStructure,
    base_ids: frozenset[int],
    new: Sequence[int],
    with_annotations: bool,
):
    """Cheap invariant of the over-base isomorphism class (sound, not complete)."""
    base_pos = {e: i for i, e in enumerate(sorted(base_ids))}
    ordered = ext.sig.ordered
    inst_keys = []
    per_new: dict[int, list] = {e: [] for e in new}
    for name in ext.sig.names:
        for t in ext.instances[name]:
            if base_ids.issuperset(t):
                continue
            if ordered:
                shape = tuple(base_pos.get(x, -1) for x in t)
            else:
                shape = tuple(sorted(base_pos.get(x, -1) for x in t))
            inst_keys.append((name, shape))
            for x in set(t):
                if x in per_new:
                    if ordered:
                        occ = tuple(i for i, y in enumerate(t) if y == x)
                        per_new[x].append((name, shape, occ))
                    else:
                        per_new[x].append((name, shape))
    profiles = []
    for e in new:
        prof = tuple(sorted(per_new[e]))
        if with_annotations:
            profiles.append((prof, ext.annotation(e)))
        else:
            profiles.append((prof, ()))
    return (tuple(sorted(inst_keys)), tuple(sorted(profiles)))


def enumerate_extensions(
    spec: PredimensionSpec,
    base: FinStructure,
    max_new: int,
    *,
    exact_new: Optional[int] = None,
    annotation_palette: Optional[Callable] = None,
    max_candidates: int = 22,
) -> list[ExtensionClass]:
    """All extension classes of `base` by 1..max_new fresh elements.

    Deterministic: classes come out sorted by (number of new elements, code).
    Deduplication is up to isomorphism fixing the base pointwise; when the
    spec carries matroid components, rank-pattern-preserving isomorphisms
    count too, so annotation variants with the same rank behaviour collapse
    into one class.
    """
    sizes = [exact_new] if exact_new is not None else list(range(1, max_new + 1))
    out: list[ExtensionClass] = []
    start = max(base.universe, default=-1) + 1
    base_ids = frozenset(base.universe)
    want_verbatim = not spec.components
    for m in sizes:
        if m < 1:
            raise SpecError("extensions need at least one new element")
        new = tuple(range(start, start + m))
        cands = _candidate_instances(base.sig, list(base.universe) + list(new), new)
        if len(cands) > max_candidates:
            raise SpecError(
                f"extension enumeration refused: {len(cands)} candidate instances > {max_candidates}"
            )
        ann_options: list[dict] = [{}]
        if annotation_palette is not None:
            ann_options = annotation_palette(base, new)
        buckets: dict[tuple, list[FinStructure]] = {}
        reps: list[FinStructure] = []
        for mask in range(1 << len(cands)):
            chosen: dict[str, list] = {}
            for i, (name, t) in enumerate(cands):
                if mask >> i & 1:
                    chosen.setdefault(name, []).append(t)
            for ann in ann_options:
                ext = base.extended(new, chosen, ann)
                key = _profile(ext, base_ids, new, want_verbatim)
                bucket = buckets.setdefault(key, [])
                if any(_same_class(spec, ext, other, base_ids) for other in bucket):
                    continue
                bucket.append(ext)
                reps.append(ext)
        kept = [
            _classify(spec, base, ext, new, code_over_base(ext, base.universe))
            for ext in reps
        ]
        out.extend(sorted(kept, key=lambda c: c.code))
    return out


def _same_class(
    spec: PredimensionSpec,
    ext: FinStructure,
    other: FinStructure,
    base_ids: frozenset[int],
) -> bool:
    """Base-fixing induced isomorphism, with rank compatibility when matroid
    components are present and verbatim annotations otherwise."""
    fixed = {e: e for e in base_ids}

    def compat(mapping: dict[int, int]) -> bool:
        if spec.components:
            return is_embedding_compatible(spec, Embedding.make(ext, other, mapping))
        return all(ext.annotation(a) == other.annotation(b) for a, b in mapping.items())

    return bool(find_embeddings(ext, other, fixed=fixed, compat=compat, limit=1))


def classify_extension(
    spec: PredimensionSpec,
    ext: FinStructure,
    base_ids: Sequence[int],
) -> ExtensionClass:
    """Tag a concrete base/extension pair as an extension class."""
    ids = frozenset(int(e) for e in base_ids)
    if not ids.issubset(ext.universe):
        raise StructureError("base ids must be elements of the extension")
    new = tuple(e for e in ext.universe if e not in ids)
    if not new:
        raise StructureError("the extension adds no elements over the base")
    base = ext.restrict(ids)
    return _classify(spec, base, ext, new, code_over_base(ext, ids))


def _classify(
    spec: PredimensionSpec,
    base: FinStructure,
    ext: FinStructure,
    new: tuple[int, ...],
    code: bytes,
) -> ExtensionClass:
    d = delta(spec, ext) - delta(spec, ext, base.universe)
    base_strong = strong_verdict(spec, ext, base.universe)
    cls_member = in_class(spec, ext)
    minimal = base_strong
    if minimal:
        base_elems = frozenset(base.universe)
        d_ext = delta(spec, ext)
        for r in range(1, len(new)):
            for mid in combinations(new, r):
                if d_ext - delta(spec, ext, base_elems | set(mid)) >= 0:
                    minimal = False
                    break
            if not minimal:
                break
    return ExtensionClass(
        base=base,
        ext=ext,
        new_elements=new,
        delta_over_base=d,
        base_strong=base_strong,
        ext_in_class=cls_member,
        minimal=minimal,
        prealgebraic=(d == 0),
        code=code,
        pair=pair_code(ext, base.universe),
    )
