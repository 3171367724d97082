"""Bounded-multiplicity building: mu bookkeeping, independent-copy counting,
and the collapsed builder.

A mu function assigns each bi-minimal prealgebraic extension class a cap on
how many independent strong copies of it a structure may carry.  Structures
respecting every cap form the bounded class; the collapsed builder keeps its
output inside it by going through a free-or-embed dichotomy instead of plain
free extension: a step is amalgamated freely only when the result stays
within the caps, otherwise the step must embed onto existing elements, and
the build fails loudly when it cannot.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Optional

from .builder import (
    BlockedRecord,
    DischargeRecord,
    GenericApprox,
    _fast_engine,
    _first_unmet,
    free_extend,
)
from .canonical import code_over_base
from .extensions import ExtensionClass, enumerate_extensions
from .predimension import PredimensionSpec, delta, is_embedding_compatible
from .structures import Embedding, FinStructure, find_embeddings
from .strongsets import in_class, strong_verdict


class MuError(ValueError):
    """Invalid mu function or mu-check input."""


class BiminimalError(ValueError):
    """No or ambiguous least sub-base for a prealgebraic extension."""


class ThriftyError(RuntimeError):
    """A collapsed build step can neither amalgamate freely nor embed."""


# default-value formulas: (new part size, total relation weight) -> value
def _linear(params: tuple[int, ...], m: int, weight: Fraction) -> int:
    a, b = params
    return a + b * m


def _weighted(params: tuple[int, ...], m: int, weight: Fraction) -> int:
    a, b, c = params
    return a + b * m + c * int(weight)


MU_FORMULAS: dict[str, tuple[int, Callable]] = {
    "linear": (2, _linear),
    "weighted": (3, _weighted),
}


@dataclass(frozen=True)
class MuFunction:
    """Copy caps per extension-class code, with a formula for absent codes.

    Values must stay at least 1: a zero cap would empty the bounded class.
    The default formula takes the number of new elements and the extension's
    total relation weight; the shipped default grows linearly in the former.
    """

    table: tuple[tuple[bytes, int], ...] = ()
    formula: str = "linear"
    params: tuple[int, ...] = (8, 4)

    def __post_init__(self):
        if self.formula not in MU_FORMULAS:
            raise MuError(f"unknown mu formula {self.formula!r}")
        arity, fn = MU_FORMULAS[self.formula]
        if len(self.params) != arity:
            raise MuError(f"formula {self.formula!r} takes {arity} parameters")
        if any(p < 0 for p in self.params) or fn(self.params, 1, Fraction(0)) < 1:
            raise MuError("mu values must stay at least 1")
        seen = set()
        for code, value in self.table:
            if value < 1:
                raise MuError("mu values must stay at least 1")
            if code in seen:
                raise MuError("duplicate code in mu table")
            seen.add(code)

    @staticmethod
    def from_dict(table: dict[bytes, int], formula: str = "linear",
                  params: tuple[int, ...] = (8, 4)) -> "MuFunction":
        return MuFunction(tuple(sorted(table.items())), formula, params)

    def lookup(self, code: bytes) -> Optional[int]:
        for c, v in self.table:
            if c == code:
                return v
        return None

    def value(self, cls: ExtensionClass) -> int:
        hit = self.lookup(cls.code)
        if hit is not None:
            return hit
        weight = Fraction(0)
        newset = set(cls.new_elements)
        for name in cls.ext.sig.names:
            w = cls.ext.sig.weight(name)
            for t in cls.ext.instances[name]:
                if newset.intersection(t):
                    weight += w
        return MU_FORMULAS[self.formula][1](self.params, len(cls.new_elements), weight)


DEFAULT_MU = MuFunction()


def _minimal_prealgebraic_over(
    spec: PredimensionSpec, ext: FinStructure, base: tuple[int, ...], new: tuple[int, ...]
) -> bool:
    """Is the new part prealgebraic and minimal over this sub-base, inside the
    induced structure on their union?"""
    union = sorted(set(base) | set(new))
    sub = ext.restrict(union)
    d_all = delta(spec, sub)
    if d_all - delta(spec, sub, base) != 0:
        return False
    if not strong_verdict(spec, sub, base):
        return False
    for r in range(1, len(new)):
        for mid in combinations(sorted(new), r):
            if d_all - delta(spec, sub, set(base) | set(mid)) >= 0:
                return False
    return True


def biminimal_base(
    spec: PredimensionSpec,
    ext: FinStructure,
    base_ids: Iterable[int],
    new_ids: Optional[Iterable[int]] = None,
) -> tuple[int, ...]:
    """The least strong sub-base over which the new part is minimal
    prealgebraic.  Unique for valid specs; ambiguity raises."""
    base = tuple(sorted(base_ids))
    if new_ids is None:
        new = tuple(e for e in ext.universe if e not in set(base))
    else:
        new = tuple(sorted(new_ids))
    base_struct = ext.restrict(base)
    qualifying = []
    for r in range(0, len(base) + 1):
        for sub in combinations(base, r):
            if not strong_verdict(spec, base_struct, sub):
                continue
            if _minimal_prealgebraic_over(spec, ext, sub, new):
                qualifying.append(frozenset(sub))
    if not qualifying:
        raise BiminimalError(
            "no strong sub-base admits the new part as a minimal prealgebraic extension"
        )
    least = [s for s in qualifying if not any(t < s for t in qualifying)]
    if len(least) > 1:
        raise BiminimalError(
            f"ambiguous least sub-base: {sorted(tuple(sorted(s)) for s in least)}"
        )
    return tuple(sorted(least[0]))


def enumerate_minimal_extensions(
    spec: PredimensionSpec,
    base: FinStructure,
    max_new: int,
    *,
    annotation_palette: Optional[Callable] = None,
    require_biminimal: bool = True,
) -> list[ExtensionClass]:
    """Minimal prealgebraic extension classes of the base; by default only
    those whose least sub-base is the whole base."""
    out = []
    for cls in enumerate_extensions(
        spec, base, max_new, annotation_palette=annotation_palette
    ):
        if not (cls.base_strong and cls.ext_in_class and cls.prealgebraic and cls.minimal):
            continue
        if require_biminimal:
            if biminimal_base(spec, cls.ext, base.universe, cls.new_elements) != base.universe:
                continue
        out.append(cls)
    return out


def count_independent_copies(
    spec: PredimensionSpec,
    struct: FinStructure,
    base_ids: Iterable[int],
    cls: ExtensionClass,
    cap: Optional[int] = None,
) -> int:
    """Largest family of copies of the class over the base whose new parts
    are pairwise disjoint and meet no common instance.

    A copy is an induced embedding fixing the base pointwise; over a strong
    base a prealgebraic copy is automatically strong.  Exact clique search;
    `cap` allows an early exit once the count provably exceeds it.
    """
    base = tuple(sorted(base_ids))
    base_struct = struct.restrict(base)
    if code_over_base(base_struct, base) != code_over_base(cls.base, cls.base.universe):
        raise MuError("base does not match the class's base shape")
    if cls.base.universe != base:
        cls = cls.transport(base_struct)
    fixed = {a: a for a in base}

    def compat(mapping: dict[int, int]) -> bool:
        if spec.components:
            emb = Embedding(cls.ext, struct, tuple(sorted(mapping.items())))
            return is_embedding_compatible(spec, emb)
        return True

    hits = find_embeddings(cls.ext, struct, fixed=fixed, compat=compat)
    images = sorted(
        {frozenset(m[e] for e in cls.new_elements) for m in hits},
        key=lambda s: tuple(sorted(s)),
    )
    if not images:
        return 0
    # pairwise independence: disjoint new parts, no instance meets two of them
    n = len(images)
    ok = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if images[i] & images[j]:
                continue
            joined = True
            for name in struct.sig.names:
                for t in struct.instances[name]:
                    ts = set(t)
                    if ts & images[i] and ts & images[j]:
                        joined = False
                        break
                if not joined:
                    break
            ok[i][j] = ok[j][i] = joined
    best = 0

    def grow(chosen: int, cand: list[int]) -> None:
        nonlocal best
        if chosen > best:
            best = chosen
        if cap is not None and best > cap:
            return
        for idx, i in enumerate(cand):
            if chosen + len(cand) - idx <= best:
                return
            grow(chosen + 1, [j for j in cand[idx + 1:] if ok[i][j]])
            if cap is not None and best > cap:
                return

    grow(0, list(range(n)))
    return best


@dataclass(frozen=True)
class MuReport:
    ok: bool
    violations: tuple[tuple[tuple[int, ...], bytes, int, int], ...]


def _ball(struct: FinStructure, seeds: Iterable[int], radius: int) -> set[int]:
    out = set(seeds)
    frontier = set(seeds)
    for _ in range(radius):
        nxt = set()
        for name in struct.sig.names:
            for t in struct.instances[name]:
                ts = set(t)
                if ts & frontier:
                    nxt |= ts
        nxt -= out
        if not nxt:
            break
        out |= nxt
        frontier = nxt
    return out


def mu_violations(
    spec: PredimensionSpec,
    mu: MuFunction,
    struct: FinStructure,
    bound: int,
    *,
    around: Optional[Iterable[int]] = None,
    annotation_palette: Optional[Callable] = None,
    class_cache: Optional[dict] = None,
) -> tuple[tuple[tuple[int, ...], bytes, int, int], ...]:
    """Copy-cap violations over all strong bases and bi-minimal prealgebraic
    classes up to the size bound.

    With `around`, only bases that could see a changed count are rechecked:
    a copy is instance-connected to its base, so any new copy's base meets
    the given elements' adjacency ball of radius `bound` (the empty base is
    always rechecked).  Exact for relational specs; matroid components force
    the full scan.
    """
    if not in_class(spec, struct):
        raise MuError("structure outside the nonnegative class")
    pf = _fast_engine(spec, struct)
    allowed: Optional[set[int]] = None
    if around is not None and not spec.components:
        allowed = _ball(struct, around, bound)
    cache = class_cache if class_cache is not None else {}
    violations = []
    for size in range(0, bound):
        for base in combinations(struct.universe, size):
            if allowed is not None and base and not allowed.intersection(base):
                continue
            if pf is not None:
                if base and not pf.set_strong(base):
                    continue
            elif not strong_verdict(spec, struct, base):
                continue
            base_struct = struct.restrict(base)
            key = (code_over_base(base_struct, base), bound - size)
            if key not in cache:
                cache[key] = enumerate_minimal_extensions(
                    spec, base_struct, bound - size,
                    annotation_palette=annotation_palette,
                )
                classes = cache[key]
            else:
                classes = [c.transport(base_struct) for c in cache[key]]
            for cls in classes:
                limit = mu.value(cls)
                count = count_independent_copies(spec, struct, base, cls)
                if count > limit:
                    violations.append((base, cls.code, count, limit))
    return tuple(violations)


def in_class_mu(
    spec: PredimensionSpec,
    mu: MuFunction,
    struct: FinStructure,
    bound: int,
    *,
    annotation_palette: Optional[Callable] = None,
) -> MuReport:
    """Does the structure respect every copy cap at this size bound?"""
    v = mu_violations(
        spec, mu, struct, bound, annotation_palette=annotation_palette
    )
    return MuReport(ok=not v, violations=v)


@dataclass(frozen=True)
class ThriftyOutcome:
    """Result of one free-or-embed step.

    `free` tells which horn was taken; `struct` is the (possibly unchanged)
    ambient structure, `mapping` sends the step's elements into it, and
    `violations` are the cap breaches that forced the embed horn.
    """

    free: bool
    struct: FinStructure
    mapping: tuple[tuple[int, int], ...]
    violations: tuple[tuple[tuple[int, ...], bytes, int, int], ...]


def _is_minimal_extension(
    spec: PredimensionSpec, ext: FinStructure, base_ids: tuple[int, ...]
) -> bool:
    if not strong_verdict(spec, ext, base_ids):
        return False
    new = [e for e in ext.universe if e not in set(base_ids)]
    if not new:
        return False
    d_all = delta(spec, ext)
    for r in range(1, len(new)):
        for mid in combinations(new, r):
            if d_all - delta(spec, ext, set(base_ids) | set(mid)) >= 0:
                return False
    return True


def _strong_embedding(
    spec: PredimensionSpec,
    struct: FinStructure,
    base_ids: tuple[int, ...],
    ext: FinStructure,
) -> Optional[dict[int, int]]:
    fixed = {a: a for a in base_ids}

    def ok(mapping: dict[int, int]) -> bool:
        if spec.components:
            emb = Embedding(ext, struct, tuple(sorted(mapping.items())))
            if not is_embedding_compatible(spec, emb):
                return False
        return strong_verdict(spec, struct, mapping.values())

    hits = find_embeddings(ext, struct, fixed=fixed, compat=ok, limit=1)
    return hits[0] if hits else None


def thrifty_step(
    spec: PredimensionSpec,
    mu: MuFunction,
    struct: FinStructure,
    base_ids: tuple[int, ...],
    ext: FinStructure,
    *,
    bound: int,
    targets: Optional[dict[int, int]] = None,
    cross_check: bool = False,
    class_cache: Optional[dict] = None,
) -> ThriftyOutcome:
    """Free-or-embed dichotomy for one minimal extension step.

    The free amalgam is kept when no copy cap breaks near the fresh
    elements; otherwise the extension must embed onto existing elements with
    a strong image, and failing both is an error.  `cross_check` also runs
    the full violation scan and insists it agree with the local one.
    """
    base = tuple(sorted(base_ids))
    if not _is_minimal_extension(spec, ext, base):
        raise ThriftyError("step is not a minimal extension over its base")
    if not strong_verdict(spec, struct, base):
        raise ThriftyError("step base is not strong in the ambient structure")
    extended, mapping = free_extend(struct, ext, base, targets)
    new_ids = tuple(mapping[e] for e in ext.universe if e not in set(base))
    viol = mu_violations(
        spec, mu, extended, bound, around=new_ids, class_cache=class_cache
    )
    if cross_check:
        full = mu_violations(spec, mu, extended, bound, class_cache=class_cache)
        if set(viol) != set(full):
            raise MuError(
                f"incremental mu-check disagrees with full recount: {viol} vs {full}"
            )
    if not viol:
        return ThriftyOutcome(
            free=True, struct=extended, mapping=tuple(sorted(mapping.items())),
            violations=(),
        )
    emb = _strong_embedding(spec, struct, base, ext)
    if emb is None:
        raise ThriftyError(
            f"cannot amalgamate freely (violations: {viol}) and no strong "
            f"embedding over base {base} exists"
        )
    return ThriftyOutcome(
        free=False, struct=struct, mapping=tuple(sorted(emb.items())),
        violations=viol,
    )


def _next_tower_step(
    spec: PredimensionSpec, ext: FinStructure, placed: set[int]
) -> tuple[int, ...]:
    """Least inclusion-minimal strong strict superset of the placed part."""
    rest = [e for e in ext.universe if e not in placed]
    candidates = []
    for r in range(1, len(rest) + 1):
        for addition in combinations(rest, r):
            s = tuple(sorted(placed | set(addition)))
            if strong_verdict(spec, ext, s):
                candidates.append(s)
        if candidates:
            # no smaller strong superset exists, so these are inclusion-minimal
            break
    if not candidates:
        raise ThriftyError("extension admits no strong tower step")
    return min(candidates)


def build_collapsed(
    spec: PredimensionSpec,
    mu: MuFunction,
    start: FinStructure,
    k: int,
    budget: int,
    seed: int = 0,
    *,
    bound: Optional[int] = None,
    annotation_palette: Optional[Callable] = None,
    cross_check: bool = False,
) -> GenericApprox:
    """Like the free builder, but every discharge runs through the
    free-or-embed dichotomy, one minimal tower step at a time, so the result
    keeps every copy cap.  Same schedule, same stopping rule."""
    bound = k if bound is None else bound
    report = in_class_mu(spec, mu, start, bound, annotation_palette=annotation_palette)
    if not report.ok:
        raise MuError(f"start structure violates copy caps: {report.violations}")
    ga = GenericApprox(spec, start, k, budget, seed, annotation_palette)
    mu_cache: dict = {}
    ga.blocked = None
    while True:
        nxt = _first_unmet(ga)
        if nxt is None:
            return ga
        A, cls = nxt
        need = len(cls.new_elements)
        if ga.current.n + need > ga.allowance:
            ga.blocked = BlockedRecord(A, cls.code, need)
            return ga
        _discharge_collapsed(ga, mu, bound, A, cls, cross_check, mu_cache)


def _discharge_collapsed(
    ga: GenericApprox,
    mu: MuFunction,
    bound: int,
    base_ids: tuple[int, ...],
    cls: ExtensionClass,
    cross_check: bool,
    mu_cache: dict,
) -> None:
    """Realize one obligation through minimal tower steps.

    Fresh ids are fixed up front to mirror the free discharge exactly, so an
    unconstrained mu reproduces the free build element for element.
    """
    spec = ga.spec
    ext = cls.ext
    everything = set(ext.universe)
    fresh = max(ga.current.universe, default=-1) + 1
    target_id = {e: fresh + i for i, e in enumerate(cls.new_elements)}
    mapping = {a: a for a in base_ids}
    placed = set(base_ids)
    added: list[int] = []
    while placed != everything:
        step = _next_tower_step(spec, ext, placed)
        step_new = [e for e in step if e not in placed]
        relabel = {e: mapping[e] for e in placed}
        relabel.update({e: target_id[e] for e in step_new})
        step_ext = ext.restrict(step).relabel(relabel)
        step_base = tuple(sorted(mapping[e] for e in placed))
        keep_ids = {relabel[e]: relabel[e] for e in step_new}
        out = thrifty_step(
            spec, mu, ga.current, step_base, step_ext,
            bound=bound, targets=keep_ids,
            cross_check=cross_check, class_cache=mu_cache,
        )
        got = dict(out.mapping)
        for e in step_new:
            mapping[e] = got[relabel[e]]
        if out.free:
            ga.current = out.struct
            new_concrete = tuple(mapping[e] for e in step_new)
            added.extend(new_concrete)
            if ga._pf is not None:
                ga._pf = _fast_engine(spec, ga.current)
            ga._note_new_elements(new_concrete)
        placed = set(step)
    ga.history.append(
        DischargeRecord(len(ga.history), base_ids, cls.code, tuple(added))
    )
    ga._satisfied.add((base_ids, cls.code))
