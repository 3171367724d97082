"""Command-line front end over the flat-file grammars.

One verb per run.  Reports are sorted `key<TAB>value` lines on stdout, with
rationals printed as reduced `p/q`.  Verbs that emit a structure write it to
`--out` when given; otherwise the structure text goes to stdout with the
report prefixed as `#` comment lines, so the combined output still parses as
a structure file.

Exit status: 0 on success, 1 when a property check comes back negative, 2 on
usage, parse, or precondition errors.  `--threads` caps internal fan-out and
never changes any output; its default comes from PREDIM_THREADS.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from fractions import Fraction
from typing import Optional

from .amalgams import AmalgamError, free_amalgam
from .audits import (
    AuditResult,
    audit_amalgamation,
    audit_dim_additivity,
    audit_exchange,
    audit_oracle_equivalence,
    audit_strong_laws,
    audit_submodularity,
    structure_source,
)
from .builder import BuilderError, audit_richness, build_generic
from .collapse import (
    DEFAULT_MU,
    BiminimalError,
    MuError,
    MuFunction,
    ThriftyError,
    build_collapsed,
    count_independent_copies,
    enumerate_minimal_extensions,
    in_class_mu,
)
from .extensions import classify_extension, enumerate_extensions, linear_extension_palette
from .geometry import GeometryError, dim, gcl
from .predimension import LinearOracle, PredimensionSpec, SpecError, delta
from .sampling import graph_signature
from .strongsets import is_strong
from .strongsets import closure as strong_closure
from .structures import Embedding, FinStructure, Signature, StructureError
from .textio import (
    ParseError,
    format_ids,
    parse_map,
    parse_mu,
    parse_spec,
    parse_structure,
    report_text,
    serialize_map,
    serialize_structure,
)


class UsageError(Exception):
    """Bad flags or unreadable/malformed input files."""


# ---------------------------------------------------------------------------
# input plumbing


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror or e}")


def _load_structure(path: str) -> FinStructure:
    try:
        return parse_structure(_read(path))
    except ParseError as e:
        raise UsageError(f"{path}: {e}")


def _load_spec(path: Optional[str], allow_invalid: bool = False) -> PredimensionSpec:
    if path is None:
        return PredimensionSpec.make(relational=True)
    try:
        return parse_spec(_read(path), allow_invalid=allow_invalid)
    except ParseError as e:
        raise UsageError(f"{path}: {e}")


def _load_mu(path: Optional[str]) -> MuFunction:
    if path is None:
        return DEFAULT_MU
    try:
        return parse_mu(_read(path))
    except ParseError as e:
        raise UsageError(f"{path}: {e}")


def _require_valid(spec: PredimensionSpec) -> None:
    if not spec.valid:
        raise UsageError("spec is not submodular: " + "; ".join(spec.violations))


def _parse_ids(text: str) -> tuple[int, ...]:
    out = []
    for tok in text.replace(",", " ").split():
        try:
            out.append(int(tok))
        except ValueError:
            raise UsageError(f"expected an element id, got {tok!r}")
    return tuple(out)


def _check_subset(struct: FinStructure, ids: tuple[int, ...], what: str) -> tuple[int, ...]:
    missing = [e for e in ids if e not in set(struct.universe)]
    if missing:
        raise UsageError(f"{what} mentions non-elements {missing}")
    return ids


def _palette_for(spec: PredimensionSpec):
    primes = [o.p for o, _ in spec.components if isinstance(o, LinearOracle)]
    return linear_extension_palette(primes[0]) if primes else None


def _empty_start(spec: PredimensionSpec, weight: Fraction = Fraction(1)) -> FinStructure:
    """Default build seed: an empty graph for relational specs, an empty
    annotated set otherwise (relations would only inflate the class count)."""
    if spec.relational:
        return FinStructure(graph_signature(weight), (), {"E": []})
    return FinStructure(Signature(()), (), {})


def _emit(facts: dict, struct: Optional[FinStructure] = None, out: Optional[str] = None) -> None:
    report = report_text(facts)
    if struct is None:
        sys.stdout.write(report)
        return
    text = serialize_structure(struct)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        sys.stdout.write(report)
    else:
        for line in report.splitlines():
            sys.stdout.write(f"# {line}\n")
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verbs


def _cmd_delta(args) -> int:
    spec = _load_spec(args.spec)
    struct = _load_structure(args.structure)
    subset = None
    if args.subset is not None:
        subset = _check_subset(struct, _parse_ids(args.subset), "--subset")
    value = delta(spec, struct, subset)
    print(f"{value.numerator}/{value.denominator}")
    return 0


def _cmd_strong(args) -> int:
    spec = _load_spec(args.spec)
    struct = _load_structure(args.structure)
    base = _check_subset(struct, _parse_ids(args.base), "--base")
    within = None
    if args.within is not None:
        within = _check_subset(struct, _parse_ids(args.within), "--within")
    rep = is_strong(spec, struct, base, within)
    facts = {"verdict": rep.verdict, "deficiency": rep.deficiency}
    if rep.witness is not None:
        facts["witness"] = format_ids(rep.witness)
    _emit(facts)
    return 0 if rep.verdict else 1


def _cmd_closure(args) -> int:
    spec = _load_spec(args.spec)
    struct = _load_structure(args.structure)
    base = _check_subset(struct, _parse_ids(args.base), "--base")
    within = None
    if args.within is not None:
        within = _check_subset(struct, _parse_ids(args.within), "--within")
    _emit({"closure": format_ids(strong_closure(spec, struct, base, within))})
    return 0


def _cmd_check_class(args) -> int:
    spec = _load_spec(args.spec)
    struct = _load_structure(args.structure)
    rep = is_strong(spec, struct, ())
    facts = {"in-class": rep.verdict}
    if not rep.verdict:
        facts["deficiency"] = rep.deficiency
        facts["witness"] = format_ids(rep.witness)
    _emit(facts)
    return 0 if rep.verdict else 1


def _cmd_dim(args) -> int:
    spec = _load_spec(args.spec)
    struct = _load_structure(args.structure)
    of = _check_subset(struct, _parse_ids(args.of), "--of")
    over = _check_subset(struct, _parse_ids(args.over), "--over") if args.over else ()
    _emit({"dim": dim(spec, struct, of, over)})
    return 0


def _cmd_gcl(args) -> int:
    spec = _load_spec(args.spec)
    struct = _load_structure(args.structure)
    of = _check_subset(struct, _parse_ids(args.of), "--of") if args.of else ()
    _emit({"gcl": format_ids(gcl(spec, struct, of))})
    return 0


def _cmd_amalgamate(args) -> int:
    base = _load_structure(args.base)
    left = _load_structure(args.left)
    right = _load_structure(args.right)
    try:
        lmap = parse_map(_read(args.left_map))
        rmap = parse_map(_read(args.right_map))
    except ParseError as e:
        raise UsageError(str(e))
    try:
        e1 = Embedding.make(base, left, lmap)
        e2 = Embedding.make(base, right, rmap)
    except StructureError as e:
        raise UsageError(f"embedding map rejected: {e}")
    res = free_amalgam(e1, e2)
    pos = {e: i for i, e in enumerate(sorted(res.amalgam.universe))}
    facts = {"n": len(res.amalgam.universe)}
    for a, b in res.left.pairs:
        facts[f"map.left.{a:05d}"] = pos[b]
    for a, b in res.right.pairs:
        facts[f"map.right.{a:05d}"] = pos[b]
    _emit(facts, res.amalgam, args.out)
    return 0


def _richness_facts(rep) -> dict:
    facts = {"k": rep.k, "satisfied": rep.satisfied, "total": rep.total}
    if rep.total:
        facts["fraction"] = Fraction(rep.satisfied, rep.total)
    for i, (ids, code) in enumerate(rep.unmet):
        facts[f"unmet.{i:05d}"] = f"{format_ids(ids)} {code.hex()}"
    return facts


def _cmd_build(args) -> int:
    spec = _load_spec(args.spec)
    _require_valid(spec)
    start = _load_structure(args.start) if args.start else _empty_start(spec)
    palette = _palette_for(spec)
    ga = build_generic(spec, start, args.k, args.budget, args.seed, palette)
    rep = audit_richness(spec, ga.current, args.k, palette)
    facts = _richness_facts(rep)
    facts["n"] = len(ga.current.universe)
    facts["blocked"] = ga.blocked is not None
    facts["discharged"] = len(ga.history)
    _emit(facts, ga.current, args.out)
    return 0


def _cmd_audit(args) -> int:
    spec = _load_spec(args.spec)
    _require_valid(spec)
    struct = _load_structure(args.structure)
    rep = audit_richness(spec, struct, args.k, _palette_for(spec))
    facts = _richness_facts(rep)
    facts["n"] = len(struct.universe)
    _emit(facts, struct, args.out)
    return 0 if rep.satisfied == rep.total else 1


def _cmd_exchange_audit(args) -> int:
    spec = _load_spec(args.spec)
    _require_valid(spec)
    struct = _load_structure(args.structure)
    rng = random.Random(args.seed)
    source = lambda _rng: struct
    ex = audit_exchange(spec, source, rng, args.samples, fresh_every=0)
    ad = audit_dim_additivity(spec, source, rng, args.samples, fresh_every=0)
    facts = {}
    for res in (ex, ad):
        facts[f"{res.name}.checked"] = res.checked
        facts[f"{res.name}.violations"] = res.violations
        if res.witness:
            facts[f"{res.name}.witness"] = res.witness
    _emit(facts)
    return 1 if ex.violations or ad.violations else 0


def _cmd_enumerate_min(args) -> int:
    spec = _load_spec(args.spec)
    _require_valid(spec)
    base = _load_structure(args.structure)
    palette = _palette_for(spec)
    if args.biminimal:
        classes = enumerate_minimal_extensions(spec, base, args.max_new, annotation_palette=palette)
    else:
        classes = [
            c
            for c in enumerate_extensions(spec, base, args.max_new, annotation_palette=palette)
            if c.minimal and c.ext_in_class
        ]
    facts = {"classes": len(classes)}
    for i, c in enumerate(classes):
        p = f"class.{i:05d}."
        facts[p + "code"] = c.code.hex()
        facts[p + "new"] = len(c.new_elements)
        facts[p + "delta"] = c.delta_over_base
        facts[p + "minimal"] = c.minimal
        facts[p + "prealgebraic"] = c.prealgebraic
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        bpos = {e: i for i, e in enumerate(sorted(base.universe))}
        with open(os.path.join(args.out_dir, "base.structure"), "w", encoding="utf-8") as fh:
            fh.write(serialize_structure(base))
        for i, c in enumerate(classes):
            epos = {e: j for j, e in enumerate(sorted(c.ext.universe))}
            stem = os.path.join(args.out_dir, f"class{i:05d}")
            with open(stem + ".ext", "w", encoding="utf-8") as fh:
                fh.write(serialize_structure(c.ext))
            with open(stem + ".map", "w", encoding="utf-8") as fh:
                fh.write(serialize_map({bpos[e]: epos[e] for e in base.universe}))
    _emit(facts)
    return 0


def _cmd_check_mu(args) -> int:
    spec = _load_spec(args.spec)
    _require_valid(spec)
    struct = _load_structure(args.structure)
    mu = _load_mu(args.mu)
    rep = in_class_mu(spec, mu, struct, args.bound, annotation_palette=_palette_for(spec))
    facts = {"ok": rep.ok, "violations": len(rep.violations)}
    for i, (ids, code, count, limit) in enumerate(rep.violations):
        facts[f"violation.{i:05d}"] = f"{format_ids(ids)} {code.hex()} {count} {limit}"
    _emit(facts)
    return 0 if rep.ok else 1


def _cmd_count_copies(args) -> int:
    spec = _load_spec(args.spec)
    _require_valid(spec)
    struct = _load_structure(args.structure)
    ext = _load_structure(args.ext)
    base = _parse_ids(args.base)
    cls = classify_extension(spec, ext, base)
    _check_subset(struct, base, "--base")
    count = count_independent_copies(spec, struct, base, cls, cap=args.cap)
    _emit({"count": count})
    return 0


def _cmd_collapse_build(args) -> int:
    spec = _load_spec(args.spec)
    _require_valid(spec)
    mu = _load_mu(args.mu)
    start = _load_structure(args.start) if args.start else _empty_start(spec)
    palette = _palette_for(spec)
    bound = args.bound if args.bound is not None else args.k
    ga = build_collapsed(
        spec,
        mu,
        start,
        args.k,
        args.budget,
        args.seed,
        bound=bound,
        annotation_palette=palette,
        cross_check=args.cross_check,
    )
    rep = audit_richness(spec, ga.current, args.k, palette)
    mu_rep = in_class_mu(spec, mu, ga.current, bound, annotation_palette=palette)
    facts = _richness_facts(rep)
    facts["n"] = len(ga.current.universe)
    facts["blocked"] = ga.blocked is not None
    facts["discharged"] = len(ga.history)
    facts["mu-ok"] = mu_rep.ok
    facts["mu-violations"] = len(mu_rep.violations)
    _emit(facts, ga.current, args.out)
    return 0 if mu_rep.ok else 1


def _mu_build_audit(spec: PredimensionSpec, weight: Fraction, samples: int) -> AuditResult:
    """Collapsed build honors its caps: tight pendant cap when weights allow,
    incremental checking cross-checked against the full recount throughout,
    and a final full membership audit."""
    if samples == 0:
        return AuditResult("mu", 0, 0)
    sig = graph_signature(weight)
    table = ()
    if weight == 1:
        ext = FinStructure(sig, (0, 1), {"E": [(0, 1)]})
        pendant = classify_extension(spec, ext, (0,))
        table = ((pendant.code, 3),)
    mu = MuFunction(table=table)
    try:
        ga = build_collapsed(
            spec, mu, _empty_start(spec, weight), 2, 14, 0, bound=3, cross_check=True
        )
    except ThriftyError as e:
        return AuditResult("mu", 1, 1, f"thrifty failure: {e}")
    rep = in_class_mu(spec, mu, ga.current, 3)
    witness = None
    if rep.violations:
        ids, code, count, limit = rep.violations[0]
        witness = f"{format_ids(ids)} {code.hex()} count={count} limit={limit}"
    return AuditResult("mu", 1, len(rep.violations), witness)


def _cmd_audit_all(args) -> int:
    spec = _load_spec(args.spec, allow_invalid=True)
    try:
        weight = Fraction(args.weight)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad --weight {args.weight!r}")
    rng = random.Random(args.seed)
    n = args.samples
    facts: dict = {}
    failed = False
    any_checked = False

    def record(res: AuditResult) -> None:
        nonlocal failed, any_checked
        facts[f"audit.{res.name}.checked"] = res.checked
        facts[f"audit.{res.name}.violations"] = res.violations
        if res.witness:
            facts[f"audit.{res.name}.witness"] = res.witness
        failed = failed or res.violations > 0
        any_checked = any_checked or res.checked > 0

    def skip(name: str, why: str) -> None:
        facts[f"audit.{name}.note"] = f"skipped: {why}"

    source = structure_source(spec, weight=weight, max_n=args.max_n)
    record(audit_submodularity(spec, source, rng, n))
    if not spec.valid:
        for name in ("strong-laws", "oracle-equivalence", "amalgamation", "exchange", "dim-additivity", "mu"):
            skip(name, "spec not submodular")
    else:
        record(audit_strong_laws(spec, source, rng, n // 2))
        record(audit_oracle_equivalence(spec, source, rng, n))
        if spec.relational:
            record(audit_amalgamation(spec, source, rng, n // 4))
        else:
            skip("amalgamation", "needs a relational spec")
        try:
            record(audit_exchange(spec, source, rng, n // 2))
            record(audit_dim_additivity(spec, source, rng, n // 2))
        except GeometryError as e:
            skip("exchange", str(e))
            skip("dim-additivity", str(e))
        if spec.relational:
            record(_mu_build_audit(spec, weight, n))
        else:
            skip("mu", "needs a relational spec")
    facts["ok"] = not failed
    if not any_checked:
        facts["vacuous"] = True
        print("warning: zero sample budgets, every audit is vacuous", file=sys.stderr)
    _emit(facts)
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# argument plumbing


def _uint(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("value must be non-negative")
    return value


def _seed_value(text: str) -> int:
    value = _uint(text)
    if value >= 1 << 64:
        raise argparse.ArgumentTypeError("seeds are 64-bit unsigned integers")
    return value


def _default_threads() -> int:
    raw = os.environ.get("PREDIM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predim",
        description="Predimension toolkit: strength, closures, amalgams, generic builds, audits.",
    )
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    def add(name: str, func, help: str, *, spec: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        if spec:
            p.add_argument("--spec", metavar="FILE", help="predimension spec file (default: pure relational)")
        p.add_argument(
            "--threads",
            type=_uint,
            default=_default_threads(),
            help="cap on internal fan-out; never changes output",
        )
        return p

    p = add("delta", _cmd_delta, "predimension of a structure or subset")
    p.add_argument("structure")
    p.add_argument("--subset", metavar="IDS")

    p = add("strong", _cmd_strong, "is the base self-sufficient in the ambient set")
    p.add_argument("structure")
    p.add_argument("--base", required=True, metavar="IDS")
    p.add_argument("--within", metavar="IDS")

    p = add("closure", _cmd_closure, "least strong superset of the base")
    p.add_argument("structure")
    p.add_argument("--base", required=True, metavar="IDS")
    p.add_argument("--within", metavar="IDS")

    p = add("check-class", _cmd_check_class, "does every subset have nonnegative predimension")
    p.add_argument("structure")

    p = add("dim", _cmd_dim, "geometric dimension of a subset over another")
    p.add_argument("structure")
    p.add_argument("--of", required=True, metavar="IDS")
    p.add_argument("--over", metavar="IDS")

    p = add("gcl", _cmd_gcl, "geometric closure of a subset")
    p.add_argument("structure")
    p.add_argument("--of", metavar="IDS")

    p = add("amalgamate", _cmd_amalgamate, "free amalgam of two factors over a base", spec=False)
    p.add_argument("base")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--left-map", required=True, metavar="FILE")
    p.add_argument("--right-map", required=True, metavar="FILE")
    p.add_argument("--out", metavar="FILE")

    p = add("build", _cmd_build, "grow a generic approximation by free extensions")
    p.add_argument("--k", type=_uint, required=True)
    p.add_argument("--budget", type=_uint, required=True)
    p.add_argument("--seed", type=_seed_value, default=0)
    p.add_argument("--start", metavar="FILE")
    p.add_argument("--out", metavar="FILE")

    p = add("audit", _cmd_audit, "count satisfied extension obligations at level k")
    p.add_argument("structure")
    p.add_argument("--k", type=_uint, required=True)
    p.add_argument("--out", metavar="FILE")

    p = add("exchange-audit", _cmd_exchange_audit, "exchange and additivity laws on sampled triples")
    p.add_argument("structure")
    p.add_argument("--samples", type=_uint, default=200)
    p.add_argument("--seed", type=_seed_value, default=0)

    p = add("enumerate-min", _cmd_enumerate_min, "minimal extension classes of a base structure")
    p.add_argument("structure")
    p.add_argument("--max-new", type=_uint, required=True)
    p.add_argument("--biminimal", action="store_true", help="prealgebraic classes least over this base")
    p.add_argument("--out-dir", metavar="DIR")

    p = add("check-mu", _cmd_check_mu, "copy-count caps hold everywhere")
    p.add_argument("structure")
    p.add_argument("--mu", metavar="FILE")
    p.add_argument("--bound", type=_uint, required=True)

    p = add("count-copies", _cmd_count_copies, "independent strong copies of an extension over a base")
    p.add_argument("structure")
    p.add_argument("--ext", required=True, metavar="FILE")
    p.add_argument("--base", required=True, metavar="IDS")
    p.add_argument("--cap", type=_uint)

    p = add("collapse-build", _cmd_collapse_build, "grow inside the capped class via free-or-embed steps")
    p.add_argument("--k", type=_uint, required=True)
    p.add_argument("--budget", type=_uint, required=True)
    p.add_argument("--seed", type=_seed_value, default=0)
    p.add_argument("--mu", metavar="FILE")
    p.add_argument("--bound", type=_uint)
    p.add_argument("--start", metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--cross-check", action="store_true", help="recount caps from scratch at every step")

    p = add("audit-all", _cmd_audit_all, "seeded property audits, consolidated")
    p.add_argument("--samples", type=_uint, default=200)
    p.add_argument("--seed", type=_seed_value, default=0)
    p.add_argument("--weight", default="1", help="relation weight for sampled structures (p/q)")
    p.add_argument("--max-n", type=_uint, default=10)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ThriftyError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (
        ParseError,
        StructureError,
        SpecError,
        GeometryError,
        BuilderError,
        MuError,
        BiminimalError,
        AmalgamError,
        OSError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
