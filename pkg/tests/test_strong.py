from __future__ import annotations

import random
from fractions import Fraction

import pytest

from predim import (
    brute_closure,
    brute_force_is_strong,
    closure,
    in_class,
    is_strong,
    strong_verdict,
)
from predim.sampling import random_sparse_graph, random_subset
from predim.strongsets import subset_tables

from conftest import graph, spec_alpha, spec_fusion, vectors

F = Fraction


def test_strength_frozen_examples(alpha1, k4, path4):
    rep = is_strong(alpha1, path4, [0, 3])
    assert not rep.verdict
    assert rep.deficiency == F(-1)
    assert rep.witness == (1, 2)

    rep = is_strong(alpha1, k4, [0])
    assert not rep.verdict
    assert rep.deficiency == F(-3)
    assert rep.witness == (1, 2, 3)

    assert is_strong(alpha1, path4, [0, 1]).verdict
    assert is_strong(alpha1, path4, []).verdict
    assert is_strong(alpha1, path4, [0, 1, 2, 3]).verdict


def test_strength_within_restricts_ambient(alpha1, k4):
    # inside a single triangle of K4 the vertex only owes two edges
    rep = is_strong(alpha1, k4, [0], within=[0, 1, 2])
    assert rep.deficiency == F(-1)
    assert rep.witness == (1, 2)
    with pytest.raises(Exception):
        is_strong(alpha1, k4, [0], within=[0, 9])
    with pytest.raises(Exception):
        is_strong(alpha1, k4, [0, 1], within=[1])  # base outside ambient


def test_strength_monotone_spec_shortcut(fusion):
    v = vectors((1, 0), (0, 1), (1, 1))
    assert is_strong(fusion, v, [0]).verdict
    assert strong_verdict(fusion, v, [])
    assert closure(fusion, v, [0]) == (0,)


def test_engines_agree_on_random_graphs(alpha1):
    rng = random.Random(21)
    for _ in range(300):
        g = random_sparse_graph(rng, rng.randrange(2, 11), extra_edges=rng.randrange(4))
        base = random_subset(rng, g.universe)
        reports = [
            is_strong(alpha1, g, base, method=m) for m in ("auto", "flow", "dfs", "brute")
        ]
        assert len({r.verdict for r in reports}) == 1
        assert len({r.deficiency for r in reports}) == 1
        assert strong_verdict(alpha1, g, base) == reports[0].verdict
        for r in reports:
            if not r.verdict:
                # witness attains the deficiency
                joint = set(base) | set(r.witness)
                assert _rel(alpha1, g, joint, base) == r.deficiency


def _rel(spec, struct, joint, base):
    from predim import delta

    return delta(spec, struct, joint) - delta(spec, struct, base)


def test_engines_agree_on_weighted_graphs():
    rng = random.Random(22)
    for w in (F(1, 2), F(2, 3)):
        spec = spec_alpha()
        for _ in range(120):
            g = random_sparse_graph(rng, rng.randrange(2, 9), extra_edges=rng.randrange(5))
            g = graph(g.n, g.sorted_instances("E"), weight=w)
            base = random_subset(rng, g.universe)
            a = is_strong(spec, g, base, method="dfs")
            b = is_strong(spec, g, base, method="brute")
            c = is_strong(spec, g, base, method="flow")
            assert (a.verdict, a.deficiency) == (b.verdict, b.deficiency) == (c.verdict, c.deficiency)


def test_engines_agree_on_fusion(fusion):
    rng = random.Random(23)
    from predim.sampling import random_vectors
    from predim import FinStructure, Signature

    for _ in range(150):
        n = rng.randrange(1, 9)
        v = FinStructure(Signature(()), range(n), {}, random_vectors(rng, n, 2, 5))
        base = random_subset(rng, v.universe)
        a = is_strong(fusion, v, base)
        b = is_strong(fusion, v, base, method="brute")
        assert (a.verdict, a.deficiency) == (b.verdict, b.deficiency)


def test_forced_engine_rejects_wrong_spec(fusion):
    v = vectors((1, 0))
    with pytest.raises(Exception):
        is_strong(fusion, v, [], method="flow")  # flow is relational-only


def test_in_class_examples(alpha1, k3, k4):
    assert in_class(alpha1, k3)
    assert not in_class(alpha1, k4)
    heavy = graph(4, [(a, b) for a in range(4) for b in range(a + 1, 4)], weight=F(1, 2))
    assert in_class(alpha1, heavy)


def test_closure_frozen_examples(alpha1, k4, path4):
    assert closure(alpha1, k4, [0]) == (0, 1, 2, 3)
    assert closure(alpha1, path4, [0, 3]) == (0, 1, 2, 3)
    assert closure(alpha1, path4, [0, 1]) == (0, 1)
    assert closure(alpha1, path4, []) == ()
    # within a triangle only
    assert closure(alpha1, k4, [0], within=[0, 1, 2]) == (0, 1, 2)


def test_closure_matches_brute_on_random_graphs(alpha1):
    rng = random.Random(24)
    for _ in range(200):
        g = random_sparse_graph(rng, rng.randrange(1, 11), extra_edges=rng.randrange(4))
        tables = subset_tables(alpha1, g)
        for _ in range(4):
            base = random_subset(rng, g.universe)
            fast = closure(alpha1, g, base)
            slow = brute_closure(alpha1, g, base, tables=tables)
            assert fast == slow


def test_closure_is_a_closure_operator(alpha1):
    rng = random.Random(25)
    for _ in range(100):
        g = random_sparse_graph(rng, rng.randrange(1, 10), extra_edges=2)
        a = set(random_subset(rng, g.universe))
        b = set(random_subset(rng, g.universe))
        ca = closure(alpha1, g, a)
        assert a.issubset(ca)
        assert closure(alpha1, g, ca) == ca  # idempotent
        if a.issubset(b):
            assert set(ca).issubset(closure(alpha1, g, b))
        assert is_strong(alpha1, g, ca).verdict


def test_brute_refuses_oversized_lattices(alpha1, fusion):
    g = random_sparse_graph(random.Random(0), 25, extra_edges=0)
    with pytest.raises(Exception):
        brute_force_is_strong(alpha1, g, frozenset(), frozenset(g.universe))
    with pytest.raises(Exception):
        brute_force_is_strong(alpha1, g, frozenset(), frozenset(range(10)), bound=8)
    big = vectors(*[(1, i) for i in range(18)])
    # matroid components cap at 16 free elements regardless of the bound
    with pytest.raises(Exception):
        brute_force_is_strong(fusion, big, frozenset(), frozenset(big.universe))


def test_brute_report_matches_definition(alpha1, k4):
    rep = brute_force_is_strong(alpha1, k4, frozenset({0}), frozenset(k4.universe))
    assert not rep.verdict
    assert rep.deficiency == F(-3)
    assert rep.witness == (1, 2, 3)
