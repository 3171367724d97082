from __future__ import annotations

import random

from predim import Signature, FinStructure, canonical_code, code_over_base, pair_code
from predim.sampling import random_graph, random_vectors

from conftest import graph, vectors


def _shuffled(struct, rng):
    names = list(struct.universe)
    images = list(range(100, 100 + len(names)))
    rng.shuffle(images)
    return struct.relabel(dict(zip(names, images)))


def test_code_invariant_under_relabeling_many_samples():
    rng = random.Random(9)
    pairs = 0
    while pairs < 1000:
        g = random_graph(rng, rng.randrange(1, 10), 0.4)
        code = canonical_code(g)
        for _ in range(4):
            assert canonical_code(_shuffled(g, rng)) == code
            pairs += 1


def test_code_invariant_with_annotations():
    rng = random.Random(10)
    v = vectors((1, 0), (0, 1), (1, 1), (2, 0))
    code = canonical_code(v)
    for _ in range(50):
        assert canonical_code(_shuffled(v, rng)) == code


def test_code_distinguishes_nonisomorphic():
    path = graph(3, [(0, 1), (1, 2)])
    tri = graph(3, [(0, 1), (1, 2), (0, 2)])
    assert canonical_code(path) != canonical_code(tri)
    assert canonical_code(vectors((1,), (2,))) != canonical_code(vectors((1,), (1,)))


def test_code_over_base_pins_base_pointwise():
    pend0 = graph(3, [(0, 1), (0, 2)]).restrict([0, 2]).extended([5], {"E": [(0, 5)]})
    pend1 = graph(3, [(0, 1), (1, 2)]).restrict([0, 1]).extended([5], {"E": [(1, 5)]})
    # both are an edge plus a pendant, but the pendant hangs off a different
    # base position, so the pointwise codes differ
    assert code_over_base(pend0, [0, 2]) != code_over_base(pend1, [0, 1])
    same = pend0.relabel({0: 0, 2: 1, 5: 9})
    assert code_over_base(pend0.relabel({0: 0, 2: 1, 5: 7}), [0, 1]) == code_over_base(same, [0, 1])


def test_pair_code_ignores_base_order():
    # pendant on the first base element vs pendant on the second: the set-level
    # pair code treats base elements interchangeably
    a = graph(3, [(0, 1), (0, 2)])  # pendant 2 on base element 0
    b = graph(3, [(0, 1), (1, 2)])  # pendant 2 on base element 1
    assert pair_code(a, [0, 1]) == pair_code(b, [0, 1])
    assert code_over_base(a, [0, 1]) != code_over_base(b, [0, 1])


def test_pair_code_separates_base_from_rest():
    tri = graph(3, [(0, 1), (1, 2), (0, 2)])
    assert pair_code(tri, [0]) == pair_code(tri, [1])
    assert pair_code(tri, [0]) != pair_code(tri, [0, 1])


def test_codes_stable_on_random_annotated_sets():
    rng = random.Random(11)
    for _ in range(40):
        n = rng.randrange(1, 8)
        s = FinStructure(Signature(()), range(n), {}, random_vectors(rng, n, 2, 5))
        assert canonical_code(_shuffled(s, rng)) == canonical_code(s)
