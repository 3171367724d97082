"""Fast exact satisfaction checks for weight-1 graph specs.

For a purely relational spec with all weights 1 and all arities 2, a member
of the nonnegative class is a pseudoforest: every component is a tree or
carries exactly one cycle.  Strong subsets then decompose per component: the
trace on a tree component must be connected, the trace on a unicyclic
component must be connected and contain the whole cycle.  That turns both
strength verdicts and obligation satisfaction into local checks, which is
what makes level-4 audits on structures with dozens of elements tractable.

Everything here is exact and is cross-checked against the generic engines in
the test suite.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .canonical import canonical_code
from .extensions import ExtensionClass
from .structures import FinStructure, find_embeddings


class Pseudoforest:
    """Component data for a weight-1 graph structure.

    `valid` is False when some component has more edges than vertices, i.e.
    the structure is outside the nonnegative class; callers must fall back to
    the generic engines then.
    """

    def __init__(self, struct: FinStructure):
        self.struct = struct
        self.adj: dict[int, set[int]] = {e: set() for e in struct.universe}
        edge_count: dict[int, int] = {}
        parent = {e: e for e in struct.universe}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        nedges: list[tuple[int, int]] = []
        for name in struct.sig.names:
            for t in struct.instances[name]:
                u, v = t
                self.adj[u].add(v)
                self.adj[v].add(u)
                nedges.append((u, v))
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
        self.comp_of: dict[int, int] = {}
        comp_elems: dict[int, list[int]] = {}
        for e in struct.universe:
            r = find(e)
            self.comp_of[e] = r
            comp_elems.setdefault(r, []).append(e)
        for u, _ in nedges:
            edge_count[find(u)] = edge_count.get(find(u), 0) + 1
        # normalize component names to their minimum element
        rename = {r: min(elems) for r, elems in comp_elems.items()}
        self.comp_of = {e: rename[r] for e, r in self.comp_of.items()}
        self.comp_elems = {rename[r]: sorted(elems) for r, elems in comp_elems.items()}
        self.edge_count = {rename[r]: c for r, c in edge_count.items()}
        self.valid = True
        self.cycle: dict[int, frozenset[int]] = {}
        for root, elems in self.comp_elems.items():
            ne = self.edge_count.get(root, 0)
            nv = len(elems)
            if ne > nv:
                self.valid = False
            elif ne == nv:
                self.cycle[root] = self._find_cycle(elems)
        self._restrict_cache: dict[int, FinStructure] = {}
        self._avail_cache: dict[tuple[int, bytes], bool] = {}

    def _find_cycle(self, elems: list[int]) -> frozenset[int]:
        # peel leaves until only the cycle remains (works with parallel edges,
        # whose "cycle" is the two endpoints)
        deg: dict[int, int] = {e: 0 for e in elems}
        for name in self.struct.sig.names:
            for t in self.struct.instances[name]:
                u, v = t
                if u in deg:
                    deg[u] += 1
                    deg[v] += 1
        alive = set(elems)
        queue = [e for e in elems if deg[e] <= 1]
        while queue:
            e = queue.pop()
            alive.discard(e)
            for u in self.adj[e]:
                if u in alive:
                    deg[u] -= 1
                    if deg[u] <= 1:
                        queue.append(u)
        return frozenset(alive)

    def set_strong(self, elems: Iterable[int]) -> bool:
        """Chunk conditions: per-component connectivity plus cycle coverage."""
        by_comp: dict[int, set[int]] = {}
        for e in elems:
            by_comp.setdefault(self.comp_of[e], set()).add(e)
        for root, members in by_comp.items():
            cyc = self.cycle.get(root)
            if cyc is not None and not cyc.issubset(members):
                return False
            seen = set()
            queue = [min(members)]
            seen.add(min(members))
            while queue:
                x = queue.pop()
                for y in self.adj[x]:
                    if y in members and y not in seen:
                        seen.add(y)
                        queue.append(y)
            if len(seen) != len(members):
                return False
        return True

    def component_structure(self, root: int) -> FinStructure:
        if root not in self._restrict_cache:
            self._restrict_cache[root] = self.struct.restrict(self.comp_elems[root])
        return self._restrict_cache[root]

    def part_fits(self, root: int, part: FinStructure, part_code: bytes) -> bool:
        """Does the component contain an induced copy of the (connected) part
        that is itself a valid chunk?"""
        key = (root, part_code)
        if key not in self._avail_cache:
            target = self.component_structure(root)
            cyc = self.cycle.get(root)
            if cyc is None:
                hits = find_embeddings(part, target, limit=1)
            else:
                def covers(mapping: dict[int, int]) -> bool:
                    return cyc.issubset(mapping.values())

                hits = find_embeddings(part, target, compat=covers, limit=1)
            self._avail_cache[key] = bool(hits)
        return self._avail_cache[key]


def _split_parts(cls: ExtensionClass, base: set[int]):
    """Connected components of the new part; anchored means joined to the base."""
    new = list(cls.new_elements)
    eadj: dict[int, set[int]] = {e: set() for e in new}
    anchored_seeds = set()
    for name in cls.ext.sig.names:
        for t in cls.ext.instances[name]:
            u, v = t
            un, vn = u in eadj, v in eadj
            if un and vn:
                eadj[u].add(v)
                eadj[v].add(u)
            elif un and v in base:
                anchored_seeds.add(u)
            elif vn and u in base:
                anchored_seeds.add(v)
    seen: set[int] = set()
    parts: list[list[int]] = []
    for e in new:
        if e in seen:
            continue
        comp = [e]
        seen.add(e)
        queue = [e]
        while queue:
            x = queue.pop()
            for y in eadj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.append(y)
                    queue.append(y)
        parts.append(sorted(comp))
    anchored: list[int] = []
    free: list[list[int]] = []
    for comp in parts:
        if anchored_seeds.intersection(comp):
            anchored.extend(comp)
        else:
            free.append(comp)
    return sorted(anchored), free


def met_fast(
    pf: Pseudoforest,
    struct: FinStructure,
    base_ids: tuple[int, ...],
    cls: ExtensionClass,
) -> bool:
    """Exact obligation satisfaction via the chunk decomposition.

    The image of the anchored part lives in the base's components; each free
    part needs its own base-free component (a disconnected trace is never
    strong), so the two searches are independent.
    """
    base = set(base_ids)
    anchored, free_parts = _split_parts(cls, base)

    if anchored:
        roots = sorted({pf.comp_of[a] for a in base})
        elems: list[int] = []
        for r in roots:
            elems.extend(pf.comp_elems[r])
        target = struct.restrict(elems) if len(elems) < struct.n else struct
        sub_ext = cls.ext.restrict(base | set(anchored))
        fixed = {a: a for a in base_ids}

        def chunk_ok(mapping: dict[int, int]) -> bool:
            return pf.set_strong(mapping.values())

        if not find_embeddings(sub_ext, target, fixed=fixed, compat=chunk_ok, limit=1):
            return False

    if free_parts:
        base_roots = {pf.comp_of[a] for a in base}
        cand_lists: list[list[int]] = []
        for part in free_parts:
            pstruct = cls.ext.restrict(part)
            pcode = canonical_code(pstruct)
            cands = [
                r
                for r in sorted(pf.comp_elems)
                if r not in base_roots and pf.part_fits(r, pstruct, pcode)
            ]
            if not cands:
                return False
            cand_lists.append(cands)
        order = sorted(range(len(cand_lists)), key=lambda i: len(cand_lists[i]))
        used: set[int] = set()

        def assign(i: int) -> bool:
            if i == len(order):
                return True
            for r in cand_lists[order[i]]:
                if r not in used:
                    used.add(r)
                    if assign(i + 1):
                        return True
                    used.discard(r)
            return False

        if not assign(0):
            return False
    return True
