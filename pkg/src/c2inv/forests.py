"""Spanning forest polynomials as set partitions.

A :class:`ForestSum` is a formal combination of ``Phi^P_H`` over one graph
``H``. ``variables[e]`` names the polynomial variable of edge ``e`` of ``H``,
so sums produced on minors of a graph can be expanded back in the parent's
variable ring.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import PreconditionError, VerificationError
from .graph import (
    Graph,
    VertexPartition,
    all_set_partitions,
    delete,
    forests_for_partition,
    remove_vertices,
)
from .poly import MultilinearPoly, dodgson_coefficient

__all__ = [
    "ForestTerm",
    "ForestSum",
    "forest_poly",
    "dodgson_to_forests",
    "assign_edges",
    "canonicalize",
    "compress_free",
]


@dataclass(frozen=True)
class ForestTerm:
    partition: VertexPartition
    coef: int


def _reduce(c: int, p: int | None) -> int:
    return c % p if p else c


class ForestSum:
    """``sum coef * Phi^P_graph``; terms with equal partitions are merged."""

    def __init__(self, graph: Graph, terms: Mapping[VertexPartition, int] | Iterable[ForestTerm] = (),
                 p: int | None = None, variables: Sequence[int] | None = None, nvars: int | None = None,
                 vertex_map: Sequence[int | None] | None = None):
        self.graph = graph
        self.p = p
        self.variables = tuple(range(graph.num_edges)) if variables is None else tuple(variables)
        if len(self.variables) != graph.num_edges:
            raise PreconditionError("one variable name per edge required")
        self.nvars = (max(self.variables, default=-1) + 1) if nvars is None else nvars
        self.vertex_map = None if vertex_map is None else tuple(vertex_map)
        self._terms: dict[VertexPartition, int] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((t.partition, t.coef) for t in terms)
        for P, c in items:
            self.add(P, c)

    def add(self, partition: VertexPartition, coef: int) -> None:
        c = _reduce(self._terms.get(partition, 0) + coef, self.p)
        if c:
            self._terms[partition] = c
        else:
            self._terms.pop(partition, None)

    @property
    def terms(self) -> list[ForestTerm]:
        return [ForestTerm(P, c) for P, c in sorted(self._terms.items(), key=lambda t: t[0].blocks)]

    def as_dict(self) -> dict[VertexPartition, int]:
        return dict(self._terms)

    def coefficient(self, partition: VertexPartition) -> int:
        return self._terms.get(partition, 0)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[ForestTerm]:
        return iter(self.terms)

    def __repr__(self) -> str:
        body = " + ".join(f"{c}*Phi{P.blocks}" for P, c in sorted(self._terms.items(), key=lambda t: t[0].blocks))
        return f"ForestSum({body or '0'})"

    def to_poly(self) -> MultilinearPoly:
        acc: dict[int, int] = {}
        for P, c in self._terms.items():
            for mask, k in forest_poly(self.graph, P, variables=self.variables, nvars=self.nvars).terms.items():
                acc[mask] = acc.get(mask, 0) + c * k
        return MultilinearPoly(self.nvars, acc, self.p)


def forest_poly(g: Graph, partition: VertexPartition, p: int | None = None,
                variables: Sequence[int] | None = None, nvars: int | None = None) -> MultilinearPoly:
    """``Phi^P_g``: one monomial (the edges outside the forest) per matching spanning forest."""
    names = list(range(g.num_edges)) if variables is None else list(variables)
    nv = (max(names, default=-1) + 1) if nvars is None else nvars
    full = 0
    for v in names:
        full |= 1 << v
    masks = []
    for forest in forests_for_partition(g, partition):
        mask = full
        for e in forest:
            mask &= ~(1 << names[e])
        masks.append(mask)
    return MultilinearPoly.from_monomials(nv, masks, p)


def canonicalize(partition: VertexPartition, relabel: Mapping[int, int]) -> VertexPartition:
    """Transport ``partition`` along ``relabel`` (which must be injective on its ground set)."""
    ground = partition.ground
    missing = [v for v in ground if v not in relabel]
    if missing:
        raise PreconditionError(f"relabel map misses vertices {sorted(missing)}")
    if len({relabel[v] for v in ground}) != len(ground):
        raise PreconditionError("relabel map is not injective on the ground set")
    return VertexPartition([relabel[v] for v in b] for b in partition.blocks)


def _block_graph_is_tree(block_of: Mapping[int, int], nblocks: int, edges: Iterable[tuple[int, int]]) -> bool:
    parent = list(range(nblocks))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = 0
    for a, b in edges:
        ra, rb = find(block_of[a]), find(block_of[b])
        if ra == rb:
            return False
        parent[ra] = rb
        count += 1
    return count == nblocks - 1


def dodgson_to_forests(g: Graph, I: Iterable[int], J: Iterable[int], K: Iterable[int] = (),
                       p: int | None = None) -> ForestSum:
    """Signed expansion of ``Psi^{I,J}_{g,K}`` into forest polynomials on ``g - (I|J|K)``.

    A partition P of the endpoints of ``(I|J|K) - (I&J)`` is kept when gluing
    its blocks along ``(J|K) - I`` and, separately, along ``(I|K) - J`` gives a
    tree. Each sign is read off the determinant: one matching forest fixes one
    monomial, whose coefficient must be +-1.
    """
    I, J, K = set(I), set(J), set(K)
    if len(I) != len(J):
        raise PreconditionError(f"|I| = {len(I)} differs from |J| = {len(J)}")
    if K & (I | J):
        raise PreconditionError("K must be disjoint from I and J")
    for e in I | J | K:
        if not 0 <= e < g.num_edges:
            raise PreconditionError(f"edge index {e} out of range")
    removed = I | J | K
    sub = delete(g, removed)
    variables = [e for e in range(g.num_edges) if e not in removed]
    ground = sorted(g.endpoints(removed - (I & J)))
    if not ground and g.n:
        ground = [0]  # Phi^{{v}} is the Kirchhoff polynomial for any single vertex v
    glue_j = [g.edges[e] for e in sorted((J | K) - I)]
    glue_i = [g.edges[e] for e in sorted((I | K) - J)]
    out = ForestSum(sub, p=p, variables=variables, nvars=g.num_edges)
    signs: dict[VertexPartition, int] = {}
    for blocks in all_set_partitions(ground):
        block_of = {v: i for i, b in enumerate(blocks) for v in b}
        if not (_block_graph_is_tree(block_of, len(blocks), glue_j)
                and _block_graph_is_tree(block_of, len(blocks), glue_i)):
            continue
        P = VertexPartition(blocks)
        forest = next(forests_for_partition(sub, P), None)
        if forest is None:
            continue  # Phi^P vanishes on this graph
        in_forest = {variables[e] for e in forest}
        monomial = [e for e in variables if e not in in_forest]
        c = dodgson_coefficient(g, I, J, K, monomial)
        if c not in (1, -1):
            raise VerificationError(f"forest monomial of {P} has determinant coefficient {c}, expected +-1")
        signs[P] = c
        out.add(P, c)
    _check_crossing(signs)
    return out


def _check_crossing(signs: Mapping[VertexPartition, int]) -> None:
    # {a,b},{c,d} against {a,c},{b,d}: always opposite signs
    pairs = {}
    for P, s in signs.items():
        if len(P) == 2 and all(len(b) == 2 for b in P.blocks):
            pairs[P] = s
    for P, s in pairs.items():
        (a, b), (c, d) = P.blocks
        for Q in (VertexPartition([(a, c), (b, d)]), VertexPartition([(a, d), (b, c)])):
            if Q in pairs and pairs[Q] == s:
                raise VerificationError(f"crossing partitions {P} and {Q} carry the same sign")


def _merge_ok(P: VertexPartition, blocks: Sequence[Sequence[int]], used: Sequence[tuple[int, int]]) -> bool:
    """Does gluing ``blocks`` along the used edges give back exactly the blocks of ``P``?"""
    block_of = {v: i for i, b in enumerate(blocks) for v in b}
    parent = list(range(len(blocks)))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in used:
        ra, rb = find(block_of[a]), find(block_of[b])
        if ra == rb:
            return False  # cycle through the used edges
        parent[ra] = rb
    groups: dict[int, set[int]] = {}
    for i, b in enumerate(blocks):
        groups.setdefault(find(i), set()).update(b)
    target_of = {v: k for k, blk in enumerate(P.blocks) for v in blk}
    hit = set()
    for verts in groups.values():
        owners = {target_of[v] for v in verts if v in target_of}
        if len(owners) != 1:
            return False  # a tree with no block, or with two
        k = owners.pop()
        if k in hit or set(P.blocks[k]) - verts:
            return False
        hit.add(k)
    return len(hit) == len(P)


def compress_free(terms: Mapping[VertexPartition, int], p: int | None = None) -> dict[VertexPartition, int]:
    """Rewrite complete fibres ``sum_B Phi^{Q + u->B}`` as ``Phi^Q`` (u left free).

    Sound for any u outside the ground set of Q, since every forest puts u in
    exactly one tree. Vertices are tried in ascending order until nothing changes,
    which makes the result a canonical minimal form.
    """
    cur = {P: _reduce(c, p) for P, c in terms.items() if _reduce(c, p)}
    changed = True
    while changed:
        changed = False
        verts = sorted({v for P in cur for v in P.ground})
        for u in verts:
            done: set[VertexPartition] = set()
            for P in sorted(cur, key=lambda q: q.blocks):
                if P in done or P not in cur:
                    continue
                blk = P.block_of(u)
                if blk is None or len(blk) == 1:
                    continue
                rest = [tuple(x for x in b if x != u) for b in P.blocks]
                Q = VertexPartition(rest)
                fibre = [VertexPartition([b + (u,) if i == j else b for j, b in enumerate(Q.blocks)])
                         for i in range(len(Q))]
                c = cur[P]
                if all(cur.get(F) == c for F in fibre):
                    for F in fibre:
                        del cur[F]
                        done.add(F)
                    cur[Q] = _reduce(cur.get(Q, 0) + c, p)
                    if not cur[Q]:
                        del cur[Q]
                    changed = True
    return cur


def assign_edges(term: ForestTerm | VertexPartition, H: Graph, S: Iterable[int], assigned: Iterable[int],
                 p: int | None = None, variables: Sequence[int] | None = None) -> ForestSum:
    """Resolve the edges ``S`` of ``Phi^P_H``: edges in ``assigned`` are avoided
    by the forest, the rest of ``S`` are used by it.

    Returns the equivalent sum of forest polynomials on ``H - S`` with the
    vertices that ``S`` left isolated discarded (``vertex_map`` records the
    renaming). Output ground sets stay inside the old ground set plus the
    endpoints of ``S``.
    """
    if isinstance(term, VertexPartition):
        term = ForestTerm(term, 1)
    S = set(S)
    A = set(assigned)
    if not A <= S:
        raise PreconditionError("assigned edges must lie in S")
    for e in S:
        if not 0 <= e < H.num_edges:
            raise PreconditionError(f"edge index {e} out of range")
    P = term.partition
    names = list(range(H.num_edges)) if variables is None else list(variables)
    rest = delete(H, S)
    deg = [0] * H.n
    for a, b in rest.edges:
        deg[a] += 1
        deg[b] += 1
    touched = H.endpoints(S)
    isolated = sorted(v for v in touched if deg[v] == 0)
    final = remove_vertices(rest, isolated) if isolated else rest
    vmap = final.vertex_map if isolated else tuple(range(H.n))
    kept_edges = [e for e in range(H.num_edges) if e not in S]
    out_vars = [names[e] for e in kept_edges]
    nv = (max(names, default=-1) + 1) if names else 0

    used = [H.edges[e] for e in sorted(S - A)]
    if any(a == b for a, b in used):
        return ForestSum(final, p=p, variables=out_vars, nvars=nv, vertex_map=vmap)
    ground = sorted(P.ground | touched)
    iso = set(isolated)
    acc: dict[VertexPartition, int] = {}
    for blocks in all_set_partitions(ground):
        # an isolated vertex can only be its own tree
        if any(len(b) > 1 and iso.intersection(b) for b in blocks):
            continue
        if not _merge_ok(P, blocks, used):
            continue
        kept = [b for b in blocks if not (len(b) == 1 and b[0] in iso)]
        if not kept and final.n:
            continue
        Q = VertexPartition(kept)
        acc[Q] = acc.get(Q, 0) + term.coef
    acc = compress_free(acc, p)
    moved = {canonicalize(Q, {v: vmap[v] for v in Q.ground}): c for Q, c in acc.items()}
    return ForestSum(final, moved, p=p, variables=out_vars, nvars=nv, vertex_map=vmap)
