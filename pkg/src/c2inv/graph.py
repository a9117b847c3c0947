"""Graphs with explicitly ordered, oriented edges.

Edge ``e`` of a :class:`Graph` is ``edges[e] = (tail, head)``; that index is the
name of the edge variable ``a_e`` everywhere downstream, so every operation
here keeps the relative order of surviving edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import PreconditionError

__all__ = [
    "Graph",
    "VertexPartition",
    "circulant",
    "decomplete",
    "remove_vertices",
    "delete",
    "contract",
    "is_connected",
    "components",
    "spanning_trees",
    "forests_for_partition",
    "reduced_incidence",
    "parse_graph",
    "format_graph",
    "read_graph",
    "write_graph",
]


@dataclass(frozen=True)
class Graph:
    """Multigraph on vertices ``0..n-1`` with an ordered list of oriented edges.

    ``vertex_map`` and ``edge_map`` are filled in by the operations that derive
    one graph from another (decompletion, deletion, contraction). They map the
    parent's vertex / edge indices to this graph's (``None`` where the item
    disappeared) and take no part in equality.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    vertex_map: tuple[int | None, ...] | None = field(default=None, compare=False, repr=False)
    edge_map: tuple[int | None, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        for a, b in edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise PreconditionError(f"edge ({a}, {b}) out of range for {self.n} vertices")

    @property
    def num_vertices(self) -> int:
        return self.n

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def incident(self, v: int) -> list[int]:
        return [e for e, (a, b) in enumerate(self.edges) if a == v or b == v]

    def degree(self, v: int) -> int:
        return sum((a == v) + (b == v) for a, b in self.edges)

    def neighbors(self, v: int) -> set[int]:
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            if b == v:
                out.add(a)
        return out

    def endpoints(self, edge_set: Iterable[int]) -> set[int]:
        out: set[int] = set()
        for e in edge_set:
            out.update(self.edges[e])
        return out


@dataclass(frozen=True)
class VertexPartition:
    """Set partition of a subset ("ground set") of vertices, kept canonical.

    Blocks are sorted tuples, and the blocks are ordered by their minimum
    element, so two partitions are equal exactly when their canonical forms are.
    """

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks: Iterable[Iterable[int]]):
        bl = [tuple(sorted(set(b))) for b in blocks]
        if any(not b for b in bl):
            raise PreconditionError("partition blocks must be nonempty")
        seen: set[int] = set()
        for b in bl:
            if seen.intersection(b):
                raise PreconditionError("partition blocks must be disjoint")
            seen.update(b)
        object.__setattr__(self, "blocks", tuple(sorted(bl)))

    @property
    def ground(self) -> frozenset[int]:
        return frozenset(v for b in self.blocks for v in b)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def block_of(self, v: int) -> tuple[int, ...] | None:
        for b in self.blocks:
            if v in b:
                return b
        return None

    def __repr__(self) -> str:
        inner = ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return f"VertexPartition({inner})"


def circulant(n: int, jumps: Sequence[int]) -> Graph:
    """The 4-regular circulant ``C_n(i, j)``.

    Edge order: all ``i``-jumps ``(v, v+i)`` for ``v = 0..n-1``, then all
    ``j``-jumps in the same vertex order.
    """
    if len(jumps) != 2:
        raise PreconditionError("circulant expects exactly two jumps (i, j)")
    i, j = (int(x) for x in jumps)
    if n < 5:
        raise PreconditionError(f"circulant needs n >= 5, got {n}")
    if not 1 <= i < j < n:
        raise PreconditionError(f"jumps must satisfy 1 <= i < j < n, got ({i}, {j})")
    if (i + j) % n == 0:
        raise PreconditionError(f"C_{n}({i},{j}) is not 4-regular: i = n - j")
    if 2 * i == n or 2 * j == n:
        raise PreconditionError(f"C_{n}({i},{j}) is not 4-regular: a jump equals n/2")
    edges = [(v, (v + i) % n) for v in range(n)] + [(v, (v + j) % n) for v in range(n)]
    return Graph(n, tuple(edges))


def remove_vertices(g: Graph, vertices: Iterable[int]) -> Graph:
    """Delete vertices and their incident edges; relabel survivors densely in order."""
    gone = set(vertices)
    vmap: list[int | None] = []
    nxt = 0
    for v in range(g.n):
        if v in gone:
            vmap.append(None)
        else:
            vmap.append(nxt)
            nxt += 1
    edges = []
    emap: list[int | None] = []
    for a, b in g.edges:
        if a in gone or b in gone:
            emap.append(None)
        else:
            emap.append(len(edges))
            edges.append((vmap[a], vmap[b]))
    return Graph(nxt, tuple(edges), vertex_map=tuple(vmap), edge_map=tuple(emap))


def decomplete(g: Graph, v: int) -> Graph:
    """``g - v``; ``vertex_map`` on the result records the relabelling."""
    if not 0 <= v < g.n:
        raise PreconditionError(f"vertex {v} not in graph")
    return remove_vertices(g, [v])


def delete(g: Graph, edges: Iterable[int]) -> Graph:
    gone = set(edges)
    _check_edges(g, gone)
    kept = []
    emap: list[int | None] = []
    for e, ed in enumerate(g.edges):
        if e in gone:
            emap.append(None)
        else:
            emap.append(len(kept))
            kept.append(ed)
    return Graph(g.n, tuple(kept), vertex_map=tuple(range(g.n)), edge_map=tuple(emap))


def contract(g: Graph, edges: Iterable[int]) -> Graph:
    """Contract ``edges``; each merged class is named by its minimum vertex.

    Other edges that become loops stay in the graph (they can never lie in a
    forest). Contracting an edge that is already a loop, either originally or
    because an earlier contraction closed it, is an error.
    """
    chosen = sorted(set(edges))
    _check_edges(g, chosen)
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in chosen:
        a, b = g.edges[e]
        ra, rb = find(a), find(b)
        if ra == rb:
            raise PreconditionError(f"cannot contract edge {e}: it is a self-loop")
        lo, hi = min(ra, rb), max(ra, rb)
        parent[hi] = lo
    roots = sorted({find(v) for v in range(g.n)})
    dense = {r: k for k, r in enumerate(roots)}
    vmap = tuple(dense[find(v)] for v in range(g.n))
    gone = set(chosen)
    kept = []
    emap: list[int | None] = []
    for e, (a, b) in enumerate(g.edges):
        if e in gone:
            emap.append(None)
        else:
            emap.append(len(kept))
            kept.append((vmap[a], vmap[b]))
    return Graph(len(roots), tuple(kept), vertex_map=vmap, edge_map=tuple(emap))


def _check_edges(g: Graph, edges: Iterable[int]) -> None:
    for e in edges:
        if not 0 <= e < g.num_edges:
            raise PreconditionError(f"edge index {e} out of range (graph has {g.num_edges} edges)")


def components(g: Graph, edge_subset: Iterable[int] | None = None) -> list[set[int]]:
    """Connected components using all edges, or only ``edge_subset``."""
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    idx = range(g.num_edges) if edge_subset is None else edge_subset
    for e in idx:
        a, b = g.edges[e]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    comps: dict[int, set[int]] = {}
    for v in range(g.n):
        comps.setdefault(find(v), set()).add(v)
    return list(comps.values())


def is_connected(g: Graph) -> bool:
    return g.n <= 1 or len(components(g)) == 1


def _forest_search(g: Graph, target_edges: int, block_of: dict[int, int]) -> Iterator[tuple[int, ...]]:
    """Backtracking over edges in index order.

    Yields every acyclic edge set of size ``target_edges`` in which no tree joins
    two different blocks. ``block_of`` maps ground vertices to block ids.
    Branches are cut when too few edges remain or when a block can no longer be
    gathered into one tree.
    """
    m = g.num_edges
    edges = g.edges
    parent = list(range(g.n))
    tag = [block_of.get(v, -1) for v in range(g.n)]
    chosen: list[int] = []
    blocks: dict[int, list[int]] = {}
    for v, b in block_of.items():
        blocks.setdefault(b, []).append(v)
    multi = [vs for vs in blocks.values() if len(vs) > 1]

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    def blocks_reachable(start: int) -> bool:
        # every multi-vertex block must be connectable by chosen + edges[start:]
        if not multi:
            return True
        p2 = parent[:]

        def f2(x):
            while p2[x] != x:
                p2[x] = p2[p2[x]]
                x = p2[x]
            return x

        for e in range(start, m):
            a, b = edges[e]
            ra, rb = f2(a), f2(b)
            if ra != rb:
                p2[ra] = rb
        return all(len({f2(v) for v in vs}) == 1 for vs in multi)

    def rec(e: int):
        need = target_edges - len(chosen)
        if need == 0:
            yield tuple(chosen)
            return
        if m - e < need:
            return
        a, b = edges[e]
        ra, rb = find(a), find(b)
        if ra != rb and not (tag[ra] >= 0 and tag[rb] >= 0 and tag[ra] != tag[rb]):
            # include e: union by attaching ra under rb, remember to undo
            old_tag = tag[rb]
            parent[ra] = rb
            if tag[rb] < 0:
                tag[rb] = tag[ra]
            chosen.append(e)
            yield from rec(e + 1)
            chosen.pop()
            parent[ra] = ra
            tag[rb] = old_tag
        if blocks_reachable(e + 1):
            yield from rec(e + 1)

    if target_edges < 0:
        return
    yield from rec(0)


def spanning_trees(g: Graph) -> Iterator[tuple[int, ...]]:
    """All spanning trees as sorted tuples of edge indices (empty if disconnected)."""
    if g.n == 0:
        return
    if not is_connected(g):
        return
    yield from _forest_search(g, g.n - 1, {v: 0 for v in range(g.n)})


def forests_for_partition(g: Graph, partition: VertexPartition | Iterable[Iterable[int]]) -> Iterator[tuple[int, ...]]:
    """Spanning forests with one tree per block of ``partition``.

    Each tree contains exactly one block; vertices outside the ground set may
    sit in any tree.
    """
    P = partition if isinstance(partition, VertexPartition) else VertexPartition(partition)
    if not P.ground <= set(range(g.n)):
        raise PreconditionError("partition ground set is not contained in the vertex set")
    k = len(P)
    if k == 0:
        if g.n == 0:
            yield ()  # the empty forest of the empty graph
        return
    block_of = {v: i for i, b in enumerate(P.blocks) for v in b}
    for forest in _forest_search(g, g.n - k, block_of):
        # n-k edges acyclic => exactly k trees; each must carry a block
        comps = components(g, forest)
        if all(any(v in block_of for v in c) for c in comps):
            yield forest


def reduced_incidence(g: Graph, dropped_vertex: int) -> np.ndarray:
    """Signed incidence matrix (+1 tail, -1 head) without the row of ``dropped_vertex``."""
    if not 0 <= dropped_vertex < g.n:
        raise PreconditionError(f"vertex {dropped_vertex} not in graph")
    full = np.zeros((g.n, g.num_edges), dtype=np.int64)
    for e, (a, b) in enumerate(g.edges):
        if a != b:
            full[a, e] += 1
            full[b, e] -= 1
    return np.delete(full, dropped_vertex, axis=0)


def parse_graph(text: str) -> Graph:
    """Parse the ``n m`` header + ``tail head`` lines format."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise PreconditionError("empty graph file")
    try:
        n, m = (int(x) for x in lines[0].split())
        edges = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise PreconditionError(f"malformed graph file: {exc}") from exc
    if len(edges) != m or any(len(e) != 2 for e in edges):
        raise PreconditionError(f"graph file declares {m} edges but lists {len(edges)}")
    return Graph(n, tuple(edges))


def format_graph(g: Graph) -> str:
    return "\n".join([f"{g.n} {g.num_edges}"] + [f"{a} {b}" for a, b in g.edges]) + "\n"


def read_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())


def write_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g))


def all_set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    """Restricted-growth enumeration of set partitions (Bell-many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in all_set_partitions(rest):
        yield [[first]] + [list(b) for b in sub]
        for i in range(len(sub)):
            yield [list(b) for b in sub[:i]] + [[first] + list(sub[i])] + [list(b) for b in sub[i + 1 :]]


def edge_subsets(m: int, k: int):
    return combinations(range(m), k)
