"""Transfer-matrix recurrence for the circulant families C_n(1,3) and C_n(2,3).

Boundary labels: 0, 1, 2 are the first three vertices of the chain graph
(L0, L1, L2) and 3, 4, 5 the last three (R0, R1, R2). A factor is a set
partition of a subset of these labels standing for a spanning forest
polynomial; a single-block partition is always stored as ``PSI`` (the
Kirchhoff polynomial). A state is a sorted tuple of 2p-2 factor ids.

One chain step removes L0 together with its two edges (L0, x) and (L0, y)
where y is the vertex after the current L2; afterwards L1, L2, y become the
new L0, L1, L2 and the R labels are untouched.
"""
from __future__ import annotations

import hashlib
import io
import json
import os
import random
import struct
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb, factorial
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .errors import CheckpointError, PreconditionError
from .forests import assign_edges, canonicalize, forest_poly
from .graph import Graph, VertexPartition

__all__ = [
    "PSI",
    "Family",
    "FAMILIES",
    "get_family",
    "band_graph",
    "PartitionTable",
    "ChainStepper",
    "TransferSystem",
    "build_system",
    "seed_products",
    "initial_conditions",
    "Checkpoint",
    "run",
    "cached_system",
]

LABELS = ("L0", "L1", "L2", "R0", "R1", "R2")
PSI = VertexPartition([range(6)])
_Y = 6  # the fresh vertex during a chain step

# chain-step model: after deleting the two chain edges, vertex 0 is isolated
# and gets dropped, so model vertices 1..6 become 0..5; map them to new labels
_AFTER_STEP = {0: 0, 1: 1, 5: 2, 2: 3, 3: 4, 4: 5}
CHOICES = ("AA", "UA", "AU", "UU")  # per chain edge: Assigned (deleted) / Used


def normalize(P: VertexPartition) -> VertexPartition:
    return PSI if len(P) == 1 else P


def band_graph(lo: int, hi: int, jumps: Sequence[int]) -> Graph:
    """Vertices lo..hi (renamed 0..hi-lo) with edges v -- v+j for each jump j."""
    n = hi - lo + 1
    edges = [(v, v + j) for j in jumps for v in range(n) if v + j < n]
    return Graph(n, tuple(edges))


@dataclass(frozen=True)
class Family:
    """A recursively constructible family, seen through its chain graphs.

    ``chain_graph(n)`` is the band graph on which the seed products live for
    parameter n; ``boundary(n)`` maps the six labels to its vertices. The
    recurrence vector at step k describes n = n_initial + k and values are
    emitted from n_first on.
    """

    name: str
    jumps: tuple[int, int]
    x_label: int
    n_initial: int
    n_first: int
    first_vertex: int
    last_offset: int
    seed_fn: Callable[[int], list]
    description: str = ""

    def chain_graph(self, n: int) -> Graph:
        if n < self.n_initial:
            raise PreconditionError(f"{self.name}: chain graph needs n >= {self.n_initial}")
        return band_graph(self.first_vertex, n - self.last_offset, self.jumps)

    def boundary(self, n: int) -> dict[int, int]:
        last = n - self.last_offset - self.first_vertex
        return {0: 0, 1: 1, 2: 2, 3: last - 2, 4: last - 1, 5: last}

    def minimal_graph(self) -> Graph:
        return self.chain_graph(self.n_initial)

    def seeds(self, p: int) -> list[tuple[tuple[VertexPartition, ...], int]]:
        return self.seed_fn(p)


def _c13_seeds(p: int):
    phi = VertexPartition([[0], [2, 3], [5]])
    state = tuple([phi] * (p - 1) + [PSI] * (p - 1))
    return [(state, 1)]


def _c23_seeds(p: int):
    A = VertexPartition([[1, 4], [5], [0]])
    B = VertexPartition([[0, 5], [1, 4]])
    C = VertexPartition([[4, 5], [0, 1]])
    out = []
    for k in range(p):
        w = comb(p - 1, k) * (-1) ** k % p
        out.append((tuple([A] * (p - 1) + [B] * (p - 1 - k) + [C] * k), w))
    return out


FAMILIES = {
    "C13": Family("C13", (1, 3), 1, 8, 9, 2, 2, _c13_seeds,
                  "decompleted C_n(1,3) with vertices 1 and n-1 removed: band (1,3) on 2..n-2"),
    "C23": Family("C23", (2, 3), 2, 6, 7, 1, 1, _c23_seeds,
                  "decompleted C_n(2,3) without its three cap edges: band (2,3) on 1..n-1"),
}


def get_family(name: str) -> Family:
    key = name.upper()
    if key not in FAMILIES:
        raise PreconditionError(f"unknown family {name!r} (known: {', '.join(FAMILIES)})")
    return FAMILIES[key]


def seed_products(family: Family | str, p: int) -> list[tuple[tuple[VertexPartition, ...], int]]:
    """Seed states with their weights mod p; c2 = -(weighted sum of seed coefficients)."""
    fam = get_family(family) if isinstance(family, str) else family
    return fam.seeds(p)


class PartitionTable:
    """Interns partitions as small integers."""

    def __init__(self):
        self.parts: list[VertexPartition] = []
        self.index: dict[VertexPartition, int] = {}

    def id(self, P: VertexPartition) -> int:
        P = normalize(P)
        i = self.index.get(P)
        if i is None:
            i = self.index[P] = len(self.parts)
            self.parts.append(P)
        return i

    def __getitem__(self, i: int) -> VertexPartition:
        return self.parts[i]

    def __len__(self) -> int:
        return len(self.parts)


def _model_graph(x: int) -> tuple[Graph, tuple[int, int]]:
    # L0 = 0 with its chain edges (0, x), (0, y); a path keeps 1..6 from isolating
    edges = [(0, x), (0, _Y)] + [(v, v + 1) for v in range(1, _Y)]
    return Graph(_Y + 1, tuple(edges)), (0, 1)


def local_outcomes(P: VertexPartition, x: int) -> dict[str, dict[VertexPartition, int]]:
    """For each choice, the partitions (already relabelled one step down) produced from factor P."""
    H, (e1, e2) = _model_graph(x)
    S = {e1, e2}
    assigned = {"AA": {e1, e2}, "UA": {e2}, "AU": {e1}, "UU": set()}
    out = {}
    for ch in CHOICES:
        fs = assign_edges(P, H, S, assigned[ch])
        acc: dict[VertexPartition, int] = {}
        for t in fs:
            Q = normalize(canonicalize(t.partition, _AFTER_STEP))
            acc[Q] = acc.get(Q, 0) + t.coef
        out[ch] = {Q: c for Q, c in acc.items() if c}
    return out


_DELTA = {"AA": (1, 1), "UA": (0, 1), "AU": (1, 0), "UU": (0, 0)}


def _multiset_coef(items: Sequence[int]) -> int:
    c = factorial(len(items))
    for k in Counter(items).values():
        c //= factorial(k)
    return c


class ChainStepper:
    """Computes rows of the recurrence matrix; caches per-factor work."""

    def __init__(self, family: Family, p: int, table: PartitionTable | None = None):
        self.family = family
        self.p = p
        self.table = table or PartitionTable()
        self._local: dict[int, list[tuple[int, int, list[tuple[int, int]]]]] = {}
        self._group: dict[tuple[int, int], list[tuple[int, int, tuple[int, ...], int]]] = {}

    def local(self, pid: int):
        """[(assigned e1, assigned e2, [(out pid, coef)])] for the four choices."""
        res = self._local.get(pid)
        if res is None:
            outs = local_outcomes(self.table[pid], self.family.x_label)
            res = []
            for ch in CHOICES:
                lst = sorted((self.table.id(Q), c) for Q, c in outs[ch].items())
                if lst:
                    res.append((*_DELTA[ch], lst))
            self._local[pid] = res
        return res

    def group(self, pid: int, m: int):
        """All ways to resolve m identical copies of factor ``pid``.

        Returns [(assigned e1, assigned e2, sorted output ids, integer coef)],
        the sum over ordered choices collapsed to multisets.
        """
        key = (pid, m)
        res = self._group.get(key)
        if res is not None:
            return res
        acc: dict[tuple[int, int, tuple[int, ...]], int] = {}
        opts = []  # one entry per (choice, output)
        for d1, d2, lst in self.local(pid):
            for q, c in lst:
                opts.append((d1, d2, q, c))
        for pick in combinations_with_replacement(range(len(opts)), m):
            a1 = sum(opts[i][0] for i in pick)
            a2 = sum(opts[i][1] for i in pick)
            if a1 > self.p - 1 or a2 > self.p - 1:
                continue
            c = _multiset_coef(pick)
            for i in pick:
                c *= opts[i][3]
            outs = tuple(sorted(opts[i][2] for i in pick))
            k = (a1, a2, outs)
            acc[k] = acc.get(k, 0) + c
        res = [(a1, a2, outs, c) for (a1, a2, outs), c in acc.items()]
        self._group[key] = res
        return res

    def step(self, state: tuple[int, ...]) -> dict[tuple[int, ...], int]:
        """Row of ``state``: shorter-chain states with integer coefficients.

        Entries that vanish mod p are kept so that discovery matches the
        purely combinatorial reachability of states.
        """
        top = self.p - 1
        groups = sorted(Counter(state).items())
        dp: dict[tuple[int, int, tuple[int, ...]], int] = {(0, 0, ()): 1}
        remaining = len(state)
        for pid, m in groups:
            remaining -= m
            nd: dict[tuple[int, int, tuple[int, ...]], int] = {}
            for (a1, a2, acc), c in dp.items():
                for d1, d2, outs, gc in self.group(pid, m):
                    n1, n2 = a1 + d1, a2 + d2
                    if n1 > top or n2 > top or n1 + remaining < top or n2 + remaining < top:
                        continue
                    key = (n1, n2, tuple(sorted(acc + outs)))
                    nd[key] = nd.get(key, 0) + c * gc
            dp = nd
        row: dict[tuple[int, ...], int] = {}
        for (a1, a2, acc), c in dp.items():
            if a1 == top and a2 == top and c:
                row[acc] = row.get(acc, 0) + c
        return row


def _state_key(table: PartitionTable, state: tuple[int, ...]):
    return tuple(sorted(table[i].blocks for i in state))


@dataclass
class TransferSystem:
    """States, the sparse recurrence matrix over F_p, initial vector and output functional.

    ``v_{k+1} = A v_k``; ``v_k`` describes n = n_initial + k and the c2 value
    there is ``w . v_k`` (w already carries the sign).
    """

    family: str
    p: int
    states: list[tuple[VertexPartition, ...]]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    v0: np.ndarray
    w_idx: np.ndarray
    w_val: np.ndarray
    n_initial: int
    n_first: int
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.states)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.family}:{self.p}:{self.N}".encode())
        for arr in (self.indptr, self.indices, self.data, self.v0, self.w_idx, self.w_val):
            h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
        return h.hexdigest()

    def matrix(self):
        from scipy.sparse import csr_matrix

        return csr_matrix((self.data, self.indices, self.indptr), shape=(self.N, self.N))

    def iterate(self, v: np.ndarray, steps: int):
        """(emitted values before each step, vector after ``steps`` steps)."""
        return kernels.iterate(self.indptr, self.indices, self.data, v, self.w_idx, self.w_val, self.p, steps)

    def vector_at(self, k: int) -> np.ndarray:
        _, v = self.iterate(self.v0, k)
        return v

    def sequence(self, count: int, start_n: int | None = None) -> list[int]:
        """c2 values for n = start_n, start_n + 1, ... (default: n_first)."""
        start = self.n_first if start_n is None else start_n
        if start < self.n_initial:
            raise PreconditionError(f"sequence starts at n >= {self.n_initial}")
        skip = start - self.n_initial
        v = self.vector_at(skip) if skip else self.v0
        out, _ = self.iterate(v, count)
        return [int(x) for x in out]

    def save(self, path) -> None:
        blocks = json.dumps([[list(map(list, P.blocks)) for P in s] for s in self.states])
        meta = json.dumps({"family": self.family, "p": self.p, "n_initial": self.n_initial,
                           "n_first": self.n_first, **self.meta})
        np.savez_compressed(path, indptr=self.indptr, indices=self.indices, data=self.data, v0=self.v0,
                            w_idx=self.w_idx, w_val=self.w_val, states=np.array(blocks), meta=np.array(meta))

    @classmethod
    def load(cls, path) -> "TransferSystem":
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            states = [tuple(VertexPartition(b) for b in s) for s in json.loads(str(z["states"]))]
            fam, p = meta.pop("family"), meta.pop("p")
            n_initial, n_first = meta.pop("n_initial"), meta.pop("n_first")
            return cls(fam, p, states, z["indptr"], z["indices"], z["data"], z["v0"], z["w_idx"],
                       z["w_val"], n_initial, n_first, meta)

    def export_triplets(self, fh) -> None:
        """Sparse text export: header ``N nnz p`` then ``row col value`` lines."""
        fh.write(f"{self.N} {self.nnz} {self.p}\n")
        for r in range(self.N):
            for j in range(self.indptr[r], self.indptr[r + 1]):
                fh.write(f"{r} {self.indices[j]} {self.data[j]}\n")


def initial_conditions(family: Family | str, p: int, states: Iterable[tuple[VertexPartition, ...]]) -> np.ndarray:
    """Coefficient of prod a_e^{p-1} in each product, on the family's smallest chain graph.

    Each factor is the list of monomials (forest complements) of its forest
    polynomial there. Products are formed on a dense exponent grid capped at
    p-1 per edge; states sharing a prefix of factors share the partial product.
    """
    fam = get_family(family) if isinstance(family, str) else family
    g = fam.minimal_graph()
    bmap = fam.boundary(fam.n_initial)
    m = g.num_edges
    cache: dict[VertexPartition, list[int]] = {}

    def monomials(P: VertexPartition) -> list[int]:
        if P not in cache:
            Q = place_partition(P, bmap)
            cache[P] = [] if Q is None else sorted(forest_poly(g, Q).terms)
        return cache[P]

    shape = (p,) * m
    base = np.zeros(shape, dtype=np.int64)
    base[(0,) * m] = 1
    slices = {}

    def times(arr: np.ndarray, masks: list[int]) -> np.ndarray:
        out = np.zeros_like(arr)
        for mask in masks:
            if mask not in slices:
                src = tuple(slice(0, p - 1) if mask >> i & 1 else slice(None) for i in range(m))
                dst = tuple(slice(1, p) if mask >> i & 1 else slice(None) for i in range(m))
                slices[mask] = (src, dst)
            src, dst = slices[mask]
            out[dst] += arr[src]
        out %= p
        return out

    top = (p - 1,) * m
    out = []
    stack: list[tuple[VertexPartition, np.ndarray]] = []
    for st in states:
        depth = 0
        while depth < len(stack) and depth < len(st) and stack[depth][0] == st[depth]:
            depth += 1
        del stack[depth:]
        arr = stack[-1][1] if stack else base
        for P in st[depth:]:
            arr = times(arr, monomials(P))
            stack.append((P, arr))
        out.append(int(arr[top]) % p)
    return np.array(out, dtype=np.int64)


def place_partition(P: VertexPartition, bmap: dict[int, int]) -> VertexPartition | None:
    """Move a label partition onto graph vertices; None if two blocks collide on one vertex."""
    blocks = [{bmap[v] for v in b} for b in P.blocks]
    seen: set[int] = set()
    for b in blocks:
        if seen & b:
            return None
        seen |= b
    return VertexPartition(blocks)


def build_system(family: Family | str, p: int, *, shuffle_seed: int | None = None,
                 progress: Callable[[int, int], None] | None = None) -> TransferSystem:
    """Worklist discovery of all states reachable from the seeds, then freeze.

    States are renumbered in a canonical order, so the result does not depend
    on the order in which the worklist was processed (``shuffle_seed``
    randomizes it, for testing).
    """
    fam = get_family(family) if isinstance(family, str) else family
    if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
        raise PreconditionError(f"p = {p} is not prime")
    stepper = ChainStepper(fam, p)
    tab = stepper.table
    seeds = [(tuple(sorted(tab.id(P) for P in st)), w) for st, w in fam.seeds(p)]
    index: dict[tuple[int, ...], int] = {}
    order: list[tuple[int, ...]] = []
    rows: dict[tuple[int, ...], dict[tuple[int, ...], int]] = {}
    pending = []
    for s, _ in seeds:
        if s not in index:
            index[s] = len(order)
            order.append(s)
            pending.append(s)
    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    while pending:
        if rng is not None:
            s = pending.pop(rng.randrange(len(pending)))
        else:
            s = pending.pop(0) if len(pending) < 64 else pending.pop()
        row = stepper.step(s)
        rows[s] = row
        for t in row:
            if t not in index:
                index[t] = len(order)
                order.append(t)
                pending.append(t)
        if progress is not None:
            progress(len(rows), len(order))
    canon = sorted(order, key=lambda s: _state_key(tab, s))
    pos = {s: i for i, s in enumerate(canon)}
    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for s in canon:
        entries = sorted((pos[t], c % p) for t, c in rows[s].items() if c % p)
        indices.extend(i for i, _ in entries)
        data.extend(c for _, c in entries)
        indptr.append(len(indices))
    states = [tuple(sorted((tab[i] for i in s), key=lambda P: P.blocks)) for s in canon]
    v0 = initial_conditions(fam, p, states)
    w: dict[int, int] = {}
    for s, wt in seeds:
        w[pos[s]] = (w.get(pos[s], 0) - wt) % p
    w_items = sorted((i, c) for i, c in w.items() if c)
    return TransferSystem(
        fam.name, p, states,
        np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int64), np.array(data, dtype=np.int64),
        v0, np.array([i for i, _ in w_items], dtype=np.int64), np.array([c for _, c in w_items], dtype=np.int64),
        fam.n_initial, fam.n_first, {"partitions": len(tab)},
    )


# -- checkpointing -----------------------------------------------------------

_MAGIC = b"C2CK"
_VERSION = 1
_HEAD = struct.Struct("<4sH8sIQQ32s")  # magic, version, family, p, N, iteration, system digest


@dataclass
class Checkpoint:
    """Binary layout (little endian): header ``magic, version, family[8], p, N,
    iteration, system sha256``; then N vector entries (uint8 if p < 256, else
    int64); then the emitted-sequence length (uint64) and one byte per value;
    finally the sha256 of everything before it."""

    family: str
    p: int
    N: int
    iteration: int
    system_digest: str
    vector: np.ndarray
    sequence: list[int]

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_HEAD.pack(_MAGIC, _VERSION, self.family.encode()[:8].ljust(8, b"\0"), self.p, self.N,
                             self.iteration, bytes.fromhex(self.system_digest)))
        dt = np.uint8 if self.p < 256 else np.int64
        buf.write(np.asarray(self.vector, dtype=dt).tobytes())
        buf.write(struct.pack("<Q", len(self.sequence)))
        buf.write(np.asarray(self.sequence, dtype=np.uint8 if self.p < 256 else np.int64).tobytes())
        body = buf.getvalue()
        return body + hashlib.sha256(body).digest()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Checkpoint":
        if len(raw) < _HEAD.size + 8 + 32:
            raise CheckpointError("checkpoint truncated")
        body, digest = raw[:-32], raw[-32:]
        if hashlib.sha256(body).digest() != digest:
            raise CheckpointError("checkpoint checksum mismatch")
        magic, version, fam, p, N, it, sysd = _HEAD.unpack_from(body, 0)
        if magic != _MAGIC:
            raise CheckpointError("not a checkpoint file (bad magic)")
        if version != _VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        dt = np.uint8 if p < 256 else np.int64
        off = _HEAD.size
        width = np.dtype(dt).itemsize
        vec = np.frombuffer(body, dtype=dt, count=N, offset=off).astype(np.int64)
        off += N * width
        (L,) = struct.unpack_from("<Q", body, off)
        off += 8
        seq = np.frombuffer(body, dtype=dt, count=L, offset=off).astype(np.int64).tolist()
        if off + L * width != len(body):
            raise CheckpointError("checkpoint length mismatch")
        return cls(fam.rstrip(b"\0").decode(), p, N, it, sysd.hex(), vec, seq)

    def save(self, path) -> None:
        tmp = f"{path}.tmp"
        with open(tmp, "wb") as fh:
            fh.write(self.to_bytes())
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        try:
            with open(path, "rb") as fh:
                return cls.from_bytes(fh.read())
        except OSError as exc:
            raise CheckpointError(f"cannot read checkpoint: {exc}") from exc

    def sequence_hash(self) -> str:
        return hashlib.sha256(bytes(self.sequence) if self.p < 256 else str(self.sequence).encode()).hexdigest()


def run(system: TransferSystem, max_steps: int, *, checkpoint_path=None, checkpoint_every: int = 0,
        resume: Checkpoint | None = None, chunk: int = 4096) -> Iterator[tuple[int, int]]:
    """Yield ``(n, c2)`` for n = n_first, n_first + 1, ... up to ``max_steps`` values in total.

    With ``resume`` the values already recorded in the checkpoint are not
    repeated; iteration continues from its stored vector.
    """
    digest = system.digest()
    skip = system.n_first - system.n_initial
    if resume is not None:
        if (resume.family, resume.p, resume.N, resume.system_digest) != (system.family, system.p, system.N, digest):
            raise CheckpointError("checkpoint belongs to a different system")
        v = resume.vector.copy()
        seq = list(resume.sequence)
        it = resume.iteration
    else:
        v = system.vector_at(skip) if skip else system.v0.copy()
        seq = []
        it = skip
    last_saved = len(seq)

    def save():
        if checkpoint_path is not None:
            Checkpoint(system.family, system.p, system.N, it, digest, v, seq).save(checkpoint_path)

    while len(seq) < max_steps:
        todo = max_steps - len(seq)
        if checkpoint_every:
            todo = min(todo, checkpoint_every - (len(seq) - last_saved))
        todo = min(todo, chunk)
        out, v = system.iterate(v, todo)
        for val in out:
            n = system.n_initial + it
            seq.append(int(val))
            it += 1
            yield n, int(val)
        if checkpoint_every and len(seq) - last_saved >= checkpoint_every:
            save()
            last_saved = len(seq)
    save()


_MEMO: dict[tuple[str, int], TransferSystem] = {}


def cached_system(family: str, p: int, cache_dir=None) -> TransferSystem:
    """build_system with an in-process memo and an optional on-disk ``.npz`` cache.

    ``cache_dir`` defaults to ``$C2INV_CACHE`` when that is set.
    """
    fam = get_family(family).name
    key = (fam, p)
    if key in _MEMO:
        return _MEMO[key]
    cache_dir = cache_dir or os.environ.get("C2INV_CACHE")
    path = os.path.join(cache_dir, f"{fam}_p{p}.npz") if cache_dir else None
    system = None
    if path and os.path.exists(path):
        system = TransferSystem.load(path)
    if system is None:
        system = build_system(fam, p)
        if path:
            os.makedirs(cache_dir, exist_ok=True)
            system.save(path)
    _MEMO[key] = system
    return system
