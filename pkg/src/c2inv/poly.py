"""Multilinear polynomials over F_p and the brute-force c2 oracles.

Variables are edge indices. A monomial is stored as a bitmask over the
variables, so multilinearity is structural.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import OracleRangeError, PreconditionError, VerificationError
from .graph import Graph, is_connected, reduced_incidence, spanning_trees

__all__ = [
    "OracleConfig",
    "DEFAULT_CONFIG",
    "MultilinearPoly",
    "ExpandedLaplacian",
    "kirchhoff",
    "dodgson",
    "point_count",
    "c2_direct",
    "c2_lemma3",
    "c2_cw",
    "lemma3_polys",
    "cw_coefficient",
    "default_triple",
    "top_coefficient",
    "dodgson_coefficient",
]


@dataclass(frozen=True)
class OracleConfig:
    """Brute-force ceilings. ``max_points`` bounds evaluations in point_count;
    ``max_cw_states`` bounds p**N for the truncated-power coefficient."""

    max_points: int = 2**34
    max_cw_states: int = 2**22
    chunk_points: int = 2**24


DEFAULT_CONFIG = OracleConfig()


class MultilinearPoly:
    """Sparse multilinear polynomial; ``p=None`` means integer coefficients."""

    __slots__ = ("nvars", "p", "terms")

    def __init__(self, nvars: int, terms: Mapping[int, int] | None = None, p: int | None = None):
        self.nvars = int(nvars)
        self.p = p
        clean: dict[int, int] = {}
        limit = 1 << self.nvars
        for mask, c in (terms or {}).items():
            if not 0 <= mask < limit:
                raise PreconditionError(f"monomial {mask:b} uses a variable >= {self.nvars}")
            c = int(c) % p if p else int(c)
            if c:
                clean[mask] = c
        self.terms = clean

    @classmethod
    def from_monomials(cls, nvars: int, masks: Iterable[int], p: int | None = None) -> "MultilinearPoly":
        acc: dict[int, int] = {}
        for m in masks:
            acc[m] = acc.get(m, 0) + 1
        return cls(nvars, acc, p)

    @classmethod
    def from_sets(cls, nvars: int, monomials: Mapping[Iterable[int], int], p: int | None = None) -> "MultilinearPoly":
        return cls(nvars, {sum(1 << v for v in vs): c for vs, c in monomials.items()}, p)

    def reduce(self, p: int) -> "MultilinearPoly":
        return MultilinearPoly(self.nvars, self.terms, p)

    def __repr__(self) -> str:
        if not self.terms:
            return f"MultilinearPoly(0, nvars={self.nvars}, p={self.p})"
        parts = []
        for mask in sorted(self.terms):
            vs = [f"a{i}" for i in range(self.nvars) if mask >> i & 1]
            parts.append(f"{self.terms[mask]}*" + ("*".join(vs) if vs else "1"))
        return f"MultilinearPoly({' + '.join(parts)}, p={self.p})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.p == other.p and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, self.p, frozenset(self.terms.items())))

    def _check(self, other: "MultilinearPoly") -> None:
        if self.nvars != other.nvars or self.p != other.p:
            raise PreconditionError("polynomials live in different rings")

    def __add__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        self._check(other)
        acc = dict(self.terms)
        for m, c in other.terms.items():
            acc[m] = acc.get(m, 0) + c
        return MultilinearPoly(self.nvars, acc, self.p)

    def __neg__(self) -> "MultilinearPoly":
        return MultilinearPoly(self.nvars, {m: -c for m, c in self.terms.items()}, self.p)

    def __sub__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        return self + (-other)

    def scale(self, c: int) -> "MultilinearPoly":
        return MultilinearPoly(self.nvars, {m: c * v for m, v in self.terms.items()}, self.p)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((m.bit_count() for m in self.terms), default=-1)

    def support(self) -> int:
        """Bitmask of variables that actually occur."""
        s = 0
        for m in self.terms:
            s |= m
        return s

    def evaluate(self, point: Sequence[int]) -> int:
        total = 0
        for mask, c in self.terms.items():
            t = c
            for i in range(self.nvars):
                if mask >> i & 1:
                    t *= point[i]
                    if not t:
                        break
            total += t
        return total % self.p if self.p else total

    def equals_up_to_sign(self, other: "MultilinearPoly") -> bool:
        return self == other or self == -other

    def relabel(self, perm: Sequence[int], nvars: int | None = None) -> "MultilinearPoly":
        """Rename variable ``i`` to ``perm[i]``."""
        nv = self.nvars if nvars is None else nvars
        out = {}
        for mask, c in self.terms.items():
            nm = 0
            for i in range(self.nvars):
                if mask >> i & 1:
                    nm |= 1 << perm[i]
            out[nm] = c
        return MultilinearPoly(nv, out, self.p)

    def compress(self, keep: Sequence[int]) -> "MultilinearPoly":
        """Restrict to the variables ``keep`` (renamed 0..len-1 in that order).

        Every monomial must avoid the dropped variables.
        """
        pos = {v: i for i, v in enumerate(keep)}
        out = {}
        for mask, c in self.terms.items():
            nm = 0
            for i in range(self.nvars):
                if mask >> i & 1:
                    if i not in pos:
                        raise PreconditionError(f"variable {i} occurs but is being dropped")
                    nm |= 1 << pos[i]
            out[nm] = c
        return MultilinearPoly(len(keep), out, self.p)

    def dense(self) -> np.ndarray:
        """Coefficient array of length 2**nvars (entries reduced mod p)."""
        arr = np.zeros(1 << self.nvars, dtype=np.int64)
        for m, c in self.terms.items():
            arr[m] = c
        if self.p:
            arr %= self.p
        return arr


class ExpandedLaplacian:
    """``M = [[Lambda, E^T], [-E, 0]]`` for a graph.

    Rows and columns run over the edges in index order, then the vertices in
    ascending order with the highest-labelled vertex dropped from ``E``.
    """

    def __init__(self, g: Graph):
        if g.n < 1:
            raise PreconditionError("empty graph")
        self.graph = g
        self.m = g.num_edges
        self.E = reduced_incidence(g, g.n - 1)
        self.size = self.m + g.n - 1

    def constant_part(self) -> np.ndarray:
        """M with every edge variable set to 0."""
        M = np.zeros((self.size, self.size), dtype=np.int64)
        M[: self.m, self.m :] = self.E.T
        M[self.m :, : self.m] = -self.E
        return M

    def minor_layout(self, I: Iterable[int], J: Iterable[int]):
        """Surviving row / column indices of M(I, J)."""
        I, J = set(I), set(J)
        rows = [r for r in range(self.size) if not (r < self.m and r in I)]
        cols = [c for c in range(self.size) if not (c < self.m and c in J)]
        return rows, cols

    def evaluate(self, values: Sequence[int], I=(), J=()) -> np.ndarray:
        M = self.constant_part()
        for e in range(self.m):
            M[e, e] = values[e]
        rows, cols = self.minor_layout(I, J)
        return M[np.ix_(rows, cols)]


def kirchhoff(g: Graph, p: int | None = None) -> MultilinearPoly:
    """Dual Kirchhoff polynomial: one monomial (the non-tree edges) per spanning tree."""
    if g.n < 1 or not is_connected(g):
        raise PreconditionError("kirchhoff polynomial needs a connected graph")
    full = (1 << g.num_edges) - 1
    masks = []
    for tree in spanning_trees(g):
        mask = full
        for e in tree:
            mask &= ~(1 << e)
        masks.append(mask)
    return MultilinearPoly.from_monomials(g.num_edges, masks, p)


def _exact_dets(batch: np.ndarray) -> np.ndarray:
    """Integer determinants of a stack of small integer matrices."""
    if batch.shape[-1] == 0:
        return np.ones(batch.shape[0], dtype=np.int64)
    d = np.linalg.det(batch.astype(np.float64))
    r = np.rint(d)
    if np.max(np.abs(d - r), initial=0.0) > 1e-6 or np.max(np.abs(r), initial=0.0) > 2**50:
        return np.array([_bareiss(m) for m in batch], dtype=object)
    return r.astype(np.int64)


def _bareiss(mat) -> int:
    a = [[int(x) for x in row] for row in mat]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


def dodgson(g: Graph, I: Iterable[int], J: Iterable[int], K: Iterable[int] = (), p: int | None = None,
            batch: int = 4096) -> MultilinearPoly:
    """``Psi^{I,J}_{g,K}``: det of M with edge-rows I and edge-columns J removed, a_K = 0.

    Evaluates the determinant on every 0/1 assignment of the free variables and
    Moebius-inverts over the subset lattice (each variable sits in exactly one
    entry, so the determinant is multilinear). Variables are the edge indices
    of ``g``; edges in ``I | J | K`` simply do not occur.
    """
    I, J, K = set(I), set(J), set(K)
    if len(I) != len(J):
        raise PreconditionError(f"|I| = {len(I)} differs from |J| = {len(J)}")
    for e in I | J | K:
        if not 0 <= e < g.num_edges:
            raise PreconditionError(f"edge index {e} out of range")
    L = ExpandedLaplacian(g)
    rows, cols = L.minor_layout(I, J)
    base = L.constant_part()[np.ix_(rows, cols)]
    free = [e for e in range(L.m) if e not in I | J | K]
    rpos = {r: i for i, r in enumerate(rows)}
    cpos = {c: i for i, c in enumerate(cols)}
    diag = [(rpos[e], cpos[e]) for e in free]
    k = len(free)
    values = np.empty(1 << k, dtype=object if k > 0 else np.int64)
    masks = np.arange(1 << k, dtype=np.int64)
    for start in range(0, 1 << k, batch):
        sub = masks[start : start + batch]
        stack = np.broadcast_to(base, (len(sub),) + base.shape).copy()
        for bit, (r, c) in enumerate(diag):
            stack[:, r, c] = (sub >> bit) & 1
        values[start : start + len(sub)] = _exact_dets(stack)
    coef = [int(x) for x in values]
    # Moebius inversion over subsets: coef[S] = sum_{T<=S} (-1)^{|S-T|} value[T]
    for bit in range(k):
        step = 1 << bit
        for S in range(1 << k):
            if S & step:
                coef[S] -= coef[S ^ step]
    terms = {}
    for S, c in enumerate(coef):
        if c:
            mask = 0
            for bit in range(k):
                if S >> bit & 1:
                    mask |= 1 << free[bit]
            terms[mask] = c
    return MultilinearPoly(L.m, terms, p)


def dodgson_coefficient(g: Graph, I: Iterable[int], J: Iterable[int], K: Iterable[int], S: Iterable[int]) -> int:
    """Integer coefficient of ``prod_{e in S} a_e`` in ``Psi^{I,J}_{g,K}``.

    Cofactor expansion along the entries holding ``a_e`` (e in S), then one
    exact determinant with every other variable set to 0.
    """
    I, J, K, S = set(I), set(J), set(K), sorted(set(S))
    if len(I) != len(J):
        raise PreconditionError(f"|I| = {len(I)} differs from |J| = {len(J)}")
    if set(S) & (I | J | K):
        return 0
    L = ExpandedLaplacian(g)
    rows, cols = L.minor_layout(I, J)
    sign = 1
    for e in S:
        r, c = rows.index(e), cols.index(e)
        if (r + c) % 2:
            sign = -sign
        del rows[r]
        del cols[c]
    M = L.constant_part()[np.ix_(rows, cols)]
    return sign * _bareiss(M)


def _outer_expand(arr: np.ndarray, p: int) -> np.ndarray:
    """Evaluate the row-index variables of a (2**r, cols) coefficient array on F_p^r."""
    rows, cols = arr.shape
    r = rows.bit_length() - 1
    post = 1
    a = arr % p
    for _ in range(r):
        pre = a.shape[0] // (2 * post)
        v = a.reshape(pre, 2, post, cols)
        out = np.empty((pre, p, post, cols), dtype=np.int64)
        for t in range(p):
            out[:, t] = (v[:, 0] + t * v[:, 1]) % p
        a = out.reshape(-1, cols)
        post *= p
    return a


def point_count(*polys: MultilinearPoly, config: OracleConfig = DEFAULT_CONFIG) -> int:
    """Number of points of F_p^nvars where the product of ``polys`` vanishes.

    A single polynomial is split as ``A*x + B`` in its last variable so only
    p**(nvars-1) evaluations are needed.
    """
    if not polys:
        raise PreconditionError("point_count needs at least one polynomial")
    p, nv = polys[0].p, polys[0].nvars
    for f in polys:
        if f.p != p or f.nvars != nv:
            raise PreconditionError("polynomials live in different rings")
    if not p:
        raise PreconditionError("point counting needs coefficients in F_p")
    if p ** nv > config.max_points:
        raise OracleRangeError(f"oracle out of range: {p}^{nv} points exceed ceiling {config.max_points}")
    if nv == 0:
        return int(any(f.terms.get(0, 0) % p == 0 for f in polys))
    if len(polys) == 1:
        arr = polys[0].dense().reshape(2, -1)  # top variable on axis 0
        rows = [arr[1], arr[0]]
        mode, k = 1, nv - 1
    else:
        rows = [f.dense() for f in polys]
        mode, k = 0, nv
    inner = k
    while inner > 0 and p ** inner > config.chunk_points:
        inner -= 1
    outer = k - inner
    expanded = [_outer_expand(r.reshape(1 << outer, 1 << inner), p) for r in rows]
    total = 0
    for idx in range(p ** outer):
        chunk = np.stack([e[idx] for e in expanded]).astype(np.uint8 if p * (p - 1) < 256 else np.int64)
        total += kernels.count_chunk(chunk, p, mode)
    return total


def point_count_naive(*polys: MultilinearPoly) -> int:
    """Direct evaluation at every point; small inputs only (test oracle)."""
    p, nv = polys[0].p, polys[0].nvars
    count = 0
    for x in product(range(p), repeat=nv):
        v = 1
        for f in polys:
            v = v * f.evaluate(x) % p
        count += v == 0
    return count


def c2_direct(g: Graph, p: int, config: OracleConfig = DEFAULT_CONFIG, *, return_count: bool = False):
    """``[Psi_g]_p / p^2 mod p`` from the definition."""
    if g.n < 3:
        raise PreconditionError("c2 is defined for graphs with at least 3 vertices")
    if not is_connected(g):
        raise PreconditionError("c2 oracle needs a connected graph")
    # check before building Psi: the tree enumeration alone can be huge
    if p ** max(g.num_edges - 1, 0) > config.max_points:
        raise OracleRangeError(f"oracle out of range: {p}^{g.num_edges - 1} points exceed ceiling {config.max_points}")
    count = point_count(kirchhoff(g, p), config=config)
    if count % (p * p):
        raise VerificationError(f"[Psi]_{p} = {count} is not divisible by {p}^2")
    value = (count // (p * p)) % p
    return (value, count) if return_count else value


def default_triple(g: Graph) -> tuple[int, int, int]:
    """Three distinct edges for the Dodgson route: those at a 3-valent vertex if any."""
    for v in range(g.n):
        inc = g.incident(v)
        if len(inc) == 3 and all(g.edges[e][0] != g.edges[e][1] for e in inc):
            return tuple(inc)  # type: ignore[return-value]
    if g.num_edges < 3:
        raise PreconditionError("need at least three edges")
    return (0, 1, 2)


def lemma3_polys(g: Graph, p: int, i: int, j: int, k: int):
    """``Psi^{ik,jk}_g`` and ``Psi^{i,j}_{g,k}`` over the variables E - {i,j,k}."""
    if len({i, j, k}) != 3:
        raise PreconditionError("i, j, k must be distinct edges")
    if 2 + g.num_edges > 2 * g.n:
        raise PreconditionError(f"hypothesis 2 + |E| <= 2|V| fails ({2 + g.num_edges} > {2 * g.n})")
    keep = [e for e in range(g.num_edges) if e not in (i, j, k)]
    f = dodgson(g, {i, k}, {j, k}, (), p).compress(keep)
    h = dodgson(g, {i}, {j}, {k}, p).compress(keep)
    return f, h


def c2_lemma3(g: Graph, p: int, i: int | None = None, j: int | None = None, k: int | None = None,
              config: OracleConfig = DEFAULT_CONFIG, *, return_count: bool = False):
    """``-[Psi^{ik,jk} Psi^{i,j}_k]_p mod p``."""
    if i is None:
        i, j, k = default_triple(g)
    if p ** max(g.num_edges - 3, 0) > config.max_points:
        raise OracleRangeError(f"oracle out of range: {p}^{g.num_edges - 3} points")
    f, h = lemma3_polys(g, p, i, j, k)
    count = point_count(f, h, config=config)
    value = (-count) % p
    return (value, count) if return_count else value


def top_coefficient(factors: Sequence[MultilinearPoly], p: int) -> int:
    """Coefficient of ``prod_i x_i^{p-1}`` in the product of ``factors`` mod p.

    Truncated multiplication: exponent vectors are kept as level bitmasks
    (``levels[l]`` = variables with exponent ``l+1``) and any term pushing an
    exponent past ``p-1`` is dropped on the spot.
    """
    if not factors:
        return 0
    nv = factors[0].nvars
    top = p - 1
    full = (1 << nv) - 1
    target = (0,) * (top - 1) + (full,)
    state: dict[tuple[int, ...], int] = {(0,) * top: 1}
    for f in factors:
        nxt: dict[tuple[int, ...], int] = {}
        for lv, c in state.items():
            used = 0
            for level in lv:
                used |= level
            for mask, fc in f.terms.items():
                if mask & lv[top - 1]:
                    continue
                new = list(lv)
                for level in range(top - 1, 0, -1):
                    moved = new[level - 1] & mask
                    new[level] |= moved
                    new[level - 1] &= ~moved
                new[0] |= mask & ~used
                key = tuple(new)
                nxt[key] = (nxt.get(key, 0) + c * fc) % p
        state = {k: v for k, v in nxt.items() if v}
        if not state:
            return 0
    return state.get(target, 0) % p


def cw_coefficient(f: MultilinearPoly | Sequence[MultilinearPoly], p: int | None = None,
                   config: OracleConfig = DEFAULT_CONFIG) -> int:
    """Coefficient of ``x_1^{p-1}...x_N^{p-1}`` in ``F^{p-1}``, ``F`` the product of the factors.

    ``F`` must have total degree at most N = number of variables. Then
    ``[F]_p = (-1)^(N+1) * coefficient (mod p)``.
    """
    factors = [f] if isinstance(f, MultilinearPoly) else list(f)
    if not factors:
        raise PreconditionError("need at least one factor")
    p = p or factors[0].p
    nv = factors[0].nvars
    if any(h.nvars != nv for h in factors):
        raise PreconditionError("factors live in different rings")
    deg = sum(max(h.degree(), 0) for h in factors)
    if deg > nv:
        raise PreconditionError(f"total degree {deg} exceeds variable count {nv}")
    if p ** nv > config.max_cw_states:
        raise OracleRangeError(f"oracle out of range: truncated power over {p}^{nv} exponent states")
    if nv == 0:
        c = 1
        for h in factors:
            c *= h.terms.get(0, 0)
        return pow(c, p - 1, p) if c % p else 0
    seq = [h.reduce(p) for h in factors for _ in range(p - 1)]
    return top_coefficient(seq, p)


def c2_cw(g: Graph, p: int, i: int | None = None, j: int | None = None, k: int | None = None,
          config: OracleConfig = DEFAULT_CONFIG, *, return_count: bool = False):
    """c2 from the truncated-power coefficient of the Dodgson product.

    ``c2 = -[f h]_p = (-1)^N * coefficient`` with N = |E| - 3.
    """
    if i is None:
        i, j, k = default_triple(g)
    if p ** max(g.num_edges - 3, 0) > config.max_cw_states:
        raise OracleRangeError(f"oracle out of range: truncated power over {p}^{g.num_edges - 3} exponent states")
    f, h = lemma3_polys(g, p, i, j, k)
    coef = cw_coefficient([f, h], p, config)
    n_vars = f.nvars
    value = coef % p if n_vars % 2 == 0 else (-coef) % p
    return (value, coef) if return_count else value

