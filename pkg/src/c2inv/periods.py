"""Period detection for c2 sequences and recurrence vectors, and prefix tallies."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from itertools import product
from math import lcm
from typing import Sequence

import numpy as np

from . import kernels
from .errors import PreconditionError

__all__ = [
    "PeriodConfig",
    "PeriodReport",
    "VectorPeriodResult",
    "PrefixTable",
    "smallest_period",
    "detect_c2_period",
    "longest_early_recurrence",
    "detect_vector_period",
    "certify",
    "prefix_frequencies",
    "empirical_report",
]


@dataclass(frozen=True)
class PeriodConfig:
    """Thresholds for calling a period empirical, and the snapshot cap for blockwise search.

    ``segment_guard`` is stated for an alphabet of ``guard_alphabet`` symbols;
    for values mod p it is rescaled to the same information content, since a
    chance recurrence of 7 ternary symbols is common while one of 7 base-7
    symbols is not.
    """

    min_repeats: int = 5
    segment_guard: int = 6
    guard_alphabet: int = 7
    snapshot_cap: int = 1 << 16

    def guard_for(self, p: int | None) -> int:
        if not p or p == self.guard_alphabet:
            return self.segment_guard
        return int(self.segment_guard * math.log(self.guard_alphabet) / math.log(p))


DEFAULT = PeriodConfig()


def _prefix_function(seq: Sequence) -> list[int]:
    pi = [0] * len(seq)
    k = 0
    for i in range(1, len(seq)):
        while k and seq[i] != seq[k]:
            k = pi[k - 1]
        if seq[i] == seq[k]:
            k += 1
        pi[i] = k
    return pi


def smallest_period(seq: Sequence) -> int:
    """Smallest d with seq[i] == seq[i - d] for all i >= d (the last block may be partial)."""
    if not seq:
        raise PreconditionError("empty sequence")
    return len(seq) - _prefix_function(list(seq))[-1]


def detect_c2_period(seq: Sequence[int], min_repeats: int = 2) -> tuple[int | None, int]:
    """``(d, repeats)`` for the smallest period d visible from index 0.

    Only full blocks count as repeats; fewer than ``min_repeats`` of them
    means no period was observed and ``(None, repeats)`` is returned.
    """
    d = smallest_period(seq)
    reps = len(seq) // d
    if reps < min_repeats:
        return None, reps
    return d, reps


def longest_early_recurrence(seq: Sequence[int], d: int) -> int:
    """Longest initial segment that reoccurs at some shift 0 < j < d."""
    s = list(seq)
    best = 0
    # Z-function: z[j] = length of the common prefix of s and s[j:]
    n = len(s)
    z = [0] * n
    left = right = 0
    for j in range(1, n):
        if j < right:
            z[j] = min(right - j, z[j - left])
        while j + z[j] < n and s[z[j]] == s[j + z[j]]:
            z[j] += 1
        if j + z[j] > right:
            left, right = j, j + z[j]
        if j < d:
            best = max(best, z[j])
    return best


@dataclass
class PeriodReport:
    c2_period: int | None
    status: str  # "proven" | "empirical" | "none"
    repeats: int
    vector_period: int | None = None
    transient: int = 0
    counterexample: int | None = None
    vector_lower_bound: int | None = None
    early_recurrence: int | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class VectorPeriodResult:
    period: int | None
    transient: int | None
    steps: int
    strategy: str

    @property
    def lower_bound(self) -> int | None:
        """When nothing was found: every period candidate up to this many steps was excluded."""
        return None if self.period is not None else self.steps


def _digest(v: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(v, dtype=np.int64).tobytes(), digest_size=16).digest()


def _advance(system, v: np.ndarray, steps: int) -> np.ndarray:
    if steps <= 0:
        return v
    _, out = kernels.iterate(system.indptr, system.indices, system.data, v, system.w_idx, system.w_val,
                             system.p, steps)
    return out


def _naive(system, budget: int) -> VectorPeriodResult:
    k, _ = kernels.first_return(system.indptr, system.indices, system.data, system.v0, system.v0, system.p, budget)
    if k > 0:
        return VectorPeriodResult(int(k), 0, int(k), "naive")
    return VectorPeriodResult(None, None, budget, "naive")


def _smallest_transient(system, period: int, upper: int) -> int:
    """Smallest t <= upper with v_t == v_{t + period}."""
    # once v_t = v_{t+P} it stays so for all larger t: binary search
    lo, hi = 0, upper
    while lo < hi:
        mid = (lo + hi) // 2
        vm = _advance(system, system.v0, mid)
        if np.array_equal(vm, _advance(system, vm, period)):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _blockwise(system, budget: int, block: int, cap: int) -> VectorPeriodResult:
    v = system.v0.copy()
    stride = 1  # snapshot every `stride` blocks; doubles when the cap is hit
    seen: dict[bytes, int] = {_digest(v): 0}
    k = 0
    while k + block <= budget:
        v = _advance(system, v, block)
        k += block
        h = _digest(v)
        if h in seen:
            i = seen[h]
            vi = _advance(system, system.v0, i)
            if np.array_equal(vi, v):
                period = _refine(system, vi, k - i, block)
                t = _smallest_transient(system, period, i)
                return VectorPeriodResult(period, t, k, "blockwise")
        if (k // block) % stride == 0:
            seen[h] = k
            if len(seen) > cap:
                stride *= 2
                seen = {d: s for d, s in seen.items() if (s // block) % stride == 0}
    return VectorPeriodResult(None, None, k, "blockwise")


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return sorted(set(out))


def _refine(system, v: np.ndarray, length: int, block: int) -> int:
    """Shrink a cycle length (found on thinned snapshots) to the exact period at v."""
    changed = True
    while changed:
        changed = False
        for q in _prime_factors(length):
            cand = length // q
            if cand % block == 0 and cand > 0 and np.array_equal(_advance(system, v, cand), v):
                length = cand
                changed = True
                break
    return length


def detect_vector_period(system, strategy: str = "naive", budget: int = 1 << 20,
                         c2_period: int | None = None, config: PeriodConfig = DEFAULT) -> VectorPeriodResult:
    """Naive: first k >= 1 with v_k = v_0. Blockwise: compare snapshots taken every
    ``c2_period`` steps, which also finds cycles entered after a transient."""
    if strategy == "naive":
        return _naive(system, budget)
    if strategy == "blockwise":
        block = c2_period or 1
        return _blockwise(system, budget, block, config.snapshot_cap)
    raise PreconditionError(f"unknown strategy {strategy!r}")


def certify(system, vector_period: int | None, c2_period: int | None = None, transient: int = 0,
            config: PeriodConfig = DEFAULT, sequence: Sequence[int] | None = None) -> PeriodReport:
    """Turn a vector period into a proof of the c2 period.

    Checks v_{t+P} = v_t, then that the c2 values over one vector period split
    into identical blocks of the c2 period. The emitted sequence is periodic
    from the first index only if the transient does not reach past it.
    """
    skip = system.n_first - system.n_initial
    if vector_period is None:
        seq = list(sequence) if sequence is not None else system.sequence(max(config.min_repeats * (c2_period or 1), 64))
        d, _ = detect_c2_period(seq)
        return _empirical(seq, d if c2_period is None else c2_period, config, None, system.p)
    P = int(vector_period)
    vt = _advance(system, system.v0, transient)
    out, vend = kernels.iterate(system.indptr, system.indices, system.data, vt, system.w_idx, system.w_val,
                                system.p, P)
    if not np.array_equal(vend, vt):
        rep = PeriodReport(c2_period, "empirical", 0, None, transient)
        rep.notes.append(f"v_{transient + P} differs from v_{transient}")
        return rep
    vals = [int(x) for x in out]  # c2 at steps transient .. transient+P-1
    d = c2_period if c2_period is not None else smallest_period(vals)
    if P % d:
        rep = PeriodReport(d, "empirical", P // d, None, transient)
        rep.notes.append(f"vector period {P} is not a multiple of c2 period {d}")
        return rep
    for i in range(d, P):
        if vals[i] != vals[i - d]:
            return PeriodReport(d, "empirical", i // d, None, transient, counterexample=transient + i)
    rep = PeriodReport(d, "proven", P // d, P, transient)
    if transient > skip:
        rep.notes.append(f"periodic from step {transient}, after the first emitted value")
    return rep


def _empirical(seq: Sequence[int], d: int | None, config: PeriodConfig, lower: int | None,
               p: int | None = None) -> PeriodReport:
    if d is None:
        return PeriodReport(None, "none", 0, vector_lower_bound=lower)
    s = list(seq)
    # the observed sequence must actually be d-periodic
    for i in range(d, len(s)):
        if s[i] != s[i - d]:
            return PeriodReport(d, "none", i // d, counterexample=i, vector_lower_bound=lower)
    reps = len(s) // d
    early = longest_early_recurrence(s, d)
    guard = config.guard_for(p)
    ok = reps >= config.min_repeats and early <= guard
    rep = PeriodReport(d, "empirical" if ok else "none", reps, vector_lower_bound=lower, early_recurrence=early)
    if reps < config.min_repeats:
        rep.notes.append(f"only {reps} full blocks observed (need {config.min_repeats})")
    if early > guard:
        rep.notes.append(f"an initial segment of length {early} reoccurs before position {d}")
    return rep


def empirical_report(seq: Sequence[int], config: PeriodConfig = DEFAULT, lower: int | None = None,
                     p: int | None = None) -> PeriodReport:
    """Period claim from an observed sequence alone (no vector period)."""
    d, _ = detect_c2_period(seq)
    return _empirical(seq, d, config, lower, p)


@dataclass
class PrefixTable:
    length: int
    primes: tuple[int, ...]
    ambient_period: int
    counts: dict[tuple[int, ...], int]

    def __post_init__(self):
        if sum(self.counts.values()) != self.ambient_period:
            raise AssertionError("prefix counts do not sum to the ambient period")

    @property
    def ordered(self) -> list[tuple[tuple[int, ...], int]]:
        return sorted(self.counts.items())

    def stats(self) -> dict:
        vals = [c for _, c in self.ordered]
        return {"min": min(vals), "max": max(vals), "mean": sum(vals) / len(vals), "prefixes": len(vals)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["prefix", "count"])
        for k, c in self.ordered:
            w.writerow(["(" + ",".join(map(str, k)) + ")", c])
        return buf.getvalue()

    def plot_csv(self) -> str:
        """Two columns: lexicographic prefix index, count."""
        return "index,count\n" + "".join(f"{i},{c}\n" for i, (_, c) in enumerate(self.ordered))

    def to_json(self) -> str:
        return json.dumps({
            "length": self.length,
            "primes": list(self.primes),
            "ambient_period": self.ambient_period,
            "counts": {"(" + ",".join(map(str, k)) + ")": c for k, c in self.ordered},
            **self.stats(),
        }, sort_keys=True)


def prefix_frequencies(blocks: Sequence[tuple[int, Sequence[int]]], length: int | None = None) -> PrefixTable:
    """Tally (c2^(p1), ..., c2^(pL)) over one common period.

    ``blocks`` holds one periodic block per prime, all starting at the same n.
    Every possible prefix is listed, including those that never occur.
    """
    if not blocks:
        raise PreconditionError("no blocks given")
    chosen = sorted(blocks, key=lambda t: t[0])[: (length or len(blocks))]
    if length is not None and len(chosen) < length:
        raise PreconditionError(f"need {length} blocks, got {len(chosen)}")
    for p, b in chosen:
        if not b:
            raise PreconditionError(f"empty block for p = {p}")
    period = 1
    for _, b in chosen:
        period = lcm(period, len(b))
    counts = {k: 0 for k in product(*[range(p) for p, _ in chosen])}
    arrays = [np.resize(np.asarray(b, dtype=np.int64), period) for _, b in chosen]
    codes = np.zeros(period, dtype=np.int64)
    for (p, _), arr in zip(chosen, arrays):
        codes = codes * p + arr
    values, freq = np.unique(codes, return_counts=True)
    keys = list(counts)
    for val, f in zip(values, freq):
        counts[keys[int(val)]] = int(f)
    return PrefixTable(len(chosen), tuple(p for p, _ in chosen), period, counts)
