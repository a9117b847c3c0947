"""Tiered reproduction checks (fast: p = 2, standard: adds p = 3, extended: adds
C23 at p = 3 and C13 at p = 5)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from . import reference as ref
from .graph import circulant, decomplete
from .periods import certify, detect_c2_period, detect_vector_period, empirical_report, prefix_frequencies
from .poly import c2_direct, c2_lemma3
from .transfer import cached_system

TIERS = ("fast", "standard", "extended")


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.detail}"


def family_graph(family: str, n: int):
    jumps = (1, 3) if family.upper() == "C13" else (2, 3)
    return decomplete(circulant(n, jumps), 0)


def _periodic(seq, block) -> bool:
    return all(v == block[i % len(block)] for i, v in enumerate(seq))


def _negated(block, p):
    return tuple((-x) % p for x in block)


def check_state_count(family: str, p: int) -> CheckResult:
    S = cached_system(family, p)
    want = ref.STATE_COUNTS[(family, p)]
    return CheckResult(f"N({family}, p={p})", S.N == want, f"N={S.N}, expected {want}")


def check_sequence(family: str, p: int, block) -> CheckResult:
    S = cached_system(family, p)
    seq = S.sequence(4 * len(block) + 8)
    ok = _periodic(seq, block)
    detail = f"first values {seq[:12]}..."
    if not ok and _periodic(seq, _negated(block, p)):
        detail += " (equals the negation of the reference block)"
    return CheckResult(f"c2 sequence {family} p={p} from n={S.n_first}", ok, detail)


def check_proven_period(family: str, p: int) -> CheckResult:
    S = cached_system(family, p)
    c2p, vp = ref.PERIODS[(family, p)]
    d, _ = detect_c2_period(S.sequence(max(8 * c2p, 64)))
    found = detect_vector_period(S, "naive", budget=4 * vp)
    rep = certify(S, found.period, d)
    ok = (rep.c2_period, rep.vector_period, rep.status) == (c2p, vp, "proven")
    return CheckResult(f"periods {family} p={p}", ok,
                       f"c2 period {rep.c2_period}, vector period {rep.vector_period}, {rep.status}")


def check_empirical_period(family: str, p: int) -> CheckResult:
    S = cached_system(family, p)
    c2p, _ = ref.PERIODS[(family, p)]
    seq = S.sequence(6 * c2p)
    rep = empirical_report(seq, p=p)
    ok = rep.c2_period == c2p and rep.status == "empirical" and rep.repeats >= 5
    return CheckResult(f"c2 period {family} p={p}", ok, f"{rep.c2_period} ({rep.status}, {rep.repeats} repeats)")


def check_oracle_triangle(family: str, p: int, ns) -> CheckResult:
    S = cached_system(family, p)
    bad = []
    for n in ns:
        g = family_graph(family, n)
        eng = S.sequence(1, start_n=n)[0]
        a, b = c2_direct(g, p), c2_lemma3(g, p)
        if not a == b == eng:
            bad.append((n, a, b, eng))
    detail = f"n={ns[0]}..{ns[-1]} agree" if not bad else f"mismatches (n, direct, lemma3, engine): {bad}"
    return CheckResult(f"oracle triangle {family} p={p}", not bad, detail)


def check_prefix2(family: str) -> CheckResult:
    c2p3 = ref.PERIODS[(family, 3)][0]
    s2 = cached_system(family, 2).sequence(ref.PERIODS[(family, 2)][0])
    s3 = cached_system(family, 3).sequence(c2p3)
    tab = prefix_frequencies([(2, s2), (3, s3)])
    got = tuple(c for _, c in tab.ordered)
    want = ref.PREFIX2_COUNTS[family]
    detail = f"counts {got} over {tab.ambient_period}"
    if got != want:
        neg = prefix_frequencies([(2, s2), (3, _negated(s3, 3))])
        if tuple(c for _, c in neg.ordered) == want:
            detail += " (reference counts are those of the negated p=3 block)"
    return CheckResult(f"prefix (c2^(2), c2^(3)) {family}", got == want, detail)


def check_prefix3_c13() -> CheckResult:
    blocks = [(p, cached_system("C13", p).sequence(ref.PERIODS[("C13", p)][0])) for p in (2, 3, 5)]
    tab = prefix_frequencies(blocks)
    st = tab.stats()
    got = {"period": tab.ambient_period, "min": st["min"], "max": st["max"], "mean": round(st["mean"])}
    return CheckResult("prefix length 3 C13", got == ref.C13_PREFIX3, str(got))


def checks(tier: str) -> Iterator[Callable[[], CheckResult]]:
    if tier not in TIERS:
        raise ValueError(f"unknown tier {tier!r}")
    level = TIERS.index(tier)
    yield lambda: check_state_count("C13", 2)
    yield lambda: check_state_count("C23", 2)
    yield lambda: check_sequence("C13", 2, ref.C13_P2_BLOCK)
    yield lambda: check_sequence("C23", 2, ref.C23_P2_BLOCK)
    yield lambda: check_proven_period("C13", 2)
    yield lambda: check_proven_period("C23", 2)
    yield lambda: check_oracle_triangle("C13", 2, [9, 10, 11, 12])
    yield lambda: check_oracle_triangle("C23", 2, [7, 8, 9, 10])
    if level >= 1:
        yield lambda: check_state_count("C13", 3)
        yield lambda: check_sequence("C13", 3, ref.C13_P3_BLOCK)
        yield lambda: check_proven_period("C13", 3)
        yield lambda: check_oracle_triangle("C13", 3, [9, 10, 11, 12])
        yield lambda: check_oracle_triangle("C23", 3, [7, 8, 9, 10])
        yield lambda: check_prefix2("C13")
    if level >= 2:
        yield lambda: check_state_count("C23", 3)
        yield lambda: check_empirical_period("C23", 3)
        yield lambda: check_prefix2("C23")
        yield lambda: check_state_count("C13", 5)
        yield lambda: check_empirical_period("C13", 5)
        yield lambda: check_prefix3_c13()


def run_tier(tier: str, echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    out = []
    for fn in checks(tier):
        r = fn()
        out.append(r)
        if echo:
            echo(r.line())
    return out
