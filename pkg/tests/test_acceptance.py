"""Acceptance criteria 1-7.

Each test carries ``criterion(n)``; the terminal summary prints one PASS/FAIL
line per criterion. Tests marked ``extended`` need the C23 p=3 and C13 p=5
systems (several minutes); deselect them with ``-m "not extended"``.
"""
import random
from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from c2inv import reference as ref
from c2inv.forests import assign_edges, dodgson_to_forests, forest_poly
from c2inv.graph import Graph, VertexPartition, all_set_partitions
from c2inv.periods import certify, detect_c2_period, detect_vector_period, empirical_report, prefix_frequencies
from c2inv.poly import MultilinearPoly, c2_direct, c2_lemma3, cw_coefficient, dodgson, kirchhoff, point_count
from c2inv.transfer import Checkpoint, build_system, cached_system, run
from c2inv.verify import family_graph

from conftest import random_connected_graph

crit = pytest.mark.criterion


def periodic_from_start(seq, block):
    return all(v == block[i % len(block)] for i, v in enumerate(seq))


# -- 1. sequence golden tests ---------------------------------------------------------


@crit(1)
@pytest.mark.parametrize("fam,p,block", [
    ("C13", 2, ref.C13_P2_BLOCK),
    ("C23", 2, ref.C23_P2_BLOCK),
    ("C13", 3, ref.C13_P3_BLOCK),
], ids=["C13-p2", "C23-p2", "C13-p3"])
def test_sequence_golden(fam, p, block):
    S = cached_system(fam, p)
    seq = S.sequence(5 * len(block))
    assert S.n_first == ref.FIRST_N[fam]
    assert periodic_from_start(seq, block), f"engine gives {seq[:len(block)]}"


# -- 2. state counts ------------------------------------------------------------------


@crit(2)
@pytest.mark.parametrize("fam,p", [("C13", 2), ("C13", 3), ("C23", 2)])
def test_state_count(fam, p):
    assert cached_system(fam, p).N == ref.STATE_COUNTS[(fam, p)]


@crit(2)
@pytest.mark.extended
@pytest.mark.parametrize("fam,p", [("C23", 3), ("C13", 5)])
def test_state_count_extended(fam, p):
    assert cached_system(fam, p).N == ref.STATE_COUNTS[(fam, p)]


# -- 3. periods -----------------------------------------------------------------------


@crit(3)
@pytest.mark.parametrize("fam,p", [("C13", 2), ("C13", 3), ("C23", 2)])
def test_proven_period(fam, p):
    S = cached_system(fam, p)
    c2p, vp = ref.PERIODS[(fam, p)]
    d, _ = detect_c2_period(S.sequence(10 * c2p))
    found = detect_vector_period(S, "naive", budget=2 * vp)
    rep = certify(S, found.period, d)
    assert (rep.c2_period, rep.vector_period, rep.status) == (c2p, vp, "proven")


@crit(3)
@pytest.mark.extended
@pytest.mark.parametrize("fam,p", [("C23", 3), ("C13", 5)])
def test_empirical_period(fam, p):
    S = cached_system(fam, p)
    c2p, _ = ref.PERIODS[(fam, p)]
    rep = empirical_report(S.sequence(6 * c2p), p=p)
    assert rep.c2_period == c2p
    assert rep.status == "empirical" and rep.repeats >= 5, rep.notes


# -- 4. oracle triangle ---------------------------------------------------------------


@crit(4)
@pytest.mark.parametrize("fam,p,n", [("C13", p, n) for p in (2, 3) for n in range(9, 13)]
                         + [("C23", p, n) for p in (2, 3) for n in range(7, 11)])
def test_oracle_triangle(fam, p, n):
    g = family_graph(fam, n)
    engine = cached_system(fam, p).sequence(1, start_n=n)[0]
    direct = c2_direct(g, p)
    dodg = c2_lemma3(g, p)
    assert direct == dodg == engine, (direct, dodg, engine)


# -- 5. prefix frequencies ------------------------------------------------------------


def _block(fam, p):
    return cached_system(fam, p).sequence(ref.PERIODS[(fam, p)][0])


@crit(5)
def test_prefix2_c13_uniform():
    tab = prefix_frequencies([(2, _block("C13", 2)), (3, _block("C13", 3))])
    assert tab.ambient_period == 36
    assert [c for _, c in tab.ordered] == [6] * 6


@crit(5)
@pytest.mark.extended
def test_prefix2_c23_counts():
    tab = prefix_frequencies([(2, _block("C23", 2)), (3, _block("C23", 3))])
    assert sum(tab.counts.values()) == tab.ambient_period == 30492
    assert tuple(c for _, c in tab.ordered) == ref.PREFIX2_COUNTS["C23"]


# -- 6. property suites ---------------------------------------------------------------


def connected_graphs_up_to(max_edges):
    """Every connected simple graph with at most ``max_edges`` edges, up to isomorphism."""
    out = []
    for G in nx.graph_atlas_g()[1:]:
        if G.number_of_edges() <= max_edges and nx.is_connected(G):
            out.append(G)
    out.extend(nx.nonisomorphic_trees(max_edges + 1))  # the only ones with more than 7 vertices
    return [Graph(G.number_of_nodes(), sorted(tuple(sorted(e)) for e in G.edges())) for G in out]


@crit(6)
def test_matrix_tree_determinant():
    graphs = connected_graphs_up_to(7)
    assert len(graphs) > 100
    for g in graphs:
        psi = kirchhoff(g)
        for p in (2, 3, 5):
            assert dodgson(g, (), (), (), p).equals_up_to_sign(psi.reduce(p)), g


@crit(6)
@pytest.mark.parametrize("p", [2, 3])
def test_point_count_divisible_by_p_squared(p):
    rng = random.Random(p)
    cases = 0
    for n in range(3, 9):
        for m in range(n - 1, 13):
            for _ in range(2):
                g = random_connected_graph(rng, n, m)
                count = point_count(kirchhoff(g, p))
                assert count % (p * p) == 0, (g, count)
                cases += 1
    assert cases > 100


def _random_full_degree_poly(rng, N, p):
    terms = {(1 << N) - 1: rng.randrange(1, p)}
    for _ in range(rng.randint(0, 6)):
        terms[rng.randrange(1 << N)] = rng.randrange(p)
    return MultilinearPoly(N, terms, p)


@crit(6)
def test_cw_coefficient_equals_point_count():
    rng = random.Random(2024)
    bad = []
    for _ in range(200):
        p = rng.choice([2, 3, 5])
        N = rng.randint(1, 8)
        f = _random_full_degree_poly(rng, N, p)
        if cw_coefficient(f, p) % p != point_count(f) % p:
            bad.append((N, p))
    parity = sorted({"even" if N % 2 == 0 else "odd" for N, _ in bad})
    assert not bad, f"{len(bad)} of 200 differ, all with N {'/'.join(parity)}; (N, p) of the first: {bad[:8]}"


@crit(6)
def test_forest_expansion_identity():
    rng = random.Random(12)
    checked = 0
    for g in connected_graphs_up_to(7):
        if g.n < 2:
            continue
        m = g.num_edges
        for _ in range(2):
            k = rng.randint(0, min(2, m // 2))
            I = rng.sample(range(m), k)
            J = rng.sample(range(m), k)
            K = [e for e in range(m) if e not in I and e not in J and rng.random() < 0.2]
            assert dodgson_to_forests(g, I, J, K).to_poly() == dodgson(g, I, J, K), (g, I, J, K)
            checked += 1
    assert checked > 200


@crit(6)
def test_edge_assignment_identity():
    rng = random.Random(13)
    for g in connected_graphs_up_to(7):
        if g.n < 2:
            continue
        ground = rng.sample(range(g.n), min(g.n, rng.randint(1, 3)))
        P = VertexPartition(rng.choice(list(all_set_partitions(ground))))
        S = sorted(rng.sample(range(g.num_edges), min(g.num_edges, rng.randint(1, 3))))
        acc = {}
        for r in range(len(S) + 1):
            for A in combinations(S, r):
                mA = sum(1 << e for e in A)
                for mask, c in assign_edges(P, g, S, A).to_poly().terms.items():
                    acc[mask | mA] = acc.get(mask | mA, 0) + c
        assert MultilinearPoly(g.num_edges, acc) == forest_poly(g, P), (g, P, S)


@crit(6)
@pytest.mark.parametrize("fam,p", [("C13", 2), ("C23", 2), ("C13", 3)])
def test_checkpoint_resume_bit_identity(tmp_path, fam, p):
    S = cached_system(fam, p)
    a, b = tmp_path / "a.ck", tmp_path / "b.ck"
    straight = list(run(S, 200, checkpoint_path=a, checkpoint_every=25))
    gen = run(S, 200, checkpoint_path=b, checkpoint_every=25)
    for _ in range(113):
        next(gen)
    gen.close()
    ck = Checkpoint.load(b)
    rest = list(run(S, 200, checkpoint_path=b, checkpoint_every=25, resume=ck))
    assert straight[len(ck.sequence):] == rest
    assert a.read_bytes() == b.read_bytes()


# -- 7. beyond desk scale: accepted, checkpointable -----------------------------------


class _Enough(Exception):
    pass


@crit(7)
@pytest.mark.parametrize("fam,p", [("C13", 7), ("C23", 5)])
def test_large_prime_build_starts(fam, p):
    seen = []

    def progress(done, found):
        seen.append(found)
        if done >= 200:
            raise _Enough

    with pytest.raises(_Enough):
        build_system(fam, p, progress=progress)
    assert seen[-1] > 200


@crit(7)
def test_checkpoint_at_full_p7_size(tmp_path):
    N = ref.STATE_COUNTS[("C13", 7)]
    rng = np.random.default_rng(0)
    ck = Checkpoint("C13", 7, N, 134064, "11" * 32, rng.integers(0, 7, N), list(rng.integers(0, 7, 1000)))
    path = tmp_path / "big.ck"
    ck.save(path)
    back = Checkpoint.load(path)
    assert back.N == N and np.array_equal(back.vector, ck.vector) and back.sequence == ck.sequence


@crit(7)
@pytest.mark.parametrize("length,period", [(3, 11160), (4, 20779920)])
def test_prefix_structure_on_synthetic_blocks(length, period):
    rng = np.random.default_rng(length)
    sizes = {2: 2, 3: 36, 5: 3720, 7: 134064}
    blocks = [(p, list(rng.integers(0, p, L))) for p, L in sizes.items()]
    tab = prefix_frequencies(blocks, length=length)
    assert tab.ambient_period == period
    assert sum(tab.counts.values()) == period


@crit(7)
@pytest.mark.extended
def test_prefix3_statistics_c13():
    tab = prefix_frequencies([(p, _block("C13", p)) for p in (2, 3, 5)])
    st = tab.stats()
    got = {"period": tab.ambient_period, "min": st["min"], "max": st["max"], "mean": round(st["mean"])}
    assert got == ref.C13_PREFIX3
