import itertools

import numpy as np
import pytest

from conftest import catalog, load
from pgrouplab.genealogy import are_isomorphic
from pgrouplab.pc import check_consistency, elementary_abelian, from_relations, iter_elements
from pgrouplab.structure import (AbelianType, NotNormal, abelian_type_invariants, derived_series,
                                 format_abelian_type, frattini_quotient, generator_rank, is_abelian,
                                 lower_central_series, maximal_subgroups, parse_abelian_type, quotient,
                                 subgroup, trivial_subgroup, whole_group)


# --- brute-force abelianization on element sets

def _closure(pres, gens):
    seen = {tuple(pres.identity())}
    frontier = list(seen)
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple(pres.mul(np.array(x), g))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def brute_abelian_type(pres, members=None):
    """Logarithmic invariants of H/H' from element counts: the number of
    cosets killed by p^k is p^(sum min(k, e_i))."""
    p = pres.p
    H = [np.array(x) for x in (members or map(tuple, iter_elements(pres)))]
    comms = {tuple(pres.comm(a, b)) for a in H for b in H}
    D = _closure(pres, [np.array(c) for c in comms])
    total = len(H) // len(D)
    logs = []
    k = 0
    while not logs or logs[-1] < round(np.log(total) / np.log(p)):
        k += 1
        killed = sum(1 for x in H if tuple(pres.pow(x, p ** k)) in D) // len(D)
        logs.append(round(np.log(killed) / np.log(p)))
    # logs[k-1] = sum min(k, e_i); the number of parts >= k is logs[k-1] - logs[k-2]
    ge = [logs[0]] + [logs[i] - logs[i - 1] for i in range(1, len(logs))]
    parts = []
    for k, cnt in enumerate(ge, 1):
        nxt = ge[k] if k < len(ge) else 0
        parts += [k] * (cnt - nxt)
    return AbelianType(tuple(parts))


SMALL = catalog(5, min_lo=0)


def test_lower_central_series_examples(tree):
    A = elementary_abelian(3, 2)
    rep = lower_central_series(A)
    assert rep.cl == 1 and len(rep.lower_central) == 2 and rep.lower_central[-1].lo == 0
    assert lower_central_series(load("g27_3.pc")).cl == 2
    rep = lower_central_series(load("g243_5.pc"))
    assert (rep.cl, rep.cc) == (3, 2)


def test_derived_series_examples():
    assert derived_series(elementary_abelian(3, 3)).dl == 1
    assert derived_series(load("g243_5.pc")).dl == 2
    assert derived_series(load("g6561_606.pc")).dl == 3


def test_subgroup_examples():
    G = load("g243_5.pc")
    assert subgroup(G, [G.gen(k) for k in range(G.n)]).index == 1
    assert subgroup(G, []).index == 3 ** 5
    gens = [G.gen(k) for k in range(G.n)]
    D = subgroup(G, [G.comm(a, b) for a in gens for b in gens], normal_closure=True)
    assert D.index == 9


def test_subgroup_membership_matches_closure():
    G = load("g243_5.pc")
    rng = np.random.default_rng(3)
    for _ in range(20):
        gens = [rng.integers(0, 3, G.n) for _ in range(2)]
        H = subgroup(G, gens)
        members = _closure(G, gens)
        assert len(members) == 3 ** H.lo
        assert all(H.contains(x) == (tuple(x) in members) for x in iter_elements(G))
        assert H.induced.n == H.lo
        assert check_consistency(H.induced, filtered=False)


def test_induced_presentation_embeds():
    G = load("g243_4.pc")
    for H in maximal_subgroups(G):
        P = H.induced
        emb = H.embedding
        for a, b in itertools.product(list(iter_elements(P))[:40], repeat=2):
            lhs = G.apply(emb, P.mul(a, b))
            rhs = G.mul(G.apply(emb, a), G.apply(emb, b))
            assert np.array_equal(lhs, rhs)


def test_quotient_examples():
    G = load("g243_4.pc")
    same = quotient(G, trivial_subgroup(G))
    assert same.pres.n == G.n and are_isomorphic(same.pres, G)
    assert quotient(G, whole_group(G)).pres.n == 0
    g3 = lower_central_series(G).lower_central[2]
    assert are_isomorphic(quotient(G, g3).pres, load("g27_3.pc"))


def test_quotient_projection_is_a_homomorphism():
    G = load("g243_5.pc")
    N = lower_central_series(G).lower_central[2]
    Q = quotient(G, N)
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b = rng.integers(0, 3, (2, G.n))
        assert np.array_equal(Q.project(G.mul(a, b)), Q.pres.mul(Q.project(a), Q.project(b)))
        assert np.array_equal(Q.project(Q.lift(Q.project(a))), Q.project(a))


def test_quotient_requires_normal_subgroup():
    G = load("g27_3.pc")
    with pytest.raises(NotNormal):
        quotient(G, subgroup(G, [G.gen(0)]))


def test_abelian_type_examples(tree):
    assert abelian_type_invariants(elementary_abelian(3, 2)).parts == (1, 1)
    G = load("g243_5.pc")
    types = sorted(abelian_type_invariants(H) for H in maximal_subgroups(G))
    assert [format_abelian_type(t) for t in types] == ["1³", "21", "21", "21"]
    G19 = tree.resolve("<729,57>").pres
    assert [format_abelian_type(abelian_type_invariants(H)) for H in maximal_subgroups(G19)] == ["21"] * 4


@pytest.mark.parametrize("node", SMALL, ids=lambda v: str(v.address))
def test_abelian_type_against_element_counts(node):
    G = node.pres
    assert abelian_type_invariants(G) == brute_abelian_type(G)
    if G.n <= 4 and G.n >= 2:
        for H in maximal_subgroups(G):
            members = [tuple(x) for x in iter_elements(G) if H.contains(x)]
            assert abelian_type_invariants(H) == brute_abelian_type(G, members)


def test_abelian_type_of_other_groups():
    c27xc3 = from_relations(3, [1, 1, 2, 3], pows={1: {3: 1}, 3: {4: 1}})
    assert abelian_type_invariants(c27xc3).parts == (3, 1)
    assert brute_abelian_type(c27xc3).parts == (3, 1)
    assert abelian_type_invariants(load("trivial.pc")).parts == ()


def test_abelian_type_notation():
    t = AbelianType((2, 2, 2, 1))
    assert format_abelian_type(t) == "2³1"
    assert format_abelian_type(t, unicode=False) == "2^31"
    for text in ("2^31", "2³1", "1³", "21", "(10)2", "0", "32"):
        assert format_abelian_type(parse_abelian_type(text)) == format_abelian_type(
            parse_abelian_type(format_abelian_type(parse_abelian_type(text))))
    assert parse_abelian_type("2^31").parts == (2, 2, 2, 1)
    assert parse_abelian_type("0").parts == ()
    with pytest.raises(ValueError):
        parse_abelian_type("x1")


def test_maximal_subgroup_counts():
    assert len(maximal_subgroups(elementary_abelian(3, 2))) == 4
    c27 = from_relations(3, [1, 2, 3], pows={1: {2: 1}, 2: {3: 1}})
    assert len(maximal_subgroups(c27)) == 1
    assert len(maximal_subgroups(elementary_abelian(3, 3))) == 13
    G = load("g27_3.pc")
    maxs = maximal_subgroups(G)
    assert len(maxs) == 4
    for H in maxs:
        members = [x for x in iter_elements(G) if H.contains(x)]
        assert len(members) == 9
        assert all(not G.comm(a, b).any() for a in members for b in members)
        assert abelian_type_invariants(H).parts == (1, 1)


def test_maximal_subgroup_order_is_deterministic():
    G = load("g243_5.pc")
    assert [H.key() for H in maximal_subgroups(G)] == [H.key() for H in maximal_subgroups(load("g243_5.pc"))]


def test_frattini_quotient_and_rank():
    assert generator_rank(elementary_abelian(3, 2)) == 2
    assert frattini_quotient(load("g243_5.pc")).pres.n == 2
    assert generator_rank(load("g2187_64.pc")) == 2
    for node in catalog(5, min_lo=2):
        assert generator_rank(node.pres) == 2


@pytest.mark.parametrize("node", catalog(6, min_lo=1), ids=lambda v: str(v.address))
def test_series_invariants(node):
    G = node.pres
    lc = lower_central_series(G)
    dl = derived_series(G).dl
    assert lc.cc == G.n - lc.cl
    assert lc.lower_central[-1].lo == 0 and lc.lower_central[-2].lo > 0
    assert dl <= lc.cl
    assert (dl == 1) == is_abelian(G)
    if lc.cl >= 2:
        Q = quotient(G, lc.lower_central[-2])
        assert lower_central_series(Q.pres).cl == lc.cl - 1
