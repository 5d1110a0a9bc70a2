import itertools
import json
from collections import Counter

import numpy as np
import pytest

from conftest import catalog, load
from pgrouplab.artin import tkt
from pgrouplab.autgroup import has_gia
from pgrouplab.genealogy import (AbelianInput, CatalogStore, CounterOutOfRange, StepExceedsNucleus, Tree,
                                 TreeAddress, UnknownRoot, are_isomorphic, bb_series_laws, descendant_counts,
                                 export_tree, fingerprint, fingerprint_match, format_counts, is_extremal_path,
                                 label_for_address, parent, purged_children, root_path, schur_census,
                                 tree_address)
from pgrouplab.pc import elementary_abelian, iter_elements
from pgrouplab.pcover import quotient_of_cover
from pgrouplab.structure import abelian_type_invariants, derived_series, lower_central_series


# --- parent and root paths

def test_parent_examples(tree):
    assert are_isomorphic(parent(load("g243_5.pc")), load("g27_3.pc"))
    assert are_isomorphic(parent(tree.resolve("<729,45>").pres), load("g243_4.pc"))
    floor = parent(load("g27_3.pc"))
    assert floor.n == 2 and are_isomorphic(floor, elementary_abelian(3, 2))
    with pytest.raises(AbelianInput):
        parent(elementary_abelian(3, 2))


def test_root_path_examples(tree):
    rp = root_path(load("g6561_606.pc"))
    chain = [tree_address(v) for v in reversed(rp.vertices)]
    expected = [tree.resolve(x).address for x in ("<27,3>", "<243,4>", "<729,45>", "<6561,606>")]
    assert chain == expected
    assert list(reversed(rp.steps)) == [2, 1, 2]
    rp = root_path(load("g243_5.pc"))
    assert rp.steps == [2] and tree_address(rp.vertices[-1]) == tree.resolve("<27,3>").address
    assert root_path(load("g27_3.pc")).steps == []


def test_extremal_path_examples(tree):
    rep = is_extremal_path(load("g243_5.pc"))
    assert rep and [s for s, _ in rep.edges] == [2]
    rep = is_extremal_path(load("g6561_606.pc"))
    assert rep and [s for s, _ in reversed(rep.edges)] == [2, 1, 2]
    mainline = tree.resolve("<81,9>-#1;1")
    assert mainline.lo == 5
    rep = is_extremal_path(mainline.pres)
    assert not rep
    assert (1, 2) in rep.edges


# --- descendants

@pytest.mark.parametrize("label, counts", [
    ("<27,3>", "(4/1,7/5)"),
    ("<243,3>", "(10/6,15/15)"),
    ("<729,49>", "(8/3,6/3)"),
    ("<729,57>", "(1/0,6/6)"),
    ("<243,4>", "(4/4)"),
])
def test_descendant_counts(tree, label, counts):
    assert format_counts(tree.resolve(label).descendant_counts()) == counts


def test_descendant_counts_from_presentation():
    assert format_counts(descendant_counts(load("g27_3.pc"))) == "(4/1,7/5)"


@pytest.mark.parametrize("node", catalog(6, min_lo=2), ids=lambda v: str(v.address))
def test_edge_laws(node):
    """lo, cl and cc increments, step bounds and parent consistency on every edge
    of the tree of groups with abelianization 1^2."""
    W = node.pres
    lcW = lower_central_series(W)
    for s in range(1, node.nu + 1):
        for kid in node.children(s):
            V = kid.pres
            assert 1 <= s <= node.nu
            assert V.n - W.n == s
            assert V.pclass - W.pclass == 1
            if abelian_type_invariants(V).parts != (1, 1):
                continue            # e.g. C9 x C3 below the root
            lcV = lower_central_series(V)
            assert lcV.cl - lcW.cl == 1
            assert lcV.cc - lcW.cc == s - 1
            assert are_isomorphic(parent(V), W)


def _rank(rows, p=3):
    m = [[int(x) for x in r] for r in rows]
    r = 0
    for c in range(len(m[0]) if m else 0):
        piv = next((i for i in range(r, len(m)) if m[i][c] % p), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], p - 2, p)
        m[r] = [x * inv % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] % p:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[r])]
        r += 1
    return r


def _rref_subspaces(dim, mu, p=3):
    """Every dim-dimensional subspace of F_p^mu, once, as an RREF matrix."""
    for pivots in itertools.combinations(range(mu), dim):
        free = [(i, c) for i, pc in enumerate(pivots) for c in range(pc + 1, mu) if c not in pivots]
        for vals in itertools.product(range(p), repeat=len(free)):
            U = np.zeros((dim, mu), np.int64)
            for i, pc in enumerate(pivots):
                U[i, pc] = 1
            for (i, c), v in zip(free, vals):
                U[i, c] = v
            yield U


def _invariants(G):
    elems = list(iter_elements(G))
    orders = Counter()
    for x in elems:
        k, y = 1, x
        while y.any():
            y, k = G.mul(y, x), k + 1
        orders[k] += 1
    centre = sum(1 for x in elems if all(not G.comm(x, G.gen(i)).any() for i in range(G.n)))
    return (G.n, tuple(sorted(orders.items())), centre, lower_central_series(G).cl, derived_series(G).dl)


def _brute_isomorphic(G, H):
    """Search images of the defining generators of G in H."""
    if G.n != H.n:
        return False
    defs = G.definitions
    d = sum(1 for x in defs if x is None)
    phi_free = [x for x in iter_elements(H) if x[:d].any()]
    for imgs in itertools.product(phi_free, repeat=d):
        full = list(imgs)
        for k in range(d, G.n):
            df = defs[k]
            full.append(H.pow(full[df[1]], H.p) if df[0] == "pow" else H.comm(full[df[1]], full[df[2]]))
        full = np.array(full)
        ok = all(np.array_equal(H.pow(full[j], G.p), H.apply(full, G.pw[j])) for j in range(G.n))
        ok = ok and all(np.array_equal(H.comm(full[j], full[i]), H.apply(full, G.cm[j, i]))
                        for j in range(G.n) for i in range(j))
        if ok and _rank(full[:, :d] % 3) == d:
            return True
    return False


def test_orbit_counts_against_isomorphism_classes(tree):
    """All allowable subspaces of the multiplicator of <27,3>, quotients
    deduplicated by a brute-force isomorphism search."""
    node = tree.resolve("<27,3>")
    data = node.step_orbits(1).data
    mu, nu = data.mu, data.nu
    nucleus = np.eye(mu, dtype=np.int64)[mu - nu:]
    for s in range(1, nu + 1):
        classes: list[tuple] = []
        for U in _rref_subspaces(mu - s, mu):
            if _rank(np.vstack([U, nucleus])) != mu:
                continue
            G, _ = quotient_of_cover(data, U)
            inv = _invariants(G)
            if not any(i == inv and _brute_isomorphic(G, rep) for i, rep in classes):
                classes.append((inv, G))
        assert len(classes) == len(node.children(s))
        for kid in node.children(s):
            assert sum(are_isomorphic(kid.pres, rep) for _, rep in classes) == 1


def test_children_are_pairwise_non_isomorphic(tree):
    for label in ("<27,3>", "<243,4>", "<243,3>"):
        kids = tree.resolve(label).all_children()
        keys = [k.pres.key() for k in kids]
        assert len(set(keys)) == len(keys)


def test_determinism_of_addresses():
    a = {str(v.address): fingerprint(v, with_children=False) for v in catalog(6, min_lo=0)}
    fresh = Tree()
    from pgrouplab.genealogy import iterate_tree
    b = {str(v.address): fingerprint(v, with_children=False) for v in iterate_tree(6, fresh)}
    assert a == b


# --- addresses

def test_address_grammar(tree):
    addr = TreeAddress.parse("C3xC3-#1;1-#2;4")
    assert str(addr) == "C3xC3-#1;1-#2;4"
    assert TreeAddress.parse("C3xC3−#1;1−#2;4") == addr
    assert tree.resolve("C3xC3").pres.n == 2
    assert tree.resolve("<243,5>").address == addr
    with pytest.raises(CounterOutOfRange):
        TreeAddress.parse("C3xC3-#1;0")
    with pytest.raises(ValueError):
        TreeAddress.parse("C3xC3-#1")
    with pytest.raises(CounterOutOfRange):
        tree.resolve("C3xC3-#1;4")
    with pytest.raises(UnknownRoot):
        tree.resolve("C5xC5-#1;1")
    with pytest.raises(StepExceedsNucleus):
        tree.resolve("<27,3>-#3;1")


def test_tree_address_round_trip(tree):
    for v in catalog(6, min_lo=2):
        assert tree_address(v.pres) == v.address


def test_labels(tree):
    assert label_for_address("C3xC3-#1;1-#2;4") == "⟨243,5⟩"
    assert label_for_address(tree.resolve("<6561,606>").address) == "⟨6561,606⟩"
    assert label_for_address("C3xC3-#1;1-#1;1-#1;1") is None
    assert "⟨243,5⟩" in fingerprint_match(load("g243_5.pc"))
    d10 = fingerprint(tree.resolve("<243,5>"))
    d5 = fingerprint(tree.resolve("<243,7>"))
    assert d10["tkt"] != d5["tkt"] and d10["tkt_name"] == "D.10" and d5["tkt_name"] == "D.5"


def test_fingerprint_contents(tree):
    fp = fingerprint(tree.resolve("<243,5>"))
    assert fp["order"] == 243 and fp["lo"] == 5
    assert (fp["cl"], fp["cc"], fp["dl"]) == (3, 2, 2)
    assert fp["tkt_name"] == "D.10" and fp["tkt"] == "1123"
    assert (fp["nu"], fp["mu"]) == (0, 2)
    triv = fingerprint(load("trivial.pc"))
    assert triv["order"] == 1 and triv["abelian"]


def test_catalog_store_round_trip(tmp_path, monkeypatch, tree):
    monkeypatch.setenv("PGROUPLAB_CATALOG", str(tmp_path))
    store = CatalogStore()
    node = tree.resolve("<729,45>")
    fp = fingerprint(node.pres, with_children=False)
    store.put(node.address, node.pres, fp)
    back = store.get(node.address)
    assert back.key() == node.pres.key()
    assert fingerprint(back, with_children=False) == fp
    assert str(node.address) in store.list()
    assert store.by_fingerprint(fp) == [str(node.address)]
    assert CatalogStore().get(node.address).key() == node.pres.key()     # persisted on disk
    assert store.get("C3xC3-#1;2") is None


def test_export_formats(tree):
    node = tree.resolve("<27,3>")
    nodes = [node] + node.children(2)
    data = json.loads(export_tree(nodes, "json"))
    assert len(data["nodes"]) == 8 and len(data["edges"]) == 7
    assert all(e["step"] == 2 for e in data["edges"])
    dot = export_tree(nodes, "dot")
    assert dot.startswith("digraph") and "shape=box" in dot


# --- purging and census

def test_purged_children_of_root(tree):
    kids = tree.root.all_children()
    expect = [k.address for k in kids if has_gia(k.pres, method="search").is_sigma]
    assert [k.address for k in purged_children(tree.root)] == expect
    assert tree.resolve("<27,3>").address in expect
    assert tree.resolve("<27,4>").address not in expect


def test_purge_keeps_schur_sigma_groups():
    full = schur_census(6, purged=False)
    purged = schur_census(6, purged=True)
    assert [r.to_json() for r in full] == [r.to_json() for r in purged]


def test_census_order_3_5():
    recs = schur_census(5)
    assert sorted((r.tkt, r.count) for r in recs) == [("D.10", 1), ("D.5", 1)]
    assert {r.order for r in recs} == {"3^5"}


def test_census_budget():
    from pgrouplab.autgroup import BudgetExceeded
    with pytest.raises(BudgetExceeded):
        schur_census(12)


def test_bb_series_laws():
    assert bb_series_laws(0) == (8, 5, 3)
    assert bb_series_laws(2) == (14, 9, 5)
    with pytest.raises(ValueError):
        bb_series_laws(-1)


def test_h4_ground_state_matches_series_laws(tree):
    (rec,) = [r for r in schur_census(8, purged=True) if r.tkt == "H.4"]
    (addr,) = rec.addresses
    G = tree.resolve(addr).pres
    lc = lower_central_series(G)
    assert (G.n, lc.cl, lc.cc) == bb_series_laws(0)
    assert tkt(G).name == "H.4"
