"""Acceptance criteria 1-9, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line; the lines are
repeated in the terminal summary.  Set PGROUPLAB_EXTENDED=1 to add the
order-3^11 census (about 20 minutes) to criterion 5.
"""
import os
import time
from functools import lru_cache

import numpy as np

from conftest import catalog
from pgrouplab.artin import artin_transfer, random_transversal
from pgrouplab.autgroup import enumerate_automorphisms
from pgrouplab.genealogy import are_isomorphic, default_tree, is_extremal_path, parent, schur_census
from pgrouplab.pc import iter_elements
from pgrouplab.pcover import quotient_of_cover
from pgrouplab.structure import (abelian_type_invariants, derived_subgroup_of, lower_central_series,
                                 maximal_subgroups, quotient, whole_group)
from pgrouplab.verify import verify_table
from test_genealogy import _brute_isomorphic, _invariants, _rank, _rref_subspaces
from test_pc import _letters, rewrite

EXTENDED = os.environ.get("PGROUPLAB_EXTENDED") == "1"
MINUTE, HOUR = 60.0, 3600.0

RESULTS: list[str] = []


def report(number, title, passed, seconds, detail=""):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}  ({seconds:.1f}s){detail}"
    print(line)
    RESULTS.append(line)
    return passed


def run_tables(names):
    """Run the verification tables; return (all passed, failed claims, seconds)."""
    t0 = time.perf_counter()
    failed = []
    for name in names:
        res = verify_table(name)
        failed += [f"{r.claim}: expected {r.expected}, computed {r.computed}" for r in res.failures()]
        if not res.records:
            failed.append(f"{name}: no claims")
    return not failed, failed, time.perf_counter() - t0


def table_criterion(number, title, names, limit):
    ok, failed, secs = run_tables(names)
    passed = ok and secs < limit
    report(number, title, passed, secs)
    assert failed == []
    assert secs < limit


def test_criterion_1_d10_root_path():
    table_criterion(1, "D.10 root path and (nu,mu) of <27,3>, <243,5>", ["d10"], MINUTE)


def test_criterion_2_h4_ground_state():
    table_criterion(2, "H.4 ground state path with counts and extremal steps (2,1,2)", ["h4"], 30 * MINUTE)


def test_criterion_3_e6_e8_ground_states():
    table_criterion(3, "E.6 and E.8 ground state paths", ["e6", "e8"], 30 * MINUTE)


def test_criterion_4_g19_path():
    table_criterion(4, "G.19 path down to the order 3^11 terminal group", ["g19"], 30 * MINUTE)


@lru_cache(maxsize=1)
def census_to_lo8():
    t0 = time.perf_counter()
    recs = schur_census(8)
    return recs, time.perf_counter() - t0


def test_criterion_5_schur_sigma_census():
    t0 = time.perf_counter()
    lo5 = schur_census(5)
    t5 = time.perf_counter() - t0
    recs, t8 = census_to_lo8()
    got5 = {r.tkt: r.count for r in lo5}
    got8 = {r.tkt: r.count for r in recs if r.order == "3^8"}
    checks = [got5 == {"D.10": 1, "D.5": 1}, t5 < 5 * MINUTE,
              got8 == {"H.4": 1, "E.6": 1, "E.14": 2, "E.8": 1, "E.9": 2}, t8 < 12 * HOUR]
    detail = ""
    if EXTENDED:
        ok, failed, t11 = run_tables(["counts-lo11"])
        checks.append(ok)
        detail = f"; order 3^11 census {'matches' if ok else 'differs'} ({t11:.0f}s)"
    else:
        detail = "; order 3^11 census not run (PGROUPLAB_EXTENDED=1)"
    report(5, "Schur sigma census: 2 at 3^5, 7 at 3^8 with TKT breakdown", all(checks), t5 + t8, detail)
    assert got5 == {"D.10": 1, "D.5": 1}
    assert got8 == {"H.4": 1, "E.6": 1, "E.14": 2, "E.8": 1, "E.9": 2}
    assert t5 < 5 * MINUTE and t8 < 12 * HOUR
    assert all(checks)


def test_criterion_6_forbidden_types():
    table_criterion(6, "no B/C types up to 3^7, A.1 only on <27,4>", ["forbidden-bc"], HOUR)


def test_criterion_7_fork_counts():
    table_criterion(7, "descendant counts of <2187,64> and <243,3>", ["fork-2187"], 2 * HOUR)


def test_criterion_8_extremal_paths():
    tree = default_tree()
    recs, _ = census_to_lo8()
    t0 = time.perf_counter()
    sigma = [a for r in recs for a in r.addresses]
    not_extremal = [a for a in sigma if not is_extremal_path(tree.resolve(a).pres)]
    coclass1 = {label: bool(is_extremal_path(tree.resolve(label).pres))
                for label in ("<81,10>", "<81,8>", "<81,7>")}
    secs = time.perf_counter() - t0
    passed = len(sigma) == 9 and not not_extremal and not any(coclass1.values()) and secs < 10 * MINUTE
    report(8, f"{len(sigma)} Schur sigma-groups extremal, <81,10>, <81,8>, <81,7> not", passed, secs)
    assert len(sigma) == 9
    assert not_extremal == []
    assert coclass1 == {"<81,10>": False, "<81,8>": False, "<81,7>": False}
    assert secs < 10 * MINUTE


# --- criterion 9: oracle suites, each reduced to a violation count

def cayley_mismatches():
    bad = 0
    for node in catalog(4, min_lo=0):
        G = node.pres
        elems = list(iter_elements(G))
        rng = np.random.default_rng(node.lo)
        for i, j in rng.integers(0, len(elems), (1000, 2)):
            a, b = elems[i], elems[j]
            bad += not np.array_equal(G.mul(a, b), rewrite(G, _letters(G, a) + _letters(G, b)))
    return bad


def orbit_count_mismatches():
    node = default_tree().resolve("<27,3>")
    data = node.step_orbits(1).data
    mu, nu = data.mu, data.nu
    nucleus = np.eye(mu, dtype=np.int64)[mu - nu:]
    bad = 0
    for s in range(1, nu + 1):
        classes = []
        for U in _rref_subspaces(mu - s, mu):
            if _rank(np.vstack([U, nucleus])) != mu:
                continue
            G, _ = quotient_of_cover(data, U)
            inv = _invariants(G)
            if not any(i == inv and _brute_isomorphic(G, rep) for i, rep in classes):
                classes.append((inv, G))
        bad += abs(len(classes) - len(node.children(s)))
    return bad


def pruning_mismatches():
    bad = 0
    for node in catalog(4, min_lo=2):
        pruned = {a.img.tobytes() for a in enumerate_automorphisms(node.pres, prune=True)}
        unpruned = {a.img.tobytes() for a in enumerate_automorphisms(node.pres, prune=False)}
        bad += pruned != unpruned
    return bad


def edge_law_violations(max_lo=6):
    bad = 0
    for node in catalog(max_lo, min_lo=2):
        W = node.pres
        lcW = lower_central_series(W)
        for s in range(1, node.nu + 1):
            for kid in node.children(s):
                V = kid.pres
                bad += V.n - W.n != s
                bad += V.pclass - W.pclass != 1
                if abelian_type_invariants(V).parts != (1, 1):
                    continue
                lcV = lower_central_series(V)
                bad += lcV.cl - lcW.cl != 1
                bad += lcV.cc - lcW.cc != s - 1
                bad += not are_isomorphic(parent(V), W)
    return bad


def transversal_violations(count=50, seed=7):
    pool = catalog(7, min_lo=3)
    rng = np.random.default_rng(seed)
    bad = 0
    for k in rng.choice(len(pool), size=count, replace=False):
        G = pool[k].pres
        D = derived_subgroup_of(whole_group(G))
        Q = quotient(G, D)
        reps = [Q.lift(y) for y in iter_elements(Q.pres)]
        for H in maximal_subgroups(G):
            T0 = artin_transfer(G, H)
            T1 = artin_transfer(G, H, random_transversal(G, H, rng))
            for g in reps:
                d = G.mul(g, D.generators[int(rng.integers(D.lo))]) if D.lo else g
                bad += not np.array_equal(T0(g), T1(d))
    return bad


def test_criterion_9_oracle_suites():
    t0 = time.perf_counter()
    counts = {
        "collection vs Cayley": cayley_mismatches(),
        "orbit vs isomorphism counts": orbit_count_mismatches(),
        "pruned vs unpruned Aut": pruning_mismatches(),
        "edge laws": edge_law_violations(),
        "transfer transversals": transversal_violations(),
    }
    secs = time.perf_counter() - t0
    detail = "; " + ", ".join(f"{k} {v}" for k, v in counts.items())
    report(9, "oracle suites with zero violations", not any(counts.values()), secs, detail)
    assert counts == dict.fromkeys(counts, 0)

