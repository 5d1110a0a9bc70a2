import json

import numpy as np
import pytest

from conftest import catalog, load
from pgrouplab.genealogy import are_isomorphic
from pgrouplab.pc import check_consistency, elementary_abelian
from pgrouplab.pcover import InconsistentInput, is_capable, is_terminal, p_cover, shafarevich_bound
from pgrouplab.structure import generator_rank, quotient


@pytest.mark.parametrize("name, nu_mu", [
    ("g27_3.pc", (2, 4)),
    ("g243_5.pc", (0, 2)),
    ("g2187_64.pc", (4, 6)),
    ("g243_4.pc", (1, 3)),
    ("g27_4.pc", (0, 2)),
    ("g6561_606.pc", (0, 2)),
])
def test_nuclear_and_multiplicator_rank(name, nu_mu):
    cov = p_cover(load(name))
    assert (cov.nu, cov.mu) == nu_mu


@pytest.mark.parametrize("d", [1, 2, 3])
def test_elementary_abelian_cover(d):
    cov = p_cover(elementary_abelian(3, d))
    assert cov.mu == d * (d + 1) // 2
    assert cov.nu == cov.mu
    assert cov.cover.n == d + cov.mu


def test_terminal_and_capable():
    assert is_terminal(load("g243_5.pc")) and not is_capable(load("g243_5.pc"))
    assert is_capable(load("g243_4.pc")) and not is_terminal(load("g243_4.pc"))
    assert is_capable(elementary_abelian(3, 2))


def test_cover_json():
    cov = p_cover(load("g27_3.pc"))
    data = json.loads(cov.to_json())
    assert {k: data[k] for k in ("nu", "mu", "d1", "d2")} == {"nu": 2, "mu": 4, "d1": 2, "d2": 4}


def test_inconsistent_input_is_rejected():
    with pytest.raises(InconsistentInput):
        p_cover(load("corrupt_01.pc"))


def test_shafarevich_examples():
    b = shafarevich_bound(2, (0, 1), 3, False)
    assert (b.lower, b.upper) == (2, 2)
    b = shafarevich_bound(2, (2, 0), 3, False)
    assert (b.lower, b.upper) == (2, 3)
    b = shafarevich_bound(2, (2, 0), 2, True)
    assert (b.lower, b.upper) == (2, 4)
    with pytest.raises(ValueError):
        shafarevich_bound(2, (0, 0), 3, False)


def _is_central_elementary(cov):
    c = cov.cover
    M = cov.multiplicator
    for m in M.generators:
        if c.pow(m, c.p).any():
            return False
        if any(c.comm(m, c.gen(k)).any() for k in range(c.n)):
            return False
    return True


@pytest.mark.parametrize("node", catalog(7, min_lo=0), ids=lambda v: str(v.address))
def test_cover_invariants(node):
    G = node.pres
    cov = p_cover(G)
    if G.n:
        assert cov.d1 == generator_rank(G)
    assert cov.d2 == cov.mu >= cov.d1
    assert 0 <= cov.nu <= cov.mu
    assert cov.nucleus.is_subgroup_of(cov.multiplicator)
    assert _is_central_elementary(cov)
    assert check_consistency(cov.cover, filtered=False)
    back = quotient(cov.cover, cov.multiplicator).pres
    assert are_isomorphic(back, G)
    assert is_terminal(G) == (cov.nu == 0)


def test_cover_consistency_up_to_order_3_8():
    bad = [str(v.address) for v in catalog(8, min_lo=8)
           if not check_consistency(p_cover(v.pres).cover, filtered=False)]
    assert bad == []
