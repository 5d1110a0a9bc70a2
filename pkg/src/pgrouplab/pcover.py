"""p-covering groups, p-multiplicator and nucleus.

The cover of a group G given by a standard presentation (definitions for all
non-leading generators, exact lower exponent-p central weights) is built by
attaching a central tail of order p to every relation that is not a
definition, collecting all overlap test words with the tails kept free, and
factoring out the linear relations among the tails.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from . import linalg
from .pc import PcPresentation, PresentationError, check_consistency, consistency_tests
from .structure import SubgroupHandle


class InconsistentInput(PresentationError):
    pass


@dataclass
class PCoverData:
    base: PcPresentation
    cover: PcPresentation
    mu: int
    nu: int
    d1: int
    relations: list          # relation behind each multiplicator generator
    tail_relations: list     # every tailed relation, in tail order
    tail_map: np.ndarray     # (T, mu) coordinates of each tail in the multiplicator

    @property
    def d2(self) -> int:
        return self.mu

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def multiplicator(self) -> SubgroupHandle:
        c = self.cover
        return SubgroupHandle(c, {k: c.gen(k) for k in range(self.n, c.n)})

    @property
    def nucleus(self) -> SubgroupHandle:
        c = self.cover
        return SubgroupHandle(c, {k: c.gen(k) for k in range(c.n - self.nu, c.n)})

    def to_json(self) -> str:
        return json.dumps({"nu": self.nu, "mu": self.mu, "d1": self.d1, "d2": self.d2,
                           "cover_label": self.cover.label})


def _relation_order(n):
    rels = [("pow", j) for j in range(n)]
    rels += [("comm", j, i) for j in range(n) for i in range(j)]
    return rels


def relation_weight(pres: PcPresentation, rel) -> int:
    w = pres.weights
    return w[rel[1]] + 1 if rel[0] == "pow" else w[rel[1]] + w[rel[2]]


def is_standard(pres: PcPresentation) -> bool:
    """Definitions exist and the weights are a valid weighting of a
    p-class filtration (generators of weight 1 are exactly the defining ones)."""
    if not pres.has_definitions() or not pres.is_weight_compatible():
        return False
    for k, df in enumerate(pres.definitions):
        if df is not None and relation_weight(pres, df) != pres.weights[k]:
            return False
    return True


def p_cover(pres: PcPresentation) -> PCoverData:
    if not check_consistency(pres, filtered=False):
        raise InconsistentInput("presentation is inconsistent")
    if not is_standard(pres):
        from .genealogy import standardize
        pres = standardize(pres).presentation
    return _cover_of_standard(pres)


def _cover_of_standard(pres: PcPresentation) -> PCoverData:
    cache = pres._cache
    if "pcover" in cache:
        return cache["pcover"]
    n, p = pres.n, pres.p
    c = pres.pclass
    defs = set(tuple(d) for d in pres.definitions if d is not None)
    tailed = [r for r in _relation_order(n) if r not in defs]
    T = len(tailed)
    N = n + T
    pw = np.zeros((N, N), np.int64)
    cm = np.zeros((N, N, N), np.int64)
    pw[:n, :n] = pres.pw
    cm[:n, :n, :n] = pres.cm
    for t, r in enumerate(tailed):
        if r[0] == "pow":
            pw[r[1], n + t] = 1
        else:
            cm[r[1], r[2], n + t] = 1
    ext = PcPresentation(p, list(pres.weights) + [c + 1] * T, pw, cm)
    tests = consistency_tests(pres, filtered=False)
    if len(tests):
        sides = K.consistency_pairs(tests, *ext.arrays)
        if (sides[:, 0, :n] != sides[:, 1, :n]).any():
            raise InconsistentInput("presentation is inconsistent")
        diffs = (sides[:, 0, n:] - sides[:, 1, n:]) % p
        R, _ = linalg.rref(diffs, p)
    else:
        R = np.zeros((0, T), np.int64)
    rank = R.shape[0]
    mu = T - rank
    # basis of the multiplicator among tails: nucleus relations first
    top = [t for t, r in enumerate(tailed) if relation_weight(pres, r) == c + 1]
    rest = [t for t, r in enumerate(tailed) if relation_weight(pres, r) != c + 1]
    chosen_nuc, chosen_other = [], []
    span = R.copy()
    cur = rank
    for group, bucket in ((top, chosen_nuc), (rest, chosen_other)):
        for t in group:
            row = np.zeros((1, T), np.int64)
            row[0, t] = 1
            trial, _ = linalg.rref(np.vstack([span, row]), p)
            if trial.shape[0] > cur:
                span, cur = trial, cur + 1
                bucket.append(t)
    nu = len(chosen_nuc)
    basis = chosen_other + chosen_nuc
    assert len(basis) == mu
    B = np.zeros((T, T), np.int64)
    B[:rank] = R
    for b, t in enumerate(basis):
        B[rank + b, t] = 1
    tail_map = linalg.inverse_mod(B, p)[:, rank:] if T else np.zeros((0, 0), np.int64)
    M = n + mu
    cpw = np.zeros((M, M), np.int64)
    ccm = np.zeros((M, M, M), np.int64)
    cpw[:n, :n] = pres.pw
    ccm[:n, :n, :n] = pres.cm
    for t, r in enumerate(tailed):
        if r[0] == "pow":
            cpw[r[1], n:] = tail_map[t]
        else:
            ccm[r[1], r[2], n:] = tail_map[t]
    cover = PcPresentation(p, list(pres.weights) + [c + 1] * mu, cpw, ccm)
    data = PCoverData(pres, cover, mu, nu, pres.rank, [tailed[t] for t in basis], tailed, tail_map)
    cache["pcover"] = data
    return data


def nuclear_rank(pres: PcPresentation) -> int:
    return p_cover(pres).nu


def multiplicator_rank(pres: PcPresentation) -> int:
    return p_cover(pres).mu


def is_terminal(pres: PcPresentation) -> bool:
    return p_cover(pres).nu == 0


def is_capable(pres: PcPresentation) -> bool:
    return p_cover(pres).nu > 0


# ------------------------------------------------------------ child groups


def allowable_projection(U: np.ndarray, mu: int, p: int) -> tuple[np.ndarray, list[int]]:
    """Matrix S (s x mu) of the quotient map M -> M/U in the coordinates of
    the non-pivot columns of the RREF U, and those columns."""
    pivots = [int(np.flatnonzero(row)[0]) for row in U]
    free = [f for f in range(mu) if f not in pivots]
    S = np.zeros((len(free), mu), np.int64)
    for a, f in enumerate(free):
        S[a, f] = 1
        for i, c in enumerate(pivots):
            S[a, c] = (-U[i, f]) % p
    return S, free


def quotient_of_cover(data: PCoverData, U: np.ndarray, label: str | None = None) -> tuple[PcPresentation, np.ndarray]:
    """G*/U for an RREF U inside the multiplicator; returns the presentation
    and the projection matrix of the multiplicator."""
    cov, n, p = data.cover, data.n, data.cover.p
    S, free = allowable_projection(np.asarray(U, np.int64).reshape(-1, data.mu), data.mu, p)
    s = len(free)
    m = n + s
    pw = np.zeros((m, m), np.int64)
    cm = np.zeros((m, m, m), np.int64)
    pw[:n, :n] = cov.pw[:n, :n]
    cm[:n, :n, :n] = cov.cm[:n, :n, :n]
    pw[:n, n:] = (cov.pw[:n, n:] @ S.T) % p
    cm[:n, :n, n:] = (cov.cm[:n, :n, n:] @ S.T) % p
    c = data.base.pclass
    child = PcPresentation(p, list(data.base.weights) + [c + 1] * s, pw, cm, label)
    return child, S


# --------------------------------------------------------------- Shafarevich


@dataclass(frozen=True)
class ShafarevichBound:
    d1: int
    r: int
    theta: int

    @property
    def lower(self) -> int:
        return self.d1

    @property
    def upper(self) -> int:
        return self.d1 + self.r + self.theta


def shafarevich_bound(d1: int, signature: tuple[int, int], p: int, contains_p_roots: bool) -> ShafarevichBound:
    r1, r2 = signature
    if r1 < 0 or r2 < 0 or r1 + r2 == 0:
        raise ValueError("signature must have r1, r2 >= 0 and r1 + r2 >= 1")
    return ShafarevichBound(d1, r1 + r2 - 1, 1 if contains_p_roots else 0)
