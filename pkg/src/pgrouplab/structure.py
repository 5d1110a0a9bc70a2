"""Subgroups, quotients, series and abelian invariants.

Subgroups are stored as induced polycyclic sequences: one element per
leading generator index, leading exponent 1.  Because the pc-series of any
presentation here is central, this representation is canonical enough for
membership tests, coset representatives and quotients.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .pc import PcPresentation, PresentationError


class NotNormal(ValueError):
    pass


def depth(x) -> int:
    nz = np.flatnonzero(x)
    return int(nz[0]) if len(nz) else len(x)


class SubgroupHandle:
    def __init__(self, pres: PcPresentation, ips: dict[int, np.ndarray]):
        self.pres = pres
        self._ips = dict(sorted(ips.items()))

    # -- sequence data
    @property
    def leads(self) -> list[int]:
        return list(self._ips)

    @property
    def generators(self) -> list[np.ndarray]:
        return list(self._ips.values())

    @property
    def lo(self) -> int:
        return len(self._ips)

    @property
    def order(self) -> int:
        return self.pres.p ** self.lo

    @property
    def index(self) -> int:
        return self.pres.p ** (self.pres.n - self.lo)

    def __repr__(self):
        return f"<Subgroup of order {self.pres.p}^{self.lo} in {self.pres!r}>"

    def key(self):
        return tuple(tuple(int(t) for t in v) for v in self.reduced().generators)

    def __eq__(self, other):
        return isinstance(other, SubgroupHandle) and self.pres == other.pres and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    # -- element tests
    def sift(self, x) -> np.ndarray:
        """Remainder of x after stripping generators from the left."""
        pres, p = self.pres, self.pres.p
        x = np.asarray(x, np.int64)
        while True:
            l = depth(x)
            if l >= pres.n or l not in self._ips:
                return x
            x = pres.mul(pres.pow(self._ips[l], p - x[l]), x)

    def coordinates(self, x) -> np.ndarray | None:
        """Exponents c with x = prod s_k^c_k (ordered by lead), or None."""
        pres, p = self.pres, self.pres.p
        x = np.asarray(x, np.int64)
        pos = {l: t for t, l in enumerate(self._ips)}
        out = np.zeros(len(pos), np.int64)
        while True:
            l = depth(x)
            if l >= pres.n:
                return out
            if l not in self._ips:
                return None
            out[pos[l]] = x[l]
            x = pres.mul(pres.pow(self._inverse(l), int(x[l])), x)

    def _inverse(self, lead: int) -> np.ndarray:
        inv = self.__dict__.setdefault("_invs", {})
        if lead not in inv:
            inv[lead] = self.pres.inv(self._ips[lead])
        return inv[lead]

    def contains(self, x) -> bool:
        return depth(self.sift(x)) >= self.pres.n

    def is_subgroup_of(self, other: "SubgroupHandle") -> bool:
        return all(other.contains(g) for g in self.generators)

    def is_normal(self) -> bool:
        pres = self.pres
        return all(self.contains(pres.comm(s, pres.gen(k))) for s in self.generators for k in range(pres.n))

    def reduce_coset(self, x) -> np.ndarray:
        """Canonical representative of x N (needs N normal): zero at leads."""
        pres, p = self.pres, self.pres.p
        x = np.asarray(x, np.int64)
        for l, s in self._ips.items():
            if x[l]:
                x = pres.mul(x, pres.pow(s, p - x[l]))
        return x

    def reduced(self) -> "SubgroupHandle":
        """Same subgroup with every generator zero at the other leads."""
        ips = dict(self._ips)
        leads = sorted(ips)
        pres, p = self.pres, self.pres.p
        for l in reversed(leads):
            x = ips[l]
            for m in leads:
                if m > l and x[m]:
                    x = pres.mul(x, pres.pow(ips[m], p - x[m]))
            ips[l] = x
        return SubgroupHandle(pres, ips)

    # -- presentations
    @cached_property
    def induced(self) -> PcPresentation:
        pres = self.pres
        gens = self.generators
        m = len(gens)
        pw = np.zeros((m, m), np.int64)
        cm = np.zeros((m, m, m), np.int64)
        for a, s in enumerate(gens):
            pw[a] = self.coordinates(pres.pow(s, pres.p))
            for b in range(a):
                cm[a, b] = self.coordinates(pres.comm(s, gens[b]))
        wts = [pres.weights[l] for l in self.leads]
        return PcPresentation(pres.p, wts, pw, cm)

    @property
    def embedding(self) -> np.ndarray:
        """Images of the induced presentation's generators in the ambient group."""
        return np.array(self.generators, np.int64).reshape(self.lo, self.pres.n)


def _closure(pres: PcPresentation, ips: dict, queue: list, normalizers=()) -> dict:
    p = pres.p
    H = SubgroupHandle(pres, ips)
    while queue:
        x = H.sift(queue.pop())
        l = depth(x)
        if l >= pres.n:
            continue
        x = pres.pow(x, pow(int(x[l]), p - 2, p))
        new = list(H._ips.values())
        H._ips[l] = x
        H._ips = dict(sorted(H._ips.items()))
        H.__dict__.pop("_invs", None)
        queue.append(pres.pow(x, p))
        for y in new:
            queue.append(pres.comm(x, y))
        for g in normalizers:
            queue.append(pres.comm(x, g))
    return H._ips


def subgroup(pres: PcPresentation, generators, normal_closure: bool = False) -> SubgroupHandle:
    gens = [np.asarray(getattr(g, "vector", g), np.int64) for g in generators]
    normalizers = [pres.gen(k) for k in range(pres.n)] if normal_closure else ()
    return SubgroupHandle(pres, _closure(pres, {}, list(gens), normalizers))


def extend(H: SubgroupHandle, elements, normal_closure: bool = False) -> SubgroupHandle:
    """Subgroup generated by H and elements, keeping H's sequence in place."""
    pres = H.pres
    normalizers = [pres.gen(k) for k in range(pres.n)] if normal_closure else ()
    ips = dict(H._ips)
    queue = [np.asarray(e, np.int64) for e in elements]
    if normal_closure:
        queue += [pres.comm(s, g) for s in ips.values() for g in normalizers]
    return SubgroupHandle(pres, _closure(pres, ips, queue, normalizers))


def whole_group(pres: PcPresentation) -> SubgroupHandle:
    return SubgroupHandle(pres, {k: pres.gen(k) for k in range(pres.n)})


def trivial_subgroup(pres: PcPresentation) -> SubgroupHandle:
    return SubgroupHandle(pres, {})


def commutator_subgroup(A: SubgroupHandle, B: SubgroupHandle) -> SubgroupHandle:
    """[A, B] for normal subgroups A, B (returned as a normal subgroup)."""
    pres = A.pres
    return subgroup(pres, [pres.comm(a, b) for a in A.generators for b in B.generators], normal_closure=True)


def derived_subgroup_of(H: SubgroupHandle) -> SubgroupHandle:
    """H' inside the ambient group (normal closure within H only)."""
    pres = H.pres
    gens = H.generators
    return SubgroupHandle(pres, _closure(pres, {}, [pres.comm(a, b) for i, a in enumerate(gens)
                                                    for b in gens[:i]], gens))


# ------------------------------------------------------------------ quotients


@dataclass
class Quotient:
    pres: PcPresentation
    kernel: SubgroupHandle
    kept: list[int]

    def project(self, x) -> np.ndarray:
        r = self.kernel.reduce_coset(np.asarray(x, np.int64))
        return r[self.kept]

    def lift(self, y) -> np.ndarray:
        x = np.zeros(self.kernel.pres.n, np.int64)
        x[self.kept] = y
        return x


def quotient(pres: PcPresentation, normal: SubgroupHandle, label: str | None = None) -> Quotient:
    if not normal.is_normal():
        raise NotNormal("subgroup is not normal")
    N = normal.reduced()
    kept = [k for k in range(pres.n) if k not in N._ips]
    m = len(kept)
    pw = np.zeros((m, m), np.int64)
    cm = np.zeros((m, m, m), np.int64)
    for a, j in enumerate(kept):
        pw[a] = N.reduce_coset(pres.pw[j])[kept]
        for b, i in enumerate(kept[:a]):
            cm[a, b] = N.reduce_coset(pres.cm[j, i])[kept]
    Q = PcPresentation(pres.p, [pres.weights[k] for k in kept], pw, cm, label)
    return Quotient(Q, N, kept)


# -------------------------------------------------------------------- series


def lower_central_terms(pres: PcPresentation) -> list[SubgroupHandle]:
    terms = [whole_group(pres)]
    while terms[-1].lo > 0:
        nxt = commutator_subgroup(terms[-1], terms[0])
        if nxt.lo == terms[-1].lo:
            raise PresentationError("lower central series does not terminate (not nilpotent?)")
        terms.append(nxt)
    return terms


def exponent_p_central_terms(pres: PcPresentation) -> list[SubgroupHandle]:
    """P_0 = G, P_i = [P_{i-1}, G] P_{i-1}^p, down to the trivial group."""
    G = whole_group(pres)
    terms = [G]
    while terms[-1].lo > 0:
        prev = terms[-1]
        gens = [pres.comm(s, g) for s in prev.generators for g in G.generators]
        gens += [pres.pow(s, pres.p) for s in prev.generators]
        terms.append(subgroup(pres, gens, normal_closure=True))
    return terms


def derived_terms(pres: PcPresentation) -> list[SubgroupHandle]:
    terms = [whole_group(pres)]
    while terms[-1].lo > 0:
        nxt = derived_subgroup_of(terms[-1])
        nxt = subgroup(pres, nxt.generators, normal_closure=True)
        terms.append(nxt)
    return terms


@dataclass
class SeriesReport:
    lower_central: list[SubgroupHandle] = field(default_factory=list)
    derived: list[SubgroupHandle] = field(default_factory=list)
    cl: int = 0
    dl: int = 0
    cc: int = 0
    lo: int = 0


def lower_central_series(pres: PcPresentation) -> SeriesReport:
    terms = lower_central_terms(pres)
    cl = len(terms) - 1
    return SeriesReport(lower_central=terms, cl=cl, cc=pres.n - cl, lo=pres.n)


def derived_series(pres: PcPresentation) -> SeriesReport:
    terms = derived_terms(pres)
    return SeriesReport(derived=terms, dl=len(terms) - 1, lo=pres.n)


def series_report(pres: PcPresentation) -> SeriesReport:
    lc = lower_central_series(pres)
    lc.derived = derived_terms(pres)
    lc.dl = len(lc.derived) - 1
    return lc


def nilpotency_class(pres: PcPresentation) -> int:
    return len(lower_central_terms(pres)) - 1


def derived_length(pres: PcPresentation) -> int:
    return len(derived_terms(pres)) - 1


def is_abelian(pres: PcPresentation) -> bool:
    return not pres.cm.any()


# --------------------------------------------------------- abelian invariants


@dataclass(frozen=True)
class AbelianType:
    """Logarithmic abelian type invariants, non-increasing."""
    parts: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(sorted((int(x) for x in self.parts if x), reverse=True)))

    @property
    def rank(self) -> int:
        return len(self.parts)

    @property
    def lo(self) -> int:
        return sum(self.parts)

    def __str__(self):
        return format_abelian_type(self)

    def __lt__(self, other):
        return self.parts < other.parts


_SUP = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")
_UNSUP = str.maketrans("⁰¹²³⁴⁵⁶⁷⁸⁹", "0123456789")


def format_abelian_type(t: AbelianType, unicode: bool = True) -> str:
    """Compressed notation: (9,9,9,3) -> 2³1, trivial group -> 0."""
    if not t.parts:
        return "0"
    out = []
    for part, grp in itertools.groupby(t.parts):
        cnt = len(list(grp))
        s = str(part) if part < 10 else f"({part})"
        if cnt > 1:
            s += str(cnt).translate(_SUP) if unicode else "^" + str(cnt)
        out.append(s)
    return "".join(out)


def parse_abelian_type(text: str) -> AbelianType:
    """Inverse of format_abelian_type; accepts '2^31', '2³1', '1^3', '(10)2', '0'.

    A caret exponent is a single digit, as in the compressed notation."""
    s = text.strip()
    if s in ("0", "()", ""):
        return AbelianType(())
    token = re.compile(r"(\(\d+\)|\d)(\^\d|[⁰¹²³⁴⁵⁶⁷⁸⁹]+)?")
    parts, pos = [], 0
    while pos < len(s):
        m = token.match(s, pos)
        if not m:
            raise ValueError(f"cannot parse abelian type {text!r}")
        base = int(m.group(1).strip("()"))
        mult = m.group(2)
        cnt = 1 if not mult else int(mult.lstrip("^").translate(_UNSUP))
        parts += [base] * cnt
        pos = m.end()
    return AbelianType(tuple(parts))


def _log_p(x: int, p: int) -> int:
    e = 0
    while x > 1:
        if x % p:
            raise ValueError("invariant factor is not a power of p")
        x //= p
        e += 1
    return e


def abelian_type_invariants(obj) -> AbelianType:
    """Invariants of H/H' from the integer relation matrix of H."""
    pres = obj.induced if isinstance(obj, SubgroupHandle) else obj
    n, p = pres.n, pres.p
    if n == 0:
        return AbelianType(())
    rows = []
    for i in range(n):
        r = [-int(x) for x in pres.pw[i]]
        r[i] += p
        rows.append(r)
    for j in range(n):
        for i in range(j):
            if pres.cm[j, i].any():
                rows.append([int(x) for x in pres.cm[j, i]])
    diag = linalg.smith_diagonal(np.array(rows, dtype=object))
    if len(diag) < n or any(x == 0 for x in diag):
        raise PresentationError("relation matrix has infinite cokernel")
    return AbelianType(tuple(_log_p(x, p) for x in diag))


# ------------------------------------------------------- maximal subgroups


def frattini_subgroup(pres: PcPresentation) -> SubgroupHandle:
    G = whole_group(pres)
    gens = [pres.comm(a, b) for i, a in enumerate(G.generators) for b in G.generators[:i]]
    gens += [pres.pow(a, pres.p) for a in G.generators]
    return subgroup(pres, gens, normal_closure=True)


def frattini_quotient(pres: PcPresentation) -> Quotient:
    return quotient(pres, frattini_subgroup(pres))


def generator_rank(pres: PcPresentation) -> int:
    return pres.n - frattini_subgroup(pres).lo


def maximal_subgroups(pres: PcPresentation) -> list[SubgroupHandle]:
    """Index-p subgroups ordered by the normalized normal vectors of their
    hyperplanes in G/Phi(G) (lexicographic)."""
    Phi = frattini_subgroup(pres)
    Q = quotient(pres, Phi)
    d = len(Q.kept)
    out = []
    for v in linalg.normalized_projective_points(d, pres.p):
        basis = linalg.nullspace(np.array([v], np.int64), pres.p)
        gens = [Q.lift(b) for b in basis]
        out.append(extend(Phi.reduced(), gens))
    return out


def hyperplane_normals(d: int, p: int) -> list[tuple[int, ...]]:
    return linalg.normalized_projective_points(d, p)
