"""Artin transfers, transfer kernel and target types, second-order IPADs."""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .pc import PcPresentation
from .structure import (AbelianType, SubgroupHandle, abelian_type_invariants, derived_subgroup_of,
                        format_abelian_type, maximal_subgroups, quotient, subgroup, whole_group)


class IndexNotP(ValueError):
    pass


class KernelNotRecognized(RuntimeError):
    pass


# ------------------------------------------------------------------ transfer


class Abelianization:
    """H/H' with normal forms, for a subgroup H of the ambient group."""

    def __init__(self, H: SubgroupHandle):
        self.H = H
        Hp = H.induced
        self.derived = derived_subgroup_of(whole_group(Hp))
        self.q = quotient(Hp, self.derived)

    def project(self, x) -> np.ndarray:
        c = self.H.coordinates(x)
        if c is None:
            raise ValueError("element is not in the subgroup")
        return self.q.project(c)

    def mul(self, a, b):
        return self.q.pres.mul(a, b)

    def identity(self):
        return self.q.pres.identity()


class Transfer:
    """Transfer G -> H/H' for H of index p, from a left transversal."""

    def __init__(self, pres: PcPresentation, H: SubgroupHandle, transversal=None):
        p = pres.p
        if H.lo != pres.n - 1:
            raise IndexNotP("subgroup does not have index p")
        self.pres, self.H = pres, H
        self.ab = Abelianization(H)
        if transversal is None:
            t = next(pres.gen(k) for k in range(pres.n) if not H.contains(pres.gen(k)))
            transversal = [pres.pow(t, i) for i in range(p)]
        self.reps = [np.asarray(r, np.int64) for r in transversal]
        self._rinv = [pres.inv(r) for r in self.reps]
        # sanity: one representative per coset
        for i in range(p):
            for j in range(i):
                if H.contains(pres.mul(self._rinv[j], self.reps[i])):
                    raise ValueError("not a transversal")

    def __call__(self, g) -> np.ndarray:
        pres = self.pres
        g = np.asarray(g, np.int64)
        acc = self.ab.identity()
        for r in self.reps:
            gr = pres.mul(g, r)
            for rinv in self._rinv:
                h = pres.mul(rinv, gr)
                if self.H.contains(h):
                    acc = self.ab.mul(acc, self.ab.project(h))
                    break
            else:
                raise RuntimeError("coset lookup failed")
        return acc

    def kernel(self) -> SubgroupHandle:
        """Kernel as a subgroup of G (it contains G')."""
        pres = self.pres
        D = derived_subgroup_of(whole_group(pres))
        q = quotient(pres, D)
        gens = list(D.generators)
        for y in _elements(q.pres):
            x = q.lift(y)
            if not self(x).any():
                gens.append(x)
        return subgroup(pres, gens)


def _elements(pres):
    for exps in itertools.product(range(pres.p), repeat=pres.n):
        yield np.array(exps, np.int64)


def artin_transfer(pres: PcPresentation, H: SubgroupHandle, transversal=None) -> Transfer:
    return Transfer(pres, H, transversal)


def random_transversal(pres: PcPresentation, H: SubgroupHandle, rng) -> list[np.ndarray]:
    """p coset representatives t^i h_i with random h_i in H."""
    t = next(pres.gen(k) for k in range(pres.n) if not H.contains(pres.gen(k)))
    out = []
    for i in range(pres.p):
        h = pres.identity()
        for g in H.generators:
            h = pres.mul(h, pres.pow(g, int(rng.integers(pres.p))))
        out.append(pres.mul(pres.pow(t, i), h))
    return out


# ---------------------------------------------------------------------- TKT


@lru_cache(maxsize=1)
def _name_table() -> dict[tuple, str]:
    with open(Path(__file__).with_name("data") / "tkt_names.json", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {canonical_kappa(tuple(int(c) for c in v)): k for k, v in raw.items()}


def _act(kappa, pi):
    out = [0] * len(kappa)
    for i, k in enumerate(kappa):
        out[pi[i] - 1] = 0 if k == 0 else pi[k - 1]
    return tuple(out)


def canonical_kappa(kappa) -> tuple:
    kappa = tuple(int(k) for k in kappa)
    if any(k < 0 or k > len(kappa) for k in kappa):
        raise ValueError(f"invalid transfer kernel type {kappa}")
    return min(_act(kappa, pi) for pi in itertools.permutations(range(1, len(kappa) + 1)))


@dataclass(frozen=True)
class TransferKernelType:
    kappa: tuple
    canonical_form: tuple
    name: str | None

    def __str__(self):
        return "(" + "".join(map(str, self.kappa)) + ")"

    @property
    def section(self) -> str | None:
        return self.name.split(".")[0] if self.name else None

    @property
    def display_name(self) -> str:
        return self.name or "unnamed"


def canonicalize_tkt(kappa) -> TransferKernelType:
    canon = canonical_kappa(kappa)
    name = _name_table().get(canon) if len(canon) == 4 else None
    return TransferKernelType(tuple(int(k) for k in kappa), canon, name)


def _transfers(pres: PcPresentation):
    key = "transfers"
    if key not in pres._cache:
        maxs = maximal_subgroups(pres)
        pres._cache[key] = (maxs, [Transfer(pres, H) for H in maxs])
    return pres._cache[key]


def tkt(pres: PcPresentation, subgroups=None) -> TransferKernelType:
    """kappa(i) = j if ker T_i = H_j, 0 if the kernel is everything."""
    if subgroups is None:
        maxs, trans = _transfers(pres)
    else:
        maxs, trans = subgroups, [Transfer(pres, H) for H in subgroups]
    keys = [H.key() for H in maxs]
    kappa = []
    for T in trans:
        ker = T.kernel()
        if ker.lo == pres.n:
            kappa.append(0)
            continue
        try:
            kappa.append(keys.index(ker.key()) + 1)
        except ValueError:
            raise KernelNotRecognized(f"transfer kernel of order p^{ker.lo} is neither total nor maximal") from None
    return canonicalize_tkt(kappa)


def ttt(pres: PcPresentation) -> list[AbelianType]:
    maxs, _ = _transfers(pres)
    return [abelian_type_invariants(H) for H in maxs]


_SUPER = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


def _sort_key(t: AbelianType):
    return (-t.rank, tuple(-x for x in t.parts))


def format_multiset(types, sort: bool = True) -> str:
    """(1³,(21)³) style rendering of a list of abelian types."""
    items = sorted(types, key=_sort_key) if sort else list(types)
    out = []
    for t, grp in itertools.groupby(items):
        cnt = len(list(grp))
        s = format_abelian_type(t)
        if cnt > 1:
            if len(s) > 1:
                s = f"({s})"
            s += str(cnt).translate(_SUPER)
        out.append(s)
    return "(" + ",".join(out) + ")"


@dataclass(frozen=True)
class ArtinPattern:
    kappa: TransferKernelType
    tau: tuple
    epsilon: int

    def __str__(self):
        return f"({self.kappa}, {format_multiset(self.tau)})"

    def to_json(self) -> dict:
        return {"kappa": "".join(map(str, self.kappa.kappa)),
                "canonical": "".join(map(str, self.kappa.canonical_form)),
                "name": self.kappa.name, "tau": [str(t) for t in self.tau],
                "tau_text": format_multiset(self.tau), "epsilon": self.epsilon}


def artin_pattern(pres: PcPresentation) -> ArtinPattern:
    tau = tuple(ttt(pres))
    eps = sum(1 for t in tau if t.parts == (1, 1, 1))
    return ArtinPattern(tkt(pres), tau, eps)


# ---------------------------------------------------------------------- IPAD


@dataclass(frozen=True)
class Ipad2:
    top: AbelianType
    layers: tuple     # per maximal subgroup: (type of H, (type of G', other maximal subgroups sorted))

    def __str__(self):
        entries = []
        for h, comps in self.layers:
            body = format_abelian_type(comps[0]) if comps else ""
            if len(comps) > 1:
                body += "," + format_multiset(comps[1:], sort=False)[1:-1]
            entries.append((h, f"{format_abelian_type(h)};{body}"))
        counts = Counter(e for _, e in entries)
        order = sorted({e: h for h, e in entries}.items(), key=lambda t: (tuple(-x for x in t[1].parts), t[0]))
        parts = []
        for e, _ in order:
            s = f"({e})"
            if counts[e] > 1:
                s += str(counts[e]).translate(_SUPER)
            parts.append(s)
        return f"[{format_abelian_type(self.top)};" + ",".join(parts) + "]"

    def to_json(self) -> dict:
        return {"top": str(self.top),
                "layers": [{"subgroup": str(h), "components": [str(c) for c in comps]}
                           for h, comps in self.layers]}


def ipad2(pres: PcPresentation) -> Ipad2:
    """Abelianizations of the maximal subgroups and of their maximal subgroups.

    Within each H the abelianization of G' (a maximal subgroup of H whenever
    G/G' has order p^2) is listed first, the others in descending order."""
    top = abelian_type_invariants(pres)
    maxs, _ = _transfers(pres)
    D = derived_subgroup_of(whole_group(pres))
    layers = []
    for H in maxs:
        Hp = H.induced
        emb = H.embedding
        comps_first = None
        rest = []
        for M in maximal_subgroups(Hp):
            amb = subgroup(pres, [pres.apply(emb, g) for g in M.generators])
            t = abelian_type_invariants(M)
            if comps_first is None and amb.key() == D.key():
                comps_first = t
            else:
                rest.append(t)
        rest.sort(key=lambda t: tuple(-x for x in t.parts))
        comps = ((comps_first,) if comps_first is not None else ()) + tuple(rest)
        layers.append((abelian_type_invariants(H), comps))
    return Ipad2(top, tuple(layers))


# ------------------------------------------------------------------ topology


def _section(pres) -> str:
    return tkt(pres).section or "?"


def _chain(node) -> list:
    """The vertex and its ancestors down to the class-2 floor (the abelian
    root is not part of a root path)."""
    out = [node]
    while out[-1].parent is not None and out[-1].parent.parent is not None:
        out.append(out[-1].parent)
    return out


def topology_symbol(vertices, other=None) -> str:
    """Section letters joined by step sizes and arrows towards the ancestor.

    One argument: a path (RootPath, list of presentations leaf first, or a
    TreeNode and its ancestors), rendered leaf first, e.g. ``D(2→)a``.
    Two TreeNodes: the fork form ``leaf (s→) fork (s←) ... (s←) leaf``
    through their deepest common ancestor."""
    if other is not None:
        left, right = _chain(vertices), _chain(other)
        right_keys = [str(v.address) for v in right]
        k = next(i for i, v in enumerate(left) if str(v.address) in right_keys)
        fork = left[k]
        down = right[:right_keys.index(str(fork.address)) + 1][::-1]
        out = ""
        for v in left[:k]:
            out += f"{_section(v.pres)}({v.step}→)"
        out += _section(fork.pres)
        for v in down[1:]:
            out += f"({v.step}←){_section(v.pres)}"
        return out
    if hasattr(vertices, "address"):
        verts = [v.pres for v in _chain(vertices)]
    else:
        verts = getattr(vertices, "vertices", vertices)
    if len(verts) < 2:
        return ""
    letters = [_section(v) for v in verts]
    out = letters[0]
    for child, par, letter in zip(verts, verts[1:], letters[1:]):
        out += f"({child.n - par.n}→){letter}"
    return out
