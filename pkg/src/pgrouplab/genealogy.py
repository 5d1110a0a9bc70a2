"""Descendant trees of finite p-groups.

Immediate descendants of a capable group G are the quotients G*/U of its
p-cover by allowable subspaces U of the multiplicator M (codimension s,
U + N = M for the nucleus N), one per Aut(G)-orbit.  Orbit representatives
are the allowable subspaces with the least index in the enumeration of
``SubspaceTables``; counters follow that order.  The automorphism group of a
child is obtained by lifting the stabiliser of its subspace and adjoining the
central automorphisms of the new layer, so descending never needs an
exhaustive search.

Walking the same construction up the lower exponent-p central series of an
arbitrary group (``standardize``) picks the least subspace at every step,
which yields a canonical presentation, an explicit isomorphism and Aut(G).
"""
from __future__ import annotations

import itertools
import json
import os
import re
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels as K
from . import linalg
from .autgroup import (AutGroup, Automorphism, BudgetExceeded, central_automorphisms, child_automorphism,
                       gl_group, multiplicator_action)
from .pc import PcPresentation, PresentationError, elementary_abelian, format_presentation, parse_presentation
from .pcover import PCoverData, _cover_of_standard, is_standard, p_cover, quotient_of_cover
from .structure import (SubgroupHandle, abelian_type_invariants, exponent_p_central_terms,
                        lower_central_terms, quotient, derived_length)


class StepExceedsNucleus(ValueError):
    pass


class AbelianInput(ValueError):
    pass


class UnknownRoot(KeyError):
    pass


class CounterOutOfRange(IndexError):
    pass


class FingerprintCollision(RuntimeError):
    def __init__(self, fingerprint, candidates):
        super().__init__(f"fingerprint shared by {sorted(candidates)}")
        self.fingerprint = fingerprint
        self.candidates = candidates


# ------------------------------------------------------------ subspace index


class SubspaceTables:
    """Enumeration of allowable subspaces for (mu, nu, s)."""

    def __init__(self, mu: int, nu: int, s: int, p: int):
        if not 1 <= s <= nu:
            raise StepExceedsNucleus(f"step size {s} outside 1..{nu}")
        self.mu, self.nu, self.s, self.p = mu, nu, s, p
        self.k = mu - nu
        r = nu - s
        combos = list(itertools.combinations(range(nu), r))
        self.combos = np.array(combos, np.int64).reshape(len(combos), r)
        self.comb_rank = np.zeros(1 << nu, np.int64)
        self.free_counts = np.zeros(len(combos), np.int64)
        offsets = [0]
        for ci, cmb in enumerate(combos):
            mask = sum(1 << c for c in cmb)
            self.comb_rank[mask] = ci
            f = sum(1 for i, c in enumerate(cmb) for c2 in range(c + 1, nu) if c2 not in cmb)
            self.free_counts[ci] = f
            offsets.append(offsets[-1] + p ** f)
        self.comb_offset = np.array(offsets, np.int64)
        self.total = offsets[-1] * p ** (self.k * s)
        assert offsets[-1] == linalg.gaussian_binomial(nu, r, p)

    def _args(self):
        return self.k, self.nu, self.s, self.p

    def index(self, U) -> int:
        U = np.ascontiguousarray(U, np.int64)
        return int(K.subspace_index(U, *self._args(), self.comb_rank, self.comb_offset))

    def decode(self, idx: int) -> np.ndarray:
        return K.subspace_decode(idx, *self._args(), self.combos, self.comb_offset, self.free_counts)

    def act_all(self, mats: np.ndarray) -> np.ndarray:
        return K.act_on_subspaces(mats, self.total, *self._args(), self.combos, self.comb_rank,
                                  self.comb_offset, self.free_counts)

    def act(self, mats: np.ndarray, idxs) -> np.ndarray:
        return K.act_on_list(mats, np.asarray(idxs, np.int64), *self._args(), self.combos, self.comb_rank,
                             self.comb_offset, self.free_counts)


def _action_data(aut: AutGroup, data: PCoverData):
    """Split Aut generators into those acting trivially on M and the rest."""
    acting, mats, trivial = [], [], []
    ident = np.eye(data.mu, dtype=np.int64)
    for g in aut.generators:
        A = multiplicator_action(g, data)
        if np.array_equal(A, ident):
            trivial.append(g)
        else:
            acting.append(g)
            mats.append(A)
    mats = np.array(mats, np.int64).reshape(len(mats), data.mu, data.mu)
    return acting, mats, trivial


class _Transversal:
    """Automorphisms carrying the orbit representative to each orbit member."""

    def __init__(self, pres, gens, pred, pgen):
        self.gens = gens
        self.pred, self.pgen = pred, pgen
        self.t = {}
        self.tinv = {}
        self.ident = Automorphism.identity(pres)

    def _chain(self, u):
        path = []
        while self.pred[u] >= 0 and u not in self.t:
            path.append(u)
            u = self.pred[u]
        return u, path

    def forward(self, u) -> Automorphism:
        base, path = self._chain(u)
        cur = self.t.get(base, self.ident)
        for v in reversed(path):
            cur = self.gens[self.pgen[v]] * cur
            self.t[v] = cur
        return cur

    def backward(self, u) -> Automorphism:
        path = []
        v = u
        while self.pred[v] >= 0 and v not in self.tinv:
            path.append(v)
            v = self.pred[v]
        cur = self.tinv.get(v, self.ident)
        for w in reversed(path):
            cur = cur * self.gens[self.pgen[w]].inverse()
            self.tinv[w] = cur
        return cur


def _schreier_pairs(members, image, ngens, pred, pgen):
    for u in members:
        for g in range(ngens):
            v = image(g, u)
            if pred[v] == u and pgen[v] == g:
                continue
            yield u, g, v


def _lift_stabilizer(child, data, S, base_order, orbit_size, acting, trivial, members, image, pred, pgen):
    """Aut(child) from the stabiliser of the subspace at members[0]."""
    d = child.rank
    s = child.n - data.n
    target = base_order // orbit_size * data.base.p ** (d * s)
    A = AutGroup(child)
    for z in central_automorphisms(child, data.n):
        A.add(z, target)
    for a in trivial:
        if A.order >= target:
            break
        A.add(child_automorphism(a, data, S, child), target)
    if A.order < target:
        trans = _Transversal(data.base, acting, pred, pgen)
        for u, g, v in _schreier_pairs(members, image, len(acting), pred, pgen):
            sigma = trans.backward(v) * (acting[g] * trans.forward(u))
            if sigma.is_identity():
                continue
            A.add(child_automorphism(sigma, data, S, child), target)
            if A.order >= target:
                break
    if A.order != target:
        raise RuntimeError(f"lifted automorphism group has order {A.order}, expected {target}")
    return A


def _stabilizer_has_minus_identity(aut, acting, trivial, members, image, pred, pgen) -> bool:
    """Whether the Frattini image of the stabiliser contains -I."""
    p, d = aut.p, aut.d
    minus = (-np.eye(d, dtype=np.int64)) % p
    mats = [g.matrix for g in acting]
    tm = {members[0]: np.eye(d, dtype=np.int64)}
    for u in members[1:]:
        tm[u] = linalg.matmul(mats[pgen[u]], tm[pred[u]], p)
    found = {}
    gens = []

    def consider(M):
        key = M.tobytes()
        if key not in found:
            found[key] = M
            gens.append(M)

    for a in trivial:
        consider(a.matrix % p)
    for u, g, v in _schreier_pairs(members, image, len(acting), pred, pgen):
        M = linalg.matmul(linalg.inverse_mod(tm[v], p), linalg.matmul(mats[g], tm[u], p), p)
        consider(M)
    # closure of the generated matrix group
    group = {np.eye(d, dtype=np.int64).tobytes(): np.eye(d, dtype=np.int64)}
    frontier = list(group.values())
    gen_list = list(found.values())
    while frontier:
        nxt = []
        for m in frontier:
            for g in gen_list:
                x = linalg.matmul(g, m, p)
                kx = x.tobytes()
                if kx not in group:
                    group[kx] = x
                    nxt.append(x)
        frontier = nxt
    return minus.tobytes() in group


# ------------------------------------------------------------ descendants


class StepOrbits:
    """All Aut(G)-orbits of allowable subspaces of one step size."""

    def __init__(self, pres: PcPresentation, aut: AutGroup, s: int):
        self.pres, self.aut, self.s = pres, aut, s
        self.data = _cover_of_standard(pres)
        data = self.data
        if data.nu == 0 or not 1 <= s <= data.nu:
            raise StepExceedsNucleus(f"step size {s} outside 1..{data.nu}")
        self.tables = SubspaceTables(data.mu, data.nu, s, pres.p)
        self.acting, self.mats, self.trivial = _action_data(aut, data)
        total = self.tables.total
        if len(self.acting):
            self.images = self.tables.act_all(self.mats)
            root = K.union_find_orbits(self.images)
        else:
            self.images = np.zeros((0, total), np.int64)
            root = np.arange(total)
        self.root = root
        self.reps = np.unique(root)
        self.pred, self.pgen, order = K.bfs_forest(self.images, self.reps)
        sizes = np.bincount(root, minlength=total)
        self.orbit_sizes = sizes[self.reps]
        grouped = order[np.argsort(root[order], kind="stable")]
        bounds = np.cumsum(self.orbit_sizes)
        self._members = np.split(grouped, bounds[:-1])

    def __len__(self):
        return len(self.reps)

    def members(self, c: int) -> np.ndarray:
        return self._members[c]

    def image(self, g, u):
        return int(self.images[g, u])

    def child(self, c: int, label: str | None = None) -> tuple[PcPresentation, np.ndarray]:
        U = self.tables.decode(int(self.reps[c]))
        return quotient_of_cover(self.data, U, label)

    def child_aut(self, c: int, child: PcPresentation, S: np.ndarray) -> AutGroup:
        return _lift_stabilizer(child, self.data, S, self.aut.order, int(self.orbit_sizes[c]), self.acting,
                                self.trivial, [int(u) for u in self.members(c)], self.image, self.pred, self.pgen)

    def child_has_gia(self, c: int) -> bool:
        return _stabilizer_has_minus_identity(self.aut, self.acting, self.trivial,
                                              [int(u) for u in self.members(c)], self.image, self.pred, self.pgen)


# ------------------------------------------------------------ standard form


@dataclass
class Standardized:
    presentation: PcPresentation
    images: np.ndarray          # images of the canonical generators in the input group
    aut: AutGroup
    steps: list = field(default_factory=list)   # (step size, subspace index) per layer


def _layer_coordinates(G: PcPresentation, terms: list[SubgroupHandle]):
    """Functions mapping x in P_w to its coordinates in P_w / P_{w+1}."""
    out = []
    for w in range(len(terms) - 1):
        upper, lower = terms[w], terms[w + 1]
        lower_leads = set(lower.leads)
        basis = {l: v for l, v in upper._ips.items() if l not in lower_leads}
        H = SubgroupHandle(G, {**lower._ips, **basis})
        pos = [t for t, l in enumerate(H.leads) if l in basis]

        def coords(x, H=H, pos=pos):
            c = H.coordinates(x)
            if c is None:
                raise ValueError("element outside the layer")
            return c[pos]

        out.append((coords, [basis[l] for l in sorted(basis)]))
    return out


def _single_orbit(tables: SubspaceTables, mats: np.ndarray, start: int):
    """BFS over one orbit; returns members (BFS order), pred, pgen, images."""
    pred, pgen, imgs = {start: -1}, {start: -1}, {}
    members = [start]
    frontier = [start]
    while frontier:
        out = tables.act(mats, frontier) if len(mats) else np.zeros((0, len(frontier)), np.int64)
        nxt = []
        for t, u in enumerate(frontier):
            imgs[u] = out[:, t]
            for g in range(out.shape[0]):
                v = int(out[g, t])
                if v not in pred:
                    pred[v], pgen[v] = u, g
                    members.append(v)
                    nxt.append(v)
        frontier = nxt
    return members, pred, pgen, imgs


def standardize(pres: PcPresentation) -> Standardized:
    """Canonical presentation of the group, an isomorphism onto it, and Aut."""
    G = pres
    if G.n == 0:
        raise PresentationError("the trivial group has no standard presentation here")
    p = G.p
    terms = exponent_p_central_terms(G)
    layers = _layer_coordinates(G, terms)
    _, basis0 = layers[0]
    d = len(basis0)
    Q = elementary_abelian(p, d)
    aut = gl_group(Q)
    psi = np.array(basis0, np.int64).reshape(d, G.n)
    steps = []
    for w in range(1, len(layers)):
        data = _cover_of_standard(Q)
        qd, kind, da, db = Q.definition_arrays()
        img = np.zeros((Q.n, G.n), np.int64)
        img[:d] = psi
        K.extend_by_definitions(img, qd, kind, da, db, *G.arrays)
        coords, basis = layers[w]
        T = np.zeros((len(basis), data.mu), np.int64)
        for b, rel in enumerate(data.relations):
            if rel[0] == "pow":
                lhs, rhs = G.pow(img[rel[1]], p), Q.pw[rel[1]]
            else:
                lhs, rhs = G.comm(img[rel[1]], img[rel[2]]), Q.cm[rel[1], rel[2]]
            T[:, b] = coords(G.mul(G.inv(G.apply(img, rhs)), lhs))
        U, _ = linalg.rref(linalg.nullspace(T, p), p)
        s = data.mu - U.shape[0]
        tables = SubspaceTables(data.mu, data.nu, s, p)
        acting, mats, trivial = _action_data(aut, data)
        start = tables.index(U)
        members, pred, pgen, imgs = _single_orbit(tables, mats, start)
        u0 = min(members)
        # automorphism t with t(U) = U0
        trans = _Transversal(Q, acting, pred, pgen)
        t = trans.forward(u0)
        # stabiliser of U0: re-root the orbit graph at U0
        image = lambda g, u: int(imgs[u][g])
        spred, spgen = {u0: -1}, {u0: -1}
        smembers = [u0]
        for u in smembers:
            for g in range(len(acting)):
                v = image(g, u)
                if v not in spred:
                    spred[v], spgen[v] = u, g
                    smembers.append(v)
        child, S = quotient_of_cover(data, tables.decode(u0))
        new_aut = _lift_stabilizer(child, data, S, aut.order, len(members), acting, trivial, smembers, image,
                                   spred, spgen)
        tinv = t.inverse()
        psi = np.array([G.apply(img, tinv.img[j]) for j in range(d)], np.int64)
        steps.append((s, u0))
        Q, aut = child, new_aut
    qd, kind, da, db = Q.definition_arrays()
    img = np.zeros((Q.n, G.n), np.int64)
    img[:d] = psi
    K.extend_by_definitions(img, qd, kind, da, db, *G.arrays)
    from .pc import relation_violations
    from .structure import subgroup
    if relation_violations(Q, G, img) or subgroup(G, list(img)).lo != G.n:
        raise RuntimeError("standardization did not produce an isomorphism")
    return Standardized(Q, img, aut, steps)


def canonical_form(pres: PcPresentation) -> PcPresentation:
    return standardize(pres).presentation


def are_isomorphic(a: PcPresentation, b: PcPresentation) -> bool:
    if a.p != b.p or a.n != b.n:
        return False
    if a.n == 0:
        return True
    return canonical_form(a).key() == canonical_form(b).key()


def automorphism_group(pres: PcPresentation) -> AutGroup:
    """Aut of a standard presentation (of an arbitrary one, via its canonical form)."""
    st = standardize(pres)
    if st.presentation.key() == pres.key():
        return st.aut
    return transport_aut(st, pres)


def transport_aut(st: Standardized, pres: PcPresentation) -> AutGroup:
    """Aut(pres) from Aut(canonical) through the isomorphism (pres standard)."""
    Q, phi = st.presentation, st.images
    layers_q = [[k for k in range(Q.n) if Q.weights[k] == w] for w in range(1, Q.pclass + 1)]
    terms = exponent_p_central_terms(pres)
    coords = [c for c, _ in _layer_coordinates(pres, terms)]
    from .autgroup import solve_layered
    d = pres.rank
    phinv_def = [solve_layered(Q, pres, phi, layers_q, lambda w, x: coords[w](x), pres.gen(j)) for j in range(d)]
    A = AutGroup(pres)
    for a in st.aut.generators:
        imgs = []
        for j in range(d):
            y = Q.apply(a.img, phinv_def[j])
            imgs.append(pres.apply(phi, y))
        A.add(Automorphism.from_defining_images(pres, np.array(imgs)), st.aut.order)
    assert A.order == st.aut.order
    return A


# -------------------------------------------------------------- parent etc


def _nilpotency_terms(pres):
    return lower_central_terms(pres)


def parent(pres: PcPresentation) -> PcPresentation:
    """Quotient by the last nontrivial lower central term."""
    terms = lower_central_terms(pres)
    cl = len(terms) - 1
    if cl < 2:
        raise AbelianInput("abelian group has no parent in the tree")
    return quotient(pres, terms[cl - 1]).pres


@dataclass
class RootPath:
    vertices: list          # G, pi(G), ..., class-2 floor
    steps: list             # s_i = lo(pi^{i-1} G) - lo(pi^i G)
    parent_nu: list         # nu(pi^i G)
    parent_mu: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)


def root_path(pres: PcPresentation) -> RootPath:
    """Iterated parents down to the class-2 floor (last edge excluded)."""
    verts = [pres]
    terms = lower_central_terms(pres)
    cl = len(terms) - 1
    steps, nus, mus = [], [], []
    cur = pres
    while cl > 2:
        par = parent(cur)
        cov = p_cover(par)
        steps.append(cur.n - par.n)
        nus.append(cov.nu)
        mus.append(cov.mu)
        verts.append(par)
        cur = par
        cl -= 1
    return RootPath(verts, steps, nus, mus)


@dataclass
class ExtremalReport:
    extremal: bool
    edges: list   # (s_i, nu_i)

    def __bool__(self):
        return self.extremal


def is_extremal_path(pres: PcPresentation) -> ExtremalReport:
    rp = root_path(pres)
    edges = list(zip(rp.steps, rp.parent_nu))
    return ExtremalReport(all(s == nu for s, nu in edges), edges)


def bb_series_laws(n: int) -> tuple[int, int, int]:
    if n < 0:
        raise ValueError("n must be non-negative")
    return 8 + 3 * n, 5 + 2 * n, 3 + n


# ----------------------------------------------------------------- the tree


_ADDRESS = re.compile(r"[-−]#(\d+);(\d+)")


@dataclass(frozen=True)
class TreeAddress:
    root: str
    steps: tuple = ()

    def __str__(self):
        return self.root + "".join(f"-#{s};{c}" for s, c in self.steps)

    def child(self, s: int, c: int) -> "TreeAddress":
        return TreeAddress(self.root, self.steps + ((s, c),))

    @classmethod
    def parse(cls, text: str) -> "TreeAddress":
        text = text.strip()
        m = re.search(r"[-−]#", text)
        root = text if m is None else text[:m.start()]
        rest = "" if m is None else text[m.start():]
        steps = []
        pos = 0
        while pos < len(rest):
            mm = _ADDRESS.match(rest, pos)
            if not mm:
                raise ValueError(f"malformed address {text!r}")
            s, c = int(mm.group(1)), int(mm.group(2))
            if s < 1 or c < 1:
                raise CounterOutOfRange(f"step sizes and counters start at 1 in {text!r}")
            steps.append((s, c))
            pos = mm.end()
        if not root:
            raise ValueError(f"malformed address {text!r}")
        return cls(root, tuple(steps))


ROOT_LABEL = "C3xC3"


class TreeNode:
    def __init__(self, pres: PcPresentation, address: TreeAddress, parent: "TreeNode | None" = None,
                 step: int = 0, aut: AutGroup | None = None, origin=None):
        self.pres = pres
        self.address = address
        self.parent = parent
        self.step = step
        self._aut = aut
        self._origin = origin       # (StepOrbits, counter, S)
        self._children: dict[int, list[TreeNode]] = {}
        self._gia = None

    def __repr__(self):
        return f"<TreeNode {self.address} order {self.pres.p}^{self.pres.n}>"

    @property
    def lo(self) -> int:
        return self.pres.n

    @property
    def cover(self) -> PCoverData:
        return _cover_of_standard(self.pres)

    @property
    def nu(self) -> int:
        return self.cover.nu

    @property
    def mu(self) -> int:
        return self.cover.mu

    @property
    def capable(self) -> bool:
        return self.nu > 0

    @property
    def aut(self) -> AutGroup:
        if self._aut is None:
            orbits, c, S = self._origin
            self._aut = orbits.child_aut(c, self.pres, S)
        return self._aut

    @property
    def has_gia(self) -> bool:
        if self._gia is None:
            if self._aut is not None or self._origin is None:
                minus = (-np.eye(self.pres.rank, dtype=np.int64)) % self.pres.p
                self._gia = self.aut.has_matrix(minus)
            else:
                orbits, c, _ = self._origin
                self._gia = orbits.child_has_gia(c)
        return self._gia

    @property
    def abelian_type(self):
        return abelian_type_invariants(self.pres)

    def step_orbits(self, s: int) -> StepOrbits:
        return StepOrbits(self.pres, self.aut, s)

    def children(self, s: int) -> list["TreeNode"]:
        if s not in self._children:
            if not 1 <= s <= self.nu:
                raise StepExceedsNucleus(f"step size {s} outside 1..{self.nu}")
            orbits = self.step_orbits(s)
            kids = []
            for c in range(len(orbits)):
                addr = self.address.child(s, c + 1)
                child, S = orbits.child(c, str(addr))
                kids.append(TreeNode(child, addr, self, s, origin=(orbits, c, S)))
            self._children[s] = kids
        return self._children[s]

    def all_children(self) -> list["TreeNode"]:
        return [c for s in range(1, self.nu + 1) for c in self.children(s)]

    def descendant_counts(self) -> list[tuple[int, int]]:
        return [(len(kids), sum(1 for c in kids if c.capable))
                for kids in (self.children(s) for s in range(1, self.nu + 1))]

    def child(self, s: int, c: int) -> "TreeNode":
        kids = self.children(s)
        if not 1 <= c <= len(kids):
            raise CounterOutOfRange(f"counter {c} outside 1..{len(kids)} at {self.address} step {s}")
        return kids[c - 1]


def format_counts(counts) -> str:
    return "(" + ",".join(f"{n}/{c}" for n, c in counts) + ")"


def root_node(p: int = 3) -> TreeNode:
    E = elementary_abelian(p, 2, ROOT_LABEL if p == 3 else f"C{p}xC{p}")
    return TreeNode(E, TreeAddress(E.label), aut=gl_group(E))


class Tree:
    """Lazily expanded descendant tree of C_p x C_p with labelled shortcuts."""

    def __init__(self, p: int = 3, labels: dict | None = None):
        self.root = root_node(p)
        self.labels = dict(labels if labels is not None else curated_labels())

    def resolve(self, addr: "TreeAddress | str") -> TreeNode:
        if isinstance(addr, str):
            addr = TreeAddress.parse(addr)
        root = normalize_label(addr.root)
        if root == self.root.address.root:
            node = self.root
        elif root in self.labels:
            base = TreeAddress.parse(self.labels[root])
            node = self.resolve(base)
        else:
            raise UnknownRoot(addr.root)
        for s, c in addr.steps:
            if s > node.nu:
                raise StepExceedsNucleus(f"step size {s} outside 1..{node.nu} at {node.address}")
            node = node.child(s, c)
        return node


def resolve_address(addr: "TreeAddress | str", tree: Tree | None = None) -> TreeNode:
    return (tree or default_tree()).resolve(addr)


_DEFAULT_TREE: Tree | None = None


def default_tree() -> Tree:
    global _DEFAULT_TREE
    if _DEFAULT_TREE is None:
        _DEFAULT_TREE = Tree()
    return _DEFAULT_TREE


def descendants(node_or_pres, step: int) -> list[TreeNode]:
    node = _as_node(node_or_pres)
    return node.children(step)


def descendant_counts(node_or_pres) -> list[tuple[int, int]]:
    return _as_node(node_or_pres).descendant_counts()


def _as_node(obj) -> TreeNode:
    if isinstance(obj, TreeNode):
        return obj
    if isinstance(obj, (str, TreeAddress)):
        return resolve_address(obj)
    st = standardize(obj)
    return TreeNode(st.presentation, TreeAddress(obj.label or "G"), aut=st.aut)


def purged_children(node: TreeNode) -> list[TreeNode]:
    return [c for c in node.all_children() if c.has_gia]


# ------------------------------------------------------------ tree address


def tree_address(pres: PcPresentation, tree: Tree | None = None) -> TreeAddress:
    """Address of a 2-generator p-group in the tree of C_p x C_p."""
    tree = tree or default_tree()
    st = standardize(pres)
    if st.presentation.rank != 2:
        raise UnknownRoot("only 2-generator groups live in the tree of C_p x C_p")
    node = tree.root
    for s, u0 in st.steps:
        orbits = node.step_orbits(s) if s not in node._children else node._children[s][0]._origin[0]
        c = int(np.searchsorted(orbits.reps, u0))
        assert orbits.reps[c] == u0
        node = node.child(s, c + 1)
    assert node.pres.key() == st.presentation.key()
    return node.address


# ------------------------------------------------------------- labels data


_DATA = Path(__file__).with_name("data")


def normalize_label(text: str) -> str:
    t = text.strip().replace("<", "⟨").replace(">", "⟩").replace(" ", "")
    if re.fullmatch(r"\d+,\d+", t):
        t = f"⟨{t}⟩"
    return t


def curated_labels() -> dict[str, str]:
    """SmallGroups labels -> tree addresses (curated, validated in tests)."""
    with open(_DATA / "labels.json", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {normalize_label(k): v["address"] for k, v in raw["labels"].items() if "address" in v}


def curated_label_records() -> dict[str, dict]:
    with open(_DATA / "labels.json", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {normalize_label(k): v for k, v in raw["labels"].items()}


def label_for_address(addr: "TreeAddress | str") -> str | None:
    """Curated label of an address; ambiguous pairs come back as ⟨n,i|j⟩."""
    key = str(TreeAddress.parse(addr) if isinstance(addr, str) else addr)
    for lab, rec in curated_label_records().items():
        for a in rec.get("addresses", [rec.get("address")]):
            if a and str(TreeAddress.parse(a)) == key:
                return lab
    return None


# ------------------------------------------------------------- fingerprints


def fingerprint(node_or_pres, with_children: bool = True) -> dict:
    """Isomorphism invariants used to match catalog entries."""
    from .artin import artin_pattern
    node = node_or_pres if isinstance(node_or_pres, TreeNode) else None
    pres = node.pres if node else node_or_pres
    out = {"order": pres.p ** pres.n, "p": pres.p, "lo": pres.n}
    if pres.n == 0:
        out.update({"cl": 0, "cc": 0, "dl": 0, "abelian": True, "ati": "0"})
        return out
    terms = lower_central_terms(pres)
    cl = len(terms) - 1
    out.update({"cl": cl, "cc": pres.n - cl, "dl": derived_length(pres), "abelian": cl <= 1})
    out["ati"] = str(abelian_type_invariants(pres))
    if pres.p == 3 and len(linalg.normalized_projective_points(2, 3)) and _rank2(pres):
        ap = artin_pattern(pres)
        out["tkt"] = "".join(map(str, ap.kappa.canonical_form))
        out["tkt_name"] = ap.kappa.name
        out["ttt"] = sorted(str(t) for t in ap.tau)
        out["epsilon"] = ap.epsilon
    cov = p_cover(pres)
    out["nu"], out["mu"] = cov.nu, cov.mu
    if node is not None:
        out["sigma"] = node.has_gia
        out["schur_sigma"] = bool(node.has_gia and cov.mu == pres.rank)
        if with_children and cov.nu:
            out["children"] = [list(t) for t in node.descendant_counts()]
    return out


def _rank2(pres) -> bool:
    from .structure import generator_rank
    return generator_rank(pres) == 2


def fingerprint_key(fp: dict) -> str:
    return json.dumps(fp, sort_keys=True, ensure_ascii=False)


# ------------------------------------------------------------ catalog store


CATALOG_ENV = "PGROUPLAB_CATALOG"


class CatalogStore:
    """Directory of presentation files plus an append-only JSON-lines index."""

    def __init__(self, root: str | os.PathLike | None = None):
        root = root or os.environ.get(CATALOG_ENV) or Path.home() / ".cache" / "pgrouplab"
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.jsonl"

    def _records(self):
        if not self.index_path.exists():
            return []
        with open(self.index_path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def put(self, address: "TreeAddress | str", pres: PcPresentation, fp: dict | None = None) -> dict:
        import hashlib
        text = format_presentation(pres)
        digest = hashlib.sha256(text.encode()).hexdigest()[:16]
        path = self.root / f"{digest}.pc"
        if not path.exists():
            path.write_text(text, encoding="utf-8")
        rec = {"address": str(address), "file": path.name,
               "fingerprint": fp, "fingerprint_hash": hashlib.sha256(
                   fingerprint_key(fp).encode()).hexdigest()[:16] if fp is not None else None}
        with open(self.index_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        return rec

    def get(self, address: "TreeAddress | str") -> PcPresentation | None:
        key = str(address)
        for rec in reversed(self._records()):
            if rec["address"] == key:
                return parse_presentation((self.root / rec["file"]).read_text(encoding="utf-8"))
        return None

    def by_fingerprint(self, fp: dict) -> list[str]:
        key = fingerprint_key(fp)
        return sorted({r["address"] for r in self._records()
                       if r["fingerprint"] is not None and fingerprint_key(r["fingerprint"]) == key})

    def list(self) -> list[str]:
        return sorted({r["address"] for r in self._records()})


def fingerprint_match(pres: PcPresentation, tree: Tree | None = None) -> list[str]:
    """Curated labels of the group (exact: via its tree address)."""
    tree = tree or default_tree()
    if pres.n == 0 or _rank_safe(pres) != 2:
        return []
    addr = tree_address(pres, tree)
    labs = {lab for lab, a in tree.labels.items() if str(TreeAddress.parse(a)) == str(addr)}
    curated = label_for_address(addr)
    if curated:
        labs.add(curated)
    return sorted(labs)


def _rank_safe(pres):
    from .structure import generator_rank
    return generator_rank(pres)


# ----------------------------------------------------------------- census


@dataclass
class CensusRecord:
    order: str
    tkt: str
    count: int
    addresses: list

    def to_json(self) -> dict:
        return {"order": self.order, "tkt": self.tkt, "count": self.count, "addresses": self.addresses}


def _tkt_label(pres) -> str:
    from .artin import tkt
    t = tkt(pres)
    return t.name or "".join(map(str, t.canonical_form))


DEFAULT_TREE_BUDGET = 11


def _census_children(node: TreeNode, max_lo: int, purged: bool) -> list[TreeNode]:
    out = []
    if not node.capable or node.lo >= max_lo:
        return out
    for s in range(1, min(node.nu, max_lo - node.lo) + 1):
        for c in node.children(s):
            if abelian_type_invariants(c.pres).parts != (1, 1):
                continue
            if purged and c.capable and not c.has_gia:
                continue
            out.append(c)
    return out


def iterate_tree(max_lo: int, tree: Tree | None = None, purged: bool = False, progress=None,
                 start: TreeNode | None = None):
    """Breadth-first walk over the nodes with abelianization of rank 2 and
    exponent p (the tree of C_p x C_p restricted to G/G' = C_p x C_p).

    ``purged`` drops capable vertices without a GIA: a GIA of a descendant
    induces one on each ancestor, so no sigma-group is lost."""
    tree = tree or default_tree()
    queue = deque([start or tree.root])
    seen = 0
    while queue:
        node = queue.popleft()
        yield node
        seen += 1
        if progress:
            progress(seen, node)
        queue.extend(_census_children(node, max_lo, purged))


def _is_schur_sigma_node(node: TreeNode) -> bool:
    return node.pres.n >= 2 and node.mu == node.pres.rank and node.has_gia


def _census_hits(nodes, tkt_filter) -> dict:
    found: dict[tuple, list] = {}
    for node in nodes:
        if not _is_schur_sigma_node(node):
            continue
        name = _tkt_label(node.pres)
        if tkt_filter and name != tkt_filter:
            continue
        found.setdefault((node.lo, name), []).append(str(node.address))
    return found


def _census_worker(args):
    addr, max_lo, purged, tkt_filter = args
    tree = Tree()
    return _census_hits(iterate_tree(max_lo, tree, purged, start=tree.resolve(addr)), tkt_filter)


def schur_census(max_lo: int = 8, tkt_filter: str | None = None, purged: bool = False,
                 tree: Tree | None = None, progress=None, jobs: int = 1,
                 budget: int | None = DEFAULT_TREE_BUDGET) -> list[CensusRecord]:
    """Schur sigma-groups (GIA and mu = d) up to order p^max_lo.

    With ``jobs > 1`` the walk is split into subtrees handled by worker
    processes; counters do not depend on scheduling, so the result is the
    same."""
    if budget is not None and max_lo > budget:
        raise BudgetExceeded(f"census to p^{max_lo} exceeds the budget p^{budget}")
    tree = tree or default_tree()
    if jobs <= 1:
        found = _census_hits(iterate_tree(max_lo, tree, purged, progress), tkt_filter)
    else:
        local, frontier = [], deque([tree.root])
        while frontier and len(frontier) < 4 * jobs:
            node = frontier.popleft()
            local.append(node)
            frontier.extend(_census_children(node, max_lo, purged))
        found = _census_hits(local, tkt_filter)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tasks = [(str(n.address), max_lo, purged, tkt_filter) for n in frontier]
            for i, part in enumerate(pool.map(_census_worker, tasks)):
                if progress:
                    progress(len(local) + i + 1, frontier[i])
                for key, addrs in part.items():
                    found.setdefault(key, []).extend(addrs)
    out = []
    for (lo, name), addrs in sorted(found.items()):
        out.append(CensusRecord(f"{tree.root.pres.p}^{lo}", name, len(addrs), sorted(addrs, key=_address_key)))
    return out


def _address_key(addr: str):
    return TreeAddress.parse(addr).steps


# ----------------------------------------------------------------- export


def export_tree(nodes: list[TreeNode], fmt: str = "json") -> str:
    """JSON (nodes and edges) or DOT (box = terminal, filled = GIA)."""
    ids = {str(n.address): i for i, n in enumerate(nodes)}
    edges = [(ids[str(n.parent.address)], ids[str(n.address)], n.step) for n in nodes
             if n.parent is not None and str(n.parent.address) in ids]
    if fmt == "json":
        out = {"nodes": [{"id": ids[str(n.address)], "address": str(n.address), "lo": n.lo,
                          "nu": n.nu, "mu": n.mu, "gia": n.has_gia,
                          "label": label_for_address(n.address)} for n in nodes],
               "edges": [{"from": a, "to": b, "step": s} for a, b, s in edges]}
        return json.dumps(out, indent=1, ensure_ascii=False)
    if fmt != "dot":
        raise ValueError(f"unknown export format {fmt!r}")
    lines = ["digraph tree {", "  rankdir=TB;"]
    for n in nodes:
        shape = "box" if n.nu == 0 else "circle"
        style = "filled" if n.has_gia else "solid"
        lab = label_for_address(n.address) or str(n.address)
        lines.append(f'  n{ids[str(n.address)]} [label="{lab}", shape={shape}, style={style}];')
    for a, b, s in edges:
        lines.append(f'  n{a} -> n{b} [label="{s}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
