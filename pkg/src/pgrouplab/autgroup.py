"""Automorphism groups of p-groups with standard presentations.

An automorphism is stored as the table of images of all pc-generators.  A
group of automorphisms is held as its image in GL_d(p) (enumerated, with a
lift for every matrix) together with the kernel of that projection, which is
a p-group filtered by the weight layers: an automorphism acting trivially on
G/P_{l-1} is recorded by the weight-l components of g_j^-1 a(g_j) over the
defining generators g_j.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from . import linalg
from .pc import PcPresentation, relation_violations


class BudgetExceeded(RuntimeError):
    pass


DEFAULT_FULL_BUDGET = 7
DEFAULT_GIA_BUDGET = 9
# budget defaults are looked up at call time so a config file can change them
_DEFAULT = "default"


def _resolve_budget(budget, gia: bool) -> int | None:
    if budget == _DEFAULT:
        return DEFAULT_GIA_BUDGET if gia else DEFAULT_FULL_BUDGET
    return budget


class Automorphism:
    __slots__ = ("pres", "img", "_inv", "_mat")

    def __init__(self, pres: PcPresentation, img):
        self.pres = pres
        self.img = np.ascontiguousarray(img, dtype=np.int64)
        self._inv = None
        self._mat = None

    @classmethod
    def identity(cls, pres: PcPresentation) -> "Automorphism":
        return cls(pres, np.eye(pres.n, dtype=np.int64))

    @classmethod
    def from_defining_images(cls, pres: PcPresentation, images) -> "Automorphism":
        d, kind, da, db = pres.definition_arrays()
        img = np.zeros((pres.n, pres.n), np.int64)
        img[:d] = np.asarray(images, np.int64).reshape(d, pres.n)
        K.extend_by_definitions(img, d, kind, da, db, *pres.arrays)
        return cls(pres, img)

    def __call__(self, x) -> np.ndarray:
        return self.pres.apply(self.img, x)

    def __mul__(self, other: "Automorphism") -> "Automorphism":
        """self after other."""
        return Automorphism(self.pres, K.compose(self.img, other.img, *self.pres.arrays))

    def __pow__(self, k: int) -> "Automorphism":
        if k < 0:
            return self.inverse() ** (-k)
        out = Automorphism.identity(self.pres)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def __eq__(self, other):
        return isinstance(other, Automorphism) and np.array_equal(self.img, other.img)

    def __hash__(self):
        return hash(self.img.tobytes())

    def is_identity(self) -> bool:
        return np.array_equal(self.img, np.eye(self.pres.n, dtype=np.int64))

    @property
    def matrix(self) -> np.ndarray:
        """Action on G/Phi(G) (column j = image of the j-th defining generator)."""
        if self._mat is None:
            d = self.pres.rank
            self._mat = self.img[:d, :d].T.copy()
        return self._mat

    def inverse(self) -> "Automorphism":
        if self._inv is None:
            pres = self.pres
            layers = _layers(pres)
            d = pres.rank
            solved = [solve_layered(pres, pres, self.img, layers, layers, pres.gen(j)) for j in range(d)]
            inv = Automorphism.from_defining_images(pres, solved)
            inv._inv = self
            self._inv = inv
        return self._inv


def _layers(pres: PcPresentation) -> list[list[int]]:
    if "layers" not in pres._cache:
        c = pres.pclass
        pres._cache["layers"] = [[k for k in range(pres.n) if pres.weights[k] == w] for w in range(1, c + 1)]
    return pres._cache["layers"]


def solve_layered(src: PcPresentation, dst: PcPresentation, img, src_layers, dst_coords, y) -> np.ndarray:
    """Find x in src with prod img[k]^x_k = y in dst, for a map that
    respects the layer filtrations.

    ``dst_coords`` is either a list of index lists (standard target: layer
    coordinates are exponents) or a callable (w, element) -> coordinates."""
    p = src.p
    x = src.identity()
    for w, idx in enumerate(src_layers):
        if not idx:
            continue
        r = dst.mul(dst.inv(dst.apply(img, x)), y)
        if callable(dst_coords):
            rw = dst_coords(w, r)
            L = np.array([dst_coords(w, img[k]) for k in idx], np.int64)
        else:
            rw = r[dst_coords[w]]
            L = img[np.ix_(idx, dst_coords[w])]
        z = linalg.solve(L.T, rw, p)
        if z is None:
            raise ValueError("map is not invertible on a layer")
        step = src.identity()
        step[idx] = z
        x = src.mul(x, step)
    if not np.array_equal(dst.apply(img, x), np.asarray(y) % p):
        raise ValueError("layered solve failed")
    return x


def layer_vector(a: Automorphism):
    """(layer index l >= 2, vector) of a kernel automorphism; None if identity."""
    pres = a.pres
    d = pres.rank
    layers = _layers(pres)
    diffs = []
    for j in range(d):
        g = pres.gen(j)
        gi = g.copy()
        gi = pres.inv(g)
        diffs.append(pres.mul(gi, a.img[j]))
    for w in range(1, len(layers)):
        idx = layers[w]
        v = np.concatenate([z[idx] for z in diffs])
        if v.any():
            return w, v
    return None


def _matkey(A) -> bytes:
    return np.ascontiguousarray(A, np.int64).tobytes()


class AutGroup:
    """Subgroup of Aut(G) with an order-certifying structure."""

    def __init__(self, pres: PcPresentation):
        self.pres = pres
        self.p = pres.p
        self.d = pres.rank
        ident = Automorphism.identity(pres)
        self.top = {_matkey(np.eye(self.d, dtype=np.int64)): (np.eye(self.d, dtype=np.int64), ident)}
        self.top_gens: list[Automorphism] = []
        self.layers: dict[int, list] = {}
        self.kernel_size = 0

    # -- data
    @property
    def order(self) -> int:
        return len(self.top) * self.p ** self.kernel_size

    @property
    def generators(self) -> list[Automorphism]:
        out = list(self.top_gens)
        for w in sorted(self.layers):
            out += [b for _, _, b in self.layers[w]]
        return out

    @property
    def frattini_action(self) -> list[np.ndarray]:
        return [m for m, _ in self.top.values()]

    def has_matrix(self, A) -> bool:
        return _matkey(np.asarray(A) % self.p) in self.top

    # -- building
    def add(self, a: Automorphism, target: int | None = None) -> bool:
        """Add a generator; returns True if the group grew."""
        if target is not None and self.order >= target:
            return False
        before = self.order
        key = _matkey(a.matrix)
        queue: list[Automorphism] = []
        if key not in self.top:
            self._extend_top(a, queue)
        else:
            queue.append(self.top[key][1].inverse() * a)
        self._process(queue, target)
        return self.order > before

    def _extend_top(self, a: Automorphism, queue: list):
        self.top_gens.append(a)
        frontier = list(self.top.values())
        while frontier:
            nxt = []
            for m, lift in frontier:
                for g in self.top_gens:
                    A = linalg.matmul(g.matrix, m, self.p)
                    k = _matkey(A)
                    if k not in self.top:
                        self.top[k] = (A, g * lift)
                        nxt.append(self.top[k])
            frontier = nxt
        # Schreier generators of the top and conjugates of the kernel basis
        for m, lift in self.top.values():
            for g in self.top_gens:
                A = linalg.matmul(g.matrix, m, self.p)
                other = self.top[_matkey(A)][1]
                s = other.inverse() * (g * lift)
                if not s.is_identity():
                    queue.append(s)
        for w in self.layers:
            for _, _, b in self.layers[w]:
                queue.append(a.inverse() * b * a)

    def _process(self, queue: list, target: int | None):
        p = self.p
        while queue:
            if target is not None and self.order >= target:
                return
            a = queue.pop()
            res = self._sift(a)
            if res is None:
                continue
            w, piv, vec, b = res
            basis = self.layers.setdefault(w, [])
            basis.append((piv, vec, b))
            basis.sort(key=lambda t: t[0])
            self.kernel_size += 1
            queue.append(b ** p)
            for w2 in self.layers:
                for _, _, c in self.layers[w2]:
                    if c is not b:
                        queue.append(b.inverse() * c.inverse() * b * c)
            for g in self.top_gens:
                queue.append(g.inverse() * b * g)

    def _sift(self, a: Automorphism):
        p = self.p
        while True:
            lv = layer_vector(a)
            if lv is None:
                return None
            w, v = lv
            for piv, vec, b in self.layers.get(w, []):
                c = int(v[piv])
                if c:
                    a = a * b ** (p - c)
                    v = (v + (p - c) * vec) % p
            if v.any():
                piv = int(np.flatnonzero(v)[0])
                k = pow(int(v[piv]), p - 2, p)
                if k != 1:
                    a = a ** k
                    v = (v * k) % p
                return w, piv, v, a

    def contains(self, a: Automorphism) -> bool:
        key = _matkey(a.matrix)
        if key not in self.top:
            return False
        return self._sift(self.top[key][1].inverse() * a) is None

    def random_element(self, rng) -> Automorphism:
        mats = list(self.top.values())
        out = mats[rng.integers(len(mats))][1]
        for w in sorted(self.layers):
            for _, _, b in self.layers[w]:
                e = int(rng.integers(self.p))
                if e:
                    out = out * b ** e
        return out

    def elements(self):
        """Iterate over all elements (small groups only)."""
        kern = [b for w in sorted(self.layers) for _, _, b in self.layers[w]]
        for _, lift in self.top.values():
            for exps in itertools.product(range(self.p), repeat=len(kern)):
                a = lift
                for b, e in zip(kern, exps):
                    if e:
                        a = a * b ** e
                yield a


AutomorphismSet = AutGroup


def gl_group(pres: PcPresentation) -> AutGroup:
    """Aut of an elementary abelian group: GL_d(p)."""
    A = AutGroup(pres)
    for M in linalg.general_linear_generators(pres.n, pres.p):
        A.add(Automorphism(pres, M.T.copy()))
    assert A.order == linalg.gl_order(pres.n, pres.p)
    return A


def central_automorphisms(child: PcPresentation, first_new: int) -> list[Automorphism]:
    """g_i -> g_i z for defining g_i and z a generator of index >= first_new."""
    d = child.rank
    out = []
    for i in range(d):
        for f in range(first_new, child.n):
            imgs = np.zeros((d, child.n), np.int64)
            for j in range(d):
                imgs[j, j] = 1
            imgs[i, f] = 1
            out.append(Automorphism.from_defining_images(child, imgs))
    return out


# ---------------------------------------------------------- cover action


def lift_to_cover(a: Automorphism, data) -> np.ndarray:
    """Images of the first n cover generators under a lift of a."""
    base, cov = data.base, data.cover
    n = base.n
    d, kind, da, db = base.definition_arrays()
    img = np.zeros((n, cov.n), np.int64)
    img[:d, :n] = a.img[:d]
    K.extend_by_definitions(img, d, kind, da, db, *cov.arrays)
    return img


def multiplicator_action(a: Automorphism, data, lifted=None) -> np.ndarray:
    """Matrix (mu x mu, acting on column vectors) of a on the multiplicator."""
    base, cov = data.base, data.cover
    n, p = base.n, base.p
    img = lift_to_cover(a, data) if lifted is None else lifted
    full = np.zeros((cov.n, cov.n), np.int64)
    full[:n] = img
    A = np.zeros((data.mu, data.mu), np.int64)
    for b, rel in enumerate(data.relations):
        if rel[0] == "pow":
            lhs = cov.pow(img[rel[1]], p)
            rhs = base.pw[rel[1]]
        else:
            lhs = cov.comm(img[rel[1]], img[rel[2]])
            rhs = base.cm[rel[1], rel[2]]
        rhs_full = np.zeros(cov.n, np.int64)
        rhs_full[:n] = rhs
        val = cov.mul(cov.inv(cov.apply(full, rhs_full)), lhs)
        assert not val[:n].any(), "multiplicator image left the multiplicator"
        A[:, b] = val[n:]
    return A


def child_automorphism(a: Automorphism, data, S: np.ndarray, child: PcPresentation,
                       lifted=None, action=None) -> Automorphism:
    """Automorphism of G*/U induced by a lift of a (a must stabilise U)."""
    n, p = data.n, data.base.p
    img = lift_to_cover(a, data) if lifted is None else lifted
    A = multiplicator_action(a, data, img) if action is None else action
    s = child.n - n
    # a multiplicator generator mapping onto each new generator
    free = [next(j for j in range(S.shape[1]) if S[f, j] == 1 and not S[:, j].sum() - 1) for f in range(s)]
    out = np.zeros((child.n, child.n), np.int64)
    out[:n, :n] = img[:, :n]
    out[:n, n:] = (img[:, n:] @ S.T) % p
    for f, col in enumerate(free):
        out[n + f, n:] = (S @ A[:, col]) % p
    return Automorphism(child, out)


# ------------------------------------------------------ exhaustive search


def _candidate_tuples(pres: PcPresentation, prune: bool, matrices=None):
    """Images of the defining generators: all tuples, or Frattini-pruned."""
    n, p, d = pres.n, pres.p, pres.rank
    tails = list(itertools.product(range(p), repeat=n - d))
    if not prune:
        for tup in itertools.product(range(p ** n), repeat=d):
            yield np.array([[(t // p ** (n - 1 - k)) % p for k in range(n)] for t in tup], np.int64)
        return
    if matrices is None:
        matrices = [np.array(m, np.int64).reshape(d, d)
                    for m in itertools.product(range(p), repeat=d * d)]
        matrices = [m for m in matrices if linalg.rank(m, p) == d]
    for M in matrices:
        for rest in itertools.product(tails, repeat=d):
            imgs = np.zeros((d, n), np.int64)
            for j in range(d):
                imgs[j, :d] = M[:, j]
                imgs[j, d:] = rest[j]
            yield imgs


def enumerate_automorphisms(pres: PcPresentation, prune: bool = True, budget: int | None | str = _DEFAULT,
                            matrices=None) -> list[Automorphism]:
    """All automorphisms by testing candidate generator images.

    Unpruned search tries every tuple of elements and keeps the bijective
    homomorphisms; pruned search only tries tuples whose Frattini images are
    invertible (or lie in ``matrices``)."""
    _check_budget(pres, _resolve_budget(budget, False))
    from .structure import subgroup
    d = pres.rank
    dk, kind, da, db = pres.definition_arrays()
    out = []
    for imgs in _candidate_tuples(pres, prune, matrices):
        full = np.zeros((pres.n, pres.n), np.int64)
        full[:d] = imgs
        K.extend_by_definitions(full, d, kind, da, db, *pres.arrays)
        if relation_violations(pres, pres, full):
            continue
        if not prune and subgroup(pres, list(imgs)).lo != pres.n:
            continue
        out.append(Automorphism(pres, full))
    return out


def automorphism_count_bruteforce(pres: PcPresentation) -> int:
    """Count automorphisms by checking every map of the pc-generators
    (no definitions used): the homomorphism test runs over all relations."""
    from .structure import subgroup
    from .pc import iter_elements
    n = pres.n
    elems = list(iter_elements(pres))
    count = 0
    for tup in itertools.product(range(len(elems)), repeat=n):
        img = np.array([elems[t] for t in tup], np.int64)
        if relation_violations(pres, pres, img):
            continue
        if subgroup(pres, list(img)).lo == n:
            count += 1
    return count


# ---------------------------------------------------------------- sigma


@dataclass
class SigmaReport:
    is_sigma: bool
    witness: Automorphism | None = None
    is_schur_sigma: bool = False
    order_aut: int | None = None

    def to_json(self) -> dict:
        out = {"is_sigma": self.is_sigma, "is_schur_sigma": self.is_schur_sigma}
        if self.order_aut is not None:
            out["order_aut"] = self.order_aut
        return out


def gia_witness(A: AutGroup) -> Automorphism | None:
    minus = (-np.eye(A.d, dtype=np.int64)) % A.p
    hit = A.top.get(_matkey(minus))
    return None if hit is None else hit[1]


def gia_search(pres: PcPresentation, budget: int | None | str = _DEFAULT) -> Automorphism | None:
    """Exhaustive search restricted to the Frattini action -I."""
    d, p = pres.rank, pres.p
    minus = (-np.eye(d, dtype=np.int64)) % p
    found = enumerate_automorphisms(pres, prune=True, budget=_resolve_budget(budget, True), matrices=[minus])
    return found[0] if found else None


# ------------------------------------------------------------ public entry


def _check_budget(pres: PcPresentation, budget: int | None):
    if budget is not None and pres.n > budget:
        raise BudgetExceeded(f"order p^{pres.n} exceeds budget p^{budget}")


def automorphisms(pres: PcPresentation, budget: int | None | str = _DEFAULT,
                  method: str = "lift") -> AutGroup:
    """Aut(G) as an AutGroup.

    ``method="lift"`` walks up the tree from C_p x C_p and lifts stabilizers
    (fast, any d); ``method="enumerate"`` runs the Frattini-pruned search over
    generator images and is the independent check used in tests."""
    _check_budget(pres, _resolve_budget(budget, False))
    if method == "enumerate":
        found = enumerate_automorphisms(pres, prune=True, budget=None)
        A = AutGroup(pres)
        for a in found:
            A.add(a, len(found))
        assert A.order == len(found)
        return A
    if method != "lift":
        raise ValueError(f"unknown method {method!r}")
    if pres.n == 0:
        return AutGroup(pres)
    from .genealogy import automorphism_group
    return automorphism_group(pres)


def _inversion(pres: PcPresentation) -> Automorphism:
    return Automorphism(pres, np.array([pres.inv(pres.gen(k)) for k in range(pres.n)], np.int64))


def has_gia(pres: PcPresentation, budget: int | None | str = _DEFAULT, method: str = "lift") -> SigmaReport:
    """Is there an automorphism acting as -1 on G/Phi(G)?  (Equivalently on
    G/G' for the 2-generated groups of the tree, whose abelianization has
    exponent p.)  ``method="search"`` restricts the image search to -I."""
    _check_budget(pres, _resolve_budget(budget, True))
    from .structure import is_abelian
    if is_abelian(pres):
        return SigmaReport(True, _inversion(pres))
    if method == "search":
        w = gia_search(pres, budget=None)
        return SigmaReport(w is not None, w)
    A = automorphisms(pres, budget=None)
    w = gia_witness(A)
    return SigmaReport(w is not None, w, order_aut=A.order)


def is_schur_sigma(pres: PcPresentation, budget: int | None | str = _DEFAULT, method: str = "lift") -> SigmaReport:
    from .pcover import p_cover
    rep = has_gia(pres, budget, method)
    balanced = pres.n == 0 or p_cover(pres).mu == pres.rank
    rep.is_schur_sigma = rep.is_sigma and balanced
    return rep
