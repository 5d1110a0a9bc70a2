"""Weighted power-commutator presentations of finite p-groups.

Generators are indexed from 0 internally and from 1 in the text format and in
user-facing words.  Every generator has relative order p.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels as K


class PresentationError(ValueError):
    pass


class ParseError(PresentationError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class RelationViolated(ValueError):
    def __init__(self, relations: list[str]):
        super().__init__("relations violated: " + ", ".join(relations))
        self.relations = relations


class PcPresentation:
    """Immutable pc-presentation.

    ``pw[i]`` is the exponent vector of g_i^p and ``cm[j, i]`` (j > i) the
    exponent vector of [g_j, g_i].
    """

    def __init__(self, p: int, weights: Sequence[int], pw, cm, label: str | None = None):
        n = len(weights)
        pw = np.array(pw, dtype=np.int64).reshape(n, n) % p if n else np.zeros((0, 0), np.int64)
        cm = np.array(cm, dtype=np.int64).reshape(n, n, n) % p if n else np.zeros((0, 0, 0), np.int64)
        for i in range(n):
            if pw[i, : i + 1].any():
                raise PresentationError(f"power relation of g{i + 1} not supported on later generators")
        for j in range(n):
            for i in range(n):
                if i >= j and cm[j, i].any():
                    raise PresentationError(f"commutator entry ({j + 1},{i + 1}) must have j > i")
                if i < j and cm[j, i, : j + 1].any():
                    raise PresentationError(
                        f"relation [g{j + 1},g{i + 1}] not supported on generators after g{j + 1}")
        self.p = int(p)
        self.n = n
        self.weights = tuple(int(w) for w in weights)
        self.pw = pw
        self.cm = cm
        self.label = label
        pw.setflags(write=False)
        cm.setflags(write=False)
        nz = cm.any(axis=2) if n else np.zeros((0, 0), bool)
        free = np.array(
            [not pw[j].any() and not cm[j].any() and not cm[:, j].any() for j in range(n)], dtype=np.bool_)
        pwkind = np.zeros(n, np.int64)
        for i in range(n):
            if pw[i].any():
                pwkind[i] = 1 if all(free[l] for l in np.nonzero(pw[i])[0]) else 2
        self._arrays = (pw, cm, np.ascontiguousarray(nz), free, pwkind, self.p)
        self._defs = None
        self._cache: dict = {}

    # -- basic data
    @property
    def order(self) -> int:
        return self.p ** self.n

    @property
    def lo(self) -> int:
        return self.n

    @property
    def arrays(self):
        return self._arrays

    def identity(self) -> np.ndarray:
        return np.zeros(self.n, np.int64)

    def gen(self, i: int) -> np.ndarray:
        e = np.zeros(self.n, np.int64)
        e[i] = 1
        return e

    def key(self) -> tuple:
        """Hashable identity of the relations (label ignored)."""
        return (self.p, self.weights, self.pw.tobytes(), self.cm.tobytes())

    def __eq__(self, other):
        return isinstance(other, PcPresentation) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        tag = f" {self.label}" if self.label else ""
        return f"<PcPresentation p={self.p} n={self.n}{tag}>"

    def relabeled(self, label: str | None) -> "PcPresentation":
        out = PcPresentation(self.p, self.weights, self.pw, self.cm, label)
        out._defs = self._defs
        return out

    # -- element arithmetic on raw exponent vectors
    def mul(self, a, b):
        return K.mul(np.asarray(a, np.int64), np.asarray(b, np.int64), *self._arrays)

    def inv(self, a):
        return K.inverse(np.asarray(a, np.int64), *self._arrays)

    def pow(self, a, k: int):
        return K.power(np.asarray(a, np.int64), int(k), *self._arrays)

    def comm(self, a, b):
        return K.commutator(np.asarray(a, np.int64), np.asarray(b, np.int64), *self._arrays)

    def apply(self, images, x):
        """prod_k images[k]^x[k] evaluated in this presentation."""
        return K.apply_images(np.asarray(images, np.int64), np.asarray(x, np.int64), *self._arrays)

    # -- structure of the relations
    @property
    def definitions(self) -> list[tuple | None]:
        """Per generator: None (defining), ('pow', j) or ('comm', j, i).

        A generator is defined by the first relation (powers before
        commutators, increasing indices) whose right-hand side is exactly it.
        Raises PresentationError when some non-leading generator has none."""
        if self._defs is None:
            self._defs = _infer_definitions(self)
        if isinstance(self._defs, Exception):
            raise self._defs
        return self._defs

    def has_definitions(self) -> bool:
        try:
            self.definitions
        except PresentationError:
            return False
        return True

    @property
    def rank(self) -> int:
        """Number of defining generators (valid once definitions exist)."""
        return sum(1 for d in self.definitions if d is None)

    def definition_arrays(self):
        """(d, kind, a, b) arrays for kernels.extend_by_definitions."""
        if "defarrays" not in self._cache:
            defs = self.definitions
            d = sum(1 for x in defs if x is None)
            kind = np.zeros(self.n, np.int64)
            da = np.zeros(self.n, np.int64)
            db = np.zeros(self.n, np.int64)
            for k, df in enumerate(defs):
                if df is None:
                    continue
                if df[0] == "pow":
                    kind[k], da[k] = 0, df[1]
                else:
                    kind[k], da[k], db[k] = 1, df[1], df[2]
            self._cache["defarrays"] = (d, kind, da, db)
        return self._cache["defarrays"]

    def is_weight_compatible(self) -> bool:
        """Nondecreasing weights with p-th powers of weight > w_i and
        commutators of weight >= w_i + w_j."""
        w = self.weights
        if any(w[i] > w[i + 1] for i in range(self.n - 1)) or any(x < 1 for x in w):
            return False
        for i in range(self.n):
            for l in np.nonzero(self.pw[i])[0]:
                if w[l] < w[i] + 1:
                    return False
            for j in range(i + 1, self.n):
                for l in np.nonzero(self.cm[j, i])[0]:
                    if w[l] < w[i] + w[j]:
                        return False
        return True

    @property
    def pclass(self) -> int:
        return max(self.weights) if self.n else 0


def _infer_definitions(pres: PcPresentation):
    """First relation (powers, then commutators (j, i) in lexicographic order)
    whose right side is exactly the generator; relations whose weight equals
    the generator's weight are preferred."""
    n, w = pres.n, pres.weights
    defs: list = [None] * n
    found = [False] * n
    rels = [("pow", j) for j in range(n)] + [("comm", j, i) for j in range(n) for i in range(j)]
    for matching in (True, False):
        for rel in rels:
            if rel[0] == "pow":
                v, rw = pres.pw[rel[1]], w[rel[1]] + 1
            else:
                v, rw = pres.cm[rel[1], rel[2]], w[rel[1]] + w[rel[2]]
            nzs = np.nonzero(v)[0]
            if len(nzs) != 1 or v[nzs[0]] != 1 or found[nzs[0]]:
                continue
            if matching and rw != w[nzs[0]]:
                continue
            found[nzs[0]] = True
            defs[nzs[0]] = rel
    d = 0
    while d < n and not found[d]:
        d += 1
    if any(not found[k] for k in range(d, n)):
        return PresentationError("presentation lacks definitions for some generators")
    if any(pres.weights[k] != 1 for k in range(d)) or any(pres.weights[k] == 1 for k in range(d, n)):
        return PresentationError("defining generators must be exactly the weight-1 generators")
    return defs


# ------------------------------------------------------------------ elements


@dataclass(frozen=True, eq=False)
class GroupElement:
    pres: PcPresentation
    exponents: tuple

    @classmethod
    def of(cls, pres: PcPresentation, vec) -> "GroupElement":
        return cls(pres, tuple(int(x) for x in vec))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.exponents, np.int64)

    def is_identity(self) -> bool:
        return not any(self.exponents)

    def _check(self, other):
        if not isinstance(other, GroupElement) or other.pres != self.pres:
            raise PresentationError("elements belong to different presentations")

    def __mul__(self, other):
        return multiply(self.pres, self, other)

    def __pow__(self, k):
        return power(self.pres, self, k)

    def __eq__(self, other):
        return isinstance(other, GroupElement) and self.pres == other.pres and self.exponents == other.exponents

    def __hash__(self):
        return hash(self.exponents)

    def __repr__(self):
        return "(" + ",".join(map(str, self.exponents)) + ")"


Word = Sequence[tuple[int, int]]


def collect(pres: PcPresentation, word: Word) -> GroupElement:
    """Normal form of a word given as (generator 1..n, integer exponent) pairs."""
    gens, exps = [], []
    result = pres.identity()
    for g, e in word:
        if not 1 <= g <= pres.n:
            raise IndexError(f"generator index {g} out of range 1..{pres.n}")
        e = int(e)
        if 0 <= e < pres.p:
            gens.append(g - 1)
            exps.append(e)
            continue
        if gens:
            result = pres.mul(result, K.collect_word(pres.n, np.array(gens, np.int64),
                                                     np.array(exps, np.int64), *pres.arrays))
            gens, exps = [], []
        result = pres.mul(result, pres.pow(pres.gen(g - 1), e))
    if gens:
        result = pres.mul(result, K.collect_word(pres.n, np.array(gens, np.int64),
                                                 np.array(exps, np.int64), *pres.arrays))
    return GroupElement.of(pres, result)


def element(pres: PcPresentation, exponents) -> GroupElement:
    v = np.asarray(exponents, np.int64)
    if v.shape != (pres.n,) or (v < 0).any() or (v >= pres.p).any():
        raise PresentationError("exponent vector must have n residues in [0, p)")
    return GroupElement.of(pres, v)


def multiply(pres: PcPresentation, a: GroupElement, b: GroupElement) -> GroupElement:
    a._check(b)
    if a.pres != pres:
        raise PresentationError("elements belong to different presentations")
    return GroupElement.of(pres, pres.mul(a.vector, b.vector))


def inverse(pres: PcPresentation, a: GroupElement) -> GroupElement:
    if a.pres != pres:
        raise PresentationError("element belongs to a different presentation")
    return GroupElement.of(pres, pres.inv(a.vector))


def power(pres: PcPresentation, a: GroupElement, k: int) -> GroupElement:
    if a.pres != pres:
        raise PresentationError("element belongs to a different presentation")
    return GroupElement.of(pres, pres.pow(a.vector, k))


def commutator(pres: PcPresentation, a: GroupElement, b: GroupElement) -> GroupElement:
    a._check(b)
    if a.pres != pres:
        raise PresentationError("elements belong to different presentations")
    return GroupElement.of(pres, pres.comm(a.vector, b.vector))


# --------------------------------------------------------------- consistency


@dataclass
class ConsistencyReport:
    consistent: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.consistent


def consistency_tests(pres: PcPresentation, filtered: bool | None = None) -> np.ndarray:
    """Rows (kind, k, j, i) of overlap test words.

    With ``filtered`` (default: when the presentation is weight-compatible)
    only overlaps whose total weight is at most the class are kept."""
    n, w = pres.n, pres.weights
    if filtered is None:
        filtered = pres.is_weight_compatible()
    c = pres.pclass
    rows = []
    for k in range(n):
        for j in range(k):
            for i in range(j):
                if not filtered or w[k] + w[j] + w[i] <= c:
                    rows.append((0, k, j, i))
    for j in range(n):
        for i in range(j):
            if not filtered or w[j] + 1 + w[i] <= c:
                rows.append((1, 0, j, i))
            if not filtered or w[j] + w[i] + 1 <= c:
                rows.append((2, 0, j, i))
    for i in range(n):
        if not filtered or 2 * w[i] + 1 <= c:
            rows.append((3, 0, 0, i))
    return np.array(rows, dtype=np.int64).reshape(-1, 4)


def describe_test(row) -> str:
    kind, k, j, i = (int(x) for x in row)
    if kind == 0:
        return f"(g{k + 1} g{j + 1}) g{i + 1}"
    if kind == 1:
        return f"g{j + 1}^p g{i + 1}"
    if kind == 2:
        return f"g{j + 1} g{i + 1}^p"
    return f"g{i + 1}^p g{i + 1}"


def check_consistency(pres: PcPresentation, filtered: bool | None = None) -> ConsistencyReport:
    tests = consistency_tests(pres, filtered)
    if len(tests) == 0:
        return ConsistencyReport(True)
    sides = K.consistency_pairs(tests, *pres.arrays)
    bad = np.nonzero((sides[:, 0] != sides[:, 1]).any(axis=1))[0]
    return ConsistencyReport(len(bad) == 0, [describe_test(tests[t]) for t in bad])


# -------------------------------------------------------------- homomorphisms


class Homomorphism:
    """Map between pc-presented groups given by images of all pc-generators."""

    def __init__(self, src: PcPresentation, dst: PcPresentation, images: np.ndarray):
        self.src = src
        self.dst = dst
        self.images = np.asarray(images, np.int64)

    def __call__(self, x):
        vec = x.vector if isinstance(x, GroupElement) else np.asarray(x, np.int64)
        out = self.dst.apply(self.images, vec)
        return GroupElement.of(self.dst, out) if isinstance(x, GroupElement) else out


def relation_violations(src: PcPresentation, dst: PcPresentation, images: np.ndarray) -> list[str]:
    bad = []
    for j in range(src.n):
        if not np.array_equal(dst.pow(images[j], src.p), dst.apply(images, src.pw[j])):
            bad.append(f"g{j + 1}^p")
        for i in range(j):
            if not np.array_equal(dst.comm(images[j], images[i]), dst.apply(images, src.cm[j, i])):
                bad.append(f"[g{j + 1},g{i + 1}]")
    return bad


def evaluate_map(src: PcPresentation, dst: PcPresentation, images) -> Homomorphism:
    if len(images) != src.n:
        raise PresentationError("need one image per pc-generator of the source")
    imgs = np.array([x.vector if isinstance(x, GroupElement) else np.asarray(x, np.int64) for x in images],
                    dtype=np.int64).reshape(src.n, dst.n)
    bad = relation_violations(src, dst, imgs)
    if bad:
        raise RelationViolated(bad)
    return Homomorphism(src, dst, imgs)


# ---------------------------------------------------------------------- I/O


def format_presentation(pres: PcPresentation) -> str:
    lines = [f"p {pres.p}", f"n {pres.n}"]
    lines += [f"w {i + 1} {w}" for i, w in enumerate(pres.weights)]
    for i in range(pres.n):
        if pres.pw[i].any():
            lines.append(f"pow {i + 1} : " + " ".join(map(str, pres.pw[i])))
    for j in range(pres.n):
        for i in range(j):
            if pres.cm[j, i].any():
                lines.append(f"comm {j + 1} {i + 1} : " + " ".join(map(str, pres.cm[j, i])))
    if pres.label:
        lines.append(f"label {pres.label}")
    return "\n".join(lines) + "\n"


def _ints(tokens, lineno, col0):
    out = []
    for t, col in tokens:
        try:
            out.append(int(t))
        except ValueError:
            raise ParseError(f"expected an integer, got {t!r}", lineno, col) from None
    return out


def parse_presentation(text: str) -> PcPresentation:
    p = n = None
    weights: dict[int, int] = {}
    pows: dict[int, list[int]] = {}
    comms: dict[tuple[int, int], list[int]] = {}
    label = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        toks = []
        pos = 0
        for part in line.split():
            pos = line.index(part, pos)
            toks.append((part, pos + 1))
            pos += len(part)
        head = toks[0][0]
        if head == "label":
            label = line[line.index("label") + 5:].strip()
            continue
        if head in ("p", "n"):
            if len(toks) != 2:
                raise ParseError(f"'{head}' takes one value", lineno, toks[0][1])
            (val,) = _ints(toks[1:], lineno, 0)
            if head == "p":
                if val < 2 or any(val % q == 0 for q in range(2, int(val ** 0.5) + 1)):
                    raise ParseError(f"{val} is not prime", lineno, toks[1][1])
                p = val
            else:
                if val < 0:
                    raise ParseError("negative generator count", lineno, toks[1][1])
                n = val
            continue
        if p is None or n is None:
            raise ParseError("'p' and 'n' must precede relations", lineno, toks[0][1])

        def gen_index(tok):
            (g,) = _ints([tok], lineno, 0)
            if not 1 <= g <= n:
                raise ParseError(f"generator index {g} out of range 1..{n}", lineno, tok[1])
            return g

        if head == "w":
            if len(toks) != 3:
                raise ParseError("expected 'w <i> <weight>'", lineno, toks[0][1])
            g = gen_index(toks[1])
            (wt,) = _ints(toks[2:], lineno, 0)
            if wt < 1:
                raise ParseError("weights must be positive", lineno, toks[2][1])
            weights[g] = wt
            continue
        if head in ("pow", "comm"):
            try:
                colon = [t for t, _ in toks].index(":")
            except ValueError:
                raise ParseError("missing ':'", lineno, len(line)) from None
            idx = toks[1:colon]
            vec_toks = toks[colon + 1:]
            if len(vec_toks) != n:
                raise ParseError(f"exponent vector needs {n} entries, got {len(vec_toks)}", lineno,
                                 toks[colon][1])
            vec = _ints(vec_toks, lineno, 0)
            for (t, col), v in zip(vec_toks, vec):
                if not 0 <= v < p:
                    raise ParseError(f"exponent {v} not a residue mod {p}", lineno, col)
            if head == "pow":
                if len(idx) != 1:
                    raise ParseError("expected 'pow <i> : ...'", lineno, toks[0][1])
                pows[gen_index(idx[0])] = vec
            else:
                if len(idx) != 2:
                    raise ParseError("expected 'comm <j> <i> : ...'", lineno, toks[0][1])
                j, i = gen_index(idx[0]), gen_index(idx[1])
                if j <= i:
                    raise ParseError("comm needs j > i", lineno, idx[0][1])
                comms[(j, i)] = vec
            continue
        raise ParseError(f"unknown keyword {head!r}", lineno, toks[0][1])
    if p is None or n is None:
        raise ParseError("missing 'p' or 'n' line", 1)
    pw = np.zeros((n, n), np.int64)
    cm = np.zeros((n, n, n), np.int64)
    for i, v in pows.items():
        if any(v[:i]):
            raise ParseError(f"pow {i}: right-hand side must involve only generators after g{i}", 0)
        pw[i - 1] = v
    for (j, i), v in comms.items():
        if any(v[:j]):
            raise ParseError(f"comm {j} {i}: right-hand side must involve only generators after g{j}", 0)
        cm[j - 1, i - 1] = v
    wts = [weights.get(i + 1, 1) for i in range(n)]
    if any(wts[i] > wts[i + 1] for i in range(n - 1)):
        raise ParseError("inconsistent weight declaration: weights must be nondecreasing", 0)
    for i in range(n):
        for l in np.nonzero(pw[i])[0]:
            if wts[l] < wts[i]:
                raise ParseError(f"inconsistent weight declaration in pow {i + 1}", 0)
        for j in range(i + 1, n):
            for l in np.nonzero(cm[j, i])[0]:
                if wts[l] < max(wts[i], wts[j]):
                    raise ParseError(f"inconsistent weight declaration in comm {j + 1} {i + 1}", 0)
    return PcPresentation(p, wts, pw, cm, label)


def read_presentation(path) -> PcPresentation:
    with open(path) as fh:
        return parse_presentation(fh.read())


def elementary_abelian(p: int, d: int, label: str | None = None) -> PcPresentation:
    return PcPresentation(p, [1] * d, np.zeros((d, d)), np.zeros((d, d, d)), label)


def from_relations(p: int, weights: Sequence[int], pows: dict | None = None, comms: dict | None = None,
                   label: str | None = None) -> PcPresentation:
    """Build from sparse relations with 1-based indices:
    pows {i: {k: e}}, comms {(j, i): {k: e}}."""
    n = len(weights)
    pw = np.zeros((n, n), np.int64)
    cm = np.zeros((n, n, n), np.int64)
    for i, rhs in (pows or {}).items():
        for k, e in rhs.items():
            pw[i - 1, k - 1] = e
    for (j, i), rhs in (comms or {}).items():
        for k, e in rhs.items():
            cm[j - 1, i - 1, k - 1] = e
    return PcPresentation(p, weights, pw, cm, label)


def iter_elements(pres: PcPresentation) -> Iterable[np.ndarray]:
    import itertools
    for t in itertools.product(range(pres.p), repeat=pres.n):
        yield np.array(t, np.int64)
