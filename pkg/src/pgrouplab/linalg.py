"""Linear algebra over F_p and over the integers."""
from __future__ import annotations

import itertools

import numpy as np

from . import kernels as K


def rref(A, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form (nonzero rows only) and pivot columns."""
    M = np.array(A, dtype=np.int64) % p
    if M.ndim != 2 or M.shape[0] == 0:
        return M.reshape(0, M.shape[-1] if M.ndim == 2 else 0), []
    r = K.rref_inplace(M, p)
    M = M[:r]
    pivots = [int(np.nonzero(row)[0][0]) for row in M]
    return M, pivots


def rank(A, p: int) -> int:
    return len(rref(A, p)[1])


def nullspace(A, p: int) -> np.ndarray:
    """Basis (rows) of {x : A x = 0}."""
    A = np.asarray(A, np.int64)
    cols = A.shape[1]
    R, piv = rref(A, p)
    free = [c for c in range(cols) if c not in piv]
    out = np.zeros((len(free), cols), np.int64)
    for t, f in enumerate(free):
        out[t, f] = 1
        for i, c in enumerate(piv):
            out[t, c] = (-R[i, f]) % p
    return out


def solve(A, b, p: int):
    """One solution x of A x = b, or None."""
    A = np.asarray(A, np.int64)
    aug = np.concatenate([A, np.asarray(b, np.int64).reshape(-1, 1)], axis=1)
    R, piv = rref(aug, p)
    if A.shape[1] in piv:
        return None
    x = np.zeros(A.shape[1], np.int64)
    for i, c in enumerate(piv):
        x[c] = R[i, -1]
    return x


def inverse_mod(A, p: int) -> np.ndarray:
    A = np.asarray(A, np.int64)
    n = A.shape[0]
    aug = np.concatenate([A % p, np.eye(n, dtype=np.int64)], axis=1)
    K.rref_inplace(aug, p)
    if not np.array_equal(aug[:, :n], np.eye(n, dtype=np.int64)):
        raise ValueError("matrix is singular mod p")
    return aug[:, n:].copy()


def matmul(A, B, p: int) -> np.ndarray:
    return K.matmul_mod(np.ascontiguousarray(A, np.int64), np.ascontiguousarray(B, np.int64), p)


def general_linear_generators(d: int, p: int) -> list[np.ndarray]:
    """Generators of GL_d(p): a primitive-root scaling and the standard
    transvection/cycle pair (column convention)."""
    if d == 0:
        return []
    g = next(a for a in range(1, p) if all(pow(a, (p - 1) // q, p) != 1 for q in _prime_factors(p - 1))) \
        if p > 2 else 1
    D = np.eye(d, dtype=np.int64)
    D[0, 0] = g
    gens = [D] if p > 2 else []
    if d == 1:
        return gens or [np.eye(1, dtype=np.int64)]
    T = np.eye(d, dtype=np.int64)
    T[0, 1] = 1
    C = np.zeros((d, d), np.int64)
    for i in range(d):
        C[(i + 1) % d, i] = 1
    if d % 2 == 0:
        C[0, d - 1] = p - 1 if p > 2 else 1
    return gens + [T, C % p]


def _prime_factors(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def gl_order(d: int, p: int) -> int:
    out = 1
    for i in range(d):
        out *= p ** d - p ** i
    return out


def gaussian_binomial(n: int, k: int, p: int) -> int:
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= p ** (n - i) - 1
        den *= p ** (i + 1) - 1
    return num // den


def normalized_projective_points(d: int, p: int) -> list[tuple[int, ...]]:
    """Nonzero vectors of F_p^d with first nonzero entry 1, lexicographic."""
    pts = [v for v in itertools.product(range(p), repeat=d) if any(v)]
    return [v for v in pts if v[next(i for i, x in enumerate(v) if x)] == 1]


def smith_diagonal(A) -> list[int]:
    """Nonzero invariant factors of an integer matrix (exact integers)."""
    M = [[int(x) for x in row] for row in np.asarray(A, dtype=object).tolist()]
    if not M or not M[0]:
        return []
    rows, cols = len(M), len(M[0])
    diag = []
    t = 0
    while t < min(rows, cols):
        # pivot: smallest nonzero absolute value in the remaining block
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                if M[i][j] and (best is None or abs(M[i][j]) < abs(M[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        i, j = best
        M[t], M[i] = M[i], M[t]
        for row in M:
            row[t], row[j] = row[j], row[t]
        done = False
        while not done:
            done = True
            piv = M[t][t]
            for i in range(t + 1, rows):
                q = M[i][t] // piv
                if q:
                    M[i] = [a - q * b for a, b in zip(M[i], M[t])]
                if M[i][t]:
                    done = False
            for j in range(t + 1, cols):
                q = M[t][j] // piv
                if q:
                    for row in M:
                        row[j] -= q * row[t]
                if M[t][j]:
                    done = False
            if not done:
                # move the smallest remainder into the pivot position
                cand = [(abs(M[i][t]), i, t) for i in range(t + 1, rows) if M[i][t]]
                cand += [(abs(M[t][j]), t, j) for j in range(t + 1, cols) if M[t][j]]
                _, i, j = min(cand)
                if j == t:
                    M[t], M[i] = M[i], M[t]
                else:
                    for row in M:
                        row[t], row[j] = row[j], row[t]
                continue
            # divisibility: the pivot must divide every remaining entry
            bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols)
                        if M[i][j] % piv), None)
            if bad is not None:
                M[t] = [a + b for a, b in zip(M[t], M[bad[0]])]
                done = False
        diag.append(abs(M[t][t]))
        t += 1
    return diag
