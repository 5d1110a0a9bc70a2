"""Hot loops: collection in pc-presentations, automorphism images and
subspace arithmetic over F_p.

Every function here is written in the numba subset and decorated with
``jit``; with PGROUPLAB_NO_JIT=1 they run as ordinary Python on numpy arrays.

A presentation is passed around as the tuple of arrays
``(pw, cm, nz, free, pwkind)`` together with the prime ``p``:

* ``pw[i]``     exponent vector of g_i^p
* ``cm[j, i]``  exponent vector of [g_j, g_i] for j > i
* ``nz[j, i]``  True iff ``cm[j, i]`` is nontrivial
* ``free[j]``   g_j is central with trivial power (added, never collected)
* ``pwkind[i]`` 0 trivial power, 1 power supported on free generators, 2 general
"""
import numpy as np

from ._jit import jit


@jit
def _grow(stack, sp, need):
    if sp + need <= stack.shape[0]:
        return stack
    cap = stack.shape[0] * 2
    while cap < sp + need:
        cap *= 2
    bigger = np.empty((cap, 2), np.int64)
    bigger[:sp] = stack[:sp]
    return bigger


@jit
def _push_vec(e, v, stack, sp, free, p):
    # queue the normal word v so that its lowest generator is popped first
    n = v.shape[0]
    for l in range(n - 1, -1, -1):
        x = v[l]
        if x != 0:
            if free[l]:
                e[l] = (e[l] + x) % p
            else:
                stack[sp, 0] = l
                stack[sp, 1] = x
                sp += 1
    return sp


@jit
def _run(e, stack, sp, pw, cm, nz, free, pwkind, p):
    """Collection from the left: multiply e by the letters on the stack."""
    n = e.shape[0]
    while sp > 0:
        sp -= 1
        k = stack[sp, 0]
        m = stack[sp, 1]
        if free[k]:
            e[k] = (e[k] + m) % p
            continue
        clash = False
        for j in range(k + 1, n):
            if e[j] != 0 and nz[j, k]:
                clash = True
                break
        if not clash:
            t = e[k] + m
            if t < p:
                e[k] = t
                continue
            e[k] = t - p
            kind = pwkind[k]
            if kind == 0:
                continue
            if kind == 1:
                for l in range(k + 1, n):
                    if pw[k, l] != 0:
                        e[l] = (e[l] + pw[k, l]) % p
                continue
            stack = _grow(stack, sp, 2 * n)
            for j in range(n - 1, k, -1):
                x = e[j]
                if x != 0 and not free[j]:
                    stack[sp, 0] = j
                    stack[sp, 1] = x
                    sp += 1
                    e[j] = 0
            sp = _push_vec(e, pw[k], stack, sp, free, p)
            continue
        # g_k does not commute with the collected tail: conjugate the tail
        stack = _grow(stack, sp, 1 + (p - 1) * (n - k) * (n - k) + n)
        if m > 1:
            stack[sp, 0] = k
            stack[sp, 1] = m - 1
            sp += 1
        for j in range(n - 1, k, -1):
            x = e[j]
            if x == 0 or free[j]:
                continue
            e[j] = 0
            if not nz[j, k]:
                stack[sp, 0] = j
                stack[sp, 1] = x
                sp += 1
                continue
            for _ in range(x):
                for l in range(n - 1, j, -1):
                    y = cm[j, k, l]
                    if y != 0:
                        if free[l]:
                            e[l] = (e[l] + y) % p
                        else:
                            stack[sp, 0] = l
                            stack[sp, 1] = y
                            sp += 1
                stack[sp, 0] = j
                stack[sp, 1] = 1
                sp += 1
        t = e[k] + 1
        if t < p:
            e[k] = t
        else:
            e[k] = 0
            sp = _push_vec(e, pw[k], stack, sp, free, p)
    return stack


@jit
def mul(a, b, pw, cm, nz, free, pwkind, p):
    e = a.copy()
    stack = np.empty((64 + 4 * a.shape[0], 2), np.int64)
    sp = _push_vec(e, b, stack, 0, free, p)
    _run(e, stack, sp, pw, cm, nz, free, pwkind, p)
    return e


@jit
def mul_letter(a, k, m, pw, cm, nz, free, pwkind, p):
    e = a.copy()
    stack = np.empty((64 + 4 * a.shape[0], 2), np.int64)
    stack[0, 0] = k
    stack[0, 1] = m
    _run(e, stack, 1, pw, cm, nz, free, pwkind, p)
    return e


@jit
def collect_word(n, gens, exps, pw, cm, nz, free, pwkind, p):
    """Normal form of g_{gens[0]}^{exps[0]} ... with 0 <= exps < p."""
    e = np.zeros(n, np.int64)
    stack = np.empty((64 + 4 * n + gens.shape[0], 2), np.int64)
    sp = 0
    for t in range(gens.shape[0] - 1, -1, -1):
        if exps[t] != 0:
            stack[sp, 0] = gens[t]
            stack[sp, 1] = exps[t]
            sp += 1
    _run(e, stack, sp, pw, cm, nz, free, pwkind, p)
    return e


@jit
def inverse(a, pw, cm, nz, free, pwkind, p):
    n = a.shape[0]
    r = a.copy()
    x = np.zeros(n, np.int64)
    stack = np.empty((64 + 4 * n, 2), np.int64)
    for k in range(n):
        c = r[k]
        if c == 0:
            continue
        m = p - c
        if free[k]:
            r[k] = 0
            x[k] = (x[k] + m) % p
            continue
        stack[0, 0] = k
        stack[0, 1] = m
        stack = _run(r, stack, 1, pw, cm, nz, free, pwkind, p)
        stack[0, 0] = k
        stack[0, 1] = m
        stack = _run(x, stack, 1, pw, cm, nz, free, pwkind, p)
    return x


@jit
def power(a, k, pw, cm, nz, free, pwkind, p):
    n = a.shape[0]
    result = np.zeros(n, np.int64)
    if k < 0:
        base = inverse(a, pw, cm, nz, free, pwkind, p)
        k = -k
    else:
        base = a.copy()
    while k > 0:
        if k & 1:
            result = mul(result, base, pw, cm, nz, free, pwkind, p)
        k >>= 1
        if k > 0:
            base = mul(base, base, pw, cm, nz, free, pwkind, p)
    return result


@jit
def commutator(a, b, pw, cm, nz, free, pwkind, p):
    # [a, b] = (b a)^-1 (a b)
    ba = mul(b, a, pw, cm, nz, free, pwkind, p)
    ab = mul(a, b, pw, cm, nz, free, pwkind, p)
    return mul(inverse(ba, pw, cm, nz, free, pwkind, p), ab, pw, cm, nz, free, pwkind, p)


@jit
def apply_images(img, x, pw, cm, nz, free, pwkind, p):
    """prod_k img[k]^x[k] collected in the target presentation."""
    m = img.shape[1]
    e = np.zeros(m, np.int64)
    total = 0
    for k in range(x.shape[0]):
        if x[k] != 0:
            for l in range(m):
                if img[k, l] != 0:
                    total += x[k]
    stack = np.empty((64 + 2 * total, 2), np.int64)
    sp = 0
    for k in range(x.shape[0] - 1, -1, -1):
        for _ in range(x[k]):
            for l in range(m - 1, -1, -1):
                y = img[k, l]
                if y != 0:
                    stack[sp, 0] = l
                    stack[sp, 1] = y
                    sp += 1
    _run(e, stack, sp, pw, cm, nz, free, pwkind, p)
    return e


@jit
def compose(a_img, b_img, pw, cm, nz, free, pwkind, p):
    """Image table of a after b: g -> a(b(g))."""
    out = np.empty((b_img.shape[0], a_img.shape[1]), np.int64)
    for k in range(b_img.shape[0]):
        out[k] = apply_images(a_img, b_img[k], pw, cm, nz, free, pwkind, p)
    return out


@jit
def extend_by_definitions(img, d, dkind, da, db, pw, cm, nz, free, pwkind, p):
    """Fill rows d.. of img from rows 0..d-1 using the definitions
    (dkind 0: g_k = g_a^p, dkind 1: g_k = [g_a, g_b])."""
    for k in range(d, img.shape[0]):
        if dkind[k] == 0:
            img[k] = power(img[da[k]], p, pw, cm, nz, free, pwkind, p)
        else:
            img[k] = commutator(img[da[k]], img[db[k]], pw, cm, nz, free, pwkind, p)
    return img


@jit
def consistency_pairs(tests, pw, cm, nz, free, pwkind, p):
    """Evaluate the overlap test words; tests rows are (kind, a, b, c).

    Returns an array (ntests, 2, n) holding both collected sides."""
    n = pw.shape[0]
    out = np.zeros((tests.shape[0], 2, n), np.int64)
    for t in range(tests.shape[0]):
        kind = tests[t, 0]
        k = tests[t, 1]
        j = tests[t, 2]
        i = tests[t, 3]
        if kind == 0:
            # (g_k g_j) g_i = g_k (g_j g_i)
            gk = np.zeros(n, np.int64)
            gk[k] = 1
            left = mul_letter(mul_letter(gk, j, 1, pw, cm, nz, free, pwkind, p), i, 1, pw, cm, nz, free, pwkind, p)
            gj = np.zeros(n, np.int64)
            gj[j] = 1
            right = mul(gk, mul_letter(gj, i, 1, pw, cm, nz, free, pwkind, p), pw, cm, nz, free, pwkind, p)
        elif kind == 1:
            # (g_j^p) g_i = g_j^(p-1) (g_j g_i)
            left = mul_letter(pw[j], i, 1, pw, cm, nz, free, pwkind, p)
            gj = np.zeros(n, np.int64)
            gj[j] = 1
            head = np.zeros(n, np.int64)
            head[j] = p - 1
            right = mul(head, mul_letter(gj, i, 1, pw, cm, nz, free, pwkind, p), pw, cm, nz, free, pwkind, p)
        elif kind == 2:
            # (g_j g_i^(p-1)) g_i = g_j (g_i^p)
            gj = np.zeros(n, np.int64)
            gj[j] = 1
            left = mul_letter(mul_letter(gj, i, p - 1, pw, cm, nz, free, pwkind, p), i, 1, pw, cm, nz, free, pwkind, p)
            right = mul(gj, pw[i], pw, cm, nz, free, pwkind, p)
        else:
            # (g_i^p) g_i = g_i (g_i^p)
            left = mul_letter(pw[i], i, 1, pw, cm, nz, free, pwkind, p)
            gi = np.zeros(n, np.int64)
            gi[i] = 1
            right = mul(gi, pw[i], pw, cm, nz, free, pwkind, p)
        out[t, 0] = left
        out[t, 1] = right
    return out


# ---------------------------------------------------------------- F_p algebra


@jit
def inv_mod(a, p):
    a %= p
    r = 1
    e = p - 2
    while e > 0:
        if e & 1:
            r = (r * a) % p
        a = (a * a) % p
        e >>= 1
    return r


@jit
def rref_inplace(A, p):
    """Reduced row echelon form mod p in place; returns the rank."""
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = -1
        for i in range(r, rows):
            if A[i, c] % p != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for t in range(cols):
                tmp = A[r, t]
                A[r, t] = A[piv, t]
                A[piv, t] = tmp
        s = inv_mod(A[r, c], p)
        for t in range(cols):
            A[r, t] = (A[r, t] * s) % p
        for i in range(rows):
            if i != r:
                f = A[i, c] % p
                if f != 0:
                    for t in range(cols):
                        A[i, t] = (A[i, t] - f * A[r, t]) % p
        r += 1
    for i in range(r, rows):
        for t in range(cols):
            A[i, t] = 0
    return r


@jit
def matmul_mod(A, B, p):
    out = np.zeros((A.shape[0], B.shape[1]), np.int64)
    for i in range(A.shape[0]):
        for k in range(A.shape[1]):
            a = A[i, k]
            if a != 0:
                for j in range(B.shape[1]):
                    out[i, j] += a * B[k, j]
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            out[i, j] %= p
    return out


# ------------------------------------------------- allowable subspace indexing
#
# An allowable subspace U of M = F_p^mu (columns: mu-nu non-nucleus, then nu
# nucleus) with codimension s has RREF
#     [ I | A ]        (mu-nu rows, A zero on the pivot columns of W)
#     [ 0 | W ]        (nu-s rows, W in RREF inside the nucleus)
# It is indexed by  offset[W pivots] + digits(W free entries), times p^(k*s),
# plus digits(A), where k = mu - nu.


@jit
def subspace_index(U, k, nu, s, p, comb_rank, comb_offset):
    r = nu - s
    mask = 0
    pivots = np.empty(r, np.int64)
    for i in range(r):
        row = k + i
        c = k
        while U[row, c] == 0:
            c += 1
        pivots[i] = c - k
        mask |= 1 << (c - k)
    widx = 0
    for i in range(r):
        for c in range(pivots[i] + 1, nu):
            if (mask >> c) & 1:
                continue
            widx = widx * p + U[k + i, k + c]
    widx += comb_offset[comb_rank[mask]]
    aidx = 0
    for i in range(k):
        for c in range(nu):
            if (mask >> c) & 1:
                continue
            aidx = aidx * p + U[i, k + c]
    return widx * p ** (k * s) + aidx


@jit
def subspace_decode(idx, k, nu, s, p, combos, comb_offset, free_counts):
    mu = k + nu
    r = nu - s
    U = np.zeros((k + r, mu), np.int64)
    span_a = p ** (k * s)
    widx = idx // span_a
    aidx = idx - widx * span_a
    # locate the pivot combination
    ci = 0
    while ci + 1 < comb_offset.shape[0] and comb_offset[ci + 1] <= widx:
        ci += 1
    widx -= comb_offset[ci]
    mask = 0
    for i in range(r):
        mask |= 1 << combos[ci, i]
    nfree = free_counts[ci]
    digits = np.empty(nfree, np.int64)
    for t in range(nfree - 1, -1, -1):
        digits[t] = widx % p
        widx //= p
    t = 0
    for i in range(r):
        c0 = combos[ci, i]
        U[k + i, k + c0] = 1
        for c in range(c0 + 1, nu):
            if (mask >> c) & 1:
                continue
            U[k + i, k + c] = digits[t]
            t += 1
    adig = np.empty(k * s, np.int64)
    for t in range(k * s - 1, -1, -1):
        adig[t] = aidx % p
        aidx //= p
    t = 0
    for i in range(k):
        U[i, i] = 1
        for c in range(nu):
            if (mask >> c) & 1:
                continue
            U[i, k + c] = adig[t]
            t += 1
    return U


@jit
def act_on_subspaces(mats, total, k, nu, s, p, combos, comb_rank, comb_offset, free_counts):
    """images[g, i] = index of mats[g] applied to allowable subspace i.

    mats[g] acts on column vectors, so rows u of U map to u mats[g]^T."""
    ng = mats.shape[0]
    mu = k + nu
    images = np.empty((ng, total), np.int64)
    for i in range(total):
        U = subspace_decode(i, k, nu, s, p, combos, comb_offset, free_counts)
        for g in range(ng):
            V = matmul_mod(U, mats[g].T.copy(), p)
            rref_inplace(V, p)
            images[g, i] = subspace_index(V, k, nu, s, p, comb_rank, comb_offset)
    return images


@jit
def union_find_orbits(images):
    ng, total = images.shape
    parent = np.arange(total)
    for g in range(ng):
        for i in range(total):
            a = i
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            b = images[g, i]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                if a < b:
                    parent[b] = a
                else:
                    parent[a] = b
    for i in range(total):
        a = i
        while parent[a] != a:
            a = parent[a]
        parent[i] = a
    return parent


@jit
def bfs_forest(images, reps):
    """Breadth-first spanning forest of the orbit graph rooted at reps.

    pred[v] = -1 for roots, pgen[v] = generator used to reach v."""
    ng, total = images.shape
    pred = np.full(total, -2, np.int64)
    pgen = np.full(total, -1, np.int64)
    order = np.empty(total, np.int64)
    tail = 0
    for r in reps:
        pred[r] = -1
        order[tail] = r
        tail += 1
    head = 0
    while head < tail:
        u = order[head]
        head += 1
        for g in range(ng):
            v = images[g, u]
            if pred[v] == -2:
                pred[v] = u
                pgen[v] = g
                order[tail] = v
                tail += 1
    return pred, pgen, order[:tail]


@jit
def act_on_list(mats, idxs, k, nu, s, p, combos, comb_rank, comb_offset, free_counts):
    """Images of the given subspace indices under each matrix."""
    ng = mats.shape[0]
    out = np.empty((ng, idxs.shape[0]), np.int64)
    for t in range(idxs.shape[0]):
        U = subspace_decode(idxs[t], k, nu, s, p, combos, comb_offset, free_counts)
        for g in range(ng):
            V = matmul_mod(U, mats[g].T.copy(), p)
            rref_inplace(V, p)
            out[g, t] = subspace_index(V, k, nu, s, p, comb_rank, comb_offset)
    return out
