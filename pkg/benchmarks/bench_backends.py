"""Time the hot kernels with numba and with the plain Python fallback.

    python3 benchmarks/bench_backends.py            # both backends, side by side
    python3 benchmarks/bench_backends.py --single   # current backend only (JSON)

Each backend runs in its own interpreter because PGROUPLAB_NO_JIT is read at
import time.  The numba column excludes compilation (one warm-up call).
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _timeit(fn, repeat=3):
    fn()                                   # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def workloads():
    from pgrouplab import kernels as K
    from pgrouplab.genealogy import Tree, default_tree
    from pgrouplab.pc import check_consistency

    tree = default_tree()
    big = tree.resolve("<6561,606>").pres
    deep = tree.resolve("C3xC3-#1;1-#2;6-#1;2-#2;1-#1;2-#2;1").pres
    rng = np.random.default_rng(1)
    pairs = rng.integers(0, 3, (2000, 2, big.n))

    def collect_pairs():
        for a, b in pairs:
            K.mul(a, b, *big.arrays)

    def consistency():
        check_consistency(deep, filtered=False)

    def orbits_27_3():
        t = Tree()
        node = t.resolve("<27,3>")
        for s in (1, 2):
            node.children(s)

    def census_lo6():
        t = Tree()
        from pgrouplab.genealogy import iterate_tree
        for _ in iterate_tree(6, t, purged=False):
            pass

    return {"collect 2000 products at 3^8": collect_pairs,
            "full consistency check at 3^11": consistency,
            "children of <27,3>": orbits_27_3,
            "tree walk to 3^6": census_lo6}


def run_single():
    from pgrouplab import backend
    out = {"backend": backend()}
    for name, fn in workloads().items():
        out[name] = _timeit(fn)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--single", action="store_true")
    args = ap.parse_args()
    if args.single:
        print(json.dumps(run_single()))
        return
    rows = {}
    for flag in ("0", "1"):
        env = dict(os.environ, PGROUPLAB_NO_JIT=flag)
        res = subprocess.run([sys.executable, __file__, "--single"], env=env, check=True,
                             capture_output=True, text=True)
        data = json.loads(res.stdout.strip().splitlines()[-1])
        rows[data.pop("backend")] = data
    jit, py = rows["numba"], rows["python"]
    print(f"{'workload':34s} {'numba [s]':>10s} {'python [s]':>11s} {'speedup':>8s}")
    for name in jit:
        print(f"{name:34s} {jit[name]:10.4f} {py[name]:11.4f} {py[name] / jit[name]:8.1f}x")


if __name__ == "__main__":
    main()
