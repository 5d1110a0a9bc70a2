"""Regenerate the presentation fixtures under tests/fixtures."""
from pathlib import Path

import numpy as np

from pgrouplab.genealogy import default_tree
from pgrouplab.pc import PcPresentation, check_consistency, format_presentation

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

HAND = {
    "g27_3.pc": "# Heisenberg group mod 3, exponent 3\np 3\nn 3\nw 3 2\ncomm 2 1 : 0 0 1\nlabel <27,3>\n",
    "g27_4.pc": "# extraspecial of exponent 9\np 3\nn 3\nw 3 2\npow 1 : 0 0 1\ncomm 2 1 : 0 0 1\nlabel <27,4>\n",
    "trivial.pc": "p 3\nn 0\nlabel trivial\n",
}
FROM_TREE = {
    "g243_4.pc": "<243,4>",
    "g243_5.pc": "<243,5>",
    "g2187_64.pc": "<2187,64>",
    "g6561_606.pc": "<6561,606>",
}


def corrupted(pres: PcPresentation, rng, count: int) -> list[PcPresentation]:
    out = []
    while len(out) < count:
        pw, cm = pres.pw.copy(), pres.cm.copy()
        n = pres.n
        if rng.random() < 0.4:
            i = int(rng.integers(0, n - 1))
            k = int(rng.integers(i + 1, n))
            pw[i, k] = (pw[i, k] + 1) % pres.p
        else:
            j = int(rng.integers(1, n))
            i = int(rng.integers(0, j))
            k = int(rng.integers(j + 1, n)) if j + 1 < n else j
            if k == j:
                continue
            cm[j, i, k] = (cm[j, i, k] + 1) % pres.p
        q = PcPresentation(pres.p, pres.weights, pw, cm)
        if not check_consistency(q, filtered=False):
            out.append(q)
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, text in HAND.items():
        (OUT / name).write_text(text)
    tree = default_tree()
    for name, label in FROM_TREE.items():
        pres = tree.resolve(label).pres.relabeled(label)
        (OUT / name).write_text(format_presentation(pres))
    rng = np.random.default_rng(20261015)
    base = [tree.resolve(a).pres for a in ("<81,9>", "<243,5>", "<729,45>")]
    k = 0
    for pres in base:
        for q in corrupted(pres, rng, 4 if k < 8 else 2):
            if k == 10:
                break
            k += 1
            (OUT / f"corrupt_{k:02d}.pc").write_text("# deliberately inconsistent\n" + format_presentation(q))


if __name__ == "__main__":
    main()
