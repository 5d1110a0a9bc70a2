"""Command-line entry point.

Exit codes: 0 success, 1 verification mismatch, 2 unreadable presentation or
address, 3 inconsistent presentation, 4 budget exceeded.  Results go to
stdout (tab-separated tables or JSON); progress and notes go to stderr.
"""
from __future__ import annotations

import json
import os
import sys
import time

import click

from . import autgroup
from .artin import artin_pattern, ipad2, tkt, topology_symbol
from .autgroup import BudgetExceeded
from .genealogy import (DEFAULT_TREE_BUDGET, AbelianInput, CounterOutOfRange, StepExceedsNucleus, TreeNode,
                        UnknownRoot, default_tree, export_tree, fingerprint, format_counts, is_extremal_path,
                        label_for_address, root_path, schur_census, tree_address)
from .pc import ParseError, PcPresentation, check_consistency, read_presentation
from .verify import EXTENDED_TABLES, TABLES, verify_table

EXIT_MISMATCH, EXIT_PARSE, EXIT_INCONSISTENT, EXIT_BUDGET = 1, 2, 3, 4


def _fail(msg: str, code: int):
    click.echo(msg, err=True)
    sys.exit(code)


def _note(msg: str):
    click.echo(msg, err=True)


def _load_config(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if "full_budget" in cfg:
        autgroup.DEFAULT_FULL_BUDGET = int(cfg["full_budget"])
    if "gia_budget" in cfg:
        autgroup.DEFAULT_GIA_BUDGET = int(cfg["gia_budget"])
    return cfg


def _read_file(path: str) -> PcPresentation:
    try:
        pres = read_presentation(path)
    except ParseError as exc:
        _fail(f"parse error: {exc}", EXIT_PARSE)
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}", EXIT_PARSE)
    rep = check_consistency(pres, filtered=False)
    if not rep:
        _fail("inconsistent presentation; failing test words:\n" + "\n".join(f"  {w}" for w in rep.failures),
              EXIT_INCONSISTENT)
    return pres


def _resolve(addr: str) -> TreeNode:
    try:
        return default_tree().resolve(addr)
    except (ValueError, UnknownRoot, CounterOutOfRange, StepExceedsNucleus) as exc:
        _fail(f"bad address {addr!r}: {exc}", EXIT_PARSE)


def _target(target: str):
    """(presentation, tree node or None) for a file path or an address."""
    if os.path.exists(target):
        pres = _read_file(target)
        return pres, _node_of(pres)
    node = _resolve(target)
    return node.pres, node


def _node_of(pres: PcPresentation) -> TreeNode | None:
    if pres.p != 3 or pres.n < 2 or pres.rank != 2:
        return None
    try:
        return default_tree().resolve(tree_address(pres))
    except UnknownRoot:
        return None


def _vertex_name(node: TreeNode | None) -> str:
    if node is None:
        return "-"
    return label_for_address(node.address) or str(node.address)


def _tkt_name(pres) -> str:
    if pres.p != 3 or pres.rank != 2:
        return "-"
    t = tkt(pres)
    return t.name or "".join(map(str, t.canonical_form))


def _ancestor(k: int) -> str:
    return "G" if k == 0 else ("π(G)" if k == 1 else f"π^{k}(G)")


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except BudgetExceeded as exc:
            _fail(f"budget exceeded: {exc}", EXIT_BUDGET)


@click.group(cls=_Group)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="JSON file with budget overrides.")
@click.version_option(package_name="artifact")
def main(config):
    """Finite p-group laboratory."""
    _load_config(config)


@main.command()
@click.argument("file", type=click.Path(dir_okay=False))
@click.option("--children/--no-children", default=False, help="Include descendant counts (can be slow).")
def identify(file, children):
    """Fingerprint of a presentation file and its curated label."""
    pres = _read_file(file)
    node = _node_of(pres)
    fp = fingerprint(node if node is not None else pres, with_children=children)
    out = {"fingerprint": fp, "address": str(node.address) if node else None,
           "label": label_for_address(node.address) if node else None}
    click.echo(json.dumps(out, ensure_ascii=False))


@main.command()
@click.argument("target")
def pattern(target):
    """Artin pattern and second-order IPAD of a file or address."""
    pres, _ = _target(target)
    if pres.p != 3 or pres.rank != 2:
        _fail("Artin patterns need a 2-generator 3-group", EXIT_PARSE)
    ap = artin_pattern(pres)
    out = ap.to_json()
    out["text"] = str(ap)
    out["ipad2"] = str(ipad2(pres))
    click.echo(json.dumps(out, ensure_ascii=False))


@main.command("root-path")
@click.argument("target")
@click.option("--check-extremal", is_flag=True, help="Report whether every step equals the parent's nuclear rank.")
@click.option("--topology", is_flag=True, help="Print the topology symbol of the path.")
@click.option("--fork-with", metavar="ADDRESS", help="Second leaf for a fork topology symbol.")
def root_path_cmd(target, check_extremal, topology, fork_with):
    """Root path table: ancestor, vertex, lo, (nu,mu), counts, TKT."""
    pres, node = _target(target)
    rp = root_path(pres)
    click.echo("ancestor\tvertex\tlo\tnu_mu\tcounts\ttkt")
    if pres.n == 0 or _is_abelian(pres):
        _note("note: abelian group, the root path is empty")
        return
    verts = list(reversed(rp.vertices))
    for i, v in enumerate(verts):
        vnode = node if i == len(verts) - 1 and node is not None else _node_of(v)
        if vnode is not None:
            nu, mu = vnode.nu, vnode.mu
            counts = format_counts(vnode.descendant_counts()) if nu else ""
        else:
            from .pcover import p_cover
            cov = p_cover(v)
            nu, mu, counts = cov.nu, cov.mu, ""
        click.echo(f"{_ancestor(len(verts) - 1 - i)}\t{_vertex_name(vnode)}\t{v.n}\t({nu},{mu})\t{counts}\t{_tkt_name(v)}")
    if check_extremal:
        rep = is_extremal_path(pres)
        steps = ",".join(str(s) for s, _ in reversed(rep.edges))
        click.echo(f"extremal\t{'true' if rep else 'false'}\ts=({steps})")
    if topology:
        if fork_with:
            if node is None:
                _fail("fork symbols need tree vertices", EXIT_PARSE)
            click.echo(f"topology\t{topology_symbol(node, _resolve(fork_with))}")
        else:
            click.echo(f"topology\t{topology_symbol(node if node is not None else rp)}")


def _is_abelian(pres) -> bool:
    from .structure import is_abelian
    return is_abelian(pres)


@main.command()
@click.argument("address")
@click.option("--step", type=int, default=None, help="Only children of this step size.")
@click.option("--purged", is_flag=True, help="Keep only children with a GIA.")
@click.option("--export", "fmt", type=click.Choice(["dot", "json"]), default=None)
def descendants(address, step, purged, fmt):
    """Immediate descendants of a tree vertex."""
    node = _resolve(address)
    try:
        kids = node.children(step) if step else node.all_children()
    except StepExceedsNucleus as exc:
        _fail(str(exc), EXIT_PARSE)
    if purged:
        kids = [c for c in kids if c.has_gia]
    if fmt:
        click.echo(export_tree([node] + kids, fmt))
        return
    click.echo("address\tlabel\tlo\tnu_mu\tgia\ttkt")
    for c in kids:
        click.echo(f"{c.address}\t{label_for_address(c.address) or '-'}\t{c.lo}\t({c.nu},{c.mu})\t"
                   f"{'yes' if c.has_gia else 'no'}\t{_tkt_name(c.pres)}")


def _progress_printer(every: int = 100):
    t0 = time.perf_counter()

    def show(k, node):
        if k % every == 0:
            click.echo(f"[{time.perf_counter() - t0:7.1f}s] {k} vertices, at {node.address}", err=True)
    return show


@main.command()
@click.option("--max-lo", type=int, default=8, show_default=True)
@click.option("--tkt", "tkt_name", default=None, help="Only this TKT name.")
@click.option("--purged/--full", default=True, show_default=True,
              help="Skip capable vertices without a GIA (loses no sigma-group).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("--budget", type=int, default=DEFAULT_TREE_BUDGET, show_default=True, help="Largest allowed max-lo.")
def census(max_lo, tkt_name, purged, jobs, budget):
    """Schur sigma-groups up to order 3^max-lo, grouped by order and TKT."""
    try:
        recs = schur_census(max_lo, tkt_name, purged, progress=_progress_printer(), jobs=jobs, budget=budget)
    except BudgetExceeded as exc:
        _fail(str(exc), EXIT_BUDGET)
    totals: dict[str, int] = {}
    for r in recs:
        totals[r.order] = totals.get(r.order, 0) + r.count
    click.echo(json.dumps({"records": [r.to_json() for r in recs], "totals": totals}, ensure_ascii=False))


@main.command()
@click.option("--table", "tables", multiple=True, required=True,
              type=click.Choice(list(TABLES + EXTENDED_TABLES) + ["all"]),
              help="Table name; 'all' runs every table except the extended ones.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes for the census tables.")
def verify(tables, jobs):
    """Compare computed values with the embedded expected tables."""
    names = list(TABLES) if "all" in tables else list(tables)
    ok = True
    for name in names:
        _note(f"verifying {name}")
        res = verify_table(name, jobs=jobs, progress=lambda r: _note(f"  {'ok  ' if r.passed else 'FAIL'} {r.claim} "
                                                         f"({r.runtime:.2f}s)"))
        for rec in res.records:
            click.echo(json.dumps(rec.to_json(), ensure_ascii=False))
        for rec in res.failures():
            _note(f"--- {rec.claim} [{rec.source}]\n-   expected: {rec.expected}\n+   computed: {rec.computed}")
        ok &= res.passed
    sys.exit(0 if ok else EXIT_MISMATCH)


if __name__ == "__main__":   # pragma: no cover
    main()
